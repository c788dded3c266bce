//! Coding map of a carpet: cylinder images, periodic points and the
//! reparametrized spectrum axis.

use mfspec::geometry::carpet_catalog;
use mfspec::sft::Word;

fn main() -> mfspec::Result<()> {
    let ifs = carpet_catalog("s2")?;
    println!("{} maps in dimension {}, similarity dimension {:.6}", ifs.len(), ifs.dim(), ifs.similarity_dimension());
    for w in ["1", "15", "155", "1555"] {
        let word: Word = w.parse()?;
        let (x, diam) = ifs.coding_map(&word)?;
        println!("[{w}] -> ({:.5}, {:.5}), diameter {diam:.5}", x[0], x[1]);
    }
    let p = ifs.periodic_point(&[0, 1]);
    println!("periodic point of 12: ({:.6}, {:.6})", p[0], p[1]);
    Ok(())
}
