//! Pressure of a locally constant potential on the golden-mean shift, next
//! to the partition-sum brackets that must contain it.

use mfspec::potential::Potential;
use mfspec::pressure::{pressure_bracket, pressure_exact};
use mfspec::sft::Sft;

fn main() -> mfspec::Result<()> {
    let sft = Sft::golden_mean();
    let pot = Potential::locally_constant(&sft, 2, 1, |w| vec![if w == [0, 0] { 0.3 } else { -0.2 }])?;
    let exact = pressure_exact(&sft, &pot)?;
    println!("P exact = {exact:.12}");
    println!("   n          lo          hi");
    for n in [2, 4, 8, 12, 16] {
        let b = pressure_bracket(&sft, &pot, n, u64::MAX)?;
        let mark = if b.lo <= exact && exact <= b.hi { "" } else { "  <- misses" };
        println!("{n:>4}  {:>10.6}  {:>10.6}{mark}", b.lo, b.hi);
    }
    Ok(())
}
