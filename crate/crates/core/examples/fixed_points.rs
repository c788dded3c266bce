//! Fixed points in the asymptotic average on the bundled carpets.
//!
//! `cargo run --example fixed_points -- s2 4 6`

use mfspec::geometry::carpet_catalog;
use mfspec::localized::{fixed_point_set_dimension, FixedSetOptions};

fn main() -> mfspec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("s2", String::as_str);
    let k = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let depth = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);

    let ifs = carpet_catalog(name)?;
    let started = std::time::Instant::now();
    let r = fixed_point_set_dimension(&ifs, k, depth, &FixedSetOptions::default())?;
    println!("carpet {name}, k = {k}, depth = {depth}");
    println!("  sup over J       {:.10}  at {:?} (word {})", r.value, r.alpha, r.word);
    println!("  max over L_Phi   {:.10}  at {:?}", r.max_over_l_phi, r.argmax_l_phi);
    println!("  dim_H J          {:.10}", ifs.similarity_dimension());
    println!("  full dimension   {}", r.full_dimension);
    println!("  {} points evaluated in {:.2?}", r.evaluated, started.elapsed());
    Ok(())
}
