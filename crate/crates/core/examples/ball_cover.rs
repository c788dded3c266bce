//! Ball covers of a weak Gibbs metric and the full dimension they estimate.
//!
//! `cargo run --example ball_cover -- 0.5 0.25`

use mfspec::metric::WeakGibbsMetric;
use mfspec::sft::Sft;

fn main() -> mfspec::Result<()> {
    let ratios: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let ratios = if ratios.is_empty() { vec![0.5, 0.25] } else { ratios };
    let sft = Sft::full(ratios.len())?;
    let metric = WeakGibbsMetric::per_symbol_ratios(&sft, &ratios)?;

    for n in [4.0, 8.0] {
        let cover = metric.ball_cover(n, u64::MAX)?;
        let (lo, hi) = metric.cover_length_bounds(n);
        let lens: Vec<usize> = cover.iter().map(|w| w.len()).collect();
        println!(
            "n = {n}: {} balls, word lengths {}..={} (bounds {lo:.2}..{hi:.2})",
            cover.len(),
            lens.iter().min().unwrap(),
            lens.iter().max().unwrap()
        );
    }
    let fd = metric.full_dimension(24, u64::MAX)?;
    println!("D-hat at n = {}: {:.6}", fd.n, fd.d_hat);
    println!("Bowen root:      {:.6}", fd.bowen_root.unwrap_or(f64::NAN));
    Ok(())
}
