//! Moran-set sampler for a constant target: Birkhoff deviations shrink as
//! the blocks accumulate.

use mfspec::localized::{moran_sampler, LocalizedTarget, MoranOptions};
use mfspec::metric::WeakGibbsMetric;
use mfspec::potential::Potential;
use mfspec::sft::Sft;
use mfspec::spectrum::SpectrumModel;

fn main() -> mfspec::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let sft = Sft::golden_mean();
    let metric = WeakGibbsMetric::standard(&sft);
    let phi = Potential::digit(&sft, 1);
    let model = SpectrumModel::new(&sft, &metric, &phi, 2)?;
    let target = LocalizedTarget::constant(&sft, &[0.3])?;
    let opts = MoranOptions::new(vec![500, 1000, 2000, 4000, 8000, 16000, 68500], seed, 3);
    let rep = moran_sampler(&model, &target, &opts)?;
    for row in rep.final_rows() {
        println!(
            "path {}: n = {}, deviation {:.4}, log rho / log diam = {:.4}",
            row.path,
            row.n,
            row.deviation,
            row.log_rho / row.log_diam
        );
    }
    println!("target ratio {:.4?}, mass discrepancy {:.1e}", rep.target_ratio, rep.mass_discrepancy());
    Ok(())
}
