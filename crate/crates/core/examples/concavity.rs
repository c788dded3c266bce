//! Shape checks on a sampled spectrum: the golden-mean digit spectrum
//! passes, the same curve with a dip does not.

use mfspec::concavity::weak_concavity_check;
use mfspec::metric::WeakGibbsMetric;
use mfspec::potential::Potential;
use mfspec::sft::Sft;
use mfspec::spectrum::{auto_grid, DualOptions, SpectrumModel};

fn main() -> mfspec::Result<()> {
    let sft = Sft::golden_mean();
    let metric = WeakGibbsMetric::standard(&sft);
    let phi = Potential::digit(&sft, 1);
    let model = SpectrumModel::new(&sft, &metric, &phi, 1)?;
    let mut samples = Vec::new();
    for a in auto_grid(model.region(), 33) {
        let s = model.variational_lenient(&a, &DualOptions::default())?;
        samples.push((a[0], s.e_hat));
    }
    let r = weak_concavity_check(&samples, 1.0, 0.02);
    println!("spectrum: quasi-concave {}, monotone {}, smallest c {:?}", r.quasi_concave.pass, r.monotone_from_max.pass, r.smallest_passing_c);

    samples[8].1 -= 0.2;
    let r = weak_concavity_check(&samples, 1.0, 0.02);
    println!("dipped:   quasi-concave {}, witness {:?}", r.quasi_concave.pass, r.quasi_concave.counterexample);
    Ok(())
}
