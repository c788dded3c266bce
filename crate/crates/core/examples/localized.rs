//! Dimension of a localized level set on the full 2-shift: the target
//! drifts around 1/2 depending on the first two symbols.

use mfspec::localized::{localized_dimension, LocalizedTarget};
use mfspec::metric::WeakGibbsMetric;
use mfspec::potential::Potential;
use mfspec::sft::Sft;
use mfspec::spectrum::{DualOptions, SpectrumModel};

fn main() -> mfspec::Result<()> {
    let sft = Sft::full(2)?;
    let metric = WeakGibbsMetric::standard(&sft);
    let phi = Potential::digit(&sft, 1);
    let model = SpectrumModel::new(&sft, &metric, &phi, 1)?;
    for drift in [0.0, 0.1, 0.3] {
        let target = LocalizedTarget::from_fn(&sft, 2, 1, |w| vec![0.5 + drift * (f64::from(w[0]) - 0.5)])?;
        let r = localized_dimension(&model, &target, &DualOptions::default())?;
        println!("drift {drift:.1}: D = {:.6} at {:?}, {} image points", r.value, r.argmax, r.image_points);
    }
    Ok(())
}
