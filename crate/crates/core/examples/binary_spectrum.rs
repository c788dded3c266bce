//! Birkhoff spectrum of the digit frequency on the full 2-shift, compared
//! with the binary entropy.

use mfspec::metric::WeakGibbsMetric;
use mfspec::numeric::binary_entropy;
use mfspec::potential::Potential;
use mfspec::sft::Sft;
use mfspec::spectrum::{default_eps, spectrum_grid, GridOptions, SpectrumModel};

fn main() -> mfspec::Result<()> {
    let sft = Sft::full(2)?;
    let metric = WeakGibbsMetric::standard(&sft);
    let phi = Potential::digit(&sft, 1);
    let model = SpectrumModel::new(&sft, &metric, &phi, 1)?;
    let alphas: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0]).collect();
    let mut opts = GridOptions::new(20);
    opts.eps = default_eps(20);
    opts.primal_every = 1;
    let grid = spectrum_grid(&model, &metric, &phi, &alphas, &opts)?;
    println!("alpha   E-hat      H/log2     primal     Lambda-hat");
    for p in &grid.points {
        let a = p.alpha[0];
        println!(
            "{a:.2}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9.4}",
            p.e_hat,
            binary_entropy(a) / 2f64.ln(),
            p.primal.unwrap_or(f64::NAN),
            p.lambda_hat
        );
    }
    Ok(())
}
