//! Randomized invariant suite behind the `check` command.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::metric::{within_radius, WeakGibbsMetric};
use crate::potential::Potential;
use crate::pressure::{pressure_exact, MarkovMeasure};
use crate::primal::primal_spectrum;
use crate::sft::{BlockGraph, Sft};
use crate::spectrum::{count_from_classes, DualOptions, SpectrumModel};

const TOL: f64 = 1e-9;

/// Outcome of one property over all instances.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub instances: usize,
    pub violations: usize,
    /// Largest amount by which an inequality failed (0 if none did).
    pub worst: f64,
    pub example: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.violations == 0)
    }
}

/// A single instance returns `Err` with a description and the size of the
/// violation, or `Ok` if the property held.
type Instance = fn(&mut ChaCha8Rng) -> std::result::Result<(), (f64, String)>;

pub const PROPERTIES: [(&str, Instance); 7] = [
    ("almost_additivity", almost_additivity),
    ("product_sandwich", product_sandwich),
    ("cover_bounds", cover_bounds),
    ("variational_inequality", variational_inequality),
    ("f_monotone_in_eps", f_monotone_in_eps),
    ("lambda_below_dhat", lambda_below_dhat),
    ("dual_ge_primal", dual_ge_primal),
];

/// Runs every property on `instances` random instances. Instance `i` of
/// property `p` draws from its own stream, so results do not depend on
/// scheduling.
pub fn run_checks(instances: usize, seed: u64) -> CheckReport {
    let properties = PROPERTIES
        .iter()
        .enumerate()
        .map(|(p, &(name, f))| {
            let outcomes: Vec<_> = (0..instances)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((p as u64) << 32) | i as u64);
                    f(&mut rng)
                })
                .collect();
            let mut violations = 0;
            let mut worst = 0.0f64;
            let mut example = None;
            for o in outcomes {
                if let Err((amount, what)) = o {
                    violations += 1;
                    if example.is_none() || amount > worst {
                        example = Some(what);
                    }
                    worst = worst.max(amount);
                }
            }
            PropertyResult { name, instances, violations, worst, example }
        })
        .collect();
    CheckReport { seed, properties }
}

/// Random primitive SFT on 2 or 3 symbols.
pub fn random_sft(rng: &mut impl Rng) -> Sft {
    loop {
        let m = rng.gen_range(2..=3);
        let adj: Vec<Vec<u8>> = (0..m).map(|_| (0..m).map(|_| u8::from(rng.gen_bool(0.7))).collect()).collect();
        if let Ok(s) = Sft::new(adj, 16) {
            return s;
        }
    }
}

/// Random locally constant potential with window 1 to 3.
pub fn random_table(rng: &mut impl Rng, sft: &Sft, d: usize) -> Potential {
    let k = rng.gen_range(1..=3);
    let seed: u64 = rng.gen();
    Potential::locally_constant(sft, k, d, |w| {
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ crate::sft::word_code(w, 7) as u64);
        (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()
    })
    .expect("valid table")
}

fn random_cocycle(rng: &mut impl Rng, sft: &Sft) -> Potential {
    let mats = (0..sft.alphabet_size())
        .map(|_| (0..2).map(|_| (0..2).map(|_| rng.gen_range(0.2..2.0)).collect()).collect())
        .collect();
    Potential::cocycle(sft, mats).expect("positive matrices")
}

fn random_scalar(rng: &mut impl Rng, sft: &Sft) -> Potential {
    if rng.gen_bool(0.5) {
        random_table(rng, sft, 1)
    } else {
        random_cocycle(rng, sft)
    }
}

fn random_metric(rng: &mut impl Rng, sft: &Sft) -> WeakGibbsMetric {
    if rng.gen_bool(0.5) {
        let ratios: Vec<f64> = (0..sft.alphabet_size()).map(|_| rng.gen_range(0.2..0.7)).collect();
        WeakGibbsMetric::per_symbol_ratios(sft, &ratios).expect("ratios in (0, 1)")
    } else {
        let seed: u64 = rng.gen();
        let psi = Potential::locally_constant(sft, 2, 1, |w| {
            let mut r = ChaCha8Rng::seed_from_u64(seed ^ crate::sft::word_code(w, 7) as u64);
            vec![r.gen_range(-2.0..-0.3)]
        })
        .expect("valid table");
        WeakGibbsMetric::new(sft, psi).expect("negative table")
    }
}

/// Uniformly random admissible word of length `n`.
fn random_word(rng: &mut impl Rng, sft: &Sft, n: usize) -> Vec<u8> {
    let m = sft.alphabet_size() as u8;
    let mut w = vec![rng.gen_range(0..m)];
    while w.len() < n {
        let succ: Vec<u8> = sft.successors(*w.last().unwrap()).collect();
        w.push(succ[rng.gen_range(0..succ.len())]);
    }
    w
}

fn almost_additivity(rng: &mut ChaCha8Rng) -> std::result::Result<(), (f64, String)> {
    let sft = random_sft(rng);
    let pot = random_scalar(rng, &sft);
    let n = rng.gen_range(1..=8);
    let p = rng.gen_range(1..=8);
    let x = random_word(rng, &sft, n + p + 3);
    let whole = pot.value_at(&sft, &x, n + p)[0];
    let split = pot.value_at(&sft, &x, n)[0] + pot.value_at(&sft, &x[n..], p)[0];
    let excess = (whole - split).abs() - pot.c()[0];
    if excess > TOL {
        return Err((excess, format!("n={n} p={p} x={x:?}")));
    }
    Ok(())
}

fn product_sandwich(rng: &mut ChaCha8Rng) -> std::result::Result<(), (f64, String)> {
    let sft = random_sft(rng);
    let pot = random_scalar(rng, &sft);
    let nu = rng.gen_range(1..=6);
    let nv = rng.gen_range(1..=6);
    let uv = random_word(rng, &sft, nu + nv);
    let log_sup = |w: &[u8]| pot.eval_unchecked(w).hi[0];
    let (lu, lv, luv) = (log_sup(&uv[..nu]), log_sup(&uv[nu..]), log_sup(&uv));
    let c = pot.c()[0];
    let upper = luv - (c + lu + lv);
    let lower = (-c - pot.variation(nu) + lu + lv) - luv;
    let excess = upper.max(lower);
    if excess > TOL {
        return Err((excess, format!("u={:?} v={:?}", &uv[..nu], &uv[nu..])));
    }
    Ok(())
}

/// Number of admissible words of each length `l ≤ max` starting with each symbol.
fn extension_counts(sft: &Sft, max: usize) -> Vec<Vec<u128>> {
    let m = sft.alphabet_size();
    let mut ext = vec![vec![1u128; m]];
    for l in 1..max {
        let row = (0..m as u8).map(|a| sft.successors(a).map(|b| ext[l - 1][b as usize]).sum()).collect();
        ext.push(row);
    }
    ext
}

fn cover_bounds(rng: &mut ChaCha8Rng) -> std::result::Result<(), (f64, String)> {
    let sft = random_sft(rng);
    let metric = random_metric(rng, &sft);
    // The upper length bound needs n ≥ 1.
    let n = rng.gen_range(1.0..5.0);
    let cover = metric.ball_cover(n, 1 << 22).map_err(|e| (f64::INFINITY, e.to_string()))?;
    let (lo, hi) = metric.cover_length_bounds(n);
    let psi = metric.psi();
    let max_len = cover.iter().map(|w| w.len()).max().unwrap_or(1);
    let ext = extension_counts(&sft, max_len);
    let mut mass = 0u128;
    for (i, w) in cover.iter().enumerate() {
        let len = w.len() as f64;
        if len < lo - TOL || len > hi + TOL {
            return Err((1.0, format!("length {len} outside [{lo}, {hi}] at n={n}")));
        }
        let ld = metric.log_diameter(w.symbols());
        if !within_radius(ld, n) {
            return Err((ld + n, format!("diameter above e^-n for {w}")));
        }
        let floor = -psi.c()[0] - psi.variation(w.len()) + metric.psi_min() - n;
        if ld < floor - TOL {
            return Err((floor - ld, format!("diameter below the lower bound for {w}")));
        }
        if i > 0 && cover[i - 1].is_prefix_of(w) {
            return Err((1.0, format!("{} contains {w}", cover[i - 1])));
        }
        mass += ext[max_len - w.len()][w.last().unwrap() as usize];
    }
    let total: u128 = ext[max_len - 1].iter().sum();
    if mass != total {
        return Err((1.0, format!("cover hits {mass} of {total} words of length {max_len}")));
    }
    Ok(())
}

fn variational_inequality(rng: &mut ChaCha8Rng) -> std::result::Result<(), (f64, String)> {
    let sft = random_sft(rng);
    let pot = random_table(rng, &sft, 1);
    let table = pot.table().unwrap();
    let graph = Arc::new(BlockGraph::new(&sft, table.window().max(2)).unwrap());
    let mu = MarkovMeasure::random(graph.clone(), rng);
    let vals = table.edge_values(&graph).unwrap();
    let lhs = mu.entropy() + mu.edge_average(&vals, 1)[0];
    let p = pressure_exact(&sft, &pot).map_err(|e| (f64::INFINITY, e.to_string()))?;
    if lhs > p + TOL {
        return Err((lhs - p, format!("h + Phi* = {lhs} > P = {p}")));
    }
    Ok(())
}

fn counting_setup(rng: &mut ChaCha8Rng) -> (WeakGibbsMetric, Potential, f64) {
    let sft = random_sft(rng);
    let metric = random_metric(rng, &sft);
    let pot = random_table(rng, &sft, 1);
    (metric, pot, rng.gen_range(1.0..6.0))
}

fn f_monotone_in_eps(rng: &mut ChaCha8Rng) -> std::result::Result<(), (f64, String)> {
    let (metric, pot, n) = counting_setup(rng);
    let classes = metric.cover_classes(Some(&pot), n, 1 << 22).map_err(|e| (f64::INFINITY, e.to_string()))?;
    let alpha = [rng.gen_range(-1.2..1.2)];
    let mut e1: f64 = rng.gen_range(0.0..1.0);
    let mut e2: f64 = rng.gen_range(0.0..1.0);
    if e1 > e2 {
        std::mem::swap(&mut e1, &mut e2);
    }
    let (f1, f2) = (count_from_classes(&classes, &alpha, e1), count_from_classes(&classes, &alpha, e2));
    if f1 > f2 {
        return Err(((f1 - f2) as f64, format!("f({e1}) = {f1} > f({e2}) = {f2}")));
    }
    Ok(())
}

fn lambda_below_dhat(rng: &mut ChaCha8Rng) -> std::result::Result<(), (f64, String)> {
    let (metric, pot, n) = counting_setup(rng);
    let classes = metric.cover_classes(Some(&pot), n, 1 << 22).map_err(|e| (f64::INFINITY, e.to_string()))?;
    let total: u128 = classes.iter().map(|c| c.count).sum();
    let alpha = [rng.gen_range(-1.0..1.0)];
    let f = count_from_classes(&classes, &alpha, rng.gen_range(0.01..0.5));
    let lambda = (f as f64).ln() / n;
    let d_hat = (total as f64).ln() / n;
    if lambda > d_hat + 2.0 / n + TOL {
        return Err((lambda - d_hat - 2.0 / n, format!("Lambda {lambda} > D {d_hat} + 2/n")));
    }
    Ok(())
}

fn dual_ge_primal(rng: &mut ChaCha8Rng) -> std::result::Result<(), (f64, String)> {
    let sft = random_sft(rng);
    let ratios: Vec<f64> = (0..sft.alphabet_size()).map(|_| rng.gen_range(0.2..0.7)).collect();
    let metric = WeakGibbsMetric::per_symbol_ratios(&sft, &ratios).unwrap();
    let values: Vec<f64> = (0..sft.alphabet_size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let pot = Potential::per_symbol(&sft, &values).unwrap();
    let model = SpectrumModel::new(&sft, &metric, &pot, 1).map_err(|e| (f64::INFINITY, e.to_string()))?;
    let mu = MarkovMeasure::random(model.graph().clone(), rng);
    let alpha = mu.edge_average(model.phi_values(), 1);
    let ratio = mu.entropy() / -mu.edge_average(model.psi_values(), 1)[0];
    let dual = model
        .variational_lenient(&alpha, &DualOptions::default())
        .map_err(|e| (f64::INFINITY, e.to_string()))?;
    if ratio > dual.e_hat + TOL {
        return Err((ratio - dual.e_hat, format!("random measure beats the dual at alpha={alpha:?}")));
    }
    if model.region().in_relative_interior(&alpha, 1e-6) {
        let primal = primal_spectrum(&model, &alpha).map_err(|e| (f64::INFINITY, e.to_string()))?;
        if primal.value > dual.e_hat + TOL {
            return Err((primal.value - dual.e_hat, format!("primal beats the dual at alpha={alpha:?}")));
        }
        if dual.e_hat - primal.value > 1e-6 {
            return Err((dual.e_hat - primal.value, format!("dual-primal gap at alpha={alpha:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let report = run_checks(40, 11);
        for p in &report.properties {
            assert_eq!(p.violations, 0, "{p:?}");
        }
    }
}
