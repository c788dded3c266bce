//! Weak Gibbs metrics `d_Ψ`: cylinder diameters, the ball covers `B_n(Ψ)`
//! and the full dimension `D(Ψ)`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::bisect_decreasing;
use crate::potential::{Potential, TablePotential};
use crate::pressure::pressure_of_weights;
use crate::sft::{BlockGraph, Sft, Word};

/// Default cap on enumerated words or live counting classes.
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Budget from `MFSPEC_BUDGET`, falling back to [`DEFAULT_BUDGET`].
pub fn budget_from_env() -> u64 {
    std::env::var("MFSPEC_BUDGET").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_BUDGET)
}

/// Fixed-point scale for the counting dynamic program: sums are kept as
/// integer multiples of `2^-30` so that equal sums merge exactly.
const SCALE: f64 = (1u64 << 30) as f64;

fn quantize(x: f64) -> i64 {
    (x * SCALE).round() as i64
}

/// Closed-ball test `Ψ[w] ≤ e^{-n}` on the log scale, forgiving rounding.
pub fn within_radius(log_diam: f64, n: f64) -> bool {
    log_diam <= -n + 1e-12 * (1.0 + n.abs())
}

/// `d_Ψ` for a scalar potential `Ψ` with `Ψ_max < 0`.
#[derive(Clone, Debug)]
pub struct WeakGibbsMetric {
    sft: Sft,
    psi: Potential,
}

impl WeakGibbsMetric {
    pub fn new(sft: &Sft, psi: Potential) -> Result<Self> {
        if psi.dim() != 1 {
            return Err(Error::InvalidModel("metric potential must be scalar".into()));
        }
        if !(psi.phi_max()[0] < 0.0) {
            return Err(Error::InvalidModel(format!(
                "metric potential needs Psi_max < 0, got {}",
                psi.phi_max()[0]
            )));
        }
        Ok(WeakGibbsMetric { sft: sft.clone(), psi })
    }

    /// `Ψ[w] = m^{-|w|}`.
    pub fn standard(sft: &Sft) -> Self {
        let m = sft.alphabet_size() as f64;
        WeakGibbsMetric::new(sft, Potential::constant(sft, -m.ln())).expect("negative constant")
    }

    /// Window-1 metric with `ψ(x) = log r_{x_1}`.
    pub fn per_symbol_ratios(sft: &Sft, ratios: &[f64]) -> Result<Self> {
        if ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::InvalidModel("contraction ratios must lie in (0, 1)".into()));
        }
        let logs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
        WeakGibbsMetric::new(sft, Potential::per_symbol(sft, &logs)?)
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    pub fn psi(&self) -> &Potential {
        &self.psi
    }

    pub fn psi_max(&self) -> f64 {
        self.psi.phi_max()[0]
    }

    pub fn psi_min(&self) -> f64 {
        self.psi.phi_min()[0]
    }

    /// `Ψ[w]`.
    pub fn cylinder_diameter(&self, w: &Word) -> Result<f64> {
        self.psi.sup_exp(&self.sft, w)
    }

    pub fn log_diameter(&self, w: &[u8]) -> f64 {
        self.psi.eval_unchecked(w).hi[0]
    }

    /// Length window `[n/|Ψ_min|, (1 + 1/|Ψ_max|) n]` for cover words.
    pub fn cover_length_bounds(&self, n: f64) -> (f64, f64) {
        (n / self.psi_min().abs(), (1.0 + 1.0 / self.psi_max().abs()) * n)
    }

    /// `B_n(Ψ)` by depth-first search over the prefix tree, in
    /// lexicographic order.
    pub fn ball_cover(&self, n: f64, budget: u64) -> Result<Vec<Word>> {
        let mut out = Vec::new();
        self.visit_cover(n, budget, |w| out.push(Word::new(w.to_vec())))?;
        Ok(out)
    }

    /// Calls `visit` on every word of `B_n(Ψ)`; fails once more than
    /// `budget` words have been produced.
    pub fn visit_cover(&self, n: f64, budget: u64, mut visit: impl FnMut(&[u8])) -> Result<u64> {
        let m = self.sft.alphabet_size() as u8;
        let mut count = 0u64;
        let mut stack: Vec<Vec<u8>> = (0..m).rev().map(|a| vec![a]).collect();
        while let Some(w) = stack.pop() {
            if within_radius(self.log_diameter(&w), n) {
                count += 1;
                if count > budget {
                    return Err(Error::BudgetExceeded(budget));
                }
                visit(&w);
            } else {
                let last = *w.last().unwrap();
                let succ: Vec<u8> = self.sft.successors(last).collect();
                for &b in succ.iter().rev() {
                    let mut v = w.clone();
                    v.push(b);
                    stack.push(v);
                }
            }
        }
        Ok(count)
    }

    /// `#B_n(Ψ)` without storing the cover.
    pub fn ball_count(&self, n: f64, budget: u64) -> Result<u128> {
        let classes = self.cover_classes(None, n, budget)?;
        Ok(classes.iter().map(|c| c.count).sum())
    }

    /// The cover grouped into classes of words sharing length and the range
    /// of `φ_{|w|}` over `[w]`. Locally constant inputs are counted by a
    /// dynamic program over (suffix state, quantized sums) and never
    /// enumerate words; other inputs fall back to enumeration.
    pub fn cover_classes(&self, phi: Option<&Potential>, n: f64, budget: u64) -> Result<Vec<CoverClass>> {
        let psi_table = self.psi.table();
        let phi_table = match phi {
            Some(p) => p.table().map(Some),
            None => Some(None),
        };
        match (psi_table, phi_table) {
            (Some(pt), Some(ft)) => count_by_dynamic_program(&self.sft, pt, ft, n, budget),
            _ => {
                let d = phi.map_or(0, |p| p.dim());
                let mut map: HashMap<ClassKey, CoverClass> = HashMap::new();
                self.visit_cover(n, budget, |w| {
                    let (lo, hi) = match phi {
                        Some(p) => {
                            let r = p.eval_unchecked(w);
                            (r.lo, r.hi)
                        }
                        None => (Vec::new(), Vec::new()),
                    };
                    let key = ClassKey::new(w.len(), &lo, &hi);
                    map.entry(key).or_insert_with(|| CoverClass { len: w.len(), lo, hi, count: 0 }).count += 1;
                })?;
                let mut v: Vec<CoverClass> = map.into_values().collect();
                v.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap());
                debug_assert!(v.iter().all(|c| c.lo.len() == d));
                Ok(v)
            }
        }
    }

    /// Counting estimate `log #B_n / n` and the Bowen root of `P(tΨ) = 0`.
    pub fn full_dimension(&self, n_max: usize, budget: u64) -> Result<FullDimension> {
        if n_max == 0 {
            return Err(Error::InvalidModel("n_max must be positive".into()));
        }
        let count = self.ball_count(n_max as f64, budget)?;
        let d_hat = (count as f64).ln() / n_max as f64;
        let htop = {
            let zero = Potential::constant(&self.sft, 0.0);
            crate::pressure::pressure_exact(&self.sft, &zero)?
        };
        let upper = (1.0 + 1.0 / self.psi_max().abs()) * (self.sft.alphabet_size() as f64).ln();
        let bowen_root = self.bowen_root().ok();
        Ok(FullDimension { n: n_max, count, d_hat, bowen_root, counting_upper_bound: upper, htop })
    }

    /// Root `t*` of `P(tΨ) = 0` for locally constant `Ψ`.
    pub fn bowen_root(&self) -> Result<f64> {
        let table = self
            .psi
            .table()
            .ok_or_else(|| Error::Unsupported("Bowen root needs a locally constant metric potential".into()))?;
        let graph = BlockGraph::new(&self.sft, table.window())?;
        let w = table.edge_values(&graph)?;
        let p = |t: f64| -> f64 {
            let scaled: Vec<f64> = w.iter().map(|x| t * x).collect();
            pressure_of_weights(&graph, &scaled)
        };
        let h = p(0.0);
        let lo = h / self.psi_min().abs();
        let hi = h / self.psi_max().abs();
        Ok(bisect_decreasing(p, lo * (1.0 - 1e-12), hi * (1.0 + 1e-12), 1e-15 * (1.0 + hi)))
    }
}

/// Result of [`WeakGibbsMetric::full_dimension`].
#[derive(Clone, Debug, Serialize)]
pub struct FullDimension {
    pub n: usize,
    pub count: u128,
    pub d_hat: f64,
    pub bowen_root: Option<f64>,
    /// `(1 + 1/|Ψ_max|) · log m`.
    pub counting_upper_bound: f64,
    pub htop: f64,
}

/// Words of `B_n(Ψ)` sharing a length and a range of `φ_{|w|}`.
#[derive(Clone, Debug)]
pub struct CoverClass {
    pub len: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: u128,
}

impl CoverClass {
    fn sort_key(&self) -> (usize, Vec<f64>, Vec<f64>) {
        (self.len, self.lo.clone(), self.hi.clone())
    }

    /// Euclidean distance from `alpha` to the box `[lo, hi] / len`.
    pub fn distance_to_average_box(&self, alpha: &[f64]) -> f64 {
        let l = self.len as f64;
        alpha
            .iter()
            .enumerate()
            .map(|(c, a)| {
                let lo = self.lo[c] / l;
                let hi = self.hi[c] / l;
                let gap = if *a < lo {
                    lo - a
                } else if *a > hi {
                    a - hi
                } else {
                    0.0
                };
                gap * gap
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct ClassKey(usize, Vec<u64>);

impl ClassKey {
    fn new(len: usize, lo: &[f64], hi: &[f64]) -> Self {
        ClassKey(len, lo.iter().chain(hi).map(|x| x.to_bits()).collect())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct DpKey {
    state: u32,
    psi: i64,
    phi: Box<[i64]>,
}

fn count_by_dynamic_program(
    sft: &Sft,
    psi: &TablePotential,
    phi: Option<&TablePotential>,
    n: f64,
    budget: u64,
) -> Result<Vec<CoverClass>> {
    let d = phi.map_or(0, |p| p.dim());
    let kpsi = psi.window();
    let kphi = phi.map_or(1, |p| p.window());
    let order = kpsi.max(kphi).max(2);
    let graph = Arc::new(BlockGraph::new(sft, order)?);
    let m = sft.alphabet_size();

    // Per-edge quantized window values of the newest complete window.
    let edge_psi: Vec<i64> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, _)| {
            let w = graph.edge_word(e);
            quantize(psi.value(&w[order - kpsi..])[0])
        })
        .collect();
    let edge_phi: Vec<i64> = match phi {
        Some(p) => (0..graph.edges().len())
            .flat_map(|e| {
                let w = graph.edge_word(e);
                p.value(&w[order - kphi..]).iter().map(|&x| quantize(x)).collect::<Vec<_>>()
            })
            .collect(),
        None => Vec::new(),
    };
    // Tail extrema per state.
    let ns = graph.state_count();
    let mut psi_tail = vec![0.0; ns];
    let mut phi_tail_lo = vec![0.0; ns * d];
    let mut phi_tail_hi = vec![0.0; ns * d];
    for s in 0..ns {
        let word = graph.state_word(s);
        psi_tail[s] = psi.tail_range(&word).1[0];
        if let Some(p) = phi {
            let (lo, hi) = p.tail_range(&word);
            phi_tail_lo[s * d..(s + 1) * d].copy_from_slice(&lo);
            phi_tail_hi[s * d..(s + 1) * d].copy_from_slice(&hi);
        }
    }

    let mut terminal: HashMap<(usize, Box<[i64]>, u32), u128> = HashMap::new();
    let mut short_terminal: Vec<CoverClass> = Vec::new();
    let mut level: HashMap<DpKey, u128> = HashMap::new();

    // Words shorter than a full state are handled one by one.
    let seed_len = order - 1;
    let mut stack: Vec<Vec<u8>> = (0..m as u8).rev().map(|a| vec![a]).collect();
    while let Some(w) = stack.pop() {
        if w.len() < seed_len {
            if within_radius(psi.eval(&w).hi[0], n) {
                let (lo, hi) = match phi {
                    Some(p) => {
                        let r = p.eval(&w);
                        (r.lo, r.hi)
                    }
                    None => (Vec::new(), Vec::new()),
                };
                short_terminal.push(CoverClass { len: w.len(), lo, hi, count: 1 });
            } else {
                for b in sft.successors(*w.last().unwrap()).collect::<Vec<_>>().into_iter().rev() {
                    let mut v = w.clone();
                    v.push(b);
                    stack.push(v);
                }
            }
            continue;
        }
        let state = graph.state_index(&w).expect("admissible seed") as u32;
        let core_psi: i64 = if seed_len >= kpsi {
            (0..=seed_len - kpsi).map(|t| quantize(psi.value(&w[t..t + kpsi])[0])).sum()
        } else {
            0
        };
        let mut core_phi = vec![0i64; d];
        if let Some(p) = phi {
            if seed_len >= kphi {
                for t in 0..=(seed_len - kphi) {
                    for (c, v) in p.value(&w[t..t + kphi]).iter().enumerate() {
                        core_phi[c] += quantize(*v);
                    }
                }
            }
        }
        *level.entry(DpKey { state, psi: core_psi, phi: core_phi.into_boxed_slice() }).or_insert(0) += 1;
    }

    let mut len = seed_len;
    while !level.is_empty() {
        if level.len() as u64 > budget {
            return Err(Error::BudgetExceeded(budget));
        }
        let mut next: HashMap<DpKey, u128> = HashMap::with_capacity(level.len() * 2);
        for (key, count) in level {
            let s = key.state as usize;
            let log_diam = key.psi as f64 / SCALE + psi_tail[s];
            if within_radius(log_diam, n) {
                *terminal.entry((len, key.phi.clone(), key.state)).or_insert(0) += count;
                continue;
            }
            for e in graph.out_edges(s) {
                let edge = &graph.edges()[e];
                let mut phi_sum = key.phi.clone();
                for c in 0..d {
                    phi_sum[c] += edge_phi[e * d + c];
                }
                *next
                    .entry(DpKey { state: edge.to as u32, psi: key.psi + edge_psi[e], phi: phi_sum })
                    .or_insert(0) += count;
            }
        }
        level = next;
        len += 1;
    }

    // Collapse terminal (length, core, state) triples into φ-ranges.
    let mut grouped: HashMap<ClassKey, CoverClass> = HashMap::new();
    for ((len, core, state), count) in terminal {
        let s = state as usize;
        let lo: Vec<f64> = (0..d).map(|c| core[c] as f64 / SCALE + phi_tail_lo[s * d + c]).collect();
        let hi: Vec<f64> = (0..d).map(|c| core[c] as f64 / SCALE + phi_tail_hi[s * d + c]).collect();
        let key = ClassKey::new(len, &lo, &hi);
        grouped.entry(key).or_insert_with(|| CoverClass { len, lo, hi, count: 0 }).count += count;
    }
    let mut out: Vec<CoverClass> = grouped.into_values().chain(short_terminal).collect();
    out.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap());
    Ok(out)
}

/// Writes a cover as newline-delimited words.
pub fn write_cover(words: &[Word], mut out: impl Write) -> Result<()> {
    for w in words {
        writeln!(out, "{w}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_metric_diameters() {
        let s = Sft::full(3).unwrap();
        let g = WeakGibbsMetric::standard(&s);
        let d = g.cylinder_diameter(&"1232".parse().unwrap()).unwrap();
        assert!((d - 3f64.powi(-4)).abs() < 1e-15);
    }

    #[test]
    fn per_symbol_diameter() {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::per_symbol_ratios(&s, &[0.5, 0.25]).unwrap();
        let d = g.cylinder_diameter(&"122".parse().unwrap()).unwrap();
        assert!((d - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonnegative_metric_potential() {
        let s = Sft::full(2).unwrap();
        assert!(WeakGibbsMetric::new(&s, Potential::constant(&s, 0.0)).is_err());
    }

    #[test]
    fn full_shift_cover_size() {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::new(&s, Potential::constant(&s, -2f64.ln())).unwrap();
        let cover = g.ball_cover(7.0, 1 << 20).unwrap();
        assert_eq!(cover.len(), 2048);
        assert!(cover.iter().all(|w| w.len() == 11));
        assert_eq!(g.ball_count(7.0, 1 << 20).unwrap(), 2048);
    }

    #[test]
    fn golden_mean_cover_size() {
        let s = Sft::golden_mean();
        let g = WeakGibbsMetric::new(&s, Potential::constant(&s, -2f64.ln())).unwrap();
        let cover = g.ball_cover(3.0, 1 << 20).unwrap();
        assert_eq!(cover.len(), 13);
        assert!(cover.iter().all(|w| w.len() == 5));
        assert_eq!(g.ball_count(3.0, 1 << 20).unwrap(), 13);
    }

    #[test]
    fn counting_dp_matches_enumeration_with_windows() {
        let s = Sft::new(vec![vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1]], 10).unwrap();
        let psi = Potential::locally_constant(&s, 3, 1, |w| vec![-0.4 - 0.3 * w[0] as f64 - 0.2 * (w[2] == 1) as u8 as f64]).unwrap();
        let g = WeakGibbsMetric::new(&s, psi).unwrap();
        let phi = Potential::locally_constant(&s, 2, 1, |w| vec![(w[0] == w[1]) as u8 as f64 + 0.5 * w[1] as f64]).unwrap();
        for n in [0.5, 1.0, 3.0, 6.5] {
            let cover = g.ball_cover(n, 1 << 22).unwrap();
            let classes = g.cover_classes(Some(&phi), n, 1 << 22).unwrap();
            let total: u128 = classes.iter().map(|c| c.count).sum();
            assert_eq!(total, cover.len() as u128, "n={n}");
            // Every enumerated word falls in a class with its own range.
            let mut brute: HashMap<(usize, i64, i64), u128> = HashMap::new();
            for w in &cover {
                let r = phi.eval_unchecked(w.symbols());
                *brute.entry((w.len(), quantize(r.lo[0]), quantize(r.hi[0]))).or_insert(0) += 1;
            }
            let mut dp: HashMap<(usize, i64, i64), u128> = HashMap::new();
            for c in &classes {
                *dp.entry((c.len, quantize(c.lo[0]), quantize(c.hi[0]))).or_insert(0) += c.count;
            }
            assert_eq!(brute, dp, "n={n}");
        }
    }

    #[test]
    fn cover_is_a_partition_with_length_bounds() {
        let s = Sft::golden_mean();
        let g = WeakGibbsMetric::per_symbol_ratios(&s, &[0.5, 0.2]).unwrap();
        let n = 5.0;
        let cover = g.ball_cover(n, 1 << 20).unwrap();
        let (c1, c2) = g.cover_length_bounds(n);
        for w in &cover {
            assert!(w.len() as f64 >= c1 - 1e-9 && w.len() as f64 <= c2 + 1e-9);
            assert!(g.log_diameter(w.symbols()) <= -n + 1e-12);
            if w.len() > 1 {
                assert!(g.log_diameter(w.parent().symbols()) > -n);
            }
        }
        let depth = c2.ceil() as usize + 1;
        for x in s.words(depth) {
            let hits = cover.iter().filter(|w| w.is_prefix_of(&x)).count();
            assert_eq!(hits, 1, "{x}");
        }
    }

    #[test]
    fn bowen_roots() {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::per_symbol_ratios(&s, &[0.5, 0.25]).unwrap();
        let exact = (2.0 / (5f64.sqrt() - 1.0)).log2();
        assert!((g.bowen_root().unwrap() - exact).abs() < 1e-12);
        let s3 = Sft::full(3).unwrap();
        let r = 0.3f64;
        let g3 = WeakGibbsMetric::new(&s3, Potential::constant(&s3, r.ln())).unwrap();
        assert!((g3.bowen_root().unwrap() - 3f64.ln() / -r.ln()).abs() < 1e-12);
        assert!((WeakGibbsMetric::standard(&s3).bowen_root().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::standard(&s);
        assert_eq!(g.ball_cover(10.0, 100).unwrap_err().kind(), "BudgetExceeded");
    }
}
