//! Topological pressure, equilibrium Markov measures and their functionals.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::sft::{BlockGraph, Sft};

const PERRON_RTOL: f64 = 1e-13;
const PERRON_MAX_ITER: usize = 100_000;

/// Perron data of the weighted block matrix `B_uv = Σ_{e:u→v} exp(w_e)`.
#[derive(Clone, Debug)]
pub struct Perron {
    /// `log λ`.
    pub log_lambda: f64,
    /// Right Perron vector, max-normalized.
    pub right: Vec<f64>,
    pub iterations: usize,
    /// Relative width of the final Collatz-Wielandt bracket on `λ`.
    pub residual: f64,
}

/// Power iteration on the (optionally transposed) weighted block matrix.
/// `warm` seeds the iteration with a previous Perron vector.
pub fn perron(graph: &BlockGraph, log_weights: &[f64], warm: Option<&[f64]>, transpose: bool) -> Perron {
    let n = graph.state_count();
    let edges = graph.edges();
    let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|x| (x - shift).exp()).collect();
    let mut r: Vec<f64> = match warm {
        Some(v) if v.len() == n && v.iter().all(|x| *x > 0.0 && x.is_finite()) => v.to_vec(),
        _ => vec![1.0; n],
    };
    let mut y = vec![0.0; n];
    // Damping by `tau` separates the Perron root from other eigenvalues on
    // the same circle without moving the Perron vector.
    let mut tau = 0.0;
    let mut lam = 1.0;
    let mut residual = f64::INFINITY;
    let mut it = 0;
    while it < PERRON_MAX_ITER {
        it += 1;
        for (yi, ri) in y.iter_mut().zip(&r) {
            *yi = tau * ri;
        }
        if transpose {
            for (e, edge) in edges.iter().enumerate() {
                y[edge.to] += w[e] * r[edge.from];
            }
        } else {
            for (e, edge) in edges.iter().enumerate() {
                y[edge.from] += w[e] * r[edge.to];
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (yi, ri) in y.iter().zip(&r) {
            let q = yi / ri;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        let lam_lo = lo - tau;
        let lam_hi = hi - tau;
        lam = 0.5 * (lam_lo + lam_hi);
        residual = (lam_hi - lam_lo) / lam_lo.max(f64::MIN_POSITIVE);
        let top = y.iter().copied().fold(0.0f64, f64::max);
        for (ri, yi) in r.iter_mut().zip(&y) {
            *ri = (yi / top).max(1e-300);
        }
        if residual <= PERRON_RTOL && it > 1 {
            break;
        }
        tau = 0.5 * lam;
    }
    Perron { log_lambda: lam.ln() + shift, right: r, iterations: it, residual }
}

/// Pressure of a locally constant scalar potential.
pub fn pressure_exact(sft: &Sft, potential: &Potential) -> Result<f64> {
    if potential.dim() != 1 {
        return Err(Error::InvalidModel("pressure needs a scalar potential".into()));
    }
    let table = potential
        .table()
        .ok_or_else(|| Error::Unsupported("exact pressure needs a locally constant potential; discretize first".into()))?;
    let graph = BlockGraph::new(sft, table.window())?;
    let w = table.edge_values(&graph)?;
    Ok(perron(&graph, &w, None, false).log_lambda)
}

/// Pressure of the edge weights `w` on `graph`.
pub fn pressure_of_weights(graph: &BlockGraph, w: &[f64]) -> f64 {
    perron(graph, w, None, false).log_lambda
}

/// Two-sided bound on the pressure of an almost additive scalar potential.
#[derive(Clone, Debug, Serialize)]
pub struct PressureBracket {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    /// `log Z_n`, with `Z_n = Σ_{|w|=n} Φ[w]`.
    pub log_z: f64,
    pub c: f64,
    /// Gluing cost subtracted in the lower bound.
    pub kappa: f64,
    pub p0: usize,
}

/// `[P_lo, P_hi]` from the partition sum at level `n`:
/// `P_hi = (log Z_n + C)/n` and `P_lo = (log Z_n − κ)/(n + p0)` with
/// `κ = 2C + 2 sup_j ‖Φ‖_j − p0·Φ_min`.
pub fn pressure_bracket(sft: &Sft, potential: &Potential, n: usize, budget: u64) -> Result<PressureBracket> {
    if potential.dim() != 1 {
        return Err(Error::InvalidModel("pressure needs a scalar potential".into()));
    }
    if n == 0 {
        return Err(Error::InvalidModel("bracket level must be positive".into()));
    }
    let log_z = log_partition_sum(sft, potential, n, budget)?;
    let c = potential.c()[0];
    let p0 = sft.p0();
    let kappa = 2.0 * c + 2.0 * potential.variation_sup() - p0 as f64 * potential.phi_min()[0];
    Ok(PressureBracket {
        n,
        lo: (log_z - kappa) / (n + p0) as f64,
        hi: (log_z + c) / n as f64,
        log_z,
        c,
        kappa,
        p0,
    })
}

/// `log Σ_{w ∈ Σ_{A,n}} exp(sup_{[w]} φ_n)`.
pub fn log_partition_sum(sft: &Sft, potential: &Potential, n: usize, budget: u64) -> Result<f64> {
    match potential.table() {
        Some(t) if t.window() == 1 => {
            let m = sft.alphabet_size();
            let g: Vec<f64> = (0..m as u8).map(|a| t.value(&[a])[0]).collect();
            let shift = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let eg: Vec<f64> = g.iter().map(|x| (x - shift).exp()).collect();
            let mut f = eg.clone();
            let mut log_scale = shift;
            for _ in 1..n {
                let mut next = vec![0.0; m];
                for a in 0..m {
                    for b in sft.successors(a as u8) {
                        next[b as usize] += f[a] * eg[b as usize];
                    }
                }
                let top = next.iter().copied().fold(0.0f64, f64::max);
                log_scale += top.ln() + shift;
                f = next.into_iter().map(|x| x / top).collect();
            }
            Ok(log_scale + f.iter().sum::<f64>().ln())
        }
        Some(t) if n + 1 >= t.window() => {
            let k = t.window();
            let graph = BlockGraph::new(sft, k)?;
            let w = t.edge_values(&graph)?;
            let mut f = vec![1.0; graph.state_count()];
            let mut log_scale = 0.0;
            let shift = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ew: Vec<f64> = w.iter().map(|x| (x - shift).exp()).collect();
            for _ in 0..(n + 1 - k) {
                let mut next = vec![0.0; graph.state_count()];
                for (e, edge) in graph.edges().iter().enumerate() {
                    next[edge.to] += f[edge.from] * ew[e];
                }
                let top = next.iter().copied().fold(0.0f64, f64::max);
                log_scale += top.ln() + shift;
                f = next.into_iter().map(|x| x / top).collect();
            }
            // At length k-1 a state word has no complete window, so its sup
            // is exactly the best tail.
            let terms = (0..graph.state_count()).map(|s| f[s].ln() + t.eval(&graph.state_word(s)).hi[0]);
            Ok(log_scale + crate::numeric::log_sum_exp(terms))
        }
        _ => {
            let count = sft.word_count(n);
            if count > budget as u128 {
                return Err(Error::BudgetExceeded(budget));
            }
            let terms = sft.words(n).map(|w| potential.eval_unchecked(w.symbols()).hi[0]);
            Ok(crate::numeric::log_sum_exp(terms))
        }
    }
}

/// Stationary Markov measure on the edges of an order-`K` block graph:
/// memory `K-1`, transitions along `K`-words.
#[derive(Clone, Debug)]
pub struct MarkovMeasure {
    graph: Arc<BlockGraph>,
    probs: Vec<f64>,
    pi: Vec<f64>,
}

impl MarkovMeasure {
    /// Builds from per-edge transition probabilities, normalizing each row
    /// and computing the stationary law.
    pub fn from_transitions(graph: Arc<BlockGraph>, weights: &[f64]) -> Result<Self> {
        assert_eq!(weights.len(), graph.edges().len());
        let mut probs = weights.to_vec();
        for s in 0..graph.state_count() {
            let range = graph.out_edges(s);
            let total: f64 = probs[range.clone()].iter().sum();
            if !(total > 0.0) || probs[range.clone()].iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidModel("transition rows must be nonnegative with positive sum".into()));
            }
            for p in &mut probs[range] {
                *p /= total;
            }
        }
        let logs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        let left = perron(&graph, &logs, None, true).right;
        let total: f64 = left.iter().sum();
        let pi = left.iter().map(|x| x / total).collect();
        Ok(MarkovMeasure { graph, probs, pi })
    }

    pub fn graph(&self) -> &BlockGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<BlockGraph> {
        self.graph.clone()
    }

    /// Number of past symbols the chain remembers.
    pub fn memory(&self) -> usize {
        self.graph.order() - 1
    }

    pub fn transition_probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Frequency of each edge word under the measure.
    pub fn edge_frequencies(&self) -> Vec<f64> {
        self.graph.edges().iter().enumerate().map(|(e, edge)| self.pi[edge.from] * self.probs[e]).collect()
    }

    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (e, edge) in self.graph.edges().iter().enumerate() {
            let p = self.probs[e];
            if p > 0.0 {
                h -= self.pi[edge.from] * p * p.ln();
            }
        }
        h
    }

    /// `∫ g dμ` for per-edge values laid out as `edge * d + coordinate`.
    pub fn edge_average(&self, values: &[f64], d: usize) -> Vec<f64> {
        let mut acc = vec![0.0; d];
        for (e, f) in self.edge_frequencies().into_iter().enumerate() {
            for c in 0..d {
                acc[c] += f * values[e * d + c];
            }
        }
        acc
    }

    /// Largest deviation of a row sum from 1 and of `πP` from `π`.
    pub fn consistency_error(&self) -> (f64, f64) {
        let mut row = 0.0f64;
        for s in 0..self.graph.state_count() {
            let total: f64 = self.probs[self.graph.out_edges(s)].iter().sum();
            row = row.max((total - 1.0).abs());
        }
        let mut next = vec![0.0; self.pi.len()];
        for (e, edge) in self.graph.edges().iter().enumerate() {
            next[edge.to] += self.pi[edge.from] * self.probs[e];
        }
        let stat = next.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (row, stat)
    }

    /// Random full-support measure on the order-`order` block graph.
    pub fn random(graph: Arc<BlockGraph>, rng: &mut impl Rng) -> Self {
        let w: Vec<f64> = (0..graph.edges().len()).map(|_| rng.gen_range(0.05..1.0)).collect();
        MarkovMeasure::from_transitions(graph, &w).expect("positive weights")
    }
}

/// Equilibrium measure of edge weights `w`: `p_e = exp(w_e) r(v) / (λ r(u))`.
pub fn equilibrium_of_weights(graph: Arc<BlockGraph>, w: &[f64], warm: Option<&[f64]>) -> (MarkovMeasure, Perron) {
    let right = perron(&graph, w, warm, false);
    let left = perron(&graph, w, None, true);
    let lambda = right.log_lambda;
    let probs: Vec<f64> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| (w[e] - lambda).exp() * right.right[edge.to] / right.right[edge.from])
        .collect();
    let mut pi: Vec<f64> = left.right.iter().zip(&right.right).map(|(l, r)| l * r).collect();
    let total: f64 = pi.iter().sum();
    for x in &mut pi {
        *x /= total;
    }
    // Renormalize rows to absorb the residual of the power iteration.
    let mut measure = MarkovMeasure { graph: graph.clone(), probs, pi };
    for s in 0..graph.state_count() {
        let r = graph.out_edges(s);
        let total: f64 = measure.probs[r.clone()].iter().sum();
        for p in &mut measure.probs[r] {
            *p /= total;
        }
    }
    (measure, right)
}

/// The equilibrium Markov measure of a locally constant scalar potential on
/// the order-`max(k, 2)` block graph.
pub fn equilibrium_markov(sft: &Sft, potential: &Potential, k: usize) -> Result<MarkovMeasure> {
    let table = potential
        .table()
        .ok_or_else(|| Error::Unsupported("equilibrium measures need a locally constant potential".into()))?;
    if potential.dim() != 1 {
        return Err(Error::InvalidModel("equilibrium measures need a scalar potential".into()));
    }
    if table.window() > k.max(2) {
        return Err(Error::WindowMismatch { window: table.window(), order: k.max(2) });
    }
    let graph = Arc::new(BlockGraph::new(sft, k)?);
    let w = table.edge_values(&graph)?;
    Ok(equilibrium_of_weights(graph, &w, None).0)
}

/// Entropy and potential averages of a measure.
#[derive(Clone, Debug, Serialize)]
pub struct Functionals {
    pub entropy: f64,
    /// `Φ*(μ)` for each potential, each a vector of length `d`.
    pub averages: Vec<Vec<f64>>,
}

pub fn measure_functionals(measure: &MarkovMeasure, potentials: &[&Potential]) -> Result<Functionals> {
    let mut averages = Vec::new();
    for p in potentials {
        let table = p
            .table()
            .ok_or_else(|| Error::Unsupported("averages need locally constant potentials".into()))?;
        if table.window() > measure.graph.order() {
            return Err(Error::WindowMismatch { window: table.window(), order: measure.graph.order() });
        }
        let vals = table.edge_values(&measure.graph)?;
        averages.push(measure.edge_average(&vals, table.dim()));
    }
    Ok(Functionals { entropy: measure.entropy(), averages })
}
