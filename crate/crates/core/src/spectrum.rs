//! The counting spectrum `Λ(α)` and the conditional variational spectrum
//! `E(α) = sup{h_μ / −Ψ_*(μ) : Φ_*(μ) = α}`.
//!
//! `E` is computed through the dual `inf_q T(q)`, where `T(q)` solves
//! `P(q·(φ − α) + T ψ) = 0`, and cross-checked against a direct primal
//! maximization over Markov measures (see [`crate::primal`]).

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{CoverClass, WeakGibbsMetric};
use crate::numeric::{brent_root, golden_section_max, nelder_mead, solve_dense};
use crate::potential::Potential;
use crate::pressure::{equilibrium_of_weights, perron, MarkovMeasure};
use crate::region::Region;
use crate::sft::{cycle_mean_hull, BlockGraph, CycleMeanHull, HullMethod, Sft, DEFAULT_CYCLE_BUDGET};

/// Distance to `∂L_Φ` below which `α` is pulled into the relative interior.
pub const BOUNDARY_MARGIN: f64 = 1e-9;

/// Cylinder-mean hull `L_Φ^{(k)}` of a discretized potential.
pub fn l_phi(sft: &Sft, potential: &Potential, k: usize) -> Result<CycleMeanHull> {
    let phi = potential.discretize(sft, k)?;
    let table = phi.table().expect("discretized potentials are tables");
    let graph = BlockGraph::new(sft, k.max(table.window()))?;
    let vals = table.edge_values(&graph)?;
    let method = if phi.dim() == 2 { HullMethod::SupportQueries } else { HullMethod::SimpleCycles };
    cycle_mean_hull(&graph, &vals, phi.dim(), method, DEFAULT_CYCLE_BUDGET)
}

/// Everything needed to evaluate `E(α)` for one `(Σ_A, Ψ, Φ, k)`.
#[derive(Clone, Debug)]
pub struct SpectrumModel {
    sft: Sft,
    k: usize,
    d: usize,
    graph: Arc<BlockGraph>,
    phi_vals: Vec<f64>,
    psi_vals: Vec<f64>,
    psi_const: Option<f64>,
    psi_lo: f64,
    psi_hi: f64,
    hull: CycleMeanHull,
}

impl SpectrumModel {
    /// Discretizes `Φ` and `Ψ` to window `k` and builds the order-`max(k, 2)`
    /// block graph carrying both.
    pub fn new(sft: &Sft, metric: &WeakGibbsMetric, phi: &Potential, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidModel("k must be positive".into()));
        }
        let phi = phi.discretize(sft, k)?;
        let psi = metric.psi().discretize(sft, k)?;
        let pt = phi.table().expect("table");
        let st = psi.table().expect("table");
        let graph = Arc::new(BlockGraph::new(sft, k.max(pt.window()).max(st.window()))?);
        let phi_vals = pt.edge_values(&graph)?;
        let psi_vals = st.edge_values(&graph)?;
        let psi_lo = psi_vals.iter().copied().fold(f64::INFINITY, f64::min);
        let psi_hi = psi_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(psi_hi < 0.0) {
            return Err(Error::InvalidModel("discretized metric potential must stay negative".into()));
        }
        let psi_const = (psi_lo == psi_hi).then_some(psi_lo);
        let d = phi.dim();
        let method = if d == 2 { HullMethod::SupportQueries } else { HullMethod::SimpleCycles };
        let hull = cycle_mean_hull(&graph, &phi_vals, d, method, DEFAULT_CYCLE_BUDGET)?;
        Ok(SpectrumModel { sft: sft.clone(), k, d, graph, phi_vals, psi_vals, psi_const, psi_lo, psi_hi, hull })
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn graph(&self) -> &Arc<BlockGraph> {
        &self.graph
    }

    pub fn phi_values(&self) -> &[f64] {
        &self.phi_vals
    }

    pub fn psi_values(&self) -> &[f64] {
        &self.psi_vals
    }

    pub fn hull(&self) -> &CycleMeanHull {
        &self.hull
    }

    pub fn region(&self) -> &Region {
        &self.hull.region
    }

    fn weights(&self, alpha: &[f64], q: &[f64], t: f64) -> Vec<f64> {
        let d = self.d;
        (0..self.psi_vals.len())
            .map(|e| {
                let mut s = t * self.psi_vals[e];
                for c in 0..d {
                    s += q[c] * (self.phi_vals[e * d + c] - alpha[c]);
                }
                s
            })
            .collect()
    }

    /// `T(q)`: the root of `P(q·(φ − α) + T ψ) = 0`. `warm` carries a Perron
    /// vector between calls.
    pub fn t_of_q(&self, alpha: &[f64], q: &[f64], warm: &mut Vec<f64>) -> f64 {
        let base = self.weights(alpha, q, 0.0);
        let pressure = |t: f64, warm: &mut Vec<f64>| -> f64 {
            let w: Vec<f64> = base.iter().zip(&self.psi_vals).map(|(b, p)| b + t * p).collect();
            let res = perron(&self.graph, &w, Some(warm.as_slice()), false);
            *warm = res.right;
            res.log_lambda
        };
        let p0 = pressure(0.0, warm);
        if let Some(c) = self.psi_const {
            return p0 / -c;
        }
        // P(T) lies between P0 + T ψ_min and P0 + T ψ_max, which brackets the root.
        let a = p0 / -self.psi_lo;
        let b = p0 / -self.psi_hi;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            return 0.5 * (lo + hi);
        }
        let flo = pressure(lo, warm);
        let fhi = pressure(hi, warm);
        if flo <= 0.0 {
            return lo;
        }
        if fhi >= 0.0 {
            return hi;
        }
        brent_root(|t| pressure(t, warm), lo, hi, flo, fhi, 1e-15 * (1.0 + hi.abs()))
    }

    /// Equilibrium measure of `q·(φ − α) + T ψ` and its functionals.
    pub fn witness(&self, alpha: &[f64], q: &[f64], t: f64) -> Witness {
        let w = self.weights(alpha, q, t);
        let (mu, _) = equilibrium_of_weights(self.graph.clone(), &w, None);
        Witness::of(&mu, &self.phi_vals, &self.psi_vals, self.d)
    }

    /// The witness measure of a dual solution: the equilibrium state of
    /// `q*·(φ − α) + Ê ψ`, whose `Φ_*` is (nearly) `α`.
    pub fn witness_measure(&self, sol: &DualSolution) -> MarkovMeasure {
        let w = self.weights(&sol.alpha_used, &sol.q_star, sol.e_hat);
        equilibrium_of_weights(self.graph.clone(), &w, None).0
    }

    /// `E(α)` by the dual, with the witness measure as a primal certificate.
    pub fn variational(&self, alpha: &[f64], opts: &DualOptions) -> Result<DualSolution> {
        if alpha.len() != self.d {
            return Err(Error::InvalidModel(format!("alpha needs {} coordinates", self.d)));
        }
        let region = self.region();
        let used = region
            .clamp_to_relative_interior(alpha, opts.boundary_margin)
            .ok_or_else(|| Error::Infeasible(alpha.to_vec()))?;
        let clamped = used.as_slice() != alpha;

        // Directions normal to aff(L_Φ) do not change T, so optimize only
        // over the direction space of the hull.
        let basis = region_basis(region);
        let d0 = basis.len();
        let to_q = |t: &[f64]| -> Vec<f64> {
            let mut q = vec![0.0; self.d];
            for (ti, b) in t.iter().zip(&basis) {
                for c in 0..self.d {
                    q[c] += ti * b[c];
                }
            }
            q
        };
        let mut warm = vec![1.0; self.graph.state_count()];
        let mut evaluations = 0usize;
        let mut objective = |t: &[f64]| -> f64 {
            evaluations += 1;
            let v = self.t_of_q(&used, &to_q(t), &mut warm);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let mut best_t = vec![0.0; d0];
        let mut best_v = objective(&best_t);
        if d0 > 0 {
            for start in 0..=opts.restarts {
                let step = if start == 0 { 1.0 } else { 0.25 };
                let m = nelder_mead(&mut objective, &best_t, step, 1e-12, 1e-7, opts.max_evals);
                if m.value <= best_v {
                    best_v = m.value;
                    best_t = m.x;
                }
            }
        }
        // Newton polish on the first-order condition Φ_*(μ) = α.
        let gap_vec = |t: &[f64], tv: f64| -> (Vec<f64>, Witness) {
            let w = self.witness(&used, &to_q(t), tv);
            let g: Vec<f64> = basis
                .iter()
                .map(|b| (0..self.d).map(|c| b[c] * (w.phi[c] - used[c])).sum())
                .collect();
            (g, w)
        };
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (mut g, mut wit) = gap_vec(&best_t, best_v);
        for _ in 0..30 {
            if d0 == 0 || norm(&g) < 1e-13 {
                break;
            }
            let mut jac = vec![vec![0.0; d0]; d0];
            for j in 0..d0 {
                let h = 1e-6 * (1.0 + best_t[j].abs());
                let mut tp = best_t.clone();
                tp[j] += h;
                let vp = objective(&tp);
                let (gp, _) = gap_vec(&tp, vp);
                for i in 0..d0 {
                    jac[i][j] = (gp[i] - g[i]) / h;
                }
            }
            let Some(step) = solve_dense(jac, g.clone()) else { break };
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let cand: Vec<f64> = best_t.iter().zip(&step).map(|(t, s)| t - lambda * s).collect();
                let v = objective(&cand);
                if v.is_finite() {
                    let (gc, wc) = gap_vec(&cand, v);
                    if norm(&gc) < norm(&g) && v <= best_v + 1e-12 * (1.0 + best_v.abs()) {
                        best_t = cand;
                        best_v = v;
                        g = gc;
                        wit = wc;
                        improved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }

        let q_star = to_q(&best_t);
        let gap = wit.phi.iter().zip(&used).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let sol = DualSolution {
            alpha: alpha.to_vec(),
            alpha_used: used,
            clamped,
            e_hat: best_v,
            q_star,
            witness_gap: gap,
            witness_ratio: wit.ratio(),
            witness_entropy: wit.entropy,
            witness_phi: wit.phi,
            witness_psi: wit.psi,
            evaluations,
        };
        if gap > opts.tol {
            return Err(Error::DualPrimalGap { gap, tol: opts.tol });
        }
        Ok(sol)
    }

    /// Like [`variational`](Self::variational) but keeps solutions whose
    /// witness misses the level, reporting the gap instead of failing.
    pub fn variational_lenient(&self, alpha: &[f64], opts: &DualOptions) -> Result<DualSolution> {
        let relaxed = DualOptions { tol: f64::INFINITY, ..opts.clone() };
        self.variational(alpha, &relaxed)
    }

    /// Largest `Ê` over `L_Φ`, by refining around the best of `seeds`.
    pub fn maximum(&self, seeds: &[Vec<f64>], opts: &DualOptions) -> Result<(Vec<f64>, f64)> {
        let eval = |a: &[f64]| -> f64 {
            if !self.region().contains(a, 1e-12) {
                return f64::NEG_INFINITY;
            }
            self.variational_lenient(a, opts).map_or(f64::NEG_INFINITY, |s| s.e_hat)
        };
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in seeds {
            let v = eval(s);
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((s.clone(), v));
            }
        }
        let (x0, v0) = best.ok_or(Error::EmptyIntersection)?;
        if self.d == 1 {
            let (lo, hi) = self.region().interval_bounds().unwrap();
            let span = (hi - lo).max(1e-12);
            let step = span / (seeds.len().max(2) - 1) as f64;
            let a = (x0[0] - step).max(lo);
            let b = (x0[0] + step).min(hi);
            let (x, v) = golden_section_max(|x| eval(&[x]), a, b, 1e-10 * span);
            return Ok(if v >= v0 { (vec![x], v) } else { (x0, v0) });
        }
        let m = nelder_mead(|a| -eval(a), &x0, 0.05, 1e-13, 1e-9, 2000);
        Ok(if -m.value >= v0 { (m.x, -m.value) } else { (x0, v0) })
    }
}

/// Orthonormal basis of the direction space of a region.
pub(crate) fn region_basis(region: &Region) -> Vec<Vec<f64>> {
    let d = region.ambient_dim();
    let verts = region.vertices();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in &verts[1..] {
        let mut r: Vec<f64> = v.iter().zip(&verts[0]).map(|(a, b)| a - b).collect();
        for b in &basis {
            let c: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
            for i in 0..d {
                r[i] -= c * b[i];
            }
        }
        let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = v.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if n > 1e-10 * scale && basis.len() < region.affine_dim() {
            basis.push(r.iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// Functionals of a candidate measure.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub entropy: f64,
    pub phi: Vec<f64>,
    pub psi: f64,
}

impl Witness {
    pub fn of(mu: &MarkovMeasure, phi_vals: &[f64], psi_vals: &[f64], d: usize) -> Witness {
        Witness { entropy: mu.entropy(), phi: mu.edge_average(phi_vals, d), psi: mu.edge_average(psi_vals, 1)[0] }
    }

    /// `h / −Ψ_*`.
    pub fn ratio(&self) -> f64 {
        self.entropy / -self.psi
    }
}

/// Tuning of the dual solver.
#[derive(Clone, Debug)]
pub struct DualOptions {
    /// Largest accepted `|Φ_*(witness) − α|`.
    pub tol: f64,
    /// Extra Nelder-Mead restarts from the incumbent.
    pub restarts: usize,
    pub max_evals: usize,
    pub boundary_margin: f64,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions { tol: 1e-6, restarts: 2, max_evals: 4000, boundary_margin: BOUNDARY_MARGIN }
    }
}

/// Output of the dual solver at one `α`.
#[derive(Clone, Debug, Serialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// `α` after the boundary clamp.
    pub alpha_used: Vec<f64>,
    pub clamped: bool,
    pub e_hat: f64,
    pub q_star: Vec<f64>,
    pub witness_gap: f64,
    pub witness_ratio: f64,
    pub witness_entropy: f64,
    pub witness_phi: Vec<f64>,
    pub witness_psi: f64,
    pub evaluations: usize,
}

/// `Ê(α)` for a single point.
pub fn variational_spectrum(
    sft: &Sft,
    metric: &WeakGibbsMetric,
    potential: &Potential,
    alpha: &[f64],
    k: usize,
    opts: &DualOptions,
) -> Result<DualSolution> {
    SpectrumModel::new(sft, metric, potential, k)?.variational(alpha, opts)
}

/// `f(α, n, ε)` from a precomputed cover: the number of balls whose range of
/// averages meets the open ball `B(α, ε)`.
pub fn count_from_classes(classes: &[CoverClass], alpha: &[f64], eps: f64) -> u128 {
    classes.iter().filter(|c| c.distance_to_average_box(alpha) < eps).map(|c| c.count).sum()
}

/// Result of [`counting_spectrum`].
#[derive(Clone, Debug, Serialize)]
pub struct CountingEstimate {
    pub n: usize,
    pub eps: f64,
    pub count: u128,
    /// `log f / n`; `-inf` when no ball qualifies.
    pub lambda_hat: f64,
}

/// `f(α, n, ε)` and `Λ̂ = log f / n`.
pub fn counting_spectrum(
    metric: &WeakGibbsMetric,
    potential: &Potential,
    alpha: &[f64],
    n: usize,
    eps: f64,
    budget: u64,
) -> Result<CountingEstimate> {
    if !(eps > 0.0) {
        return Err(Error::InvalidModel("eps must be positive".into()));
    }
    let classes = metric.cover_classes(Some(potential), n as f64, budget)?;
    let count = count_from_classes(&classes, alpha, eps);
    Ok(CountingEstimate { n, eps, count, lambda_hat: (count as f64).ln() / n as f64 })
}

/// Default radius for level `n`: `max(0.25/√n, 0.02)`.
pub fn default_eps(n: usize) -> f64 {
    (0.25 / (n as f64).sqrt()).max(0.02)
}

/// Default `(n, ε)` schedule.
pub fn default_schedule() -> Vec<(usize, f64)> {
    [8, 12, 16, 20, 24].iter().map(|&n| (n, default_eps(n))).collect()
}

/// `Λ̂` along a schedule; the last row is the estimate.
pub fn lambda_estimate(
    metric: &WeakGibbsMetric,
    potential: &Potential,
    alpha: &[f64],
    schedule: &[(usize, f64)],
    budget: u64,
) -> Result<Vec<CountingEstimate>> {
    if schedule.is_empty() {
        return Err(Error::InvalidModel("empty schedule".into()));
    }
    if schedule.windows(2).any(|p| p[1].0 < p[0].0 || p[1].1 > p[0].1) {
        return Err(Error::InvalidModel("schedule needs increasing n and decreasing eps".into()));
    }
    schedule.iter().map(|&(n, eps)| counting_spectrum(metric, potential, alpha, n, eps, budget)).collect()
}

/// One row of a [`SpectrumGrid`].
#[derive(Clone, Debug, Serialize)]
pub struct GridPoint {
    pub alpha: Vec<f64>,
    pub lambda_hat: f64,
    pub count: u128,
    pub e_hat: f64,
    pub in_l: bool,
    pub in_ri_l: bool,
    pub q_star: Vec<f64>,
    pub witness_gap: f64,
    pub clamped: bool,
    /// Primal oracle value where the grid point was cross-checked.
    pub primal: Option<f64>,
}

/// `Λ̂` and `Ê` on a grid of levels.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumGrid {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    pub cover_size: u128,
    pub d_hat: f64,
    pub l_phi_vertices: Vec<Vec<f64>>,
    pub l_phi_affine_dim: usize,
    pub points: Vec<GridPoint>,
}

/// Options for [`spectrum_grid`].
#[derive(Clone, Debug)]
pub struct GridOptions {
    pub n: usize,
    pub eps: f64,
    pub budget: u64,
    pub dual: DualOptions,
    /// Every `primal_every`-th interior point is cross-checked against the
    /// primal oracle (0 disables).
    pub primal_every: usize,
}

impl GridOptions {
    pub fn new(n: usize) -> Self {
        GridOptions {
            n,
            eps: default_eps(n),
            budget: crate::metric::budget_from_env(),
            dual: DualOptions::default(),
            primal_every: 0,
        }
    }
}

/// Evenly spaced levels across `L_Φ` (`per_axis` points per coordinate of
/// the bounding box, filtered to the hull).
pub fn auto_grid(region: &Region, per_axis: usize) -> Vec<Vec<f64>> {
    if let Some((lo, hi)) = region.interval_bounds() {
        if per_axis <= 1 {
            return vec![vec![0.5 * (lo + hi)]];
        }
        return (0..per_axis).map(|i| vec![lo + (hi - lo) * i as f64 / (per_axis - 1) as f64]).collect();
    }
    region.grid(per_axis)
}

/// Computes `Λ̂` and `Ê` at every grid point, in parallel.
pub fn spectrum_grid(
    model: &SpectrumModel,
    metric: &WeakGibbsMetric,
    potential: &Potential,
    alphas: &[Vec<f64>],
    opts: &GridOptions,
) -> Result<SpectrumGrid> {
    let classes = metric.cover_classes(Some(potential), opts.n as f64, opts.budget)?;
    let cover_size: u128 = classes.iter().map(|c| c.count).sum();
    let region = model.region();
    let points: Vec<Result<GridPoint>> = alphas
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let count = count_from_classes(&classes, a, opts.eps);
            let in_l = region.contains(a, 1e-9);
            let in_ri_l = region.in_relative_interior(a, 1e-9);
            let (e_hat, q_star, witness_gap, clamped) = if in_l {
                let s = model.variational_lenient(a, &opts.dual)?;
                (s.e_hat, s.q_star, s.witness_gap, s.clamped)
            } else {
                (f64::NAN, vec![f64::NAN; a.len()], f64::NAN, false)
            };
            let primal = if opts.primal_every > 0 && in_ri_l && i % opts.primal_every == 0 {
                crate::primal::primal_spectrum(model, a).ok().map(|p| p.value)
            } else {
                None
            };
            Ok(GridPoint {
                alpha: a.clone(),
                lambda_hat: (count as f64).ln() / opts.n as f64,
                count,
                e_hat,
                in_l,
                in_ri_l,
                q_star,
                witness_gap,
                clamped,
                primal,
            })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SpectrumGrid {
        d: model.dim(),
        k: model.k(),
        n: opts.n,
        eps: opts.eps,
        cover_size,
        d_hat: (cover_size as f64).ln() / opts.n as f64,
        l_phi_vertices: region.vertices(),
        l_phi_affine_dim: region.affine_dim(),
        points,
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

impl SpectrumGrid {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let mut header: Vec<String> = (0..self.d).map(|c| format!("alpha{c}")).collect();
        header.extend(["lambda_hat", "e_hat", "in_L", "in_riL"].map(String::from));
        header.extend((0..self.d).map(|c| format!("q_star{c}")));
        header.push("witness_gap".into());
        writeln!(out, "{}", header.join(","))?;
        for p in &self.points {
            let mut row: Vec<String> = p.alpha.iter().map(|&x| fmt_float(x)).collect();
            row.push(fmt_float(p.lambda_hat));
            row.push(fmt_float(p.e_hat));
            row.push(u8::from(p.in_l).to_string());
            row.push(u8::from(p.in_ri_l).to_string());
            row.extend(p.q_star.iter().map(|&x| fmt_float(x)));
            row.push(fmt_float(p.witness_gap));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("grid serializes")
    }

    /// `(α, Ê)` pairs for one-dimensional grids, skipping infeasible points.
    pub fn e_hat_series(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter(|p| p.in_l).map(|p| (p.alpha[0], p.e_hat)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binary_entropy;

    fn binary() -> (Sft, WeakGibbsMetric, Potential) {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::standard(&s);
        let p = Potential::digit(&s, 1);
        (s, g, p)
    }

    #[test]
    fn l_phi_digit_is_unit_interval() {
        let (s, _, p) = binary();
        let h = l_phi(&s, &p, 1).unwrap();
        assert_eq!(h.region.interval_bounds(), Some((0.0, 1.0)));
    }

    #[test]
    fn binary_entropy_spectrum() {
        let (s, g, p) = binary();
        let model = SpectrumModel::new(&s, &g, &p, 1).unwrap();
        for &a in &[0.1, 0.25, 0.5, 0.8] {
            let sol = model.variational(&[a], &DualOptions::default()).unwrap();
            let exact = binary_entropy(a) / 2f64.ln();
            assert!((sol.e_hat - exact).abs() < 1e-9, "a={a}: {} vs {exact}", sol.e_hat);
            assert!(sol.witness_gap < 1e-9);
        }
        let half = model.variational(&[0.5], &DualOptions::default()).unwrap();
        assert!((half.e_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_point_is_clamped() {
        let (s, g, p) = binary();
        let model = SpectrumModel::new(&s, &g, &p, 1).unwrap();
        let sol = model.variational(&[0.0], &DualOptions::default()).unwrap();
        assert!(sol.clamped);
        assert!(sol.e_hat.abs() < 1e-6);
        assert_eq!(model.variational(&[1.2], &DualOptions::default()).unwrap_err().kind(), "Infeasible");
    }

    #[test]
    fn counting_matches_binomial() {
        let (_, _, p) = binary();
        let s = Sft::full(2).unwrap();
        // Cover words of length 4 for the standard metric at level 4 log 2.
        let g = WeakGibbsMetric::standard(&s);
        let n = 4.0 * 2f64.ln() - 1e-9;
        let classes = g.cover_classes(Some(&p), n, 1 << 20).unwrap();
        assert!(classes.iter().all(|c| c.len == 4));
        assert_eq!(count_from_classes(&classes, &[0.5], 0.05), 6);
        assert_eq!(count_from_classes(&classes, &[1.5], 0.05), 0);
        assert_eq!(count_from_classes(&classes, &[0.5], 10.0), 16);
    }

    #[test]
    fn non_uniform_metric_dual_matches_bernoulli_closed_form() {
        // ψ = log r_{x_1}; for a Bernoulli(p) measure with frequency a of symbol 2,
        // E(a) = H(a) / -(a log r2 + (1-a) log r1).
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::per_symbol_ratios(&s, &[0.5, 0.25]).unwrap();
        let p = Potential::digit(&s, 1);
        let model = SpectrumModel::new(&s, &g, &p, 1).unwrap();
        for &a in &[0.2, 0.38, 0.7] {
            let sol = model.variational(&[a], &DualOptions::default()).unwrap();
            let exact = binary_entropy(a) / (a * 4f64.ln() + (1.0 - a) * 2f64.ln());
            assert!((sol.e_hat - exact).abs() < 1e-9);
        }
        let seeds = auto_grid(model.region(), 21);
        let (_, max) = model.maximum(&seeds, &DualOptions::default()).unwrap();
        assert!((max - g.bowen_root().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn grid_csv_shape() {
        let (s, g, p) = binary();
        let model = SpectrumModel::new(&s, &g, &p, 1).unwrap();
        let alphas = auto_grid(model.region(), 5);
        let mut opts = GridOptions::new(8);
        opts.primal_every = 2;
        let grid = spectrum_grid(&model, &g, &p, &alphas, &opts).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "alpha0,lambda_hat,e_hat,in_L,in_riL,q_star0,witness_gap");
        assert_eq!(lines.len(), 6);
        assert!(grid.points.iter().any(|p| p.primal.is_some()));
        for p in &grid.points {
            if let Some(v) = p.primal {
                assert!(p.e_hat >= v - 1e-9 && p.e_hat - v < 1e-6);
            }
        }
    }
}
