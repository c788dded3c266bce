//! Direct maximization of `h_μ / −Ψ_*(μ)` over stationary Markov measures
//! with `Φ_*(μ) = α`, independent of the pressure machinery.
//!
//! Measures are parametrized by their edge frequencies `ν` on the block
//! graph: flow conservation and `Σ ν = 1` are linear, `Φ_*` and `Ψ_*` are
//! linear and `h(ν) = −Σ ν_e log(ν_e / ν_{from(e)})` is concave. The ratio is
//! handled by Dinkelbach iterations, each a concave program solved by an
//! infeasible-start Newton method on the KKT system.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::solve_dense;
use crate::pressure::MarkovMeasure;
use crate::spectrum::{region_basis, SpectrumModel};

/// Largest block graph the dense KKT solve accepts.
pub const MAX_PRIMAL_EDGES: usize = 1500;

#[derive(Clone, Debug, Serialize)]
pub struct PrimalSolution {
    pub value: f64,
    pub entropy: f64,
    pub phi: Vec<f64>,
    pub psi: f64,
    /// Edge frequencies of the maximizer.
    pub frequencies: Vec<f64>,
    /// Largest violation of the linear constraints.
    pub feasibility: f64,
    pub newton_steps: usize,
}

struct Problem<'a> {
    model: &'a SpectrumModel,
    from: Vec<usize>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    alpha: Vec<f64>,
}

impl Problem<'_> {
    fn entropy(&self, nu: &[f64]) -> f64 {
        let out = self.out_mass(nu);
        nu.iter().zip(&self.from).map(|(&v, &u)| if v > 0.0 { -v * (v / out[u]).ln() } else { 0.0 }).sum()
    }

    fn out_mass(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.model.graph().state_count()];
        for (&v, &u) in nu.iter().zip(&self.from) {
            out[u] += v;
        }
        out
    }

    fn psi(&self, nu: &[f64]) -> f64 {
        nu.iter().zip(self.model.psi_values()).map(|(a, b)| a * b).sum()
    }

    /// Gradient of `F = −h − tΨ_*` plus the dual term, and the primal residual.
    fn residual(&self, nu: &[f64], w: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let out = self.out_mass(nu);
        let psi = self.model.psi_values();
        let mut g: Vec<f64> = (0..nu.len()).map(|e| (nu[e] / out[self.from[e]]).ln() - t * psi[e]).collect();
        for (row, &wi) in self.rows.iter().zip(w) {
            for e in 0..nu.len() {
                g[e] += row[e] * wi;
            }
        }
        let r: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| row.iter().zip(nu).map(|(a, x)| a * x).sum::<f64>() - b)
            .collect();
        (g, r)
    }

    /// Maximizes `h + tΨ_*` on the constraint set, starting from `nu`.
    fn solve_inner(&self, nu: &mut Vec<f64>, w: &mut Vec<f64>, t: f64, steps: &mut usize) -> Result<()> {
        let ne = nu.len();
        let nc = self.rows.len();
        let norm = |g: &[f64], r: &[f64]| g.iter().chain(r).map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..200 {
            let (g, r) = self.residual(nu, w, t);
            let res = norm(&g, &r);
            if res < 1e-12 {
                return Ok(());
            }
            *steps += 1;
            let out = self.out_mass(nu);
            let n = ne + nc;
            let mut kkt = vec![vec![0.0; n]; n];
            for e in 0..ne {
                kkt[e][e] = 1.0 / nu[e] + 1e-12;
                for f in 0..ne {
                    if self.from[e] == self.from[f] {
                        kkt[e][f] -= 1.0 / out[self.from[e]];
                    }
                }
            }
            for (i, row) in self.rows.iter().enumerate() {
                for e in 0..ne {
                    kkt[ne + i][e] = row[e];
                    kkt[e][ne + i] = row[e];
                }
                kkt[ne + i][ne + i] = -1e-14;
            }
            let rhs: Vec<f64> = g.iter().chain(&r).map(|x| -x).collect();
            let delta = solve_dense(kkt, rhs).ok_or_else(|| Error::Unsupported("singular KKT system".into()))?;
            let (dnu, dw) = delta.split_at(ne);
            let mut s: f64 = 1.0;
            for e in 0..ne {
                if dnu[e] < 0.0 {
                    s = s.min(-0.99 * nu[e] / dnu[e]);
                }
            }
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = nu.iter().zip(dnu).map(|(x, d)| x + s * d).collect();
                let wc: Vec<f64> = w.iter().zip(dw).map(|(x, d)| x + s * d).collect();
                if cand.iter().all(|&x| x > 0.0) {
                    let (gc, rc) = self.residual(&cand, &wc, t);
                    if norm(&gc, &rc) <= (1.0 - 0.01 * s) * res {
                        *nu = cand;
                        *w = wc;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !accepted {
                let (_, r) = self.residual(nu, w, t);
                if r.iter().all(|x| x.abs() < 1e-10) {
                    return Ok(());
                }
                return Err(Error::Infeasible(self.alpha.clone()));
            }
        }
        Ok(())
    }
}

/// `max{h_μ / −Ψ_*(μ) : Φ_*(μ) = α}` over Markov measures on the model's
/// block graph. Requires `α` in the relative interior of `L_Φ`.
pub fn primal_spectrum(model: &SpectrumModel, alpha: &[f64]) -> Result<PrimalSolution> {
    let graph = model.graph();
    let ne = graph.edges().len();
    if ne > MAX_PRIMAL_EDGES {
        return Err(Error::GraphTooLarge(format!("{ne} edges exceed the primal limit {MAX_PRIMAL_EDGES}")));
    }
    if !model.region().in_relative_interior(alpha, 1e-12) {
        return Err(Error::Infeasible(alpha.to_vec()));
    }
    let d = model.dim();
    let from: Vec<usize> = graph.edges().iter().map(|e| e.from).collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in 1..graph.state_count() {
        let mut row = vec![0.0; ne];
        for (e, edge) in graph.edges().iter().enumerate() {
            if edge.to == s {
                row[e] += 1.0;
            }
            if edge.from == s {
                row[e] -= 1.0;
            }
        }
        rows.push(row);
        rhs.push(0.0);
    }
    rows.push(vec![1.0; ne]);
    rhs.push(1.0);
    for b in region_basis(model.region()) {
        let phi = model.phi_values();
        rows.push((0..ne).map(|e| (0..d).map(|c| b[c] * phi[e * d + c]).sum()).collect());
        rhs.push((0..d).map(|c| b[c] * alpha[c]).sum());
    }
    let problem = Problem { model, from, rows, rhs, alpha: alpha.to_vec() };

    let uniform = MarkovMeasure::from_transitions(graph.clone(), &vec![1.0; ne])?;
    let mut nu = uniform.edge_frequencies();
    let mut w = vec![0.0; problem.rows.len()];
    let mut t = 0.0;
    let mut steps = 0;
    for _ in 0..100 {
        problem.solve_inner(&mut nu, &mut w, t, &mut steps)?;
        let h = problem.entropy(&nu);
        let psi = problem.psi(&nu);
        let gap = h + t * psi;
        t = h / -psi;
        if gap.abs() < 1e-14 * (1.0 + t.abs()) {
            break;
        }
    }
    let (_, r) = problem.residual(&nu, &w, t);
    let phi_vals = model.phi_values();
    let phi: Vec<f64> = (0..d).map(|c| (0..ne).map(|e| nu[e] * phi_vals[e * d + c]).sum()).collect();
    Ok(PrimalSolution {
        value: t,
        entropy: problem.entropy(&nu),
        psi: problem.psi(&nu),
        phi,
        feasibility: r.iter().fold(0.0, |m, x| m.max(x.abs())),
        frequencies: nu,
        newton_steps: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::WeakGibbsMetric;
    use crate::numeric::binary_entropy;
    use crate::potential::Potential;
    use crate::sft::Sft;

    #[test]
    fn binary_primal_matches_entropy() {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::standard(&s);
        let model = SpectrumModel::new(&s, &g, &Potential::digit(&s, 1), 1).unwrap();
        for &a in &[0.1, 0.5, 0.77] {
            let p = primal_spectrum(&model, &[a]).unwrap();
            assert!((p.value - binary_entropy(a) / 2f64.ln()).abs() < 1e-10, "{a}: {}", p.value);
            assert!(p.feasibility < 1e-10);
        }
    }

    #[test]
    fn golden_mean_quarter() {
        // Order-1 chains with frequency 1/4 of symbol 2 force P(1→1) = 2/3.
        let s = Sft::golden_mean();
        let g = WeakGibbsMetric::standard(&s);
        let model = SpectrumModel::new(&s, &g, &Potential::digit(&s, 1), 1).unwrap();
        let p = primal_spectrum(&model, &[0.25]).unwrap();
        let exact = 0.75 * binary_entropy(2.0 / 3.0) / 2f64.ln();
        assert!((p.value - exact).abs() < 1e-10);
        let d = model.variational(&[0.25], &Default::default()).unwrap();
        assert!((d.e_hat - p.value).abs() < 1e-9);
    }

    #[test]
    fn rejects_boundary() {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::standard(&s);
        let model = SpectrumModel::new(&s, &g, &Potential::digit(&s, 1), 1).unwrap();
        assert!(primal_spectrum(&model, &[1.0]).is_err());
    }
}
