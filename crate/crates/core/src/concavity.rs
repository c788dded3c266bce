//! Shape diagnostics for sampled one-dimensional spectra: quasi-concavity,
//! monotonicity away from the maximum and weak concavity.

use serde::Serialize;

/// Outcome of one shape test.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeTest {
    pub pass: bool,
    /// Offending abscissae: a triple `(α, γ, β)` for quasi-concavity, a pair
    /// of neighbours for monotonicity, `(α, β, λ)` for weak concavity.
    pub counterexample: Option<Vec<f64>>,
}

impl ShapeTest {
    fn ok() -> Self {
        ShapeTest { pass: true, counterexample: None }
    }

    fn fail(witness: Vec<f64>) -> Self {
        ShapeTest { pass: false, counterexample: Some(witness) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub tol: f64,
    pub c: f64,
    pub quasi_concave: ShapeTest,
    pub monotone_from_max: ShapeTest,
    pub weakly_concave: ShapeTest,
    /// Smallest `c` from [`C_LADDER`] for which the witness search passes.
    pub smallest_passing_c: Option<f64>,
    pub argmax: f64,
}

/// Constants tried when looking for the smallest passing `c`.
pub const C_LADDER: [f64; 10] = [1.0, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0];

const LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Runs the three tests on samples `(α_i, h(α_i))`. Non-finite values are
/// dropped; the samples are sorted by `α`.
pub fn weak_concavity_check(samples: &[(f64, f64)], c: f64, tol: f64) -> ConcavityReport {
    let mut pts: Vec<(f64, f64)> = samples.iter().copied().filter(|(a, v)| a.is_finite() && v.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let argmax_idx = argmax(&pts);
    let smallest_passing_c = C_LADDER.iter().copied().find(|&cc| weak_witness(&pts, cc, tol).pass);
    ConcavityReport {
        tol,
        c,
        quasi_concave: quasi_concavity(&pts, tol),
        monotone_from_max: monotone_from_max(&pts, argmax_idx, tol),
        weakly_concave: weak_witness(&pts, c, tol),
        smallest_passing_c,
        argmax: pts.get(argmax_idx).map_or(f64::NAN, |p| p.0),
    }
}

/// First index of the largest value (ties go to the smallest `α`).
fn argmax(pts: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.1 > pts[best].1 {
            best = i;
        }
    }
    best
}

fn quasi_concavity(pts: &[(f64, f64)], tol: f64) -> ShapeTest {
    let n = pts.len();
    if n < 3 {
        return ShapeTest::ok();
    }
    // Best value strictly to the left / right of each index.
    let mut left = vec![0usize; n];
    for i in 1..n {
        left[i] = if i == 1 || pts[i - 1].1 > pts[left[i - 1]].1 { i - 1 } else { left[i - 1] };
    }
    let mut right = vec![n - 1; n];
    for i in (0..n - 1).rev() {
        right[i] = if i == n - 2 || pts[i + 1].1 > pts[right[i + 1]].1 { i + 1 } else { right[i + 1] };
    }
    let mut worst: Option<(f64, usize)> = None;
    for j in 1..n - 1 {
        let bound = pts[left[j]].1.min(pts[right[j]].1);
        let deficit = bound - pts[j].1;
        if deficit > tol && worst.is_none_or(|(d, _)| deficit > d) {
            worst = Some((deficit, j));
        }
    }
    match worst {
        None => ShapeTest::ok(),
        Some((_, j)) => ShapeTest::fail(vec![pts[left[j]].0, pts[j].0, pts[right[j]].0]),
    }
}

fn monotone_from_max(pts: &[(f64, f64)], top: usize, tol: f64) -> ShapeTest {
    for i in 0..top {
        if pts[i].1 > pts[i + 1].1 + tol {
            return ShapeTest::fail(vec![pts[i].0, pts[i + 1].0]);
        }
    }
    for i in top..pts.len().saturating_sub(1) {
        if pts[i + 1].1 > pts[i].1 + tol {
            return ShapeTest::fail(vec![pts[i].0, pts[i + 1].0]);
        }
    }
    ShapeTest::ok()
}

/// Piecewise-linear interpolation of the samples.
fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 < x);
    if i == 0 {
        return pts[0].1;
    }
    if i == pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (a, b) = (pts[i - 1], pts[i]);
    if b.0 == a.0 {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Searches, for every pair and a grid of ratios `γ_1/γ_2 ∈ [1/c², c²]`, for
/// reweightings that make the inequality hold at all three `λ`.
fn weak_witness(pts: &[(f64, f64)], c: f64, tol: f64) -> ShapeTest {
    let n = pts.len();
    // Only the ratio of the two weights matters.
    let steps = 40;
    let ratios: Vec<f64> = if c <= 1.0 {
        vec![1.0]
    } else {
        (0..=steps).map(|s| (2.0 * c.ln() * (s as f64 / steps as f64 * 2.0 - 1.0)).exp()).collect()
    };
    for i in 0..n {
        for j in i + 1..n {
            let (a, ha) = pts[i];
            let (b, hb) = pts[j];
            let holds = |r: f64, lam: f64| {
                let wa = lam * r;
                let wb = 1.0 - lam;
                let x = (wa * a + wb * b) / (wa + wb);
                lam * ha + (1.0 - lam) * hb <= interpolate(pts, x) + tol
            };
            if !ratios.iter().any(|&r| LAMBDAS.iter().all(|&lam| holds(r, lam))) {
                let lam = LAMBDAS.iter().copied().find(|&lam| !holds(1.0, lam)).unwrap_or(0.5);
                return ShapeTest::fail(vec![a, b, lam]);
            }
        }
    }
    ShapeTest::ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binary_entropy;

    fn entropy_samples(n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|i| {
            let a = i as f64 / (n - 1) as f64;
            (a, binary_entropy(a) / 2f64.ln())
        }).collect()
    }

    #[test]
    fn concave_function_passes_with_c_one() {
        let r = weak_concavity_check(&entropy_samples(41), 1.0, 1e-12);
        assert!(r.quasi_concave.pass && r.monotone_from_max.pass && r.weakly_concave.pass);
        assert_eq!(r.smallest_passing_c, Some(1.0));
        assert_eq!(r.argmax, 0.5);
    }

    #[test]
    fn dip_is_reported() {
        let mut s = entropy_samples(21);
        s[6].1 -= 0.3;
        let r = weak_concavity_check(&s, 1.0, 0.02);
        assert!(!r.quasi_concave.pass);
        let w = r.quasi_concave.counterexample.unwrap();
        assert_eq!(w[1], s[6].0);
        assert!(w[0] < w[1] && w[1] < w[2]);
        assert!(!r.monotone_from_max.pass);
        assert!(!r.weakly_concave.pass);
    }

    #[test]
    fn reweighting_helps_a_skewed_bump() {
        // Quasi-concave but not concave: a steep rise followed by a plateau.
        let s: Vec<(f64, f64)> = (0..=20).map(|i| {
            let a = i as f64 / 20.0;
            (a, (8.0 * a).min(1.0) + 0.01 * a)
        }).collect();
        let r = weak_concavity_check(&s, 1.0, 1e-9);
        assert!(r.quasi_concave.pass);
        assert!(!r.weakly_concave.pass || r.smallest_passing_c == Some(1.0));
        if let Some(c) = r.smallest_passing_c {
            assert!(weak_concavity_check(&s, c, 1e-9).weakly_concave.pass);
        }
    }
}
