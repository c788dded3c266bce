//! Self-similar realizations: IFS specs, coding maps, the carpet catalog and
//! the identity potential on the coding space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::WeakGibbsMetric;
use crate::potential::Potential;
use crate::sft::{Sft, Word};

/// `x ↦ ρ x + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub rho: f64,
    pub c: Vec<f64>,
}

/// A similarity IFS without rotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub maps: Vec<Similarity>,
    #[serde(default)]
    pub sosc: bool,
}

impl IfsSpec {
    pub fn new(maps: Vec<Similarity>, sosc: bool) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidModel("an IFS needs at least one map".into()));
        }
        let d = maps[0].c.len();
        if d == 0 {
            return Err(Error::InvalidModel("maps need a translation vector".into()));
        }
        for f in &maps {
            if !(f.rho > 0.0 && f.rho < 1.0) {
                return Err(Error::InvalidModel(format!("ratio {} is not in (0, 1)", f.rho)));
            }
            if f.c.len() != d {
                return Err(Error::InvalidModel("translations have mixed dimensions".into()));
            }
        }
        if maps.len() > u8::MAX as usize {
            return Err(Error::InvalidModel("too many maps".into()));
        }
        Ok(IfsSpec { maps, sosc })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: IfsSpec = serde_json::from_str(text)?;
        IfsSpec::new(raw.maps, raw.sosc)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("ifs serializes")
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.maps[0].c.len()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// The coding space: the full shift on one symbol per map.
    pub fn sft(&self) -> Sft {
        Sft::full(self.len()).expect("nonempty IFS")
    }

    /// `ψ(x) = log ρ_{x_1}`.
    pub fn metric(&self) -> WeakGibbsMetric {
        let sft = self.sft();
        let rhos: Vec<f64> = self.maps.iter().map(|f| f.rho).collect();
        WeakGibbsMetric::per_symbol_ratios(&sft, &rhos).expect("ratios in (0, 1)")
    }

    pub fn is_homogeneous(&self) -> bool {
        self.maps.iter().all(|f| f.rho == self.maps[0].rho)
    }

    pub fn apply(&self, j: u8, x: &[f64]) -> Vec<f64> {
        let f = &self.maps[j as usize];
        x.iter().zip(&f.c).map(|(xi, ci)| f.rho * xi + ci).collect()
    }

    /// `g` on the image of `f_j`: `(x − c_j) / ρ_j`.
    pub fn invert(&self, j: u8, x: &[f64]) -> Vec<f64> {
        let f = &self.maps[j as usize];
        x.iter().zip(&f.c).map(|(xi, ci)| (xi - ci) / f.rho).collect()
    }

    pub fn fixed_point(&self, j: u8) -> Vec<f64> {
        let f = &self.maps[j as usize];
        f.c.iter().map(|c| c / (1.0 - f.rho)).collect()
    }

    /// Anchor of the coding map: the fixed point of `f_1`.
    pub fn anchor(&self) -> Vec<f64> {
        self.fixed_point(0)
    }

    /// Diameter of the unit cell `[0,1]^d`.
    pub fn base_diameter(&self) -> f64 {
        (self.dim() as f64).sqrt()
    }

    /// `f_{w_1} ∘ … ∘ f_{w_n}(x)`.
    pub fn compose(&self, w: &[u8], x: &[f64]) -> Vec<f64> {
        w.iter().rev().fold(x.to_vec(), |p, &j| self.apply(j, &p))
    }

    /// Point and cell diameter of the cylinder `[w]`.
    pub fn coding_map(&self, w: &Word) -> Result<(Vec<f64>, f64)> {
        if w.symbols().iter().any(|&s| s as usize >= self.len()) {
            return Err(Error::InadmissibleWord(w.to_string()));
        }
        let ratio: f64 = w.symbols().iter().map(|&j| self.maps[j as usize].rho).product();
        Ok((self.compose(w.symbols(), &self.anchor()), ratio * self.base_diameter()))
    }

    /// `χ(w^∞)`, the fixed point of `f_w`.
    pub fn periodic_point(&self, w: &[u8]) -> Vec<f64> {
        let ratio: f64 = w.iter().map(|&j| self.maps[j as usize].rho).product();
        let b = self.compose(w, &vec![0.0; self.dim()]);
        b.iter().map(|x| x / (1.0 - ratio)).collect()
    }

    /// `χ(w · w_n^∞)`.
    pub fn eventually_constant(&self, w: &[u8]) -> Vec<f64> {
        match w.last() {
            None => self.anchor(),
            Some(&l) => self.compose(w, &self.fixed_point(l)),
        }
    }

    /// Image of the unit-cell center under `f_w`.
    pub fn cell_center(&self, w: &[u8]) -> Vec<f64> {
        self.compose(w, &vec![0.5; self.dim()])
    }

    /// Window-`k` version of `Φ = χ`: the value on `[w]` is `χ(w^∞)`. Its
    /// error is at most the diameter of a depth-`k` cell.
    pub fn identity_potential(&self, k: usize) -> Result<Potential> {
        if k == 0 {
            return Err(Error::InvalidModel("k must be positive".into()));
        }
        let sft = self.sft();
        Potential::locally_constant(&sft, k, self.dim(), |w| self.periodic_point(w))
    }

    /// Largest depth-`k` cell diameter.
    pub fn cell_diameter_bound(&self, k: usize) -> f64 {
        let rho = self.maps.iter().map(|f| f.rho).fold(0.0, f64::max);
        rho.powi(k as i32) * self.base_diameter()
    }

    /// Similarity dimension: the root of `Σ ρ_j^s = 1`.
    pub fn similarity_dimension(&self) -> f64 {
        let f = |s: f64| self.maps.iter().map(|m| m.rho.powf(s)).sum::<f64>() - 1.0;
        let mut hi = 1.0;
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        crate::numeric::bisect_decreasing(f, 0.0, hi, 1e-15)
    }
}

/// Regular `m^d` tiling by maps `x ↦ x/m + j/m`, digit tuples in
/// lexicographic order.
fn regular_tiling(m: usize, d: usize, keep: impl Fn(&[usize]) -> bool) -> Vec<Similarity> {
    let mut maps = Vec::new();
    let total = m.pow(d as u32);
    for code in 0..total {
        let mut digits = vec![0; d];
        let mut c = code;
        for i in (0..d).rev() {
            digits[i] = c % m;
            c /= m;
        }
        if keep(&digits) {
            maps.push(Similarity { rho: 1.0 / m as f64, c: digits.iter().map(|&j| j as f64 / m as f64).collect() });
        }
    }
    maps
}

/// The 15-square tiling of `[0,37]^2` as `(x, y, side)`.
const BROOKS15: [(u32, u32, u32); 15] = [
    (0, 0, 19),
    (19, 0, 18),
    (19, 18, 1),
    (20, 18, 3),
    (23, 18, 8),
    (31, 18, 6),
    (0, 19, 18),
    (18, 19, 2),
    (18, 21, 5),
    (18, 26, 11),
    (31, 24, 1),
    (31, 25, 1),
    (32, 24, 5),
    (29, 29, 8),
    (29, 26, 3),
];

/// Names accepted by [`carpet_catalog`].
pub const CATALOG: [&str; 6] = ["s0_3x3", "s1", "s2", "times_m(3)", "times_m(3,3)", "brooks15"];

/// Looks up a bundled IFS: `s0_3x3`, `s1`, `s2`, `brooks15` or
/// `times_m(m_1,…,m_d)`.
pub fn carpet_catalog(name: &str) -> Result<IfsSpec> {
    let corner = |d: &[usize]| d[0] != 1 && d[1] != 1;
    let maps = match name {
        "s0_3x3" => regular_tiling(3, 2, |_| true),
        "s1" => regular_tiling(3, 2, corner),
        "s2" => {
            let mut maps = regular_tiling(3, 2, corner);
            maps.push(Similarity { rho: 1.0 / 3.0, c: vec![1.0 / 3.0, 1.0 / 3.0] });
            maps
        }
        "brooks15" => BROOKS15
            .iter()
            .map(|&(x, y, s)| Similarity { rho: s as f64 / 37.0, c: vec![x as f64 / 37.0, y as f64 / 37.0] })
            .collect(),
        _ => {
            let inner = name
                .strip_prefix("times_m(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::UnknownCatalogEntry(name.to_string()))?;
            let ms: Vec<usize> = inner
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::UnknownCatalogEntry(name.to_string()))?;
            if ms.is_empty() || ms.iter().any(|&m| m < 2) {
                return Err(Error::UnknownCatalogEntry(name.to_string()));
            }
            if ms.iter().any(|&m| m != ms[0]) {
                return Err(Error::Unsupported("times_m with unequal bases is not a similarity IFS".into()));
            }
            regular_tiling(ms[0], ms.len(), |_| true)
        }
    };
    IfsSpec::new(maps, true)
}

/// Potential level `α` to local dimension `α / log ρ`.
pub fn gibbs_reparametrize(alpha: f64, rho: f64) -> f64 {
    alpha / rho.ln()
}

/// Local dimension back to the potential level.
pub fn gibbs_reparametrize_inverse(dimension: f64, rho: f64) -> f64 {
    dimension * rho.ln()
}

/// Image of `[a, b]` under `α ↦ α / log ρ`.
pub fn reparametrize_interval(a: f64, b: f64, rho: f64) -> (f64, f64) {
    let (x, y) = (gibbs_reparametrize(a, rho), gibbs_reparametrize(b, rho));
    (x.min(y), x.max(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_three_digits() {
        let ifs = carpet_catalog("times_m(3)").unwrap();
        let w = Word::new(vec![2, 0, 1]);
        let (x, diam) = ifs.coding_map(&w).unwrap();
        assert!((x[0] - (2.0 / 3.0 + 1.0 / 27.0)).abs() < 1e-15);
        assert!((diam - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_point_is_geometric_sum() {
        let ifs = carpet_catalog("times_m(3)").unwrap();
        // 0.(12)_3 = (1*3 + 2) / 8
        let p = ifs.periodic_point(&[1, 2]);
        assert!((p[0] - 5.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn catalog_entries() {
        let s2 = carpet_catalog("s2").unwrap();
        assert_eq!(s2.len(), 5);
        assert_eq!(s2.maps[4].c, vec![1.0 / 3.0, 1.0 / 3.0]);
        assert!((s2.similarity_dimension() - 5f64.ln() / 3f64.ln()).abs() < 1e-12);
        let s1 = carpet_catalog("s1").unwrap();
        assert!((s1.similarity_dimension() - 4f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert_eq!(carpet_catalog("times_m(3,3)").unwrap(), carpet_catalog("s0_3x3").unwrap());
        assert_eq!(carpet_catalog("s7").unwrap_err().kind(), "UnknownCatalogEntry");
        assert_eq!(carpet_catalog("times_m(2,3)").unwrap_err().kind(), "Unsupported");
    }

    #[test]
    fn brooks_tiles_the_square() {
        let b = carpet_catalog("brooks15").unwrap();
        let area: f64 = b.maps.iter().map(|f| f.rho * f.rho).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert!((b.similarity_dimension() - 2.0).abs() < 1e-9);
        // Tiles are interior-disjoint: sample cell centers on a fine lattice.
        for i in 0..37 {
            for j in 0..37 {
                let p = [(i as f64 + 0.5) / 37.0, (j as f64 + 0.5) / 37.0];
                let hits = b
                    .maps
                    .iter()
                    .filter(|f| (0..2).all(|c| p[c] > f.c[c] && p[c] < f.c[c] + f.rho))
                    .count();
                assert_eq!(hits, 1, "{p:?}");
            }
        }
    }

    #[test]
    fn identity_potential_error_within_cell_diameter() {
        let ifs = carpet_catalog("s1").unwrap();
        let k = 3;
        let pot = ifs.identity_potential(k).unwrap();
        let sft = ifs.sft();
        for w in sft.words(5) {
            let exact = ifs.coding_map(&w).unwrap().0;
            let approx = pot.table().unwrap().value(&w.symbols()[..k]).to_vec();
            let err = exact.iter().zip(&approx).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err <= ifs.cell_diameter_bound(k) + 1e-12);
        }
    }

    #[test]
    fn reparametrization() {
        assert!((gibbs_reparametrize(-(3f64.ln()), 1.0 / 3.0) - 1.0).abs() < 1e-15);
        let (a, b) = reparametrize_interval(-2.0, -1.0, 0.5);
        assert!(a < b && (b - 2.0 / 2f64.ln()).abs() < 1e-12);
        let x = gibbs_reparametrize(0.7, 0.2);
        assert!((gibbs_reparametrize_inverse(x, 0.2) - 0.7).abs() < 1e-15);
    }
}
