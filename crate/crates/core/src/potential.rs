//! Almost additive potentials: locally constant tables, positive matrix
//! cocycles, and the window-`k` discretization of either.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::{word_code, BlockGraph, Sft, Word};

/// Range of `φ_{|w|}` over a cylinder `[w]`, one entry per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderRange {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Constants of a potential; see [`Potential::constants`].
#[derive(Clone, Debug, Serialize)]
pub struct Constants {
    /// Almost-additivity constant per coordinate.
    pub c: Vec<f64>,
    pub phi_max: Vec<f64>,
    pub phi_min: Vec<f64>,
    /// `‖Φ‖_1, …, ‖Φ‖_probe`.
    pub variation: Vec<f64>,
}

/// Window-`k` additive potential `φ_n = Σ_{t<n} g(x_t … x_{t+k-1})` with
/// values in `R^d`.
#[derive(Clone, Debug)]
pub struct TablePotential {
    sft: Sft,
    k: usize,
    d: usize,
    /// `g` indexed by `word_code(k-word) * d + coordinate`; NaN off the shift.
    values: Vec<f64>,
    /// Order-`k` block graph (`k >= 2` only).
    graph: Option<BlockGraph>,
    /// `best[r][state * d + c]`: sup over admissible continuations of the
    /// next `r` window terms starting from a `(k-1)`-word state.
    best: Vec<Vec<f64>>,
    worst: Vec<Vec<f64>>,
}

impl TablePotential {
    /// Tabulates `g` on every admissible `k`-word.
    pub fn new(sft: &Sft, k: usize, d: usize, g: impl Fn(&[u8]) -> Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidModel("window and dimension must be positive".into()));
        }
        let m = sft.alphabet_size();
        let codes = (m as f64).powi(k as i32);
        if codes * d as f64 > (1u64 << 28) as f64 {
            return Err(Error::GraphTooLarge(format!("window {k} over {m} symbols")));
        }
        let mut values = vec![f64::NAN; m.pow(k as u32) * d];
        for w in sft.words(k) {
            let v = g(w.symbols());
            if v.len() != d || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidModel(format!("value for word {w} must be {d} finite numbers")));
            }
            let c = word_code(w.symbols(), m);
            values[c * d..(c + 1) * d].copy_from_slice(&v);
        }
        let mut p = TablePotential {
            sft: sft.clone(),
            k,
            d,
            values,
            graph: None,
            best: Vec::new(),
            worst: Vec::new(),
        };
        p.build_tails()?;
        Ok(p)
    }

    /// Builds from an explicit word table, which must list every admissible
    /// `k`-word and nothing else.
    pub fn from_table(sft: &Sft, k: usize, d: usize, table: &BTreeMap<Word, Vec<f64>>) -> Result<Self> {
        for w in table.keys() {
            if w.len() != k {
                return Err(Error::InvalidModel(format!("table word {w} has length {} not {k}", w.len())));
            }
            sft.check_word(w)?;
        }
        if let Some(missing) = sft.words(k).find(|w| !table.contains_key(w)) {
            return Err(Error::InvalidModel(format!("table misses admissible word {missing}")));
        }
        TablePotential::new(sft, k, d, |w| table[&Word::new(w.to_vec())].clone())
    }

    fn build_tails(&mut self) -> Result<()> {
        if self.k < 2 {
            return Ok(());
        }
        let graph = BlockGraph::new(&self.sft, self.k)?;
        let d = self.d;
        let ns = graph.state_count();
        let edge_vals = self.edge_values(&graph)?;
        let mut best = vec![vec![0.0; ns * d]];
        let mut worst = vec![vec![0.0; ns * d]];
        for r in 1..self.k {
            let mut b = vec![f64::NEG_INFINITY; ns * d];
            let mut w = vec![f64::INFINITY; ns * d];
            for (e, edge) in graph.edges().iter().enumerate() {
                for c in 0..d {
                    let hi = edge_vals[e * d + c] + best[r - 1][edge.to * d + c];
                    let lo = edge_vals[e * d + c] + worst[r - 1][edge.to * d + c];
                    let slot = edge.from * d + c;
                    b[slot] = b[slot].max(hi);
                    w[slot] = w[slot].min(lo);
                }
            }
            best.push(b);
            worst.push(w);
        }
        self.graph = Some(graph);
        self.best = best;
        self.worst = worst;
        Ok(())
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    pub fn window(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `g` on an admissible `k`-word.
    pub fn value(&self, window_word: &[u8]) -> &[f64] {
        let c = word_code(window_word, self.sft.alphabet_size());
        &self.values[c * self.d..(c + 1) * self.d]
    }

    /// Edge weights on a block graph of order at least `k`: each edge word is
    /// scored by `g` on its first `k` symbols. Laid out as `edge * d + coordinate`.
    pub fn edge_values(&self, graph: &BlockGraph) -> Result<Vec<f64>> {
        if self.k > graph.order() {
            return Err(Error::WindowMismatch { window: self.k, order: graph.order() });
        }
        let m = self.sft.alphabet_size();
        let drop = m.pow((graph.order() - self.k) as u32);
        let mut out = Vec::with_capacity(graph.edges().len() * self.d);
        for e in graph.edges() {
            let c = e.code / drop;
            out.extend_from_slice(&self.values[c * self.d..(c + 1) * self.d]);
        }
        Ok(out)
    }

    /// `φ_n` at any point whose first `n + k - 1` symbols are `symbols`.
    pub fn birkhoff_sum(&self, symbols: &[u8], n: usize) -> Vec<f64> {
        assert!(symbols.len() + 1 >= n + self.k, "need n + k - 1 symbols");
        let mut acc = vec![0.0; self.d];
        for t in 0..n {
            for (a, v) in acc.iter_mut().zip(self.value(&symbols[t..t + self.k])) {
                *a += v;
            }
        }
        acc
    }

    /// Exact inf and sup of `φ_{|w|}` over `[w]`.
    pub fn eval(&self, w: &[u8]) -> CylinderRange {
        let d = self.d;
        let k = self.k;
        let m = self.sft.alphabet_size();
        let len = w.len();
        if k == 1 {
            let v = self.birkhoff_sum(w, len);
            return CylinderRange { lo: v.clone(), hi: v };
        }
        let graph = self.graph.as_ref().expect("tails built for k >= 2");
        if len + 1 >= k {
            let mut core = vec![0.0; d];
            if len >= k {
                let modulus = m.pow(k as u32);
                let mut code = word_code(&w[..k - 1], m);
                for &s in &w[k - 1..] {
                    code = (code * m + s as usize) % modulus;
                    for c in 0..d {
                        core[c] += self.values[code * d + c];
                    }
                }
            }
            let state = graph.state_index(&w[len + 1 - k..]).expect("admissible suffix");
            let tail = k - 1;
            let hi = (0..d).map(|c| core[c] + self.best[tail][state * d + c]).collect();
            let lo = (0..d).map(|c| core[c] + self.worst[tail][state * d + c]).collect();
            CylinderRange { lo, hi }
        } else {
            // Too short to fix a state: maximize over the state-completions.
            let mut hi = vec![f64::NEG_INFINITY; d];
            let mut lo = vec![f64::INFINITY; d];
            for u in self.sft.words_with_prefix(w, k - 1) {
                let s = graph.state_index(u.symbols()).expect("admissible state");
                for c in 0..d {
                    hi[c] = hi[c].max(self.best[len][s * d + c]);
                    lo[c] = lo[c].min(self.worst[len][s * d + c]);
                }
            }
            CylinderRange { lo, hi }
        }
    }

    /// Inf and sup of the `k-1` window terms still undetermined at the end of
    /// a word whose last `k-1` symbols end `word`.
    pub fn tail_range(&self, word: &[u8]) -> (Vec<f64>, Vec<f64>) {
        if self.k == 1 {
            return (vec![0.0; self.d], vec![0.0; self.d]);
        }
        let graph = self.graph.as_ref().expect("tails built for k >= 2");
        let s = graph.state_index(&word[word.len() + 1 - self.k..]).expect("admissible suffix");
        let d = self.d;
        let tail = self.k - 1;
        (self.worst[tail][s * d..(s + 1) * d].to_vec(), self.best[tail][s * d..(s + 1) * d].to_vec())
    }

    /// `‖Φ‖_n`: largest Euclidean spread of `φ_n` over a single `n`-cylinder.
    pub fn variation(&self, n: usize) -> f64 {
        if self.k == 1 || n == 0 {
            return 0.0;
        }
        let spread = |lo: &[f64], hi: &[f64]| -> f64 {
            lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
        };
        if n + 1 >= self.k {
            let d = self.d;
            let tail = self.k - 1;
            let ns = self.graph.as_ref().unwrap().state_count();
            (0..ns)
                .map(|s| spread(&self.worst[tail][s * d..(s + 1) * d], &self.best[tail][s * d..(s + 1) * d]))
                .fold(0.0, f64::max)
        } else {
            self.sft
                .words(n)
                .map(|w| {
                    let r = self.eval(w.symbols());
                    spread(&r.lo, &r.hi)
                })
                .fold(0.0, f64::max)
        }
    }

    pub fn max_value(&self, c: usize) -> f64 {
        self.values.chunks(self.d).filter(|v| !v[0].is_nan()).map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self, c: usize) -> f64 {
        self.values.chunks(self.d).filter(|v| !v[0].is_nan()).map(|v| v[c]).fold(f64::INFINITY, f64::min)
    }

    /// The table as `(word, value)` pairs, lexicographically ordered.
    pub fn entries(&self) -> Vec<(Word, Vec<f64>)> {
        self.sft.words(self.k).map(|w| {
            let v = self.value(w.symbols()).to_vec();
            (w, v)
        }).collect()
    }
}

/// `φ_n(x) = log ‖M_{x_n} ⋯ M_{x_1}‖₂` for entrywise positive matrices.
#[derive(Clone, Debug)]
pub struct Cocycle {
    size: usize,
    /// Row-major matrices, one per symbol.
    matrices: Vec<Vec<f64>>,
}

impl Cocycle {
    pub fn new(matrices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let size = matrices.first().map_or(0, |m| m.len());
        if size == 0 {
            return Err(Error::InvalidModel("cocycle needs non-empty square matrices".into()));
        }
        let mut flat = Vec::new();
        for (s, mat) in matrices.iter().enumerate() {
            if mat.len() != size || mat.iter().any(|row| row.len() != size) {
                return Err(Error::InvalidModel(format!("matrix for symbol {} is not {size}x{size}", s + 1)));
            }
            if mat.iter().flatten().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidModel(format!(
                    "matrix for symbol {} must have strictly positive entries",
                    s + 1
                )));
            }
            flat.push(mat.iter().flatten().copied().collect());
        }
        Ok(Cocycle { size, matrices: flat })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn matrix(&self, symbol: u8) -> &[f64] {
        &self.matrices[symbol as usize]
    }

    /// Almost-additivity constant `log(D² · max entry / min entry)`.
    pub fn distortion_constant(&self) -> f64 {
        if self.size == 1 {
            return 0.0;
        }
        let all = self.matrices.iter().flatten();
        let max = all.clone().fold(0.0f64, |a, &b| a.max(b));
        let min = all.fold(f64::INFINITY, |a, &b| a.min(b));
        ((self.size * self.size) as f64 * max / min).ln()
    }

    /// `log ‖M_{w_n} ⋯ M_{w_1}‖₂`.
    pub fn log_norm(&self, w: &[u8]) -> f64 {
        let n = self.size;
        let mut prod = identity(n);
        let mut log_scale = 0.0;
        for &s in w {
            prod = matmul(&self.matrices[s as usize], &prod, n);
            let top = prod.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            for x in prod.iter_mut() {
                *x /= top;
            }
            log_scale += top.ln();
        }
        log_scale + spectral_norm(&prod, n).ln()
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        out[i * n + i] = 1.0;
    }
    out
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for l in 0..n {
            let x = a[i * n + l];
            for j in 0..n {
                out[i * n + j] += x * b[l * n + j];
            }
        }
    }
    out
}

/// Operator 2-norm of a row-major `n × n` matrix.
pub fn spectral_norm(a: &[f64], n: usize) -> f64 {
    match n {
        1 => a[0].abs(),
        2 => {
            let t = a.iter().map(|x| x * x).sum::<f64>();
            let det = a[0] * a[3] - a[1] * a[2];
            let disc = (t * t - 4.0 * det * det).max(0.0);
            ((t + disc.sqrt()) / 2.0).sqrt()
        }
        _ => {
            // Power iteration on AᵀA.
            let mut v = vec![1.0 / (n as f64).sqrt(); n];
            let mut sigma2 = 0.0;
            for _ in 0..10_000 {
                let av: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect();
                let w: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a[i * n + j] * av[i]).sum()).collect();
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return 0.0;
                }
                let next = norm;
                v = w.iter().map(|x| x / norm).collect();
                if (next - sigma2).abs() <= 1e-15 * next {
                    sigma2 = next;
                    break;
                }
                sigma2 = next;
            }
            sigma2.sqrt()
        }
    }
}

/// Error bookkeeping for a discretized potential.
#[derive(Clone, Debug, Serialize)]
pub struct DiscretizationBound {
    pub k: usize,
    pub d: usize,
    /// Euclidean norm of the source's almost-additivity constants.
    pub c_norm: f64,
    /// `max(|Φ_max|, |Φ_min|)` of the source, Euclidean over coordinates.
    pub phi_norm: f64,
    /// `‖Φ‖_k` of the source.
    pub variation_k: f64,
    pub source: &'static str,
}

impl DiscretizationBound {
    /// A-priori bound on `sup |φ_n − S_n φ̃_k|`.
    pub fn bound(&self, n: usize) -> f64 {
        let ratio = n as f64 / self.k as f64;
        self.d as f64 * (ratio * self.c_norm + 5.0 * self.k as f64 * self.phi_norm + self.variation_k * ratio)
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Table(TablePotential),
    Cocycle(Cocycle),
}

/// Which of the three supported families a potential belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    LocallyConstant,
    Cocycle,
    Discretized,
}

/// An almost additive potential `Φ = (φ_n)` on a fixed subshift.
#[derive(Clone, Debug)]
pub struct Potential {
    repr: Repr,
    kind: PotentialKind,
    d: usize,
    c: Vec<f64>,
    phi_max: Vec<f64>,
    phi_min: Vec<f64>,
    discretization: Option<DiscretizationBound>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PotentialJson {
    LocallyConstant { k: usize, d: usize, table: BTreeMap<String, Vec<f64>> },
    Cocycle { matrices: BTreeMap<String, Vec<Vec<f64>>> },
}

impl Potential {
    pub fn from_table_potential(t: TablePotential) -> Potential {
        let d = t.dim();
        let phi_max = (0..d).map(|c| t.max_value(c)).collect();
        let phi_min = (0..d).map(|c| t.min_value(c)).collect();
        Potential {
            repr: Repr::Table(t),
            kind: PotentialKind::LocallyConstant,
            d,
            c: vec![0.0; d],
            phi_max,
            phi_min,
            discretization: None,
        }
    }

    /// Window-`k` locally constant potential given by a function of `k`-words.
    pub fn locally_constant(sft: &Sft, k: usize, d: usize, g: impl Fn(&[u8]) -> Vec<f64>) -> Result<Potential> {
        Ok(Potential::from_table_potential(TablePotential::new(sft, k, d, g)?))
    }

    /// Scalar window-1 potential with value `values[s]` on symbol `s`.
    pub fn per_symbol(sft: &Sft, values: &[f64]) -> Result<Potential> {
        if values.len() != sft.alphabet_size() {
            return Err(Error::InvalidModel("one value per symbol required".into()));
        }
        Potential::locally_constant(sft, 1, 1, |w| vec![values[w[0] as usize]])
    }

    pub fn constant(sft: &Sft, value: f64) -> Potential {
        Potential::locally_constant(sft, 1, 1, |_| vec![value]).expect("constant potential")
    }

    /// Indicator of the 0-based symbol `symbol` at the first coordinate.
    pub fn digit(sft: &Sft, symbol: u8) -> Potential {
        Potential::locally_constant(sft, 1, 1, |w| vec![f64::from(w[0] == symbol)]).expect("digit potential")
    }

    pub fn cocycle(sft: &Sft, matrices: Vec<Vec<Vec<f64>>>) -> Result<Potential> {
        if matrices.len() != sft.alphabet_size() {
            return Err(Error::InvalidModel("one matrix per symbol required".into()));
        }
        let co = Cocycle::new(matrices)?;
        let c = co.distortion_constant();
        let phi1: Vec<f64> = (0..sft.alphabet_size() as u8).map(|s| co.log_norm(&[s])).collect();
        let max = phi1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = phi1.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Potential {
            repr: Repr::Cocycle(co),
            kind: PotentialKind::Cocycle,
            d: 1,
            c: vec![c],
            phi_max: vec![max + c],
            phi_min: vec![min - c],
            discretization: None,
        })
    }

    /// Parses the JSON format documented in the README.
    pub fn from_json(sft: &Sft, text: &str) -> Result<Potential> {
        match serde_json::from_str::<PotentialJson>(text)? {
            PotentialJson::LocallyConstant { k, d, table } => {
                let mut parsed = BTreeMap::new();
                for (key, v) in table {
                    parsed.insert(key.parse::<Word>()?, v);
                }
                Ok(Potential::from_table_potential(TablePotential::from_table(sft, k, d, &parsed)?))
            }
            PotentialJson::Cocycle { matrices } => {
                let m = sft.alphabet_size();
                let mut mats = vec![None; m];
                for (key, mat) in matrices {
                    let s: usize = key
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidModel(format!("bad symbol `{key}`")))?;
                    if s == 0 || s > m {
                        return Err(Error::InvalidModel(format!("symbol {s} outside 1..={m}")));
                    }
                    mats[s - 1] = Some(mat);
                }
                let mats: Option<Vec<_>> = mats.into_iter().collect();
                let mats = mats.ok_or_else(|| Error::InvalidModel("a matrix is missing for some symbol".into()))?;
                Potential::cocycle(sft, mats)
            }
        }
    }

    /// JSON form; cocycles are written as their matrices, everything else as a table.
    pub fn to_json(&self) -> serde_json::Value {
        match &self.repr {
            Repr::Table(t) => {
                let table: BTreeMap<String, Vec<f64>> =
                    t.entries().into_iter().map(|(w, v)| (w.to_string(), v)).collect();
                serde_json::json!({ "kind": "locally_constant", "k": t.window(), "d": t.dim(), "table": table })
            }
            Repr::Cocycle(co) => {
                let n = co.size();
                let mats: BTreeMap<String, Vec<Vec<f64>>> = co
                    .matrices
                    .iter()
                    .enumerate()
                    .map(|(s, m)| ((s + 1).to_string(), m.chunks(n).map(|r| r.to_vec()).collect()))
                    .collect();
                serde_json::json!({ "kind": "cocycle", "matrices": mats })
            }
        }
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// The table behind a locally constant or discretized potential.
    pub fn table(&self) -> Option<&TablePotential> {
        match &self.repr {
            Repr::Table(t) => Some(t),
            Repr::Cocycle(_) => None,
        }
    }

    /// The window of a locally constant potential.
    pub fn window(&self) -> Option<usize> {
        self.table().map(|t| t.window())
    }

    pub fn is_locally_constant(&self) -> bool {
        self.table().is_some()
    }

    /// Norm used for matrix products, recorded in output metadata.
    pub fn norm_choice(&self) -> Option<&'static str> {
        match self.repr {
            Repr::Cocycle(_) => Some("operator 2-norm"),
            Repr::Table(_) => None,
        }
    }

    pub fn discretization(&self) -> Option<&DiscretizationBound> {
        self.discretization.as_ref()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn phi_max(&self) -> &[f64] {
        &self.phi_max
    }

    pub fn phi_min(&self) -> &[f64] {
        &self.phi_min
    }

    pub fn c_norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `‖Φ‖ = max(|Φ_max|, |Φ_min|)`, Euclidean over coordinates.
    pub fn phi_norm(&self) -> f64 {
        let a = self.phi_max.iter().map(|x| x * x).sum::<f64>().sqrt();
        let b = self.phi_min.iter().map(|x| x * x).sum::<f64>().sqrt();
        a.max(b)
    }

    /// Exact inf/sup of `φ_{|w|}` over `[w]`; `sft` must be the shift the
    /// potential was built for.
    pub fn eval_on_cylinder(&self, sft: &Sft, w: &Word) -> Result<CylinderRange> {
        sft.check_word(w)?;
        Ok(self.eval_unchecked(w.symbols()))
    }

    /// Like [`eval_on_cylinder`](Self::eval_on_cylinder) for words already
    /// known to be admissible.
    pub fn eval_unchecked(&self, w: &[u8]) -> CylinderRange {
        match &self.repr {
            Repr::Table(t) => t.eval(w),
            Repr::Cocycle(co) => {
                let v = co.log_norm(w);
                CylinderRange { lo: vec![v], hi: vec![v] }
            }
        }
    }

    /// `Φ[w] = exp(sup_{[w]} φ_{|w|})` for scalar potentials.
    pub fn sup_exp(&self, sft: &Sft, w: &Word) -> Result<f64> {
        Ok(self.eval_on_cylinder(sft, w)?.hi[0].exp())
    }

    /// `‖Φ‖_n`.
    pub fn variation(&self, n: usize) -> f64 {
        match &self.repr {
            Repr::Table(t) => t.variation(n),
            Repr::Cocycle(_) => 0.0,
        }
    }

    /// `sup_n ‖Φ‖_n`, which is finite for every potential handled here.
    pub fn variation_sup(&self) -> f64 {
        match &self.repr {
            Repr::Table(t) => (1..t.window().max(2)).map(|n| t.variation(n)).fold(0.0, f64::max),
            Repr::Cocycle(_) => 0.0,
        }
    }

    /// `C`, `Φ_max`, `Φ_min` and the variation sequence up to `probe_depth`.
    pub fn constants(&self, probe_depth: usize) -> Constants {
        Constants {
            c: self.c.clone(),
            phi_max: self.phi_max.clone(),
            phi_min: self.phi_min.clone(),
            variation: (1..=probe_depth).map(|n| self.variation(n)).collect(),
        }
    }

    /// `φ_n` at the point with the given prefix, extended by the smallest
    /// admissible continuation when the window needs more symbols.
    pub fn value_at(&self, sft: &Sft, prefix: &[u8], n: usize) -> Vec<f64> {
        match &self.repr {
            Repr::Table(t) => {
                let need = n + t.window() - 1;
                if prefix.len() >= need {
                    t.birkhoff_sum(prefix, n)
                } else {
                    t.birkhoff_sum(&sft.smallest_extension(prefix, need), n)
                }
            }
            Repr::Cocycle(co) => vec![co.log_norm(&prefix[..n])],
        }
    }

    /// The additive window-`k` potential `φ̃_k(x) = φ_k(x_w)/k`, where `x_w`
    /// is the smallest admissible point of the `k`-cylinder `[w]` of `x`.
    /// Locally constant inputs of window at most `k` come back unchanged.
    pub fn discretize(&self, sft: &Sft, k: usize) -> Result<Potential> {
        if k == 0 {
            return Err(Error::InvalidModel("discretization window must be positive".into()));
        }
        if let Repr::Table(t) = &self.repr {
            if t.window() <= k {
                return Ok(self.clone());
            }
        }
        let kf = k as f64;
        let table = TablePotential::new(sft, k, self.d, |w| {
            self.value_at(sft, w, k).into_iter().map(|v| v / kf).collect()
        })?;
        let mut out = Potential::from_table_potential(table);
        out.kind = PotentialKind::Discretized;
        out.discretization = Some(DiscretizationBound {
            k,
            d: self.d,
            c_norm: self.c_norm(),
            phi_norm: self.phi_norm(),
            variation_k: self.variation(k),
            source: match self.kind {
                PotentialKind::Cocycle => "cocycle",
                _ => "locally_constant",
            },
        });
        Ok(out)
    }

    /// Scalar potential of one coordinate of a locally constant potential.
    pub fn coordinate(&self, sft: &Sft, c: usize) -> Result<Potential> {
        match &self.repr {
            Repr::Table(t) if c < t.dim() => {
                Potential::locally_constant(sft, t.window(), 1, |w| vec![t.value(w)[c]])
            }
            Repr::Table(_) => Err(Error::InvalidModel(format!("coordinate {c} out of range"))),
            Repr::Cocycle(_) if c == 0 => Ok(self.clone()),
            Repr::Cocycle(_) => Err(Error::InvalidModel(format!("coordinate {c} out of range"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2() -> Sft {
        Sft::full(2).unwrap()
    }

    #[test]
    fn digit_potential_counts_twos() {
        let s = full2();
        let p = Potential::digit(&s, 1);
        let r = p.eval_on_cylinder(&s, &"21221".parse().unwrap()).unwrap();
        assert_eq!(r.lo, vec![3.0]);
        assert_eq!(r.hi, vec![3.0]);
        let c = p.constants(5);
        assert_eq!(c.c, vec![0.0]);
        assert_eq!(c.phi_max, vec![1.0]);
        assert_eq!(c.phi_min, vec![0.0]);
        assert!(c.variation.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inadmissible_word_is_rejected() {
        let s = Sft::golden_mean();
        let p = Potential::constant(&s, 1.0);
        let err = p.eval_on_cylinder(&s, &"122".parse().unwrap()).unwrap_err();
        assert_eq!(err.kind(), "InadmissibleWord");
    }

    #[test]
    fn constant_cocycle_norm() {
        let s = full2();
        let ones = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let p = Potential::cocycle(&s, vec![ones.clone(), ones]).unwrap();
        for n in 1..20 {
            let w = Word::new((0..n).map(|i| (i % 2) as u8).collect());
            let r = p.eval_on_cylinder(&s, &w).unwrap();
            assert!((r.hi[0] - n as f64 * 2f64.ln()).abs() < 1e-12);
            assert_eq!(r.lo, r.hi);
        }
        let c = p.constants(3);
        assert!(c.phi_max[0] >= 2f64.ln() && 2f64.ln() >= c.phi_min[0]);
    }

    /// Brute force: extend `w` by every admissible continuation long enough to
    /// fix all window terms.
    fn brute_range(s: &Sft, t: &TablePotential, w: &[u8]) -> (Vec<f64>, Vec<f64>) {
        let need = w.len() + t.window() - 1;
        let mut lo = vec![f64::INFINITY; t.dim()];
        let mut hi = vec![f64::NEG_INFINITY; t.dim()];
        for x in s.words_with_prefix(w, need) {
            let v = t.birkhoff_sum(x.symbols(), w.len());
            for c in 0..t.dim() {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
        (lo, hi)
    }

    fn hash_value(w: &[u8], salt: u64) -> f64 {
        let mut h = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        for &s in w {
            h = (h ^ s as u64).wrapping_mul(0x100_0000_01B3);
            h ^= h >> 29;
        }
        (h % 10_000) as f64 / 1000.0 - 5.0
    }

    #[test]
    fn window_two_single_symbol_matches_brute_force() {
        let s = full2();
        let t = TablePotential::new(&s, 2, 1, |w| vec![hash_value(w, 1)]).unwrap();
        for a in 0..2u8 {
            let (lo, hi) = brute_range(&s, &t, &[a]);
            let r = t.eval(&[a]);
            assert_eq!(r.lo, lo);
            assert_eq!(r.hi, hi);
            let spread = (t.value(&[a, 0])[0] - t.value(&[a, 1])[0]).abs();
            assert!((r.hi[0] - r.lo[0] - spread).abs() < 1e-12);
        }
    }

    #[test]
    fn table_eval_matches_brute_force_on_constrained_shift() {
        let s = Sft::new(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]], 10).unwrap();
        let t = TablePotential::new(&s, 4, 2, |w| vec![hash_value(w, 3), hash_value(w, 4)]).unwrap();
        for len in 1..=7 {
            for w in s.words(len) {
                let (lo, hi) = brute_range(&s, &t, w.symbols());
                let r = t.eval(w.symbols());
                for c in 0..2 {
                    assert!((r.lo[c] - lo[c]).abs() < 1e-9, "{w} {c}");
                    assert!((r.hi[c] - hi[c]).abs() < 1e-9, "{w} {c}");
                }
            }
        }
    }

    #[test]
    fn variation_is_constant_after_window() {
        let s = full2();
        let t = TablePotential::new(&s, 3, 1, |w| vec![hash_value(w, 9)]).unwrap();
        let brute = |n: usize| {
            s.words(n)
                .map(|w| {
                    let (lo, hi) = brute_range(&s, &t, w.symbols());
                    hi[0] - lo[0]
                })
                .fold(0.0, f64::max)
        };
        for n in 1..7 {
            assert!((t.variation(n) - brute(n)).abs() < 1e-12);
        }
        assert!(t.variation(2) > 0.0);
    }

    #[test]
    fn discretize_is_identity_on_short_windows() {
        let s = full2();
        let p = Potential::digit(&s, 1);
        let q = p.discretize(&s, 5).unwrap();
        assert_eq!(q.window(), Some(1));
        assert_eq!(q.kind(), PotentialKind::LocallyConstant);
        let c = Potential::constant(&s, 2.5).discretize(&s, 3).unwrap();
        assert_eq!(c.variation(3), 0.0);
        assert_eq!(c.c(), &[0.0]);
    }

    #[test]
    fn discretized_cocycle_error_shrinks_with_k() {
        use rand::{Rng, SeedableRng};
        let s = full2();
        let p = Potential::cocycle(
            &s,
            vec![vec![vec![2.0, 1.0], vec![1.0, 1.0]], vec![vec![1.0, 1.0], vec![1.0, 2.0]]],
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let words: Vec<Vec<u8>> = (0..100).map(|_| (0..80).map(|_| rng.gen_range(0..2u8)).collect()).collect();
        let err = |k: usize| {
            let q = p.discretize(&s, k).unwrap();
            let bound = q.discretization().unwrap().bound(64) / 64.0;
            let mut worst = 0.0f64;
            for w in &words {
                let exact = p.value_at(&s, w, 64)[0] / 64.0;
                let approx = q.value_at(&s, w, 64)[0] / 64.0;
                worst = worst.max((exact - approx).abs());
            }
            assert!(worst <= bound, "k={k}: {worst} > {bound}");
            worst
        };
        assert!(err(8) < err(4));
    }

    #[test]
    fn cocycle_sandwich_on_random_words() {
        use rand::{Rng, SeedableRng};
        let s = full2();
        let p = Potential::cocycle(
            &s,
            vec![vec![vec![2.0, 1.0], vec![1.0, 1.0]], vec![vec![1.0, 3.0], vec![0.5, 2.0]]],
        )
        .unwrap();
        let c = p.c()[0];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let u: Vec<u8> = (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..2)).collect();
            let v: Vec<u8> = (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..2)).collect();
            let uv: Vec<u8> = u.iter().chain(&v).copied().collect();
            let a = p.eval_unchecked(&uv).hi[0];
            let b = p.eval_unchecked(&u).hi[0] + p.eval_unchecked(&v).hi[0];
            assert!(a <= b + 1e-9 && a >= b - c - 1e-9);
        }
    }

    #[test]
    fn spectral_norm_power_iteration_agrees_with_closed_form() {
        let a = [3.0, 1.0, 0.5, 2.0];
        let mut b = vec![0.0; 9];
        b[0] = 3.0;
        b[1] = 1.0;
        b[3] = 0.5;
        b[4] = 2.0;
        assert!((spectral_norm(&a, 2) - spectral_norm(&b, 3)).abs() < 1e-10);
        let ones = [1.0; 9];
        assert!((spectral_norm(&ones, 3) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let s = Sft::golden_mean();
        let text = r#"{"kind":"locally_constant","k":2,"d":1,"table":{"11":[0.5],"12":[1.0],"21":[-1.0]}}"#;
        let p = Potential::from_json(&s, text).unwrap();
        assert_eq!(p.window(), Some(2));
        let q = Potential::from_json(&s, &p.to_json().to_string()).unwrap();
        assert_eq!(q.table().unwrap().entries(), p.table().unwrap().entries());
        let missing = r#"{"kind":"locally_constant","k":2,"d":1,"table":{"11":[0.5],"12":[1.0]}}"#;
        assert_eq!(Potential::from_json(&s, missing).unwrap_err().kind(), "InvalidModel");
        let bad = r#"{"kind":"locally_constant","k":2,"d":1,"table":{"11":[0.5],"12":[1.0],"21":[1.0],"22":[0.0]}}"#;
        assert_eq!(Potential::from_json(&s, bad).unwrap_err().kind(), "InadmissibleWord");
        let co = r#"{"kind":"cocycle","matrices":{"1":[[1,1],[1,1]],"2":[[2,1],[1,2]]}}"#;
        assert_eq!(Potential::from_json(&s, co).unwrap().kind(), PotentialKind::Cocycle);
    }
}
