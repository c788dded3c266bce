//! Localized level sets `E_Φ(ξ)`, fixed points in the asymptotic average
//! and an empirical Moran-set sampler.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::IfsSpec;
use crate::numeric::{bisect_decreasing, golden_section_max, nelder_mead};
use crate::pressure::{equilibrium_of_weights, pressure_of_weights, MarkovMeasure};
use crate::sft::{word_code, Sft, Word};
use crate::spectrum::{fmt_float, DualOptions, SpectrumModel};

/// A target `ξ` sampled on depth-`N` cylinders.
#[derive(Clone, Debug)]
pub struct LocalizedTarget {
    depth: usize,
    d: usize,
    m: usize,
    /// Indexed by the code of the depth-`N` word; `None` if inadmissible.
    values: Vec<Option<Vec<f64>>>,
    oscillation: f64,
}

#[derive(Serialize, Deserialize)]
struct TargetJson {
    depth: usize,
    d: usize,
    table: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    oscillation: f64,
}

impl LocalizedTarget {
    /// Samples `f` on every admissible `N`-word. The oscillation is estimated
    /// as the largest change of `f` under a one-symbol extension.
    pub fn from_fn(sft: &Sft, depth: usize, d: usize, f: impl Fn(&[u8]) -> Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidModel("target depth must be positive".into()));
        }
        let m = sft.alphabet_size();
        let size = m
            .checked_pow(depth as u32)
            .filter(|&s| s <= 1 << 22)
            .ok_or_else(|| Error::GraphTooLarge(format!("{m}^{depth} target cells")))?;
        let mut values = vec![None; size];
        let mut oscillation = 0.0f64;
        for w in sft.words(depth) {
            let v = f(w.symbols());
            if v.len() != d {
                return Err(Error::InvalidModel(format!("target values need {d} coordinates")));
            }
            let mut ext = w.symbols().to_vec();
            for b in sft.successors(*ext.last().unwrap()).collect::<Vec<_>>() {
                ext.push(b);
                let fv = f(&ext);
                oscillation = oscillation.max(dist(&fv, &v));
                ext.pop();
            }
            values[word_code(w.symbols(), m)] = Some(v);
        }
        Ok(LocalizedTarget { depth, d, m, values, oscillation })
    }

    /// `ξ ≡ α`.
    pub fn constant(sft: &Sft, alpha: &[f64]) -> Result<Self> {
        LocalizedTarget::from_fn(sft, 1, alpha.len(), |_| alpha.to_vec())
    }

    /// `ξ = χ`, sampled at cell centers.
    pub fn identity(ifs: &IfsSpec, depth: usize) -> Result<Self> {
        LocalizedTarget::from_fn(&ifs.sft(), depth, ifs.dim(), |w| ifs.cell_center(w))
    }

    pub fn from_json(sft: &Sft, text: &str) -> Result<Self> {
        let raw: TargetJson = serde_json::from_str(text)?;
        let mut table = HashMap::new();
        for (key, v) in raw.table {
            let w: Word = key.parse()?;
            if w.len() != raw.depth || !sft.is_admissible(w.symbols()) {
                return Err(Error::InadmissibleWord(key));
            }
            table.insert(w.into_symbols(), v);
        }
        let missing = std::cell::RefCell::new(None);
        let mut t = LocalizedTarget::from_fn(sft, raw.depth, raw.d, |w| {
            let key = &w[..raw.depth.min(w.len())];
            table.get(key).cloned().unwrap_or_else(|| {
                *missing.borrow_mut() = Some(Word::new(key.to_vec()).to_string());
                vec![f64::NAN; raw.d]
            })
        });
        if let Some(w) = missing.into_inner() {
            return Err(Error::InvalidModel(format!("target table misses the cylinder {w}")));
        }
        if let Ok(t) = t.as_mut() {
            t.oscillation = raw.oscillation;
        }
        t
    }

    pub fn to_json(&self, sft: &Sft) -> serde_json::Value {
        let table: BTreeMap<String, Vec<f64>> = sft
            .words(self.depth)
            .map(|w| (w.to_string(), self.values[word_code(w.symbols(), self.m)].clone().unwrap()))
            .collect();
        serde_json::to_value(TargetJson { depth: self.depth, d: self.d, table, oscillation: self.oscillation })
            .expect("target serializes")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Largest observed change across one extra symbol.
    pub fn oscillation(&self) -> f64 {
        self.oscillation
    }

    /// `ξ` on the cylinder of the first `N` symbols of `prefix`.
    pub fn value(&self, prefix: &[u8]) -> Option<&[f64]> {
        if prefix.len() < self.depth {
            return None;
        }
        self.values[word_code(&prefix[..self.depth], self.m)].as_deref()
    }

    /// Distinct sampled values, in first-seen order.
    pub fn image(&self) -> Vec<Vec<f64>> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for v in self.values.iter().flatten() {
            let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
            if seen.insert(key) {
                out.push(v.clone());
            }
        }
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Result of [`localized_dimension`].
#[derive(Clone, Debug, Serialize)]
pub struct LocalizedReport {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Best value over the sampled image alone, before refinement.
    pub image_max: f64,
    pub image_points: usize,
    /// Image points outside `L_Φ`, dropped.
    pub outside: usize,
    pub maximizer_in_ri: bool,
    /// `false` when the maximizer sits on the relative boundary of `L_Φ`,
    /// where the interior hypothesis of the dimension formula is not checked.
    pub hypothesis_verified: bool,
}

/// `sup{Ê(α) : α ∈ ξ(Σ_A) ∩ L_Φ}` with local refinement inside the
/// oscillation window of the best image point.
pub fn localized_dimension(model: &SpectrumModel, target: &LocalizedTarget, opts: &DualOptions) -> Result<LocalizedReport> {
    if target.dim() != model.dim() {
        return Err(Error::InvalidModel("target and potential dimensions differ".into()));
    }
    let region = model.region();
    let image = target.image();
    let inside: Vec<Vec<f64>> = image.iter().filter(|a| region.contains(a, 1e-9)).cloned().collect();
    let outside = image.len() - inside.len();
    if inside.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let values: Vec<f64> = inside
        .par_iter()
        .map(|a| model.variational_lenient(a, opts).map(|s| s.e_hat))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let image_max = values[best];
    let mut argmax = inside[best].clone();
    let mut value = image_max;

    let osc = target.oscillation();
    if osc > 0.0 {
        let eval = |a: &[f64]| -> f64 {
            if dist(a, &inside[best]) > osc || !region.contains(a, 1e-12) {
                return f64::NEG_INFINITY;
            }
            model.variational_lenient(a, opts).map_or(f64::NEG_INFINITY, |s| s.e_hat)
        };
        if model.dim() == 1 {
            let (lo, hi) = region.interval_bounds().unwrap();
            let a = (inside[best][0] - osc).max(lo);
            let b = (inside[best][0] + osc).min(hi);
            let (x, v) = golden_section_max(|x| eval(&[x]), a, b, 1e-10 * (1.0 + osc));
            if v > value {
                value = v;
                argmax = vec![x];
            }
        } else {
            let mnm = nelder_mead(|a| -eval(a), &inside[best], 0.25 * osc, 1e-13, 1e-10, 600);
            if -mnm.value > value {
                value = -mnm.value;
                argmax = mnm.x;
            }
        }
    }
    let maximizer_in_ri = region.in_relative_interior(&argmax, 1e-9);
    Ok(LocalizedReport {
        value,
        argmax,
        image_max,
        image_points: image.len(),
        outside,
        maximizer_in_ri,
        hypothesis_verified: maximizer_in_ri,
    })
}

/// Options for [`fixed_point_set_dimension`].
#[derive(Clone, Debug)]
pub struct FixedSetOptions {
    /// Cylinders kept per depth.
    pub beam: usize,
    pub dual: DualOptions,
}

impl Default for FixedSetOptions {
    fn default() -> Self {
        FixedSetOptions { beam: 8, dual: DualOptions { restarts: 1, ..DualOptions::default() } }
    }
}

/// Result of [`fixed_point_set_dimension`].
#[derive(Clone, Debug, Serialize)]
pub struct FixedSetReport {
    pub k: usize,
    pub depth: usize,
    /// `sup Ê` over the sampled attractor points.
    pub value: f64,
    pub alpha: Vec<f64>,
    /// Coding word whose eventually-constant point attains `value`.
    pub word: String,
    /// `max Ê` over all of `L_Φ`, the Bowen root of `ψ` on the block graph.
    pub max_over_l_phi: f64,
    pub argmax_l_phi: Vec<f64>,
    pub full_dimension: bool,
    pub evaluated: usize,
}

/// Bowen root of `ψ` on the model's block graph and the averages of its
/// equilibrium state.
pub fn spectrum_peak(model: &SpectrumModel) -> (f64, Vec<f64>) {
    let graph = model.graph();
    let psi = model.psi_values();
    let zero = vec![0.0; psi.len()];
    let h = pressure_of_weights(graph, &zero);
    let lo_rate = psi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_rate = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f = |t: f64| {
        let w: Vec<f64> = psi.iter().map(|p| t * p).collect();
        pressure_of_weights(graph, &w)
    };
    let t = bisect_decreasing(f, h / -lo_rate, h / -hi_rate, 1e-14);
    let w: Vec<f64> = psi.iter().map(|p| t * p).collect();
    let (mu, _) = equilibrium_of_weights(graph.clone(), &w, None);
    (t, mu.edge_average(model.phi_values(), model.dim()))
}

/// `sup{Ê(α) : α ∈ J}` for `Φ = χ`, searching the attractor's cylinder tree
/// with a beam: at each depth the best cylinders, scored at their
/// eventually-constant points, are expanded by one symbol.
pub fn fixed_point_set_dimension(ifs: &IfsSpec, k: usize, depth: usize, opts: &FixedSetOptions) -> Result<FixedSetReport> {
    if depth == 0 {
        return Err(Error::InvalidModel("depth must be positive".into()));
    }
    let sft = ifs.sft();
    let phi = ifs.identity_potential(k)?;
    let model = SpectrumModel::new(&sft, &ifs.metric(), &phi, k)?;
    let region = model.region();
    let m = ifs.len() as u8;

    let mut beam: Vec<Vec<u8>> = vec![Vec::new()];
    let mut best: Option<(f64, Vec<f64>, Vec<u8>)> = None;
    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut evaluated = 0;
    for _ in 0..depth {
        let children: Vec<Vec<u8>> = beam
            .iter()
            .flat_map(|w| (0..m).map(move |b| {
                let mut c = w.clone();
                c.push(b);
                c
            }))
            .collect();
        let points: Vec<Vec<f64>> = children.iter().map(|w| ifs.eventually_constant(w)).collect();
        let key = |p: &[f64]| -> Vec<u64> { p.iter().map(|x| (x * 1e12).round().to_bits()).collect() };
        let fresh: Vec<Vec<f64>> = {
            let mut seen = std::collections::HashSet::new();
            points.iter().filter(|p| !cache.contains_key(&key(p)) && seen.insert(key(p))).cloned().collect()
        };
        let vals: Vec<f64> = fresh
            .par_iter()
            .map(|p| {
                if !region.contains(p, 1e-9) {
                    return Ok(f64::NEG_INFINITY);
                }
                model.variational_lenient(p, &opts.dual).map(|s| s.e_hat)
            })
            .collect::<Result<Vec<_>>>()?;
        evaluated += fresh.len();
        for (p, v) in fresh.iter().zip(vals) {
            cache.insert(key(p), v);
        }
        let mut scored: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (cache[&key(p)], i)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut kept = Vec::new();
        for &(v, i) in &scored {
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, points[i].clone(), children[i].clone()));
            }
            if kept.len() < opts.beam {
                kept.push(children[i].clone());
            }
        }
        beam = kept;
    }
    let (value, alpha, word) = best.ok_or(Error::EmptyIntersection)?;
    if !value.is_finite() {
        return Err(Error::EmptyIntersection);
    }
    let (peak, argmax_l_phi) = spectrum_peak(&model);
    Ok(FixedSetReport {
        k,
        depth,
        value,
        alpha,
        word: Word::new(word).to_string(),
        max_over_l_phi: peak,
        argmax_l_phi,
        full_dimension: value >= peak - 1e-6,
        evaluated,
    })
}

/// Options for [`moran_sampler`].
#[derive(Clone, Debug)]
pub struct MoranOptions {
    pub block_lengths: Vec<usize>,
    pub seed: u64,
    pub paths: usize,
    /// The net at block `j` has mesh `2^{-(j + j0)}`.
    pub j0: u32,
    pub dual: DualOptions,
}

impl MoranOptions {
    pub fn new(block_lengths: Vec<usize>, seed: u64, paths: usize) -> Self {
        MoranOptions { block_lengths, seed, paths, j0: 3, dual: DualOptions::default() }
    }
}

/// One block boundary of one sample path.
#[derive(Clone, Debug, Serialize)]
pub struct MoranRow {
    pub path: usize,
    pub n: usize,
    pub deviation: f64,
    /// `log ρ([x|_n])` accumulated symbol by symbol while sampling.
    pub log_rho: f64,
    /// The same mass recomputed block by block from the stored word.
    pub log_rho_blocks: f64,
    /// `log` of the cylinder diameter, `Σ ψ`.
    pub log_diam: f64,
    /// Net point used for the block that ends here.
    pub alpha: Vec<f64>,
}

/// Sampler output.
#[derive(Clone, Debug, Serialize)]
pub struct MoranSampleReport {
    pub seed: u64,
    pub block_lengths: Vec<usize>,
    /// Block lengths shorter than the mixing scale or not increasing: the
    /// deviations need not converge.
    pub schedule_too_fast: bool,
    pub rows: Vec<MoranRow>,
    /// First symbols of each sampled point.
    pub prefixes: Vec<String>,
    /// `h / −Ψ_*` of the measure driving the last block, per path.
    pub target_ratio: Vec<f64>,
}

impl MoranSampleReport {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "path,n,deviation,log_rho,log_diam")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.path,
                r.n,
                fmt_float(r.deviation),
                fmt_float(r.log_rho),
                fmt_float(r.log_diam)
            )?;
        }
        Ok(())
    }

    /// Rows of the last block boundary, one per path.
    pub fn final_rows(&self) -> Vec<&MoranRow> {
        let last = self.rows.iter().map(|r| r.n).max().unwrap_or(0);
        self.rows.iter().filter(|r| r.n == last).collect()
    }

    /// Largest disagreement between the two mass computations.
    pub fn mass_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| (r.log_rho - r.log_rho_blocks).abs()).fold(0.0, f64::max)
    }
}

type MeasureCache = Mutex<HashMap<(u32, Vec<i64>), Arc<(MarkovMeasure, Vec<f64>)>>>;

/// Nearest point of the level-`j` net to `xi`, and the measure realizing it.
fn net_measure(
    model: &SpectrumModel,
    cache: &MeasureCache,
    xi: &[f64],
    level: u32,
    opts: &DualOptions,
) -> Result<Arc<(MarkovMeasure, Vec<f64>)>> {
    let region = model.region();
    let target = region.project(xi);
    let mesh = 0.5f64.powi(level as i32);
    let idx: Vec<i64> = target.iter().map(|x| (x / mesh).round() as i64).collect();
    let key = (level, idx.clone());
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let mut alpha: Vec<f64> = idx.iter().map(|&i| i as f64 * mesh).collect();
    if !region.contains(&alpha, 0.0) {
        alpha = target;
    }
    let sol = model.variational_lenient(&alpha, opts)?;
    let entry = Arc::new((model.witness_measure(&sol), sol.alpha_used));
    cache.lock().unwrap().insert(key, entry.clone());
    Ok(entry)
}

/// Draws sample points block by block: each block of `L_j` symbols follows
/// the Markov measure for the net point nearest `ξ` of the current prefix,
/// conditioned on the last state.
pub fn moran_sampler(model: &SpectrumModel, target: &LocalizedTarget, opts: &MoranOptions) -> Result<MoranSampleReport> {
    if target.dim() != model.dim() {
        return Err(Error::InvalidModel("target and potential dimensions differ".into()));
    }
    if opts.block_lengths.is_empty() || opts.paths == 0 {
        return Err(Error::InvalidModel("need at least one block and one path".into()));
    }
    let graph = model.graph().clone();
    let order = graph.order();
    let scale = 10 * order.max(model.sft().p0());
    let schedule_too_fast = opts.block_lengths.windows(2).any(|w| w[1] < w[0])
        || opts.block_lengths.iter().any(|&l| l < scale);
    let cache: MeasureCache = Mutex::new(HashMap::new());
    let start = net_measure(model, &cache, &model.region().centroid(), opts.j0, &opts.dual)?;
    let g0 = target.depth().max(order - 1);

    let per_path: Vec<Result<(Vec<MoranRow>, String, f64)>> = (0..opts.paths)
        .into_par_iter()
        .map(|path| {
            let mut rows = Vec::new();
            let stream_rng = |block: u64| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(path as u64);
                rng.set_word_pos((block as u128) << 40);
                rng
            };
            // Initial cylinder: a state from the stationary law, then g0 symbols.
            let mut rng = stream_rng(0);
            let mu0 = &start.0;
            let pi = mu0.stationary();
            let state = pick(pi.iter().copied(), &mut rng);
            let mut walk = Walk::new(model, state, pi[state].ln());
            let initial_len = walk.symbols.len();
            while walk.symbols.len() < g0 {
                walk.step(mu0, &mut rng);
            }
            let mut blocks = vec![(start.clone(), initial_len, walk.symbols.len())];

            let d = model.dim();
            let xi: Vec<f64> = target.value(&walk.symbols).map(|v| v.to_vec()).unwrap_or_else(|| vec![f64::NAN; d]);
            let mut last_ratio = f64::NAN;
            for (j, &len) in opts.block_lengths.iter().enumerate() {
                let level = j as u32 + 1 + opts.j0;
                let entry = net_measure(model, &cache, &xi, level, &opts.dual)?;
                let mut rng = stream_rng(j as u64 + 1);
                let from = walk.symbols.len();
                for _ in 0..len {
                    walk.step(&entry.0, &mut rng);
                }
                blocks.push((entry.clone(), from, walk.symbols.len()));
                let avg: Vec<f64> = walk.phi_sum.iter().map(|s| s / walk.edges as f64).collect();
                let mu = &entry.0;
                last_ratio = mu.entropy() / -mu.edge_average(model.psi_values(), 1)[0];
                rows.push(MoranRow {
                    path,
                    n: walk.symbols.len(),
                    deviation: dist(&avg, &xi),
                    log_rho: walk.log_rho,
                    log_rho_blocks: block_mass(&graph, &walk.symbols, &blocks),
                    log_diam: walk.log_diam,
                    alpha: entry.1.clone(),
                });
            }
            let symbols = &walk.symbols;
            let prefix = Word::new(symbols[..symbols.len().min(32)].to_vec()).to_string();
            Ok((rows, prefix, last_ratio))
        })
        .collect();

    let mut rows = Vec::new();
    let mut prefixes = Vec::new();
    let mut target_ratio = Vec::new();
    for r in per_path {
        let (r, p, t) = r?;
        rows.extend(r);
        prefixes.push(p);
        target_ratio.push(t);
    }
    Ok(MoranSampleReport { seed: opts.seed, block_lengths: opts.block_lengths.clone(), schedule_too_fast, rows, prefixes, target_ratio })
}

/// Running state of one sample path.
struct Walk<'a> {
    model: &'a SpectrumModel,
    state: usize,
    symbols: Vec<u8>,
    phi_sum: Vec<f64>,
    log_diam: f64,
    log_rho: f64,
    edges: usize,
}

impl<'a> Walk<'a> {
    fn new(model: &'a SpectrumModel, state: usize, log_rho: f64) -> Self {
        Walk {
            model,
            state,
            symbols: model.graph().state_word(state),
            phi_sum: vec![0.0; model.dim()],
            log_diam: 0.0,
            log_rho,
            edges: 0,
        }
    }

    fn step(&mut self, mu: &MarkovMeasure, rng: &mut ChaCha8Rng) {
        let graph = self.model.graph();
        let d = self.model.dim();
        let r = graph.out_edges(self.state);
        let e = r.start + pick(mu.transition_probs()[r].iter().copied(), rng);
        self.log_rho += mu.transition_probs()[e].ln();
        let edge = graph.edges()[e];
        self.symbols.push((edge.code % graph.alphabet_size()) as u8);
        self.state = edge.to;
        for c in 0..d {
            self.phi_sum[c] += self.model.phi_values()[e * d + c];
        }
        self.log_diam += self.model.psi_values()[e];
        self.edges += 1;
    }
}

/// `log ρ` as a product over blocks of each block's conditional cylinder
/// mass, looked up from the symbols rather than the sampled edges.
fn block_mass(
    graph: &crate::sft::BlockGraph,
    symbols: &[u8],
    blocks: &[(Arc<(MarkovMeasure, Vec<f64>)>, usize, usize)],
) -> f64 {
    let s = graph.order() - 1;
    let first = &blocks[0].0 .0;
    let mut total = first.stationary()[graph.state_index(&symbols[..s]).expect("admissible")].ln();
    for (entry, from, to) in blocks {
        let mu = &entry.0;
        let mut state = graph.state_index(&symbols[from - s..*from]).expect("admissible");
        for &b in &symbols[*from..*to] {
            let e = graph.edge_from(state, b).expect("admissible");
            total += mu.transition_probs()[e].ln();
            state = graph.edges()[e].to;
        }
    }
    total
}

fn pick(weights: impl Iterator<Item = f64> + Clone, rng: &mut impl Rng) -> usize {
    let total: f64 = weights.clone().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::carpet_catalog;
    use crate::metric::WeakGibbsMetric;
    use crate::numeric::binary_entropy;
    use crate::potential::Potential;

    fn binary_model() -> (Sft, SpectrumModel) {
        let s = Sft::full(2).unwrap();
        let g = WeakGibbsMetric::standard(&s);
        let m = SpectrumModel::new(&s, &g, &Potential::digit(&s, 1), 1).unwrap();
        (s, m)
    }

    #[test]
    fn constant_target_reduces_to_spectrum() {
        let (s, model) = binary_model();
        let t = LocalizedTarget::constant(&s, &[0.3]).unwrap();
        let r = localized_dimension(&model, &t, &DualOptions::default()).unwrap();
        let direct = model.variational(&[0.3], &DualOptions::default()).unwrap().e_hat;
        assert!((r.value - direct).abs() < 1e-12);
        assert!(r.hypothesis_verified);
    }

    #[test]
    fn image_interval_past_the_peak() {
        // ξ spreads over [0.6, 0.9] by the first four digits.
        let (s, model) = binary_model();
        let t = LocalizedTarget::from_fn(&s, 4, 1, |w| {
            let c = word_code(&w[..4], 2) as f64;
            vec![0.6 + 0.3 * c / 15.0]
        })
        .unwrap();
        let r = localized_dimension(&model, &t, &DualOptions::default()).unwrap();
        assert!((r.value - binary_entropy(0.6) / 2f64.ln()).abs() < 1e-9);
        assert!((r.argmax[0] - 0.6).abs() < 1e-6);
    }

    #[test]
    fn empty_intersection() {
        let (s, model) = binary_model();
        let t = LocalizedTarget::constant(&s, &[1.5]).unwrap();
        assert_eq!(localized_dimension(&model, &t, &DualOptions::default()).unwrap_err().kind(), "EmptyIntersection");
    }

    #[test]
    fn target_json_round_trip() {
        let (s, _) = binary_model();
        let t = LocalizedTarget::from_fn(&s, 2, 1, |w| vec![w[0] as f64 * 0.5]).unwrap();
        let back = LocalizedTarget::from_json(&s, &t.to_json(&s).to_string()).unwrap();
        assert_eq!(back.image(), t.image());
        assert_eq!(back.value(&[1, 0, 1]), Some(&[0.5][..]));
    }

    #[test]
    fn times_three_reaches_one() {
        let ifs = carpet_catalog("times_m(3)").unwrap();
        let sft = ifs.sft();
        let model = SpectrumModel::new(&sft, &ifs.metric(), &ifs.identity_potential(2).unwrap(), 2).unwrap();
        let t = LocalizedTarget::identity(&ifs, 3).unwrap();
        let r = localized_dimension(&model, &t, &DualOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn sampler_is_deterministic_and_consistent() {
        let (s, model) = binary_model();
        let t = LocalizedTarget::constant(&s, &[0.3]).unwrap();
        let opts = MoranOptions::new(vec![200, 400, 800], 7, 3);
        let a = moran_sampler(&model, &t, &opts).unwrap();
        let b = moran_sampler(&model, &t, &opts).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        assert!(a.mass_discrepancy() < 1e-9);
        assert!(!a.schedule_too_fast);
        assert_eq!(a.final_rows().len(), 3);
        let fast = moran_sampler(&model, &t, &MoranOptions::new(vec![1; 5], 7, 1)).unwrap();
        assert!(fast.schedule_too_fast);
    }
}
