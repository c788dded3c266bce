//! Topologically mixing subshifts of finite type and the word/cycle
//! combinatorics every other module relies on.
//!
//! Symbols are 0-based inside the crate. Everything that crosses a file or
//! display boundary is 1-based, matching the alphabet `{1, …, m}`.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::region::Region;

/// Default cap on the number of simple cycles enumerated by
/// [`cycle_mean_hull`] before it gives up.
pub const DEFAULT_CYCLE_BUDGET: usize = 1_000_000;

/// Largest edge-word table (`m^order`) a [`BlockGraph`] may allocate.
const MAX_BLOCK_CODES: usize = 1 << 26;

/// A finite word over the alphabet, stored with 0-based symbols.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    /// Builds a word from 1-based symbols.
    pub fn from_one_based(symbols: &[usize]) -> Result<Self> {
        symbols
            .iter()
            .map(|&s| {
                if s == 0 || s > 255 {
                    Err(Error::InvalidModel(format!("symbol {s} outside 1..=255")))
                } else {
                    Ok((s - 1) as u8)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    pub fn push(&mut self, s: u8) {
        self.0.push(s);
    }

    /// `w*`: the word with its last letter removed.
    pub fn parent(&self) -> Word {
        let mut v = self.0.clone();
        v.pop();
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.0
    }
}

impl From<Vec<u8>> for Word {
    fn from(v: Vec<u8>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    /// 1-based symbols; concatenated digits when every symbol is below 10,
    /// dot-separated otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 9) {
            for s in &self.0 {
                write!(f, "{}", s + 1)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| (s + 1).to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses the [`Display`](fmt::Display) format back.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parsed: Vec<usize> = if s.contains('.') || s.contains(',') {
            s.split(['.', ','])
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidModel(format!("bad word `{s}`")))
                })
                .collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::InvalidModel(format!("bad word `{s}`")))
                })
                .collect::<Result<_>>()?
        };
        Word::from_one_based(&parsed)
    }
}

/// Base-`m` code of a word (most significant symbol first).
pub fn word_code(symbols: &[u8], m: usize) -> usize {
    symbols.iter().fold(0usize, |acc, &s| acc * m + s as usize)
}

/// Inverse of [`word_code`] for words of length `len`.
pub fn decode_word(mut code: usize, len: usize, m: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % m) as u8;
        code /= m;
    }
    out
}

/// Smallest `p0 <= max_exponent` with `A^p0` entrywise positive, computed with
/// boolean matrix powers.
pub fn check_primitive(adjacency: &[Vec<u8>], max_exponent: usize) -> Result<usize> {
    let m = adjacency.len();
    if m == 0 || adjacency.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidModel("transition matrix must be square and non-empty".into()));
    }
    if adjacency.iter().flatten().any(|&a| a > 1) {
        return Err(Error::InvalidModel("transition matrix entries must be 0 or 1".into()));
    }
    let a: Vec<bool> = adjacency.iter().flatten().map(|&x| x == 1).collect();
    let mut power = a.clone();
    for p in 1..=max_exponent {
        if power.iter().all(|&x| x) {
            return Ok(p);
        }
        let mut next = vec![false; m * m];
        for i in 0..m {
            for l in 0..m {
                if power[i * m + l] {
                    for j in 0..m {
                        next[i * m + j] |= a[l * m + j];
                    }
                }
            }
        }
        power = next;
    }
    Err(Error::NotPrimitive(max_exponent))
}

#[derive(Deserialize)]
struct SftJson {
    m: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<u8>>,
    max_p0: Option<usize>,
}

/// A topologically mixing subshift of finite type `(Σ_A, T)`.
#[derive(Clone, Debug)]
pub struct Sft {
    m: usize,
    allowed: Vec<bool>,
    p0: usize,
    connectors: Vec<Word>,
}

impl Sft {
    /// Validates the matrix (square, 0/1, no empty row or column, primitive
    /// with exponent at most `max_p0`) and precomputes connecting words.
    pub fn new(adjacency: Vec<Vec<u8>>, max_p0: usize) -> Result<Self> {
        let m = adjacency.len();
        if m < 2 {
            return Err(Error::InvalidModel("alphabet size must be at least 2".into()));
        }
        if m > 255 {
            return Err(Error::InvalidModel("alphabet size above 255".into()));
        }
        let p0 = check_primitive(&adjacency, max_p0)?;
        for i in 0..m {
            if adjacency[i].iter().all(|&x| x == 0) {
                return Err(Error::InvalidModel(format!("row {} has no allowed transition", i + 1)));
            }
            if adjacency.iter().all(|row| row[i] == 0) {
                return Err(Error::InvalidModel(format!("column {} has no allowed transition", i + 1)));
            }
        }
        let allowed = adjacency.iter().flatten().map(|&x| x == 1).collect();
        let mut sft = Sft { m, allowed, p0, connectors: Vec::new() };
        sft.connectors = build_connecting_words(&sft);
        Ok(sft)
    }

    /// The full shift on `m` symbols.
    pub fn full(m: usize) -> Result<Self> {
        Sft::new(vec![vec![1; m]; m], 1)
    }

    /// The golden-mean shift: symbol 2 never repeats.
    pub fn golden_mean() -> Self {
        Sft::new(vec![vec![1, 1], vec![1, 0]], 2).expect("golden-mean shift is primitive")
    }

    /// Loads `{"m": int, "A": [[0|1,…],…], "max_p0": int}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SftJson = serde_json::from_str(text)?;
        if raw.a.len() != raw.m {
            return Err(Error::InvalidModel(format!(
                "declared m = {} but A has {} rows",
                raw.m,
                raw.a.len()
            )));
        }
        // Wielandt's bound is the default exponent cap.
        let cap = raw.max_p0.unwrap_or((raw.m - 1) * (raw.m - 1) + 1);
        Sft::new(raw.a, cap)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let a: Vec<Vec<u8>> = (0..self.m)
            .map(|i| (0..self.m).map(|j| u8::from(self.allowed[i * self.m + j])).collect())
            .collect();
        serde_json::json!({ "m": self.m, "A": a, "max_p0": self.p0 })
    }

    pub fn alphabet_size(&self) -> usize {
        self.m
    }

    pub fn p0(&self) -> usize {
        self.p0
    }

    pub fn is_full_shift(&self) -> bool {
        self.allowed.iter().all(|&x| x)
    }

    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.allowed[a as usize * self.m + b as usize]
    }

    pub fn successors(&self, a: u8) -> impl Iterator<Item = u8> + '_ {
        (0..self.m as u8).filter(move |&b| self.allowed(a, b))
    }

    pub fn is_admissible(&self, symbols: &[u8]) -> bool {
        symbols.iter().all(|&s| (s as usize) < self.m)
            && symbols.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        if w.is_empty() || !self.is_admissible(w.symbols()) {
            Err(Error::InadmissibleWord(w.to_string()))
        } else {
            Ok(())
        }
    }

    /// `w(i, j)`: the connecting word of length `p0` with `i·w·j` admissible.
    pub fn connecting_word(&self, i: u8, j: u8) -> &Word {
        &self.connectors[i as usize * self.m + j as usize]
    }

    /// Extends `prefix` to total length `len` by always taking the smallest
    /// allowed successor, i.e. the prefix of the lexicographically smallest
    /// infinite admissible extension.
    pub fn smallest_extension(&self, prefix: &[u8], len: usize) -> Vec<u8> {
        let mut out = prefix.to_vec();
        if out.is_empty() && len > 0 {
            out.push(0);
        }
        while out.len() < len {
            let last = *out.last().unwrap();
            let next = self.successors(last).next().expect("every row has a successor");
            out.push(next);
        }
        out.truncate(len.max(prefix.len()));
        out
    }

    /// Admissible words of length `n`, lexicographically increasing.
    pub fn words(&self, n: usize) -> Words<'_> {
        Words::new(self, Vec::new(), n)
    }

    /// Admissible words of length `n` that start with `prefix`; splitting the
    /// stream by prefix lets callers consume it in parallel.
    pub fn words_with_prefix(&self, prefix: &[u8], n: usize) -> Words<'_> {
        Words::new(self, prefix.to_vec(), n)
    }

    /// `#Σ_{A,n}`: the sum of the entries of `A^{n-1}`.
    pub fn word_count(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let mut v = vec![1u128; self.m];
        for _ in 1..n {
            let mut next = vec![0u128; self.m];
            for i in 0..self.m {
                for j in 0..self.m {
                    if self.allowed[i * self.m + j] {
                        next[i] += v[j];
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }
}

/// Lexicographically smallest connecting word for every ordered pair.
pub fn build_connecting_words(sft: &Sft) -> Vec<Word> {
    let m = sft.m;
    let p0 = sft.p0;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m as u8 {
        for j in 0..m as u8 {
            let found = sft
                .words(p0)
                .find(|w| sft.allowed(i, w.symbols()[0]) && sft.allowed(*w.symbols().last().unwrap(), j))
                .expect("A^(p0+1) > 0 guarantees a connecting word");
            out.push(found);
        }
    }
    out
}

/// Streaming lexicographic enumeration of admissible words.
pub struct Words<'a> {
    sft: &'a Sft,
    prefix_len: usize,
    current: Vec<u8>,
    done: bool,
}

impl<'a> Words<'a> {
    fn new(sft: &'a Sft, prefix: Vec<u8>, n: usize) -> Self {
        let prefix_len = prefix.len();
        if n == 0 || prefix_len > n || !sft.is_admissible(&prefix) {
            return Words { sft, prefix_len, current: Vec::new(), done: true };
        }
        let current = sft.smallest_extension(&prefix, n);
        Words { sft, prefix_len, current, done: false }
    }

    fn advance(&mut self) -> bool {
        let m = self.sft.m as u8;
        let n = self.current.len();
        for i in (self.prefix_len..n).rev() {
            let start = self.current[i] + 1;
            let next = (start..m).find(|&b| i == 0 || self.sft.allowed(self.current[i - 1], b));
            if let Some(b) = next {
                self.current[i] = b;
                let filled = self.sft.smallest_extension(&self.current[..=i], n);
                self.current = filled;
                return true;
            }
        }
        false
    }
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let out = Word(self.current.clone());
        if !self.advance() {
            self.done = true;
        }
        Some(out)
    }
}

/// One edge of a [`BlockGraph`]: an admissible word of length `order`,
/// going from its first `order - 1` symbols to its last `order - 1`.
#[derive(Clone, Copy, Debug)]
pub struct BlockEdge {
    pub from: usize,
    pub to: usize,
    /// Base-`m` code of the edge word.
    pub code: usize,
}

/// The order-`K` higher-block graph: states are admissible `(K-1)`-words,
/// edges are admissible `K`-words. Locally constant potentials with window
/// at most `K` become edge weights on it.
#[derive(Clone, Debug)]
pub struct BlockGraph {
    m: usize,
    order: usize,
    states: Vec<usize>,
    state_of: Vec<u32>,
    edges: Vec<BlockEdge>,
    out_start: Vec<usize>,
}

impl BlockGraph {
    /// Builds the graph; `order` is raised to 2 when smaller so that the
    /// states always remember the last symbol.
    pub fn new(sft: &Sft, order: usize) -> Result<Self> {
        let order = order.max(2);
        let m = sft.m;
        let codes = (m as f64).powi(order as i32);
        if codes > MAX_BLOCK_CODES as f64 {
            return Err(Error::GraphTooLarge(format!(
                "order-{order} block graph over {m} symbols needs {codes:.0} codes"
            )));
        }
        let state_len = order - 1;
        let state_space = m.pow(state_len as u32);
        let mut state_of = vec![u32::MAX; state_space];
        let mut states = Vec::new();
        for w in sft.words(state_len) {
            let c = word_code(w.symbols(), m);
            state_of[c] = states.len() as u32;
            states.push(c);
        }
        let mut edges = Vec::new();
        let mut out_start = Vec::with_capacity(states.len() + 1);
        for (u, &c) in states.iter().enumerate() {
            out_start.push(edges.len());
            let last = (c % m) as u8;
            for b in sft.successors(last) {
                let code = c * m + b as usize;
                let to_code = code % state_space;
                let to = state_of[to_code];
                debug_assert!(to != u32::MAX);
                edges.push(BlockEdge { from: u, to: to as usize, code });
            }
        }
        out_start.push(edges.len());
        Ok(BlockGraph { m, order, states, state_of, edges, out_start })
    }

    pub fn alphabet_size(&self) -> usize {
        self.m
    }

    /// Length of edge words.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edges(&self) -> &[BlockEdge] {
        &self.edges
    }

    pub fn out_edges(&self, state: usize) -> std::ops::Range<usize> {
        self.out_start[state]..self.out_start[state + 1]
    }

    pub fn state_word(&self, state: usize) -> Vec<u8> {
        decode_word(self.states[state], self.order - 1, self.m)
    }

    pub fn edge_word(&self, edge: usize) -> Vec<u8> {
        decode_word(self.edges[edge].code, self.order, self.m)
    }

    /// State index of an admissible `(order-1)`-word.
    pub fn state_index(&self, symbols: &[u8]) -> Option<usize> {
        if symbols.len() != self.order - 1 {
            return None;
        }
        let idx = self.state_of[word_code(symbols, self.m)];
        (idx != u32::MAX).then_some(idx as usize)
    }

    /// Edge leaving `state` with new symbol `b`, if allowed.
    pub fn edge_from(&self, state: usize, b: u8) -> Option<usize> {
        self.out_edges(state).find(|&e| (self.edges[e].code % self.m) as u8 == b)
    }

    /// The periodic word traced by a cycle of edges (last symbol of each edge).
    pub fn cycle_word(&self, cycle: &[usize]) -> Word {
        Word(cycle.iter().map(|&e| (self.edges[e].code % self.m) as u8).collect())
    }
}

/// Maximum cycle mean of `weights` (one per edge) and an edge cycle attaining
/// it, by Howard's policy iteration. The graph must be strongly connected.
pub fn max_mean_cycle(graph: &BlockGraph, weights: &[f64]) -> (f64, Vec<usize>) {
    let n = graph.state_count();
    let edges = graph.edges();
    let scale = weights.iter().fold(1.0f64, |a, w| a.max(w.abs()));
    let eps = 1e-13 * scale;

    let mut policy: Vec<usize> = (0..n)
        .map(|u| {
            graph
                .out_edges(u)
                .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
                .expect("every state has an out-edge")
        })
        .collect();

    let mut eta = vec![0.0; n];
    let mut bias = vec![0.0; n];
    for _ in 0..100_000 {
        evaluate_policy(graph, weights, &policy, &mut eta, &mut bias);

        let mut changed = false;
        for u in 0..n {
            let mut best = policy[u];
            let mut best_eta = eta[edges[best].to];
            for e in graph.out_edges(u) {
                let v = eta[edges[e].to];
                if v > best_eta + eps {
                    best = e;
                    best_eta = v;
                }
            }
            if best != policy[u] && best_eta > eta[u] + eps {
                policy[u] = best;
                changed = true;
            }
        }
        if !changed {
            for u in 0..n {
                let current = weights[policy[u]] - eta[u] + bias[edges[policy[u]].to];
                let mut best = policy[u];
                let mut best_val = current;
                for e in graph.out_edges(u) {
                    let to = edges[e].to;
                    if (eta[to] - eta[u]).abs() > eps {
                        continue;
                    }
                    let val = weights[e] - eta[u] + bias[to];
                    if val > best_val + eps {
                        best = e;
                        best_val = val;
                    }
                }
                if best != policy[u] {
                    policy[u] = best;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let start = (0..n).max_by(|&a, &b| eta[a].total_cmp(&eta[b])).unwrap();
    // Walk the policy from `start` until a node repeats; that loop is the cycle.
    let mut seen = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut u = start;
    while seen[u] == usize::MAX {
        seen[u] = path.len();
        path.push(policy[u]);
        u = edges[policy[u]].to;
    }
    let cycle = path[seen[u]..].to_vec();
    let mean = cycle.iter().map(|&e| weights[e]).sum::<f64>() / cycle.len() as f64;
    (mean, cycle)
}

/// Minimum cycle mean, by negation.
pub fn min_mean_cycle(graph: &BlockGraph, weights: &[f64]) -> (f64, Vec<usize>) {
    let neg: Vec<f64> = weights.iter().map(|w| -w).collect();
    let (v, c) = max_mean_cycle(graph, &neg);
    let mean = c.iter().map(|&e| weights[e]).sum::<f64>() / c.len() as f64;
    debug_assert!((mean + v).abs() <= 1e-9 * (1.0 + v.abs()));
    (mean, c)
}

fn evaluate_policy(graph: &BlockGraph, weights: &[f64], policy: &[usize], eta: &mut [f64], bias: &mut [f64]) {
    let n = graph.state_count();
    let edges = graph.edges();
    // 0 = unvisited, 1 = on current walk, 2 = finished
    let mut mark = vec![0u8; n];
    let mut walk = Vec::new();
    for s in 0..n {
        if mark[s] != 0 {
            continue;
        }
        walk.clear();
        let mut u = s;
        while mark[u] == 0 {
            mark[u] = 1;
            walk.push(u);
            u = edges[policy[u]].to;
        }
        if mark[u] == 1 {
            // New cycle starting at u.
            let pos = walk.iter().position(|&x| x == u).unwrap();
            let cyc = &walk[pos..];
            let mean = cyc.iter().map(|&x| weights[policy[x]]).sum::<f64>() / cyc.len() as f64;
            bias[u] = 0.0;
            eta[u] = mean;
            mark[u] = 2;
            for i in 1..cyc.len() {
                let prev = cyc[i - 1];
                let cur = cyc[i];
                bias[cur] = bias[prev] - weights[policy[prev]] + mean;
                eta[cur] = mean;
                mark[cur] = 2;
            }
            walk.truncate(pos);
        }
        for &x in walk.iter().rev() {
            let to = edges[policy[x]].to;
            eta[x] = eta[to];
            bias[x] = weights[policy[x]] - eta[to] + bias[to];
            mark[x] = 2;
        }
    }
}

/// Every simple cycle of the graph, as edge lists. Fails once more than
/// `budget` cycles have been found.
pub fn simple_cycles(graph: &BlockGraph, budget: usize) -> Result<Vec<Vec<usize>>> {
    let n = graph.state_count();
    let edges = graph.edges();
    let mut cycles = Vec::new();
    let mut on_path = vec![false; n];
    let mut path: Vec<usize> = Vec::new();

    // Iterative DFS restricted to nodes >= start, so every cycle is reported
    // exactly once (from its smallest node).
    for start in 0..n {
        let mut stack: Vec<(usize, std::ops::Range<usize>)> = vec![(start, graph.out_edges(start))];
        on_path[start] = true;
        while let Some((u, iter)) = stack.last_mut() {
            let u = *u;
            match iter.next() {
                Some(e) => {
                    let v = edges[e].to;
                    if v == start {
                        let mut c = path.clone();
                        c.push(e);
                        cycles.push(c);
                        if cycles.len() > budget {
                            return Err(Error::GraphTooLarge(format!(
                                "more than {budget} simple cycles; lower k"
                            )));
                        }
                    } else if v > start && !on_path[v] {
                        on_path[v] = true;
                        path.push(e);
                        stack.push((v, graph.out_edges(v)));
                    }
                }
                None => {
                    on_path[u] = false;
                    stack.pop();
                    if !stack.is_empty() {
                        path.pop();
                    }
                }
            }
        }
    }
    Ok(cycles)
}

/// Result of [`cycle_mean_hull`].
#[derive(Clone, Debug)]
pub struct CycleMeanHull {
    pub region: Region,
    /// Periodic words whose averages are the extreme points (interval
    /// endpoints for `d = 1`, polygon vertices otherwise).
    pub witnesses: Vec<Word>,
    /// The extreme mean vectors, parallel to `witnesses`.
    pub witness_means: Vec<Vec<f64>>,
}

/// How [`cycle_mean_hull`] finds the extreme cycle means for `d >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HullMethod {
    /// Exhaustive simple-cycle enumeration (any `d`, small graphs only).
    SimpleCycles,
    /// Support-function queries answered by maximum-mean cycles (`d = 2`).
    SupportQueries,
}

/// Convex hull of the cycle means of edge weights `values` (`d` per edge).
///
/// For `d = 1` this is `[min cycle mean, max cycle mean]`. For `d >= 2` it is
/// the convex hull of the mean vectors of all simple cycles.
pub fn cycle_mean_hull(
    graph: &BlockGraph,
    values: &[f64],
    d: usize,
    method: HullMethod,
    budget: usize,
) -> Result<CycleMeanHull> {
    assert_eq!(values.len(), graph.edges().len() * d);
    if d == 1 {
        let (lo, lo_cycle) = min_mean_cycle(graph, values);
        let (hi, hi_cycle) = max_mean_cycle(graph, values);
        return Ok(CycleMeanHull {
            region: Region::interval(lo, hi),
            witnesses: vec![graph.cycle_word(&lo_cycle), graph.cycle_word(&hi_cycle)],
            witness_means: vec![vec![lo], vec![hi]],
        });
    }
    let mean_of = |cycle: &[usize]| -> Vec<f64> {
        let mut acc = vec![0.0; d];
        for &e in cycle {
            for c in 0..d {
                acc[c] += values[e * d + c];
            }
        }
        acc.iter().map(|x| x / cycle.len() as f64).collect()
    };
    match method {
        HullMethod::SimpleCycles => {
            let cycles = simple_cycles(graph, budget)?;
            let means: Vec<Vec<f64>> = cycles.iter().map(|c| mean_of(c)).collect();
            let region = Region::hull(&means, d)?;
            let (witnesses, witness_means) = match_vertices(&region, &cycles, &means, graph);
            Ok(CycleMeanHull { region, witnesses, witness_means })
        }
        HullMethod::SupportQueries => {
            if d != 2 {
                return Err(Error::Unsupported("support-query hulls need d = 2".into()));
            }
            let support = |dir: [f64; 2]| -> (Vec<f64>, Vec<usize>) {
                let w: Vec<f64> = (0..graph.edges().len())
                    .map(|e| dir[0] * values[2 * e] + dir[1] * values[2 * e + 1])
                    .collect();
                let (_, cycle) = max_mean_cycle(graph, &w);
                (mean_of(&cycle), cycle)
            };
            let mut found: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
            for dir in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
                found.push(support(dir));
            }
            // Refine each hull edge by querying its outward normal until no
            // query reveals a new extreme point.
            for _ in 0..10_000 {
                let pts: Vec<Vec<f64>> = found.iter().map(|(p, _)| p.clone()).collect();
                let region = Region::hull(&pts, 2)?;
                let verts = region.vertices();
                if verts.len() < 2 {
                    break;
                }
                let mut added = false;
                for i in 0..verts.len() {
                    let a = &verts[i];
                    let b = &verts[(i + 1) % verts.len()];
                    // Vertices are counter-clockwise, so the outward normal is (dy, -dx).
                    let normal = [b[1] - a[1], -(b[0] - a[0])];
                    let (p, cycle) = support(normal);
                    let gain = normal[0] * (p[0] - a[0]) + normal[1] * (p[1] - a[1]);
                    let scale = normal[0].hypot(normal[1]) * (1.0 + p[0].abs() + p[1].abs());
                    if gain > 1e-12 * scale {
                        found.push((p, cycle));
                        added = true;
                    }
                }
                if !added {
                    break;
                }
            }
            let pts: Vec<Vec<f64>> = found.iter().map(|(p, _)| p.clone()).collect();
            let cycles: Vec<Vec<usize>> = found.iter().map(|(_, c)| c.clone()).collect();
            let region = Region::hull(&pts, 2)?;
            let (witnesses, witness_means) = match_vertices(&region, &cycles, &pts, graph);
            Ok(CycleMeanHull { region, witnesses, witness_means })
        }
    }
}

fn match_vertices(
    region: &Region,
    cycles: &[Vec<usize>],
    means: &[Vec<f64>],
    graph: &BlockGraph,
) -> (Vec<Word>, Vec<Vec<f64>>) {
    let mut words = Vec::new();
    let mut pts = Vec::new();
    for v in region.vertices() {
        if let Some(i) = (0..means.len()).min_by(|&a, &b| dist2(&means[a], &v).total_cmp(&dist2(&means[b], &v))) {
            words.push(graph.cycle_word(&cycles[i]));
            pts.push(means[i].clone());
        }
    }
    (words, pts)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Sft {
        Sft::golden_mean()
    }

    #[test]
    fn primitive_exponents() {
        assert_eq!(check_primitive(&[vec![1, 1], vec![1, 1]], 10).unwrap(), 1);
        assert_eq!(check_primitive(&[vec![1, 1], vec![1, 0]], 10).unwrap(), 2);
        assert!(matches!(
            check_primitive(&[vec![1, 0], vec![0, 1]], 10),
            Err(Error::NotPrimitive(10))
        ));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(Sft::new(vec![vec![1, 2], vec![1, 1]], 4).is_err());
        assert!(Sft::new(vec![vec![1, 1]], 4).is_err());
        assert!(Sft::new(vec![vec![0, 1], vec![1, 0]], 10).is_err());
    }

    #[test]
    fn connecting_words_full_shift() {
        let s = Sft::full(2).unwrap();
        assert_eq!(s.connecting_word(0, 1).to_string(), "1");
        assert_eq!(s.connecting_word(1, 1).len(), 1);
    }

    #[test]
    fn connecting_words_golden_mean_match_exhaustive_search() {
        let s = golden();
        for i in 0..2u8 {
            for j in 0..2u8 {
                let mut best: Option<Vec<u8>> = None;
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        let cand = [i, a, b, j];
                        let ok = cand.windows(2).all(|p| !(p[0] == 1 && p[1] == 1));
                        if ok && best.is_none() {
                            best = Some(vec![a, b]);
                        }
                    }
                }
                assert_eq!(s.connecting_word(i, j).symbols(), best.unwrap().as_slice());
            }
        }
        assert_eq!(s.connecting_word(1, 1).to_string(), "11");
    }

    #[test]
    fn word_counts() {
        assert_eq!(Sft::full(2).unwrap().words(3).count(), 8);
        assert_eq!(golden().words(3).count(), 5);
        assert_eq!(Sft::full(3).unwrap().words(1).count(), 3);
        let s = golden();
        for n in 1..=12 {
            assert_eq!(s.words(n).count() as u128, s.word_count(n));
        }
    }

    #[test]
    fn words_are_sorted_and_admissible() {
        let s = Sft::new(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]], 10).unwrap();
        let ws: Vec<Word> = s.words(6).collect();
        assert!(ws.windows(2).all(|p| p[0] < p[1]));
        assert!(ws.iter().all(|w| s.is_admissible(w.symbols())));
        assert_eq!(ws.len() as u128, s.word_count(6));
        let split: usize = (0..3u8).map(|a| s.words_with_prefix(&[a], 6).count()).sum();
        assert_eq!(split, ws.len());
    }

    #[test]
    fn word_parse_roundtrip() {
        let w: Word = "21221".parse().unwrap();
        assert_eq!(w.symbols(), &[1, 0, 1, 1, 0]);
        assert_eq!(w.to_string(), "21221");
        let long = Word::new(vec![0, 11, 3]);
        assert_eq!(long.to_string(), "1.12.4");
        assert_eq!(long.to_string().parse::<Word>().unwrap(), long);
    }

    #[test]
    fn block_graph_sizes() {
        let g = BlockGraph::new(&golden(), 3).unwrap();
        assert_eq!(g.state_count(), 3);
        assert_eq!(g.edges().len(), 5);
        let g1 = BlockGraph::new(&Sft::full(2).unwrap(), 1).unwrap();
        assert_eq!(g1.order(), 2);
    }

    fn indicator_of_two(g: &BlockGraph) -> Vec<f64> {
        // window-1 weight read from the first symbol of each edge word
        (0..g.edges().len()).map(|e| f64::from(g.edge_word(e)[0] == 1)).collect()
    }

    #[test]
    fn hull_full_shift_indicator() {
        let g = BlockGraph::new(&Sft::full(2).unwrap(), 2).unwrap();
        let h = cycle_mean_hull(&g, &indicator_of_two(&g), 1, HullMethod::SimpleCycles, 100).unwrap();
        assert_eq!(h.region.interval_bounds(), Some((0.0, 1.0)));
    }

    #[test]
    fn hull_golden_mean_indicator() {
        let g = BlockGraph::new(&golden(), 2).unwrap();
        let h = cycle_mean_hull(&g, &indicator_of_two(&g), 1, HullMethod::SimpleCycles, 100).unwrap();
        assert_eq!(h.region.interval_bounds(), Some((0.0, 0.5)));
        assert_eq!(h.witnesses[1].len(), 2);
    }

    #[test]
    fn hull_constant_weight() {
        let g = BlockGraph::new(&golden(), 3).unwrap();
        let w = vec![0.7; g.edges().len()];
        let h = cycle_mean_hull(&g, &w, 1, HullMethod::SimpleCycles, 100).unwrap();
        let (lo, hi) = h.region.interval_bounds().unwrap();
        assert!((lo - 0.7).abs() < 1e-15 && (hi - 0.7).abs() < 1e-15);
    }

    #[test]
    fn simple_cycle_budget_is_enforced() {
        let g = BlockGraph::new(&Sft::full(3).unwrap(), 3).unwrap();
        assert!(matches!(simple_cycles(&g, 10), Err(Error::GraphTooLarge(_))));
    }

    #[test]
    fn support_hull_matches_enumeration() {
        let s = Sft::full(3).unwrap();
        let g = BlockGraph::new(&s, 2).unwrap();
        let vals: Vec<f64> = (0..g.edges().len())
            .flat_map(|e| {
                let w = g.edge_word(e);
                vec![(w[0] as f64 * 0.37).sin() + w[1] as f64 * 0.1, (w[0] as f64 + 2.0 * w[1] as f64).cos()]
            })
            .collect();
        let a = cycle_mean_hull(&g, &vals, 2, HullMethod::SimpleCycles, 10_000).unwrap();
        let b = cycle_mean_hull(&g, &vals, 2, HullMethod::SupportQueries, 10_000).unwrap();
        let va = a.region.vertices();
        let vb = b.region.vertices();
        assert_eq!(va.len(), vb.len());
        for v in &va {
            assert!(vb.iter().any(|u| dist2(u, v) < 1e-20));
        }
    }
}
