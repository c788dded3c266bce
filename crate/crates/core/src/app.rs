//! Batch front-end: resolves model arguments, runs one command and writes
//! its primary output.

use std::io::Write;
use std::path::PathBuf;

use serde_json::json;

use crate::check::run_checks;
use crate::error::{Error, Result};
use crate::geometry::{carpet_catalog, IfsSpec};
use crate::localized::{
    fixed_point_set_dimension, localized_dimension, moran_sampler, FixedSetOptions, LocalizedTarget, MoranOptions,
};
use crate::metric::{budget_from_env, WeakGibbsMetric};
use crate::potential::Potential;
use crate::pressure::{pressure_bracket, pressure_exact};
use crate::sft::Sft;
use crate::spectrum::{auto_grid, default_eps, spectrum_grid, DualOptions, GridOptions, SpectrumModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Pressure,
    Balls,
    Spectrum,
    Fdim,
    Fixedset,
    Moran,
    Check,
}

/// Everything a command may need. Model arguments are either bundled names
/// or paths to JSON files.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// `full2`, `full3`, `golden` or a path to an SFT JSON file.
    pub model: Option<String>,
    /// `standard`, `ratios:r1,r2,…` or a path to a potential JSON file.
    pub metric: Option<String>,
    /// `digit:j` (frequency of symbol `j`) or a path to a potential JSON file.
    pub potential: Option<String>,
    /// Catalog IFS; replaces model, metric and potential by the coding
    /// space, `log ρ` and the identity potential.
    pub carpet: Option<String>,
    /// `constant:a,…`, `identity` or a path to a target JSON file.
    pub target: Option<String>,
    pub alpha_grid: usize,
    pub n: usize,
    /// `None` means `max(0.25/√n, 0.02)`.
    pub eps: Option<f64>,
    pub k: usize,
    pub depth: usize,
    pub seed: u64,
    pub blocks: Vec<usize>,
    pub paths: usize,
    pub instances: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            metric: None,
            potential: None,
            carpet: None,
            target: None,
            alpha_grid: 21,
            n: 24,
            eps: None,
            k: 4,
            depth: 6,
            seed: 0,
            blocks: vec![1000, 2000, 4000, 8000, 16000, 32000, 37000],
            paths: 1,
            instances: 500,
            out: None,
        }
    }
}

/// Resolved `(Σ_A, d_Ψ, Φ)` plus the IFS when one was requested.
pub struct Resolved {
    pub sft: Sft,
    pub metric: WeakGibbsMetric,
    pub potential: Potential,
    pub ifs: Option<IfsSpec>,
}

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidModel(format!("cannot read {path}: {e}")))
}

fn parse_floats(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidModel(format!("bad number `{s}`"))))
        .collect()
}

pub fn load_sft(spec: &str) -> Result<Sft> {
    match spec {
        "golden" => Ok(Sft::golden_mean()),
        _ => match spec.strip_prefix("full") {
            Some(m) if m.parse::<usize>().is_ok() => Sft::full(m.parse().unwrap()),
            _ => Sft::from_json(&read(spec)?),
        },
    }
}

pub fn load_metric(sft: &Sft, spec: Option<&str>) -> Result<WeakGibbsMetric> {
    match spec {
        None | Some("standard") => Ok(WeakGibbsMetric::standard(sft)),
        Some(s) => match s.strip_prefix("ratios:") {
            Some(list) => WeakGibbsMetric::per_symbol_ratios(sft, &parse_floats(list)?),
            None => WeakGibbsMetric::new(sft, Potential::from_json(sft, &read(s)?)?),
        },
    }
}

pub fn load_potential(sft: &Sft, spec: Option<&str>) -> Result<Potential> {
    let spec = spec.unwrap_or("digit:2");
    match spec.strip_prefix("digit:") {
        Some(j) => {
            let j: usize = j.parse().map_err(|_| Error::InvalidModel(format!("bad symbol in `{spec}`")))?;
            if j == 0 || j > sft.alphabet_size() {
                return Err(Error::InvalidModel(format!("symbol {j} outside 1..={}", sft.alphabet_size())));
            }
            Ok(Potential::digit(sft, (j - 1) as u8))
        }
        None => Potential::from_json(sft, &read(spec)?),
    }
}

pub fn load_ifs(spec: &str) -> Result<IfsSpec> {
    match carpet_catalog(spec) {
        Err(Error::UnknownCatalogEntry(_)) if std::path::Path::new(spec).exists() => IfsSpec::from_json(&read(spec)?),
        other => other,
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved> {
        if let Some(c) = &self.carpet {
            let ifs = load_ifs(c)?;
            return Ok(Resolved {
                sft: ifs.sft(),
                metric: ifs.metric(),
                potential: ifs.identity_potential(self.k)?,
                ifs: Some(ifs),
            });
        }
        let sft = load_sft(self.model.as_deref().unwrap_or("full2"))?;
        let metric = load_metric(&sft, self.metric.as_deref())?;
        let potential = load_potential(&sft, self.potential.as_deref())?;
        Ok(Resolved { sft, metric, potential, ifs: None })
    }

    fn load_target(&self, r: &Resolved) -> Result<LocalizedTarget> {
        let spec = self.target.as_deref().unwrap_or("identity");
        if let Some(list) = spec.strip_prefix("constant:") {
            return LocalizedTarget::constant(&r.sft, &parse_floats(list)?);
        }
        if spec == "identity" {
            let ifs = r.ifs.as_ref().ok_or_else(|| Error::InvalidModel("target `identity` needs --carpet".into()))?;
            return LocalizedTarget::identity(ifs, self.depth);
        }
        LocalizedTarget::from_json(&r.sft, &read(spec)?)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.depth == 0 || self.alpha_grid == 0 || self.paths == 0 {
            return Err(Error::InvalidModel("n, k, depth, alpha-grid and paths must be positive".into()));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::InvalidModel("eps must be positive".into()));
            }
        }
        Ok(())
    }
}

fn emit(cfg: &RunConfig, stdout: &mut dyn Write, write: impl Fn(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            write(&mut f)?;
            f.flush()?;
            Ok(())
        }
        None => write(stdout),
    }
}

fn emit_json(cfg: &RunConfig, stdout: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    emit(cfg, stdout, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn wants_json(cfg: &RunConfig) -> bool {
    cfg.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"))
}

/// Runs `command`; the returned code is 0 on success and 1 when `check`
/// found violations.
pub fn run(command: Command, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    cfg.validate()?;
    let budget = budget_from_env();
    match command {
        Command::Pressure => {
            let r = cfg.resolve()?;
            let exact = pressure_exact(&r.sft, &r.potential).ok();
            let mut brackets = Vec::new();
            let mut truncated = None;
            for n in 1..=cfg.n {
                match pressure_bracket(&r.sft, &r.potential, n, budget) {
                    Ok(b) => brackets.push(b),
                    Err(e @ Error::BudgetExceeded(_)) => {
                        truncated = Some(e.to_string());
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            let contained = exact.map(|p| brackets.iter().all(|b| b.lo <= p && p <= b.hi));
            emit_json(cfg, stdout, &json!({
                "exact": exact,
                "brackets": brackets,
                "exact_in_all_brackets": contained,
                "truncated": truncated,
            }))?;
        }
        Command::Balls => {
            let r = cfg.resolve()?;
            let fd = r.metric.full_dimension(cfg.n, budget)?;
            let (lo, hi) = r.metric.cover_length_bounds(cfg.n as f64);
            emit_json(cfg, stdout, &json!({
                "n": fd.n,
                "cover_size": fd.count.to_string(),
                "d_hat": fd.d_hat,
                "bowen_root": fd.bowen_root,
                "counting_upper_bound": fd.counting_upper_bound,
                "htop": fd.htop,
                "length_bounds": [lo, hi],
            }))?;
        }
        Command::Spectrum => {
            let r = cfg.resolve()?;
            let model = SpectrumModel::new(&r.sft, &r.metric, &r.potential, cfg.k)?;
            let alphas = auto_grid(model.region(), cfg.alpha_grid);
            let mut opts = GridOptions::new(cfg.n);
            opts.eps = cfg.eps.unwrap_or_else(|| default_eps(cfg.n));
            opts.budget = budget;
            opts.primal_every = 8;
            let grid = spectrum_grid(&model, &r.metric, &r.potential, &alphas, &opts)?;
            if wants_json(cfg) {
                emit_json(cfg, stdout, &grid.to_json())?;
            } else {
                emit(cfg, stdout, |w| grid.write_csv(w))?;
            }
        }
        Command::Fdim => {
            let r = cfg.resolve()?;
            let model = SpectrumModel::new(&r.sft, &r.metric, &r.potential, cfg.k)?;
            let target = cfg.load_target(&r)?;
            let rep = localized_dimension(&model, &target, &DualOptions::default())?;
            emit_json(cfg, stdout, &json!({ "k": cfg.k, "depth": target.depth(), "report": rep }))?;
        }
        Command::Fixedset => {
            let name = cfg.carpet.as_deref().ok_or_else(|| Error::InvalidModel("fixedset needs --carpet".into()))?;
            let ifs = load_ifs(name)?;
            let rep = fixed_point_set_dimension(&ifs, cfg.k, cfg.depth, &FixedSetOptions::default())?;
            let dim_j = ifs.similarity_dimension();
            emit_json(cfg, stdout, &json!({
                "carpet": name,
                "value": rep.value,
                "dim_J": dim_j,
                "gap_to_dim_J": (rep.value - dim_j).abs(),
                "report": rep,
            }))?;
        }
        Command::Moran => {
            let r = cfg.resolve()?;
            let model = SpectrumModel::new(&r.sft, &r.metric, &r.potential, cfg.k)?;
            let target = cfg.load_target(&r)?;
            let opts = MoranOptions::new(cfg.blocks.clone(), cfg.seed, cfg.paths);
            let rep = moran_sampler(&model, &target, &opts)?;
            if wants_json(cfg) {
                emit_json(cfg, stdout, &serde_json::to_value(&rep)?)?;
            } else {
                emit(cfg, stdout, |w| rep.write_csv(w))?;
            }
        }
        Command::Check => {
            let rep = run_checks(cfg.instances, cfg.seed);
            emit_json(cfg, stdout, &serde_json::to_value(&rep)?)?;
            return Ok(if rep.passed() { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// Machine-readable error line.
pub fn error_json(e: &Error) -> serde_json::Value {
    json!({ "error": e.kind(), "message": e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_csv_to_stdout() {
        let cfg = RunConfig { alpha_grid: 5, n: 8, k: 1, ..RunConfig::default() };
        let mut out = Vec::new();
        assert_eq!(run(Command::Spectrum, &cfg, &mut out).unwrap(), 0);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("alpha0,lambda_hat,e_hat,in_L,in_riL,q_star0,witness_gap\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn bad_inputs_map_to_kinds() {
        let cfg = RunConfig { carpet: Some("nope".into()), ..RunConfig::default() };
        assert_eq!(run(Command::Fixedset, &cfg, &mut Vec::new()).unwrap_err().kind(), "UnknownCatalogEntry");
        let cfg = RunConfig { potential: Some("digit:7".into()), ..RunConfig::default() };
        let e = run(Command::Pressure, &cfg, &mut Vec::new()).unwrap_err();
        assert_eq!(error_json(&e)["error"], "InvalidModel");
    }

    #[test]
    fn pressure_json() {
        let cfg = RunConfig { model: Some("golden".into()), potential: Some("digit:1".into()), n: 6, ..RunConfig::default() };
        let mut out = Vec::new();
        run(Command::Pressure, &cfg, &mut out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["exact_in_all_brackets"], true);
        assert_eq!(v["brackets"].as_array().unwrap().len(), 6);
    }
}
