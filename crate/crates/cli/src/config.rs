//! Experiment configuration.
//!
//! The file is TOML restricted to flat `key = value` pairs under the four
//! sections below; every key is optional.
//!
//! ```toml
//! [model]
//! config = "I"             # "I" (default) or "II"; or give d, s, beta instead
//! feature_kind = "both"    # "binary", "uniform" or "both"
//! d = 20
//! s = 3
//! beta = [1.0, 1.0, 1.0]   # or a single number repeated s times
//! sigma0_sq = 1.0
//!
//! [grid]
//! gamma = [0.1, 0.2, 0.3]
//! depth = [7]
//! B = 100
//! n = 1000
//! n_test = 256
//! lemma_n = [5, 10, 20, 25]
//!
//! [run]
//! reps = 1000
//! master_seed = 0
//! workers = 4
//!
//! [output]
//! csv = "results.csv"
//! precision = 10
//! ```

use std::path::{Path, PathBuf};

use exoforest::cart_process::subsample_size;
use exoforest::mc_harness::{DEFAULT_N_TEST, MAX_EMPIRICAL_DEPTH};
use exoforest::model::{FeatureKind, ModelSpec};
use exoforest::moments::MAX_MULTINOMIAL_N;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    config: Option<String>,
    feature_kind: Option<String>,
    d: Option<usize>,
    s: Option<usize>,
    beta: Option<Beta>,
    sigma0_sq: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Beta {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    gamma: Option<Vec<f64>>,
    depth: Option<Vec<usize>>,
    #[serde(rename = "B")]
    b: Option<usize>,
    n: Option<usize>,
    n_test: Option<usize>,
    lemma_n: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    reps: Option<usize>,
    master_seed: Option<u64>,
    workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<PathBuf>,
    precision: Option<usize>,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `"I"`, `"II"` or `"custom"`.
    pub config_name: String,
    /// One spec per feature kind to run, binary first.
    pub specs: Vec<ModelSpec>,
    pub gammas: Vec<f64>,
    pub depths: Vec<usize>,
    pub b: usize,
    pub n: usize,
    pub n_test: usize,
    pub lemma_n: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub csv: Option<PathBuf>,
    pub precision: usize,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse(&text, ov)
}

pub fn parse(text: &str, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    build(raw, ov)
}

fn kinds(name: Option<&str>) -> Result<Vec<FeatureKind>, CliError> {
    match name.unwrap_or("both") {
        "binary" => Ok(vec![FeatureKind::BinaryBernoulliHalf]),
        "uniform" => Ok(vec![FeatureKind::UniformUnit]),
        "both" => Ok(vec![FeatureKind::BinaryBernoulliHalf, FeatureKind::UniformUnit]),
        other => Err(bad("model.feature_kind", format!("expected \"binary\", \"uniform\" or \"both\", got {other:?}"))),
    }
}

fn build(raw: RawConfig, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    let m = raw.model;
    let kinds = kinds(m.feature_kind.as_deref())?;
    let custom = m.d.is_some() || m.s.is_some() || m.beta.is_some();
    let named = m.config.as_deref().or(if custom { None } else { Some("I") });
    let (config_name, base) = match named {
        Some(name @ ("I" | "II")) => {
            for (field, given) in [("model.d", m.d.is_some()), ("model.s", m.s.is_some()), ("model.beta", m.beta.is_some())] {
                if given {
                    return Err(bad(field, format!("cannot be combined with the named config \"{name}\"")));
                }
            }
            let spec = if name == "I" { ModelSpec::config_i(kinds[0]) } else { ModelSpec::config_ii(kinds[0]) };
            (name.to_string(), spec)
        }
        Some(other) => return Err(bad("model.config", format!("expected \"I\" or \"II\", got {other:?}"))),
        None => {
            let d = m.d.ok_or_else(|| bad("model.d", "required unless model.config is given"))?;
            let beta = match (m.beta, m.s) {
                (Some(Beta::Many(v)), s) => {
                    if let Some(s) = s.filter(|&s| s != v.len()) {
                        return Err(bad("model.s", format!("{s} does not match the {} beta values", v.len())));
                    }
                    v
                }
                (Some(Beta::One(x)), Some(s)) => vec![x; s],
                (Some(Beta::One(_)), None) => return Err(bad("model.s", "required when beta is a single number")),
                (None, Some(0)) => Vec::new(),
                (None, _) => return Err(bad("model.beta", "required unless s = 0")),
            };
            let sigma = m.sigma0_sq.ok_or_else(|| bad("model.sigma0_sq", "required unless model.config is given"))?;
            let spec = ModelSpec::new(d, beta, sigma, kinds[0]).map_err(|e| bad("model", e))?;
            ("custom".to_string(), spec)
        }
    };
    let base = match (m.sigma0_sq, config_name.as_str()) {
        (Some(s), "I" | "II") => base.with_sigma0_sq(s).map_err(|e| bad("model.sigma0_sq", e))?,
        _ => base,
    };
    let specs = kinds.iter().map(|&k| base.with_feature_kind(k)).collect();

    let g = raw.grid;
    let gammas = g.gamma.unwrap_or_else(|| (1..=10).map(|k| k as f64 / 10.0).collect());
    if gammas.is_empty() {
        return Err(bad("grid.gamma", "must not be empty"));
    }
    if let Some(x) = gammas.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(bad("grid.gamma", format!("{x} is outside (0, 1]")));
    }
    let depths = g.depth.unwrap_or_else(|| vec![7]);
    if depths.is_empty() {
        return Err(bad("grid.depth", "must not be empty"));
    }
    let b = g.b.unwrap_or(100);
    let n = g.n.unwrap_or(1000);
    let n_test = g.n_test.unwrap_or(DEFAULT_N_TEST);
    for (field, v) in [("grid.B", b), ("grid.n", n), ("grid.n_test", n_test)] {
        if v == 0 {
            return Err(bad(field, "must be at least 1"));
        }
    }
    let lemma_n = g.lemma_n.unwrap_or_else(|| vec![5, 10, 20, 25]);
    if let Some(k) = lemma_n.iter().find(|&&k| k == 0 || k > MAX_MULTINOMIAL_N) {
        return Err(bad("grid.lemma_n", format!("{k} is outside 1..={MAX_MULTINOMIAL_N}")));
    }

    let reps = ov.reps.or(raw.run.reps).unwrap_or(1000);
    if reps == 0 {
        return Err(bad("run.reps", "must be at least 1"));
    }
    let workers = ov.workers.or(raw.run.workers);
    if workers == Some(0) {
        return Err(bad("run.workers", "must be at least 1"));
    }
    let precision = raw.output.precision.unwrap_or(10);
    if !(1..=17).contains(&precision) {
        return Err(bad("output.precision", format!("{precision} is outside 1..=17")));
    }

    Ok(ExperimentConfig {
        config_name,
        specs,
        gammas,
        depths,
        b,
        n,
        n_test,
        lemma_n,
        reps,
        master_seed: ov.seed.or(raw.run.master_seed).unwrap_or(0),
        workers,
        csv: ov.out.clone().or(raw.output.csv),
        precision,
    })
}

impl ExperimentConfig {
    /// Binary processes need every depth below the subsample size; the
    /// empirical harness packs cell keys into 64 bits.
    pub fn check_depths(&self, empirical: bool) -> Result<(), CliError> {
        for spec in &self.specs {
            for &gamma in &self.gammas {
                let m = subsample_size(spec.d(), gamma).map_err(|e| bad("grid.gamma", e))?;
                for &l in &self.depths {
                    if spec.feature_kind() == FeatureKind::BinaryBernoulliHalf && l >= m {
                        return Err(bad(
                            "grid.depth",
                            format!("binary depth {l} needs more than {m} subsampled features (gamma = {gamma})"),
                        ));
                    }
                    if empirical && l > MAX_EMPIRICAL_DEPTH {
                        return Err(bad("grid.depth", format!("{l} exceeds {MAX_EMPIRICAL_DEPTH} for empirical runs")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(text: &str) -> ExperimentConfig {
        parse(text, &Overrides::default()).unwrap()
    }

    fn parse_err(text: &str) -> String {
        match parse(text, &Overrides::default()) {
            Err(CliError::Validation(m)) => m,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_figure_one_setup() {
        let c = parse_ok("");
        assert_eq!(c.config_name, "I");
        assert_eq!(c.specs.len(), 2);
        assert_eq!(c.specs[0], ModelSpec::config_i(FeatureKind::BinaryBernoulliHalf));
        assert_eq!(c.gammas.len(), 10);
        assert_eq!(c.depths, vec![7]);
        assert_eq!((c.b, c.n, c.reps, c.precision), (100, 1000, 1000, 10));
    }

    #[test]
    fn named_config_ii() {
        let c = parse_ok("[model]\nconfig = \"II\"\nfeature_kind = \"uniform\"\n");
        assert_eq!(c.specs, vec![ModelSpec::config_ii(FeatureKind::UniformUnit)]);
        assert_eq!(c.specs[0].sigma0_sq(), 1.69);
    }

    #[test]
    fn custom_model_with_scalar_beta() {
        let c = parse_ok("[model]\nd = 20\ns = 3\nbeta = 1.0\nsigma0_sq = 1.0\nfeature_kind = \"binary\"\n[grid]\nB = 50\n");
        assert_eq!(c.config_name, "custom");
        assert_eq!(c.specs[0].beta(), &[1.0, 1.0, 1.0]);
        assert_eq!(c.b, 50);
    }

    #[test]
    fn sparse_model_without_beta() {
        let c = parse_ok("[model]\nd = 10\ns = 0\nsigma0_sq = 1.0\n");
        assert_eq!(c.specs[0].s(), 0);
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides { seed: Some(9), reps: Some(5), workers: Some(2), out: Some("x.csv".into()) };
        let c = parse("[run]\nreps = 100\nmaster_seed = 1\nworkers = 8\n", &ov).unwrap();
        assert_eq!((c.reps, c.master_seed, c.workers), (5, 9, Some(2)));
        assert_eq!(c.csv, Some(PathBuf::from("x.csv")));
    }

    #[test]
    fn errors_name_the_field() {
        assert!(parse_err("[grid]\ngamma = [0.5, 1.5]\n").starts_with("grid.gamma"));
        assert!(parse_err("[model]\nconfig = \"III\"\n").starts_with("model.config"));
        assert!(parse_err("[model]\nconfig = \"I\"\nd = 10\n").starts_with("model.d"));
        assert!(parse_err("[model]\nd = 10\nbeta = [1.0]\ns = 2\nsigma0_sq = 1\n").starts_with("model.s"));
        assert!(parse_err("[run]\nreps = 0\n").starts_with("run.reps"));
        assert!(parse_err("[output]\nprecision = 40\n").starts_with("output.precision"));
    }

    #[test]
    fn syntax_errors_report_the_line() {
        let msg = parse_err("[grid]\nn = 10\nB = \"many\"\n");
        assert!(msg.contains("line 3"), "{msg}");
        let msg = parse_err("[grid]\nbogus = 1\n");
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn binary_depth_limit() {
        let c = parse_ok("[model]\nconfig = \"I\"\n[grid]\ngamma = [0.05]\ndepth = [5]\n");
        assert!(c.check_depths(false).is_err());
        let c = parse_ok("[model]\nconfig = \"I\"\nfeature_kind = \"uniform\"\n[grid]\ngamma = [0.05]\ndepth = [5]\n");
        assert!(c.check_depths(false).is_ok());
    }
}
