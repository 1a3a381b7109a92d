//! Experiment configuration file (TOML).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use apg_restart::dataio::{self, Dataset, SyntheticKind, SyntheticSpec};
use apg_restart::solver::Algorithm;
use apg_restart::{Regularizer, RestartScheme, SmoothObjective, SolverConfig, StepsizeMode};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    problem: RawProblem,
    #[serde(default)]
    solvers: Vec<RawSolver>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    objective: ObjectiveName,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    regularizer: Option<RawRegularizer>,
    dataset: RawDataset,
    #[serde(default)]
    init_scale: Option<f64>,
    #[serde(default)]
    f_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    LogisticNcvx,
    Robust,
    Quadratic,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawRegularizer {
    Zero,
    L1 { mu: f64 },
    SquaredL2 { mu: f64 },
    ElasticNet { mu1: f64, mu2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindName {
    LogisticSep,
    RobustOutliers,
    LassoKnown,
}

impl From<KindName> for SyntheticKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::LogisticSep => SyntheticKind::LogisticSep,
            KindName::RobustOutliers => SyntheticKind::RobustOutliers,
            KindName::LassoKnown => SyntheticKind::LassoKnown,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
enum RawDataset {
    Fixture {
        kind: KindName,
    },
    Synthetic {
        kind: KindName,
        n: usize,
        d: usize,
        seed: u64,
        #[serde(default)]
        corruption: Option<f64>,
    },
    Libsvm {
        path: PathBuf,
        #[serde(default)]
        dim: Option<usize>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    #[serde(default)]
    name: Option<String>,
    #[serde(default = "default_algorithm")]
    algorithm: AlgorithmName,
    #[serde(default)]
    scheme: Option<RawScheme>,
    #[serde(default)]
    min_period: Option<usize>,
    #[serde(default = "default_stepsize")]
    stepsize: StepsizeName,
    #[serde(default)]
    beta: Option<f64>,
    #[serde(default)]
    lambda_rule: Option<f64>,
    max_iters: usize,
    seeds: Vec<u64>,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AlgorithmName {
    ApgRestart,
    ProxGrad,
    Ag,
    ApgNever,
}

fn default_algorithm() -> AlgorithmName {
    AlgorithmName::ApgRestart
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StepsizeName {
    Theory,
    Experiment,
    Custom,
}

fn default_stepsize() -> StepsizeName {
    StepsizeName::Theory
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawScheme {
    Fixed {
        q: usize,
    },
    FunctionValue {
        #[serde(default)]
        rho: Option<f64>,
    },
    GradientMapping {
        #[serde(default)]
        tau: Option<f64>,
    },
    NonMonotone {
        #[serde(default)]
        tau: Option<f64>,
    },
    Never,
}

/// A validated configuration with the dataset loaded.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub output_dir: Option<PathBuf>,
    pub problem: Problem,
    pub solvers: Vec<SolverSpec>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: SmoothObjective,
    pub regularizer: Regularizer,
    pub dataset_name: String,
    pub init_scale: f64,
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolverSpec {
    pub name: String,
    pub algorithm: Algorithm,
    pub config: SolverConfig,
    pub seeds: Vec<u64>,
}

impl SolverSpec {
    pub fn scheme_label(&self) -> String {
        match self.algorithm {
            Algorithm::ApgRestart => self.config.scheme.label(),
            Algorithm::NeverRestartApg => RestartScheme::never().label(),
            _ => "none".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative dataset paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version),
            ));
        }
        let problem = build_problem(raw.problem, base)?;
        if raw.solvers.is_empty() {
            return Err(field_err("solvers", "at least one solver is required"));
        }
        let mut names = HashSet::new();
        let mut solvers = Vec::with_capacity(raw.solvers.len());
        for (i, s) in raw.solvers.into_iter().enumerate() {
            let spec = build_solver(s, &format!("solvers[{i}]"))?;
            if !names.insert(spec.name.clone()) {
                return Err(field_err(format!("solvers[{i}].name"), format!("duplicate name {:?}", spec.name)));
            }
            solvers.push(spec);
        }
        Ok(Self {
            name: raw.name.unwrap_or_else(|| "experiment".into()),
            output_dir: raw.output_dir,
            problem,
            solvers,
        })
    }

    /// Replaces every seed list with `[seed]`.
    pub fn override_seed(&mut self, seed: u64) {
        for s in &mut self.solvers {
            s.seeds = vec![seed];
        }
    }
}

fn build_problem(raw: RawProblem, base: &Path) -> Result<Problem, ConfigError> {
    let dataset = load_dataset(raw.dataset, base)?;
    let dataset_name = dataset.name.clone();
    let Dataset { features, labels, .. } = dataset;
    let objective = match raw.objective {
        ObjectiveName::LogisticNcvx => {
            let alpha = raw.alpha.unwrap_or(apg_restart::objectives::DEFAULT_NCVX_ALPHA);
            SmoothObjective::logistic_ncvx(features, labels, alpha)
        }
        ObjectiveName::Robust | ObjectiveName::Quadratic if raw.alpha.is_some() => {
            return Err(field_err("problem.alpha", "only used by the logistic_ncvx objective"));
        }
        ObjectiveName::Robust => SmoothObjective::robust(features, labels),
        ObjectiveName::Quadratic => SmoothObjective::quadratic(features, labels),
    }
    .map_err(|e| field_err("problem.objective", e.to_string()))?;

    let regularizer = match raw.regularizer.unwrap_or(RawRegularizer::Zero) {
        RawRegularizer::Zero => Ok(Regularizer::Zero),
        RawRegularizer::L1 { mu } => Regularizer::l1(mu),
        RawRegularizer::SquaredL2 { mu } => Regularizer::squared_l2(mu),
        RawRegularizer::ElasticNet { mu1, mu2 } => Regularizer::elastic_net(mu1, mu2),
    }
    .map_err(|e| field_err("problem.regularizer", e.to_string()))?;

    let init_scale = raw.init_scale.unwrap_or(1.0);
    if !(init_scale.is_finite() && init_scale >= 0.0) {
        return Err(field_err("problem.init_scale", "must be finite and >= 0"));
    }
    if let Some(f) = raw.f_star {
        if !f.is_finite() {
            return Err(field_err("problem.f_star", "must be finite"));
        }
    }
    Ok(Problem {
        objective,
        regularizer,
        dataset_name,
        init_scale,
        f_star: raw.f_star,
    })
}

fn load_dataset(raw: RawDataset, base: &Path) -> Result<Dataset, ConfigError> {
    let field = "problem.dataset";
    match raw {
        RawDataset::Fixture { kind } => {
            let kind = SyntheticKind::from(kind);
            let mut ds = dataio::fixture(kind).map_err(|e| field_err(field, e.to_string()))?;
            ds.name = format!("fixture_{}", kind.name());
            Ok(ds)
        }
        RawDataset::Synthetic {
            kind,
            n,
            d,
            seed,
            corruption,
        } => {
            let mut spec = SyntheticSpec::new(kind.into(), n, d, seed);
            if let Some(c) = corruption {
                spec.corruption = c;
            }
            dataio::generate(&spec)
                .map(|inst| inst.dataset)
                .map_err(|e| field_err(field, e.to_string()))
        }
        RawDataset::Libsvm { path, dim } => {
            let full = base.join(&path);
            let file = fs::File::open(&full)
                .map_err(|e| field_err(format!("{field}.path"), format!("{}: {e}", full.display())))?;
            let mut ds = dataio::parse_libsvm(std::io::BufReader::new(file), dim)
                .map_err(|e| field_err(format!("{field}.path"), format!("{}: {e}", full.display())))?;
            ds.name = path
                .file_stem()
                .map_or_else(|| "libsvm".into(), |s| s.to_string_lossy().into_owned());
            Ok(ds)
        }
    }
}

fn build_solver(raw: RawSolver, at: &str) -> Result<SolverSpec, ConfigError> {
    let f = |name: &str| format!("{at}.{name}");
    let algorithm = match raw.algorithm {
        AlgorithmName::ApgRestart => Algorithm::ApgRestart,
        AlgorithmName::ProxGrad => Algorithm::ProxGrad,
        AlgorithmName::Ag => Algorithm::Ag,
        AlgorithmName::ApgNever => Algorithm::NeverRestartApg,
    };
    let scheme = match (algorithm, raw.scheme) {
        (Algorithm::ApgRestart, None) => return Err(field_err(f("scheme"), "required for apg_restart")),
        (Algorithm::ApgRestart, Some(s)) => build_scheme(s).map_err(|e| field_err(f("scheme"), e))?,
        (_, Some(_)) => return Err(field_err(f("scheme"), "only apg_restart takes a restart scheme")),
        (_, None) => RestartScheme::never(),
    };
    let scheme = match raw.min_period {
        Some(m) if algorithm == Algorithm::ApgRestart => scheme
            .with_min_period(m)
            .map_err(|e| field_err(f("min_period"), e.to_string()))?,
        Some(_) => return Err(field_err(f("min_period"), "only apg_restart takes min_period")),
        None => scheme,
    };
    let stepsize = match (raw.stepsize, raw.beta) {
        (StepsizeName::Theory, None) => StepsizeMode::Theory,
        (StepsizeName::Experiment, None) => StepsizeMode::Experiment,
        (StepsizeName::Custom, Some(beta)) => StepsizeMode::Custom { beta },
        (StepsizeName::Custom, None) => return Err(field_err(f("beta"), "required for custom stepsize")),
        (_, Some(_)) => return Err(field_err(f("beta"), "only used with stepsize = \"custom\"")),
    };
    if raw.seeds.is_empty() {
        return Err(field_err(f("seeds"), "must list at least one seed"));
    }
    let mut config = SolverConfig::new(raw.max_iters, scheme).with_stepsize(stepsize);
    if let Some(c) = raw.lambda_rule {
        config = config.with_lambda_rule(c);
    }
    if let Some(tol) = raw.tolerance {
        config = config.with_tolerance(tol);
    }
    config.validate().map_err(|e| field_err(at, e.to_string()))?;

    let name = raw
        .name
        .unwrap_or_else(|| match algorithm {
            Algorithm::ApgRestart => format!("{}_{}", algorithm.name(), scheme.label()),
            _ => algorithm.name().to_string(),
        });
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c)) {
        return Err(field_err(f("name"), format!("{name:?} must be nonempty and use only [A-Za-z0-9._-]")));
    }
    Ok(SolverSpec {
        name,
        algorithm,
        config,
        seeds: raw.seeds,
    })
}

fn build_scheme(raw: RawScheme) -> Result<RestartScheme, String> {
    use apg_restart::restart::{RELAXED_RHO, RELAXED_TAU};
    match raw {
        RawScheme::Fixed { q } => RestartScheme::fixed(q),
        RawScheme::FunctionValue { rho } => RestartScheme::function_value(rho.unwrap_or(RELAXED_RHO)),
        RawScheme::GradientMapping { tau } => RestartScheme::gradient_mapping(tau.unwrap_or(RELAXED_TAU)),
        RawScheme::NonMonotone { tau } => RestartScheme::non_monotone(tau.unwrap_or(RELAXED_TAU)),
        RawScheme::Never => Ok(RestartScheme::never()),
    }
    .map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1

[problem]
objective = "logistic_ncvx"
dataset = { source = "fixture", kind = "logistic_sep" }

[[solvers]]
scheme = { kind = "fixed", q = 10 }
max_iters = 10
seeds = [0]
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::parse(text, Path::new("."))
    }

    fn field_of(err: ConfigError) -> String {
        match err {
            ConfigError::Field { field, .. } => field,
            other => panic!("expected a field error, got {other}"),
        }
    }

    #[test]
    fn minimal_config() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.solvers.len(), 1);
        let s = &cfg.solvers[0];
        assert_eq!(s.name, "apg_restart_fixed10");
        assert_eq!(s.config.max_iters, 10);
        assert_eq!(s.config.stepsize, StepsizeMode::Theory);
        assert_eq!(cfg.problem.regularizer, Regularizer::Zero);
        assert_eq!(cfg.problem.objective.dim(), dataio::FIXTURE_COLS);
    }

    #[test]
    fn empty_solver_list_is_rejected() {
        let text = MINIMAL.split("[[solvers]]").next().unwrap();
        assert_eq!(field_of(parse(text).unwrap_err()), "solvers");
    }

    #[test]
    fn field_level_errors() {
        let bad_version = MINIMAL.replace("schema_version = 1", "schema_version = 7");
        assert_eq!(field_of(parse(&bad_version).unwrap_err()), "schema_version");
        let no_seeds = MINIMAL.replace("seeds = [0]", "seeds = []");
        assert_eq!(field_of(parse(&no_seeds).unwrap_err()), "solvers[0].seeds");
        let bad_q = MINIMAL.replace("q = 10", "q = 0");
        assert_eq!(field_of(parse(&bad_q).unwrap_err()), "solvers[0].scheme");
        let custom = MINIMAL.replace("max_iters = 10", "max_iters = 10\nstepsize = \"custom\"");
        assert_eq!(field_of(parse(&custom).unwrap_err()), "solvers[0].beta");
        let bad_reg = MINIMAL.replace(
            "[[solvers]]",
            "regularizer = { kind = \"l1\", mu = -1.0 }\n\n[[solvers]]",
        );
        assert_eq!(field_of(parse(&bad_reg).unwrap_err()), "problem.regularizer");
    }

    #[test]
    fn unknown_keys_are_syntax_errors() {
        let typo = MINIMAL.replace("max_iters", "max_iter");
        assert!(matches!(parse(&typo).unwrap_err(), ConfigError::Syntax(_)));
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let text = format!("{MINIMAL}\n[[solvers]]\nscheme = {{ kind = \"fixed\", q = 10 }}\nmax_iters = 5\nseeds = [1]\n");
        assert_eq!(field_of(parse(&text).unwrap_err()), "solvers[1].name");
    }

    #[test]
    fn seed_override_replaces_lists() {
        let mut cfg = parse(&MINIMAL.replace("seeds = [0]", "seeds = [0, 1, 2]")).unwrap();
        cfg.override_seed(9);
        assert_eq!(cfg.solvers[0].seeds, vec![9]);
    }

    #[test]
    fn baselines_take_no_scheme() {
        let text = MINIMAL.replace("scheme = { kind = \"fixed\", q = 10 }", "algorithm = \"prox_grad\"");
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.solvers[0].algorithm, Algorithm::ProxGrad);
        assert_eq!(cfg.solvers[0].scheme_label(), "none");
        let both = MINIMAL.replace("max_iters = 10", "max_iters = 10\nalgorithm = \"ag\"");
        assert_eq!(field_of(parse(&both).unwrap_err()), "solvers[0].scheme");
    }
}
