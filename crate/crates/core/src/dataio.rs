//! LIBSVM text format, seeded synthetic datasets and the bundled fixtures.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::numkit::{format_float, DenseVector, SparseMatrixCsr};
use crate::objectives::SmoothObjective;
use crate::prox::Regularizer;
use crate::restart::RestartScheme;
use crate::solver::{run_baseline, BaselineKind, SolverConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: SparseMatrixCsr,
    pub labels: DenseVector,
    pub name: String,
    pub kind: DatasetKind,
}

impl Dataset {
    pub fn new(
        features: SparseMatrixCsr,
        labels: DenseVector,
        name: impl Into<String>,
        kind: DatasetKind,
    ) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                actual: labels.len(),
            });
        }
        if kind == DatasetKind::Classification && labels.iter().any(|b| *b != 1.0 && *b != -1.0) {
            return Err(Error::InvalidArgument("classification labels must be +1/-1".into()));
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
            kind,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.features.n_cols()
    }
}

fn parse_err(line: usize, token: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        token: token.to_string(),
        message: message.into(),
    }
}

/// Parses LIBSVM text: one `label idx:val idx:val ...` sample per nonempty
/// line, 1-based strictly increasing indices. Anything after `#` is ignored.
///
/// Columns are shifted to 0-based. The column count is `expected_dim` when
/// given (indices beyond it are an error), otherwise the largest index seen.
/// The dataset is tagged `Classification` when every label is ±1.
pub fn parse_libsvm<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_col = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(line_no, label_tok, "label is not a finite number"))?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, tok, "expected idx:val"))?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| parse_err(line_no, tok, "index is not a positive integer"))?;
            if idx < 1 {
                return Err(parse_err(line_no, tok, "index must be >= 1"));
            }
            if idx <= last {
                return Err(parse_err(line_no, tok, "indices must be strictly increasing"));
            }
            let val: f64 = val_s
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(line_no, tok, "value is not a finite number"))?;
            if let Some(dim) = expected_dim {
                if idx > dim {
                    return Err(parse_err(line_no, tok, format!("index exceeds dimension {dim}")));
                }
            }
            last = idx;
            row.push((idx - 1, val));
        }
        max_col = max_col.max(last);
        rows.push(row);
        labels.push(label);
    }
    let n_cols = expected_dim.unwrap_or(max_col);
    let features = SparseMatrixCsr::from_rows(n_cols, &rows)?;
    let kind = if !labels.is_empty() && labels.iter().all(|b| *b == 1.0 || *b == -1.0) {
        DatasetKind::Classification
    } else {
        DatasetKind::Regression
    };
    Dataset::new(features, DenseVector::from(labels), "", kind)
}

pub fn parse_libsvm_str(text: &str, expected_dim: Option<usize>) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), expected_dim)
}

/// Serialises to LIBSVM text with shortest round-trip float formatting.
pub fn to_libsvm_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for r in 0..ds.n_rows() {
        let b = ds.labels[r];
        match ds.kind {
            DatasetKind::Classification if b > 0.0 => out.push_str("+1"),
            DatasetKind::Classification => out.push_str("-1"),
            DatasetKind::Regression => out.push_str(&format_float(b)),
        }
        let (cols, vals) = ds.features.row(r);
        for (c, v) in cols.iter().zip(vals) {
            write!(out, " {}:{}", c + 1, format_float(*v)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_libsvm<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    w.write_all(to_libsvm_string(ds).as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Classification with a planted separator.
    LogisticSep,
    /// Linear regression with gross outliers.
    RobustOutliers,
    /// Least squares with a sparse planted solution, paired with an ℓ1 weight.
    LassoKnown,
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::LogisticSep => "logistic_sep",
            SyntheticKind::RobustOutliers => "robust_outliers",
            SyntheticKind::LassoKnown => "lasso_known",
        }
    }

    pub fn all() -> [SyntheticKind; 3] {
        [
            SyntheticKind::LogisticSep,
            SyntheticKind::RobustOutliers,
            SyntheticKind::LassoKnown,
        ]
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SyntheticKind::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown synthetic kind {s:?}")))
    }
}

/// ℓ1 weight paired with `LassoKnown` data.
pub const LASSO_L1_WEIGHT: f64 = 0.05;
/// Fraction of flipped labels / corrupted targets.
pub const DEFAULT_CORRUPTION: f64 = 0.1;
/// Probability that a logistic feature entry is nonzero.
pub const LOGISTIC_DENSITY: f64 = 0.4;
const OUTLIER_SCALE: f64 = 10.0;
const REGRESSION_NOISE: f64 = 0.1;
const LASSO_NOISE: f64 = 0.01;
const LASSO_SUPPORT: f64 = 0.2;
/// Ratio between the scales of the last and the first feature column.
pub const COLUMN_SPREAD: f64 = 0.01;
/// Milder spread for the lasso instance, which stays well conditioned.
pub const LASSO_COLUMN_SPREAD: f64 = 0.1;

/// Generator knobs beyond `(kind, n, d, seed)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Label-flip probability (LogisticSep) or outlier fraction (RobustOutliers).
    pub corruption: f64,
    /// Minimum `|aᵢᵀw*| / ‖w*‖` for LogisticSep rows; rows are redrawn until met.
    pub margin: f64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, d: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            d,
            seed,
            corruption: DEFAULT_CORRUPTION,
            margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub dataset: Dataset,
    /// Planted parameter vector.
    pub planted: DenseVector,
    /// For LassoKnown: the ℓ1 weight and a high-accuracy minimiser.
    pub l1_weight: Option<f64>,
    pub reference: Option<DenseVector>,
}

pub fn generate_synthetic(kind: SyntheticKind, n: usize, d: usize, seed: u64) -> Result<SyntheticInstance> {
    generate(&SyntheticSpec::new(kind, n, d, seed))
}

fn gaussian_row(rng: &mut ChaCha8Rng, d: usize, density: f64, spread: f64) -> Vec<(usize, f64)> {
    (0..d)
        .filter_map(|c| {
            let keep = density >= 1.0 || rng.random::<f64>() < density;
            let v: f64 = StandardNormal.sample(rng);
            keep.then_some((c, v * column_scale(c, d, spread)))
        })
        .collect()
}

/// Geometric decay from 1 down to `spread` across the columns.
fn column_scale(c: usize, d: usize, spread: f64) -> f64 {
    if d < 2 {
        1.0
    } else {
        spread.powf(c as f64 / (d - 1) as f64)
    }
}

fn row_dot(row: &[(usize, f64)], w: &[f64]) -> f64 {
    row.iter().map(|(c, v)| v * w[*c]).sum()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    let SyntheticSpec { kind, n, d, seed, .. } = *spec;
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("synthetic data needs n, d >= 1".into()));
    }
    if !(0.0..=1.0).contains(&spec.corruption) {
        return Err(Error::InvalidArgument("corruption must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = format!("{}_n{n}_d{d}_s{seed}", kind.name());
    match kind {
        SyntheticKind::LogisticSep => {
            let w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut rows = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            while rows.len() < n {
                let row = gaussian_row(&mut rng, d, LOGISTIC_DENSITY, COLUMN_SPREAD);
                let score = row_dot(&row, &w);
                if score.abs() < spec.margin * w_norm || score == 0.0 {
                    continue;
                }
                let flip = rng.random::<f64>() < spec.corruption;
                let label = if (score > 0.0) != flip { 1.0 } else { -1.0 };
                rows.push(row);
                labels.push(label);
            }
            let features = SparseMatrixCsr::from_rows(d, &rows)?;
            Ok(SyntheticInstance {
                dataset: Dataset::new(features, DenseVector::from(labels), name, DatasetKind::Classification)?,
                planted: DenseVector::from(w),
                l1_weight: None,
                reference: None,
            })
        }
        SyntheticKind::RobustOutliers => {
            let w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let noise = Normal::new(0.0, REGRESSION_NOISE).expect("valid sigma");
            let outlier = Normal::new(0.0, OUTLIER_SCALE).expect("valid sigma");
            let mut rows = Vec::with_capacity(n);
            let mut targets = Vec::with_capacity(n);
            for _ in 0..n {
                let row = gaussian_row(&mut rng, d, 1.0, COLUMN_SPREAD);
                let mut b = row_dot(&row, &w) + noise.sample(&mut rng);
                if rng.random::<f64>() < spec.corruption {
                    b += outlier.sample(&mut rng);
                }
                rows.push(row);
                targets.push(b);
            }
            let features = SparseMatrixCsr::from_rows(d, &rows)?;
            Ok(SyntheticInstance {
                dataset: Dataset::new(features, DenseVector::from(targets), name, DatasetKind::Regression)?,
                planted: DenseVector::from(w),
                l1_weight: None,
                reference: None,
            })
        }
        SyntheticKind::LassoKnown => {
            let w: Vec<f64> = (0..d)
                .map(|_| {
                    let on = rng.random::<f64>() < LASSO_SUPPORT;
                    let v: f64 = StandardNormal.sample(&mut rng);
                    if on {
                        v.signum() * (1.0 + v.abs())
                    } else {
                        0.0
                    }
                })
                .collect();
            let noise = Normal::new(0.0, LASSO_NOISE).expect("valid sigma");
            let mut rows = Vec::with_capacity(n);
            let mut targets = Vec::with_capacity(n);
            for _ in 0..n {
                let row = gaussian_row(&mut rng, d, 1.0, LASSO_COLUMN_SPREAD);
                targets.push(row_dot(&row, &w) + noise.sample(&mut rng));
                rows.push(row);
            }
            let features = SparseMatrixCsr::from_rows(d, &rows)?;
            let dataset = Dataset::new(features, DenseVector::from(targets), name, DatasetKind::Regression)?;
            let reference = lasso_reference(&dataset, LASSO_L1_WEIGHT)?;
            Ok(SyntheticInstance {
                dataset,
                planted: DenseVector::from(w),
                l1_weight: Some(LASSO_L1_WEIGHT),
                reference: Some(reference),
            })
        }
    }
}

/// High-accuracy lasso minimiser by a long proximal-gradient run.
pub fn lasso_reference(dataset: &Dataset, l1_weight: f64) -> Result<DenseVector> {
    let obj = SmoothObjective::quadratic(dataset.features.clone(), dataset.labels.clone())?;
    let cfg = SolverConfig::new(200_000, RestartScheme::never()).with_tolerance(1e-13);
    let trace = run_baseline(
        BaselineKind::ProxGrad,
        &obj,
        Regularizer::l1(l1_weight)?,
        &cfg,
        DenseVector::zeros(dataset.n_cols()),
    )?;
    Ok(trace.final_x)
}

/// Shape and seed of the bundled fixtures.
pub const FIXTURE_ROWS: usize = 200;
pub const FIXTURE_COLS: usize = 30;
pub const FIXTURE_SEED: u64 = 20200526;

const LOGISTIC_FIXTURE: &str = include_str!("../fixtures/logistic_sep.libsvm");
const ROBUST_FIXTURE: &str = include_str!("../fixtures/robust_outliers.libsvm");
const LASSO_FIXTURE: &str = include_str!("../fixtures/lasso_known.libsvm");

/// Raw LIBSVM text of a bundled fixture.
pub fn fixture_text(kind: SyntheticKind) -> &'static str {
    match kind {
        SyntheticKind::LogisticSep => LOGISTIC_FIXTURE,
        SyntheticKind::RobustOutliers => ROBUST_FIXTURE,
        SyntheticKind::LassoKnown => LASSO_FIXTURE,
    }
}

/// Loads a bundled 200×30 fixture.
pub fn fixture(kind: SyntheticKind) -> Result<Dataset> {
    let mut ds = parse_libsvm_str(fixture_text(kind), Some(FIXTURE_COLS))?;
    ds.name = kind.name().to_string();
    if kind == SyntheticKind::LogisticSep {
        ds.kind = DatasetKind::Classification;
    }
    Ok(ds)
}
