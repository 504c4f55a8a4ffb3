//! Least-squares fitting of an implicit detection function.
//!
//! The detection function is f(x) = Σ c_i φ_i(x) over a chosen basis.
//! Candidate points x contribute weighted squared residuals
//! w_x f(x)², so the total loss is the quadratic form cᵀGc with
//! G = Σ w_x φ(x)φ(x)ᵀ. Minimizing over unit-norm c makes the optimum
//! the eigenvector of G with the smallest eigenvalue, which this module
//! computes with a dense Jacobi decomposition; no iterative constrained
//! optimizer is involved.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::basis::Basis;
use crate::data::{Dataset, Point2};
use crate::eigen::symmetric_eigen;
use crate::filtering::{kde_filter, knn_filter, FilterError, FilterReport, KdeParams, KnnParams};
use crate::par::{self, Mode};

/// Human-readable name of the sign normalization applied to fitted
/// coefficient vectors: the entry of largest magnitude is made positive,
/// with ties going to the lowest index.
pub const SIGN_CONVENTION: &str = "largest-magnitude-coefficient-positive";

/// Points per accumulation chunk in Gram assembly. Both the parallel and
/// the sequential path sum chunk partials in chunk order, so their
/// results are bitwise identical.
const GRAM_CHUNK: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("no points to fit")]
    NoPoints,
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix entry ({i},{j}) differs from its mirror by {difference:e}")]
    NotSymmetric { i: usize, j: usize, difference: f64 },
    #[error("matrix is not positive semidefinite: smallest eigenvalue {lambda_min:e}")]
    NotPsd { lambda_min: f64 },
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("coefficient vector norm {0:e} is too small to normalize")]
    ZeroCoefficients(f64),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

// ---------------------------------------------------------------------------
// Weight schemes
// ---------------------------------------------------------------------------

/// How residual weights w_x = 1/(2σ_x²) are assigned to points.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// Every point gets σ = 1, hence w = 1/2.
    Uniform,
    /// Batch i of R+1 batches gets σ_i² = b^{2(R-i)}/2, hence
    /// w_i = b^{2(i-R)}: later batches count more by powers of b².
    Schedule { base: f64 },
    /// One σ per point, in merged point order.
    Sigmas(Vec<f64>),
}

impl WeightScheme {
    fn validate(&self) -> Result<(), FitError> {
        match self {
            WeightScheme::Uniform => Ok(()),
            WeightScheme::Schedule { base } => {
                if base.is_finite() && *base > 1.0 {
                    Ok(())
                } else {
                    Err(FitError::BadWeights(format!(
                        "schedule base must be finite and greater than 1, got {base}"
                    )))
                }
            }
            WeightScheme::Sigmas(sigmas) => {
                if sigmas.is_empty() {
                    return Err(FitError::BadWeights("sigma list is empty".into()));
                }
                match sigmas.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
                    Some(i) => Err(FitError::BadWeights(format!(
                        "sigma at index {i} must be positive and finite, got {}",
                        sigmas[i]
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    /// Expands the scheme to one weight per point of `data`, in merged
    /// point order (batch 0 first, then batch 1, and so on).
    pub fn point_weights(&self, data: &Dataset) -> Result<Vec<f64>, FitError> {
        self.validate()?;
        let total = data.total_points();
        match self {
            WeightScheme::Uniform => Ok(vec![0.5; total]),
            WeightScheme::Schedule { base } => match data {
                Dataset::Single(_) => Err(FitError::BadWeights(
                    "schedule weights need batched data".into(),
                )),
                Dataset::Batched(batched) => {
                    let r = batched.refinement_count() as i32;
                    let mut weights = Vec::with_capacity(total);
                    for (i, batch) in batched.batches().iter().enumerate() {
                        let w = base.powi(2 * (i as i32 - r));
                        weights.extend(std::iter::repeat(w).take(batch.len()));
                    }
                    Ok(weights)
                }
            },
            WeightScheme::Sigmas(sigmas) => {
                if sigmas.len() != total {
                    return Err(FitError::BadWeights(format!(
                        "got {} sigmas for {} points",
                        sigmas.len(),
                        total
                    )));
                }
                Ok(sigmas.iter().map(|s| 1.0 / (2.0 * s * s)).collect())
            }
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Uniform => write!(f, "uniform"),
            WeightScheme::Schedule { base } => write!(f, "schedule:{base}"),
            WeightScheme::Sigmas(sigmas) => {
                write!(f, "sigmas:")?;
                for (i, s) in sigmas.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for WeightScheme {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let scheme = if s == "uniform" {
            WeightScheme::Uniform
        } else if let Some(base) = s.strip_prefix("schedule:") {
            let base: f64 = base
                .parse()
                .map_err(|_| FitError::BadWeights(format!("bad schedule base {base:?}")))?;
            WeightScheme::Schedule { base }
        } else if let Some(list) = s.strip_prefix("sigmas:") {
            let sigmas = list
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| FitError::BadWeights(format!("bad sigma {tok:?}")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            WeightScheme::Sigmas(sigmas)
        } else {
            return Err(FitError::BadWeights(format!(
                "unknown weight scheme {s:?}; expected uniform, schedule:<b>, or sigmas:<list>"
            )));
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

impl Serialize for WeightScheme {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WeightScheme {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Gram matrix
// ---------------------------------------------------------------------------

/// Symmetric positive semidefinite matrix G = Σ w_x φ(x)φ(x)ᵀ.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    dim: usize,
    n_points: Option<usize>,
    data: Vec<f64>,
}

impl GramMatrix {
    /// Wraps a row-major square matrix, checking shape and symmetry.
    /// Entries may differ from their mirror by rounding noise (relative
    /// to the largest magnitude); they are averaged so the stored matrix
    /// is exactly symmetric.
    pub fn from_raw(data: Vec<f64>, dim: usize) -> Result<Self, FitError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(FitError::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(FitError::NonFinite(i));
        }
        let max_abs = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = 1e-12 * (1.0 + max_abs);
        let mut data = data;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let difference = (data[i * dim + j] - data[j * dim + i]).abs();
                if difference > tol {
                    return Err(FitError::NotSymmetric { i, j, difference });
                }
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(GramMatrix { dim, n_points: None, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points the matrix was assembled from, when known.
    pub fn n_points(&self) -> Option<usize> {
        self.n_points
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Builds G = Σ w_x φ(x)φ(x)ᵀ for the given points and per-point weights.
///
/// Points are processed in fixed-size chunks; each chunk accumulates its
/// partial sum in point order and the partials are added in chunk order,
/// so the parallel and sequential paths produce bitwise-identical
/// matrices.
pub fn assemble_gram(
    points: &[Point2],
    weights: &[f64],
    basis: Basis,
) -> Result<GramMatrix, FitError> {
    assemble_gram_impl(points, weights, basis, Mode::Auto)
}

/// Sequential reference path of [`assemble_gram`]; identical results.
#[doc(hidden)]
pub fn assemble_gram_seq(
    points: &[Point2],
    weights: &[f64],
    basis: Basis,
) -> Result<GramMatrix, FitError> {
    assemble_gram_impl(points, weights, basis, Mode::Sequential)
}

fn assemble_gram_impl(
    points: &[Point2],
    weights: &[f64],
    basis: Basis,
    mode: Mode,
) -> Result<GramMatrix, FitError> {
    if points.is_empty() {
        return Err(FitError::NoPoints);
    }
    if weights.len() != points.len() {
        return Err(FitError::DimensionMismatch { expected: points.len(), got: weights.len() });
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(FitError::NonFinite(i));
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(FitError::BadWeights(format!(
            "weight at index {i} must be positive and finite, got {}",
            weights[i]
        )));
    }

    let k = basis.len();
    let n_chunks = points.len().div_ceil(GRAM_CHUNK);
    let partials = par::map_indexed(mode, n_chunks, |chunk| {
        let lo = chunk * GRAM_CHUNK;
        let hi = (lo + GRAM_CHUNK).min(points.len());
        let mut partial = vec![0.0; k * k];
        let mut phi = vec![0.0; k];
        for idx in lo..hi {
            basis.eval_into(points[idx], &mut phi);
            let w = weights[idx];
            for i in 0..k {
                let wi = w * phi[i];
                for j in i..k {
                    partial[i * k + j] += wi * phi[j];
                }
            }
        }
        partial
    });

    let mut data = vec![0.0; k * k];
    for partial in partials {
        for (acc, p) in data.iter_mut().zip(&partial) {
            *acc += p;
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            data[j * k + i] = data[i * k + j];
        }
    }
    Ok(GramMatrix { dim: k, n_points: Some(points.len()), data })
}

/// The quadratic loss cᵀGc of a coefficient vector.
pub fn loss(gram: &GramMatrix, coefficients: &[f64]) -> f64 {
    assert_eq!(coefficients.len(), gram.dim, "coefficient length must match matrix dimension");
    let k = gram.dim;
    let mut total = 0.0;
    for i in 0..k {
        let mut row = 0.0;
        for j in 0..k {
            row += gram.data[i * k + j] * coefficients[j];
        }
        total += coefficients[i] * row;
    }
    total
}

// ---------------------------------------------------------------------------
// Solving
// ---------------------------------------------------------------------------

/// Non-fatal conditions detected during a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitWarning {
    /// Fewer points than basis terms: the Gram matrix cannot have full
    /// rank and the zero eigenvalue is structural.
    RankDeficient { points: usize, terms: usize },
    /// The two smallest eigenvalues are nearly equal, so the minimizer
    /// is not unique; the returned vector is a deterministic choice.
    NonUnique { gap: f64 },
}

/// Result of minimizing cᵀGc over unit-norm c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Unit-norm minimizer, sign-normalized per [`SIGN_CONVENTION`].
    pub coefficients: Vec<f64>,
    /// Loss cᵀGc of the returned coefficients (the smallest eigenvalue,
    /// up to rounding).
    pub residual: f64,
    /// Distance from the smallest to the second-smallest eigenvalue;
    /// infinite for 1x1 matrices.
    pub eigen_gap: f64,
    pub basis: Option<Basis>,
    pub weights: Option<WeightScheme>,
    pub sign_convention: String,
    pub warnings: Vec<FitWarning>,
}

/// Minimizes cᵀGc over the unit sphere by taking the eigenvector for the
/// smallest eigenvalue of G.
///
/// Fails with [`FitError::NotPsd`] when the smallest eigenvalue is
/// negative beyond rounding tolerance. When the eigen gap is negligible
/// the minimizer is not unique: among the near-minimal eigenvectors the
/// lexicographically largest sign-normalized one is returned, along with
/// a [`FitWarning::NonUnique`].
pub fn solve(gram: &GramMatrix) -> Result<FitReport, FitError> {
    let k = gram.dim;
    let (values, vectors) = symmetric_eigen(&gram.data, k);

    let frobenius: f64 = gram.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    if values[0] < -1e-10 * frobenius {
        return Err(FitError::NotPsd { lambda_min: values[0] });
    }

    let eigen_gap = if k == 1 { f64::INFINITY } else { values[1] - values[0] };
    let gap_tol = 1e-8 * values[k - 1].abs().max(1.0);

    let mut warnings = Vec::new();
    if let Some(n) = gram.n_points {
        if n < k {
            warnings.push(FitWarning::RankDeficient { points: n, terms: k });
        }
    }

    let coefficients = if eigen_gap < gap_tol {
        warnings.push(FitWarning::NonUnique { gap: eigen_gap });
        let mut best: Option<Vec<f64>> = None;
        for (value, vector) in values.iter().zip(&vectors) {
            if value - values[0] > gap_tol {
                break;
            }
            let candidate = sign_normalize(normalize(vector));
            best = match best {
                Some(current) if !lexicographically_greater(&candidate, &current) => Some(current),
                _ => Some(candidate),
            };
        }
        best.expect("at least one eigenvector is within the gap tolerance")
    } else {
        sign_normalize(normalize(&vectors[0]))
    };

    let residual = loss(gram, &coefficients);
    Ok(FitReport {
        coefficients,
        residual,
        eigen_gap,
        basis: None,
        weights: None,
        sign_convention: SIGN_CONVENTION.to_string(),
        warnings,
    })
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn sign_normalize(mut v: Vec<f64>) -> Vec<f64> {
    let mut lead = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[lead].abs() {
            lead = i;
        }
    }
    if v[lead] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    v
}

fn lexicographically_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x > y;
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Detection model
// ---------------------------------------------------------------------------

/// A fitted implicit detection function f(x) = Σ c_i φ_i(x) with
/// unit-norm coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    basis: Basis,
    coefficients: Vec<f64>,
}

impl DetectionModel {
    /// Validates the coefficient vector against the basis and normalizes
    /// it to unit Euclidean norm.
    pub fn new(basis: Basis, coefficients: Vec<f64>) -> Result<Self, FitError> {
        if coefficients.len() != basis.len() {
            return Err(FitError::DimensionMismatch {
                expected: basis.len(),
                got: coefficients.len(),
            });
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(FitError::NonFinite(i));
        }
        let norm: f64 = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-150 {
            return Err(FitError::ZeroCoefficients(norm));
        }
        let coefficients = coefficients.iter().map(|c| c / norm).collect();
        Ok(DetectionModel { basis, coefficients })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Evaluates f at a point, summing terms in basis order.
    pub fn evaluate(&self, p: Point2) -> f64 {
        let phi = self.basis.eval(p);
        self.coefficients.iter().zip(&phi).map(|(c, v)| c * v).sum()
    }
}

// ---------------------------------------------------------------------------
// End-to-end fitting
// ---------------------------------------------------------------------------

/// Density filter to apply before fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    Kde(KdeParams),
    Knn(KnnParams),
}

/// Everything produced by a fit: the model, the numerical report, and
/// the filtering report when a filter ran.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub model: DetectionModel,
    pub report: FitReport,
    pub filter: Option<FilterReport>,
}

/// Fits a detection function to a dataset.
///
/// Without a filter, weights follow `weights` (schedule weights require
/// batched data). With a filter, all batches are merged, the filter
/// selects the kept subset, and the fit uses uniform weights; any other
/// scheme is rejected because filtering erases the batch structure the
/// schedule refers to.
pub fn fit(
    data: &Dataset,
    basis: Basis,
    weights: &WeightScheme,
    filter: Option<&FilterSpec>,
) -> Result<FitOutcome, FitError> {
    if data.total_points() == 0 {
        return Err(FitError::NoPoints);
    }

    let (points, point_weights, filter_report) = match filter {
        None => {
            let w = weights.point_weights(data)?;
            (data.merged().points, w, None)
        }
        Some(spec) => {
            if *weights != WeightScheme::Uniform {
                return Err(FitError::BadWeights(
                    "filtering merges batches; combine it with uniform weights".into(),
                ));
            }
            let merged = data.merged();
            let report = match spec {
                FilterSpec::Kde(params) => kde_filter(&merged, params)?,
                FilterSpec::Knn(params) => knn_filter(&merged, params)?,
            };
            let w = vec![0.5; report.kept.len()];
            (report.kept.points.clone(), w, Some(report))
        }
    };

    let gram = assemble_gram(&points, &point_weights, basis)?;
    let mut report = solve(&gram)?;
    report.basis = Some(basis);
    report.weights = Some(weights.clone());
    let model = DetectionModel::new(basis, report.coefficients.clone())?;
    Ok(FitOutcome { model, report, filter: filter_report })
}
