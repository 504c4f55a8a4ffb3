//! Data-driven detection of solution-singularity curves from
//! unstructured 2-D point sets.
//!
//! The pipeline mirrors how adaptively refined meshes concentrate
//! vertices around singularities: given only point locations, a density
//! filter ([`filtering`]) selects the points that crowd near the curve,
//! and a constrained least-squares fit ([`fitting`]) recovers an
//! implicit function f(x) = Σ c_i φ_i(x) whose zero set estimates the
//! curve. [`diagnostics`] traces and measures the recovered zero set,
//! and [`synthgen`] fabricates batched test data around known curves.
//!
//! # Example
//!
//! ```
//! use singdetect::{
//!     fit, trace_zero_set, Basis, CurveKind, CurveSpec, Dataset, FilterSpec, GenParams,
//!     KnnParams, RectDomain, WeightScheme,
//! };
//!
//! let spec = CurveSpec::new(CurveKind::circle(), RectDomain::default());
//! let data = singdetect::generate(&spec, &GenParams::default()).unwrap();
//!
//! let basis: Basis = "poly:2".parse().unwrap();
//! let filter = FilterSpec::Knn(KnnParams { k: 5, gamma: 0.6 });
//! let outcome = fit(
//!     &Dataset::Batched(data),
//!     basis,
//!     &WeightScheme::Uniform,
//!     Some(&filter),
//! )
//! .unwrap();
//!
//! let trace = trace_zero_set(
//!     |p| outcome.model.evaluate(p),
//!     &RectDomain::default(),
//!     128,
//! )
//! .unwrap();
//! assert_eq!(trace.component_count(), 1);
//! ```
//!
//! # Determinism
//!
//! Every operation is bitwise deterministic. With the default `parallel`
//! feature, work is distributed only over independent output elements
//! and all floating-point reductions keep a fixed order, so parallel
//! results are bit-identical to sequential ones; disabling the feature
//! removes the thread pool without changing any result.

pub mod basis;
pub mod data;
pub mod diagnostics;
mod eigen;
pub mod filtering;
pub mod fitting;
pub mod io;
mod par;
pub mod synthgen;

pub use basis::{monomial_index, Basis, BasisError, Trig};
pub use data::{BatchedPointSet, DataError, Dataset, Point2, PointSet, RectDomain};
pub use diagnostics::{radius_profile, trace_zero_set, DiagnosticsError, TraceResult};
pub use filtering::{
    kde_density, kde_filter, knn_deltas, knn_filter, knn_neighbors, silverman_bandwidth,
    Bandwidth, FilterError, FilterMethod, FilterReport, KdeParams, KnnParams,
};
pub use fitting::{
    assemble_gram, fit, loss, solve, DetectionModel, FilterSpec, FitError, FitOutcome, FitReport,
    FitWarning, GramMatrix, WeightScheme, SIGN_CONVENTION,
};
pub use io::{load_points, load_points_path, save_points, save_points_path, Format};
pub use synthgen::{generate, CurveKind, CurveSpec, GenParams, SynthError};
