//! Density-based point filtering, the pretext task that removes
//! low-density vertices before fitting.
//!
//! Two scores are available: a Gaussian kernel density estimate per point
//! (keep where density is high relative to the maximum) and the summed
//! squared distance to the k nearest neighbors (keep where the sum is
//! small relative to the minimum). Both are brute-force O(N²) scans;
//! tree-based accelerations are out of scope.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Point2, PointSet};
use crate::par::{self, Mode};

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("gamma must lie strictly between 0 and 1, got {0}")]
    BadGamma(f64),
    #[error("bandwidth must be positive and finite, got {0}")]
    BadBandwidth(f64),
    #[error("k must satisfy 1 <= k < point count; got k = {k} with {n} points")]
    BadNeighborCount { k: usize, n: usize },
    #[error("point set is empty")]
    Empty,
    #[error("non-finite coordinate at point index {0}")]
    NonFinitePoint(usize),
}

/// Bandwidth choice for the kernel density estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule of thumb in the plain form h = (N(d+2)/4)^(-1/(d+4)),
    /// with no data-spread factor. Use `Fixed` for any other convention.
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeParams {
    pub bandwidth: Bandwidth,
    /// Relative threshold γ in (0, 1): keep points with ρ(x) > γ·max ρ.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnParams {
    /// Neighbor count, 1 <= k < |X|.
    pub k: usize,
    /// Relative threshold γ in (0, 1): keep points with δ_x < (min δ)/γ.
    pub gamma: f64,
}

/// Which filter produced a report, with the resolved parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum FilterMethod {
    Kde { gamma: f64, bandwidth: f64 },
    Knn { gamma: f64, k: usize },
}

/// Output of a filtering pass.
///
/// `kept` is an order-preserving subset of the input; `scores` has one
/// entry per input point (density for KDE, neighbor sum for kNN).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: PointSet,
    pub kept_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub threshold: f64,
    pub method: FilterMethod,
}

/// Plain Silverman bandwidth h = (N(d+2)/4)^(-1/(d+4)).
///
/// For d = 2 this reduces to N^(-1/6).
pub fn silverman_bandwidth(n: usize, d: usize) -> f64 {
    let n = n as f64;
    let d = d as f64;
    (n * (d + 2.0) / 4.0).powf(-1.0 / (d + 4.0))
}

/// Gaussian kernel density estimate at every point of `points`:
///
/// ρ(x_j) = (1/(N h²)) Σ_i (1/2π) exp(-‖x_j - x_i‖² / (2h²))
///
/// The i = j self term is included; it adds the same constant to every
/// score and cannot change any relative threshold decision. Scores are
/// computed per query with a fixed-order inner sum over i = 0..N-1, so
/// the parallel and sequential paths agree bitwise.
pub fn kde_density(points: &[Point2], h: f64) -> Vec<f64> {
    kde_density_impl(points, h, Mode::Auto)
}

/// Sequential reference path of [`kde_density`]; identical results.
#[doc(hidden)]
pub fn kde_density_seq(points: &[Point2], h: f64) -> Vec<f64> {
    kde_density_impl(points, h, Mode::Sequential)
}

fn kde_density_impl(points: &[Point2], h: f64, mode: Mode) -> Vec<f64> {
    assert!(h > 0.0 && h.is_finite(), "bandwidth must be positive and finite");
    let n = points.len();
    let inv_two_h2 = 1.0 / (2.0 * h * h);
    let norm = 1.0 / (2.0 * PI * n as f64 * h * h);
    par::map_indexed(mode, n, |j| {
        let q = points[j];
        let mut acc = 0.0;
        for p in points {
            acc += (-q.distance_squared(p) * inv_two_h2).exp();
        }
        acc * norm
    })
}

/// Sum of squared distances from each point to its k nearest neighbors
/// (the query point itself excluded; distance ties broken by input index).
pub fn knn_deltas(points: &[Point2], k: usize) -> Result<Vec<f64>, FilterError> {
    knn_deltas_impl(points, k, Mode::Auto)
}

/// Sequential reference path of [`knn_deltas`]; identical results.
#[doc(hidden)]
pub fn knn_deltas_seq(points: &[Point2], k: usize) -> Result<Vec<f64>, FilterError> {
    knn_deltas_impl(points, k, Mode::Sequential)
}

fn knn_deltas_impl(points: &[Point2], k: usize, mode: Mode) -> Result<Vec<f64>, FilterError> {
    validate_k(points.len(), k)?;
    Ok(par::map_indexed(mode, points.len(), |j| {
        // The selected neighbors come back sorted by (distance, index),
        // so the sum order is canonical and independent of input
        // permutations whenever distances are distinct.
        nearest(points, k, j).iter().map(|&(d2, _)| d2).sum()
    }))
}

/// Indices of the k nearest neighbors of every point, each list sorted by
/// (distance, input index).
pub fn knn_neighbors(points: &[Point2], k: usize) -> Result<Vec<Vec<usize>>, FilterError> {
    validate_k(points.len(), k)?;
    Ok(par::map_indexed(Mode::Auto, points.len(), |j| {
        nearest(points, k, j).iter().map(|&(_, i)| i).collect()
    }))
}

fn validate_k(n: usize, k: usize) -> Result<(), FilterError> {
    if k == 0 || k >= n {
        return Err(FilterError::BadNeighborCount { k, n });
    }
    Ok(())
}

/// The k nearest neighbors of `points[j]`, as (squared distance, index)
/// pairs sorted ascending by distance with ties broken by index.
fn nearest(points: &[Point2], k: usize, j: usize) -> Vec<(f64, usize)> {
    let q = points[j];
    let mut candidates: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(i, p)| (q.distance_squared(p), i))
        .collect();
    let by_distance_then_index = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).expect("distances are never NaN").then(a.1.cmp(&b.1))
    };
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_distance_then_index);
    candidates
}

/// Keeps the points whose density exceeds γ times the maximum density.
///
/// The comparison is strict (ρ(x) > γ·ρ*); since γ < 1 and densities are
/// positive, the densest point always survives.
pub fn kde_filter(set: &PointSet, params: &KdeParams) -> Result<FilterReport, FilterError> {
    validate_gamma(params.gamma)?;
    validate_points(&set.points)?;
    if set.is_empty() {
        return Err(FilterError::Empty);
    }
    let h = match params.bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(set.len(), 2),
        Bandwidth::Fixed(h) => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(FilterError::BadBandwidth(h));
            }
            h
        }
    };
    let scores = kde_density(&set.points, h);
    let rho_max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = params.gamma * rho_max;
    let report = build_report(
        set,
        scores,
        threshold,
        FilterMethod::Kde { gamma: params.gamma, bandwidth: h },
        |score| score > threshold,
    );
    Ok(report)
}

/// Keeps the points whose k-neighbor squared-distance sum is below
/// (min δ)/γ.
///
/// The comparison is strict (δ_x < δ*/γ); since γ < 1, the point with the
/// minimal sum always survives. The one exception is δ* = 0 (a cluster of
/// k+1 or more coincident points): the strict rule would keep nothing, so
/// the zero-sum points themselves are kept instead.
pub fn knn_filter(set: &PointSet, params: &KnnParams) -> Result<FilterReport, FilterError> {
    validate_gamma(params.gamma)?;
    validate_points(&set.points)?;
    let scores = knn_deltas(&set.points, params.k)?;
    let delta_min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let threshold = delta_min / params.gamma;
    let keep: Box<dyn Fn(f64) -> bool> = if delta_min == 0.0 {
        Box::new(|score| score == 0.0)
    } else {
        Box::new(move |score| score < threshold)
    };
    let report = build_report(
        set,
        scores,
        threshold,
        FilterMethod::Knn { gamma: params.gamma, k: params.k },
        |score| keep(score),
    );
    Ok(report)
}

fn validate_gamma(gamma: f64) -> Result<(), FilterError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(FilterError::BadGamma(gamma));
    }
    Ok(())
}

fn validate_points(points: &[Point2]) -> Result<(), FilterError> {
    match points.iter().position(|p| !p.is_finite()) {
        Some(i) => Err(FilterError::NonFinitePoint(i)),
        None => Ok(()),
    }
}

fn build_report(
    set: &PointSet,
    scores: Vec<f64>,
    threshold: f64,
    method: FilterMethod,
    keep: impl Fn(f64) -> bool,
) -> FilterReport {
    let mut kept_points = Vec::new();
    let mut kept_indices = Vec::new();
    for (i, (&p, &score)) in set.points.iter().zip(&scores).enumerate() {
        if keep(score) {
            kept_points.push(p);
            kept_indices.push(i);
        }
    }
    let kept = PointSet { points: kept_points, domain: set.domain };
    FilterReport { kept, kept_indices, scores, threshold, method }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn circle_points(n: usize, r: f64) -> Vec<Point2> {
        (0..n)
            .map(|t| {
                let angle = 2.0 * PI * t as f64 / n as f64;
                Point2::new(r * angle.cos(), r * angle.sin())
            })
            .collect()
    }

    #[test]
    fn silverman_matches_direct_evaluation() {
        assert_relative_eq!(silverman_bandwidth(1, 2), 1.0);
        assert_relative_eq!(silverman_bandwidth(100, 2), 0.4641588833612779, epsilon = 1e-15);
        assert_relative_eq!(silverman_bandwidth(13664, 2), 0.20452058413019075, epsilon = 1e-15);
    }

    #[test]
    fn kde_single_point_is_self_term() {
        let scores = kde_density(&[Point2::new(0.3, -0.7)], 1.0);
        assert_relative_eq!(scores[0], 1.0 / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn kde_coincident_points_score_like_one() {
        let scores = kde_density(&[Point2::new(0.0, 0.0), Point2::new(0.0, 0.0)], 1.0);
        assert_relative_eq!(scores[0], 1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(scores[1], 1.0 / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn kde_two_point_hand_values() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let scores = kde_density(&pts, 1.0);
        // (1/2)(1/2π)(1 + e^(-1/2)) and, at the midpoint, symmetric terms.
        assert_relative_eq!(scores[0], 0.12784364786097463, epsilon = 1e-14);
        assert_relative_eq!(scores[1], 0.12784364786097463, epsilon = 1e-14);
        let mid = kde_density(&[pts[0], pts[1], Point2::new(0.5, 0.0)], 1.0);
        let expected = (1.0 / 3.0) * (1.0 / (2.0 * PI))
            * (2.0 * (-0.125f64).exp() + 1.0);
        assert_relative_eq!(mid[2], expected, epsilon = 1e-14);
    }

    #[test]
    fn kde_parallel_matches_sequential_bitwise() {
        let pts = circle_points(97, 0.5);
        assert_eq!(kde_density(&pts, 0.3), kde_density_seq(&pts, 0.3));
    }

    #[test]
    fn kde_filter_keeps_everything_for_tiny_gamma() {
        let set = PointSet::new(circle_points(20, 0.5));
        let report = kde_filter(
            &set,
            &KdeParams { bandwidth: Bandwidth::Silverman, gamma: 1e-9 },
        )
        .unwrap();
        assert_eq!(report.kept_indices, (0..20).collect::<Vec<_>>());
        assert_eq!(report.kept.points, set.points);
    }

    #[test]
    fn kde_filter_removes_corner_outliers() {
        let mut points = circle_points(50, 0.5);
        let corners = [
            Point2::new(0.9, 0.9),
            Point2::new(-0.9, 0.9),
            Point2::new(-0.9, -0.9),
            Point2::new(0.9, -0.9),
            Point2::new(0.9, 0.0),
        ];
        points.extend_from_slice(&corners);
        let set = PointSet::new(points);
        let report = kde_filter(
            &set,
            &KdeParams { bandwidth: Bandwidth::Silverman, gamma: 0.6 },
        )
        .unwrap();

        // Independent check: recompute densities and threshold directly.
        let h = silverman_bandwidth(55, 2);
        let scores = kde_density(&set.points, h);
        let rho_max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected: Vec<usize> = (0..55)
            .filter(|&i| scores[i] > 0.6 * rho_max)
            .collect();
        assert_eq!(report.kept_indices, expected);
        assert_eq!(report.kept_indices, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn kde_filter_keeps_larger_of_two_coincident_clusters() {
        let mut points = vec![Point2::new(0.0, 0.0); 8];
        points.extend(vec![Point2::new(10.0, 10.0); 3]);
        let set = PointSet::new(points);
        let report = kde_filter(
            &set,
            &KdeParams { bandwidth: Bandwidth::Fixed(0.5), gamma: 0.9 },
        )
        .unwrap();
        assert_eq!(report.kept_indices, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn kde_filter_validates_params() {
        let set = PointSet::new(vec![Point2::new(0.0, 0.0)]);
        for gamma in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                kde_filter(&set, &KdeParams { bandwidth: Bandwidth::Silverman, gamma }),
                Err(FilterError::BadGamma(_))
            ));
        }
        assert!(matches!(
            kde_filter(&set, &KdeParams { bandwidth: Bandwidth::Fixed(0.0), gamma: 0.5 }),
            Err(FilterError::BadBandwidth(_))
        ));
        let empty = PointSet::new(vec![]);
        assert!(matches!(
            kde_filter(&empty, &KdeParams { bandwidth: Bandwidth::Silverman, gamma: 0.5 }),
            Err(FilterError::Empty)
        ));
    }

    #[test]
    fn knn_collinear_hand_values() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];

        let deltas = knn_deltas(&pts, 1).unwrap();
        assert_eq!(deltas, vec![1.0, 1.0, 1.0]);
        let set = PointSet::new(pts.to_vec());
        let all = knn_filter(&set, &KnnParams { k: 1, gamma: 0.5 }).unwrap();
        assert_eq!(all.kept_indices, vec![0, 1, 2]);
        assert_eq!(all.threshold, 2.0);

        let deltas = knn_deltas(&pts, 2).unwrap();
        assert_eq!(deltas, vec![5.0, 2.0, 5.0]);
        let middle = knn_filter(&set, &KnnParams { k: 2, gamma: 0.6 }).unwrap();
        assert_eq!(middle.kept_indices, vec![1]);
        assert_relative_eq!(middle.threshold, 2.0 / 0.6);
    }

    #[test]
    fn knn_keeps_everything_for_tiny_gamma() {
        let set = PointSet::new(circle_points(17, 0.5));
        let report = knn_filter(&set, &KnnParams { k: 3, gamma: 1e-9 }).unwrap();
        assert_eq!(report.kept_indices.len(), 17);
    }

    #[test]
    fn knn_ties_break_by_input_index() {
        // Four corners of a square: each query has two neighbors at the
        // side distance; with k = 1 the lower input index must win.
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
        ];
        let neighbors = knn_neighbors(&pts, 1).unwrap();
        assert_eq!(neighbors, vec![vec![1], vec![0], vec![0], vec![1]]);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let pts = circle_points(5, 0.5);
        assert!(matches!(
            knn_deltas(&pts, 5),
            Err(FilterError::BadNeighborCount { k: 5, n: 5 })
        ));
        assert!(matches!(
            knn_deltas(&pts, 0),
            Err(FilterError::BadNeighborCount { k: 0, n: 5 })
        ));
    }

    #[test]
    fn knn_all_coincident_keeps_zero_sum_points() {
        let mut points = vec![Point2::new(0.5, 0.5); 4];
        points.push(Point2::new(3.0, 3.0));
        let set = PointSet::new(points);
        let report = knn_filter(&set, &KnnParams { k: 2, gamma: 0.5 }).unwrap();
        assert_eq!(report.kept_indices, vec![0, 1, 2, 3]);
        assert!(!report.kept_indices.is_empty());
    }

    #[test]
    fn knn_parallel_matches_sequential_bitwise() {
        let pts = circle_points(83, 0.7);
        assert_eq!(knn_deltas(&pts, 6).unwrap(), knn_deltas_seq(&pts, 6).unwrap());
    }

    #[test]
    fn filters_reject_non_finite_points() {
        let set = PointSet::new(vec![Point2::new(0.0, 0.0), Point2::new(f64::NAN, 1.0)]);
        assert!(matches!(
            kde_filter(&set, &KdeParams { bandwidth: Bandwidth::Silverman, gamma: 0.5 }),
            Err(FilterError::NonFinitePoint(1))
        ));
        assert!(matches!(
            knn_filter(&set, &KnnParams { k: 1, gamma: 0.5 }),
            Err(FilterError::NonFinitePoint(1))
        ));
    }
}
