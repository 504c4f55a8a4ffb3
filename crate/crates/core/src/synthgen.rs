//! Synthetic batched point sets concentrated near a known singularity
//! curve.
//!
//! Instead of running a PDE solver with adaptive refinement, the
//! generator mimics the geometry of such data: batch 0 is a coarse
//! uniform grid, and every later batch is rejection-sampled inside a
//! shrinking tube around the zero set of a reference function F*. The
//! tube distance is the first-order estimate |F*|/‖∇F*‖ with a floor on
//! the gradient norm so saddle points cannot divide by zero.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{Basis, Trig};
use crate::data::{BatchedPointSet, Point2, RectDomain};

/// Gradient-norm floor in the tube distance estimate.
const GRADIENT_FLOOR: f64 = 1e-8;
/// Rejection-sampling attempts allowed per requested tube point.
const ATTEMPTS_PER_POINT: usize = 50_000;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid generator parameters: {0}")]
    BadParams(String),
    #[error(
        "no tube point found for batch {batch} after {attempts} attempts; \
         the zero set may not intersect the domain"
    )]
    NoTubePoints { batch: usize, attempts: usize },
}

/// Reference singularity curves, each the zero set of a known F*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveKind {
    /// F* = x² + y² − r².
    Circle { radius: f64 },
    /// F* = (x − x0)(y − y0), two axis-aligned lines.
    LShape { x0: f64, y0: f64 },
    /// F* = x² − y², two diagonal lines crossing at the origin.
    XShape,
    /// F* = (x² + y² − r1²)(x² + y² − r2²), two concentric circles.
    Semicircles { r1: f64, r2: f64 },
    /// F* = Σ c_k x^i y^j over the monomial ordering of `poly:<degree>`.
    CustomPoly { degree: usize, coefficients: Vec<f64> },
}

impl CurveKind {
    pub fn circle() -> Self {
        CurveKind::Circle { radius: 0.5 }
    }

    pub fn lshape() -> Self {
        CurveKind::LShape { x0: -1.0, y0: -1.0 }
    }

    pub fn semicircles() -> Self {
        CurveKind::Semicircles { r1: 0.5, r2: 0.75 }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let ok = match self {
            CurveKind::Circle { radius } => radius.is_finite() && *radius > 0.0,
            CurveKind::LShape { x0, y0 } => x0.is_finite() && y0.is_finite(),
            CurveKind::XShape => true,
            CurveKind::Semicircles { r1, r2 } => {
                r1.is_finite() && r2.is_finite() && *r1 > 0.0 && *r2 > 0.0
            }
            CurveKind::CustomPoly { degree, coefficients } => {
                let expected = (degree + 1) * (degree + 2) / 2;
                coefficients.len() == expected
                    && coefficients.iter().all(|c| c.is_finite())
                    && coefficients.iter().any(|c| *c != 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SynthError::BadParams(format!("bad curve definition {self:?}")))
        }
    }

    /// F*(p).
    pub fn evaluate(&self, p: Point2) -> f64 {
        match self {
            CurveKind::Circle { radius } => p.x * p.x + p.y * p.y - radius * radius,
            CurveKind::LShape { x0, y0 } => (p.x - x0) * (p.y - y0),
            CurveKind::XShape => p.x * p.x - p.y * p.y,
            CurveKind::Semicircles { r1, r2 } => {
                let u = p.x * p.x + p.y * p.y;
                (u - r1 * r1) * (u - r2 * r2)
            }
            CurveKind::CustomPoly { degree, coefficients } => {
                let mut total = 0.0;
                let mut k = 0;
                for i in 0..=*degree {
                    for j in 0..=(*degree - i) {
                        total += coefficients[k] * p.x.powi(i as i32) * p.y.powi(j as i32);
                        k += 1;
                    }
                }
                total
            }
        }
    }

    /// ∇F*(p).
    pub fn gradient(&self, p: Point2) -> (f64, f64) {
        match self {
            CurveKind::Circle { .. } => (2.0 * p.x, 2.0 * p.y),
            CurveKind::LShape { x0, y0 } => (p.y - y0, p.x - x0),
            CurveKind::XShape => (2.0 * p.x, -2.0 * p.y),
            CurveKind::Semicircles { r1, r2 } => {
                let u = p.x * p.x + p.y * p.y;
                let du = 2.0 * u - r1 * r1 - r2 * r2;
                (du * 2.0 * p.x, du * 2.0 * p.y)
            }
            CurveKind::CustomPoly { degree, coefficients } => {
                let mut gx = 0.0;
                let mut gy = 0.0;
                let mut k = 0;
                for i in 0..=*degree {
                    for j in 0..=(*degree - i) {
                        let c = coefficients[k];
                        if i > 0 {
                            gx += c * i as f64 * p.x.powi(i as i32 - 1) * p.y.powi(j as i32);
                        }
                        if j > 0 {
                            gy += c * j as f64 * p.x.powi(i as i32) * p.y.powi(j as i32 - 1);
                        }
                        k += 1;
                    }
                }
                (gx, gy)
            }
        }
    }

    /// First-order distance estimate |F*(p)| / max(‖∇F*(p)‖, floor).
    pub fn tube_distance(&self, p: Point2) -> f64 {
        let (gx, gy) = self.gradient(p);
        self.evaluate(p).abs() / gx.hypot(gy).max(GRADIENT_FLOOR)
    }

    /// Coefficients of an exact representative of this curve in `basis`,
    /// unnormalized, or None when the basis cannot express one.
    ///
    /// In the radial-angular basis the representative may differ from F*
    /// as a function (for a circle it is r − r0 rather than r² − r0²)
    /// but always has the same zero set.
    pub fn implicit_coefficients(&self, basis: Basis) -> Option<Vec<f64>> {
        match basis {
            Basis::Monomial { degree } => {
                let mut c = vec![0.0; basis.len()];
                let idx = |i: usize, j: usize| {
                    crate::basis::monomial_index(degree, i, j).expect("checked degree bound")
                };
                match self {
                    CurveKind::Circle { radius } => {
                        if degree < 2 {
                            return None;
                        }
                        c[idx(0, 0)] = -radius * radius;
                        c[idx(0, 2)] = 1.0;
                        c[idx(2, 0)] = 1.0;
                    }
                    CurveKind::LShape { x0, y0 } => {
                        if degree < 2 {
                            return None;
                        }
                        c[idx(0, 0)] = x0 * y0;
                        c[idx(0, 1)] = -x0;
                        c[idx(1, 0)] = -y0;
                        c[idx(1, 1)] = 1.0;
                    }
                    CurveKind::XShape => {
                        if degree < 2 {
                            return None;
                        }
                        c[idx(2, 0)] = 1.0;
                        c[idx(0, 2)] = -1.0;
                    }
                    CurveKind::Semicircles { r1, r2 } => {
                        if degree < 4 {
                            return None;
                        }
                        let (a, b) = (r1 * r1, r2 * r2);
                        c[idx(0, 0)] = a * b;
                        c[idx(0, 2)] = -(a + b);
                        c[idx(2, 0)] = -(a + b);
                        c[idx(0, 4)] = 1.0;
                        c[idx(2, 2)] = 2.0;
                        c[idx(4, 0)] = 1.0;
                    }
                    CurveKind::CustomPoly { degree: d, coefficients } => {
                        if degree < *d {
                            return None;
                        }
                        let mut k = 0;
                        for i in 0..=*d {
                            for j in 0..=(*d - i) {
                                c[idx(i, j)] = coefficients[k];
                                k += 1;
                            }
                        }
                    }
                }
                Some(c)
            }
            Basis::FourierPolar { j_max, m_max } => {
                let mut c = vec![0.0; basis.len()];
                let idx = |j: usize, m: usize, trig: Trig| {
                    basis.fourier_term_index(j, m, trig).expect("checked term bounds")
                };
                match self {
                    CurveKind::Circle { radius } => {
                        if j_max < 1 {
                            return None;
                        }
                        c[idx(0, 0, Trig::Cos)] = -radius;
                        c[idx(1, 0, Trig::Cos)] = 1.0;
                    }
                    CurveKind::LShape { x0, y0 } => {
                        if j_max < 2 || m_max < 2 {
                            return None;
                        }
                        c[idx(0, 0, Trig::Cos)] = x0 * y0;
                        c[idx(1, 1, Trig::Cos)] = -y0;
                        c[idx(1, 1, Trig::Sin)] = -x0;
                        c[idx(2, 2, Trig::Sin)] = 0.5;
                    }
                    CurveKind::XShape => {
                        if j_max < 1 || m_max < 2 {
                            return None;
                        }
                        let j = if j_max >= 2 { 2 } else { 1 };
                        c[idx(j, 2, Trig::Cos)] = 1.0;
                    }
                    CurveKind::Semicircles { r1, r2 } => {
                        if j_max < 2 {
                            return None;
                        }
                        c[idx(0, 0, Trig::Cos)] = r1 * r2;
                        c[idx(1, 0, Trig::Cos)] = -(r1 + r2);
                        c[idx(2, 0, Trig::Cos)] = 1.0;
                    }
                    CurveKind::CustomPoly { .. } => return None,
                }
                Some(c)
            }
        }
    }
}

/// A curve plus the rectangle to sample it in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub kind: CurveKind,
    pub domain: RectDomain,
}

impl CurveSpec {
    pub fn new(kind: CurveKind, domain: RectDomain) -> Self {
        CurveSpec { kind, domain }
    }
}

/// Generation controls.
///
/// `n_batches` is the number R of refinement batches after the grid, so
/// the output holds R+1 batches. Each refinement batch contains exactly
/// `batch_size` tube points followed by ⌈outlier_fraction·batch_size⌉
/// unconstrained uniform points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_batches: usize,
    pub grid_side: usize,
    pub batch_size: usize,
    pub tube_width: f64,
    pub decay: f64,
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_batches: 17,
            grid_side: 4,
            batch_size: 17,
            tube_width: 0.18,
            decay: 0.7,
            outlier_fraction: 0.0,
            seed: 18,
        }
    }
}

impl GenParams {
    fn validate(&self) -> Result<(), SynthError> {
        if self.grid_side == 0 {
            return Err(SynthError::BadParams("grid_side must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(SynthError::BadParams("batch_size must be at least 1".into()));
        }
        if !(self.tube_width.is_finite() && self.tube_width > 0.0) {
            return Err(SynthError::BadParams(format!(
                "tube_width must be positive and finite, got {}",
                self.tube_width
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(SynthError::BadParams(format!(
                "decay must lie strictly between 0 and 1, got {}",
                self.decay
            )));
        }
        if !(self.outlier_fraction >= 0.0 && self.outlier_fraction <= 1.0) {
            return Err(SynthError::BadParams(format!(
                "outlier_fraction must lie in [0, 1], got {}",
                self.outlier_fraction
            )));
        }
        Ok(())
    }
}

/// Generates a batched point set around the zero set of `spec.kind`.
///
/// Batch 0 is a `grid_side` × `grid_side` uniform grid over the domain.
/// Batch i ≥ 1 rejection-samples uniform domain points and keeps those
/// with tube distance at most w₀·qⁱ, then appends the outlier points.
/// The single RNG stream is consumed strictly sequentially, so a fixed
/// seed reproduces the output bit for bit.
pub fn generate(spec: &CurveSpec, params: &GenParams) -> Result<BatchedPointSet, SynthError> {
    params.validate()?;
    spec.kind.validate()?;
    let domain = &spec.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let g = params.grid_side;
    let mut grid = Vec::with_capacity(g * g);
    for j in 0..g {
        for i in 0..g {
            let (x, y) = if g == 1 {
                (
                    domain.xmin() + 0.5 * domain.width(),
                    domain.ymin() + 0.5 * domain.height(),
                )
            } else {
                (
                    domain.xmin() + i as f64 * domain.width() / (g - 1) as f64,
                    domain.ymin() + j as f64 * domain.height() / (g - 1) as f64,
                )
            };
            grid.push(Point2::new(x, y));
        }
    }

    let mut batches = vec![grid];
    let n_outliers = (params.outlier_fraction * params.batch_size as f64).ceil() as usize;
    for batch in 1..=params.n_batches {
        let width = params.tube_width * params.decay.powi(batch as i32);
        let mut points = Vec::with_capacity(params.batch_size + n_outliers);
        let budget = params.batch_size * ATTEMPTS_PER_POINT;
        let mut attempts = 0;
        while points.len() < params.batch_size {
            if attempts >= budget {
                return Err(SynthError::NoTubePoints { batch, attempts });
            }
            attempts += 1;
            let p = uniform_point(&mut rng, domain);
            if spec.kind.tube_distance(p) <= width {
                points.push(p);
            }
        }
        for _ in 0..n_outliers {
            points.push(uniform_point(&mut rng, domain));
        }
        batches.push(points);
    }

    let mut set = BatchedPointSet::new(batches).expect("batch 0 is a nonempty grid");
    set.domain = Some(*domain);
    Ok(set)
}

fn uniform_point(rng: &mut ChaCha8Rng, domain: &RectDomain) -> Point2 {
    let ux: f64 = rng.gen();
    let uy: f64 = rng.gen();
    Point2::new(domain.xmin() + ux * domain.width(), domain.ymin() + uy * domain.height())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::DetectionModel;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn default_spec() -> CurveSpec {
        CurveSpec::new(CurveKind::circle(), RectDomain::default())
    }

    #[test]
    fn grid_only_run_is_exactly_the_grid() {
        let params = GenParams { n_batches: 0, grid_side: 5, ..GenParams::default() };
        let set = generate(&default_spec(), &params).unwrap();
        assert_eq!(set.refinement_count(), 0);
        assert_eq!(set.total_points(), 25);
        let batch = &set.batches()[0];
        assert_eq!(batch[0], Point2::new(-1.0, -1.0));
        assert_eq!(batch[4], Point2::new(1.0, -1.0));
        assert_eq!(batch[12], Point2::new(0.0, 0.0));
        assert_eq!(batch[24], Point2::new(1.0, 1.0));
    }

    #[test]
    fn default_schedule_point_count() {
        let set = generate(&default_spec(), &GenParams::default()).unwrap();
        assert_eq!(set.refinement_count(), 17);
        assert_eq!(set.total_points(), 16 + 17 * 17);
    }

    #[test]
    fn fixed_seed_reproduces_bitwise() {
        let params = GenParams { n_batches: 5, seed: 99, ..GenParams::default() };
        let a = generate(&default_spec(), &params).unwrap();
        let b = generate(&default_spec(), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tube_points_are_near_the_circle_and_in_domain() {
        let params = GenParams { n_batches: 6, batch_size: 12, seed: 3, ..GenParams::default() };
        let spec = default_spec();
        let set = generate(&spec, &params).unwrap();
        for (i, batch) in set.batches().iter().enumerate().skip(1) {
            let width = params.tube_width * params.decay.powi(i as i32);
            for p in batch {
                assert!(spec.domain.contains(*p));
                let true_distance = (p.radius() - 0.5).abs();
                assert!(
                    true_distance <= 1.5 * width,
                    "batch {i}: point {p:?} is {true_distance} from the circle, tube {width}"
                );
            }
        }
    }

    #[test]
    fn outliers_are_appended_after_tube_points() {
        let params = GenParams {
            n_batches: 3,
            batch_size: 8,
            outlier_fraction: 0.25,
            seed: 5,
            ..GenParams::default()
        };
        let set = generate(&default_spec(), &params).unwrap();
        for batch in set.batches().iter().skip(1) {
            assert_eq!(batch.len(), 10);
        }
    }

    #[test]
    fn median_distance_shrinks_batch_over_batch() {
        // The tube radius shrinks by a fixed factor per batch, so batch
        // medians decrease once the batch is large enough for its sample
        // median to be stable.
        let params = GenParams {
            n_batches: 5,
            batch_size: 200,
            decay: 0.6,
            seed: 11,
            ..GenParams::default()
        };
        let spec = default_spec();
        let set = generate(&spec, &params).unwrap();
        let medians: Vec<f64> = set
            .batches()
            .iter()
            .skip(1)
            .map(|batch| {
                let mut d: Vec<f64> = batch.iter().map(|p| (p.radius() - 0.5).abs()).collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d[d.len() / 2]
            })
            .collect();
        for pair in medians.windows(2) {
            assert!(pair[1] <= pair[0], "medians should not increase: {medians:?}");
        }
    }

    #[test]
    fn unreachable_zero_set_errors_out() {
        let spec = CurveSpec::new(CurveKind::Circle { radius: 10.0 }, RectDomain::default());
        let params = GenParams { n_batches: 1, batch_size: 2, ..GenParams::default() };
        assert!(matches!(
            generate(&spec, &params),
            Err(SynthError::NoTubePoints { batch: 1, .. })
        ));
    }

    #[test]
    fn bad_params_are_rejected() {
        let spec = default_spec();
        for params in [
            GenParams { grid_side: 0, ..GenParams::default() },
            GenParams { batch_size: 0, ..GenParams::default() },
            GenParams { tube_width: 0.0, ..GenParams::default() },
            GenParams { decay: 1.0, ..GenParams::default() },
            GenParams { outlier_fraction: 1.5, ..GenParams::default() },
        ] {
            assert!(matches!(generate(&spec, &params), Err(SynthError::BadParams(_))));
        }
        let bad_curve = CurveSpec::new(
            CurveKind::CustomPoly { degree: 2, coefficients: vec![1.0, 2.0] },
            RectDomain::default(),
        );
        assert!(matches!(
            generate(&bad_curve, &GenParams::default()),
            Err(SynthError::BadParams(_))
        ));
    }

    #[test]
    fn saddle_gradient_floor_keeps_distance_finite() {
        let d = CurveKind::XShape.tube_distance(Point2::new(0.0, 0.0));
        assert_eq!(d, 0.0);
        let near = CurveKind::XShape.tube_distance(Point2::new(1e-12, 0.0));
        assert!(near.is_finite());
    }

    #[test]
    fn monomial_representatives_reproduce_f_star() {
        use rand::Rng;
        let cases: Vec<(CurveKind, Basis)> = vec![
            (CurveKind::circle(), "poly:2".parse().unwrap()),
            (CurveKind::circle(), "poly:4".parse().unwrap()),
            (CurveKind::lshape(), "poly:2".parse().unwrap()),
            (CurveKind::XShape, "poly:2".parse().unwrap()),
            (CurveKind::semicircles(), "poly:4".parse().unwrap()),
            (
                CurveKind::CustomPoly {
                    degree: 1,
                    coefficients: vec![0.5, -1.0, 2.0],
                },
                "poly:3".parse().unwrap(),
            ),
        ];
        let mut rng = StdRng::seed_from_u64(21);
        for (kind, basis) in cases {
            let c = kind.implicit_coefficients(basis).expect("representable");
            let model = DetectionModel::new(basis, c.clone()).unwrap();
            let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            for _ in 0..20 {
                let p = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                assert_relative_eq!(
                    model.evaluate(p) * norm,
                    kind.evaluate(p),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn radial_representatives_vanish_on_the_curve() {
        use std::f64::consts::PI;
        let basis: Basis = "fourier:2:2".parse().unwrap();

        let circle = CurveKind::circle();
        let c = circle.implicit_coefficients(basis).unwrap();
        let model = DetectionModel::new(basis, c).unwrap();
        for t in 0..32 {
            let a = 2.0 * PI * t as f64 / 32.0;
            let p = Point2::new(0.5 * a.cos(), 0.5 * a.sin());
            assert_relative_eq!(model.evaluate(p), 0.0, epsilon = 1e-12);
        }

        let semis = CurveKind::semicircles();
        let c = semis.implicit_coefficients(basis).unwrap();
        let model = DetectionModel::new(basis, c).unwrap();
        for r in [0.5, 0.75] {
            for t in 0..16 {
                let a = 2.0 * PI * t as f64 / 16.0;
                let p = Point2::new(r * a.cos(), r * a.sin());
                assert_relative_eq!(model.evaluate(p), 0.0, epsilon = 1e-12);
            }
        }

        let lshape = CurveKind::lshape();
        let c = lshape.implicit_coefficients(basis).unwrap();
        let model = DetectionModel::new(basis, c).unwrap();
        for t in 0..16 {
            let y = -1.0 + 2.0 * t as f64 / 15.0;
            assert_relative_eq!(model.evaluate(Point2::new(-1.0, y)), 0.0, epsilon = 1e-12);
            assert_relative_eq!(model.evaluate(Point2::new(y, -1.0)), 0.0, epsilon = 1e-12);
        }

        let xshape = CurveKind::XShape;
        let c = xshape.implicit_coefficients(basis).unwrap();
        let model = DetectionModel::new(basis, c).unwrap();
        for t in 0..16 {
            let v = -1.0 + 2.0 * t as f64 / 15.0;
            assert_relative_eq!(model.evaluate(Point2::new(v, v)), 0.0, epsilon = 1e-12);
            assert_relative_eq!(model.evaluate(Point2::new(v, -v)), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn insufficient_bases_yield_none() {
        assert!(CurveKind::circle()
            .implicit_coefficients("poly:1".parse().unwrap())
            .is_none());
        assert!(CurveKind::semicircles()
            .implicit_coefficients("poly:3".parse().unwrap())
            .is_none());
        assert!(CurveKind::lshape()
            .implicit_coefficients("fourier:1:2".parse().unwrap())
            .is_none());
        assert!(CurveKind::XShape
            .implicit_coefficients("fourier:1:1".parse().unwrap())
            .is_none());
        assert!(CurveKind::XShape
            .implicit_coefficients("fourier:1:2".parse().unwrap())
            .is_some());
    }
}
