//! Feature bases for the implicit detection function f(x) = Σ c_i φ_i(x).
//!
//! Two families are provided: bivariate monomials up to a total degree,
//! and a polar family of r^j cos(mθ) / r^j sin(mθ) terms. Each family
//! fixes a canonical term order so coefficient vectors are comparable
//! across runs and against reference tables.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::data::Point2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BasisError {
    #[error("monomial powers ({i},{j}) exceed total degree {degree}")]
    PowersOutOfRange { degree: usize, i: usize, j: usize },
    #[error("unrecognized basis spec `{0}`; expected poly:<n> or fourier:<J>:<M>")]
    BadSpec(String),
}

/// An ordered basis family.
///
/// `Monomial { degree: n }` holds all x^i y^j with i + j <= n, ordered by
/// [`monomial_index`]; for n = 2 the order is [1, y, y², x, xy, x²].
///
/// `FourierPolar { j_max: J, m_max: M }` holds r^j cos(mθ) for j = 0..=J,
/// m = 0..=M and r^j sin(mθ) for m = 1..=M, ordered j-major, m-minor,
/// cosine before sine. The m = 0 sine terms are identically zero and are
/// excluded: keeping them would make every Gram matrix singular in a
/// spurious direction and the unit-norm minimizer non-unique, while
/// removing them changes nothing about the representable functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Monomial { degree: usize },
    FourierPolar { j_max: usize, m_max: usize },
}

/// Position of x^i y^j in the monomial ordering: i(n+2) - i(i+1)/2 + j.
///
/// The map is a bijection from {(i, j) : i + j <= n} onto
/// 0..(n+1)(n+2)/2.
pub fn monomial_index(degree: usize, i: usize, j: usize) -> Result<usize, BasisError> {
    if i + j > degree {
        return Err(BasisError::PowersOutOfRange { degree, i, j });
    }
    Ok(i * (degree + 2) - i * (i + 1) / 2 + j)
}

/// Identifies one term of a Fourier-polar basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

impl Basis {
    /// Number of basis functions k.
    pub fn len(&self) -> usize {
        match *self {
            Basis::Monomial { degree: n } => (n + 1) * (n + 2) / 2,
            Basis::FourierPolar { j_max, m_max } => (j_max + 1) * (m_max + 1) + (j_max + 1) * m_max,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of the r^j cos(mθ) or r^j sin(mθ) term, or None when the
    /// term is not part of this basis (monomial bases, out-of-range powers,
    /// or the excluded m = 0 sines).
    pub fn fourier_term_index(&self, j: usize, m: usize, trig: Trig) -> Option<usize> {
        let Basis::FourierPolar { j_max, m_max } = *self else {
            return None;
        };
        if j > j_max || m > m_max || (m == 0 && trig == Trig::Sin) {
            return None;
        }
        let block = 2 * m_max + 1;
        let within = match (m, trig) {
            (0, Trig::Cos) => 0,
            (_, Trig::Cos) => 2 * m - 1,
            (_, Trig::Sin) => 2 * m,
        };
        Some(j * block + within)
    }

    /// Evaluates every basis function at `p`, in canonical order.
    pub fn eval(&self, p: Point2) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(p, &mut out);
        out
    }

    /// Like [`Basis::eval`] but writing into a caller-provided buffer of
    /// length `self.len()`; the allocation-free path for assembly loops.
    pub fn eval_into(&self, p: Point2, out: &mut [f64]) {
        assert_eq!(out.len(), self.len(), "feature buffer length mismatch");
        match *self {
            Basis::Monomial { degree: n } => {
                let mut idx = 0;
                let mut xpow = 1.0;
                for i in 0..=n {
                    let mut ypow = 1.0;
                    for _j in 0..=(n - i) {
                        out[idx] = xpow * ypow;
                        idx += 1;
                        ypow *= p.y;
                    }
                    xpow *= p.x;
                }
            }
            Basis::FourierPolar { j_max, m_max } => {
                let r = p.x.hypot(p.y);
                // atan2 at the exact origin is pinned to 0 regardless of
                // coordinate zero signs.
                let theta = if p.x == 0.0 && p.y == 0.0 { 0.0 } else { p.y.atan2(p.x) };
                let mut idx = 0;
                let mut rpow = 1.0;
                for _j in 0..=j_max {
                    for m in 0..=m_max {
                        let angle = m as f64 * theta;
                        out[idx] = rpow * angle.cos();
                        idx += 1;
                        if m >= 1 {
                            out[idx] = rpow * angle.sin();
                            idx += 1;
                        }
                    }
                    rpow *= r;
                }
            }
        }
    }

    /// Human-readable term labels in canonical order ("1", "y", "xy",
    /// "r cos(2θ)", ...), used by report tables and term-labeled
    /// coefficient comparisons.
    pub fn term_labels(&self) -> Vec<String> {
        match *self {
            Basis::Monomial { degree: n } => {
                let mut labels = Vec::with_capacity(self.len());
                for i in 0..=n {
                    for j in 0..=(n - i) {
                        labels.push(monomial_label(i, j));
                    }
                }
                labels
            }
            Basis::FourierPolar { j_max, m_max } => {
                let mut labels = Vec::with_capacity(self.len());
                for j in 0..=j_max {
                    for m in 0..=m_max {
                        labels.push(fourier_label(j, m, Trig::Cos));
                        if m >= 1 {
                            labels.push(fourier_label(j, m, Trig::Sin));
                        }
                    }
                }
                labels
            }
        }
    }
}

fn monomial_label(i: usize, j: usize) -> String {
    if i == 0 && j == 0 {
        return "1".to_string();
    }
    let mut label = String::new();
    match i {
        0 => {}
        1 => label.push('x'),
        _ => label.push_str(&format!("x^{i}")),
    }
    match j {
        0 => {}
        1 => label.push('y'),
        _ => label.push_str(&format!("y^{j}")),
    }
    label
}

fn fourier_label(j: usize, m: usize, trig: Trig) -> String {
    let radial = match j {
        0 => String::new(),
        1 => "r".to_string(),
        _ => format!("r^{j}"),
    };
    let angular = match (m, trig) {
        (0, _) => String::new(),
        (1, Trig::Cos) => "cos(θ)".to_string(),
        (1, Trig::Sin) => "sin(θ)".to_string(),
        (_, Trig::Cos) => format!("cos({m}θ)"),
        (_, Trig::Sin) => format!("sin({m}θ)"),
    };
    match (radial.is_empty(), angular.is_empty()) {
        (true, true) => "1".to_string(),
        (false, true) => radial,
        (true, false) => angular,
        (false, false) => format!("{radial} {angular}"),
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Basis::Monomial { degree } => write!(f, "poly:{degree}"),
            Basis::FourierPolar { j_max, m_max } => write!(f, "fourier:{j_max}:{m_max}"),
        }
    }
}

impl FromStr for Basis {
    type Err = BasisError;

    /// Parses the CLI/config syntax `poly:<n>` or `fourier:<J>:<M>`.
    fn from_str(s: &str) -> Result<Self, BasisError> {
        let bad = || BasisError::BadSpec(s.to_string());
        let mut parts = s.split(':');
        match parts.next() {
            Some("poly") => {
                let degree = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(Basis::Monomial { degree })
            }
            Some("fourier") => {
                let j_max = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let m_max = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(Basis::FourierPolar { j_max, m_max })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for Basis {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Basis {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_order_degree_two() {
        let basis = Basis::Monomial { degree: 2 };
        assert_eq!(basis.len(), 6);
        assert_eq!(basis.eval(Point2::new(2.0, 3.0)), vec![1.0, 3.0, 9.0, 2.0, 6.0, 4.0]);
        assert_eq!(basis.eval(Point2::new(0.0, 0.0)), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(basis.term_labels(), vec!["1", "y", "y^2", "x", "xy", "x^2"]);
    }

    #[test]
    fn monomial_index_examples() {
        assert_eq!(monomial_index(2, 1, 1), Ok(4));
        assert_eq!(monomial_index(2, 0, 0), Ok(0));
        assert_eq!(monomial_index(2, 2, 0), Ok(5));
        assert!(matches!(
            monomial_index(2, 2, 1),
            Err(BasisError::PowersOutOfRange { .. })
        ));
    }

    #[test]
    fn monomial_index_is_bijection_up_to_degree_ten() {
        for n in 0..=10 {
            let k = (n + 1) * (n + 2) / 2;
            let mut seen = vec![false; k];
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let idx = monomial_index(n, i, j).unwrap();
                    assert!(idx < k, "index {idx} out of range for n={n}");
                    assert!(!seen[idx], "index {idx} hit twice for n={n}");
                    seen[idx] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "map not onto for n={n}");
        }
    }

    #[test]
    fn fourier_order_and_values() {
        let basis = Basis::FourierPolar { j_max: 1, m_max: 1 };
        assert_eq!(basis.len(), 6);
        // At (1, 0): r = 1, θ = 0.
        assert_eq!(basis.eval(Point2::new(1.0, 0.0)), vec![1.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(
            basis.term_labels(),
            vec!["1", "cos(θ)", "sin(θ)", "r", "r cos(θ)", "r sin(θ)"]
        );
    }

    #[test]
    fn fourier_term_index_layout() {
        let basis = Basis::FourierPolar { j_max: 1, m_max: 2 };
        assert_eq!(basis.len(), 10);
        assert_eq!(basis.fourier_term_index(0, 0, Trig::Cos), Some(0));
        assert_eq!(basis.fourier_term_index(0, 1, Trig::Cos), Some(1));
        assert_eq!(basis.fourier_term_index(0, 1, Trig::Sin), Some(2));
        assert_eq!(basis.fourier_term_index(0, 2, Trig::Cos), Some(3));
        assert_eq!(basis.fourier_term_index(0, 2, Trig::Sin), Some(4));
        assert_eq!(basis.fourier_term_index(1, 0, Trig::Cos), Some(5));
        assert_eq!(basis.fourier_term_index(1, 2, Trig::Sin), Some(9));
        assert_eq!(basis.fourier_term_index(0, 0, Trig::Sin), None);
        assert_eq!(basis.fourier_term_index(2, 0, Trig::Cos), None);
        // Cross-check the layout against label order.
        assert_eq!(basis.term_labels()[9], "r sin(2θ)");
    }

    #[test]
    fn fourier_values_match_direct_evaluation() {
        let basis = Basis::FourierPolar { j_max: 2, m_max: 2 };
        let p = Point2::new(-0.3, 0.7);
        let r = p.x.hypot(p.y);
        let theta = p.y.atan2(p.x);
        let values = basis.eval(p);
        for j in 0..=2usize {
            for m in 0..=2usize {
                let idx = basis.fourier_term_index(j, m, Trig::Cos).unwrap();
                assert_relative_eq!(
                    values[idx],
                    r.powi(j as i32) * (m as f64 * theta).cos(),
                    max_relative = 1e-14,
                    epsilon = 1e-15
                );
                if m >= 1 {
                    let idx = basis.fourier_term_index(j, m, Trig::Sin).unwrap();
                    assert_relative_eq!(
                        values[idx],
                        r.powi(j as i32) * (m as f64 * theta).sin(),
                        max_relative = 1e-14,
                        epsilon = 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn fourier_continuous_across_atan2_branch() {
        // Just above and below the negative x-axis atan2 jumps by 2π;
        // the features must still agree because every term has period 2π.
        let basis = Basis::FourierPolar { j_max: 2, m_max: 3 };
        let above = basis.eval(Point2::new(-0.8, 1e-12));
        let below = basis.eval(Point2::new(-0.8, -1e-12));
        for (a, b) in above.iter().zip(&below) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn fourier_origin_uses_theta_zero() {
        let basis = Basis::FourierPolar { j_max: 1, m_max: 1 };
        for origin in [
            Point2::new(0.0, 0.0),
            Point2::new(-0.0, 0.0),
            Point2::new(0.0, -0.0),
            Point2::new(-0.0, -0.0),
        ] {
            assert_eq!(basis.eval(origin), vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for basis in [
            Basis::Monomial { degree: 4 },
            Basis::FourierPolar { j_max: 2, m_max: 0 },
        ] {
            let s = basis.to_string();
            assert_eq!(s.parse::<Basis>().unwrap(), basis);
        }
        assert!("poly".parse::<Basis>().is_err());
        assert!("poly:x".parse::<Basis>().is_err());
        assert!("fourier:1".parse::<Basis>().is_err());
        assert!("fourier:1:2:3".parse::<Basis>().is_err());
        assert!("spline:3".parse::<Basis>().is_err());
    }

    #[test]
    fn serde_uses_spec_strings() {
        let basis = Basis::FourierPolar { j_max: 1, m_max: 2 };
        let json = serde_json::to_string(&basis).unwrap();
        assert_eq!(json, "\"fourier:1:2\"");
        let back: Basis = serde_json::from_str(&json).unwrap();
        assert_eq!(back, basis);
    }
}
