//! Point-set data model for scattered 2-D vertex data.
//!
//! Two input shapes exist. A [`PointSet`] is a single aggregate of mesh
//! vertices. A [`BatchedPointSet`] is an ordered sequence of vertex
//! batches, one per refinement step; the batch index matters because the
//! fitting weights may depend on it. Both preserve insertion order, and
//! merging never deduplicates.

use thiserror::Error;

/// Errors from data construction, parsing, and serialization.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed input that could not be parsed at all.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    /// Parsed but invalid content tied to a specific input line.
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },
    /// Structural problems not tied to a line (batch gaps, bad domains, ...).
    #[error("{0}")]
    Invalid(String),
}

/// A mesh vertex.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// True when both coordinates are finite (no NaN or infinity).
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Squared Euclidean distance to `other`.
    ///
    /// Single implementation point so every distance-based score in the
    /// crate sums exactly the same floating-point terms.
    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Distance to the origin.
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2 { x, y }
    }
}

/// Axis-aligned rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDomain {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl RectDomain {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self, DataError> {
        for v in [xmin, xmax, ymin, ymax] {
            if !v.is_finite() {
                return Err(DataError::Invalid(format!(
                    "domain bounds must be finite, got {v}"
                )));
            }
        }
        if xmin >= xmax || ymin >= ymax {
            return Err(DataError::Invalid(format!(
                "domain bounds must satisfy xmin < xmax and ymin < ymax, \
                 got [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(RectDomain { xmin, xmax, ymin, ymax })
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn ymin(&self) -> f64 {
        self.ymin
    }

    pub fn ymax(&self) -> f64 {
        self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    /// Membership in the closed rectangle.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }
}

impl Default for RectDomain {
    /// The square [-1, 1] x [-1, 1] used by most fixtures.
    fn default() -> Self {
        RectDomain { xmin: -1.0, xmax: 1.0, ymin: -1.0, ymax: 1.0 }
    }
}

impl serde::Serialize for RectDomain {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("RectDomain", 4)?;
        st.serialize_field("xmin", &self.xmin)?;
        st.serialize_field("xmax", &self.xmax)?;
        st.serialize_field("ymin", &self.ymin)?;
        st.serialize_field("ymax", &self.ymax)?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for RectDomain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Repr {
            xmin: f64,
            xmax: f64,
            ymin: f64,
            ymax: f64,
        }
        let r = Repr::deserialize(deserializer)?;
        RectDomain::new(r.xmin, r.xmax, r.ymin, r.ymax).map_err(serde::de::Error::custom)
    }
}

/// A single aggregate vertex set.
///
/// Point order is preserved from the source; index-based subset selection
/// (for example "the first 300 points") depends on it.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct PointSet {
    pub points: Vec<Point2>,
    pub domain: Option<RectDomain>,
}

impl PointSet {
    pub fn new(points: Vec<Point2>) -> Self {
        PointSet { points, domain: None }
    }

    pub fn with_domain(points: Vec<Point2>, domain: RectDomain) -> Self {
        PointSet { points, domain: Some(domain) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Ordered vertex batches from successive refinement steps.
///
/// Batch `i` of `0..=R` holds the vertices created in step `i`; batch 0 is
/// the coarse starting set and must be nonempty. The optional domain is
/// shared by all batches.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedPointSet {
    batches: Vec<Vec<Point2>>,
    pub domain: Option<RectDomain>,
}

impl BatchedPointSet {
    pub fn new(batches: Vec<Vec<Point2>>) -> Result<Self, DataError> {
        if batches.is_empty() {
            return Err(DataError::Invalid("batched data needs at least one batch".into()));
        }
        if batches[0].is_empty() {
            return Err(DataError::Invalid("batch 0 must be nonempty".into()));
        }
        Ok(BatchedPointSet { batches, domain: None })
    }

    pub fn with_domain(batches: Vec<Vec<Point2>>, domain: RectDomain) -> Result<Self, DataError> {
        let mut set = Self::new(batches)?;
        set.domain = Some(domain);
        Ok(set)
    }

    /// Number of refinement steps R; there are R + 1 batches.
    pub fn refinement_count(&self) -> usize {
        self.batches.len() - 1
    }

    pub fn batches(&self) -> &[Vec<Point2>] {
        &self.batches
    }

    pub fn total_points(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    /// Concatenates all batches in index order into a single point set.
    ///
    /// Multiplicity is preserved: duplicated points are kept, never merged.
    pub fn merge_batches(&self) -> PointSet {
        let mut points = Vec::with_capacity(self.total_points());
        for batch in &self.batches {
            points.extend_from_slice(batch);
        }
        PointSet { points, domain: self.domain }
    }
}

/// Either input shape, as produced by the loaders.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Single(PointSet),
    Batched(BatchedPointSet),
}

impl Dataset {
    /// The data as one flat point set (batches concatenated in order).
    pub fn merged(&self) -> PointSet {
        match self {
            Dataset::Single(set) => set.clone(),
            Dataset::Batched(batched) => batched.merge_batches(),
        }
    }

    pub fn total_points(&self) -> usize {
        match self {
            Dataset::Single(set) => set.len(),
            Dataset::Batched(batched) => batched.total_points(),
        }
    }

    pub fn domain(&self) -> Option<RectDomain> {
        match self {
            Dataset::Single(set) => set.domain,
            Dataset::Batched(batched) => batched.domain,
        }
    }
}

impl From<PointSet> for Dataset {
    fn from(set: PointSet) -> Self {
        Dataset::Single(set)
    }
}

impl From<BatchedPointSet> for Dataset {
    fn from(batched: BatchedPointSet) -> Self {
        Dataset::Batched(batched)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_concatenates_in_index_order() {
        let batched = BatchedPointSet::new(vec![
            vec![Point2::new(0.0, 0.0)],
            vec![Point2::new(1.0, 1.0)],
        ])
        .unwrap();
        let merged = batched.merge_batches();
        assert_eq!(merged.points, vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]);
        assert_eq!(batched.refinement_count(), 1);
    }

    #[test]
    fn merge_single_batch_is_identity() {
        let pts = vec![Point2::new(0.25, -0.5), Point2::new(0.75, 0.5)];
        let batched = BatchedPointSet::new(vec![pts.clone()]).unwrap();
        assert_eq!(batched.merge_batches().points, pts);
    }

    #[test]
    fn merge_keeps_duplicates() {
        let p = Point2::new(0.5, 0.5);
        let batched = BatchedPointSet::new(vec![vec![p], vec![p, p]]).unwrap();
        assert_eq!(batched.merge_batches().len(), 3);
    }

    #[test]
    fn empty_batch_zero_rejected() {
        assert!(BatchedPointSet::new(vec![vec![], vec![Point2::new(0.0, 0.0)]]).is_err());
        assert!(BatchedPointSet::new(vec![]).is_err());
    }

    #[test]
    fn degenerate_domains_rejected() {
        assert!(RectDomain::new(0.0, 0.0, -1.0, 1.0).is_err());
        assert!(RectDomain::new(1.0, -1.0, -1.0, 1.0).is_err());
        assert!(RectDomain::new(-1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn domain_contains_is_closed() {
        let d = RectDomain::default();
        assert!(d.contains(Point2::new(-1.0, 1.0)));
        assert!(d.contains(Point2::new(0.0, 0.0)));
        assert!(!d.contains(Point2::new(1.0000001, 0.0)));
    }
}
