//! Zero-set tracing and geometric diagnostics for fitted detection
//! functions.
//!
//! The zero set {x : f(x) = 0} is extracted with marching squares on a
//! uniform grid, with every crossing refined by bisection along its grid
//! edge, then stitched into polylines. Components, vertex positions, and
//! radius profiles of the traced curves drive the recovery checks used
//! throughout the crate.

use std::collections::HashMap;

use thiserror::Error;

use crate::data::{Point2, RectDomain};
use crate::par::{self, Mode};

/// Bisection steps per edge crossing before giving up on the tolerance.
const MAX_BISECTION_STEPS: usize = 60;
/// Crossing refinement target, relative to the largest |f| on the grid.
const RELATIVE_TRACE_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("resolution must be at least 1, got {0}")]
    BadResolution(usize),
    #[error("detection function is not finite at ({x}, {y})")]
    NonFiniteValue { x: f64, y: f64 },
    #[error("polyline has no points")]
    EmptyPolyline,
    #[error("sample count must be at least 1")]
    BadSampleCount,
}

/// Traced zero set: one polyline per connected component.
///
/// A closed component repeats its first point as its last; open
/// components end on the domain boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub polylines: Vec<Vec<Point2>>,
    /// Largest |f| over the evaluation grid.
    pub grid_max_abs: f64,
    /// Absolute refinement target used for crossings.
    pub tolerance: f64,
}

impl TraceResult {
    pub fn component_count(&self) -> usize {
        self.polylines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn total_vertices(&self) -> usize {
        self.polylines.iter().map(Vec::len).sum()
    }
}

/// Extracts the zero set of `f` over `domain` with marching squares on a
/// (resolution+1)² grid.
///
/// A grid value is treated as positive exactly when it is greater than
/// zero. Each sign-changing grid edge is refined by bisection until
/// |f| ≤ 1e-6 · max|f| over the grid (at most 60 steps). Ambiguous
/// saddle cells are split according to the sign of f at the cell center.
/// The polylines come out in a deterministic order: open paths first by
/// first-crossing order, then closed loops.
pub fn trace_zero_set<F>(
    f: F,
    domain: &RectDomain,
    resolution: usize,
) -> Result<TraceResult, DiagnosticsError>
where
    F: Fn(Point2) -> f64 + Sync,
{
    trace_zero_set_impl(f, domain, resolution, Mode::Auto)
}

/// Sequential reference path of [`trace_zero_set`]; identical results.
#[doc(hidden)]
pub fn trace_zero_set_seq<F>(
    f: F,
    domain: &RectDomain,
    resolution: usize,
) -> Result<TraceResult, DiagnosticsError>
where
    F: Fn(Point2) -> f64 + Sync,
{
    trace_zero_set_impl(f, domain, resolution, Mode::Sequential)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy)]
enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

fn trace_zero_set_impl<F>(
    f: F,
    domain: &RectDomain,
    resolution: usize,
    mode: Mode,
) -> Result<TraceResult, DiagnosticsError>
where
    F: Fn(Point2) -> f64 + Sync,
{
    if resolution == 0 {
        return Err(DiagnosticsError::BadResolution(resolution));
    }
    let n = resolution + 1;
    let dx = domain.width() / resolution as f64;
    let dy = domain.height() / resolution as f64;
    let grid_x = |i: usize| domain.xmin() + i as f64 * dx;
    let grid_y = |j: usize| domain.ymin() + j as f64 * dy;

    let rows = par::map_indexed(mode, n, |j| {
        let y = grid_y(j);
        (0..n).map(|i| f(Point2::new(grid_x(i), y))).collect::<Vec<f64>>()
    });
    let mut values = Vec::with_capacity(n * n);
    for row in rows {
        values.extend(row);
    }
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFiniteValue {
            x: grid_x(bad % n),
            y: grid_y(bad / n),
        });
    }
    let value = |i: usize, j: usize| values[j * n + i];
    let positive = |i: usize, j: usize| value(i, j) > 0.0;

    let grid_max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = RELATIVE_TRACE_TOL * grid_max_abs;

    let mut nodes: Vec<Point2> = Vec::new();
    let mut node_of_edge: HashMap<(Axis, usize, usize), usize> = HashMap::new();
    let mut segments: Vec<(usize, usize)> = Vec::new();

    let mut crossing = |axis: Axis, i: usize, j: usize| -> usize {
        *node_of_edge.entry((axis, i, j)).or_insert_with(|| {
            let a = Point2::new(grid_x(i), grid_y(j));
            let (b, va, vb) = match axis {
                Axis::Horizontal => (Point2::new(grid_x(i + 1), grid_y(j)), value(i, j), value(i + 1, j)),
                Axis::Vertical => (Point2::new(grid_x(i), grid_y(j + 1)), value(i, j), value(i, j + 1)),
            };
            nodes.push(refine_crossing(&f, a, va, b, vb, tolerance));
            nodes.len() - 1
        })
    };

    for j in 0..resolution {
        for i in 0..resolution {
            let case = (positive(i, j) as u8)
                | (positive(i + 1, j) as u8) << 1
                | (positive(i + 1, j + 1) as u8) << 2
                | (positive(i, j + 1) as u8) << 3;
            let links: &[(Edge, Edge)] = match case {
                0 | 15 => &[],
                1 => &[(Edge::Left, Edge::Bottom)],
                2 => &[(Edge::Bottom, Edge::Right)],
                3 => &[(Edge::Left, Edge::Right)],
                4 => &[(Edge::Top, Edge::Right)],
                5 | 10 => {
                    let center = f(Point2::new(
                        0.5 * (grid_x(i) + grid_x(i + 1)),
                        0.5 * (grid_y(j) + grid_y(j + 1)),
                    ));
                    // The center sign decides which diagonal pair of
                    // corners the two segments isolate.
                    match (case, center > 0.0) {
                        (5, true) => &[(Edge::Bottom, Edge::Right), (Edge::Top, Edge::Left)],
                        (5, false) => &[(Edge::Left, Edge::Bottom), (Edge::Top, Edge::Right)],
                        (10, true) => &[(Edge::Left, Edge::Bottom), (Edge::Top, Edge::Right)],
                        (_, _) => &[(Edge::Bottom, Edge::Right), (Edge::Top, Edge::Left)],
                    }
                }
                6 => &[(Edge::Bottom, Edge::Top)],
                7 => &[(Edge::Left, Edge::Top)],
                8 => &[(Edge::Left, Edge::Top)],
                9 => &[(Edge::Bottom, Edge::Top)],
                11 => &[(Edge::Top, Edge::Right)],
                12 => &[(Edge::Left, Edge::Right)],
                13 => &[(Edge::Bottom, Edge::Right)],
                14 => &[(Edge::Left, Edge::Bottom)],
                _ => unreachable!(),
            };
            for &(a, b) in links {
                let na = crossing_for(&mut crossing, a, i, j);
                let nb = crossing_for(&mut crossing, b, i, j);
                segments.push((na, nb));
            }
        }
    }

    let polylines = stitch(&nodes, &segments);
    Ok(TraceResult { polylines, grid_max_abs, tolerance })
}

fn crossing_for(
    crossing: &mut impl FnMut(Axis, usize, usize) -> usize,
    edge: Edge,
    i: usize,
    j: usize,
) -> usize {
    match edge {
        Edge::Bottom => crossing(Axis::Horizontal, i, j),
        Edge::Top => crossing(Axis::Horizontal, i, j + 1),
        Edge::Left => crossing(Axis::Vertical, i, j),
        Edge::Right => crossing(Axis::Vertical, i + 1, j),
    }
}

/// Bisects along the straight edge from `a` to `b`, whose values have
/// opposite signs in the "positive means > 0" sense, until |f| meets the
/// tolerance or the step budget runs out.
fn refine_crossing<F: Fn(Point2) -> f64>(
    f: &F,
    a: Point2,
    va: f64,
    b: Point2,
    vb: f64,
    tolerance: f64,
) -> Point2 {
    debug_assert_ne!(va > 0.0, vb > 0.0);
    let (mut pos, mut neg) = if va > 0.0 { (a, b) } else { (b, a) };
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = Point2::new(0.5 * (pos.x + neg.x), 0.5 * (pos.y + neg.y));
        let fm = f(mid);
        if fm.abs() <= tolerance {
            return mid;
        }
        if fm > 0.0 {
            pos = mid;
        } else {
            neg = mid;
        }
    }
    Point2::new(0.5 * (pos.x + neg.x), 0.5 * (pos.y + neg.y))
}

/// Joins crossing segments into polylines. Every crossing node has at
/// most two incident segments, so open paths and closed loops are the
/// only possibilities; paths are emitted first (walked from their
/// lowest-index endpoint), then loops.
fn stitch(nodes: &[Point2], segments: &[(usize, usize)]) -> Vec<Vec<Point2>> {
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes.len()];
    for (idx, &(a, b)) in segments.iter().enumerate() {
        incident[a].push((b, idx));
        incident[b].push((a, idx));
    }
    let mut used = vec![false; segments.len()];

    let walk = |start: usize, used: &mut Vec<bool>| -> Vec<Point2> {
        let mut poly = vec![nodes[start]];
        let mut current = start;
        loop {
            let next = incident[current]
                .iter()
                .filter(|&&(_, e)| !used[e])
                .min_by_key(|&&(n, e)| (n, e))
                .copied();
            match next {
                Some((neighbor, e)) => {
                    used[e] = true;
                    current = neighbor;
                    poly.push(nodes[current]);
                }
                None => break,
            }
        }
        poly
    };

    let mut polylines = Vec::new();
    for start in 0..nodes.len() {
        if incident[start].len() == 1 && !used[incident[start][0].1] {
            polylines.push(walk(start, &mut used));
        }
    }
    for start in 0..nodes.len() {
        while incident[start].iter().any(|&(_, e)| !used[e]) {
            polylines.push(walk(start, &mut used));
        }
    }
    polylines
}

/// Distances from the origin sampled at `n_samples` arc-length midpoints
/// along a polyline: sample t sits at arc length (t + 1/2)·L/n.
///
/// A degenerate polyline of zero length yields its first point's radius
/// for every sample.
pub fn radius_profile(polyline: &[Point2], n_samples: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if polyline.is_empty() {
        return Err(DiagnosticsError::EmptyPolyline);
    }
    if n_samples == 0 {
        return Err(DiagnosticsError::BadSampleCount);
    }
    let mut cumulative = Vec::with_capacity(polyline.len());
    cumulative.push(0.0);
    for pair in polyline.windows(2) {
        let step = pair[0].distance_squared(&pair[1]).sqrt();
        cumulative.push(cumulative.last().unwrap() + step);
    }
    let total = *cumulative.last().unwrap();
    if total == 0.0 {
        return Ok(vec![polyline[0].radius(); n_samples]);
    }

    let mut radii = Vec::with_capacity(n_samples);
    for t in 0..n_samples {
        let s = (t as f64 + 0.5) * total / n_samples as f64;
        let seg = cumulative.partition_point(|&c| c < s).clamp(1, polyline.len() - 1);
        let (s0, s1) = (cumulative[seg - 1], cumulative[seg]);
        let u = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
        let (a, b) = (polyline[seg - 1], polyline[seg]);
        let p = Point2::new(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y));
        radii.push(p.radius());
    }
    Ok(radii)
}
