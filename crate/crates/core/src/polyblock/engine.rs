//! Problem-agnostic polyblock outer approximation.
//!
//! Minimizes an increasing function `f` over `G ∩ [0, u]`, where `G` is a
//! conormal set (closed under component-wise increase). The region that may
//! still hold points better than the incumbent is kept as a union of boxes
//! `[v, u]`, one per vertex `v`. Because `f` is increasing, `f(v)` bounds the
//! objective from below on the whole box. Each iteration takes the vertex
//! with the smallest bound, projects it onto the boundary of `G` along the
//! segment towards `u`, and replaces it by the corners of the box part that
//! the projection proves empty.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// An axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperrect {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Hyperrect {
    /// Returns `None` unless `lower <= upper` component-wise.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Option<Self> {
        (lower.len() == upper.len() && lower.iter().zip(&upper).all(|(l, u)| l <= u)).then_some(Self { lower, upper })
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.lower.len()
            && z.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(z, (l, u))| l <= z && z <= u)
    }
}

/// A box corner with its cached objective lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub point: Vec<f64>,
    pub lower_bound: f64,
}

/// Lower corners of the boxes making up the current outer approximation.
/// No vertex is component-wise below another, so no box contains another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    vertices: Vec<Vertex>,
    upper_corner: Vec<f64>,
}

fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

impl VertexSet {
    pub fn new(upper_corner: Vec<f64>) -> Self {
        Self {
            vertices: Vec::new(),
            upper_corner,
        }
    }

    pub fn upper_corner(&self) -> &[f64] {
        &self.upper_corner
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Adds `v` unless it lies outside the global box or its box is already
    /// covered by an existing vertex (including an identical one). Existing
    /// vertices whose boxes `v` covers are dropped.
    pub fn insert(&mut self, v: Vertex) -> bool {
        if v.point.len() != self.upper_corner.len() || !leq(&v.point, &self.upper_corner) {
            return false;
        }
        if v.point.iter().any(|x| !(*x >= 0.0)) {
            return false;
        }
        if self.vertices.iter().any(|u| leq(&u.point, &v.point)) {
            return false;
        }
        self.vertices.retain(|u| !leq(&v.point, &u.point));
        self.vertices.push(v);
        true
    }

    /// Index of the vertex with the smallest bound; ties go to the
    /// lexicographically smallest point.
    pub fn select(&self) -> Option<usize> {
        (0..self.vertices.len()).min_by(|&a, &b| {
            let (va, vb) = (&self.vertices[a], &self.vertices[b]);
            va.lower_bound.total_cmp(&vb.lower_bound).then_with(|| {
                va.point
                    .iter()
                    .zip(&vb.point)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        })
    }

    pub fn remove(&mut self, index: usize) -> Vertex {
        self.vertices.swap_remove(index)
    }

    /// Drops every vertex whose bound is at least `threshold`.
    pub fn prune_at_or_above(&mut self, threshold: f64) -> usize {
        let before = self.vertices.len();
        self.vertices.retain(|v| v.lower_bound < threshold);
        before - self.vertices.len()
    }

    pub fn min_lower_bound(&self) -> Option<f64> {
        self.vertices.iter().map(|v| v.lower_bound).min_by(f64::total_cmp)
    }
}

/// Children of `v` after projecting it to `phi`: `v` with one coordinate
/// raised to that of `phi`. Coordinates the projection did not move give no
/// child.
pub fn children(v: &[f64], phi: &[f64]) -> Vec<Vec<f64>> {
    (0..v.len())
        .filter(|&i| phi[i] > v[i])
        .map(|i| {
            let mut c = v.to_vec();
            c[i] = phi[i];
            c
        })
        .collect()
}

/// Lower bound over a box, optionally with a feasible point found while
/// computing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub candidate: Option<Vec<f64>>,
}

impl From<f64> for Bound {
    fn from(value: f64) -> Self {
        Self { value, candidate: None }
    }
}

/// Replaces vertex `v` (already removed from `set`) by its children
/// towards `phi`. `bound` gives the objective lower bound over a child's
/// box, or `None` when the box holds no feasible point; children are
/// bounded in parallel. Children whose bound reaches `cutoff` are
/// discarded. Returns the candidate points reported by `bound`.
pub fn replace_vertex<F, B>(set: &mut VertexSet, v: &Vertex, phi: &[f64], cutoff: f64, bound: F) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<B> + Sync,
    B: Into<Bound>,
{
    let kids = children(&v.point, phi);
    let bounded: Vec<Option<(Vertex, Option<Vec<f64>>)>> = kids
        .into_par_iter()
        .map(|point| {
            bound(&point).map(|b| {
                let b = b.into();
                (
                    Vertex {
                        lower_bound: b.value.max(v.lower_bound),
                        point,
                    },
                    b.candidate,
                )
            })
        })
        .collect();
    let mut candidates = Vec::new();
    for (child, candidate) in bounded.into_iter().flatten() {
        candidates.extend(candidate);
        if child.lower_bound < cutoff {
            set.insert(child);
        }
    }
    candidates
}

/// Boundary point of a conormal set on the segment from `v` to `upper`:
/// `v + λ (upper − v)` with the smallest `λ ∈ [0, 1]` inside the set.
/// Returns `None` when even `upper` is outside.
pub fn project_to_boundary<F>(v: &[f64], upper: &[f64], contains: F) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> bool,
{
    let at = |lambda: f64| -> Vec<f64> { v.iter().zip(upper).map(|(a, b)| a + lambda * (b - a)).collect() };
    if contains(v) {
        return Some(v.to_vec());
    }
    if !contains(upper) {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if contains(&at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(at(hi))
}

/// Minimizing an increasing function over a conormal set.
pub trait MonotoneProblem: Sync {
    /// Upper corner of the global box.
    fn upper_corner(&self) -> Vec<f64>;
    /// Valid lower bound of the objective over `[v, upper] ∩ G`; `None`
    /// when that set is empty.
    fn lower_bound(&self, v: &[f64]) -> Option<Bound>;
    /// Membership in `G`.
    fn contains(&self, z: &[f64]) -> bool;
    /// Boundary point between `v` and `upper`.
    fn project(&self, v: &[f64], upper: &[f64]) -> Option<Vec<f64>> {
        project_to_boundary(v, upper, |z| self.contains(z))
    }
    /// Objective at a feasible point, after any repair; returns the value
    /// and the point actually evaluated.
    fn evaluate(&self, z: &[f64]) -> Option<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineOptions {
    /// Stop once `(CBV − lower bound) / CBV <= epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub max_vertices: usize,
    /// Relative improvement needed to replace the incumbent; set it above
    /// the accuracy of `evaluate` so noise cannot reorder ties.
    pub improvement_tol: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_iterations: 500,
            max_vertices: 100_000,
            improvement_tol: 1e-9,
        }
    }
}

/// One iteration of the outer approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Current best value.
    pub cbv: f64,
    pub lower_bound: f64,
    pub vertex: Vec<f64>,
    pub projection: Option<Vec<f64>>,
    pub vertices: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolyblockTrace {
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineOutcome {
    pub best_point: Option<Vec<f64>>,
    pub cbv: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: PolyblockTrace,
}

impl EngineOutcome {
    /// Relative gap between the incumbent and the lower bound.
    pub fn gap(&self) -> f64 {
        relative_gap(self.cbv, self.lower_bound)
    }
}

fn relative_gap(cbv: f64, lb: f64) -> f64 {
    if !cbv.is_finite() {
        return f64::INFINITY;
    }
    if cbv <= 0.0 {
        return 0.0;
    }
    ((cbv - lb) / cbv).max(0.0)
}

/// Runs the outer approximation. `incumbents` are feasible points used to
/// seed the best value, in order of preference among equal values.
pub fn minimize<P: MonotoneProblem>(problem: &P, opts: &EngineOptions, incumbents: &[Vec<f64>]) -> EngineOutcome {
    let upper = problem.upper_corner();
    let eps = opts.epsilon;
    let tol = opts.improvement_tol;
    let mut best_point = None;
    let mut cbv = f64::INFINITY;
    let offer = |z: &[f64], cbv: &mut f64, best: &mut Option<Vec<f64>>| {
        if let Some((value, point)) = problem.evaluate(z) {
            // Keep the earlier point unless the new one is clearly better, so
            // ties resolve to the incumbent order.
            if value < *cbv - tol * cbv.abs() || (best.is_none() && value < *cbv) {
                *cbv = value;
                *best = Some(point);
            }
        }
    };
    for z in incumbents {
        offer(z, &mut cbv, &mut best_point);
    }

    let mut set = VertexSet::new(upper.clone());
    let zero = vec![0.0; upper.len()];
    let mut lower_bound = f64::NEG_INFINITY;
    if let Some(lb) = problem.lower_bound(&zero) {
        if let Some(z) = &lb.candidate {
            offer(z, &mut cbv, &mut best_point);
        }
        set.insert(Vertex {
            point: zero.clone(),
            lower_bound: lb.value,
        });
        lower_bound = lb.value;
    }
    // Iteration 0: seeds and the root bound, before any refinement.
    let mut trace = PolyblockTrace {
        records: vec![TraceRecord {
            iteration: 0,
            cbv,
            lower_bound: lower_bound.min(cbv),
            vertex: zero,
            projection: None,
            vertices: set.len(),
        }],
    };
    let mut iterations = 0;
    let converged = loop {
        let cutoff = cbv * (1.0 - eps);
        set.prune_at_or_above(cutoff);
        // Pruned boxes cannot beat the cutoff, which only falls over time.
        let current = set.min_lower_bound().unwrap_or(f64::INFINITY).min(cutoff);
        lower_bound = lower_bound.max(current.min(cbv));
        if set.is_empty() || relative_gap(cbv, lower_bound) <= eps {
            break cbv.is_finite() || set.is_empty();
        }
        if iterations >= opts.max_iterations || set.len() > opts.max_vertices {
            break false;
        }
        iterations += 1;
        let Some(idx) = set.select() else { break false };
        let v = set.remove(idx);
        let projection = if problem.contains(&v.point) {
            // The corner itself is feasible and best in its box.
            offer(&v.point, &mut cbv, &mut best_point);
            None
        } else {
            let phi = problem.project(&v.point, &upper);
            if let Some(phi) = &phi {
                offer(phi, &mut cbv, &mut best_point);
                let found = replace_vertex(&mut set, &v, phi, cbv * (1.0 - eps), |z| problem.lower_bound(z));
                for z in &found {
                    offer(z, &mut cbv, &mut best_point);
                }
            }
            phi
        };
        trace.records.push(TraceRecord {
            iteration: iterations,
            cbv,
            lower_bound,
            vertex: v.point,
            projection,
            vertices: set.len(),
        });
    };
    EngineOutcome {
        best_point,
        cbv,
        lower_bound: lower_bound.min(cbv),
        iterations,
        converged,
        trace,
    }
}
