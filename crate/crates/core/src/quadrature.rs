//! Adaptive graded quadrature over boxes and Euclidean balls.
//!
//! The engine is a per-cell paired Gauss rule (7/15 points per axis, tensor
//! product) with adaptive bisection of the worst cell. Declared seams of
//! piecewise integrands are inserted as mandatory cell boundaries, and cells
//! adjacent to a declared singular face are geometrically graded toward it
//! (ratio 1/2) with a depth chosen from the declared power exponent.
//!
//! Integrals that the power test declares divergent (combined exponent <= -1
//! along an approach axis) return a [`DivergenceVerdict`] carrying a
//! monotone tail certificate, never a number.
//!
//! Euclidean balls are integrated by recursive slicing: a 1-D adaptive pass
//! along the first axis over masses of (n-1)-dimensional ball slices, with
//! the box clip applied per axis. Slice thickness kinks at the unclipped
//! ball edges are declared as mild synthetic faces so the outer pass grades
//! toward them.

use std::cell::Cell as StdCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{DivergenceVerdict, Error, Result};
use crate::geometry::{BoxDomain, Region, Seam, SingularFace};

const MAX_DIM: usize = 4;

// Gauss-Legendre nodes and weights on [-1, 1].
const G7_NODES: [f64; 7] = [
    -0.9491079123427585,
    -0.7415311855993945,
    -0.4058451513773972,
    0.0,
    0.4058451513773972,
    0.7415311855993945,
    0.9491079123427585,
];
const G7_WEIGHTS: [f64; 7] = [
    0.1294849661688697,
    0.2797053914892766,
    0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892766,
    0.1294849661688697,
];
const G15_NODES: [f64; 15] = [
    -0.9879925180204854,
    -0.9372733924007060,
    -0.8482065834104272,
    -0.7244177313601700,
    -0.5709721726085388,
    -0.3941513470775634,
    -0.2011940939974345,
    0.0,
    0.2011940939974345,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601700,
    0.8482065834104272,
    0.9372733924007060,
    0.9879925180204854,
];
const G15_WEIGHTS: [f64; 15] = [
    0.0307532419961173,
    0.0703660474881081,
    0.1071592204671719,
    0.1395706779261543,
    0.1662692058169939,
    0.1861610000155622,
    0.1984314853271116,
    0.2025782419255613,
    0.1984314853271116,
    0.1861610000155622,
    0.1662692058169939,
    0.1395706779261543,
    0.1071592204671719,
    0.0703660474881081,
    0.0307532419961173,
];

#[derive(Debug, Clone)]
pub struct QuadOpts {
    /// Relative tolerance target for the error estimate.
    pub rel_tol: f64,
    /// Absolute floor below which the integral is accepted as converged.
    pub abs_tol: f64,
    /// Cell budget; exceeding it sets `converged = false` on the result.
    pub max_cells: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            abs_tol: 1e-14,
            max_cells: 1_000_000,
        }
    }
}

impl QuadOpts {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Options for the nested passes of ball slicing.
    fn inner(&self) -> QuadOpts {
        QuadOpts {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_cells: (self.max_cells / 64).max(4_000),
        }
    }

    fn relaxed() -> Self {
        QuadOpts {
            rel_tol: 1e-2,
            abs_tol: 1e-12,
            max_cells: 2_000,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub cells_used: usize,
    pub graded: bool,
    /// False when the cell budget was exhausted before the tolerance.
    pub converged: bool,
}

/// Singularity metadata handed to the integrator: graded faces plus
/// mandatory seam boundaries.
#[derive(Debug, Clone, Default)]
pub struct Grading {
    pub faces: Vec<SingularFace>,
    pub seams: Vec<Seam>,
}

impl Grading {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(faces: Vec<SingularFace>, seams: Vec<Seam>) -> Self {
        Self { faces, seams }
    }

    pub fn push_face(&mut self, face: SingularFace) {
        self.faces.push(face);
    }

    pub fn push_seam(&mut self, seam: Seam) {
        self.seams.push(seam);
    }

    /// Faces merged by (axis, location): exponents of coincident
    /// declarations add, since the integrand is their product.
    pub fn canonical_faces(&self) -> Vec<SingularFace> {
        let mut out: Vec<SingularFace> = Vec::new();
        for f in &self.faces {
            if let Some(existing) = out
                .iter_mut()
                .find(|g| g.axis == f.axis && (g.at - f.at).abs() <= 1e-12 * (1.0 + f.at.abs()))
            {
                existing.exponent += f.exponent;
                existing.exact &= f.exact;
            } else {
                out.push(*f);
            }
        }
        out
    }
}

struct Budget {
    used: StdCell<usize>,
    limit: usize,
    graded: StdCell<bool>,
    exhausted: StdCell<bool>,
}

impl Budget {
    fn new(limit: usize) -> Self {
        Self {
            used: StdCell::new(0),
            limit,
            graded: StdCell::new(false),
            exhausted: StdCell::new(false),
        }
    }

    fn take(&self, n: usize) -> bool {
        let u = self.used.get() + n;
        self.used.set(u);
        if u > self.limit {
            self.exhausted.set(true);
            false
        } else {
            true
        }
    }
}

type EvalFn<'a> = dyn Fn(&[f64]) -> Result<f64> + 'a;

#[derive(Clone, Copy)]
struct Cell {
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    value: f64,
    err: f64,
}

impl Cell {
    fn from_bounds(lo: &[f64], hi: &[f64]) -> Self {
        let mut c = Cell {
            lo: [0.0; MAX_DIM],
            hi: [0.0; MAX_DIM],
            value: 0.0,
            err: 0.0,
        };
        c.lo[..lo.len()].copy_from_slice(lo);
        c.hi[..hi.len()].copy_from_slice(hi);
        c
    }
}

struct HeapCell(Cell);

impl PartialEq for HeapCell {
    fn eq(&self, other: &Self) -> bool {
        self.0.err == other.0.err
    }
}
impl Eq for HeapCell {}
impl PartialOrd for HeapCell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapCell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .err
            .partial_cmp(&other.0.err)
            .unwrap_or(Ordering::Equal)
    }
}

fn tensor_rule(
    g: &EvalFn,
    cell: &Cell,
    dim: usize,
    nodes: &[f64],
    weights: &[f64],
) -> Result<f64> {
    let mut mid = [0.0f64; MAX_DIM];
    let mut half = [0.0f64; MAX_DIM];
    for a in 0..dim {
        mid[a] = 0.5 * (cell.lo[a] + cell.hi[a]);
        half[a] = 0.5 * (cell.hi[a] - cell.lo[a]);
    }
    let m = nodes.len();
    let mut idx = [0usize; MAX_DIM];
    let mut sum = 0.0;
    let mut x = [0.0f64; MAX_DIM];
    loop {
        let mut w = 1.0;
        for a in 0..dim {
            x[a] = mid[a] + half[a] * nodes[idx[a]];
            w *= weights[idx[a]] * half[a];
        }
        let v = g(&x[..dim])?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "integrand",
                point: x[..dim].to_vec(),
            });
        }
        sum += w * v;
        let mut a = dim;
        loop {
            if a == 0 {
                return Ok(sum);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }
}

fn eval_cell(g: &EvalFn, cell: &mut Cell, dim: usize) -> Result<()> {
    let v7 = tensor_rule(g, cell, dim, &G7_NODES, &G7_WEIGHTS)?;
    let v15 = tensor_rule(g, cell, dim, &G15_NODES, &G15_WEIGHTS)?;
    cell.value = v15;
    cell.err = (v15 - v7).abs();
    Ok(())
}

/// Geometric grading depth for a declared exponent; deep enough that the
/// mass of the innermost sliver (relative size `2^-K`, mass `~ 2^-K(1+e)`)
/// falls below a hundredth of the tolerance.
fn grading_levels(exponent: f64, rel_tol: f64) -> usize {
    if exponent >= 0.0 {
        return 10;
    }
    let tol = (rel_tol * 1e-2).max(1e-15);
    let k = (-tol.log2()) / (1.0 + exponent);
    (k.ceil() as usize).clamp(10, 4000)
}

fn coord_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Initial cell list: mandatory cuts at seams and interior faces, then
/// geometric grading toward every face a cell touches.
fn initial_cells(
    lo: &[f64],
    hi: &[f64],
    dim: usize,
    faces: &[SingularFace],
    seams: &[Seam],
    opts: &QuadOpts,
    budget: &Budget,
) -> Vec<Cell> {
    let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for s in seams {
        if s.axis < dim && s.at > lo[s.axis] && s.at < hi[s.axis] {
            cuts[s.axis].push(s.at);
        }
    }
    for f in faces {
        if f.axis < dim && f.at > lo[f.axis] && f.at < hi[f.axis] {
            cuts[f.axis].push(f.at);
        }
    }
    for c in cuts.iter_mut() {
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        c.dedup_by(|a, b| coord_eq(*a, *b));
    }

    // product grid of cells from the per-axis cut lists
    let mut cells = vec![Cell::from_bounds(lo, hi)];
    for a in 0..dim {
        if cuts[a].is_empty() {
            continue;
        }
        let mut next = Vec::with_capacity(cells.len() * (cuts[a].len() + 1));
        for cell in &cells {
            let mut edges = vec![cell.lo[a]];
            edges.extend(cuts[a].iter().filter(|c| **c > cell.lo[a] && **c < cell.hi[a]));
            edges.push(cell.hi[a]);
            for w in edges.windows(2) {
                let mut c2 = *cell;
                c2.lo[a] = w[0];
                c2.hi[a] = w[1];
                next.push(c2);
            }
        }
        cells = next;
    }

    // geometric grading toward touched faces, one axis at a time; faces
    // lying outside the region but aligned with its boundary (tail masses
    // clipped at distance ε from a singularity) grade toward the boundary
    // edge deep enough to reach the gap scale
    for f in faces {
        if f.axis >= dim {
            continue;
        }
        let mut next = Vec::with_capacity(cells.len());
        for cell in &cells {
            let a = f.axis;
            let width = cell.hi[a] - cell.lo[a];
            let touching_lo = coord_eq(cell.lo[a], f.at);
            let touching_hi = coord_eq(cell.hi[a], f.at);
            let near_lo = !touching_lo
                && f.exponent < 0.0
                && coord_eq(cell.lo[a], lo[a])
                && f.at < cell.lo[a];
            let near_hi = !touching_hi
                && f.exponent < 0.0
                && coord_eq(cell.hi[a], hi[a])
                && f.at > cell.hi[a];
            let from_lo = touching_lo || near_lo;
            let from_hi = touching_hi || near_hi;
            if (!from_lo && !from_hi) || width <= 0.0 {
                next.push(*cell);
                continue;
            }
            let k = if touching_lo || touching_hi {
                grading_levels(f.exponent, opts.rel_tol)
            } else {
                let gap = if near_lo {
                    cell.lo[a] - f.at
                } else {
                    f.at - cell.hi[a]
                };
                (((width / gap).log2().ceil() as i64 + 8).max(4) as usize).min(4000)
            };
            budget.graded.set(true);
            let anchor = if from_lo { cell.lo[a] } else { cell.hi[a] };
            let h = width;
            // ascending distances from the anchor: 0, h/2^K, ..., h/2, h
            let mut offsets = Vec::with_capacity(k + 2);
            offsets.push(0.0);
            for lvl in (1..=k).rev() {
                offsets.push(h * 0.5f64.powi(lvl as i32));
            }
            offsets.push(h);
            offsets.dedup();
            for w in offsets.windows(2) {
                let (d0, d1) = (w[0], w[1]);
                if d1 <= d0 {
                    continue;
                }
                let mut c2 = *cell;
                if from_lo {
                    c2.lo[a] = anchor + d0;
                    c2.hi[a] = anchor + d1;
                } else {
                    c2.lo[a] = anchor - d1;
                    c2.hi[a] = anchor - d0;
                }
                next.push(c2);
            }
        }
        cells = next;
    }
    cells
}

fn integrate_box_impl(
    g: &EvalFn,
    lo: &[f64],
    hi: &[f64],
    grading: &Grading,
    opts: &QuadOpts,
    budget: &Budget,
) -> Result<(f64, f64, bool)> {
    let dim = lo.len();
    debug_assert!(dim >= 1 && dim <= MAX_DIM);
    for a in 0..dim {
        if hi[a] - lo[a] <= 0.0 {
            return Ok((0.0, 0.0, true));
        }
    }
    let faces = grading.canonical_faces();
    let mut cells = initial_cells(lo, hi, dim, &faces, &grading.seams, opts, budget);
    budget.take(cells.len());
    let scale: Vec<f64> = (0..dim).map(|a| hi[a] - lo[a]).collect();

    let mut heap = BinaryHeap::with_capacity(cells.len() * 2);
    let mut total_value = 0.0;
    let mut total_err = 0.0;
    for cell in cells.iter_mut() {
        eval_cell(g, cell, dim)?;
        total_value += cell.value;
        total_err += cell.err;
        heap.push(HeapCell(*cell));
    }

    let target = |v: f64| (opts.rel_tol * v.abs()).max(opts.abs_tol);
    let mut converged = true;
    while total_err > target(total_value) {
        let Some(HeapCell(worst)) = heap.pop() else {
            break;
        };
        // widest axis relative to the region extent
        let axis = (0..dim)
            .max_by(|x, y| {
                let wx = (worst.hi[*x] - worst.lo[*x]) / scale[*x];
                let wy = (worst.hi[*y] - worst.lo[*y]) / scale[*y];
                wx.partial_cmp(&wy).unwrap_or(Ordering::Equal)
            })
            .unwrap();
        let rel_width = (worst.hi[axis] - worst.lo[axis]) / scale[axis];
        if rel_width <= 1e-13 {
            // cannot refine further in f64; accept what we have
            heap.push(HeapCell(worst));
            converged = total_err <= target(total_value);
            break;
        }
        if !budget.take(2) {
            heap.push(HeapCell(worst));
            converged = false;
            break;
        }
        total_value -= worst.value;
        total_err -= worst.err;
        let mid = 0.5 * (worst.lo[axis] + worst.hi[axis]);
        let mut left = worst;
        left.hi[axis] = mid;
        let mut right = worst;
        right.lo[axis] = mid;
        for child in [&mut left, &mut right] {
            eval_cell(g, child, dim)?;
            total_value += child.value;
            total_err += child.err;
        }
        heap.push(HeapCell(left));
        heap.push(HeapCell(right));
    }
    Ok((total_value, total_err, converged))
}

/// Remaps grading metadata of one global axis onto axis 0 of a 1-D pass.
fn axis_grading(grading: &Grading, axis: usize, extra_faces: &[SingularFace]) -> Grading {
    let mut g = Grading::none();
    for f in grading.canonical_faces() {
        if f.axis == axis {
            g.faces.push(SingularFace { axis: 0, ..f });
        }
    }
    for f in extra_faces {
        g.faces.push(SingularFace { axis: 0, ..*f });
    }
    for s in &grading.seams {
        if s.axis == axis {
            g.seams.push(Seam { axis: 0, at: s.at });
        }
    }
    g
}

#[allow(clippy::too_many_arguments)]
fn integrate_ball_nested(
    g: &EvalFn,
    dim: usize,
    axis: usize,
    prefix: [f64; MAX_DIM],
    center: &[f64],
    radius: f64,
    clip: &BoxDomain,
    grading: &Grading,
    opts: &QuadOpts,
    budget: &Budget,
) -> Result<(f64, f64, bool)> {
    let c = center[axis];
    let lo = (c - radius).max(clip.lower()[axis]);
    let hi = (c + radius).min(clip.upper()[axis]);
    if hi <= lo {
        return Ok((0.0, 0.0, true));
    }

    if axis == dim - 1 {
        let integrand = move |t: &[f64]| -> Result<f64> {
            let mut x = prefix;
            x[axis] = t[0];
            g(&x[..dim])
        };
        let sub = axis_grading(grading, axis, &[]);
        return integrate_box_impl(&integrand, &[lo], &[hi], &sub, opts, budget);
    }

    // slice thickness kinks at unclipped ball edges: (n-axis-1)/2 power
    let mut edge_faces = Vec::new();
    let edge_exp = 0.5 * (dim - axis - 1) as f64;
    if coord_eq(lo, c - radius) {
        edge_faces.push(SingularFace::exact(axis, lo, edge_exp));
    }
    if coord_eq(hi, c + radius) {
        edge_faces.push(SingularFace::exact(axis, hi, edge_exp));
    }

    let inner_err = StdCell::new(0.0f64);
    let inner_conv = StdCell::new(true);
    let inner_opts = opts.inner();
    let integrand = |t: &[f64]| -> Result<f64> {
        let tt = t[0];
        let mut x = prefix;
        x[axis] = tt;
        let rest2 = radius * radius - (tt - c) * (tt - c);
        let slice_radius = rest2.max(0.0).sqrt();
        let (v, e, conv) = integrate_ball_nested(
            g,
            dim,
            axis + 1,
            x,
            center,
            slice_radius,
            clip,
            grading,
            &inner_opts,
            budget,
        )?;
        if e > inner_err.get() {
            inner_err.set(e);
        }
        if !conv {
            inner_conv.set(false);
        }
        Ok(v)
    };
    let sub = axis_grading(grading, axis, &edge_faces);
    let (v, outer_err, conv) = integrate_box_impl(&integrand, &[lo], &[hi], &sub, opts, budget)?;
    // inner slice errors enter scaled by the slab extent
    let err = outer_err + inner_err.get() * (hi - lo);
    Ok((v, err, conv && inner_conv.get()))
}

/// Region extent along an axis (bounding interval of the clipped region).
fn region_extent(region: &Region, axis: usize) -> (f64, f64) {
    match region {
        Region::Box(b) => (b.lower()[axis], b.upper()[axis]),
        Region::Ball { ball, clip } => (
            (ball.center[axis] - ball.radius).max(clip.lower()[axis]),
            (ball.center[axis] + ball.radius).min(clip.upper()[axis]),
        ),
    }
}

/// Clips the region to `{ |x_axis - at| >= delta }`, returning the pieces.
fn clip_away_from_face(region: &Region, axis: usize, at: f64, delta: f64) -> Vec<Region> {
    let dim = region.dim();
    let mut out = Vec::new();
    let (lo, hi) = region_extent(region, axis);
    // side below the face
    if at - delta > lo {
        let mut lower = vec![f64::NEG_INFINITY; dim];
        let mut upper = vec![f64::INFINITY; dim];
        for a in 0..dim {
            let (l, h) = region_extent(region, a);
            lower[a] = l;
            upper[a] = h;
        }
        upper[axis] = at - delta;
        if let Ok(b) = BoxDomain::new(lower, upper) {
            if let Some(r) = region.clip_to(&b) {
                out.push(r);
            }
        }
    }
    // side above the face
    if at + delta < hi {
        let mut lower = vec![f64::NEG_INFINITY; dim];
        let mut upper = vec![f64::INFINITY; dim];
        for a in 0..dim {
            let (l, h) = region_extent(region, a);
            lower[a] = l;
            upper[a] = h;
        }
        lower[axis] = at + delta;
        if let Ok(b) = BoxDomain::new(lower, upper) {
            if let Some(r) = region.clip_to(&b) {
                out.push(r);
            }
        }
    }
    out
}

/// Power test for declared-divergent integrals, with a best-effort monotone
/// tail certificate on clipped partial integrals.
fn divergence_precheck(g: &EvalFn, region: &Region, grading: &Grading) -> Result<()> {
    for f in grading.canonical_faces() {
        if f.axis >= region.dim() {
            continue;
        }
        let (lo, hi) = region_extent(region, f.axis);
        if hi <= lo {
            continue;
        }
        // exact comparison: regions clipped away from a face (partial
        // integrals at distance ε, tail masses) must never re-trigger it
        let touches = f.at >= lo && f.at <= hi;
        if !touches || f.exponent > -1.0 + 1e-9 {
            continue;
        }
        let extent = hi - lo;
        let mut partials = Vec::new();
        for k in 1..=5usize {
            let delta = extent * 4.0f64.powi(-(k as i32 + 1));
            let pieces = clip_away_from_face(region, f.axis, f.at, delta);
            let mut sum = 0.0;
            let mut ok = !pieces.is_empty();
            for piece in &pieces {
                match integrate_region(g, &piece_without_face(piece), grading, &QuadOpts::relaxed())
                {
                    Ok((v, _, _)) => sum += v,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                partials.push((delta, sum));
            }
        }
        return Err(Error::Divergent(DivergenceVerdict {
            axis: f.axis,
            at: f.at,
            exponent: f.exponent,
            partials,
        }));
    }
    Ok(())
}

// identity helper; clipped pieces no longer touch the face so the recursive
// precheck passes for it
fn piece_without_face(piece: &Region) -> Region {
    piece.clone()
}

fn integrate_region(
    g: &EvalFn,
    region: &Region,
    grading: &Grading,
    opts: &QuadOpts,
) -> Result<(f64, f64, bool)> {
    let budget = Budget::new(opts.max_cells);
    let (v, e, conv) = dispatch(g, region, grading, opts, &budget)?;
    Ok((v, e, conv))
}

fn dispatch(
    g: &EvalFn,
    region: &Region,
    grading: &Grading,
    opts: &QuadOpts,
    budget: &Budget,
) -> Result<(f64, f64, bool)> {
    match region {
        Region::Box(b) => integrate_box_impl(g, b.lower(), b.upper(), grading, opts, budget),
        Region::Ball { ball, clip } => {
            if ball.dim() == 1 {
                let lo = (ball.center[0] - ball.radius).max(clip.lower()[0]);
                let hi = (ball.center[0] + ball.radius).min(clip.upper()[0]);
                if hi <= lo {
                    return Ok((0.0, 0.0, true));
                }
                integrate_box_impl(g, &[lo], &[hi], grading, opts, budget)
            } else {
                integrate_ball_nested(
                    g,
                    ball.dim(),
                    0,
                    [0.0; MAX_DIM],
                    &ball.center,
                    ball.radius,
                    clip,
                    grading,
                    opts,
                    budget,
                )
            }
        }
    }
}

/// Adaptive integration of a fallible integrand.
pub fn integrate_raw(
    g: &EvalFn,
    region: &Region,
    grading: &Grading,
    opts: &QuadOpts,
) -> Result<QuadratureResult> {
    if region.dim() > MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "quadrature supports dimensions 1..={MAX_DIM}, got {}",
            region.dim()
        )));
    }
    divergence_precheck(g, region, grading)?;
    let budget = Budget::new(opts.max_cells);
    let (value, error_estimate, converged) = dispatch(g, region, grading, opts, &budget)?;
    Ok(QuadratureResult {
        value,
        error_estimate,
        cells_used: budget.used.get(),
        graded: budget.graded.get(),
        converged: converged && !budget.exhausted.get(),
    })
}

/// Adaptive integration of a plain pointwise integrand.
pub fn integrate<F>(
    g: F,
    region: &Region,
    grading: &Grading,
    opts: &QuadOpts,
) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64,
{
    integrate_raw(&|x: &[f64]| Ok(g(x)), region, grading, opts)
}


/// Static power test: the first declared face of the weight whose exponent
/// certifies divergence of `∫_region w` without any integration. Estimators
/// sweeping thousands of balls use this to record divergence witnesses
/// cheaply.
pub fn statically_divergent(
    w: &crate::fields::WeightField,
    region: &Region,
) -> Option<SingularFace> {
    for f in w.singular_faces() {
        if f.axis >= region.dim() || f.exponent > -1.0 + 1e-9 {
            continue;
        }
        let (lo, hi) = region_extent(region, f.axis);
        if hi > lo && f.at >= lo && f.at <= hi {
            return Some(*f);
        }
    }
    None
}

/// Mass `∫_region w dx` of a weight, using closed forms where the weight
/// declares them (constants, axis powers on intervals and interior balls)
/// and graded quadrature otherwise.
pub fn weight_mass(
    w: &crate::fields::WeightField,
    region: &Region,
    opts: &QuadOpts,
) -> Result<f64> {
    use crate::fields::WeightKind;
    match w.kind() {
        WeightKind::Constant(c) => {
            let vol = match region {
                Region::Box(b) => Some(b.volume()),
                Region::Ball { ball, clip } => ball.clipped_volume_closed_form(clip),
            };
            if let Some(v) = vol {
                return Ok(c * v);
            }
        }
        WeightKind::AxisPower {
            axis,
            coeff,
            exponent,
        } => {
            if let Some(m) = axis_power_mass_closed_form(*axis, *coeff, *exponent, region)? {
                return Ok(m);
            }
        }
        WeightKind::Custom => {}
    }
    let grading = Grading::new(w.singular_faces().to_vec(), Vec::new());
    let res = integrate(|x: &[f64]| w.value(x), region, &grading, opts)?;
    Ok(res.value)
}

/// Closed-form `∫ coeff·x_axis^e` over boxes and 1-D balls; detects the
/// divergent face-touching case exactly.
fn axis_power_mass_closed_form(
    axis: usize,
    coeff: f64,
    exponent: f64,
    region: &Region,
) -> Result<Option<f64>> {
    let (lo, hi, other_volume) = match region {
        Region::Box(b) => {
            let mut vol = 1.0;
            for a in 0..b.dim() {
                if a != axis {
                    vol *= b.width(a);
                }
            }
            (b.lower()[axis], b.upper()[axis], vol)
        }
        Region::Ball { ball, clip } => {
            if ball.dim() != 1 || axis != 0 {
                return Ok(None);
            }
            let lo = (ball.center[0] - ball.radius).max(clip.lower()[0]);
            let hi = (ball.center[0] + ball.radius).min(clip.upper()[0]);
            (lo, hi, 1.0)
        }
    };
    if hi <= lo {
        return Ok(Some(0.0));
    }
    if lo < 0.0 {
        return Ok(None); // powf undefined; leave to the caller's modeling
    }
    if exponent <= -1.0 && lo == 0.0 {
        let mut partials = Vec::new();
        for k in 1..=5usize {
            let delta = hi * 4.0f64.powi(-(k as i32 + 1));
            partials.push((delta, antiderivative_diff(coeff, exponent, delta, hi)));
        }
        return Err(Error::Divergent(DivergenceVerdict {
            axis,
            at: 0.0,
            exponent,
            partials,
        }));
    }
    Ok(Some(
        antiderivative_diff(coeff, exponent, lo, hi) * other_volume,
    ))
}

fn antiderivative_diff(coeff: f64, exponent: f64, lo: f64, hi: f64) -> f64 {
    if exponent == -1.0 {
        coeff * (hi / lo).ln()
    } else {
        let e1 = exponent + 1.0;
        let lo_pow = if lo == 0.0 { 0.0 } else { lo.powf(e1) };
        coeff * (hi.powf(e1) - lo_pow) / e1
    }
}

/// `∫_region v·m dx` — the v-mass with respect to the measure `dμ = m dx`.
pub fn weighted_measure_mass(
    v: &crate::fields::WeightField,
    m: &crate::fields::WeightField,
    region: &Region,
    opts: &QuadOpts,
) -> Result<f64> {
    weight_mass(&v.product(m), region, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ball;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn unit_box(dim: usize) -> Region {
        Region::Box(BoxDomain::unit_cube(dim))
    }

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        let region = Region::Box(BoxDomain::interval(0.0, 1.0));
        // degree 13 is exact for G7 and G15, so the error estimate vanishes
        let r = integrate(
            |x: &[f64]| 14.0 * x[0].powi(13),
            &region,
            &Grading::none(),
            &QuadOpts::default(),
        )
        .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-14);
        assert!(r.error_estimate < 1e-13);
        assert_eq!(r.cells_used, 1);
    }

    #[test]
    fn constant_on_unit_square() {
        let r = integrate(|_x: &[f64]| 1.0, &unit_box(2), &Grading::none(), &QuadOpts::default())
            .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn inverse_sqrt_with_graded_face() {
        let grading = Grading::new(vec![SingularFace::exact(0, 0.0, -0.5)], vec![]);
        let r = integrate(
            |x: &[f64]| x[0].powf(-0.5),
            &Region::Box(BoxDomain::interval(0.0, 1.0)),
            &grading,
            &QuadOpts::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-6);
        assert!(r.graded);
    }

    #[test]
    fn declared_inverse_first_power_is_divergent() {
        let grading = Grading::new(vec![SingularFace::exact(0, 0.0, -1.0)], vec![]);
        let err = integrate(
            |x: &[f64]| 1.0 / x[0],
            &Region::Box(BoxDomain::interval(0.0, 1.0)),
            &grading,
            &QuadOpts::default(),
        )
        .unwrap_err();
        let v = err.divergence().expect("divergence verdict");
        assert_eq!(v.axis, 0);
        assert_eq!(v.exponent, -1.0);
        // monotone growth certificate
        assert!(v.partials.len() >= 3);
        for w in v.partials.windows(2) {
            assert!(w[1].1 > w[0].1, "partials must grow: {:?}", v.partials);
        }
    }

    #[test]
    fn seam_makes_piecewise_integrand_cheap() {
        let seamed = Grading::new(vec![], vec![Seam { axis: 0, at: 0.3 }]);
        let r = integrate(
            |x: &[f64]| (x[0] - 0.3).abs(),
            &Region::Box(BoxDomain::interval(0.0, 1.0)),
            &seamed,
            &QuadOpts::default(),
        )
        .unwrap();
        let exact = 0.5 * (0.3f64.powi(2) + 0.7f64.powi(2));
        assert_relative_eq!(r.value, exact, max_relative = 1e-12);
        assert!(r.cells_used <= 4);
    }

    #[test]
    fn interior_disc_area_and_moment() {
        let cube = BoxDomain::unit_cube(2);
        let ball = Ball::new(vec![0.5, 0.5], 0.3);
        let region = Region::ball_in(ball, &cube);
        let area = integrate(|_x: &[f64]| 1.0, &region, &Grading::none(), &QuadOpts::default())
            .unwrap();
        assert_relative_eq!(area.value, std::f64::consts::PI * 0.09, max_relative = 1e-7);

        // \int_D x^2 over the disc = pi r^2 c^2 + pi r^4 / 4
        let m = integrate(
            |x: &[f64]| x[0] * x[0],
            &region,
            &Grading::none(),
            &QuadOpts::default(),
        )
        .unwrap();
        let exact = std::f64::consts::PI * (0.09 * 0.25 + 0.3f64.powi(4) / 4.0);
        assert_relative_eq!(m.value, exact, max_relative = 1e-6);
    }

    #[test]
    fn clipped_half_disc() {
        // disc centered on the domain edge: exactly half survives the clip
        let cube = BoxDomain::unit_cube(2);
        let ball = Ball::new(vec![0.0, 0.5], 0.2);
        let region = Region::ball_in(ball, &cube);
        let r = integrate(|_x: &[f64]| 1.0, &region, &Grading::none(), &QuadOpts::default())
            .unwrap();
        assert_relative_eq!(r.value, 0.5 * std::f64::consts::PI * 0.04, max_relative = 1e-6);
    }

    #[test]
    fn ball_in_three_dimensions() {
        let cube = BoxDomain::unit_cube(3);
        let ball = Ball::new(vec![0.5, 0.5, 0.5], 0.25);
        let region = Region::ball_in(ball, &cube);
        let r = integrate(|_x: &[f64]| 1.0, &region, &Grading::none(), &QuadOpts::with_rel_tol(1e-6))
            .unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.25f64.powi(3);
        assert_relative_eq!(r.value, exact, max_relative = 1e-5);
    }

    #[test]
    fn halving_tolerance_stays_within_error_budget() {
        let g = |x: &[f64]| (3.0 * x[0]).sin().exp();
        let region = Region::Box(BoxDomain::interval(0.0, 1.0));
        let r1 = integrate(g, &region, &Grading::none(), &QuadOpts::with_rel_tol(1e-6)).unwrap();
        let r2 = integrate(g, &region, &Grading::none(), &QuadOpts::with_rel_tol(5e-7)).unwrap();
        assert!((r1.value - r2.value).abs() <= r1.error_estimate + r2.error_estimate + 1e-15);
    }

    #[test]
    fn non_finite_integrand_reports_point() {
        // an undeclared pole either exhausts the budget or trips the
        // non-finite guard once bisection underflows past it
        let r = integrate(
            |x: &[f64]| 1.0 / (x[0] - 0.5),
            &Region::Box(BoxDomain::interval(0.0, 1.0)),
            &Grading::none(),
            &QuadOpts {
                max_cells: 10_000,
                ..QuadOpts::default()
            },
        );
        match r {
            Ok(res) => assert!(!res.converged),
            Err(e) => assert!(matches!(e, Error::NonFinite { .. })),
        }
        // declaring the pole gives the divergence verdict instead
        let grading = Grading::new(vec![SingularFace::exact(0, 0.5, -1.0)], vec![]);
        let err = integrate(
            |x: &[f64]| 1.0 / (x[0] - 0.5),
            &Region::Box(BoxDomain::interval(0.0, 1.0)),
            &grading,
            &QuadOpts::default(),
        )
        .unwrap_err();
        assert!(err.is_divergent());
    }

    #[test]
    fn weight_masses_closed_form() {
        use crate::fields::WeightField;
        let cube = BoxDomain::unit_cube(2);
        let lebesgue = WeightField::one();
        let ball = Ball::new(vec![0.5, 0.5], 0.2);
        let m = weight_mass(&lebesgue, &Region::ball_in(ball, &cube), &QuadOpts::default())
            .unwrap();
        assert_relative_eq!(m, std::f64::consts::PI * 0.04, max_relative = 1e-14);

        // t^{1/2} on (0, 0.5): closed form (2/3) 0.5^{3/2}
        let w = WeightField::axis_power(0, 0.5);
        let seg = Region::ball_in(Ball::new(vec![0.25], 0.25), &BoxDomain::unit_cube(1));
        let m1 = weight_mass(&w, &seg, &QuadOpts::default()).unwrap();
        assert_relative_eq!(m1, 2.0 / 3.0 * 0.5f64.powf(1.5), max_relative = 1e-14);

        // t^{-1} mass on an interval touching zero is divergent
        let wd = WeightField::axis_power(0, -1.0);
        let err = weight_mass(&wd, &seg, &QuadOpts::default()).unwrap_err();
        assert!(err.is_divergent());
    }

    #[test]
    fn exp_inv_weight_masses_explode_toward_zero() {
        use crate::fields::WeightField;
        let w = WeightField::exp_inv_axis(0);
        let domain = BoxDomain::unit_cube(1);
        // masses on intervals touching zero carry the minorant exponent -2
        let seg = Region::ball_in(Ball::new(vec![0.1], 0.1), &domain);
        assert!(weight_mass(&w, &seg, &QuadOpts::default()).unwrap_err().is_divergent());
        // interior masses are finite and grow enormously toward zero
        let a = weight_mass(
            &w,
            &Region::Box(BoxDomain::interval(1.0 / 16.0, 1.0 / 8.0)),
            &QuadOpts::with_rel_tol(1e-6),
        )
        .unwrap();
        let b = weight_mass(
            &w,
            &Region::Box(BoxDomain::interval(1.0 / 32.0, 1.0 / 16.0)),
            &QuadOpts::with_rel_tol(1e-6),
        )
        .unwrap();
        assert!(b > a * 1e3);
    }
}
