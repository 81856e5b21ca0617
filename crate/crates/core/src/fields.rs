//! Scalar fields with gradients, nonnegative weights and matrix weights.
//!
//! Everything here is an explicit closure over points of a box domain,
//! immutable after construction and safe to evaluate concurrently. Fields
//! carry the metadata quadrature needs: declared seams (breakpoints of
//! piecewise formulas) and declared singular faces with power exponents.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, Seam, SingularFace};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Lipschitz,
    /// Locally Lipschitz away from the declared seams.
    PiecewiseLipschitz,
}

/// An explicit function together with its gradient: the computable stand-in
/// for a pair `(f, ∇f)` in the degenerate Sobolev space.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: ValueFn,
    gradient: Option<GradientFn>,
    support: Option<BoxDomain>,
    seams: Vec<Seam>,
    /// Power behavior of `|f|` near axis-aligned faces, for graded quadrature.
    singular_faces: Vec<SingularFace>,
    /// Power behavior of the *matrix-weighted* gradient `|√Q ∇f|` for the Q
    /// this field is built to pair with. Empty for smooth fields.
    grad_faces: Vec<SingularFace>,
    smoothness: Smoothness,
}

impl ScalarField {
    pub fn new<F>(dim: usize, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            gradient: None,
            support: None,
            seams: Vec::new(),
            singular_faces: Vec::new(),
            grad_faces: Vec::new(),
            smoothness: Smoothness::Lipschitz,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_support(mut self, support: BoxDomain) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_seams(mut self, seams: Vec<Seam>) -> Self {
        self.seams = seams;
        self.smoothness = Smoothness::PiecewiseLipschitz;
        self
    }

    pub fn with_singular_face(mut self, face: SingularFace) -> Self {
        self.singular_faces.push(face);
        self
    }

    pub fn with_grad_face(mut self, face: SingularFace) -> Self {
        self.grad_faces.push(face);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seams(&self) -> &[Seam] {
        &self.seams
    }

    pub fn singular_faces(&self) -> &[SingularFace] {
        &self.singular_faces
    }

    pub fn grad_faces(&self) -> &[SingularFace] {
        &self.grad_faces
    }

    pub fn support(&self) -> Option<&BoxDomain> {
        self.support.as_ref()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        if let Some(s) = &self.support {
            if !s.contains(x) {
                return 0.0;
            }
        }
        (self.value)(x)
    }

    /// Analytic gradient when available, centered finite differences
    /// otherwise. Finite differences are never taken across declared seams;
    /// the step shrinks to stay on one side.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.gradient {
            if let Some(s) = &self.support {
                if !s.contains(x) {
                    return vec![0.0; self.dim];
                }
            }
            return g(x);
        }
        self.fd_gradient(x)
    }

    fn fd_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for a in 0..self.dim {
            let mut h = 1e-6 * x[a].abs().max(1.0);
            for s in &self.seams {
                if s.axis == a {
                    let d = (x[a] - s.at).abs();
                    if d > 0.0 && d < h {
                        h = 0.5 * d;
                    }
                }
            }
            xp[a] = x[a] + h;
            xm[a] = x[a] - h;
            out[a] = (self.value(&xp) - self.value(&xm)) / (2.0 * h);
            xp[a] = x[a];
            xm[a] = x[a];
        }
        out
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, move |_| c).with_gradient(move |_| vec![0.0; dim])
    }

    /// The coordinate function `x ↦ x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        Self::new(dim, move |x: &[f64]| x[i]).with_gradient(move |_| {
            let mut g = vec![0.0; dim];
            g[i] = 1.0;
            g
        })
    }

    /// Pointwise sum; seams and singular faces are merged.
    pub fn sum(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.dim, other.dim);
        let a = self.clone();
        let b = other.clone();
        let (ac, bc) = (a.clone(), b.clone());
        let mut seams = self.seams.clone();
        for s in &other.seams {
            if !seams
                .iter()
                .any(|t| t.axis == s.axis && (t.at - s.at).abs() < 1e-15)
            {
                seams.push(*s);
            }
        }
        let mut out = ScalarField::new(self.dim, move |x: &[f64]| a.value(x) + b.value(x))
            .with_gradient(move |x: &[f64]| {
                let ga = ac.gradient(x);
                let gb = bc.gradient(x);
                ga.iter().zip(gb).map(|(u, v)| u + v).collect()
            });
        if !seams.is_empty() {
            out = out.with_seams(seams);
        }
        out.singular_faces = merge_faces_of_sum(&self.singular_faces, &other.singular_faces);
        out.grad_faces = merge_faces_of_sum(&self.grad_faces, &other.grad_faces);
        out
    }

    /// Pointwise scaling `c·f`; the support and all metadata carry over.
    pub fn scale(&self, c: f64) -> ScalarField {
        let a = self.clone();
        let ac = a.clone();
        let mut out = ScalarField::new(self.dim, move |x: &[f64]| c * a.value(x)).with_gradient(
            move |x: &[f64]| ac.gradient(x).into_iter().map(|g| c * g).collect(),
        );
        out.support = self.support.clone();
        out.seams = self.seams.clone();
        out.singular_faces = self.singular_faces.clone();
        out.grad_faces = self.grad_faces.clone();
        out.smoothness = self.smoothness;
        out
    }

    pub fn difference(&self, other: &ScalarField) -> ScalarField {
        self.sum(&other.scale(-1.0))
    }

    /// Radial smooth bump on the unit cube: `exp(1 − 1/(1−|2x−1|²))`
    /// normalized to peak 1 at the center, vanishing outside the inscribed
    /// ball.
    pub fn bump(dim: usize) -> Self {
        Self::new(dim, move |x: &[f64]| bump_radial_value(x))
            .with_gradient(move |x: &[f64]| bump_radial_gradient(x))
            .with_support(BoxDomain::unit_cube(dim))
    }
}

// Faces of a pointwise sum: coincident declarations keep the worst (most
// negative) exponent, since |f+g| is dominated by the more singular term.
// Exponents add only under pointwise products, which quadrature handles
// when it assembles integrands.
fn merge_faces_of_sum(a: &[SingularFace], b: &[SingularFace]) -> Vec<SingularFace> {
    let mut out: Vec<SingularFace> = a.to_vec();
    for f in b {
        if let Some(existing) = out
            .iter_mut()
            .find(|g| g.axis == f.axis && (g.at - f.at).abs() <= 1e-12 * (1.0 + f.at.abs()))
        {
            if f.exponent < existing.exponent {
                existing.exponent = f.exponent;
            }
            existing.exact &= f.exact;
        } else {
            out.push(*f);
        }
    }
    out
}

/// 1-D bump profile `ψ(s) = exp(1 − 1/(1−(2s−1)²))` on (0,1), peak 1.
pub fn bump_value_1d(s: f64) -> f64 {
    let u = 2.0 * s - 1.0;
    let d = 1.0 - u * u;
    if d <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / d).exp()
    }
}

/// Derivative of the 1-D bump profile.
pub fn bump_derivative_1d(s: f64) -> f64 {
    let u = 2.0 * s - 1.0;
    let d = 1.0 - u * u;
    if d <= 0.0 {
        0.0
    } else {
        bump_value_1d(s) * (-2.0 * u / (d * d)) * 2.0
    }
}

pub(crate) fn bump_radial_value(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|xi| (2.0 * xi - 1.0).powi(2)).sum();
    let d = 1.0 - r2;
    if d <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / d).exp()
    }
}

pub(crate) fn bump_radial_gradient(x: &[f64]) -> Vec<f64> {
    let r2: f64 = x.iter().map(|xi| (2.0 * xi - 1.0).powi(2)).sum();
    let d = 1.0 - r2;
    if d <= 0.0 {
        return vec![0.0; x.len()];
    }
    let v = (1.0 - 1.0 / d).exp();
    x.iter()
        .map(|xi| v * (-(2.0 * (2.0 * xi - 1.0)) / (d * d)) * 2.0)
        .collect()
}

/// Structural tag of a weight, used to pick closed-form ball masses and to
/// transform under powers (the Muckenhoupt dual weight `w^{1/(1−p)}`).
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    Constant(f64),
    /// `coeff · x_axis^exponent`
    AxisPower {
        axis: usize,
        coeff: f64,
        exponent: f64,
    },
    Custom,
}

/// A nonnegative weight with singularity metadata for graded quadrature.
#[derive(Clone)]
pub struct WeightField {
    value: ValueFn,
    kind: WeightKind,
    singular_faces: Vec<SingularFace>,
    name: String,
}

impl WeightField {
    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        assert!(c >= 0.0, "weights are nonnegative");
        Self {
            value: Arc::new(move |_| c),
            kind: WeightKind::Constant(c),
            singular_faces: Vec::new(),
            name: if c == 1.0 {
                "lebesgue".into()
            } else {
                format!("const:{c}")
            },
        }
    }

    /// `x_axis^exponent`, with the face at `x_axis = 0` declared when the
    /// exponent is nonzero.
    pub fn axis_power(axis: usize, exponent: f64) -> Self {
        Self::scaled_axis_power(axis, 1.0, exponent)
    }

    pub fn scaled_axis_power(axis: usize, coeff: f64, exponent: f64) -> Self {
        let mut faces = Vec::new();
        if exponent != 0.0 {
            faces.push(SingularFace::exact(axis, 0.0, exponent));
        }
        Self {
            value: Arc::new(move |x: &[f64]| coeff * x[axis].powf(exponent)),
            kind: WeightKind::AxisPower {
                axis,
                coeff,
                exponent,
            },
            singular_faces: faces,
            name: format!("power:{exponent}:{axis}"),
        }
    }

    /// `exp(1/x_axis)`: blows up at 0 faster than any power. Declared with a
    /// minorant exponent of -2 (since `e^{1/t} ≥ 1/(2t²)`), which certifies
    /// divergence of any mass touching the face.
    pub fn exp_inv_axis(axis: usize) -> Self {
        Self {
            value: Arc::new(move |x: &[f64]| (1.0 / x[axis]).exp()),
            kind: WeightKind::Custom,
            singular_faces: vec![SingularFace::minorant(axis, 0.0, -2.0)],
            name: "exp-inv".into(),
        }
    }

    pub fn from_fn<F>(name: &str, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            kind: WeightKind::Custom,
            singular_faces: Vec::new(),
            name: name.into(),
        }
    }

    pub fn with_singular_face(mut self, face: SingularFace) -> Self {
        self.singular_faces.push(face);
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn singular_faces(&self) -> &[SingularFace] {
        &self.singular_faces
    }

    /// Pointwise power `w^s`. Structure and declared exponents transform
    /// exactly; this is how the Muckenhoupt dual weight is formed.
    pub fn pow(&self, s: f64) -> WeightField {
        let kind = match &self.kind {
            WeightKind::Constant(c) => WeightKind::Constant(c.powf(s)),
            WeightKind::AxisPower {
                axis,
                coeff,
                exponent,
            } => WeightKind::AxisPower {
                axis: *axis,
                coeff: coeff.powf(s),
                exponent: exponent * s,
            },
            WeightKind::Custom => WeightKind::Custom,
        };
        let base = self.value.clone();
        let faces = self
            .singular_faces
            .iter()
            .map(|f| SingularFace {
                exponent: f.exponent * s,
                ..*f
            })
            .collect();
        WeightField {
            value: Arc::new(move |x: &[f64]| base(x).powf(s)),
            kind,
            singular_faces: faces,
            name: format!("({})^{s}", self.name),
        }
    }

    /// Pointwise product `w1·w2`; structure is preserved when it stays in a
    /// known family.
    pub fn product(&self, other: &WeightField) -> WeightField {
        let kind = match (&self.kind, &other.kind) {
            (WeightKind::Constant(a), WeightKind::Constant(b)) => WeightKind::Constant(a * b),
            (WeightKind::Constant(c), WeightKind::AxisPower { axis, coeff, exponent })
            | (WeightKind::AxisPower { axis, coeff, exponent }, WeightKind::Constant(c)) => {
                WeightKind::AxisPower {
                    axis: *axis,
                    coeff: c * coeff,
                    exponent: *exponent,
                }
            }
            (
                WeightKind::AxisPower {
                    axis: a1,
                    coeff: c1,
                    exponent: e1,
                },
                WeightKind::AxisPower {
                    axis: a2,
                    coeff: c2,
                    exponent: e2,
                },
            ) if a1 == a2 => WeightKind::AxisPower {
                axis: *a1,
                coeff: c1 * c2,
                exponent: e1 + e2,
            },
            _ => WeightKind::Custom,
        };
        let va = self.value.clone();
        let vb = other.value.clone();
        let mut faces = self.singular_faces.clone();
        for f in &other.singular_faces {
            faces.push(*f);
        }
        WeightField {
            value: Arc::new(move |x: &[f64]| va(x) * vb(x)),
            kind,
            singular_faces: faces,
            name: format!("{}*{}", self.name, other.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixStructure {
    Diagonal,
    Dense,
}

/// Symmetric matrix of dimension at most 4, stored dense.
#[derive(Debug, Clone, Copy)]
pub struct SymMatrix {
    n: usize,
    a: [[f64; 4]; 4],
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= 4, "matrix fields support dimensions 1..=4");
        Self { n, a: [[0.0; 4]; 4] }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.a[i][i] = *v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.a[i][j].is_finite()))
    }

    /// Eigenvalues by cyclic Jacobi sweeps. Dimensions are tiny, so this is
    /// both exact enough and cheap; the diagonal case short-circuits.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    /// Eigen decomposition `(values, vectors)`, vectors stored column-wise.
    pub fn eigen(&self) -> (Vec<f64>, SymMatrix) {
        let n = self.n;
        let mut a = *self;
        let mut v = SymMatrix::zeros(n);
        for i in 0..n {
            v.a[i][i] = 1.0;
        }
        let norm: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a.a[i][j].abs())
            .fold(0.0, f64::max);
        if norm == 0.0 {
            return (vec![0.0; n], v);
        }
        for _sweep in 0..64 {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a.a[i][j].abs());
                }
            }
            if off <= 1e-15 * norm {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a.a[p][q].abs() <= 1e-18 * norm {
                        continue;
                    }
                    let theta = (a.a[q][q] - a.a[p][p]) / (2.0 * a.a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.a[k][p];
                        let akq = a.a[k][q];
                        a.a[k][p] = c * akp - s * akq;
                        a.a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a.a[p][k];
                        let aqk = a.a[q][k];
                        a.a[p][k] = c * apk - s * aqk;
                        a.a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v.a[k][p];
                        let vkq = v.a[k][q];
                        v.a[k][p] = c * vkp - s * vkq;
                        v.a[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| a.a[i][i]).collect(), v)
    }
}

/// The map `x ↦ Q(x)` into symmetric nonnegative-definite matrices.
#[derive(Clone)]
pub struct MatrixField {
    dim: usize,
    structure: MatrixStructure,
    entries: Arc<dyn Fn(&[f64]) -> SymMatrix + Send + Sync>,
}

impl MatrixField {
    pub fn identity(dim: usize) -> Self {
        Self::diagonal(dim, move |_x| vec![1.0; dim])
    }

    pub fn diagonal<F>(dim: usize, diag: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            structure: MatrixStructure::Diagonal,
            entries: Arc::new(move |x: &[f64]| SymMatrix::from_diagonal(&diag(x))),
        }
    }

    pub fn dense<F>(dim: usize, entries: F) -> Self
    where
        F: Fn(&[f64]) -> SymMatrix + Send + Sync + 'static,
    {
        Self {
            dim,
            structure: MatrixStructure::Dense,
            entries: Arc::new(entries),
        }
    }

    /// `Diag[x_1^e, 1, ..., 1]`: the degenerate family of the embedding
    /// counterexamples.
    pub fn diag_first_axis_power(dim: usize, e: f64) -> Self {
        Self::diagonal(dim, move |x: &[f64]| {
            let mut d = vec![1.0; dim];
            d[0] = x[0].powf(e);
            d
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure(&self) -> MatrixStructure {
        self.structure
    }

    pub fn at(&self, x: &[f64]) -> SymMatrix {
        (self.entries)(x)
    }
}

const DEFINITENESS_TOL: f64 = 1e-12;

/// Largest eigenvalue of `Q(x)` raised to the power `p/2`: the weight
/// `v₀(x) = ‖Q(x)‖_op^{p/2}` attached to a matrix field.
pub fn op_norm_weight(q: &MatrixField, p: f64, x: &[f64]) -> Result<f64> {
    let m = q.at(x);
    if !m.is_finite() {
        return Err(Error::NonFinite {
            what: "matrix entry",
            point: x.to_vec(),
        });
    }
    let lmax = match q.structure() {
        MatrixStructure::Diagonal => (0..m.n()).map(|i| m.get(i, i)).fold(f64::MIN, f64::max),
        MatrixStructure::Dense => m.eigenvalues().into_iter().fold(f64::MIN, f64::max),
    };
    Ok(lmax.max(0.0).powf(p / 2.0))
}

/// Applies the spectral square root: `√(Q(x)) · ξ`.
pub fn sqrt_apply(q: &MatrixField, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let m = q.at(x);
    if !m.is_finite() {
        return Err(Error::NonFinite {
            what: "matrix entry",
            point: x.to_vec(),
        });
    }
    match q.structure() {
        MatrixStructure::Diagonal => {
            let mut out = vec![0.0; m.n()];
            for i in 0..m.n() {
                let d = m.get(i, i);
                if d < -DEFINITENESS_TOL {
                    return Err(Error::NotNonnegDefinite {
                        point: x.to_vec(),
                        eigenvalue: d,
                    });
                }
                out[i] = d.max(0.0).sqrt() * xi[i];
            }
            Ok(out)
        }
        MatrixStructure::Dense => {
            let (vals, vecs) = m.eigen();
            let scale = vals.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            let mut out = vec![0.0; m.n()];
            for (k, lam) in vals.iter().enumerate() {
                if *lam < -DEFINITENESS_TOL * scale {
                    return Err(Error::NotNonnegDefinite {
                        point: x.to_vec(),
                        eigenvalue: *lam,
                    });
                }
                let s = lam.max(0.0).sqrt();
                // projection of xi on the k-th eigenvector
                let proj: f64 = (0..m.n()).map(|i| vecs.get(i, k) * xi[i]).sum();
                for i in 0..m.n() {
                    out[i] += s * proj * vecs.get(i, k);
                }
            }
            Ok(out)
        }
    }
}

/// Result of a pointwise degenerate-ellipticity check
/// `w(x)|ξ|^p ≤ |√Q(x) ξ|^p ≤ τ(x)|ξ|^p`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EllipticityCertificate {
    pub p: f64,
    pub pass: bool,
    /// min over samples of `λ_min(Q)^{p/2} − w`; nonnegative iff the lower
    /// bound holds everywhere sampled.
    pub worst_lower_margin: f64,
    /// min over samples of `τ − λ_max(Q)^{p/2}`.
    pub worst_upper_margin: f64,
    /// max over samples of `v₀/v` when a comparison weight was supplied.
    pub c2: Option<f64>,
    pub samples: usize,
    pub witness: Option<Vec<f64>>,
}

/// Verifies the two-sided ellipticity condition on a sample set. Eigenvalue
/// bounds make the check exact over all directions ξ, so no direction
/// sampling is involved.
pub fn check_ellipticity(
    q: &MatrixField,
    w: &WeightField,
    tau: &WeightField,
    p: f64,
    samples: &[Vec<f64>],
    v: Option<&WeightField>,
) -> Result<EllipticityCertificate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut c2: f64 = 0.0;
    let mut witness = None;
    for x in samples {
        let m = q.at(x);
        if !m.is_finite() {
            return Err(Error::NonFinite {
                what: "matrix entry",
                point: x.clone(),
            });
        }
        let eigs = match q.structure() {
            MatrixStructure::Diagonal => (0..m.n()).map(|i| m.get(i, i)).collect::<Vec<_>>(),
            MatrixStructure::Dense => m.eigenvalues(),
        };
        let lmin = eigs.iter().cloned().fold(f64::MAX, f64::min).max(0.0);
        let lmax = eigs.iter().cloned().fold(f64::MIN, f64::max).max(0.0);
        let wx = w.value(x);
        let tx = tau.value(x);
        if !wx.is_finite() || !tx.is_finite() {
            return Err(Error::NonFinite {
                what: "weight value",
                point: x.clone(),
            });
        }
        let lo_margin = lmin.powf(p / 2.0) - wx;
        let up_margin = tx - lmax.powf(p / 2.0);
        if lo_margin.min(up_margin) < lower.min(upper) && (lo_margin < 0.0 || up_margin < 0.0) {
            witness = Some(x.clone());
        }
        lower = lower.min(lo_margin);
        upper = upper.min(up_margin);
        if let Some(v) = v {
            let vx = v.value(x);
            if vx > 0.0 {
                c2 = c2.max(lmax.powf(p / 2.0) / vx);
            }
        }
    }
    let pass = lower >= -1e-12 && upper >= -1e-12;
    Ok(EllipticityCertificate {
        p,
        pass,
        worst_lower_margin: lower,
        worst_upper_margin: upper,
        c2: v.map(|_| c2),
        samples: samples.len(),
        witness: if pass { None } else { witness },
    })
}
