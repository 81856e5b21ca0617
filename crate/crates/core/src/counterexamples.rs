//! Builders and verifiers for the two explicit families on the unit cube
//! that defeat global embedding and global compactness.
//!
//! Family A: `u(x) = (x₁^{-β} - 2) ψ(x̂)` below the cutoff `x₁ = 2^{-1/β}`,
//! paired with `Q = Diag[x₁², 1, …, 1]`. Its compactly supported ramp
//! approximants `u_j` converge to `u` in the degenerate Sobolev norm while
//! `u` itself falls outside `L^q` — the embedding fails outright.
//!
//! Family B: spikes `v_j` of height `j^{1/p}` on shrinking supports
//! `(1/j, 3/j)`, with weight `q(t) = t^{2p}` damping the gradient. The
//! family is bounded in the one-dimensional weighted Sobolev norm, its
//! lifted version `u_j = v_j(x₁) ψ(x̂)` is bounded under
//! `Q = Diag[x₁^{2p}, 1, …, 1]`, yet no subsequence converges in `L^p`:
//! the embedding is continuous but not compact.
//!
//! All branch formulas are evaluated in the shifted coordinate
//! `s = t - 1/j` (or `3/j - t`) wherever cancellation would otherwise eat
//! the tiny cutoff `j^{-(p+2)}`, and every verifier integrates in s-space,
//! so the curves stay accurate up to the multi-billion indices used by the
//! disjoint-support chains.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{
    bump_derivative_1d, bump_radial_gradient, bump_radial_value, bump_value_1d, MatrixField,
    ScalarField, WeightField,
};
use crate::geometry::{BoxDomain, Region, Seam, SingularFace};
use crate::norms::{qh1p_norm, NormReport};
use crate::probes::{verdict_of, Verdict};
use crate::quadrature::{integrate, Grading, QuadOpts};
use crate::report::Curve;

fn psi_value(xhat: &[f64]) -> f64 {
    if xhat.len() == 1 {
        bump_value_1d(xhat[0])
    } else {
        bump_radial_value(xhat)
    }
}

fn psi_gradient(xhat: &[f64]) -> Vec<f64> {
    if xhat.len() == 1 {
        vec![bump_derivative_1d(xhat[0])]
    } else {
        bump_radial_gradient(xhat)
    }
}

/// Parameters of the failed-embedding family.
#[derive(Debug, Clone, Serialize)]
pub struct ExampleAParams {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub j_values: Vec<u32>,
}

impl ExampleAParams {
    /// The default parameter set `(n, p, q, β) = (2, 2, 4, 0.3)` with a
    /// geometric index grid up to 1000.
    pub fn default_set() -> Self {
        Self::with_exponents(2, 2.0, 4.0, 0.3)
    }

    pub fn with_exponents(dim: usize, p: f64, q: f64, beta: f64) -> Self {
        let mut params = Self {
            dim,
            p,
            q,
            beta,
            j_values: Vec::new(),
        };
        let j0 = params.min_index();
        let mut js = vec![j0];
        let mut j = j0 as f64;
        while j < 1000.0 {
            j = (j * 1.25).ceil();
            js.push(j.min(1000.0) as u32);
        }
        js.dedup();
        params.j_values = js;
        params
    }

    /// Smallest index for which the ramp approximant is defined
    /// (`j > 2^{1+1/β}`).
    pub fn min_index(&self) -> u32 {
        let threshold = 2.0f64.powf(1.0 + 1.0 / self.beta);
        (threshold.floor() as u32) + 1
    }

    /// The cutoff `2^{-1/β}` past which the profile vanishes.
    pub fn cutoff(&self) -> f64 {
        2.0f64.powf(-1.0 / self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.dim > 4 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2..=4, got {}",
                self.dim
            )));
        }
        if !(self.p > 1.0) || !(self.q > self.p) {
            return Err(Error::InvalidParameter(format!(
                "exponents need 1 < p < q, got p={}, q={}",
                self.p, self.q
            )));
        }
        // beta in [1/q, 1/p): beta*q >= 1 (no L^q membership) while
        // beta*p < 1 (L^p membership survives)
        if self.beta < 1.0 / self.q - 1e-12 || self.beta >= 1.0 / self.p {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [1/q, 1/p) = [{}, {}), got {}",
                1.0 / self.q,
                1.0 / self.p,
                self.beta
            )));
        }
        let j0 = self.min_index();
        if let Some(bad) = self.j_values.iter().find(|j| **j < j0) {
            return Err(Error::InvalidParameter(format!(
                "approximant index {bad} is below the validity threshold {j0}"
            )));
        }
        Ok(())
    }
}

/// The built family: matrix weight, limit profile and ramp approximants.
pub struct ExampleA {
    pub params: ExampleAParams,
    pub q_matrix: MatrixField,
    pub u: ScalarField,
    pub approximants: Vec<(u32, ScalarField)>,
}

pub fn build_example_a(params: ExampleAParams) -> Result<ExampleA> {
    params.validate()?;
    let n = params.dim;
    let beta = params.beta;
    let cutoff = params.cutoff();

    let q_matrix = MatrixField::diag_first_axis_power(n, 2.0);

    let profile = move |t: f64| t.powf(-beta) - 2.0;
    let dprofile = move |t: f64| -beta * t.powf(-beta - 1.0);

    let mut u_support_hi = vec![1.0; n];
    u_support_hi[0] = cutoff;
    let u = ScalarField::new(n, move |x: &[f64]| {
        if x[0] >= cutoff {
            0.0
        } else {
            profile(x[0]) * psi_value(&x[1..])
        }
    })
    .with_gradient(move |x: &[f64]| {
        let mut g = vec![0.0; n];
        if x[0] < cutoff {
            let psi = psi_value(&x[1..]);
            let dpsi = psi_gradient(&x[1..]);
            g[0] = dprofile(x[0]) * psi;
            for (a, d) in dpsi.iter().enumerate() {
                g[a + 1] = profile(x[0]) * d;
            }
        }
        g
    })
    .with_support(BoxDomain::new(vec![0.0; n], u_support_hi)?)
    .with_seams(vec![Seam { axis: 0, at: cutoff }])
    .with_singular_face(SingularFace::exact(0, 0.0, -beta))
    // the matrix weight x₁² tames the profile derivative back to x₁^{-β}
    .with_grad_face(SingularFace::exact(0, 0.0, -beta));

    let mut approximants = Vec::with_capacity(params.j_values.len());
    for &j in &params.j_values {
        let jf = j as f64;
        let slope_factor = (jf / 2.0).powf(beta) - 2.0;
        let t_lo = 1.0 / jf;
        let t_mid = 2.0 / jf;
        let mut lo = vec![0.0; n];
        lo[0] = t_lo;
        let mut hi = vec![1.0; n];
        hi[0] = cutoff;
        let uj = ScalarField::new(n, move |x: &[f64]| {
            let t = x[0];
            if t <= t_lo || t >= cutoff {
                0.0
            } else if t < t_mid {
                slope_factor * jf * (t - t_lo) * psi_value(&x[1..])
            } else {
                profile(t) * psi_value(&x[1..])
            }
        })
        .with_gradient(move |x: &[f64]| {
            let t = x[0];
            let mut g = vec![0.0; n];
            if t <= t_lo || t >= cutoff {
                return g;
            }
            let psi = psi_value(&x[1..]);
            let dpsi = psi_gradient(&x[1..]);
            let (val, dval) = if t < t_mid {
                (slope_factor * jf * (t - t_lo), slope_factor * jf)
            } else {
                (profile(t), dprofile(t))
            };
            g[0] = dval * psi;
            for (a, d) in dpsi.iter().enumerate() {
                g[a + 1] = val * d;
            }
            g
        })
        .with_support(BoxDomain::new(lo, hi)?)
        .with_seams(vec![
            Seam { axis: 0, at: t_lo },
            Seam { axis: 0, at: t_mid },
            Seam { axis: 0, at: cutoff },
        ])
        .with_grad_face(SingularFace::exact(0, 0.0, -beta));
        approximants.push((j, uj));
    }

    Ok(ExampleA {
        params,
        q_matrix,
        u,
        approximants,
    })
}

/// Convergence curve of the ramp approximants in the degenerate Sobolev
/// norm.
#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    /// `j ↦ ‖u - u_j‖`
    pub curve: Curve,
    /// consecutive approximant distances `‖u_{j_k} - u_{j_{k+1}}}‖`
    pub pairwise: Curve,
    pub monotone_decreasing: bool,
    pub final_over_initial: f64,
    pub verdict: Verdict,
    pub norms: Vec<(u32, NormReport)>,
}

pub fn verify_a_cauchy(example: &ExampleA, opts: &QuadOpts) -> Result<CauchyReport> {
    let one = WeightField::one();
    let domain = Region::Box(BoxDomain::unit_cube(example.params.dim));
    let mut curve = Curve::new("j", "qh-norm of u - u_j");
    let mut norms = Vec::new();
    for (j, uj) in &example.approximants {
        let diff = example.u.difference(uj);
        let report = qh1p_norm(
            &diff,
            &example.q_matrix,
            &one,
            &one,
            example.params.p,
            &domain,
            opts,
        )?;
        curve.push(*j as f64, report.total);
        norms.push((*j, report));
    }
    let mut pairwise = Curve::new("j", "qh-norm of u_j - u_next");
    for w in example.approximants.windows(2) {
        let diff = w[0].1.difference(&w[1].1);
        let report = qh1p_norm(
            &diff,
            &example.q_matrix,
            &one,
            &one,
            example.params.p,
            &domain,
            opts,
        )?;
        pairwise.push(w[0].0 as f64, report.total);
    }
    let values: Vec<f64> = curve.values().collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let final_over_initial = match (curve.first(), curve.last()) {
        (Some(a), Some(b)) if a > 0.0 => b / a,
        _ => f64::NAN,
    };
    Ok(CauchyReport {
        verdict: verdict_of(&values),
        monotone_decreasing: monotone,
        final_over_initial,
        curve,
        pairwise,
        norms,
    })
}

/// Tail-mass curve demonstrating that `u` misses `L^q`: partial integrals
/// `∫_{x₁ > ε} |u|^q` grow like `ε^{1-βq}` (or logarithmically at the
/// borderline `β = 1/q`).
#[derive(Debug, Clone, Serialize)]
pub struct TailDivergenceReport {
    /// `ε ↦ ∫_{x₁>ε} |u|^q dx`, ε decreasing
    pub curve: Curve,
    pub log_case: bool,
    /// log-log slope of the partial mass against ε (power case)
    pub fitted_exponent: Option<f64>,
    /// consecutive increments on the halving grid (log case)
    pub deltas: Vec<f64>,
    pub verdict: Verdict,
}

/// Default ε grid for the power case: decades from 1e-10 down to 1e-18,
/// deep enough that the power tail dominates the bounded terms.
pub fn default_tail_grid() -> Vec<f64> {
    (10..=18).map(|k| 10.0f64.powi(-k)).collect()
}

/// Halving grid for the borderline log case.
pub fn halving_tail_grid() -> Vec<f64> {
    (0..=12).map(|k| 1e-6 * 0.5f64.powi(k)).collect()
}

pub fn verify_a_divergence(
    example: &ExampleA,
    eps_grid: &[f64],
    opts: &QuadOpts,
) -> Result<TailDivergenceReport> {
    if eps_grid.len() < 4 {
        return Err(Error::InvalidParameter(
            "the tail curve needs at least 4 epsilon values".into(),
        ));
    }
    let p = &example.params;
    let log_case = (p.beta * p.q - 1.0).abs() <= 1e-9;
    let n = p.dim;
    let cutoff = p.cutoff();
    let u = example.u.clone();
    let q = p.q;
    let mut curve = Curve::new("eps", "partial q-mass");
    for &eps in eps_grid {
        if !(eps > 0.0 && eps < cutoff) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {eps} outside (0, cutoff)"
            )));
        }
        let mut lo = vec![0.0; n];
        lo[0] = eps;
        let mut hi = vec![1.0; n];
        hi[0] = cutoff;
        let region = Region::Box(BoxDomain::new(lo, hi)?);
        let uq = u.clone();
        let res = integrate(
            move |x: &[f64]| uq.value(x).abs().powf(q),
            &region,
            &Grading::new(
                vec![SingularFace::exact(0, 0.0, -p.beta * q)],
                vec![],
            ),
            opts,
        )?;
        curve.push(eps, res.value);
    }
    let values: Vec<f64> = curve.values().collect();
    let deltas: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let (fitted_exponent, verdict) = if log_case {
        // increments approach the positive constant that multiplies log(1/ε)
        let k = deltas.len();
        let steady = k >= 2
            && deltas.iter().all(|d| *d > 0.0)
            && (deltas[k - 1] - deltas[k - 2]).abs() <= 0.02 * deltas[k - 1];
        (
            None,
            if steady { Verdict::Diverging } else { Verdict::Bounded },
        )
    } else {
        (curve.loglog_slope(), verdict_of(&values))
    };
    Ok(TailDivergenceReport {
        curve,
        log_case,
        fitted_exponent,
        deltas,
        verdict,
    })
}

/// Parameters of the bounded-but-noncompact spike family.
#[derive(Debug, Clone, Serialize)]
pub struct ExampleBParams {
    pub p: f64,
    /// spike indices; supports are `(1/j, 3/j)`
    pub indices: Vec<u64>,
    /// dimension of the lifted family (the 1-D profiles always exist)
    pub dim: usize,
}

impl ExampleBParams {
    /// Geometric index grid from 4 to 1000.
    pub fn default_set(p: f64) -> Self {
        let mut indices = vec![4u64];
        let mut j = 4.0f64;
        while j < 1000.0 {
            j = (j * 1.21).ceil();
            indices.push(j.min(1000.0) as u64);
        }
        indices.dedup();
        Self {
            p,
            indices,
            dim: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "the family needs p > 1, got {}",
                self.p
            )));
        }
        if self.dim < 2 || self.dim > 4 {
            return Err(Error::InvalidParameter(format!(
                "lift dimension must be 2..=4, got {}",
                self.dim
            )));
        }
        // indices large enough that 1/j + j^{-(p+2)} < 2/j < 3/j - j^{-(p+2)} < 1
        if let Some(bad) = self.indices.iter().find(|j| **j < 4) {
            return Err(Error::InvalidParameter(format!(
                "index {bad} too small for the seam ordering"
            )));
        }
        Ok(())
    }
}

/// One spike profile with its seam data, branch formulas in the shifted
/// coordinate, and exact s-space integrals.
#[derive(Debug, Clone, Serialize)]
pub struct SpikeProfile {
    pub index: u64,
    pub p: f64,
    /// seams: support start `1/j + j^{-(p+2)}`, peak `2/j`, support end
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// shifted-coordinate cutoffs: s ranges over `[j^{-(p+2)}, 1/j]`
    pub s_lo: f64,
    pub s_hi: f64,
    /// amplitude `j^{2/p}` and droop `1/j`
    pub amplitude: f64,
    pub droop: f64,
}

impl SpikeProfile {
    fn new(index: u64, p: f64) -> Self {
        let j = index as f64;
        let s_lo = j.powf(-(p + 2.0));
        let s_hi = 1.0 / j;
        Self {
            index,
            p,
            t1: 1.0 / j + s_lo,
            t2: 2.0 / j,
            t3: 3.0 / j - s_lo,
            s_lo,
            s_hi,
            amplitude: j.powf(2.0 / p),
            droop: 1.0 / j,
        }
    }

    /// Branch value as a function of the shifted coordinate
    /// `s = t - 1/j` (up-ramp) or `s = 3/j - t` (down-ramp).
    pub fn ramp_value(&self, s: f64) -> f64 {
        (self.amplitude * s.powf(1.0 / self.p) - self.droop).max(0.0)
    }

    pub fn ramp_derivative_magnitude(&self, s: f64) -> f64 {
        self.amplitude / self.p * s.powf(1.0 / self.p - 1.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.t1 || t >= self.t3 {
            0.0
        } else if t <= self.t2 {
            self.ramp_value(t - self.droop)
        } else {
            self.ramp_value(3.0 * self.droop - t)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= self.t1 || t >= self.t3 {
            0.0
        } else if t <= self.t2 {
            self.ramp_derivative_magnitude(t - self.droop)
        } else {
            -self.ramp_derivative_magnitude(3.0 * self.droop - t)
        }
    }

    /// Mismatches of the branch values across the three seams, evaluated
    /// through the shifted coordinate so the tiny cutoff never cancels.
    pub fn seam_mismatches(&self) -> [f64; 3] {
        let left = self.ramp_value(self.s_lo); // vs 0
        let peak_up = self.ramp_value(self.s_hi);
        let peak_down = self.ramp_value(self.s_hi);
        let right = self.ramp_value(self.s_lo); // vs 0
        [left, peak_up - peak_down, right]
    }

    /// `∫ v^e dt` over the support, exactly two symmetric ramp integrals in
    /// the shifted coordinate.
    pub fn power_integral(&self, e: f64, opts: &QuadOpts) -> Result<f64> {
        let region = Region::Box(BoxDomain::interval(self.s_lo, self.s_hi));
        let me = self.clone();
        // the ramp behaves like s^{e/p} toward the (excluded) origin
        let grading = Grading::new(
            vec![SingularFace::exact(0, 0.0, e / self.p)],
            vec![],
        );
        let res = integrate(
            move |s: &[f64]| me.ramp_value(s[0]).powf(e),
            &region,
            &grading,
            opts,
        )?;
        Ok(2.0 * res.value)
    }

    /// `∫ t^{p²} |v'|^p dt`: the matrix-weighted gradient mass, with the
    /// weight `t^{2p}` entering as `|√(t^{2p}) v'|^p`.
    pub fn weighted_gradient_integral(&self, opts: &QuadOpts) -> Result<f64> {
        let p = self.p;
        let region = Region::Box(BoxDomain::interval(self.s_lo, self.s_hi));
        // |v'|^p ~ s^{1-p} toward the (excluded) origin
        let grading = Grading::new(
            vec![SingularFace::exact(0, 0.0, 1.0 - p)],
            vec![],
        );
        let up = {
            let me = self.clone();
            integrate(
                move |s: &[f64]| {
                    (me.droop + s[0]).powf(p * p)
                        * me.ramp_derivative_magnitude(s[0]).powf(p)
                },
                &region,
                &grading,
                opts,
            )?
            .value
        };
        let down = {
            let me = self.clone();
            integrate(
                move |s: &[f64]| {
                    (3.0 * me.droop - s[0]).powf(p * p)
                        * me.ramp_derivative_magnitude(s[0]).powf(p)
                },
                &region,
                &grading,
                opts,
            )?
            .value
        };
        Ok(up + down)
    }

    pub fn disjoint_from(&self, other: &SpikeProfile) -> bool {
        self.t3 <= other.t1 || other.t3 <= self.t1
    }

    /// The 1-D profile as a scalar field with declared seams.
    pub fn scalar_field(&self) -> ScalarField {
        let me = self.clone();
        let md = self.clone();
        ScalarField::new(1, move |x: &[f64]| me.value(x[0]))
            .with_gradient(move |x: &[f64]| vec![md.derivative(x[0])])
            .with_support(BoxDomain::interval(self.t1, self.t3))
            .with_seams(vec![
                Seam { axis: 0, at: self.t1 },
                Seam { axis: 0, at: self.t2 },
                Seam { axis: 0, at: self.t3 },
            ])
    }

    /// The lifted field `v_j(x₁) ψ(x̂)` on the n-cube.
    pub fn lifted_field(&self, dim: usize) -> ScalarField {
        let me = self.clone();
        let md = self.clone();
        let mut hi = vec![1.0; dim];
        hi[0] = self.t3;
        let mut lo = vec![0.0; dim];
        lo[0] = self.t1;
        ScalarField::new(dim, move |x: &[f64]| me.value(x[0]) * psi_value(&x[1..]))
            .with_gradient(move |x: &[f64]| {
                let mut g = vec![0.0; dim];
                let v = md.value(x[0]);
                let dv = md.derivative(x[0]);
                let psi = psi_value(&x[1..]);
                let dpsi = psi_gradient(&x[1..]);
                g[0] = dv * psi;
                for (a, d) in dpsi.iter().enumerate() {
                    g[a + 1] = v * d;
                }
                g
            })
            .with_support(BoxDomain::new(lo, hi).expect("spike support"))
            .with_seams(vec![
                Seam { axis: 0, at: self.t1 },
                Seam { axis: 0, at: self.t2 },
                Seam { axis: 0, at: self.t3 },
            ])
    }
}

/// The built spike family with its weight and lifted matrix.
pub struct ExampleB {
    pub params: ExampleBParams,
    /// the scalar weight `q(t) = t^{2p}`
    pub weight: WeightField,
    /// the lifted matrix `Diag[x₁^{2p}, 1, …, 1]`
    pub q_matrix: MatrixField,
    pub profiles: Vec<SpikeProfile>,
}

pub fn build_example_b(params: ExampleBParams) -> Result<ExampleB> {
    params.validate()?;
    let profiles = params
        .indices
        .iter()
        .map(|j| SpikeProfile::new(*j, params.p))
        .collect();
    Ok(ExampleB {
        weight: WeightField::axis_power(0, 2.0 * params.p),
        q_matrix: MatrixField::diag_first_axis_power(params.dim, 2.0 * params.p),
        profiles,
        params,
    })
}

/// `L^p` mass bounds of the spikes: values stay at or below 1 and the tail
/// approaches at least `2^{1-p}`.
#[derive(Debug, Clone, Serialize)]
pub struct SpikeBoundsReport {
    pub curve: Curve,
    /// first index from which every value stayed <= 1
    pub j0: Option<u64>,
    pub upper_ok: bool,
    pub tail_value: f64,
    pub lower_limit: f64,
    pub lower_ok: bool,
}

pub fn verify_b_bounds(example: &ExampleB, opts: &QuadOpts) -> Result<SpikeBoundsReport> {
    let p = example.params.p;
    let mut curve = Curve::new("j", "int v_j^p");
    for prof in &example.profiles {
        curve.push(prof.index as f64, prof.power_integral(p, opts)?);
    }
    let values: Vec<f64> = curve.values().collect();
    let mut j0 = None;
    for (k, v) in values.iter().enumerate() {
        if values[k..].iter().all(|w| *w <= 1.0 + 1e-10) {
            j0 = Some(example.profiles[k].index);
            let _ = v;
            break;
        }
    }
    let tail_value = *values.last().unwrap_or(&0.0);
    let lower_limit = 2.0f64.powf(1.0 - p);
    Ok(SpikeBoundsReport {
        upper_ok: j0.is_some(),
        tail_value,
        lower_limit,
        lower_ok: tail_value >= lower_limit - 1e-3,
        j0,
        curve,
    })
}

/// Uniform bound of the matrix-weighted gradient masses
/// `∫ t^{p²} |v_j'|^p dt`.
#[derive(Debug, Clone, Serialize)]
pub struct SpikeGradientReport {
    pub curve: Curve,
    pub sup: f64,
    /// tail plateau within 10% or strictly decreasing
    pub plateau_ok: bool,
    pub verdict: Verdict,
}

pub fn verify_b_gradient_bound(example: &ExampleB, opts: &QuadOpts) -> Result<SpikeGradientReport> {
    let mut curve = Curve::new("j", "int t^{p^2} |v_j'|^p");
    for prof in &example.profiles {
        curve.push(prof.index as f64, prof.weighted_gradient_integral(opts)?);
    }
    let values: Vec<f64> = curve.values().collect();
    let sup = values.iter().cloned().fold(0.0, f64::max);
    let k = values.len();
    let plateau_ok = if k >= 3 {
        let tail_dec = values[k - 3] >= values[k - 2] && values[k - 2] >= values[k - 1];
        let within = (values[k - 1] - values[k - 2]).abs() <= 0.1 * values[k - 1].abs().max(1e-300);
        tail_dec || within
    } else {
        true
    };
    Ok(SpikeGradientReport {
        verdict: verdict_of(&values),
        sup,
        plateau_ok,
        curve,
    })
}

/// Pairwise separation of the spikes: disjoint supports make the p-th
/// powers add exactly, so no subsequence can be Cauchy in `L^p`.
#[derive(Debug, Clone, Serialize)]
pub struct NoncompactReport {
    /// `(j, k, ‖v_j - v_k‖_p^p)` over the tested disjoint pairs
    pub pairs: Vec<(u64, u64, f64)>,
    pub min_pairwise_pth_power: f64,
    /// the threshold `2·2^{1-p}` the disjoint pairs must reach
    pub lower_bound: f64,
    pub lower_ok: bool,
    /// direct-quadrature additivity cross-check on the first pair
    pub additivity_checked: bool,
    pub epsilon: f64,
    /// min pairwise distance exceeds ε: no ε-Cauchy subsequence exists
    pub cauchy_free: bool,
}

/// Indices with pairwise disjoint supports: `3/j_{k+1} < 1/j_k`.
pub fn disjoint_chain(start: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut j = start.max(4);
    for _ in 0..count {
        out.push(j);
        j = 3 * j + 1;
    }
    out
}

pub fn verify_b_noncompact(
    example: &ExampleB,
    epsilon: f64,
    opts: &QuadOpts,
) -> Result<NoncompactReport> {
    let p = example.params.p;
    let profs = &example.profiles;
    // p-th power masses once per profile
    let mut masses = Vec::with_capacity(profs.len());
    for prof in profs {
        masses.push(prof.power_integral(p, opts)?);
    }
    let mut pairs = Vec::new();
    let mut min_pow = f64::INFINITY;
    for i in 0..profs.len() {
        for k in (i + 1)..profs.len() {
            if !profs[i].disjoint_from(&profs[k]) {
                continue;
            }
            let dist_pow = masses[i] + masses[k];
            min_pow = min_pow.min(dist_pow);
            pairs.push((profs[i].index, profs[k].index, dist_pow));
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "no disjoint-support pairs among the given indices".into(),
        ));
    }
    // additivity cross-check by direct quadrature on the first pair
    let (j, k, expected) = pairs[0];
    let a = profs.iter().find(|p| p.index == j).unwrap();
    let b = profs.iter().find(|p| p.index == k).unwrap();
    let direct = {
        let (ac, bc) = (a.clone(), b.clone());
        let region = Region::Box(BoxDomain::interval(b.t1.min(a.t1), a.t3.max(b.t3)));
        let grading = Grading::new(
            vec![],
            vec![
                Seam { axis: 0, at: a.t1 },
                Seam { axis: 0, at: a.t2 },
                Seam { axis: 0, at: a.t3 },
                Seam { axis: 0, at: b.t1 },
                Seam { axis: 0, at: b.t2 },
                Seam { axis: 0, at: b.t3 },
            ],
        );
        integrate(
            move |x: &[f64]| (ac.value(x[0]) - bc.value(x[0])).abs().powf(p),
            &region,
            &grading,
            opts,
        )?
        .value
    };
    let additivity_checked = (direct - expected).abs() <= 1e-5 * expected.max(1e-12);
    let lower_bound = 2.0 * 2.0f64.powf(1.0 - p);
    let min_dist = min_pow.powf(1.0 / p);
    Ok(NoncompactReport {
        min_pairwise_pth_power: min_pow,
        lower_bound,
        lower_ok: min_pow >= lower_bound - 5e-3,
        additivity_checked,
        epsilon,
        cauchy_free: min_dist > epsilon,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn opts() -> QuadOpts {
        QuadOpts::default()
    }

    // -- family A --

    #[test]
    fn a_params_validate() {
        let good = ExampleAParams::default_set();
        assert!(good.validate().is_ok());
        assert_eq!(good.min_index(), 21);

        let mut bad = ExampleAParams::default_set();
        bad.beta = 0.6; // >= 1/p
        assert!(bad.validate().is_err());

        let mut low = ExampleAParams::default_set();
        low.j_values = vec![20];
        assert!(low.validate().is_err());
    }

    #[test]
    fn a_ramp_is_continuous_at_seams() {
        let ex = build_example_a(ExampleAParams::default_set()).unwrap();
        let beta = ex.params.beta;
        for (j, _) in &ex.approximants {
            let jf = *j as f64;
            // ramp value at 2/j equals the profile value there
            let ramp = ((jf / 2.0).powf(beta) - 2.0) * jf * (2.0 / jf - 1.0 / jf);
            let profile = (2.0 / jf).powf(-beta) - 2.0;
            assert_abs_diff_eq!(ramp, profile, epsilon = 1e-12);
        }
        // profile vanishes at the cutoff
        let cutoff = ex.params.cutoff();
        assert_abs_diff_eq!(cutoff.powf(-beta) - 2.0, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn a_approximants_vanish_left_and_match_u_right() {
        let ex = build_example_a(ExampleAParams::default_set()).unwrap();
        let (j, uj) = ex.approximants.last().unwrap();
        let jf = *j as f64;
        // zero on (0, 1/j]
        assert_eq!(uj.value(&[0.5 / jf, 0.5]), 0.0);
        assert_eq!(uj.value(&[1.0 / jf, 0.5]), 0.0);
        // equals u on the slab [2/j, cutoff)
        let cutoff = ex.params.cutoff();
        for t in [2.0 / jf, 4.0 / jf, 0.5 * cutoff, 0.95 * cutoff] {
            assert!(t >= 2.0 / jf && t < cutoff);
            for xh in [0.3, 0.5, 0.62] {
                assert_eq!(uj.value(&[t, xh]), ex.u.value(&[t, xh]));
            }
        }
        // compact support strictly inside the domain
        let s = uj.support().unwrap();
        assert!(s.lower()[0] > 0.0 && s.upper()[0] < 1.0);
    }

    #[test]
    fn a_cauchy_curve_matches_frozen_oracle() {
        // frozen high-precision values of ||u - u_j|| for (2,2,4,0.3),
        // computed from the closed-form 1-D power integrals times the bump
        // norms
        let mut params = ExampleAParams::default_set();
        params.j_values = vec![21, 32, 1000];
        let ex = build_example_a(params).unwrap();
        let report = verify_a_cauchy(&ex, &opts()).unwrap();
        let got: Vec<f64> = report.curve.values().collect();
        assert_relative_eq!(got[0], 1.614052036, max_relative = 1e-4);
        assert_relative_eq!(got[1], 1.604152451, max_relative = 1e-4);
        assert_relative_eq!(got[2], 1.154293124, max_relative = 1e-4);
        assert!(report.monotone_decreasing);
    }

    #[test]
    fn a_limit_norm_is_finite_and_matches_oracle() {
        let ex = build_example_a(ExampleAParams::default_set()).unwrap();
        let one = WeightField::one();
        let report = qh1p_norm(
            &ex.u,
            &ex.q_matrix,
            &one,
            &one,
            2.0,
            &Region::Box(BoxDomain::unit_cube(2)),
            &opts(),
        )
        .unwrap();
        assert_relative_eq!(report.total, 1.614377595, max_relative = 1e-4);
    }

    #[test]
    fn a_tail_divergence_power_case() {
        let mut params = ExampleAParams::default_set();
        params.j_values = vec![21];
        let ex = build_example_a(params).unwrap();
        let report = verify_a_divergence(&ex, &default_tail_grid(), &opts()).unwrap();
        assert!(!report.log_case);
        assert_eq!(report.verdict, Verdict::Diverging);
        let slope = report.fitted_exponent.unwrap();
        assert!((slope - (-0.2)).abs() <= 0.02, "slope {slope}");
        // frozen endpoints of the tail curve
        let vals: Vec<f64> = report.curve.values().collect();
        assert_relative_eq!(vals[0], 173.826429152, max_relative = 1e-4);
        assert_relative_eq!(*vals.last().unwrap(), 7619.35645519, max_relative = 1e-4);
    }

    #[test]
    fn a_tail_divergence_log_case() {
        let mut params = ExampleAParams::with_exponents(2, 2.0, 4.0, 0.25);
        params.j_values = vec![33];
        let ex = build_example_a(params).unwrap();
        let report = verify_a_divergence(&ex, &halving_tail_grid(), &opts()).unwrap();
        assert!(report.log_case);
        assert_eq!(report.verdict, Verdict::Diverging);
        // increments approach the constant 0.2660 slowly from below
        let last = *report.deltas.last().unwrap();
        assert_relative_eq!(last, 0.2569744978, max_relative = 1e-3);
    }

    // -- family B --

    #[test]
    fn b_seams_are_continuous() {
        for p in [1.5, 2.0, 3.0] {
            for j in [4u64, 10, 50, 100, 1000] {
                let prof = SpikeProfile::new(j, p);
                for m in prof.seam_mismatches() {
                    assert!(
                        m.abs() <= 1e-10,
                        "seam mismatch {m} at j={j}, p={p}"
                    );
                }
                // peak value is j^{1/p} - 1/j
                let peak = prof.ramp_value(prof.s_hi);
                assert_relative_eq!(
                    peak,
                    (j as f64).powf(1.0 / p) - 1.0 / j as f64,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn b_profile_vanishes_outside_support() {
        let prof = SpikeProfile::new(10, 2.0);
        assert_eq!(prof.value(0.05), 0.0);
        assert_eq!(prof.value(prof.t1), 0.0);
        assert_eq!(prof.value(prof.t3), 0.0);
        assert_eq!(prof.value(0.5), 0.0);
        assert!(prof.value(prof.t2) > 0.0);
    }

    #[test]
    fn b_power_integrals_match_frozen_oracle() {
        let o = opts();
        // frozen mpmath values of ∫ v_j^p
        assert_relative_eq!(
            SpikeProfile::new(10, 2.0).power_integral(2.0, &o).unwrap(),
            0.917672262396,
            max_relative = 1e-7
        );
        assert_relative_eq!(
            SpikeProfile::new(1000, 2.0).power_integral(2.0, &o).unwrap(),
            0.999915674596,
            max_relative = 1e-7
        );
        assert_relative_eq!(
            SpikeProfile::new(10, 3.0).power_integral(3.0, &o).unwrap(),
            0.842397759095,
            max_relative = 1e-7
        );
        assert_relative_eq!(
            SpikeProfile::new(10, 1.5).power_integral(1.5, &o).unwrap(),
            0.952056865368,
            max_relative = 1e-6
        );
        // the sigma-lift numerator ∫ v^3 at p = 2
        assert_relative_eq!(
            SpikeProfile::new(1000, 2.0).power_integral(3.0, &o).unwrap(),
            25.2952214078,
            max_relative = 1e-6
        );
    }

    #[test]
    fn b_gradient_integrals_match_frozen_oracle() {
        let o = opts();
        assert_relative_eq!(
            SpikeProfile::new(10, 2.0)
                .weighted_gradient_integral(&o)
                .unwrap(),
            1.22593309053,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            SpikeProfile::new(10, 3.0)
                .weighted_gradient_integral(&o)
                .unwrap(),
            7.27158804336,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            SpikeProfile::new(1000, 1.5)
                .weighted_gradient_integral(&o)
                .unwrap(),
            0.0691153982653,
            max_relative = 1e-6
        );
    }

    #[test]
    fn b_bounds_report() {
        let ex = build_example_b(ExampleBParams::default_set(2.0)).unwrap();
        let report = verify_b_bounds(&ex, &opts()).unwrap();
        assert!(report.upper_ok, "{report:?}");
        assert_eq!(report.j0, Some(4));
        assert!(report.lower_ok);
        assert!(report.tail_value > 0.999);
        // pointwise vanishing at a fixed interior point: supports shrink
        let prof = ex.profiles.last().unwrap();
        assert_eq!(prof.value(0.5), 0.0);
    }

    #[test]
    fn b_gradient_bound_is_uniform() {
        for p in [1.5, 2.0, 3.0] {
            let ex = build_example_b(ExampleBParams::default_set(p)).unwrap();
            let report = verify_b_gradient_bound(&ex, &opts()).unwrap();
            assert!(report.plateau_ok, "p={p}: {report:?}");
            assert!(report.sup.is_finite());
        }
    }

    #[test]
    fn b_noncompact_on_disjoint_chain() {
        let params = ExampleBParams {
            p: 2.0,
            indices: disjoint_chain(4, 8),
            dim: 2,
        };
        let ex = build_example_b(params).unwrap();
        let report = verify_b_noncompact(&ex, 0.1, &opts()).unwrap();
        assert!(report.additivity_checked, "{report:?}");
        assert!(report.lower_ok);
        assert!(report.cauchy_free);
        // trivial case: identical indices have distance zero
        let prof = &ex.profiles[0];
        let self_dist = prof.power_integral(2.0, &opts()).unwrap();
        assert!((2.0 * self_dist - report.pairs[0].2).abs() < 2.0 * self_dist);
    }

    #[test]
    fn b_chain_supports_are_pairwise_disjoint() {
        let chain = disjoint_chain(4, 20);
        assert_eq!(chain.len(), 20);
        let profs: Vec<SpikeProfile> =
            chain.iter().map(|j| SpikeProfile::new(*j, 2.0)).collect();
        for i in 0..profs.len() {
            for k in 0..i {
                assert!(profs[i].disjoint_from(&profs[k]));
            }
        }
    }

    #[test]
    fn b_lifted_field_evaluates() {
        let prof = SpikeProfile::new(10, 2.0);
        let lifted = prof.lifted_field(2);
        let peak = lifted.value(&[prof.t2, 0.5]);
        assert_relative_eq!(
            peak,
            10f64.powf(0.5) - 0.1,
            max_relative = 1e-10
        );
        assert_eq!(lifted.value(&[0.5, 0.5]), 0.0);
        let g = lifted.gradient(&[prof.t2 * 0.75, 0.4]);
        assert!(g[0].is_finite() && g[1].is_finite());
    }
}
