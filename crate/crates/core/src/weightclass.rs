//! Estimators for the p-admissibility conditions of a weight pair
//! `w ≤ τ`: doubling of τ over Euclidean balls, Muckenhoupt `A_p`
//! membership of w, and the two-weight balance condition across nested
//! balls.
//!
//! Suprema over infinite ball families are approximated over nested dyadic
//! families and reported with refinement trends: an estimate is trusted
//! only when the last two refinement levels agree within 10%. Balls are
//! Euclidean and boundary-straddling balls are intersected with the domain.

use serde::Serialize;

use crate::error::{DivergenceVerdict, Error, Result};
use crate::fields::WeightField;
use crate::geometry::{Ball, BoxDomain, Region};
use crate::quadrature::{statically_divergent, weight_mass, QuadOpts};
use crate::report::Curve;

// Divergence witness for sup scans, recorded from the static power test so
// sweeps over thousands of balls never integrate a declared-divergent mass.
fn static_divergence_err(w: &WeightField, region: &Region) -> Option<Error> {
    statically_divergent(w, region).map(|f| {
        Error::Divergent(DivergenceVerdict {
            axis: f.axis,
            at: f.at,
            exponent: f.exponent,
            partials: Vec::new(),
        })
    })
}

/// Nested dyadic ball family: centers on the dyadic grids of levels
/// `base_level..=max_level`, radii `2^-m` for `m = 1..=level`.
#[derive(Debug, Clone)]
pub struct DyadicFamily {
    domain: BoxDomain,
    pub base_level: u32,
    pub max_level: u32,
    /// when positive, only balls whose `interior_dilation`-fold dilation
    /// stays inside the domain are kept (no boundary straddling)
    pub interior_dilation: f64,
}

impl DyadicFamily {
    pub fn new(domain: &BoxDomain, base_level: u32, max_level: u32) -> Self {
        Self {
            domain: domain.clone(),
            base_level,
            max_level,
            interior_dilation: 0.0,
        }
    }

    pub fn interior(mut self, dilation: f64) -> Self {
        self.interior_dilation = dilation;
        self
    }

    pub fn describe(&self) -> String {
        format!(
            "dyadic centers levels {}..={}, dyadic radii{}",
            self.base_level,
            self.max_level,
            if self.interior_dilation > 0.0 {
                format!(", {}-fold dilation interior", self.interior_dilation)
            } else {
                ", straddling balls clipped".into()
            }
        )
    }

    fn keep(&self, ball: &Ball) -> bool {
        if self.interior_dilation > 0.0 {
            ball.dilate(self.interior_dilation).inside(&self.domain)
        } else {
            true
        }
    }

    /// Balls new at this level (not present at the previous one): centers
    /// with at least one odd dyadic coordinate, plus radius `2^-level` for
    /// coarser centers. Center grids are strided in dimension >= 2 to keep
    /// the family tractable.
    fn balls_new_at_level(&self, level: u32) -> Vec<Ball> {
        let n = self.domain.dim();
        let stride = match n {
            1 => 1usize,
            2 => ((1usize << level) / 32).max(1),
            _ => ((1usize << level) / 16).max(1),
        };
        let mut out = Vec::new();
        let side = (1usize << level) - 1;
        let mut idx = vec![1usize; n];
        'grid: loop {
            let fresh_center = idx.iter().any(|k| k % 2 == 1) || level == self.base_level;
            let center: Vec<f64> = (0..n)
                .map(|a| {
                    self.domain.lower()[a]
                        + self.domain.width(a) * idx[a] as f64 / (1u64 << level) as f64
                })
                .collect();
            if self.domain.contains(&center) {
                for m in 1..=level {
                    let fresh = fresh_center || m == level;
                    if !fresh {
                        continue;
                    }
                    let ball = Ball::new(center.clone(), 0.5f64.powi(m as i32));
                    if self.keep(&ball) {
                        out.push(ball);
                    }
                }
            }
            let mut a = n;
            loop {
                if a == 0 {
                    break 'grid;
                }
                a -= 1;
                idx[a] += stride;
                if idx[a] <= side {
                    break;
                }
                idx[a] = 1;
            }
        }
        out
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }
}

/// A supremum estimate with its refinement trend.
#[derive(Debug, Clone, Serialize)]
pub struct RefinedEstimate {
    /// estimate at the deepest refinement level
    pub constant: f64,
    /// running supremum per refinement level
    pub per_level: Vec<(u32, f64)>,
    /// last two levels within 10% of each other
    pub stable: bool,
    /// a ball whose mass carried a divergence verdict, when one exists
    pub diverged_witness: Option<Ball>,
    /// finite and stable, with no divergent witness
    pub verdict: bool,
    pub family: String,
}

fn refine_sup<F>(family: &DyadicFamily, mut eval: F) -> Result<RefinedEstimate>
where
    F: FnMut(&Ball) -> Result<Option<f64>>,
{
    let mut per_level = Vec::new();
    let mut sup = f64::NEG_INFINITY;
    let mut diverged_witness = None;
    for level in family.base_level..=family.max_level {
        for ball in family.balls_new_at_level(level) {
            match eval(&ball) {
                Ok(Some(v)) => sup = sup.max(v),
                Ok(None) => {}
                Err(e) if e.is_divergent() => {
                    if diverged_witness.is_none() {
                        diverged_witness = Some(ball);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        per_level.push((level, sup));
    }
    let stable = match per_level.len() {
        0 | 1 => true,
        k => {
            let (_, a) = per_level[k - 2];
            let (_, b) = per_level[k - 1];
            a.is_finite() && b.is_finite() && (b - a).abs() <= 0.1 * b.abs().max(1e-300)
        }
    };
    let constant = if sup.is_finite() { sup } else { f64::NAN };
    Ok(RefinedEstimate {
        constant,
        per_level,
        stable,
        verdict: stable && diverged_witness.is_none() && constant.is_finite(),
        diverged_witness,
        family: family.describe(),
    })
}

/// Doubling constant of τ over the family: `sup τ(D(x,2r)) / τ(D(x,r))`,
/// masses taken over `D ∩ Ω`.
pub fn doubling_constant(
    tau: &WeightField,
    family: &DyadicFamily,
    opts: &QuadOpts,
) -> Result<RefinedEstimate> {
    let domain = family.domain().clone();
    refine_sup(family, |ball| {
        let region_r = Region::ball_in(ball.clone(), &domain);
        let region_2r = Region::ball_in(ball.dilate(2.0), &domain);
        if let Some(e) = static_divergence_err(tau, &region_2r) {
            return Err(e);
        }
        let small = weight_mass(tau, &region_r, opts)?;
        if !(small > 0.0) {
            return Err(Error::DegenerateBall {
                what: "doubling denominator",
                center: ball.center.clone(),
                radius: ball.radius,
            });
        }
        let big = weight_mass(tau, &region_2r, opts)?;
        Ok(Some(big / small))
    })
}

/// Muckenhoupt `A_p` characteristic over the family:
/// `sup (avg_D w) (avg_D w^{1/(1-p)})^{p-1}`.
///
/// The estimate is `>= 1` whenever finite (Jensen); that invariant is
/// asserted on every run.
pub fn ap_constant(
    w: &WeightField,
    p: f64,
    family: &DyadicFamily,
    opts: &QuadOpts,
) -> Result<RefinedEstimate> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the Muckenhoupt class needs p > 1, got {p}"
        )));
    }
    let domain = family.domain().clone();
    let dual = w.pow(1.0 / (1.0 - p));
    let lebesgue = WeightField::one();
    let est = refine_sup(family, |ball| {
        let region = Region::ball_in(ball.clone(), &domain);
        if let Some(e) = static_divergence_err(w, &region).or_else(|| static_divergence_err(&dual, &region)) {
            return Err(e);
        }
        let vol = weight_mass(&lebesgue, &region, opts)?;
        if !(vol > 0.0) {
            return Ok(None);
        }
        let wm = weight_mass(w, &region, opts)?;
        let dm = weight_mass(&dual, &region, opts)?;
        Ok(Some((wm / vol) * (dm / vol).powf(p - 1.0)))
    })?;
    if est.constant.is_finite() {
        assert!(
            est.constant >= 1.0 - 1e-9,
            "A_p characteristic {} fell below the Jensen floor",
            est.constant
        );
    }
    Ok(est)
}

/// Balance-condition estimate over nested ball pairs:
/// `sup (s/r) (τ(D_s)/τ(D_r))^{1/q} / (w(D_s)/w(D_r))^{1/p}`.
///
/// A finite stable supremum C means the balance condition holds with that
/// constant for the tested family.
pub fn balance_check(
    w: &WeightField,
    tau: &WeightField,
    p: f64,
    q: f64,
    family: &DyadicFamily,
    opts: &QuadOpts,
) -> Result<RefinedEstimate> {
    if !(q >= p) {
        return Err(Error::InvalidParameter(format!(
            "balance exponents need q >= p, got p={p}, q={q}"
        )));
    }
    let domain = family.domain().clone();
    // the small ball pairs with every coarser dyadic radius at its center
    refine_sup(family, |small| {
        let mut worst: Option<f64> = None;
        let s = small.radius;
        let region_s = Region::ball_in(small.clone(), &domain);
        if let Some(e) =
            static_divergence_err(w, &region_s).or_else(|| static_divergence_err(tau, &region_s))
        {
            return Err(e);
        }
        let tau_s = weight_mass(tau, &region_s, opts)?;
        let w_s = weight_mass(w, &region_s, opts)?;
        if !(w_s > 0.0) {
            return Err(Error::DegenerateBall {
                what: "balance w-mass",
                center: small.center.clone(),
                radius: s,
            });
        }
        let mut m = 0u32;
        loop {
            m += 1;
            let r = 0.5f64.powi(m as i32);
            if r < s {
                break;
            }
            let big = Ball::new(small.center.clone(), r);
            if !family.keep(&big) {
                continue;
            }
            let region_r = Region::ball_in(big, &domain);
            let tau_r = weight_mass(tau, &region_r, opts)?;
            let w_r = weight_mass(w, &region_r, opts)?;
            if !(w_r > 0.0 && tau_r > 0.0) {
                continue;
            }
            let ratio = (s / r) * (tau_s / tau_r).powf(1.0 / q) / (w_s / w_r).powf(1.0 / p);
            worst = Some(worst.map_or(ratio, |acc: f64| acc.max(ratio)));
        }
        Ok(worst)
    })
}

/// Curve behind the small-radius limit that feeds the local Poincaré
/// property: `s ↦ sup_{x ∈ E} s · (τ(D(x,s)) / w(D(x,s)))^{1/p}`.
#[derive(Debug, Clone, Serialize)]
pub struct VanishingCurve {
    pub curve: Curve,
    pub threshold: f64,
    pub verdict: bool,
}

pub fn balance_vanishing_limit(
    w: &WeightField,
    tau: &WeightField,
    p: f64,
    q: f64,
    e_box: &BoxDomain,
    domain: &BoxDomain,
    s_grid: &[f64],
    centers_per_axis: usize,
    opts: &QuadOpts,
) -> Result<VanishingCurve> {
    if !(q > p) {
        return Err(Error::InvalidParameter(format!(
            "the vanishing limit needs q > p from a passing balance check, got p={p}, q={q}"
        )));
    }
    if s_grid.is_empty() {
        return Err(Error::EmptySamples);
    }
    let centers = e_box.grid(centers_per_axis.max(2));
    let mut curve = Curve::new("s", "sup_x s*(tau(D)/w(D))^(1/p)");
    for &s in s_grid {
        let mut sup = 0.0f64;
        for c in &centers {
            let region = Region::ball_in(Ball::new(c.clone(), s), domain);
            let tm = weight_mass(tau, &region, opts)?;
            let wm = weight_mass(w, &region, opts)?;
            if !(wm > 0.0) {
                return Err(Error::DegenerateBall {
                    what: "w-mass",
                    center: c.clone(),
                    radius: s,
                });
            }
            sup = sup.max(s * (tm / wm).powf(1.0 / p));
        }
        curve.push(s, sup);
    }
    let initial = curve.first().unwrap_or(0.0);
    let last = curve.last().unwrap_or(0.0);
    let threshold = 1e-3 * initial;
    Ok(VanishingCurve {
        verdict: last <= threshold,
        threshold,
        curve,
    })
}

/// Combined report of the three p-admissibility conditions, with the gain
/// exponent search.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub p: f64,
    pub doubling: RefinedEstimate,
    pub ap: RefinedEstimate,
    /// balance estimate at the smallest tested q > p
    pub balance: RefinedEstimate,
    /// largest tested q > p for which the balance condition held
    pub q_search: Option<f64>,
    pub admissible: bool,
}

/// Chains the three conditions and searches the balance gain exponent on
/// the grid `q = p + 0.1 k` until failure.
pub fn admissibility(
    w: &WeightField,
    tau: &WeightField,
    p: f64,
    family: &DyadicFamily,
    opts: &QuadOpts,
    max_q_steps: usize,
) -> Result<AdmissibilityReport> {
    let doubling = doubling_constant(tau, family, opts)?;
    let ap = ap_constant(w, p, family, opts)?;
    let mut q_search = None;
    let mut first_balance = None;
    for k in 1..=max_q_steps.max(1) {
        let q = p + 0.1 * k as f64;
        let est = balance_check(w, tau, p, q, family, opts)?;
        let ok = est.verdict;
        if first_balance.is_none() {
            first_balance = Some(est);
        }
        if ok {
            q_search = Some(q);
        } else {
            break;
        }
    }
    let balance = first_balance.expect("at least one balance step");
    let admissible = doubling.verdict && ap.verdict && q_search.is_some();
    Ok(AdmissibilityReport {
        p,
        doubling,
        ap,
        balance,
        q_search,
        admissible,
    })
}
