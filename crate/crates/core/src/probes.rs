//! Numerical probes for the local Poincaré and Sobolev properties and for
//! the subsequence-extraction mechanism behind the compact embedding.
//!
//! A probe cannot certify a quantified inequality; it sweeps a finite test
//! family over a parameter grid and reports the trend. Reports always name
//! the family swept. Verdict rule: a curve is *vanishing* when its last
//! three values strictly decrease and the final value is below 5% of the
//! initial one; *diverging* mirrors that upward; anything else is
//! *bounded*.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{MatrixField, ScalarField, WeightField};
use crate::geometry::{Ball, BoxDomain, Region};
use crate::norms::{qh1p_norm, v_average, weighted_lp_norm};
use crate::quadrature::{weighted_measure_mass, QuadOpts};
use crate::report::Curve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Vanishing,
    Bounded,
    Diverging,
}

/// Structured result of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub parameters: Vec<f64>,
    pub values: Vec<f64>,
    pub error_bounds: Vec<f64>,
    pub verdict: Verdict,
    pub family: String,
    /// least-squares slope of log(value) against log(parameter)
    pub loglog_slope: Option<f64>,
}

impl ProbeReport {
    pub fn from_curve(curve: &Curve, family: &str, errors: Vec<f64>) -> Self {
        let parameters: Vec<f64> = curve.points.iter().map(|(x, _)| *x).collect();
        let values: Vec<f64> = curve.points.iter().map(|(_, y)| *y).collect();
        ProbeReport {
            verdict: verdict_of(&values),
            loglog_slope: curve.loglog_slope(),
            parameters,
            values,
            error_bounds: errors,
            family: family.into(),
        }
    }

    pub fn curve(&self) -> Curve {
        let mut c = Curve::new("parameter", "value");
        for (x, y) in self.parameters.iter().zip(&self.values) {
            c.push(*x, *y);
        }
        c
    }
}

pub fn verdict_of(values: &[f64]) -> Verdict {
    if values.len() < 3 {
        return Verdict::Bounded;
    }
    let k = values.len();
    let first = values[0];
    let last = values[k - 1];
    let tail_down = values[k - 3] > values[k - 2] && values[k - 2] > values[k - 1];
    let tail_up = values[k - 3] < values[k - 2] && values[k - 2] < values[k - 1];
    if tail_down && last < 0.05 * first {
        Verdict::Vanishing
    } else if tail_up && last > 20.0 * first {
        Verdict::Diverging
    } else {
        Verdict::Bounded
    }
}

/// Oscillation-to-norm ratio of one ball:
/// `‖f − f_B‖_{L^p_v(μ;B)} / ‖(f,∇f)‖_{QH^{1,p}(v,μ;c₀B)}`.
///
/// A vanishing denominator (f ≡ 0 on the dilated ball) gives ratio 0.
pub fn poincare_ratio(
    f: &ScalarField,
    ball: &Ball,
    c0: f64,
    q: &MatrixField,
    v: &WeightField,
    m: &WeightField,
    p: f64,
    domain: &BoxDomain,
    opts: &QuadOpts,
) -> Result<f64> {
    let region = Region::ball_in(ball.clone(), domain);
    let dilated = Region::ball_in(ball.dilate(c0), domain);
    let denominator = qh1p_norm(f, q, v, m, p, &dilated, opts)?.total;
    if denominator == 0.0 {
        return Ok(0.0);
    }
    let average = v_average(f, v, m, &region, opts)?;
    let oscillation = f.sum(&ScalarField::constant(f.dim(), -average));
    let numerator = weighted_lp_norm(&oscillation, v, m, p, &region, opts)?.value;
    Ok(numerator / denominator)
}

/// Sweeps `poincare_ratio` over balls centered on a grid in K and over a
/// test family, for each radius in the grid.
#[allow(clippy::too_many_arguments)]
pub fn poincare_vanishing_probe(
    family: &[ScalarField],
    family_name: &str,
    k: &BoxDomain,
    c0: f64,
    radii: &[f64],
    q: &MatrixField,
    v: &WeightField,
    m: &WeightField,
    p: f64,
    domain: &BoxDomain,
    centers_per_axis: usize,
    opts: &QuadOpts,
) -> Result<ProbeReport> {
    if family.is_empty() || radii.is_empty() {
        return Err(Error::EmptySamples);
    }
    let centers = k.grid(centers_per_axis.max(2));
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    for c in &centers {
        if c0 * rmax >= domain.boundary_distance(c) {
            return Err(Error::RadiusTooLarge {
                center: c.clone(),
                radius: c0 * rmax,
            });
        }
    }
    let mut curve = Curve::new("r", "max poincare ratio");
    for &r in radii {
        let mut worst = 0.0f64;
        for c in &centers {
            let ball = Ball::new(c.clone(), r);
            for f in family {
                worst = worst.max(poincare_ratio(f, &ball, c0, q, v, m, p, domain, opts)?);
            }
        }
        curve.push(r, worst);
    }
    Ok(ProbeReport::from_curve(
        &curve,
        family_name,
        vec![0.0; radii.len()],
    ))
}

/// The compatibility curve `r ↦ sup_x r^p · v(B(x,r)) / μ(B(x,c₀r))`
/// that upgrades a standard weighted Poincaré inequality to the local
/// Poincaré property.
#[allow(clippy::too_many_arguments)]
pub fn compat_ratio(
    v: &WeightField,
    m: &WeightField,
    radii: &[f64],
    k: &BoxDomain,
    c0: f64,
    p: f64,
    domain: &BoxDomain,
    centers_per_axis: usize,
    opts: &QuadOpts,
) -> Result<ProbeReport> {
    if radii.is_empty() {
        return Err(Error::EmptySamples);
    }
    let centers = k.grid(centers_per_axis.max(2));
    let mut curve = Curve::new("r", "sup r^p v(B)/mu(c0 B)");
    for &r in radii {
        let mut worst = 0.0f64;
        for c in &centers {
            let b = Region::ball_in(Ball::new(c.clone(), r), domain);
            let bc0 = Region::ball_in(Ball::new(c.clone(), c0 * r), domain);
            let vmass = weighted_measure_mass(v, m, &b, opts)?;
            let mumass = crate::quadrature::weight_mass(m, &bc0, opts)?;
            if !(mumass > 0.0) {
                return Err(Error::DegenerateBall {
                    what: "mu-mass",
                    center: c.clone(),
                    radius: c0 * r,
                });
            }
            worst = worst.max(r.powf(p) * (vmass / mumass));
        }
        curve.push(r, worst);
    }
    Ok(ProbeReport::from_curve(
        &curve,
        "weight pair (v, m)",
        vec![0.0; radii.len()],
    ))
}

/// Local Sobolev ratio of one compactly supported function:
/// `(∫_B |f|^{pσ} v dμ)^{1/(pσ)} / ‖(f,∇f)‖_{QH^{1,p}(v,μ;B)}`.
///
/// `f` must declare a support contained in `B`.
pub fn sobolev_ratio(
    f: &ScalarField,
    ball: &Ball,
    q: &MatrixField,
    v: &WeightField,
    m: &WeightField,
    p: f64,
    sigma: f64,
    domain: &BoxDomain,
    opts: &QuadOpts,
) -> Result<f64> {
    let support = f.support().ok_or_else(|| {
        Error::SupportViolation("sobolev_ratio needs a declared compact support".into())
    })?;
    if !support_inside_ball(support, ball) {
        return Err(Error::SupportViolation(format!(
            "support {:?}..{:?} is not contained in the ball at {:?} with radius {}",
            support.lower(),
            support.upper(),
            ball.center,
            ball.radius
        )));
    }
    let region = Region::ball_in(ball.clone(), domain);
    ratio_on_region(f, q, v, m, p, sigma, &region, opts)
}

/// Global Sobolev ratio over the whole domain.
pub fn global_sobolev_ratio(
    f: &ScalarField,
    q: &MatrixField,
    v: &WeightField,
    m: &WeightField,
    p: f64,
    sigma: f64,
    domain: &BoxDomain,
    opts: &QuadOpts,
) -> Result<f64> {
    let region = Region::Box(domain.clone());
    ratio_on_region(f, q, v, m, p, sigma, &region, opts)
}

fn ratio_on_region(
    f: &ScalarField,
    q: &MatrixField,
    v: &WeightField,
    m: &WeightField,
    p: f64,
    sigma: f64,
    region: &Region,
    opts: &QuadOpts,
) -> Result<f64> {
    if !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the Sobolev gain needs sigma >= 1, got {sigma}"
        )));
    }
    let denominator = qh1p_norm(f, q, v, m, p, region, opts)?.total;
    if denominator == 0.0 {
        return Ok(0.0);
    }
    let numerator = weighted_lp_norm(f, v, m, p * sigma, region, opts)?.value;
    Ok(numerator / denominator)
}

fn support_inside_ball(support: &BoxDomain, ball: &Ball) -> bool {
    // all corners of the support box inside the closed ball
    let n = support.dim();
    let mut idx = vec![0usize; n];
    loop {
        let corner: Vec<f64> = (0..n)
            .map(|a| {
                if idx[a] == 0 {
                    support.lower()[a]
                } else {
                    support.upper()[a]
                }
            })
            .collect();
        if crate::geometry::euclidean_distance(&corner, &ball.center) > ball.radius {
            return false;
        }
        let mut a = n;
        loop {
            if a == 0 {
                return true;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < 2 {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Hölder interpolation check: with `1/q = λ/lower + (1−λ)/upper`,
/// returns `‖g‖_q / (‖g‖_lower^λ ‖g‖_upper^{1−λ})` for `g = u − w`.
/// The ratio is at most 1 up to quadrature error.
#[allow(clippy::too_many_arguments)]
pub fn interpolation_bound(
    u: &ScalarField,
    w: &ScalarField,
    lower: f64,
    q: f64,
    upper: f64,
    v: &WeightField,
    m: &WeightField,
    region: &Region,
    opts: &QuadOpts,
) -> Result<f64> {
    if !(1.0 <= lower && lower < q && q < upper) {
        return Err(Error::InvalidParameter(format!(
            "interpolation needs 1 <= lower < q < upper, got {lower}, {q}, {upper}"
        )));
    }
    let lambda = (1.0 / q - 1.0 / upper) / (1.0 / lower - 1.0 / upper);
    let g = u.difference(w);
    let n_q = weighted_lp_norm(&g, v, m, q, region, opts)?.value;
    let n_lo = weighted_lp_norm(&g, v, m, lower, region, opts)?.value;
    let n_hi = weighted_lp_norm(&g, v, m, upper, region, opts)?.value;
    let rhs = n_lo.powf(lambda) * n_hi.powf(1.0 - lambda);
    if rhs == 0.0 {
        // g vanishes a.e.: the inequality is the equality 0 = 0
        return Ok(if n_q == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(n_q / rhs)
}

/// Trace of a subsequence extraction over a finite-overlap cover.
#[derive(Debug, Clone, Serialize)]
pub struct SubsequenceTrace {
    /// norm bound M of the family over the whole domain
    pub bound_m: f64,
    pub cover_count: usize,
    pub cover_overlap: usize,
    /// ball-average matrix, indexed `[member][ball]`
    pub averages: Vec<Vec<f64>>,
    /// v-masses of the cover balls
    pub ball_masses: Vec<f64>,
    pub selected: Vec<usize>,
    pub epsilon: f64,
    /// per-ball average separation achieving the weak-convergence estimate
    pub delta: f64,
    /// max over selected pairs of Σ_j v(B_j)^{1−p} |∫_{B_j}(u_m−u_n) v dμ|^p
    pub part_ii: f64,
    /// max over selected pairs of ∫_E |u_m − u_n|^p v dμ
    pub max_pairwise_lp_p: f64,
    /// the final bound 2^p ε^p (1 + 2^p M^p P)
    pub bound_rhs: f64,
    pub verified: bool,
    pub violating_pair: Option<(usize, usize)>,
}

/// Selects a subsequence whose cover-ball averages cluster within δ, chosen
/// so the weak-convergence term stays below ε^p, then verifies the final
/// pairwise bound a posteriori on E.
///
/// Selection is greedy nearest-first clustering of the average vectors in
/// the sup metric with lexicographic ties, so reruns are deterministic.
#[allow(clippy::too_many_arguments)]
pub fn extract_subsequence(
    family: &[ScalarField],
    e_box: &BoxDomain,
    cover: &crate::cover::BallCover,
    q: &MatrixField,
    v: &WeightField,
    m: &WeightField,
    p: f64,
    epsilon: f64,
    domain: &BoxDomain,
    opts: &QuadOpts,
) -> Result<SubsequenceTrace> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let balls: Vec<Ball> = cover
        .centers
        .iter()
        .map(|c| Ball::new(c.clone(), cover.radius))
        .collect();
    let mut ball_masses = Vec::with_capacity(balls.len());
    for b in &balls {
        ball_masses.push(weighted_measure_mass(
            v,
            m,
            &Region::ball_in(b.clone(), domain),
            opts,
        )?);
    }
    let total_mass: f64 = ball_masses.iter().sum();
    let delta = epsilon / total_mass.powf(1.0 / p);

    if family.len() < 2 {
        return Ok(SubsequenceTrace {
            bound_m: 0.0,
            cover_count: cover.count,
            cover_overlap: cover.overlap,
            averages: Vec::new(),
            ball_masses,
            selected: (0..family.len()).collect(),
            epsilon,
            delta,
            part_ii: 0.0,
            max_pairwise_lp_p: 0.0,
            bound_rhs: 0.0,
            verified: true,
            violating_pair: None,
        });
    }

    let mut bound_m = 0.0f64;
    let whole = Region::Box(domain.clone());
    for f in family {
        bound_m = bound_m.max(qh1p_norm(f, q, v, m, p, &whole, opts)?.total);
    }

    let mut averages = Vec::with_capacity(family.len());
    for f in family {
        let mut row = Vec::with_capacity(balls.len());
        for b in &balls {
            row.push(v_average(f, v, m, &Region::ball_in(b.clone(), domain), opts)?);
        }
        averages.push(row);
    }

    // greedy clustering: best anchor wins, lexicographic ties
    let sup_dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let mut best_anchor = 0usize;
    let mut best_cluster: Vec<usize> = Vec::new();
    for anchor in 0..family.len() {
        let cluster: Vec<usize> = (0..family.len())
            .filter(|&k| sup_dist(&averages[anchor], &averages[k]) <= 0.5 * delta)
            .collect();
        if cluster.len() > best_cluster.len() {
            best_anchor = anchor;
            best_cluster = cluster;
        }
    }
    let _ = best_anchor;
    let selected = best_cluster;

    // weak-convergence term over selected pairs
    let mut part_ii = 0.0f64;
    for (i, &a) in selected.iter().enumerate() {
        for &b in &selected[i + 1..] {
            let term: f64 = (0..balls.len())
                .map(|j| {
                    let da = (averages[a][j] - averages[b][j]).abs();
                    ball_masses[j] * da.powf(p)
                })
                .sum();
            part_ii = part_ii.max(term);
        }
    }

    // a-posteriori pairwise distances on E
    let e_region = Region::Box(e_box.clone());
    let mut max_pairwise = 0.0f64;
    let mut violating_pair = None;
    let bound_rhs = 2.0f64.powf(p)
        * epsilon.powf(p)
        * (1.0 + 2.0f64.powf(p) * bound_m.powf(p) * cover.overlap as f64);
    for (i, &a) in selected.iter().enumerate() {
        for &b in &selected[i + 1..] {
            let diff = family[a].difference(&family[b]);
            let dist = weighted_lp_norm(&diff, v, m, p, &e_region, opts)?
                .value
                .powf(p);
            if dist > max_pairwise {
                max_pairwise = dist;
            }
            if dist > bound_rhs && violating_pair.is_none() {
                violating_pair = Some((a, b));
            }
        }
    }
    Ok(SubsequenceTrace {
        bound_m,
        cover_count: cover.count,
        cover_overlap: cover.overlap,
        averages,
        ball_masses,
        selected,
        epsilon,
        delta,
        part_ii,
        max_pairwise_lp_p: max_pairwise,
        bound_rhs,
        verified: violating_pair.is_none(),
        violating_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn opts() -> QuadOpts {
        QuadOpts::default()
    }

    #[test]
    fn poincare_ratio_of_constant_vanishes() {
        let f = ScalarField::constant(1, 3.0);
        let ball = Ball::new(vec![0.5], 0.2);
        let one = WeightField::one();
        let q = MatrixField::identity(1);
        let r = poincare_ratio(&f, &ball, 1.0, &q, &one, &one, 2.0, &BoxDomain::unit_cube(1), &opts())
            .unwrap();
        assert!(r < 1e-10, "constant oscillation should vanish, got {r}");
    }

    #[test]
    fn poincare_ratio_of_linear_matches_closed_form() {
        // f(t) = t on B = (a-r, a+r): numerator sqrt(2 r^3 / 3),
        // denominator sqrt(2r(a^2 + r^2/3)) + sqrt(2r)
        let f = ScalarField::coordinate(1, 0);
        let one = WeightField::one();
        let q = MatrixField::identity(1);
        let (a, r) = (0.5, 0.1);
        let ball = Ball::new(vec![a], r);
        let got = poincare_ratio(&f, &ball, 1.0, &q, &one, &one, 2.0, &BoxDomain::unit_cube(1), &opts())
            .unwrap();
        let num = (2.0 * r.powi(3) / 3.0).sqrt();
        let den = (2.0 * r * (a * a + r * r / 3.0)).sqrt() + (2.0 * r).sqrt();
        assert_relative_eq!(got, num / den, max_relative = 1e-8);
    }

    #[test]
    fn poincare_ratio_is_shift_and_scale_invariant() {
        let f = ScalarField::new(2, |x: &[f64]| x[0] * x[0] + (2.0 * x[1]).sin())
            .with_gradient(|x: &[f64]| vec![2.0 * x[0], 2.0 * (2.0 * x[1]).cos()]);
        let one = WeightField::one();
        let q = MatrixField::identity(2);
        let domain = BoxDomain::unit_cube(2);
        let ball = Ball::new(vec![0.5, 0.5], 0.2);
        let base =
            poincare_ratio(&f, &ball, 1.0, &q, &one, &one, 2.0, &domain, &opts()).unwrap();
        let shifted = f.sum(&ScalarField::constant(2, 4.7));
        let shifted_ratio =
            poincare_ratio(&shifted, &ball, 1.0, &q, &one, &one, 2.0, &domain, &opts()).unwrap();
        // the numerator is shift-free; the denominator is not, so only
        // scaling is exactly invariant
        let scaled = f.scale(-3.25);
        let scaled_ratio =
            poincare_ratio(&scaled, &ball, 1.0, &q, &one, &one, 2.0, &domain, &opts()).unwrap();
        assert_relative_eq!(base, scaled_ratio, max_relative = 1e-10);
        assert!(shifted_ratio <= base * 1.001);
    }

    #[test]
    fn poincare_probe_on_polynomials_vanishes_linearly() {
        let family = vec![
            ScalarField::coordinate(1, 0),
            ScalarField::new(1, |x: &[f64]| x[0] * x[0]).with_gradient(|x: &[f64]| vec![2.0 * x[0]]),
        ];
        let k = BoxDomain::new(vec![0.3], vec![0.7]).unwrap();
        let radii = [0.2, 0.1, 0.05, 0.02, 0.008, 0.004];
        let report = poincare_vanishing_probe(
            &family,
            "polynomials deg<=2",
            &k,
            1.0,
            &radii,
            &MatrixField::identity(1),
            &WeightField::one(),
            &WeightField::one(),
            2.0,
            &BoxDomain::unit_cube(1),
            3,
            &opts(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Vanishing);
        let slope = report.loglog_slope.unwrap();
        assert!((slope - 1.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn compat_ratio_is_exactly_r_to_the_p_for_lebesgue() {
        let one = WeightField::one();
        let k = BoxDomain::new(vec![0.25, 0.25], vec![0.75, 0.75]).unwrap();
        let radii = [0.2, 0.1, 0.05, 0.025, 0.01, 0.005];
        let report = compat_ratio(
            &one,
            &one,
            &radii,
            &k,
            1.0,
            2.0,
            &BoxDomain::unit_cube(2),
            3,
            &opts(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Vanishing);
        for (r, val) in radii.iter().zip(&report.values) {
            assert_eq!(*val, r.powf(2.0), "closed form must short-circuit");
        }
    }

    #[test]
    fn compat_ratio_with_singular_weight_still_vanishes() {
        let v = WeightField::axis_power(0, -0.5);
        let one = WeightField::one();
        let k = BoxDomain::new(vec![0.1], vec![0.4]).unwrap();
        let radii = [0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015];
        let report = compat_ratio(
            &v,
            &one,
            &radii,
            &k,
            1.0,
            2.0,
            &BoxDomain::unit_cube(1),
            4,
            &opts(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Vanishing);
    }

    #[test]
    fn sobolev_ratio_requires_support_in_ball() {
        let f = ScalarField::bump(2); // support: the whole unit cube
        let ball = Ball::new(vec![0.5, 0.5], 0.3);
        let err = sobolev_ratio(
            &f,
            &ball,
            &MatrixField::identity(2),
            &WeightField::one(),
            &WeightField::one(),
            2.0,
            1.5,
            &BoxDomain::unit_cube(2),
            &opts(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SupportViolation(_)));
    }

    #[test]
    fn sobolev_blowup_for_excessive_gain() {
        // shrinking cones f_k = max(0, 1 - k|x - x0|) in n = 3 at
        // sigma = 10 >> n/(n-p): the ratio grows like k^{n/(p sigma) ... }
        let x0 = [0.5, 0.5, 0.5];
        let make = |k: f64| {
            ScalarField::new(3, move |x: &[f64]| {
                let d = ((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2) + (x[2] - x0[2]).powi(2))
                    .sqrt();
                (1.0 - k * d).max(0.0)
            })
            .with_support(
                BoxDomain::new(
                    x0.iter().map(|c| c - 1.0 / k).collect(),
                    x0.iter().map(|c| c + 1.0 / k).collect(),
                )
                .unwrap(),
            )
        };
        let ball = Ball::new(x0.to_vec(), 0.45);
        let one = WeightField::one();
        let q = MatrixField::identity(3);
        let domain = BoxDomain::unit_cube(3);
        let coarse = QuadOpts {
            rel_tol: 1e-4,
            max_cells: 60_000,
            ..QuadOpts::default()
        };
        let r4 = sobolev_ratio(&make(4.0), &ball, &q, &one, &one, 2.0, 10.0, &domain, &coarse)
            .unwrap();
        let r32 = sobolev_ratio(&make(32.0), &ball, &q, &one, &one, 2.0, 10.0, &domain, &coarse)
            .unwrap();
        // scaling predicts (32/4)^{1/2 - 3/20} = 8^{0.35} ≈ 2.07
        assert!(r32 > 1.6 * r4, "r4={r4} r32={r32}");
    }

    #[test]
    fn interpolation_examples() {
        let one = WeightField::one();
        let region = Region::Box(BoxDomain::unit_cube(1));
        // constant difference: exact equality case
        let u = ScalarField::constant(1, 2.0);
        let w = ScalarField::constant(1, 1.0);
        let r = interpolation_bound(&u, &w, 1.0, 2.0, 3.0, &one, &one, &region, &opts()).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-10);

        // g(t) = t^{-0.3}, lower=1, q=2, upper=3: frozen closed-form ratio
        let g = ScalarField::new(1, |x: &[f64]| x[0].powf(-0.3))
            .with_singular_face(crate::geometry::SingularFace::exact(0, 0.0, -0.3));
        let zero = ScalarField::constant(1, 0.0);
        let r2 =
            interpolation_bound(&g, &zero, 1.0, 2.0, 3.0, &one, &one, &region, &opts()).unwrap();
        assert_relative_eq!(r2, 0.813270, max_relative = 1e-4);
        assert!(r2 <= 1.0 + 1e-8);
    }

    #[test]
    fn subsequence_extraction_on_constants() {
        // constants: ball averages equal the constants; close constants
        // cluster and verification passes
        let family: Vec<ScalarField> = [0.5, 0.50001, 0.9, 0.50002]
            .iter()
            .map(|c| ScalarField::constant(2, *c))
            .collect();
        let domain = BoxDomain::unit_cube(2);
        let e_box = BoxDomain::new(vec![0.3, 0.3], vec![0.7, 0.7]).unwrap();
        let space = crate::cover::QuasiMetricSpace::euclidean(domain.clone());
        let cover = crate::cover::finite_overlap_cover(&space, &e_box, 0.1, 1.0).unwrap();
        let trace = extract_subsequence(
            &family,
            &e_box,
            &cover,
            &MatrixField::identity(2),
            &WeightField::one(),
            &WeightField::one(),
            2.0,
            0.05,
            &domain,
            &opts(),
        )
        .unwrap();
        assert!(trace.verified);
        assert_eq!(trace.selected, vec![0, 1, 3]);
        assert!(trace.part_ii <= 0.05f64.powi(2));
    }
}
