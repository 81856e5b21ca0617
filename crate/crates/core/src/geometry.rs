//! Box domains, Euclidean balls and integration regions.

use crate::error::{Error, Result};

/// Axis-aligned open box, the ambient domain for every field.
///
/// The default instance is the open unit cube `(0,1)^n`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidParameter(
                "box needs matching non-empty bounds".into(),
            ));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "box bounds must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Self::new(vec![a], vec![b]).expect("interval bounds")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.width(a)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.width(a).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (lo, hi))| *xi > *lo && *xi < *hi)
    }

    /// Euclidean distance from `x` to the boundary of the box (0 outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for a in 0..self.dim() {
            d = d.min(x[a] - self.lower[a]).min(self.upper[a] - x[a]);
        }
        d.max(0.0)
    }

    /// Intersection with another box; `None` when empty.
    pub fn intersect(&self, other: &BoxDomain) -> Option<BoxDomain> {
        let lower: Vec<f64> = self
            .lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| a.min(*b))
            .collect();
        if lower.iter().zip(&upper).all(|(lo, hi)| lo < hi) {
            Some(BoxDomain { lower, upper })
        } else {
            None
        }
    }

    pub fn contains_box(&self, inner: &BoxDomain) -> bool {
        self.lower
            .iter()
            .zip(&inner.lower)
            .all(|(o, i)| o <= i)
            && self.upper.iter().zip(&inner.upper).all(|(o, i)| o >= i)
    }

    /// Uniform grid with `points_per_axis` points per axis, inclusive of the
    /// box corners. Used by nets, overlap sampling and probe sweeps.
    pub fn grid(&self, points_per_axis: usize) -> Vec<Vec<f64>> {
        assert!(points_per_axis >= 2);
        let n = self.dim();
        let mut out = Vec::with_capacity(points_per_axis.pow(n as u32));
        let mut idx = vec![0usize; n];
        loop {
            let p: Vec<f64> = (0..n)
                .map(|a| {
                    self.lower[a]
                        + self.width(a) * idx[a] as f64 / (points_per_axis - 1) as f64
                })
                .collect();
            out.push(p);
            // lexicographic counter
            let mut a = n;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < points_per_axis {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Volume of the unit n-ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => {
            // Gamma recursion: omega_n = omega_{n-2} * 2 pi / n
            let mut v = if n % 2 == 0 {
                std::f64::consts::PI
            } else {
                2.0
            };
            let mut k = if n % 2 == 0 { 2 } else { 1 };
            while k < n {
                k += 2;
                v *= 2.0 * std::f64::consts::PI / k as f64;
            }
            v
        }
    }
}

/// Euclidean ball, the region of the Poincare/Sobolev probes and of every
/// weight-class estimator.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        euclidean_distance(&self.center, x) < self.radius
    }

    pub fn dilate(&self, c0: f64) -> Ball {
        Ball {
            center: self.center.clone(),
            radius: self.radius * c0,
        }
    }

    /// Smallest box containing the ball.
    pub fn bounding_box(&self) -> BoxDomain {
        BoxDomain {
            lower: self.center.iter().map(|c| c - self.radius).collect(),
            upper: self.center.iter().map(|c| c + self.radius).collect(),
        }
    }

    /// True if the closed ball lies inside the box.
    pub fn inside(&self, boxd: &BoxDomain) -> bool {
        (0..self.dim()).all(|a| {
            self.center[a] - self.radius >= boxd.lower()[a]
                && self.center[a] + self.radius <= boxd.upper()[a]
        })
    }

    /// Volume of `ball ∩ box` when it has a closed form: full balls and the
    /// one-dimensional case. Returns `None` for a genuinely clipped ball in
    /// dimension >= 2 (handled by quadrature).
    pub fn clipped_volume_closed_form(&self, boxd: &BoxDomain) -> Option<f64> {
        if self.dim() == 1 {
            let lo = (self.center[0] - self.radius).max(boxd.lower()[0]);
            let hi = (self.center[0] + self.radius).min(boxd.upper()[0]);
            return Some((hi - lo).max(0.0));
        }
        if self.inside(boxd) {
            return Some(unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32));
        }
        None
    }
}

/// Declared breakpoint of a piecewise field: an axis-aligned hyperplane that
/// quadrature must never integrate across.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seam {
    pub axis: usize,
    pub at: f64,
}

/// Declared power behavior of an integrand near an axis-aligned face:
/// `|g(x)| ~ |x_axis - at|^exponent` as the face is approached.
///
/// `exact = false` marks a minorant declaration (the true behavior is at
/// least this singular, e.g. `exp(1/t)` declared with exponent -2); the
/// divergence power test still applies but the two-sided boundedness
/// invariant does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularFace {
    pub axis: usize,
    pub at: f64,
    pub exponent: f64,
    pub exact: bool,
}

impl SingularFace {
    pub fn exact(axis: usize, at: f64, exponent: f64) -> Self {
        Self {
            axis,
            at,
            exponent,
            exact: true,
        }
    }

    pub fn minorant(axis: usize, at: f64, exponent: f64) -> Self {
        Self {
            axis,
            at,
            exponent,
            exact: false,
        }
    }
}

/// Integration region: a box, or a Euclidean ball clipped to a box.
#[derive(Debug, Clone)]
pub enum Region {
    Box(BoxDomain),
    Ball { ball: Ball, clip: BoxDomain },
}

impl Region {
    pub fn ball_in(ball: Ball, domain: &BoxDomain) -> Region {
        Region::Ball {
            ball,
            clip: domain.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box(b) => b.dim(),
            Region::Ball { ball, .. } => ball.dim(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Region::Box(b) => format!("box {:?}x{:?}", b.lower(), b.upper()),
            Region::Ball { ball, .. } => {
                format!("ball(center {:?}, r {})", ball.center, ball.radius)
            }
        }
    }

    /// Restrict the region to a support box. `None` when the intersection is
    /// empty (the integral is exactly zero).
    pub fn clip_to(&self, support: &BoxDomain) -> Option<Region> {
        match self {
            Region::Box(b) => b.intersect(support).map(Region::Box),
            Region::Ball { ball, clip } => clip.intersect(support).map(|c| Region::Ball {
                ball: ball.clone(),
                clip: c,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_invariants_rejected() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn grid_covers_corners() {
        let b = BoxDomain::unit_cube(2);
        let g = b.grid(3);
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![0.0, 0.0]));
        assert!(g.contains(&vec![1.0, 1.0]));
        assert!(g.contains(&vec![0.5, 0.5]));
    }

    #[test]
    fn ball_volumes() {
        let b = Ball::new(vec![0.5, 0.5], 0.25);
        let cube = BoxDomain::unit_cube(2);
        let v = b.clipped_volume_closed_form(&cube).unwrap();
        assert!((v - std::f64::consts::PI * 0.0625).abs() < 1e-15);
        // clipped 2-D ball has no closed form here
        let edge = Ball::new(vec![0.05, 0.5], 0.25);
        assert!(edge.clipped_volume_closed_form(&cube).is_none());
        // 1-D always closed form
        let seg = Ball::new(vec![0.05], 0.25);
        let vi = seg
            .clipped_volume_closed_form(&BoxDomain::unit_cube(1))
            .unwrap();
        assert!((vi - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unit_ball_volume_matches_low_dims() {
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }
}
