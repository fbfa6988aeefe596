//! Region structure of the steplike problem: scenario classification, the
//! critical rays and the moving band edges of the modulated zones.
//!
//! Everything here works with the right background normalized to `(1/2, 0)`,
//! so `I_r = [−1, 1]`; [`normalize_right`] maps a general problem there.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Background;
use crate::quad::{self, GaussLegendre};
use crate::riemann::bisect;
use crate::spectral::{phase_phi, SurfacePoint};

const MOMENT_TOL: f64 = 1e-14;
const MAX_NODES: usize = 4096;
/// Slack allowed when testing whether ξ sits inside a zone.
const ZONE_SLACK: f64 = 1e-12;

/// Affine change of spectral variable λ′ = (λ − shift)/scale, which maps the
/// right background to (1/2, 0). Time scales as t′ = scale·t, so ξ′ = ξ/scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub shift: f64,
    pub scale: f64,
}

impl Transform {
    pub fn identity() -> Self {
        Self { shift: 0.0, scale: 1.0 }
    }

    pub fn background(&self, bg: Background) -> Background {
        Background { a: bg.a / self.scale, b: (bg.b - self.shift) / self.scale }
    }

    pub fn background_back(&self, bg: Background) -> Background {
        Background { a: bg.a * self.scale, b: bg.b * self.scale + self.shift }
    }

    pub fn lambda(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }

    pub fn lambda_back(&self, x: f64) -> f64 {
        x * self.scale + self.shift
    }

    pub fn xi(&self, xi: f64) -> f64 {
        xi / self.scale
    }

    pub fn xi_back(&self, xi: f64) -> f64 {
        xi * self.scale
    }

    pub fn time(&self, t: f64) -> f64 {
        t * self.scale
    }

    /// Map a normalized (a, b) pair back to original coordinates.
    pub fn ab_back(&self, a: f64, b: f64) -> (f64, f64) {
        (a * self.scale, b * self.scale + self.shift)
    }
}

/// Normalize the right background to (1/2, 0); returns the transformed left
/// background and the transform.
pub fn normalize_right(left: Background, right: Background) -> (Background, Transform) {
    let tr = Transform { shift: right.b, scale: 2.0 * right.a };
    (tr.background(left), tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    ShockNonOverlap,
    ShockOverlap,
    RarefactionNonOverlap,
    RarefactionOverlap,
    MixedRightInLeft,
    MixedLeftInRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZoneKind {
    LeftBackground,
    LeftWhitham,
    Gap,
    RightWhitham,
    RightBackground,
    Constant,
    LeftSlope,
    RightSlope,
    MixedTwoBand,
}

impl ZoneKind {
    pub fn label(self) -> &'static str {
        match self {
            ZoneKind::LeftBackground => "left_background",
            ZoneKind::LeftWhitham => "left_whitham",
            ZoneKind::Gap => "gap",
            ZoneKind::RightWhitham => "right_whitham",
            ZoneKind::RightBackground => "right_background",
            ZoneKind::Constant => "constant",
            ZoneKind::LeftSlope => "left_slope",
            ZoneKind::RightSlope => "right_slope",
            ZoneKind::MixedTwoBand => "mixed_two_band",
        }
    }

    pub fn is_two_band(self) -> bool {
        matches!(self, ZoneKind::LeftWhitham | ZoneKind::Gap | ZoneKind::RightWhitham | ZoneKind::MixedTwoBand)
    }
}

impl fmt::Display for ZoneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub xi: f64,
    pub label: String,
}

/// Open interval (lo, hi) of rays; the outer zones extend to ±∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub kind: ZoneKind,
    pub lo: f64,
    pub hi: f64,
}

impl Zone {
    pub fn contains(&self, xi: f64) -> bool {
        xi >= self.lo && xi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// left background after normalization
    pub left: Background,
    pub rays: Vec<Ray>,
    pub zones: Vec<Zone>,
}

impl Scenario {
    /// Zone containing ξ; rays belong to the zone on their right.
    pub fn zone_of(&self, xi: f64) -> Zone {
        for z in &self.zones {
            if xi < z.hi {
                return *z;
            }
        }
        *self.zones.last().expect("scenario has zones")
    }

    pub fn zone(&self, kind: ZoneKind) -> Option<Zone> {
        self.zones.iter().copied().find(|z| z.kind == kind)
    }

    /// Distance from ξ to the nearest ray.
    pub fn distance_to_ray(&self, xi: f64) -> f64 {
        self.rays.iter().map(|r| (r.xi - xi).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Classify a normalized left background against I_r = [−1, 1].
pub fn classify(left: Background) -> Result<Scenario> {
    let (l1, l2) = (left.inf(), left.sup());
    let (a, b) = (left.a, left.b);
    let kind = if l1 == -1.0 && l2 == 1.0 {
        return Err(Error::Flat);
    } else if l2 < -1.0 {
        ScenarioKind::ShockNonOverlap
    } else if l1 < -1.0 && l2 <= 1.0 {
        ScenarioKind::ShockOverlap
    } else if l1 < -1.0 {
        ScenarioKind::MixedRightInLeft
    } else if l1 >= 1.0 {
        ScenarioKind::RarefactionNonOverlap
    } else if l2 >= 1.0 {
        ScenarioKind::RarefactionOverlap
    } else {
        ScenarioKind::MixedLeftInRight
    };
    use ZoneKind::*;
    let (rays, kinds): (Vec<(f64, &str)>, Vec<ZoneKind>) = match kind {
        ScenarioKind::ShockNonOverlap => {
            let (xl, xlp) = left_rays(left)?;
            (
                vec![(xl, "xi_l"), (xlp, "xi_l_prime"), (xi_r_prime(left)?, "xi_r_prime"), (xi_r(left)?, "xi_r")],
                vec![LeftBackground, LeftWhitham, Gap, RightWhitham, RightBackground],
            )
        }
        ScenarioKind::ShockOverlap => {
            let (xl, _) = left_rays(left)?;
            (
                vec![
                    (xl, "xi_l"),
                    ((1.0 - b - 6.0 * a) / 2.0, "xi_l_prime"),
                    ((l1 + 3.0) / 2.0, "xi_r_prime"),
                    (xi_r(left)?, "xi_r"),
                ],
                vec![LeftBackground, LeftWhitham, Constant, RightWhitham, RightBackground],
            )
        }
        ScenarioKind::MixedRightInLeft => (
            vec![
                (-2.0 * a, "left_edge"),
                ((l1 - 1.0) / 2.0, "left_slope_end"),
                ((l1 + 3.0) / 2.0, "xi_r_prime"),
                (xi_r(left)?, "xi_r"),
            ],
            vec![LeftBackground, LeftSlope, Constant, RightWhitham, RightBackground],
        ),
        ScenarioKind::RarefactionNonOverlap => (
            vec![(-2.0 * a, "left_edge"), (0.0, "vacuum"), (1.0, "right_edge")],
            vec![LeftBackground, LeftSlope, RightSlope, RightBackground],
        ),
        ScenarioKind::RarefactionOverlap => (
            vec![
                (-2.0 * a, "left_edge"),
                ((l1 - 1.0) / 2.0, "left_slope_end"),
                ((1.0 - l1) / 2.0, "right_slope_end"),
                (1.0, "right_edge"),
            ],
            vec![LeftBackground, LeftSlope, Constant, RightSlope, RightBackground],
        ),
        ScenarioKind::MixedLeftInRight => (
            vec![
                (xi_cr_mixed(left)?, "xi_cr"),
                ((1.0 - b - 6.0 * a) / 2.0, "gap_opens"),
                ((1.0 - l1) / 2.0, "right_slope_end"),
                (1.0, "right_edge"),
            ],
            vec![LeftBackground, MixedTwoBand, Constant, RightSlope, RightBackground],
        ),
    };
    let mut zones = Vec::with_capacity(kinds.len());
    let mut lo = f64::NEG_INFINITY;
    for (i, k) in kinds.iter().enumerate() {
        let hi = rays.get(i).map_or(f64::INFINITY, |r| r.0);
        zones.push(Zone { kind: *k, lo, hi });
        lo = hi;
    }
    let rays: Vec<Ray> = rays.into_iter().map(|(xi, l)| Ray { xi, label: l.to_string() }).collect();
    if rays.windows(2).any(|w| w[0].xi >= w[1].xi) {
        return Err(Error::Invalid(format!("rays not increasing for {left:?}: {rays:?}")));
    }
    Ok(Scenario { kind, left, rays, zones })
}

fn require_shock(left: Background) -> Result<()> {
    if left.inf() >= -1.0 {
        return Err(Error::Invalid(format!("inf of left spectrum {} is not below −1", left.inf())));
    }
    Ok(())
}

/// Leading ray of the right Whitham zone: the root of
/// ∫_{inf I_ℓ}^{−1} (x + ξ)/√(x² − 1) dx = 0, i.e. √(q² − 1)/acosh q with q = −inf I_ℓ.
pub fn xi_r(left: Background) -> Result<f64> {
    require_shock(left)?;
    let q = -left.inf();
    Ok((q * q - 1.0).sqrt() / q.acosh())
}

/// The same ray from bisection on the quadrature of the defining integral.
pub fn xi_r_quadrature(left: Background) -> Result<f64> {
    require_shock(left)?;
    let e1 = left.inf();
    let rule = GaussLegendre::cached(128);
    let f = |xi: f64| quad::sqrt_right(&rule, e1, -1.0, |x| (x + xi) / (1.0 - x).sqrt());
    Ok(bisect(0.0, 1.0 + (-e1).max(1.0) * 4.0, f))
}

/// Whitham data at one ray: the moving band edge and the auxiliary zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhithamPoint {
    pub xi: f64,
    /// γ, γ_ℓ or η depending on the zone
    pub edge: f64,
    pub mu: Option<f64>,
    pub zone: ZoneKind,
}

/// Moments ∫_γ^{−1} λ^k (λ−γ)/√((λ²−1)(λ−E1)(λ−γ)) dλ, k = 0, 1.
fn right_moments(e1: f64, gamma: f64, rule: &GaussLegendre) -> (f64, f64) {
    let w = |x: f64| (x - gamma) / ((1.0 - x) * (x - e1)).sqrt();
    let m0: f64 = quad::band(rule, gamma, -1.0, w);
    let m1: f64 = quad::band(rule, gamma, -1.0, |x| x * w(x));
    (m0, m1)
}

fn right_mu(e1: f64, gamma: f64) -> f64 {
    if gamma >= -1.0 {
        return -1.0;
    }
    quad::converge(64, MOMENT_TOL, MAX_NODES, |r| {
        let (m0, m1) = right_moments(e1, gamma, r);
        m1 / m0
    })
}

/// ξ as a function of the moving edge γ ∈ [inf I_ℓ, −1].
pub fn xi_of_gamma(left: Background, gamma: f64) -> f64 {
    let mu = right_mu(left.inf(), gamma);
    -(2.0 * left.a - left.b + gamma + 2.0 * mu) / 2.0
}

fn gamma_max(left: Background) -> f64 {
    left.sup().min(-1.0)
}

/// γ(ξ), μ(ξ) in the right Whitham zone (ξ_r′, ξ_r).
pub fn gamma_mu(xi: f64, left: Background) -> Result<WhithamPoint> {
    require_shock(left)?;
    let (lo_xi, hi_xi) = (xi_r_prime(left)?, xi_r(left)?);
    if xi < lo_xi - ZONE_SLACK || xi > hi_xi + ZONE_SLACK {
        return Err(Error::OutsideZone { what: "right Whitham zone", xi, lo: lo_xi, hi: hi_xi });
    }
    let e1 = left.inf();
    let gmax = gamma_max(left);
    let gamma = if xi >= hi_xi {
        e1
    } else if xi <= lo_xi {
        gmax
    } else {
        bisect(e1, gmax, |g| xi_of_gamma(left, g) - xi)
    };
    Ok(WhithamPoint { xi, edge: gamma, mu: Some(right_mu(e1, gamma)), zone: ZoneKind::RightWhitham })
}

/// Residual of the zero-integral condition at a returned point, relative to
/// the size of the integrand's moments.
pub fn gamma_mu_residual(p: &WhithamPoint, left: Background) -> f64 {
    let mu = p.mu.unwrap_or(f64::NAN);
    if p.edge >= -1.0 {
        return 0.0;
    }
    let rule = GaussLegendre::cached(1024);
    let (m0, m1) = right_moments(left.inf(), p.edge, &rule);
    let eq2 = (m1 - mu * m0).abs() / m0.abs().max(1e-300);
    let eq1 = (2.0 * left.a - left.b + p.edge + 2.0 * mu + 2.0 * p.xi).abs();
    eq1.max(eq2)
}

/// Inner ray of the right Whitham zone, where γ reaches min(sup I_ℓ, −1).
pub fn xi_r_prime(left: Background) -> Result<f64> {
    require_shock(left)?;
    let g = gamma_max(left);
    if g >= -1.0 {
        return Ok((left.inf() + 3.0) / 2.0);
    }
    Ok(xi_of_gamma(left, g))
}

/// Left background of the reflected, renormalized problem (n ↦ −n, b ↦ −b),
/// together with the scale 2a_ℓ relating its rays and spectral variable to ours.
pub fn reflected_left(left: Background) -> (Background, f64) {
    let s = 2.0 * left.a;
    (Background { a: 0.5 / s, b: left.b / s }, s)
}

/// (ξ_ℓ, ξ_ℓ′): images of the reflected problem's (ξ_r, ξ_r′).
pub fn left_rays(left: Background) -> Result<(f64, f64)> {
    let (refl, s) = reflected_left(left);
    Ok((-s * xi_r(refl)?, -s * xi_r_prime(refl)?))
}

/// γ_ℓ(ξ) in the left Whitham zone (ξ_ℓ, ξ_ℓ′), by reflection symmetry.
pub fn left_zone(xi: f64, left: Background) -> Result<WhithamPoint> {
    let (refl, s) = reflected_left(left);
    let p = gamma_mu(-xi / s, refl).map_err(|e| match e {
        Error::OutsideZone { .. } => {
            let (lo, hi) = left_rays(left).unwrap_or((f64::NAN, f64::NAN));
            Error::OutsideZone { what: "left Whitham zone", xi, lo, hi }
        }
        other => other,
    })?;
    let back = |x: f64| left.b - s * x;
    Ok(WhithamPoint { xi, edge: back(p.edge), mu: p.mu.map(back), zone: ZoneKind::LeftWhitham })
}

/// Real crossing point of Re g = 0 in the single-band and mixed zones.
pub fn eta(xi: f64, scenario: &Scenario) -> Result<f64> {
    let left = scenario.left;
    let zone = scenario.zone_of(xi);
    match zone.kind {
        ZoneKind::RightSlope => Ok(1.0 - 2.0 * xi),
        ZoneKind::LeftSlope => Ok(left.inf() - 2.0 * xi),
        // stationary point of the one-band g-function on [inf I_ℓ, 1]
        ZoneKind::Constant => Ok((left.inf() + 1.0) / 2.0 - xi),
        ZoneKind::MixedTwoBand => Ok(mu_mixed(xi, left)?.edge),
        _ => Err(Error::OutsideZone { what: "zone with a crossing point", xi, lo: zone.lo, hi: zone.hi }),
    }
}

fn require_left_in_right(left: Background) -> Result<()> {
    if left.inf() < -1.0 || left.sup() >= 1.0 {
        return Err(Error::Invalid(format!("left spectrum [{}, {}] is not inside [−1, 1)", left.inf(), left.sup())));
    }
    Ok(())
}

/// Left ray of the mixed two-band zone: root of
/// ∫_{sup I_ℓ}^{1} (x − b_ℓ + ξ)/√((x − b_ℓ)² − 4a_ℓ²) dx = 0, linear in ξ.
pub fn xi_cr_mixed(left: Background) -> Result<f64> {
    require_left_in_right(left)?;
    let (a, b) = (left.a, left.b);
    let q = (1.0 - b) / (2.0 * a);
    Ok(-((1.0 - b).powi(2) - 4.0 * a * a).sqrt() / q.acosh())
}

/// ξ_cr from bisection on the quadrature of its defining integral.
pub fn xi_cr_quadrature(left: Background) -> Result<f64> {
    require_left_in_right(left)?;
    let (l1, l2, b) = (left.inf(), left.sup(), left.b);
    let rule = GaussLegendre::cached(128);
    let f = |xi: f64| quad::sqrt_left(&rule, l2, 1.0, |x| (x - b + xi) / (x - l1).sqrt());
    Ok(bisect(-4.0, 1.0, f))
}

/// Moments over (sup I_ℓ, η) of √(η − x)/√(((x − b)² − 4a²)(1 − x)), k = 0, 1.
fn mixed_moments(left: Background, eta: f64, rule: &GaussLegendre) -> (f64, f64) {
    let (l1, l2) = (left.inf(), left.sup());
    let w = |x: f64| {
        let gap = eta - x;
        if gap <= 0.0 {
            return 0.0;
        }
        gap / ((x - l1) * (1.0 - x)).sqrt()
    };
    let m0: f64 = quad::band(rule, l2, eta, w);
    let m1: f64 = quad::band(rule, l2, eta, |x| x * w(x));
    (m0, m1)
}

fn mixed_mu(left: Background, eta: f64) -> f64 {
    if eta <= left.sup() {
        return left.sup();
    }
    quad::converge(64, MOMENT_TOL, MAX_NODES, |r| {
        let (m0, m1) = mixed_moments(left, eta, r);
        m1 / m0
    })
}

fn xi_of_eta(left: Background, eta: f64) -> f64 {
    (1.0 + 2.0 * left.b - eta - 2.0 * mixed_mu(left, eta)) / 2.0
}

/// μ(ξ) and η(ξ) in the mixed two-band zone (ξ_cr, (1 − b_ℓ)/2 − 3a_ℓ).
/// The integrand's √(x − η) is taken as √(η − x), which keeps both equations real.
pub fn mu_mixed(xi: f64, left: Background) -> Result<WhithamPoint> {
    require_left_in_right(left)?;
    let lo = xi_cr_mixed(left)?;
    let hi = (1.0 - left.b - 6.0 * left.a) / 2.0;
    if xi < lo - ZONE_SLACK || xi > hi + ZONE_SLACK {
        return Err(Error::OutsideZone { what: "mixed two-band zone", xi, lo, hi });
    }
    let eta = if xi >= hi {
        left.sup()
    } else if xi <= lo {
        1.0
    } else {
        bisect(left.sup(), 1.0, |e| xi_of_eta(left, e) - xi)
    };
    Ok(WhithamPoint { xi, edge: eta, mu: Some(mixed_mu(left, eta)), zone: ZoneKind::MixedTwoBand })
}

/// Residual of both mixed-zone equations at a returned point.
pub fn mu_mixed_residual(p: &WhithamPoint, left: Background) -> f64 {
    let mu = p.mu.unwrap_or(f64::NAN);
    let eq1 = (p.edge - (1.0 + 2.0 * left.b - 2.0 * p.xi - 2.0 * mu)).abs();
    if p.edge <= left.sup() {
        return eq1;
    }
    let rule = GaussLegendre::cached(1024);
    let (m0, m1) = mixed_moments(left, p.edge, &rule);
    eq1.max((m1 - mu * m0).abs() / m0.abs().max(1e-300))
}

/// g(λ) = ∫_1^λ (x − μ)(x − γ)/P(x, γ) dx in the right Whitham zone, with
/// P(λ, γ) = −√((λ² − 1)(λ − inf I_ℓ)(λ − γ)) on the upper sheet. Real λ is read
/// as the limit from the upper half-plane.
pub fn g_function(p: SurfacePoint, xi: f64, left: Background) -> Result<Complex64> {
    let w = gamma_mu(xi, left)?;
    let (gamma, mu) = (w.edge, w.mu.unwrap_or(-1.0));
    let e1 = left.inf();
    let lam = p.lambda;
    if lam.im == 0.0 && lam.re > e1 && lam.re < gamma {
        return Err(Error::BandEdge { lambda: lam.re, distance: (lam.re - e1).min(gamma - lam.re) });
    }
    let rule = GaussLegendre::cached(256);
    let d = lam - 1.0;
    // x = 1 + s²·d removes the square-root singularity at the start
    let val: Complex64 = rule.integrate(0.0, 1.0, |s| {
        let x = 1.0 + d * (s * s);
        let num = (x - mu) * (x - gamma);
        let root = (x - 1.0).sqrt() * (x + 1.0).sqrt() * (x - e1).sqrt() * (x - gamma).sqrt();
        if root.norm() == 0.0 {
            return -(num / ((x + 1.0).sqrt() * (x - e1).sqrt() * (x - gamma).sqrt())) * (2.0 * d.sqrt());
        }
        -(num / root) * (2.0 * s * d)
    });
    Ok(val * p.sheet.sign())
}

/// d/dλ (g − Φ) on the upper sheet at real λ > 1.
pub fn g_minus_phase_derivative(lambda: f64, xi: f64, left: Background) -> Result<f64> {
    let w = gamma_mu(xi, left)?;
    let (gamma, mu) = (w.edge, w.mu.unwrap_or(-1.0));
    let e1 = left.inf();
    let g = -(lambda - mu) * (lambda - gamma) / ((lambda * lambda - 1.0) * (lambda - e1) * (lambda - gamma)).sqrt();
    let phi = -(lambda + xi) / (lambda * lambda - 1.0).sqrt();
    Ok(g - phi)
}

/// Φ for comparison with [`g_function`].
pub fn phase(lambda: f64, xi: f64) -> Result<Complex64> {
    phase_phi(SurfacePoint::upper(lambda), xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bg(a: f64, b: f64) -> Background {
        Background::new(a, b).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let (l, tr) = normalize_right(bg(0.4, -2.0), bg(0.5, 0.0));
        assert_eq!(l, bg(0.4, -2.0));
        assert_eq!(tr, Transform::identity());
        let (l, tr) = normalize_right(bg(1.0, -3.0), bg(1.0, 1.0));
        assert_abs_diff_eq!(l.a, 0.5);
        assert_abs_diff_eq!(l.b, -2.0);
        assert_eq!(tr.background(bg(1.0, 1.0)), bg(0.5, 0.0));
        let (a, b) = tr.ab_back(0.25, -1.0);
        assert_abs_diff_eq!(a, 0.5);
        assert_abs_diff_eq!(b, -1.0);
    }

    proptest! {
        #[test]
        fn normalization_round_trip(a in 0.1f64..3.0, b in -4.0f64..4.0, ar in 0.1f64..3.0, br in -4.0f64..4.0, xi in -5.0f64..5.0) {
            let (l, tr) = normalize_right(bg(a, b), bg(ar, br));
            let back = tr.background_back(l);
            prop_assert!((back.a - a).abs() < 1e-12 && (back.b - b).abs() < 1e-12);
            prop_assert!((tr.xi_back(tr.xi(xi)) - xi).abs() < 1e-12);
            prop_assert!((tr.lambda_back(tr.lambda(xi)) - xi).abs() < 1e-12);
        }

        #[test]
        fn rays_increase(a in 0.05f64..2.0, b in -5.0f64..5.0) {
            let left = bg(a, b);
            prop_assume!((left.inf() + 1.0).abs() > 1e-3 || (left.sup() - 1.0).abs() > 1e-3);
            prop_assume!((left.sup() - 1.0).abs() > 1e-6 && (left.inf() + 1.0).abs() > 1e-6);
            let s = classify(left).unwrap();
            prop_assert!(s.rays.windows(2).all(|w| w[0].xi < w[1].xi));
            prop_assert_eq!(s.zones.len(), s.rays.len() + 1);
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(bg(0.4, -2.0)).unwrap().kind, ScenarioKind::ShockNonOverlap);
        let s = classify(bg(1.0, -2.0)).unwrap();
        assert_eq!(s.kind, ScenarioKind::ShockOverlap);
        assert_abs_diff_eq!(s.rays[1].xi, -1.5);
        assert_abs_diff_eq!(s.rays[2].xi, -0.5);
        assert!(s.rays[0].xi < -1.5 && s.rays[3].xi > -0.5);
        let m = classify(bg(0.2, 0.3)).unwrap();
        assert_eq!(m.kind, ScenarioKind::MixedLeftInRight);
        let r: Vec<f64> = m.rays.iter().map(|r| r.xi).collect();
        assert_abs_diff_eq!(r[1], -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r[2], 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(r[3], 1.0);
        assert!(r[0] < -0.25);
        assert_eq!(classify(bg(0.6, 0.3)).unwrap().kind, ScenarioKind::RarefactionOverlap);
        assert_eq!(classify(bg(0.4, 2.0)).unwrap().kind, ScenarioKind::RarefactionNonOverlap);
        assert_eq!(classify(bg(1.0, -0.5)).unwrap().kind, ScenarioKind::MixedRightInLeft);
        assert!(matches!(classify(bg(0.5, 0.0)), Err(Error::Flat)));
    }

    #[test]
    fn critical_ray_values() {
        assert_abs_diff_eq!(xi_r(bg(0.5, -3.0)).unwrap(), 15f64.sqrt() / (4.0 + 15f64.sqrt()).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(xi_r(bg(0.5, -3.0)).unwrap(), 1.877, epsilon = 5e-4);
        assert_abs_diff_eq!(xi_r(bg(0.4, -2.0)).unwrap(), 1.548, epsilon = 5e-4);
        for left in [bg(0.5, -3.0), bg(0.4, -2.0), bg(1.0, -2.0)] {
            assert_abs_diff_eq!(xi_r(left).unwrap(), xi_r_quadrature(left).unwrap(), epsilon = 1e-8);
        }
        // flat limit: inf I_ℓ → −1
        assert_abs_diff_eq!(xi_r(bg(0.5, -1e-9)).unwrap(), 1.0, epsilon = 1e-4);
        assert!(xi_r(bg(0.2, 0.3)).is_err());
    }

    #[test]
    fn xi_cr_matches_quadrature() {
        let left = bg(0.2, 0.3);
        let c = xi_cr_mixed(left).unwrap();
        assert_abs_diff_eq!(c, -0.4958, epsilon = 1e-4);
        assert_abs_diff_eq!(c, xi_cr_quadrature(left).unwrap(), epsilon = 1e-8);
    }

    #[test]
    fn gamma_mu_boundaries_and_residuals() {
        let left = bg(0.4, -2.0);
        let (lo, hi) = (xi_r_prime(left).unwrap(), xi_r(left).unwrap());
        assert!(lo < hi);
        assert_abs_diff_eq!(gamma_mu(hi, left).unwrap().edge, left.inf(), epsilon = 1e-12);
        let top = gamma_mu(lo, left).unwrap();
        assert_abs_diff_eq!(top.edge, left.sup(), epsilon = 1e-12);
        assert!((xi_of_gamma(left, left.sup()) - lo).abs() < 1e-12);
        let mut last = f64::NEG_INFINITY;
        for i in 1..50 {
            let xi = hi - (hi - lo) * i as f64 / 50.0;
            let p = gamma_mu(xi, left).unwrap();
            assert!(p.edge > last, "γ must decrease in ξ");
            last = p.edge;
            let mu = p.mu.unwrap();
            assert!(mu > p.edge && mu < -1.0);
            assert!(gamma_mu_residual(&p, left) < 1e-10);
        }
        assert!(matches!(gamma_mu(hi + 0.1, left), Err(Error::OutsideZone { .. })));
    }

    #[test]
    fn overlap_whitham_zone_reaches_the_constant_zone() {
        let left = bg(1.0, -2.0);
        assert_abs_diff_eq!(xi_r_prime(left).unwrap(), -0.5);
        let p = gamma_mu(-0.5 + 1e-6, left).unwrap();
        assert!(p.edge > -1.0 - 1e-3);
    }

    #[test]
    fn left_zone_boundaries() {
        for left in [bg(0.4, -2.0), bg(1.0, -2.0), bg(0.5, -3.0)] {
            let (xl, xlp) = left_rays(left).unwrap();
            assert!(xl < xlp);
            assert_abs_diff_eq!(left_zone(xl, left).unwrap().edge, 1.0, epsilon = 1e-10);
            // in the overlap case the edge stops at sup I_ℓ before reaching inf I_r
            assert_abs_diff_eq!(left_zone(xlp, left).unwrap().edge, left.sup().max(-1.0), epsilon = 1e-10);
            let mid = left_zone(0.5 * (xl + xlp), left).unwrap().edge;
            assert!(mid > -1.0 && mid < 1.0);
        }
        let (_, xlp) = left_rays(bg(1.0, -2.0)).unwrap();
        assert_abs_diff_eq!(xlp, -1.5, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_backgrounds_mirror_zones() {
        // a_ℓ = 1/2: the reflected problem is the original one with b ↦ −b_ℓ... shifted
        let left = bg(0.5, -3.0);
        let (xl, xlp) = left_rays(left).unwrap();
        assert_abs_diff_eq!(xl, -xi_r(left).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(xlp, -xi_r_prime(left).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn eta_pieces() {
        let s = classify(bg(0.6, 0.3)).unwrap();
        assert_abs_diff_eq!(eta(1.0 - 1e-12, &s).unwrap(), -1.0, epsilon = 1e-11);
        let r2 = (1.0 - 0.3 + 1.2) / 2.0;
        assert_abs_diff_eq!(eta(r2 + 1e-13, &s).unwrap(), -0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(eta(r2 - 1e-13, &s).unwrap(), -0.9, epsilon = 1e-12);
        let r1 = (-0.9 - 1.0) / 2.0;
        assert_abs_diff_eq!(eta(r1 + 1e-13, &s).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eta(r1 - 1e-13, &s).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eta(-1.2 + 1e-13, &s).unwrap(), 1.5, epsilon = 1e-12);
        assert!(eta(5.0, &s).is_err());
    }

    #[test]
    fn mixed_zone_edges() {
        let left = bg(0.2, 0.3);
        let s = classify(left).unwrap();
        let (lo, hi) = (s.rays[0].xi, s.rays[1].xi);
        assert_abs_diff_eq!(mu_mixed(hi, left).unwrap().edge, left.sup(), epsilon = 1e-12);
        assert_abs_diff_eq!(mu_mixed(lo, left).unwrap().edge, 1.0, epsilon = 1e-12);
        // constant zone crossing point meets the mixed zone at sup I_ℓ
        assert_abs_diff_eq!(eta(hi + 1e-13, &s).unwrap(), left.sup(), epsilon = 1e-11);
        let mut last = f64::INFINITY;
        for i in 1..20 {
            let xi = lo + (hi - lo) * i as f64 / 20.0;
            let p = mu_mixed(xi, left).unwrap();
            assert!(p.edge < last);
            last = p.edge;
            let mu = p.mu.unwrap();
            assert!(mu > left.sup() && mu < p.edge);
            assert!(mu_mixed_residual(&p, left) < 1e-10);
        }
        // the η-equation at ξ_cr collapses onto the ξ_cr integral
        assert_abs_diff_eq!(xi_of_eta(left, 1.0), lo, epsilon = 1e-10);
    }

    #[test]
    fn g_function_matches_phase_at_infinity() {
        let left = bg(0.4, -2.0);
        let xi = 0.5 * (xi_r(left).unwrap() + xi_r_prime(left).unwrap());
        let d: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&l| g_minus_phase_derivative(l, xi, left).unwrap().abs()).collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
        assert_abs_diff_eq!(d[0] / d[1], 4.0, epsilon = 0.5);
        assert_abs_diff_eq!(d[1] / d[2], 4.0, epsilon = 0.3);
        // g − Φ tends to a constant
        let diff = |l: f64| (g_function(SurfacePoint::upper(l), xi, left).unwrap() - phase(l, xi).unwrap()).re;
        assert!((diff(40.0) - diff(80.0)).abs() < (diff(10.0) - diff(20.0)).abs());
    }

    #[test]
    fn g_function_is_imaginary_on_the_right_band() {
        let left = bg(0.4, -2.0);
        let xi = 0.5 * (xi_r(left).unwrap() + xi_r_prime(left).unwrap());
        for x in [-0.9, -0.3, 0.0, 0.6] {
            let g = g_function(SurfacePoint::upper(x), xi, left).unwrap();
            assert!(g.re.abs() < 1e-10, "{x}: {g}");
        }
        assert!(g_function(SurfacePoint::upper(-2.5), xi, left).is_err());
    }

    #[test]
    fn flat_limit_g_is_phase_plus_constant() {
        let left = bg(0.4, -2.0);
        let xi = xi_r(left).unwrap() - 1e-9;
        let diff = |l: f64| (g_function(SurfacePoint::upper(l), xi, left).unwrap() - phase(l, xi).unwrap()).re;
        assert_abs_diff_eq!(diff(3.0), diff(30.0), epsilon = 1e-6);
    }
}
