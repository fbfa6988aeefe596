//! Leading-order asymptotics of the steplike Toda lattice in every region of
//! the (n, t) half-plane.
//!
//! Two-band zones are evaluated as exact genus-one Toda solutions
//!
//! ```text
//!   a²(n) = ã² θ(z(n−1)) θ(z(n+1)) / θ(z(n))²
//!   b(n)  = b̃ + K (F(z(n−1)) − F(z(n))),     F = θ′/θ
//!   z(n,t) = ∫_{E1}^{∞+}ζ − ∫_{E1}^{ρ}ζ − n ∫_{∞−}^{∞+}ζ + t V − Ξ
//! ```
//!
//! where V = (1/πi)∫_{E3}^{E2} Ω0 (upper side of the gap) is the time frequency. K and ã² follow from
//! requiring the Toda equations to hold exactly: the a-equation forces
//! K = −V/2, and the identity (log θ)″(z) = c1 θ(z+δ)θ(z−δ)/θ(z)² + c0 with
//! δ = dz/dn turns the b-equation into ã² = V² c1/4. The additive constant b̃
//! is fixed by the trace formula averaged over the torus.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{make_step_initial, Background, LatticeState};
use crate::quad;
use crate::riemann::{lattice_coords, theta_derivs, JacobianPoint, TwoBandSurface};
use crate::spectral::{chi_from_t, chi_unchecked, pure_step_scattering};
use crate::whitham::{self, classify, normalize_right, Scenario, Transform, ZoneKind};

/// Maximal spread of the fitted theta identity over the calibration sample
/// before the model is rejected.
pub const CALIBRATION_LIMIT: f64 = 1e-4;

const LOG_CHI_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Source of the scattering quantity χ in normalized spectral coordinates.
#[derive(Debug, Clone)]
pub enum ChiSource {
    /// closed form for the pure step between the two backgrounds
    PureStep { left: Background, right: Background },
    /// recurrences on a given initial state
    Initial(Box<LatticeState>),
    /// |χ| ≡ 1, which removes the scattering term from the divisor
    Reflectionless { left: Background, right: Background },
}

impl ChiSource {
    pub fn pure_step(left: Background, right: Background) -> Self {
        ChiSource::PureStep { left, right }
    }

    pub fn left(&self) -> Background {
        match self {
            ChiSource::PureStep { left, .. } => *left,
            ChiSource::Initial(s) => s.left,
            ChiSource::Reflectionless { left, .. } => *left,
        }
    }

    pub fn right(&self) -> Background {
        match self {
            ChiSource::PureStep { right, .. } => *right,
            ChiSource::Initial(s) => s.right,
            ChiSource::Reflectionless { right, .. } => *right,
        }
    }

    pub fn transformed(&self, tr: Transform) -> Self {
        match self {
            ChiSource::PureStep { left, right } => {
                ChiSource::PureStep { left: tr.background(*left), right: tr.background(*right) }
            }
            ChiSource::Initial(s) => ChiSource::Initial(Box::new(s.scaled(tr.shift, tr.scale))),
            ChiSource::Reflectionless { left, right } => {
                ChiSource::Reflectionless { left: tr.background(*left), right: tr.background(*right) }
            }
        }
    }

    /// Source of the mirrored problem a(n) ↦ a(−n−1), b(n) ↦ −b(−n). The mirror
    /// of a pure step has its b-jump one site off, so it goes through the
    /// recurrences rather than the closed form.
    pub fn reflected(&self) -> Self {
        let flip = |bg: Background| Background { a: bg.a, b: -bg.b };
        match self {
            ChiSource::PureStep { left, right } => {
                let s = make_step_initial(*left, *right, (-4, 4)).expect("valid backgrounds");
                ChiSource::Initial(Box::new(s.reflect()))
            }
            ChiSource::Initial(s) => ChiSource::Initial(Box::new(s.reflect())),
            ChiSource::Reflectionless { left, right } => ChiSource::Reflectionless { left: flip(*right), right: flip(*left) },
        }
    }

    /// χ at a point of I_ℓ \ I_r.
    pub fn chi(&self, x: f64) -> Result<f64> {
        match self {
            ChiSource::PureStep { left, right } => {
                let (t, _) = pure_step_scattering(*left, *right, x);
                Ok(chi_from_t(x, *left, *right, t))
            }
            ChiSource::Initial(s) => chi_unchecked(s, x),
            ChiSource::Reflectionless { .. } => Ok(-1.0),
        }
    }

    /// χ-type weight on I_r \ I_ℓ: the same expression for the mirrored problem.
    pub fn chi_right(&self, x: f64) -> Result<f64> {
        self.reflected().chi(-x)
    }
}

fn log_abs(v: f64) -> f64 {
    let m = v.abs();
    if m > 0.0 {
        m.ln()
    } else {
        f64::MIN_POSITIVE.ln()
    }
}

/// ∫ log|weight(x)| dx/√|R| over segment i of the surface, converged by node doubling.
fn log_weight_integral<F: Fn(f64) -> Result<f64>>(surface: &TwoBandSurface, i: usize, weight: F) -> Result<f64> {
    let err = RefCell::new(None);
    let e = surface.e;
    let (j, k) = match i {
        0 => (2, 3),
        _ => (0, 1),
    };
    let v = quad::converge(surface.nodes, LOG_CHI_TOL, 4096, |r| {
        quad::band(r, e[i], e[i + 1], |x| {
            let w = weight(x).unwrap_or_else(|er| {
                err.borrow_mut().get_or_insert(er);
                1.0
            });
            log_abs(w) / ((x - e[j]) * (x - e[k])).abs().sqrt()
        })
    });
    match err.into_inner() {
        Some(er) => Err(er),
        None => Ok(v),
    }
}

/// Abel image of the divisor in a Whitham zone (bands [inf I_ℓ, γ] and [−1, 1]):
/// ∫_{E1}^{γ}ζ − (i/π)∫_{E1}^{γ} log|χ| ζ + ∫_{∞−}^{∞+}ζ.
pub fn divisor_whitham(surface: &TwoBandSurface, chi: &ChiSource) -> Result<JacobianPoint> {
    let j = log_weight_integral(surface, 0, |x| chi.chi(x))?;
    // the point ρ sits on the lower sheet, so its image picks up −ζ along the band
    let v = c(0.5, 0.0) + c(0.0, j / (PI * 2.0 * surface.band_integral)) + surface.abel_infty.v;
    Ok(surface.reduce(v))
}

/// Divisor of the gap zone; the contour integral over the left band equals
/// twice the upper-side band integral, so the Whitham formula at γ = sup I_ℓ applies.
pub fn divisor_gap(surface: &TwoBandSurface, chi: &ChiSource) -> Result<JacobianPoint> {
    divisor_whitham(surface, chi)
}

/// Divisor for the mixed zone with bands I_ℓ and [η, 1], built from the
/// mirrored χ on the newly opened band [E3, E4].
pub fn divisor_mixed(surface: &TwoBandSurface, chi: &ChiSource) -> Result<JacobianPoint> {
    let j = log_weight_integral(surface, 2, |x| chi.chi_right(x))?;
    // ζ = −dx/(2A√|R|) on the upper side of [E3, E4]
    let v = c(0.5, 0.0) + 0.5 * surface.tau + c(0.0, j / (PI * 2.0 * surface.band_integral)) + surface.abel_infty.v;
    Ok(surface.reduce(v))
}

/// Calibration constants of a two-band model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// ã²
    pub a_tilde_sq: f64,
    pub b_tilde: f64,
    /// Γ = 1/K, the coefficient of the log-derivative term
    pub gamma_cal: f64,
    /// fitted coefficients of the theta identity
    pub c1: f64,
    pub c0: f64,
    /// relative spread of the fit over the sample
    pub spread: f64,
}

/// Genus-one Toda solution on a fixed surface and divisor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoBandModel {
    pub surface: TwoBandSurface,
    pub divisor_image: JacobianPoint,
    /// z(0, 0)
    pub z0: Complex64,
    /// dz/dn = −∫_{∞−}^{∞+}ζ
    pub dz_dn: Complex64,
    /// dz/dt = V
    pub dz_dt: Complex64,
    pub calib: Calibration,
}

impl TwoBandModel {
    pub fn new(surface: TwoBandSurface, divisor_image: JacobianPoint) -> Result<Self> {
        let u_inf = 0.5 * surface.abel_infty.v;
        let z0 = u_inf - divisor_image.v - surface.riemann_const.v;
        let dz_dn = -surface.abel_infty.v;
        let dz_dt = surface.time_velocity();
        let mut m = Self {
            surface,
            divisor_image,
            z0,
            dz_dn,
            dz_dt,
            calib: Calibration { a_tilde_sq: f64::NAN, b_tilde: f64::NAN, gamma_cal: f64::NAN, c1: 0.0, c0: 0.0, spread: 0.0 },
        };
        m.calib = calibrate(&m, &calibration_sample(20))?;
        Ok(m)
    }

    pub fn tau(&self) -> Complex64 {
        self.surface.tau
    }

    /// z(n, t) reduced to a bounded representative along the real-solution line.
    pub fn phase_vector(&self, n: i64, t: f64) -> Complex64 {
        self.reduce_phase(self.z0 + self.dz_dn * n as f64 + self.dz_dt * t)
    }

    /// Representative with lattice coordinates in [0, 1); θ-quotients are
    /// invariant as long as neighbours are taken from the same representative.
    fn reduce_phase(&self, z: Complex64) -> Complex64 {
        let tau = self.tau();
        let (x, y) = lattice_coords(z, tau);
        c(x - x.floor(), 0.0) + tau * (y - y.floor())
    }

    pub fn phase_point(&self, n: i64, t: f64) -> JacobianPoint {
        JacobianPoint::reduced(self.z0 + self.dz_dn * n as f64 + self.dz_dt * t, self.tau())
    }

    /// K = −V/2 (purely imaginary); b = b̃ + K (F(z(n−1)) − F(z(n))).
    fn k_coeff(&self) -> Complex64 {
        -0.5 * self.dz_dt
    }

    fn raw(&self, n: i64, t: f64) -> Result<(f64, Complex64)> {
        let tau = self.tau();
        let z = self.phase_vector(n, t);
        let d = self.dz_dn;
        let [th, th1, _] = theta_derivs(z, tau);
        let [tm, tm1, _] = theta_derivs(z - d, tau);
        let [tp, _, _] = theta_derivs(z + d, tau);
        let floor = 1e-300;
        if th.norm() < floor || tm.norm() < floor || tp.norm() < floor {
            return Err(Error::ThetaZero(format!("n = {n}, t = {t}")));
        }
        let ratio = tm * tp / (th * th);
        let fdiff = tm1 / tm - th1 / th;
        Ok((ratio.re, self.k_coeff() * fdiff))
    }

    /// (a², b) at lattice site n and time t.
    pub fn two_band(&self, n: i64, t: f64) -> Result<(f64, f64)> {
        let (ratio, kf) = self.raw(n, t)?;
        Ok((self.calib.a_tilde_sq * ratio, self.calib.b_tilde + kf.re))
    }

    /// Largest Toda-equation residual over the given samples, by central
    /// differences in t with step h.
    pub fn toda_residual(&self, samples: &[(i64, f64)], h: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &(n, t) in samples {
            let (a2, b) = self.two_band(n, t)?;
            let (a2m, _) = self.two_band(n - 1, t)?;
            let (_, bp) = self.two_band(n + 1, t)?;
            // fourth-order central differences in t
            let mut bdot = 0.0;
            let mut adot = 0.0;
            for (k, w) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
                let (a2k, bk) = self.two_band(n, t + k * h)?;
                bdot += w * bk / (12.0 * h);
                adot += w * a2k.sqrt() / (12.0 * h);
            }
            let r1 = (bdot - 2.0 * (a2 - a2m)).abs();
            let r2 = (adot - a2.sqrt() * (bp - b)).abs();
            worst = worst.max(r1).max(r2);
        }
        Ok(worst)
    }
}

/// Deterministic (n, t) sample used for calibration.
pub fn calibration_sample(count: usize) -> Vec<(i64, f64)> {
    (0..count).map(|k| (((k * 7919) % 61) as i64 - 30, 0.731 * k as f64)).collect()
}

/// Fix Γ, ã² and b̃ so the theta quotients form an exact Toda solution with
/// the right spectrum. Fails if the theta identity fit is sample dependent.
pub fn calibrate(model: &TwoBandModel, sample: &[(i64, f64)]) -> Result<Calibration> {
    let tau = model.tau();
    let d = model.dz_dn;
    let mut rows = Vec::with_capacity(sample.len());
    for &(n, t) in sample {
        let z = model.phase_vector(n, t);
        let [th, th1, th2] = theta_derivs(z, tau);
        let [tm, _, _] = theta_derivs(z - d, tau);
        let [tp, _, _] = theta_derivs(z + d, tau);
        let f = th1 / th;
        let second = (th2 / th - f * f).re;
        let h = (tm * tp / (th * th)).re;
        rows.push((h, second));
    }
    let m = rows.len() as f64;
    let mh = rows.iter().map(|r| r.0).sum::<f64>() / m;
    let ms = rows.iter().map(|r| r.1).sum::<f64>() / m;
    let sxx: f64 = rows.iter().map(|r| (r.0 - mh).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.0 - mh) * (r.1 - ms)).sum();
    if sxx <= 0.0 {
        return Err(Error::Calibration { spread: f64::INFINITY, limit: CALIBRATION_LIMIT });
    }
    let c1 = sxy / sxx;
    let c0 = ms - c1 * mh;
    let scale = rows.iter().map(|r| r.1.abs()).fold(1e-300, f64::max);
    let spread = rows.iter().map(|r| (r.1 - c1 * r.0 - c0).abs()).fold(0.0, f64::max) / scale;
    if spread > CALIBRATION_LIMIT {
        return Err(Error::Calibration { spread, limit: CALIBRATION_LIMIT });
    }
    let v = model.dz_dt;
    let a_tilde_sq = (v * v).re * c1 / 4.0;
    if !(a_tilde_sq > 0.0) {
        return Err(Error::Convention(format!("calibrated a~^2 = {a_tilde_sq} is not positive")));
    }
    let k = -0.5 * v;
    let s = &model.surface;
    // ⟨b⟩ = ½ΣE − ⟨μ⟩ (trace formula averaged over the gap oval); the
    // log-derivative term averages to K·2πδ/Im τ along the real line
    let mean_b = 0.5 * s.e.iter().sum::<f64>() - s.gap_mean();
    let mean_term = (k * 2.0 * PI * d / tau.im).re;
    Ok(Calibration { a_tilde_sq, b_tilde: mean_b - mean_term, gamma_cal: (1.0 / k).im, c1, c0, spread })
}

/// Leading-order value at one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub a: f64,
    pub b: f64,
    pub zone: ZoneKind,
}

/// Per-scenario asymptotic evaluator.
#[derive(Debug, Clone)]
pub struct AsymptoticModel {
    pub left: Background,
    pub right: Background,
    pub transform: Transform,
    pub scenario: Scenario,
    chi: ChiSource,
    gap: Option<TwoBandModel>,
    mirror: Option<Box<AsymptoticModel>>,
}

impl AsymptoticModel {
    /// Model for the pure step between `left` and `right`.
    pub fn pure_step(left: Background, right: Background) -> Result<Self> {
        Self::new(left, right, ChiSource::pure_step(left, right))
    }

    pub fn new(left: Background, right: Background, chi: ChiSource) -> Result<Self> {
        Self::build(left, right, chi, true)
    }

    fn build(left: Background, right: Background, chi: ChiSource, with_mirror: bool) -> Result<Self> {
        let left = Background::new(left.a, left.b)?;
        let right = Background::new(right.a, right.b)?;
        let (norm_left, transform) = normalize_right(left, right);
        let scenario = classify(norm_left)?;
        let chi = chi.transformed(transform);
        let gap = match scenario.kind {
            whitham::ScenarioKind::ShockNonOverlap => {
                let s = TwoBandSurface::new(norm_left.inf(), norm_left.sup(), -1.0, 1.0)?;
                let w = divisor_gap(&s, &chi)?;
                Some(TwoBandModel::new(s, w)?)
            }
            _ => None,
        };
        let needs_mirror = scenario.zones.iter().any(|z| z.kind == ZoneKind::LeftWhitham);
        let mirror = if with_mirror && needs_mirror {
            let flip = |bg: Background| Background { a: bg.a, b: -bg.b };
            let m = Self::build(flip(Background::unit()), flip(norm_left), chi.reflected(), false)?;
            Some(Box::new(m))
        } else {
            None
        };
        Ok(Self { left, right, transform, scenario, chi, gap, mirror })
    }

    /// Zone of the ray ξ = n/t in original coordinates.
    pub fn zone_at(&self, xi: f64) -> ZoneKind {
        self.scenario.zone_of(self.transform.xi(xi)).kind
    }

    /// Rays in original coordinates.
    pub fn rays(&self) -> Vec<(f64, String)> {
        self.scenario.rays.iter().map(|r| (self.transform.xi_back(r.xi), r.label.clone())).collect()
    }

    /// Two-band model of the right Whitham zone at normalized ray ξ.
    pub fn whitham_model(&self, xi: f64) -> Result<TwoBandModel> {
        let left = self.scenario.left;
        let p = whitham::gamma_mu(xi, left)?;
        let s = TwoBandSurface::new(left.inf(), p.edge, -1.0, 1.0)?;
        let w = divisor_whitham(&s, &self.chi)?;
        TwoBandModel::new(s, w)
    }

    /// Two-band model of the mixed zone (bands I_ℓ and [η, 1]) at normalized ray ξ.
    pub fn mixed_model(&self, xi: f64) -> Result<TwoBandModel> {
        let left = self.scenario.left;
        let p = whitham::mu_mixed(xi, left)?;
        let s = TwoBandSurface::new(left.inf(), left.sup(), p.edge, 1.0)?;
        let w = divisor_mixed(&s, &self.chi)?;
        TwoBandModel::new(s, w)
    }

    pub fn gap_model(&self) -> Option<&TwoBandModel> {
        self.gap.as_ref()
    }

    /// Leading term at (n, t) in original coordinates.
    pub fn leading_term(&self, n: i64, t: f64) -> Result<LeadingTerm> {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("t must be positive, got {t}")));
        }
        let tn = self.transform.time(t);
        let (a, b, zone) = self.normalized_term(n, tn)?;
        let (a, b) = self.transform.ab_back(a, b);
        Ok(LeadingTerm { a, b, zone })
    }

    /// (a, b, zone) in normalized coordinates at normalized time.
    fn normalized_term(&self, n: i64, t: f64) -> Result<(f64, f64, ZoneKind)> {
        let xi = n as f64 / t;
        let left = self.scenario.left;
        let l1 = left.inf();
        let zone = self.scenario.zone_of(xi).kind;
        let from_model = |m: &TwoBandModel| -> Result<(f64, f64)> {
            let (a2, b) = m.two_band(n, t)?;
            Ok((a2.sqrt(), b))
        };
        let (a, b) = match zone {
            ZoneKind::LeftBackground => (left.a, left.b),
            ZoneKind::RightBackground => (0.5, 0.0),
            ZoneKind::RightSlope => (0.5 * xi, 1.0 - xi),
            ZoneKind::LeftSlope => (-0.5 * xi, l1 - xi),
            ZoneKind::Constant => ((1.0 - l1) / 4.0, (1.0 + l1) / 2.0),
            ZoneKind::Gap => from_model(self.gap.as_ref().expect("gap model for shock scenario"))?,
            ZoneKind::RightWhitham => from_model(&self.whitham_model(xi)?)?,
            ZoneKind::MixedTwoBand => from_model(&self.mixed_model(xi)?)?,
            ZoneKind::LeftWhitham => {
                let m = self.mirror.as_ref().expect("mirror model for left Whitham zone");
                // a(n) = A(−n−1), b(n) = −B(−n) for the mirrored problem
                let ta = m.leading_term(-n - 1, t)?;
                let tb = m.leading_term(-n, t)?;
                (ta.a, -tb.b)
            }
        };
        Ok((a, b, zone))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigenvalue_count_below;
    use approx::assert_abs_diff_eq;

    fn bg(a: f64, b: f64) -> Background {
        Background::new(a, b).unwrap()
    }

    fn gap_model(left: Background) -> TwoBandModel {
        let s = TwoBandSurface::new(left.inf(), left.sup(), -1.0, 1.0).unwrap();
        let w = divisor_gap(&s, &ChiSource::pure_step(left, Background::unit())).unwrap();
        TwoBandModel::new(s, w).unwrap()
    }

    #[test]
    fn gap_model_is_an_exact_toda_solution() {
        let m = gap_model(bg(0.4, -2.0));
        assert!(m.calib.spread < 1e-6, "{:?}", m.calib);
        let samples: Vec<(i64, f64)> = (0..10).flat_map(|i| (0..10).map(move |j| (i * 3 - 15, 0.5 + 1.7 * j as f64))).collect();
        let r = m.toda_residual(&samples, 1e-4).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn gap_model_spectrum_matches_bands() {
        let m = gap_model(bg(0.4, -2.0));
        let n = 3000;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for k in 0..n {
            let (a2, bb) = m.two_band(k as i64, 3.0).unwrap();
            b.push(bb);
            if k + 1 < n {
                a.push(a2.sqrt());
            }
        }
        let e = m.surface.e;
        let eps = 1e-3;
        let below = eigenvalue_count_below(&a, &b, e[0] - eps);
        let upto_band1 = eigenvalue_count_below(&a, &b, e[1] + eps);
        let in_gap = eigenvalue_count_below(&a, &b, e[2] - eps) - upto_band1;
        let above = n - eigenvalue_count_below(&a, &b, e[3] + eps);
        assert!(below <= 1 && above <= 1 && in_gap <= 2, "{below} {in_gap} {above} {:?}", m.calib);
        // band sizes are the densities of states
        assert!(upto_band1 > 10 && upto_band1 < n - 10);
    }

    #[test]
    fn eq8_constants_are_band_center_and_quarter_length() {
        for (a, b) in [(0.6, 0.3), (1.0, -2.0), (0.2, 0.3)] {
            let l1 = b - 2.0 * a;
            assert_abs_diff_eq!((1.0 - b + 2.0 * a) / 4.0, (1.0 - l1) / 4.0, epsilon = 1e-15);
            assert_abs_diff_eq!((1.0 + b) / 2.0 - a, (1.0 + l1) / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_zone_values() {
        let m = AsymptoticModel::pure_step(bg(0.6, 0.3), Background::unit()).unwrap();
        let lt = m.leading_term(0, 50.0).unwrap();
        assert_eq!(lt.zone, ZoneKind::Constant);
        assert_abs_diff_eq!(lt.a, 0.475, epsilon = 1e-14);
        assert_abs_diff_eq!(lt.b, 0.05, epsilon = 1e-14);
        let m = AsymptoticModel::pure_step(bg(1.0, -2.0), Background::unit()).unwrap();
        let lt = m.leading_term(-90, 90.0).unwrap();
        assert_eq!(lt.zone, ZoneKind::Constant);
        assert_abs_diff_eq!(lt.a, 1.25, epsilon = 1e-14);
        assert_abs_diff_eq!(lt.b, -1.5, epsilon = 1e-14);
    }

    #[test]
    fn slopes_meet_backgrounds() {
        let m = AsymptoticModel::pure_step(bg(0.4, 2.0), Background::unit()).unwrap();
        let lt = m.leading_term(99, 100.0).unwrap();
        assert_eq!(lt.zone, ZoneKind::RightSlope);
        assert_abs_diff_eq!(lt.a, 0.495, epsilon = 1e-14);
        assert_abs_diff_eq!(lt.b, 0.01, epsilon = 1e-14);
        let lt = m.leading_term(-79, 100.0).unwrap();
        assert_eq!(lt.zone, ZoneKind::LeftSlope);
        assert_abs_diff_eq!(lt.a, 0.395, epsilon = 1e-14);
        assert_abs_diff_eq!(lt.b, 2.0 - 0.8 + 0.79, epsilon = 1e-14);
    }

    #[test]
    fn whitham_model_degenerates_to_solitons_on_the_right_background() {
        // near the leading edge the left band shrinks to a point: isolated
        // solitons separated by long stretches of the right background
        let left = bg(0.4, -2.0);
        let m = AsymptoticModel::pure_step(left, Background::unit()).unwrap();
        let xr = whitham::xi_r(left).unwrap();
        let wm = m.whitham_model(xr - 1e-7).unwrap();
        let flat = (-200..200)
            .filter(|&n| {
                let (a2, b) = wm.two_band(n, 10.0).unwrap();
                (a2 - 0.25).abs() < 1e-3 && b.abs() < 1e-3
            })
            .count();
        assert!(flat > 160, "{flat}");
        let deepest = (-200..200).map(|n| wm.two_band(n, 10.0).unwrap().1).fold(0.0, f64::min);
        assert!(deepest < -0.5, "{deepest}");
    }

    #[test]
    fn gap_model_is_xi_independent() {
        let m = AsymptoticModel::pure_step(bg(0.4, -2.0), Background::unit()).unwrap();
        let g = m.gap_model().unwrap();
        for (n, t) in [(17, 100.0), (20, 100.0), (46, 200.0)] {
            let lt = m.leading_term(n, t).unwrap();
            assert_eq!(lt.zone, ZoneKind::Gap);
            let (a2, b) = g.two_band(n, t).unwrap();
            assert_abs_diff_eq!(lt.a, a2.sqrt(), epsilon = 1e-14);
            assert_abs_diff_eq!(lt.b, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn gap_divisor_is_the_limit_of_the_whitham_divisor() {
        let left = bg(0.4, -2.0);
        let m = AsymptoticModel::pure_step(left, Background::unit()).unwrap();
        let xp = whitham::xi_r_prime(left).unwrap();
        let gap = m.gap_model().unwrap();
        // the band edge moves linearly in ξ, the divisor like its square root
        let dist = |h: f64| {
            let near = m.whitham_model(xp + h).unwrap();
            crate::riemann::lattice_distance(near.divisor_image.v, gap.divisor_image.v, gap.tau())
        };
        let (far, near) = (dist(1e-7), dist(1e-11));
        assert!(near < 1e-5 && near < far / 10.0, "{far} {near}");
    }

    #[test]
    fn equal_band_lengths_give_period_two() {
        // a_ℓ = 1/2: both bands have length 2
        let m = gap_model(bg(0.5, -3.0));
        for n in [-3, 0, 4] {
            let (a0, b0) = m.two_band(n, 7.0).unwrap();
            let (a2, b2) = m.two_band(n + 2, 7.0).unwrap();
            assert_abs_diff_eq!(a0, a2, epsilon = 1e-9);
            assert_abs_diff_eq!(b0, b2, epsilon = 1e-9);
        }
    }

    #[test]
    fn divisor_without_reflection_term() {
        let left = bg(0.4, -2.0);
        let s = TwoBandSurface::new(left.inf(), left.sup(), -1.0, 1.0).unwrap();
        let w = divisor_gap(&s, &ChiSource::Reflectionless { left, right: Background::unit() }).unwrap();
        // |χ| ≡ 1 leaves abel_map(γ) plus the infinity term
        let gamma = s.abel_map(crate::spectral::SurfacePoint::upper(left.sup())).v;
        let v = gamma + s.abel_infty.v;
        assert!(crate::riemann::lattice_distance(w.v, v, s.tau) < 1e-12);
    }

    #[test]
    fn whitham_divisor_is_stable_under_refinement() {
        let left = bg(0.4, -2.0);
        let xi = 0.5 * (whitham::xi_r(left).unwrap() + whitham::xi_r_prime(left).unwrap());
        let p = whitham::gamma_mu(xi, left).unwrap();
        let chi = ChiSource::pure_step(left, Background::unit());
        let s1 = TwoBandSurface::new(left.inf(), p.edge, -1.0, 1.0).unwrap();
        let s2 = TwoBandSurface::with_min_nodes(left.inf(), p.edge, -1.0, 1.0, 4 * s1.nodes).unwrap();
        let w1 = divisor_whitham(&s1, &chi).unwrap();
        let w2 = divisor_whitham(&s2, &chi).unwrap();
        assert!(crate::riemann::lattice_distance(w1.v, w2.v, s1.tau) < 1e-8);
    }
}
