//! Genus-one hyperelliptic surfaces with four real branch points.
//!
//! The surface of `R(λ) = (λ−E1)(λ−E2)(λ−E3)(λ−E4)` has bands `[E1,E2]` and
//! `[E3,E4]`. On the upper sheet `√R = Π √(λ−E_j)` with principal roots, so
//! `√R ~ λ²` at ∞+ and, approaching the real line from above,
//!
//! ```text
//!   x > E4: +√|R|    band [E3,E4]: +i√|R|    gap: −√|R|    band [E1,E2]: −i√|R|    x < E1: +√|R|
//! ```
//!
//! `P = −√R`. The 𝔞-cycle surrounds `[E1,E2]` (twice the upper-side band
//! integral), the 𝔟-cycle runs through the gap. With `A = ∫_{E1}^{E2} dx/√|R|`
//! and `B = ∫_{E2}^{E3} dx/√|R|` the normalized differential is
//! `ζ = dλ/(2iA√R)` and `τ = iB/A`. The Abel map is based at E1.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, GaussLegendre};
use crate::spectral::{Sheet, SurfacePoint};

/// Minimal band or gap width accepted by [`TwoBandSurface::new`].
pub const MIN_WIDTH: f64 = 1e-8;

const QUAD_TOL: f64 = 1e-14;
const MAX_NODES: usize = 4096;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A point of the Jacobian ℂ/(ℤ + τℤ), stored reduced to the cell
/// `{x + yτ : 0 ≤ x, y < 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianPoint {
    pub v: Complex64,
}

impl JacobianPoint {
    pub fn reduced(v: Complex64, tau: Complex64) -> Self {
        let (x, y) = lattice_coords(v, tau);
        let (x, y) = (x - x.floor(), y - y.floor());
        // fold values that round up to 1
        let x = if x >= 1.0 { 0.0 } else { x };
        let y = if y >= 1.0 { 0.0 } else { y };
        Self { v: c(x, 0.0) + tau * y }
    }
}

/// (x, y) with v = x + yτ.
pub fn lattice_coords(v: Complex64, tau: Complex64) -> (f64, f64) {
    let y = v.im / tau.im;
    let x = v.re - y * tau.re;
    (x, y)
}

/// Representative of v mod lattice with both coordinates in (−½, ½].
pub fn reduce_centered(v: Complex64, tau: Complex64) -> Complex64 {
    let (x, y) = lattice_coords(v, tau);
    let x = x - x.round();
    let y = y - y.round();
    c(x, 0.0) + tau * y
}

/// Distance between two Jacobian values modulo the lattice.
pub fn lattice_distance(u: Complex64, w: Complex64, tau: Complex64) -> f64 {
    reduce_centered(u - w, tau).norm()
}

/// θ(v) = Σ_m exp(πi m² τ + 2πi m v) and its first two derivatives in v.
pub fn theta_derivs(v: Complex64, tau: Complex64) -> [Complex64; 3] {
    assert!(tau.im > 0.0, "theta needs Im tau > 0");
    let m0 = (-v.im / tau.im).round() as i64;
    let term = |m: i64| {
        let mf = m as f64;
        let e = (c(0.0, PI) * mf * mf * tau + c(0.0, 2.0 * PI) * mf * v).exp();
        let k = c(0.0, 2.0 * PI * mf);
        [e, e * k, e * k * k]
    };
    let mut acc = term(m0);
    for dir in [1i64, -1] {
        let mut k = 1;
        loop {
            let t = term(m0 + dir * k);
            for (a, x) in acc.iter_mut().zip(&t) {
                *a += x;
            }
            let big = acc[0].norm().max(1e-300);
            if k > 2 && t[0].norm() <= 1e-17 * big && t[2].norm() <= 1e-17 * acc[2].norm().max(big) {
                break;
            }
            k += 1;
            if k > 10_000 {
                break;
            }
        }
    }
    acc
}

/// θ and θ′.
pub fn theta_with_derivative(v: Complex64, tau: Complex64) -> (Complex64, Complex64) {
    let [t, d, _] = theta_derivs(v, tau);
    (t, d)
}

/// Riemann theta function of a genus-one surface.
pub fn theta(v: Complex64, tau: Complex64) -> Complex64 {
    theta_with_derivative(v, tau).0
}

/// Second-kind differential Ω0 = (λ² + c1 λ + c0)/P dλ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Omega0 {
    pub c1: f64,
    pub c0: f64,
}

impl Omega0 {
    pub fn numerator(&self, x: f64) -> f64 {
        x * x + self.c1 * x + self.c0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoBandSurface {
    pub e: [f64; 4],
    pub tau: Complex64,
    /// A = ∫_{E1}^{E2} dx/√|R|
    pub band_integral: f64,
    /// B = ∫_{E2}^{E3} dx/√|R|
    pub gap_integral: f64,
    /// ∫_{−∞}^{E1} dx/√|R|
    pub left_tail: f64,
    /// ∫_{E4}^{∞} dx/√|R|
    pub right_tail: f64,
    /// c in ζ = c dλ/P
    pub zeta_norm: Complex64,
    /// 𝔞-period of dλ/P
    pub gamma_raw: Complex64,
    pub omega0: Omega0,
    /// ∫_{E2}^{E3} (x² + c1 x + c0)/√|R| dx
    pub omega0_gap: f64,
    /// ∫_{∞−}^{∞+} ζ
    pub abel_infty: JacobianPoint,
    pub riemann_const: JacobianPoint,
    pub nodes: usize,
}

impl TwoBandSurface {
    pub fn new(e1: f64, e2: f64, e3: f64, e4: f64) -> Result<Self> {
        Self::with_min_nodes(e1, e2, e3, e4, quad::DEFAULT_NODES)
    }

    /// Build with quadrature starting at `min_nodes` (doubling until converged).
    pub fn with_min_nodes(e1: f64, e2: f64, e3: f64, e4: f64, min_nodes: usize) -> Result<Self> {
        let e = [e1, e2, e3, e4];
        if e.iter().any(|x| !x.is_finite()) || !(e1 <= e2 && e2 <= e3 && e3 <= e4) {
            return Err(Error::Invalid(format!("branch points must increase: {e:?}")));
        }
        for (w, what) in [(e2 - e1, "lower band"), (e3 - e2, "gap"), (e4 - e3, "upper band")] {
            if w < MIN_WIDTH {
                return Err(Error::DegenerateSurface(format!("{what} width {w:.3e}")));
            }
        }
        let mut nodes = min_nodes;
        let probe = |n: usize| -> [f64; 4] {
            let r = GaussLegendre::cached(n);
            [
                seg_integral(&e, 0, &r, |_| 1.0),
                seg_integral(&e, 1, &r, |_| 1.0),
                left_tail(&e, &r, |_| 1.0),
                right_tail(&e, &r, |_| 1.0),
            ]
        };
        let mut prev = probe(nodes);
        loop {
            let cur = probe(2 * nodes);
            let ok = prev.iter().zip(&cur).all(|(p, q)| (p - q).abs() <= QUAD_TOL * q.abs().max(1.0));
            nodes *= 2;
            prev = cur;
            if ok || nodes >= MAX_NODES {
                break;
            }
        }
        let [a_int, b_int, cl, cr] = prev;
        let tau = c(0.0, b_int / a_int);
        let rule = GaussLegendre::cached(nodes);
        let m0 = a_int;
        let m1 = seg_integral(&e, 0, &rule, |x| x);
        let m2 = seg_integral(&e, 0, &rule, |x| x * x);
        let c1 = -0.5 * e.iter().sum::<f64>();
        let c0 = -(m2 + c1 * m1) / m0;
        let omega0 = Omega0 { c1, c0 };
        let omega0_gap = seg_integral(&e, 1, &rule, |x| omega0.numerator(x));
        // ζ = dλ/(2iA√R) = −dλ/(2iA P)
        let zeta_norm = -c(0.0, 2.0 * a_int).inv();
        let gamma_raw = c(0.0, -2.0 * a_int);
        let abel_infty = JacobianPoint::reduced(c(0.0, cl / a_int), tau);
        let riemann_const = JacobianPoint::reduced(0.5 * (c(1.0, 0.0) + tau), tau);
        let s = Self {
            e,
            tau,
            band_integral: a_int,
            gap_integral: b_int,
            left_tail: cl,
            right_tail: cr,
            zeta_norm,
            gamma_raw,
            omega0,
            omega0_gap,
            abel_infty,
            riemann_const,
            nodes,
        };
        s.verify_riemann_constant()?;
        Ok(s)
    }

    fn rule(&self) -> std::sync::Arc<GaussLegendre> {
        GaussLegendre::cached(self.nodes)
    }

    /// θ(Ξ) must vanish for the chosen homology basis and base point.
    fn verify_riemann_constant(&self) -> Result<()> {
        let z = theta(self.riemann_const.v, self.tau).norm();
        let scale = theta(c(0.0, 0.0), self.tau).norm();
        if z > 1e-10 * scale {
            return Err(Error::Convention(format!("|theta(Xi)| = {z:.3e}")));
        }
        Ok(())
    }

    pub fn reduce(&self, v: Complex64) -> JacobianPoint {
        JacobianPoint::reduced(v, self.tau)
    }

    /// Upper-sheet √R(λ) = Π principal √(λ − E_j).
    pub fn sqrt_r(&self, lambda: Complex64) -> Complex64 {
        self.e.iter().map(|&ej| (lambda - ej).sqrt()).product()
    }

    /// P(λ) = −√R on the given sheet.
    pub fn p(&self, lambda: Complex64, sheet: Sheet) -> Complex64 {
        -self.sqrt_r(lambda) * sheet.sign()
    }

    /// ∫_{E_i}^{E_{i+1}} g(x)/√|R| dx for segment i ∈ {0, 1, 2}.
    pub fn segment_integral<F: FnMut(f64) -> f64>(&self, i: usize, g: F) -> f64 {
        seg_integral(&self.e, i, &self.rule(), g)
    }

    /// ∫_{E1}^{E2} g(x)/√|R| dx, converged by node doubling.
    pub fn band_integral_of<F: Fn(f64) -> f64>(&self, g: F, tol: f64) -> f64 {
        quad::converge(self.nodes, tol, MAX_NODES, |r| seg_integral(&self.e, 0, r, &g))
    }

    /// Upper-sheet Abel map of a real point approached from the upper half-plane
    /// (not reduced).
    pub fn abel_real_upper(&self, x: f64) -> Complex64 {
        let [e1, e2, e3, e4] = self.e;
        let a = self.band_integral;
        let r = self.rule();
        let half_tau = 0.5 * self.tau;
        if x <= e1 {
            let v = if x == e1 { 0.0 } else { partial_left_tail(&self.e, &r, x) };
            c(0.0, v / (2.0 * a))
        } else if x <= e2 {
            c(partial_seg(&self.e, 0, &r, x) / (2.0 * a), 0.0)
        } else if x <= e3 {
            c(0.5, partial_seg(&self.e, 1, &r, x) / (2.0 * a))
        } else if x <= e4 {
            c(0.5, 0.0) + half_tau - partial_seg(&self.e, 2, &r, x) / (2.0 * a)
        } else {
            half_tau - c(0.0, partial_right_tail(&self.e, &r, x) / (2.0 * a))
        }
    }

    /// Abel map ∫_{E1}^{p} ζ reduced mod the lattice.
    pub fn abel_map(&self, p: SurfacePoint) -> JacobianPoint {
        self.reduce(self.abel_unreduced(p))
    }

    fn abel_unreduced(&self, p: SurfacePoint) -> Complex64 {
        let lam = p.lambda;
        if !lam.re.is_finite() || !lam.im.is_finite() {
            return 0.5 * self.abel_infty.v * p.sheet.sign();
        }
        let base_upper = self.abel_real_upper(lam.re);
        let u = if lam.im == 0.0 {
            base_upper
        } else if lam.im > 0.0 {
            base_upper + self.vertical(lam.re, lam.im)
        } else {
            -base_upper.conj() + self.vertical(lam.re, lam.im)
        };
        u * p.sheet.sign()
    }

    /// ∫ ζ from x to x + i·h along the vertical segment, upper-sheet chart.
    fn vertical(&self, x: f64, h: f64) -> Complex64 {
        let r = self.rule();
        let k = self.zeta_norm * -1.0; // ζ = −c_norm dλ/P = dλ/(2iA√R)
        let s_max = h.abs().sqrt();
        let sgn = h.signum();
        let val: Complex64 = r.integrate(0.0, s_max, |s| {
            let lam = c(x, sgn * s * s);
            let dl = c(0.0, sgn * 2.0 * s);
            let sr = self.sqrt_r(lam);
            if sr.norm() == 0.0 {
                return c(0.0, 0.0);
            }
            dl / sr
        });
        // −c·(1/P) = c/√R with c = zeta_norm; written out to keep sign explicit
        -k * val * -1.0
    }

    /// Inverse of the Abel map.
    pub fn jacobi_invert(&self, w: JacobianPoint) -> SurfacePoint {
        let (x, y) = lattice_coords(w.v, self.tau);
        let (x, y) = (x - x.floor(), y - y.floor());
        let tol = 1e-12;
        let near = |u: f64, target: f64| (u - target).abs() < tol || (u - target - 1.0).abs() < tol;
        let big_t = self.tau.im;
        let two_a = 2.0 * self.band_integral;
        let [e1, e2, e3, e4] = self.e;
        let r = self.rule();
        if near(y, 0.0) {
            // lower band oval
            let x = if near(x, 0.0) { 0.0 } else { x };
            let (s, sheet) = if x <= 0.5 { (x, Sheet::Upper) } else { (1.0 - x, Sheet::Lower) };
            let lam = bisect(e1, e2, |t| partial_seg(&self.e, 0, &r, t) - two_a * s);
            return SurfacePoint { lambda: c(lam, 0.0), sheet };
        }
        if near(y, 0.5) {
            let (s, sheet) = if x <= 0.5 { (0.5 - x, Sheet::Upper) } else { (x - 0.5, Sheet::Lower) };
            let lam = bisect(e3, e4, |t| partial_seg(&self.e, 2, &r, t) - two_a * s);
            return SurfacePoint { lambda: c(lam, 0.0), sheet };
        }
        let sigma = y * big_t;
        if near(x, 0.5) {
            let (s, sheet) = if sigma <= 0.5 * big_t { (sigma, Sheet::Upper) } else { (big_t - sigma, Sheet::Lower) };
            let lam = bisect(e2, e3, |t| partial_seg(&self.e, 1, &r, t) - two_a * s);
            return SurfacePoint { lambda: c(lam, 0.0), sheet };
        }
        if near(x, 0.0) {
            let (s, sheet) = if sigma <= 0.5 * big_t { (sigma, Sheet::Upper) } else { (big_t - sigma, Sheet::Lower) };
            let edge = self.left_tail / two_a;
            if (s - edge).abs() < 1e-13 * big_t.max(1.0) {
                return SurfacePoint { lambda: c(f64::INFINITY, 0.0), sheet };
            }
            let lam = if s < edge {
                let target = two_a * s;
                let mut lo = e1 - 1.0;
                while partial_left_tail(&self.e, &r, lo) < target {
                    lo = e1 - 2.0 * (e1 - lo);
                }
                bisect(lo, e1, |t| target - partial_left_tail(&self.e, &r, t))
            } else {
                let target = two_a * (0.5 * big_t - s);
                let mut hi = e4 + 1.0;
                while partial_right_tail(&self.e, &r, hi) < target {
                    hi = e4 + 2.0 * (hi - e4);
                }
                bisect(e4, hi, |t| partial_right_tail(&self.e, &r, t) - target)
            };
            return SurfacePoint { lambda: c(lam, 0.0), sheet };
        }
        self.newton_invert(w)
    }

    fn newton_invert(&self, w: JacobianPoint) -> SurfacePoint {
        let [e1, _, _, e4] = self.e;
        let span = e4 - e1;
        let mut best = (f64::INFINITY, SurfacePoint::upper(c(0.0, 1.0)));
        for sheet in [Sheet::Upper, Sheet::Lower] {
            for i in 0..=12 {
                let re = e1 - 0.5 * span + 2.0 * span * i as f64 / 12.0;
                for im in [0.05, 0.3, 1.0, 3.0, -0.05, -0.3, -1.0, -3.0] {
                    let p = SurfacePoint { lambda: c(re, im * span), sheet };
                    let d = lattice_distance(self.abel_unreduced(p), w.v, self.tau);
                    if d < best.0 {
                        best = (d, p);
                    }
                }
            }
        }
        let mut p = best.1;
        for _ in 0..60 {
            let res = reduce_centered(self.abel_unreduced(p) - w.v, self.tau);
            if res.norm() < 1e-14 {
                break;
            }
            let deriv = p.sheet.sign() / (c(0.0, 2.0 * self.band_integral) * self.sqrt_r(p.lambda));
            let mut step = res / deriv;
            let lim = 0.25 * (p.lambda.im.abs() + 0.1 * span);
            if step.norm() > lim {
                step *= lim / step.norm();
            }
            let next = p.lambda - step;
            // keep to one half-plane chart; crossing a band flips the sheet
            if next.im.signum() != p.lambda.im.signum() && next.im != 0.0 {
                let on_band = (next.re > e1 && next.re < self.e[1]) || (next.re > self.e[2] && next.re < e4);
                p = SurfacePoint { lambda: next, sheet: if on_band { p.sheet.flip() } else { p.sheet } };
            } else {
                p.lambda = next;
            }
        }
        p
    }

    /// Ω0 differential and its normalization data.
    pub fn omega0(&self) -> Omega0 {
        self.omega0
    }

    /// ∫_{E4}^{x} Ω0 on the upper sheet for real x > E4.
    pub fn omega0_right_tail(&self, x: f64) -> f64 {
        let r = self.rule();
        let [e1, e2, e3, e4] = self.e;
        let om = self.omega0;
        // P = −√|R| there
        -quad::sqrt_left(&r, e4, x, |y| om.numerator(y) / ((y - e1) * (y - e2) * (y - e3)).sqrt())
    }

    /// 𝔞-period of Ω0 recomputed with Gauss–Chebyshev nodes (independent rule).
    pub fn omega0_a_period_check(&self, n: usize) -> f64 {
        chebyshev_band(&self.e, 0, n, |x| self.omega0.numerator(x))
    }

    /// 𝔞-period of ζ with Gauss–Chebyshev nodes; equals 1 when normalized.
    pub fn zeta_a_period_check(&self, n: usize) -> Complex64 {
        let raw = chebyshev_band(&self.e, 0, n, |_| 1.0);
        // ∫_𝔞 dλ/√R = 2·(upper side) = 2·i·raw
        c(0.0, 2.0 * raw) / c(0.0, 2.0 * self.band_integral)
    }

    /// Residue of Ω0 at ∞±: coefficient of 1/λ in (λ² + c1λ + c0)/(λ²√(Π(1 − E_j/λ))).
    pub fn omega0_residue_at_infinity(&self) -> f64 {
        self.omega0.c1 + 0.5 * self.e.iter().sum::<f64>()
    }

    /// Velocity of the theta argument per unit time, (1/πi)∫_{E3}^{E2} Ω0 along
    /// the upper side of the gap. The orientation is the one for which the
    /// theta quotients have exactly the two bands as spectrum.
    pub fn time_velocity(&self) -> Complex64 {
        c(0.0, self.omega0_gap / PI)
    }

    /// Candidate constant b̃ = ½ΣE_j − (∫_𝔞 λ dλ/P)/(∫_𝔞 dλ/P).
    pub fn trace_b_candidate(&self) -> f64 {
        let m1 = self.segment_integral(0, |x| x);
        0.5 * self.e.iter().sum::<f64>() - m1 / self.band_integral
    }

    /// Mean of the Dirichlet eigenvalue over the gap oval with the ζ-measure,
    /// ∫_gap λ dλ/√|R| ÷ ∫_gap dλ/√|R|.
    pub fn gap_mean(&self) -> f64 {
        self.segment_integral(1, |x| x) / self.gap_integral
    }

    /// Abel image difference ∫_{∞−}^{∞+} ζ.
    pub fn abel_between_infinities(&self) -> JacobianPoint {
        self.abel_infty
    }

    pub fn riemann_constant(&self) -> JacobianPoint {
        self.riemann_const
    }
}

fn others(e: &[f64; 4], i: usize, x: f64) -> f64 {
    let mut p = 1.0;
    for (k, ek) in e.iter().enumerate() {
        if k != i && k != i + 1 {
            p *= (x - ek).abs();
        }
    }
    p.sqrt()
}

fn seg_integral<F: FnMut(f64) -> f64>(e: &[f64; 4], i: usize, r: &GaussLegendre, mut g: F) -> f64 {
    quad::band(r, e[i], e[i + 1], |x| g(x) / others(e, i, x))
}

fn partial_seg(e: &[f64; 4], i: usize, r: &GaussLegendre, x: f64) -> f64 {
    quad::band_partial(r, e[i], e[i + 1], x, |y| 1.0 / others(e, i, y))
}

fn left_tail<F: FnMut(f64) -> f64>(e: &[f64; 4], r: &GaussLegendre, mut g: F) -> f64 {
    quad::to_minus_infinity(r, e[0], |x| g(x) / ((e[1] - x) * (e[2] - x) * (e[3] - x)).sqrt())
}

fn right_tail<F: FnMut(f64) -> f64>(e: &[f64; 4], r: &GaussLegendre, mut g: F) -> f64 {
    quad::to_plus_infinity(r, e[3], |x| g(x) / ((x - e[0]) * (x - e[1]) * (x - e[2])).sqrt())
}

/// ∫_x^{E1} dy/√|R| for x < E1.
fn partial_left_tail(e: &[f64; 4], r: &GaussLegendre, x: f64) -> f64 {
    let h = |y: f64| 1.0 / ((e[1] - y) * (e[2] - y) * (e[3] - y)).sqrt();
    let scale = e[3] - e[0];
    if e[0] - x <= scale {
        return quad::sqrt_right(r, x, e[0], h);
    }
    let x_near = e[0] - scale;
    let near = quad::sqrt_right(r, x_near, e[0], h);
    near + tail_beyond(r, x_near - x, |d| h(x_near - d) / (e[0] - x_near + d).sqrt())
}

/// ∫_{E4}^{x} dy/√|R| for x > E4.
fn partial_right_tail(e: &[f64; 4], r: &GaussLegendre, x: f64) -> f64 {
    let h = |y: f64| 1.0 / ((y - e[0]) * (y - e[1]) * (y - e[2])).sqrt();
    let scale = e[3] - e[0];
    if x - e[3] <= scale {
        return quad::sqrt_left(r, e[3], x, h);
    }
    let x_near = e[3] + scale;
    let near = quad::sqrt_left(r, e[3], x_near, h);
    near + tail_beyond(r, x - x_near, |d| h(x_near + d) / (x_near + d - e[3]).sqrt())
}

/// ∫_0^len f(d) dd for f decaying like d⁻², using d = L·s/(1−s) with L the
/// distance scale of the near part so far-out lengths stay accurate.
fn tail_beyond<F: Fn(f64) -> f64>(r: &GaussLegendre, len: f64, f: F) -> f64 {
    let s_max = len / (1.0 + len);
    r.integrate(0.0, s_max, |s| {
        let one = 1.0 - s;
        f(s / one) / (one * one)
    })
}

/// Gauss–Chebyshev (first kind) rule for ∫ g/√|R| over segment i.
fn chebyshev_band<F: Fn(f64) -> f64>(e: &[f64; 4], i: usize, n: usize, g: F) -> f64 {
    let (a, b) = (e[i], e[i + 1]);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..n {
        let th = PI * (k as f64 + 0.5) / n as f64;
        let x = mid - half * th.cos();
        s += g(x) / others(e, i, x);
    }
    s * PI / n as f64
}

/// Root of a monotone function on [lo, hi] by bisection.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(mut lo: f64, mut hi: f64, mut f: F) -> f64 {
    let flo = f(lo);
    let rising = f(hi) > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn agm(mut a: f64, mut b: f64) -> f64 {
        for _ in 0..60 {
            let n = 0.5 * (a + b);
            b = (a * b).sqrt();
            a = n;
        }
        a
    }

    /// K(k) = π / (2·AGM(1, √(1−k²)))
    fn ellip_k(k: f64) -> f64 {
        PI / (2.0 * agm(1.0, (1.0 - k * k).sqrt()))
    }

    #[test]
    fn theta_values_and_identities() {
        let i = c(0.0, 1.0);
        assert_abs_diff_eq!(theta(c(0.0, 0.0), i).re, 1.086_434_811_213_308, epsilon = 1e-14);
        let tau = c(0.1, 0.8);
        for v in [c(0.3, 0.1), c(-0.2, 0.5), c(0.0, 2.0)] {
            let t = theta(v, tau);
            assert!((theta(v + 1.0, tau) - t).norm() <= 1e-12 * t.norm());
            assert!((theta(-v, tau) - t).norm() <= 1e-12 * t.norm());
            let shifted = (c(0.0, -PI) * tau - c(0.0, 2.0 * PI) * v).exp() * t;
            assert!((theta(v + tau, tau) - shifted).norm() <= 1e-12 * shifted.norm());
        }
        assert!(theta(0.5 * (c(1.0, 0.0) + tau), tau).norm() < 1e-14);
    }

    #[test]
    fn theta_derivative_by_finite_difference() {
        let tau = c(0.0, 1.3);
        let v = c(0.2, 0.4);
        let h = 1e-6;
        let fd = (theta(v + h, tau) - theta(v - h, tau)) / (2.0 * h);
        let (_, d) = theta_with_derivative(v, tau);
        assert!((fd - d).norm() < 1e-7);
        let [_, d1p, _] = theta_derivs(v + h, tau);
        let [_, d1m, _] = theta_derivs(v - h, tau);
        let [_, _, d2] = theta_derivs(v, tau);
        assert!(((d1p - d1m) / (2.0 * h) - d2).norm() < 1e-6);
    }

    #[test]
    fn symmetric_surface_period_matches_agm() {
        // bands [−b,−a] ∪ [a,b]: with x = y² the band integral becomes K(k'), the gap K(k)
        let (a, b) = (0.4, 1.3);
        let s = TwoBandSurface::new(-b, -a, a, b).unwrap();
        let k = a / b;
        let kp = (1.0 - k * k).sqrt();
        // A = K(k')/b, B = 2K(k)/b  (even integrand over the symmetric gap)
        assert_abs_diff_eq!(s.band_integral, ellip_k(kp) / b, epsilon = 1e-12);
        assert_abs_diff_eq!(s.gap_integral, 2.0 * ellip_k(k) / b, epsilon = 1e-12);
        assert_abs_diff_eq!(s.tau.re, 0.0);
        assert!(s.tau.im > 0.0);
        assert_abs_diff_eq!(s.left_tail, s.right_tail, epsilon = 1e-12);
    }

    #[test]
    fn node_doubling_is_stable() {
        let s = TwoBandSurface::new(-2.8, -2.0, -1.0, 1.0).unwrap();
        let t = TwoBandSurface::with_min_nodes(-2.8, -2.0, -1.0, 1.0, 2 * s.nodes).unwrap();
        assert!((s.tau - t.tau).norm() < 1e-10);
        assert!(lattice_distance(s.abel_infty.v, t.abel_infty.v, s.tau) < 1e-10);
    }

    #[test]
    fn shrinking_band_sends_tau_to_infinity() {
        let mut last = 0.0;
        for w in [1e-1, 1e-3, 1e-6] {
            let s = TwoBandSurface::new(-1.8, -1.8 + w, -1.0, 1.0).unwrap();
            assert!(s.tau.im > last);
            last = s.tau.im;
        }
        assert!(last > 5.0);
        assert!(matches!(TwoBandSurface::new(-1.8, -1.8 + 1e-9, -1.0, 1.0), Err(Error::DegenerateSurface(_))));
        assert!(TwoBandSurface::new(0.0, -1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn zeta_normalization_with_independent_rule() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        let p = s.zeta_a_period_check(4000);
        assert_abs_diff_eq!(p.re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn abel_map_special_points() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        assert!(s.abel_map(SurfacePoint::upper(-2.8)).v.norm() < 1e-15);
        let e2 = s.abel_map(SurfacePoint::upper(-1.7));
        assert!(lattice_distance(e2.v, c(0.5, 0.0), s.tau) < 1e-12);
        let e3 = s.abel_map(SurfacePoint::upper(-1.0));
        assert!(lattice_distance(e3.v, c(0.5, 0.0) + 0.5 * s.tau, s.tau) < 1e-12);
        let e4 = s.abel_map(SurfacePoint::upper(1.0));
        assert!(lattice_distance(e4.v, 0.5 * s.tau, s.tau) < 1e-12);
    }

    #[test]
    fn involution_sums_to_zero() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        for lam in [c(-3.5, 0.0), c(-2.0, 0.0), c(-1.3, 0.0), c(0.2, 0.0), c(4.0, 0.0), c(-0.4, 0.7), c(-2.2, -0.3)] {
            let p = SurfacePoint::upper(lam);
            let sum = s.abel_map(p).v + s.abel_map(p.flip()).v;
            assert!(lattice_distance(sum, c(0.0, 0.0), s.tau) < 1e-12, "{lam}");
        }
    }

    #[test]
    fn real_line_tails_meet_at_infinity() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.left_tail + s.right_tail, s.gap_integral, epsilon = 1e-11);
        let far_right = s.abel_real_upper(1e8);
        let far_left = s.abel_real_upper(-1e8);
        assert!((far_right - far_left).norm() < 1e-3);
    }

    #[test]
    fn continuity_across_the_real_axis_off_bands() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        for x in [-1.4, -3.0, 2.0] {
            let up = s.abel_map(SurfacePoint::upper(c(x, 1e-7))).v;
            let dn = s.abel_map(SurfacePoint::upper(c(x, -1e-7))).v;
            assert!(lattice_distance(up, dn, s.tau) < 1e-5, "{x}");
        }
    }

    #[test]
    fn inversion_round_trip_real_and_complex() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        let pts = [
            SurfacePoint::upper(-2.8),
            SurfacePoint::upper(-1.7),
            SurfacePoint::upper(-2.3),
            SurfacePoint::lower(-2.3),
            SurfacePoint::upper(-1.2),
            SurfacePoint::lower(-1.2),
            SurfacePoint::upper(0.4),
            SurfacePoint::lower(0.4),
            SurfacePoint::upper(-5.0),
            SurfacePoint::lower(3.0),
            SurfacePoint::upper(c(-0.5, 0.4)),
            SurfacePoint::lower(c(-2.0, -0.6)),
        ];
        for p in pts {
            let q = s.jacobi_invert(s.abel_map(p));
            let same = (q.lambda - p.lambda).norm() < 1e-8 && (q.sheet == p.sheet || p.lambda.im == 0.0);
            // branch points are their own flip
            assert!(same, "{p:?} -> {q:?}");
            // u − u(E_j) ∝ √(λ − E_j), so branch points only round-trip in λ
            if s.e.contains(&p.lambda.re) {
                continue;
            }
            let back = s.abel_map(q);
            assert!(lattice_distance(back.v, s.abel_map(p).v, s.tau) < 1e-10, "{p:?} {q:?} {} {}", back.v, s.abel_map(p).v);
        }
        assert_eq!(s.jacobi_invert(JacobianPoint { v: c(0.0, 0.0) }).lambda.re, -2.8);
        let half = s.jacobi_invert(JacobianPoint { v: c(0.5, 0.0) });
        assert_abs_diff_eq!(half.lambda.re, -1.7, epsilon = 1e-12);
    }

    #[test]
    fn omega0_normalization() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.omega0_a_period_check(4000), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.omega0_residue_at_infinity(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn omega0_collapses_to_free_phase() {
        // tiny lower band: Ω0 → −λ dλ/√(λ²−1), whose integral is ½(z − 1/z)
        let s = TwoBandSurface::new(-1.8, -1.8 + 1e-7, -1.0, 1.0).unwrap();
        for x in [1.5, 3.0] {
            let free = -(x * x - 1.0_f64).sqrt();
            assert_abs_diff_eq!(s.omega0_right_tail(x), free, epsilon = 1e-5);
        }
    }

    #[test]
    fn riemann_constant_is_the_theta_zero() {
        let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0).unwrap();
        let xi = s.riemann_constant().v;
        assert!(theta(-xi, s.tau).norm() < 1e-13);
        // θ(A(p) − A(D) − Ξ) along the gap oval changes sign only at p = D
        let d = SurfacePoint::upper(-1.35);
        let ad = s.abel_map(d).v;
        let f = |x: f64| theta(s.abel_map(SurfacePoint::upper(x)).v - ad - xi, s.tau);
        let lo = f(-1.36);
        let hi = f(-1.34);
        assert!(lo.im.abs() < 1e-12 * lo.norm() + 1e-14 || lo.re.abs() < 1e-12 * lo.norm() + 1e-14);
        let pick = |z: Complex64| if z.re.abs() > z.im.abs() { z.re } else { z.im };
        assert!(pick(lo) * pick(hi) < 0.0, "{lo} {hi}");
        assert!(f(-1.35).norm() < 1e-10);
    }

    #[test]
    fn infinities_symmetric_surface() {
        let s = TwoBandSurface::new(-1.3, -0.4, 0.4, 1.3).unwrap();
        // symmetric bands: ∫_{∞−}^{∞+} ζ is a half period (τ/2)
        assert!(lattice_distance(s.abel_infty.v, 0.5 * s.tau, s.tau) < 1e-12);
        // value and its negative agree mod lattice
        assert!(lattice_distance(s.abel_infty.v, -s.abel_infty.v, s.tau) < 1e-12);
    }

    #[test]
    fn infinities_degenerate_gap() {
        let s = TwoBandSurface::new(-2.0, -0.5, -0.5 + 1e-7, 1.0).unwrap();
        // the band integral diverges as the gap closes, so iC_ℓ/A → 0
        let wide = TwoBandSurface::new(-2.0, -0.5, -0.4, 1.0).unwrap();
        assert!(s.abel_infty.v.norm() < 0.5 * wide.abel_infty.v.norm());
        assert!(reduce_centered(s.abel_infty.v, s.tau).norm() < 0.15, "{}", s.abel_infty.v);
    }
}
