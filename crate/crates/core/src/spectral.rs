//! Spectral quantities of the initial Jacobi operator: the Joukovski map,
//! the phase function, Jost solutions and the right scattering data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Background, LatticeState};

/// Scattering grids stay this far away from every band edge.
pub const EDGE_EXCLUSION: f64 = 1e-6;

const RESONANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sheet {
    Upper,
    Lower,
}

impl Sheet {
    pub fn flip(self) -> Self {
        match self {
            Sheet::Upper => Sheet::Lower,
            Sheet::Lower => Sheet::Upper,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Sheet::Upper => 1.0,
            Sheet::Lower => -1.0,
        }
    }
}

/// A point p = (λ, ±) of a two-sheeted surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub lambda: Complex64,
    pub sheet: Sheet,
}

impl SurfacePoint {
    pub fn upper(lambda: impl Into<Complex64>) -> Self {
        Self { lambda: lambda.into(), sheet: Sheet::Upper }
    }

    pub fn lower(lambda: impl Into<Complex64>) -> Self {
        Self { lambda: lambda.into(), sheet: Sheet::Lower }
    }

    /// p ↦ p*.
    pub fn flip(self) -> Self {
        Self { lambda: self.lambda, sheet: self.sheet.flip() }
    }
}

/// z with λ = b + a(z + 1/z) and |z| ≤ 1; on the band the limit from the
/// upper half-plane is taken.
pub fn joukovski(lambda: Complex64, background: Background) -> Complex64 {
    let w = (lambda - background.b) / (2.0 * background.a);
    if lambda.im == 0.0 && w.re.abs() <= 1.0 {
        return Complex64::new(w.re, -(1.0 - w.re * w.re).sqrt());
    }
    let z = w - (w * w - 1.0).sqrt();
    if z.norm() > 1.0 {
        z.inv()
    } else {
        z
    }
}

/// Φ(p, ξ) = ½(z − 1/z) + ξ log z for the normalized right background,
/// continued to the lower sheet as an odd function.
pub fn phase_phi(p: SurfacePoint, xi: f64) -> Result<Complex64> {
    let z = joukovski(p.lambda, Background::unit());
    if z.norm() == 0.0 || !p.lambda.is_finite() {
        return Err(Error::PoleAtInfinity);
    }
    let phi = 0.5 * (z - z.inv()) + xi * z.ln();
    Ok(phi * p.sheet.sign())
}

/// Jost solutions on a range of sites.
#[derive(Debug, Clone)]
pub struct JostSolutions {
    pub n_min: i64,
    /// solution equal to z_r^n to the right of the perturbation
    pub psi: Vec<Complex64>,
    /// solution equal to z_ℓ^{−n} to the left of the perturbation
    pub psi_l: Vec<Complex64>,
    pub z_right: Complex64,
    pub z_left: Complex64,
}

impl JostSolutions {
    pub fn n_max(&self) -> i64 {
        self.n_min + self.psi.len() as i64 - 1
    }

    pub fn psi_at(&self, n: i64) -> Complex64 {
        self.psi[(n - self.n_min) as usize]
    }

    pub fn psi_l_at(&self, n: i64) -> Complex64 {
        self.psi_l[(n - self.n_min) as usize]
    }
}

/// Cutoffs where the free solutions are imposed: all coefficients with index
/// ≤ `left` equal the left background and all with index ≥ `right` the right one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cutoffs {
    pub left: i64,
    pub right: i64,
}

impl Cutoffs {
    /// Tightest cutoffs for a state whose coefficients equal the backgrounds
    /// outside a finite core.
    pub fn detect(state: &LatticeState) -> Self {
        let is_left = |n: i64| state.a_at(n) == state.left.a && state.b_at(n) == state.left.b;
        let is_right = |n: i64| state.a_at(n) == state.right.a && state.b_at(n) == state.right.b;
        let mut left = state.n_min - 1;
        while left < state.n_max && is_left(left + 1) {
            left += 1;
        }
        let mut right = state.n_max + 1;
        while right > state.n_min && is_right(right - 1) {
            right -= 1;
        }
        Self { left, right }
    }
}

fn edge_distance(lambda: f64, state: &LatticeState) -> f64 {
    let (l0, l1) = state.left.spectrum();
    let (r0, r1) = state.right.spectrum();
    [l0, l1, r0, r1].iter().map(|e| (lambda - e).abs()).fold(f64::INFINITY, f64::min)
}

/// Jost solutions of a(n−1)y(n−1) + b(n)y(n) + a(n)y(n+1) = λy(n) at real λ,
/// on `n_range`, with automatically detected cutoffs.
pub fn jost_solutions(state0: &LatticeState, lambda: f64, n_range: (i64, i64)) -> Result<JostSolutions> {
    let d = edge_distance(lambda, state0);
    if d < EDGE_EXCLUSION {
        return Err(Error::BandEdge { lambda, distance: d });
    }
    jost_with_cutoffs(state0, lambda, n_range, Cutoffs::detect(state0))
}

/// Same as [`jost_solutions`] with explicit cutoffs (which must lie in the
/// background regions of the state).
pub fn jost_with_cutoffs(
    state0: &LatticeState,
    lambda: f64,
    n_range: (i64, i64),
    cut: Cutoffs,
) -> Result<JostSolutions> {
    let (lo, hi) = n_range;
    if hi < lo + 1 {
        return Err(Error::Invalid("jost range needs at least two sites".into()));
    }
    let lam = Complex64::new(lambda, 0.0);
    let zr = joukovski(lam, state0.right);
    let zl = joukovski(lam, state0.left);
    let a = |n: i64| state0.a_at(n);
    let b = |n: i64| state0.b_at(n);

    // ψ: free for n ≥ cut.right, backward recurrence below.
    let start_r = cut.right.max(lo);
    let top = hi.max(start_r + 1);
    let mut psi_full = vec![Complex64::new(0.0, 0.0); (top - lo + 1) as usize];
    let idx = |n: i64| (n - lo) as usize;
    for n in start_r..=top {
        psi_full[idx(n)] = zr.powi(n as i32);
    }
    if start_r > lo {
        // ensure the two seed values are the free solution
        psi_full[idx(start_r)] = zr.powi(start_r as i32);
        psi_full[idx(start_r + 1)] = zr.powi((start_r + 1) as i32);
        let mut n = start_r;
        while n > lo {
            let y = ((lam - b(n)) * psi_full[idx(n)] - a(n) * psi_full[idx(n + 1)]) / a(n - 1);
            psi_full[idx(n - 1)] = y;
            n -= 1;
        }
    }
    let psi: Vec<Complex64> = psi_full[..(hi - lo + 1) as usize].to_vec();

    // ψ_ℓ: free for n ≤ cut.left, forward recurrence above.
    let start_l = cut.left.min(hi);
    let bottom = lo.min(start_l - 1);
    let mut psil_full = vec![Complex64::new(0.0, 0.0); (hi - bottom + 1) as usize];
    let jdx = |n: i64| (n - bottom) as usize;
    for n in bottom..=start_l {
        psil_full[jdx(n)] = zl.powi(-(n as i32));
    }
    let mut n = start_l;
    while n < hi {
        let y = ((lam - b(n)) * psil_full[jdx(n)] - a(n - 1) * psil_full[jdx(n - 1)]) / a(n);
        psil_full[jdx(n + 1)] = y;
        n += 1;
    }
    let psi_l: Vec<Complex64> = psil_full[(lo - bottom) as usize..].to_vec();

    if psi.iter().chain(&psi_l).any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("Jost recurrence overflowed at lambda = {lambda}")));
    }
    Ok(JostSolutions { n_min: lo, psi, psi_l, z_right: zr, z_left: zl })
}

/// W(f, g)(n) = a(n)(f(n)g(n+1) − f(n+1)g(n)).
pub fn wronskian(state: &LatticeState, f: &[Complex64], g: &[Complex64], n_min: i64, n: i64) -> Complex64 {
    let i = (n - n_min) as usize;
    state.a_at(n) * (f[i] * g[i + 1] - f[i + 1] * g[i])
}

/// Which parts of the continuous spectrum contain λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Multiplicity {
    /// I_ℓ ∩ I_r
    Two,
    /// I_r \ I_ℓ
    RightOnly,
    /// I_ℓ \ I_r
    LeftOnly,
    /// outside both spectra
    Zero,
}

impl Multiplicity {
    pub fn of(lambda: f64, left: Background, right: Background) -> Self {
        let in_l = lambda > left.inf() && lambda < left.sup();
        let in_r = lambda > right.inf() && lambda < right.sup();
        match (in_l, in_r) {
            (true, true) => Multiplicity::Two,
            (false, true) => Multiplicity::RightOnly,
            (true, false) => Multiplicity::LeftOnly,
            (false, false) => Multiplicity::Zero,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Multiplicity::Two => 2,
            Multiplicity::RightOnly | Multiplicity::LeftOnly => 1,
            Multiplicity::Zero => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScatteringData {
    pub lambda: f64,
    /// right transmission coefficient (upper-sheet limit)
    pub t: Complex64,
    /// right reflection coefficient, only on I_r
    pub r: Option<Complex64>,
    /// only on the multiplicity-one part of I_ℓ
    pub chi: Option<f64>,
    pub multiplicity: Multiplicity,
}

/// Sites around the perturbation core used for Wronskians.
fn core_range(state0: &LatticeState) -> (i64, i64) {
    let c = Cutoffs::detect(state0);
    let lo = c.left.min(c.right) - 2;
    let hi = c.right.max(c.left) + 2;
    (lo, hi)
}

/// Right scattering data at a real λ of the continuous spectrum.
pub fn scattering_data(state0: &LatticeState, lambda: f64) -> Result<ScatteringData> {
    let d = edge_distance(lambda, state0);
    if d < EDGE_EXCLUSION {
        return Err(Error::BandEdge { lambda, distance: d });
    }
    let mult = Multiplicity::of(lambda, state0.left, state0.right);
    if mult == Multiplicity::Zero {
        return Err(Error::Invalid(format!("lambda = {lambda} is outside the continuous spectrum")));
    }
    scattering_unchecked(state0, lambda, mult)
}

fn scattering_unchecked(state0: &LatticeState, lambda: f64, mult: Multiplicity) -> Result<ScatteringData> {
    let range = core_range(state0);
    let js = jost_with_cutoffs(state0, lambda, range, Cutoffs::detect(state0))?;
    let n0 = range.0;
    let w = wronskian(state0, &js.psi_l, &js.psi, n0, n0);
    if w.norm() < RESONANCE_FLOOR {
        return Err(Error::Resonance { lambda, wronskian: w.norm() });
    }
    let zr = js.z_right;
    let t = state0.right.a * (zr - zr.inv()) / w;
    let r = match mult {
        Multiplicity::Two | Multiplicity::RightOnly => {
            let bar: Vec<Complex64> = js.psi.iter().map(|v| v.conj()).collect();
            Some(-wronskian(state0, &js.psi_l, &bar, n0, n0) / w)
        }
        _ => None,
    };
    let chi = (mult == Multiplicity::LeftOnly).then(|| chi_from_t(lambda, state0.left, state0.right, t));
    Ok(ScatteringData { lambda, t, r, chi, multiplicity: mult })
}

/// −√|((x − b_ℓ)² − 4a_ℓ²)/((x − b_r)² − 4a_r²)| · |T|².
pub fn chi_from_t(x: f64, left: Background, right: Background, t: Complex64) -> f64 {
    let num = (x - left.b).powi(2) - 4.0 * left.a * left.a;
    let den = (x - right.b).powi(2) - 4.0 * right.a * right.a;
    -(num / den).abs().sqrt() * t.norm_sqr()
}

/// χ(x) on the interior of I_ℓ \ I_r.
pub fn chi(state0: &LatticeState, x: f64) -> Result<f64> {
    if Multiplicity::of(x, state0.left, state0.right) != Multiplicity::LeftOnly {
        return Err(Error::Invalid(format!("chi is defined on I_l \\ I_r only, got x = {x}")));
    }
    let d = edge_distance(x, state0);
    if d < EDGE_EXCLUSION {
        return Err(Error::BandEdge { lambda: x, distance: d });
    }
    Ok(scattering_unchecked(state0, x, Multiplicity::LeftOnly)?.chi.expect("left-only point"))
}

/// χ without the edge exclusion, for quadrature nodes that approach band edges.
pub fn chi_unchecked(state0: &LatticeState, x: f64) -> Result<f64> {
    Ok(scattering_unchecked(state0, x, Multiplicity::LeftOnly)?.chi.expect("left-only point"))
}

/// Transmission and reflection of a pure step by matching the two free
/// solutions across n = 0 (a 2×2 linear solve). R is `None` off I_r.
pub fn pure_step_scattering(left: Background, right: Background, lambda: f64) -> (Complex64, Option<Complex64>) {
    let lam = Complex64::new(lambda, 0.0);
    let zr = joukovski(lam, right);
    let zl = joukovski(lam, left);
    // ψ_ℓ(0) = 1, ψ_ℓ(−1) = z_ℓ; ψ(0) = 1, ψ(−1) = a_r/(a_ℓ z_r); ψ̄(−1) = a_r z_r/(a_ℓ) on I_r
    let psi_l = [Complex64::new(1.0, 0.0), zl];
    let psi = [Complex64::new(1.0, 0.0), right.a / (left.a * zr)];
    let w = left.a * (psi_l[1] * psi[0] - psi_l[0] * psi[1]);
    let t = right.a * (zr - zr.inv()) / w;
    let on_right = lambda > right.inf() && lambda < right.sup();
    if !on_right {
        return (t, None);
    }
    let bar = [Complex64::new(1.0, 0.0), right.a * zr / left.a];
    // T ψ_ℓ(k) − R ψ(k) = ψ̄(k), k = 0, −1
    let det = psi_l[0] * (-psi[1]) - (-psi[0]) * psi_l[1];
    let t2 = (bar[0] * (-psi[1]) - (-psi[0]) * bar[1]) / det;
    let r2 = (psi_l[0] * bar[1] - bar[0] * psi_l[1]) / det;
    debug_assert!((t2 - t).norm() < 1e-8 * t.norm().max(1.0));
    (t2, Some(r2))
}

/// Number of eigenvalues below λ of the finite Jacobi matrix with diagonal `b`
/// and off-diagonal `a` (length `b.len() − 1`), by the Sturm sequence of pivots.
pub fn eigenvalue_count_below(a: &[f64], b: &[f64], lambda: f64) -> usize {
    assert_eq!(a.len() + 1, b.len(), "off-diagonal must be one shorter than the diagonal");
    let mut count = 0;
    let mut d = 1.0;
    for (i, &bi) in b.iter().enumerate() {
        let off = if i == 0 { 0.0 } else { a[i - 1] * a[i - 1] / d };
        d = bi - lambda - off;
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}
