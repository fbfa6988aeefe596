//! Direct integration of the Toda lattice in Flaschka variables
//!
//! ```text
//! ḃ(n) = 2(a(n)² − a(n−1)²),   ȧ(n) = a(n)(b(n+1) − b(n))
//! ```
//!
//! on a finite window whose two outermost sites are clamped to the
//! background values.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of sites next to each clamped edge watched by the boundary monitor.
const MONITORED_SITES: usize = 3;

/// Constant Jacobi operator coefficients; the spectrum is `[b − 2a, b + 2a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub a: f64,
    pub b: f64,
}

impl Background {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid(format!("background needs a > 0 and finite b, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// The normalized right background (1/2, 0) with spectrum [−1, 1].
    pub const fn unit() -> Self {
        Self { a: 0.5, b: 0.0 }
    }

    pub fn inf(&self) -> f64 {
        self.b - 2.0 * self.a
    }

    pub fn sup(&self) -> f64 {
        self.b + 2.0 * self.a
    }

    pub fn spectrum(&self) -> (f64, f64) {
        (self.inf(), self.sup())
    }
}

/// Snapshot of the lattice on the window `n_min..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    pub n_min: i64,
    pub n_max: i64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub left: Background,
    pub right: Background,
}

impl LatticeState {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }

    fn index(&self, n: i64) -> Option<usize> {
        (n >= self.n_min && n <= self.n_max).then(|| (n - self.n_min) as usize)
    }

    /// a(n), extended by the backgrounds outside the window.
    pub fn a_at(&self, n: i64) -> f64 {
        match self.index(n) {
            Some(i) => self.a[i],
            None if n < self.n_min => self.left.a,
            None => self.right.a,
        }
    }

    /// b(n), extended by the backgrounds outside the window.
    pub fn b_at(&self, n: i64) -> f64 {
        match self.index(n) {
            Some(i) => self.b[i],
            None if n < self.n_min => self.left.b,
            None => self.right.b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < self.n_min || (self.n_max - self.n_min + 1) < 4 {
            return Err(Error::WindowTooSmall {
                n_min: self.n_min,
                n_max: self.n_max,
                reason: "window length must be at least 4".into(),
            });
        }
        let len = (self.n_max - self.n_min + 1) as usize;
        if self.a.len() != len || self.b.len() != len {
            return Err(Error::Invalid("coefficient lengths do not match the window".into()));
        }
        if let Some(i) = self.a.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Invalid(format!("a({}) = {} is not positive", self.n_min + i as i64, self.a[i])));
        }
        if self.b.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("b contains non-finite values".into()));
        }
        Ok(())
    }

    /// Mirror image under n ↦ −n, a(n) ↦ a(−n−1), b ↦ −b. The result solves the
    /// Toda equations whenever `self` does; backgrounds swap and b changes sign.
    pub fn reflect(&self) -> LatticeState {
        let n_min = -self.n_max;
        let n_max = -self.n_min;
        let a = (n_min..=n_max).map(|m| self.a_at(-m - 1)).collect();
        let b = (n_min..=n_max).map(|m| -self.b_at(-m)).collect();
        LatticeState {
            n_min,
            n_max,
            a,
            b,
            t: self.t,
            left: Background { a: self.right.a, b: -self.right.b },
            right: Background { a: self.left.a, b: -self.left.b },
        }
    }

    /// Affine spectral normalization λ ↦ (λ − β)/s applied to the coefficients.
    pub fn scaled(&self, shift: f64, scale: f64) -> LatticeState {
        let map = |bg: Background| Background { a: bg.a / scale, b: (bg.b - shift) / scale };
        LatticeState {
            n_min: self.n_min,
            n_max: self.n_max,
            a: self.a.iter().map(|x| x / scale).collect(),
            b: self.b.iter().map(|x| (x - shift) / scale).collect(),
            t: self.t * scale,
            left: map(self.left),
            right: map(self.right),
        }
    }
}

/// Pure step: right background for n ≥ 0, left background for n < 0, t = 0.
pub fn make_step_initial(left: Background, right: Background, window: (i64, i64)) -> Result<LatticeState> {
    let (n_min, n_max) = window;
    if n_min > -2 || n_max < 2 {
        return Err(Error::WindowTooSmall {
            n_min,
            n_max,
            reason: "window must contain n = 0 with margin >= 2 on each side".into(),
        });
    }
    Background::new(left.a, left.b)?;
    Background::new(right.a, right.b)?;
    let a = (n_min..=n_max).map(|n| if n >= 0 { right.a } else { left.a }).collect();
    let b = (n_min..=n_max).map(|n| if n >= 0 { right.b } else { left.b }).collect();
    let state = LatticeState { n_min, n_max, a, b, t: 0.0, left, right };
    state.validate()?;
    Ok(state)
}

/// Time derivative (da, db). The two outermost sites are clamped (zero derivative).
pub fn toda_rhs(state: &LatticeState) -> (Vec<f64>, Vec<f64>) {
    let len = state.len();
    let mut da = vec![0.0; len];
    let mut db = vec![0.0; len];
    rhs_into(&state.a, &state.b, &mut da, &mut db);
    (da, db)
}

fn rhs_into(a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) {
    let len = a.len();
    da[0] = 0.0;
    db[0] = 0.0;
    da[len - 1] = 0.0;
    db[len - 1] = 0.0;
    for i in 1..len - 1 {
        db[i] = 2.0 * (a[i] * a[i] - a[i - 1] * a[i - 1]);
        da[i] = a[i] * (b[i + 1] - b[i]);
    }
}

/// Tolerances and limits for [`evolve`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10 }
    }
}

/// Advance `state` to `t_end` with adaptive Dormand–Prince 5(4) steps.
pub fn evolve(state: &LatticeState, t_end: f64, rtol: f64, atol: f64) -> Result<LatticeState> {
    let mut out = evolve_snapshots(state, &[t_end], rtol, atol)?;
    Ok(out.pop().expect("one snapshot requested"))
}

/// Advance through an increasing list of output times, returning a snapshot at each.
pub fn evolve_snapshots(state: &LatticeState, times: &[f64], rtol: f64, atol: f64) -> Result<Vec<LatticeState>> {
    state.validate()?;
    if !(rtol > 0.0) || !(atol > 0.0) {
        return Err(Error::Invalid("tolerances must be positive".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t0| t0 < state.t) {
        return Err(Error::Invalid("output times must be increasing and not before the state time".into()));
    }
    let len = state.len();
    let mut y = Vec::with_capacity(2 * len);
    y.extend_from_slice(&state.a);
    y.extend_from_slice(&state.b);
    // clamp the edges
    y[0] = state.left.a;
    y[len] = state.left.b;
    y[len - 1] = state.right.a;
    y[2 * len - 1] = state.right.b;

    let mut stepper = Dopri::new(2 * len, rtol, atol);
    let mut t = state.t;
    let mut h: f64 = 0.01;
    let mut out = Vec::with_capacity(times.len());
    for &t_out in times {
        while t < t_out {
            let h_try = h.min(t_out - t);
            let last = h_try >= t_out - t;
            match stepper.step(&mut y, t, h_try, len) {
                StepResult::Accepted { h_next } => {
                    t = if last { t_out } else { t + h_try };
                    h = h_next;
                    check_boundary(&y, len, state, t, atol)?;
                }
                StepResult::Rejected { h_next } => {
                    h = h_next;
                    if h < 1e-12 * t.abs().max(1.0) {
                        return Err(Error::StepUnderflow { t, h });
                    }
                }
            }
        }
        let a = y[..len].to_vec();
        if let Some(i) = a.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::Invalid(format!("a lost positivity at site {}", state.n_min + i as i64)));
        }
        out.push(LatticeState {
            n_min: state.n_min,
            n_max: state.n_max,
            a,
            b: y[len..].to_vec(),
            t,
            left: state.left,
            right: state.right,
        });
    }
    Ok(out)
}

fn check_boundary(y: &[f64], len: usize, state: &LatticeState, t: f64, atol: f64) -> Result<()> {
    let limit = 100.0 * atol;
    let k = MONITORED_SITES.min(len / 2 - 1);
    for i in 1..=k {
        let dl = (y[i] - state.left.a).abs().max((y[len + i] - state.left.b).abs());
        if dl > limit {
            return Err(Error::BoundaryReached { t, site: state.n_min + i as i64, deviation: dl });
        }
        let j = len - 1 - i;
        let dr = (y[j] - state.right.a).abs().max((y[len + j] - state.right.b).abs());
        if dr > limit {
            return Err(Error::BoundaryReached { t, site: state.n_min + j as i64, deviation: dr });
        }
    }
    Ok(())
}

enum StepResult {
    Accepted { h_next: f64 },
    Rejected { h_next: f64 },
}

// Dormand–Prince 5(4) tableau (autonomous system, nodes c_i unused).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (error weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Dopri {
    rtol: f64,
    atol: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    fsal_valid: bool,
}

impl Dopri {
    fn new(dim: usize, rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
            fsal_valid: false,
        }
    }

    fn eval(y: &[f64], out: &mut [f64], len: usize) {
        let (a, b) = y.split_at(len);
        let (da, db) = out.split_at_mut(len);
        rhs_into(a, b, da, db);
    }

    #[allow(clippy::needless_range_loop)]
    fn stage(&mut self, y: &[f64], h: f64, coeffs: &[f64], target: usize, len: usize) {
        let dim = y.len();
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, c) in coeffs.iter().enumerate() {
                acc += c * self.k[j][i];
            }
            self.tmp[i] = y[i] + h * acc;
        }
        let (tmp, k) = (&self.tmp, &mut self.k[target]);
        Self::eval(tmp, k, len);
    }

    // the stage vectors are indexed in lockstep
    #[allow(clippy::needless_range_loop)]
    fn step(&mut self, y: &mut [f64], _t: f64, h: f64, len: usize) -> StepResult {
        if !self.fsal_valid {
            let k0 = &mut self.k[0];
            Self::eval(y, k0, len);
            self.fsal_valid = true;
        }
        self.stage(y, h, &[A21], 1, len);
        self.stage(y, h, &[A31, A32], 2, len);
        self.stage(y, h, &[A41, A42, A43], 3, len);
        self.stage(y, h, &[A51, A52, A53, A54], 4, len);
        self.stage(y, h, &[A61, A62, A63, A64, A65], 5, len);
        let dim = y.len();
        for i in 0..dim {
            self.y_new[i] = y[i]
                + h * (B1 * self.k[0][i] + B3 * self.k[2][i] + B4 * self.k[3][i] + B5 * self.k[4][i] + B6 * self.k[5][i]);
        }
        {
            let (yn, k6) = (&self.y_new, &mut self.k[6]);
            Self::eval(yn, k6, len);
        }
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * self.k[0][i] + E3 * self.k[2][i] + E4 * self.k[3][i] + E5 * self.k[4][i] + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let sc = self.atol + self.rtol * y[i].abs().max(self.y_new[i].abs());
            err = err.max(e.abs() / sc);
        }
        if err <= 1.0 && err.is_finite() {
            y.copy_from_slice(&self.y_new);
            self.k.swap(0, 6);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            StepResult::Accepted { h_next: h * fac }
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            StepResult::Rejected { h_next: h * fac }
        }
    }
}

/// Finite-difference check of the telescoping identities along a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    /// max over snapshot pairs of |Δ Σ b / Δt − 2(a_r² − a_ℓ²)|
    pub b_sum_drift: f64,
    /// max over snapshot pairs of |Δ Σ log a / Δt − (b_r − b_ℓ)|
    pub log_a_sum_drift: f64,
    pub b_rate_target: f64,
    pub log_a_rate_target: f64,
    pub window_sites: usize,
}

pub fn conservation_report(trajectory: &[LatticeState]) -> Result<ConservationReport> {
    if trajectory.len() < 2 {
        return Err(Error::Invalid("conservation report needs at least two snapshots".into()));
    }
    let first = &trajectory[0];
    if trajectory.iter().any(|s| s.n_min != first.n_min || s.n_max != first.n_max) {
        return Err(Error::MismatchedWindows);
    }
    let (l, r) = (first.left, first.right);
    let b_target = 2.0 * (r.a * r.a - l.a * l.a);
    let la_target = r.b - l.b;
    let sums: Vec<(f64, f64, f64)> = trajectory
        .iter()
        .map(|s| (s.t, s.b.iter().sum::<f64>(), s.a.iter().map(|x| x.ln()).sum::<f64>()))
        .collect();
    let mut b_drift: f64 = 0.0;
    let mut la_drift: f64 = 0.0;
    for w in sums.windows(2) {
        let dt = w[1].0 - w[0].0;
        if dt <= 0.0 {
            continue;
        }
        b_drift = b_drift.max(((w[1].1 - w[0].1) / dt - b_target).abs());
        la_drift = la_drift.max(((w[1].2 - w[0].2) / dt - la_target).abs());
    }
    Ok(ConservationReport {
        b_sum_drift: b_drift,
        log_a_sum_drift: la_drift,
        b_rate_target: b_target,
        log_a_rate_target: la_target,
        window_sites: first.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub t: f64,
    pub a_left: f64,
    pub b_left: f64,
    pub a_right: f64,
    pub b_right: f64,
    pub rtol: f64,
    pub atol: f64,
}

/// Writes `n,a,b` CSV plus the JSON sidecar next to it.
pub fn write_snapshot(state: &LatticeState, tol: Tolerances, csv_path: &Path, json_path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    writeln!(f, "n,a,b")?;
    for (i, n) in state.sites().enumerate() {
        writeln!(f, "{},{:.17e},{:.17e}", n, state.a[i], state.b[i])?;
    }
    f.flush()?;
    let meta = SnapshotMeta {
        t: state.t,
        a_left: state.left.a,
        b_left: state.left.b,
        a_right: state.right.a,
        b_right: state.right.b,
        rtol: tol.rtol,
        atol: tol.atol,
    };
    std::fs::write(json_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
