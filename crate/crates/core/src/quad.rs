//! Gauss–Legendre quadrature with the endpoint substitutions used for the
//! square-root singularities of hyperelliptic integrands.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Default node count for a single panel.
pub const DEFAULT_NODES: usize = 64;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n from the Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared, cached rule with `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_a^b f(x) dx.
    pub fn integrate<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * (w * half);
        }
        acc
    }

    /// ∫_0^1 f(g(s)) g'(s) ds with the cubic endpoint grading g; clusters
    /// nodes at both ends so logarithmic and sqrt endpoint behaviour converges fast.
    pub fn integrate_graded<T, F>(&self, mut f: F) -> T
    where
        T: Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        self.integrate(0.0, 1.0, |s| {
            let (g, dg) = grade(s);
            f(g) * dg
        })
    }
}

/// Legendre P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn grade(s: f64) -> (f64, f64) {
    let u = s * s * s;
    let v = (1.0 - s) * (1.0 - s) * (1.0 - s);
    let den = u + v;
    let g = u / den;
    let dg = 3.0 * s * s * (1.0 - s) * (1.0 - s) / (den * den);
    (g, dg)
}

/// ∫_a^b f(x) / √((x−a)(b−x)) dx via x = mid − half·cos θ and graded nodes in θ.
pub fn band<T, F>(rule: &GaussLegendre, a: f64, b: f64, mut f: F) -> T
where
    T: Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    rule.integrate_graded(|g| f(band_point(a, b, PI * g)) * PI)
}

/// mid − half·cos θ, evaluated without cancellation near either end.
fn band_point(a: f64, b: f64, theta: f64) -> f64 {
    let w = b - a;
    if theta < 0.5 * PI {
        let s = (0.5 * theta).sin();
        a + w * s * s
    } else {
        let c = (0.5 * theta).cos();
        b - w * c * c
    }
}

/// ∫_a^x f(y) / √((y−a)(b−y)) dy for a ≤ x ≤ b.
pub fn band_partial<T, F>(rule: &GaussLegendre, a: f64, b: f64, x: f64, mut f: F) -> T
where
    T: Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: FnMut(f64) -> T,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let c = ((mid - x) / half).clamp(-1.0, 1.0);
    let theta_x = c.acos();
    if theta_x == 0.0 {
        return T::default();
    }
    rule.integrate_graded(|g| {
        f(band_point(a, b, theta_x * g)) * theta_x
    })
}

/// ∫_{−∞}^{e} f(x)/√(e−x) dx, for f = O(|x|^{-1/2-δ}) at −∞.
pub fn to_minus_infinity<F: FnMut(f64) -> f64>(rule: &GaussLegendre, e: f64, mut f: F) -> f64 {
    rule.integrate_graded(|g| {
        let phi = 0.5 * PI * g;
        let tn = phi.tan();
        let sec2 = 1.0 + tn * tn;
        if !sec2.is_finite() {
            return 0.0;
        }
        f(e - tn * tn) * 2.0 * sec2 * 0.5 * PI
    })
}

/// ∫_{e}^{∞} f(x)/√(x−e) dx.
pub fn to_plus_infinity<F: FnMut(f64) -> f64>(rule: &GaussLegendre, e: f64, mut f: F) -> f64 {
    to_minus_infinity(rule, -e, |y| f(-y))
}

/// ∫_a^b f(x)/√(b−x) dx via x = b − s².
pub fn sqrt_right<F: FnMut(f64) -> f64>(rule: &GaussLegendre, a: f64, b: f64, mut f: F) -> f64 {
    let s_max = (b - a).sqrt();
    rule.integrate(0.0, s_max, |s| 2.0 * f(b - s * s))
}

/// ∫_a^b f(x)/√(x−a) dx via x = a + s².
pub fn sqrt_left<F: FnMut(f64) -> f64>(rule: &GaussLegendre, a: f64, b: f64, mut f: F) -> f64 {
    let s_max = (b - a).sqrt();
    rule.integrate(0.0, s_max, |s| 2.0 * f(a + s * s))
}

/// Repeats `eval(nodes)` with doubled node counts until two successive
/// values agree to `tol` (relative to max(1, |value|)). Returns the finer value.
pub fn converge<F: FnMut(&GaussLegendre) -> f64>(start: usize, tol: f64, max_nodes: usize, mut eval: F) -> f64 {
    let mut n = start.max(4);
    let mut prev = eval(&GaussLegendre::cached(n));
    while n < max_nodes {
        n *= 2;
        let cur = eval(&GaussLegendre::cached(n));
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return cur;
        }
        prev = cur;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 64, 257] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(8);
        let v: f64 = r.integrate(0.0, 2.0, |x| x.powi(15));
        assert_abs_diff_eq!(v, 2f64.powi(16) / 16.0, epsilon = 1e-9);
    }

    #[test]
    fn band_chebyshev_weight() {
        let r = GaussLegendre::new(64);
        let v: f64 = band(&r, -1.0, 3.0, |_| 1.0);
        assert_abs_diff_eq!(v, PI, epsilon = 1e-13);
        let m: f64 = band(&r, -1.0, 3.0, |x| x);
        assert_abs_diff_eq!(m, PI, epsilon = 1e-12);
    }

    #[test]
    fn band_partial_half_way() {
        let r = GaussLegendre::new(64);
        let v: f64 = band_partial(&r, 0.0, 2.0, 1.0, |_| 1.0);
        assert_abs_diff_eq!(v, 0.5 * PI, epsilon = 1e-13);
    }

    #[test]
    fn log_endpoint_converges() {
        // ∫_0^1 log(x)/sqrt(x(1-x)) dx = -2π log 2
        let r = GaussLegendre::new(96);
        let v: f64 = band(&r, 0.0, 1.0, |x: f64| x.ln());
        assert_abs_diff_eq!(v, -2.0 * PI * 2f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn infinite_tail() {
        // ∫_{-∞}^0 dx / ((1-x) sqrt(-x)) = π
        let r = GaussLegendre::new(64);
        let v = to_minus_infinity(&r, 0.0, |x| 1.0 / (1.0 - x));
        assert_abs_diff_eq!(v, PI, epsilon = 1e-10);
        let w = to_plus_infinity(&r, 0.0, |x| 1.0 / (1.0 + x));
        assert_abs_diff_eq!(w, PI, epsilon = 1e-10);
    }

    #[test]
    fn sqrt_substitutions() {
        let r = GaussLegendre::new(32);
        // ∫_0^1 1/sqrt(1-x) = 2
        assert_abs_diff_eq!(sqrt_right(&r, 0.0, 1.0, |_| 1.0), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(sqrt_left(&r, 0.0, 1.0, |_| 1.0), 2.0, epsilon = 1e-13);
    }
}
