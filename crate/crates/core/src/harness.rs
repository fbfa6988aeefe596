//! Experiment orchestration: simulate, evaluate the asymptotic model on the
//! same grid, and reduce the difference to per-zone error tables, decay fits
//! and plots.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{AsymptoticModel, ChiSource, TwoBandModel};
use crate::error::{Error, Result};
use crate::lattice::{self, Background, LatticeState, Tolerances};
use crate::riemann::{lattice_distance, theta, TwoBandSurface};
use crate::spectral::{self, SurfacePoint};
use crate::whitham::{ScenarioKind, ZoneKind};

pub const DEFAULT_EPS_ZONE: f64 = 0.05;
/// Default bound on the sup error in zones with an oscillating leading term.
pub const DEFAULT_SUP_THRESHOLD: f64 = 0.1;
/// Sites added beyond the fastest ray when sizing the default window.
const WINDOW_PAD: i64 = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub left: Background,
    pub right: Background,
    pub times: Vec<f64>,
    /// explicit window; sized from the fastest ray at the last time otherwise
    pub window: Option<(i64, i64)>,
    pub tol: Tolerances,
    /// half-width of the excluded neighborhood of each ray, in ξ
    pub eps_zone: f64,
    pub sup_threshold: f64,
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
}

impl ExperimentConfig {
    pub fn new(left: Background, right: Background, times: Vec<f64>) -> Self {
        Self {
            left,
            right,
            times,
            window: None,
            tol: Tolerances::default(),
            eps_zone: DEFAULT_EPS_ZONE,
            sup_threshold: DEFAULT_SUP_THRESHOLD,
            out_dir: None,
            plots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Background::new(self.left.a, self.left.b)?;
        Background::new(self.right.a, self.right.b)?;
        if !(self.eps_zone > 0.0) {
            return Err(Error::Invalid(format!("zone margin must be positive, got {}", self.eps_zone)));
        }
        if self.times.is_empty() {
            return Err(Error::Invalid("no output times".into()));
        }
        if self.times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid(format!("times must be positive and increasing: {:?}", self.times)));
        }
        if !(self.tol.rtol > 0.0) || !(self.tol.atol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if let Some((lo, hi)) = self.window {
            if lo >= 0 || hi <= 0 {
                return Err(Error::Invalid(format!("window [{lo}, {hi}] must contain the step at 0")));
            }
        }
        Ok(())
    }

    pub fn window_for(&self, t: f64) -> Result<(i64, i64)> {
        match self.window {
            Some(w) => Ok(w),
            None => default_window(self.left, self.right, t),
        }
    }
}

/// Window reaching 20% past the fastest ray of the scenario at time `t`.
pub fn default_window(left: Background, right: Background, t: f64) -> Result<(i64, i64)> {
    let model = AsymptoticModel::pure_step(left, right)?;
    let speed = model
        .rays()
        .iter()
        .map(|r| r.0.abs())
        .fold(2.0 * left.a.max(right.a), f64::max);
    let half = (1.2 * speed * t).ceil() as i64 + WINDOW_PAD;
    Ok((-half, half))
}

/// Simulation and asymptotics at one site.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: i64,
    pub xi: f64,
    pub zone: ZoneKind,
    pub a_sim: f64,
    pub b_sim: f64,
    /// NaN where the leading term is not evaluated (ray neighborhoods)
    pub a_asym: f64,
    pub b_asym: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub t: f64,
    pub rows: Vec<ProfileRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneError {
    pub zone: ZoneKind,
    /// ξ range actually sampled, margins removed
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub sites: usize,
    pub sup_a: f64,
    pub rms_a: f64,
    pub sup_b: f64,
    pub rms_b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeReport {
    pub t: f64,
    pub window: (i64, i64),
    pub zones: Vec<ZoneError>,
}

/// Least-squares slope of log(sup error) against log t.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub zone: ZoneKind,
    pub exponent_a: Option<f64>,
    pub exponent_b: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneVerdict {
    pub zone: ZoneKind,
    pub within_threshold: bool,
    pub decreasing: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub left: Background,
    pub right: Background,
    pub scenario: ScenarioKind,
    /// rays in original coordinates
    pub rays: Vec<(f64, String)>,
    pub eps_zone: f64,
    pub sup_threshold: f64,
    pub times: Vec<TimeReport>,
    pub decay: Vec<DecayFit>,
    pub verdicts: Vec<ZoneVerdict>,
    #[serde(skip)]
    pub profiles: Vec<Profile>,
}

impl ComparisonReport {
    pub fn zone_at(&self, t: f64, zone: ZoneKind) -> Option<&ZoneError> {
        self.times.iter().find(|r| r.t == t)?.zones.iter().find(|z| z.zone == zone)
    }

    pub fn decay_of(&self, zone: ZoneKind) -> Option<&DecayFit> {
        self.decay.iter().find(|d| d.zone == zone)
    }
}

/// Margin excluded next to a ray; zones narrower than four margins keep
/// their middle half.
pub fn zone_margin(eps: f64, width: f64) -> f64 {
    if width.is_finite() {
        eps.min(width / 4.0)
    } else {
        eps
    }
}

/// Zones of the scenario in original ξ, shrunk by the margins.
pub fn sampled_zones(model: &AsymptoticModel, eps: f64) -> Vec<(ZoneKind, f64, f64)> {
    model
        .scenario
        .zones
        .iter()
        .map(|z| {
            let lo = model.transform.xi_back(z.lo);
            let hi = model.transform.xi_back(z.hi);
            let m = zone_margin(eps, hi - lo);
            (z.kind, lo + m, hi - m)
        })
        .collect()
}

/// Simulate and compare at every configured time.
pub fn run_compare(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let model = AsymptoticModel::pure_step(config.left, config.right)?;
    let t_max = *config.times.last().expect("validated non-empty");
    let window = config.window_for(t_max)?;
    let initial = lattice::make_step_initial(config.left, config.right, window)?;
    let snapshots = lattice::evolve_snapshots(&initial, &config.times, config.tol.rtol, config.tol.atol)?;
    let zones = sampled_zones(&model, config.eps_zone);

    let mut times = Vec::with_capacity(snapshots.len());
    let mut profiles = Vec::with_capacity(snapshots.len());
    for snap in &snapshots {
        let profile = profile(&model, snap, &zones)?;
        times.push(TimeReport { t: snap.t, window, zones: zone_errors(&profile, &zones) });
        profiles.push(profile);
    }
    let decay = decay_fits(&times, &zones);
    let verdicts = verdicts(&times, &zones, config.sup_threshold);
    let report = ComparisonReport {
        left: config.left,
        right: config.right,
        scenario: model.scenario.kind,
        rays: model.rays(),
        eps_zone: config.eps_zone,
        sup_threshold: config.sup_threshold,
        times,
        decay,
        verdicts,
        profiles,
    };
    if let Some(dir) = &config.out_dir {
        write_report(&report, dir)?;
        if config.plots {
            emit_plots(&report, dir)?;
        }
    }
    Ok(report)
}

/// Leading term at every interior site of the snapshot; sites inside a ray
/// margin get NaN.
pub fn profile(model: &AsymptoticModel, snap: &LatticeState, zones: &[(ZoneKind, f64, f64)]) -> Result<Profile> {
    let t = snap.t;
    let sites: Vec<i64> = ((snap.n_min + 1)..snap.n_max).collect();
    let rows = sites
        .par_iter()
        .map(|&n| {
            let xi = n as f64 / t;
            let zone = model.zone_at(xi);
            let inside = zones.iter().any(|&(k, lo, hi)| k == zone && xi >= lo && xi <= hi);
            let (a_asym, b_asym) = if inside {
                let lt = model.leading_term(n, t).map_err(|e| {
                    Error::Invalid(format!("{} zone at n = {n}, t = {t}: {e}", zone.label()))
                })?;
                (lt.a, lt.b)
            } else {
                (f64::NAN, f64::NAN)
            };
            Ok(ProfileRow { n, xi, zone, a_sim: snap.a_at(n), b_sim: snap.b_at(n), a_asym, b_asym })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile { t, rows })
}

fn zone_errors(profile: &Profile, zones: &[(ZoneKind, f64, f64)]) -> Vec<ZoneError> {
    zones
        .iter()
        .map(|&(zone, lo, hi)| {
            let rows: Vec<&ProfileRow> =
                profile.rows.iter().filter(|r| r.zone == zone && r.xi >= lo && r.xi <= hi).collect();
            let (mut sup_a, mut sup_b, mut ss_a, mut ss_b) = (0.0f64, 0.0f64, 0.0, 0.0);
            for r in &rows {
                let (ea, eb) = ((r.a_sim - r.a_asym).abs(), (r.b_sim - r.b_asym).abs());
                sup_a = sup_a.max(ea);
                sup_b = sup_b.max(eb);
                ss_a += ea * ea;
                ss_b += eb * eb;
            }
            let k = rows.len().max(1) as f64;
            let xi_lo = rows.first().map_or(lo, |r| r.xi);
            let xi_hi = rows.last().map_or(hi, |r| r.xi);
            ZoneError {
                zone,
                xi_lo,
                xi_hi,
                sites: rows.len(),
                sup_a,
                rms_a: (ss_a / k).sqrt(),
                sup_b,
                rms_b: (ss_b / k).sqrt(),
            }
        })
        .collect()
}

/// Slope of the least-squares line through (log x, log y).
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn decay_fits(times: &[TimeReport], zones: &[(ZoneKind, f64, f64)]) -> Vec<DecayFit> {
    zones
        .iter()
        .map(|&(zone, _, _)| {
            let series = |pick: fn(&ZoneError) -> f64| -> Vec<(f64, f64)> {
                times
                    .iter()
                    .filter_map(|r| r.zones.iter().find(|z| z.zone == zone && z.sites > 0).map(|z| (r.t, pick(z))))
                    .collect()
            };
            DecayFit { zone, exponent_a: log_log_slope(&series(|z| z.sup_a)), exponent_b: log_log_slope(&series(|z| z.sup_b)) }
        })
        .collect()
}

fn verdicts(times: &[TimeReport], zones: &[(ZoneKind, f64, f64)], threshold: f64) -> Vec<ZoneVerdict> {
    zones
        .iter()
        .map(|&(zone, _, _)| {
            let sups: Vec<f64> = times
                .iter()
                .filter_map(|r| r.zones.iter().find(|z| z.zone == zone && z.sites > 0).map(|z| z.sup_b))
                .collect();
            let within_threshold = sups.last().is_none_or(|&s| s <= threshold);
            let decreasing = (sups.len() >= 2).then(|| sups.windows(2).all(|w| w[1] < w[0]));
            ZoneVerdict { zone, within_threshold, decreasing }
        })
        .collect()
}

fn fmt_t(t: f64) -> String {
    let s = format!("{t}");
    s.replace('.', "p")
}

/// `report.json`, `zones.csv` and one `compare_t<T>.csv` per time.
pub fn write_report(report: &ComparisonReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("zones.csv"))?);
    writeln!(f, "t,zone,xi_lo,xi_hi,sites,sup_a,rms_a,sup_b,rms_b")?;
    for r in &report.times {
        for z in &r.zones {
            writeln!(
                f,
                "{},{},{:.12e},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                r.t,
                z.zone.label(),
                z.xi_lo,
                z.xi_hi,
                z.sites,
                z.sup_a,
                z.rms_a,
                z.sup_b,
                z.rms_b
            )?;
        }
    }
    f.flush()?;
    for p in &report.profiles {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("compare_t{}.csv", fmt_t(p.t))))?);
        writeln!(f, "n,t,xi,zone,a_sim,b_sim,a_asym,b_asym")?;
        for r in &p.rows {
            writeln!(
                f,
                "{},{},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                r.n,
                p.t,
                r.xi,
                r.zone.label(),
                r.a_sim,
                r.b_sim,
                r.a_asym,
                r.b_asym
            )?;
        }
        f.flush()?;
    }
    Ok(())
}

/// One SVG per time and variable: simulation in black, leading term in
/// red, rays as vertical lines.
pub fn emit_plots(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    use plotters::prelude::*;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let plot_err = |e: &dyn std::fmt::Display| Error::Io(std::io::Error::other(e.to_string()));
    for p in &report.profiles {
        type Pick = fn(&ProfileRow) -> f64;
        let picks: [(&str, Pick, Pick); 2] =
            [("a", |r| r.a_sim, |r| r.a_asym), ("b", |r| r.b_sim, |r| r.b_asym)];
        for (name, sim, asym) in picks {
            let path = dir.join(format!("{name}_t{}.svg", fmt_t(p.t)));
            let (n0, n1) = match (p.rows.first(), p.rows.last()) {
                (Some(f), Some(l)) => (f.n as f64, l.n as f64),
                _ => (-1.0, 1.0),
            };
            let vals = p.rows.iter().flat_map(|r| [sim(r), asym(r)]).filter(|v| v.is_finite());
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (-1.0, 1.0) };
            let pad = 0.05 * (hi - lo).max(1e-3);
            {
                let root = SVGBackend::new(&path, (960, 480)).into_drawing_area();
                root.fill(&WHITE).map_err(|e| plot_err(&e))?;
                let mut chart = ChartBuilder::on(&root)
                    .caption(format!("{name}(n, {})", p.t), ("sans-serif", 18))
                    .margin(10)
                    .x_label_area_size(30)
                    .y_label_area_size(50)
                    .build_cartesian_2d(n0..n1, (lo - pad)..(hi + pad))
                    .map_err(|e| plot_err(&e))?;
                chart.configure_mesh().x_desc("n").disable_mesh().draw().map_err(|e| plot_err(&e))?;
                for (xi, _) in &report.rays {
                    let n = xi * p.t;
                    if n >= n0 && n <= n1 {
                        chart
                            .draw_series(LineSeries::new([(n, lo - pad), (n, hi + pad)], BLUE.mix(0.4)))
                            .map_err(|e| plot_err(&e))?;
                    }
                }
                chart
                    .draw_series(LineSeries::new(p.rows.iter().map(|r| (r.n as f64, sim(r))), &BLACK))
                    .map_err(|e| plot_err(&e))?;
                // break the asymptotic curve at the excluded margins
                let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
                for r in &p.rows {
                    let v = asym(r);
                    if v.is_finite() {
                        runs.last_mut().expect("non-empty").push((r.n as f64, v));
                    } else if runs.last().is_some_and(|r| !r.is_empty()) {
                        runs.push(Vec::new());
                    }
                }
                for run in runs.into_iter().filter(|r| !r.is_empty()) {
                    chart.draw_series(LineSeries::new(run, &RED)).map_err(|e| plot_err(&e))?;
                }
                root.present().map_err(|e| plot_err(&e))?;
            }
            written.push(path);
        }
    }
    Ok(written)
}

/// One named pass/fail check of the self test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{mark} {:<28} {:.3e} (limit {:.1e})", self.name, self.value, self.threshold)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Quasi-periodicity, parity and the half-period zero of θ.
pub fn check_theta() -> Check {
    let tau = c(0.1, 0.8);
    let mut worst = theta(0.5 * (c(1.0, 0.0) + tau), tau).norm();
    for v in [c(0.3, 0.1), c(-0.2, 0.5), c(0.0, 2.0), c(0.45, -0.3)] {
        let t = theta(v, tau);
        let shifted = (c(0.0, -PI) * tau - c(0.0, 2.0 * PI) * v).exp() * t;
        worst = worst
            .max((theta(v + 1.0, tau) - t).norm() / t.norm())
            .max((theta(-v, tau) - t).norm() / t.norm())
            .max((theta(v + tau, tau) - shifted).norm() / shifted.norm());
    }
    Check::at_most("theta identities", worst, 1e-12)
}

/// Abel map followed by Jacobi inversion returns the same Jacobian point.
pub fn check_abel_round_trip() -> Result<Check> {
    let s = TwoBandSurface::new(-2.8, -1.7, -1.0, 1.0)?;
    let pts = [
        SurfacePoint::upper(-2.3),
        SurfacePoint::lower(-2.3),
        SurfacePoint::upper(-1.2),
        SurfacePoint::lower(0.4),
        SurfacePoint::upper(-5.0),
        SurfacePoint::upper(c(-0.5, 0.4)),
        SurfacePoint::lower(c(-2.0, -0.6)),
    ];
    let worst = pts
        .iter()
        .map(|&p| {
            let w = s.abel_map(p);
            lattice_distance(s.abel_map(s.jacobi_invert(w)).v, w.v, s.tau)
        })
        .fold(0.0, f64::max);
    Ok(Check::at_most("Abel round trip", worst, 1e-10))
}

/// W(ψ_ℓ, ψ) is independent of the site for a pure step.
pub fn check_wronskian() -> Result<Check> {
    let s = lattice::make_step_initial(Background::new(1.0, -2.0)?, Background::unit(), (-20, 20))?;
    let mut worst: f64 = 0.0;
    for lam in [-2.5, -0.5, 0.7] {
        let js = spectral::jost_solutions(&s, lam, (-12, 12))?;
        let w0 = spectral::wronskian(&s, &js.psi_l, &js.psi, -12, -12);
        for n in -12..12 {
            let w = spectral::wronskian(&s, &js.psi_l, &js.psi, -12, n);
            worst = worst.max((w - w0).norm() / w0.norm());
        }
    }
    Ok(Check::at_most("Wronskian constancy", worst, 1e-10))
}

/// |R| = 1 where only the right spectrum is present.
pub fn check_unit_reflection() -> Result<Check> {
    let s = lattice::make_step_initial(Background::new(0.4, -2.0)?, Background::unit(), (-20, 20))?;
    let mut worst: f64 = 0.0;
    for x in [-0.95, -0.3, 0.4, 0.99] {
        let r = spectral::scattering_data(&s, x)?.r.ok_or_else(|| Error::Invalid("missing R".into()))?;
        worst = worst.max((r.norm() - 1.0).abs());
    }
    Ok(Check::at_most("|R| = 1 off the left band", worst, 1e-8))
}

/// Drift of the telescoping sums Σb and Σ log a against their exact rates.
pub fn check_conservation(tol: Tolerances) -> Result<Check> {
    let s = lattice::make_step_initial(Background::new(1.0, -2.0)?, Background::unit(), (-120, 120))?;
    let traj = lattice::evolve_snapshots(&s, &[0.0, 5.0, 10.0, 20.0], tol.rtol, tol.atol)?;
    let rep = lattice::conservation_report(&traj)?;
    let bound = 10.0 * tol.rtol * rep.window_sites as f64;
    Ok(Check::at_most("telescoping conservation", rep.b_sum_drift.max(rep.log_a_sum_drift), bound))
}

/// The gap-zone theta solution satisfies the Toda equations.
pub fn check_two_band_residual() -> Result<Check> {
    let left = Background::new(0.4, -2.0)?;
    let s = TwoBandSurface::new(left.inf(), left.sup(), -1.0, 1.0)?;
    let w = crate::asymptotics::divisor_gap(&s, &ChiSource::pure_step(left, Background::unit()))?;
    let m = TwoBandModel::new(s, w)?;
    let samples: Vec<(i64, f64)> = (0..10).flat_map(|i| (0..10).map(move |j| (3 * i - 12, 1.7 * j as f64))).collect();
    Ok(Check::at_most("two-band Toda residual", m.toda_residual(&samples, 1e-3)?, 1e-6))
}

/// All invariant suites.
pub fn selftest(tol: Tolerances) -> Result<Vec<Check>> {
    Ok(vec![
        check_theta(),
        check_abel_round_trip()?,
        check_wronskian()?,
        check_unit_reflection()?,
        check_conservation(tol)?,
        check_two_band_residual()?,
    ])
}
