use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use toda_core::asymptotics::AsymptoticModel;
use toda_core::harness::{self, ExperimentConfig, DEFAULT_EPS_ZONE};
use toda_core::lattice::{self, LatticeState};
use toda_core::spectral::{self, Multiplicity};
use toda_core::{Background, Error, Tolerances};

#[derive(Parser)]
#[command(name = "toda", version, about = "Toda lattice with steplike initial data: simulation and long-time asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the pure step and write snapshots
    Simulate(Common),
    /// Evaluate the leading asymptotic term on the window
    Asymptotic(Common),
    /// Simulate, compare with the asymptotics per zone, fit decay rates
    Compare(Common),
    /// Scenario, rays and zones
    Regions(Common),
    /// Right scattering data of the initial step on a λ grid
    Scattering {
        #[command(flatten)]
        common: Common,
        /// grid points across the union of the spectra
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Invariant suites
    Selftest(Common),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// JSON file with the same keys as the flags (a_left, t, eps_zone, ...); flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    a_left: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b_left: Option<f64>,
    /// default 0.5
    #[arg(long, allow_hyphen_values = true)]
    a_right: Option<f64>,
    /// default 0
    #[arg(long, allow_hyphen_values = true)]
    b_right: Option<f64>,
    /// output times, comma separated
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// half-width N of the window [−N, N]
    #[arg(long)]
    window: Option<i64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// excluded neighborhood of each ray, in ξ
    #[arg(long)]
    eps_zone: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    plots: bool,
}

/// Config file layout, mirroring the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    a_left: Option<f64>,
    b_left: Option<f64>,
    a_right: Option<f64>,
    b_right: Option<f64>,
    t: Option<Vec<f64>>,
    window: Option<i64>,
    rtol: Option<f64>,
    atol: Option<f64>,
    eps_zone: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    plots: Option<bool>,
}

#[derive(Debug)]
struct Resolved {
    left: Option<Background>,
    right: Background,
    times: Vec<f64>,
    window: Option<i64>,
    tol: Tolerances,
    eps_zone: f64,
    out: Option<PathBuf>,
    format: Format,
    plots: bool,
}

impl Resolved {
    fn left(&self) -> anyhow::Result<Background> {
        self.left.context("--a-left and --b-left are required")
    }

    fn times(&self) -> anyhow::Result<&[f64]> {
        if self.times.is_empty() {
            bail!(Error::Invalid("--t is required".into()));
        }
        Ok(&self.times)
    }

    fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = ExperimentConfig::new(self.left()?, self.right, self.times()?.to_vec());
        c.window = self.window.map(|n| (-n, n));
        c.tol = self.tol;
        c.eps_zone = self.eps_zone;
        c.out_dir = self.out.clone();
        c.plots = self.plots;
        c.validate()?;
        Ok(c)
    }
}

fn resolve(c: &Common) -> anyhow::Result<Resolved> {
    let file: FileConfig = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("config {}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let a_left = c.a_left.or(file.a_left);
    let b_left = c.b_left.or(file.b_left);
    let left = match (a_left, b_left) {
        (Some(a), Some(b)) => Some(Background::new(a, b)?),
        (None, None) => None,
        _ => bail!(Error::Invalid("give both --a-left and --b-left".into())),
    };
    let right = Background::new(c.a_right.or(file.a_right).unwrap_or(0.5), c.b_right.or(file.b_right).unwrap_or(0.0))?;
    let d = Tolerances::default();
    Ok(Resolved {
        left,
        right,
        times: c.t.clone().or(file.t).unwrap_or_default(),
        window: c.window.or(file.window),
        tol: Tolerances { rtol: c.rtol.or(file.rtol).unwrap_or(d.rtol), atol: c.atol.or(file.atol).unwrap_or(d.atol) },
        eps_zone: c.eps_zone.or(file.eps_zone).unwrap_or(DEFAULT_EPS_ZONE),
        out: c.out.clone().or(file.out),
        format: c.format.or(file.format).unwrap_or_default(),
        plots: c.plots || file.plots.unwrap_or(false),
    })
}

/// Writes to `<out>/<name>` or stdout.
fn sink(out: &Option<PathBuf>, name: &str) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Box::new(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn t_tag(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

fn simulate(r: &Resolved) -> anyhow::Result<()> {
    let times = r.times()?;
    let cfg = r.experiment()?;
    let window = cfg.window_for(*times.last().expect("non-empty"))?;
    let init = lattice::make_step_initial(cfg.left, cfg.right, window)?;
    let snaps = lattice::evolve_snapshots(&init, times, r.tol.rtol, r.tol.atol)?;
    for s in &snaps {
        match (&r.out, r.format) {
            (Some(dir), Format::Csv) => {
                std::fs::create_dir_all(dir)?;
                let tag = t_tag(s.t);
                lattice::write_snapshot(s, r.tol, &dir.join(format!("snapshot_t{tag}.csv")), &dir.join(format!("snapshot_t{tag}.json")))?;
            }
            (_, Format::Json) => {
                let mut w = sink(&r.out, &format!("snapshot_t{}.json", t_tag(s.t)))?;
                serde_json::to_writer(&mut w, s)?;
                writeln!(w)?;
            }
            (None, Format::Csv) => {
                let mut w = sink(&None, "")?;
                writeln!(w, "n,t,a,b")?;
                for (i, n) in s.sites().enumerate() {
                    writeln!(w, "{n},{},{:.17e},{:.17e}", s.t, s.a[i], s.b[i])?;
                }
            }
        }
    }
    if r.out.is_some() {
        eprintln!("wrote {} snapshot(s) on [{}, {}]", snaps.len(), window.0, window.1);
    }
    Ok(())
}

#[derive(Serialize)]
struct AsymRow {
    n: i64,
    t: f64,
    xi: f64,
    zone: &'static str,
    a_asym: f64,
    b_asym: f64,
}

fn asymptotic(r: &Resolved) -> anyhow::Result<()> {
    let cfg = r.experiment()?;
    let model = AsymptoticModel::pure_step(cfg.left, cfg.right)?;
    let mut rows = Vec::new();
    for &t in r.times()? {
        let (lo, hi) = cfg.window_for(t)?;
        for n in lo..=hi {
            // values exactly on a ray can hit a degenerate surface; report them as NaN
            let (a, b, zone) = match model.leading_term(n, t) {
                Ok(lt) => (lt.a, lt.b, lt.zone),
                Err(e) if e.is_numerical() => (f64::NAN, f64::NAN, model.zone_at(n as f64 / t)),
                Err(e) => return Err(e.into()),
            };
            rows.push(AsymRow { n, t, xi: n as f64 / t, zone: zone.label(), a_asym: a, b_asym: b });
        }
    }
    let mut w = sink(&r.out, &format!("asymptotic.{}", ext(r.format)))?;
    match r.format {
        Format::Csv => {
            writeln!(w, "n,t,xi,zone,a_asym,b_asym")?;
            for x in &rows {
                writeln!(w, "{},{},{:.12e},{},{:.12e},{:.12e}", x.n, x.t, x.xi, x.zone, x.a_asym, x.b_asym)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn compare(r: &Resolved) -> anyhow::Result<()> {
    let cfg = r.experiment()?;
    let rep = harness::run_compare(&cfg)?;
    let mut out = std::io::stdout().lock();
    if r.format == Format::Json && r.out.is_none() {
        serde_json::to_writer_pretty(&mut out, &rep)?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(out, "scenario {:?}", rep.scenario)?;
    for (xi, label) in &rep.rays {
        writeln!(out, "  ray {label:<16} {xi:+.6}")?;
    }
    writeln!(out, "{:>8} {:<17} {:>8} {:>8} {:>6} {:>10} {:>10} {:>10} {:>10}", "t", "zone", "xi_lo", "xi_hi", "sites", "sup_a", "rms_a", "sup_b", "rms_b")?;
    for tr in &rep.times {
        for z in &tr.zones {
            writeln!(
                out,
                "{:>8} {:<17} {:>8.4} {:>8.4} {:>6} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
                tr.t,
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
    for d in &rep.decay {
        let fmt = |e: Option<f64>| e.map_or("-".to_string(), |v| format!("{v:+.3}"));
        writeln!(out, "decay {:<17} a {} b {}", d.zone.label(), fmt(d.exponent_a), fmt(d.exponent_b))?;
    }
    if let Some(dir) = &r.out {
        writeln!(out, "wrote report to {}", dir.display())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Region {
    zone: &'static str,
    xi_lo: f64,
    xi_hi: f64,
}

fn regions(r: &Resolved) -> anyhow::Result<()> {
    let model = AsymptoticModel::pure_step(r.left()?, r.right)?;
    let regions: Vec<Region> = model
        .scenario
        .zones
        .iter()
        .map(|z| Region { zone: z.kind.label(), xi_lo: model.transform.xi_back(z.lo), xi_hi: model.transform.xi_back(z.hi) })
        .collect();
    let mut w = sink(&r.out, &format!("regions.{}", ext(r.format)))?;
    match r.format {
        Format::Csv => {
            writeln!(w, "# scenario {:?}", model.scenario.kind)?;
            writeln!(w, "zone,xi_lo,xi_hi")?;
            for z in &regions {
                writeln!(w, "{},{},{}", z.zone, z.xi_lo, z.xi_hi)?;
            }
        }
        Format::Json => {
            let rays: Vec<(f64, String)> = model.rays();
            let doc = serde_json::json!({ "scenario": model.scenario.kind, "rays": rays, "zones": regions });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn scattering(r: &Resolved, points: usize) -> anyhow::Result<()> {
    if points < 2 {
        bail!(Error::Invalid("--points must be at least 2".into()));
    }
    let left = r.left()?;
    let state: LatticeState = lattice::make_step_initial(left, r.right, (-8, 8))?;
    let lo = left.inf().min(r.right.inf());
    let hi = left.sup().max(r.right.sup());
    let mut w = sink(&r.out, &format!("scattering.{}", ext(r.format)))?;
    let mut rows = Vec::new();
    for k in 0..points {
        let lambda = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        if Multiplicity::of(lambda, left, r.right) == Multiplicity::Zero {
            continue;
        }
        match spectral::scattering_data(&state, lambda) {
            Ok(d) => rows.push(d),
            Err(Error::BandEdge { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    match r.format {
        Format::Csv => {
            writeln!(w, "lambda,ReT,ImT,ReR,ImR,chi,multiplicity")?;
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
            for d in &rows {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{},{},{},{}",
                    d.lambda,
                    d.t.re,
                    d.t.im,
                    opt(d.r.map(|r| r.re)),
                    opt(d.r.map(|r| r.im)),
                    opt(d.chi),
                    d.multiplicity.count()
                )?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn selftest(r: &Resolved) -> anyhow::Result<bool> {
    let checks = harness::selftest(r.tol)?;
    let mut out = std::io::stdout().lock();
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    if let Some(dir) = &r.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("selftest.json"), serde_json::to_string_pretty(&checks)?)?;
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Simulate(c) => simulate(&resolve(c)?).map(|_| true),
        Command::Asymptotic(c) => asymptotic(&resolve(c)?).map(|_| true),
        Command::Compare(c) => compare(&resolve(c)?).map(|_| true),
        Command::Regions(c) => regions(&resolve(c)?).map(|_| true),
        Command::Scattering { common, points } => scattering(&resolve(common)?, *points).map(|_| true),
        Command::Selftest(c) => selftest(&resolve(c)?),
    }
}

/// 2 for bad input, 3 for numerical failure.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
