use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qdho::decoherence::{delta_qd_series, write_delta_qd_csv};
use qdho::density::{steady_state_element, write_grid_csv, DensityMatrixPoint, GridSpec};
use qdho::fock::{integrate_converged, run_from_spec, Convergence, OracleOptions};
use qdho::gaussian::uniform_times;
use qdho::verify::{verify, VerifyOptions};
use qdho::{evolve, initial_state, timescale_report, StepControl, TimeScale};
use rayon::prelude::*;
use toml::{Table, Value};

use crate::config::{set, RunConfig};
use crate::error::CliError;

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::Io(path.clone(), e))?;
    Ok((path, BufWriter::new(file)))
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(dir, name)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(path)
}

fn show(t: &TimeScale<f64>) -> String {
    match t {
        TimeScale::Finite(v) => format!("{v:.6}"),
        TimeScale::Infinite => "infinite".into(),
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let (params, coeffs, spec) = cfg.model()?;
    let state = initial_state(&spec, &params)?;
    let control = StepControl::default().with_samples(cfg.samples);
    let trajectory = evolve(&state, &params, &coeffs, cfg.t_final, &control)?;

    write_file(&cfg.out, "trajectory.csv", |w| trajectory.write_csv(w))?;
    let series = delta_qd_series(&trajectory, params.hbar());
    write_file(&cfg.out, "delta_qd.csv", |w| write_delta_qd_csv(&series, w))?;

    match timescale_report(&spec, &params) {
        Ok(report) => {
            let report = report.with_samples(&trajectory, params.hbar());
            let json = report.to_json();
            write_file(&cfg.out, "report.json", |w| writeln!(w, "{json}"))?;
            println!("t_deco = {}", show(&report.t_deco));
            println!("t_d = {}", show(&report.t_d));
            println!("t_rel = {}", show(&report.t_rel));
            println!("delta_qd_infinity = {:.6}", report.delta_qd_infinity);
        }
        // time scales are undefined without a bath
        Err(e) if e.constraint().is_some() && cfg.bath == crate::config::Bath::Closed => {
            println!("closed system: no decoherence report");
        }
        Err(e) => return Err(e.into()),
    }

    if cfg.oracle {
        let times = uniform_times(0.0, cfg.t_final, cfg.samples);
        let options = OracleOptions::default();
        let run = match cfg.oracle_n {
            Some(n) => run_from_spec(&spec, &params, &coeffs, n, &times, &options)?,
            None => {
                integrate_converged(
                    &spec,
                    &params,
                    &coeffs,
                    &times,
                    &options,
                    &Convergence::default(),
                )?
                .run
            }
        };
        run.require_converged()?;
        write_file(&cfg.out, "oracle.csv", |w| run.write_csv(w))?;
        println!("oracle N = {}", run.dim);
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

pub fn verify_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let (params, coeffs, spec) = cfg.model()?;
    let options = VerifyOptions {
        t_final: cfg.t_final,
        samples: cfg.samples,
        oracle_dim: cfg.oracle_n,
        ..VerifyOptions::default()
    };
    let v = verify(&spec, &params, &coeffs, &options)?;
    let report = &v.report;
    let json = report.to_json();
    write_file(&cfg.out, "verify.json", |w| writeln!(w, "{json}"))?;
    write_file(&cfg.out, "trajectory.csv", |w| v.gaussian.write_csv(w))?;
    write_file(&cfg.out, "oracle.csv", |w| v.oracle.write_csv(w))?;

    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!("oracle N = {}", report.oracle.dim);
    println!(
        "{} max moment discrepancy {:.3e} (tolerance {:.0e})",
        verdict(report.moments_pass),
        report.max_discrepancy,
        report.moment_tolerance
    );
    println!(
        "{} max normalized residual {:.3e} over {} points (tolerance {:.0e})",
        verdict(report.residual_pass),
        report.residual.max,
        report.residual.points,
        report.residual_tolerance
    );
    let mixed = &report.mixed_diffusion;
    println!(
        "mixed diffusion at hbar={} D_pq={:.4}: D_pq*hbar residual {:.3e}, D_pq/hbar residual {:.3e}",
        mixed.hbar, mixed.d_pq, mixed.times_hbar.max, mixed.over_hbar.max
    );
    if report.pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(format!(
            "see {}",
            cfg.out.join("verify.json").display()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Lambda,
    #[value(alias = "T")]
    Temperature,
    CothEpsilon,
    Delta,
    R,
}

impl Axis {
    fn key(self) -> &'static str {
        match self {
            Axis::Lambda => "lambda",
            Axis::Temperature => "temperature",
            Axis::CothEpsilon => "coth_epsilon",
            Axis::Delta => "delta",
            Axis::R => "r",
        }
    }
}

pub struct SweepSpec {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub jobs: usize,
}

pub const SWEEP_CSV_HEADER: &str = "value,t_deco,t_d,t_rel,delta_qd_infinity";

#[derive(Debug, Clone, Copy)]
struct Row {
    value: f64,
    t_deco: TimeScale<f64>,
    t_d: TimeScale<f64>,
    t_rel: TimeScale<f64>,
    delta_qd_infinity: f64,
}

fn cell(t: TimeScale<f64>) -> String {
    // infinite times are left empty
    t.finite().map(|v| format!("{v:.16e}")).unwrap_or_default()
}

fn ordered(t: TimeScale<f64>) -> f64 {
    t.finite().unwrap_or(f64::INFINITY)
}

fn trend(values: &[f64]) -> &'static str {
    let mut up = true;
    let mut down = true;
    let mut flat = true;
    for w in values.windows(2) {
        match w[1].partial_cmp(&w[0]) {
            Some(std::cmp::Ordering::Greater) => (down, flat) = (false, false),
            Some(std::cmp::Ordering::Less) => (up, flat) = (false, false),
            Some(std::cmp::Ordering::Equal) => (up, down) = (false, false),
            None => (up, down, flat) = (false, false, false),
        }
    }
    match (flat, up, down) {
        (true, _, _) => "constant",
        (_, true, _) => "increasing",
        (_, _, true) => "decreasing",
        _ => "non-monotone",
    }
}

fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![from];
    }
    uniform_times(from, to, points - 1)
}

pub fn sweep(base: &Table, sweep: &SweepSpec) -> Result<(), CliError> {
    if sweep.steps < 2 {
        return Err(CliError::Config("--steps must be at least 2".into()));
    }
    if !(sweep.from.is_finite() && sweep.to.is_finite()) {
        return Err(CliError::Config("--from and --to must be finite".into()));
    }
    let out = RunConfig::from_table(base.clone())?.out;
    let values = linspace(sweep.from, sweep.to, sweep.steps);
    let point = |value: f64| -> Result<Row, CliError> {
        let mut table = base.clone();
        set(&mut table, sweep.axis.key(), Value::Float(value));
        let cfg = RunConfig::from_table(table)?;
        let (params, _, spec) = cfg.model()?;
        let report = timescale_report(&spec, &params)?;
        Ok(Row {
            value,
            t_deco: report.t_deco,
            t_d: report.t_d,
            t_rel: report.t_rel,
            delta_qd_infinity: report.delta_qd_infinity,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    // collect keeps axis order whatever the completion order
    let rows: Vec<Row> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| point(v))
            .collect::<Result<_, _>>()
    })?;

    write_file(&out, "sweep.csv", |w| {
        writeln!(w, "{SWEEP_CSV_HEADER}")?;
        for r in &rows {
            writeln!(
                w,
                "{:.16e},{},{},{},{:.16e}",
                r.value,
                cell(r.t_deco),
                cell(r.t_d),
                cell(r.t_rel),
                r.delta_qd_infinity
            )?;
        }
        Ok(())
    })?;
    let col = |f: fn(&Row) -> f64| trend(&rows.iter().map(f).collect::<Vec<_>>());
    println!(
        "monotonicity along {}: t_deco={} t_d={} t_rel={} delta_qd_infinity={}",
        sweep.axis.key(),
        col(|r| ordered(r.t_deco)),
        col(|r| ordered(r.t_d)),
        col(|r| ordered(r.t_rel)),
        col(|r| r.delta_qd_infinity),
    );
    Ok(())
}

pub fn steady_state(cfg: &RunConfig) -> Result<(), CliError> {
    let (params, _, _) = cfg.model()?;
    if cfg.grid_points == 0 || !(cfg.grid_max > cfg.grid_min) {
        return Err(CliError::Config(
            "grid needs grid_points > 0 and grid_max > grid_min".into(),
        ));
    }
    let grid = GridSpec {
        min: cfg.grid_min,
        max: cfg.grid_max,
        points: cfg.grid_points,
    };
    let xs = grid.coordinates();
    let mut points = Vec::with_capacity(xs.len() * xs.len());
    for &q in &xs {
        for &q_prime in &xs {
            let v = steady_state_element(&params, q, q_prime)?;
            points.push(DensityMatrixPoint {
                q,
                q_prime,
                value: qdho::Complex::new(v, 0.0),
            });
        }
    }
    let path = write_file(&cfg.out, "steady_state.csv", |w| write_grid_csv(&points, w))?;
    println!("wrote {}", path.display());
    Ok(())
}
