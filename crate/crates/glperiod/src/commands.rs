//! The four experiments behind the CLI. Each writes its artifacts and a
//! manifest under the output directory and returns the numbers it printed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use glperiod_core::forcing::{PerturbationSpec, SpatialProfile};
use glperiod_core::solver::{solve_periodic, PeriodicSolveReport, SolveError};
use glperiod_core::spectral::{make_grid, read_snapshot_on, write_snapshot, FieldSeries};
use glperiod_core::stability::{run_stability, DecayReport, StabilityRunConfig};
use glperiod_core::verification::{run_all, BatteryContext, CheckReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, StabilityConfig};
use crate::manifest::{now, verify_manifest, ArtifactWriter, Headline, MANIFEST_NAME};
use crate::Failure;

const SNAPSHOT_DIR: &str = "snapshots";

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn solve_headline(r: &PeriodicSolveReport) -> Headline {
    Headline {
        converged: Some(r.converged),
        iterations: Some(r.iterations),
        c_estimate: r.c_estimate,
        contraction_factor: r.contraction_factor,
        periodicity_residual: Some(r.periodicity_residual),
        equation_residual: Some(r.equation_residual),
        ..Headline::default()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), |x| format!("{x:.6e}"))
}

pub fn print_solve_table(r: &PeriodicSolveReport) {
    println!("{:<22} {}", "converged", r.converged);
    println!("{:<22} {}", "iterations", r.iterations);
    println!("{:<22} {}", "c_estimate", fmt_opt(r.c_estimate));
    println!("{:<22} {}", "contraction_factor", fmt_opt(r.contraction_factor));
    println!("{:<22} {:.6e}", "periodicity_residual", r.periodicity_residual);
    println!("{:<22} {:.6e}", "equation_residual", r.equation_residual);
    println!("{:<22} {:.6e}", "z_norm", r.z_norm);
    println!("{:<22} {:.6e}", "g_bracket", r.g_bracket);
}

/// Result of `solve-periodic`.
pub struct SolveRun {
    pub manifest: PathBuf,
    pub report: PeriodicSolveReport,
    pub series: FieldSeries,
}

fn write_solution(w: &mut ArtifactWriter, series: &FieldSeries) -> anyhow::Result<()> {
    for (m, f) in series.fields()[..series.m_t()].iter().enumerate() {
        let mut bytes = Vec::new();
        write_snapshot(f, &mut bytes)?;
        w.write(&format!("{SNAPSHOT_DIR}/u_{m:04}.glpf"), &bytes)?;
    }
    Ok(())
}

fn history_csv(r: &PeriodicSolveReport) -> anyhow::Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["iteration", "z_residual"])?;
    for (i, v) in r.residual_history.iter().enumerate() {
        out.write_record([(i + 1).to_string(), format!("{v:e}")])?;
    }
    Ok(out.into_inner()?)
}

/// Solves for the periodic state, writes report, residual history,
/// snapshots and manifest. Divergence still writes the manifest and then
/// fails with [`Failure::Divergence`].
pub fn cmd_solve_periodic(cfg: &RunConfig, out_dir: &Path) -> anyhow::Result<SolveRun> {
    let started = now();
    let setup = cfg.setup()?;
    let mut w = ArtifactWriter::new(out_dir)?;
    match solve_periodic(&setup.forcing.series, &setup.op, &setup.cutoffs, &cfg.solve) {
        Ok((series, report)) => {
            w.write_json("report.json", &report)?;
            w.write("residual_history.csv", &history_csv(&report)?)?;
            if cfg.output.snapshots {
                write_solution(&mut w, &series)?;
            }
            let manifest = w.finish("solve-periodic", "ok", config_json(cfg), started, solve_headline(&report))?;
            print_solve_table(&report);
            Ok(SolveRun { manifest, report, series })
        }
        Err(SolveError::Core(e)) => Err(Failure::Config(e.to_string()).into()),
        Err(err) => {
            let report = err.report().cloned().expect("numeric failures carry a report");
            w.write_json("report.json", &report)?;
            w.write("residual_history.csv", &history_csv(&report)?)?;
            w.finish("solve-periodic", "diverged", config_json(cfg), started, solve_headline(&report))?;
            print_solve_table(&report);
            Err(Failure::Divergence(err.to_string()).into())
        }
    }
}

/// Default stability settings: odd dipole of width `L/20`, amplitude 1e-2.
pub fn default_stability(cfg: &RunConfig) -> StabilityConfig {
    StabilityConfig {
        perturbation: PerturbationSpec::dipole(1e-2, cfg.grid.box_length / 20.0),
        run: StabilityRunConfig::default(),
    }
}

/// Loads the periodic solution of a converged base run.
pub fn load_base(manifest_path: &Path) -> anyhow::Result<(RunConfig, FieldSeries)> {
    let manifest = verify_manifest(manifest_path)
        .map_err(|e| Failure::Divergence(format!("base run unusable: {e:#}")))?;
    if manifest.command != "solve-periodic" || manifest.status != "ok" {
        return Err(Failure::Divergence(format!(
            "base run is a {} run with status {}",
            manifest.command, manifest.status
        ))
        .into());
    }
    let cfg: RunConfig = serde_json::from_value(manifest.config.clone()).context("base config echo")?;
    let grid = make_grid(cfg.grid)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut snaps: Vec<_> = manifest
        .artifacts
        .iter()
        .filter(|a| a.path.starts_with(SNAPSHOT_DIR))
        .map(|a| a.path.clone())
        .collect();
    snaps.sort();
    if snaps.is_empty() {
        return Err(Failure::Divergence("base run has no solution snapshots".into()).into());
    }
    let mut fields = Vec::with_capacity(snaps.len() + 1);
    for p in &snaps {
        let file = std::fs::File::open(dir.join(p)).with_context(|| format!("opening {p}"))?;
        fields.push(read_snapshot_on(std::io::BufReader::new(file), &grid)?);
    }
    fields.push(fields[0].clone());
    let series = FieldSeries::new(fields, cfg.period)?;
    Ok((cfg, series))
}

pub struct StabilityRun {
    pub manifest: PathBuf,
    pub report: DecayReport,
}

fn decay_csv(r: &DecayReport) -> anyhow::Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["t", "l2_w", "h1_grad_w", "n1", "n2", "n"])?;
    for row in r.rows() {
        out.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    Ok(out.into_inner()?)
}

/// Integrates a perturbation about the periodic solution (from `base` or
/// solved inline) and writes the decay series, report and manifest.
pub fn cmd_stability(cfg: &RunConfig, base: Option<&Path>, out_dir: &Path) -> anyhow::Result<StabilityRun> {
    let started = now();
    let (run_cfg, series) = match base {
        Some(p) => load_base(p)?,
        None => {
            let setup = cfg.setup()?;
            let (series, _) = solve_periodic(&setup.forcing.series, &setup.op, &setup.cutoffs, &cfg.solve)
                .map_err(|e| match e {
                    SolveError::Core(e) => anyhow::Error::from(Failure::Config(e.to_string())),
                    other => Failure::Divergence(format!("base solve failed: {other}")).into(),
                })?;
            (cfg.clone(), series)
        }
    };
    let setup = run_cfg.setup()?;
    let st = cfg.stability.clone().unwrap_or_else(|| default_stability(&run_cfg));
    let w0 = st
        .perturbation
        .realize(&setup.grid)
        .map_err(|e| Failure::Config(format!("perturbation: {e}")))?;
    let report = run_stability(&st.run, &series, &w0, &setup.op, &setup.cutoffs)
        .map_err(|e| Failure::Config(format!("stability: {e}")))?;

    let mut w = ArtifactWriter::new(out_dir)?;
    w.write("decay.csv", &decay_csv(&report)?)?;
    w.write_json("decay_report.json", &report)?;
    w.write_json("decay_summary.json", &report.summary())?;
    let headline = Headline {
        fitted_slope_l0: report.fitted_slope_l0,
        fitted_slope_l1: report.fitted_slope_l1,
        escaped: Some(report.escaped),
        ..Headline::default()
    };
    let mut echo = config_json(cfg);
    if let Some(p) = base {
        echo["base_manifest"] = serde_json::Value::String(p.display().to_string());
    }
    let status = if report.escaped { "escaped" } else { "ok" };
    let manifest = w.finish("stability", status, echo, started, headline)?;

    println!("{:<18} {}", "fitted_slope_l0", fmt_opt(report.fitted_slope_l0));
    println!("{:<18} {}", "fitted_slope_l1", fmt_opt(report.fitted_slope_l1));
    println!("{:<18} [{}, {}]", "fit_window", report.fit_window.0, report.fit_window.1);
    println!("{:<18} {:.6e}", "final_N", report.n_series.last().copied().unwrap_or(0.0));
    if report.escaped {
        eprintln!(
            "warning: perturbation escaped at t = {} (left the stability basin)",
            report.escape_time.unwrap_or(f64::NAN)
        );
    }
    if report.interpolated {
        eprintln!("warning: step does not align with the periodic nodes; v_per was interpolated");
    }
    Ok(StabilityRun { manifest, report })
}

pub struct VerifyRun {
    pub manifest: PathBuf,
    pub reports: Vec<CheckReport>,
}

impl VerifyRun {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

/// Runs every battery on the verify grid, with the energy and nonlinear
/// checks on a periodic trajectory solved there.
pub fn cmd_verify(cfg: &RunConfig, seed: Option<u64>, out_dir: &Path) -> anyhow::Result<VerifyRun> {
    let started = now();
    cfg.validate()?;
    let mut vcfg = cfg.clone();
    if let Some(g) = cfg.verify.grid {
        vcfg.grid = g;
    }
    if let Some(sigma) = cfg.verify.forcing_sigma {
        if let SpatialProfile::GaussDipole { axis, .. } = cfg.forcing.spatial {
            vcfg.forcing.spatial = SpatialProfile::GaussDipole { sigma, axis };
        }
    }
    vcfg.solve.m_t = cfg.verify.m_t;
    let setup = vcfg.setup()?;
    let (u, _) = solve_periodic(&setup.forcing.series, &setup.op, &setup.cutoffs, &vcfg.solve)
        .map_err(|e| Failure::Divergence(format!("verify trajectory: {e}")))?;
    let seed = seed.unwrap_or(cfg.seed);
    let ctx = BatteryContext::new(setup.op.clone(), setup.cutoffs.clone(), seed, cfg.verify.samples)
        .map_err(|e| Failure::Config(format!("battery setup: {e}")))?;
    let reports = run_all(&ctx, Some((&u, &setup.forcing.series)))
        .map_err(|e| Failure::Config(format!("battery construction: {e}")))?;

    let mut w = ArtifactWriter::new(out_dir)?;
    w.write_json("verify_report.json", &reports)?;
    let passed = reports.iter().filter(|r| r.passed).count();
    let headline = Headline {
        checks_passed: Some(passed),
        checks_total: Some(reports.len()),
        ..Headline::default()
    };
    let mut echo = config_json(cfg);
    echo["seed"] = serde_json::json!(seed);
    let status = if passed == reports.len() { "ok" } else { "failed" };
    let manifest = w.finish("verify", status, echo, started, headline)?;
    for r in &reports {
        println!(
            "{:<4} {:<26} C = {:<12.5e} worst_ratio = {:.4} ({} samples)",
            if r.passed { "PASS" } else { "FAIL" },
            r.check_name,
            r.fitted_constant,
            r.worst_ratio,
            r.samples
        );
    }
    Ok(VerifyRun { manifest, reports })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Epsilon,
    #[value(name = "m_t")]
    MT,
    N,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::MT => "m_t",
            SweepAxis::N => "n",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    pub iterations: Option<usize>,
    pub c_estimate: Option<f64>,
    pub contraction_factor: Option<f64>,
    pub periodicity_residual: Option<f64>,
    pub equation_residual: Option<f64>,
    pub runtime_s: f64,
    pub error: Option<String>,
}

/// The config of one sweep row.
pub fn row_config(cfg: &RunConfig, axis: SweepAxis, value: f64) -> RunConfig {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Epsilon => {
            c.forcing.amplitude = value;
            c.solve.z_tolerance = c.solve.z_tolerance.min(cfg.sweep.contraction_z_tolerance);
        }
        SweepAxis::MT => c.solve.m_t = value as usize,
        SweepAxis::N => c.grid.n_per_axis = value as usize,
    }
    c
}

fn run_row(cfg: &RunConfig, axis: SweepAxis, value: f64) -> SweepRow {
    let start = Instant::now();
    let c = row_config(cfg, axis, value);
    let outcome = c.setup().map_err(|e| format!("{e:#}")).and_then(|s| {
        match solve_periodic(&s.forcing.series, &s.op, &s.cutoffs, &c.solve) {
            Ok((_, r)) => Ok(r),
            Err(e) => match e.report() {
                Some(r) => Err(format!("{e}; last residual {:e}", r.residual_history.last().copied().unwrap_or(f64::NAN))),
                None => Err(e.to_string()),
            },
        }
    });
    let runtime_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(r) => SweepRow {
            value,
            converged: r.converged,
            iterations: Some(r.iterations),
            c_estimate: r.c_estimate,
            contraction_factor: r.contraction_factor,
            periodicity_residual: Some(r.periodicity_residual),
            equation_residual: Some(r.equation_residual),
            runtime_s,
            error: None,
        },
        Err(e) => SweepRow {
            value,
            converged: false,
            iterations: None,
            c_estimate: None,
            contraction_factor: None,
            periodicity_residual: None,
            equation_residual: None,
            runtime_s,
            error: Some(e),
        },
    }
}

pub struct SweepRun {
    pub manifest: PathBuf,
    pub rows: Vec<SweepRow>,
}

/// Independent runs along one axis, in parallel; writes
/// `sweep_<axis>.csv` and a manifest. Fails only if every row failed.
pub fn cmd_sweep(cfg: &RunConfig, axis: SweepAxis, out_dir: &Path) -> anyhow::Result<SweepRun> {
    let started = now();
    let values: Vec<f64> = match axis {
        SweepAxis::Epsilon => cfg.sweep.epsilon.clone(),
        SweepAxis::MT => cfg.sweep.m_t.iter().map(|&v| v as f64).collect(),
        SweepAxis::N => cfg.sweep.n.iter().map(|&v| v as f64).collect(),
    };
    if values.is_empty() {
        return Err(Failure::Config(format!("sweep.{} lists no values", axis.name())).into());
    }
    let rows: Vec<SweepRow> = values.par_iter().map(|&v| run_row(cfg, axis, v)).collect();

    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record([
        axis.name(),
        "converged",
        "iterations",
        "c_estimate",
        "contraction_factor",
        "periodicity_residual",
        "equation_residual",
        "runtime_s",
        "error",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    for r in &rows {
        table.write_record([
            format!("{}", r.value),
            r.converged.to_string(),
            r.iterations.map_or(String::new(), |i| i.to_string()),
            opt(r.c_estimate),
            opt(r.contraction_factor),
            opt(r.periodicity_residual),
            opt(r.equation_residual),
            format!("{:.3}", r.runtime_s),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let mut w = ArtifactWriter::new(out_dir)?;
    w.write(&format!("sweep_{}.csv", axis.name()), &table.into_inner()?)?;
    let ok = rows.iter().filter(|r| r.error.is_none()).count();
    let mut echo = config_json(cfg);
    echo["sweep_axis"] = serde_json::Value::String(axis.name().into());
    let manifest = w.finish("sweep", if ok > 0 { "ok" } else { "failed" }, echo, started, Headline::default())?;
    for r in &rows {
        println!(
            "{:<10} converged={:<5} c_estimate={:<14} contraction={:<14} eq_residual={}",
            r.value,
            r.converged,
            fmt_opt(r.c_estimate),
            fmt_opt(r.contraction_factor),
            fmt_opt(r.equation_residual)
        );
    }
    if ok == 0 {
        return Err(Failure::Divergence(format!("all {} sweep rows failed", rows.len())).into());
    }
    Ok(SweepRun { manifest, rows })
}

/// `<out>/manifest.json` for an output directory.
pub fn manifest_in(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_NAME)
}
