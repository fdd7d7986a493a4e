//! Acceptance run: one PASS/FAIL line per criterion on the pinned reference
//! configuration. Built with `harness = false` so the lines are always shown.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use glperiod::commands::{cmd_solve_periodic, cmd_stability, cmd_sweep, cmd_verify, SolveRun, SweepAxis, SweepRow};
use glperiod::config::RunConfig;
use glperiod_core::forcing::check_oddness;
use glperiod_core::operators::{
    auto_cutoffs, period_forward_apply, period_inverse_apply, project, semigroup_apply, verify_multiplier_bound, Band,
    LinearOperator,
};
use glperiod_core::random::{random_field, sample_rng, RandomFieldSpec};
use glperiod_core::solver::{solve_periodic, SolveOptions, TimeQuadrature};
use glperiod_core::spectral::{
    cubic_nonlinearity, make_grid, read_snapshot_on, FieldSeries, Grid, GridConfig, Representation, SpectralField,
};
use glperiod_core::stability::{integrate_forced, integrate_perturbation, perturbation_terms, EtdScheme};
use glperiod_core::verification::{check_projection_completeness, BatteryContext};
use num_complex::Complex64;
use rand::Rng;

const SEED: u64 = 20240601;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn reference() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    RunConfig::load(&path).expect("reference config")
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE)
}

fn criterion_1() -> anyhow::Result<Outcome> {
    let (mut complete, mut semigroup, mut round_trip, mut c_mult) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for dim in 1..=3 {
        let grid = make_grid(GridConfig::new(dim, 16, 16.0))?;
        let op = LinearOperator::new(&grid, 1.0)?;
        let cut = auto_cutoffs(&grid, 1.0)?;
        c_mult = c_mult.max(verify_multiplier_bound(&op, &cut, 4096)?.c_mult);
        for i in 0..20u64 {
            let mut rng = sample_rng(SEED, (dim as u64) << 32 | i);
            let f = random_field(&grid, &RandomFieldSpec::broadband(), &mut rng);
            let mut sum = project(&f, Band::Low, &cut);
            sum.axpy(Complex64::new(1.0, 0.0), &project(&f, Band::High, &cut))?;
            complete = complete.max(rel(&sum, &f));

            let (t, s) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let composed = semigroup_apply(&semigroup_apply(&f, s, &op)?, t, &op)?;
            semigroup = semigroup.max(rel(&composed, &semigroup_apply(&f, t + s, &op)?));

            let odd = random_field(&grid, &RandomFieldSpec { odd: true, ..RandomFieldSpec::broadband() }, &mut rng);
            let back = period_forward_apply(&period_inverse_apply(&odd, &op, 1e-10)?, &op);
            round_trip = round_trip.max(rel(&back, &odd));
        }
    }
    let passed = complete <= 1e-14 && semigroup <= 1e-12 && round_trip <= 1e-12 && c_mult.is_finite() && c_mult <= 1.0;
    Ok(Outcome::new(
        passed,
        format!("completeness {complete:.2e} semigroup {semigroup:.2e} round trip {round_trip:.2e} C_mult {c_mult:.4}"),
    ))
}

fn single_mode_forcing(grid: &Arc<Grid>, idx: usize, c: Complex64, omega: f64, m_t: usize) -> anyhow::Result<FieldSeries> {
    let fields = (0..=m_t)
        .map(|m| {
            let t = m as f64 / m_t as f64;
            let mut f = SpectralField::zeros(grid, Representation::Frequency);
            f.data_mut()[idx] = c * Complex64::new(0.0, omega * t).exp();
            f
        })
        .collect();
    Ok(FieldSeries::new(fields, 1.0)?)
}

fn criterion_2() -> anyhow::Result<Outcome> {
    let m_t = 32;
    let opts = SolveOptions {
        nonlinearity_enabled: false,
        quadrature: TimeQuadrature::Trigonometric,
        m_t,
        ..SolveOptions::default()
    };
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let mut rng = sample_rng(SEED, 2 << 32 | i);
        let dim = 1 + (i as usize % 3);
        let grid = make_grid(GridConfig::new(dim, 16, 20.0))?;
        let op = LinearOperator::new(&grid, 1.0)?;
        let cut = auto_cutoffs(&grid, 1.0)?;
        let mut ks = [0i64; 3];
        while ks.iter().all(|&k| k == 0) {
            for k in ks.iter_mut().take(dim) {
                *k = rng.random_range(-7..=7);
            }
        }
        let idx = grid.mode_index(&ks[..dim]).expect("mode on grid");
        let harmonic = rng.random_range(-5i32..=5) as f64;
        let omega = 2.0 * PI * harmonic;
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let g = single_mode_forcing(&grid, idx, c, omega, m_t)?;
        let (u, _) = solve_periodic(&g, &op, &cut, &opts)?;
        let lam = op.symbol()[idx];
        for (m, field) in u.fields().iter().enumerate() {
            let t = m as f64 / m_t as f64;
            let exact = c * Complex64::new(0.0, omega * t).exp() / (lam + Complex64::new(0.0, omega));
            worst = worst.max((field.data()[idx] - exact).norm() / exact.norm());
            let others: f64 = field.data().iter().enumerate().filter(|&(j, _)| j != idx).map(|(_, z)| z.norm()).sum();
            worst = worst.max(others / exact.norm());
        }
    }
    Ok(Outcome::new(worst <= 1e-10, format!("worst relative error {worst:.2e} over 20 modes")))
}

fn sweep_rows(cfg: &RunConfig, axis: SweepAxis, values: Vec<f64>, out: &Path) -> anyhow::Result<Vec<SweepRow>> {
    let mut cfg = cfg.clone();
    match axis {
        SweepAxis::Epsilon => cfg.sweep.epsilon = values,
        SweepAxis::MT => cfg.sweep.m_t = values.iter().map(|&v| v as usize).collect(),
        SweepAxis::N => cfg.sweep.n = values.iter().map(|&v| v as usize).collect(),
    }
    Ok(cmd_sweep(&cfg, axis, out)?.rows)
}

fn criterion_3(run: &SolveRun, cfg: &RunConfig, eps_rows: &[SweepRow], scratch: &Path) -> anyhow::Result<Outcome> {
    let r = &run.report;
    let mt = sweep_rows(cfg, SweepAxis::MT, vec![32.0, 64.0, 128.0], &scratch.join("sweep_m_t"))?;
    let eq: Vec<f64> = mt.iter().map(|row| row.equation_residual.unwrap_or(f64::NAN)).collect();
    let ratios = [eq[0] / eq[1], eq[1] / eq[2]];
    let c: Vec<f64> = [1e-3, 3e-3, 1e-2]
        .iter()
        .map(|&e| {
            eps_rows
                .iter()
                .find(|row| row.value == e)
                .and_then(|row| row.c_estimate)
                .unwrap_or(f64::NAN)
        })
        .collect();
    let c_spread = c.iter().cloned().fold(0.0, f64::max) / c.iter().cloned().fold(f64::INFINITY, f64::min);
    let passed = r.converged
        && r.iterations <= 15
        && r.periodicity_residual <= 1e-8
        && ratios.iter().all(|q| (3.0..=5.0).contains(q))
        && c_spread < 2.0;
    Ok(Outcome::new(
        passed,
        format!(
            "iterations {} periodicity {:.2e} eq-residual ratios {:.3} {:.3} c_estimate spread {:.4}",
            r.iterations, r.periodicity_residual, ratios[0], ratios[1], c_spread
        ),
    ))
}

fn criterion_4(eps_rows: &[SweepRow]) -> Outcome {
    let q = |e: f64| {
        eps_rows
            .iter()
            .find(|row| row.value == e)
            .and_then(|row| row.contraction_factor)
            .unwrap_or(f64::NAN)
    };
    let ratios = [q(2e-3) / q(1e-3), q(6e-3) / q(3e-3)];
    let passed = ratios.iter().all(|r| (r - 4.0).abs() <= 0.3 * 4.0);
    Outcome::new(passed, format!("contraction ratio at 2x epsilon {:.3} {:.3}", ratios[0], ratios[1]))
}

fn criterion_5(report: &glperiod_core::stability::DecayReport) -> Outcome {
    let s0 = report.fitted_slope_l0.unwrap_or(f64::NAN);
    let s1 = report.fitted_slope_l1.unwrap_or(f64::NAN);
    let monotone = report.n_series.windows(2).all(|w| w[1] >= w[0]);
    let n_max = report.n_series.iter().cloned().fold(0.0, f64::max);
    let passed = (-0.9..=-0.6).contains(&s0)
        && (-1.5..=-1.0).contains(&s1)
        && monotone
        && n_max.is_finite()
        && !report.escaped;
    Outcome::new(
        passed,
        format!(
            "slope L2 {s0:.4} slope grad {s1:.4} N nondecreasing {monotone} N max {n_max:.3e} escaped {}",
            report.escaped
        ),
    )
}

fn criterion_6(run: &SolveRun, solve_dir: &Path, stability_oddness: f64) -> anyhow::Result<Outcome> {
    let grid = run.series.grid().clone();
    let mut snapshots = 0.0f64;
    let mut count = 0;
    let dir = solve_dir.join("snapshots");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    paths.sort();
    for p in paths {
        let field = read_snapshot_on(std::io::BufReader::new(std::fs::File::open(&p)?), &grid)?;
        snapshots = snapshots.max(check_oddness(&field));
        count += 1;
    }
    let iterates = run.report.max_oddness;
    let passed = count > 0 && iterates <= 1e-10 && snapshots <= 1e-10 && stability_oddness <= 1e-10;
    Ok(Outcome::new(
        passed,
        format!("iterates {iterates:.2e} periodic snapshots {snapshots:.2e} ({count}) stability snapshots {stability_oddness:.2e}"),
    ))
}

fn criterion_7(cfg: &RunConfig, scratch: &Path) -> anyhow::Result<Outcome> {
    let run = cmd_verify(cfg, Some(SEED), &scratch.join("verify"))?;
    let failed: Vec<&str> = run
        .reports
        .iter()
        .filter(|r| !r.passed || !r.fitted_constant.is_finite())
        .map(|r| r.check_name.as_str())
        .collect();
    let setup = cfg.setup()?;
    let mut ctx = BatteryContext::new(setup.op, setup.cutoffs, SEED, 20)?;
    let i = ctx.grid.mode_index(&[1, 0, 0]).expect("mode on grid");
    ctx.cutoffs.chi_high[i] += 1e-3;
    let tampered = check_projection_completeness(&ctx)?;
    let passed = failed.is_empty() && !tampered.passed;
    Ok(Outcome::new(
        passed,
        format!(
            "{} of {} batteries passed{} tampered cutoff completeness passed={}",
            run.reports.len() - failed.len(),
            run.reports.len(),
            if failed.is_empty() { String::new() } else { format!(" (failed: {})", failed.join(", ")) },
            tampered.passed
        ),
    ))
}

fn criterion_8(run: &SolveRun, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let grid = make_grid(GridConfig::new(3, 12, 16.0))?;
    let mut identity = 0.0f64;
    for i in 0..100u64 {
        let mut rng = sample_rng(SEED, 8 << 32 | i);
        let scale_v = 10f64.powf(rng.random_range(-3.0..1.0));
        let scale_w = 10f64.powf(rng.random_range(-3.0..1.0));
        let v = random_field(&grid, &RandomFieldSpec { l2_norm: scale_v, ..RandomFieldSpec::broadband() }, &mut rng)
            .into_physical();
        let w = random_field(&grid, &RandomFieldSpec { l2_norm: scale_w, ..RandomFieldSpec::broadband() }, &mut rng)
            .into_physical();
        let exact = cubic_nonlinearity(&v.add(&w)?)?.sub(&cubic_nonlinearity(&v)?)?;
        let terms = perturbation_terms(&w, &v)?;
        let scale = cubic_nonlinearity(&v.add(&w)?)?.max_modulus().max(cubic_nonlinearity(&v)?.max_modulus());
        identity = identity.max(terms.sub(&exact)?.max_modulus() / scale);
    }

    // Ten periods of the full equation from v_per(0) + w0 against v_per + w.
    let setup = cfg.setup()?;
    let v_per = &run.series;
    let st = cfg.stability.as_ref().expect("reference config has a stability section");
    let w0 = st.perturbation.realize(&setup.grid)?;
    let m_t = v_per.m_t();
    let steps = 10 * m_t;
    let u0 = v_per.fields()[0].add(&w0)?;
    let direct = integrate_forced(&u0, &setup.forcing.series, &setup.op, steps, m_t, EtdScheme::Etd2)?;
    let base = integrate_forced(&v_per.fields()[0], &setup.forcing.series, &setup.op, steps, m_t, EtdScheme::Etd2)?;
    let pert = integrate_perturbation(&w0, v_per, &setup.op, steps, m_t, EtdScheme::Etd2)?;
    let mut agreement = 0.0f64;
    for ((u, b), w) in direct.iter().zip(&base).zip(&pert) {
        agreement = agreement.max(u.sub(b)?.sub(w)?.l2_norm() / w.l2_norm());
    }
    let mut drift = 0.0f64;
    for b in &base {
        drift = drift.max(rel(b, &v_per.fields()[0]));
    }
    let passed = identity <= 1e-12 && agreement <= 1e-6;
    Ok(Outcome::new(
        passed,
        format!("identity {identity:.2e} direct vs perturbation {agreement:.2e} (v_per drift {drift:.2e})"),
    ))
}

fn report(out: &mut impl Write, n: usize, outcome: anyhow::Result<Outcome>, started: Instant) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (passed, detail) = match outcome {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e:#}")),
    };
    writeln!(out, "criterion {n}: {} {detail} [{secs:.1}s]", if passed { "PASS" } else { "FAIL" }).unwrap();
    out.flush().unwrap();
    passed
}

fn main() {
    // `cargo test -- --list` and filters are harness conventions; honour the
    // listing request so tooling that enumerates tests does not run the suite.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut out = std::io::stdout();
    let scratch = tempfile::tempdir().expect("temporary directory");
    let cfg = reference();
    let mut all = true;

    let t = Instant::now();
    all &= report(&mut out, 1, criterion_1(), t);
    let t = Instant::now();
    all &= report(&mut out, 2, criterion_2(), t);

    let t = Instant::now();
    let solve_dir = scratch.path().join("solve");
    let run = cmd_solve_periodic(&cfg, &solve_dir).expect("reference solve");
    let eps_rows = sweep_rows(&cfg, SweepAxis::Epsilon, vec![1e-3, 2e-3, 3e-3, 6e-3, 1e-2], &scratch.path().join("sweep_epsilon"))
        .expect("epsilon sweep");
    all &= report(&mut out, 3, criterion_3(&run, &cfg, &eps_rows, scratch.path()), t);
    let t = Instant::now();
    all &= report(&mut out, 4, Ok(criterion_4(&eps_rows)), t);

    let t = Instant::now();
    let stability = cmd_stability(&cfg, Some(&solve_dir.join("manifest.json")), &scratch.path().join("stability"))
        .expect("stability run");
    all &= report(&mut out, 5, Ok(criterion_5(&stability.report)), t);
    let t = Instant::now();
    all &= report(&mut out, 6, criterion_6(&run, &solve_dir, stability.report.max_oddness), t);
    let t = Instant::now();
    all &= report(&mut out, 7, criterion_7(&cfg, scratch.path()), t);
    let t = Instant::now();
    all &= report(&mut out, 8, criterion_8(&run, &cfg), t);

    if !all {
        std::process::exit(1);
    }
}
