//! Perturbations `w = u - v_per` of the periodic solution and their decay.
//!
//! `w` solves `w_t + A w = |v+w|^2 (v+w) - |v|^2 v` with `v = v_per(t)`; it
//! is advanced with exponential time differencing.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::check_oddness;
use crate::norms::{derivative_energies, Weight};
use crate::operators::{project, Band, CutoffSpec, LinearOperator};
use crate::solver::{phi1, phi2};
use crate::spectral::{cubic_nonlinearity, dealias_in_place, FieldSeries, Grid, Representation, SpectralField};

/// `|v+w|^2 (v+w) - |v|^2 v` expanded as
/// `2|v|^2 w + v^2 conj(w) + conj(v) w^2 + 2|w|^2 v + |w|^2 w`, pointwise,
/// physical representation in and out.
pub fn perturbation_terms(w: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    w.require(Representation::Physical)?;
    v.require(Representation::Physical)?;
    w.require_same_grid(v)?;
    let data = w
        .data()
        .iter()
        .zip(v.data())
        .map(|(&w, &v)| {
            let w2 = w.norm_sqr();
            v.norm_sqr() * 2.0 * w + v * v * w.conj() + v.conj() * w * w + v * (2.0 * w2) + w * w2
        })
        .collect();
    SpectralField::from_data(w.grid(), Representation::Physical, data)
}

/// The dealiased perturbation nonlinearity in frequency representation.
pub fn perturbation_rhs(w: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    w.require_same_grid(v)?;
    let mut f = perturbation_terms(&w.to_physical(), &v.to_physical())?.into_frequency();
    let fraction = f.grid().config().dealias_fraction;
    dealias_in_place(&mut f, fraction)?;
    Ok(f)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtdScheme {
    /// `w+ = E w + h phi_1 N(w)`; first order.
    Euler,
    /// Predictor `a = E w + h phi_1 N(w)`, corrector
    /// `w+ = a + h phi_2 (N(a) - N(w))`; second order.
    #[default]
    Etd2,
}

/// Per-mode coefficients for exponential steps of length `h`.
#[derive(Debug, Clone)]
pub struct EtdStepper {
    h: f64,
    scheme: EtdScheme,
    decay: Vec<Complex64>,
    c1: Vec<Complex64>,
    c2: Vec<Complex64>,
}

impl EtdStepper {
    pub fn new(op: &LinearOperator, h: f64, scheme: EtdScheme) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be positive (got {h})")));
        }
        let nyq = op.grid().nyquist_mask();
        let n = op.symbol().len();
        let (mut decay, mut c1, mut c2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (i, &lam) in op.symbol().iter().enumerate() {
            if nyq[i] {
                decay.push(Complex64::default());
                c1.push(Complex64::default());
                c2.push(Complex64::default());
                continue;
            }
            let z = -lam * h;
            decay.push(z.exp());
            c1.push(phi1(z) * h);
            c2.push(phi2(z) * h);
        }
        Ok(Self { h, scheme, decay, c1, c2 })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn scheme(&self) -> EtdScheme {
        self.scheme
    }

    /// One step from `w` (frequency representation). `rhs(x, stage)`
    /// evaluates the nonlinearity at the start (`stage = 0`) or the end
    /// (`stage = 1`) of the step and returns it in frequency representation.
    pub fn step<F>(&self, w: &SpectralField, rhs: F) -> Result<SpectralField>
    where
        F: Fn(&SpectralField, usize) -> Result<SpectralField>,
    {
        w.require(Representation::Frequency)?;
        let n0 = rhs(w, 0)?;
        let mut a = w.clone();
        for (i, z) in a.data_mut().iter_mut().enumerate() {
            *z = self.decay[i] * *z + self.c1[i] * n0.data()[i];
        }
        let out = match self.scheme {
            EtdScheme::Euler => a,
            EtdScheme::Etd2 => {
                let n1 = rhs(&a, 1)?;
                let mut out = a;
                for (i, z) in out.data_mut().iter_mut().enumerate() {
                    *z += self.c2[i] * (n1.data()[i] - n0.data()[i]);
                }
                out
            }
        };
        if !out.is_finite() {
            return Err(Error::NonFiniteField("exponential step".into()));
        }
        Ok(out)
    }
}

/// One exponential step of the perturbation equation with `v` frozen over
/// the step (`v_next` is used by the second-order corrector).
pub fn exp_step(
    w: &SpectralField,
    v_now: &SpectralField,
    v_next: &SpectralField,
    stepper: &EtdStepper,
) -> Result<SpectralField> {
    let (vp0, vp1) = (v_now.to_physical(), v_next.to_physical());
    stepper.step(&w.to_frequency(), |x, stage| {
        perturbation_rhs(x, if stage == 0 { &vp0 } else { &vp1 })
    })
}

/// `v_per` sampled at arbitrary times, with physical copies of the nodes.
struct PeriodicSampler {
    nodes: Vec<SpectralField>,
    dt: f64,
    m_t: usize,
}

impl PeriodicSampler {
    fn new(v: &FieldSeries) -> Self {
        Self {
            nodes: v.fields()[..v.m_t()].iter().map(SpectralField::to_physical).collect(),
            dt: v.dt(),
            m_t: v.m_t(),
        }
    }

    /// Node index when `t` sits on a node (relative tolerance 1e-9).
    fn node_at(&self, t: f64) -> Option<usize> {
        let p = t / self.dt;
        let r = p.round();
        ((p - r).abs() <= 1e-9 * p.abs().max(1.0)).then(|| (r as i64).rem_euclid(self.m_t as i64) as usize)
    }

    fn at(&self, t: f64) -> SpectralField {
        if let Some(m) = self.node_at(t) {
            return self.nodes[m].clone();
        }
        let p = t / self.dt;
        let base = p.floor();
        let frac = p - base;
        let m0 = (base as i64).rem_euclid(self.m_t as i64) as usize;
        let m1 = (m0 + 1) % self.m_t;
        let mut out = self.nodes[m0].scaled(Complex64::new(1.0 - frac, 0.0));
        out.axpy(Complex64::new(frac, 0.0), &self.nodes[m1]).expect("same grid");
        out
    }
}

/// Settings of a decay run; the periodic solution and `w_0` are passed
/// alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityRunConfig {
    pub t_max: f64,
    /// Step; `None` uses the spacing of the periodic solution.
    pub h: Option<f64>,
    pub record_stride: usize,
    pub scheme: EtdScheme,
    /// Drop all nonlinear and coupling terms (pure linear flow).
    pub linear_only: bool,
    /// `max |w|` above which the run counts as escaped.
    pub escape_threshold: f64,
    /// Fit window; `None` uses `[1, 0.25 (L / 2 pi)^2]`.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for StabilityRunConfig {
    fn default() -> Self {
        Self {
            t_max: 26.0,
            h: None,
            record_stride: 8,
            scheme: EtdScheme::Etd2,
            linear_only: false,
            escape_threshold: 1e3,
            fit_window: None,
        }
    }
}

/// Default fit window `[1, 0.25 (L / 2 pi)^2]` where the lowest torus mode
/// has not yet taken over.
pub fn default_fit_window(grid: &Grid) -> (f64, f64) {
    let s = grid.box_length() / (2.0 * std::f64::consts::PI);
    (1.0, 0.25 * s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least squares of `log value` against `log(1 + t)` over samples with
/// `t` in `window` (inclusive).
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter("times and values differ in length".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("non-positive value {v} at t = {t}")));
        }
        xs.push((1.0 + t).ln());
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "{n} samples in fit window [{}, {}], need 8",
            window.0, window.1
        )));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(DecayFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        samples: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub l2_w: Vec<f64>,
    pub h1_grad_w: Vec<f64>,
    pub n1_series: Vec<f64>,
    pub n2_series: Vec<f64>,
    pub n_series: Vec<f64>,
    pub fitted_slope_l0: Option<f64>,
    pub fitted_slope_l1: Option<f64>,
    pub fit_l0: Option<DecayFit>,
    pub fit_l1: Option<DecayFit>,
    pub fit_window: (f64, f64),
    pub escaped: bool,
    pub escape_time: Option<f64>,
    /// `v_per` had to be interpolated between its nodes.
    pub interpolated: bool,
    /// Largest oddness residual over recorded snapshots.
    pub max_oddness: f64,
    pub h: f64,
    pub steps: usize,
}

/// Headline numbers of a [`DecayReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub fitted_slope_l0: Option<f64>,
    pub fitted_slope_l1: Option<f64>,
    pub fit_window: (f64, f64),
    pub escaped: bool,
    pub escape_time: Option<f64>,
    pub interpolated: bool,
    pub final_n: f64,
    pub max_oddness: f64,
}

impl DecayReport {
    pub fn summary(&self) -> DecaySummary {
        DecaySummary {
            fitted_slope_l0: self.fitted_slope_l0,
            fitted_slope_l1: self.fitted_slope_l1,
            fit_window: self.fit_window,
            escaped: self.escaped,
            escape_time: self.escape_time,
            interpolated: self.interpolated,
            final_n: self.n_series.last().copied().unwrap_or(0.0),
            max_oddness: self.max_oddness,
        }
    }

    /// Rows `(t, l2_w, h1_grad_w, n1, n2, n)`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 6]> + '_ {
        (0..self.times.len()).map(move |i| {
            [
                self.times[i],
                self.l2_w[i],
                self.h1_grad_w[i],
                self.n1_series[i],
                self.n2_series[i],
                self.n_series[i],
            ]
        })
    }
}

struct Functionals {
    l2: f64,
    grad: f64,
    n1_term: f64,
    n2_term: f64,
}

fn functionals(w: &SpectralField, t: f64, cutoffs: &CutoffSpec) -> Result<Functionals> {
    let e = derivative_energies(w, 1, Weight::Unit)?;
    let low = project(w, Band::Low, cutoffs);
    let high = project(w, Band::High, cutoffs);
    let el = derivative_energies(&low, 1, Weight::Unit)?;
    let eh = derivative_energies(&high, 1, Weight::Unit)?;
    let s = 1.0 + t;
    Ok(Functionals {
        l2: e[0].sqrt(),
        grad: e[1].sqrt(),
        n1_term: s.powf(0.75) * el[0].sqrt() + s.powf(1.25) * el[1].sqrt(),
        n2_term: s.powf(1.25) * (eh[0] + eh[1]).sqrt(),
    })
}

/// Integrates the perturbation equation about `v_per` from `w0` and records
/// decay norms and the running suprema `N_1`, `N_2`, `N = N_1 + N_2`.
pub fn run_stability(
    cfg: &StabilityRunConfig,
    v_per: &FieldSeries,
    w0: &SpectralField,
    op: &LinearOperator,
    cutoffs: &CutoffSpec,
) -> Result<DecayReport> {
    if !(cfg.t_max > 0.0) || cfg.record_stride == 0 {
        return Err(Error::InvalidParameter("t_max must be positive and record_stride at least 1".into()));
    }
    if !w0.grid().same_as(v_per.grid()) || !op.grid().same_as(v_per.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid: Arc<Grid> = v_per.grid().clone();
    let h = cfg.h.unwrap_or(v_per.dt());
    let stepper = EtdStepper::new(op, h, cfg.scheme)?;
    let steps = (cfg.t_max / h).round() as usize;
    let sampler = PeriodicSampler::new(v_per);
    let fit_window = cfg.fit_window.unwrap_or_else(|| default_fit_window(&grid));

    let mut report = DecayReport {
        times: Vec::new(),
        l2_w: Vec::new(),
        h1_grad_w: Vec::new(),
        n1_series: Vec::new(),
        n2_series: Vec::new(),
        n_series: Vec::new(),
        fitted_slope_l0: None,
        fitted_slope_l1: None,
        fit_l0: None,
        fit_l1: None,
        fit_window,
        escaped: false,
        escape_time: None,
        interpolated: false,
        max_oddness: 0.0,
        h,
        steps: 0,
    };
    let mut w = w0.to_frequency();
    let (mut n1, mut n2) = (0.0f64, 0.0f64);
    let record = |w: &SpectralField, t: f64, report: &mut DecayReport, n1: f64, n2: f64, f: &Functionals| {
        report.times.push(t);
        report.l2_w.push(f.l2);
        report.h1_grad_w.push(f.grad);
        report.n1_series.push(n1);
        report.n2_series.push(n2);
        report.n_series.push(n1 + n2);
        report.max_oddness = report.max_oddness.max(check_oddness(w));
    };
    let f0 = functionals(&w, 0.0, cutoffs)?;
    n1 = n1.max(f0.n1_term);
    n2 = n2.max(f0.n2_term);
    record(&w, 0.0, &mut report, n1, n2, &f0);

    for k in 0..steps {
        let t0 = k as f64 * h;
        let t1 = t0 + h;
        if sampler.node_at(t0).is_none() || sampler.node_at(t1).is_none() {
            report.interpolated = true;
        }
        let result = if cfg.linear_only {
            stepper.step(&w, |x, _| Ok(SpectralField::zeros(x.grid(), Representation::Frequency)))
        } else {
            let (v0, v1) = (sampler.at(t0), sampler.at(t1));
            stepper.step(&w, |x, stage| perturbation_rhs(x, if stage == 0 { &v0 } else { &v1 }))
        };
        let next = match result {
            Ok(next) if next.max_modulus() <= cfg.escape_threshold => next,
            Ok(_) | Err(Error::NonFiniteField(_)) => {
                report.escaped = true;
                report.escape_time = Some(t1);
                break;
            }
            Err(e) => return Err(e),
        };
        w = next;
        report.steps = k + 1;
        let f = functionals(&w, t1, cutoffs)?;
        n1 = n1.max(f.n1_term);
        n2 = n2.max(f.n2_term);
        if (k + 1) % cfg.record_stride == 0 || k + 1 == steps {
            record(&w, t1, &mut report, n1, n2, &f);
        }
    }
    if !report.escaped {
        report.fit_l0 = fit_decay_rate(&report.times, &report.l2_w, fit_window).ok();
        report.fit_l1 = fit_decay_rate(&report.times, &report.h1_grad_w, fit_window).ok();
        report.fitted_slope_l0 = report.fit_l0.map(|f| f.slope);
        report.fitted_slope_l1 = report.fit_l1.map(|f| f.slope);
    }
    Ok(report)
}

/// Integrates `u_t + A u = dealias(|u|^2 u) + g(t)` from `u0` for `steps`
/// steps of the forcing's node spacing, returning `u` after every
/// `record_every` steps (`g` is extended periodically).
pub fn integrate_forced(
    u0: &SpectralField,
    g: &FieldSeries,
    op: &LinearOperator,
    steps: usize,
    record_every: usize,
    scheme: EtdScheme,
) -> Result<Vec<SpectralField>> {
    let stepper = EtdStepper::new(op, g.dt(), scheme)?;
    let g = g.to_frequency();
    let m_t = g.m_t();
    let fraction = u0.grid().config().dealias_fraction;
    let mut u = u0.to_frequency();
    let mut out = Vec::new();
    for k in 0..steps {
        let (g0, g1) = (&g.fields()[k % m_t], &g.fields()[(k + 1) % m_t]);
        u = stepper.step(&u, |x, stage| {
            let mut c = cubic_nonlinearity(&x.to_physical())?.into_frequency();
            dealias_in_place(&mut c, fraction)?;
            c.axpy(Complex64::new(1.0, 0.0), if stage == 0 { g0 } else { g1 })?;
            Ok(c)
        })?;
        if record_every > 0 && (k + 1) % record_every == 0 {
            out.push(u.clone());
        }
    }
    Ok(out)
}

/// Integrates the perturbation equation about `v_per` with the step locked
/// to its nodes, returning `w` after every `record_every` steps.
pub fn integrate_perturbation(
    w0: &SpectralField,
    v_per: &FieldSeries,
    op: &LinearOperator,
    steps: usize,
    record_every: usize,
    scheme: EtdScheme,
) -> Result<Vec<SpectralField>> {
    let stepper = EtdStepper::new(op, v_per.dt(), scheme)?;
    let sampler = PeriodicSampler::new(v_per);
    let m_t = v_per.m_t();
    let mut w = w0.to_frequency();
    let mut out = Vec::new();
    for k in 0..steps {
        let (v0, v1) = (&sampler.nodes[k % m_t], &sampler.nodes[(k + 1) % m_t]);
        w = stepper.step(&w, |x, stage| perturbation_rhs(x, if stage == 0 { v0 } else { v1 }))?;
        if record_every > 0 && (k + 1) % record_every == 0 {
            out.push(w.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::PerturbationSpec;
    use crate::operators::{auto_cutoffs, semigroup_apply};
    use crate::random::{random_field, sample_rng, RandomFieldSpec};
    use crate::spectral::{make_grid, GridConfig};
    use rand::Rng;

    fn grid3() -> Arc<Grid> {
        make_grid(GridConfig::new(3, 8, 12.0)).unwrap()
    }

    #[test]
    fn perturbation_terms_examples() {
        let grid = grid3();
        let spec = RandomFieldSpec::broadband();
        let w = random_field(&grid, &spec, &mut sample_rng(41, 0)).into_physical();
        let v = random_field(&grid, &spec, &mut sample_rng(41, 1)).into_physical();
        let zero = SpectralField::zeros(&grid, Representation::Physical);
        assert_eq!(perturbation_terms(&zero, &v).unwrap().max_modulus(), 0.0);
        let only = perturbation_terms(&w, &zero).unwrap();
        let cubic = cubic_nonlinearity(&w).unwrap();
        assert!(only.sub(&cubic).unwrap().max_modulus() < 1e-15);
        let sum = v.add(&w).unwrap();
        let diff = cubic_nonlinearity(&sum).unwrap().sub(&cubic_nonlinearity(&v).unwrap()).unwrap();
        let terms = perturbation_terms(&w, &v).unwrap();
        assert!(terms.sub(&diff).unwrap().max_modulus() <= 1e-12 * diff.max_modulus().max(1.0));
        assert!(perturbation_terms(&w.to_frequency(), &v).is_err());
    }

    #[test]
    fn linear_step_is_the_semigroup() {
        let grid = grid3();
        let op = LinearOperator::new(&grid, 1.0).unwrap();
        let w = random_field(&grid, &RandomFieldSpec::broadband(), &mut sample_rng(42, 0));
        for scheme in [EtdScheme::Euler, EtdScheme::Etd2] {
            for h in [1e-3, 0.4, 7.0] {
                let stepper = EtdStepper::new(&op, h, scheme).unwrap();
                let out = stepper
                    .step(&w, |x, _| Ok(SpectralField::zeros(x.grid(), Representation::Frequency)))
                    .unwrap();
                let exact = semigroup_apply(&w, h, &op).unwrap();
                assert!(out.sub(&exact).unwrap().max_modulus() <= 1e-14 * w.max_modulus());
            }
        }
        assert!(EtdStepper::new(&op, 0.0, EtdScheme::Euler).is_err());
    }

    #[test]
    fn constant_forcing_step_matches_duhamel() {
        let grid = grid3();
        let op = LinearOperator::new(&grid, 1.0).unwrap();
        let idx = grid.mode_index(&[1, 2, 0]).unwrap();
        let lam = op.symbol()[idx];
        let c = Complex64::new(0.3, -0.8);
        let mut forcing = SpectralField::zeros(&grid, Representation::Frequency);
        forcing.data_mut()[idx] = c;
        let zero = SpectralField::zeros(&grid, Representation::Frequency);
        for scheme in [EtdScheme::Euler, EtdScheme::Etd2] {
            let h = 0.37;
            let out = EtdStepper::new(&op, h, scheme)
                .unwrap()
                .step(&zero, |_, _| Ok(forcing.clone()))
                .unwrap();
            let expected = c * (1.0 - (-lam * h).exp()) / lam;
            assert!((out.data()[idx] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn order_sweep_on_manufactured_solution() {
        // Single mode, N(w, t) = i w |w|^2 couples in time; compare against a
        // fine reference.
        let grid = make_grid(GridConfig::new(1, 8, 2.0 * std::f64::consts::PI)).unwrap();
        let op = LinearOperator::new(&grid, 1.0).unwrap();
        let idx = grid.mode_index(&[1]).unwrap();
        let mut w0 = SpectralField::zeros(&grid, Representation::Frequency);
        w0.data_mut()[idx] = Complex64::new(1.0, 0.0);
        let rhs = |x: &SpectralField, _: usize| -> Result<SpectralField> {
            let mut out = x.clone();
            for z in out.data_mut() {
                *z = Complex64::new(0.0, 2.0) * *z * z.norm_sqr() + Complex64::new(0.5, 0.0) * *z;
            }
            Ok(out)
        };
        let solve = |h: f64, scheme: EtdScheme| {
            let stepper = EtdStepper::new(&op, h, scheme).unwrap();
            let mut w = w0.clone();
            for _ in 0..(1.0 / h).round() as usize {
                w = stepper.step(&w, rhs).unwrap();
            }
            w.data()[idx]
        };
        let reference = solve(1.0 / 8192.0, EtdScheme::Etd2);
        for (scheme, order) in [(EtdScheme::Euler, 2.0), (EtdScheme::Etd2, 4.0)] {
            let e1 = (solve(1.0 / 32.0, scheme) - reference).norm();
            let e2 = (solve(1.0 / 64.0, scheme) - reference).norm();
            let ratio = e1 / e2;
            assert!((ratio - order).abs() < 0.3 * order, "{scheme:?}: {ratio}");
        }
    }

    #[test]
    fn fit_examples() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.25).collect();
        for p in [-0.75, -1.25] {
            let values: Vec<f64> = times.iter().map(|t| 3.0 * (1.0 + t).powf(p)).collect();
            let fit = fit_decay_rate(&times, &values, (1.0, 40.0)).unwrap();
            assert!((fit.slope - p).abs() < 1e-6);
            assert!((fit.r_squared - 1.0).abs() < 1e-9);
            assert!((fit.intercept - 3f64.ln()).abs() < 1e-6);
        }
        assert!(fit_decay_rate(&times[..6], &[1.0; 6], (0.0, 10.0)).is_err());
        let mut bad: Vec<f64> = times.iter().map(|t| (1.0 + t).powf(-0.75)).collect();
        bad[10] = 0.0;
        assert!(fit_decay_rate(&times, &bad, (0.0, 40.0)).is_err());
    }

    #[test]
    fn fit_with_noise_monte_carlo() {
        let times: Vec<f64> = (0..100).map(|i| 1.0 + i as f64 * 0.25).collect();
        let mut worst: f64 = 0.0;
        for seed in 0..100 {
            let mut rng = sample_rng(4242, seed);
            let values: Vec<f64> = times
                .iter()
                .map(|t| (1.0 + t).powf(-0.75) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
                .collect();
            let fit = fit_decay_rate(&times, &values, (1.0, 30.0)).unwrap();
            worst = worst.max((fit.slope + 0.75).abs());
        }
        assert!(worst < 0.02, "{worst}");
    }

    #[test]
    fn zero_perturbation_stays_zero() {
        let grid = grid3();
        let op = LinearOperator::new(&grid, 1.0).unwrap();
        let cut = auto_cutoffs(&grid, 1.0).unwrap();
        let v = FieldSeries::zeros(&grid, Representation::Frequency, 8, 1.0);
        let w0 = SpectralField::zeros(&grid, Representation::Frequency);
        let cfg = StabilityRunConfig { t_max: 2.0, record_stride: 1, fit_window: Some((0.0, 2.0)), ..Default::default() };
        let report = run_stability(&cfg, &v, &w0, &op, &cut).unwrap();
        assert!(report.l2_w.iter().all(|&x| x == 0.0));
        assert!(report.n_series.iter().all(|&x| x == 0.0));
        assert!(!report.escaped && !report.interpolated);
        assert_eq!(report.times.len(), 17);
    }

    #[test]
    fn linear_single_mode_decays_exactly() {
        let grid = grid3();
        let op = LinearOperator::new(&grid, 1.0).unwrap();
        let cut = auto_cutoffs(&grid, 1.0).unwrap();
        let v = FieldSeries::zeros(&grid, Representation::Frequency, 8, 1.0);
        let w0 = SpectralField::plane_wave(&grid, &[1, 0, 0], Complex64::new(0.2, 0.0)).unwrap();
        let xi2 = grid.xi_squared()[grid.mode_index(&[1, 0, 0]).unwrap()];
        let cfg = StabilityRunConfig { t_max: 3.0, record_stride: 4, linear_only: true, ..Default::default() };
        let report = run_stability(&cfg, &v, &w0, &op, &cut).unwrap();
        let l0 = report.l2_w[0];
        for (t, l) in report.times.iter().zip(&report.l2_w) {
            assert!((l - l0 * (-xi2 * t).exp()).abs() < 1e-12 * l0);
        }
        for w in report.n_series.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn interpolation_is_flagged() {
        let grid = grid3();
        let op = LinearOperator::new(&grid, 1.0).unwrap();
        let cut = auto_cutoffs(&grid, 1.0).unwrap();
        let v = FieldSeries::zeros(&grid, Representation::Frequency, 8, 1.0);
        let w0 = PerturbationSpec::dipole(1e-2, 1.5).realize(&grid).unwrap();
        let cfg = StabilityRunConfig { t_max: 1.0, h: Some(0.1), ..Default::default() };
        assert!(run_stability(&cfg, &v, &w0, &op, &cut).unwrap().interpolated);
        let cfg = StabilityRunConfig { t_max: 1.0, h: Some(0.125), ..Default::default() };
        assert!(!run_stability(&cfg, &v, &w0, &op, &cut).unwrap().interpolated);
    }

    #[test]
    fn large_perturbation_escapes() {
        let grid = grid3();
        let op = LinearOperator::new(&grid, 1.0).unwrap();
        let cut = auto_cutoffs(&grid, 1.0).unwrap();
        let v = FieldSeries::zeros(&grid, Representation::Frequency, 8, 1.0);
        let w0 = PerturbationSpec::dipole(10.0, 1.5).realize(&grid).unwrap();
        let cfg = StabilityRunConfig { t_max: 5.0, ..Default::default() };
        let report = run_stability(&cfg, &v, &w0, &op, &cut).unwrap();
        assert!(report.escaped);
        assert!(report.escape_time.is_some());
    }
}
