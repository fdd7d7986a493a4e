use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{linear_period_map, TimeQuadrature};
use crate::error::{Error, Result};
use crate::forcing::check_oddness;
use crate::norms::{forcing_bracket, spacetime_norms, TimeBoundary};
use crate::operators::{project, Band, CutoffSpec, LinearOperator};
use crate::spectral::{cubic_nonlinearity, dealias_in_place, FieldSeries, Representation, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Stop once the Z-norm of the iterate increment is at most this.
    pub z_tolerance: f64,
    /// Time nodes per period.
    pub m_t: usize,
    /// Relative tolerance of the mean-mode check on `F`.
    pub zero_mode_tol: f64,
    pub nonlinearity_enabled: bool,
    pub quadrature: TimeQuadrature,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            z_tolerance: 1e-10,
            m_t: 64,
            zero_mode_tol: 1e-10,
            nonlinearity_enabled: true,
            quadrature: TimeQuadrature::PiecewiseLinear,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.m_t < 8 {
            return Err(Error::InvalidParameter(format!("m_t = {} is below 8", self.m_t)));
        }
        if !(self.z_tolerance > 0.0) || !(self.zero_mode_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// `||u^{(l+1)} - u^{(l)}||_Z` for `l = 0, 1, ...`.
    pub residual_history: Vec<f64>,
    pub periodicity_residual: f64,
    pub z_norm: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub g_bracket: f64,
    /// `z_norm / g_bracket`; `None` when `[g] = 0`.
    pub c_estimate: Option<f64>,
    pub contraction_factor: Option<f64>,
    pub equation_residual: f64,
    /// Largest oddness residual over all time nodes of all iterates.
    pub max_oddness: f64,
    pub m_t: usize,
    pub nonlinearity_enabled: bool,
}

/// Failure modes of [`solve_periodic`] that still carry the last iterate.
#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("no convergence within {} iterations (last residual {:e})", .report.iterations, .report.residual_history.last().copied().unwrap_or(f64::NAN))]
    MaxIterationsExceeded {
        report: Box<PeriodicSolveReport>,
        series: Box<FieldSeries>,
    },
    #[error("iteration diverged: {reason}")]
    Diverged {
        reason: &'static str,
        report: Box<PeriodicSolveReport>,
        series: Box<FieldSeries>,
    },
    #[error("non-finite values at iteration {}", .report.iterations)]
    NonFiniteField { report: Box<PeriodicSolveReport> },
    #[error(transparent)]
    Core(#[from] Error),
}

impl SolveError {
    pub fn report(&self) -> Option<&PeriodicSolveReport> {
        match self {
            SolveError::MaxIterationsExceeded { report, .. }
            | SolveError::Diverged { report, .. }
            | SolveError::NonFiniteField { report } => Some(report),
            SolveError::Core(_) => None,
        }
    }
}

fn series_from(fields: Vec<SpectralField>, period: f64) -> Result<FieldSeries> {
    FieldSeries::new(fields, period)
}

/// `dealias(|u|^2 u)` node by node, frequency representation.
pub fn dealiased_cubic(u: &FieldSeries) -> Result<FieldSeries> {
    let fields = u
        .fields()
        .par_iter()
        .map(|f| {
            let mut c = cubic_nonlinearity(&f.to_physical())?.into_frequency();
            let fraction = c.grid().config().dealias_fraction;
            dealias_in_place(&mut c, fraction)?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    series_from(fields, u.period())
}

/// `dealias(|v+w|^2 (v+w) - |v|^2 v)` node by node, expanded so that small
/// increments do not cancel against `|v|^2 v`.
fn dealiased_increment(w: &FieldSeries, v: &FieldSeries) -> Result<FieldSeries> {
    let fields = w
        .fields()
        .par_iter()
        .zip(v.fields().par_iter())
        .map(|(wf, vf)| {
            let mut c = crate::stability::perturbation_terms(&wf.to_physical(), &vf.to_physical())?
                .into_frequency();
            let fraction = c.grid().config().dealias_fraction;
            dealias_in_place(&mut c, fraction)?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    series_from(fields, w.period())
}

/// One literal step of the split iteration: `F = dealias(|u|^2 u) + g`,
/// `u_next = Phi(P_1 F) + Phi(P_inf F)` with `Phi` the linear period map.
pub fn picard_step(
    u: &FieldSeries,
    g: &FieldSeries,
    op: &LinearOperator,
    cutoffs: &CutoffSpec,
    opts: &SolveOptions,
) -> Result<FieldSeries> {
    let g = g.to_frequency();
    let f = if opts.nonlinearity_enabled {
        dealiased_cubic(u)?.add(&g)?
    } else {
        g
    };
    let low = f.map_fields(|x| project(x, Band::Low, cutoffs));
    let high = f.map_fields(|x| project(x, Band::High, cutoffs));
    let u1 = linear_period_map(&low, op, opts.quadrature, opts.zero_mode_tol)?;
    let u_inf = linear_period_map(&high, op, opts.quadrature, opts.zero_mode_tol)?;
    let next = u1.add(&u_inf)?;
    if !next.is_finite() {
        return Err(Error::NonFiniteField("picard step".into()));
    }
    Ok(next)
}

fn max_oddness(u: &FieldSeries) -> f64 {
    u.fields().iter().map(check_oddness).fold(0.0, f64::max)
}

/// Geometric mean of `r_{l+1} / r_l` over the history, the first ratio
/// excluded. Needs at least three residuals.
pub fn contraction_estimate(report: &PeriodicSolveReport) -> Result<f64> {
    contraction_from_history(&report.residual_history).ok_or_else(|| {
        Error::InsufficientData(format!(
            "contraction estimate needs 3 positive residuals, have {}",
            report.residual_history.len()
        ))
    })
}

fn contraction_from_history(history: &[f64]) -> Option<f64> {
    if history.len() < 3 || history.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return None;
    }
    let logs: Vec<f64> = history.windows(2).skip(1).map(|w| (w[1] / w[0]).ln()).collect();
    Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

/// Picard iteration for the `T`-periodic solution of
/// `u_t + A u = dealias(|u|^2 u) + g`.
///
/// Starts from `u^{(0)} = Phi(g)` and iterates on increments:
/// `d^{(l+1)} = Phi(N(u^{(l)}) - N(u^{(l-1)}))` with the difference of the
/// cubic terms expanded algebraically, so residuals far below the size of
/// `u` are resolved.
pub fn solve_periodic(
    g: &FieldSeries,
    op: &LinearOperator,
    cutoffs: &CutoffSpec,
    opts: &SolveOptions,
) -> std::result::Result<(FieldSeries, PeriodicSolveReport), SolveError> {
    opts.validate()?;
    if g.m_t() != opts.m_t {
        return Err(Error::InvalidParameter(format!(
            "forcing has {} intervals, options ask for {}",
            g.m_t(),
            opts.m_t
        ))
        .into());
    }
    let g = g.to_frequency();
    let g_bracket = forcing_bracket(&g)?;
    let map = |f: &FieldSeries| linear_period_map(f, op, opts.quadrature, opts.zero_mode_tol);
    // Increments shrink geometrically while their round-off mean does not, so
    // their zero mode is measured against the forcing rather than themselves.
    let mean_scale = g.fields().iter().map(SpectralField::l2_norm).fold(0.0, f64::max);
    let increment_map = |f: &FieldSeries| -> Result<FieldSeries> {
        for field in f.fields() {
            let modulus = field.data()[0].norm();
            let tolerance = opts.zero_mode_tol * mean_scale;
            if modulus > tolerance {
                return Err(Error::ZeroModeViolation { modulus, tolerance });
            }
        }
        linear_period_map(f, op, opts.quadrature, f64::INFINITY)
    };
    let z_of = |s: &FieldSeries| -> Result<f64> {
        Ok(spacetime_norms(s, None, cutoffs, TimeBoundary::Periodic)?.z_norm)
    };

    let mut u = map(&g)?;
    let mut prev = FieldSeries::zeros(g.grid(), Representation::Frequency, opts.m_t, g.period());
    let mut delta = u.clone();
    let mut history = Vec::new();
    let mut oddness = max_oddness(&u);
    let mut growth = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    let finish = |u: &FieldSeries, history: Vec<f64>, iterations: usize, converged: bool, oddness: f64| -> Result<PeriodicSolveReport> {
        let norms = spacetime_norms(u, None, cutoffs, TimeBoundary::Periodic)?;
        let eq = if u.is_finite() {
            equation_residual(u, &g, op, opts.nonlinearity_enabled)?
        } else {
            f64::NAN
        };
        Ok(PeriodicSolveReport {
            converged,
            iterations,
            contraction_factor: contraction_from_history(&history),
            residual_history: history,
            periodicity_residual: u.periodicity_residual(),
            z_norm: norms.z_norm,
            x_norm: norms.x_norm,
            y_norm: norms.y_norm,
            g_bracket,
            c_estimate: (g_bracket > 0.0).then(|| norms.z_norm / g_bracket),
            equation_residual: eq,
            max_oddness: oddness,
            m_t: opts.m_t,
            nonlinearity_enabled: opts.nonlinearity_enabled,
        })
    };

    while iterations < opts.max_iterations {
        iterations += 1;
        let next_delta = if opts.nonlinearity_enabled {
            let rhs = dealiased_increment(&delta, &prev)?;
            match increment_map(&rhs) {
                Ok(next) => next,
                // The cubic of an odd iterate has no mean; a violation here is
                // round-off of an exploding iterate.
                Err(Error::ZeroModeViolation { .. }) => {
                    let report = finish(&u, history, iterations, false, oddness)?;
                    return Err(SolveError::Diverged {
                        reason: "the cubic increment acquired a mean (round-off of a blowing-up iterate)",
                        report: Box::new(report),
                        series: Box::new(u),
                    });
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            FieldSeries::zeros(g.grid(), Representation::Frequency, opts.m_t, g.period())
        };
        if !next_delta.is_finite() {
            let report = finish(&u, history, iterations, false, oddness)?;
            return Err(SolveError::NonFiniteField {
                report: Box::new(report),
            });
        }
        let r = z_of(&next_delta)?;
        prev = u.clone();
        u = u.add(&next_delta)?;
        delta = next_delta;
        oddness = oddness.max(max_oddness(&u));
        if let Some(&last) = history.last() {
            growth = if r > last { growth + 1 } else { 0 };
        }
        history.push(r);
        if !r.is_finite() {
            let report = finish(&u, history, iterations, false, oddness)?;
            return Err(SolveError::NonFiniteField {
                report: Box::new(report),
            });
        }
        if r <= opts.z_tolerance {
            converged = true;
            break;
        }
        if growth >= 3 {
            let report = finish(&u, history, iterations, false, oddness)?;
            return Err(SolveError::Diverged {
                reason: "residual grew for 3 consecutive iterations",
                report: Box::new(report),
                series: Box::new(u),
            });
        }
    }
    let report = finish(&u, history, iterations, converged, oddness)?;
    if !converged {
        return Err(SolveError::MaxIterationsExceeded {
            report: Box::new(report),
            series: Box::new(u),
        });
    }
    Ok((u, report))
}

fn apply_symbol(f: &SpectralField, op: &LinearOperator) -> SpectralField {
    let mut out = f.to_frequency();
    for (z, lam) in out.data_mut().iter_mut().zip(op.symbol()) {
        *z *= lam;
    }
    out
}

fn node_residual(
    u: &FieldSeries,
    g: &FieldSeries,
    op: &LinearOperator,
    nonlinear: bool,
    m: usize,
) -> Result<SpectralField> {
    let fields = u.fields();
    let dt = u.dt();
    let mut r = fields[m + 1].to_frequency();
    r.axpy(Complex64::new(-1.0, 0.0), &fields[m - 1].to_frequency())?;
    r.scale(Complex64::new(0.5 / dt, 0.0));
    r.axpy(Complex64::new(1.0, 0.0), &apply_symbol(&fields[m], op))?;
    if nonlinear {
        let mut c = cubic_nonlinearity(&fields[m].to_physical())?.into_frequency();
        let fraction = c.grid().config().dealias_fraction;
        dealias_in_place(&mut c, fraction)?;
        r.axpy(Complex64::new(-1.0, 0.0), &c)?;
    }
    r.axpy(Complex64::new(-1.0, 0.0), &g.fields()[m].to_frequency())?;
    Ok(r)
}

/// `max_m ||D_t u + A u - dealias(|u|^2 u) - g||_L2 / (1 + ||u||_L2)` over the
/// interior nodes, `D_t` the centered difference.
pub fn equation_residual(
    u: &FieldSeries,
    g: &FieldSeries,
    op: &LinearOperator,
    nonlinear: bool,
) -> Result<f64> {
    if u.fields().len() != g.fields().len() {
        return Err(Error::InvalidParameter("series lengths differ".into()));
    }
    let m_t = u.m_t();
    if m_t < 2 {
        return Err(Error::InsufficientData("need at least 3 time nodes".into()));
    }
    let values = (1..m_t)
        .into_par_iter()
        .map(|m| {
            let r = node_residual(u, g, op, nonlinear, m)?;
            Ok(r.l2_norm() / (1.0 + u.fields()[m].l2_norm()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Residuals of the two halves of the split system
/// `d_t u_1 + A u_1 = P_1 F`, `d_t u_inf + A u_inf = P_inf F`, measured like
/// [`equation_residual`].
pub fn split_residuals(
    u: &FieldSeries,
    g: &FieldSeries,
    op: &LinearOperator,
    cutoffs: &CutoffSpec,
    nonlinear: bool,
) -> Result<(f64, f64)> {
    let m_t = u.m_t();
    let mut low: f64 = 0.0;
    let mut high: f64 = 0.0;
    for m in 1..m_t {
        let r = node_residual(u, g, op, nonlinear, m)?;
        let scale = 1.0 + u.fields()[m].l2_norm();
        low = low.max(project(&r, Band::Low, cutoffs).l2_norm() / scale);
        high = high.max(project(&r, Band::High, cutoffs).l2_norm() / scale);
    }
    Ok((low, high))
}
