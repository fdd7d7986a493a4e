//! Duhamel integrals `I(t) = int_0^t e^{-(t-s)A} F(s) ds`, mode by mode.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{check_zero_mode, period_inverse_apply, semigroup_apply, LinearOperator};
use crate::spectral::{FieldSeries, Grid, Representation, SpectralField};

const TAYLOR_RADIUS: f64 = 1e-3;

/// `phi_1(z) = (e^z - 1) / z`, with a six-term series near 0.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < TAYLOR_RADIUS {
        // 1 + z/2 + z^2/6 + z^3/24 + z^4/120 + z^5/720
        let mut sum = Complex64::new(0.0, 0.0);
        let mut fact = 720.0;
        for k in (0..6).rev() {
            sum = sum * z + Complex64::new(1.0 / fact, 0.0);
            fact /= (k + 1) as f64;
        }
        return sum;
    }
    (z.exp() - 1.0) / z
}

/// `phi_2(z) = (e^z - 1 - z) / z^2`, with a six-term series near 0.
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < TAYLOR_RADIUS {
        // 1/2 + z/6 + z^2/24 + z^3/120 + z^4/720 + z^5/5040
        let mut sum = Complex64::new(0.0, 0.0);
        let mut fact = 5040.0;
        for k in (0..6).rev() {
            sum = sum * z + Complex64::new(1.0 / fact, 0.0);
            fact /= (k + 2) as f64;
        }
        return sum;
    }
    (z.exp() - 1.0 - z) / (z * z)
}

/// How `F` is represented between time nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeQuadrature {
    /// Exact integration against the piecewise-linear interpolant of `F`;
    /// second order in `m_t`, exact for `F` constant in time.
    #[default]
    PiecewiseLinear,
    /// Exact integration against the trigonometric interpolant of the
    /// periodic samples; exact for `F` band-limited in time.
    Trigonometric,
}

/// Per-mode coefficients of one step of length `h`:
/// `I_{j+1} = E I_j + a F_j + b F_{j+1}`.
#[derive(Debug, Clone)]
pub struct StepCoefficients {
    pub h: f64,
    pub decay: Vec<Complex64>,
    pub left: Vec<Complex64>,
    pub right: Vec<Complex64>,
}

impl StepCoefficients {
    pub fn new(op: &LinearOperator, h: f64) -> Self {
        let grid = op.grid();
        let nyq = grid.nyquist_mask();
        let n = grid.len();
        let mut decay = Vec::with_capacity(n);
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for (i, &lam) in op.symbol().iter().enumerate() {
            if nyq[i] {
                decay.push(Complex64::default());
                left.push(Complex64::default());
                right.push(Complex64::default());
                continue;
            }
            let z = -lam * h;
            let (p1, p2) = (phi1(z), phi2(z));
            decay.push(z.exp());
            left.push((p1 - p2) * h);
            right.push(p2 * h);
        }
        Self { h, decay, left, right }
    }

    /// `E I + a F_j + b F_{j+1}` into a new field.
    pub fn advance(&self, prev: &SpectralField, f0: &SpectralField, f1: &SpectralField) -> SpectralField {
        let mut out = prev.clone();
        let (p, a, b) = (f0.data(), f1.data(), out.data_mut());
        for i in 0..b.len() {
            b[i] = self.decay[i] * b[i] + self.left[i] * p[i] + self.right[i] * a[i];
        }
        out
    }
}

fn frequency_fields(f: &FieldSeries) -> Vec<SpectralField> {
    match f.representation() {
        Representation::Frequency => f.fields().to_vec(),
        Representation::Physical => f.to_frequency().into_fields(),
    }
}

/// `I(t_m)` for every node `m = 0..=m_t`.
pub fn duhamel_all(
    f: &FieldSeries,
    op: &LinearOperator,
    quadrature: TimeQuadrature,
) -> Result<Vec<SpectralField>> {
    if !f.grid().same_as(op.grid()) {
        return Err(Error::GridMismatch);
    }
    let fields = frequency_fields(f);
    match quadrature {
        TimeQuadrature::PiecewiseLinear => {
            let coeffs = StepCoefficients::new(op, f.dt());
            let mut out = Vec::with_capacity(fields.len());
            out.push(SpectralField::zeros(op.grid(), Representation::Frequency));
            for j in 0..fields.len() - 1 {
                let next = coeffs.advance(&out[j], &fields[j], &fields[j + 1]);
                out.push(next);
            }
            Ok(out)
        }
        TimeQuadrature::Trigonometric => Ok(trigonometric(&fields, f.period(), op, false)),
    }
}

/// `I(t_m)` at a single node (piecewise-linear quadrature).
pub fn duhamel_integral(f: &FieldSeries, t_index: usize, op: &LinearOperator) -> Result<SpectralField> {
    if t_index > f.m_t() {
        return Err(Error::IndexOutOfRange {
            index: t_index,
            max: f.m_t(),
        });
    }
    if !f.grid().same_as(op.grid()) {
        return Err(Error::GridMismatch);
    }
    let fields = frequency_fields(f);
    let coeffs = StepCoefficients::new(op, f.dt());
    let mut acc = SpectralField::zeros(op.grid(), Representation::Frequency);
    for j in 0..t_index {
        acc = coeffs.advance(&acc, &fields[j], &fields[j + 1]);
    }
    Ok(acc)
}

/// Time-Fourier evaluation on the periodic samples `fields[0..m_t]`.
///
/// With `c_q` the time-DFT coefficients and `omega_q = 2 pi q / T`,
/// `I(t) = sum_q c_q (e^{i omega_q t} - e^{-lambda t}) / (lambda + i omega_q)`.
/// When `periodic_part` is set only `sum_q c_q e^{i omega_q t}/(lambda + i omega_q)`
/// is returned, the periodic response, with the mean mode zeroed.
fn trigonometric(
    fields: &[SpectralField],
    period: f64,
    op: &LinearOperator,
    periodic_part: bool,
) -> Vec<SpectralField> {
    let grid: &Arc<Grid> = op.grid();
    let m = fields.len() - 1;
    let dt = period / m as f64;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut scratch = vec![Complex64::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    let omegas: Vec<f64> = (0..m)
        .map(|q| {
            let qs = if q < m / 2 { q as i64 } else { q as i64 - m as i64 };
            2.0 * std::f64::consts::PI * qs as f64 / period
        })
        .collect();
    let mut out: Vec<SpectralField> = (0..=m)
        .map(|_| SpectralField::zeros(grid, Representation::Frequency))
        .collect();
    let nyq = grid.nyquist_mask();
    let mut line = vec![Complex64::default(); m];
    for (i, &lam) in op.symbol().iter().enumerate() {
        if nyq[i] || (periodic_part && i == 0) {
            continue;
        }
        for (s, f) in line.iter_mut().zip(fields) {
            *s = f.data()[i];
        }
        fwd.process_with_scratch(&mut line, &mut scratch);
        let mut singular = Complex64::default();
        let mut sum_d = Complex64::default();
        for (q, c) in line.iter_mut().enumerate() {
            let c_q = *c / m as f64;
            let denom = lam + Complex64::new(0.0, omegas[q]);
            if denom.norm() == 0.0 {
                singular = c_q;
                *c = Complex64::default();
            } else {
                *c = c_q / denom;
                sum_d += *c;
            }
        }
        inv.process_with_scratch(&mut line, &mut scratch);
        for (k, value) in line.iter().enumerate() {
            let t = k as f64 * dt;
            let v = if periodic_part {
                *value
            } else {
                *value - (-lam * t).exp() * sum_d + singular * t
            };
            out[k].data_mut()[i] = v;
        }
        let v_end = if periodic_part {
            line[0]
        } else {
            line[0] - (-lam * period).exp() * sum_d + singular * period
        };
        out[m].data_mut()[i] = v_end;
    }
    out
}

/// `u_0 = (1 - e^{-TA})^{-1} I(T)`, the initial value of the periodic
/// response to `F`. Every node of `F` must pass the zero-mode check.
pub fn periodic_initial_data(
    f: &FieldSeries,
    op: &LinearOperator,
    zero_mode_tol: f64,
) -> Result<SpectralField> {
    check_series_zero_mode(f, zero_mode_tol)?;
    let end = duhamel_integral(f, f.m_t(), op)?;
    period_inverse_apply(&end, op, f64::INFINITY)
}

pub(crate) fn check_series_zero_mode(f: &FieldSeries, tol: f64) -> Result<()> {
    for field in f.fields() {
        match field.representation() {
            Representation::Frequency => check_zero_mode(field, tol)?,
            Representation::Physical => check_zero_mode(&field.to_frequency(), tol)?,
        }
    }
    Ok(())
}

/// The periodic response `u(t_m) = e^{-t_m A} u_0 + I(t_m)` to `F` (the
/// linear period map), in frequency representation.
pub fn linear_period_map(
    f: &FieldSeries,
    op: &LinearOperator,
    quadrature: TimeQuadrature,
    zero_mode_tol: f64,
) -> Result<FieldSeries> {
    if (f.period() - op.period()).abs() > 1e-12 * op.period() {
        return Err(Error::InvalidParameter(format!(
            "series period {} differs from operator period {}",
            f.period(),
            op.period()
        )));
    }
    check_series_zero_mode(f, zero_mode_tol)?;
    let fields = match quadrature {
        TimeQuadrature::PiecewiseLinear => {
            let integrals = duhamel_all(f, op, quadrature)?;
            let u0 = period_inverse_apply(&integrals[f.m_t()], op, f64::INFINITY)?;
            let dt = f.dt();
            integrals
                .into_iter()
                .enumerate()
                .map(|(m, i_m)| {
                    let mut u = semigroup_apply(&u0, m as f64 * dt, op)?;
                    u.axpy(Complex64::new(1.0, 0.0), &i_m)?;
                    Ok(u)
                })
                .collect::<Result<Vec<_>>>()?
        }
        TimeQuadrature::Trigonometric => trigonometric(&frequency_fields(f), f.period(), op, true),
    };
    FieldSeries::new(fields, f.period())
}
