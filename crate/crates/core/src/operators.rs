//! Frequency cutoffs, the projections `P_1`/`P_inf`, the semigroup
//! `e^{-tA}` with `A = -(1+i) Laplacian`, and the period-map inverse
//! `(1 - e^{-TA})^{-1}`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, Representation, SpectralField};

/// `T r_inf^2` targeted by [`auto_cutoffs`]. The ratio
/// `theta / |1 - e^{-(1+i) theta}|` stays below 0.91 up to this value
/// (it reaches 1 near `theta = 0.694` and 1.164 at `theta = 1`).
pub const AUTO_THETA_MAX: f64 = 0.5;

/// Smooth monotone step: 1 for `s <= 0`, 0 for `s >= 1`, `psi(1/2) = 1/2`.
pub fn smooth_step(s: f64) -> f64 {
    fn e(s: f64) -> f64 {
        if s > 0.0 {
            (-1.0 / s).exp()
        } else {
            0.0
        }
    }
    let a = e(1.0 - s);
    let b = e(s);
    if a + b == 0.0 {
        // Unreachable for finite s; keeps NaN out of the tables.
        return if s < 0.5 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

/// Tabulated low/high cutoffs `chi_1`, `chi_inf = 1 - chi_1` on the lattice.
#[derive(Debug, Clone)]
pub struct CutoffSpec {
    pub r1: f64,
    pub r_inf: f64,
    pub chi_low: Vec<f64>,
    pub chi_high: Vec<f64>,
}

impl CutoffSpec {
    /// Value of `chi_1` at frequency magnitude `rho`.
    pub fn low_symbol(&self, rho: f64) -> f64 {
        smooth_step((rho - self.r1) / (self.r_inf - self.r1))
    }

    /// Checks the admissibility bound `T r_inf^2 <= 1`.
    pub fn validate_for_period(&self, period: f64) -> Result<()> {
        let theta = period * self.r_inf * self.r_inf;
        if theta > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "T * r_inf^2 = {theta} exceeds 1 (r_inf = {}, T = {period})",
                self.r_inf
            )));
        }
        Ok(())
    }

    /// Largest deviation from `chi_1 + chi_inf = 1` over the lattice.
    pub fn completeness_defect(&self) -> f64 {
        self.chi_low
            .iter()
            .zip(&self.chi_high)
            .fold(0.0, |m, (a, b)| m.max((a + b - 1.0).abs()))
    }
}

pub fn make_cutoffs(r1: f64, r_inf: f64, grid: &Grid) -> Result<CutoffSpec> {
    if !(r1 > 0.0) || !(r_inf > r1) || !r_inf.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cutoff radii must satisfy 0 < r1 < r_inf (got r1 = {r1}, r_inf = {r_inf})"
        )));
    }
    let mut spec = CutoffSpec {
        r1,
        r_inf,
        chi_low: Vec::with_capacity(grid.len()),
        chi_high: Vec::with_capacity(grid.len()),
    };
    for &s in grid.xi_squared() {
        let low = spec.low_symbol(s.sqrt());
        spec.chi_low.push(low);
        spec.chi_high.push(1.0 - low);
    }
    Ok(spec)
}

/// Default radii: `r_inf = min(sqrt(AUTO_THETA_MAX / T), n pi / (2L))`,
/// `r1 = r_inf / 2`.
pub fn auto_cutoffs(grid: &Grid, period: f64) -> Result<CutoffSpec> {
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "period must be positive (got {period})"
        )));
    }
    let r_inf = (AUTO_THETA_MAX / period)
        .sqrt()
        .min(grid.max_axis_frequency() / 2.0);
    make_cutoffs(r_inf / 2.0, r_inf, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    Low,
    High,
}

fn with_frequency<F>(f: &SpectralField, op: F) -> SpectralField
where
    F: FnOnce(&mut SpectralField),
{
    let original = f.representation();
    let mut hat = f.to_frequency();
    op(&mut hat);
    match original {
        Representation::Physical => hat.into_physical(),
        Representation::Frequency => hat,
    }
}

/// `P_1 f` or `P_inf f`; the output keeps the input's representation.
///
/// The cutoff symbols partition unity exactly, so the Nyquist modes are left
/// alone here (unlike the dynamic multipliers below).
pub fn project(f: &SpectralField, band: Band, cutoffs: &CutoffSpec) -> SpectralField {
    let table = match band {
        Band::Low => &cutoffs.chi_low,
        Band::High => &cutoffs.chi_high,
    };
    with_frequency(f, |hat| hat.map_modes(|i| Complex64::new(table[i], 0.0)))
}

/// The operator `A = -(1+i) Laplacian` with its symbol tabulated on a grid,
/// together with the period `T`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: Arc<Grid>,
    period: f64,
    symbol: Vec<Complex64>,
}

impl LinearOperator {
    pub fn new(grid: &Arc<Grid>, period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "period must be positive (got {period})"
            )));
        }
        let symbol = grid
            .xi_squared()
            .iter()
            .map(|&s| Complex64::new(s, s))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            period,
            symbol,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `lambda(xi) = (1+i)|xi|^2` in storage order.
    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }
}

/// `e^{-tA} f`; `|out_k| = e^{-t |xi_k|^2} |f_k|`, Nyquist modes zeroed.
pub fn semigroup_apply(f: &SpectralField, t: f64, op: &LinearOperator) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "semigroup time must be non-negative (got {t})"
        )));
    }
    Ok(with_frequency(f, |hat| {
        hat.map_modes(|i| (-op.symbol[i] * t).exp());
        hat.zero_nyquist();
    }))
}

/// `(1 - e^{-TA}) f`, Nyquist modes zeroed.
pub fn period_forward_apply(f: &SpectralField, op: &LinearOperator) -> SpectralField {
    let t = op.period;
    with_frequency(f, |hat| {
        hat.map_modes(|i| Complex64::new(1.0, 0.0) - (-op.symbol[i] * t).exp());
        hat.zero_nyquist();
    })
}

/// `(1 - e^{-TA})^{-1} f` on `xi != 0`; the mean mode is set to zero.
///
/// The mean mode of `f` must be negligible: `|f^(0)| <= zero_mode_tol *
/// ||f||_L2`. For odd data it vanishes identically, so a violation means the
/// input (typically the forcing) is not odd.
pub fn period_inverse_apply(
    f: &SpectralField,
    op: &LinearOperator,
    zero_mode_tol: f64,
) -> Result<SpectralField> {
    let hat = f.to_frequency();
    check_zero_mode(&hat, zero_mode_tol)?;
    let t = op.period;
    let mut out = hat;
    out.map_modes(|i| {
        if i == 0 {
            Complex64::default()
        } else {
            (Complex64::new(1.0, 0.0) - (-op.symbol[i] * t).exp()).inv()
        }
    });
    out.data_mut()[0] = Complex64::default();
    out.zero_nyquist();
    Ok(match f.representation() {
        Representation::Physical => out.into_physical(),
        Representation::Frequency => out,
    })
}

/// Fails with [`Error::ZeroModeViolation`] unless the mean mode of a
/// frequency-space field is within `tol * ||f||_L2`.
pub fn check_zero_mode(hat: &SpectralField, tol: f64) -> Result<()> {
    hat.require(Representation::Frequency)?;
    let modulus = hat.data()[0].norm();
    let tolerance = tol * hat.l2_norm();
    if modulus > tolerance {
        return Err(Error::ZeroModeViolation { modulus, tolerance });
    }
    Ok(())
}

/// `theta / |1 - e^{-(1+i) theta}|`, the inverse-multiplier bound constant at
/// `theta = T |xi|^2`; tends to `1/sqrt(2)` as `theta -> 0`.
pub fn multiplier_ratio(theta: f64) -> f64 {
    let z = Complex64::new(-theta, -theta);
    // 1 - e^z = -z * phi_1(z); use the series near 0 to avoid cancellation.
    let denom = if theta < 1e-4 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..8 {
            term *= z / (k as f64 + 1.0);
            sum += term;
        }
        (z * sum).norm()
    } else {
        (Complex64::new(1.0, 0.0) - z.exp()).norm()
    };
    theta / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub r1: f64,
    pub r_inf: f64,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "C_mult")]
    pub c_mult: f64,
    pub samples: usize,
}

/// Scans `|xi| = r_inf * i / samples`, `i = 1..=samples`, and reports the
/// largest `|1 - e^{-T lambda(xi)}|^{-1} T |xi|^2`.
pub fn verify_multiplier_bound(
    op: &LinearOperator,
    cutoffs: &CutoffSpec,
    samples: usize,
) -> Result<BoundReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let c_mult = (1..=samples)
        .map(|i| {
            let rho = cutoffs.r_inf * i as f64 / samples as f64;
            multiplier_ratio(op.period * rho * rho)
        })
        .fold(0.0, f64::max);
    Ok(BoundReport {
        r1: cutoffs.r1,
        r_inf: cutoffs.r_inf,
        period: op.period,
        c_mult,
        samples,
    })
}
