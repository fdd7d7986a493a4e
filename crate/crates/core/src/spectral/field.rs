use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Physical to frequency.
    Forward,
    /// Frequency to physical.
    Inverse,
}

/// Complex scalar field on a [`Grid`], in physical or frequency form.
///
/// Frequency data approximates the continuous transform
/// `f^(xi) = int f(x) e^{-i x.xi} dx`, i.e. `f^_k = (L/n)^d sum_j f_j e^{-i xi_k . x_j}`,
/// so that Parseval reads `sum_j |f_j|^2 (L/n)^d = L^{-d} sum_k |f^_k|^2`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    representation: Representation,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, representation: Representation) -> Self {
        Self {
            grid: grid.clone(),
            representation,
            data: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_data(
        grid: &Arc<Grid>,
        representation: Representation,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "data length {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            representation,
            data,
        })
    }

    /// Samples `f(x)` at every physical node; `x` has `dim` entries.
    pub fn from_fn<F>(grid: &Arc<Grid>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let dim = grid.dim();
        let data = (0..grid.len())
            .map(|i| {
                let x = grid.x_of(i);
                f(&x[..dim])
            })
            .collect();
        Self {
            grid: grid.clone(),
            representation: Representation::Physical,
            data,
        }
    }

    /// Single Fourier mode `amplitude * e^{i xi_k . x}` in physical form.
    pub fn plane_wave(grid: &Arc<Grid>, ks: &[i64], amplitude: Complex64) -> Result<Self> {
        let flat = grid
            .mode_index(ks)
            .ok_or_else(|| Error::InvalidParameter(format!("wavenumber {ks:?} not on lattice")))?;
        let xi = grid.xi_of(flat);
        Ok(Self::from_fn(grid, |x| {
            let phase: f64 = x.iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
            amplitude * Complex64::from_polar(1.0, phase)
        }))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Frequency coefficient of the mode with integer wavenumbers `ks`.
    pub fn mode(&self, ks: &[i64]) -> Result<Complex64> {
        self.require(Representation::Frequency)?;
        let flat = self
            .grid
            .mode_index(ks)
            .ok_or_else(|| Error::InvalidParameter(format!("wavenumber {ks:?} not on lattice")))?;
        Ok(self.data[flat])
    }

    pub fn require(&self, representation: Representation) -> Result<()> {
        if self.representation != representation {
            return Err(Error::RepresentationMismatch {
                expected: representation,
                found: self.representation,
            });
        }
        Ok(())
    }

    pub fn require_same_grid(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn to_frequency(&self) -> SpectralField {
        self.clone().into_frequency()
    }

    pub fn to_physical(&self) -> SpectralField {
        self.clone().into_physical()
    }

    pub fn into_frequency(mut self) -> SpectralField {
        if self.representation == Representation::Physical {
            forward_in_place(&self.grid, &mut self.data);
            self.representation = Representation::Frequency;
        }
        self
    }

    pub fn into_physical(mut self) -> SpectralField {
        if self.representation == Representation::Frequency {
            inverse_in_place(&self.grid, &mut self.data);
            self.representation = Representation::Physical;
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// L2 norm in whichever representation the field is stored.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        match self.representation {
            Representation::Physical => (s * self.grid.cell_volume()).sqrt(),
            Representation::Frequency => (s / self.grid.volume()).sqrt(),
        }
    }

    pub fn scale(&mut self, alpha: Complex64) {
        for z in &mut self.data {
            *z *= alpha;
        }
    }

    pub fn scaled(&self, alpha: Complex64) -> SpectralField {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: Complex64, other: &SpectralField) -> Result<()> {
        self.require_same_grid(other)?;
        other.require(self.representation)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Multiplies each frequency coefficient by `symbol(flat_index)`.
    pub(crate) fn map_modes<F>(&mut self, symbol: F)
    where
        F: Fn(usize) -> Complex64,
    {
        for (i, z) in self.data.iter_mut().enumerate() {
            *z *= symbol(i);
        }
    }

    pub(crate) fn zero_nyquist(&mut self) {
        for (z, &nyq) in self.data.iter_mut().zip(self.grid.nyquist_mask()) {
            if nyq {
                *z = Complex64::default();
            }
        }
    }
}

fn forward_in_place(grid: &Grid, data: &mut [Complex64]) {
    grid.fft().forward(data);
    let scale = grid.cell_volume();
    for (z, s) in data.iter_mut().zip(grid.phase_sign()) {
        *z *= scale * s;
    }
}

fn inverse_in_place(grid: &Grid, data: &mut [Complex64]) {
    for (z, s) in data.iter_mut().zip(grid.phase_sign()) {
        *z *= *s;
    }
    grid.fft().inverse(data);
    let scale = 1.0 / grid.volume();
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Toggles the representation; the source representation must match the
/// direction.
pub fn transform(field: &SpectralField, direction: Direction) -> Result<SpectralField> {
    match direction {
        Direction::Forward => {
            field.require(Representation::Physical)?;
            Ok(field.to_frequency())
        }
        Direction::Inverse => {
            field.require(Representation::Frequency)?;
            Ok(field.to_physical())
        }
    }
}

/// Pointwise `|u|^2 u`.
pub fn cubic_nonlinearity(u: &SpectralField) -> Result<SpectralField> {
    u.require(Representation::Physical)?;
    let mut out = u.clone();
    for z in out.data_mut() {
        *z *= z.norm_sqr();
    }
    Ok(out)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "dealias fraction must lie in (0, 1] (got {fraction})"
        )));
    }
    Ok(())
}

/// Zeroes every mode with `|k_a| > fraction * n/2` on some axis.
pub fn dealias(field: &SpectralField, fraction: f64) -> Result<SpectralField> {
    let mut out = field.clone();
    dealias_in_place(&mut out, fraction)?;
    Ok(out)
}

pub fn dealias_in_place(field: &mut SpectralField, fraction: f64) -> Result<()> {
    field.require(Representation::Frequency)?;
    check_fraction(fraction)?;
    let grid = field.grid.clone();
    let cut = fraction * (grid.n() / 2) as f64;
    let keep: Vec<bool> = grid
        .axis_wavenumbers()
        .iter()
        .map(|&k| (k.abs() as f64) <= cut)
        .collect();
    let dim = grid.dim();
    for (i, z) in field.data.iter_mut().enumerate() {
        let idx = grid.axis_indices(i);
        if !idx[..dim].iter().all(|&a| keep[a]) {
            *z = Complex64::default();
        }
    }
    Ok(())
}

/// Uniformly sampled time series `t_m = m T / M`, `m = 0..=M`.
#[derive(Debug, Clone)]
pub struct FieldSeries {
    fields: Vec<SpectralField>,
    period: f64,
}

impl FieldSeries {
    pub fn new(fields: Vec<SpectralField>, period: f64) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::InsufficientData(
                "a series needs at least two time nodes".into(),
            ));
        }
        if !(period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "period must be positive (got {period})"
            )));
        }
        let first = &fields[0];
        for f in &fields[1..] {
            first.require_same_grid(f)?;
            f.require(first.representation())?;
        }
        Ok(Self { fields, period })
    }

    pub fn zeros(grid: &Arc<Grid>, representation: Representation, m_t: usize, period: f64) -> Self {
        Self {
            fields: vec![SpectralField::zeros(grid, representation); m_t + 1],
            period,
        }
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn fields_mut(&mut self) -> &mut [SpectralField] {
        &mut self.fields
    }

    pub fn into_fields(self) -> Vec<SpectralField> {
        self.fields
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of time intervals `M`.
    pub fn m_t(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.period / self.m_t() as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.fields[0].grid()
    }

    pub fn representation(&self) -> Representation {
        self.fields[0].representation()
    }

    pub fn to_frequency(&self) -> FieldSeries {
        self.map_fields(|f| f.to_frequency())
    }

    pub fn to_physical(&self) -> FieldSeries {
        self.map_fields(|f| f.to_physical())
    }

    pub fn map_fields<F>(&self, f: F) -> FieldSeries
    where
        F: Fn(&SpectralField) -> SpectralField + Sync + Send,
    {
        use rayon::prelude::*;
        FieldSeries {
            fields: self.fields.par_iter().map(f).collect(),
            period: self.period,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.fields.iter().all(SpectralField::is_finite)
    }

    pub fn scaled(&self, alpha: Complex64) -> FieldSeries {
        self.map_fields(|f| f.scaled(alpha))
    }

    pub fn add(&self, other: &FieldSeries) -> Result<FieldSeries> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &FieldSeries) -> Result<FieldSeries> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    fn zip_with<F>(&self, other: &FieldSeries, f: F) -> Result<FieldSeries>
    where
        F: Fn(&SpectralField, &SpectralField) -> Result<SpectralField>,
    {
        if self.fields.len() != other.fields.len() {
            return Err(Error::InvalidParameter(format!(
                "series lengths differ ({} vs {})",
                self.fields.len(),
                other.fields.len()
            )));
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSeries {
            fields,
            period: self.period,
        })
    }

    /// `||u(0) - u(T)||_L2 / max(max_m ||u(t_m)||_L2, tiny)`.
    pub fn periodicity_residual(&self) -> f64 {
        let first = &self.fields[0];
        let last = &self.fields[self.m_t()];
        let diff = last.sub(first).map(|d| d.l2_norm()).unwrap_or(f64::NAN);
        let scale = self
            .fields
            .iter()
            .map(SpectralField::l2_norm)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        diff / scale
    }
}
