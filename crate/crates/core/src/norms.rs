//! Discrete Lebesgue, Sobolev and space-time norms.
//!
//! Weighted norms use `w(x) = 1 + |x|` with `x` in centered box coordinates
//! and are evaluated in physical space after differentiation, i.e.
//! `||f||_{H^k_1}^2 = sum_{|alpha| <= k} ||w d^alpha f||^2`. The sum runs over
//! distinct multi-indices. Spatial integrals are node sums times the cell
//! volume; time integrals use the trapezoidal rule and time derivatives
//! centered differences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{project, Band, CutoffSpec};
use crate::spectral::{FieldSeries, Representation, SpectralField};

/// Spatial weight applied inside a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    Unit,
    /// `1 + |x|`.
    OnePlusAbsX,
    /// `|x|`; gives the seminorm `||x f||`.
    AbsX,
}

impl Weight {
    fn from_flag(weighted: bool) -> Self {
        if weighted {
            Weight::OnePlusAbsX
        } else {
            Weight::Unit
        }
    }

    fn at(self, grid_weight: &[f64], grid_radius: &[f64], i: usize) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::OnePlusAbsX => grid_weight[i],
            Weight::AbsX => grid_radius[i],
        }
    }
}

/// All multi-indices `alpha` in `dim` variables with `|alpha| = order`.
pub fn multi_indices(dim: usize, order: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    let mut cur = [0usize; 3];
    fn rec(axis: usize, dim: usize, left: usize, cur: &mut [usize; 3], out: &mut Vec<[usize; 3]>) {
        if axis + 1 == dim {
            cur[axis] = left;
            out.push(*cur);
            cur[axis] = 0;
            return;
        }
        for a in (0..=left).rev() {
            cur[axis] = a;
            rec(axis + 1, dim, left - a, cur, out);
        }
        cur[axis] = 0;
    }
    rec(0, dim, order, &mut cur, &mut out);
    out
}

fn derivative_from_hat(hat: &SpectralField, alpha: &[usize; 3]) -> SpectralField {
    let grid = hat.grid().clone();
    if alpha.iter().all(|&a| a == 0) {
        return hat.to_physical();
    }
    let mut out = hat.clone();
    let nyquist = grid.nyquist_mask();
    for (i, z) in out.data_mut().iter_mut().enumerate() {
        if nyquist[i] {
            *z = Complex64::default();
            continue;
        }
        let xi = grid.xi_of(i);
        let mut m = Complex64::new(1.0, 0.0);
        for a in 0..grid.dim() {
            for _ in 0..alpha[a] {
                m *= Complex64::new(0.0, xi[a]);
            }
        }
        *z *= m;
    }
    out.into_physical()
}

/// `d^alpha f` in physical representation, via the multiplier `(i xi)^alpha`
/// (Nyquist modes dropped for `alpha != 0`).
pub fn derivative(f: &SpectralField, alpha: &[usize]) -> Result<SpectralField> {
    let dim = f.grid().dim();
    if alpha.len() != dim {
        return Err(Error::InvalidParameter(format!(
            "multi-index has {} entries, grid has dimension {dim}",
            alpha.len()
        )));
    }
    let mut a = [0usize; 3];
    a[..dim].copy_from_slice(alpha);
    Ok(derivative_from_hat(&f.to_frequency(), &a))
}

fn weighted_l2_sq(phys: &SpectralField, weight: Weight) -> f64 {
    let grid = phys.grid();
    let (w, r) = (grid.weight(), grid.radius());
    let sum: f64 = phys
        .data()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let s = weight.at(w, r, i);
            s * s * z.norm_sqr()
        })
        .sum();
    sum * grid.cell_volume()
}

/// `e[j] = sum_{|alpha| = j} ||weight * d^alpha f||^2` for `j = 0..=k`.
pub fn derivative_energies(f: &SpectralField, k: usize, weight: Weight) -> Result<[f64; 4]> {
    if k > 3 {
        return Err(Error::InvalidParameter(format!(
            "Sobolev order {k} exceeds 3"
        )));
    }
    let mut out = [0.0; 4];
    if weight == Weight::Unit {
        // Parseval, mode by mode.
        let hat = f.to_frequency();
        let grid = hat.grid();
        let nyquist = grid.nyquist_mask();
        let scale = grid.volume().recip();
        for (i, z) in hat.data().iter().enumerate() {
            let a2 = z.norm_sqr() * scale;
            out[0] += a2;
            if nyquist[i] || k == 0 {
                continue;
            }
            let xi = grid.xi_of(i);
            let sq = [xi[0] * xi[0], xi[1] * xi[1], xi[2] * xi[2]];
            // h_j = complete homogeneous symmetric polynomial of degree j in sq.
            let e1 = sq[0] + sq[1] + sq[2];
            let p2 = sq[0] * sq[0] + sq[1] * sq[1] + sq[2] * sq[2];
            let p3 = sq[0] * sq[0] * sq[0] + sq[1] * sq[1] * sq[1] + sq[2] * sq[2] * sq[2];
            let h1 = e1;
            let h2 = 0.5 * (h1 * e1 + p2);
            let h3 = (h2 * e1 + h1 * p2 + p3) / 3.0;
            let h = [h1, h2, h3];
            for j in 1..=k {
                out[j] += a2 * h[j - 1];
            }
        }
        return Ok(out);
    }
    let hat = f.to_frequency();
    let dim = hat.grid().dim();
    for (j, slot) in out.iter_mut().enumerate().take(k + 1) {
        for alpha in multi_indices(dim, j) {
            *slot += weighted_l2_sq(&derivative_from_hat(&hat, &alpha), weight);
        }
    }
    Ok(out)
}

/// Quadrature `L^p` norm for `p` in `{1, 2, 3, 6, inf}`, optionally with the
/// weight `1 + |x|`.
pub fn lp_norm(f: &SpectralField, p: f64, weighted: bool) -> Result<f64> {
    lp_norm_with(f, p, Weight::from_flag(weighted))
}

pub fn lp_norm_with(f: &SpectralField, p: f64, weight: Weight) -> Result<f64> {
    if ![1.0, 2.0, 3.0, 6.0, f64::INFINITY].contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "unsupported Lebesgue exponent {p}"
        )));
    }
    let phys = match f.representation() {
        Representation::Physical => std::borrow::Cow::Borrowed(f),
        Representation::Frequency => std::borrow::Cow::Owned(f.to_physical()),
    };
    let grid = phys.grid();
    let (w, r) = (grid.weight(), grid.radius());
    let values = phys
        .data()
        .iter()
        .enumerate()
        .map(|(i, z)| weight.at(w, r, i) * z.norm());
    if p.is_infinite() {
        return Ok(values.fold(0.0, f64::max));
    }
    let sum: f64 = values.map(|v| v.powf(p)).sum();
    Ok((sum * grid.cell_volume()).powf(p.recip()))
}

/// `(sum_{|alpha| <= k} ||w^s d^alpha f||^2)^{1/2}` with `w = 1 + |x|` when
/// `weighted`.
pub fn sobolev_norm(f: &SpectralField, k: usize, weighted: bool) -> Result<f64> {
    let e = derivative_energies(f, k, Weight::from_flag(weighted))?;
    Ok(e.iter().sum::<f64>().sqrt())
}

/// `|| |x| |grad f| ||_L2`.
pub fn x_weighted_gradient_norm(f: &SpectralField) -> f64 {
    derivative_energies(f, 1, Weight::AbsX)
        .map(|e| e[1].sqrt())
        .unwrap_or(f64::NAN)
}

/// `|| |x| f ||_L2`.
pub fn x_weighted_l2(f: &SpectralField) -> f64 {
    weighted_l2_sq(&f.to_physical(), Weight::AbsX).sqrt()
}

/// `||grad f||_L2`.
pub fn gradient_norm(f: &SpectralField) -> f64 {
    derivative_energies(f, 1, Weight::Unit)
        .map(|e| e[1].sqrt())
        .unwrap_or(f64::NAN)
}

/// How to close the time-difference stencil at the ends of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeBoundary {
    /// Last node duplicates the first; stencils wrap.
    Periodic,
    /// One-sided second-order stencils at the ends.
    Open,
}

/// Centered time differences of a series, one field per node.
pub fn time_derivative(series: &FieldSeries, boundary: TimeBoundary) -> Result<Vec<SpectralField>> {
    let fields = series.fields();
    let count = fields.len();
    if count < 3 {
        return Err(Error::InsufficientData(format!(
            "time derivative needs at least 3 nodes, got {count}"
        )));
    }
    let dt = series.dt();
    let combo = |terms: &[(f64, usize)]| -> Result<SpectralField> {
        let mut out = fields[terms[0].1].scaled(Complex64::new(terms[0].0 / dt, 0.0));
        for &(c, j) in &terms[1..] {
            out.axpy(Complex64::new(c / dt, 0.0), &fields[j])?;
        }
        Ok(out)
    };
    let mut out = Vec::with_capacity(count);
    match boundary {
        TimeBoundary::Periodic => {
            let m = count - 1;
            for j in 0..m {
                out.push(combo(&[(0.5, (j + 1) % m), (-0.5, (j + m - 1) % m)])?);
            }
            let first = out[0].clone();
            out.push(first);
        }
        TimeBoundary::Open => {
            out.push(combo(&[(-1.5, 0), (2.0, 1), (-0.5, 2)])?);
            for j in 1..count - 1 {
                out.push(combo(&[(0.5, j + 1), (-0.5, j - 1)])?);
            }
            let l = count - 1;
            out.push(combo(&[(1.5, l), (-2.0, l - 1), (0.5, l - 2)])?);
        }
    }
    Ok(out)
}

/// Trapezoidal rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTimeKind {
    X,
    Y,
}

/// Terms of `||u_1||_X`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct XComponents {
    pub h1_l2: f64,
    pub x_grad_h1_l2: f64,
    pub dt_l2_l2w: f64,
}

impl XComponents {
    pub fn total(&self) -> f64 {
        self.h1_l2 + self.x_grad_h1_l2 + self.dt_l2_l2w
    }
}

/// Terms of `||u_inf||_Y`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct YComponents {
    pub sup_h2w: f64,
    pub l2_h3w: f64,
    pub h1_h1w: f64,
}

impl YComponents {
    pub fn total(&self) -> f64 {
        self.sup_h2w + self.l2_h3w + self.h1_h1w
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeNorms {
    pub x_norm: f64,
    pub y_norm: f64,
    pub z_norm: f64,
    pub g_bracket: f64,
    pub x_parts: XComponents,
    pub y_parts: YComponents,
}

/// X-norm terms of a series that already lies in the low band.
pub fn x_components(u1: &FieldSeries, boundary: TimeBoundary) -> Result<XComponents> {
    let dt_fields = time_derivative(u1, boundary)?;
    let dt = u1.dt();
    let mut l2 = Vec::new();
    let mut l2_t = Vec::new();
    let mut xg = Vec::new();
    let mut xg_t = Vec::new();
    let mut l2w_t = Vec::new();
    for (u, ut) in u1.fields().iter().zip(&dt_fields) {
        l2.push(u.l2_norm().powi(2));
        l2_t.push(ut.l2_norm().powi(2));
        xg.push(derivative_energies(u, 1, Weight::AbsX)?[1]);
        xg_t.push(derivative_energies(ut, 1, Weight::AbsX)?[1]);
        l2w_t.push(derivative_energies(ut, 0, Weight::OnePlusAbsX)?[0]);
    }
    Ok(XComponents {
        h1_l2: (trapezoid(&l2, dt) + trapezoid(&l2_t, dt)).sqrt(),
        x_grad_h1_l2: (trapezoid(&xg, dt) + trapezoid(&xg_t, dt)).sqrt(),
        dt_l2_l2w: trapezoid(&l2w_t, dt).sqrt(),
    })
}

/// Y-norm terms of a series that already lies in the high band.
pub fn y_components(u_inf: &FieldSeries, boundary: TimeBoundary) -> Result<YComponents> {
    let dt_fields = time_derivative(u_inf, boundary)?;
    let dt = u_inf.dt();
    let mut sup_h2: f64 = 0.0;
    let mut h3 = Vec::new();
    let mut h1 = Vec::new();
    let mut h1_t = Vec::new();
    for (u, ut) in u_inf.fields().iter().zip(&dt_fields) {
        let e = derivative_energies(u, 3, Weight::OnePlusAbsX)?;
        let et = derivative_energies(ut, 1, Weight::OnePlusAbsX)?;
        sup_h2 = sup_h2.max((e[0] + e[1] + e[2]).sqrt());
        h3.push(e.iter().sum());
        h1.push(e[0] + e[1]);
        h1_t.push(et[0] + et[1]);
    }
    Ok(YComponents {
        sup_h2w: sup_h2,
        l2_h3w: trapezoid(&h3, dt).sqrt(),
        h1_h1w: (trapezoid(&h1, dt) + trapezoid(&h1_t, dt)).sqrt(),
    })
}

fn project_series(series: &FieldSeries, band: Band, cutoffs: &CutoffSpec) -> FieldSeries {
    series.map_fields(|f| project(&f.to_frequency(), band, cutoffs))
}

/// `||P_1 u||_X` or `||P_inf u||_Y` of a periodic series.
pub fn spacetime_norm(series: &FieldSeries, kind: SpaceTimeKind, cutoffs: &CutoffSpec) -> Result<f64> {
    spacetime_norm_with(series, kind, cutoffs, TimeBoundary::Periodic)
}

pub fn spacetime_norm_with(
    series: &FieldSeries,
    kind: SpaceTimeKind,
    cutoffs: &CutoffSpec,
    boundary: TimeBoundary,
) -> Result<f64> {
    Ok(match kind {
        SpaceTimeKind::X => {
            x_components(&project_series(series, Band::Low, cutoffs), boundary)?.total()
        }
        SpaceTimeKind::Y => {
            y_components(&project_series(series, Band::High, cutoffs), boundary)?.total()
        }
    })
}

/// X, Y and Z norms of `u` (split by the cutoffs) and, when given, `[g]`.
pub fn spacetime_norms(
    series: &FieldSeries,
    forcing: Option<&FieldSeries>,
    cutoffs: &CutoffSpec,
    boundary: TimeBoundary,
) -> Result<SpaceTimeNorms> {
    let x_parts = x_components(&project_series(series, Band::Low, cutoffs), boundary)?;
    let y_parts = y_components(&project_series(series, Band::High, cutoffs), boundary)?;
    let g_bracket = match forcing {
        Some(g) => forcing_bracket(g)?,
        None => 0.0,
    };
    let (x_norm, y_norm) = (x_parts.total(), y_parts.total());
    Ok(SpaceTimeNorms {
        x_norm,
        y_norm,
        z_norm: x_norm + y_norm,
        g_bracket,
        x_parts,
        y_parts,
    })
}

/// `[g] = ||g||_{L^2(0,T; L^1_1)} + ||g||_{L^2(0,T; H^1_1)}`.
pub fn forcing_bracket(g: &FieldSeries) -> Result<f64> {
    let mut l1 = Vec::with_capacity(g.fields().len());
    let mut h1 = Vec::with_capacity(g.fields().len());
    for f in g.fields() {
        l1.push(lp_norm(f, 1.0, true)?.powi(2));
        let e = derivative_energies(f, 1, Weight::OnePlusAbsX)?;
        h1.push(e[0] + e[1]);
    }
    let dt = g.dt();
    Ok(trapezoid(&l1, dt).sqrt() + trapezoid(&h1, dt).sqrt())
}
