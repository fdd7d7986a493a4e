use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fft::NdFft;
use crate::error::{Error, Result};

/// Periodic box `[-L/2, L/2)^dim` sampled with `n_per_axis` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub n_per_axis: usize,
    pub box_length: f64,
    #[serde(default = "default_dealias_fraction")]
    pub dealias_fraction: f64,
}

fn default_dealias_fraction() -> f64 {
    2.0 / 3.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            n_per_axis: 32,
            box_length: 64.0,
            dealias_fraction: default_dealias_fraction(),
        }
    }
}

impl GridConfig {
    pub fn new(dim: usize, n_per_axis: usize, box_length: f64) -> Self {
        Self {
            dim,
            n_per_axis,
            box_length,
            dealias_fraction: default_dealias_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1, 2 or 3 (got {})",
                self.dim
            )));
        }
        if self.n_per_axis < 8 || self.n_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_per_axis must be even and >= 8 (got {})",
                self.n_per_axis
            )));
        }
        if !(self.box_length > 0.0) || !self.box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive (got {})",
                self.box_length
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction must lie in (0, 1] (got {})",
                self.dealias_fraction
            )));
        }
        Ok(())
    }
}

/// Discretized box together with its dual frequency lattice.
///
/// Storage is row-major with the last axis fastest. Frequency data uses the
/// standard FFT order along every axis: storage index `i` holds the integer
/// wavenumber `k = i` for `i < n/2` and `k = i - n` otherwise, so
/// `xi = 2 pi k / L`. Physical node `j` sits at `x = (j - n/2) L / n`; node
/// `n/2` is the origin and node 0 is the periodic seam `-L/2`.
#[derive(Debug)]
pub struct Grid {
    config: GridConfig,
    len: usize,
    spacing: f64,
    axis_k: Vec<i64>,
    axis_xi: Vec<f64>,
    axis_x: Vec<f64>,
    xi_sq: Vec<f64>,
    radius: Vec<f64>,
    weight: Vec<f64>,
    nyquist: Vec<bool>,
    phase_sign: Vec<f64>,
    fft: NdFft,
}

/// Validates `config` and builds the lattice, node coordinates and weights.
pub fn make_grid(config: GridConfig) -> Result<Arc<Grid>> {
    Grid::new(config).map(Arc::new)
}

impl Grid {
    pub fn new(config: GridConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_per_axis;
        let dim = config.dim;
        let len = n.pow(dim as u32);
        let spacing = config.box_length / n as f64;
        let half = (n / 2) as i64;

        let axis_k: Vec<i64> = (0..n as i64)
            .map(|i| if i < half { i } else { i - n as i64 })
            .collect();
        let dxi = 2.0 * PI / config.box_length;
        let axis_xi: Vec<f64> = axis_k.iter().map(|&k| k as f64 * dxi).collect();
        let axis_x: Vec<f64> = (0..n as i64).map(|j| (j - half) as f64 * spacing).collect();

        let mut xi_sq = vec![0.0; len];
        let mut radius = vec![0.0; len];
        let mut weight = vec![0.0; len];
        let mut nyquist = vec![false; len];
        let mut phase_sign = vec![0.0; len];
        let mut idx = [0usize; 3];
        for flat in 0..len {
            unflatten(flat, n, dim, &mut idx);
            let mut s = 0.0;
            let mut r2 = 0.0;
            let mut parity = 0usize;
            let mut nyq = false;
            for &i in &idx[..dim] {
                s += axis_xi[i] * axis_xi[i];
                r2 += axis_x[i] * axis_x[i];
                parity += i;
                nyq |= i == n / 2;
            }
            xi_sq[flat] = s;
            radius[flat] = r2.sqrt();
            weight[flat] = 1.0 + radius[flat];
            nyquist[flat] = nyq;
            phase_sign[flat] = if parity % 2 == 0 { 1.0 } else { -1.0 };
        }

        Ok(Self {
            config,
            len,
            spacing,
            axis_k,
            axis_xi,
            axis_x,
            xi_sq,
            radius,
            weight,
            nyquist,
            phase_sign,
            fft: NdFft::new(n, dim),
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn n(&self) -> usize {
        self.config.n_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.config.box_length
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weight of a single node, `(L/n)^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.config.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.config.box_length.powi(self.config.dim as i32)
    }

    /// Lattice spacing in frequency space, `2 pi / L`.
    pub fn frequency_spacing(&self) -> f64 {
        2.0 * PI / self.config.box_length
    }

    /// Largest resolved frequency magnitude per axis, `n pi / L`.
    pub fn max_axis_frequency(&self) -> f64 {
        self.config.n_per_axis as f64 * PI / self.config.box_length
    }

    pub fn axis_wavenumbers(&self) -> &[i64] {
        &self.axis_k
    }

    pub fn axis_frequencies(&self) -> &[f64] {
        &self.axis_xi
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_x
    }

    /// `|xi|^2` per mode in storage order.
    pub fn xi_squared(&self) -> &[f64] {
        &self.xi_sq
    }

    /// `|x|` per node, centered coordinates.
    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    /// `1 + |x|` per node.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// True for modes carrying the unpaired wavenumber `-n/2` on some axis.
    pub fn nyquist_mask(&self) -> &[bool] {
        &self.nyquist
    }

    pub(crate) fn phase_sign(&self) -> &[f64] {
        &self.phase_sign
    }

    pub(crate) fn fft(&self) -> &NdFft {
        &self.fft
    }

    /// Per-axis storage indices of a flat index (unused axes are zero).
    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        unflatten(flat, self.n(), self.dim(), &mut idx);
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx[..self.dim()]
            .iter()
            .fold(0usize, |acc, &i| acc * self.n() + i)
    }

    /// Storage index of the integer wavenumber `k` (must lie in `[-n/2, n/2)`).
    pub fn storage_index_of_wavenumber(&self, k: i64) -> Option<usize> {
        let n = self.n() as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + n) as usize })
    }

    /// Flat index of the mode with integer wavenumbers `ks` (natural order).
    pub fn mode_index(&self, ks: &[i64]) -> Option<usize> {
        if ks.len() != self.dim() {
            return None;
        }
        let mut idx = [0usize; 3];
        for (a, &k) in ks.iter().enumerate() {
            idx[a] = self.storage_index_of_wavenumber(k)?;
        }
        Some(self.flat_index(&idx))
    }

    /// Frequency vector of a flat mode index.
    pub fn xi_of(&self, flat: usize) -> [f64; 3] {
        let idx = self.axis_indices(flat);
        let mut out = [0.0; 3];
        for a in 0..self.dim() {
            out[a] = self.axis_xi[idx[a]];
        }
        out
    }

    /// Physical coordinates of a flat node index.
    pub fn x_of(&self, flat: usize) -> [f64; 3] {
        let idx = self.axis_indices(flat);
        let mut out = [0.0; 3];
        for a in 0..self.dim() {
            out[a] = self.axis_x[idx[a]];
        }
        out
    }

    /// Flat index of the node `-x` (or of the mode `-xi`), using the
    /// periodic reflection `j -> (n - j) mod n` per axis.
    pub fn reflected_index(&self, flat: usize) -> usize {
        let n = self.n();
        let mut idx = self.axis_indices(flat);
        for i in idx[..self.dim()].iter_mut() {
            *i = (n - *i) % n;
        }
        self.flat_index(&idx)
    }

    /// True when some axis index is 0, i.e. the node lies on the seam
    /// `x_a = -L/2` that reflects onto itself.
    pub fn on_seam(&self, flat: usize) -> bool {
        self.axis_indices(flat)[..self.dim()].iter().any(|&i| i == 0)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self.config == other.config
    }
}

fn unflatten(mut flat: usize, n: usize, dim: usize, out: &mut [usize; 3]) {
    for a in (0..dim).rev() {
        out[a] = flat % n;
        flat /= n;
    }
    for o in out[dim..].iter_mut() {
        *o = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_1d_matches_integers() {
        let g = Grid::new(GridConfig::new(1, 8, 2.0 * PI)).unwrap();
        let mut ks: Vec<f64> = g.axis_frequencies().to_vec();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<f64> = (-4..4).map(|k| k as f64).collect();
        for (a, b) in ks.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn smallest_nonzero_frequency_3d() {
        let g = Grid::new(GridConfig::new(3, 16, 32.0)).unwrap();
        let min = g
            .xi_squared()
            .iter()
            .filter(|&&s| s > 0.0)
            .fold(f64::INFINITY, |m, &s| m.min(s.sqrt()));
        assert!((min - 2.0 * PI / 32.0).abs() < 1e-14);
        assert!((min - 0.19635).abs() < 1e-5);
    }

    #[test]
    fn weights_sum_to_volume() {
        for dim in 1..=3 {
            let g = Grid::new(GridConfig::new(dim, 8, 3.0)).unwrap();
            let total = g.cell_volume() * g.len() as f64;
            assert!((total - 3f64.powi(dim as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(Grid::new(GridConfig::new(3, 9, 1.0)).is_err());
        assert!(Grid::new(GridConfig::new(3, 6, 1.0)).is_err());
        assert!(Grid::new(GridConfig::new(3, 8, 0.0)).is_err());
        assert!(Grid::new(GridConfig::new(3, 8, -2.0)).is_err());
        assert!(Grid::new(GridConfig::new(4, 8, 1.0)).is_err());
        assert!(Grid::new(GridConfig::new(0, 8, 1.0)).is_err());
    }

    #[test]
    fn weight_is_even_and_at_least_one() {
        let g = Grid::new(GridConfig::new(3, 8, 5.0)).unwrap();
        for i in 0..g.len() {
            assert!(g.weight()[i] >= 1.0);
            if !g.on_seam(i) {
                assert_eq!(g.weight()[i], g.weight()[g.reflected_index(i)]);
            }
        }
    }

    #[test]
    fn mode_index_round_trip() {
        let g = Grid::new(GridConfig::new(2, 8, 1.0)).unwrap();
        let flat = g.mode_index(&[-3, 2]).unwrap();
        let idx = g.axis_indices(flat);
        assert_eq!(g.axis_wavenumbers()[idx[0]], -3);
        assert_eq!(g.axis_wavenumbers()[idx[1]], 2);
        assert!(g.mode_index(&[4, 0]).is_none());
    }
}
