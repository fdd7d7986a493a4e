//! Seeded random fields for the verification batteries.
//!
//! Amplitudes are independent complex Gaussians in frequency space, shaped by
//! a radial envelope and restricted to a frequency support. Sample `i` of a
//! battery with root seed `s` draws from `ChaCha8` seeded with `s` on stream
//! `i`, so samples are independent of evaluation order and thread count.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::spectral::{Grid, Representation, SpectralField};

/// RNG for sample `index` of the battery rooted at `root_seed`.
pub fn sample_rng(root_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(index);
    rng
}

/// Frequency support of a random field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    All,
    /// `|xi| <= radius`.
    Ball { radius: f64 },
    /// `|xi| >= inner`.
    Shell { inner: f64 },
}

impl Support {
    fn contains(&self, rho: f64) -> bool {
        match *self {
            Support::All => true,
            Support::Ball { radius } => rho <= radius,
            Support::Shell { inner } => rho >= inner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldSpec {
    pub support: Support,
    /// Envelope `exp(-|xi|^2 / (2 w^2))`; `None` is flat.
    pub envelope_width: Option<f64>,
    /// Project onto `f(-x) = -f(x)`.
    pub odd: bool,
    /// Multiply in physical space by `exp(-(|x|/w)^4)`, which keeps the field
    /// negligible at the box edge. Applied after the support mask.
    pub window_radius: Option<f64>,
    /// Target `L2` norm; 0 leaves the raw draw.
    pub l2_norm: f64,
}

impl RandomFieldSpec {
    /// Flat envelope over all non-Nyquist modes, unit `L2` norm.
    pub fn broadband() -> Self {
        Self {
            support: Support::All,
            envelope_width: None,
            odd: false,
            window_radius: None,
            l2_norm: 1.0,
        }
    }
}

/// Draws one field; the result is in frequency representation.
pub fn random_field<R: Rng + ?Sized>(
    grid: &Arc<Grid>,
    spec: &RandomFieldSpec,
    rng: &mut R,
) -> SpectralField {
    let mut field = SpectralField::zeros(grid, Representation::Frequency);
    let nyquist = grid.nyquist_mask();
    for (i, slot) in field.data_mut().iter_mut().enumerate() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let rho = grid.xi_squared()[i].sqrt();
        if nyquist[i] || !spec.support.contains(rho) {
            continue;
        }
        let env = spec
            .envelope_width
            .map_or(1.0, |w| (-0.5 * rho * rho / (w * w)).exp());
        *slot = Complex64::new(re, im) * env;
    }
    if spec.odd {
        // Oddness in x is oddness in xi; k -> -k is the same index map as
        // the physical reflection.
        let src = field.data().to_vec();
        for (i, slot) in field.data_mut().iter_mut().enumerate() {
            *slot = 0.5 * (src[i] - src[grid.reflected_index(i)]);
        }
    }
    if let Some(w) = spec.window_radius {
        let mut phys = field.into_physical();
        for (i, slot) in phys.data_mut().iter_mut().enumerate() {
            let r = grid.radius()[i] / w;
            *slot *= (-(r * r) * (r * r)).exp();
        }
        field = phys.into_frequency();
    }
    if spec.l2_norm > 0.0 {
        let norm = field.l2_norm();
        if norm > 0.0 {
            field.scale(Complex64::new(spec.l2_norm / norm, 0.0));
        }
    }
    field
}
