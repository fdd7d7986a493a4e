//! Admissible forcings `g(x, t) = eps a(t) G(x)` and initial perturbations.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{lp_norm, sobolev_norm};
use crate::spectral::{FieldSeries, Grid, Representation, SpectralField};

/// Largest allowed `max_seam |G| / max |G|`.
pub const SEAM_DECAY_LIMIT: f64 = 1e-8;
/// Largest allowed oddness residual of a custom profile.
pub const ODDNESS_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalProfile {
    /// `sin(2 pi t / T)`.
    SinFundamental,
    /// `cos(2 pi t / T)`.
    CosFundamental,
    /// `sin(2 pi m t / T)`.
    Harmonic { m: u32 },
}

impl TemporalProfile {
    pub fn value(&self, t: f64, period: f64) -> f64 {
        let phase = 2.0 * PI * t / period;
        match *self {
            TemporalProfile::SinFundamental => phase.sin(),
            TemporalProfile::CosFundamental => phase.cos(),
            TemporalProfile::Harmonic { m } => (m as f64 * phase).sin(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialProfile {
    /// `x_axis exp(-|x|^2 / (2 sigma^2))`.
    GaussDipole { sigma: f64, axis: usize },
    /// `exp(-|x|^2 / (2 sigma^2))`; even, only meaningful for perturbations.
    Gaussian { sigma: f64 },
    /// A user-supplied field.
    #[serde(skip)]
    Custom(SpectralField),
}

impl SpatialProfile {
    /// The profile sampled at the physical nodes of `grid`.
    pub fn realize(&self, grid: &Arc<Grid>) -> Result<SpectralField> {
        match self {
            SpatialProfile::GaussDipole { sigma, axis } => {
                check_sigma(*sigma)?;
                if *axis >= grid.dim() {
                    return Err(Error::InvalidParameter(format!(
                        "dipole axis {axis} out of range for dimension {}",
                        grid.dim()
                    )));
                }
                let s2 = 2.0 * sigma * sigma;
                Ok(SpectralField::from_fn(grid, |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    Complex64::new(x[*axis] * (-r2 / s2).exp(), 0.0)
                }))
            }
            SpatialProfile::Gaussian { sigma } => {
                check_sigma(*sigma)?;
                let s2 = 2.0 * sigma * sigma;
                Ok(SpectralField::from_fn(grid, |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    Complex64::new((-r2 / s2).exp(), 0.0)
                }))
            }
            SpatialProfile::Custom(f) => {
                if !f.grid().same_as(grid) {
                    return Err(Error::GridMismatch);
                }
                Ok(f.to_physical())
            }
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "profile width must be positive (got {sigma})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForcingSpec {
    /// `eps >= 0`.
    pub amplitude: f64,
    pub temporal: TemporalProfile,
    pub spatial: SpatialProfile,
    pub period: f64,
}

impl ForcingSpec {
    /// `eps sin(2 pi t / T) x_0 exp(-|x|^2 / (2 sigma^2))`.
    pub fn dipole(amplitude: f64, sigma: f64, period: f64) -> Self {
        Self {
            amplitude,
            temporal: TemporalProfile::SinFundamental,
            spatial: SpatialProfile::GaussDipole { sigma, axis: 0 },
            period,
        }
    }
}

/// A sampled forcing with its admissibility certificate.
#[derive(Debug, Clone)]
pub struct RealizedForcing {
    /// `m_t + 1` nodes in frequency representation; the last node is a copy
    /// of the first.
    pub series: FieldSeries,
    /// Oddness residual of the spatial profile.
    pub oddness: f64,
    /// `max_seam |G| / max |G|` (0 for a vanishing profile).
    pub seam_ratio: f64,
}

/// `max |f(x) + f(-x)| / (1 + max |f|)` over nodes off the seam.
///
/// Seam nodes reflect onto themselves under the lattice reflection and are
/// left out; admissible profiles are negligible there anyway.
pub fn check_oddness(f: &SpectralField) -> f64 {
    let phys = f.to_physical();
    let grid = phys.grid();
    let data = phys.data();
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        if grid.on_seam(i) {
            continue;
        }
        worst = worst.max((data[i] + data[grid.reflected_index(i)]).norm());
    }
    worst / (1.0 + phys.max_modulus())
}

/// `max_seam |f| / max |f|`.
pub fn seam_ratio(f: &SpectralField) -> f64 {
    let phys = f.to_physical();
    let grid = phys.grid();
    let peak = phys.max_modulus();
    if peak == 0.0 {
        return 0.0;
    }
    let seam = (0..grid.len())
        .filter(|&i| grid.on_seam(i))
        .map(|i| phys.data()[i].norm())
        .fold(0.0, f64::max);
    seam / peak
}

/// Samples `g` at `t_m = m T / m_t`, `m = 0..=m_t`.
pub fn realize_forcing(spec: &ForcingSpec, grid: &Arc<Grid>, m_t: usize) -> Result<RealizedForcing> {
    if !(spec.amplitude >= 0.0) || !spec.amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "forcing amplitude must be finite and non-negative (got {})",
            spec.amplitude
        )));
    }
    if !(spec.period > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "period must be positive (got {})",
            spec.period
        )));
    }
    if m_t < 2 {
        return Err(Error::InvalidParameter(format!("m_t = {m_t} is below 2")));
    }
    if matches!(spec.spatial, SpatialProfile::Gaussian { .. }) {
        return Err(Error::InvalidParameter(
            "forcing profiles must be odd; the Gaussian profile is even".into(),
        ));
    }
    let profile = spec.spatial.realize(grid)?;
    let seam = seam_ratio(&profile);
    if seam > SEAM_DECAY_LIMIT {
        return Err(Error::SeamDecayViolation {
            ratio: seam,
            limit: SEAM_DECAY_LIMIT,
        });
    }
    let oddness = check_oddness(&profile);
    if oddness > ODDNESS_LIMIT {
        return Err(Error::OddnessViolation {
            residual: oddness,
            limit: ODDNESS_LIMIT,
        });
    }
    let hat = profile.into_frequency();
    let mut fields = Vec::with_capacity(m_t + 1);
    for m in 0..m_t {
        let t = spec.period * m as f64 / m_t as f64;
        let a = spec.amplitude * spec.temporal.value(t, spec.period);
        fields.push(hat.scaled(Complex64::new(a, 0.0)));
    }
    fields.push(fields[0].clone());
    Ok(RealizedForcing {
        series: FieldSeries::new(fields, spec.period)?,
        oddness,
        seam_ratio: seam,
    })
}

/// Initial perturbation `w_0 = amplitude * profile`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub amplitude: f64,
    pub spatial: SpatialProfile,
}

impl PerturbationSpec {
    pub fn dipole(amplitude: f64, sigma: f64) -> Self {
        Self {
            amplitude,
            spatial: SpatialProfile::GaussDipole { sigma, axis: 0 },
        }
    }

    /// Frequency representation of `w_0`.
    pub fn realize(&self, grid: &Arc<Grid>) -> Result<SpectralField> {
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter("perturbation amplitude is not finite".into()));
        }
        let mut f = self.spatial.realize(grid)?;
        f.scale(Complex64::new(self.amplitude, 0.0));
        Ok(f.into_frequency())
    }
}

/// `||w_0||_{H^1} + ||w_0||_{L^1}`, the smallness measure for initial data.
pub fn perturbation_size(w0: &SpectralField) -> Result<f64> {
    Ok(sobolev_norm(w0, 1, false)? + lp_norm(w0, 1.0, false)?)
}

/// Zero forcing on `m_t + 1` nodes.
pub fn zero_forcing(grid: &Arc<Grid>, m_t: usize, period: f64) -> FieldSeries {
    FieldSeries::zeros(grid, Representation::Frequency, m_t, period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::forcing_bracket;
    use crate::spectral::{make_grid, GridConfig};

    fn grid() -> Arc<Grid> {
        make_grid(GridConfig::new(3, 16, 32.0)).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_series() {
        let g = realize_forcing(&ForcingSpec::dipole(0.0, 2.0, 1.0), &grid(), 8).unwrap();
        assert!(g.series.fields().iter().all(|f| f.max_modulus() == 0.0));
        assert_eq!(g.series.fields().len(), 9);
    }

    #[test]
    fn dipole_vanishes_at_origin_and_is_periodic() {
        let grid = grid();
        let g = realize_forcing(&ForcingSpec::dipole(1e-2, 2.0, 1.0), &grid, 8).unwrap();
        let origin = grid.flat_index(&[8, 8, 8]);
        for f in g.series.fields() {
            let phys = f.to_physical();
            assert!(phys.data()[origin].norm() < 1e-15);
            assert!(check_oddness(&phys) <= 1e-12);
        }
        let fields = g.series.fields();
        assert_eq!(fields[0].data(), fields[8].data());
        assert!(g.seam_ratio < SEAM_DECAY_LIMIT);
    }

    #[test]
    fn bracket_is_linear_in_amplitude() {
        let grid = grid();
        let one = realize_forcing(&ForcingSpec::dipole(1e-2, 2.0, 1.0), &grid, 8).unwrap();
        let two = realize_forcing(&ForcingSpec::dipole(2e-2, 2.0, 1.0), &grid, 8).unwrap();
        let ratio = forcing_bracket(&two.series).unwrap() / forcing_bracket(&one.series).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wide_profile_violates_seam_decay() {
        let err = realize_forcing(&ForcingSpec::dipole(1.0, 8.0, 1.0), &grid(), 8).unwrap_err();
        assert!(matches!(err, Error::SeamDecayViolation { .. }));
    }

    #[test]
    fn even_custom_profile_is_rejected() {
        let grid = grid();
        let even = SpatialProfile::Gaussian { sigma: 2.0 }.realize(&grid).unwrap();
        let spec = ForcingSpec {
            spatial: SpatialProfile::Custom(even.clone()),
            ..ForcingSpec::dipole(1.0, 2.0, 1.0)
        };
        assert!(matches!(
            realize_forcing(&spec, &grid, 8),
            Err(Error::OddnessViolation { .. })
        ));
        // Even profile: f(-x) = f(x), so the residual is 2 max|f| / (1 + max|f|) = 1.
        assert!((check_oddness(&even) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oddness_residual_is_linear_in_the_even_part() {
        let grid = grid();
        let odd = SpatialProfile::GaussDipole { sigma: 2.0, axis: 1 }.realize(&grid).unwrap();
        let even = SpatialProfile::Gaussian { sigma: 2.0 }.realize(&grid).unwrap();
        let mut prev = None;
        for delta in [1e-6, 1e-5, 1e-4] {
            let mut f = odd.clone();
            f.axpy(Complex64::new(delta, 0.0), &even).unwrap();
            let r = check_oddness(&f);
            if let Some(p) = prev {
                let ratio: f64 = r / p;
                assert!((ratio - 10.0).abs() < 1e-3, "{ratio}");
            }
            prev = Some(r);
        }
    }

    #[test]
    fn temporal_profiles_are_periodic() {
        for p in [
            TemporalProfile::SinFundamental,
            TemporalProfile::CosFundamental,
            TemporalProfile::Harmonic { m: 3 },
        ] {
            for i in 0..10 {
                let t = 0.13 * i as f64;
                assert!((p.value(t, 1.7) - p.value(t + 1.7, 1.7)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perturbation_realization() {
        let grid = grid();
        let w0 = PerturbationSpec::dipole(1e-2, 2.0).realize(&grid).unwrap();
        assert_eq!(w0.representation(), Representation::Frequency);
        assert!(check_oddness(&w0) < 1e-13);
        let size = perturbation_size(&w0).unwrap();
        assert!(size.is_finite() && size > 0.0);
        let zero = PerturbationSpec::dipole(0.0, 2.0).realize(&grid).unwrap();
        assert_eq!(zero.max_modulus(), 0.0);
    }
}
