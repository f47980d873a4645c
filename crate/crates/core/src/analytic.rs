//! Closed-form receiver responses.
//!
//! Without reactions a released impulse of `N` moles spreads as
//!
//! ```text
//! C(t) = N·U(t),   U(t) = (4πDt)^(−d/2) · exp(−(ℓ − vt)² / (4Dt)),   t > 0
//! ```
//!
//! at distance `ℓ` in `d` dimensions. Acid pulses are well described by this
//! response plus the neutral background. Base pulses need the reaction at the
//! receiver: the H⁺ concentration follows from the ion product with the
//! arriving OH⁻.

use std::f64::consts::PI;

use crate::chem::{self, ChannelParams, Species};
use crate::error::{Error, Result};

/// Litres per cm³.
const LITRES_PER_CM3: f64 = 1e-3;

/// Inputs of the free impulse response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseSpec {
    /// Released amount, mol.
    pub moles: f64,
    /// cm²/s
    pub diffusion: f64,
    /// cm/s, positive from transmitter towards receiver.
    pub velocity: f64,
    /// Transmitter-receiver separation, cm.
    pub distance: f64,
    /// Spatial dimension, 1 to 3.
    pub dimension: u8,
}

impl ImpulseSpec {
    pub fn new(moles: f64, diffusion: f64, velocity: f64, distance: f64, dimension: u8) -> Result<Self> {
        let spec = Self {
            moles,
            diffusion,
            velocity,
            distance,
            dimension,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 1-D release of `species` in the given channel.
    pub fn for_species(species: Species, moles: f64, distance: f64, params: &ChannelParams) -> Result<Self> {
        Self::new(moles, params.diffusion(species), params.velocity, distance, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.moles >= 0.0 && self.moles.is_finite()) {
            return Err(Error::Domain(format!("moles must be >= 0, got {}", self.moles)));
        }
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::Domain(format!("diffusion must be > 0, got {}", self.diffusion)));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::Domain(format!("distance must be > 0, got {}", self.distance)));
        }
        if !self.velocity.is_finite() {
            return Err(Error::Domain("velocity must be finite".into()));
        }
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {}", self.dimension)));
        }
        Ok(())
    }

    /// Time of the maximum of `U(t)`: the positive root of
    /// `v²t² + 2dDt − ℓ² = 0`.
    pub fn peak_time(&self) -> f64 {
        let d_d = f64::from(self.dimension) * self.diffusion;
        let vl = self.velocity * self.distance;
        self.distance * self.distance / (d_d + (d_d * d_d + vl * vl).sqrt())
    }
}

/// Green's function `U(t)` of the free advection-diffusion equation, in
/// cm^(−d); zero for `t ≤ 0`.
pub fn unit_response(spec: &ImpulseSpec, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let four_dt = 4.0 * spec.diffusion * t;
    let drift = spec.distance - spec.velocity * t;
    let norm = (PI * four_dt).powf(-0.5 * f64::from(spec.dimension));
    norm * (-drift * drift / four_dt).exp()
}

/// `N·U(t)`, in mol/cm^d.
pub fn impulse_response(spec: &ImpulseSpec, t: f64) -> f64 {
    spec.moles * unit_response(spec, t)
}

/// Converts a `d`-dimensional amount density (mol/cm^d) to molarity.
///
/// For `d < 3` the missing directions are filled by the channel
/// cross-section (cm² for a line, its square root in cm for a sheet).
pub fn molar_from_density(density: f64, dimension: u8, cross_section: f64) -> f64 {
    let transverse = match dimension {
        1 => cross_section,
        2 => cross_section.sqrt(),
        _ => 1.0,
    };
    density / (transverse * LITRES_PER_CM3)
}

/// Inverse of [`molar_from_density`].
pub fn density_from_molar(molar: f64, dimension: u8, cross_section: f64) -> f64 {
    molar / molar_from_density(1.0, dimension, cross_section)
}

/// H⁺ concentration and pH at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSample {
    pub t: f64,
    pub c_h: f64,
    pub ph: f64,
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        Some(t) => Err(Error::Domain(format!("sample times must be >= 0, got {t}"))),
        None => Ok(()),
    }
}

/// Reaction-free acid response: `c_h(t) = N·U(t) + √k_w`.
pub fn acid_receiver_series(spec: &ImpulseSpec, times: &[f64], params: &ChannelParams) -> Result<Vec<ReceiverSample>> {
    spec.validate()?;
    check_times(times)?;
    let bg = params.background();
    times
        .iter()
        .map(|&t| {
            let arrived = molar_from_density(impulse_response(spec, t), spec.dimension, params.cross_section);
            let c_h = arrived + bg;
            Ok(ReceiverSample {
                t,
                c_h,
                ph: chem::ph_of(c_h)?,
            })
        })
        .collect()
}

/// Arriving hydroxide concentration `C_OH^(R)(t)` in M.
pub fn arriving_molar(spec: &ImpulseSpec, t: f64, params: &ChannelParams) -> f64 {
    molar_from_density(impulse_response(spec, t), spec.dimension, params.cross_section)
}

/// Base response with the reaction confined to the receiver.
///
/// The hydroxide arriving by free transport, `C_OH^(R)(t) = N·U(t)`, sets
/// `c_h` through `c_h·(c_h + C_OH^(R)) = k_w`.
pub fn base_receiver_series(spec: &ImpulseSpec, times: &[f64], params: &ChannelParams) -> Result<Vec<ReceiverSample>> {
    spec.validate()?;
    check_times(times)?;
    times
        .iter()
        .map(|&t| {
            let arrived = arriving_molar(spec, t, params);
            let c_h = chem::equilibrium_pair(-arrived, params.k_w).c_h;
            Ok(ReceiverSample {
                t,
                c_h,
                ph: chem::ph_of(c_h)?,
            })
        })
        .collect()
}

/// A 1-D Gaussian amount profile `N·𝒩(mean, variance)` in mol/cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub moles: f64,
    pub mean: f64,
    pub variance: f64,
}

impl GaussianProfile {
    pub fn new(moles: f64, mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::Domain(format!("variance must be > 0, got {variance}")));
        }
        if !(moles >= 0.0 && moles.is_finite()) {
            return Err(Error::Domain(format!("moles must be >= 0, got {moles}")));
        }
        Ok(Self { moles, mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Amount density at `x`, mol/cm.
    pub fn density(&self, x: f64) -> f64 {
        let z = x - self.mean;
        self.moles * (-z * z / (2.0 * self.variance)).exp() / (2.0 * PI * self.variance).sqrt()
    }

    /// Fraction of the amount lying outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        let s = std::f64::consts::SQRT_2 * self.std_dev();
        0.5 * (libm::erfc((self.mean - lo) / s) + libm::erfc((hi - self.mean) / s))
    }
}

/// Position profile at `elapsed` seconds after a 1-D impulse at the origin:
/// a Gaussian with mean `v·T` and variance `2·D·T`.
pub fn spatial_profile(spec: &ImpulseSpec, elapsed: f64) -> Result<GaussianProfile> {
    if !(elapsed > 0.0 && elapsed.is_finite()) {
        return Err(Error::Domain(format!("elapsed time must be > 0, got {elapsed}")));
    }
    spec.validate()?;
    GaussianProfile::new(spec.moles, spec.velocity * elapsed, 2.0 * spec.diffusion * elapsed)
}
