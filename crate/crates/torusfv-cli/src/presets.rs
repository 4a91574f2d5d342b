//! Built-in initial-condition presets.
//!
//! All presets are smooth and periodic on the torus, so projected initial
//! data inherit the regularity the error theory asks of the data class.
//! Amplitudes are validated to keep density and temperature positive.

use std::f64::consts::PI;

use crate::config::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcPreset {
    /// `rho = 1, u = 0, theta = 1`.
    Constant,
    /// `rho = 1 + a sin(2 pi x_1)`, `u_j = b sin(2 pi x_{j+1 mod d})`,
    /// `theta = 1 + c cos(2 pi x_1)`.
    SmoothWave { a: f64, b: f64, c: f64 },
    /// `rho = 1, u = 0, theta = 1 + c prod_i cos^2(pi x_i)`.
    ThermalSpot { c: f64 },
}

impl IcPreset {
    /// Build a preset from its name and optional amplitude parameters.
    pub fn from_config(
        name: &str,
        a: Option<f64>,
        b: Option<f64>,
        c: Option<f64>,
    ) -> Result<Self, ConfigError> {
        let preset = match name {
            "constant" => {
                if a.is_some() || b.is_some() || c.is_some() {
                    return Err(ConfigError(
                        "ic.preset `constant` takes no amplitude parameters".into(),
                    ));
                }
                IcPreset::Constant
            }
            "smooth-wave" => IcPreset::SmoothWave {
                a: a.unwrap_or(0.2),
                b: b.unwrap_or(0.1),
                c: c.unwrap_or(0.1),
            },
            "thermal-spot" => {
                if a.is_some() || b.is_some() {
                    return Err(ConfigError(
                        "ic.preset `thermal-spot` only takes the amplitude c".into(),
                    ));
                }
                IcPreset::ThermalSpot {
                    c: c.unwrap_or(0.1),
                }
            }
            other => {
                return Err(ConfigError(format!(
                    "ic.preset: unknown preset `{other}` \
                     (expected constant, smooth-wave or thermal-spot)"
                )))
            }
        };
        preset.validate()?;
        Ok(preset)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            IcPreset::Constant => Ok(()),
            IcPreset::SmoothWave { a, c, .. } => {
                if a.abs() >= 1.0 {
                    Err(ConfigError(format!(
                        "ic.a: |a| must be < 1 for positive density, got {a}"
                    )))
                } else if c.abs() >= 1.0 {
                    Err(ConfigError(format!(
                        "ic.c: |c| must be < 1 for positive temperature, got {c}"
                    )))
                } else {
                    Ok(())
                }
            }
            IcPreset::ThermalSpot { c } => {
                if c.abs() >= 1.0 {
                    Err(ConfigError(format!(
                        "ic.c: |c| must be < 1 for positive temperature, got {c}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn rho(self) -> impl Fn(&[f64]) -> f64 + Sync {
        move |x: &[f64]| match self {
            IcPreset::Constant | IcPreset::ThermalSpot { .. } => 1.0,
            IcPreset::SmoothWave { a, .. } => 1.0 + a * (2.0 * PI * x[0]).sin(),
        }
    }

    pub fn velocity(self) -> impl Fn(&[f64], usize) -> f64 + Sync {
        move |x: &[f64], j: usize| match self {
            IcPreset::Constant | IcPreset::ThermalSpot { .. } => 0.0,
            IcPreset::SmoothWave { b, .. } => {
                let axis = (j + 1) % x.len();
                b * (2.0 * PI * x[axis]).sin()
            }
        }
    }

    pub fn theta(self) -> impl Fn(&[f64]) -> f64 + Sync {
        move |x: &[f64]| match self {
            IcPreset::Constant => 1.0,
            IcPreset::SmoothWave { c, .. } => 1.0 + c * (2.0 * PI * x[0]).cos(),
            IcPreset::ThermalSpot { c } => {
                let mut bump = 1.0;
                for &xi in x {
                    let cosine = (PI * xi).cos();
                    bump *= cosine * cosine;
                }
                1.0 + c * bump
            }
        }
    }
}
