use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gravitational coupling and reduced Planck constant in simulation units.
///
/// The collapse coupling `kappa = G / hbar` is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstants", into = "RawConstants")]
pub struct PhysicalConstants {
    g: f64,
    hbar: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    #[serde(
        rename = "G",
        default = "one",
        serialize_with = "crate::numeric::f17::serialize"
    )]
    g: f64,
    #[serde(default = "one", serialize_with = "crate::numeric::f17::serialize")]
    hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawConstants> for PhysicalConstants {
    type Error = Error;
    fn try_from(r: RawConstants) -> Result<Self> {
        PhysicalConstants::new(r.g, r.hbar)
    }
}

impl From<PhysicalConstants> for RawConstants {
    fn from(c: PhysicalConstants) -> Self {
        RawConstants {
            g: c.g,
            hbar: c.hbar,
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { g: 1.0, hbar: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(g: f64, hbar: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::validation(
                "constants.G",
                format!("must be positive, got {g}"),
            ));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::validation(
                "constants.hbar",
                format!("must be positive, got {hbar}"),
            ));
        }
        Ok(PhysicalConstants { g, hbar })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn kappa(&self) -> f64 {
        self.g / self.hbar
    }
}
