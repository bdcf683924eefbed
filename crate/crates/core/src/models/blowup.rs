//! Pure-source problems `d_t u = (eta * u) u psi(x)` that blow up in finite time.

use serde::{Deserialize, Serialize};

use super::{Model, Wiring};
use crate::error::Result;
use crate::grid::{Field, Grid2D};
use crate::nonlocal::BumpProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupKind {
    /// `psi = 1`, datum `u = 1`; exact solution `1 / (1 - t)`.
    Homogeneous,
    /// Localized by `psi`, datum `u = psi`.
    Psi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupParams {
    pub kernel_radius: f64,
    pub kernel_exponent: u32,
}

impl Default for BlowupParams {
    fn default() -> Self {
        BlowupParams {
            kernel_radius: 1.0,
            kernel_exponent: 3,
        }
    }
}

/// 1 on `|x| <= 1`, `(1 - (|x| - 1)^3)^4` on `1 < |x| < 2`, 0 beyond.
pub fn psi_profile(x: f64) -> f64 {
    let r = x.abs();
    if r <= 1.0 {
        1.0
    } else if r < 2.0 {
        (1.0 - (r - 1.0).powi(3)).powi(4)
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct Blowup {
    kind: BlowupKind,
    kernel: BumpProfile,
}

impl Blowup {
    pub fn new(kind: BlowupKind, params: &BlowupParams) -> Result<Self> {
        let kernel = BumpProfile::new(1.0, params.kernel_radius, params.kernel_exponent).map_err(
            |e| match e {
                crate::Error::Config { key, reason } => {
                    crate::Error::config(format!("blowup.kernel_{key}"), reason)
                }
                other => other,
            },
        )?;
        Ok(Blowup { kind, kernel })
    }

    pub fn kind(&self) -> BlowupKind {
        self.kind
    }

    fn weight(&self, x: [f64; 2]) -> f64 {
        match self.kind {
            BlowupKind::Homogeneous => 1.0,
            BlowupKind::Psi => psi_profile(x[0]),
        }
    }

    /// `conv_u * u * psi(x)`.
    pub fn blowup_source(&self, x: [f64; 2], u: f64, conv_u: f64) -> f64 {
        conv_u * u * self.weight(x)
    }
}

impl Model for Blowup {
    fn name(&self) -> &'static str {
        match self.kind {
            BlowupKind::Homogeneous => "blowup_homogeneous",
            BlowupKind::Psi => "blowup_psi",
        }
    }

    fn component_names(&self) -> Vec<String> {
        vec!["u".into()]
    }

    fn far_field(&self) -> Vec<f64> {
        match self.kind {
            BlowupKind::Homogeneous => vec![1.0],
            BlowupKind::Psi => vec![0.0],
        }
    }

    fn wiring(&self) -> Wiring {
        Wiring::Convolve { component: 0 }
    }

    fn kernel(&self) -> Option<BumpProfile> {
        Some(self.kernel)
    }

    fn has_flux(&self, _component: usize) -> bool {
        false
    }

    fn flux(&self, _t: f64, _x: [f64; 2], _component: usize, _u: f64, _a: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn char_speed(
        &self,
        _t: f64,
        _x: [f64; 2],
        _c: usize,
        _u: f64,
        _a: [f64; 2],
        _axis: usize,
    ) -> f64 {
        0.0
    }

    fn source(&self, _t: f64, x: [f64; 2], u: &[f64], a: [f64; 2], out: &mut [f64]) {
        out[0] = self.blowup_source(x, u[0], a[0]);
    }

    fn wave_speed_bound(&self, _t: f64, _grid: &Grid2D, _field: &Field) -> f64 {
        0.0
    }

    fn initial_field(&self, grid: &Grid2D) -> Field {
        match self.kind {
            BlowupKind::Homogeneous => Field::uniform(grid, self.far_field()),
            BlowupKind::Psi => Field::from_fn(grid, self.far_field(), |x, _| psi_profile(x[0])),
        }
    }
}
