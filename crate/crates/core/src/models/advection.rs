//! Constant-velocity linear advection of a single bump. No nonlocal term;
//! used as the `custom` scenario and as a reference problem for the scheme.

use serde::{Deserialize, Serialize};

use super::{Model, Wiring};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::nonlocal::BumpProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdvectionParams {
    pub velocity_x1: f64,
    pub velocity_x2: f64,
    pub bump_amplitude: f64,
    pub bump_x1: f64,
    pub bump_x2: f64,
    pub bump_radius: f64,
}

impl Default for AdvectionParams {
    fn default() -> Self {
        AdvectionParams {
            velocity_x1: 1.0,
            velocity_x2: 0.0,
            bump_amplitude: 1.0,
            bump_x1: 0.0,
            bump_x2: 0.0,
            bump_radius: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Advection {
    params: AdvectionParams,
}

impl Advection {
    pub fn new(params: AdvectionParams) -> Result<Self> {
        if !(params.velocity_x1.is_finite() && params.velocity_x2.is_finite()) {
            return Err(Error::config(
                "advection.velocity_x1",
                "velocity must be finite",
            ));
        }
        if !(params.bump_radius > 0.0) {
            return Err(Error::config("advection.bump_radius", "must be positive"));
        }
        Ok(Advection { params })
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.params.velocity_x1, self.params.velocity_x2]
    }

    pub fn bump(&self) -> BumpProfile {
        BumpProfile {
            amplitude: self.params.bump_amplitude,
            radius: self.params.bump_radius,
            exponent: 4,
        }
    }

    pub fn bump_center(&self) -> [f64; 2] {
        [self.params.bump_x1, self.params.bump_x2]
    }
}

impl Model for Advection {
    fn name(&self) -> &'static str {
        "custom"
    }

    fn component_names(&self) -> Vec<String> {
        vec!["u".into()]
    }

    fn far_field(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn wiring(&self) -> Wiring {
        Wiring::None
    }

    fn kernel(&self) -> Option<BumpProfile> {
        None
    }

    fn has_flux(&self, _component: usize) -> bool {
        true
    }

    fn flux(&self, _t: f64, _x: [f64; 2], _component: usize, u: f64, _a: [f64; 2]) -> [f64; 2] {
        let v = self.velocity();
        [v[0] * u, v[1] * u]
    }

    fn char_speed(
        &self,
        _t: f64,
        _x: [f64; 2],
        _c: usize,
        _u: f64,
        _a: [f64; 2],
        axis: usize,
    ) -> f64 {
        self.velocity()[axis].abs()
    }

    fn source(&self, _t: f64, _x: [f64; 2], _u: &[f64], _a: [f64; 2], out: &mut [f64]) {
        out[0] = 0.0;
    }

    fn wave_speed_bound(&self, _t: f64, _grid: &Grid2D, _field: &Field) -> f64 {
        let v = self.velocity();
        v[0].abs().max(v[1].abs())
    }

    fn initial_field(&self, grid: &Grid2D) -> Field {
        let (b, c) = (self.bump(), self.bump_center());
        Field::from_fn(grid, self.far_field(), |x, _| {
            b.eval((x[0] - c[0]).hypot(x[1] - c[1]))
        })
    }
}
