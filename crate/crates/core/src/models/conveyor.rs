//! Cargo density on a conveyor belt `B = [0, L] x [-l, l]`.
//!
//! The cargo moves with the belt field `v = v_stat + b`, where `b` repels it
//! from the side rails. Above the maximal density a nonlocal drift pushes
//! particles towards lower averaged density. Cargo is poured in on
//! `R_in = [0, a] x [-l, l]` and removed on `R_out = [L - a, L] x [-l, l]`.

use serde::{Deserialize, Serialize};

use super::{
    descent_direction, smooth_heaviside, smooth_heaviside_derivative, smooth_heaviside_max_slope,
    smoothstep, Model, Wiring,
};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::nonlocal::BumpProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConveyorParams {
    /// Belt half-width `l`.
    pub half_width: f64,
    /// Belt length `L`.
    pub length: f64,
    /// Width `delta` of the rail repulsion layers.
    pub boundary_layer: f64,
    /// Magnitude `eps` of the density-driven drift.
    pub drift: f64,
    /// Magnitude `eps_hat` of the rail repulsion; must exceed `drift`.
    pub repulsion: f64,
    /// Regularization width `mu` of the Heaviside switch.
    pub heaviside_width: f64,
    pub rho_max: f64,
    pub belt_speed: f64,
    /// Reverse speed (as a fraction of `belt_speed`) past the outflow patch.
    pub backflow: f64,
    /// Length `a` of the inflow and outflow patches.
    pub patch_length: f64,
    pub inflow_rate: f64,
    pub outflow_rate: f64,
    /// Density scale `kappa` over which the outflow switches on.
    pub outflow_smoothing: f64,
    pub kernel_radius: f64,
    pub kernel_exponent: u32,
}

impl Default for ConveyorParams {
    fn default() -> Self {
        ConveyorParams {
            half_width: 1.0,
            length: 4.0,
            boundary_layer: 0.25,
            drift: 1.0,
            repulsion: 2.0,
            heaviside_width: 0.1,
            rho_max: 1.0,
            belt_speed: 2.0,
            backflow: 0.5,
            patch_length: 0.8,
            inflow_rate: 6.0,
            outflow_rate: 8.0,
            outflow_smoothing: 0.05,
            kernel_radius: 0.4,
            kernel_exponent: 3,
        }
    }
}

impl ConveyorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("conveyor.half_width", self.half_width),
            ("conveyor.length", self.length),
            ("conveyor.boundary_layer", self.boundary_layer),
            ("conveyor.drift", self.drift),
            ("conveyor.heaviside_width", self.heaviside_width),
            ("conveyor.rho_max", self.rho_max),
            ("conveyor.patch_length", self.patch_length),
            ("conveyor.outflow_smoothing", self.outflow_smoothing),
            ("conveyor.kernel_radius", self.kernel_radius),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("conveyor.belt_speed", self.belt_speed),
            ("conveyor.backflow", self.backflow),
            ("conveyor.inflow_rate", self.inflow_rate),
            ("conveyor.outflow_rate", self.outflow_rate),
        ];
        for (key, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.repulsion > self.drift && self.repulsion.is_finite()) {
            return Err(Error::config(
                "conveyor.repulsion",
                format!(
                    "rail repulsion ({}) must exceed the drift ({})",
                    self.repulsion, self.drift
                ),
            ));
        }
        if self.patch_length >= self.length / 2.0 {
            return Err(Error::config(
                "conveyor.patch_length",
                format!("must be below half the belt length ({})", self.length / 2.0),
            ));
        }
        if self.boundary_layer > self.half_width {
            return Err(Error::config(
                "conveyor.boundary_layer",
                format!("must not exceed the half-width ({})", self.half_width),
            ));
        }
        if self.kernel_exponent < 2 {
            return Err(Error::config(
                "conveyor.kernel_exponent",
                "must be at least 2",
            ));
        }
        Ok(())
    }
}

/// `(1 - ((2x - lo - hi) / (hi - lo))^2)^3` on `[lo, hi]`, zero outside; peak 1.
fn interval_bump(x: f64, lo: f64, hi: f64) -> f64 {
    let s = (2.0 * x - lo - hi) / (hi - lo);
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        q * q * q
    }
}

/// `1 - smoothstep(|s|)` on `|s| < 1`: a C2 bump of height 1.
fn layer_bump(s: f64) -> f64 {
    1.0 - smoothstep(s.abs())
}

#[derive(Debug, Clone)]
pub struct Conveyor {
    params: ConveyorParams,
    kernel: BumpProfile,
}

impl Conveyor {
    pub fn new(params: ConveyorParams) -> Result<Self> {
        params.validate()?;
        Ok(Conveyor {
            kernel: BumpProfile::new(1.0, params.kernel_radius, params.kernel_exponent)?,
            params,
        })
    }

    pub fn params(&self) -> &ConveyorParams {
        &self.params
    }

    /// The belt `B` as `(x1_min, x1_max, x2_min, x2_max)`.
    pub fn belt(&self) -> (f64, f64, f64, f64) {
        let p = &self.params;
        (0.0, p.length, -p.half_width, p.half_width)
    }

    /// Rail repulsion `b`: zero first component; `+eps_hat` on the lower rail,
    /// `-eps_hat` on the upper one, zero farther than `delta` from both.
    pub fn boundary_repulsion(&self, x: [f64; 2]) -> [f64; 2] {
        let p = &self.params;
        let d = p.boundary_layer;
        let along = if x[0] < 0.0 {
            smoothstep((x[0] + d) / d)
        } else if x[0] > p.length {
            1.0 - smoothstep((x[0] - p.length) / d)
        } else {
            1.0
        };
        let across = layer_bump((x[1] + p.half_width) / d) - layer_bump((x[1] - p.half_width) / d);
        [0.0, p.repulsion * along * across]
    }

    /// Belt transport: `belt_speed` up to the outflow patch, turning smoothly
    /// to `-backflow * belt_speed` by its midpoint so the far end points
    /// inwards.
    pub fn belt_velocity(&self, x: [f64; 2]) -> [f64; 2] {
        let p = &self.params;
        let start = p.length - p.patch_length;
        let s = (x[0] - start) / (0.5 * p.patch_length);
        [
            p.belt_speed * (1.0 - (1.0 + p.backflow) * smoothstep(s)),
            0.0,
        ]
    }

    pub fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        let v = self.belt_velocity(x);
        let b = self.boundary_repulsion(x);
        [v[0] + b[0], v[1] + b[1]]
    }

    /// `rho (v + H(rho - rho_max) eps (-A) / sqrt(1 + |A|^2))`.
    pub fn cargo_flux(&self, x: [f64; 2], rho: f64, a: [f64; 2]) -> [f64; 2] {
        let p = &self.params;
        let v = self.velocity(x);
        let h = smooth_heaviside(rho - p.rho_max, p.heaviside_width);
        let dir = descent_direction(a);
        [
            rho * (v[0] + h * p.drift * dir[0]),
            rho * (v[1] + h * p.drift * dir[1]),
        ]
    }

    pub fn inflow_shape(&self, x: [f64; 2]) -> f64 {
        let p = &self.params;
        interval_bump(x[0], 0.0, p.patch_length) * interval_bump(x[1], -p.half_width, p.half_width)
    }

    pub fn outflow_shape(&self, x: [f64; 2]) -> f64 {
        let p = &self.params;
        interval_bump(x[0], p.length - p.patch_length, p.length)
            * interval_bump(x[1], -p.half_width, p.half_width)
    }

    /// Outflow switch: 0 for `rho <= 0`, `rho` above the smoothing scale.
    pub fn outflow_gate(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            0.0
        } else {
            rho * smoothstep(rho / self.params.outflow_smoothing)
        }
    }

    /// `Psi_in(x) - Psi_out(x, rho)`.
    pub fn cargo_source(&self, x: [f64; 2], rho: f64) -> f64 {
        let p = &self.params;
        p.inflow_rate * self.inflow_shape(x)
            - p.outflow_rate * self.outflow_shape(x) * self.outflow_gate(rho)
    }

    /// Bound on `|v|` over the plane (attained on the rails inside the belt).
    pub fn max_transport_speed(&self) -> f64 {
        let p = &self.params;
        p.belt_speed * p.backflow.max(1.0) + p.repulsion
    }
}

impl Model for Conveyor {
    fn name(&self) -> &'static str {
        "conveyor"
    }

    fn component_names(&self) -> Vec<String> {
        vec!["rho".into()]
    }

    fn far_field(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn wiring(&self) -> Wiring {
        Wiring::Gradient {
            coefficients: vec![1.0],
        }
    }

    fn kernel(&self) -> Option<BumpProfile> {
        Some(self.kernel)
    }

    fn has_flux(&self, _component: usize) -> bool {
        true
    }

    fn flux(&self, _t: f64, x: [f64; 2], _component: usize, u: f64, a: [f64; 2]) -> [f64; 2] {
        self.cargo_flux(x, u, a)
    }

    fn char_speed(
        &self,
        _t: f64,
        x: [f64; 2],
        _component: usize,
        rho: f64,
        a: [f64; 2],
        axis: usize,
    ) -> f64 {
        let p = &self.params;
        let v = self.velocity(x)[axis];
        let d = descent_direction(a)[axis];
        let h = smooth_heaviside(rho - p.rho_max, p.heaviside_width);
        let dh = smooth_heaviside_derivative(rho - p.rho_max, p.heaviside_width);
        let transport = v + h * p.drift * d;
        let derivative = transport + rho * dh * p.drift * d;
        transport.abs().max(derivative.abs())
    }

    fn source(&self, _t: f64, x: [f64; 2], u: &[f64], _a: [f64; 2], out: &mut [f64]) {
        out[0] = self.cargo_source(x, u[0]);
    }

    /// `max |v| + eps (1 + max|rho| max|H'|)`.
    fn wave_speed_bound(&self, _t: f64, _grid: &Grid2D, field: &Field) -> f64 {
        let p = &self.params;
        let rho_max = field.values[0].iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        self.max_transport_speed()
            + p.drift * (1.0 + rho_max * smooth_heaviside_max_slope(p.heaviside_width))
    }

    fn initial_field(&self, grid: &Grid2D) -> Field {
        Field::zeros(grid, self.far_field())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conveyor() -> Conveyor {
        Conveyor::new(ConveyorParams::default()).unwrap()
    }

    #[test]
    fn repulsion_on_the_rails() {
        let c = conveyor();
        let p = c.params().clone();
        for x1 in [0.0, 1.3, p.length] {
            assert_eq!(
                c.boundary_repulsion([x1, -p.half_width]),
                [0.0, p.repulsion]
            );
            assert_eq!(
                c.boundary_repulsion([x1, p.half_width]),
                [0.0, -p.repulsion]
            );
            let inner = p.half_width - 1.01 * p.boundary_layer;
            assert_eq!(c.boundary_repulsion([x1, inner]), [0.0, 0.0]);
            assert_eq!(c.boundary_repulsion([x1, -inner]), [0.0, 0.0]);
            let outer = p.half_width + 1.01 * p.boundary_layer;
            assert_eq!(c.boundary_repulsion([x1, outer]), [0.0, 0.0]);
        }
        // compact support along the belt
        assert_eq!(
            c.boundary_repulsion([-1.01 * p.boundary_layer, p.half_width]),
            [0.0, 0.0]
        );
        assert_eq!(
            c.boundary_repulsion([p.length + 1.01 * p.boundary_layer, p.half_width]),
            [0.0, 0.0]
        );
    }

    #[test]
    fn belt_velocity_points_inwards_at_the_ends() {
        let c = conveyor();
        let p = c.params();
        for x2 in [-1.0, 0.0, 0.5, 1.0] {
            assert!(c.velocity([0.0, x2])[0] >= 0.0);
            assert!(c.velocity([p.length, x2])[0] <= 0.0);
        }
        // the rails push inwards harder than the drift can push outwards
        assert!(c.velocity([2.0, -p.half_width])[1] > p.drift);
        assert!(c.velocity([2.0, p.half_width])[1] < -p.drift);
    }

    #[test]
    fn flux_values() {
        let c = conveyor();
        let p = c.params().clone();
        let x = [1.5, 0.1];
        assert_eq!(c.cargo_flux(x, 0.0, [0.4, 0.1]), [0.0, 0.0]);
        let rho = p.rho_max - 2.0 * p.heaviside_width;
        let v = c.velocity(x);
        assert_eq!(c.cargo_flux(x, rho, [0.4, 0.1]), [rho * v[0], rho * v[1]]);

        // v = 0 past the far end of the belt field
        let far = [p.length + 5.0, 5.0];
        let v = c.velocity(far);
        assert!(v[1] == 0.0);
        let rho = p.rho_max + 2.0 * p.heaviside_width;
        let f = c.cargo_flux([-5.0, 5.0], rho, [1.0, 0.0]);
        let expected = rho * (p.belt_speed - p.drift / 2f64.sqrt());
        assert!((f[0] - expected).abs() < 1e-12);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn drift_only_flux() {
        let c = Conveyor::new(ConveyorParams {
            belt_speed: 0.0,
            ..ConveyorParams::default()
        })
        .unwrap();
        let p = c.params().clone();
        let rho = p.rho_max + 2.0 * p.heaviside_width;
        let f = c.cargo_flux([2.0, 0.0], rho, [1.0, 0.0]);
        assert!((f[0] + rho * p.drift / 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn source_supports() {
        let c = conveyor();
        let p = c.params().clone();
        assert_eq!(c.cargo_source([2.0, 0.0], 3.0), 0.0);
        assert_eq!(c.cargo_source([-0.1, 0.0], 3.0), 0.0);
        assert_eq!(c.cargo_source([0.4, 1.0], 3.0), 0.0);
        let center = [p.patch_length / 2.0, 0.0];
        assert_eq!(c.cargo_source(center, 0.0), p.inflow_rate);
        let out = [p.length - p.patch_length / 2.0, 0.0];
        assert_eq!(c.cargo_source(out, -1.0), 0.0);
        assert_eq!(c.cargo_source(out, 0.0), 0.0);
        assert_eq!(c.cargo_source(out, 2.0), -p.outflow_rate * 2.0);
    }

    #[test]
    fn empty_belt_wave_speed() {
        let c = conveyor();
        let p = c.params().clone();
        let g = Grid2D::new(-0.5, 4.5, -1.5, 1.5, 20, 12).unwrap();
        let f = c.initial_field(&g);
        let s = c.wave_speed_bound(0.0, &g, &f);
        assert!((s - (p.belt_speed + p.repulsion + p.drift)).abs() < 1e-14);
    }

    #[test]
    fn repulsion_must_exceed_drift() {
        let p = ConveyorParams {
            repulsion: 1.0,
            drift: 1.0,
            ..ConveyorParams::default()
        };
        match Conveyor::new(p) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "conveyor.repulsion"),
            other => panic!("{other:?}"),
        }
        assert!(Conveyor::new(ConveyorParams {
            patch_length: 2.0,
            ..ConveyorParams::default()
        })
        .is_err());
    }

    #[test]
    fn char_speed_bounds_flux_derivative() {
        let c = conveyor();
        let p = c.params().clone();
        let a = [0.8, -1.3];
        for x in [[0.5, 0.0], [3.6, 0.9], [2.0, -0.95]] {
            for rho in [0.2, p.rho_max - 0.05, p.rho_max, p.rho_max + 0.07, 2.5] {
                for axis in 0..2 {
                    let h = 1e-7;
                    let d = (c.cargo_flux(x, rho + h, a)[axis] - c.cargo_flux(x, rho - h, a)[axis])
                        / (2.0 * h);
                    let s = c.char_speed(0.0, x, 0, rho, a, axis);
                    assert!(d.abs() <= s + 1e-5, "{x:?} {rho} {axis}");
                    assert!((c.cargo_flux(x, rho, a)[axis] / rho).abs() <= s + 1e-12);
                }
            }
        }
    }
}
