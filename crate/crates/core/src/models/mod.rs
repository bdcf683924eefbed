//! Concrete balance-law systems `d_t u_i + div f_i(t, x, u_i, A) = S_i(t, x, u, A)`
//! whose only coupling is the nonlocal argument `A`.

mod advection;
mod blowup;
mod conveyor;
mod laser;

pub use advection::{Advection, AdvectionParams};
pub use blowup::{psi_profile, Blowup, BlowupKind, BlowupParams};
pub use conveyor::{Conveyor, ConveyorParams};
pub use laser::{Laser, LaserParams};

use crate::grid::{Field, Grid2D};
use crate::nonlocal::BumpProfile;

/// Which nonlocal quantity feeds the flux and source.
#[derive(Debug, Clone, PartialEq)]
pub enum Wiring {
    /// No nonlocal term; `A` is identically zero.
    None,
    /// `A = (eta * u_c, 0)`.
    Convolve { component: usize },
    /// `A = grad(eta * sum_k c_k u_k)`.
    Gradient { coefficients: Vec<f64> },
}

/// A system of balance laws coupled through a single convolution term.
///
/// `a` is the value of the nonlocal term at the cell: a 2-vector for gradient
/// wiring, `[conv, 0]` for plain convolution wiring.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    fn component_names(&self) -> Vec<String>;

    fn n_components(&self) -> usize {
        self.component_names().len()
    }

    fn far_field(&self) -> Vec<f64>;

    fn wiring(&self) -> Wiring;

    /// Convolution kernel profile, if the wiring needs one.
    fn kernel(&self) -> Option<BumpProfile>;

    /// `false` when the flux of `component` vanishes identically; the
    /// convective sweep skips such components.
    fn has_flux(&self, component: usize) -> bool;

    fn flux(&self, t: f64, x: [f64; 2], component: usize, u: f64, a: [f64; 2]) -> [f64; 2];

    /// Upper bound on `|d f_axis / du|` and `|f_axis / u|` at this state; the
    /// local viscosity of the Lax-Friedrichs flux.
    fn char_speed(
        &self,
        t: f64,
        x: [f64; 2],
        component: usize,
        u: f64,
        a: [f64; 2],
        axis: usize,
    ) -> f64;

    /// Writes the source rates of every component into `out`.
    fn source(&self, t: f64, x: [f64; 2], u: &[f64], a: [f64; 2], out: &mut [f64]);

    /// Bound on the characteristic speeds over the current state, for the CFL
    /// condition.
    fn wave_speed_bound(&self, t: f64, grid: &Grid2D, field: &Field) -> f64;

    fn initial_field(&self, grid: &Grid2D) -> Field;
}

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3`, clamped to `[0, 1]`. C2.
#[inline]
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

#[inline]
pub fn smoothstep_derivative(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// C2 regularized Heaviside: exact outside `[-mu, mu]`.
#[inline]
pub fn smooth_heaviside(xi: f64, mu: f64) -> f64 {
    smoothstep((xi + mu) / (2.0 * mu))
}

#[inline]
pub fn smooth_heaviside_derivative(xi: f64, mu: f64) -> f64 {
    smoothstep_derivative((xi + mu) / (2.0 * mu)) / (2.0 * mu)
}

/// `max |dH/dxi| = 15 / (16 mu)`, attained at `xi = 0`.
#[inline]
pub fn smooth_heaviside_max_slope(mu: f64) -> f64 {
    15.0 / (16.0 * mu)
}

/// Squared cosine of the incidence angle on a surface with slope `a`.
#[inline]
pub fn cos2_incidence(a: [f64; 2]) -> f64 {
    1.0 / (1.0 + a[0] * a[0] + a[1] * a[1])
}

/// `-a / sqrt(1 + |a|^2)`: smoothly normalized steepest descent.
#[inline]
pub(crate) fn descent_direction(a: [f64; 2]) -> [f64; 2] {
    let s = (1.0 + a[0] * a[0] + a[1] * a[1]).sqrt();
    [-a[0] / s, -a[1] / s]
}
