//! Melted (`h_m`) and solid (`h_s`) metal heights under a moving laser beam.
//!
//! The melt is pushed by the wind along the smoothed steepest descent of the
//! averaged surface `eta * (h_m + h_s)`; the laser converts solid into melt at
//! a rate damped by the squared cosine of the averaged incidence angle.

use serde::{Deserialize, Serialize};

use super::{cos2_incidence, descent_direction, smoothstep, Model, Wiring};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::nonlocal::BumpProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserParams {
    pub tau_g: f64,
    pub thickness: f64,
    pub wind_amplitude: f64,
    pub wind_radius: f64,
    pub wind_exponent: u32,
    pub intensity_amplitude: f64,
    pub intensity_radius: f64,
    pub intensity_exponent: u32,
    pub kernel_radius: f64,
    pub kernel_exponent: u32,
    /// Where the beam drills the initial hole.
    pub hold_x1: f64,
    pub hold_x2: f64,
    pub hold_time: f64,
    /// Beam speed along `+x1` after the hold, mm/s.
    pub speed: f64,
    /// Shear cutoff radii; `None` resolves to 2x and 3x the domain diameter.
    pub cutoff_inner: Option<f64>,
    pub cutoff_outer: Option<f64>,
    /// Optional initial melt bump (amplitude 0 disables it).
    pub melt_amplitude: f64,
    pub melt_x1: f64,
    pub melt_x2: f64,
    pub melt_radius: f64,
    /// Radius of the initial-hole disc left out of the ripple statistics.
    pub wake_exclusion: f64,
}

impl Default for LaserParams {
    fn default() -> Self {
        LaserParams {
            tau_g: 4.0,
            thickness: 4.5,
            wind_amplitude: 1.0,
            wind_radius: 3.6,
            wind_exponent: 4,
            intensity_amplitude: 2.0,
            intensity_radius: 1.2,
            intensity_exponent: 6,
            kernel_radius: 2.4,
            kernel_exponent: 3,
            hold_x1: 3.0,
            hold_x2: 0.0,
            hold_time: 0.1,
            speed: 40.0,
            cutoff_inner: None,
            cutoff_outer: None,
            melt_amplitude: 0.0,
            melt_x1: 3.0,
            melt_x2: 0.0,
            melt_radius: 1.0,
            wake_exclusion: 3.6,
        }
    }
}

impl LaserParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("laser.wind_radius", self.wind_radius),
            ("laser.intensity_radius", self.intensity_radius),
            ("laser.kernel_radius", self.kernel_radius),
            ("laser.melt_radius", self.melt_radius),
            ("laser.wake_exclusion", self.wake_exclusion),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("laser.tau_g", self.tau_g),
            ("laser.hold_time", self.hold_time),
            ("laser.intensity_amplitude", self.intensity_amplitude),
            ("laser.wind_amplitude", self.wind_amplitude),
        ];
        for (key, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be non-negative, got {v}")));
            }
        }
        for (key, p) in [
            ("laser.wind_exponent", self.wind_exponent),
            ("laser.intensity_exponent", self.intensity_exponent),
            ("laser.kernel_exponent", self.kernel_exponent),
        ] {
            if p < 2 {
                return Err(Error::config(key, format!("must be at least 2, got {p}")));
            }
        }
        if !self.thickness.is_finite() || !self.speed.is_finite() {
            return Err(Error::config("laser", "thickness and speed must be finite"));
        }
        if let (Some(r), Some(big_r)) = (self.cutoff_inner, self.cutoff_outer) {
            if !(r > 0.0 && big_r > r) {
                return Err(Error::config(
                    "laser.cutoff_outer",
                    format!("need 0 < cutoff_inner < cutoff_outer, got {r} and {big_r}"),
                ));
            }
        } else if self.cutoff_inner.is_some() != self.cutoff_outer.is_some() {
            return Err(Error::config(
                "laser.cutoff_inner",
                "cutoff_inner and cutoff_outer must be given together",
            ));
        }
        Ok(())
    }

    /// Fills the cutoff radii from the grid when unset.
    pub fn resolve(mut self, grid: &Grid2D) -> Self {
        if self.cutoff_inner.is_none() {
            self.cutoff_inner = Some(2.0 * grid.diameter());
            self.cutoff_outer = Some(3.0 * grid.diameter());
        }
        self
    }
}

#[derive(Debug, Clone)]
pub struct Laser {
    params: LaserParams,
    wind: BumpProfile,
    intensity: BumpProfile,
    kernel: BumpProfile,
    cutoff_inner: f64,
    cutoff_outer: f64,
}

impl Laser {
    /// `params` must already be resolved against the grid (see
    /// [`LaserParams::resolve`]).
    pub fn new(params: LaserParams) -> Result<Self> {
        params.validate()?;
        let (cutoff_inner, cutoff_outer) = match (params.cutoff_inner, params.cutoff_outer) {
            (Some(r), Some(big_r)) => (r, big_r),
            _ => {
                return Err(Error::config(
                    "laser.cutoff_inner",
                    "cutoff radii are unresolved",
                ))
            }
        };
        Ok(Laser {
            wind: BumpProfile::new(
                params.wind_amplitude,
                params.wind_radius,
                params.wind_exponent,
            )?,
            intensity: BumpProfile::new(
                params.intensity_amplitude,
                params.intensity_radius,
                params.intensity_exponent,
            )?,
            kernel: BumpProfile::new(1.0, params.kernel_radius, params.kernel_exponent)?,
            cutoff_inner,
            cutoff_outer,
            params,
        })
    }

    pub fn params(&self) -> &LaserParams {
        &self.params
    }

    /// Beam position: fixed during the hold, then straight along `+x1`.
    pub fn trajectory(&self, t: f64) -> [f64; 2] {
        let p = &self.params;
        if t <= p.hold_time {
            [p.hold_x1, p.hold_x2]
        } else {
            [p.hold_x1 + p.speed * (t - p.hold_time), p.hold_x2]
        }
    }

    fn beam_distance(&self, t: f64, x: [f64; 2]) -> f64 {
        let c = self.trajectory(t);
        (x[0] - c[0]).hypot(x[1] - c[1])
    }

    /// Wind speed and laser intensity at `(t, x)`.
    pub fn wind_and_intensity(&self, t: f64, x: [f64; 2]) -> (f64, f64) {
        let d = self.beam_distance(t, x);
        (self.wind.eval(d), self.intensity.eval(d))
    }

    /// `tau_g * S(|x - x_L(t)|)` with `S` a quintic ramp from 1 to 0 between
    /// the inner and outer cutoff radii.
    pub fn shear_cutoff(&self, t: f64, x: [f64; 2]) -> f64 {
        let d = self.beam_distance(t, x);
        let s = (d - self.cutoff_inner) / (self.cutoff_outer - self.cutoff_inner);
        self.params.tau_g * (1.0 - smoothstep(s))
    }

    /// Melt flux `(w h - T_g h^2) (-A) / sqrt(1 + |A|^2)`.
    pub fn melt_flux(&self, t: f64, x: [f64; 2], h_m: f64, a: [f64; 2]) -> [f64; 2] {
        let d = self.beam_distance(t, x);
        let w = self.wind.eval(d);
        let tg = self.shear_cutoff(t, x);
        let k = w * h_m - tg * h_m * h_m;
        let dir = descent_direction(a);
        [k * dir[0], k * dir[1]]
    }

    /// `(L, -L)` with `L = i / (1 + |A|^2)`.
    pub fn melt_rates(&self, t: f64, x: [f64; 2], a: [f64; 2]) -> [f64; 2] {
        let i = self.intensity.eval(self.beam_distance(t, x));
        let l = i * cos2_incidence(a);
        [l, -l]
    }
}

impl Model for Laser {
    fn name(&self) -> &'static str {
        "laser"
    }

    fn component_names(&self) -> Vec<String> {
        vec!["h_m".into(), "h_s".into()]
    }

    fn far_field(&self) -> Vec<f64> {
        vec![0.0, self.params.thickness]
    }

    fn wiring(&self) -> Wiring {
        Wiring::Gradient {
            coefficients: vec![1.0, 1.0],
        }
    }

    fn kernel(&self) -> Option<BumpProfile> {
        Some(self.kernel)
    }

    fn has_flux(&self, component: usize) -> bool {
        component == 0
    }

    fn flux(&self, t: f64, x: [f64; 2], component: usize, u: f64, a: [f64; 2]) -> [f64; 2] {
        if component == 0 {
            self.melt_flux(t, x, u, a)
        } else {
            [0.0, 0.0]
        }
    }

    fn char_speed(
        &self,
        t: f64,
        x: [f64; 2],
        component: usize,
        u: f64,
        a: [f64; 2],
        axis: usize,
    ) -> f64 {
        if component != 0 {
            return 0.0;
        }
        let w = self.wind.eval(self.beam_distance(t, x));
        let tg = self.shear_cutoff(t, x);
        let n = a[axis].abs() / (1.0 + a[0] * a[0] + a[1] * a[1]).sqrt();
        (w - tg * u).abs().max((w - 2.0 * tg * u).abs()) * n
    }

    fn source(&self, t: f64, x: [f64; 2], _u: &[f64], a: [f64; 2], out: &mut [f64]) {
        let r = self.melt_rates(t, x, a);
        out[0] = r[0];
        out[1] = r[1];
    }

    /// `max (w + 2 T_g |h_m|)` over the cells.
    fn wave_speed_bound(&self, t: f64, grid: &Grid2D, field: &Field) -> f64 {
        let h_m = &field.values[0];
        let mut bound = 0.0_f64;
        for j in 0..grid.ny {
            let y = grid.y_center(j);
            for i in 0..grid.nx {
                let x = [grid.x_center(i), y];
                let w = self.wind.eval(self.beam_distance(t, x));
                let s = w + 2.0 * self.shear_cutoff(t, x) * h_m[grid.index(i, j)].abs();
                bound = bound.max(s);
            }
        }
        bound
    }

    fn initial_field(&self, grid: &Grid2D) -> Field {
        let p = &self.params;
        let melt = BumpProfile {
            amplitude: p.melt_amplitude,
            radius: p.melt_radius,
            exponent: 3,
        };
        Field::from_fn(grid, self.far_field(), |x, c| match c {
            0 => melt.eval((x[0] - p.melt_x1).hypot(x[1] - p.melt_x2)),
            _ => p.thickness,
        })
    }
}
