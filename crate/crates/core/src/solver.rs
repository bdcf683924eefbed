//! Split time integrator. Each step freezes the nonlocal term, sweeps the
//! convective part with a Lax-Friedrichs flux along x1 then x2, and finishes
//! with an explicit Euler step for the sources.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{HaltReason, Metric, RunRecord, Snapshot, SnapshotStats};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid2D};
use crate::models::{Model, Wiring};
use crate::nonlocal::{discretize_kernel, ConvolutionMethod, Convolver};

/// Numerical viscosity of the interface flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Viscosity {
    /// Local speed bound of the two neighbouring cells (Rusanov).
    #[default]
    Local,
    /// `dx / dt`, the classic Lax-Friedrichs average.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub dt_max: Option<f64>,
    /// Overrides the CFL step when set.
    pub fixed_dt: Option<f64>,
    /// Time between recorded snapshots; `None` records only the first and last.
    pub snapshot_interval: Option<f64>,
    pub viscosity: Viscosity,
    pub blowup_ceiling: f64,
    pub convolution: ConvolutionMethod,
    /// Keep snapshot fields in the record (needed for paired-run comparisons).
    pub keep_fields: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.45,
            t_end: 1.0,
            dt_max: None,
            fixed_dt: None,
            snapshot_interval: None,
            viscosity: Viscosity::Local,
            blowup_ceiling: 1e6,
            convolution: ConvolutionMethod::Auto,
            keep_fields: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::config(
                "solver.cfl",
                format!("must lie in (0, 1), got {}", self.cfl),
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(
                "solver.t_end",
                format!("must be non-negative, got {}", self.t_end),
            ));
        }
        for (key, v) in [
            ("solver.dt_max", self.dt_max),
            ("solver.fixed_dt", self.fixed_dt),
            ("solver.snapshot_interval", self.snapshot_interval),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(key, format!("must be positive, got {v}")));
                }
            }
        }
        if !(self.blowup_ceiling > 0.0) {
            return Err(Error::config("solver.blowup_ceiling", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub field: Field,
    pub step: u64,
}

impl State {
    pub fn new(field: Field) -> Self {
        State {
            t: 0.0,
            field,
            step: 0,
        }
    }
}

/// Why a run stopped early. `t` is the last time with a finite, bounded state.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUp {
    pub t: f64,
    pub reason: String,
}

impl fmt::Display for BlowUp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "blow-up after t = {}: {}", self.t, self.reason)
    }
}

pub struct Solver {
    model: Arc<dyn Model>,
    grid: Grid2D,
    config: SolverConfig,
    convolver: Option<Convolver>,
    warned_fixed_dt: AtomicBool,
}

impl Solver {
    pub fn new<M: Model + 'static>(model: M, grid: &Grid2D, config: SolverConfig) -> Result<Self> {
        Self::shared(Arc::new(model), grid, config)
    }

    pub fn shared(model: Arc<dyn Model>, grid: &Grid2D, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let convolver = match (model.wiring(), model.kernel()) {
            (Wiring::None, _) => None,
            (_, Some(profile)) => {
                let stencil = discretize_kernel(&profile, grid.dx, grid.dy)?;
                Some(Convolver::new(grid, stencil, config.convolution))
            }
            (_, None) => {
                return Err(Error::config(
                    "model",
                    format!("{} needs a convolution kernel", model.name()),
                ))
            }
        };
        Ok(Solver {
            model,
            grid: grid.clone(),
            config,
            convolver,
            warned_fixed_dt: AtomicBool::new(false),
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn model(&self) -> &dyn Model {
        self.model.as_ref()
    }

    pub fn initial_state(&self) -> State {
        State::new(self.model.initial_field(&self.grid))
    }

    /// The nonlocal term `A` at every cell, as wired by the model.
    pub fn nonlocal_field(&self, field: &Field) -> Vec<[f64; 2]> {
        let n = self.grid.len();
        match (self.model.wiring(), &self.convolver) {
            (Wiring::Convolve { component }, Some(conv)) => conv
                .convolve(&field.values[component], field.far_field[component])
                .into_iter()
                .map(|v| [v, 0.0])
                .collect(),
            (Wiring::Gradient { coefficients }, Some(conv)) => {
                let (v, ff) = crate::nonlocal::combine_components(field, &coefficients);
                conv.gradient(&v, ff)
            }
            _ => vec![[0.0, 0.0]; n],
        }
    }

    /// Step size from the CFL condition, clamped by `dt_max` and `t_end - t`.
    pub fn stable_dt(&self, state: &State) -> Result<f64, BlowUp> {
        let dt = self.unclamped_dt(state)?;
        if self.config.fixed_dt.is_some() {
            return Ok(dt);
        }
        Ok(dt.min((self.config.t_end - state.t).max(0.0)))
    }

    /// The fixed step if one is set, otherwise the CFL step capped by
    /// `dt_max`; ignores `t_end`.
    pub fn unclamped_dt(&self, state: &State) -> Result<f64, BlowUp> {
        let speed = self
            .model
            .wave_speed_bound(state.t, &self.grid, &state.field);
        if !speed.is_finite() {
            return Err(BlowUp {
                t: state.t,
                reason: format!("non-finite wave speed bound ({speed})"),
            });
        }
        let h = self.grid.dx.min(self.grid.dy);
        let cfl_dt = if speed > f64::MIN_POSITIVE {
            self.config.cfl * h / speed
        } else {
            f64::INFINITY
        };
        if let Some(dt) = self.config.fixed_dt {
            if dt > cfl_dt && !self.warned_fixed_dt.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "fixed_dt = {dt} exceeds the CFL step {cfl_dt:.3e} at t = {} (speed bound {speed:.3e})",
                    state.t
                );
            }
            return Ok(dt);
        }
        Ok(self.config.dt_max.map_or(cfl_dt, |cap| cfl_dt.min(cap)))
    }

    /// Both directional sweeps with `A` frozen.
    pub fn convective_step(&self, state: &State, a: &[[f64; 2]], dt: f64) -> Field {
        let mut field = state.field.clone();
        // a direction one cell wide is a reduced dimension, not a boundary
        let axes = [self.grid.nx > 1, self.grid.ny > 1];
        for axis in (0..2).filter(|&d| axes[d]) {
            for c in 0..field.n_components() {
                if self.model.has_flux(c) {
                    self.sweep(state.t, axis, c, &mut field, a, dt);
                }
            }
        }
        field
    }

    fn sweep(&self, t: f64, axis: usize, c: usize, field: &mut Field, a: &[[f64; 2]], dt: f64) {
        let g = &self.grid;
        let ff = field.far_field[c];
        let u = &mut field.values[c];
        if axis == 0 {
            let lambda = dt / g.dx;
            u.par_chunks_mut(g.nx).enumerate().for_each(|(j, row)| {
                let arow = &a[j * g.nx..(j + 1) * g.nx];
                let new =
                    self.sweep_line(t, c, 0, ff, lambda, row, arow, |k| g.center(k, j as isize));
                row.copy_from_slice(&new);
            });
        } else {
            let lambda = dt / g.dy;
            let src: &[f64] = u;
            let columns: Vec<Vec<f64>> = (0..g.nx)
                .into_par_iter()
                .map(|i| {
                    let line: Vec<f64> = (0..g.ny).map(|j| src[j * g.nx + i]).collect();
                    let aline: Vec<[f64; 2]> = (0..g.ny).map(|j| a[j * g.nx + i]).collect();
                    self.sweep_line(t, c, 1, ff, lambda, &line, &aline, |k| {
                        g.center(i as isize, k)
                    })
                })
                .collect();
            for (i, col) in columns.iter().enumerate() {
                for (j, v) in col.iter().enumerate() {
                    u[j * g.nx + i] = *v;
                }
            }
        }
    }

    /// Conservative update of one grid line with one ghost cell on each side.
    #[allow(clippy::too_many_arguments)]
    fn sweep_line(
        &self,
        t: f64,
        c: usize,
        axis: usize,
        far_field: f64,
        lambda: f64,
        u: &[f64],
        a: &[[f64; 2]],
        center: impl Fn(isize) -> [f64; 2],
    ) -> Vec<f64> {
        let n = u.len() as isize;
        let periodic = self.grid.boundary == Boundary::Periodic;
        let mut ue = Vec::with_capacity(u.len() + 2);
        let mut fe = Vec::with_capacity(u.len() + 2);
        let mut se = Vec::with_capacity(u.len() + 2);
        for k in -1..=n {
            let (uk, ak, xk) = if (0..n).contains(&k) {
                (u[k as usize], a[k as usize], center(k))
            } else if periodic {
                let w = k.rem_euclid(n);
                (u[w as usize], a[w as usize], center(w))
            } else {
                let nearest = k.clamp(0, n - 1) as usize;
                (far_field, a[nearest], center(k))
            };
            ue.push(uk);
            fe.push(self.model.flux(t, xk, c, uk, ak)[axis]);
            if self.config.viscosity == Viscosity::Local {
                se.push(self.model.char_speed(t, xk, c, uk, ak, axis));
            }
        }
        let interface = |m: usize| {
            let alpha = match self.config.viscosity {
                Viscosity::Local => se[m].max(se[m + 1]),
                Viscosity::Global => 1.0 / lambda,
            };
            0.5 * (fe[m] + fe[m + 1]) - 0.5 * alpha * (ue[m + 1] - ue[m])
        };
        let mut left = interface(0);
        let mut out = Vec::with_capacity(u.len());
        for (k, &uk) in u.iter().enumerate() {
            let right = interface(k + 1);
            out.push(uk - lambda * (right - left));
            left = right;
        }
        out
    }

    /// Forward Euler on the sources with `A` frozen, at time `t`.
    pub fn source_step(&self, t: f64, field: &mut Field, a: &[[f64; 2]], dt: f64) {
        let g = &self.grid;
        let nc = field.n_components();
        let mut rates = vec![0.0; g.len() * nc];
        {
            let values = &field.values;
            rates.par_chunks_mut(nc).enumerate().for_each_init(
                || vec![0.0; nc],
                |buf, (k, out)| {
                    for (c, b) in buf.iter_mut().enumerate() {
                        *b = values[c][k];
                    }
                    let x = g.center((k % g.nx) as isize, (k / g.nx) as isize);
                    self.model.source(t, x, buf, a[k], out);
                },
            );
        }
        for (c, comp) in field.values.iter_mut().enumerate() {
            comp.par_iter_mut()
                .enumerate()
                .for_each(|(k, u)| *u += dt * rates[k * nc + c]);
        }
    }

    /// One full step of length `dt`.
    pub fn advance(&self, state: &State, dt: f64) -> Result<State, BlowUp> {
        let a = self.nonlocal_field(&state.field);
        let mut field = self.convective_step(state, &a, dt);
        self.source_step(state.t, &mut field, &a, dt);
        self.check(state.t, &field)?;
        Ok(State {
            t: state.t + dt,
            field,
            step: state.step + 1,
        })
    }

    /// One step with the CFL (or fixed) step size.
    pub fn step(&self, state: &State) -> Result<State, BlowUp> {
        let dt = self.stable_dt(state)?;
        self.advance(state, dt)
    }

    fn check(&self, t_good: f64, field: &Field) -> Result<(), BlowUp> {
        let ceiling = self.config.blowup_ceiling;
        for (c, comp) in field.values.iter().enumerate() {
            for &v in comp {
                if !v.is_finite() {
                    return Err(BlowUp {
                        t: t_good,
                        reason: format!("non-finite value in component {c}"),
                    });
                }
                if v.abs() > ceiling {
                    return Err(BlowUp {
                        t: t_good,
                        reason: format!("component {c} exceeds the ceiling {ceiling:e}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn run(&self, initial: State, metrics: &[&dyn Metric]) -> RunRecord {
        self.run_with(initial, metrics, &mut |_, _| Ok(()))
            .expect("snapshot observer never fails")
    }

    /// Steps to `t_end`, recording a snapshot at t = 0, at every multiple of
    /// the snapshot interval and at the end. `observer` sees every snapshot
    /// state; its errors abort the run.
    pub fn run_with(
        &self,
        initial: State,
        metrics: &[&dyn Metric],
        observer: &mut dyn FnMut(&Grid2D, &State) -> Result<()>,
    ) -> Result<RunRecord> {
        let t_end = self.config.t_end;
        let mut record = RunRecord {
            model: self.model.name().to_string(),
            components: self.model.component_names(),
            grid: self.grid.clone(),
            cfl: self.config.cfl,
            fixed_dt: self.config.fixed_dt,
            metric_names: metrics.iter().flat_map(|m| m.names()).collect(),
            snapshots: Vec::new(),
            halt: HaltReason::Completed,
            steps: 0,
            min_dt: f64::INFINITY,
            max_dt: 0.0,
        };
        let mut state = initial;
        self.snapshot(&mut record, &state, metrics, observer)?;
        if let Err(b) = self.check(state.t, &state.field) {
            record.halt = HaltReason::BlowUp {
                t: b.t,
                reason: b.reason,
            };
            return Ok(record);
        }

        let interval = self.config.snapshot_interval;
        let mut next_snap = interval.map_or(t_end, |s| (state.t + s).min(t_end));
        let t0 = state.t;
        let tol = 1e-12 * t_end.max(1.0);
        let mut steps_taken = 0u64;
        while state.t < t_end - tol {
            let proposed = match self.stable_dt(&state) {
                Ok(dt) => dt,
                Err(b) => {
                    record.halt = HaltReason::BlowUp {
                        t: b.t,
                        reason: b.reason,
                    };
                    break;
                }
            };
            let t_next = match self.config.fixed_dt {
                Some(dt) => {
                    let t = t0 + (steps_taken + 1) as f64 * dt;
                    if t >= t_end - 1e-9 * dt {
                        t_end
                    } else {
                        t
                    }
                }
                None => {
                    let t = state.t + proposed;
                    if t >= next_snap - tol {
                        next_snap
                    } else {
                        t
                    }
                }
            };
            let dt = t_next - state.t;
            match self.advance(&state, dt) {
                Ok(mut next) => {
                    next.t = t_next;
                    state = next;
                }
                Err(b) => {
                    record.halt = HaltReason::BlowUp {
                        t: b.t,
                        reason: b.reason,
                    };
                    break;
                }
            }
            steps_taken += 1;
            record.steps = steps_taken;
            record.min_dt = record.min_dt.min(dt);
            record.max_dt = record.max_dt.max(dt);
            if state.t >= next_snap - tol || state.t >= t_end - tol {
                self.snapshot(&mut record, &state, metrics, observer)?;
                while next_snap <= state.t + tol && next_snap < t_end {
                    next_snap = interval.map_or(t_end, |s| (next_snap + s).min(t_end));
                }
            }
        }
        if record.halt.is_blowup() {
            let last = record.snapshots.last().map(|s| s.stats.step);
            if last != Some(state.step) {
                self.snapshot(&mut record, &state, metrics, observer)?;
            }
            log::warn!("run halted: {:?}", record.halt);
        }
        Ok(record)
    }

    fn snapshot(
        &self,
        record: &mut RunRecord,
        state: &State,
        metrics: &[&dyn Metric],
        observer: &mut dyn FnMut(&Grid2D, &State) -> Result<()>,
    ) -> Result<()> {
        let values = metrics
            .iter()
            .flat_map(|m| m.evaluate(&self.grid, state))
            .collect();
        let stats = SnapshotStats::compute(&self.grid, state, values);
        log::debug!(
            "snapshot t = {:.6} step {} linf {:?}",
            stats.t,
            stats.step,
            stats.linf
        );
        observer(&self.grid, state)?;
        record.snapshots.push(Snapshot {
            stats,
            field: self.config.keep_fields.then(|| state.field.clone()),
        });
        Ok(())
    }
}
