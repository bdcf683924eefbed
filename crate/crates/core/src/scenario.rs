//! Builds a model, grid and diagnostics from a resolved [`ScenarioConfig`].

use std::path::Path;
use std::sync::Arc;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::diagnostics::{self, Metric, Region, RunRecord};
use crate::error::{Error, Result};
use crate::grid::{integrate, Field, Grid2D};
use crate::models::{Advection, Blowup, BlowupKind, Conveyor, Laser, Model};
use crate::solver::{Solver, SolverConfig, State};

/// Cut geometry, ripple statistics, combined mass and (on grids symmetric
/// about `x2 = 0`) the mirror-symmetry defect.
#[derive(Debug, Clone)]
pub struct LaserMetrics {
    pub thickness: f64,
    pub exclude_x1: f64,
    pub exclude_radius: f64,
    pub symmetric: bool,
}

impl LaserMetrics {
    pub fn new(laser: &Laser, grid: &Grid2D) -> Self {
        let p = laser.params();
        LaserMetrics {
            thickness: p.thickness,
            exclude_x1: p.hold_x1,
            exclude_radius: p.wake_exclusion,
            symmetric: diagnostics::symmetry_defect(grid, &vec![0.0; grid.len()]).is_ok(),
        }
    }
}

impl Metric for LaserMetrics {
    fn names(&self) -> Vec<String> {
        let mut n: Vec<String> = [
            "combined_mass",
            "cut_area",
            "cut_components",
            "max_half_width",
            "wake_columns",
            "ripple_count",
            "ripple_amplitude",
        ]
        .map(String::from)
        .into();
        if self.symmetric {
            n.push("symmetry_defect".into());
        }
        n
    }

    fn evaluate(&self, grid: &Grid2D, state: &State) -> Vec<f64> {
        let f = &state.field;
        let h_s = f.component(1);
        let combined = integrate(f, 0, grid).unwrap_or(f64::NAN)
            + integrate(f, 1, grid).unwrap_or(f64::NAN)
            - self.thickness * grid.len() as f64 * grid.cell_area();
        let mask = diagnostics::cut_region(h_s);
        let cut_cells = mask.iter().filter(|&&m| m).count();
        let profile = diagnostics::cut_half_width_profile(grid, h_s);
        let wake = diagnostics::wake_profile(grid, &profile, self.exclude_x1, self.exclude_radius);
        let ripples = diagnostics::ripple_stats(&wake);
        let mut v = vec![
            combined,
            cut_cells as f64 * grid.cell_area(),
            diagnostics::connected_components(grid, &mask) as f64,
            profile.iter().copied().fold(0.0, f64::max),
            wake.len() as f64,
            ripples.map_or(0.0, |r| r.count as f64),
            ripples.map_or(0.0, |r| r.amplitude),
        ];
        if self.symmetric {
            let d = (0..f.n_components())
                .map(|c| diagnostics::symmetry_defect(grid, f.component(c)).unwrap_or(f64::NAN))
                .fold(0.0, f64::max);
            v.push(d);
        }
        v
    }
}

/// Support containment and positivity of the cargo density.
#[derive(Debug, Clone)]
pub struct ConveyorMetrics {
    pub belt: Region,
}

impl Metric for ConveyorMetrics {
    fn names(&self) -> Vec<String> {
        vec!["outside_mass_fraction".into(), "min_rho".into()]
    }

    fn evaluate(&self, grid: &Grid2D, state: &State) -> Vec<f64> {
        let rho = state.field.component(0);
        vec![
            diagnostics::outside_mass_fraction(grid, rho, self.belt),
            rho.iter().copied().fold(f64::INFINITY, f64::min),
        ]
    }
}

pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: Grid2D,
    pub model: Arc<dyn Model>,
    metrics: Vec<Box<dyn Metric>>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("kind", &self.config.scenario)
            .field("grid", &self.grid)
            .finish()
    }
}

impl Scenario {
    /// `config` must be resolved (as returned by [`ScenarioConfig::load`]).
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let missing = |k: &str| Error::config(k, "section unresolved");
        let (model, metrics): (Arc<dyn Model>, Vec<Box<dyn Metric>>) = match config.scenario {
            ScenarioKind::Laser => {
                let p = config.laser.clone().ok_or_else(|| missing("laser"))?;
                let laser = Laser::new(p.resolve(&grid))?;
                let m = LaserMetrics::new(&laser, &grid);
                (Arc::new(laser), vec![Box::new(m)])
            }
            ScenarioKind::Conveyor => {
                let p = config.conveyor.clone().ok_or_else(|| missing("conveyor"))?;
                let conveyor = Conveyor::new(p)?;
                let m = ConveyorMetrics {
                    belt: conveyor.belt(),
                };
                (Arc::new(conveyor), vec![Box::new(m)])
            }
            ScenarioKind::BlowupHomogeneous | ScenarioKind::BlowupPsi => {
                let p = config.blowup.clone().ok_or_else(|| missing("blowup"))?;
                let kind = if config.scenario == ScenarioKind::BlowupPsi {
                    BlowupKind::Psi
                } else {
                    BlowupKind::Homogeneous
                };
                (Arc::new(Blowup::new(kind, &p)?), Vec::new())
            }
            ScenarioKind::Custom => {
                let p = config.custom.clone().ok_or_else(|| missing("custom"))?;
                (Arc::new(Advection::new(p)?), Vec::new())
            }
        };
        Ok(Scenario {
            config,
            grid,
            model,
            metrics,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(ScenarioConfig::load(path)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(ScenarioConfig::from_text(text, Path::new("<inline>"))?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.config
            .solver_config()
            .expect("validated at construction")
    }

    pub fn solver(&self) -> Result<Solver> {
        self.solver_with(self.solver_config())
    }

    pub fn solver_with(&self, config: SolverConfig) -> Result<Solver> {
        Solver::shared(self.model.clone(), &self.grid, config)
    }

    pub fn metrics(&self) -> Vec<&dyn Metric> {
        self.metrics.iter().map(|m| m.as_ref()).collect()
    }

    pub fn initial_field(&self) -> Field {
        self.model.initial_field(&self.grid)
    }

    /// Runs from the model's initial datum with the configured solver.
    pub fn run(&self) -> Result<RunRecord> {
        let solver = self.solver()?;
        Ok(solver.run(solver.initial_state(), &self.metrics()))
    }

    pub fn component_index(&self, name: &str) -> Result<usize> {
        self.model
            .component_names()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| {
                Error::config(
                    "component",
                    format!(
                        "`{name}` is not a component of {} ({})",
                        self.model.name(),
                        self.model.component_names().join(", ")
                    ),
                )
            })
    }
}
