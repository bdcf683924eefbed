//! Scenario files: sectioned `key = value` text (TOML syntax) with strict keys.
//!
//! Every section is optional; missing entries take per-scenario defaults. The
//! fully resolved config can be written back out with [`ScenarioConfig::to_text`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid2D};
use crate::models::{AdvectionParams, BlowupParams, ConveyorParams, LaserParams};
use crate::nonlocal::ConvolutionMethod;
use crate::solver::{SolverConfig, Viscosity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Laser,
    Conveyor,
    #[default]
    BlowupHomogeneous,
    BlowupPsi,
    Custom,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Laser => "laser",
            ScenarioKind::Conveyor => "conveyor",
            ScenarioKind::BlowupHomogeneous => "blowup_homogeneous",
            ScenarioKind::BlowupPsi => "blowup_psi",
            ScenarioKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub cfl: Option<f64>,
    pub t_end: Option<f64>,
    pub dt_max: Option<f64>,
    pub fixed_dt: Option<f64>,
    pub snapshot_interval: Option<f64>,
    pub viscosity: Option<Viscosity>,
    pub blowup_ceiling: Option<f64>,
    pub convolution: Option<ConvolutionMethod>,
    pub keep_fields: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// Time-series table.
    Csv,
    /// Grid dumps per snapshot.
    Dump,
    /// Contour rasters per snapshot.
    Pgm,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    pub formats: Option<Vec<OutputFormat>>,
    /// Component shown in the contour rasters.
    pub contour_component: Option<String>,
    pub clip_min: Option<f64>,
    pub clip_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    pub laser: Option<LaserParams>,
    pub conveyor: Option<ConveyorParams>,
    pub blowup: Option<BlowupParams>,
    pub custom: Option<AdvectionParams>,
}

struct Defaults {
    grid: (f64, f64, f64, f64, usize, usize, Boundary),
    t_end: f64,
    fixed_dt: Option<f64>,
    snapshot_interval: f64,
    contour: &'static str,
    clip: (f64, f64),
}

fn defaults(kind: ScenarioKind) -> Defaults {
    match kind {
        // desk scale: half the full-size window at five times its mesh width
        ScenarioKind::Laser => Defaults {
            grid: (0.0, 20.0, -2.0, 2.0, 800, 160, Boundary::FarField),
            t_end: 0.4,
            fixed_dt: None,
            snapshot_interval: 0.05,
            contour: "h_s",
            clip: (0.0, 4.5),
        },
        ScenarioKind::Conveyor => Defaults {
            grid: (-0.5, 4.5, -1.5, 1.5, 100, 60, Boundary::FarField),
            t_end: 1.0,
            fixed_dt: None,
            snapshot_interval: 0.05,
            contour: "rho",
            clip: (0.0, 2.0),
        },
        ScenarioKind::BlowupHomogeneous => Defaults {
            grid: (0.0, 4.0, 0.0, 4.0, 4, 4, Boundary::Periodic),
            t_end: 1.05,
            fixed_dt: Some(1e-3),
            snapshot_interval: 0.05,
            contour: "u",
            clip: (0.0, 20.0),
        },
        ScenarioKind::BlowupPsi => Defaults {
            grid: (-3.0, 3.0, 0.0, 1.0, 6000, 1, Boundary::FarField),
            t_end: 1.05,
            fixed_dt: Some(1e-3),
            snapshot_interval: 0.05,
            contour: "u",
            clip: (0.0, 20.0),
        },
        ScenarioKind::Custom => Defaults {
            grid: (0.0, 1.0, 0.0, 1.0, 100, 100, Boundary::Periodic),
            t_end: 1.0,
            fixed_dt: None,
            snapshot_interval: 0.1,
            contour: "u",
            clip: (0.0, 1.0),
        },
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Reads, resolves and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let cfg = Self::parse(text, path)?.resolved()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills every unset entry with the scenario default.
    pub fn resolved(mut self) -> Result<Self> {
        let d = defaults(self.scenario);
        let g = &mut self.grid;
        let (x0, x1, y0, y1, nx, ny, boundary) = d.grid;
        g.x_min.get_or_insert(x0);
        g.x_max.get_or_insert(x1);
        g.y_min.get_or_insert(y0);
        g.y_max.get_or_insert(y1);
        g.nx.get_or_insert(nx);
        g.ny.get_or_insert(ny);
        g.boundary.get_or_insert(boundary);

        let base = SolverConfig::default();
        let s = &mut self.solver;
        s.cfl.get_or_insert(base.cfl);
        s.t_end.get_or_insert(d.t_end);
        if s.fixed_dt.is_none() {
            s.fixed_dt = d.fixed_dt;
        }
        s.snapshot_interval.get_or_insert(d.snapshot_interval);
        s.viscosity.get_or_insert(base.viscosity);
        s.blowup_ceiling.get_or_insert(base.blowup_ceiling);
        s.convolution.get_or_insert(base.convolution);
        s.keep_fields.get_or_insert(base.keep_fields);

        let o = &mut self.output;
        o.directory.get_or_insert_with(|| PathBuf::from("out"));
        o.formats
            .get_or_insert_with(|| vec![OutputFormat::Csv, OutputFormat::Dump, OutputFormat::Pgm]);
        o.contour_component
            .get_or_insert_with(|| d.contour.to_string());
        o.clip_min.get_or_insert(d.clip.0);
        o.clip_max.get_or_insert(d.clip.1);

        let grid = self.grid()?;
        let stray = |name: &str, present: bool| {
            if present {
                Err(Error::config(
                    name,
                    format!(
                        "section does not apply to scenario `{}`",
                        self.scenario.as_str()
                    ),
                ))
            } else {
                Ok(())
            }
        };
        match self.scenario {
            ScenarioKind::Laser => {
                let p = self.laser.take().unwrap_or_default();
                // the beam should not skip cells between steps
                if self.solver.dt_max.is_none() && self.solver.fixed_dt.is_none() && p.speed != 0.0
                {
                    self.solver.dt_max = Some(grid.dx.min(grid.dy) / p.speed.abs());
                }
                self.laser = Some(p.resolve(&grid));
            }
            ScenarioKind::Conveyor => {
                self.conveyor.get_or_insert_with(Default::default);
            }
            ScenarioKind::BlowupHomogeneous | ScenarioKind::BlowupPsi => {
                self.blowup.get_or_insert_with(Default::default);
            }
            ScenarioKind::Custom => {
                self.custom.get_or_insert_with(Default::default);
            }
        }
        let kind = self.scenario;
        stray("laser", kind != ScenarioKind::Laser && self.laser.is_some())?;
        stray(
            "conveyor",
            kind != ScenarioKind::Conveyor && self.conveyor.is_some(),
        )?;
        stray(
            "custom",
            kind != ScenarioKind::Custom && self.custom.is_some(),
        )?;
        stray(
            "blowup",
            !matches!(
                kind,
                ScenarioKind::BlowupHomogeneous | ScenarioKind::BlowupPsi
            ) && self.blowup.is_some(),
        )?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.solver_config()?.validate()?;
        let (lo, hi) = self.clip_range();
        if !(lo < hi) {
            return Err(Error::config(
                "output.clip_max",
                format!("clip range needs clip_min < clip_max, got [{lo}, {hi}]"),
            ));
        }
        if let Some(p) = &self.laser {
            p.validate()?;
        }
        if let Some(p) = &self.conveyor {
            p.validate()?;
        }
        Ok(())
    }

    /// The grid block. Requires a resolved config.
    pub fn grid(&self) -> Result<Grid2D> {
        let g = &self.grid;
        let missing = |k: &str| Error::config(format!("grid.{k}"), "unresolved");
        Ok(Grid2D::new(
            g.x_min.ok_or_else(|| missing("x_min"))?,
            g.x_max.ok_or_else(|| missing("x_max"))?,
            g.y_min.ok_or_else(|| missing("y_min"))?,
            g.y_max.ok_or_else(|| missing("y_max"))?,
            g.nx.ok_or_else(|| missing("nx"))?,
            g.ny.ok_or_else(|| missing("ny"))?,
        )?
        .with_boundary(g.boundary.unwrap_or_default()))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let base = SolverConfig::default();
        Ok(SolverConfig {
            cfl: s.cfl.unwrap_or(base.cfl),
            t_end: s
                .t_end
                .ok_or_else(|| Error::config("solver.t_end", "unresolved"))?,
            dt_max: s.dt_max,
            fixed_dt: s.fixed_dt,
            snapshot_interval: s.snapshot_interval,
            viscosity: s.viscosity.unwrap_or(base.viscosity),
            blowup_ceiling: s.blowup_ceiling.unwrap_or(base.blowup_ceiling),
            convolution: s.convolution.unwrap_or(base.convolution),
            keep_fields: s.keep_fields.unwrap_or(base.keep_fields),
        })
    }

    pub fn clip_range(&self) -> (f64, f64) {
        (
            self.output.clip_min.unwrap_or(0.0),
            self.output.clip_max.unwrap_or(1.0),
        )
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .directory
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.output
            .formats
            .as_ref()
            .is_none_or(|f| f.contains(&format))
    }

    /// The config as text, in the same format it is read from.
    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("cannot serialize config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::from_text(text, Path::new("test.cfg"))
    }

    #[test]
    fn empty_file_is_the_homogeneous_blowup() {
        let c = load("").unwrap();
        assert_eq!(c.scenario, ScenarioKind::BlowupHomogeneous);
        let s = c.solver_config().unwrap();
        assert_eq!(s.fixed_dt, Some(1e-3));
        assert_eq!(s.t_end, 1.05);
        assert_eq!(c.grid().unwrap().boundary, Boundary::Periodic);
    }

    #[test]
    fn bad_values_name_their_key() {
        let err = load("scenario = \"laser\"\n[laser]\ntau_g = -1.0\n").unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "laser.tau_g"),
            other => panic!("unexpected {other:?}"),
        }
        let err = load("[solver]\ncfl = 1.5\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "solver.cfl"));
        let err = load("[grid]\nnx = 0\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "grid.nx"));
        let err = load("[output]\nclip_min = 2.0\nclip_max = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "output.clip_max"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load("[grid]\nnz = 3\n").unwrap_err();
        match err {
            Error::Parse { reason, .. } => assert!(reason.contains("nz"), "{reason}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load("colour = 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            load("scenario = \"laser\"\n[laser]\nwind_speed = 1.0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load("scenario = \"laser\"\n[conveyor]\n"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn effective_config_round_trips() {
        let c = load("scenario = \"laser\"\n[solver]\nt_end = 0.2\n").unwrap();
        let text = c.to_text().unwrap();
        let again = load(&text).unwrap();
        assert_eq!(c, again);
        let laser = again.laser.unwrap();
        let d = c.grid().unwrap().diameter();
        assert_eq!(laser.cutoff_inner, Some(2.0 * d));
        assert_eq!(laser.tau_g, 4.0);
    }

    #[test]
    fn shipped_configs_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "cfg") {
                ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                n += 1;
            }
        }
        assert!(n >= 5);
    }
}
