//! The `run`, `compare` and `oracle` commands behind the CLI.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{OutputFormat, ScenarioConfig, ScenarioKind};
use crate::diagnostics::{self, HaltReason, RunRecord};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::io::{self, GridDump};
use crate::nonlocal::{discretize_kernel, BumpProfile, ConvolutionMethod, Convolver};
use crate::scenario::Scenario;
use crate::solver::{SolverConfig, State};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Format(_) => EXIT_IO,
        Error::Config { .. } | Error::Parse { .. } | Error::Mismatch(_) => EXIT_CONFIG,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    /// Overrides the snapshot interval with `t_end / k`.
    pub snapshots: Option<usize>,
}

impl RunOptions {
    fn apply(&self, config: &mut ScenarioConfig) -> Result<()> {
        if let Some(dir) = &self.output_dir {
            config.output.directory = Some(dir.clone());
        }
        if let Some(k) = self.snapshots {
            if k == 0 {
                return Err(Error::config("--snapshots", "must be at least 1"));
            }
            let t_end = config.solver_config()?.t_end;
            if t_end > 0.0 {
                config.solver.snapshot_interval = Some(t_end / k as f64);
            }
        }
        Ok(())
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub output_dir: PathBuf,
    pub report: String,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.record.halt.is_blowup() {
            EXIT_BLOWUP
        } else {
            EXIT_OK
        }
    }
}

/// Runs one scenario and writes the effective config, time series, grid
/// dumps, contour rasters and a text report into the output directory.
pub fn run_command(mut config: ScenarioConfig, options: &RunOptions) -> Result<RunOutcome> {
    options.apply(&mut config)?;
    let scenario = Scenario::new(config)?;
    let cfg = &scenario.config;
    let out = cfg.output_dir();
    let snaps = out.join("snapshots");
    create_dir(&out)?;
    write_text(&out.join("effective.cfg"), &cfg.to_text()?)?;
    let (dumps, rasters) = (cfg.wants(OutputFormat::Dump), cfg.wants(OutputFormat::Pgm));
    if dumps || rasters {
        create_dir(&snaps)?;
    }
    let names = scenario.model.component_names();
    let contour = match &cfg.output.contour_component {
        Some(name) => scenario.component_index(name)?,
        None => 0,
    };
    let clip = cfg.clip_range();

    let solver = scenario.solver()?;
    let mut index = 0usize;
    let mut observer = |grid: &Grid2D, state: &State| -> Result<()> {
        if dumps {
            let dump = GridDump {
                grid: grid.clone(),
                components: names.clone(),
                t: state.t,
                field: state.field.clone(),
            };
            io::write_dump(&snaps.join(format!("snap_{index:04}.dump")), &dump)?;
        }
        if rasters {
            let path = snaps.join(format!("snap_{index:04}_{}.pgm", names[contour]));
            io::write_pgm(&path, grid, state.field.component(contour), clip)?;
        }
        index += 1;
        Ok(())
    };
    let record = solver.run_with(solver.initial_state(), &scenario.metrics(), &mut observer)?;
    if cfg.wants(OutputFormat::Csv) {
        io::write_time_series(&out.join("timeseries.csv"), &record)?;
    }
    let report = run_report(&scenario, &record);
    write_text(&out.join("report.txt"), &report)?;
    Ok(RunOutcome {
        record,
        output_dir: out,
        report,
    })
}

fn run_report(scenario: &Scenario, record: &RunRecord) -> String {
    let g = &record.grid;
    let mut s = String::new();
    let _ = writeln!(s, "scenario   {}", scenario.config.scenario.as_str());
    let _ = writeln!(
        s,
        "grid       [{}, {}] x [{}, {}], {} x {} cells, {}",
        g.x_min,
        g.x_max,
        g.y_min,
        g.y_max,
        g.nx,
        g.ny,
        g.boundary.as_str()
    );
    match record.fixed_dt {
        Some(dt) => {
            let _ = writeln!(s, "time step  fixed {dt:e}");
        }
        None => {
            let _ = writeln!(s, "time step  cfl {}", record.cfl);
        }
    }
    if record.steps > 0 {
        let _ = writeln!(
            s,
            "steps      {} (dt in [{:e}, {:e}])",
            record.steps, record.min_dt, record.max_dt
        );
    }
    match &record.halt {
        HaltReason::Completed => {
            let t = record.last().map_or(0.0, |l| l.stats.t);
            let _ = writeln!(s, "status     completed at t = {t}");
        }
        HaltReason::BlowUp { t, reason } => {
            let _ = writeln!(
                s,
                "status     blow-up, last good state at t = {t} ({reason})"
            );
        }
    }
    if scenario.config.scenario == ScenarioKind::BlowupHomogeneous {
        if let Some(k) = record.nearest_snapshot(0.5) {
            let st = &record.snapshots[k].stats;
            let exact = 1.0 / (1.0 - st.t);
            let _ = writeln!(
                s,
                "u({})     {:.9} (exact {:.9}, relative error {:.3e})",
                st.t,
                st.linf[0],
                exact,
                (st.linf[0] - exact).abs() / exact
            );
        }
    }
    let _ = writeln!(s);
    let mut head = vec!["t".to_string()];
    head.extend(record.components.iter().map(|c| format!("max|{c}|")));
    head.extend(record.metric_names.iter().cloned());
    let _ = writeln!(s, "{}", head.join("  "));
    for snap in &record.snapshots {
        let mut row = vec![format!("{:.6}", snap.stats.t)];
        row.extend(snap.stats.linf.iter().map(|v| format!("{v:.6e}")));
        row.extend(snap.stats.metrics.iter().map(|v| format!("{v:.6e}")));
        let _ = writeln!(s, "{}", row.join("  "));
    }
    s
}

/// A perturbation of the initial datum: a bump on one component, scaled to
/// L1 size `delta`, for each listed delta.
///
/// Text form: `component=h_m;center=3,0;radius=1;delta=1e-2,1e-3,1e-4`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub component: String,
    pub center: [f64; 2],
    pub radius: f64,
    pub deltas: Vec<f64>,
}

impl FromStr for Perturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::config("perturb", reason);
        let nums = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("not a number: `{x}`")))
                })
                .collect()
        };
        let (mut component, mut center, mut radius, mut deltas) = (None, None, None, None);
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            match k.trim() {
                "component" => component = Some(v.trim().to_string()),
                "center" => match nums(v)?.as_slice() {
                    [a, b] => center = Some([*a, *b]),
                    _ => return Err(bad("center takes two coordinates".into())),
                },
                "radius" => radius = Some(nums(v)?[0]),
                "delta" => deltas = Some(nums(v)?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let p = Perturbation {
            component: component.ok_or_else(|| bad("missing `component`".into()))?,
            center: center.ok_or_else(|| bad("missing `center`".into()))?,
            radius: radius.ok_or_else(|| bad("missing `radius`".into()))?,
            deltas: deltas.ok_or_else(|| bad("missing `delta`".into()))?,
        };
        if !(p.radius > 0.0) {
            return Err(bad(format!("radius must be positive, got {}", p.radius)));
        }
        if p.deltas.is_empty() || p.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(bad(format!(
                "every delta must be positive, got {:?}",
                p.deltas
            )));
        }
        Ok(p)
    }
}

impl Perturbation {
    /// `field` plus a bump on the chosen component with discrete L1 norm `delta`.
    pub fn apply(
        &self,
        grid: &Grid2D,
        field: &Field,
        component: usize,
        delta: f64,
    ) -> Result<Field> {
        let bump = BumpProfile::new(1.0, self.radius, 4)?;
        let shape: Vec<f64> = (0..grid.len())
            .map(|k| {
                let x = grid.center((k % grid.nx) as isize, (k / grid.nx) as isize);
                bump.eval((x[0] - self.center[0]).hypot(x[1] - self.center[1]))
            })
            .collect();
        let mass: f64 = shape.iter().sum::<f64>() * grid.cell_area();
        if !(mass > 0.0) {
            return Err(Error::config(
                "perturb",
                "the perturbation bump misses every cell center; enlarge the radius",
            ));
        }
        let mut out = field.clone();
        for (u, s) in out.values[component].iter_mut().zip(&shape) {
            *u += delta * s / mass;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub times: Vec<f64>,
    pub deltas: Vec<f64>,
    /// `ratios[d][k]`: ratio for `deltas[d]` at `times[k]`.
    pub ratios: Vec<Vec<f64>>,
    pub dt: f64,
    pub halted: bool,
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for d in &self.deltas {
            let _ = write!(s, ",ratio_delta_{d:e}");
        }
        s.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let _ = write!(s, "{t:e}");
            for r in &self.ratios {
                let _ = write!(s, ",{:e}", r[k]);
            }
            s.push('\n');
        }
        s
    }

    /// Ratios at the snapshot nearest `t`, one per delta.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(k, _)| k);
        self.ratios.iter().map(|r| r[k]).collect()
    }
}

/// Paired runs from the base datum and each perturbed datum, all with the
/// same fixed step, and the table of `||u(t) - w(t)||_L1 / delta`.
pub fn compare_command(
    mut config: ScenarioConfig,
    perturbation: &Perturbation,
    options: &RunOptions,
) -> Result<CompareReport> {
    options.apply(&mut config)?;
    let scenario = Scenario::new(config)?;
    let component = scenario.component_index(&perturbation.component)?;
    let mut solver_cfg = SolverConfig {
        keep_fields: true,
        ..scenario.solver_config()
    };
    let base_field = scenario.initial_field();

    // A shared step is needed for the runs to be comparable; without a fixed
    // step, take the smallest CFL step of the base run with some headroom.
    if solver_cfg.fixed_dt.is_none() {
        let probe = SolverConfig {
            keep_fields: false,
            ..solver_cfg.clone()
        };
        let rec = scenario
            .solver_with(probe)?
            .run(State::new(base_field.clone()), &[]);
        let dt = if rec.steps > 0 {
            0.9 * rec.min_dt
        } else {
            solver_cfg.t_end.max(1e-3)
        };
        log::info!(
            "compare: shared step {dt:e} from a {}-step probe run",
            rec.steps
        );
        solver_cfg.fixed_dt = Some(dt);
    }
    let dt = solver_cfg.fixed_dt.unwrap_or_default();

    let mut data = vec![base_field.clone()];
    for &d in &perturbation.deltas {
        data.push(perturbation.apply(&scenario.grid, &base_field, component, d)?);
    }
    let solver = scenario.solver_with(solver_cfg)?;
    let records: Vec<RunRecord> = data
        .into_par_iter()
        .map(|f| solver.run(State::new(f), &[]))
        .collect();
    let base = &records[0];
    let halted = records.iter().any(|r| r.halt.is_blowup());
    let times = base.times();
    let mut ratios = Vec::new();
    for (rec, &_d) in records[1..].iter().zip(&perturbation.deltas) {
        let initial = diagnostics::l1_distance(
            &scenario.grid,
            base.snapshots[0].field.as_ref().expect("fields kept"),
            rec.snapshots[0].field.as_ref().expect("fields kept"),
        );
        let n = times.len().min(rec.snapshots.len());
        let mut row = Vec::with_capacity(times.len());
        for &t in &times[..n] {
            row.push(diagnostics::lipschitz_ratio(base, rec, initial, t)?);
        }
        row.resize(times.len(), f64::NAN);
        ratios.push(row);
    }
    let report = CompareReport {
        times,
        deltas: perturbation.deltas.clone(),
        ratios,
        dt,
        halted,
    };
    let out = scenario.config.output_dir();
    create_dir(&out)?;
    write_text(&out.join("lipschitz.csv"), &report.to_csv())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub n: usize,
    pub taps: usize,
    /// Max absolute deviation of the convolution.
    pub value_deviation: f64,
    /// Max absolute deviation of the convolved gradient.
    pub gradient_deviation: f64,
}

pub const ORACLE_TOLERANCE: f64 = 1e-10;

impl OracleRow {
    pub fn passed(&self) -> bool {
        self.value_deviation <= ORACLE_TOLERANCE && self.gradient_deviation <= ORACLE_TOLERANCE
    }
}

/// FFT against direct summation on seeded random fields over `[0, 1]^2`.
pub fn oracle_command(sizes: &[usize], seed: u64) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for (k, &n) in sizes.iter().enumerate() {
        if n == 0 {
            return Err(Error::config("--sizes", "sizes must be positive"));
        }
        let grid = Grid2D::new(0.0, 1.0, 0.0, 1.0, n, n)?;
        let radius = if n >= 8 { 0.125 } else { 1.0 };
        let stencil = discretize_kernel(&BumpProfile::new(1.0, radius, 3)?, grid.dx, grid.dy)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let u: Vec<f64> = (0..grid.len())
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let ff = 0.5;
        let fast = Convolver::new(&grid, stencil.clone(), ConvolutionMethod::Fft);
        let slow = Convolver::new(&grid, stencil.clone(), ConvolutionMethod::Direct);
        let value_deviation = fast
            .convolve(&u, ff)
            .iter()
            .zip(slow.convolve(&u, ff))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let gradient_deviation = fast
            .gradient(&u, ff)
            .iter()
            .zip(slow.gradient(&u, ff))
            .fold(0.0_f64, |m, (a, b)| {
                m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs())
            });
        rows.push(OracleRow {
            n,
            taps: stencil.width() * stencil.height(),
            value_deviation,
            gradient_deviation,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbation_specs() {
        let p: Perturbation = "component=h_m;center=3,0;radius=1;delta=1e-2,1e-3"
            .parse()
            .unwrap();
        assert_eq!(p.component, "h_m");
        assert_eq!(p.center, [3.0, 0.0]);
        assert_eq!(p.deltas, vec![1e-2, 1e-3]);
        assert!("component=h_m;center=3,0;radius=1;delta=0"
            .parse::<Perturbation>()
            .is_err());
        assert!("component=h_m;center=3;radius=1;delta=1"
            .parse::<Perturbation>()
            .is_err());
        assert!("component=h_m;radius=1;delta=1"
            .parse::<Perturbation>()
            .is_err());
        assert!("component=h_m;center=3,0;radius=1;delta=1;shape=box"
            .parse::<Perturbation>()
            .is_err());
    }

    #[test]
    fn perturbation_has_the_requested_size() {
        let g = Grid2D::new(0.0, 6.0, -2.0, 2.0, 60, 40).unwrap();
        let f = Field::uniform(&g, vec![0.0, 4.5]);
        let p: Perturbation = "component=h_s;center=3,0;radius=1;delta=1e-3"
            .parse()
            .unwrap();
        let w = p.apply(&g, &f, 1, 1e-3).unwrap();
        let d = diagnostics::l1_distance(&g, &f, &w);
        assert!((d - 1e-3).abs() < 1e-15);
        assert_eq!(w.values[0], f.values[0]);
    }

    #[test]
    fn oracle_sizes() {
        let rows = oracle_command(&[1, 5, 64], 7).unwrap();
        assert_eq!(rows[0].value_deviation, 0.0);
        assert!(rows.iter().all(OracleRow::passed), "{rows:?}");
        assert!(oracle_command(&[0], 1).is_err());
    }

    #[test]
    fn advection_is_an_l1_isometry() {
        // a linear monotone scheme with positive perturbation keeps the
        // perturbation's mass and sign, so the ratio is exactly one
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::from_text(
            &format!(
                "scenario = \"custom\"\n[grid]\nnx = 40\nny = 40\n[solver]\nt_end = 0.2\nfixed_dt = 0.005\n[output]\ndirectory = {:?}\n",
                dir.path()
            ),
            Path::new("x.cfg"),
        )
        .unwrap();
        let p: Perturbation = "component=u;center=0.3,0.6;radius=0.2;delta=1e-2,1e-4"
            .parse()
            .unwrap();
        let r = compare_command(cfg, &p, &RunOptions::default()).unwrap();
        for row in &r.ratios {
            for v in row {
                assert!((v - 1.0).abs() < 1e-9, "{v}");
            }
        }
        assert!(dir.path().join("lipschitz.csv").exists());
    }

    #[test]
    fn identical_runs_have_zero_ratio() {
        let s = Scenario::from_text(
            "scenario = \"custom\"\n[grid]\nnx = 20\nny = 20\n[solver]\nt_end = 0.1\n",
        )
        .unwrap();
        let a = s.run().unwrap();
        let b = s.run().unwrap();
        assert_eq!(
            diagnostics::lipschitz_ratio(&a, &b, 1e-3, 0.1).unwrap(),
            0.0
        );
        assert!(diagnostics::lipschitz_ratio(&a, &b, 0.0, 0.1).is_err());
        let other = Scenario::from_text(
            "scenario = \"custom\"\n[grid]\nnx = 21\nny = 20\n[solver]\nt_end = 0.1\n",
        )
        .unwrap();
        assert!(diagnostics::lipschitz_ratio(&a, &other.run().unwrap(), 1e-3, 0.1).is_err());
    }
}
