//! Run records and the observables computed on snapshots: norms, cut-region
//! geometry and ripples, support containment, mirror symmetry and paired-run
//! Lipschitz ratios.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid2D};
use crate::solver::State;

/// Per-component integrals and norms of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStats {
    pub t: f64,
    pub step: u64,
    pub mass: Vec<f64>,
    pub l1: Vec<f64>,
    pub linf: Vec<f64>,
    pub tv: Vec<f64>,
    /// Scenario metrics, in the order of [`RunRecord::metric_names`].
    pub metrics: Vec<f64>,
}

impl SnapshotStats {
    pub fn compute(grid: &Grid2D, state: &State, metrics: Vec<f64>) -> Self {
        let n = state.field.n_components();
        let per = |f: &dyn Fn(usize) -> f64| (0..n).map(f).collect::<Vec<_>>();
        let field = &state.field;
        SnapshotStats {
            t: state.t,
            step: state.step,
            mass: per(&|c| grid::integrate(field, c, grid).unwrap_or(f64::NAN)),
            l1: per(&|c| grid::l1_norm(field, c, grid).unwrap_or(f64::NAN)),
            linf: per(&|c| grid::linf_norm(field, c).unwrap_or(f64::NAN)),
            tv: per(&|c| grid::total_variation(field, c, grid).unwrap_or(f64::NAN)),
            metrics,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub stats: SnapshotStats,
    pub field: Option<Field>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HaltReason {
    Completed,
    /// Non-finite values or values above the blow-up ceiling. `t` is the last
    /// time with a good state.
    BlowUp {
        t: f64,
        reason: String,
    },
}

impl HaltReason {
    pub fn is_blowup(&self) -> bool {
        matches!(self, HaltReason::BlowUp { .. })
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub model: String,
    pub components: Vec<String>,
    pub grid: Grid2D,
    pub cfl: f64,
    pub fixed_dt: Option<f64>,
    pub metric_names: Vec<String>,
    pub snapshots: Vec<Snapshot>,
    pub halt: HaltReason,
    pub steps: u64,
    pub min_dt: f64,
    pub max_dt: f64,
}

impl RunRecord {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.stats.t).collect()
    }

    pub fn l1_series(&self, component: usize) -> Vec<f64> {
        self.snapshots
            .iter()
            .map(|s| s.stats.l1[component])
            .collect()
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metric_names.iter().position(|n| n == name)
    }

    pub fn metric_series(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.metric_index(name)?;
        Some(self.snapshots.iter().map(|s| s.stats.metrics[k]).collect())
    }

    /// Index of the snapshot whose time is closest to `t`.
    pub fn nearest_snapshot(&self, t: f64) -> Option<usize> {
        self.snapshots
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.stats.t - t)
                    .abs()
                    .partial_cmp(&(b.1.stats.t - t).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(k, _)| k)
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// A scenario observable recorded at every snapshot.
pub trait Metric: Send + Sync {
    fn names(&self) -> Vec<String>;
    fn evaluate(&self, grid: &Grid2D, state: &State) -> Vec<f64>;
}

/// Cells where the solid height is below zero.
pub fn cut_region(h_s: &[f64]) -> Vec<bool> {
    h_s.iter().map(|&h| h < 0.0).collect()
}

/// For each column, the largest `|x2|` of a cut cell center (0 if uncut).
pub fn cut_half_width_profile(grid: &Grid2D, h_s: &[f64]) -> Vec<f64> {
    (0..grid.nx)
        .map(|i| {
            (0..grid.ny)
                .filter(|&j| h_s[grid.index(i, j)] < 0.0)
                .map(|j| grid.y_center(j).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Cut columns outside `|x1 - exclude_x1| <= exclude_radius`, in column order.
pub fn wake_profile(
    grid: &Grid2D,
    profile: &[f64],
    exclude_x1: f64,
    exclude_radius: f64,
) -> Vec<f64> {
    profile
        .iter()
        .enumerate()
        .filter(|&(i, &w)| w > 0.0 && (grid.x_center(i) - exclude_x1).abs() > exclude_radius)
        .map(|(_, &w)| w)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RippleStats {
    /// Interior local maxima after merging plateaus.
    pub count: usize,
    /// `max - min` over the wake.
    pub amplitude: f64,
}

pub const MIN_WAKE_COLUMNS: usize = 5;

/// `None` when the wake is shorter than [`MIN_WAKE_COLUMNS`].
pub fn ripple_stats(profile: &[f64]) -> Option<RippleStats> {
    if profile.len() < MIN_WAKE_COLUMNS {
        return None;
    }
    let mut runs: Vec<f64> = Vec::with_capacity(profile.len());
    for &v in profile {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    let count = runs
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2])
        .count();
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    Some(RippleStats {
        count,
        amplitude: max - min,
    })
}

/// Number of 4-connected components of a cell mask.
pub fn connected_components(grid: &Grid2D, mask: &[bool]) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % grid.nx, k / grid.nx);
            let mut visit = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < grid.nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - grid.nx);
            }
            if j + 1 < grid.ny {
                visit(k + grid.nx);
            }
        }
    }
    count
}

/// Axis-aligned region `(x1_min, x1_max, x2_min, x2_max)`.
pub type Region = (f64, f64, f64, f64);

/// Fraction of `int |rho|` carried by cells whose centers lie outside `region`.
pub fn outside_mass_fraction(grid: &Grid2D, rho: &[f64], region: Region) -> f64 {
    let (a, b, c, d) = region;
    let mut outside = 0.0;
    let mut total = 0.0;
    for j in 0..grid.ny {
        let y = grid.y_center(j);
        for i in 0..grid.nx {
            let x = grid.x_center(i);
            let v = rho[grid.index(i, j)].abs();
            total += v;
            if x < a || x > b || y < c || y > d {
                outside += v;
            }
        }
    }
    (outside * grid.cell_area()) / (total * grid.cell_area()).max(f64::MIN_POSITIVE)
}

/// `max |u(i, j) - u(i, ny - 1 - j)|` on a grid symmetric about `x2 = 0`.
pub fn symmetry_defect(grid: &Grid2D, u: &[f64]) -> Result<f64> {
    let scale = grid.y_max.abs().max(grid.y_min.abs());
    if !grid.ny.is_multiple_of(2) || (grid.y_min + grid.y_max).abs() > 1e-12 * scale {
        return Err(Error::config(
            "grid",
            format!(
                "symmetry check needs an even ny and y_min = -y_max (ny = {}, y in [{}, {}])",
                grid.ny, grid.y_min, grid.y_max
            ),
        ));
    }
    let mut defect = 0.0_f64;
    for j in 0..grid.ny / 2 {
        let m = grid.ny - 1 - j;
        for i in 0..grid.nx {
            defect = defect.max((u[grid.index(i, j)] - u[grid.index(i, m)]).abs());
        }
    }
    Ok(defect)
}

/// `sum_c ||u_c - w_c||_L1`.
pub fn l1_distance(grid: &Grid2D, u: &Field, w: &Field) -> f64 {
    u.values
        .iter()
        .zip(&w.values)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum::<f64>()
        * grid.cell_area()
}

/// `||u(t) - w(t)||_L1 / delta` at the snapshot nearest to `t`.
pub fn lipschitz_ratio(u: &RunRecord, w: &RunRecord, delta: f64, t: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::config(
            "delta",
            format!("must be positive, got {delta}"),
        ));
    }
    if !u.grid.same_layout(&w.grid) {
        return Err(Error::Mismatch("different grids".into()));
    }
    if u.model != w.model {
        return Err(Error::Mismatch(format!(
            "models {} and {}",
            u.model, w.model
        )));
    }
    if u.fixed_dt != w.fixed_dt || u.cfl != w.cfl {
        return Err(Error::Mismatch("different time stepping".into()));
    }
    let k = u
        .nearest_snapshot(t)
        .ok_or_else(|| Error::Mismatch("run has no snapshots".into()))?;
    let su = &u.snapshots[k];
    let sw = w
        .snapshots
        .get(k)
        .ok_or_else(|| Error::Mismatch("runs have different snapshot counts".into()))?;
    if (su.stats.t - sw.stats.t).abs() > 1e-9 * su.stats.t.abs().max(1.0) {
        return Err(Error::Mismatch(format!(
            "snapshot times differ: {} vs {}",
            su.stats.t, sw.stats.t
        )));
    }
    match (&su.field, &sw.field) {
        (Some(a), Some(b)) => Ok(l1_distance(&u.grid, a, b) / delta),
        _ => Err(Error::Mismatch("snapshot fields were not retained".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cut_masks() {
        assert!(cut_region(&[4.5; 6]).iter().all(|c| !c));
        assert!(cut_region(&[-0.1; 6]).iter().all(|&c| c));

        let g = Grid2D::new(-1.0, 1.0, -1.0, 1.0, 20, 20).unwrap();
        let h: Vec<f64> = (0..g.len())
            .map(|k| {
                let (x, y) = (g.x_center(k % g.nx), g.y_center(k / g.nx));
                if x.hypot(y) < 0.5 {
                    -1.0
                } else {
                    2.0
                }
            })
            .collect();
        let mask = cut_region(&h);
        for (k, &m) in mask.iter().enumerate() {
            let (x, y) = (g.x_center(k % g.nx), g.y_center(k / g.nx));
            assert_eq!(m, x.hypot(y) < 0.5);
        }
        assert_eq!(connected_components(&g, &mask), 1);
    }

    #[test]
    fn half_width_profiles() {
        let g = Grid2D::new(0.0, 4.0, -2.05, 2.05, 40, 41).unwrap();
        assert!(cut_half_width_profile(&g, &vec![1.0; g.len()])
            .iter()
            .all(|&w| w == 0.0));

        let h: Vec<f64> = (0..g.len())
            .map(|k| {
                let (i, j) = (k % g.nx, k / g.nx);
                if (10..30).contains(&i) && g.y_center(j).abs() <= 0.5 + 1e-9 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect();
        let p = cut_half_width_profile(&g, &h);
        for (i, w) in p.iter().enumerate() {
            if (10..30).contains(&i) {
                assert!((w - 0.5).abs() < 1e-12);
            } else {
                assert_eq!(*w, 0.0);
            }
        }
        let wake = wake_profile(&g, &p, 1.5, 0.5);
        let kept = (10..30)
            .filter(|&i| (g.x_center(i) - 1.5).abs() > 0.5)
            .count();
        assert_eq!(kept, 10);
        assert_eq!(wake.len(), kept);
    }

    #[test]
    fn ripple_counts() {
        assert_eq!(
            ripple_stats(&[0.3; 12]),
            Some(RippleStats {
                count: 0,
                amplitude: 0.0
            })
        );
        assert_eq!(ripple_stats(&[0.3, 0.4, 0.3]), None);

        // three full periods, brute-force extrema scan as the oracle
        let n = 120;
        let amp = 0.25;
        let sine: Vec<f64> = (0..n)
            .map(|k| 1.0 + amp * (2.0 * std::f64::consts::PI * 3.0 * k as f64 / n as f64).sin())
            .collect();
        let brute = (1..n - 1)
            .filter(|&k| sine[k] > sine[k - 1] && sine[k] > sine[k + 1])
            .count();
        let s = ripple_stats(&sine).unwrap();
        assert_eq!(s.count, brute);
        assert_eq!(s.count, 3);
        assert!((s.amplitude - 2.0 * amp).abs() < 1e-12);

        let bump = [1.0, 1.0, 1.0, 1.4, 1.4, 1.4, 1.0, 1.0];
        let s = ripple_stats(&bump).unwrap();
        assert_eq!(s.count, 1);
        assert!((s.amplitude - 0.4).abs() < 1e-12);

        // a plateau at the end is not an interior maximum
        assert_eq!(ripple_stats(&[1.0, 1.0, 2.0, 3.0, 3.0]).unwrap().count, 0);
    }

    #[test]
    fn outside_fractions() {
        let g = Grid2D::new(-1.0, 5.0, -2.0, 2.0, 60, 40).unwrap();
        let belt = (0.0, 4.0, -1.0, 1.0);
        let inside: Vec<f64> = (0..g.len())
            .map(|k| {
                let (x, y) = (g.x_center(k % g.nx), g.y_center(k / g.nx));
                if (0.5..3.5).contains(&x) && y.abs() < 0.8 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        assert_eq!(outside_mass_fraction(&g, &inside, belt), 0.0);
        assert_eq!(outside_mass_fraction(&g, &vec![0.0; g.len()], belt), 0.0);
        let outside: Vec<f64> = inside
            .iter()
            .enumerate()
            .map(|(k, _)| if g.y_center(k / g.nx) > 1.5 { 2.0 } else { 0.0 })
            .collect();
        assert!((outside_mass_fraction(&g, &outside, belt) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetry_defects() {
        let g = Grid2D::new(0.0, 1.0, -1.0, 1.0, 5, 6).unwrap();
        let mut u: Vec<f64> = (0..g.len())
            .map(|k| {
                let j = k / g.nx;
                g.x_center(k % g.nx) + j.min(g.ny - 1 - j) as f64
            })
            .collect();
        assert_eq!(symmetry_defect(&g, &u).unwrap(), 0.0);
        u[g.index(2, 1)] += 0.125;
        assert_eq!(symmetry_defect(&g, &u).unwrap(), 0.125);
        let odd = Grid2D::new(0.0, 1.0, -1.0, 1.0, 5, 5).unwrap();
        assert!(symmetry_defect(&odd, &[0.0; 25]).is_err());
        let shifted = Grid2D::new(0.0, 1.0, -1.0, 2.0, 5, 6).unwrap();
        assert!(symmetry_defect(&shifted, &vec![0.0; 30]).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ripple_bounds(profile in proptest::collection::vec(0.0..3.0f64, 5..200)) {
                let s = ripple_stats(&profile).unwrap();
                prop_assert!(s.amplitude >= 0.0);
                prop_assert!(s.count <= profile.len() / 2);
            }

            #[test]
            fn constant_profiles_have_no_ripples(v in 0.0..3.0f64, n in 5usize..100) {
                prop_assert_eq!(ripple_stats(&vec![v; n]), Some(RippleStats { count: 0, amplitude: 0.0 }));
            }
        }
    }
}
