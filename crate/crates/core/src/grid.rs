//! Uniform Cartesian grids and multi-component cell-average fields.
//!
//! Cells are stored row-major with the `x1` index running fastest:
//! cell `(i, j)` lives at offset `j * nx + i`. Everything outside the grid is
//! represented either by a constant far-field value per component or, for
//! verification problems, by periodic wrapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How reads outside the grid are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Constant extension by each component's far-field value.
    #[default]
    FarField,
    /// Periodic wrapping in both directions.
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::FarField => "far_field",
            Boundary::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub boundary: Boundary,
}

impl Grid2D {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("grid", "extents must be finite"));
        }
        if x_max <= x_min {
            return Err(Error::config(
                "grid.x_max",
                format!("x_max ({x_max}) must exceed x_min ({x_min})"),
            ));
        }
        if y_max <= y_min {
            return Err(Error::config(
                "grid.y_max",
                format!("y_max ({y_max}) must exceed y_min ({y_min})"),
            ));
        }
        if nx == 0 {
            return Err(Error::config("grid.nx", "cell count must be at least 1"));
        }
        if ny == 0 {
            return Err(Error::config("grid.ny", "cell count must be at least 1"));
        }
        Ok(Grid2D {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
            dx: (x_max - x_min) / nx as f64,
            dy: (y_max - y_min) / ny as f64,
            boundary: Boundary::FarField,
        })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y_center(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy
    }

    /// Cell center for possibly out-of-range (ghost) indices.
    #[inline]
    pub fn center(&self, i: isize, j: isize) -> [f64; 2] {
        [
            self.x_min + (i as f64 + 0.5) * self.dx,
            self.y_min + (j as f64 + 0.5) * self.dy,
        ]
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Length of the domain diagonal.
    pub fn diameter(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    pub fn same_layout(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.y_min == other.y_min
            && self.y_max == other.y_max
            && self.boundary == other.boundary
    }
}

/// Cell averages of an `n`-component state on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<Vec<f64>>,
    pub far_field: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid2D, far_field: Vec<f64>) -> Self {
        Field {
            values: vec![vec![0.0; grid.len()]; far_field.len()],
            far_field,
        }
    }

    /// Every component filled with its far-field value.
    pub fn uniform(grid: &Grid2D, far_field: Vec<f64>) -> Self {
        let values = far_field.iter().map(|&v| vec![v; grid.len()]).collect();
        Field { values, far_field }
    }

    /// Point-samples `f(x, component)` at the cell centers.
    pub fn from_fn(grid: &Grid2D, far_field: Vec<f64>, f: impl Fn([f64; 2], usize) -> f64) -> Self {
        let mut field = Field::zeros(grid, far_field);
        for (c, comp) in field.values.iter_mut().enumerate() {
            for j in 0..grid.ny {
                let y = grid.y_center(j);
                for i in 0..grid.nx {
                    comp[j * grid.nx + i] = f([grid.x_center(i), y], c);
                }
            }
        }
        field
    }

    #[inline]
    pub fn n_components(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    fn check_component(&self, c: usize) -> Result<()> {
        if c >= self.values.len() {
            return Err(Error::config(
                "component",
                format!(
                    "index {c} out of range for {} components",
                    self.values.len()
                ),
            ));
        }
        Ok(())
    }
}

/// Discrete integral `sum u * dx * dy` of one component.
pub fn integrate(field: &Field, component: usize, grid: &Grid2D) -> Result<f64> {
    field.check_component(component)?;
    Ok(field.values[component].iter().sum::<f64>() * grid.cell_area())
}

pub fn l1_norm(field: &Field, component: usize, grid: &Grid2D) -> Result<f64> {
    field.check_component(component)?;
    Ok(field.values[component].iter().map(|v| v.abs()).sum::<f64>() * grid.cell_area())
}

pub fn linf_norm(field: &Field, component: usize) -> Result<f64> {
    field.check_component(component)?;
    Ok(field.values[component]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Anisotropic total variation. Each boundary cell also jumps to the
/// far-field value (or wraps around on periodic grids).
pub fn total_variation(field: &Field, component: usize, grid: &Grid2D) -> Result<f64> {
    field.check_component(component)?;
    let u = &field.values[component];
    let ff = field.far_field[component];
    let (nx, ny) = (grid.nx, grid.ny);
    let periodic = grid.boundary == Boundary::Periodic;

    let mut horizontal = 0.0;
    for j in 0..ny {
        let row = &u[j * nx..(j + 1) * nx];
        for w in row.windows(2) {
            horizontal += (w[1] - w[0]).abs();
        }
        if periodic {
            horizontal += (row[0] - row[nx - 1]).abs();
        } else {
            horizontal += (row[0] - ff).abs() + (row[nx - 1] - ff).abs();
        }
    }

    let mut vertical = 0.0;
    for i in 0..nx {
        for j in 0..ny.saturating_sub(1) {
            vertical += (u[(j + 1) * nx + i] - u[j * nx + i]).abs();
        }
        if periodic {
            vertical += (u[i] - u[(ny - 1) * nx + i]).abs();
        } else {
            vertical += (u[i] - ff).abs() + (u[(ny - 1) * nx + i] - ff).abs();
        }
    }

    Ok(horizontal * grid.dy + vertical * grid.dx)
}
