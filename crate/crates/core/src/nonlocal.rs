//! Compactly supported radial kernels and the convolutions that couple the
//! equations.
//!
//! Two evaluation paths are provided: a direct double sum over the stencil and
//! a zero-padded FFT product. They compute the same discrete convolution and
//! are cross-checked in the test suite and by `nlcl oracle`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid2D};

/// `a * (1 - (s/r)^2)^p` on `|s| <= r`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub amplitude: f64,
    pub radius: f64,
    pub exponent: u32,
}

impl BumpProfile {
    pub fn new(amplitude: f64, radius: f64, exponent: u32) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::config(
                "radius",
                format!("must be positive, got {radius}"),
            ));
        }
        if exponent < 2 {
            return Err(Error::config(
                "exponent",
                format!("must be at least 2, got {exponent}"),
            ));
        }
        if !amplitude.is_finite() {
            return Err(Error::config("amplitude", "must be finite"));
        }
        Ok(BumpProfile {
            amplitude,
            radius,
            exponent,
        })
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let q = 1.0 - (s / self.radius).powi(2);
        if q <= 0.0 {
            0.0
        } else {
            self.amplitude * q.powi(self.exponent as i32)
        }
    }

    /// d/ds of [`eval`](Self::eval).
    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        let r2 = self.radius * self.radius;
        let q = 1.0 - s * s / r2;
        if q <= 0.0 {
            0.0
        } else {
            let p = self.exponent as i32;
            -2.0 * self.amplitude * p as f64 * q.powi(p - 1) * s / r2
        }
    }

    /// Gradient of the radial function `x -> eval(|x|)`.
    #[inline]
    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let r2 = self.radius * self.radius;
        let q = 1.0 - (x[0] * x[0] + x[1] * x[1]) / r2;
        if q <= 0.0 {
            return [0.0, 0.0];
        }
        let p = self.exponent as i32;
        let c = -2.0 * self.amplitude * p as f64 * q.powi(p - 1) / r2;
        [c * x[0], c * x[1]]
    }
}

pub fn eval_bump(profile: &BumpProfile, s: f64) -> f64 {
    profile.eval(s)
}

/// A radial kernel sampled on the offsets of a grid, scaled to unit discrete
/// mass. `grad_weights` holds the analytic gradient scaled by the same factor.
#[derive(Debug, Clone)]
pub struct KernelStencil {
    pub rx: usize,
    pub ry: usize,
    pub dx: f64,
    pub dy: f64,
    weights: Vec<f64>,
    grad_weights: Vec<[f64; 2]>,
}

impl KernelStencil {
    #[inline]
    pub fn width(&self) -> usize {
        2 * self.rx + 1
    }

    #[inline]
    pub fn height(&self) -> usize {
        2 * self.ry + 1
    }

    #[inline]
    fn offset_index(&self, di: isize, dj: isize) -> usize {
        (dj + self.ry as isize) as usize * self.width() + (di + self.rx as isize) as usize
    }

    /// Weight at offset `(di, dj)`; zero outside the stencil.
    pub fn weight(&self, di: isize, dj: isize) -> f64 {
        if di.unsigned_abs() > self.rx || dj.unsigned_abs() > self.ry {
            return 0.0;
        }
        self.weights[self.offset_index(di, dj)]
    }

    pub fn grad_weight(&self, di: isize, dj: isize) -> [f64; 2] {
        if di.unsigned_abs() > self.rx || dj.unsigned_abs() > self.ry {
            return [0.0, 0.0];
        }
        self.grad_weights[self.offset_index(di, dj)]
    }

    /// `sum weights * dx * dy`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.dx * self.dy
    }

    pub fn grad_mass(&self) -> [f64; 2] {
        let s = self
            .grad_weights
            .iter()
            .fold([0.0, 0.0], |acc, g| [acc[0] + g[0], acc[1] + g[1]]);
        [s[0] * self.dx * self.dy, s[1] * self.dx * self.dy]
    }

    fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let (rx, ry) = (self.rx as isize, self.ry as isize);
        (-ry..=ry).flat_map(move |dj| (-rx..=rx).map(move |di| (di, dj)))
    }
}

pub fn discretize_kernel(profile: &BumpProfile, dx: f64, dy: f64) -> Result<KernelStencil> {
    if !(dx > 0.0 && dy > 0.0) {
        return Err(Error::config("kernel", "grid spacings must be positive"));
    }
    if profile.radius < dx.max(dy) {
        return Err(Error::config(
            "kernel.radius",
            format!(
                "radius {} is smaller than one cell ({}); the stencil would be a delta",
                profile.radius,
                dx.max(dy)
            ),
        ));
    }
    // Tolerance keeps 2.4 / 0.1 = 23.999... from losing the outer ring.
    let rx = ((profile.radius / dx) - 1e-9).ceil().max(1.0) as usize;
    let ry = ((profile.radius / dy) - 1e-9).ceil().max(0.0) as usize;

    let mut stencil = KernelStencil {
        rx,
        ry,
        dx,
        dy,
        weights: Vec::with_capacity((2 * rx + 1) * (2 * ry + 1)),
        grad_weights: Vec::with_capacity((2 * rx + 1) * (2 * ry + 1)),
    };
    let offsets: Vec<_> = stencil.offsets().collect();
    for (di, dj) in offsets {
        let x = [di as f64 * dx, dj as f64 * dy];
        stencil.weights.push(profile.eval(x[0].hypot(x[1])));
        stencil.grad_weights.push(profile.gradient(x));
    }

    let raw_mass = stencil.mass();
    if !(raw_mass > 0.0) {
        return Err(Error::config(
            "kernel",
            "sampled kernel has no positive mass",
        ));
    }
    let scale = 1.0 / raw_mass;
    stencil.weights.iter_mut().for_each(|w| *w *= scale);
    stencil
        .grad_weights
        .iter_mut()
        .for_each(|g| *g = [g[0] * scale, g[1] * scale]);
    Ok(stencil)
}

/// Evaluation path for convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    Direct,
    Fft,
    /// FFT for stencils with more than a few dozen taps, direct otherwise.
    #[default]
    Auto,
}

const AUTO_FFT_THRESHOLD: usize = 81;

/// Smallest integer `>= n` whose only prime factors are 2, 3, 5 and 7.
fn fft_friendly_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5, 7] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

struct Fft2d {
    px: usize,
    py: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    fn new(px: usize, py: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            px,
            py,
            row_fwd: planner.plan_fft_forward(px),
            row_inv: planner.plan_fft_inverse(px),
            col_fwd: planner.plan_fft_forward(py),
            col_inv: planner.plan_fft_inverse(py),
        }
    }

    /// In-place 2D transform of a `py x px` row-major buffer.
    fn process(&self, data: &mut Vec<Complex64>, forward: bool) {
        let (rows, cols) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        data.par_chunks_mut(self.px)
            .for_each(|line| rows.process(line));
        let mut t = transpose(data, self.px, self.py);
        t.par_chunks_mut(self.py)
            .for_each(|line| cols.process(line));
        *data = transpose(&t, self.py, self.px);
    }
}

fn transpose(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for j in 0..height {
        for i in 0..width {
            out[i * height + j] = data[j * width + i];
        }
    }
    out
}

struct Spectral {
    fft: Fft2d,
    kernel: Vec<Complex64>,
    /// Spectrum of `d1 eta + i d2 eta`.
    gradient: Vec<Complex64>,
}

/// Applies one stencil on one grid, caching FFT plans and kernel spectra.
pub struct Convolver {
    grid: Grid2D,
    stencil: KernelStencil,
    spectral: Option<Spectral>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("nx", &self.grid.nx)
            .field("ny", &self.grid.ny)
            .field("rx", &self.stencil.rx)
            .field("ry", &self.stencil.ry)
            .field("fft", &self.spectral.is_some())
            .finish()
    }
}

impl Convolver {
    pub fn new(grid: &Grid2D, stencil: KernelStencil, method: ConvolutionMethod) -> Self {
        let use_fft = match method {
            ConvolutionMethod::Direct => false,
            ConvolutionMethod::Fft => true,
            ConvolutionMethod::Auto => stencil.width() * stencil.height() > AUTO_FFT_THRESHOLD,
        };
        let spectral = use_fft.then(|| Self::build_spectral(grid, &stencil));
        Convolver {
            grid: grid.clone(),
            stencil,
            spectral,
        }
    }

    fn build_spectral(grid: &Grid2D, stencil: &KernelStencil) -> Spectral {
        let (px, py) = match grid.boundary {
            Boundary::Periodic => (grid.nx, grid.ny),
            Boundary::FarField => (
                fft_friendly_size(grid.nx + stencil.rx),
                fft_friendly_size(grid.ny + stencil.ry),
            ),
        };
        let fft = Fft2d::new(px, py);
        let area = stencil.dx * stencil.dy;
        let mut kernel = vec![Complex64::new(0.0, 0.0); px * py];
        let mut gradient = vec![Complex64::new(0.0, 0.0); px * py];
        // Offsets wrap modulo the transform size; on periodic grids this also
        // folds stencils wider than the grid.
        for (di, dj) in stencil.offsets() {
            let k = dj.rem_euclid(py as isize) as usize * px + di.rem_euclid(px as isize) as usize;
            kernel[k].re += stencil.weight(di, dj) * area;
            let g = stencil.grad_weight(di, dj);
            gradient[k] += Complex64::new(g[0] * area, g[1] * area);
        }
        fft.process(&mut kernel, true);
        fft.process(&mut gradient, true);
        Spectral {
            fft,
            kernel,
            gradient,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn stencil(&self) -> &KernelStencil {
        &self.stencil
    }

    pub fn uses_fft(&self) -> bool {
        self.spectral.is_some()
    }

    /// `(eta * u)` at every cell; reads outside the grid return `far_field`.
    pub fn convolve(&self, u: &[f64], far_field: f64) -> Vec<f64> {
        match &self.spectral {
            Some(s) => {
                let out = self.spectral_apply(s, &s.kernel, u, far_field);
                let shift = far_field * self.stencil.mass();
                out.into_iter().map(|c| c.re + shift).collect()
            }
            None => convolve_direct(u, far_field, &self.grid, &self.stencil),
        }
    }

    /// `((d1 eta) * v, (d2 eta) * v)` at every cell.
    pub fn gradient(&self, v: &[f64], far_field: f64) -> Vec<[f64; 2]> {
        match &self.spectral {
            Some(s) => {
                let out = self.spectral_apply(s, &s.gradient, v, far_field);
                let gm = self.stencil.grad_mass();
                let shift = [far_field * gm[0], far_field * gm[1]];
                out.into_iter()
                    .map(|c| [c.re + shift[0], c.im + shift[1]])
                    .collect()
            }
            None => gradient_direct(v, far_field, &self.grid, &self.stencil),
        }
    }

    fn spectral_apply(
        &self,
        s: &Spectral,
        spectrum: &[Complex64],
        u: &[f64],
        far_field: f64,
    ) -> Vec<Complex64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let (px, py) = (s.fft.px, s.fft.py);
        let mut buf = vec![Complex64::new(0.0, 0.0); px * py];
        for j in 0..ny {
            for i in 0..nx {
                buf[j * px + i].re = u[j * nx + i] - far_field;
            }
        }
        s.fft.process(&mut buf, true);
        buf.par_iter_mut()
            .zip(spectrum.par_iter())
            .for_each(|(b, k)| *b *= k);
        s.fft.process(&mut buf, false);
        let norm = 1.0 / (px * py) as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            out.extend(buf[j * px..j * px + nx].iter().map(|c| c * norm));
        }
        out
    }
}

/// Copy of `u` with a margin of `(mx, my)` ghost cells on each side.
fn padded(u: &[f64], far_field: f64, grid: &Grid2D, mx: usize, my: usize) -> Vec<f64> {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let w = grid.nx + 2 * mx;
    let h = grid.ny + 2 * my;
    let mut p = vec![far_field; w * h];
    for pj in 0..h {
        let j = pj as isize - my as isize;
        for pi in 0..w {
            let i = pi as isize - mx as isize;
            let inside = (0..nx).contains(&i) && (0..ny).contains(&j);
            if inside {
                p[pj * w + pi] = u[(j * nx + i) as usize];
            } else if grid.boundary == Boundary::Periodic {
                p[pj * w + pi] = u[(j.rem_euclid(ny) * nx + i.rem_euclid(nx)) as usize];
            }
        }
    }
    p
}

fn direct_sum<T, F>(
    u: &[f64],
    far_field: f64,
    grid: &Grid2D,
    stencil: &KernelStencil,
    tap: F,
) -> Vec<T>
where
    T: Send + Copy + Default + std::ops::AddAssign,
    F: Fn(isize, isize, f64) -> T + Sync,
{
    let (rx, ry) = (stencil.rx, stencil.ry);
    let p = padded(u, far_field, grid, rx, ry);
    let w = grid.nx + 2 * rx;
    let nx = grid.nx;
    let mut out = vec![T::default(); grid.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, cell) in row.iter_mut().enumerate() {
            let mut acc = T::default();
            for dj in -(ry as isize)..=ry as isize {
                let pj = (j + ry) as isize - dj;
                let base = pj as usize * w;
                for di in -(rx as isize)..=rx as isize {
                    let pi = (i + rx) as isize - di;
                    acc += tap(di, dj, p[base + pi as usize]);
                }
            }
            *cell = acc;
        }
    });
    out
}

#[derive(Clone, Copy, Default)]
struct Vec2([f64; 2]);

impl std::ops::AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.0[0] += rhs.0[0];
        self.0[1] += rhs.0[1];
    }
}

/// Direct double sum; the reference the FFT path is checked against.
pub fn convolve_direct(
    u: &[f64],
    far_field: f64,
    grid: &Grid2D,
    stencil: &KernelStencil,
) -> Vec<f64> {
    let area = stencil.dx * stencil.dy;
    direct_sum(u, far_field, grid, stencil, |di, dj, v| {
        stencil.weight(di, dj) * v * area
    })
}

pub fn gradient_direct(
    v: &[f64],
    far_field: f64,
    grid: &Grid2D,
    stencil: &KernelStencil,
) -> Vec<[f64; 2]> {
    let area = stencil.dx * stencil.dy;
    direct_sum(v, far_field, grid, stencil, |di, dj, x| {
        let g = stencil.grad_weight(di, dj);
        Vec2([g[0] * x * area, g[1] * x * area])
    })
    .into_iter()
    .map(|g| g.0)
    .collect()
}

/// `eta * u_c` for one component of a field.
pub fn convolve(
    field: &Field,
    component: usize,
    stencil: &KernelStencil,
    grid: &Grid2D,
) -> Vec<f64> {
    Convolver::new(grid, stencil.clone(), ConvolutionMethod::Auto)
        .convolve(&field.values[component], field.far_field[component])
}

/// Weighted sum `v = sum_k c_k u_k` of the components and its far-field value.
pub fn combine_components(field: &Field, coefficients: &[f64]) -> (Vec<f64>, f64) {
    let n = field.values.first().map_or(0, |v| v.len());
    let mut v = vec![0.0; n];
    let mut ff = 0.0;
    for (c, &k) in coefficients.iter().enumerate() {
        if k == 0.0 {
            continue;
        }
        ff += k * field.far_field[c];
        for (acc, u) in v.iter_mut().zip(&field.values[c]) {
            *acc += k * u;
        }
    }
    (v, ff)
}

/// `grad(eta * sum_k c_k u_k)`, computed as `(grad eta) * v`.
pub fn convolved_gradient(
    field: &Field,
    coefficients: &[f64],
    stencil: &KernelStencil,
    grid: &Grid2D,
) -> Vec<[f64; 2]> {
    let (v, ff) = combine_components(field, coefficients);
    Convolver::new(grid, stencil.clone(), ConvolutionMethod::Auto).gradient(&v, ff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laser_kernel() -> BumpProfile {
        BumpProfile::new(1.0, 2.4, 3).unwrap()
    }

    fn random_field(grid: &Grid2D, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..grid.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn bump_values() {
        let wind = BumpProfile::new(1.0, 3.6, 4).unwrap();
        let intensity = BumpProfile::new(2.0, 1.2, 6).unwrap();
        assert_eq!(eval_bump(&wind, 0.0), 1.0);
        assert_eq!(eval_bump(&intensity, 1.2), 0.0);
        assert_eq!(eval_bump(&intensity, -5.0), 0.0);
        assert!((eval_bump(&wind, 1.8) - 0.31640625).abs() < 1e-15);
    }

    #[test]
    fn bump_rejects_bad_parameters() {
        assert!(BumpProfile::new(1.0, 0.0, 3).is_err());
        assert!(BumpProfile::new(1.0, 1.0, 1).is_err());
        assert!(BumpProfile::new(f64::NAN, 1.0, 3).is_err());
    }

    #[test]
    fn bump_smoothness_at_support_edge() {
        // Derivatives up to order p-1 vanish at s = r: one-sided finite
        // differences straddling the edge shrink with the step.
        for p in [2u32, 3, 4, 6] {
            let b = BumpProfile::new(1.0, 1.5, p).unwrap();
            let r = b.radius;
            let mut prev = f64::INFINITY;
            for h in [1e-2, 5e-3, 2.5e-3] {
                let d_in = (b.eval(r) - b.eval(r - h)) / h;
                let d_out = (b.eval(r + h) - b.eval(r)) / h;
                let jump = (d_in - d_out).abs();
                assert!(jump < prev, "p={p}");
                prev = jump;
                assert!(jump < 10.0 * h, "p={p} h={h} jump={jump}");
            }
            // analytic derivative matches central differences inside
            let s = 0.7;
            let fd = (b.eval(s + 1e-6) - b.eval(s - 1e-6)) / 2e-6;
            assert!((fd - b.derivative(s)).abs() < 1e-7);
            assert!(b.eval(0.3) >= 0.0);
        }
    }

    #[test]
    fn stencil_normalization_and_symmetry() {
        let st = discretize_kernel(&laser_kernel(), 0.1, 0.1).unwrap();
        assert_eq!((st.rx, st.ry), (24, 24));
        assert!((st.mass() - 1.0).abs() < 1e-14);
        let gm = st.grad_mass();
        assert!(gm[0].abs() < 1e-12 && gm[1].abs() < 1e-12);
        for (di, dj) in [(3, -7), (0, 5), (11, 11), (24, 0)] {
            assert_eq!(st.weight(di, dj), st.weight(-di, -dj));
            let (g, h) = (st.grad_weight(di, dj), st.grad_weight(-di, -dj));
            assert_eq!(g[0], -h[0]);
            assert_eq!(g[1], -h[1]);
        }
        assert!(discretize_kernel(&laser_kernel(), 3.0, 0.1).is_err());
    }

    #[test]
    fn convolution_reproduces_constants() {
        let g = Grid2D::new(0.0, 8.0, -2.0, 2.0, 40, 20).unwrap();
        let st = discretize_kernel(&laser_kernel(), g.dx, g.dy).unwrap();
        let u = vec![4.5; g.len()];
        for method in [ConvolutionMethod::Direct, ConvolutionMethod::Fft] {
            let out = Convolver::new(&g, st.clone(), method).convolve(&u, 4.5);
            assert!(out.iter().all(|v| (v - 4.5).abs() < 1e-12), "{method:?}");
        }
    }

    #[test]
    fn delta_returns_stencil() {
        let g = Grid2D::new(0.0, 3.0, 0.0, 3.0, 30, 30).unwrap();
        let st = discretize_kernel(&BumpProfile::new(1.0, 0.5, 3).unwrap(), g.dx, g.dy).unwrap();
        let mut u = vec![0.0; g.len()];
        let (ci, cj) = (14usize, 15usize);
        u[g.index(ci, cj)] = 1.0 / g.cell_area();
        for method in [ConvolutionMethod::Direct, ConvolutionMethod::Fft] {
            let out = Convolver::new(&g, st.clone(), method).convolve(&u, 0.0);
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let w = st.weight(i as isize - ci as isize, j as isize - cj as isize);
                    assert!((out[g.index(i, j)] - w).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fft_matches_direct_on_random_fields() {
        // the last case has a stencil wider than the periodic grid
        for (nx, ny, seed, boundary, radius) in [
            (64, 64, 1, Boundary::FarField, 0.15),
            (37, 21, 2, Boundary::FarField, 0.15),
            (64, 48, 3, Boundary::Periodic, 0.15),
            (5, 3, 4, Boundary::Periodic, 0.45),
        ] {
            let g = Grid2D::new(0.0, 1.0, 0.0, ny as f64 / nx as f64, nx, ny)
                .unwrap()
                .with_boundary(boundary);
            let st =
                discretize_kernel(&BumpProfile::new(1.0, radius, 3).unwrap(), g.dx, g.dy).unwrap();
            let u = random_field(&g, seed);
            let fast = Convolver::new(&g, st.clone(), ConvolutionMethod::Fft);
            let slow = Convolver::new(&g, st.clone(), ConvolutionMethod::Direct);
            let dev = max_abs_diff(&fast.convolve(&u, 0.3), &slow.convolve(&u, 0.3));
            assert!(dev <= 1e-10, "{nx}x{ny} {boundary:?}: {dev}");
            let gf = fast.gradient(&u, 0.3);
            let gs = slow.gradient(&u, 0.3);
            let gdev = gf.iter().zip(&gs).fold(0.0_f64, |m, (a, b)| {
                m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs())
            });
            // gradient weights are O(1/r) larger than the kernel
            assert!(gdev <= 1e-9, "{nx}x{ny} {boundary:?}: {gdev}");
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid2D::new(0.0, 10.0, -3.0, 3.0, 50, 30).unwrap();
        let st = discretize_kernel(&laser_kernel(), g.dx, g.dy).unwrap();
        let field = Field::uniform(&g, vec![0.0, 4.5]);
        let a = convolved_gradient(&field, &[1.0, 1.0], &st, &g);
        assert!(a.iter().all(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12));
    }

    #[test]
    fn gradient_of_radial_data_vanishes_at_center() {
        let g = Grid2D::new(-5.0, 5.0, -5.0, 5.0, 51, 51).unwrap();
        let st = discretize_kernel(&laser_kernel(), g.dx, g.dy).unwrap();
        let bump = BumpProfile::new(2.0, 3.0, 3).unwrap();
        let field = Field::from_fn(&g, vec![0.0], |x, _| bump.eval(x[0].hypot(x[1])));
        let a = convolved_gradient(&field, &[1.0], &st, &g);
        let c = a[g.index(25, 25)];
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12, "{c:?}");
    }

    /// Midpoint quadrature of `-int x1 d1(eta)(x) dx / int eta dx` on a very
    /// fine lattice; equals 1 by integration by parts.
    fn first_moment_quadrature(profile: &BumpProfile, h: f64) -> f64 {
        let n = (profile.radius / h).ceil() as i64;
        let (mut num, mut den) = (0.0, 0.0);
        for a in -n..n {
            for b in -n..n {
                let x = [(a as f64 + 0.5) * h, (b as f64 + 0.5) * h];
                num -= x[0] * profile.gradient(x)[0];
                den += profile.eval(x[0].hypot(x[1]));
            }
        }
        num / den
    }

    #[test]
    fn gradient_of_linear_ramp_recovers_slope() {
        let moment = first_moment_quadrature(&laser_kernel(), 2e-3);
        assert!((moment - 1.0).abs() < 1e-8, "moment identity {moment}");

        let slope = 0.8;
        let g = Grid2D::new(-3.0, 3.0, -3.0, 3.0, 240, 240).unwrap();
        let st = discretize_kernel(&laser_kernel(), g.dx, g.dy).unwrap();
        let ramp: Vec<f64> = (0..g.len()).map(|k| slope * g.x_center(k % g.nx)).collect();
        let conv = Convolver::new(&g, st, ConvolutionMethod::Fft);
        let a = conv.gradient(&ramp, 0.0);
        let c = a[g.index(120, 120)];
        assert!(((c[0] - slope) / slope).abs() < 1e-6, "{c:?}");
        assert!(c[1].abs() < 1e-10);
    }

    #[test]
    fn gradient_commutes_with_differences_at_second_order() {
        let profile = BumpProfile::new(1.0, 1.0, 3).unwrap();
        let data = |x: [f64; 2]| (0.9 * x[0]).sin() * (0.6 * x[1]).cos() + 0.2 * x[0];
        let mut errors = Vec::new();
        for n in [60usize, 120, 240] {
            let g = Grid2D::new(-3.0, 3.0, -3.0, 3.0, n, n).unwrap();
            let st = discretize_kernel(&profile, g.dx, g.dy).unwrap();
            let conv = Convolver::new(&g, st, ConvolutionMethod::Fft);
            let field = Field::from_fn(&g, vec![0.0], |x, _| data(x));
            let smooth = conv.convolve(&field.values[0], 0.0);
            let grad = conv.gradient(&field.values[0], 0.0);
            // cells near the center, far from the boundary
            let (i, j) = (n / 2, n / 2 + n / 12);
            let fd = (smooth[g.index(i + 1, j)] - smooth[g.index(i - 1, j)]) / (2.0 * g.dx);
            errors.push((grad[g.index(i, j)][0] - fd).abs());
        }
        let rate1 = (errors[0] / errors[1]).log2();
        let rate2 = (errors[1] / errors[2]).log2();
        assert!(rate1 > 1.7 && rate2 > 1.7, "{errors:?}");
    }

    #[test]
    fn fft_sizes_have_small_factors() {
        assert_eq!(fft_friendly_size(1), 1);
        assert_eq!(fft_friendly_size(11), 12);
        assert_eq!(fft_friendly_size(97), 98);
        assert_eq!(fft_friendly_size(127), 128);
    }
}
