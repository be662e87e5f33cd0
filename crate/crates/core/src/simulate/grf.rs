//! Stationary Gaussian random fields on a regular grid.
//!
//! Covariance `C(h) = variance * exp(-h / scale)` plus a nugget at h = 0.
//! Small grids (up to 64x64 cells) use a dense Cholesky factor of the exact
//! covariance; larger grids use circulant embedding with a 2-D FFT. The
//! nugget is independent cell noise and is added separately in both paths.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::covariate::{CovariateField, Raster};
use crate::error::{Error, Result};
use crate::geom::{QuadratureGrid, Region};

/// Largest cell count factored densely.
const DENSE_CELL_LIMIT: usize = 64 * 64;

/// Exponential-kernel Gaussian random field parameters on an `nx x ny` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub mean: f64,
    /// Sill `sigma^2` of the exponential kernel.
    pub variance: f64,
    /// Range `phi`; correlation at distance h is `exp(-h / phi)`.
    pub scale: f64,
    /// Nugget `tau^2`: independent extra variance at each cell.
    pub nugget: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GrfSpec {
    pub fn new(
        mean: f64,
        variance: f64,
        scale: f64,
        nugget: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if !(variance >= 0.0 && nugget >= 0.0 && scale > 0.0 && mean.is_finite()) {
            return Err(Error::Config(
                "GRF parameters must satisfy variance >= 0, nugget >= 0, scale > 0".into(),
            ));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::Config("GRF grid dimensions must be >= 1".into()));
        }
        Ok(GrfSpec {
            mean,
            variance,
            scale,
            nugget,
            nx,
            ny,
        })
    }
}

/// Draw one field at the grid cell centers; deterministic given the seed.
pub fn simulate_grf(spec: &GrfSpec, region: &Region, seed: u64) -> Result<CovariateField> {
    let grid = QuadratureGrid::new(*region, spec.nx, spec.ny)?;
    let n = grid.n_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut values = if spec.variance == 0.0 {
        vec![0.0; n]
    } else if n <= DENSE_CELL_LIMIT {
        dense_draw(spec, &grid, &mut rng)?
    } else {
        circulant_draw(spec, &grid, &mut rng)
    };

    if spec.nugget > 0.0 {
        let sd = spec.nugget.sqrt();
        for v in values.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
    }
    for v in values.iter_mut() {
        *v += spec.mean;
    }

    let raster = Raster::new(spec.nx, spec.ny, *region, values)?;
    Ok(CovariateField::raster("grf", raster))
}

fn dense_draw(spec: &GrfSpec, grid: &QuadratureGrid, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    let centers: Vec<_> = grid.centers().collect();
    let mut cov = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let h = centers[i].dist(centers[j]);
            let c = spec.variance * (-h / spec.scale).exp();
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
        cov[i * n + i] += 1e-10;
    }
    let chol = cholesky_lower(&mut cov, n).ok_or_else(|| {
        Error::Numeric(
            "covariance is not positive definite after jitter; use a grid larger than 64x64 to switch to circulant embedding".into(),
        )
    })?;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += chol[i * n + j] * z[j];
        }
        out[i] = acc;
    }
    Ok(out)
}

/// In-place lower Cholesky of a symmetric matrix; `None` on a non-positive pivot.
fn cholesky_lower(a: &mut [f64], n: usize) -> Option<&[f64]> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    Some(a)
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

fn circulant_draw(spec: &GrfSpec, grid: &QuadratureGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (nx, ny) = (spec.nx, spec.ny);
    let (dx, dy) = (grid.dx(), grid.dy());

    let mut factor = 2usize;
    loop {
        let mx = next_pow2(factor * nx);
        let my = next_pow2(factor * ny);
        let mut base = vec![Complex::new(0.0, 0.0); mx * my];
        for ky in 0..my {
            let wy = ky.min(my - ky) as f64 * dy;
            for kx in 0..mx {
                let wx = kx.min(mx - kx) as f64 * dx;
                let h = wx.hypot(wy);
                base[ky * mx + kx].re = spec.variance * (-h / spec.scale).exp();
            }
        }
        fft2_in_place(&mut base, mx, my);
        let max_eig = base.iter().map(|c| c.re).fold(f64::MIN, f64::max);
        let min_eig = base.iter().map(|c| c.re).fold(f64::MAX, f64::min);
        if min_eig < -1e-8 * max_eig && factor < 8 {
            factor *= 2;
            continue;
        }

        // Tiny negative eigenvalues from the torus wrap are clamped to zero.
        let norm = (mx * my) as f64;
        let mut buf = vec![Complex::new(0.0, 0.0); mx * my];
        for (i, c) in base.iter().enumerate() {
            let eig = c.re.max(0.0);
            let amp = (eig / norm).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            buf[i] = Complex::new(amp * re, amp * im);
        }
        fft2_in_place(&mut buf, mx, my);

        let mut out = vec![0.0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                out[iy * nx + ix] = buf[iy * mx + ix].re;
            }
        }
        return out;
    }
}

/// Unnormalized forward 2-D FFT over a row-major `my x mx` buffer.
fn fft2_in_place(data: &mut [Complex<f64>], mx: usize, my: usize) {
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(mx);
    for row in data.chunks_exact_mut(mx) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(my);
    let mut col = vec![Complex::new(0.0, 0.0); my];
    for x in 0..mx {
        for y in 0..my {
            col[y] = data[y * mx + x];
        }
        col_fft.process(&mut col);
        for y in 0..my {
            data[y * mx + x] = col[y];
        }
    }
}
