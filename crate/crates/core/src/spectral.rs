//! Fourier-multiplier calculus on a uniform periodic grid.
//!
//! The real line is truncated to `[-L/2, L/2)` and sampled at `n` equally
//! spaced nodes. Every linear operator here is a diagonal multiplier in the
//! discrete Fourier basis:
//!
//! | operator       | multiplier          | Nyquist mode |
//! |----------------|---------------------|--------------|
//! | Hilbert `H`    | `-i sgn(xi)`        | zeroed       |
//! | `d/dx`         | `i xi`              | zeroed       |
//! | `D^s`          | `abs(xi)^s`         | kept         |
//!
//! The forward transform is unnormalized and the inverse carries `1/n`.
//! Integrals are rectangle-rule sums, which are spectrally accurate for
//! smooth periodic integrands.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic sampling of `[-L/2, L/2)`.
///
/// Wavenumbers are stored in FFT order: slot `j` holds mode
/// `k = j` for `j < n/2` and `k = j - n` otherwise, so the single unpaired
/// Nyquist mode `k = -n/2` sits at slot `n/2`.
pub struct Grid {
    n: usize,
    length: f64,
    spacing: f64,
    coords: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::BadPointCount(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::BadLength(length));
        }
        let spacing = length / n as f64;
        let coords = (0..n).map(|j| -0.5 * length + j as f64 * spacing).collect();
        let wavenumbers = (0..n).map(|j| 2.0 * PI * mode_of(j, n) as f64 / length).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            n,
            length,
            spacing,
            coords,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Wavenumbers `2 pi k / L` in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Integer mode number stored at FFT slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        mode_of(j, self.n)
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }

    pub fn max_wavenumber(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Whether slot `j` survives 2/3-rule truncation (`3|k| < n`).
    pub fn in_dealias_band(&self, j: usize) -> bool {
        3 * self.mode(j).unsigned_abs() < self.n as u64
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.length == other.length
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// In-place forward transform of a complex buffer.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// In-place inverse transform including the `1/n` factor.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Inverse transform of a Hermitian spectrum; the imaginary residue is
    /// discarded.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse_in_place(&mut spectrum);
        debug_assert!({
            let peak = spectrum.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
            let residue = spectrum.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
            residue <= 1e-12 * peak.max(f64::MIN_POSITIVE) || residue < 1e-300
        });
        spectrum.into_iter().map(|c| c.re).collect()
    }

    /// Zero every slot outside the 2/3 band.
    pub fn truncate(&self, spectrum: &mut [Complex64]) {
        for (j, c) in spectrum.iter_mut().enumerate() {
            if !self.in_dealias_band(j) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }
}

fn mode_of(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// A real-valued grid function.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    samples: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Arc<Grid>, samples: Vec<f64>) -> Result<Field> {
        if samples.len() != grid.n {
            return Err(Error::LengthMismatch {
                expected: grid.n,
                got: samples.len(),
            });
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample(j));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            samples,
        })
    }

    /// Samples `f(x_j)` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        let samples = grid.coords.iter().map(|&x| f(x)).collect();
        Field {
            grid: Arc::clone(grid),
            samples,
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Field {
        Field {
            grid: Arc::clone(grid),
            samples: vec![value; grid.n],
        }
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, samples: Vec<f64>) -> Field {
        debug_assert_eq!(samples.len(), grid.n);
        Field {
            grid: Arc::clone(grid),
            samples,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.samples)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination `f(x_j, self_j)`.
    pub fn map_with_coords(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        let samples = self
            .grid
            .coords
            .iter()
            .zip(&self.samples)
            .map(|(&x, &v)| f(x, v))
            .collect();
        Field::from_raw(&self.grid, samples)
    }

    pub fn scale(&self, factor: f64) -> Field {
        self.map(|v| factor * v)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Plain pointwise product at the nodes.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        check_grid(self, other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_raw(&self.grid, samples))
    }

    /// `sqrt(inner(f, f))`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing * self.samples.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Grid-reflection `x -> -x` (slot `j` to slot `(n - j) mod n`).
    pub fn reflect(&self) -> Field {
        let n = self.grid.n;
        let samples = (0..n).map(|j| self.samples[(n - j) % n]).collect();
        Field::from_raw(&self.grid, samples)
    }
}

pub(crate) fn check_grid(f: &Field, g: &Field) -> Result<()> {
    if Arc::ptr_eq(&f.grid, &g.grid) || f.grid.same_as(&g.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Multiply the spectrum of `f` by `symbol(slot, xi)` and transform back.
pub fn apply_multiplier(f: &Field, symbol: impl Fn(usize, f64) -> Complex64) -> Field {
    let grid = f.grid();
    let mut spec = f.spectrum();
    for (j, (c, &xi)) in spec.iter_mut().zip(grid.wavenumbers()).enumerate() {
        *c *= symbol(j, xi);
    }
    Field::from_raw(grid, grid.inverse_real(spec))
}

pub fn hilbert_symbol(grid: &Grid, j: usize, xi: f64) -> Complex64 {
    if j == grid.nyquist_slot() || xi == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -xi.signum())
    }
}

pub fn deriv_symbol(grid: &Grid, j: usize, xi: f64) -> Complex64 {
    if j == grid.nyquist_slot() {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, xi)
    }
}

/// `H f`, multiplier `-i sgn(xi)` with `sgn(0) = 0`.
pub fn hilbert(f: &Field) -> Field {
    let grid = Arc::clone(f.grid());
    apply_multiplier(f, |j, xi| hilbert_symbol(&grid, j, xi))
}

/// `d/dx f`, multiplier `i xi`.
pub fn deriv(f: &Field) -> Field {
    let grid = Arc::clone(f.grid());
    apply_multiplier(f, |j, xi| deriv_symbol(&grid, j, xi))
}

/// `D^s f`, multiplier `|xi|^s`, for `s` in `[0, 2]`.
pub fn frac_deriv(f: &Field, s: f64) -> Result<Field> {
    if !(0.0..=2.0).contains(&s) {
        return Err(Error::BadOrder(s));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(apply_multiplier(f, |_, xi| Complex64::new(xi.abs().powf(s), 0.0)))
}

/// `D^{1/2} f`.
pub fn half_deriv(f: &Field) -> Field {
    apply_multiplier(f, |_, xi| Complex64::new(xi.abs().sqrt(), 0.0))
}

/// `D f = H d/dx f`, multiplier `|xi|` (Nyquist zeroed like `H` and `d/dx`).
pub fn abs_deriv(f: &Field) -> Field {
    let grid = Arc::clone(f.grid());
    apply_multiplier(f, |j, xi| {
        if j == grid.nyquist_slot() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(xi.abs(), 0.0)
        }
    })
}

/// Rectangle-rule `integral f g dx`.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    check_grid(f, g)?;
    Ok(f.grid.spacing * dot(&f.samples, &g.samples))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rectangle-rule `integral f dx`.
pub fn integral(f: &Field) -> f64 {
    f.grid.spacing * f.samples.iter().sum::<f64>()
}

/// Discrete spectral energy `(dx / n) sum |f_k|^2`, equal to `inner(f, f)`
/// by Parseval.
pub fn spectral_energy(f: &Field) -> f64 {
    let grid = f.grid();
    grid.spacing / grid.n as f64 * f.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// Discrete approximation of `|| (d/dx w)^ ||_1` with the continuum
/// convention `f^(xi) = integral f e^{-i xi x} dx`: the transform is
/// approximated by `dx * FFT` and the `xi` measure by `2 pi / L`.
pub fn fourier_l1_deriv(weight: &Field) -> f64 {
    let grid = weight.grid();
    let spec = weight.spectrum();
    let sum: f64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .filter(|&(j, _)| j != grid.nyquist_slot())
        .map(|(_, (c, xi))| xi.abs() * c.norm())
        .sum();
    sum * grid.spacing * 2.0 * PI / grid.length
}

/// Product `f g` with 2/3-rule truncation of both factors and the result.
pub fn dealiased_product(f: &Field, g: &Field) -> Result<Field> {
    check_grid(f, g)?;
    let grid = f.grid();
    let mut fs = f.spectrum();
    let mut gs = g.spectrum();
    grid.truncate(&mut fs);
    grid.truncate(&mut gs);
    let fp = grid.inverse_real(fs);
    let gp = grid.inverse_real(gs);
    let prod: Vec<f64> = fp.iter().zip(&gp).map(|(a, b)| a * b).collect();
    let mut ps = grid.forward(&prod);
    grid.truncate(&mut ps);
    Ok(Field::from_raw(grid, grid.inverse_real(ps)))
}

/// Pointwise product, dealiased or not.
pub fn product(f: &Field, g: &Field, dealias: bool) -> Result<Field> {
    if dealias {
        dealiased_product(f, g)
    } else {
        f.mul(g)
    }
}
