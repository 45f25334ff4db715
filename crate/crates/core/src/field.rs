//! Spectral fields on the periodic box `[0, L)³` and the exact Fourier-side
//! operators acting on them.
//!
//! Coefficients are stored on the full `n³` lattice in FFT order: array index
//! `i` along an axis is the integer mode `m = i` for `i <= n/2` and `m = i - n`
//! otherwise, with wavenumber `k = (2π/L)·m`. Odd-order derivative multipliers
//! vanish on the Nyquist planes (`m = n/2`) so that they map real fields to real
//! fields; every field produced by this crate's data generators and dealiased
//! products is band-limited well inside the Nyquist shell.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft;
use crate::sum::pairwise_sum_by;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Periodic collocation grid of `n³` points on a cube of side `length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length {length} must be positive")));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of lattice points, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn k0(&self) -> f64 {
        std::f64::consts::TAU / self.length
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    /// Quadrature weight `(L/n)³` of one collocation point.
    pub fn cell_volume(&self) -> f64 {
        (self.length / self.n as f64).powi(3)
    }

    /// Signed integer mode for FFT-ordered array index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Array index of signed mode `m`, if representable.
    pub fn index_of_mode(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m > half || m <= -half {
            return None;
        }
        Some(if m >= 0 { m as usize } else { (m + self.n as i64) as usize })
    }

    #[inline]
    pub fn flat(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    /// Radius (in integer mode units) of the spherical 2/3-rule band:
    /// modes with `|m| < n/3` are retained by dealiased products.
    pub fn dealias_radius(&self) -> f64 {
        self.n as f64 / 3.0
    }

    /// Largest physical wavenumber magnitude kept by the dealiasing rule.
    pub fn dealias_wavenumber(&self) -> f64 {
        self.dealias_radius() * self.k0()
    }

    #[inline]
    pub fn in_band(&self, m: [i64; 3]) -> bool {
        let m2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        9 * m2 < (self.n * self.n) as i64
    }

    pub(crate) fn mode_table(&self) -> ModeTable {
        let n = self.n;
        let k0 = self.k0();
        let m: Vec<i64> = (0..n).map(|i| self.mode(i)).collect();
        let k: Vec<f64> = m.iter().map(|&mi| k0 * mi as f64).collect();
        let kd: Vec<f64> = m
            .iter()
            .map(|&mi| if mi == (n / 2) as i64 { 0.0 } else { k0 * mi as f64 })
            .collect();
        ModeTable { n, m, k, kd }
    }

    /// Physical coordinate of collocation index `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        self.length * i as f64 / self.n as f64
    }
}

/// Per-axis mode numbers and wavenumbers for one grid.
pub(crate) struct ModeTable {
    pub n: usize,
    pub m: Vec<i64>,
    /// `k0·m`, used for even-order multipliers such as `|k|²`.
    pub k: Vec<f64>,
    /// `k0·m` with the Nyquist entry zeroed, used for odd-order derivatives.
    pub kd: Vec<f64>,
}

impl ModeTable {
    /// Calls `f(flat, ix, iy, iz)` for every lattice point in storage order.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, usize, usize)) {
        let n = self.n;
        let mut idx = 0;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    f(idx, ix, iy, iz);
                    idx += 1;
                }
            }
        }
    }

    #[inline]
    pub fn kvec(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [self.k[ix], self.k[iy], self.k[iz]]
    }

    #[inline]
    pub fn kdvec(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [self.kd[ix], self.kd[iy], self.kd[iz]]
    }

    #[inline]
    pub fn mvec(&self, ix: usize, iy: usize, iz: usize) -> [i64; 3] {
        [self.m[ix], self.m[iy], self.m[iz]]
    }

    #[inline]
    pub fn kmag(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        let k = self.kvec(ix, iy, iz);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Quadrature `(Σ |f(x)|^p (L/n)³)^{1/p}` of pointwise magnitudes, `max` for `p = ∞`.
fn lp_of_magnitudes(grid: &Grid, len: usize, mag: &dyn Fn(usize) -> f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok((0..len).map(mag).fold(0.0, f64::max));
    }
    let w = grid.cell_volume();
    let total = if p == 2.0 {
        pairwise_sum_by(len, &|i| mag(i).powi(2))
    } else if p == 1.0 {
        pairwise_sum_by(len, mag)
    } else {
        pairwise_sum_by(len, &|i| mag(i).powf(p))
    };
    Ok((total * w).powf(1.0 / p))
}

/// Real samples of a 3-vector field on the collocation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn new(grid: Grid, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::ShapeMismatch { expected: grid.len(), got: c.len() });
            }
        }
        Ok(Self { grid, comps })
    }

    /// Samples `f(x, y, z)` at every collocation point.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let n = grid.n();
        let mut comps = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let v = f(grid.coordinate(ix), grid.coordinate(iy), grid.coordinate(iz));
                    let idx = grid.flat(ix, iy, iz);
                    for c in 0..3 {
                        comps[c][idx] = v[c];
                    }
                }
            }
        }
        Self { grid, comps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    #[inline]
    pub fn magnitude_at(&self, idx: usize) -> f64 {
        let [a, b, c] = &self.comps;
        (a[idx] * a[idx] + b[idx] * b[idx] + c[idx] * c[idx]).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_of_magnitudes(&self.grid, self.grid.len(), &|i| self.magnitude_at(i), p)
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.magnitude_at(i)).fold(0.0, f64::max)
    }
}

/// Fourier coefficients of a real 3-vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    comps: [Vec<Complex64>; 3],
    divfree: bool,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![ZERO; grid.len()];
        Self { grid, comps: [z.clone(), z.clone(), z], divfree: true }
    }

    pub fn from_components(grid: Grid, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::ShapeMismatch { expected: grid.len(), got: c.len() });
            }
        }
        Ok(Self { grid, comps, divfree: false })
    }

    /// Forward transform of physical samples.
    pub fn from_physical(field: &PhysicalField) -> Self {
        let n = field.grid.n();
        let c = field.components();
        let mut out = fft::forward_many(&[&c[0], &c[1], &c[2]], n).into_iter();
        let comps = [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()];
        Self { grid: field.grid, comps, divfree: false }
    }

    /// Builds a field from a per-mode closure `f(m, k) -> [û_x, û_y, û_z]`.
    pub fn from_modes(grid: Grid, f: impl Fn([i64; 3], [f64; 3]) -> [Complex64; 3]) -> Self {
        let t = grid.mode_table();
        let mut out = Self::zeros(grid);
        out.divfree = false;
        t.for_each(|idx, ix, iy, iz| {
            let v = f(t.mvec(ix, iy, iz), t.kvec(ix, iy, iz));
            for c in 0..3 {
                out.comps[c][idx] = v[c];
            }
        });
        out
    }

    pub fn to_physical(&self) -> PhysicalField {
        let n = self.grid.n();
        let mut out = fft::inverse_many(&[&self.comps[0], &self.comps[1], &self.comps[2]], n).into_iter();
        PhysicalField {
            grid: self.grid,
            comps: [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        self.divfree = false;
        &mut self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.comps
    }

    /// Whether the field has been produced by an operator whose output is
    /// divergence-free by construction (curl, Leray projection, ...).
    pub fn is_divfree(&self) -> bool {
        self.divfree
    }

    pub(crate) fn with_divfree(mut self, flag: bool) -> Self {
        self.divfree = flag;
        self
    }

    /// Marks the field divergence-free after checking `|k·û| <= tol·|k||û|`
    /// mode by mode.
    pub fn assert_divfree(self, tol: f64) -> Result<Self> {
        let err = self.divergence_defect();
        if err <= tol {
            Ok(self.with_divfree(true))
        } else {
            Err(Error::InvalidParameter(format!("divergence defect {err:e} exceeds {tol:e}")))
        }
    }

    /// `max_k |k·û(k)| / (|k| max_k |û(k)|)`; zero for the zero field.
    pub fn divergence_defect(&self) -> f64 {
        let t = self.grid.mode_table();
        let mut worst: f64 = 0.0;
        let mut amp: f64 = 0.0;
        t.for_each(|idx, ix, iy, iz| {
            let k = t.kdvec(ix, iy, iz);
            let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            let v = [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]];
            amp = amp.max((v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt());
            if kn > 0.0 {
                let d = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]).norm() / kn;
                worst = worst.max(d);
            }
        });
        if amp == 0.0 {
            0.0
        } else {
            worst / amp
        }
    }

    /// Applies `f(k, kd, m, û) -> new û` at every mode.
    pub(crate) fn map_modes(
        &self,
        f: impl Fn([f64; 3], [f64; 3], [i64; 3], [Complex64; 3]) -> [Complex64; 3],
    ) -> SpectralField {
        let t = self.grid.mode_table();
        let mut out = SpectralField::zeros(self.grid);
        t.for_each(|idx, ix, iy, iz| {
            let v = [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]];
            let r = f(t.kvec(ix, iy, iz), t.kdvec(ix, iy, iz), t.mvec(ix, iy, iz), v);
            for c in 0..3 {
                out.comps[c][idx] = r[c];
            }
        });
        out.divfree = false;
        out
    }

    /// Multiplies every component by a radial weight `w(|k|)`.
    pub fn map_radial(&self, w: impl Fn(f64) -> f64) -> SpectralField {
        let t = self.grid.mode_table();
        let mut out = self.clone();
        t.for_each(|idx, ix, iy, iz| {
            let s = w(t.kmag(ix, iy, iz));
            for c in 0..3 {
                out.comps[c][idx] *= s;
            }
        });
        out
    }

    fn zip_with(&self, other: &SpectralField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<SpectralField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let comps = std::array::from_fn(|c| {
            self.comps[c].iter().zip(&other.comps[c]).map(|(&a, &b)| f(a, b)).collect()
        });
        Ok(SpectralField { grid: self.grid, comps, divfree: self.divfree && other.divfree })
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + a·other`
    pub fn add_scaled(&self, a: f64, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |x, y| x + y * a)
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        let comps = std::array::from_fn(|c| self.comps[c].iter().map(|&x| x * a).collect());
        SpectralField { grid: self.grid, comps, divfree: self.divfree }
    }

    /// In-place `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        for c in 0..3 {
            for (x, y) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *x += y * a;
            }
        }
        self.divfree = self.divfree && other.divfree;
        Ok(())
    }

    /// Zero-mode coefficients (the spatial mean).
    pub fn mean(&self) -> [Complex64; 3] {
        [self.comps[0][0], self.comps[1][0], self.comps[2][0]]
    }

    pub fn remove_mean(&mut self) {
        for c in 0..3 {
            self.comps[c][0] = ZERO;
        }
    }

    /// Zeroes every mode outside the 2/3-rule band.
    pub fn dealias(&mut self) {
        let t = self.grid.mode_table();
        let grid = self.grid;
        t.for_each(|idx, ix, iy, iz| {
            if !grid.in_band(t.mvec(ix, iy, iz)) {
                for c in 0..3 {
                    self.comps[c][idx] = ZERO;
                }
            }
        });
    }

    pub fn dealiased(&self) -> SpectralField {
        let mut out = self.clone();
        out.dealias();
        out
    }

    /// Largest `|m|` (integer mode units) carrying a nonzero coefficient.
    pub fn support_radius(&self) -> f64 {
        let t = self.grid.mode_table();
        let mut r: f64 = 0.0;
        t.for_each(|idx, ix, iy, iz| {
            if (0..3).any(|c| self.comps[c][idx] != ZERO) {
                let m = t.mvec(ix, iy, iz);
                r = r.max(((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt());
            }
        });
        r
    }

    /// Largest deviation `|û(-k) - conj(û(k))|` over all modes and components.
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.comps, self.grid.n())
    }

    /// Sum over components of `|û(k)|²` at every mode.
    pub fn mode_power(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.comps[0][i].norm_sqr() + self.comps[1][i].norm_sqr() + self.comps[2][i].norm_sqr())
            .collect()
    }

    /// `L²(box)` norm via Parseval: `‖f‖² = L³ Σ_k |f̂(k)|²`.
    pub fn l2_norm(&self) -> f64 {
        let p = self.mode_power();
        (crate::sum::pairwise_sum(&p) * self.grid.volume()).sqrt()
    }

    /// `L²(box)` inner product `∫ f·g dx` via Parseval.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let len = self.grid.len();
        let s = pairwise_sum_by(len, &|i| {
            (0..3).map(|c| (self.comps[c][i].conj() * other.comps[c][i]).re).sum::<f64>()
        });
        Ok(s * self.grid.volume())
    }

    /// Physical-space `L^p` norm of the pointwise Euclidean magnitude.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if p == 2.0 {
            return Ok(self.l2_norm());
        }
        self.to_physical().lp_norm(p)
    }

    /// Largest coefficient difference against another field.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        (0..3)
            .flat_map(|c| self.comps[c].iter().zip(&other.comps[c]).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter().map(|a| a.norm())).fold(0.0, f64::max)
    }
}

fn hermitian_defect(comps: &[Vec<Complex64>], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for c in comps {
        for (idx, v) in c.iter().enumerate() {
            worst = worst.max((c[fft::conj_index(idx, n)] - v.conj()).norm());
        }
    }
    worst
}

/// Fourier coefficients of a real scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_coefficients(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: coeffs.len() });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn from_samples(grid: Grid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: samples.len() });
        }
        Ok(Self { grid, coeffs: fft::forward_real(samples, grid.n()) })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut s = vec![0.0; grid.len()];
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    s[grid.flat(ix, iy, iz)] = f(grid.coordinate(ix), grid.coordinate(iy), grid.coordinate(iz));
                }
            }
        }
        Self { grid, coeffs: fft::forward_real(&s, n) }
    }

    pub fn from_modes(grid: Grid, f: impl Fn([i64; 3], [f64; 3]) -> Complex64) -> Self {
        let t = grid.mode_table();
        let mut coeffs = vec![ZERO; grid.len()];
        t.for_each(|idx, ix, iy, iz| coeffs[idx] = f(t.mvec(ix, iy, iz), t.kvec(ix, iy, iz)));
        Self { grid, coeffs }
    }

    pub fn to_samples(&self) -> Vec<f64> {
        fft::inverse_real(&self.coeffs, self.grid.n())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn map_radial(&self, w: impl Fn(f64) -> f64) -> ScalarField {
        let t = self.grid.mode_table();
        let mut out = self.clone();
        t.for_each(|idx, ix, iy, iz| out.coeffs[idx] *= w(t.kmag(ix, iy, iz)));
        out
    }

    pub fn dealias(&mut self) {
        let t = self.grid.mode_table();
        let grid = self.grid;
        t.for_each(|idx, ix, iy, iz| {
            if !grid.in_band(t.mvec(ix, iy, iz)) {
                self.coeffs[idx] = ZERO;
            }
        });
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(ScalarField { grid: self.grid, coeffs })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(ScalarField { grid: self.grid, coeffs })
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        ScalarField { grid: self.grid, coeffs: self.coeffs.iter().map(|&x| x * a).collect() }
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(std::slice::from_ref(&self.coeffs), self.grid.n())
    }

    pub fn mode_power(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        (crate::sum::pairwise_sum(&self.mode_power()) * self.grid.volume()).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if p == 2.0 {
            return Ok(self.l2_norm());
        }
        let s = self.to_samples();
        lp_of_magnitudes(&self.grid, s.len(), &|i| s[i].abs(), p)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

/// Operations shared by scalar and vector spectral fields, used by the
/// Littlewood–Paley machinery.
pub trait FourierField: Clone + Send + Sync {
    fn grid(&self) -> &Grid;
    /// Multiplies every coefficient by a radial weight `w(|k|)`.
    fn map_radial(&self, w: &dyn Fn(f64) -> f64) -> Self;
    /// Sum over components of `|f̂(k)|²`, per mode.
    fn mode_power(&self) -> Vec<f64>;
    fn lp_norm(&self, p: f64) -> Result<f64>;
    fn without_mean(&self) -> Self;
    fn difference(&self, other: &Self) -> Result<Self>;
    fn sum(&self, other: &Self) -> Result<Self>;
    fn l2_norm(&self) -> f64;
}

impl FourierField for SpectralField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn map_radial(&self, w: &dyn Fn(f64) -> f64) -> Self {
        SpectralField::map_radial(self, w)
    }
    fn mode_power(&self) -> Vec<f64> {
        SpectralField::mode_power(self)
    }
    fn lp_norm(&self, p: f64) -> Result<f64> {
        SpectralField::lp_norm(self, p)
    }
    fn without_mean(&self) -> Self {
        let mut out = self.clone();
        out.remove_mean();
        out
    }
    fn difference(&self, other: &Self) -> Result<Self> {
        self.sub(other)
    }
    fn sum(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }
    fn l2_norm(&self) -> f64 {
        SpectralField::l2_norm(self)
    }
}

impl FourierField for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn map_radial(&self, w: &dyn Fn(f64) -> f64) -> Self {
        ScalarField::map_radial(self, w)
    }
    fn mode_power(&self) -> Vec<f64> {
        ScalarField::mode_power(self)
    }
    fn lp_norm(&self, p: f64) -> Result<f64> {
        ScalarField::lp_norm(self, p)
    }
    fn without_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = ZERO;
        out
    }
    fn difference(&self, other: &Self) -> Result<Self> {
        self.sub(other)
    }
    fn sum(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }
    fn l2_norm(&self) -> f64 {
        ScalarField::l2_norm(self)
    }
}

/// Forward transform of vector samples (alias of [`SpectralField::from_physical`]).
pub fn transform(samples: &PhysicalField) -> SpectralField {
    SpectralField::from_physical(samples)
}

/// Inverse transform (alias of [`SpectralField::to_physical`]).
pub fn inverse_transform(field: &SpectralField) -> PhysicalField {
    field.to_physical()
}

/// `div f`, coefficient `i k·f̂(k)`.
pub fn divergence(f: &SpectralField) -> ScalarField {
    let t = f.grid.mode_table();
    let mut coeffs = vec![ZERO; f.grid.len()];
    let c = &f.comps;
    t.for_each(|idx, ix, iy, iz| {
        let k = t.kdvec(ix, iy, iz);
        coeffs[idx] = I * (c[0][idx] * k[0] + c[1][idx] * k[1] + c[2][idx] * k[2]);
    });
    ScalarField { grid: f.grid, coeffs }
}

/// `∇φ`, coefficient `i k φ̂(k)`.
pub fn gradient(phi: &ScalarField) -> SpectralField {
    let t = phi.grid.mode_table();
    let mut out = SpectralField::zeros(phi.grid);
    t.for_each(|idx, ix, iy, iz| {
        let k = t.kdvec(ix, iy, iz);
        for c in 0..3 {
            out.comps[c][idx] = I * phi.coeffs[idx] * k[c];
        }
    });
    out.divfree = false;
    out
}

#[inline]
fn cross_ik(k: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    [
        I * (v[2] * k[1] - v[1] * k[2]),
        I * (v[0] * k[2] - v[2] * k[0]),
        I * (v[1] * k[0] - v[0] * k[1]),
    ]
}

/// `∇×f`, coefficient `i k × f̂(k)`.
pub fn curl(f: &SpectralField) -> SpectralField {
    f.map_modes(|_, kd, _, v| cross_ik(kd, v)).with_divfree(true)
}

/// `curl⁻¹J`, coefficient `i k × Ĵ(k) / |k|²`; the zero mode must vanish.
pub fn curl_inv(j: &SpectralField) -> Result<SpectralField> {
    let mean = j.mean();
    let m = (mean[0].norm_sqr() + mean[1].norm_sqr() + mean[2].norm_sqr()).sqrt();
    if m > 0.0 {
        return Err(Error::ZeroModeNotInvertible { mean: m });
    }
    Ok(curl_inv_unchecked(j))
}

pub(crate) fn curl_inv_unchecked(j: &SpectralField) -> SpectralField {
    j.map_modes(|_, kd, _, v| {
        let k2 = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
        if k2 == 0.0 {
            return [ZERO; 3];
        }
        let c = cross_ik(kd, v);
        [c[0] / k2, c[1] / k2, c[2] / k2]
    })
    .with_divfree(true)
}

/// Leray projection `û − k(k·û)/|k|²`; the zero mode passes through.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    f.map_modes(|_, kd, _, v| {
        let k2 = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
        if k2 == 0.0 {
            return v;
        }
        let kv = (v[0] * kd[0] + v[1] * kd[1] + v[2] * kd[2]) / k2;
        [v[0] - kv * kd[0], v[1] - kv * kd[1], v[2] - kv * kd[2]]
    })
    .with_divfree(true)
}

/// `Δf`, coefficient `−|k|² f̂(k)`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let flag = f.divfree;
    f.map_modes(|k, _, _, v| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        [v[0] * -k2, v[1] * -k2, v[2] * -k2]
    })
    .with_divfree(flag)
}

/// `∂^α f` for a multi-index `α`.
pub fn partial(f: &SpectralField, alpha: [u32; 3]) -> SpectralField {
    let flag = f.divfree;
    f.map_modes(|k, kd, _, v| {
        let mut s = Complex64::new(1.0, 0.0);
        for a in 0..3 {
            let kk = if alpha[a] % 2 == 1 { kd[a] } else { k[a] };
            s *= (I * kk).powu(alpha[a]);
        }
        [v[0] * s, v[1] * s, v[2] * s]
    })
    .with_divfree(flag)
}

/// All multi-indices of order `m` in three dimensions.
pub fn multi_indices(m: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 0..=m {
        for b in 0..=(m - a) {
            out.push([a, b, m - a - b]);
        }
    }
    out
}

/// Exact heat flow `e^{κtΔ}`: every coefficient scaled by `exp(−κ|k|²t)`.
pub fn heat_propagate(f: &SpectralField, kappa: f64, t: f64) -> Result<SpectralField> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if kappa < 0.0 || kappa.is_nan() {
        return Err(Error::NegativeDiffusivity(kappa));
    }
    Ok(heat_factor(f, kappa * t))
}

/// Multiplies by `exp(−s|k|²)` for any real `s` (negative `s` amplifies).
pub(crate) fn heat_factor(f: &SpectralField, s: f64) -> SpectralField {
    if s == 0.0 {
        return f.clone();
    }
    let t = f.grid.mode_table();
    let mut out = f.clone();
    let ex: Vec<f64> = t.k.iter().map(|k| (-s * k * k).exp()).collect();
    t.for_each(|idx, ix, iy, iz| {
        let g = ex[ix] * ex[iy] * ex[iz];
        for c in 0..3 {
            out.comps[c][idx] *= g;
        }
    });
    out
}

/// `L^p` norm of a vector field (pointwise Euclidean magnitude).
pub fn lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

/// `λ^{amplitude_power}·f(λx)`, realised by moving the coefficient at mode
/// `m` to mode `λm`.
pub fn rescale_field(f: &SpectralField, lambda: usize, amplitude_power: i32) -> Result<SpectralField> {
    let grid = f.grid;
    let n = grid.n();
    if lambda == 0 || !n.is_multiple_of(lambda) {
        return Err(Error::InvalidDilation { lambda, n });
    }
    let amp = (lambda as f64).powi(amplitude_power);
    if lambda == 1 {
        return Ok(f.scale(amp));
    }
    let t = grid.mode_table();
    let mut out = SpectralField::zeros(grid);
    let half = (n / 2) as i64;
    let l = lambda as i64;
    let mut failure = None;
    t.for_each(|idx, ix, iy, iz| {
        let v = [f.comps[0][idx], f.comps[1][idx], f.comps[2][idx]];
        if v.iter().all(|c| *c == ZERO) {
            return;
        }
        let m = t.mvec(ix, iy, iz);
        let target = [m[0] * l, m[1] * l, m[2] * l];
        if target.iter().any(|&x| x.abs() >= half) {
            let r = ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt();
            failure = Some(Error::DilationExceedsGrid { support: r, limit: half as f64 / lambda as f64 });
            return;
        }
        let j = grid.flat(
            grid.index_of_mode(target[0]).unwrap(),
            grid.index_of_mode(target[1]).unwrap(),
            grid.index_of_mode(target[2]).unwrap(),
        );
        for c in 0..3 {
            out.comps[c][j] = v[c] * amp;
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(out.with_divfree(f.divfree))
}

/// Pointwise cross product of physical samples.
pub(crate) fn cross_physical(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    let len = a[0].len();
    let mut out = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    for i in 0..len {
        out[0][i] = a[1][i] * b[2][i] - a[2][i] * b[1][i];
        out[1][i] = a[2][i] * b[0][i] - a[0][i] * b[2][i];
        out[2][i] = a[0][i] * b[1][i] - a[1][i] * b[0][i];
    }
    out
}

/// Forward transform of three physical component arrays followed by 2/3-rule
/// truncation.
pub(crate) fn dealiased_from_samples(grid: Grid, comps: [Vec<f64>; 3]) -> SpectralField {
    let mut out = SpectralField::from_physical(&PhysicalField { grid, comps });
    out.dealias();
    out
}

/// `P_K(a × b)`: dealiased pseudo-spectral cross product.
pub fn cross(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let n = a.grid.n();
    let mut phys = fft::inverse_many(
        &[&a.comps[0], &a.comps[1], &a.comps[2], &b.comps[0], &b.comps[1], &b.comps[2]],
        n,
    )
    .into_iter();
    let pa = [phys.next().unwrap(), phys.next().unwrap(), phys.next().unwrap()];
    let pb = [phys.next().unwrap(), phys.next().unwrap(), phys.next().unwrap()];
    Ok(dealiased_from_samples(a.grid, cross_physical(&pa, &pb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, random_scalar, Spectrum};

    fn grid(n: usize) -> Grid {
        Grid::new(n, std::f64::consts::TAU).unwrap()
    }

    fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
        a.sub(b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(6, 1.0).is_err());
        assert!(Grid::new(4, 1.0).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        let g = grid(16);
        assert_eq!(g.mode(8), 8);
        assert_eq!(g.mode(9), -7);
        assert_eq!(g.index_of_mode(-7), Some(9));
        assert_eq!(g.index_of_mode(-8), None);
        assert!((g.k0() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_field_has_only_dc() {
        let g = grid(8);
        let f = SpectralField::from_physical(&PhysicalField::from_fn(g, |_, _, _| [2.5, -1.0, 0.0]));
        assert!((f.component(0)[0] - Complex64::new(2.5, 0.0)).norm() < 1e-15);
        let rest: f64 = (1..g.len()).map(|i| f.component(0)[i].norm() + f.component(1)[i].norm()).sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn cosine_mode_gives_conjugate_pair() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, |x, _, _| (3.0 * x).cos());
        let c = f.coefficients();
        let plus = g.flat(3, 0, 0);
        let minus = g.flat(13, 0, 0);
        assert!((c[plus] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((c[minus] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let others: f64 = c.iter().enumerate().filter(|(i, _)| *i != plus && *i != minus).map(|(_, v)| v.norm()).sum();
        assert!(others < 1e-12);
    }

    #[test]
    fn physical_round_trip_and_parseval() {
        let g = grid(16);
        let phys = PhysicalField::from_fn(g, |x, y, z| {
            [(x + 2.0 * y).sin() * z.cos(), (3.0 * z).cos() + 0.3, (x - y).sin().powi(3)]
        });
        let f = SpectralField::from_physical(&phys);
        let back = f.to_physical();
        for c in 0..3 {
            for (a, b) in phys.component(c).iter().zip(back.component(c)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let l2_phys = phys.lp_norm(2.0).unwrap();
        assert!((f.l2_norm() - l2_phys).abs() < 1e-12 * l2_phys);
        assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = grid(8);
        assert!(matches!(
            PhysicalField::new(g, [vec![0.0; 10], vec![0.0; 512], vec![0.0; 512]]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(ScalarField::from_samples(g, &[0.0; 3]).is_err());
    }

    #[test]
    fn div_grad_is_laplacian() {
        let g = grid(16);
        let phi = random_scalar(g, &Spectrum::band(4.0), 3);
        let d = divergence(&gradient(&phi));
        let t = g.mode_table();
        let mut worst: f64 = 0.0;
        t.for_each(|idx, ix, iy, iz| {
            let k = t.kvec(ix, iy, iz);
            let lap = -phi.coefficients()[idx] * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
            worst = worst.max((d.coefficients()[idx] - lap).norm());
        });
        assert!(worst < 1e-13);
    }

    #[test]
    fn curl_of_gradient_and_div_of_curl_vanish() {
        let g = grid(16);
        let phi = random_scalar(g, &Spectrum::band(4.0), 5);
        let gr = gradient(&phi);
        assert!(curl(&gr).max_abs_coeff() < 1e-13 * gr.max_abs_coeff());
        let f = random_field(g, &Spectrum::band(5.0), 7, false);
        let dc = divergence(&curl(&f));
        assert!(dc.max_abs_coeff() < 1e-13 * f.max_abs_coeff());
    }

    #[test]
    fn divergence_of_transverse_single_mode_is_zero() {
        let g = grid(8);
        let f = SpectralField::from_modes(g, |m, _| {
            if m == [0, 0, 2] || m == [0, 0, -2] {
                [Complex64::new(1.0, 0.0), ZERO, ZERO]
            } else {
                [ZERO; 3]
            }
        });
        assert_eq!(divergence(&f).max_abs_coeff(), 0.0);
    }

    #[test]
    fn single_mode_curl() {
        // f̂ = e₁ at k = (0,0,κ): i k × e₁ = i κ e₂
        let g = grid(16);
        let kappa = 3;
        let f = SpectralField::from_modes(g, |m, _| {
            if m == [0, 0, kappa] || m == [0, 0, -kappa] {
                [Complex64::new(1.0, 0.0), ZERO, ZERO]
            } else {
                [ZERO; 3]
            }
        });
        let c = curl(&f);
        let idx = g.flat(0, 0, kappa as usize);
        assert_eq!(c.component(1)[idx], Complex64::new(0.0, kappa as f64));
        assert_eq!(c.component(0)[idx], ZERO);
        assert_eq!(c.component(2)[idx], ZERO);
    }

    #[test]
    fn curl_curl_identity() {
        // ∇×(∇×f) + Δf = ∇ div f
        let g = grid(16);
        let f = random_field(g, &Spectrum::band(5.0), 11, false);
        let lhs = curl(&curl(&f)).add(&laplacian(&f)).unwrap();
        let rhs = gradient(&divergence(&f));
        assert!(rel(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn curl_inv_inverts_curl() {
        let g = grid(16);
        let b = random_field(g, &Spectrum::band(5.0), 13, true);
        let back = curl_inv(&curl(&b)).unwrap();
        assert!(rel(&back, &b) < 1e-12);
        let j = curl(&random_field(g, &Spectrum::band(5.0), 14, true));
        let again = curl(&curl_inv(&j).unwrap());
        assert!(rel(&again, &j) < 1e-12);
    }

    #[test]
    fn curl_inv_single_mode_hand_value() {
        // Ĵ = e₁ at k=(0,0,κ): i k × e₁ / κ² = (i/κ) e₂
        let g = grid(16);
        let kappa = 4;
        let j = SpectralField::from_modes(g, |m, _| {
            if m == [0, 0, kappa] || m == [0, 0, -kappa] {
                [Complex64::new(1.0, 0.0), ZERO, ZERO]
            } else {
                [ZERO; 3]
            }
        });
        let b = curl_inv(&j).unwrap();
        let idx = g.flat(0, 0, kappa as usize);
        assert!((b.component(1)[idx] - Complex64::new(0.0, 1.0 / kappa as f64)).norm() < 1e-16);
    }

    #[test]
    fn curl_inv_rejects_mean() {
        let g = grid(8);
        let j = SpectralField::from_physical(&PhysicalField::from_fn(g, |_, _, _| [1.0, 0.0, 0.0]));
        assert!(matches!(curl_inv(&j), Err(Error::ZeroModeNotInvertible { .. })));
    }

    #[test]
    fn leray_properties() {
        let g = grid(16);
        let f = random_field(g, &Spectrum::band(5.0), 21, false);
        let pf = leray_project(&f);
        assert!(divergence(&pf).max_abs_coeff() < 1e-13 * f.max_abs_coeff());
        assert!(rel(&leray_project(&pf), &pf) < 1e-13);
        let d = random_field(g, &Spectrum::band(5.0), 22, true);
        assert!(rel(&leray_project(&d), &d) < 1e-13);
        let gr = gradient(&random_scalar(g, &Spectrum::band(5.0), 23));
        assert!(leray_project(&gr).l2_norm() < 1e-13 * gr.l2_norm());
        // self-adjoint
        let h = random_field(g, &Spectrum::band(5.0), 24, false);
        let a = leray_project(&f).inner(&h).unwrap();
        let b = f.inner(&leray_project(&h)).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn heat_semigroup() {
        let g = grid(16);
        let f = random_field(g, &Spectrum::band(5.0), 31, true);
        assert_eq!(heat_propagate(&f, 0.7, 0.0).unwrap(), f);
        let a = heat_propagate(&heat_propagate(&f, 0.7, 0.1).unwrap(), 0.7, 0.25).unwrap();
        let b = heat_propagate(&f, 0.7, 0.35).unwrap();
        assert!(rel(&a, &b) < 1e-13);
        assert!(heat_propagate(&f, 0.7, -1.0).is_err());
        assert!(b.l2_norm() < f.l2_norm());
        // single mode |k| = 2, κt|k|² = 1
        let s = SpectralField::from_modes(g, |m, _| {
            if m == [2, 0, 0] || m == [-2, 0, 0] {
                [ZERO, Complex64::new(1.0, 0.0), ZERO]
            } else {
                [ZERO; 3]
            }
        });
        let e = heat_propagate(&s, 0.5, 1.0 / (0.5 * 4.0)).unwrap();
        assert!((e.component(1)[g.flat(2, 0, 0)].re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_cases() {
        let g = Grid::new(8, 1.0).unwrap();
        let c = SpectralField::from_physical(&PhysicalField::from_fn(g, |_, _, _| [0.0, -3.0, 4.0]));
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            assert!((c.lp_norm(p).unwrap() - 5.0).abs() < 1e-12, "p={p}");
        }
        assert!(matches!(c.lp_norm(0.5), Err(Error::InvalidExponent(_))));
        let g2 = grid(16);
        let f = random_field(g2, &Spectrum::band(4.0), 41, true);
        let phys = f.to_physical();
        let quad = phys.lp_norm(2.0).unwrap();
        assert!((quad - f.l2_norm()).abs() < 1e-12 * quad);
        let l1 = f.lp_norm(1.0).unwrap();
        let linf = f.lp_norm(f64::INFINITY).unwrap();
        assert!(l1 / g2.volume() <= linf);
    }

    #[test]
    fn rescale_cases() {
        let g = grid(16);
        let f = random_field(g, &Spectrum::band(3.0), 51, true);
        assert_eq!(rescale_field(&f, 1, 1).unwrap(), f);
        assert!(matches!(rescale_field(&f, 3, 1), Err(Error::InvalidDilation { .. })));
        let s = SpectralField::from_modes(g, |m, _| {
            if m == [1, 2, 0] {
                [ZERO, ZERO, Complex64::new(0.25, 0.5)]
            } else if m == [-1, -2, 0] {
                [ZERO, ZERO, Complex64::new(0.25, -0.5)]
            } else {
                [ZERO; 3]
            }
        });
        let r = rescale_field(&s, 2, 1).unwrap();
        assert_eq!(r.component(2)[g.flat(2, 4, 0)], Complex64::new(0.5, 1.0));
        assert_eq!(r.component(2)[g.flat(1, 2, 0)], ZERO);
        // physical meaning: λ f(λx)
        let pf = s.to_physical();
        let pr = r.to_physical();
        let n = g.n();
        for ix in 0..n {
            for iy in 0..n {
                let a = pr.component(2)[g.flat(ix, iy, 3)];
                let b = 2.0 * pf.component(2)[g.flat((2 * ix) % n, (2 * iy) % n, (2 * 3) % n)];
                assert!((a - b).abs() < 1e-13);
            }
        }
        let wide = random_field(g, &Spectrum::band(5.0), 52, true);
        assert!(matches!(rescale_field(&wide, 2, 1), Err(Error::DilationExceedsGrid { .. })));
    }
}
