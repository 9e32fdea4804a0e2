//! Periodic grids on the unit torus, vector fields sampled on them, and the
//! spectral operators (Laplacian, gradient, exact heat semigroup).
//!
//! A field `(u¹, u²)` is transformed as a single complex array `u¹ + i u²`;
//! every operator used here has a real Fourier multiplier (or `i k`, which is
//! still complex-linear), so one complex FFT handles both components.
//!
//! Spectra are kept in transposed layout `[m₁][m₂]` so each direction of the
//! 2D transform needs only one transpose.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;
pub const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Square periodic grid of `n × n` nodes on the torus of side length 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    /// `n` must be even, at least 16, and satisfy `(1/n)·n == 1` in `f64`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::Grid(format!("n = {n} is below the minimum of 16")));
        }
        if n % 2 != 0 {
            return Err(Error::Grid(format!("n = {n} is odd")));
        }
        let nf = n as f64;
        if (1.0 / nf) * nf != 1.0 {
            return Err(Error::Grid(format!(
                "n = {n}: spacing * n is not exactly 1 in f64"
            )));
        }
        Ok(Self { n })
    }

    /// Smallest admissible grid with at least `min_points` nodes per axis.
    pub fn at_least(min_points: usize) -> Result<Self> {
        let mut n = min_points.max(16);
        n += n % 2;
        for _ in 0..64 {
            if let Ok(grid) = Self::new(n) {
                return Ok(grid);
            }
            n += 2;
        }
        Err(Error::Grid(format!("no admissible grid near {min_points}")))
    }

    /// Minimum node count per axis resolving a vortex core of width `eps`.
    pub fn min_points_for(eps: f64) -> usize {
        (8.0 / eps - 1e-9).ceil() as usize
    }

    /// Coarsest admissible grid obeying `n ≥ ceil(8/ε)`.
    pub fn resolving(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Grid(format!("eps = {eps} must be positive")));
        }
        Self::at_least(Self::min_points_for(eps))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    /// Torus coordinate of node index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    /// Flat index of node `(ix, iy)`, with `x₁ = ix / n`, `x₂ = iy / n`.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Signed wavenumber of DFT slot `m`, in `{-n/2, …, n/2 - 1}`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Wavenumber used by odd-order derivatives: the Nyquist mode is dropped so
    /// real fields stay real.
    #[inline]
    fn derivative_wavenumber(&self, m: usize) -> f64 {
        if m == self.n / 2 {
            0.0
        } else {
            self.wavenumber(m) as f64
        }
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

/// `ℝ²`-valued field sampled on a [`GridSpec`]; storage is component-major,
/// then row-major (`iy` slow, `ix` fast).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; 2 * grid.node_count()],
        }
    }

    pub fn constant(grid: GridSpec, value: [f64; 2]) -> Self {
        Self::from_fn(grid, |_, _| value)
    }

    /// Samples `f(x₁, x₂)` at every node.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> [f64; 2]) -> Self {
        let nn = grid.node_count();
        let mut values = vec![0.0; 2 * nn];
        for iy in 0..grid.n() {
            let x2 = grid.coord(iy);
            for ix in 0..grid.n() {
                let [a, b] = f(grid.coord(ix), x2);
                let k = grid.index(ix, iy);
                values[k] = a;
                values[nn + k] = b;
            }
        }
        Self { grid, values }
    }

    /// Wraps raw component-major values; rejects wrong lengths and non-finite entries.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * grid.node_count() {
            return Err(Error::Invalid(format!(
                "expected {} values for n = {}, got {}",
                2 * grid.node_count(),
                grid.n(),
                values.len()
            )));
        }
        let field = Self { grid, values };
        field.check_finite("field values")?;
        Ok(field)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let nn = self.grid.node_count();
        &self.values[c * nn..(c + 1) * nn]
    }

    #[inline]
    pub fn at_index(&self, k: usize) -> [f64; 2] {
        let nn = self.grid.node_count();
        [self.values[k], self.values[nn + k]]
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> [f64; 2] {
        self.at_index(self.grid.index(ix, iy))
    }

    #[inline]
    pub fn set_index(&mut self, k: usize, v: [f64; 2]) {
        let nn = self.grid.node_count();
        self.values[k] = v[0];
        self.values[nn + k] = v[1];
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    /// Pointwise map over node values.
    pub fn map(&self, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = self.clone();
        for k in 0..self.grid.node_count() {
            out.set_index(k, f(self.at_index(k)));
        }
        out
    }

    /// Pointwise map that may fail (used for the reaction flow).
    pub fn try_map(&self, mut f: impl FnMut([f64; 2]) -> Result<[f64; 2]>) -> Result<Self> {
        let mut out = self.clone();
        for k in 0..self.grid.node_count() {
            out.set_index(k, f(self.at_index(k))?);
        }
        Ok(out)
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &VectorField, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// Sup-norm of the pointwise Euclidean distance to `other`.
    pub fn sup_distance(&self, other: &VectorField) -> Result<f64> {
        Ok(sup_norm(&self.lincomb(1.0, other, -1.0)?))
    }

    /// Mean of each component (the integral over the unit torus).
    pub fn mean(&self) -> [f64; 2] {
        let nn = self.grid.node_count() as f64;
        [
            self.component(0).iter().sum::<f64>() / nn,
            self.component(1).iter().sum::<f64>() / nn,
        ]
    }

    pub(crate) fn to_packed(&self) -> Vec<Complex64> {
        let nn = self.grid.node_count();
        (0..nn)
            .map(|k| Complex64::new(self.values[k], self.values[nn + k]))
            .collect()
    }

    pub(crate) fn from_packed(grid: GridSpec, packed: &[Complex64]) -> Self {
        let nn = grid.node_count();
        let mut values = vec![0.0; 2 * nn];
        for (k, z) in packed.iter().enumerate() {
            values[k] = z.re;
            values[nn + k] = z.im;
        }
        Self { grid, values }
    }
}

/// Real scalar field on a grid (modulus, Jacobian, residual, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Invalid(format!(
                "scalar field needs {} values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for iy in 0..grid.n() {
            for ix in 0..grid.n() {
                values.push(f(grid.coord(ix), grid.coord(iy)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid (= spectral) quadrature over the unit torus.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.node_count() as f64
    }
}

/// Spectral gradient `(∂₁u¹, ∂₂u¹, ∂₁u², ∂₂u²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    grid: GridSpec,
    pub d1u1: Vec<f64>,
    pub d2u1: Vec<f64>,
    pub d1u2: Vec<f64>,
    pub d2u2: Vec<f64>,
}

impl GradientField {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Jacobian matrix `J[c][j] = ∂_j u^c` at flat index `k`.
    #[inline]
    pub fn matrix(&self, k: usize) -> [[f64; 2]; 2] {
        [[self.d1u1[k], self.d2u1[k]], [self.d1u2[k], self.d2u2[k]]]
    }

    /// Column `∂_j u` at flat index `k`.
    #[inline]
    pub fn partial(&self, j: usize, k: usize) -> [f64; 2] {
        if j == 0 {
            [self.d1u1[k], self.d1u2[k]]
        } else {
            [self.d2u1[k], self.d2u2[k]]
        }
    }

    #[inline]
    pub fn squared_norm(&self, k: usize) -> f64 {
        self.d1u1[k].powi(2) + self.d2u1[k].powi(2) + self.d1u2[k].powi(2) + self.d2u2[k].powi(2)
    }

    #[inline]
    pub fn det(&self, k: usize) -> f64 {
        self.d1u1[k] * self.d2u2[k] - self.d2u1[k] * self.d1u2[k]
    }

    /// Max over nodes of the Frobenius norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.node_count())
            .map(|k| self.squared_norm(k))
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn squared_norm_field(&self) -> ScalarField {
        let values = (0..self.grid.node_count())
            .map(|k| self.squared_norm(k))
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn det_field(&self) -> ScalarField {
        let values = (0..self.grid.node_count()).map(|k| self.det(k)).collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

struct SpectralPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan_for(n: usize) -> Arc<SpectralPlan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SpectralPlan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(SpectralPlan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// 2D FFT engine with reusable work buffers. Plans are shared read-only
/// between threads; buffers belong to one transformer.
pub(crate) struct Transformer {
    grid: GridSpec,
    plan: Arc<SpectralPlan>,
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Transformer {
    pub(crate) fn new(grid: GridSpec) -> Self {
        let plan = plan_for(grid.n());
        let len = plan
            .forward
            .get_inplace_scratch_len()
            .max(plan.inverse.get_inplace_scratch_len());
        Self {
            grid,
            plan,
            scratch: vec![ZERO; len],
            tmp: vec![ZERO; grid.node_count()],
        }
    }

    /// Physical `[iy][ix]` → unnormalized spectrum `[m₁][m₂]`, in place.
    pub(crate) fn forward(&mut self, buf: &mut Vec<Complex64>) {
        let n = self.grid.n();
        self.plan.forward.process_with_scratch(buf, &mut self.scratch);
        transpose::transpose(buf, &mut self.tmp, n, n);
        self.plan
            .forward
            .process_with_scratch(&mut self.tmp, &mut self.scratch);
        std::mem::swap(buf, &mut self.tmp);
    }

    /// Spectrum `[m₁][m₂]` → physical `[iy][ix]`, including the `1/n²` factor.
    pub(crate) fn inverse(&mut self, buf: &mut Vec<Complex64>) {
        let n = self.grid.n();
        self.plan.inverse.process_with_scratch(buf, &mut self.scratch);
        transpose::transpose(buf, &mut self.tmp, n, n);
        self.plan
            .inverse
            .process_with_scratch(&mut self.tmp, &mut self.scratch);
        let scale = 1.0 / self.grid.node_count() as f64;
        for z in self.tmp.iter_mut() {
            *z *= scale;
        }
        std::mem::swap(buf, &mut self.tmp);
    }

    pub(crate) fn spectrum(&mut self, f: &VectorField) -> PackedSpectrum {
        let mut data = f.to_packed();
        self.forward(&mut data);
        PackedSpectrum {
            grid: self.grid,
            data,
        }
    }

    pub(crate) fn field(&mut self, s: &PackedSpectrum) -> VectorField {
        let mut data = s.data.clone();
        self.inverse(&mut data);
        VectorField::from_packed(self.grid, &data)
    }

    pub(crate) fn gradient(&mut self, s: &PackedSpectrum) -> GradientField {
        let d1 = self.field(&s.derivative(0));
        let d2 = self.field(&s.derivative(1));
        let nn = self.grid.node_count();
        GradientField {
            grid: self.grid,
            d1u1: d1.values[..nn].to_vec(),
            d1u2: d1.values[nn..].to_vec(),
            d2u1: d2.values[..nn].to_vec(),
            d2u2: d2.values[nn..].to_vec(),
        }
    }
}

/// Per-axis table of `exp(-4π² ε² τ k²)`.
pub(crate) fn heat_table(grid: GridSpec, tau: f64, eps: f64) -> Vec<f64> {
    let rate = FOUR_PI_SQ * eps * eps * tau;
    (0..grid.n())
        .map(|m| {
            let k = grid.wavenumber(m) as f64;
            (-rate * k * k).exp()
        })
        .collect()
}

/// Unnormalized DFT of the packed field `u¹ + i u²`, layout `[m₁][m₂]`.
#[derive(Clone, Debug)]
pub(crate) struct PackedSpectrum {
    grid: GridSpec,
    pub(crate) data: Vec<Complex64>,
}

impl PackedSpectrum {
    pub(crate) fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Multiplies mode `(k₁, k₂)` by `table[m₁]·table[m₂]`.
    pub(crate) fn apply_separable(&mut self, table: &[f64]) {
        apply_separable(&mut self.data, self.grid.n(), table);
    }

    pub(crate) fn heat(&self, tau: f64, eps: f64) -> Self {
        let mut out = self.clone();
        out.apply_separable(&heat_table(self.grid, tau, eps));
        out
    }

    pub(crate) fn laplacian(&self) -> Self {
        let n = self.grid.n();
        let mut out = self.clone();
        for m1 in 0..n {
            let k1 = self.grid.wavenumber(m1) as f64;
            for m2 in 0..n {
                let k2 = self.grid.wavenumber(m2) as f64;
                out.data[m1 * n + m2] *= -FOUR_PI_SQ * (k1 * k1 + k2 * k2);
            }
        }
        out
    }

    /// `∂_axis` with `axis = 0` for `x₁`.
    pub(crate) fn derivative(&self, axis: usize) -> Self {
        let n = self.grid.n();
        let mut out = self.clone();
        for m1 in 0..n {
            for m2 in 0..n {
                let k = if axis == 0 {
                    self.grid.derivative_wavenumber(m1)
                } else {
                    self.grid.derivative_wavenumber(m2)
                };
                out.data[m1 * n + m2] *= Complex64::new(0.0, TWO_PI * k);
            }
        }
        out
    }

    #[cfg(test)]
    /// `∫|∇u|²` by Parseval, consistent with the spectral gradient.
    pub(crate) fn dirichlet_integral(&self) -> f64 {
        dirichlet_from_raw(&self.data, self.grid)
    }
}

pub(crate) fn apply_separable(data: &mut [Complex64], n: usize, table: &[f64]) {
    for (m1, row) in data.chunks_exact_mut(n).enumerate() {
        let a = table[m1];
        for (z, b) in row.iter_mut().zip(table) {
            *z *= a * b;
        }
    }
}

pub(crate) fn dirichlet_from_raw(data: &[Complex64], grid: GridSpec) -> f64 {
    let n = grid.n();
    let mut sum = 0.0;
    for m1 in 0..n {
        let k1 = grid.derivative_wavenumber(m1);
        for m2 in 0..n {
            let k2 = grid.derivative_wavenumber(m2);
            sum += (k1 * k1 + k2 * k2) * data[m1 * n + m2].norm_sqr();
        }
    }
    let nn = grid.node_count() as f64;
    FOUR_PI_SQ * sum / (nn * nn)
}

/// Normalized Fourier coefficients of each component:
/// `u^c(x) = Σ_k ĉ_k e^{2πi k·x}` with `k ∈ {-n/2, …, n/2-1}²`.
#[derive(Clone, Debug)]
pub struct SpectralRep {
    grid: GridSpec,
    modes: [Vec<Complex64>; 2],
}

impl SpectralRep {
    pub fn forward(f: &VectorField) -> Result<Self> {
        f.check_finite("spectral transform input")?;
        let grid = f.grid();
        let n = grid.n();
        let packed = Transformer::new(grid).spectrum(f);
        let scale = 1.0 / grid.node_count() as f64;
        let mut modes = [vec![ZERO; n * n], vec![ZERO; n * n]];
        for m1 in 0..n {
            for m2 in 0..n {
                let c = packed.data[m1 * n + m2];
                let r = packed.data[((n - m1) % n) * n + (n - m2) % n].conj();
                modes[0][m1 * n + m2] = (c + r) * 0.5 * scale;
                modes[1][m1 * n + m2] = (c - r) * Complex64::new(0.0, -0.5) * scale;
            }
        }
        Ok(Self { grid, modes })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn slot(&self, k: i64) -> usize {
        (k.rem_euclid(self.grid.n() as i64)) as usize
    }

    /// Coefficient of component `c` at wavenumber `(k₁, k₂)` (taken mod n).
    pub fn coefficient(&self, c: usize, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n();
        self.modes[c][self.slot(k1) * n + self.slot(k2)]
    }

    pub fn inverse(&self) -> VectorField {
        let grid = self.grid;
        let nn = grid.node_count() as f64;
        let mut data: Vec<Complex64> = self.modes[0]
            .iter()
            .zip(&self.modes[1])
            .map(|(a, b)| (a + Complex64::new(0.0, 1.0) * b) * nn)
            .collect();
        Transformer::new(grid).inverse(&mut data);
        VectorField::from_packed(grid, &data)
    }
}

/// Exact heat semigroup `e^{ε² τ Δ} f`: mode `k` is scaled by `exp(-4π² ε² τ |k|²)`.
pub fn heat_semigroup(f: &VectorField, tau: f64, eps: f64) -> Result<VectorField> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Invalid(format!("heat time tau = {tau} must be >= 0")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!("eps = {eps} must be positive")));
    }
    f.check_finite("heat semigroup input")?;
    if tau == 0.0 {
        return Ok(f.clone());
    }
    let mut tr = Transformer::new(f.grid());
    let s = tr.spectrum(f).heat(tau, eps);
    Ok(tr.field(&s))
}

/// Spectral Laplacian: mode `k` is scaled by `-4π²|k|²`.
pub fn laplacian(f: &VectorField) -> Result<VectorField> {
    f.check_finite("laplacian input")?;
    let mut tr = Transformer::new(f.grid());
    let s = tr.spectrum(f).laplacian();
    Ok(tr.field(&s))
}

/// Spectral first derivatives of both components.
pub fn gradient(f: &VectorField) -> Result<GradientField> {
    f.check_finite("gradient input")?;
    let mut tr = Transformer::new(f.grid());
    let s = tr.spectrum(f);
    Ok(tr.gradient(&s))
}

/// `max_x |f(x)|` over grid nodes.
pub fn sup_norm(f: &VectorField) -> f64 {
    (0..f.grid().node_count())
        .map(|k| {
            let [a, b] = f.at_index(k);
            a * a + b * b
        })
        .fold(0.0, f64::max)
        .sqrt()
}

/// `|f|(x)` at every node.
pub fn pointwise_modulus(f: &VectorField) -> ScalarField {
    let values = (0..f.grid().node_count())
        .map(|k| {
            let [a, b] = f.at_index(k);
            a.hypot(b)
        })
        .collect();
    ScalarField {
        grid: f.grid(),
        values,
    }
}

/// Torus distance between two points of `[0,1)²`.
pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = torus_displacement(a, b);
    d[0].hypot(d[1])
}

/// Minimal-image displacement `b - a`, each coordinate in `[-1/2, 1/2]`.
pub fn torus_displacement(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let wrap = |d: f64| d - d.round();
    [wrap(b[0] - a[0]), wrap(b[1] - a[1])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn smooth_field(g: GridSpec) -> VectorField {
        VectorField::from_fn(g, |x, y| {
            [
                0.3 + (TWO_PI * x).sin() * (TWO_PI * 2.0 * y).cos() + 0.2 * (TWO_PI * 3.0 * x).cos(),
                -0.1 + 0.5 * (TWO_PI * (x + y)).sin() + 0.25 * (TWO_PI * 4.0 * y).sin(),
            ]
        })
    }

    #[test]
    fn grid_rules() {
        assert!(GridSpec::new(15).is_err());
        assert!(GridSpec::new(14).is_err());
        assert!(GridSpec::new(17).is_err());
        assert!(GridSpec::new(98).is_err(), "1/98 * 98 != 1 in f64");
        let g = grid(64);
        assert_eq!(g.spacing() * 64.0, 1.0);
        assert_eq!(g.wavenumber(0), 0);
        assert_eq!(g.wavenumber(31), 31);
        assert_eq!(g.wavenumber(32), -32);
        assert_eq!(g.wavenumber(63), -1);
        assert_eq!(GridSpec::resolving(0.05).unwrap().n(), 160);
        assert_eq!(GridSpec::resolving(0.035).unwrap().n(), 230);
        assert_eq!(GridSpec::resolving(0.025).unwrap().n(), 320);
        // 8/0.0249 -> 322 is rejected, next admissible is 324
        assert_eq!(GridSpec::resolving(0.0249).unwrap().n(), 324);
    }

    #[test]
    fn heat_constant_and_identity() {
        let g = grid(32);
        let c = VectorField::constant(g, [0.7, -1.3]);
        let h = heat_semigroup(&c, 3.0, 0.2).unwrap();
        assert!(h.sup_distance(&c).unwrap() < 1e-14);
        let f = smooth_field(g);
        assert_eq!(heat_semigroup(&f, 0.0, 0.1).unwrap(), f);
    }

    #[test]
    fn heat_single_mode_amplitude() {
        // exp(-4π² · 0.01 · 1) at k = (1, 0)
        let expected = (-FOUR_PI_SQ * 0.01_f64).exp();
        assert!((expected - 0.67372).abs() < 2e-4);
        let g = grid(32);
        let f = VectorField::from_fn(g, |x, _| [(TWO_PI * x).cos(), 0.0]);
        let h = heat_semigroup(&f, 1.0, 0.1).unwrap();
        let want = f.map(|[a, b]| [a * expected, b]);
        assert!(h.sup_distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn laplacian_eigenfunctions() {
        let g = grid(32);
        let c = VectorField::constant(g, [2.0, 5.0]);
        assert!(sup_norm(&laplacian(&c).unwrap()) < 1e-12);
        let f = VectorField::from_fn(g, |x, y| [(TWO_PI * x).cos(), (TWO_PI * y).sin()]);
        let want = f.map(|[a, b]| [-FOUR_PI_SQ * a, -FOUR_PI_SQ * b]);
        assert!(laplacian(&f).unwrap().sup_distance(&want).unwrap() < 1e-10);
    }

    #[test]
    fn gradient_of_simple_fields() {
        let g = grid(32);
        let c = VectorField::constant(g, [1.0, 1.0]);
        assert!(gradient(&c).unwrap().sup_norm() < 1e-12);

        let f = VectorField::from_fn(g, |x, _| [(TWO_PI * x).sin(), 0.0]);
        let grad = gradient(&f).unwrap();
        for iy in 0..32 {
            for ix in 0..32 {
                let k = g.index(ix, iy);
                let want = TWO_PI * (TWO_PI * g.coord(ix)).cos();
                assert!((grad.d1u1[k] - want).abs() < 1e-11);
                assert!(grad.d2u1[k].abs() < 1e-11);
            }
        }

        let w = VectorField::from_fn(g, |x, _| [(TWO_PI * x).cos(), (TWO_PI * x).sin()]);
        let grad = gradient(&w).unwrap();
        for k in 0..g.node_count() {
            assert!((grad.squared_norm(k) - FOUR_PI_SQ).abs() < 1e-10);
        }
    }

    #[test]
    fn norms() {
        let g = grid(16);
        assert_eq!(sup_norm(&VectorField::zeros(g)), 0.0);
        assert_eq!(sup_norm(&VectorField::constant(g, [3.0, 4.0])), 5.0);
        let w = VectorField::from_fn(g, |x, _| [(TWO_PI * x).cos(), (TWO_PI * x).sin()]);
        assert!((sup_norm(&w) - 1.0).abs() < 1e-15);
        let m = pointwise_modulus(&w);
        assert!((m.min() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let g = grid(16);
        let mut vals = vec![0.0; 2 * 256];
        vals[7] = f64::NAN;
        assert!(VectorField::from_values(g, vals).is_err());
        let mut f = VectorField::zeros(g);
        f.set_index(3, [f64::INFINITY, 0.0]);
        assert!(matches!(
            heat_semigroup(&f, 0.1, 0.1),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn spectral_rep_roundtrip_and_symmetry() {
        let g = grid(32);
        let f = smooth_field(g);
        let rep = SpectralRep::forward(&f).unwrap();
        let back = rep.inverse();
        assert!(back.sup_distance(&f).unwrap() <= 1e-12 * sup_norm(&f));
        for c in 0..2 {
            for k1 in -16..16 {
                for k2 in -16..16 {
                    let a = rep.coefficient(c, k1, k2);
                    let b = rep.coefficient(c, -k1, -k2).conj();
                    assert!((a - b).norm() < 1e-14);
                }
            }
        }
        // u¹ has sin(2πx)cos(4πy) -> coefficient of e^{2πi(x+2y)} is 1/(4i)
        let c = rep.coefficient(0, 1, 2);
        assert!((c - Complex64::new(0.0, -0.25)).norm() < 1e-14);
        assert!((rep.coefficient(1, 0, 0).re + 0.1).abs() < 1e-14);
    }

    #[test]
    fn parseval_dirichlet_matches_gradient() {
        let g = grid(32);
        let f = smooth_field(g);
        let mut tr = Transformer::new(g);
        let s = tr.spectrum(&f);
        let grad = tr.gradient(&s);
        let direct = grad.squared_norm_field().integral();
        assert!((s.dirichlet_integral() - direct).abs() < 1e-11 * direct);
    }

    #[test]
    fn torus_metric() {
        assert!((torus_distance([0.05, 0.5], [0.95, 0.5]) - 0.1).abs() < 1e-15);
        assert!((torus_distance([0.0, 0.0], [0.5, 0.5]) - 0.5f64.sqrt()).abs() < 1e-15);
        let d = torus_displacement([0.9, 0.1], [0.1, 0.9]);
        assert!((d[0] - 0.2).abs() < 1e-15 && (d[1] + 0.2).abs() < 1e-15);
    }
}
