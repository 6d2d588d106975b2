use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default 2/3-rule fraction.
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Periodic square Ω = [0, L]² sampled on an N × N grid.
///
/// Spectral arrays are stored in FFT order: index `a * N + b` holds the
/// mode with lattice wavenumbers `(lattice(a), lattice(b))`, where
/// `lattice(i) = i` for `i ≤ N/2` and `i − N` otherwise. The first index
/// is the x-direction. Physical samples use the same layout with
/// `x_i = i L / N`, `y_j = j L / N`.
///
/// Cloning is cheap; the FFT plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    period: f64,
    kappa0: f64,
    dealias_fraction: f64,
    cutoff: i64,
    lattice: Vec<i64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    ksq: Vec<f64>,
    band: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n_modes", &self.inner.n)
            .field("period_L", &self.inner.period)
            .field("kappa0", &self.inner.kappa0)
            .field("dealias_fraction", &self.inner.dealias_fraction)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self.inner.period == other.inner.period
                && self.inner.dealias_fraction == other.inner.dealias_fraction)
    }
}

/// Builds a grid with the default 2/3 dealiasing fraction.
pub fn make_grid(n_modes: usize, period_l: f64) -> Result<TorusGrid> {
    TorusGrid::new(n_modes, period_l)
}

impl TorusGrid {
    pub fn new(n_modes: usize, period_l: f64) -> Result<Self> {
        Self::with_dealias(n_modes, period_l, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n_modes: usize, period_l: f64, dealias_fraction: f64) -> Result<Self> {
        if n_modes % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_modes must be even (got {n_modes})")));
        }
        if n_modes < 8 {
            return Err(Error::InvalidGrid(format!(
                "n_modes must be at least 8 (got {n_modes})"
            )));
        }
        if !(period_l > 0.0 && period_l.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "period_L must be positive and finite (got {period_l})"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction must lie in (0, 1] (got {dealias_fraction})"
            )));
        }
        let n = n_modes;
        let half = (n / 2) as i64;
        // Largest K with K < fraction * N / 2. For N = 64 this keeps |k| <= 21,
        // so quadratic products never alias back into the retained band.
        let limit = dealias_fraction * n as f64 / 2.0;
        let cutoff = ((limit - 1e-9).ceil() as i64 - 1).clamp(0, half - 1);
        let lattice: Vec<i64> = (0..n as i64)
            .map(|i| if i <= half { i } else { i - n as i64 })
            .collect();
        let kappa0 = 2.0 * PI / period_l;
        let lattice: Vec<i64> = lattice;
        let len = n * n;
        let kx: Vec<f64> = (0..len).map(|p| kappa0 * lattice[p / n] as f64).collect();
        let ky: Vec<f64> = (0..len).map(|p| kappa0 * lattice[p % n] as f64).collect();
        let ksq = kx.iter().zip(&ky).map(|(a, b)| a * a + b * b).collect();
        let band = (0..len)
            .map(|p| lattice[p / n].abs() <= cutoff && lattice[p % n].abs() <= cutoff)
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                period: period_l,
                kappa0,
                dealias_fraction,
                cutoff,
                lattice,
                kx,
                ky,
                ksq,
                band,
                fwd,
                inv,
            }),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.inner.n
    }

    pub fn period(&self) -> f64 {
        self.inner.period
    }

    pub fn kappa0(&self) -> f64 {
        self.inner.kappa0
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.inner.dealias_fraction
    }

    /// Largest retained |lattice index| per direction after dealiasing.
    pub fn dealias_cutoff(&self) -> i64 {
        self.inner.cutoff
    }

    /// |Ω| = L².
    pub fn area(&self) -> f64 {
        self.inner.period * self.inner.period
    }

    /// Number of stored coefficients (N²).
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed lattice wavenumber of array index `i`.
    #[inline]
    pub fn lattice(&self, i: usize) -> i64 {
        self.inner.lattice[i]
    }

    /// Lattice pair `(m1, m2)` of flat index `p`.
    #[inline]
    pub fn lattice_pair(&self, p: usize) -> (i64, i64) {
        let n = self.inner.n;
        (self.inner.lattice[p / n], self.inner.lattice[p % n])
    }

    /// Physical wavevector κ₀·m of flat index `p`.
    #[inline]
    pub fn wavevector(&self, p: usize) -> (f64, f64) {
        (self.inner.kx[p], self.inner.ky[p])
    }

    /// |k|² of flat index `p` in physical units.
    #[inline]
    pub fn k_squared(&self, p: usize) -> f64 {
        self.inner.ksq[p]
    }

    /// Table of |k|² over all flat indices.
    pub fn k_squared_table(&self) -> &[f64] {
        &self.inner.ksq
    }

    /// Flat index of lattice pair `(m1, m2)`, taken modulo N.
    #[inline]
    pub fn index_of(&self, m1: i64, m2: i64) -> usize {
        let n = self.inner.n as i64;
        (m1.rem_euclid(n) * n + m2.rem_euclid(n)) as usize
    }

    /// Flat index of the mode −k.
    #[inline]
    pub fn mirror(&self, p: usize) -> usize {
        let n = self.inner.n;
        let (a, b) = (p / n, p % n);
        ((n - a) % n) * n + (n - b) % n
    }

    /// True when the mode lies on a Nyquist line (index N/2 in either direction).
    #[inline]
    pub fn is_nyquist(&self, p: usize) -> bool {
        let n = self.inner.n;
        p / n == n / 2 || p % n == n / 2
    }

    /// True when the mode survives dealiasing.
    #[inline]
    pub fn in_band(&self, p: usize) -> bool {
        self.inner.band[p]
    }

    /// Physical coordinates of sample index `p`.
    pub fn point(&self, p: usize) -> (f64, f64) {
        let n = self.inner.n;
        let dx = self.inner.period / n as f64;
        ((p / n) as f64 * dx, (p % n) as f64 * dx)
    }

    /// Unnormalized forward 2D DFT in place: X(k) = Σ_x f(x) e^{−i k·x}.
    pub(crate) fn fft_forward(&self, data: &mut [Complex64]) {
        self.fft2(data, &self.inner.fwd);
    }

    /// Unnormalized inverse 2D DFT in place: f(x) = Σ_k X(k) e^{+i k·x}.
    pub(crate) fn fft_inverse(&self, data: &mut [Complex64]) {
        self.fft2(data, &self.inner.inv);
    }

    fn fft2(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grid (N={}, L={}) vs (N={}, L={})",
                self.n_modes(),
                self.period(),
                other.n_modes(),
                other.period()
            )))
        }
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
