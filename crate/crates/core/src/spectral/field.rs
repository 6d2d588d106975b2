use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Default tolerance for the divergence-free check |k·û(k)| ≤ tol·|û(k)|.
pub const DIV_FREE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldFlags {
    pub mean_zero: bool,
    pub div_free: bool,
}

/// The three norms used throughout: ‖u‖, ‖∇u‖ and ‖Au‖ = ‖−Δu‖.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Real, mean-zero vector field given by Fourier coefficients.
///
/// Normalization: û(k) = (1/N²) Σ_x u(x) e^{−ik·x}, so that
/// u(x) = Σ_k û(k) e^{ik·x} and ‖u‖² = |Ω| Σ_k |û(k)|².
/// The k = 0 coefficient and the Nyquist lines are held at zero, and
/// û(−k) = conj(û(k)) holds exactly. Equality is bitwise on coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField {
    grid: TorusGrid,
    c: [Vec<Complex64>; 2],
    flags: FieldFlags,
}

/// Point samples of a real vector field on the grid.
#[derive(Clone, Debug)]
pub struct PhysicalVectorField {
    grid: TorusGrid,
    u: [Vec<f64>; 2],
}

impl SpectralVectorField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        let len = grid.len();
        Self {
            grid: grid.clone(),
            c: [vec![Complex64::default(); len], vec![Complex64::default(); len]],
            flags: FieldFlags {
                mean_zero: true,
                div_free: true,
            },
        }
    }

    /// Builds a field from full-lattice coefficient arrays in FFT order.
    ///
    /// Conjugate symmetry is enforced by averaging each mode with its
    /// mirror; the mean and Nyquist modes are dropped. The div-free flag is
    /// set from the coefficientwise check.
    pub fn from_coeffs(grid: &TorusGrid, c1: Vec<Complex64>, c2: Vec<Complex64>) -> Result<Self> {
        if c1.len() != grid.len() || c2.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients per component, got {} and {}",
                grid.len(),
                c1.len(),
                c2.len()
            )));
        }
        if c1
            .iter()
            .chain(c2.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let mut f = Self {
            grid: grid.clone(),
            c: [c1, c2],
            flags: FieldFlags::default(),
        };
        f.enforce_symmetry();
        f.flags = FieldFlags {
            mean_zero: true,
            div_free: f.check_div_free(DIV_FREE_TOL),
        };
        Ok(f)
    }

    /// Single Fourier mode `amp · e^{ik·x}` plus its conjugate.
    pub fn single_mode(grid: &TorusGrid, m1: i64, m2: i64, amp: [Complex64; 2]) -> Result<Self> {
        let mut c1 = vec![Complex64::default(); grid.len()];
        let mut c2 = c1.clone();
        let p = grid.index_of(m1, m2);
        let q = grid.mirror(p);
        c1[p] = amp[0];
        c2[p] = amp[1];
        c1[q] += amp[0].conj();
        c2[q] += amp[1].conj();
        // from_coeffs averages with the mirror, so feed both halves in full.
        if p == q {
            c1[p] = Complex64::new(amp[0].re, 0.0);
            c2[p] = Complex64::new(amp[1].re, 0.0);
        }
        Self::from_coeffs(grid, c1, c2)
    }

    /// Taylor–Green vortex A(sin κ₀x cos κ₀y, −cos κ₀x sin κ₀y): an exact
    /// unforced solution decaying as e^{−2νκ₀²t}.
    pub fn taylor_green(grid: &TorusGrid, amplitude: f64) -> Self {
        let k = grid.kappa0();
        PhysicalVectorField::from_fn(grid, |x, y| {
            (
                amplitude * (k * x).sin() * (k * y).cos(),
                -amplitude * (k * x).cos() * (k * y).sin(),
            )
        })
        .to_spectral()
    }

    pub(crate) fn from_raw(grid: &TorusGrid, c: [Vec<Complex64>; 2], flags: FieldFlags) -> Self {
        debug_assert_eq!(c[0].len(), grid.len());
        Self {
            grid: grid.clone(),
            c,
            flags,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn flags(&self) -> FieldFlags {
        self.flags
    }

    /// Coefficients of component `i` (0 = x, 1 = y) in FFT order.
    pub fn coeffs(&self, i: usize) -> &[Complex64] {
        &self.c[i]
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Vec<Complex64>; 2] {
        &mut self.c
    }

    pub(crate) fn set_flags(&mut self, flags: FieldFlags) {
        self.flags = flags;
    }

    /// Value of the coefficient pair at lattice wavenumber (m1, m2).
    pub fn mode(&self, m1: i64, m2: i64) -> [Complex64; 2] {
        let p = self.grid.index_of(m1, m2);
        [self.c[0][p], self.c[1][p]]
    }

    fn enforce_symmetry(&mut self) {
        let g = &self.grid;
        for comp in self.c.iter_mut() {
            for p in 0..g.len() {
                let q = g.mirror(p);
                if q < p {
                    continue;
                }
                if p == q || g.is_nyquist(p) {
                    comp[p] = Complex64::default();
                    comp[q] = Complex64::default();
                } else {
                    let z = 0.5 * (comp[p] + comp[q].conj());
                    comp[p] = z;
                    comp[q] = z.conj();
                }
            }
        }
    }

    /// Coefficientwise divergence check.
    pub fn check_div_free(&self, tol: f64) -> bool {
        (0..self.grid.len()).all(|p| {
            let (k1, k2) = self.grid.wavevector(p);
            let a = self.c[0][p];
            let b = self.c[1][p];
            let div = a * k1 + b * k2;
            let kn = (k1 * k1 + k2 * k2).sqrt();
            div.norm() <= tol * kn * (a.norm_sqr() + b.norm_sqr()).sqrt() + f64::MIN_POSITIVE
        })
    }

    /// Largest relative divergence max_k |k·û|/(|k| |û|).
    pub fn max_relative_divergence(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..self.grid.len() {
            let (k1, k2) = self.grid.wavevector(p);
            let a = self.c[0][p];
            let b = self.c[1][p];
            let mag = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if mag == 0.0 {
                continue;
            }
            let kn = (k1 * k1 + k2 * k2).sqrt();
            worst = worst.max((a * k1 + b * k2).norm() / (kn * mag));
        }
        worst
    }

    /// True when the k = 0 coefficient is zero and û(−k) = conj(û(k)) bitwise.
    pub fn satisfies_invariants(&self) -> bool {
        let g = &self.grid;
        self.c
            .iter()
            .all(|comp| comp[0] == Complex64::default() && (0..g.len()).all(|p| comp[g.mirror(p)] == comp[p].conj()))
    }

    pub fn is_finite(&self) -> bool {
        self.c
            .iter()
            .all(|comp| comp.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    fn combine(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let c = [0, 1].map(|i| {
            self.c[i]
                .iter()
                .zip(&other.c[i])
                .map(|(&a, &b)| f(a, b))
                .collect::<Vec<_>>()
        });
        Ok(Self::from_raw(
            &self.grid,
            c,
            FieldFlags {
                mean_zero: true,
                div_free: self.flags.div_free && other.flags.div_free,
            },
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    /// a·self + b·other.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.combine(other, |x, y| x * a + y * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        let c = [0, 1].map(|i| self.c[i].iter().map(|&z| z * s).collect::<Vec<_>>());
        Self::from_raw(&self.grid, c, self.flags)
    }

    pub(crate) fn axpy_in_place(&mut self, a: f64, x: &Self) {
        for i in 0..2 {
            for (y, &xv) in self.c[i].iter_mut().zip(&x.c[i]) {
                *y += xv * a;
            }
        }
        self.flags.div_free &= x.flags.div_free;
    }

    pub(crate) fn scale_in_place(&mut self, s: f64) {
        for comp in self.c.iter_mut() {
            for z in comp.iter_mut() {
                *z *= s;
            }
        }
    }

    /// Multiplies every mode by a real per-mode factor table.
    pub(crate) fn mul_diag_in_place(&mut self, factor: &[f64]) {
        for comp in self.c.iter_mut() {
            for (z, &f) in comp.iter_mut().zip(factor) {
                *z *= f;
            }
        }
    }

    /// L² inner product ⟨u, v⟩ = |Ω| Σ_k Re(û·conj v̂).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.weighted_inner(other, |_| 1.0))
    }

    pub(crate) fn weighted_inner(&self, other: &Self, w: impl Fn(usize) -> f64) -> f64 {
        let mut s = 0.0;
        for p in 0..self.grid.len() {
            let t = (self.c[0][p] * other.c[0][p].conj()).re + (self.c[1][p] * other.c[1][p].conj()).re;
            if t != 0.0 {
                s += w(p) * t;
            }
        }
        self.grid.area() * s
    }

    /// (‖u‖, ‖∇u‖, ‖Au‖) by Parseval with the |Ω| factor.
    pub fn norms(&self) -> Norms {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for p in 0..self.grid.len() {
            let m = self.c[0][p].norm_sqr() + self.c[1][p].norm_sqr();
            if m == 0.0 {
                continue;
            }
            let k2 = self.grid.k_squared(p);
            s0 += m;
            s1 += k2 * m;
            s2 += k2 * k2 * m;
        }
        let a = self.grid.area();
        Norms {
            l2: (a * s0).sqrt(),
            h1: (a * s1).sqrt(),
            h2: (a * s2).sqrt(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.norms().l2
    }

    pub fn h1_norm(&self) -> f64 {
        self.norms().h1
    }

    pub fn h2_norm(&self) -> f64 {
        self.norms().h2
    }

    /// ℓ² norm of the raw coefficient arrays.
    pub fn coeff_l2(&self) -> f64 {
        self.c
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Inverse transform to point samples.
    pub fn to_physical(&self) -> PhysicalVectorField {
        let g = &self.grid;
        // Both components are Hermitian, so one complex transform of
        // û₁ + i û₂ yields u₁ in the real and u₂ in the imaginary part.
        let mut z: Vec<Complex64> = self.c[0]
            .iter()
            .zip(&self.c[1])
            .map(|(&a, &b)| a + Complex64::i() * b)
            .collect();
        g.fft_inverse(&mut z);
        PhysicalVectorField {
            grid: g.clone(),
            u: [z.iter().map(|v| v.re).collect(), z.iter().map(|v| v.im).collect()],
        }
    }
}

impl PhysicalVectorField {
    pub fn new(grid: &TorusGrid, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        if u1.len() != grid.len() || u2.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples per component",
                grid.len()
            )));
        }
        if u1.iter().chain(u2.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            u: [u1, u2],
        })
    }

    /// Samples a closure (x, y) ↦ (u₁, u₂) at the grid points.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (u1, u2): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .map(|p| {
                let (x, y) = grid.point(p);
                f(x, y)
            })
            .unzip();
        Self {
            grid: grid.clone(),
            u: [u1, u2],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.u[i]
    }

    pub fn mean(&self) -> [f64; 2] {
        let n = self.grid.len() as f64;
        [self.u[0].iter().sum::<f64>() / n, self.u[1].iter().sum::<f64>() / n]
    }

    pub fn max_abs(&self) -> f64 {
        self.u[0]
            .iter()
            .zip(&self.u[1])
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max)
    }

    /// (∫|u|⁴)^{1/4} by the grid quadrature.
    pub fn l4_norm(&self) -> f64 {
        let w = self.grid.area() / self.grid.len() as f64;
        let s: f64 = self.u[0]
            .iter()
            .zip(&self.u[1])
            .map(|(a, b)| {
                let m = a * a + b * b;
                m * m
            })
            .sum();
        (w * s).powf(0.25)
    }

    /// Forward transform. The mean and Nyquist content are discarded.
    pub fn to_spectral(&self) -> SpectralVectorField {
        let g = &self.grid;
        let mut z: Vec<Complex64> = self.u[0]
            .iter()
            .zip(&self.u[1])
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        g.fft_forward(&mut z);
        let scale = 1.0 / g.len() as f64;
        let fields = split_pair(g, &z, scale);
        let mut f = SpectralVectorField::from_raw(g, fields, FieldFlags::default());
        f.flags = FieldFlags {
            mean_zero: true,
            div_free: f.check_div_free(DIV_FREE_TOL),
        };
        f
    }
}

/// Separates the transform Z of u₁ + i u₂ into the Hermitian parts
/// Û₁ = (Z(k) + conj Z(−k))/2 and Û₂ = (Z(k) − conj Z(−k))/(2i), scaled.
/// Mean and Nyquist modes come out zero.
pub(crate) fn split_pair(g: &TorusGrid, z: &[Complex64], scale: f64) -> [Vec<Complex64>; 2] {
    let len = g.len();
    let mut a = vec![Complex64::default(); len];
    let mut b = vec![Complex64::default(); len];
    for p in 1..len {
        if g.is_nyquist(p) {
            continue;
        }
        let q = g.mirror(p);
        let zp = z[p];
        let zq = z[q].conj();
        a[p] = 0.5 * scale * (zp + zq);
        let d = 0.5 * scale * (zp - zq);
        b[p] = Complex64::new(d.im, -d.re);
    }
    // Force bitwise Hermitian symmetry.
    for p in 1..len {
        let q = g.mirror(p);
        if q < p {
            a[p] = a[q].conj();
            b[p] = b[q].conj();
        }
    }
    [a, b]
}

/// Real scalar trigonometric polynomial on the torus (mean allowed).
#[derive(Clone, Debug)]
pub struct SpectralScalarField {
    grid: TorusGrid,
    c: Vec<Complex64>,
}

impl SpectralScalarField {
    /// Coefficients in FFT order; symmetrized, Nyquist lines dropped.
    pub fn from_coeffs(grid: &TorusGrid, mut c: Vec<Complex64>) -> Result<Self> {
        if c.len() != grid.len() {
            return Err(Error::InvalidArgument("coefficient length".into()));
        }
        for p in 0..grid.len() {
            let q = grid.mirror(p);
            if q < p {
                continue;
            }
            if grid.is_nyquist(p) {
                c[p] = Complex64::default();
                c[q] = Complex64::default();
            } else if p == q {
                c[p] = Complex64::new(c[p].re, 0.0);
            } else {
                let z = 0.5 * (c[p] + c[q].conj());
                c[p] = z;
                c[q] = z.conj();
            }
        }
        Ok(Self { grid: grid.clone(), c })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.c
    }

    /// Nonzero modes as (k1, k2, coefficient) in physical wavenumbers.
    pub(crate) fn active_modes(&self) -> Vec<(f64, f64, Complex64)> {
        (0..self.grid.len())
            .filter(|&p| self.c[p] != Complex64::default())
            .map(|p| {
                let (k1, k2) = self.grid.wavevector(p);
                (k1, k2, self.c[p])
            })
            .collect()
    }

    /// Exact evaluation φ(x, y) = Σ_k φ̂(k) e^{ik·x}.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.active_modes()
            .iter()
            .map(|&(k1, k2, c)| (c * Complex64::from_polar(1.0, k1 * x + k2 * y)).re)
            .sum()
    }
}
