use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::{bessel_j0, gauss_legendre_on};
use crate::error::{Error, Result};
use crate::spectral::{FieldFlags, SpectralVectorField, TorusGrid};

/// Observation operator kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterpolantKind {
    /// Low-mode projector onto lattice modes with 0 < |m| ≤ `cutoff`.
    /// Its scale is h = L/(2·cutoff + 1) unless `h` is given.
    Modal {
        cutoff: u32,
        #[serde(default)]
        h: Option<f64>,
    },
    /// Mollified averages over the h × h cells tiling the domain.
    VolumeAvg {
        h: f64,
        #[serde(default)]
        eps: Option<f64>,
    },
    /// Mollified point values at `node_offset` (fraction of h) inside each cell.
    Nodal {
        h: f64,
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default = "centre")]
        node_offset: [f64; 2],
    },
}

fn centre() -> [f64; 2] {
    [0.5, 0.5]
}

#[derive(Clone, Debug)]
pub struct InterpolantSpec {
    pub kind: InterpolantKind,
    pub grid: TorusGrid,
}

impl InterpolantSpec {
    pub fn modal(grid: &TorusGrid, cutoff: u32) -> Self {
        Self {
            kind: InterpolantKind::Modal { cutoff, h: None },
            grid: grid.clone(),
        }
    }

    pub fn volume_avg(grid: &TorusGrid, h: f64) -> Self {
        Self {
            kind: InterpolantKind::VolumeAvg { h, eps: None },
            grid: grid.clone(),
        }
    }

    pub fn nodal(grid: &TorusGrid, h: f64) -> Self {
        Self {
            kind: InterpolantKind::Nodal {
                h,
                eps: None,
                node_offset: centre(),
            },
            grid: grid.clone(),
        }
    }
}

#[derive(Clone, Debug)]
enum Realization {
    Mask(Vec<bool>),
    Cells {
        cells: usize,
        /// ρ̃(k) χ̂₀(k) n_c² per flat index (zero at k = 0 and Nyquist).
        multiplier: Vec<Complex64>,
        /// Cell functional symbol: cell average or point evaluation.
        sample: Vec<Complex64>,
    },
}

/// A realized finite-rank linear observation operator J.
#[derive(Clone, Debug)]
pub struct InterpolantOp {
    spec: InterpolantSpec,
    h: f64,
    eps: Option<f64>,
    real: Realization,
}

impl InterpolantOp {
    pub fn spec(&self) -> &InterpolantSpec {
        &self.spec
    }

    pub fn kind(&self) -> &InterpolantKind {
        &self.spec.kind
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.spec.grid
    }

    /// Observation length scale h.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    pub fn is_modal(&self) -> bool {
        matches!(self.real, Realization::Mask(_))
    }

    /// Observed-mode mask of a modal operator.
    pub fn modal_mask(&self) -> Option<&[bool]> {
        match &self.real {
            Realization::Mask(m) => Some(m),
            _ => None,
        }
    }

    /// Declared upper bound on the rank of J acting on vector fields.
    pub fn declared_rank(&self) -> usize {
        match &self.real {
            Realization::Mask(m) => 2 * m.iter().filter(|&&b| b).count(),
            Realization::Cells { cells, .. } => 2 * cells * cells,
        }
    }

    /// Number of cells per side (volume/nodal kinds).
    pub fn cells_per_side(&self) -> Option<usize> {
        match &self.real {
            Realization::Cells { cells, .. } => Some(*cells),
            _ => None,
        }
    }
}

/// Realizes the operator. Volume and nodal kinds are evaluated exactly in
/// Fourier space: the cell data are trigonometric sums of the
/// band-limited input, and each mollified indicator ρ_ε ∗ χ_{Q_j} has the
/// closed-form symbol ρ̃(|k|) χ̂₀(k) e^{−ik·a_j}.
pub fn build_interpolant(spec: &InterpolantSpec) -> Result<InterpolantOp> {
    let g = &spec.grid;
    let l = g.period();
    match &spec.kind {
        InterpolantKind::Modal { cutoff, h } => {
            if *cutoff == 0 {
                return Err(Error::InvalidInterpolant("modal cutoff must be >= 1".into()));
            }
            let k2max = (*cutoff as i64).pow(2);
            let mask: Vec<bool> = (0..g.len())
                .map(|p| {
                    let (m1, m2) = g.lattice_pair(p);
                    let r = m1 * m1 + m2 * m2;
                    r > 0 && r <= k2max && !g.is_nyquist(p)
                })
                .collect();
            let h = match h {
                Some(h) if *h > 0.0 => *h,
                Some(h) => return Err(Error::InvalidInterpolant(format!("h must be positive (got {h})"))),
                None => l / (2.0 * *cutoff as f64 + 1.0),
            };
            Ok(InterpolantOp {
                spec: spec.clone(),
                h,
                eps: None,
                real: Realization::Mask(mask),
            })
        }
        InterpolantKind::VolumeAvg { h, eps } => {
            let (cells, eps) = check_cells(l, *h, *eps)?;
            let sample = (0..g.len())
                .map(|p| {
                    let (k1, k2) = g.wavevector(p);
                    (segment_symbol(k1, *h) * segment_symbol(k2, *h)).conj() / (h * h)
                })
                .collect();
            Ok(cell_op(spec, *h, eps, cells, sample))
        }
        InterpolantKind::Nodal { h, eps, node_offset } => {
            let (cells, eps) = check_cells(l, *h, *eps)?;
            if node_offset.iter().any(|o| !(0.0..=1.0).contains(o)) {
                return Err(Error::InvalidInterpolant(format!(
                    "node_offset must lie in [0, 1]² (got {node_offset:?})"
                )));
            }
            let off = [node_offset[0] * h, node_offset[1] * h];
            let sample = (0..g.len())
                .map(|p| {
                    let (k1, k2) = g.wavevector(p);
                    Complex64::from_polar(1.0, k1 * off[0] + k2 * off[1])
                })
                .collect();
            Ok(cell_op(spec, *h, eps, cells, sample))
        }
    }
}

fn check_cells(l: f64, h: f64, eps: Option<f64>) -> Result<(usize, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInterpolant(format!("h must be positive (got {h})")));
    }
    let ratio = l / h;
    let cells = ratio.round();
    if cells < 1.0 || (ratio - cells).abs() > 1e-9 * ratio {
        return Err(Error::InvalidInterpolant(format!("h = {h} does not divide L = {l}")));
    }
    let eps = eps.unwrap_or(h / 4.0);
    if !(eps > 0.0 && eps < h / 2.0) {
        return Err(Error::InvalidInterpolant(format!(
            "eps must satisfy 0 < eps < h/2 (got eps = {eps}, h = {h})"
        )));
    }
    Ok((cells as usize, eps))
}

fn cell_op(spec: &InterpolantSpec, h: f64, eps: f64, cells: usize, sample: Vec<Complex64>) -> InterpolantOp {
    let g = &spec.grid;
    let area = g.area();
    let nc2 = (cells * cells) as f64;
    let mollifier = MollifierSymbol::new(eps);
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let multiplier = (0..g.len())
        .map(|p| {
            if p == 0 || g.is_nyquist(p) {
                return Complex64::default();
            }
            let (m1, m2) = g.lattice_pair(p);
            let r2 = m1 * m1 + m2 * m2;
            let rho = *cache
                .entry(r2)
                .or_insert_with(|| mollifier.eval(g.kappa0() * (r2 as f64).sqrt()));
            let (k1, k2) = g.wavevector(p);
            let chi0 = segment_symbol(k1, h) * segment_symbol(k2, h) / area;
            chi0 * rho * nc2
        })
        .collect();
    InterpolantOp {
        spec: spec.clone(),
        h,
        eps: Some(eps),
        real: Realization::Cells {
            cells,
            multiplier,
            sample,
        },
    }
}

/// ∫₀^h e^{−iκx} dx.
fn segment_symbol(kappa: f64, h: f64) -> Complex64 {
    if kappa == 0.0 {
        Complex64::new(h, 0.0)
    } else {
        (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -kappa * h)) / Complex64::new(0.0, kappa)
    }
}

/// Fourier symbol of the unit-mass bump ρ(r) ∝ exp(−1/(1−(r/ε)²)).
#[derive(Clone, Debug)]
pub struct MollifierSymbol {
    eps: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mass: f64,
}

impl MollifierSymbol {
    pub fn new(eps: f64) -> Self {
        let (nodes, w) = gauss_legendre_on(96, 0.0, 1.0);
        let weights: Vec<f64> = nodes.iter().zip(&w).map(|(&s, &w)| w * bump(s) * s).collect();
        let mass = weights.iter().sum();
        Self {
            eps,
            nodes,
            weights,
            mass,
        }
    }

    /// Radial profile before normalization, in units of ε.
    pub fn profile(&self, r: f64) -> f64 {
        bump(r / self.eps)
    }

    /// Normalization constant C with ∫ C·profile = 1 over ℝ².
    pub fn normalization(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.eps * self.eps * self.mass)
    }

    /// ρ̃(q) = ∫ρ(x) e^{−iq·x} dx for |q| = q.
    pub fn eval(&self, q: f64) -> f64 {
        let z = q * self.eps;
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * bessel_j0(z * s))
            .sum();
        s / self.mass
    }
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Applies J. Output is mean-zero, generally not divergence-free.
pub fn apply_j(op: &InterpolantOp, u: &SpectralVectorField) -> Result<SpectralVectorField> {
    op.grid().check_same(u.grid())?;
    let g = op.grid();
    let flags = FieldFlags {
        mean_zero: true,
        div_free: false,
    };
    match &op.real {
        Realization::Mask(mask) => {
            let c = [0, 1].map(|i| {
                u.coeffs(i)
                    .iter()
                    .zip(mask)
                    .map(|(&z, &m)| if m { z } else { Complex64::default() })
                    .collect::<Vec<_>>()
            });
            Ok(SpectralVectorField::from_raw(
                g,
                c,
                FieldFlags {
                    mean_zero: true,
                    div_free: u.flags().div_free,
                },
            ))
        }
        Realization::Cells {
            cells,
            multiplier,
            sample,
        } => {
            let nc = *cells as i64;
            let fold = |p: usize| {
                let (m1, m2) = g.lattice_pair(p);
                (m1.rem_euclid(nc) * nc + m2.rem_euclid(nc)) as usize
            };
            let c = [0, 1].map(|i| {
                // F[q] = Σ_{m ≡ q mod n_c} û(m) s(m); then Ĵ(m) = M(m) F[m mod n_c].
                let mut folded = vec![Complex64::default(); cells * cells];
                for (p, &z) in u.coeffs(i).iter().enumerate() {
                    if z != Complex64::default() {
                        folded[fold(p)] += z * sample[p];
                    }
                }
                (0..g.len())
                    .map(|p| multiplier[p] * folded[fold(p)])
                    .collect::<Vec<_>>()
            });
            let mut out = SpectralVectorField::from_raw(g, c, flags);
            symmetrize(&mut out);
            Ok(out)
        }
    }
}

/// Removes round-off asymmetry so the output is exactly Hermitian.
fn symmetrize(u: &mut SpectralVectorField) {
    let g = u.grid().clone();
    let c = u.coeffs_mut();
    for comp in c.iter_mut() {
        for p in 1..g.len() {
            let q = g.mirror(p);
            if q < p {
                let z = 0.5 * (comp[q] + comp[p].conj());
                comp[q] = z;
                comp[p] = z.conj();
            }
        }
    }
}

/// Cell data c_j of component `i` (averages or nodal values), ordered
/// j = j1·n_c + j2 with cell origin a_j = h·(j1, j2). Used as an oracle.
pub fn cell_values(op: &InterpolantOp, u: &SpectralVectorField, i: usize) -> Result<Vec<f64>> {
    op.grid().check_same(u.grid())?;
    let g = op.grid();
    match &op.real {
        Realization::Mask(_) => Err(Error::InvalidInterpolant("modal operators have no cell data".into())),
        Realization::Cells { cells, sample, .. } => {
            let h = op.h;
            let mut out = Vec::with_capacity(cells * cells);
            for j1 in 0..*cells {
                for j2 in 0..*cells {
                    let (ax, ay) = (j1 as f64 * h, j2 as f64 * h);
                    let mut s = 0.0;
                    for (p, &z) in u.coeffs(i).iter().enumerate() {
                        if z == Complex64::default() {
                            continue;
                        }
                        let (k1, k2) = g.wavevector(p);
                        s += (z * sample[p] * Complex64::from_polar(1.0, k1 * ax + k2 * ay)).re;
                    }
                    out.push(s);
                }
            }
            Ok(out)
        }
    }
}
