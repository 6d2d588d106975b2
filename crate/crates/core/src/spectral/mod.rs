//! Torus grids, Fourier-coefficient fields and the operators built on them.

mod field;
mod grid;
mod ops;
mod random;

pub use field::{FieldFlags, Norms, PhysicalVectorField, SpectralScalarField, SpectralVectorField, DIV_FREE_TOL};
pub use grid::{make_grid, TorusGrid, DEFAULT_DEALIAS_FRACTION};
pub use ops::{bilinear_b, bilinear_b_aliased, dealias, gradient_field, is_band_limited, leray_project, stokes_apply};
pub use random::{random_divfree_field, random_vector_field, rescale_h1, shell_energies, shell_of, EnergySpectrum};

pub(crate) use ops::{bilinear_impl, dealias_in_place, leray_in_place};
