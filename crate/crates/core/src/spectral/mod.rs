//! Spectrum of the three-level non-Hermitian block.

pub mod cubic;
pub mod ep2;
pub mod ep3;
pub mod scaling;
pub mod surfaces;

pub use cubic::{
    best_permutation, characteristic_coefficients, coefficients_from_rates, eigenvalues,
    solve_cubic, ComplexTriple, CubicCoefficients,
};
pub use ep2::{ep2_locus, ep2_locus_refined, real_discriminant, Polyline};
pub use ep3::{eigvec_analytic, ep3_analytic, EigvecTriple, Ep3Point};
pub use scaling::{
    logspace, read_samples_csv, scaling_analysis, write_samples_csv, ComponentScaling, PowerLawFit,
    ScalingFit, ScalingSample, SweepDirection, SCALING_COLUMNS,
};
pub use surfaces::{linspace, sweep_surfaces, EigenSurfaceGrid};
