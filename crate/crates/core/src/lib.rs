//! Energy-based discontinuous Galerkin discretization of the dynamic
//! Euler-Bernoulli beam `μ u_tt + (D u_xx)_xx = f`, integrated in time with
//! spectral deferred correction.
//!
//! ```
//! use beamdg::diagnostics::{error_norms, project_initial_data};
//! use beamdg::fluxes::FluxSpec;
//! use beamdg::mesh::Mesh1D;
//! use beamdg::operator::{assemble, DGState};
//! use beamdg::problem::preset_uniform_beam;
//! use beamdg::sdc::{integrate, SdcConfig};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let problem = preset_uniform_beam();
//! let mesh = Mesh1D::uniform(0.0, 10.0, 40)?;
//! let (_, system) = assemble(problem.clone(), mesh.clone(), 5, 3, FluxSpec::upwind())?;
//! let y0 = project_initial_data(&problem, &mesh, 5, 3)?;
//! let y = integrate(&system, &SdcConfig::default(), y0.as_slice(), 0.0, 1.0, 0.125, |_, _| {})?;
//! let report = error_norms(&DGState::from_vec(y0.layout(), y), &problem, &mesh, 1.0)?;
//! assert!(report.energy < 1e-3);
//! # Ok(())
//! # }
//! ```

pub mod basis;
pub mod cli;
pub mod diagnostics;
pub mod fluxes;
pub mod linalg;
pub mod mesh;
pub mod operator;
pub mod problem;
pub mod sdc;
