//! Selected configuration interaction driven by simulated time-evolution
//! measurements.
//!
//! The numerical core is generic over the floating-point type through
//! [`Real`]; the aliases at the crate root fix it to `f64`, which is what
//! the command-line harness uses.

pub mod baselines;
pub mod determinants;
pub mod eigensolver;
pub mod error;
pub mod evolution;
pub mod integrals;
pub mod pt2;
pub mod qubit_hamiltonian;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod slater_condon;

pub use determinants::{Determinant, ExcitationInfo, Sector, Spin, SpinOrbital};
pub use error::{Error, Result};
pub use evolution::{EvolutionConfig, MeasurementSet, QDriftDepth};
pub use pt2::ExtrapolationResult;
pub use sampler::{OccupancyDistribution, SamplerConfig};
pub use scalar::Real;

pub type IntegralStore = integrals::IntegralStore<f64>;
pub type SparseInteractionMatrix = slater_condon::SparseInteractionMatrix<f64>;
pub type EigenResult = eigensolver::EigenResult<f64>;
pub type PauliTerm = qubit_hamiltonian::PauliTerm<f64>;
pub type PauliSum = qubit_hamiltonian::PauliSum<f64>;
pub type Statevector = evolution::Statevector<f64>;
pub type QDriftCircuit = evolution::QDriftCircuit<f64>;
pub type SubspaceState = sampler::SubspaceState<f64>;
pub type BaselineResult = baselines::BaselineResult<f64>;
pub type Pt2Result = pt2::Pt2Result<f64>;
