//! Simulation of a capacitively coupled superconducting transmon and readout
//! resonator in the Schwinger angular-momentum basis.
//!
//! The two circuit oscillators are rotated into canonical modes, the pair of
//! canonical ladders is mapped onto angular-momentum states |S, mS> with
//! S = N/2, and the driven, dissipative dynamics of the lowest eigenstates is
//! integrated with a truncated Lindblad master equation.
//!
//! Unit conventions, used everywhere without exception:
//!
//! * energies and rates are angular frequencies in rad/ns (displayed as
//!   "GHz"), so 1 kHz of rate input is 1e-6 rad/ns;
//! * time is in ns internally, microseconds at the CLI surface;
//! * voltages are in nV, drive couplings in (rad/ns)/nV.

pub mod basis;
pub mod device;
pub mod error;
pub mod hamiltonian;
pub mod lindblad;
pub mod perturbation;
pub mod spectroscopy;
pub mod steadystate;

pub use basis::{AngularBasis, AngularIndex, OperatorMatrix};
pub use device::{CanonicalModes, DeviceParams, LindbladRates};
pub use error::{Result, SimError};
pub use hamiltonian::HamiltonianSet;
pub use lindblad::{DensityTrajectory, DriveWaveform, GammaTensor, JumpSet, LambdaTensor};
pub use perturbation::EigenSystem;
pub use spectroscopy::{SweepPlan, SweepResult};
pub use steadystate::SteadyStateResult;
