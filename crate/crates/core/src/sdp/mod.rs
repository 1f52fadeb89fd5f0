//! Semidefinite programming: a real interior-point solver, the complex
//! embedding, and builders for every fidelity SDP.

pub mod builders;
pub mod embed;
pub mod solver;

pub use builders::{
    build_fsdp_dual, build_fsdp_primal, build_geometric_multi_sdp, build_kstar, build_kstar_pure, build_secrecy_inf,
    build_secrecy_kform, build_secrecy_sup,
};
pub use embed::{complex_to_real, real_to_complex, ComplexConstraint, ComplexSdp, ComplexSolution};
pub use solver::{solve, Constraint, IterateRecord, SdpProblem, SdpSolution, Sense, SolverOptions, Status};
