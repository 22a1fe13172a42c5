//! Exact long-run behaviour of the coupled pair on a finite set left
//! invariant by both maps.

pub mod absorption;
pub mod chain;
pub mod decompose;

pub use absorption::{check_absorption, probe_absorption, AbsorptionReport, EmpiricalAbsorption, ProbeParams};
pub use chain::{check_invariant, MarkovChain, PairChain, PairChainJson};
pub use decompose::{
    decompose, exact_f_limit, exact_f_limits, limit_profile, ChainDecomposition, DecompositionJson,
};
