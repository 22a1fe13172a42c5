//! Ternary symbolic dynamics of the two builtin examples.

pub mod dp;
pub mod rules;
pub mod seq;
pub mod tape;
pub mod walk;
pub mod witness;

pub use rules::RuleSet;
pub use seq::{u_index, BlockSeq};
pub use tape::{BucketTable, SymbolicPair, Tape, WalkState};
pub use dp::{dp_exact_law, dp_law};
pub use walk::{mu_theoretical_ex1, rw_hitting, rw_hitting_empirical};
pub use witness::{stage_targets, t_lk, witness_x_k, Stage, StageValue, Witness, WitnessParams};
