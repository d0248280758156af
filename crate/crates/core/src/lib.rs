//! Surrogate-assisted Monte Carlo tree search over neural-architecture
//! design spaces.

pub mod baselines;
pub mod distributed;
pub mod eval;
pub mod harness;
pub mod hash;
pub mod mcts;
pub mod rng;
pub mod space;
pub mod surrogate;
