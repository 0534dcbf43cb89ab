//! Possibilistic inference: confidence-transfer conditioning under the
//! Dempster, minimum and Yager normalization rules, executable checks of the
//! conditioning and belief-independence axioms, and max-product local
//! computation over possibilistic causal networks with a brute-force oracle.

pub mod axioms;
pub mod conditioning;
pub mod logic;
pub mod network;
pub mod possibility;
pub mod propagation;
pub mod random;
