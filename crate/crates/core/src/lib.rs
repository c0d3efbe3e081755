//! Exact and Monte Carlo tools for entropy of join partitions along
//! subsequences: reference systems, an intertwining Markov operator, rank-one
//! constructions and their Poisson suspensions.

pub mod caps;
pub mod entropy;
pub mod error;
pub mod explab;
pub mod interval;
pub mod linalg;
pub mod markov;
pub mod poisson;
pub mod rank_one;
pub mod rational;
pub mod reference;
pub mod rng;

pub use error::{Error, Result};
pub use rational::Q;
