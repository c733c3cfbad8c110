//! Permutation-invariant simulation of cooperative spontaneous emission.
//!
//! `N` identical two-level atoms decaying through a shared radiation field
//! are described in the coupled spin basis, where a permutation-invariant
//! density matrix is block diagonal with one `(2J+1) x (2J+1)` block per
//! total angular momentum `J`. The state space grows as `N^3` instead of `4^N`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod motional;
pub mod ode;
pub mod oracle;
pub mod quad;
pub mod spin;
pub mod state;

pub use dynamics::{RateTable, SystemParams};
pub use error::{Error, Result};
pub use spin::BlockIndex;
pub use state::{PIState, Populations};
