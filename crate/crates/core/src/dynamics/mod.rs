//! Time evolution of permutation-invariant states under collective decay.
//!
//! All rates are in units of the single-atom decay rate `gamma0 = 1`.

mod evolve;
mod pulse;
mod rates;

pub use evolve::{evolve, evolve_populations, write_trajectory_csv, Trajectory};
pub use pulse::{
    critical_dgamma_formula, critical_dgamma_numeric, pulse_metrics, pulse_metrics_with_table,
    sweep, write_metrics_csv, MetricsRow, PulseMetrics, PulseOptions,
};
pub use rates::{CoherentSystem, PopulationSystem, RateTable};

use crate::error::{domain, Result};
use crate::spin::BlockIndex;
use crate::state::{PIState, Populations};

/// Slack on the Markov bounds for values produced by float arithmetic.
const BOUND_SLACK: f64 = 1e-12;

/// Parameters of the collective master equation for `N` atoms.
///
/// Only `dgamma = gamma0 - gamma` is stored, so `gamma + dgamma = 1` holds
/// by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    n: usize,
    dgamma: f64,
    ddd: f64,
}

impl SystemParams {
    pub fn new(n: usize, dgamma: f64, ddd: f64) -> Result<Self> {
        let p = Self { n, dgamma, ddd };
        p.validate()?;
        Ok(p)
    }

    pub fn from_gamma(n: usize, gamma: f64, ddd: f64) -> Result<Self> {
        Self::new(n, 1.0 - gamma, ddd)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return domain("atom number must be positive");
        }
        if !self.dgamma.is_finite() || !self.ddd.is_finite() {
            return domain("rates must be finite");
        }
        if self.dgamma < -BOUND_SLACK {
            return domain(format!(
                "Markov bound violated: dgamma = {} < 0 (gamma > gamma0)",
                self.dgamma
            ));
        }
        if self.n > 1 {
            let max = self.n as f64 / (self.n as f64 - 1.0);
            if self.dgamma > max + BOUND_SLACK {
                return domain(format!(
                    "Markov bound violated: dgamma = {} > N/(N-1) = {max} (gamma < -gamma0/(N-1))",
                    self.dgamma
                ));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Off-diagonal decay rate `gamma`.
    pub fn gamma(&self) -> f64 {
        1.0 - self.dgamma
    }

    pub fn dgamma(&self) -> f64 {
        self.dgamma
    }

    /// Dipole-dipole shift.
    pub fn ddd(&self) -> f64 {
        self.ddd
    }
}

/// Weight `c_J^M` of `rho_J^{M,M}` in the radiated energy rate.
pub fn intensity_coefficient(params: &SystemParams, block: BlockIndex, two_m: i32) -> f64 {
    let j = block.j();
    let m = f64::from(two_m) / 2.0;
    let half_n = params.n() as f64 / 2.0;
    (j + m) * (j - m + 1.0) * params.gamma() + (m + half_n) * params.dgamma()
}

/// Weight of `rho_J^{M,M}` in the time derivative of the radiated energy rate.
pub fn intensity_derivative_coefficient(
    params: &SystemParams,
    block: BlockIndex,
    two_m: i32,
) -> f64 {
    let j = block.j();
    let m = f64::from(two_m) / 2.0;
    let half_n = params.n() as f64 / 2.0;
    let (g, dg) = (params.gamma(), params.dgamma());
    2.0 * (j + m) * (j - m + 1.0) * ((m - 1.0) * g - dg) * g - (m + half_n) * dg * dg
}

fn check_same_n(params: &SystemParams, n: usize) -> Result<()> {
    if params.n() != n {
        domain(format!(
            "state has N = {n} but parameters have N = {}",
            params.n()
        ))
    } else {
        Ok(())
    }
}

/// Radiated energy rate `I = -d<J_z>/dt` from the populations.
pub fn intensity_of(pops: &Populations, params: &SystemParams) -> Result<f64> {
    check_same_n(params, pops.n())?;
    Ok(pops.weighted_sum(|b, tm| intensity_coefficient(params, b, tm)))
}

/// `dI/dt` from the populations.
pub fn intensity_derivative_of(pops: &Populations, params: &SystemParams) -> Result<f64> {
    check_same_n(params, pops.n())?;
    Ok(pops.weighted_sum(|b, tm| intensity_derivative_coefficient(params, b, tm)))
}

pub fn intensity(state: &PIState, params: &SystemParams) -> Result<f64> {
    intensity_of(&state.populations_vec(), params)
}

pub fn intensity_derivative(state: &PIState, params: &SystemParams) -> Result<f64> {
    intensity_derivative_of(&state.populations_vec(), params)
}

/// `d rho/dt` for `state` under the rates in `table`.
pub fn rhs(state: &PIState, table: &RateTable) -> Result<PIState> {
    table.rhs(state)
}

/// Degeneracy-weighted coefficient vectors over the flat population layout.
pub(crate) fn weighted_coefficients(
    params: &SystemParams,
    coeff: impl Fn(&SystemParams, BlockIndex, i32) -> f64,
) -> Vec<f64> {
    let degs = crate::state::degeneracies(params.n());
    crate::spin::block_list(params.n())
        .into_iter()
        .zip(degs)
        .flat_map(|(b, d)| b.two_ms().map(move |tm| (b, tm, d)).collect::<Vec<_>>())
        .map(|(b, tm, d)| d * coeff(params, b, tm))
        .collect()
}
