//! Closed-form reference solutions: two atoms, the mean-field pulse and the
//! subradiant cascade down the `|J, -J>` ladder.

use num_complex::Complex64;

use crate::dynamics::SystemParams;
use crate::error::{domain, Result};
use crate::spin::multiplicity_f64;
use crate::state::PIState;

/// `(1 - e^{-x t}) / x`, continuous through `x = 0`.
fn relax(x: f64, t: f64) -> f64 {
    if (x * t).abs() < 1e-8 {
        t * (1.0 - x * t / 2.0 + (x * t).powi(2) / 6.0)
    } else {
        -(-x * t).exp_m1() / x
    }
}

/// The seven independent entries of a two-atom permutation-invariant state.
///
/// Triplet populations `p_up = rho_1^{1,1}`, `p_mid = rho_1^{0,0}`,
/// `p_down = rho_1^{-1,-1}`, singlet population `p_singlet = rho_0^{0,0}`
/// and triplet coherences `c_up_mid = rho_1^{1,0}`, `c_up_down = rho_1^{1,-1}`,
/// `c_mid_down = rho_1^{0,-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAtomState {
    pub p_up: f64,
    pub p_mid: f64,
    pub p_down: f64,
    pub p_singlet: f64,
    pub c_up_mid: Complex64,
    pub c_up_down: Complex64,
    pub c_mid_down: Complex64,
}

impl TwoAtomState {
    /// `|e, e>`.
    pub fn fully_excited() -> Self {
        Self::populations(1.0, 0.0, 0.0, 0.0)
    }

    /// A diagonal state.
    pub fn populations(p_up: f64, p_mid: f64, p_down: f64, p_singlet: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            p_up,
            p_mid,
            p_down,
            p_singlet,
            c_up_mid: zero,
            c_up_down: zero,
            c_mid_down: zero,
        }
    }

    pub fn trace(&self) -> f64 {
        self.p_up + self.p_mid + self.p_down + self.p_singlet
    }

    /// Read the tracked entries out of an `N = 2` block state.
    pub fn from_state(state: &PIState) -> Result<Self> {
        if state.n() != 2 {
            return domain(format!("two-atom state needs N = 2, got {}", state.n()));
        }
        let g = |tj, tm, tmp| state.get(tj, tm, tmp).expect("N = 2 layout");
        Ok(Self {
            p_up: g(2, 2, 2).re,
            p_mid: g(2, 0, 0).re,
            p_down: g(2, -2, -2).re,
            p_singlet: g(0, 0, 0).re,
            c_up_mid: g(2, 2, 0),
            c_up_down: g(2, 2, -2),
            c_mid_down: g(2, 0, -2),
        })
    }

    /// Hermitian `N = 2` block state holding these entries.
    pub fn to_state(&self) -> PIState {
        let mut s = PIState::zeros(2).expect("N = 2 is valid");
        let re = |x: f64| Complex64::new(x, 0.0);
        let entries = [
            (2, 2, 2, re(self.p_up)),
            (2, 0, 0, re(self.p_mid)),
            (2, -2, -2, re(self.p_down)),
            (0, 0, 0, re(self.p_singlet)),
            (2, 2, 0, self.c_up_mid),
            (2, 0, 2, self.c_up_mid.conj()),
            (2, 2, -2, self.c_up_down),
            (2, -2, 2, self.c_up_down.conj()),
            (2, 0, -2, self.c_mid_down),
            (2, -2, 0, self.c_mid_down.conj()),
        ];
        for (tj, tm, tmp, v) in entries {
            s.set(tj, tm, tmp, v).expect("N = 2 layout");
        }
        s
    }

    /// Radiated energy rate of this state.
    pub fn intensity(&self, params: &SystemParams) -> f64 {
        let (g, dg) = (params.gamma(), params.dgamma());
        2.0 * (g + dg) * self.p_up + (2.0 * g + dg) * self.p_mid + dg * self.p_singlet
    }

    /// Largest entrywise distance to `other`.
    pub fn distance(&self, other: &Self) -> f64 {
        [
            (self.p_up - other.p_up).abs(),
            (self.p_mid - other.p_mid).abs(),
            (self.p_down - other.p_down).abs(),
            (self.p_singlet - other.p_singlet).abs(),
            (self.c_up_mid - other.c_up_mid).norm(),
            (self.c_up_down - other.c_up_down).norm(),
            (self.c_mid_down - other.c_mid_down).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn check_two(params: &SystemParams, t: f64) -> Result<()> {
    if params.n() != 2 {
        return domain(format!("two-atom solution needs N = 2, got {}", params.n()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

/// Exact two-atom state at time `t`.
///
/// The coherence phases follow `H_dd = ddd * sum_{i != j} s+_i s-_j` entering
/// as `-i[H_dd, rho]`.
pub fn two_atom_solution(
    params: &SystemParams,
    init: &TwoAtomState,
    t: f64,
) -> Result<TwoAtomState> {
    check_two(params, t)?;
    let (g, dg, ddd) = (params.gamma(), params.dgamma(), params.ddd());
    // decay rates of rho_1^{0,0} and rho_0^{0,0}; together they make 2(g + dg)
    let a = 2.0 * g + dg;
    let b = dg;
    let p_up = init.p_up * (-(a + b) * t).exp();
    let p_mid = init.p_mid * (-a * t).exp() + a * init.p_up * (-a * t).exp() * relax(b, t);
    let p_singlet = init.p_singlet * (-b * t).exp() + b * init.p_up * (-b * t).exp() * relax(a, t);
    let p_down = init.trace() - p_up - p_mid - p_singlet;

    let i = Complex64::i();
    let rate_up_mid = (4.0 * g + 3.0 * dg - 2.0 * ddd * i) / 2.0;
    let rate_mid_down = (2.0 * g + dg + 2.0 * ddd * i) / 2.0;
    let decay = |rate: Complex64| (-rate * t).exp();
    let c_up_mid = init.c_up_mid * decay(rate_up_mid);
    let c_up_down = init.c_up_down * (-(g + dg) * t).exp();
    // rate_up_mid - rate_mid_down = g + dg - 2 i ddd, never zero since g + dg = 1
    let c_mid_down = init.c_mid_down * decay(rate_mid_down)
        + init.c_up_mid * a * (decay(rate_mid_down) - decay(rate_up_mid))
            / (rate_up_mid - rate_mid_down);
    Ok(TwoAtomState {
        p_up,
        p_mid,
        p_down,
        p_singlet,
        c_up_mid,
        c_up_down,
        c_mid_down,
    })
}

/// Radiated energy rate of two atoms starting in `|e, e>`.
pub fn two_atom_intensity(params: &SystemParams, t: f64) -> Result<f64> {
    check_two(params, t)?;
    let a = 2.0 * params.gamma() + params.dgamma();
    let b = params.dgamma();
    Ok((a + b) * (-(a + b) * t).exp()
        + a * a * (-a * t).exp() * relax(b, t)
        + b * b * (-b * t).exp() * relax(a, t))
}

/// Mean-field superradiant pulse of `N` atoms, anchored at `p(t_I) = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanField {
    n: usize,
    gamma: f64,
    ddd: f64,
    t_i: f64,
    theta0: f64,
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl MeanField {
    pub fn new(n: usize, gamma: f64, ddd: f64, t_i: f64) -> Result<Self> {
        if n == 0 {
            return domain("atom number must be positive");
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return domain(format!("mean-field pulse needs gamma > 0, got {gamma}"));
        }
        if !ddd.is_finite() || !t_i.is_finite() {
            return domain("dipole shift and delay must be finite");
        }
        Ok(Self {
            n,
            gamma,
            ddd,
            t_i,
            theta0: 0.0,
        })
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }

    fn rate(&self) -> f64 {
        self.n as f64 * self.gamma
    }

    /// Excited-state probability `p(t)`.
    pub fn p(&self, t: f64) -> f64 {
        1.0 / (1.0 + (self.rate() * (t - self.t_i)).exp())
    }

    /// Relative phase `theta(t)`, with `theta(0) = theta0`.
    pub fn theta(&self, t: f64) -> f64 {
        let ln_p = -softplus(self.rate() * (t - self.t_i));
        let ln_norm = (-self.rate() * self.t_i).exp().ln_1p();
        self.theta0 + self.ddd / self.gamma * (ln_p + ln_norm)
    }

    /// `I(t) = -N dp/dt`.
    pub fn intensity(&self, t: f64) -> f64 {
        let c = (self.rate() * (t - self.t_i) / 2.0).cosh();
        self.height() / (c * c)
    }

    /// Pulse height `N^2 gamma / 4`.
    pub fn height(&self) -> f64 {
        (self.n as f64).powi(2) * self.gamma / 4.0
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn ddd(&self) -> f64 {
        self.ddd
    }
    pub fn t_i(&self) -> f64 {
        self.t_i
    }
}

/// `(p(t), theta(t))` of the mean-field pulse, with `theta0 = 0`.
pub fn meanfield_trajectory(
    n: usize,
    gamma: f64,
    ddd: f64,
    t_i: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let mf = MeanField::new(n, gamma, ddd, t_i)?;
    Ok((mf.p(t), mf.theta(t)))
}

pub fn meanfield_intensity(n: usize, gamma: f64, t_i: f64, t: f64) -> Result<f64> {
    Ok(MeanField::new(n, gamma, 0.0, t_i)?.intensity(t))
}

/// Large-`N` delay estimate `ln N / (N gamma)`.
pub fn meanfield_delay_estimate(n: usize, gamma: f64) -> Result<f64> {
    if n < 2 || !(gamma > 0.0) {
        return domain("delay estimate needs N >= 2 and gamma > 0");
    }
    let nf = n as f64;
    Ok(nf.ln() / (nf * gamma))
}

/// `t_I(dgamma) / t_I(0) = 1 / (1 - dgamma)` in mean field.
pub fn meanfield_delay_ratio(dgamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&dgamma) {
        return domain(format!("delay ratio needs 0 <= dgamma < 1, got {dgamma}"));
    }
    Ok(1.0 / (1.0 - dgamma))
}

fn check_subradiant(n: usize, two_j0: u32, dgamma: f64, t: f64) -> Result<()> {
    multiplicity_f64(n, two_j0)?;
    if !(dgamma >= 0.0) || !dgamma.is_finite() {
        return domain(format!("dgamma must be nonnegative, got {dgamma}"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

/// `rho_J^{-J,-J}(t)` starting from `|J0, -J0>`.
///
/// The excitation count `N/2 - J` along the chain is binomially distributed
/// with success probability `e^{-dgamma t}` per initial excitation.
pub fn subradiant_population(
    n: usize,
    two_j0: u32,
    two_j: u32,
    dgamma: f64,
    t: f64,
) -> Result<f64> {
    check_subradiant(n, two_j0, dgamma, t)?;
    let d = multiplicity_f64(n, two_j)?;
    if two_j < two_j0 {
        return domain(format!(
            "2J = {two_j} lies below the initial 2J0 = {two_j0}"
        ));
    }
    let n0 = (n as u32 - two_j0) / 2;
    let k = (two_j - two_j0) / 2;
    let q = -(-dgamma * t).exp_m1();
    let stay = (-dgamma * t).exp();
    let mut binom = 1.0;
    for i in 0..k {
        binom = binom * f64::from(n0 - i) / f64::from(i + 1);
    }
    Ok(binom * q.powi(k as i32) * stay.powi((n0 - k) as i32) / d)
}

/// Radiated energy rate `dgamma (N/2 - J0) e^{-dgamma t}` from `|J0, -J0>`.
pub fn subradiant_intensity(n: usize, two_j0: u32, dgamma: f64, t: f64) -> Result<f64> {
    check_subradiant(n, two_j0, dgamma, t)?;
    Ok(dgamma * f64::from(n as u32 - two_j0) / 2.0 * (-dgamma * t).exp())
}
