//! Combinatorics of the coupled spin basis of `N` spin-1/2 particles.
//!
//! Every angular momentum quantum number is carried doubled (`two_j`,
//! `two_m`) so that the half-integer values of odd `N` stay exact integers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// One irreducible block `J` of the Wedderburn decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex {
    pub two_j: u32,
}

impl BlockIndex {
    pub fn new(two_j: u32) -> Self {
        Self { two_j }
    }

    /// Dimension `2J + 1` of the representation space.
    pub fn dim(self) -> usize {
        self.two_j as usize + 1
    }

    pub fn j(self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    /// Doubled magnetic numbers `2M` in storage order, i.e. `M = J, J-1, ..., -J`.
    pub fn two_ms(self) -> impl DoubleEndedIterator<Item = i32> + Clone {
        let tj = self.two_j as i32;
        (0..=self.two_j as i32).map(move |a| tj - 2 * a)
    }

    /// Row index of `2M` inside the block, or `None` when `|M| > J` or the parity is wrong.
    pub fn row_of(self, two_m: i32) -> Option<usize> {
        let tj = self.two_j as i32;
        if two_m.abs() > tj || (tj - two_m) % 2 != 0 {
            None
        } else {
            Some(((tj - two_m) / 2) as usize)
        }
    }
}

fn check_block(n: usize, two_j: u32) -> Result<()> {
    if n == 0 {
        return domain("atom number must be positive");
    }
    if two_j as usize > n {
        return domain(format!("2J = {two_j} exceeds N = {n}"));
    }
    if !(n - two_j as usize).is_multiple_of(2) {
        return domain(format!("2J = {two_j} has the wrong parity for N = {n}"));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Multiplicity `d_N^J = (2J+1) N! / ((N/2-J)! (N/2+J+1)!)`, exact.
pub fn multiplicity(n: usize, two_j: u32) -> Result<BigUint> {
    check_block(n, two_j)?;
    let k = (n - two_j as usize) / 2;
    // (2J+1)/(N/2+J+1) * C(N, N/2-J); the division is exact.
    let mut d = binomial(n, k) * (two_j as usize + 1);
    d /= n - k + 1;
    Ok(d)
}

/// `d_N^J` as a float. Exact for every `N` where `2^N` fits in the mantissa.
pub fn multiplicity_f64(n: usize, two_j: u32) -> Result<f64> {
    multiplicity(n, two_j).map(|d| d.to_f64().unwrap_or(f64::INFINITY))
}

/// Cumulative multiplicity `alpha_N^J = sum_{J' >= J} d_N^{J'}`; zero above the top block.
pub fn alpha(n: usize, two_j: u32) -> Result<BigUint> {
    if n == 0 {
        return domain("atom number must be positive");
    }
    if !(n + two_j as usize).is_multiple_of(2) {
        return domain(format!("2J = {two_j} has the wrong parity for N = {n}"));
    }
    let mut acc = BigUint::zero();
    let mut tj = two_j;
    while tj as usize <= n {
        acc += multiplicity(n, tj)?;
        tj += 2;
    }
    Ok(acc)
}

pub fn alpha_f64(n: usize, two_j: u32) -> Result<f64> {
    alpha(n, two_j).map(|a| a.to_f64().unwrap_or(f64::INFINITY))
}

/// Ladder coefficients of the coupled basis at `(J, M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_minus: f64,
    pub d_minus: f64,
}

fn clamped_sqrt(doubled_product: i64) -> f64 {
    // argument is 4 * (product of two half-integer-valued factors)
    if doubled_product <= 0 {
        0.0
    } else {
        (doubled_product as f64).sqrt() / 2.0
    }
}

/// `A± = sqrt((J∓M)(J±M+1))`, `B- = -sqrt((J+M)(J+M-1))`, `D- = sqrt((J-M+1)(J-M+2))`.
///
/// Factors whose radicand is negative (indices outside the physical range) are 0.
pub fn ladder_coefficients(two_j: i32, two_m: i32) -> Ladder {
    let (tj, tm) = (i64::from(two_j), i64::from(two_m));
    // Each factor doubled: 2(J - M) = tj - tm and so on.
    let prod = |a: i64, b: i64| if a < 0 && b < 0 { 0 } else { a * b };
    Ladder {
        a_plus: clamped_sqrt(prod(tj - tm, tj + tm + 2)),
        a_minus: clamped_sqrt(prod(tj + tm, tj - tm + 2)),
        b_minus: -clamped_sqrt(prod(tj + tm, tj + tm - 2)),
        d_minus: clamped_sqrt(prod(tj - tm + 2, tj - tm + 4)),
    }
}

/// Number of real parameters of a permutation-invariant state, `(N+1)(N+2)(N+3)/6`.
pub fn parameter_count(n: usize) -> u64 {
    let n = n as u64;
    (n + 1) * (n + 2) * (n + 3) / 6
}

/// All blocks `J = J_min, ..., N/2` in ascending order.
pub fn block_list(n: usize) -> Vec<BlockIndex> {
    (((n % 2) as u32)..=n as u32)
        .step_by(2)
        .map(BlockIndex::new)
        .collect()
}
