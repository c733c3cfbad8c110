//! Brute-force Lindblad evolution in the full `2^N`-dimensional Hilbert space.
//!
//! This is an independent check of the permutation-invariant solver for small
//! `N`: it knows nothing about the coupled basis except through the explicit
//! Clebsch–Gordan construction used to move states between representations.
//! Site `i` is bit `i` of a basis index; a set bit means the atom is excited.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{evolve, SystemParams};
use crate::error::{domain, Error, Result};
use crate::ode::{solve_on_grid, OdeSystem, Tolerances};
use crate::quad::linspace;
use crate::spin::{block_list, BlockIndex};
use crate::state::{fmt_f64, PIState};

/// Largest atom number the full-space representation accepts.
pub const MAX_ATOMS: usize = 6;

fn check_capacity(n: usize) -> Result<()> {
    if n == 0 {
        return domain("atom number must be positive");
    }
    if n > MAX_ATOMS {
        return Err(Error::Capacity { n, max: MAX_ATOMS });
    }
    Ok(())
}

/// Dense density matrix of `N <= 6` atoms in the product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    n: usize,
    rho: DMatrix<Complex64>,
}

impl FullState {
    pub fn from_matrix(n: usize, rho: DMatrix<Complex64>) -> Result<Self> {
        check_capacity(n)?;
        let dim = 1usize << n;
        if rho.nrows() != dim || rho.ncols() != dim {
            return domain(format!(
                "N = {n} needs a {dim}x{dim} matrix, got {}x{}",
                rho.nrows(),
                rho.ncols()
            ));
        }
        Ok(Self { n, rho })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let dim = 1usize << n;
        Ok(Self {
            n,
            rho: DMatrix::zeros(dim, dim),
        })
    }

    /// Pure product state; bit `i` of `excited` set means atom `i` is excited.
    pub fn product(n: usize, excited: usize) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        if excited >= s.dim() {
            return domain(format!("basis index {excited} out of range for N = {n}"));
        }
        s.rho[(excited, excited)] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Pure state `|psi><psi|` (normalised here).
    pub fn pure(n: usize, psi: &DVector<Complex64>) -> Result<Self> {
        let s = Self::zeros(n)?;
        if psi.len() != s.dim() {
            return domain(format!("state vector must have length {}", s.dim()));
        }
        let norm = psi.norm();
        if !(norm > 0.0) {
            return domain("state vector must be nonzero");
        }
        let v = psi.unscale(norm);
        Self::from_matrix(n, &v * v.adjoint())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn expect_jz(&self) -> f64 {
        (0..self.dim())
            .map(|a| (f64::from(a.count_ones()) - self.n as f64 / 2.0) * self.rho[(a, a)].re)
            .sum()
    }

    /// Radiated energy rate `sum_ij gamma_ij <sigma+_i sigma-_j>`.
    pub fn intensity(&self, params: &SystemParams) -> Result<f64> {
        check_params(self.n, params)?;
        let ops = pair_operators(self.n, params.gamma());
        Ok(ops
            .iter()
            .map(|&(r, c, l, _)| l * self.rho[(c, r)].re)
            .sum())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.rho - self.rho.adjoint()))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()).unscale(2.0);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Interleaved `(re, im)` pairs, row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(2 * d * d);
        for a in 0..d {
            for b in 0..d {
                let z = self.rho[(a, b)];
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    pub fn from_flat(n: usize, flat: &[f64]) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        let d = s.dim();
        if flat.len() != 2 * d * d {
            return domain(format!("flat full state must have length {}", 2 * d * d));
        }
        for a in 0..d {
            for b in 0..d {
                let k = 2 * (a * d + b);
                s.rho[(a, b)] = Complex64::new(flat[k], flat[k + 1]);
            }
        }
        Ok(s)
    }

    /// Permute the atoms: atom `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n
            || perm
                .iter()
                .any(|&p| p >= self.n || std::mem::replace(&mut seen[p], true))
        {
            return domain("not a permutation of the atoms");
        }
        let map = |a: usize| -> usize {
            (0..self.n)
                .filter(|&i| a >> i & 1 == 1)
                .map(|i| 1 << perm[i])
                .sum()
        };
        let idx: Vec<usize> = (0..self.dim()).map(map).collect();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                out[(idx[a], idx[b])] = self.rho[(a, b)];
            }
        }
        Ok(Self {
            n: self.n,
            rho: out,
        })
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_params(n: usize, params: &SystemParams) -> Result<()> {
    check_capacity(n)?;
    if params.n() != n {
        return domain(format!(
            "state has N = {n} but parameters have N = {}",
            params.n()
        ));
    }
    Ok(())
}

/// Nonzero entries `(row, col, l, h)` of the decay operator
/// `L = sum_ij gamma_ij sigma+_i sigma-_j` and of `H_dd / ddd = sum_{i != j} sigma+_i sigma-_j`.
fn pair_operators(n: usize, gamma: f64) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    for a in 0..1usize << n {
        out.push((a, a, f64::from(a.count_ones()), 0.0));
        for j in (0..n).filter(|&j| a >> j & 1 == 1) {
            for i in (0..n).filter(|&i| a >> i & 1 == 0) {
                out.push((a ^ (1 << j) ^ (1 << i), a, gamma, 1.0));
            }
        }
    }
    out
}

/// Standard-form generator: `-i[H_dd, rho] + sum_ij gamma_ij (sigma-_j rho sigma+_i - {sigma+_i sigma-_j, rho}/2)`.
#[derive(Debug, Clone)]
pub struct FullSystem {
    n: usize,
    gamma: f64,
    /// `K = H - (i/2) L` as sparse entries.
    k: Vec<(usize, usize, Complex64)>,
}

impl FullSystem {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let n = params.n();
        check_capacity(n)?;
        let gamma = params.gamma();
        let k = pair_operators(n, gamma)
            .into_iter()
            .map(|(r, c, l, h)| (r, c, Complex64::new(params.ddd() * h, -0.5 * l)))
            .collect();
        Ok(Self { n, gamma, k })
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let d = 1usize << self.n;
        out.fill(Complex64::new(0.0, 0.0));
        let i = Complex64::new(0.0, 1.0);
        for &(r, c, v) in &self.k {
            // -i K rho + i rho K^dagger
            for b in 0..d {
                out[(r, b)] -= i * v * rho[(c, b)];
                out[(b, r)] += i * rho[(b, c)] * v.conj();
            }
        }
        for jj in 0..self.n {
            for ii in 0..self.n {
                let g = if ii == jj { 1.0 } else { self.gamma };
                if g == 0.0 {
                    continue;
                }
                let (mj, mi) = (1usize << jj, 1usize << ii);
                for b in (0..d).filter(|b| b & mi == 0) {
                    for a in (0..d).filter(|a| a & mj == 0) {
                        out[(a, b)] += g * rho[(a | mj, b | mi)];
                    }
                }
            }
        }
    }
}

impl OdeSystem for FullSystem {
    fn dim(&self) -> usize {
        2 << (2 * self.n)
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let rho = FullState::from_flat(self.n, y).expect("dimension fixed by the system");
        let mut out = DMatrix::zeros(rho.dim(), rho.dim());
        self.apply(&rho.rho, &mut out);
        dy.copy_from_slice(
            &FullState {
                n: self.n,
                rho: out,
            }
            .to_flat(),
        );
    }
}

/// Time derivative of a full-space state.
pub fn full_rhs(state: &FullState, params: &SystemParams) -> Result<FullState> {
    check_params(state.n, params)?;
    let sys = FullSystem::new(params)?;
    let mut out = DMatrix::zeros(state.dim(), state.dim());
    sys.apply(&state.rho, &mut out);
    Ok(FullState {
        n: state.n,
        rho: out,
    })
}

/// Integrate in the full space and sample at the strictly increasing `grid` (starting at 0).
pub fn evolve_full(
    params: &SystemParams,
    state0: &FullState,
    tol: Tolerances,
    grid: &[f64],
) -> Result<Vec<FullState>> {
    check_params(state0.n, params)?;
    if grid.first() != Some(&0.0) {
        return domain("sample grid must start at t = 0");
    }
    let sys = FullSystem::new(params)?;
    solve_on_grid(&sys, &state0.to_flat(), grid, tol)?
        .iter()
        .map(|y| FullState::from_flat(state0.n, y))
        .collect()
}

/// Eigenvalues of the Kossakowski matrix (`1` on the diagonal, `gamma` off it):
/// the collective rate with multiplicity 1 and the remaining rate with its multiplicity.
pub fn kossakowski_spectrum(n: usize, gamma: f64) -> Result<(f64, f64, usize)> {
    SystemParams::from_gamma(n, gamma, 0.0)?;
    let k = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { gamma });
    let uniform = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let collective = (uniform.transpose() * &k * &uniform)[(0, 0)];
    let mut eig: Vec<f64> = SymmetricEigen::new(k).eigenvalues.iter().copied().collect();
    let pos = eig
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - collective)
                .abs()
                .total_cmp(&(b.1 - collective).abs())
        })
        .map(|(i, _)| i)
        .expect("n >= 1");
    eig.remove(pos);
    let rest = if eig.is_empty() {
        1.0 - gamma
    } else {
        eig.iter().sum::<f64>() / eig.len() as f64
    };
    Ok((collective, rest, eig.len()))
}

/// The dissipator written with the diagonalised Kossakowski matrix: the
/// collective jump `J- / sqrt(N)` and `N - 1` discrete-Fourier jumps.
pub fn lindblad_form_dissipator(state: &FullState, gamma: f64) -> Result<FullState> {
    let n = state.n;
    let (l1, l2, _) = kossakowski_spectrum(n, gamma)?;
    let d = state.dim();
    let lowering = |i: usize| -> DMatrix<Complex64> {
        DMatrix::from_fn(d, d, |r, c| {
            if c >> i & 1 == 1 && r == c ^ (1 << i) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let sigmas: Vec<_> = (0..n).map(lowering).collect();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..n {
        let mut f = DMatrix::zeros(d, d);
        for (j, s) in sigmas.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
            f += s * Complex64::from_polar(1.0 / (n as f64).sqrt(), phase);
        }
        let rate = if k == 0 { l1 } else { l2 };
        let fd = f.adjoint();
        let fdf = &fd * &f;
        out += (&f * &state.rho * &fd - (&fdf * &state.rho + &state.rho * &fdf).unscale(2.0))
            .scale(rate);
    }
    Ok(FullState { n, rho: out })
}

/// Largest entry-wise difference between the standard and Lindblad forms of
/// the dissipator, over every matrix unit `|a><b|`.
pub fn lindblad_form_defect(n: usize, gamma: f64) -> Result<f64> {
    let params = SystemParams::from_gamma(n, gamma, 0.0)?;
    let d = 1usize << n;
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let mut unit = FullState::zeros(n)?;
            unit.rho[(a, b)] = Complex64::new(1.0, 0.0);
            let std_form = full_rhs(&unit, &params)?;
            let lindblad = lindblad_form_dissipator(&unit, gamma)?;
            worst = worst.max(max_abs(&(&std_form.rho - &lindblad.rho)));
        }
    }
    Ok(worst)
}

/// Largest violation of `P rho P^dagger = rho` over all transpositions.
pub fn permutation_defect(state: &FullState) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..state.n {
        for j in i + 1..state.n {
            let mut perm: Vec<usize> = (0..state.n).collect();
            perm.swap(i, j);
            let p = state.permuted(&perm).expect("valid transposition");
            worst = worst.max(max_abs(&(&p.rho - &state.rho)));
        }
    }
    worst
}

/// Tolerance of [`check_permutation_invariance`].
pub const PERMUTATION_TOL: f64 = 1e-10;

pub fn check_permutation_invariance(state: &FullState) -> bool {
    permutation_defect(state) < PERMUTATION_TOL
}

/// One `|J, M, path>` family: the coupling path fixes the multiplicity label.
#[derive(Debug, Clone)]
pub struct CoupledMultiplet {
    /// Doubled intermediate angular momenta after each added atom.
    pub path: Vec<u32>,
    /// Real basis vectors for `M = J, J-1, ..., -J`.
    pub vectors: Vec<DVector<f64>>,
}

/// Simultaneous eigenbasis of `J^2` and `J_z` built by adding one spin at a
/// time with Clebsch–Gordan coefficients; multiplets of each `J` are ordered
/// lexicographically by path.
#[derive(Debug, Clone)]
pub struct CoupledBasis {
    n: usize,
    sectors: Vec<(BlockIndex, Vec<CoupledMultiplet>)>,
}

impl CoupledBasis {
    pub fn new(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let up = DVector::from_column_slice(&[0.0, 1.0]);
        let down = DVector::from_column_slice(&[1.0, 0.0]);
        let mut multiplets = vec![CoupledMultiplet {
            path: vec![1],
            vectors: vec![up, down],
        }];
        for site in 1..n {
            let bit = 1usize << site;
            let mut next = Vec::new();
            for m in &multiplets {
                let tj1 = *m.path.last().expect("paths are nonempty") as i32;
                for tj in [tj1 - 1, tj1 + 1].into_iter().filter(|&t| t >= 0) {
                    let mut vectors = Vec::new();
                    for tm in BlockIndex::new(tj as u32).two_ms() {
                        let mut v = DVector::zeros(2 * bit);
                        // |j1, M - 1/2> |up> and |j1, M + 1/2> |down>
                        let denom = f64::from(tj1 + 1);
                        let cu = f64::from(tj1 + tm + 1) / 2.0 / denom;
                        let cd = f64::from(tj1 - tm + 1) / 2.0 / denom;
                        let (wu, wd) = if tj > tj1 {
                            (cu.sqrt(), cd.sqrt())
                        } else {
                            (-cd.sqrt(), cu.sqrt())
                        };
                        let from = |t: i32| -> Option<&DVector<f64>> {
                            BlockIndex::new(tj1 as u32).row_of(t).map(|r| &m.vectors[r])
                        };
                        if let Some(src) = from(tm - 1) {
                            for (a, x) in src.iter().enumerate() {
                                v[a | bit] += wu * x;
                            }
                        }
                        if let Some(src) = from(tm + 1) {
                            for (a, x) in src.iter().enumerate() {
                                v[a] += wd * x;
                            }
                        }
                        vectors.push(v);
                    }
                    let mut path = m.path.clone();
                    path.push(tj as u32);
                    next.push(CoupledMultiplet { path, vectors });
                }
            }
            multiplets = next;
        }
        multiplets.sort_by(|a, b| a.path.cmp(&b.path));
        let sectors = block_list(n)
            .into_iter()
            .map(|block| {
                let ms = multiplets
                    .iter()
                    .filter(|m| *m.path.last().expect("nonempty") == block.two_j)
                    .cloned()
                    .collect();
                (block, ms)
            })
            .collect();
        Ok(Self { n, sectors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Multiplets of the block `2J`, in path order.
    pub fn multiplets(&self, two_j: u32) -> Option<&[CoupledMultiplet]> {
        self.sectors
            .iter()
            .find(|(b, _)| b.two_j == two_j)
            .map(|(_, m)| m.as_slice())
    }

    /// All basis vectors as columns of an orthogonal matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self
            .sectors
            .iter()
            .flat_map(|(_, ms)| ms.iter().flat_map(|m| m.vectors.iter().cloned()))
            .collect();
        DMatrix::from_columns(&cols)
    }
}

/// `rho = sum_J sum_k sum_{M,M'} rho_J^{M,M'} |J,M,k><J,M',k|`.
pub fn embed(state: &PIState) -> Result<FullState> {
    let basis = CoupledBasis::new(state.n())?;
    let mut full = FullState::zeros(state.n())?;
    for (block, ms) in &basis.sectors {
        let rho = state.block(block.two_j).expect("same block list");
        for m in ms {
            for (a, va) in m.vectors.iter().enumerate() {
                for (b, vb) in m.vectors.iter().enumerate() {
                    let z = rho[(a, b)];
                    if z != Complex64::new(0.0, 0.0) {
                        full.rho += (va * vb.transpose()).map(|x| z * x);
                    }
                }
            }
        }
    }
    Ok(full)
}

/// Tolerance on the agreement of the multiplicity copies in [`project_to_pi`].
pub const PROJECTION_TOL: f64 = 1e-9;

/// Read `rho_J^{M,M'}` from the first multiplet of each block and check that
/// every other multiplet carries the same block and that no coherence links
/// different multiplets.
pub fn project_to_pi(full: &FullState) -> Result<PIState> {
    let basis = CoupledBasis::new(full.n)?;
    let u = basis.matrix().map(|x| Complex64::new(x, 0.0));
    let coupled = u.transpose() * &full.rho * &u;
    // multiplet label of each column of `u`
    let owner: Vec<usize> = basis
        .sectors
        .iter()
        .flat_map(|(_, ms)| ms.iter().map(|m| m.vectors.len()))
        .enumerate()
        .flat_map(|(k, len)| std::iter::repeat_n(k, len))
        .collect();
    for (a, &oa) in owner.iter().enumerate() {
        for (b, &ob) in owner.iter().enumerate() {
            let z = coupled[(a, b)].norm();
            if oa != ob && z > PROJECTION_TOL {
                return Err(Error::NotPermutationInvariant(format!(
                    "coherence {z:e} between different multiplets"
                )));
            }
        }
    }
    let mut blocks = Vec::new();
    for (block, ms) in &basis.sectors {
        let dim = block.dim();
        let read = |m: &CoupledMultiplet| -> DMatrix<Complex64> {
            let v = DMatrix::from_columns(&m.vectors).map(|x| Complex64::new(x, 0.0));
            v.transpose() * &full.rho * v
        };
        let first = read(&ms[0]);
        for (k, m) in ms.iter().enumerate().skip(1) {
            let diff = max_abs(&(read(m) - &first));
            if diff > PROJECTION_TOL {
                return Err(Error::NotPermutationInvariant(format!(
                    "block 2J = {} copy {k} differs from copy 0 by {diff:e}",
                    block.two_j
                )));
            }
        }
        debug_assert_eq!(first.nrows(), dim);
        blocks.push(first);
    }
    PIState::from_blocks(full.n, blocks)
}

/// Settings of an oracle comparison run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tol: Tolerances,
    pub t_end: f64,
    pub samples: usize,
    /// Pass threshold on the largest absolute deviation of `I` and `<J_z>`.
    pub threshold: f64,
    /// `Delta_dd` is drawn uniformly from `[-max_ddd, max_ddd]`.
    pub max_ddd: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::new(1e-10, 1e-12),
            t_end: 8.0,
            samples: 50,
            threshold: 1e-6,
            max_ddd: 2.0,
        }
    }
}

/// Outcome of one oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub n: usize,
    pub seed: u64,
    pub gamma: f64,
    pub dgamma: f64,
    pub ddd: f64,
    pub two_j0: u32,
    pub two_m0: i32,
    pub max_abs_err_i: f64,
    pub max_abs_err_jz: f64,
    pub pass: bool,
}

/// Random Markov-valid parameters and a random Dicke start, reproducible from `seed`.
pub fn random_case(n: usize, seed: u64, max_ddd: f64) -> Result<(SystemParams, u32, i32)> {
    check_capacity(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32));
    let max_dg = if n > 1 {
        n as f64 / (n as f64 - 1.0)
    } else {
        1.0
    };
    let dgamma = rng.gen_range(0.0..=max_dg);
    let ddd = if max_ddd > 0.0 {
        rng.gen_range(-max_ddd..=max_ddd)
    } else {
        0.0
    };
    let blocks = block_list(n);
    let block = blocks[rng.gen_range(0..blocks.len())];
    let two_m0 = block
        .two_ms()
        .nth(rng.gen_range(0..block.dim()))
        .expect("row in range");
    Ok((SystemParams::new(n, dgamma, ddd)?, block.two_j, two_m0))
}

/// Largest deviations of `I(t)` and `<J_z>(t)` between the full-space and
/// permutation-invariant evolutions of the same initial state.
pub fn compare(
    params: &SystemParams,
    initial: &PIState,
    opts: &OracleOptions,
) -> Result<(f64, f64)> {
    let grid = linspace(0.0, opts.t_end, opts.samples.max(2) - 1);
    let full = evolve_full(params, &embed(initial)?, opts.tol, &grid)?;
    let pi = evolve(params, initial, opts.t_end, opts.tol, &grid)?;
    let (mut err_i, mut err_jz) = (0.0f64, 0.0f64);
    for (f, (_, p)) in full.iter().zip(&pi.samples) {
        err_i = err_i.max((f.intensity(params)? - crate::dynamics::intensity(p, params)?).abs());
        err_jz = err_jz.max((f.expect_jz() - p.expect_jz()).abs());
    }
    Ok((err_i, err_jz))
}

pub fn oracle_case(n: usize, seed: u64, opts: &OracleOptions) -> Result<OracleRow> {
    let (params, two_j0, two_m0) = random_case(n, seed, opts.max_ddd)?;
    let initial = PIState::dicke(n, two_j0, two_m0)?;
    let (err_i, err_jz) = compare(&params, &initial, opts)?;
    Ok(OracleRow {
        n,
        seed,
        gamma: params.gamma(),
        dgamma: params.dgamma(),
        ddd: params.ddd(),
        two_j0,
        two_m0,
        max_abs_err_i: err_i,
        max_abs_err_jz: err_jz,
        pass: err_i < opts.threshold && err_jz < opts.threshold,
    })
}

/// Every `(N, seed)` combination, in parallel on the current rayon pool.
pub fn run_oracle(ns: &[usize], seeds: &[u64], opts: &OracleOptions) -> Result<Vec<OracleRow>> {
    for &n in ns {
        check_capacity(n)?;
    }
    let cases: Vec<(usize, u64)> = ns
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    cases
        .par_iter()
        .map(|&(n, s)| oracle_case(n, s, opts))
        .collect()
}

/// Oracle report CSV: `N,seed,gamma,dgamma,ddd,max_abs_err_I,max_abs_err_Jz,pass`.
pub fn write_oracle_csv<W: Write>(writer: W, rows: &[OracleRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "N",
        "seed",
        "gamma",
        "dgamma",
        "ddd",
        "max_abs_err_I",
        "max_abs_err_Jz",
        "pass",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.seed.to_string(),
            fmt_f64(r.gamma),
            fmt_f64(r.dgamma),
            fmt_f64(r.ddd),
            fmt_f64(r.max_abs_err_i),
            fmt_f64(r.max_abs_err_jz),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
