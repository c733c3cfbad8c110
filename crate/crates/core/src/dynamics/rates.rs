use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::ode::OdeSystem;
use crate::spin::{alpha_f64, block_list, ladder_coefficients, multiplicity_f64, BlockIndex};
use crate::state::{PIState, Populations};

use super::SystemParams;

/// Coefficients of one block, indexed by the *destination* entry `(a, b)`
/// with `a = J - M`, `b = J - M'`.
#[derive(Debug, Clone)]
struct BlockRates {
    block: BlockIndex,
    /// offset of the block in the flat complex layout
    offset: usize,
    /// offset of the block diagonal in the flat population layout
    pop_offset: usize,
    decay: Vec<Complex64>,
    within: Vec<f64>,
    from_above: Vec<f64>,
    from_below: Vec<f64>,
}

/// Precomputed rates of the projected master equation
///
/// `d rho_J^{M,M'}/dt = -G1 rho_J^{M,M'} + G2 rho_J^{M+1,M'+1}
///                      + G3 rho_{J+1}^{M+1,M'+1} + G4 rho_{J-1}^{M+1,M'+1}`.
///
/// Immutable once built; share it freely between threads.
#[derive(Debug, Clone)]
pub struct RateTable {
    params: SystemParams,
    blocks: Vec<BlockRates>,
    complex_len: usize,
    pop_len: usize,
}

impl RateTable {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let n = params.n();
        let gamma = params.gamma();
        let dgamma = params.dgamma();
        let ddd = params.ddd();
        let nf = n as f64;
        let list = block_list(n);
        let mut blocks = Vec::with_capacity(list.len());
        let (mut offset, mut pop_offset) = (0, 0);
        for &block in &list {
            let tj = block.two_j as i32;
            let j = block.j();
            let dim = block.dim();
            let d_j = multiplicity_f64(n, block.two_j)?;
            let alpha_j = alpha_f64(n, block.two_j)?;
            let alpha_up = alpha_f64(n, block.two_j + 2)?;
            let ms: Vec<i32> = block.two_ms().collect();
            let mut br = BlockRates {
                block,
                offset,
                pop_offset,
                decay: vec![Complex64::new(0.0, 0.0); dim * dim],
                within: vec![0.0; dim * dim],
                from_above: vec![0.0; dim * dim],
                from_below: vec![0.0; dim * dim],
            };
            // Bracket of the within-block feeding rate; the 1/(2J) term only
            // matters when some A+ prefactor is nonzero, which excludes J = 0.
            let within_bracket = if block.two_j == 0 {
                gamma
            } else {
                gamma + dgamma / (2.0 * j) * (1.0 + alpha_up * (2.0 * j + 1.0) / (d_j * (j + 1.0)))
            };
            for (a, &tm) in ms.iter().enumerate() {
                let lm = ladder_coefficients(tj, tm);
                for (b, &tmp) in ms.iter().enumerate() {
                    let lmp = ladder_coefficients(tj, tmp);
                    let (m, mp) = (f64::from(tm) / 2.0, f64::from(tmp) / 2.0);
                    let idx = a * dim + b;
                    br.decay[idx] = Complex64::new(
                        gamma / 2.0 * (lm.a_minus.powi(2) + lmp.a_minus.powi(2))
                            + dgamma / 2.0 * (nf + m + mp),
                        ddd * (mp * mp - m * m),
                    );
                    let prefactor = lm.a_plus * lmp.a_plus;
                    if prefactor != 0.0 {
                        br.within[idx] = prefactor * within_bracket;
                    }
                    if dgamma != 0.0 {
                        // source block J+1 at (M+1, M'+1)
                        if block.two_j as usize + 2 <= n {
                            let s = ladder_coefficients(tj + 2, tm + 2);
                            let sp = ladder_coefficients(tj + 2, tmp + 2);
                            let pre = s.b_minus * sp.b_minus;
                            if pre != 0.0 {
                                br.from_above[idx] =
                                    dgamma * pre * alpha_up / (2.0 * (j + 1.0) * d_j);
                            }
                        }
                        // source block J-1 at (M+1, M'+1)
                        if block.two_j >= 2 {
                            let s = ladder_coefficients(tj - 2, tm + 2);
                            let sp = ladder_coefficients(tj - 2, tmp + 2);
                            let pre = s.d_minus * sp.d_minus;
                            if pre != 0.0 {
                                br.from_below[idx] = dgamma * pre * alpha_j / (2.0 * j * d_j);
                            }
                        }
                    }
                }
            }
            offset += dim * dim;
            pop_offset += dim;
            blocks.push(br);
        }
        Ok(Self {
            params: *params,
            blocks,
            complex_len: offset,
            pop_len: pop_offset,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    fn locate(&self, two_j: u32, two_m: i32, two_mp: i32) -> Option<(&BlockRates, usize)> {
        let lo = (self.n() % 2) as u32;
        if two_j < lo || !(two_j - lo).is_multiple_of(2) {
            return None;
        }
        let br = self.blocks.get(((two_j - lo) / 2) as usize)?;
        let a = br.block.row_of(two_m)?;
        let b = br.block.row_of(two_mp)?;
        Some((br, a * br.block.dim() + b))
    }

    /// Decay rate `G1` of `rho_J^{M,M'}`.
    pub fn gamma1(&self, two_j: u32, two_m: i32, two_mp: i32) -> Option<Complex64> {
        self.locate(two_j, two_m, two_mp).map(|(br, i)| br.decay[i])
    }

    /// Coefficient `G2` of `rho_J^{M+1,M'+1}` in the equation for `rho_J^{M,M'}`.
    pub fn gamma2(&self, two_j: u32, two_m: i32, two_mp: i32) -> Option<f64> {
        self.locate(two_j, two_m, two_mp)
            .map(|(br, i)| br.within[i])
    }

    /// Coefficient `G3` of `rho_{J+1}^{M+1,M'+1}` in the equation for `rho_J^{M,M'}`.
    pub fn gamma3(&self, two_j: u32, two_m: i32, two_mp: i32) -> Option<f64> {
        self.locate(two_j, two_m, two_mp)
            .map(|(br, i)| br.from_above[i])
    }

    /// Coefficient `G4` of `rho_{J-1}^{M+1,M'+1}` in the equation for `rho_J^{M,M'}`.
    pub fn gamma4(&self, two_j: u32, two_m: i32, two_mp: i32) -> Option<f64> {
        self.locate(two_j, two_m, two_mp)
            .map(|(br, i)| br.from_below[i])
    }

    /// Length of the interleaved flat layout of [`PIState::to_flat`].
    pub fn flat_len(&self) -> usize {
        2 * self.complex_len
    }

    /// Length of the flat layout of [`Populations::to_flat`].
    pub fn populations_len(&self) -> usize {
        self.pop_len
    }

    /// Right-hand side on the interleaved flat layout.
    pub fn apply(&self, y: &[f64], dy: &mut [f64]) {
        debug_assert_eq!(y.len(), self.flat_len());
        let at = |k: usize| Complex64::new(y[2 * k], y[2 * k + 1]);
        for (bi, br) in self.blocks.iter().enumerate() {
            let d = br.block.dim();
            let above = self.blocks.get(bi + 1);
            let below = bi.checked_sub(1).map(|i| &self.blocks[i]);
            for a in 0..d {
                for b in 0..d {
                    let idx = a * d + b;
                    let mut v = -br.decay[idx] * at(br.offset + idx);
                    if a > 0 && b > 0 {
                        v += br.within[idx] * at(br.offset + (a - 1) * d + (b - 1));
                    }
                    if let Some(up) = above {
                        // same (a, b) in the (d+2)-dimensional block above
                        v += br.from_above[idx] * at(up.offset + a * (d + 2) + b);
                    }
                    if let Some(dn) = below {
                        if a >= 2 && b >= 2 && a - 2 < d - 2 && b - 2 < d - 2 {
                            v += br.from_below[idx] * at(dn.offset + (a - 2) * (d - 2) + (b - 2));
                        }
                    }
                    let k = br.offset + idx;
                    dy[2 * k] = v.re;
                    dy[2 * k + 1] = v.im;
                }
            }
        }
    }

    /// Right-hand side restricted to the population sector.
    pub fn apply_populations(&self, y: &[f64], dy: &mut [f64]) {
        debug_assert_eq!(y.len(), self.pop_len);
        for (bi, br) in self.blocks.iter().enumerate() {
            let d = br.block.dim();
            let above = self.blocks.get(bi + 1);
            let below = bi.checked_sub(1).map(|i| &self.blocks[i]);
            for a in 0..d {
                let idx = a * d + a;
                let mut v = -br.decay[idx].re * y[br.pop_offset + a];
                if a > 0 {
                    v += br.within[idx] * y[br.pop_offset + a - 1];
                }
                if let Some(up) = above {
                    v += br.from_above[idx] * y[up.pop_offset + a];
                }
                if let Some(dn) = below {
                    if a >= 2 && a - 2 < d - 2 {
                        v += br.from_below[idx] * y[dn.pop_offset + a - 2];
                    }
                }
                dy[br.pop_offset + a] = v;
            }
        }
    }

    /// `d rho / dt` for a full block state.
    pub fn rhs(&self, state: &PIState) -> Result<PIState> {
        if state.n() != self.n() {
            return domain(format!(
                "state has N = {} but the rate table was built for N = {}",
                state.n(),
                self.n()
            ));
        }
        let y = state.to_flat();
        let mut dy = vec![0.0; y.len()];
        self.apply(&y, &mut dy);
        PIState::from_flat(self.n(), &dy)
    }

    /// `d rho_J^{M,M} / dt` for the population sector.
    pub fn rhs_populations(&self, pops: &Populations) -> Result<Populations> {
        if pops.n() != self.n() {
            return domain(format!(
                "populations have N = {} but the rate table was built for N = {}",
                pops.n(),
                self.n()
            ));
        }
        let y = pops.to_flat();
        let mut dy = vec![0.0; y.len()];
        self.apply_populations(&y, &mut dy);
        Populations::from_flat(self.n(), &dy)
    }

    pub fn coherent_system(&self) -> CoherentSystem<'_> {
        CoherentSystem(self)
    }

    pub fn population_system(&self) -> PopulationSystem<'_> {
        PopulationSystem(self)
    }
}

/// All block entries as an ODE system.
pub struct CoherentSystem<'a>(&'a RateTable);

impl OdeSystem for CoherentSystem<'_> {
    fn dim(&self) -> usize {
        self.0.flat_len()
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.0.apply(y, dy)
    }
}

/// The population sector as a real ODE system.
pub struct PopulationSystem<'a>(&'a RateTable);

impl OdeSystem for PopulationSystem<'_> {
    fn dim(&self) -> usize {
        self.0.populations_len()
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.0.apply_populations(y, dy)
    }
}
