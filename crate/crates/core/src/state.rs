//! Block-diagonal permutation-invariant density matrices.
//!
//! A block for angular momentum `J` stores `rho_J^{M,M'}` at row `a = J - M`,
//! column `b = J - M'`. The multiplicity `d_N^J` of identical copies of each
//! block is *not* folded into the entries; observables weight by it.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::spin::{block_list, multiplicity, multiplicity_f64, BlockIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct PIState {
    n: usize,
    blocks: Vec<DMatrix<Complex64>>,
}

/// Degeneracy weights `d_N^J` for every block of `n` atoms, in block order.
pub(crate) fn degeneracies(n: usize) -> Vec<f64> {
    block_list(n)
        .iter()
        .map(|b| multiplicity_f64(n, b.two_j).expect("listed blocks are valid"))
        .collect()
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        domain("atom number must be positive")
    } else {
        Ok(())
    }
}

impl PIState {
    /// The all-zero state (trace 0).
    pub fn zeros(n: usize) -> Result<Self> {
        check_n(n)?;
        let blocks = block_list(n)
            .into_iter()
            .map(|b| DMatrix::zeros(b.dim(), b.dim()))
            .collect();
        Ok(Self { n, blocks })
    }

    /// Uniform mixture over the multiplicity label of the Dicke state `|J0, M0>`.
    pub fn dicke(n: usize, two_j0: u32, two_m0: i32) -> Result<Self> {
        let d = multiplicity(n, two_j0)?;
        let block = BlockIndex::new(two_j0);
        let Some(row) = block.row_of(two_m0) else {
            return domain(format!(
                "2M = {two_m0} is not a magnetic number of 2J = {two_j0}"
            ));
        };
        let mut s = Self::zeros(n)?;
        let d = num_traits::ToPrimitive::to_f64(&d).unwrap_or(f64::INFINITY);
        let bi = s.block_position(two_j0).expect("validated above");
        s.blocks[bi][(row, row)] = Complex64::new(1.0 / d, 0.0);
        Ok(s)
    }

    /// `|e, e, ..., e>`, the top state of the symmetric block.
    pub fn fully_excited(n: usize) -> Result<Self> {
        Self::dicke(n, n as u32, n as i32)
    }

    /// `|g, g, ..., g>`.
    pub fn ground(n: usize) -> Result<Self> {
        Self::dicke(n, n as u32, -(n as i32))
    }

    /// Build from explicit blocks (ascending `J`). Shapes are checked; Hermiticity is not.
    pub fn from_blocks(n: usize, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        check_n(n)?;
        let list = block_list(n);
        if blocks.len() != list.len() {
            return domain(format!(
                "N = {n} needs {} blocks, got {}",
                list.len(),
                blocks.len()
            ));
        }
        for (b, m) in list.iter().zip(&blocks) {
            if m.nrows() != b.dim() || m.ncols() != b.dim() {
                return domain(format!(
                    "block 2J = {} must be {0}x{0}, got {}x{}",
                    b.dim(),
                    m.nrows(),
                    m.ncols()
                ));
            }
        }
        Ok(Self { n, blocks })
    }

    /// Random positive semidefinite state of unit trace: each block is
    /// `A A^dagger` for a complex matrix `A` with uniform entries in `[-1, 1]`.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        for m in &mut s.blocks {
            let d = m.nrows();
            let a = DMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
            });
            *m = &a * a.adjoint();
        }
        let tr = s.trace();
        for m in &mut s.blocks {
            *m /= Complex64::new(tr, 0.0);
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_indices(&self) -> Vec<BlockIndex> {
        block_list(self.n)
    }

    /// Position of block `2J` in storage order.
    pub fn block_position(&self, two_j: u32) -> Option<usize> {
        let lo = (self.n % 2) as u32;
        if two_j < lo || two_j as usize > self.n || !(two_j - lo).is_multiple_of(2) {
            None
        } else {
            Some(((two_j - lo) / 2) as usize)
        }
    }

    pub fn block(&self, two_j: u32) -> Option<&DMatrix<Complex64>> {
        self.block_position(two_j).map(|i| &self.blocks[i])
    }

    pub fn block_mut(&mut self, two_j: u32) -> Option<&mut DMatrix<Complex64>> {
        self.block_position(two_j).map(move |i| &mut self.blocks[i])
    }

    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    /// `rho_J^{M,M'}`, or `None` outside the block structure.
    pub fn get(&self, two_j: u32, two_m: i32, two_mp: i32) -> Option<Complex64> {
        let b = BlockIndex::new(two_j);
        let (a, c) = (b.row_of(two_m)?, b.row_of(two_mp)?);
        self.block(two_j).map(|m| m[(a, c)])
    }

    pub fn set(&mut self, two_j: u32, two_m: i32, two_mp: i32, value: Complex64) -> Result<()> {
        let b = BlockIndex::new(two_j);
        let (Some(a), Some(c)) = (b.row_of(two_m), b.row_of(two_mp)) else {
            return domain(format!(
                "(2M, 2M') = ({two_m}, {two_mp}) outside block 2J = {two_j}"
            ));
        };
        match self.block_mut(two_j) {
            Some(m) => {
                m[(a, c)] = value;
                Ok(())
            }
            None => domain(format!("no block 2J = {two_j} for N = {}", self.n)),
        }
    }

    /// `sum_J d_N^J sum_M Re rho_J^{M,M}`.
    pub fn trace(&self) -> f64 {
        self.populations_vec().trace()
    }

    /// `<J_z> = sum_J d_N^J sum_M M rho_J^{M,M}`.
    pub fn expect_jz(&self) -> f64 {
        self.populations_vec().expect_jz()
    }

    /// Diagonal entries as `(2J, 2M, value)`, `J` ascending then `M` descending.
    pub fn populations(&self) -> Vec<(u32, i32, f64)> {
        let mut out = Vec::new();
        for (b, m) in block_list(self.n).into_iter().zip(&self.blocks) {
            for (a, two_m) in b.two_ms().enumerate() {
                out.push((b.two_j, two_m, m[(a, a)].re));
            }
        }
        out
    }

    /// The decoupled population sector of this state.
    pub fn populations_vec(&self) -> Populations {
        let values = self
            .blocks
            .iter()
            .map(|m| (0..m.nrows()).map(|a| m[(a, a)].re).collect())
            .collect();
        Populations { n: self.n, values }
    }

    /// Largest `|rho - rho^dagger|` entry over all blocks.
    pub fn hermiticity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| {
                (m - m.adjoint())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest off-diagonal magnitude.
    pub fn max_coherence(&self) -> f64 {
        let mut best: f64 = 0.0;
        for m in &self.blocks {
            for a in 0..m.nrows() {
                for b in 0..m.ncols() {
                    if a != b {
                        best = best.max(m[(a, b)].norm());
                    }
                }
            }
        }
        best
    }

    /// Number of complex entries across all blocks.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interleaved `(re, im)` pairs, blocks in order, each block row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.len());
        for m in &self.blocks {
            for a in 0..m.nrows() {
                for b in 0..m.ncols() {
                    let z = m[(a, b)];
                    out.push(z.re);
                    out.push(z.im);
                }
            }
        }
        out
    }

    pub fn from_flat(n: usize, flat: &[f64]) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        if flat.len() != 2 * s.len() {
            return domain(format!(
                "flat state of length {} does not match N = {n} (expected {})",
                flat.len(),
                2 * s.len()
            ));
        }
        let mut it = flat.chunks_exact(2);
        for m in &mut s.blocks {
            let d = m.nrows();
            for a in 0..d {
                for b in 0..d {
                    let p = it.next().expect("length checked");
                    m[(a, b)] = Complex64::new(p[0], p[1]);
                }
            }
        }
        Ok(s)
    }

    /// Snapshot as CSV records `twoJ,twoM,twoMp,re,im` (every stored entry).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["twoJ", "twoM", "twoMp", "re", "im"])?;
        for (b, m) in block_list(self.n).into_iter().zip(&self.blocks) {
            for (a, two_m) in b.two_ms().enumerate() {
                for (c, two_mp) in b.two_ms().enumerate() {
                    let z = m[(a, c)];
                    w.write_record([
                        b.two_j.to_string(),
                        two_m.to_string(),
                        two_mp.to_string(),
                        fmt_f64(z.re),
                        fmt_f64(z.im),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Read a snapshot written by [`PIState::write_csv`]. Missing entries are zero.
    pub fn read_csv<R: Read>(n: usize, reader: R) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        let mut r = csv::Reader::from_reader(reader);
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Parse(format!(
                    "expected 5 columns, got {}",
                    rec.len()
                )));
            }
            let int = |i: usize| -> Result<i64> {
                rec[i]
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("column {i}: {e}")))
            };
            let float = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("column {i}: {e}")))
            };
            let two_j = u32::try_from(int(0)?).map_err(|e| Error::Parse(e.to_string()))?;
            let z = Complex64::new(float(3)?, float(4)?);
            s.set(two_j, int(1)? as i32, int(2)? as i32, z)?;
        }
        Ok(s)
    }
}

/// 17 significant digits, the shortest format that round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Population sector `rho_J^{M,M}` of a permutation-invariant state.
///
/// Populations evolve independently of the coherences, so this is the
/// whole state needed for the radiated energy rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    n: usize,
    /// One vector per block (ascending `J`), indexed by `a = J - M`.
    values: Vec<Vec<f64>>,
}

impl Populations {
    pub fn zeros(n: usize) -> Result<Self> {
        check_n(n)?;
        let values = block_list(n).iter().map(|b| vec![0.0; b.dim()]).collect();
        Ok(Self { n, values })
    }

    pub fn dicke(n: usize, two_j0: u32, two_m0: i32) -> Result<Self> {
        Ok(PIState::dicke(n, two_j0, two_m0)?.populations_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, two_j: u32, two_m: i32) -> Option<f64> {
        let lo = (self.n % 2) as u32;
        if two_j < lo || !(two_j - lo).is_multiple_of(2) {
            return None;
        }
        let row = BlockIndex::new(two_j).row_of(two_m)?;
        self.values.get(((two_j - lo) / 2) as usize).map(|v| v[row])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn from_flat(n: usize, flat: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(n)?;
        let total: usize = p.values.iter().map(Vec::len).sum();
        if flat.len() != total {
            return domain(format!(
                "flat populations of length {} do not match N = {n} (expected {total})",
                flat.len()
            ));
        }
        let mut off = 0;
        for v in &mut p.values {
            let d = v.len();
            v.copy_from_slice(&flat[off..off + d]);
            off += d;
        }
        Ok(p)
    }

    /// Degeneracy-weighted sum `sum_J d_N^J sum_M w(J, M) rho_J^{M,M}`.
    pub fn weighted_sum(&self, mut weight: impl FnMut(BlockIndex, i32) -> f64) -> f64 {
        let degs = degeneracies(self.n);
        let mut acc = 0.0;
        for ((b, v), d) in block_list(self.n).into_iter().zip(&self.values).zip(degs) {
            let inner: f64 = b.two_ms().zip(v).map(|(tm, p)| weight(b, tm) * p).sum();
            acc += d * inner;
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        self.weighted_sum(|_, _| 1.0)
    }

    pub fn expect_jz(&self) -> f64 {
        self.weighted_sum(|_, two_m| f64::from(two_m) / 2.0)
    }

    /// Column labels `p_J{2J}_M{2M}` in storage order.
    pub fn labels(&self) -> Vec<String> {
        block_list(self.n)
            .into_iter()
            .flat_map(|b| b.two_ms().map(move |tm| format!("p_J{}_M{}", b.two_j, tm)))
            .collect()
    }
}
