//! Adaptive Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! State vectors are flat `f64` slices; complex systems interleave real and
//! imaginary parts.

use crate::error::{Error, Result};

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub h_max: f64,
    /// Hard cap on accepted plus rejected steps per `advance` call sequence.
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if !(self.h_max > 0.0) {
            return Err(Error::Domain("maximum step must be positive".into()));
        }
        Ok(())
    }
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output (Hairer & Wanner, contd5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Step-by-step driver. After each successful [`Stepper::advance`] the last
/// accepted step `[t_prev, t]` can be sampled with [`Stepper::interpolate`].
pub struct Stepper<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    tol: Tolerances,
    t: f64,
    t_prev: f64,
    h: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    cont: [Vec<f64>; 5],
    steps: usize,
    rejected: usize,
    last_rejected: bool,
}

impl<'a, S: OdeSystem + ?Sized> Stepper<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::Domain(format!(
                "initial state has length {} but the system has dimension {n}",
                y0.len()
            )));
        }
        let z = || vec![0.0; n];
        let mut s = Self {
            sys,
            tol,
            t: t0,
            t_prev: t0,
            h: 0.0,
            y: y0.to_vec(),
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            cont: [y0.to_vec(), z(), z(), z(), z()],
            steps: 0,
            rejected: 0,
            last_rejected: false,
        };
        sys.rhs(t0, &s.y, &mut s.k[0]);
        s.h = s.initial_step();
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Derivative at the current time (first stage of the next step).
    pub fn dy(&self) -> &[f64] {
        &self.k[0]
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (y, f) in self.y.iter().zip(&self.k[0]) {
            let sk = self.tol.atol + self.tol.rtol * y.abs();
            d0 += (y / sk).powi(2);
            d1 += (f / sk).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.tol.h_max);
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + h0 * self.k[0][i];
        }
        self.sys.rhs(self.t + h0, &self.ytmp, &mut self.k[1]);
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.tol.atol + self.tol.rtol * self.y[i].abs();
            d2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / m).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(self.tol.h_max)
    }

    /// Take one accepted step, never stepping past `t_limit`.
    pub fn advance(&mut self, t_limit: f64) -> Result<()> {
        if t_limit <= self.t {
            return Err(Error::Domain(format!(
                "cannot advance from t = {} to t = {t_limit}",
                self.t
            )));
        }
        let n = self.y.len();
        loop {
            if self.steps + self.rejected >= self.tol.max_steps {
                return Err(Error::Integration {
                    t: self.t,
                    reason: format!("step budget of {} exhausted", self.tol.max_steps),
                });
            }
            let mut h = self.h.min(self.tol.h_max);
            let last =
                self.t + h >= t_limit || (t_limit - self.t - h).abs() <= 1e-12 * t_limit.abs();
            if last {
                h = t_limit - self.t;
            }
            if h.abs() <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::Integration {
                    t: self.t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let t = self.t;
            let y = &self.y;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let ytmp = &mut self.ytmp;
            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            self.sys.rhs(t + C2 * h, ytmp, k2);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            self.sys.rhs(t + C3 * h, ytmp, k3);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            self.sys.rhs(t + C4 * h, ytmp, k4);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            self.sys.rhs(t + C5 * h, ytmp, k5);
            for i in 0..n {
                ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            self.sys.rhs(t + h, ytmp, k6);
            let ynew = &mut self.ynew;
            for i in 0..n {
                ynew[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            self.sys.rhs(t + h, ynew, k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = self.tol.atol + self.tol.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sk).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                self.rejected += 1;
                self.h = h * FAC_MIN;
                continue;
            }
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            if err <= 1.0 {
                let [c1, c2, c3, c4, c5] = &mut self.cont;
                for i in 0..n {
                    let dy = ynew[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    c1[i] = y[i];
                    c2[i] = dy;
                    c3[i] = bspl;
                    c4[i] = dy - h * k7[i] - bspl;
                    c5[i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.k.swap(0, 6);
                self.t_prev = t;
                self.t = if last { t_limit } else { t + h };
                self.steps += 1;
                // after a rejection do not grow the step immediately
                self.h = h * if self.last_rejected {
                    fac.min(1.0)
                } else {
                    fac
                };
                self.last_rejected = false;
                return Ok(());
            }
            self.rejected += 1;
            self.last_rejected = true;
            self.h = h * fac.min(1.0);
        }
    }

    /// Evaluate the continuous extension of the last accepted step at `t`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t - self.t_prev;
        let theta = if h > 0.0 { (t - self.t_prev) / h } else { 1.0 };
        let theta1 = 1.0 - theta;
        let [c1, c2, c3, c4, c5] = &self.cont;
        for i in 0..out.len() {
            out[i] = c1[i] + theta * (c2[i] + theta1 * (c3[i] + theta * (c4[i] + theta1 * c5[i])));
        }
    }

    /// Integrate to `t_end`, stopping exactly at every time in `grid` (ascending,
    /// within `[t, t_end]`) and handing the interpolated state to `sample`.
    pub fn run_to(
        &mut self,
        t_end: f64,
        grid: &[f64],
        mut sample: impl FnMut(f64, &[f64]),
    ) -> Result<()> {
        let mut buf = vec![0.0; self.y.len()];
        let mut next = 0;
        while next < grid.len() && grid[next] <= self.t {
            if grid[next] == self.t {
                sample(self.t, &self.y);
            }
            next += 1;
        }
        while self.t < t_end {
            self.advance(t_end)?;
            while next < grid.len() && grid[next] <= self.t {
                if grid[next] == self.t {
                    sample(self.t, &self.y);
                } else {
                    self.interpolate(grid[next], &mut buf);
                    sample(grid[next], &buf);
                }
                next += 1;
            }
        }
        Ok(())
    }
}

/// Integrate from `t0 = grid[0]` and return the state at each grid time.
pub fn solve_on_grid<S: OdeSystem + ?Sized>(
    sys: &S,
    y0: &[f64],
    grid: &[f64],
    tol: Tolerances,
) -> Result<Vec<Vec<f64>>> {
    let Some((&t0, _)) = grid.split_first() else {
        return Ok(Vec::new());
    };
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "sample grid must be strictly increasing".into(),
        ));
    }
    let t_end = *grid.last().unwrap();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.to_vec());
    if grid.len() == 1 {
        return Ok(out);
    }
    let mut stepper = Stepper::new(sys, t0, y0, tol)?;
    stepper.run_to(t_end, &grid[1..], |_, y| out.push(y.to_vec()))?;
    Ok(out)
}
