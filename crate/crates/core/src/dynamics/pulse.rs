use std::io::Write;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::ode::{Stepper, Tolerances};
use crate::state::{fmt_f64, PIState, Populations};

use super::{
    intensity_coefficient, intensity_derivative_coefficient, weighted_coefficients, RateTable,
    SystemParams,
};

/// Shape of the superradiant pulse along one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseMetrics {
    /// Pulse height above the initial rate, `max_t I(t) - I(0)`, floored at 0.
    pub height: f64,
    /// Time of the maximum; 0 when there is no pulse.
    pub delay: f64,
    /// `\int I dt` over the integration horizon.
    pub emitted: f64,
    /// Initial rate `I(0)`.
    pub initial_rate: f64,
    /// Final integration time.
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseOptions {
    pub tol: Tolerances,
    /// Minimum integration horizon.
    pub horizon: f64,
    /// Keep integrating past `horizon` until `I < tail * N`.
    pub tail: f64,
    /// Give up if the tail condition is not met by this time.
    pub max_horizon: f64,
    /// Absolute time resolution of the located maximum.
    pub time_resolution: f64,
    /// A pulse exists when its height exceeds `threshold * N^2`.
    pub threshold: f64,
}

impl Default for PulseOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            horizon: 10.0,
            tail: 1e-8,
            max_horizon: 1e6,
            time_resolution: 1e-6,
            threshold: 1e-9,
        }
    }
}

impl PulseOptions {
    fn validate(&self) -> Result<()> {
        self.tol.validate()?;
        if !(self.horizon > 0.0 && self.max_horizon >= self.horizon) {
            return domain("pulse horizon must be positive and below the maximum horizon");
        }
        if !(self.time_resolution > 0.0 && self.tail > 0.0 && self.threshold >= 0.0) {
            return domain("pulse resolution, tail and threshold must be positive");
        }
        Ok(())
    }
}

// 5-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pulse metrics for a trajectory starting from `initial`.
///
/// Only the populations of `initial` matter: the radiated energy rate never
/// sees the coherences.
pub fn pulse_metrics(
    params: &SystemParams,
    initial: &PIState,
    opts: &PulseOptions,
) -> Result<PulseMetrics> {
    let table = RateTable::new(params)?;
    pulse_metrics_with_table(&table, &initial.populations_vec(), opts)
}

pub fn pulse_metrics_with_table(
    table: &RateTable,
    initial: &Populations,
    opts: &PulseOptions,
) -> Result<PulseMetrics> {
    opts.validate()?;
    if initial.n() != table.n() {
        return domain(format!(
            "populations have N = {} but the rate table was built for N = {}",
            initial.n(),
            table.n()
        ));
    }
    let params = *table.params();
    let n = params.n() as f64;
    let c = weighted_coefficients(&params, intensity_coefficient);
    let c_dot = weighted_coefficients(&params, intensity_derivative_coefficient);
    let sys = table.population_system();
    let y0 = initial.to_flat();
    let mut stepper = Stepper::new(&sys, 0.0, &y0, opts.tol)?;

    let i0 = dot(&c, &y0);
    let mut best = (i0, 0.0);
    let mut emitted = 0.0;
    let mut prev_rate_slope = dot(&c_dot, &y0);
    let mut buf = vec![0.0; y0.len()];
    let tail = opts.tail * n;

    loop {
        stepper.advance(opts.max_horizon)?;
        let (ta, tb) = (stepper.t_prev(), stepper.t());
        let half = 0.5 * (tb - ta);
        let mid = 0.5 * (tb + ta);
        for (x, w) in GL_X.iter().zip(GL_W) {
            stepper.interpolate(mid + half * x, &mut buf);
            emitted += w * half * dot(&c, &buf);
        }
        let rate = dot(&c, stepper.y());
        let slope = dot(&c_dot, stepper.y());
        if rate > best.0 {
            best = (rate, tb);
        }
        if prev_rate_slope > 0.0 && slope <= 0.0 {
            // maximum inside [ta, tb]: bisect on the sign of dI/dt
            let (mut lo, mut hi) = (ta, tb);
            while hi - lo > opts.time_resolution {
                let m = 0.5 * (lo + hi);
                stepper.interpolate(m, &mut buf);
                if dot(&c_dot, &buf) > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let t_star = 0.5 * (lo + hi);
            stepper.interpolate(t_star, &mut buf);
            let r = dot(&c, &buf);
            if r > best.0 {
                best = (r, t_star);
            }
        }
        prev_rate_slope = slope;
        if tb >= opts.horizon && rate.abs() < tail {
            break;
        }
        if tb >= opts.max_horizon {
            return Err(Error::Integration {
                t: tb,
                reason: format!(
                    "radiated rate {rate:e} still above {tail:e} at the maximum horizon"
                ),
            });
        }
    }

    let raw = best.0 - i0;
    let (height, delay) = if raw > opts.threshold * n * n {
        (raw, best.1)
    } else {
        (0.0, 0.0)
    };
    Ok(PulseMetrics {
        height,
        delay,
        emitted,
        initial_rate: i0,
        horizon: stepper.t(),
    })
}

/// Closed-form sufficient bound `1 - 1/sqrt(N-1)` on the critical `dgamma`.
pub fn critical_dgamma_formula(n: usize) -> Result<f64> {
    if n < 2 {
        return domain(format!("critical dgamma needs N >= 2, got {n}"));
    }
    Ok(1.0 - 1.0 / ((n - 1) as f64).sqrt())
}

/// Largest `dgamma` for which a fully excited start still produces a pulse,
/// found by bisection to `grid_tol`.
pub fn critical_dgamma_numeric(n: usize, grid_tol: f64, opts: &PulseOptions) -> Result<f64> {
    if n == 0 {
        return domain("atom number must be positive");
    }
    if !(grid_tol > 0.0) {
        return domain("grid tolerance must be positive");
    }
    let initial = Populations::dicke(n, n as u32, n as i32)?;
    let has_pulse = |dgamma: f64| -> Result<bool> {
        let table = RateTable::new(&SystemParams::new(n, dgamma, 0.0)?)?;
        Ok(pulse_metrics_with_table(&table, &initial, opts)?.height > 0.0)
    };
    if !has_pulse(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    if has_pulse(hi)? {
        return domain(format!("N = {n} still shows a pulse at dgamma = gamma0"));
    }
    while hi - lo > grid_tol {
        let mid = 0.5 * (lo + hi);
        if has_pulse(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of a pulse-metrics sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub n: usize,
    pub gamma: f64,
    pub dgamma: f64,
    pub ddd: f64,
    pub metrics: PulseMetrics,
}

/// Pulse metrics from the fully excited state over the grid `ns x dgammas`
/// (rows ordered by `N`, then `dgamma`), computed in parallel on the current
/// rayon pool.
pub fn sweep(
    ns: &[usize],
    dgammas: &[f64],
    ddd: f64,
    opts: &PulseOptions,
) -> Result<Vec<MetricsRow>> {
    let grid: Vec<SystemParams> = ns
        .iter()
        .flat_map(|&n| dgammas.iter().map(move |&dg| (n, dg)))
        .map(|(n, dg)| SystemParams::new(n, dg, ddd))
        .collect::<Result<_>>()?;
    opts.validate()?;
    grid.par_iter()
        .map(|p| {
            let table = RateTable::new(p)?;
            let initial = Populations::dicke(p.n(), p.n() as u32, p.n() as i32)?;
            let metrics = pulse_metrics_with_table(&table, &initial, opts)?;
            Ok(MetricsRow {
                n: p.n(),
                gamma: p.gamma(),
                dgamma: p.dgamma(),
                ddd: p.ddd(),
                metrics,
            })
        })
        .collect()
}

/// Metrics CSV: `N,gamma,dgamma,ddd,A_I,t_I,emitted`.
pub fn write_metrics_csv<W: Write>(writer: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["N", "gamma", "dgamma", "ddd", "A_I", "t_I", "emitted"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.gamma),
            fmt_f64(r.dgamma),
            fmt_f64(r.ddd),
            fmt_f64(r.metrics.height),
            fmt_f64(r.metrics.delay),
            fmt_f64(r.metrics.emitted),
        ])?;
    }
    w.flush()?;
    Ok(())
}
