use std::io::Write;

use crate::error::{domain, Result};
use crate::ode::{solve_on_grid, Tolerances};
use crate::state::{fmt_f64, PIState, Populations};

use super::{intensity_of, RateTable, SystemParams};

/// Sampled solution: `(t, state)` at each requested time.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub samples: Vec<(f64, S)>,
}

impl<S> Trajectory<S> {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(t, _)| *t)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_grid(t_end: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return domain(format!("t_end must be positive, got {t_end}"));
    }
    if grid.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return domain("sample times must lie in [0, t_end]");
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("sample times must be strictly increasing");
    }
    // integrate from 0 through t_end even if the grid stops short
    let mut full = Vec::with_capacity(grid.len() + 2);
    if grid.first() != Some(&0.0) {
        full.push(0.0);
    }
    full.extend_from_slice(grid);
    if full.last() != Some(&t_end) {
        full.push(t_end);
    }
    Ok(full)
}

fn pick<S>(grid: &[f64], full: &[f64], states: Vec<S>) -> Vec<(f64, S)> {
    let mut out = Vec::with_capacity(grid.len());
    let mut g = grid.iter().peekable();
    for (t, s) in full.iter().zip(states) {
        if g.peek() == Some(&t) {
            out.push((*t, s));
            g.next();
        }
    }
    out
}

/// Integrate every block entry from `t = 0` and sample at `sample_grid`.
pub fn evolve(
    params: &SystemParams,
    state0: &PIState,
    t_end: f64,
    tol: Tolerances,
    sample_grid: &[f64],
) -> Result<Trajectory<PIState>> {
    let table = RateTable::new(params)?;
    evolve_with_table(&table, state0, t_end, tol, sample_grid)
}

pub(crate) fn evolve_with_table(
    table: &RateTable,
    state0: &PIState,
    t_end: f64,
    tol: Tolerances,
    sample_grid: &[f64],
) -> Result<Trajectory<PIState>> {
    if state0.n() != table.n() {
        return domain(format!(
            "state has N = {} but parameters have N = {}",
            state0.n(),
            table.n()
        ));
    }
    let full = check_grid(t_end, sample_grid)?;
    let ys = solve_on_grid(&table.coherent_system(), &state0.to_flat(), &full, tol)?;
    let states = ys
        .iter()
        .map(|y| PIState::from_flat(table.n(), y))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        samples: pick(sample_grid, &full, states),
    })
}

/// Integrate the population sector only (exact for every population-derived observable).
pub fn evolve_populations(
    params: &SystemParams,
    pops0: &Populations,
    t_end: f64,
    tol: Tolerances,
    sample_grid: &[f64],
) -> Result<Trajectory<Populations>> {
    let table = RateTable::new(params)?;
    if pops0.n() != table.n() {
        return domain(format!(
            "populations have N = {} but parameters have N = {}",
            pops0.n(),
            table.n()
        ));
    }
    let full = check_grid(t_end, sample_grid)?;
    let ys = solve_on_grid(&table.population_system(), &pops0.to_flat(), &full, tol)?;
    let states = ys
        .iter()
        .map(|y| Populations::from_flat(table.n(), y))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        samples: pick(sample_grid, &full, states),
    })
}

/// Trajectory CSV: `t,intensity,jz,trace` plus optional `p_J{2J}_M{2M}` columns.
pub fn write_trajectory_csv<W: Write>(
    writer: W,
    params: &SystemParams,
    trajectory: &Trajectory<Populations>,
    with_populations: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["t", "intensity", "jz", "trace"].map(String::from).to_vec();
    if with_populations {
        if let Some((_, p)) = trajectory.samples.first() {
            header.extend(p.labels());
        }
    }
    w.write_record(&header)?;
    for (t, p) in &trajectory.samples {
        let mut row = vec![
            fmt_f64(*t),
            fmt_f64(intensity_of(p, params)?),
            fmt_f64(p.expect_jz()),
            fmt_f64(p.trace()),
        ];
        if with_populations {
            row.extend(p.to_flat().into_iter().map(fmt_f64));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
