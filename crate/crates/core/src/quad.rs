//! Globally adaptive 15-point Gauss–Kronrod quadrature.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate on one interval.
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Tolerances and limits of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 20_000,
        }
    }
}

/// Integrate `f` over consecutive `points`, refining the worst interval until
/// the summed error estimate meets `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadOptions) -> Result<f64> {
    if points.len() < 2 {
        return domain("integration needs at least two points");
    }
    if points.iter().any(|x| !x.is_finite()) || points.windows(2).any(|w| !(w[1] >= w[0])) {
        return domain("integration points must be finite and nondecreasing");
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = kronrod(&f, w[0], w[1]);
            total += value;
            err += error;
            heap.push(Piece {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if !total.is_finite() {
            return Err(Error::Convergence {
                what: "quadrature".into(),
                estimate: total,
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Convergence {
                what: format!("quadrature (error estimate {err:e})"),
                estimate: total,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further; accept what we have
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the drift of the running updates
    Ok(heap.iter().map(|p| p.value).sum())
}

/// `n + 1` equally spaced points from `a` to `b`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * i as f64 / n as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        let o = QuadOptions::default();
        let v = integrate(|x| x.powi(5) - 2.0 * x, &[0.0, 2.0], o).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
        let v = integrate(f64::sin, &linspace(0.0, std::f64::consts::PI, 4), o).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate(|x| (-x * x).exp(), &[-10.0, 10.0], o).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let o = QuadOptions::default();
        let v = integrate(|x: f64| 1.0 / x.sqrt(), &[0.0, 1.0], o).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn oscillatory() {
        let o = QuadOptions::default();
        let v = integrate(|x: f64| (50.0 * x).cos(), &linspace(0.0, 3.0, 30), o).unwrap();
        assert!((v - (150.0f64).sin() / 50.0).abs() < 1e-13);
    }

    #[test]
    fn failure_reports_estimate() {
        let o = QuadOptions {
            max_intervals: 5,
            ..QuadOptions::default()
        };
        match integrate(|x: f64| (1.0 / x).sin(), &[1e-6, 1.0], o) {
            Err(Error::Convergence { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("{other:?}"),
        }
        assert!(integrate(|x| x, &[1.0], o).is_err());
        assert!(integrate(|x| x, &[1.0, 0.0], o).is_err());
    }
}
