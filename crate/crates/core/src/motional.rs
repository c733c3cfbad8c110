//! Cooperative decay rate `gamma` and dipole-dipole shift `ddd` produced by
//! the atoms' motional state.
//!
//! All atoms share one isotropic single-atom density `rho1(r)`. The pair rates
//! are the classical two-atom kernels averaged over two independent draws from
//! `rho1`; for isotropic densities that average collapses to radial integrals.
//! Rates are in units of `gamma0`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, linspace, QuadOptions};
use crate::state::fmt_f64;

/// Polarisation of the atomic transition relative to the quantisation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Pi,
    Sigma,
}

impl TransitionKind {
    /// Angular factors `(p, q)` for a pair axis at angle `alpha` to the quantisation axis.
    pub fn angular_factors(self, alpha: f64) -> (f64, f64) {
        let c2 = alpha.cos().powi(2);
        match self {
            Self::Pi => (1.0 - c2, 1.0 - 3.0 * c2),
            Self::Sigma => (0.5 * (1.0 + c2), 0.5 * (3.0 * c2 - 1.0)),
        }
    }
}

fn double_factorial(n: u32) -> f64 {
    (1..=n).rev().step_by(2).map(f64::from).product()
}

/// `j_l(x) / x^l` from its power series; accurate for `|x| <~ 1`.
fn bessel_ratio_series(l: u32, x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0 / double_factorial(2 * l + 1);
    let mut sum = term;
    for n in 1..40u32 {
        term *= -x2 / (2.0 * f64::from(n) * f64::from(2 * n + 2 * l + 1));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `sin(x) / x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        bessel_ratio_series(0, x)
    } else {
        x.sin() / x
    }
}

/// `cos(x)/x^2 - sin(x)/x^3 = -j_1(x)/x`.
fn q_bracket(x: f64) -> f64 {
    if x.abs() < 0.5 {
        -bessel_ratio_series(1, x)
    } else {
        x.cos() / (x * x) - x.sin() / (x * x * x)
    }
}

fn check_separation(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!(
            "pair separation k0 r must be finite and nonnegative, got {x}"
        ));
    }
    Ok(())
}

/// Classical cooperative decay rate of two atoms at separation `x = k0 r`
/// whose axis makes angle `alpha` with the quantisation axis.
pub fn gamma_classical(x: f64, alpha: f64, kind: TransitionKind) -> Result<f64> {
    check_separation(x)?;
    let (p, q) = kind.angular_factors(alpha);
    Ok(1.5 * (p * sinc(x) + q * q_bracket(x)))
}

/// Separations below this are rejected by [`delta_classical`] (near-field divergence).
pub const DELTA_MIN_SEPARATION: f64 = 1e-6;

/// Classical dipole-dipole shift of two atoms at separation `x = k0 r`.
pub fn delta_classical(x: f64, alpha: f64, kind: TransitionKind) -> Result<f64> {
    check_separation(x)?;
    if x < DELTA_MIN_SEPARATION {
        return domain(format!(
            "dipole-dipole shift diverges at k0 r = {x} (below {DELTA_MIN_SEPARATION})"
        ));
    }
    let (p, q) = kind.angular_factors(alpha);
    let (s, c) = x.sin_cos();
    Ok(0.75 * (-p * c / x + q * (s / (x * x) + c / (x * x * x))))
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return domain(format!("{name} must be finite and nonnegative, got {v}"));
    }
    Ok(())
}

/// Pure condensate in an isotropic harmonic trap: `e^{-eta^2}`.
pub fn gamma_gaussian(eta: f64) -> Result<f64> {
    check_nonneg("eta", eta)?;
    Ok((-eta * eta).exp())
}

/// Spherically averaged characteristic function of the Thomas–Fermi profile, `15 j_2(x)/x^2`.
fn thomas_fermi_transform(x: f64) -> f64 {
    if x < 1.0 {
        15.0 * bessel_ratio_series(2, x)
    } else {
        15.0 * ((3.0 - x * x) * x.sin() - 3.0 * x * x.cos()) / x.powi(5)
    }
}

/// Thomas–Fermi condensate with `x = k0 R_TF`:
/// `225 (3x cos x + (x^2 - 3) sin x)^2 / x^10`.
pub fn gamma_thomas_fermi(x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    Ok(thomas_fermi_transform(x).powi(2))
}

/// `x = eta (60 N a / ell)^{1/5}` from the Lamb-Dicke parameter, the atom
/// number and the scattering length in units of the oscillator width.
pub fn thomas_fermi_x(eta: f64, atoms: f64, a_over_ell: f64) -> Result<f64> {
    check_nonneg("eta", eta)?;
    if !(atoms > 0.0 && a_over_ell > 0.0) || !(atoms * a_over_ell).is_finite() {
        return domain("atom number and scattering length must be positive");
    }
    Ok(eta * (60.0 * atoms * a_over_ell).powf(0.2))
}

/// Thermal cloud with Debye–Waller factor `e^{-(k0 R)^2}`.
pub fn gamma_thermal_cloud(k0r: f64) -> Result<f64> {
    check_nonneg("k0 R", k0r)?;
    Ok((-k0r * k0r).exp())
}

/// Hard cap on the number of terms in the finite-temperature series.
pub const THERMAL_SERIES_MAX_TERMS: usize = 1_000_000;

/// Terms `(w_k, coth(k beta_omega / 2))` of the ideal trapped Bose gas density:
/// a mixture of centred Gaussians with per-axis variance `ell^2 coth(k b / 2)`
/// and mass `w_k = z^k / (1 - e^{-k b})^3`.
fn thermal_bose_terms(beta_omega: f64, z: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    if !(beta_omega > 0.0) || !beta_omega.is_finite() {
        return domain(format!("beta_omega must be positive, got {beta_omega}"));
    }
    if !(0.0..1.0).contains(&z) {
        return domain(format!("series needs 0 <= z < 1, got {z}"));
    }
    if !(tol > 0.0) {
        return domain("series tolerance must be positive");
    }
    let coth = |k: f64| 1.0 / (0.5 * k * beta_omega).tanh();
    if z == 0.0 {
        // only the k = 1 shape survives the z -> 0 limit
        return Ok(vec![(1.0, coth(1.0))]);
    }
    let mut terms = Vec::new();
    let mut norm = 0.0;
    let mut zk = 1.0;
    for k in 1..=THERMAL_SERIES_MAX_TERMS {
        let kf = k as f64;
        zk *= z;
        let w = zk / (-(-kf * beta_omega).exp_m1()).powi(3);
        norm += w;
        terms.push((w, coth(kf)));
        // w_{k+1} / w_k <= z, so the tail is below w z / (1 - z)
        if w * z / (1.0 - z) < tol * norm || w == 0.0 {
            return Ok(terms);
        }
    }
    Err(Error::Convergence {
        what: format!("thermal Bose series at z = {z} within {THERMAL_SERIES_MAX_TERMS} terms"),
        estimate: norm,
    })
}

/// Trapped ideal Bose gas at temperature `1/beta`, with `eta = k0 ell`,
/// `beta_omega = beta hbar Omega` and fugacity `z`. `z = 1` is the pure condensate.
pub fn gamma_thermal_bose(eta: f64, beta_omega: f64, z: f64, tol: f64) -> Result<f64> {
    check_nonneg("eta", eta)?;
    if z == 1.0 {
        if !(beta_omega > 0.0) {
            return domain(format!("beta_omega must be positive, got {beta_omega}"));
        }
        return gamma_gaussian(eta);
    }
    let terms = thermal_bose_terms(beta_omega, z, tol)?;
    let (mut s, mut norm) = (0.0, 0.0);
    for &(w, coth) in &terms {
        s += w * (-0.5 * eta * eta * coth).exp();
        norm += w;
    }
    Ok((s / norm).powi(2))
}

/// Monotone cubic (Fritsch–Carlson) interpolant of a sampled radial density.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    r: Vec<f64>,
    rho: Vec<f64>,
    slope: Vec<f64>,
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

impl TabulatedDensity {
    pub fn new(r: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if r.len() != rho.len() || r.len() < 2 {
            return domain("a tabulated density needs at least two (r, rho1) rows");
        }
        if r[0] < 0.0 || r.iter().chain(&rho).any(|v| !v.is_finite()) {
            return domain("tabulated radii must be nonnegative and all values finite");
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("tabulated radii must be strictly increasing");
        }
        if let Some(v) = rho.iter().find(|&&v| v < 0.0) {
            return domain(format!("density must be nonnegative, found {v}"));
        }
        let n = r.len();
        let h: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (rho[i + 1] - rho[i]) / h[i]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope = vec![d[0], d[0]];
        } else {
            for k in 1..n - 1 {
                if d[k - 1] * d[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slope[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
                }
            }
            slope[0] = edge_slope(h[0], h[1], d[0], d[1]);
            slope[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Ok(Self { r, rho, slope })
    }

    /// Two-column CSV `r,rho1`; a non-numeric first row is taken as a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut r, mut rho) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!(
                    "density row {} has {} columns, expected 2",
                    i + 1,
                    rec.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => {
                    r.push(v[0]);
                    rho.push(v[1]);
                }
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("density row {}: {e}", i + 1))),
            }
        }
        Self::new(r, rho)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.r.len();
        if x < self.r[0] || x > self.r[n - 1] {
            return 0.0;
        }
        let i = match self.r.partition_point(|&ri| ri <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.rho[i]
            + (t3 - 2.0 * t2 + t) * h * self.slope[i]
            + (-2.0 * t3 + 3.0 * t2) * self.rho[i + 1]
            + (t3 - t2) * h * self.slope[i + 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.r
    }
}

/// Isotropic single-atom density `rho1(r)`, normalised by `4 pi int rho1 r^2 dr = 1`.
#[derive(Clone)]
pub enum RadialDensity {
    /// Mixture of centred Gaussians: `(weight, per-axis variance)`, weights summing to 1.
    Gaussians(Vec<(f64, f64)>),
    /// `15 / (8 pi R^3) (1 - r^2/R^2)` inside `r < R`.
    ThomasFermi {
        radius: f64,
    },
    Tabulated(TabulatedDensity),
    /// Any closure, taken to vanish beyond `r_max`.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        r_max: f64,
    },
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussians(g) => f.debug_tuple("Gaussians").field(g).finish(),
            Self::ThomasFermi { radius } => f
                .debug_struct("ThomasFermi")
                .field("radius", radius)
                .finish(),
            Self::Tabulated(t) => f.debug_tuple("Tabulated").field(t).finish(),
            Self::Function { r_max, .. } => f
                .debug_struct("Function")
                .field("r_max", r_max)
                .finish_non_exhaustive(),
        }
    }
}

impl RadialDensity {
    /// Ground state of an isotropic trap with density width `ell`.
    pub fn gaussian(ell: f64) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return domain(format!("Gaussian width must be positive, got {ell}"));
        }
        Ok(Self::Gaussians(vec![(1.0, ell * ell)]))
    }

    /// Thermal cloud `e^{-r^2 / 2R^2} / (2 pi R^2)^{3/2}`.
    pub fn thermal_cloud(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("cloud radius must be positive, got {radius}"));
        }
        Ok(Self::Gaussians(vec![(1.0, radius * radius)]))
    }

    pub fn thomas_fermi(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!(
                "Thomas–Fermi radius must be positive, got {radius}"
            ));
        }
        Ok(Self::ThomasFermi { radius })
    }

    /// Truncated finite-temperature Bose gas density with oscillator width `ell`.
    pub fn thermal_bose(ell: f64, beta_omega: f64, z: f64, tol: f64) -> Result<Self> {
        if z == 1.0 {
            return Self::gaussian(ell);
        }
        if !(ell > 0.0) || !ell.is_finite() {
            return domain(format!("oscillator width must be positive, got {ell}"));
        }
        let terms = thermal_bose_terms(beta_omega, z, tol)?;
        let norm: f64 = terms.iter().map(|t| t.0).sum();
        Ok(Self::Gaussians(
            terms
                .into_iter()
                .map(|(w, c)| (w / norm, ell * ell * c))
                .collect(),
        ))
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return domain(format!("r_max must be positive, got {r_max}"));
        }
        Ok(Self::Function {
            f: Arc::new(f),
            r_max,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Gaussians(g) => g
                .iter()
                .map(|&(w, v)| w * (-r * r / (2.0 * v)).exp() / (2.0 * PI * v).powf(1.5))
                .sum(),
            Self::ThomasFermi { radius } => {
                if r < *radius {
                    15.0 / (8.0 * PI * radius.powi(3)) * (1.0 - (r / radius).powi(2))
                } else {
                    0.0
                }
            }
            Self::Tabulated(t) => t.eval(r),
            Self::Function { f, r_max } => {
                if r <= *r_max {
                    f(r)
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius beyond which the density is negligible.
    pub fn r_max(&self) -> f64 {
        match self {
            Self::Gaussians(g) => 14.0 * g.iter().map(|t| t.1).fold(0.0, f64::max).sqrt(),
            Self::ThomasFermi { radius } => *radius,
            Self::Tabulated(t) => *t.knots().last().expect("at least two knots"),
            Self::Function { r_max, .. } => *r_max,
        }
    }

    /// Integration points: the support split finely enough for a wavenumber `k0`.
    fn points(&self, k0: f64) -> Vec<f64> {
        let r_max = self.r_max();
        let pieces = ((k0 * r_max / PI).ceil() as usize).clamp(8, 100_000);
        let mut pts = linspace(0.0, r_max, pieces);
        if let Self::Tabulated(t) = self {
            pts.extend_from_slice(t.knots());
            pts.sort_by(f64::total_cmp);
            pts.dedup();
        }
        pts
    }
}

const QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-12,
    rel_tol: 1e-12,
    max_intervals: 200_000,
};

fn with_estimate(what: &str, e: Error) -> Error {
    match e {
        Error::Convergence { estimate, .. } => Error::Convergence {
            what: what.to_string(),
            estimate,
        },
        other => other,
    }
}

/// Tolerance on the normalisation of user-supplied densities.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// A normalised isotropic density together with the radiation wavenumber.
#[derive(Debug, Clone)]
pub struct CustomIsotropic {
    density: RadialDensity,
    k0: f64,
}

impl CustomIsotropic {
    pub fn new(density: RadialDensity, k0: f64) -> Result<Self> {
        check_nonneg("k0", k0)?;
        let pts = density.points(0.0);
        let norm = integrate(|r| 4.0 * PI * r * r * density.eval(r), &pts, QUAD)
            .map_err(|e| with_estimate("density normalisation", e))?;
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return domain(format!(
                "density must satisfy 4 pi int rho1 r^2 dr = 1, got {norm}"
            ));
        }
        Ok(Self { density, k0 })
    }

    pub fn density(&self) -> &RadialDensity {
        &self.density
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }
}

/// `gamma = [4 pi int rho1(r) sinc(k0 r) r^2 dr]^2`.
pub fn gamma_from_density(model: &CustomIsotropic) -> Result<f64> {
    let (rho, k0) = (&model.density, model.k0);
    let f = integrate(
        |r| 4.0 * PI * r * r * rho.eval(r) * sinc(k0 * r),
        &rho.points(k0),
        QUAD,
    )
    .map_err(|e| with_estimate("decay-rate quadrature", e))?;
    Ok(f * f)
}

/// Dipole-dipole shift of an isotropic density.
///
/// Only the `p` part of the kernel survives the orientation average, leaving
/// `-(1/2) cos(k0 s) / (k0 s)` over the pair distance `s`. Expanding the angular
/// average of `cos(k0 |r - r'|) / |r - r'|` in the two radii reduces the pair
/// integral to the nested radial form
/// `-(16 pi^2 / k0^2) int r rho cos(k0 r) [int_0^r r' rho sin(k0 r') dr'] dr`.
pub fn delta_from_density(model: &CustomIsotropic) -> Result<f64> {
    let (rho, k0) = (&model.density, model.k0);
    if k0 <= 0.0 {
        return domain("dipole-dipole shift needs k0 > 0 (it diverges for colocated atoms)");
    }
    let inner = |r: f64| r * rho.eval(r) * (k0 * r).sin();
    let pts = rho.points(k0);
    // cumulative inner integral at the integration points
    let mut cum = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        cum[i] = cum[i - 1]
            + integrate(inner, &pts[i - 1..=i], QUAD)
                .map_err(|e| with_estimate("dipole-shift inner quadrature", e))?;
    }
    let inner_to = |r: f64| -> f64 {
        let i = pts.partition_point(|&p| p <= r).saturating_sub(1);
        if r <= pts[i] {
            return cum[i];
        }
        cum[i] + integrate(inner, &[pts[i], r], QUAD).unwrap_or(f64::NAN)
    };
    let outer = integrate(
        |r| r * rho.eval(r) * (k0 * r).cos() * inner_to(r),
        &pts,
        QUAD,
    )
    .map_err(|e| with_estimate("dipole-shift outer quadrature", e))?;
    if !outer.is_finite() {
        return Err(Error::Convergence {
            what: "dipole-shift inner quadrature".into(),
            estimate: f64::NAN,
        });
    }
    Ok(-16.0 * PI * PI / (k0 * k0) * outer)
}

/// Motional state of the atoms, in the dimensionless parameters of each regime.
#[derive(Debug, Clone)]
pub enum MotionalModel {
    GaussianGround { eta: f64 },
    ThomasFermi { x: f64 },
    ThermalBose { eta: f64, beta_omega: f64, z: f64 },
    ThermalCloud { k0r: f64 },
    CustomIsotropic(CustomIsotropic),
}

/// Truncation tolerance for the finite-temperature series.
pub const THERMAL_SERIES_TOL: f64 = 1e-15;

impl MotionalModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianGround { .. } => "gaussian",
            Self::ThomasFermi { .. } => "thomas-fermi",
            Self::ThermalBose { .. } => "thermal-bose",
            Self::ThermalCloud { .. } => "thermal-cloud",
            Self::CustomIsotropic(_) => "custom",
        }
    }

    /// `key=value` pairs separated by `;`.
    pub fn parameters(&self) -> String {
        match self {
            Self::GaussianGround { eta } => format!("eta={}", fmt_f64(*eta)),
            Self::ThomasFermi { x } => format!("x={}", fmt_f64(*x)),
            Self::ThermalBose { eta, beta_omega, z } => format!(
                "eta={};beta_omega={};z={}",
                fmt_f64(*eta),
                fmt_f64(*beta_omega),
                fmt_f64(*z)
            ),
            Self::ThermalCloud { k0r } => format!("k0R={}", fmt_f64(*k0r)),
            Self::CustomIsotropic(c) => format!("k0={}", fmt_f64(c.k0)),
        }
    }

    /// Closed form where one exists, quadrature otherwise.
    pub fn gamma(&self) -> Result<f64> {
        match *self {
            Self::GaussianGround { eta } => gamma_gaussian(eta),
            Self::ThomasFermi { x } => gamma_thomas_fermi(x),
            Self::ThermalBose { eta, beta_omega, z } => {
                gamma_thermal_bose(eta, beta_omega, z, THERMAL_SERIES_TOL)
            }
            Self::ThermalCloud { k0r } => gamma_thermal_cloud(k0r),
            Self::CustomIsotropic(ref c) => gamma_from_density(c),
        }
    }

    /// The equivalent density with unit length scale and wavenumber set by the
    /// dimensionless parameter.
    pub fn as_density(&self) -> Result<CustomIsotropic> {
        match *self {
            Self::GaussianGround { eta } => {
                CustomIsotropic::new(RadialDensity::gaussian(1.0)?, non_neg(eta)?)
            }
            Self::ThomasFermi { x } => {
                CustomIsotropic::new(RadialDensity::thomas_fermi(1.0)?, non_neg(x)?)
            }
            Self::ThermalBose { eta, beta_omega, z } => CustomIsotropic::new(
                RadialDensity::thermal_bose(1.0, beta_omega, z, THERMAL_SERIES_TOL)?,
                non_neg(eta)?,
            ),
            Self::ThermalCloud { k0r } => {
                CustomIsotropic::new(RadialDensity::thermal_cloud(1.0)?, non_neg(k0r)?)
            }
            Self::CustomIsotropic(ref c) => Ok(c.clone()),
        }
    }

    /// Dipole-dipole shift; not available for the finite-temperature series.
    pub fn delta_dd(&self) -> Result<f64> {
        if let Self::ThermalBose { .. } = self {
            return Err(Error::Unsupported(
                "dipole-dipole shift for the thermal-bose model".into(),
            ));
        }
        delta_from_density(&self.as_density()?)
    }
}

fn non_neg(v: f64) -> Result<f64> {
    check_nonneg("motional parameter", v)?;
    Ok(v)
}

/// One line of a rates table.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub model: String,
    pub parameters: String,
    pub gamma: f64,
    pub delta_dd: Option<f64>,
}

impl RateRow {
    pub fn compute(model: &MotionalModel, with_delta: bool) -> Result<Self> {
        Ok(Self {
            model: model.name().to_string(),
            parameters: model.parameters(),
            gamma: model.gamma()?,
            delta_dd: if with_delta {
                Some(model.delta_dd()?)
            } else {
                None
            },
        })
    }
}

/// Rates CSV: `model,parameters,gamma,delta_dd` (empty `delta_dd` when not computed).
pub fn write_rates_csv<W: Write>(writer: W, rows: &[RateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "parameters", "gamma", "delta_dd"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.parameters.clone(),
            fmt_f64(r.gamma),
            r.delta_dd.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
