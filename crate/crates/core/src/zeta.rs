//! Zeta-regularized log-determinants on circles, flat cylinders and tori.
//!
//! The engine is the Bessel-K representation of the one-dimensional Epstein
//! zeta function
//!
//! `ζ(s) = ℓ/(2√π Γ(s)) [Γ(s−½) m^{1−2s} + 4 Σₙ cos(nθ) (nℓ/2m)^{s−½} K_{s−½}(nmℓ)]`
//!
//! for the frequencies `ω_k² = (2π(k + θ/2π)/ℓ)² + m²`, `k ∈ ℤ`. It has simple
//! poles at `s = ½, −½, −3/2, …` and vanishes at `s = 0`.

use std::f64::consts::{LN_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::CircleObject;
use crate::special::{bessel_k, gamma, ln_one_minus_exp_neg, rgamma, CompensatedSum};

/// Distance from a pole below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-6;

/// How far convergent series are summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Absolute tolerance on the neglected tail.
    pub tolerance: f64,
    /// Budget on the number of terms before giving up.
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            tolerance: 1e-14,
            max_terms: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Continuation,
    ConvergentSum,
}

/// Natural log of a zeta-regularized determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogDet {
    pub value: f64,
    pub method: Method,
    pub error_estimate: f64,
}

impl LogDet {
    fn new(value: f64, method: Method, error_estimate: f64) -> Self {
        Self {
            value,
            method,
            error_estimate,
        }
    }

    /// Sum of determinants, e.g. over the components of a bundle.
    pub fn combine(parts: &[LogDet]) -> Option<LogDet> {
        let first = parts.first()?;
        let value: CompensatedSum = parts.iter().map(|p| p.value).collect();
        let err = parts.iter().map(|p| p.error_estimate).sum();
        Some(LogDet::new(value.value(), first.method, err))
    }
}

/// `Σ_k ((2π(k + θ/2π)/ℓ)² + m²)^{−s}` over `k ∈ ℤ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsteinZeta1D {
    circumference: f64,
    mass: f64,
    twist: f64,
}

impl EpsteinZeta1D {
    pub fn new(circumference: f64, mass: f64, twist: f64) -> Result<Self> {
        if !(circumference > 0.0 && circumference.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "circumference must be positive, got {circumference}"
            )));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !twist.is_finite() {
            return Err(Error::InvalidParameter("twist angle must be finite".into()));
        }
        Ok(Self {
            circumference,
            mass,
            twist: twist.rem_euclid(TAU),
        })
    }

    pub fn untwisted(circumference: f64, mass: f64) -> Result<Self> {
        Self::new(circumference, mass, 0.0)
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn twist(&self) -> f64 {
        self.twist
    }

    /// `ω_k` for the Fourier index `k ∈ ℤ`.
    pub fn omega(&self, k: i64) -> f64 {
        (TAU * (k as f64 + self.twist / TAU) / self.circumference).hypot(self.mass)
    }

    fn mass_length(&self) -> f64 {
        self.mass * self.circumference
    }

    /// `Σₙ cos(nθ) f(n)` with `|f(n)| ≲ e^{−nmℓ}`, stopped on a geometric tail estimate.
    fn bessel_series(&self, ctl: &SeriesControl, term: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        let r = (-self.mass_length()).exp();
        let mut acc = CompensatedSum::new();
        for n in 1..=ctl.max_terms {
            let t = (n as f64 * self.twist).cos() * term(n as f64);
            acc.add(t);
            let tail = t.abs().max(term(n as f64).abs()) * r / (1.0 - r);
            if tail < ctl.tolerance && n as f64 * self.mass_length() > 1.0 {
                return Ok((acc.value(), tail));
            }
        }
        Err(Error::NotConverged(format!(
            "Bessel series for mℓ = {} needs more than {} terms",
            self.mass_length(),
            ctl.max_terms
        )))
    }

    fn check_pole(s: f64) -> Result<()> {
        // poles of Γ(s − ½) at s = ½ − j
        if s <= 0.5 + POLE_GUARD {
            let j = (0.5 - s).round();
            let pole = 0.5 - j;
            if j >= 0.0 && (s - pole).abs() < POLE_GUARD {
                return Err(Error::ZetaPole { s, pole });
            }
        }
        Ok(())
    }

    /// Bracket `Γ(s−½) m^{1−2s} + 4 Σ …` of the representation.
    fn bracket(&self, s: f64, ctl: &SeriesControl) -> Result<(f64, f64)> {
        let (m, ell) = (self.mass, self.circumference);
        let nu = s - 0.5;
        let lead = gamma(nu) * m.powf(1.0 - 2.0 * s);
        let (series, err) = self.bessel_series(ctl, |n| {
            (n * ell / (2.0 * m)).powf(nu) * bessel_k(nu, n * m * ell)
        })?;
        Ok((lead + 4.0 * series, 4.0 * err))
    }

    /// Continued `ζ(s)`.
    pub fn value(&self, s: f64, ctl: &SeriesControl) -> Result<f64> {
        Self::check_pole(s)?;
        let pre = self.circumference / (2.0 * PI.sqrt()) * rgamma(s);
        if pre == 0.0 {
            return Ok(0.0);
        }
        Ok(pre * self.bracket(s, ctl)?.0)
    }

    /// `ζ′(0) = ℓ/(2√π) · bracket(0)`, since `1/Γ(s) = s + O(s²)`.
    pub fn derivative_at_zero(&self, ctl: &SeriesControl) -> Result<(f64, f64)> {
        let pre = self.circumference / (2.0 * PI.sqrt());
        let (b, err) = self.bracket(0.0, ctl)?;
        Ok((pre * b, pre * err))
    }

    /// Residue of `ζ` at `s = −½`: `ℓm²/4π`.
    pub fn residue_at_minus_half(&self) -> f64 {
        self.circumference * self.mass * self.mass / (4.0 * PI)
    }

    /// Finite part of `ζ` at `s = −½`.
    pub fn finite_part_at_minus_half(&self, ctl: &SeriesControl) -> Result<f64> {
        let (m, ell) = (self.mass, self.circumference);
        let (series, _) = self.bessel_series(ctl, |n| bessel_k(1.0, n * m * ell) / n)?;
        Ok(
            -self.residue_at_minus_half() * (1.0 - 2.0 * LN_2 + 2.0 * m.ln())
                - 2.0 * m / PI * series,
        )
    }
}

/// `ζ(s)` by continuation.
pub fn zeta_value(z: &EpsteinZeta1D, s: f64) -> Result<f64> {
    z.value(s, &SeriesControl::default())
}

/// Regularized `Σ_k ω_k`.
///
/// `ζ` has a pole at `−½`, so the value is the combination
/// `FP + (2 − 2 ln 2)·Res` that appears when the Dirichlet or periodic
/// direction of a cylinder or torus is summed first:
/// `ℓm²/4π (1 − 2 ln m) − (2m/π) Σₙ cos(nθ) K₁(nmℓ)/n`.
pub fn reg_energy(z: &EpsteinZeta1D) -> Result<f64> {
    reg_energy_with(z, &SeriesControl::default()).map(|(v, _)| v)
}

pub fn reg_energy_with(z: &EpsteinZeta1D, ctl: &SeriesControl) -> Result<(f64, f64)> {
    let (m, ell) = (z.mass, z.circumference);
    let (series, err) = z.bessel_series(ctl, |n| bessel_k(1.0, n * m * ell) / n)?;
    let value = z.residue_at_minus_half() * (1.0 - 2.0 * m.ln()) - 2.0 * m / PI * series;
    Ok((value, 2.0 * m / PI * err))
}

/// `−ζ′(0)` in closed form: `mℓ + ln(1 − 2cos θ e^{−mℓ} + e^{−2mℓ})`.
pub fn logdet_circle(z: &EpsteinZeta1D) -> LogDet {
    let x = z.mass_length();
    let q = (-x).exp();
    let value = if z.twist == 0.0 {
        x + 2.0 * ln_one_minus_exp_neg(x)
    } else {
        x + (-2.0 * z.twist.cos() * q + q * q).ln_1p()
    };
    LogDet::new(
        value,
        Method::ClosedForm,
        4.0 * f64::EPSILON * value.abs().max(1.0),
    )
}

/// `−ζ′(0)` through the Bessel representation.
pub fn logdet_circle_continued(z: &EpsteinZeta1D, ctl: &SeriesControl) -> Result<LogDet> {
    let (d, err) = z.derivative_at_zero(ctl)?;
    Ok(LogDet::new(
        -d,
        Method::Continuation,
        err + 8.0 * f64::EPSILON * d.abs().max(1.0),
    ))
}

/// Sum `Σ_k f(ω_k)` over `k ∈ ℤ`, with `|f(ω)| ≤ amp · e^{−rate ω}/(1 − e^{−rate ω})`,
/// extended outward until the tail is below tolerance.
fn mode_sum(
    z: &EpsteinZeta1D,
    ctl: &SeriesControl,
    rate: f64,
    amp: f64,
    f: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let c = z.twist / TAU;
    let step = TAU / z.circumference;
    let envelope = |xi: f64| {
        let e = (-rate * xi).exp();
        amp * e / ((1.0 - e) * (1.0 - (-rate * step).exp()))
    };
    let tail =
        |kk: i64| envelope(step * (kk as f64 + 1.0 + c)) + envelope(step * (kk as f64 + 1.0 - c));

    let mut kk: i64 = 0;
    while tail(kk).is_nan() || tail(kk) >= ctl.tolerance {
        kk += 1;
        if kk as usize > ctl.max_terms {
            return Err(Error::NotConverged(format!(
                "mode sum for ℓ = {} needs more than {} modes",
                z.circumference, ctl.max_terms
            )));
        }
    }
    let mut omegas: Vec<f64> = (-kk..=kk).map(|k| z.omega(k)).collect();
    omegas.sort_by(f64::total_cmp);
    let acc: CompensatedSum = omegas.into_iter().map(&f).collect();
    Ok((acc.value(), tail(kk)))
}

/// `ln det(Δ + m²)` on `[0, L] × S¹_ℓ` with Dirichlet ends:
/// `L·E_reg + Σ_k ln(1 − e^{−2ω_k L}) − ½ ln det(Δ_S¹ + m²)`.
pub fn logdet_cylinder_dirichlet(
    z: &EpsteinZeta1D,
    length: f64,
    ctl: &SeriesControl,
) -> Result<LogDet> {
    check_length(length)?;
    let (energy, e_err) = reg_energy_with(z, ctl)?;
    let (sum, s_err) = mode_sum(z, ctl, 2.0 * length, 1.0, |w| {
        ln_one_minus_exp_neg(2.0 * w * length)
    })?;
    let circle = logdet_circle(z);
    let value = length * energy + sum - 0.5 * circle.value;
    Ok(LogDet::new(
        value,
        Method::Continuation,
        length * e_err + s_err + 0.5 * circle.error_estimate,
    ))
}

/// `ln det(Δ + m²)` on the torus `S¹_ℓ × S¹_L` (twist along `S¹_ℓ`):
/// `L·E_reg + 2 Σ_k ln(1 − e^{−ω_k L})`.
pub fn logdet_torus(z: &EpsteinZeta1D, length: f64, ctl: &SeriesControl) -> Result<LogDet> {
    check_length(length)?;
    let (energy, e_err) = reg_energy_with(z, ctl)?;
    let (sum, s_err) = mode_sum(z, ctl, length, 2.0, |w| {
        2.0 * ln_one_minus_exp_neg(w * length)
    })?;
    Ok(LogDet::new(
        length * energy + sum,
        Method::Continuation,
        length * e_err + s_err,
    ))
}

/// `ln det(D₁ + D₂)` for the DtN operators of two cylinders glued along a circle:
/// `½ ln det(Δ_S¹ + m²) + ln 2 · ζ(0) + Σ_k ln((coth ω_k L₁ + coth ω_k L₂)/2)`.
pub fn logdet_dtn_sum(z: &EpsteinZeta1D, l1: f64, l2: f64, ctl: &SeriesControl) -> Result<LogDet> {
    check_length(l1)?;
    check_length(l2)?;
    let zeta0 = z.value(0.0, ctl)?;
    let lmin = l1.min(l2);
    // (c₁ + c₂)/2 = (1 − q₁²q₂²)/((1 − q₁²)(1 − q₂²)), q = e^{−ωL}
    let (sum, s_err) = mode_sum(z, ctl, 2.0 * lmin, 3.0, |w| {
        ln_one_minus_exp_neg(2.0 * w * (l1 + l2))
            - ln_one_minus_exp_neg(2.0 * w * l1)
            - ln_one_minus_exp_neg(2.0 * w * l2)
    })?;
    let circle = logdet_circle(z);
    let value = 0.5 * circle.value + LN_2 * zeta0 + sum;
    Ok(LogDet::new(
        value,
        Method::Continuation,
        s_err + 0.5 * circle.error_estimate,
    ))
}

/// `ln det(2D)` for the DtN operator of a cylinder. Per mode `det(2·block) = 4ω²`
/// independently of `L`, so the value is `ln det(Δ_S¹ + m²) + ln 4 · ζ(0)`.
pub fn logdet_2dtn_cylinder(z: &EpsteinZeta1D, ctl: &SeriesControl) -> Result<LogDet> {
    let zeta0 = z.value(0.0, ctl)?;
    let circle = logdet_circle(z);
    Ok(LogDet::new(
        circle.value + 2.0 * LN_2 * zeta0,
        Method::Continuation,
        circle.error_estimate,
    ))
}

fn check_length(length: f64) -> Result<()> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "length must be positive, got {length}"
        )));
    }
    Ok(())
}

/// The zeta functions of all scalar components of a flat bundle over a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaFamily {
    components: Vec<EpsteinZeta1D>,
}

impl ZetaFamily {
    pub fn new(circle: &CircleObject, mass: f64) -> Result<Self> {
        let components = circle
            .twists()
            .into_iter()
            .map(|t| EpsteinZeta1D::new(circle.circumference(), mass, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn components(&self) -> &[EpsteinZeta1D] {
        &self.components
    }

    fn each(&self, f: impl Fn(&EpsteinZeta1D) -> Result<LogDet>) -> Result<LogDet> {
        let parts = self.components.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(LogDet::combine(&parts).expect("bundle has at least one component"))
    }

    pub fn zeta_at_zero(&self, ctl: &SeriesControl) -> Result<f64> {
        let parts = self
            .components
            .iter()
            .map(|z| z.value(0.0, ctl))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().collect::<CompensatedSum>().value())
    }

    pub fn reg_energy(&self, ctl: &SeriesControl) -> Result<f64> {
        let parts = self
            .components
            .iter()
            .map(|z| reg_energy_with(z, ctl).map(|v| v.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().collect::<CompensatedSum>().value())
    }

    pub fn logdet_circle(&self) -> LogDet {
        LogDet::combine(
            &self
                .components
                .iter()
                .map(logdet_circle)
                .collect::<Vec<_>>(),
        )
        .expect("non-empty")
    }

    pub fn logdet_circle_continued(&self, ctl: &SeriesControl) -> Result<LogDet> {
        self.each(|z| logdet_circle_continued(z, ctl))
    }

    pub fn logdet_cylinder_dirichlet(&self, length: f64, ctl: &SeriesControl) -> Result<LogDet> {
        self.each(|z| logdet_cylinder_dirichlet(z, length, ctl))
    }

    pub fn logdet_torus(&self, length: f64, ctl: &SeriesControl) -> Result<LogDet> {
        self.each(|z| logdet_torus(z, length, ctl))
    }

    pub fn logdet_dtn_sum(&self, l1: f64, l2: f64, ctl: &SeriesControl) -> Result<LogDet> {
        self.each(|z| logdet_dtn_sum(z, l1, l2, ctl))
    }

    pub fn logdet_2dtn_cylinder(&self, ctl: &SeriesControl) -> Result<LogDet> {
        self.each(|z| logdet_2dtn_cylinder(z, ctl))
    }
}
