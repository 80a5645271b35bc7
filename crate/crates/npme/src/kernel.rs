//! The analytic NPME solution family.
//!
//! [`NpmeParams`] fixes one member of the family
//! `u(x,t) = C t^{-d beta} (1 - k^{2/alpha} ||x||^2 / t^{2 beta})_+^{alpha/(2(m-1))}`
//! and exposes its derived constants, densities, CDFs, moments and Fourier
//! transforms, plus the correspondence between flight parameters `(n, d,
//! case)` and the NPME exponent `m`.

use crate::specfun::{bessel_j, ln_gamma_unchecked, reg_inc_beta};
use crate::{Error, Result};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which of the three flight constructions maps onto the NPME parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightCase {
    /// d = 1, alternating telegraph directions, uniform renewal law.
    D1,
    /// d >= 2, Dirichlet(d-1, ..., d-1) renewal law.
    DirA,
    /// d >= 3, Dirichlet(d/2-1, ..., d/2-1) renewal law.
    DirB,
}

impl FlightCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlightCase::D1 => "d1",
            FlightCase::DirA => "dir_a",
            FlightCase::DirB => "dir_b",
        }
    }
}

impl std::str::FromStr for FlightCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d1" => Ok(FlightCase::D1),
            "dir_a" => Ok(FlightCase::DirA),
            "dir_b" => Ok(FlightCase::DirB),
            other => Err(Error::Argument(format!(
                "unknown flight case {other:?}, expected d1 | dir_a | dir_b"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diffusivity {
    Sub,
    Normal,
    Super,
}

impl Diffusivity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Diffusivity::Sub => "sub",
            Diffusivity::Normal => "normal",
            Diffusivity::Super => "super",
        }
    }
}

/// Growth regime of `Var(R^n(t)) = O(t^{2 beta})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityClass {
    pub label: Diffusivity,
    /// The variance growth exponent `2 beta`.
    pub exponent: f64,
}

/// Validated `(alpha, m, d)` triple with all derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpmeParams {
    pub alpha: f64,
    pub m: f64,
    pub d: usize,
    /// `beta = 1 / (d(m-1) + alpha)`.
    pub beta: f64,
    /// `k = d Gamma(d/2) / ((d(m-1)+alpha) 2^alpha Gamma(1+alpha/2) Gamma((d+alpha)/2))`.
    pub k_const: f64,
    /// Mass-one amplitude `C = Gamma(d/2 + nu + 1) k^{d/alpha} / (pi^{d/2} Gamma(nu + 1))`
    /// with `nu = alpha / (2(m-1))`.
    pub big_c: f64,
    /// Flight speed `c = k^{-1/alpha}`.
    pub speed_c: f64,
}

/// Maps the number of direction changes `n` onto the NPME exponent `m`.
///
/// Case `D1`: `m = alpha/(n-1) + 1` (n odd) or `alpha/(n-2) + 1` (n even).
/// Case `DirA`: `m = alpha/(n(d-1) - 2) + 1`, valid when `d > 2/n + 1`.
/// Case `DirB`: `m = alpha/(n(d-2) - 2) + 1`, valid when `d > 2/n + 2`.
pub fn m_from_flight(n: usize, d: usize, alpha: f64, case: FlightCase) -> Result<f64> {
    Ok(alpha / flight_quotient(n, d, alpha, case)? + 1.0)
}

/// The integer quotient `q` with `m = alpha/q + 1` for a valid flight.
fn flight_quotient(n: usize, d: usize, alpha: f64, case: FlightCase) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 2], got {alpha}"
        )));
    }
    if n < 1 {
        return Err(Error::Validity("n must be at least 1".into()));
    }
    let denom: f64 = match case {
        FlightCase::D1 => {
            if d != 1 {
                return Err(Error::Validity(format!("case d1 requires d = 1, got d={d}")));
            }
            if n % 2 == 1 && n < 3 {
                return Err(Error::Validity(
                    "case d1 requires n >= 3 for odd n (m finite and > 1)".into(),
                ));
            }
            if n % 2 == 0 && n < 4 {
                return Err(Error::Validity(
                    "case d1 requires n >= 4 for even n (m finite and > 1)".into(),
                ));
            }
            if n % 2 == 1 {
                (n - 1) as f64
            } else {
                (n - 2) as f64
            }
        }
        FlightCase::DirA => {
            if d < 2 {
                return Err(Error::Validity(format!(
                    "case dir_a requires d >= 2, got d={d}"
                )));
            }
            let q = n as i64 * (d as i64 - 1) - 2;
            if q <= 0 {
                return Err(Error::Validity(format!(
                    "d > 2/n + 1 violated for case dir_a with n={n}, d={d}"
                )));
            }
            q as f64
        }
        FlightCase::DirB => {
            if d < 3 {
                return Err(Error::Validity(format!(
                    "case dir_b requires d >= 3, got d={d}"
                )));
            }
            let q = n as i64 * (d as i64 - 2) - 2;
            if q <= 0 {
                return Err(Error::Validity(format!(
                    "d > 2/n + 2 violated for case dir_b with n={n}, d={d}"
                )));
            }
            q as f64
        }
    };
    Ok(denom)
}

impl NpmeParams {
    /// Derives all constants from the `(alpha, m, d)` triple.
    pub fn new(alpha: f64, m: f64, d: usize) -> Result<Self> {
        if !alpha.is_finite() || !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !m.is_finite() || m <= 1.0 {
            return Err(Error::Domain(format!("m must exceed 1, got {m}")));
        }
        if d < 1 {
            return Err(Error::Domain("d must be at least 1".into()));
        }
        let df = d as f64;
        Self::with_denominator(alpha, m, d, df * (m - 1.0) + alpha)
    }

    /// Derives the parameters of the NPME counterpart of a flight.
    pub fn from_flight(n: usize, d: usize, alpha: f64, case: FlightCase) -> Result<Self> {
        let q = flight_quotient(n, d, alpha, case)?;
        let m = alpha / q + 1.0;
        // d(m-1) + alpha = alpha (d + q) / q, evaluated without the rounding
        // detour through m so that threshold cases (2 beta = 1) land exactly
        Self::with_denominator(alpha, m, d, alpha * (d as f64 + q) / q)
    }

    fn with_denominator(alpha: f64, m: f64, d: usize, denom: f64) -> Result<Self> {
        let df = d as f64;
        let beta = 1.0 / denom;
        let nu = alpha / (2.0 * (m - 1.0));
        // all Gamma ratios in log space, exponentiated once
        let ln_k = df.ln() + ln_gamma_unchecked(df / 2.0)
            - denom.ln()
            - alpha * 2f64.ln()
            - ln_gamma_unchecked(1.0 + alpha / 2.0)
            - ln_gamma_unchecked((df + alpha) / 2.0);
        let k_const = ln_k.exp();
        let speed_c = (-ln_k / alpha).exp();
        let big_c = (ln_gamma_unchecked(df / 2.0 + nu + 1.0) + df / alpha * ln_k
            - df / 2.0 * PI.ln()
            - ln_gamma_unchecked(nu + 1.0))
        .exp();
        Ok(NpmeParams {
            alpha,
            m,
            d,
            beta,
            k_const,
            big_c,
            speed_c,
        })
    }

    /// Exponent `nu = alpha / (2(m-1))` of the plus-part.
    pub fn plus_exponent(&self) -> f64 {
        self.alpha / (2.0 * (self.m - 1.0))
    }

    /// Bessel order `mu = d/2 + nu` of the Fourier transform.
    pub fn bessel_order(&self) -> f64 {
        self.d as f64 / 2.0 + self.plus_exponent()
    }

    /// Radius `c t^beta` of the support at time `t`.
    pub fn support_radius(&self, t: f64) -> f64 {
        self.speed_c * t.powf(self.beta)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        Ok(())
    }

    /// `u(r, t)` as a function of the radius alone.
    pub(crate) fn density_profile(&self, r: f64, t: f64) -> f64 {
        let rad = self.support_radius(t);
        let s = r / rad;
        if s >= 1.0 {
            return 0.0;
        }
        self.big_c * t.powf(-(self.d as f64) * self.beta) * (1.0 - s * s).powf(self.plus_exponent())
    }

    /// The solution density at a point of `R^d`.
    pub fn density(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check_time(t)?;
        if x.len() != self.d {
            return Err(Error::Argument(format!(
                "point has dimension {}, params have d={}",
                x.len(),
                self.d
            )));
        }
        Ok(self.density_profile(norm(x), t))
    }

    /// Density of the distance `R^n(t) = ||Y^n(t)||`: surface area of the
    /// sphere times the radial profile.
    pub fn radial_density(&self, r: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if r < 0.0 {
            return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
        }
        let df = self.d as f64;
        let area = (2f64.ln() + df / 2.0 * PI.ln() - ln_gamma_unchecked(df / 2.0)).exp();
        Ok(area * r.powi(self.d as i32 - 1) * self.density_profile(r, t))
    }

    /// CDF of the distance: `I_{s^2}(d/2, nu+1)` with `s = r / (c t^beta)`.
    pub fn radial_cdf(&self, r: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if r < 0.0 {
            return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
        }
        let s = (r / self.support_radius(t)).min(1.0);
        reg_inc_beta(self.d as f64 / 2.0, self.plus_exponent() + 1.0, s * s)
    }

    /// `E (R^n(t))^p` via the Gamma-ratio formula.
    pub fn radial_moment(&self, p_order: u32, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let df = self.d as f64;
        let nu = self.plus_exponent();
        let p = f64::from(p_order);
        let ln_ratio = ln_gamma_unchecked(df / 2.0 + nu + 1.0) + ln_gamma_unchecked((df + p) / 2.0)
            - ln_gamma_unchecked(nu + 1.0 + (df + p) / 2.0)
            - ln_gamma_unchecked(df / 2.0);
        Ok(ln_ratio.exp() * self.support_radius(t).powi(p_order as i32))
    }

    /// Fourier transform `u_hat(xi, t)` of the density, a function of
    /// `||xi||` by rotational invariance. Tends to `(2 pi)^{-d/2}` as
    /// `||xi|| -> 0`; the characteristic function is `(2 pi)^{d/2}` times it.
    pub fn fourier_transform(&self, xi_norm: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if xi_norm < 0.0 {
            return Err(Error::Domain(format!(
                "frequency modulus must be >= 0, got {xi_norm}"
            )));
        }
        let z = xi_norm * self.support_radius(t);
        Ok((2.0 * PI).powf(-(self.d as f64) / 2.0) * normalized_bessel(self.bessel_order(), z)?)
    }

    /// Time-free density of the rescaled flight `X^n(t^beta) / (c t^beta)`,
    /// supported on the closed unit ball.
    pub fn rescaled_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::Argument(format!(
                "point has dimension {}, params have d={}",
                x.len(),
                self.d
            )));
        }
        let nu = self.plus_exponent();
        let df = self.d as f64;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            return Ok(0.0);
        }
        let amp = (ln_gamma_unchecked(df / 2.0 + nu + 1.0)
            - df / 2.0 * PI.ln()
            - ln_gamma_unchecked(nu + 1.0))
        .exp();
        Ok(amp * (1.0 - r2).powf(nu))
    }

    /// Fourier transform of [`Self::rescaled_density`]; equals
    /// [`Self::fourier_transform`] with the support radius scaled to 1.
    pub fn rescaled_cf(&self, xi_norm: f64) -> Result<f64> {
        if xi_norm < 0.0 {
            return Err(Error::Domain(format!(
                "frequency modulus must be >= 0, got {xi_norm}"
            )));
        }
        Ok((2.0 * PI).powf(-(self.d as f64) / 2.0)
            * normalized_bessel(self.bessel_order(), xi_norm)?)
    }

    /// Sub/normal/super diffusion per the sign of `2 beta - 1`.
    pub fn classify_diffusivity(&self) -> DiffusivityClass {
        let exponent = 2.0 * self.beta;
        let label = match exponent.partial_cmp(&1.0).expect("beta is finite") {
            std::cmp::Ordering::Less => Diffusivity::Sub,
            std::cmp::Ordering::Equal => Diffusivity::Normal,
            std::cmp::Ordering::Greater => Diffusivity::Super,
        };
        DiffusivityClass { label, exponent }
    }

    /// `|u(x,t) - L^{d beta} u(L^beta x, L t)|` — zero up to roundoff for the
    /// self-similar family.
    pub fn self_similar_check(&self, x: &[f64], t: f64, l: f64) -> Result<f64> {
        self.check_time(t)?;
        if !(l > 0.0) {
            return Err(Error::Domain(format!("L must be positive, got {l}")));
        }
        let lhs = self.density(x, t)?;
        let scaled: Vec<f64> = x.iter().map(|v| v * l.powf(self.beta)).collect();
        let rhs = l.powf(self.d as f64 * self.beta) * self.density(&scaled, l * t)?;
        Ok((lhs - rhs).abs())
    }

    /// Finite-difference residual of `d/dt u - ((m-1)/m) Lap(u^m)` for the
    /// classical case `alpha = 2`, evaluated on the unit-amplitude member
    /// `t^{-d beta} (1 - k ||x||^2 / t^{2 beta})_+^{1/(m-1)}` of the family
    /// (the Barenblatt-Kompanets-Zel'dovich-Pattle solution; the mass-one
    /// density is this profile times the constant `C`, which rescales the
    /// nonlinear term by `C^{m-1}`).
    pub fn pme_residual(&self, x: &[f64], t: f64, h: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.alpha != 2.0 {
            return Err(Error::Domain(format!(
                "the PDE residual check requires alpha = 2, got {}",
                self.alpha
            )));
        }
        if !(h > 0.0) || h >= t {
            return Err(Error::Domain(format!("step h must satisfy 0 < h < t, got {h}")));
        }
        if x.len() != self.d {
            return Err(Error::Argument(format!(
                "point has dimension {}, params have d={}",
                x.len(),
                self.d
            )));
        }
        let rad = self.support_radius(t);
        if rad - norm(x) < 10.0 * h * rad {
            return Err(Error::Domain(
                "point too close to the free boundary for the stencil".into(),
            ));
        }
        let profile = |x: &[f64], t: f64| -> f64 {
            let rad = self.support_radius(t);
            let s2 = x.iter().map(|v| v * v).sum::<f64>() / (rad * rad);
            if s2 >= 1.0 {
                0.0
            } else {
                t.powf(-(self.d as f64) * self.beta) * (1.0 - s2).powf(1.0 / (self.m - 1.0))
            }
        };
        let u_t = (profile(x, t + h) - profile(x, t - h)) / (2.0 * h);
        let um = |x: &[f64]| profile(x, t).powf(self.m);
        let mut lap = 0.0;
        let center = um(x);
        let mut pt = x.to_vec();
        for i in 0..self.d {
            pt[i] = x[i] + h;
            let plus = um(&pt);
            pt[i] = x[i] - h;
            let minus = um(&pt);
            pt[i] = x[i];
            lap += (plus + minus - 2.0 * center) / (h * h);
        }
        Ok(u_t - (self.m - 1.0) / self.m * lap)
    }
}

/// `(2/z)^mu Gamma(mu+1) J_mu(z)`, the entire function with value 1 at z = 0.
pub(crate) fn normalized_bessel(mu: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(1.0);
    }
    if z <= 12.0 {
        // series of the normalized function avoids the (2/z)^mu overflow
        let mut term = 1.0;
        let mut sum = 1.0;
        let q = 0.25 * z * z;
        for k in 1..200 {
            let kf = f64::from(k);
            term *= -q / (kf * (kf + mu));
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-30) {
                break;
            }
        }
        Ok(sum)
    } else {
        let ln_pref = mu * (2.0 / z).ln() + ln_gamma_unchecked(mu + 1.0);
        Ok(ln_pref.exp() * bessel_j(mu, z)?)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
