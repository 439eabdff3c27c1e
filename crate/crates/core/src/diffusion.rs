//! Geometric Brownian motion and the fundamental objects of its resolvent
//! theory.
//!
//! The state process is `dX = b X dt + σ X dW` on `(0, ∞)`. The increasing
//! and decreasing positive solutions of `L u − r u = 0` are the powers
//! `ψ(x) = x^ρ⁺` and `φ(x) = x^ρ⁻`, normalised so that `ψ(1) = φ(1) = 1`.
//! The scale function is anchored at 1. Every other module only ever talks
//! to the process through the [`Diffusion`] trait, so another regular
//! diffusion with known fundamental solutions can be plugged in later.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which `2b/σ²` is treated as exactly 1 and the
/// scale function becomes `ln x`.
const LOG_SCALE_THRESHOLD: f64 = 1e-10;

/// Evaluators for a regular one-dimensional diffusion with natural
/// boundaries, together with a fixed discount rate.
pub trait Diffusion {
    fn drift(&self, x: f64) -> f64;
    fn volatility(&self, x: f64) -> f64;
    fn discount_rate(&self) -> f64;

    /// Increasing fundamental solution of `L u − r u = 0`.
    fn psi(&self, x: f64) -> f64;
    fn psi_prime(&self, x: f64) -> f64;
    /// Decreasing fundamental solution of `L u − r u = 0`.
    fn phi(&self, x: f64) -> f64;
    fn phi_prime(&self, x: f64) -> f64;

    fn scale(&self, x: f64) -> f64;
    fn scale_prime(&self, x: f64) -> f64;

    /// `ζ = φ/ψ`, strictly decreasing from `(0, ∞)` onto `(0, ∞)`.
    fn zeta(&self, x: f64) -> f64 {
        self.phi(x) / self.psi(x)
    }

    fn zeta_inverse(&self, y: f64) -> f64;

    fn wronskian(&self, x: f64) -> f64 {
        self.psi_prime(x) * self.phi(x) - self.psi(x) * self.phi_prime(x)
    }

    /// Wronskian divided by the scale density. Constant in `x`.
    fn wronskian_gamma_at(&self, x: f64) -> f64 {
        self.wronskian(x) / self.scale_prime(x)
    }

    /// `L u − r u` given the value and first two derivatives of `u` at `x`.
    fn resolvent_operator(&self, x: f64, u: f64, du: f64, d2u: f64) -> f64 {
        let s = self.volatility(x);
        self.drift(x) * du + 0.5 * s * s * d2u - self.discount_rate() * u
    }
}

/// Geometric Brownian motion with drift `b`, volatility `sigma`, discounted
/// at rate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct DiffusionModel {
    b: f64,
    sigma: f64,
    r: f64,
    rho_plus: f64,
    rho_minus: f64,
}

/// Wire form of a [`DiffusionModel`]: the three primitive rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub b: f64,
    pub sigma: f64,
    pub r: f64,
}

impl TryFrom<ModelSpec> for DiffusionModel {
    type Error = Error;
    fn try_from(spec: ModelSpec) -> Result<Self> {
        DiffusionModel::new(spec.b, spec.sigma, spec.r)
    }
}

impl From<DiffusionModel> for ModelSpec {
    fn from(m: DiffusionModel) -> Self {
        ModelSpec {
            b: m.b,
            sigma: m.sigma,
            r: m.r,
        }
    }
}

/// Roots of `½σ²ρ(ρ−1) + bρ − r = 0`, returned as `(ρ⁺, ρ⁻)`.
///
/// The root without cancellation is computed directly and the other one from
/// the product of the roots, `ρ⁺ρ⁻ = −2r/σ²`.
pub fn characteristic_roots(b: f64, sigma: f64, r: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidModel(format!("sigma must be positive, got {sigma}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidModel(format!("r must be positive, got {r}")));
    }
    if !b.is_finite() {
        return Err(Error::InvalidModel(format!("b must be finite, got {b}")));
    }
    let s2 = sigma * sigma;
    let h = 0.5 - b / s2;
    let product = -2.0 * r / s2;
    let root = (h * h - product).sqrt();
    if h >= 0.0 {
        let plus = h + root;
        Ok((plus, product / plus))
    } else {
        let minus = h - root;
        Ok((product / minus, minus))
    }
}

impl DiffusionModel {
    pub fn new(b: f64, sigma: f64, r: f64) -> Result<Self> {
        let (rho_plus, rho_minus) = characteristic_roots(b, sigma, r)?;
        if !(b < r) {
            return Err(Error::InvalidModel(format!(
                "drift b = {b} must be below the discount rate r = {r}"
            )));
        }
        Ok(Self {
            b,
            sigma,
            r,
            rho_plus,
            rho_minus,
        })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }

    /// `2b/σ²`, the exponent of the scale density `S'(x) = x^{-2b/σ²}`.
    fn scale_exponent(&self) -> f64 {
        2.0 * self.b / (self.sigma * self.sigma)
    }

    fn log_scale(&self) -> bool {
        (1.0 - self.scale_exponent()).abs() < LOG_SCALE_THRESHOLD
    }

    /// Second derivative of ψ.
    pub fn psi_second(&self, x: f64) -> f64 {
        let p = self.rho_plus;
        p * (p - 1.0) * x.powf(p - 2.0)
    }

    pub fn phi_second(&self, x: f64) -> f64 {
        let m = self.rho_minus;
        m * (m - 1.0) * x.powf(m - 2.0)
    }

    /// Evaluates `½σ²ρ(ρ−1) + bρ − r` at a candidate exponent.
    pub fn characteristic_residual(&self, rho: f64) -> f64 {
        0.5 * self.sigma * self.sigma * rho * (rho - 1.0) + self.b * rho - self.r
    }

    /// `γ` at the scale anchor `x = 1`.
    pub fn wronskian_gamma(&self) -> f64 {
        self.wronskian_gamma_at(1.0)
    }
}

impl Diffusion for DiffusionModel {
    fn drift(&self, x: f64) -> f64 {
        self.b * x
    }

    fn volatility(&self, x: f64) -> f64 {
        self.sigma * x
    }

    fn discount_rate(&self) -> f64 {
        self.r
    }

    fn psi(&self, x: f64) -> f64 {
        x.powf(self.rho_plus)
    }

    fn psi_prime(&self, x: f64) -> f64 {
        self.rho_plus * x.powf(self.rho_plus - 1.0)
    }

    fn phi(&self, x: f64) -> f64 {
        x.powf(self.rho_minus)
    }

    fn phi_prime(&self, x: f64) -> f64 {
        self.rho_minus * x.powf(self.rho_minus - 1.0)
    }

    fn scale(&self, x: f64) -> f64 {
        if self.log_scale() {
            x.ln()
        } else {
            let e = 1.0 - self.scale_exponent();
            (x.powf(e) - 1.0) / e
        }
    }

    fn scale_prime(&self, x: f64) -> f64 {
        if self.log_scale() {
            1.0 / x
        } else {
            x.powf(-self.scale_exponent())
        }
    }

    fn zeta(&self, x: f64) -> f64 {
        x.powf(self.rho_minus - self.rho_plus)
    }

    fn zeta_inverse(&self, y: f64) -> f64 {
        y.powf(1.0 / (self.rho_minus - self.rho_plus))
    }
}

/// `E_x[e^{-r τ_y}]` for the first hitting time of `y` from `x`.
pub fn hitting_laplace<D: Diffusion>(d: &D, x: f64, y: f64) -> Result<f64> {
    check_state(x)?;
    check_state(y)?;
    if x <= y {
        Ok(d.psi(x) / d.psi(y))
    } else {
        Ok(d.phi(x) / d.phi(y))
    }
}

/// Expected local time at `y` accumulated before the first exit from
/// `(a, b)`, started at `x`, from the Green function of the killed process.
///
/// Local time is normalised by `σ²`, i.e. it is the occupation density
/// `lim (2ε)⁻¹ ∫ 1{|X−y|<ε} σ²(X) ds`.
pub fn green_expected_local_time<D: Diffusion>(d: &D, a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    if !(a > 0.0 && a < b) {
        return Err(Error::OutOfDomain(a));
    }
    if !(x > a && x < b) {
        return Err(Error::OutOfDomain(x));
    }
    if !(y > a && y < b) {
        return Err(Error::OutOfDomain(y));
    }
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let sa = d.scale(a);
    let sb = d.scale(b);
    let green = (d.scale(lo) - sa) * (sb - d.scale(hi)) / (sb - sa);
    Ok(2.0 * green / d.scale_prime(y))
}

/// Slope of the hat image `û` at `ζ(x)`, given `u(x)` and `u'(x)`.
///
/// For an ODE solution `Aψ + Bφ` this is exactly `B`.
pub fn hat_slope<D: Diffusion>(d: &D, x: f64, u: f64, du: f64) -> f64 {
    (u * d.psi_prime(x) - du * d.psi(x)) / d.wronskian(x)
}

/// Second derivative of the hat image `û` at `ζ(x)`:
/// `2ψ³(L u − r u)/(σ²W²)`, so its sign is the sign of `L u − r u`.
pub fn hat_curvature<D: Diffusion>(d: &D, x: f64, u: f64, du: f64, d2u: f64) -> f64 {
    let psi = d.psi(x);
    let w = d.wronskian(x);
    let s = d.volatility(x);
    2.0 * psi * psi * psi * d.resolvent_operator(x, u, du, d2u) / (s * s * w * w)
}

fn check_state(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain(x))
    }
}

/// The image `ĝ = (g/ψ)∘ζ⁻¹` of a function of the state.
///
/// Solutions of `L u − r u = 0` become affine functions of `y`, and the sign
/// of `ĝ''(ζ(x))` is the sign of `(L g − r g)(x)`.
pub struct HatFunction<'a, D, G> {
    diffusion: &'a D,
    g: G,
}

pub fn hat_transform<D: Diffusion, G: Fn(f64) -> f64>(diffusion: &D, g: G) -> HatFunction<'_, D, G> {
    HatFunction { diffusion, g }
}

impl<D: Diffusion, G: Fn(f64) -> f64> HatFunction<'_, D, G> {
    pub fn eval(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::OutOfDomain(y));
        }
        let x = self.diffusion.zeta_inverse(y);
        Ok((self.g)(x) / self.diffusion.psi(x))
    }

    /// Value at the hat coordinate of a state.
    pub fn eval_at_state(&self, x: f64) -> f64 {
        (self.g)(x) / self.diffusion.psi(x)
    }

    /// Central second difference with relative step `rel_step`.
    pub fn second_difference(&self, y: f64, rel_step: f64) -> Result<f64> {
        let h = rel_step * y;
        let lo = self.eval(y - h)?;
        let mid = self.eval(y)?;
        let hi = self.eval(y + h)?;
        Ok((hi - 2.0 * mid + lo) / (h * h))
    }
}
