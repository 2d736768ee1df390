use std::fmt;
use std::str::FromStr;

use super::hermite::hermite_scaled_all;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_TRUNCATION: usize = 64;

/// Power series `F(x) = Σ_{k≤K} a_k x^k` with a claimed Fock bound
/// `F₂(x) ≤ M e^{βx}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticFunction {
    pub name: String,
    pub beta: f64,
    pub m_const: f64,
    pub coeffs: Vec<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

fn taylor(k_max: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(k_max + 1);
    let mut inv_fact = 1.0;
    for k in 0..=k_max {
        if k > 0 {
            inv_fact /= k as f64;
        }
        c.push(f(k) * inv_fact);
    }
    c
}

impl AnalyticFunction {
    pub fn new(name: impl Into<String>, beta: f64, m_const: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(invalid("truncation order K must be at least 1"));
        }
        if !(beta > 0.0) || !(m_const > 0.0) {
            return Err(invalid("β and M must be positive"));
        }
        Ok(AnalyticFunction { name: name.into(), beta, m_const, coeffs })
    }

    pub fn exp(k: usize) -> Self {
        Self::new("exp", 1.0, 1.0, taylor(k, |_| 1.0)).expect("valid")
    }

    pub fn sin(k: usize) -> Self {
        let c = taylor(k, |j| match j % 4 {
            1 => 1.0,
            3 => -1.0,
            _ => 0.0,
        });
        Self::new("sin", 1.0, 0.5, c).expect("valid")
    }

    pub fn cos(k: usize) -> Self {
        let c = taylor(k, |j| match j % 4 {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        });
        Self::new("cos", 1.0, 1.0, c).expect("valid")
    }

    pub fn sinh(k: usize) -> Self {
        Self::new("sinh", 1.0, 0.5, taylor(k, |j| f64::from(u8::from(j % 2 == 1)))).expect("valid")
    }

    pub fn cosh(k: usize) -> Self {
        Self::new("cosh", 1.0, 1.0, taylor(k, |j| f64::from(u8::from(j % 2 == 0)))).expect("valid")
    }

    /// `x^k`, with `β = 1` and the bound `M = k! (k/e)^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k.max(1) + 1];
        c[k] = 1.0;
        let mut f = Self::new(format!("x^{k}"), 1.0, 1.0, c).expect("valid");
        f.m_const = f.polynomial_bound();
        f
    }

    /// A polynomial with `β = 1` and `M = Σ k! a_k² (k/e)^k ≥ sup F₂(x) e^{−x}`.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let mut f = Self::new("poly", 1.0, 1.0, coeffs)?;
        f.m_const = f.polynomial_bound().max(f64::MIN_POSITIVE);
        Ok(f)
    }

    fn polynomial_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let peak = if k == 0 { 1.0 } else { (k as f64 / std::f64::consts::E).powi(k as i32) };
                factorial(k) * a * a * peak
            })
            .sum()
    }

    /// Looks up a named function: `exp`, `sin`, `cos`, `sinh`, `cosh`, `id`, `x^k`.
    pub fn by_name(name: &str, k: usize) -> Result<Self> {
        match name {
            "exp" => Ok(Self::exp(k)),
            "sin" => Ok(Self::sin(k)),
            "cos" => Ok(Self::cos(k)),
            "sinh" => Ok(Self::sinh(k)),
            "cosh" => Ok(Self::cosh(k)),
            "id" | "x" => Ok(Self::monomial(1)),
            _ => match name.strip_prefix("x^").map(str::parse::<usize>) {
                Some(Ok(p)) => Ok(Self::monomial(p)),
                _ => Err(invalid(format!("unknown function `{name}`"))),
            },
        }
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    /// `F₂(x) = Σ k! a_k² x^k`.
    pub fn f2_transform(&self) -> AnalyticFunction {
        let mut fact = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| {
                if k > 0 {
                    fact *= k as f64;
                }
                fact * a * a
            })
            .collect();
        AnalyticFunction { name: format!("F2[{}]", self.name), beta: self.beta, m_const: self.m_const, coeffs }
    }

    /// Checks `F₂(x) ≤ M e^{βx}` on an equispaced grid of `[0, 50]`.
    pub fn fock_check(&self) -> bool {
        let f2 = self.f2_transform();
        (0..=500).all(|i| {
            let x = 0.1 * f64::from(i);
            f2.eval(x) <= self.m_const * (self.beta * x).exp() * (1.0 + 1e-12)
        })
    }

    /// Coefficient bound `|a_k| ≤ √M (βe)^{k/2} / √(k! k^k)`.
    pub fn coefficient_bound(&self, k: usize) -> f64 {
        if k == 0 {
            return self.m_const.sqrt();
        }
        let kf = k as f64;
        let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
        (0.5 * (self.m_const.ln() + kf * (self.beta.ln() + 1.0) - ln_fact - kf * kf.ln())).exp()
    }

    /// Bound on `Σ_{k>K} |a_k| r^k` from the coefficient estimate.
    pub fn tail_bound(&self, radius: f64) -> f64 {
        let k0 = self.order() + 1;
        (k0..k0 + 400)
            .map(|k| self.coefficient_bound(k) * radius.powi(k as i32))
            .take_while(|t| t.is_finite())
            .sum()
    }

    /// True when the truncation error at `radius` is below `1e−10`.
    pub fn truncation_ok(&self, radius: f64) -> bool {
        self.tail_bound(radius) < 1e-10
    }

    /// `γ^k k! a_k`, the factors multiplying `h_k = H_k/k!` in a Wick sum.
    pub fn wick_weights(&self, gamma: f64) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.coeffs.len());
        let mut scale = 1.0;
        for (k, a) in self.coeffs.iter().enumerate() {
            if k > 0 {
                scale *= gamma * k as f64;
            }
            w.push(a * scale);
        }
        w
    }
}

/// `:F(γX):` at `X = value` with `Var X = v`, i.e. `Σ_k a_k γ^k H_k(value, v)`.
pub fn wick_analytic(f: &AnalyticFunction, gamma: f64, value: f64, v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(invalid(format!("variance {v} is negative")));
    }
    Ok(wick_eval(&f.wick_weights(gamma), value, v))
}

/// `Σ_k w_k h_k(x, v)` with precomputed [`AnalyticFunction::wick_weights`].
pub fn wick_eval(weights: &[f64], x: f64, v: f64) -> f64 {
    let h = hermite_scaled_all(weights.len() - 1, x, v);
    weights.iter().zip(&h).map(|(w, h)| w * h).sum()
}

impl fmt::Display for AnalyticFunction {
    /// `name beta M K a0 a1 … aK`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?} {:?} {}", self.name, self.beta, self.m_const, self.order())?;
        for a in &self.coeffs {
            write!(f, " {a:?}")?;
        }
        Ok(())
    }
}

impl FromStr for AnalyticFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tok: Vec<&str> = s.split_whitespace().collect();
        let bad = |m: &str| Error::Parse(format!("analytic function: {m}"));
        if tok.len() < 4 {
            return Err(bad("expected `name beta M K a0 … aK`"));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|e| bad(&e.to_string()));
        let k: usize = tok[3].parse().map_err(|_| bad("K is not an integer"))?;
        if tok.len() != 5 + k {
            return Err(bad("coefficient count does not match K"));
        }
        let coeffs = tok[4..].iter().map(|t| num(t)).collect::<Result<_>>()?;
        AnalyticFunction::new(tok[0], num(tok[1])?, num(tok[2])?, coeffs)
    }
}
