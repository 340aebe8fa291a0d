use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{FredholmError, Result};

/// Indices on which declared order envelopes are verified at construction.
pub const ENVELOPE_CHECK_RANGE: u64 = 8192;

/// Symbol families of a Fourier multiplier, each with a known monotone
/// envelope in `|n|`.
#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    /// `scale · (1 + |n|)^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `scale · ratio^|n|`.
    Geometric { scale: f64, ratio: f64 },
    /// `scale / (shift + n²)`.
    InverseQuadratic { shift: f64, scale: f64 },
    /// Finitely supported values; zero off the table.
    Table(BTreeMap<i64, C64>),
}

impl Symbol {
    pub fn value(&self, n: i64) -> C64 {
        let a = n.unsigned_abs() as f64;
        match self {
            Self::Power { scale, exponent } => C64::new(scale * (1.0 + a).powf(*exponent), 0.0),
            Self::Geometric { scale, ratio } => {
                C64::new(scale * ratio.abs().powf(a), 0.0)
                    * if *ratio < 0.0 && n.unsigned_abs() % 2 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
            }
            Self::InverseQuadratic { shift, scale } => C64::new(scale / (shift + a * a), 0.0),
            Self::Table(t) => t.get(&n).copied().unwrap_or(C64::new(0.0, 0.0)),
        }
    }

    /// Rejects symbols without a bounded non-increasing envelope.
    pub fn validate(&self) -> Result<()> {
        let bad = |why: String| Err(FredholmError::UnboundedSymbol(why));
        match self {
            Self::Power { scale, exponent } => {
                if !scale.is_finite() || !exponent.is_finite() {
                    return bad("non-finite power-law parameters".into());
                }
                if *exponent > 0.0 && *scale != 0.0 {
                    return bad(format!("power exponent {exponent} > 0"));
                }
            }
            Self::Geometric { scale, ratio } => {
                if !scale.is_finite() || !ratio.is_finite() {
                    return bad("non-finite geometric parameters".into());
                }
                if ratio.abs() > 1.0 && *scale != 0.0 {
                    return bad(format!("geometric ratio |{ratio}| > 1"));
                }
            }
            Self::InverseQuadratic { shift, scale } => {
                if !scale.is_finite() || !shift.is_finite() || *shift <= 0.0 {
                    return bad(format!("inverse-quadratic shift {shift} must be > 0"));
                }
            }
            Self::Table(t) => {
                if t.values().any(|v| !v.is_finite()) {
                    return bad("non-finite table entry".into());
                }
            }
        }
        Ok(())
    }

    /// Non-increasing bound `E(k) ≥ |σ(n)|` for all `|n| ≥ k`.
    pub fn envelope(&self, k: u64) -> Result<f64> {
        self.validate()?;
        let a = k as f64;
        Ok(match self {
            Self::Power { scale, exponent } => scale.abs() * (1.0 + a).powf(*exponent),
            Self::Geometric { scale, ratio } => scale.abs() * ratio.abs().powf(a),
            Self::InverseQuadratic { shift, scale } => scale.abs() / (shift + a * a),
            Self::Table(t) => t
                .iter()
                .filter(|(n, _)| n.unsigned_abs() >= k)
                .map(|(_, v)| v.norm())
                .fold(0.0, f64::max),
        })
    }

    /// Certified `sup_{|n| > max_index} |σ(n)|`.
    pub fn tail_bound(&self, max_index: u64) -> Result<f64> {
        self.envelope(max_index + 1)
    }

    /// Certified `sup_n |σ(n)|`.
    pub fn sup_bound(&self) -> Result<f64> {
        self.envelope(0)
    }

    /// Largest `|n|` with a nonzero value, when the support is finite.
    pub fn support_radius(&self) -> Option<u64> {
        match self {
            Self::Table(t) => Some(
                t.iter()
                    .filter(|(_, v)| v.norm() > 0.0)
                    .map(|(n, _)| n.unsigned_abs())
                    .max()
                    .unwrap_or(0),
            ),
            Self::Power { scale, .. }
            | Self::Geometric { scale, .. }
            | Self::InverseQuadratic { scale, .. }
                if *scale == 0.0 =>
            {
                Some(0)
            }
            Self::Geometric { ratio, .. } if *ratio == 0.0 => Some(0),
            _ => None,
        }
    }

    /// Natural order `m` and the smallest `C` with `|σ(n)| ≤ C (1 + |n|)^m`.
    pub fn natural_order(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(match self {
            Self::Power { scale, exponent } => (*exponent, scale.abs()),
            Self::InverseQuadratic { shift, scale } => {
                // (1 + x)² / (shift + x²) peaks at x = shift.
                let f = |x: f64| (1.0 + x).powi(2) / (shift + x * x);
                let c = [0.0, shift.floor(), shift.ceil()]
                    .into_iter()
                    .map(f)
                    .fold(1.0, f64::max);
                (-2.0, scale.abs() * c)
            }
            Self::Geometric { scale, ratio } => {
                let m = -2.0;
                let r = ratio.abs();
                if r >= 1.0 && *scale != 0.0 {
                    return Err(FredholmError::UnboundedSymbol(
                        "geometric ratio 1 has order 0".into(),
                    ));
                }
                let mut c: f64 = scale.abs();
                if r > 0.0 {
                    // r^x (1 + x)^2 peaks at 1 + x = 2 / ln(1/r).
                    let peak = (2.0 / (1.0 / r).ln() - 1.0).max(0.0);
                    for x in [peak.floor(), peak.ceil()] {
                        c = c.max(scale.abs() * r.powf(x) * (1.0 + x).powi(2));
                    }
                }
                (m, c)
            }
            Self::Table(t) => {
                let m = -2.0;
                let c = t
                    .iter()
                    .map(|(n, v)| v.norm() * (1.0 + n.unsigned_abs() as f64).powf(-m))
                    .fold(0.0, f64::max);
                (m, c)
            }
        })
    }
}

/// A diagonal Fourier multiplier `x̂(n) ↦ σ(n) x̂(n)` with a declared order
/// envelope `|σ(n)| ≤ C (1 + |n|)^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMultiplier {
    symbol: Symbol,
    order: f64,
    constant: f64,
}

impl DiagonalMultiplier {
    /// Uses the symbol's natural order and tightest constant.
    pub fn new(symbol: Symbol) -> Result<Self> {
        let (order, constant) = symbol.natural_order()?;
        Self::with_order(symbol, order, constant)
    }

    /// Declares order and constant explicitly; both are checked on
    /// `|n| ≤ ENVELOPE_CHECK_RANGE`.
    pub fn with_order(symbol: Symbol, order: f64, constant: f64) -> Result<Self> {
        symbol.validate()?;
        if !(order <= 0.0) || !constant.is_finite() || constant < 0.0 {
            return Err(FredholmError::InvalidArgument(format!(
                "multiplier needs order <= 0 and finite C >= 0, got m = {order}, C = {constant}"
            )));
        }
        let check_to = match symbol.support_radius() {
            Some(r) => r.min(ENVELOPE_CHECK_RANGE),
            None => ENVELOPE_CHECK_RANGE,
        };
        for k in 0..=check_to as i64 {
            let bound = constant * (1.0 + k as f64).powf(order) * (1.0 + 1e-12);
            for n in [k, -k] {
                let v = symbol.value(n).norm();
                if v > bound {
                    return Err(FredholmError::InvalidArgument(format!(
                        "|σ({n})| = {v} exceeds C (1 + |n|)^m = {bound}"
                    )));
                }
            }
        }
        Ok(Self {
            symbol,
            order,
            constant,
        })
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn value(&self, n: i64) -> C64 {
        self.symbol.value(n)
    }
}
