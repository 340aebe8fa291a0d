use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::approximation::{Budget, DEFAULT_THETA};
use crate::error::{FredholmError, Result};
use crate::operator_core::{
    Basis, CoeffVector, CompactOperator, DiagonalMultiplier, FiniteMatrix, FiniteRankOperator,
    KernelFn, KernelTerm, RealFn, SampledKernel, SeparableKernel, Symbol, VectorSpec, C64,
};
use crate::psido_circle::CircleOperator;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_NODES: usize = 64;
pub const DEFAULT_FOURIER_INDEX: usize = 256;

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn one() -> f64 {
    1.0
}

/// A real number, or a complex one written `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> C64 {
        match self {
            Self::Real(r) => C64::new(r, 0.0),
            Self::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// A function of one variable: an expression string (in `s` or `t`, both
/// bound to the argument) or `{"poly": [c0, c1, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FnSpec {
    Expr(String),
    Poly { poly: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub a: FnSpec,
    pub b: FnSpec,
    #[serde(default = "one")]
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    Power {
        #[serde(default = "one")]
        scale: f64,
        exponent: f64,
    },
    Geometric {
        #[serde(default = "one")]
        scale: f64,
        ratio: f64,
    },
    InverseQuadratic {
        #[serde(default = "one")]
        scale: f64,
        shift: f64,
    },
    Table {
        #[serde(with = "index_keys")]
        values: BTreeMap<i64, Scalar>,
    },
}

impl SymbolSpec {
    pub fn to_symbol(&self) -> Symbol {
        match self {
            Self::Power { scale, exponent } => Symbol::Power {
                scale: *scale,
                exponent: *exponent,
            },
            Self::Geometric { scale, ratio } => Symbol::Geometric {
                scale: *scale,
                ratio: *ratio,
            },
            Self::InverseQuadratic { scale, shift } => Symbol::InverseQuadratic {
                shift: *shift,
                scale: *scale,
            },
            Self::Table { values } => {
                Symbol::Table(values.iter().map(|(&n, v)| (n, v.value())).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixBasis {
    #[default]
    Euclidean,
    /// Rows and columns indexed by Fourier modes `−N..=N`.
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteRankSpec {
    pub left: Vec<RhsSpec>,
    pub right: Vec<RhsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `Σ coeff · a(s) b(t)` on `[0, 1]`.
    SeparableKernel {
        terms: Vec<TermSpec>,
    },
    /// A general kernel `k(s, t)` sampled on the grid.
    SampledKernel {
        expr: String,
    },
    Multiplier {
        symbol: SymbolSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constant: Option<f64>,
    },
    Matrix {
        rows: Vec<Vec<Scalar>>,
        #[serde(default)]
        basis: MatrixBasis,
    },
    FiniteRank(FiniteRankSpec),
    Sum {
        terms: Vec<OperatorSpec>,
    },
    Scaled {
        factor: Scalar,
        operator: Box<OperatorSpec>,
    },
    /// Multiplier of negative order plus an optional smoothing term.
    Circle {
        symbol: SymbolSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constant: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothing: Option<FiniteRankSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsSpec {
    /// `Σ c_k s^k` on the grid.
    Poly { coeffs: Vec<f64> },
    /// An expression in `s` on the grid.
    Function { expr: String },
    /// Sparse Fourier coefficients.
    Fourier {
        #[serde(with = "index_keys")]
        coeffs: BTreeMap<i64, Scalar>,
    },
    /// `x̂(n) = scale · (1 + |n|)^(−exponent)`.
    PowerDecay {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Coefficients in the working basis.
    Explicit { coeffs: Vec<Scalar> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub operator: OperatorSpec,
    pub rhs: RhsSpec,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Grid nodes or Fourier max index; fixed-size matrices bring their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

/// Fourier-index maps written with string keys, as JSON objects require.
mod index_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Scalar;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<i64, Scalar>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        ser.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<i64, Scalar>, D::Error> {
        let raw = BTreeMap::<String, Scalar>::deserialize(de)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<i64>()
                    .map(|n| (n, v))
                    .map_err(|_| D::Error::custom(format!("Fourier index {k:?} is not an integer")))
            })
            .collect()
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> FredholmError {
    FredholmError::ValidationError {
        field: field.into(),
        message: message.into(),
    }
}

fn check_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is not finite")))
    }
}

fn check_scalar(field: &str, v: Scalar) -> Result<()> {
    let z = v.value();
    check_finite(field, z.re)?;
    check_finite(field, z.im)
}

impl ProblemSpec {
    pub fn validate(&self, budget: Budget) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(invalid(
                "theta",
                format!("{} is outside (0, 1)", self.theta),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(
                "tol",
                format!("{} is not a positive number", self.tol),
            ));
        }
        if let Some(r) = self.resolution {
            if r == 0 || r > budget.max_index {
                return Err(invalid(
                    "resolution",
                    format!("{r} is outside 1..={}", budget.max_index),
                ));
            }
        }
        self.operator.validate("operator")?;
        self.rhs.validate("rhs")?;
        self.working_basis().map(|_| ())
    }

    /// The basis the problem is solved on.
    pub fn working_basis(&self) -> Result<Basis> {
        let want = self.operator.want("operator")?;
        let want = merge(want, self.rhs.want(), "rhs")?;
        let res = self.resolution;
        match want {
            Want::Any => match &self.rhs {
                RhsSpec::Explicit { coeffs } => Ok(Basis::euclidean(coeffs.len())),
                _ => Ok(Basis::grid(res.unwrap_or(DEFAULT_GRID_NODES))),
            },
            Want::Grid => Ok(Basis::grid(res.unwrap_or(DEFAULT_GRID_NODES))),
            Want::Fourier => Ok(Basis::fourier(res.unwrap_or(DEFAULT_FOURIER_INDEX))),
            Want::Fixed(b) => match res {
                Some(r) if r != b.resolution() => Err(invalid(
                    "resolution",
                    format!(
                        "{r} conflicts with the operator's fixed size {}",
                        b.resolution()
                    ),
                )),
                _ => Ok(b),
            },
        }
    }

    pub fn build_operator(&self, basis: &Basis) -> Result<CompactOperator> {
        self.operator.build(basis)
    }

    pub fn rhs_spec(&self, basis: &Basis) -> Result<VectorSpec> {
        self.rhs.to_vector_spec(basis)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Want {
    Any,
    Grid,
    Fourier,
    Fixed(Basis),
}

fn merge(a: Want, b: Want, field: &str) -> Result<Want> {
    let clash = |a: &Want, b: &Want| invalid(field, format!("incompatible bases {a:?} and {b:?}"));
    Ok(match (a, b) {
        (Want::Any, w) | (w, Want::Any) => w,
        (Want::Grid, Want::Grid) => Want::Grid,
        (Want::Fourier, Want::Fourier) => Want::Fourier,
        (Want::Fixed(x), Want::Fixed(y)) => {
            if x == y {
                Want::Fixed(x)
            } else {
                return Err(clash(&Want::Fixed(x), &Want::Fixed(y)));
            }
        }
        (Want::Fixed(x), w) | (w, Want::Fixed(x)) => {
            let ok = match w {
                Want::Grid => matches!(x, Basis::Grid(_)),
                Want::Fourier => matches!(x, Basis::Fourier { .. }),
                _ => false,
            };
            if !ok {
                return Err(clash(&Want::Fixed(x), &w));
            }
            Want::Fixed(x)
        }
        (a, b) => return Err(clash(&a, &b)),
    })
}

fn real_fn(spec: &FnSpec, field: &str) -> Result<RealFn> {
    match spec {
        FnSpec::Poly { poly } => Ok(RealFn::Poly(poly.clone())),
        FnSpec::Expr(src) => {
            let e = Expr::parse(src).map_err(|e| invalid(field, e.to_string()))?;
            Ok(RealFn::named(src.clone(), move |x| e.eval(x, x)))
        }
    }
}

fn multiplier(
    symbol: &SymbolSpec,
    order: Option<f64>,
    constant: Option<f64>,
    field: &str,
) -> Result<DiagonalMultiplier> {
    let sym = symbol.to_symbol();
    let built = match (order, constant) {
        (None, None) => DiagonalMultiplier::new(sym),
        (Some(m), Some(c)) => DiagonalMultiplier::with_order(sym, m, c),
        // The natural constant still holds for any order above the natural one.
        (Some(m), None) => sym
            .natural_order()
            .and_then(|(_, c)| DiagonalMultiplier::with_order(sym, m, c)),
        (None, Some(_)) => {
            return Err(invalid(
                format!("{field}.constant"),
                "constant needs an order",
            ))
        }
    };
    built.map_err(|e| match e {
        FredholmError::UnboundedSymbol(_) => e,
        other => invalid(format!("{field}.symbol"), other.to_string()),
    })
}

impl OperatorSpec {
    fn validate(&self, field: &str) -> Result<()> {
        match self {
            Self::SeparableKernel { terms } => {
                if terms.is_empty() {
                    return Err(invalid(
                        format!("{field}.terms"),
                        "at least one term is required",
                    ));
                }
                for (i, t) in terms.iter().enumerate() {
                    let f = format!("{field}.terms[{i}]");
                    real_fn(&t.a, &format!("{f}.a"))?;
                    real_fn(&t.b, &format!("{f}.b"))?;
                    check_finite(&format!("{f}.coeff"), t.coeff)?;
                }
                Ok(())
            }
            Self::SampledKernel { expr } => Expr::parse(expr)
                .map(|_| ())
                .map_err(|e| invalid(format!("{field}.expr"), e.to_string())),
            Self::Multiplier {
                symbol,
                order,
                constant,
            } => multiplier(symbol, *order, *constant, field).map(|_| ()),
            Self::Circle {
                symbol,
                order,
                constant,
                smoothing,
            } => {
                let m = multiplier(symbol, *order, *constant, field)?;
                if !(m.order() < 0.0) {
                    return Err(invalid(
                        format!("{field}.order"),
                        format!("circle operators need order < 0, got {}", m.order()),
                    ));
                }
                if let Some(s) = smoothing {
                    s.validate(&format!("{field}.smoothing"))?;
                }
                Ok(())
            }
            Self::Matrix { rows, basis } => {
                let n = rows.len();
                if n == 0 {
                    return Err(invalid(format!("{field}.rows"), "matrix is empty"));
                }
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(invalid(
                            format!("{field}.rows[{i}]"),
                            format!("expected {n} entries, found {}", row.len()),
                        ));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        check_scalar(&format!("{field}.rows[{i}][{j}]"), v)?;
                    }
                }
                if *basis == MatrixBasis::Fourier && n % 2 == 0 {
                    return Err(invalid(
                        format!("{field}.rows"),
                        format!("a Fourier matrix needs odd size 2N + 1, got {n}"),
                    ));
                }
                Ok(())
            }
            Self::FiniteRank(spec) => spec.validate(field),
            Self::Sum { terms } => {
                if terms.is_empty() {
                    return Err(invalid(
                        format!("{field}.terms"),
                        "at least one term is required",
                    ));
                }
                for (i, t) in terms.iter().enumerate() {
                    t.validate(&format!("{field}.terms[{i}]"))?;
                }
                Ok(())
            }
            Self::Scaled { factor, operator } => {
                check_scalar(&format!("{field}.factor"), *factor)?;
                operator.validate(&format!("{field}.operator"))
            }
        }
    }

    fn want(&self, field: &str) -> Result<Want> {
        Ok(match self {
            Self::SeparableKernel { .. } | Self::SampledKernel { .. } => Want::Grid,
            Self::Multiplier { .. } | Self::Circle { .. } => Want::Fourier,
            Self::Matrix { rows, basis } => Want::Fixed(match basis {
                MatrixBasis::Euclidean => Basis::euclidean(rows.len()),
                MatrixBasis::Fourier => Basis::fourier(rows.len().saturating_sub(1) / 2),
            }),
            Self::FiniteRank(spec) => spec.want(),
            Self::Sum { terms } => {
                let mut w = Want::Any;
                for (i, t) in terms.iter().enumerate() {
                    let f = format!("{field}.terms[{i}]");
                    w = merge(w, t.want(&f)?, &f)?;
                }
                w
            }
            Self::Scaled { operator, .. } => operator.want(&format!("{field}.operator"))?,
        })
    }

    pub fn build(&self, basis: &Basis) -> Result<CompactOperator> {
        Ok(match self {
            Self::SeparableKernel { terms } => {
                let terms = terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let f = format!("operator.terms[{i}]");
                        Ok(KernelTerm::new(real_fn(&t.a, &f)?, real_fn(&t.b, &f)?)
                            .with_coeff(t.coeff))
                    })
                    .collect::<Result<Vec<_>>>()?;
                SeparableKernel::new(terms, basis)?.into()
            }
            Self::SampledKernel { expr } => {
                let e = Expr::parse(expr)?;
                SampledKernel::new(KernelFn::new(expr.clone(), move |s, t| e.eval(s, t)), basis)?
                    .into()
            }
            Self::Multiplier {
                symbol,
                order,
                constant,
            } => multiplier(symbol, *order, *constant, "operator")?.into(),
            Self::Circle { .. } => self.circle(basis)?.to_operator()?,
            Self::Matrix { rows, .. } => {
                let n = rows.len();
                let m = DMatrix::from_fn(n, n, |i, j| rows[i][j].value());
                FiniteMatrix::in_basis(basis.clone(), m)?.into()
            }
            Self::FiniteRank(spec) => spec.build(basis)?.into(),
            Self::Sum { terms } => {
                let mut it = terms.iter();
                let first = it
                    .next()
                    .ok_or_else(|| invalid("operator.terms", "at least one term is required"))?
                    .build(basis)?;
                it.try_fold(first, |acc, t| CompactOperator::sum(acc, t.build(basis)?))?
            }
            Self::Scaled { factor, operator } => {
                CompactOperator::scaled(factor.value(), operator.build(basis)?)
            }
        })
    }

    /// The circle operator described by a `circle` or `multiplier` spec.
    pub fn circle(&self, basis: &Basis) -> Result<CircleOperator> {
        match self {
            Self::Circle {
                symbol,
                order,
                constant,
                smoothing,
            } => {
                let p = CircleOperator::new(multiplier(symbol, *order, *constant, "operator")?)?;
                match smoothing {
                    Some(s) => p.with_smoothing(s.build(basis)?),
                    None => Ok(p),
                }
            }
            Self::Multiplier {
                symbol,
                order,
                constant,
            } => CircleOperator::new(multiplier(symbol, *order, *constant, "operator")?),
            _ => Err(invalid(
                "operator.kind",
                "expected a circle or multiplier operator",
            )),
        }
    }
}

impl FiniteRankSpec {
    fn validate(&self, field: &str) -> Result<()> {
        if self.left.len() != self.right.len() {
            return Err(invalid(
                field,
                format!(
                    "{} left vectors but {} right vectors",
                    self.left.len(),
                    self.right.len()
                ),
            ));
        }
        for (i, v) in self.left.iter().enumerate() {
            v.validate(&format!("{field}.left[{i}]"))?;
        }
        for (i, v) in self.right.iter().enumerate() {
            v.validate(&format!("{field}.right[{i}]"))?;
        }
        Ok(())
    }

    fn want(&self) -> Want {
        self.left
            .iter()
            .chain(&self.right)
            .map(RhsSpec::want)
            .find(|w| *w != Want::Any)
            .unwrap_or(Want::Any)
    }

    fn build(&self, basis: &Basis) -> Result<FiniteRankOperator> {
        let sample = |vs: &[RhsSpec]| -> Result<Vec<CoeffVector>> {
            vs.iter()
                .map(|v| v.to_vector_spec(basis)?.sample(basis))
                .collect()
        };
        let (left, right) = (sample(&self.left)?, sample(&self.right)?);
        if left.is_empty() {
            return Ok(FiniteRankOperator::zero(basis.clone()));
        }
        FiniteRankOperator::new(left, right)
    }
}

impl RhsSpec {
    fn validate(&self, field: &str) -> Result<()> {
        match self {
            Self::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .try_for_each(|(i, &c)| check_finite(&format!("{field}.coeffs[{i}]"), c)),
            Self::Function { expr } => Expr::parse(expr)
                .map(|_| ())
                .map_err(|e| invalid(format!("{field}.expr"), e.to_string())),
            Self::Fourier { coeffs } => coeffs
                .iter()
                .try_for_each(|(n, &c)| check_scalar(&format!("{field}.coeffs.{n}"), c)),
            Self::PowerDecay { exponent, scale } => {
                check_finite(&format!("{field}.exponent"), *exponent)?;
                check_finite(&format!("{field}.scale"), *scale)
            }
            Self::Explicit { coeffs } => {
                if coeffs.is_empty() {
                    return Err(invalid(format!("{field}.coeffs"), "no coefficients"));
                }
                coeffs
                    .iter()
                    .enumerate()
                    .try_for_each(|(i, &c)| check_scalar(&format!("{field}.coeffs[{i}]"), c))
            }
        }
    }

    fn want(&self) -> Want {
        match self {
            Self::Poly { .. } | Self::Function { .. } => Want::Grid,
            Self::Fourier { .. } | Self::PowerDecay { .. } => Want::Fourier,
            Self::Explicit { .. } => Want::Any,
        }
    }

    pub fn to_vector_spec(&self, basis: &Basis) -> Result<VectorSpec> {
        Ok(match self {
            Self::Poly { coeffs } => VectorSpec::Poly(coeffs.clone()),
            Self::Function { expr } => {
                let e = Expr::parse(expr)?;
                VectorSpec::Function(RealFn::named(expr.clone(), move |x| e.eval(x, x)))
            }
            Self::Fourier { coeffs } => {
                VectorSpec::Fourier(coeffs.iter().map(|(&n, v)| (n, v.value())).collect())
            }
            Self::PowerDecay { exponent, scale } => VectorSpec::PowerDecay {
                exponent: *exponent,
                scale: *scale,
            },
            Self::Explicit { coeffs } => {
                if coeffs.len() != basis.dim() {
                    return Err(invalid(
                        "rhs.coeffs",
                        format!(
                            "expected {} coefficients for {basis}, found {}",
                            basis.dim(),
                            coeffs.len()
                        ),
                    ));
                }
                VectorSpec::Explicit(CoeffVector::new(
                    basis.clone(),
                    coeffs.iter().map(|c| c.value()).collect(),
                )?)
            }
        })
    }
}

/// Parses and validates a problem file.
///
/// Syntax and schema errors become `ParseError` with the offending field
/// path and a `line:column` location; range errors become `ValidationError`.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    parse_problem_with_budget(text, Budget::default())
}

pub fn parse_problem_with_budget(text: &str, budget: Budget) -> Result<ProblemSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ProblemSpec = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let message = inner.to_string();
        let field = missing_field(&message)
            .map(|name| {
                if path == "." {
                    name.to_string()
                } else {
                    format!("{path}.{name}")
                }
            })
            .unwrap_or(path);
        FredholmError::ParseError {
            field,
            location: format!("{}:{}", inner.line(), inner.column()),
            message,
        }
    })?;
    spec.validate(budget)?;
    Ok(spec)
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_basic_kernel_problem() {
        let text = r#"{"operator":{"kind":"separable_kernel","terms":[{"a":"s","b":"t"}]},
                       "rhs":{"kind":"poly","coeffs":[0,1]}}"#;
        let spec = parse_problem(text).unwrap();
        assert_eq!(spec.theta, 0.5);
        assert_eq!(spec.tol, 1e-8);
        assert_eq!(
            spec.rhs,
            RhsSpec::Poly {
                coeffs: vec![0.0, 1.0]
            }
        );
        let OperatorSpec::SeparableKernel { terms } = &spec.operator else {
            panic!("wrong kind")
        };
        assert_eq!(terms[0].coeff, 1.0);
        assert_eq!(spec.working_basis().unwrap().resolution(), 64);
    }

    #[test]
    fn missing_operator_names_the_field() {
        let err = parse_problem(r#"{"rhs":{"kind":"poly","coeffs":[1]}}"#).unwrap_err();
        let FredholmError::ParseError { field, .. } = err else {
            panic!("{err:?}")
        };
        assert_eq!(field, "operator");
    }

    #[test]
    fn theta_out_of_range() {
        let text = r#"{"operator":{"kind":"separable_kernel","terms":[{"a":"s","b":"t"}]},
                       "rhs":{"kind":"poly","coeffs":[0,1]},"theta":1.5}"#;
        let err = parse_problem(text).unwrap_err();
        assert!(
            matches!(err, FredholmError::ValidationError { ref field, .. } if field == "theta")
        );
    }

    #[test]
    fn syntax_error_has_location() {
        let err = parse_problem("{\n  \"operator\": }").unwrap_err();
        let FredholmError::ParseError { location, .. } = err else {
            panic!("{err:?}")
        };
        assert_eq!(location, "2:15");
    }

    #[test]
    fn bad_expression_is_a_validation_error() {
        let text = r#"{"operator":{"kind":"separable_kernel","terms":[{"a":"s","b":"q"}]},
                       "rhs":{"kind":"poly","coeffs":[1]}}"#;
        let err = parse_problem(text).unwrap_err();
        assert!(
            matches!(err, FredholmError::ValidationError { ref field, .. } if field == "operator.terms[0].b"),
            "{err:?}"
        );
    }

    #[test]
    fn bases_follow_the_operator() {
        let spec = parse_problem(
            r#"{"operator":{"kind":"multiplier","symbol":{"kind":"geometric","ratio":0.5}},
                "rhs":{"kind":"fourier","coeffs":{"0":1}}}"#,
        )
        .unwrap();
        assert_eq!(spec.working_basis().unwrap(), Basis::fourier(256));

        let spec = parse_problem(
            r#"{"operator":{"kind":"matrix","rows":[[0.5,0],[0,[0.1,0.2]]]},
                "rhs":{"kind":"explicit","coeffs":[1,2]}}"#,
        )
        .unwrap();
        assert_eq!(spec.working_basis().unwrap(), Basis::euclidean(2));

        let mixed = parse_problem(
            r#"{"operator":{"kind":"multiplier","symbol":{"kind":"geometric","ratio":0.5}},
                "rhs":{"kind":"poly","coeffs":[1]}}"#,
        );
        assert!(matches!(mixed, Err(FredholmError::ValidationError { .. })));
    }

    #[test]
    fn round_trip() {
        let text = r#"{"operator":{"kind":"sum","terms":[
                          {"kind":"circle","symbol":{"kind":"inverse_quadratic","shift":2},
                           "smoothing":{"left":[{"kind":"power_decay","exponent":8}],
                                        "right":[{"kind":"fourier","coeffs":{"-1":[0,1]}}]}},
                          {"kind":"scaled","factor":[0.5,-0.5],
                           "operator":{"kind":"multiplier","symbol":{"kind":"table","values":{"2":0.1}}}}]},
                       "rhs":{"kind":"power_decay","exponent":8,"scale":0.3},
                       "theta":0.25,"tol":1e-9,"resolution":32}"#;
        let spec = parse_problem(text).unwrap();
        let again = parse_problem(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
    }
}
