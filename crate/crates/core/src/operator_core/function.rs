use std::fmt;
use std::sync::Arc;

/// A real function of one variable on `[0, 1]`.
#[derive(Clone)]
pub enum RealFn {
    /// `Σ c_k s^k`, coefficients in ascending degree.
    Poly(Vec<f64>),
    /// Any closure, identified by a label for display and equality.
    Named {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl RealFn {
    pub fn named(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Named {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            // Horner
            Self::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck),
            Self::Named { f, .. } => f(s),
        }
    }
}

impl fmt::Debug for RealFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Poly(c) => f.debug_tuple("Poly").field(c).finish(),
            Self::Named { label, .. } => f.debug_tuple("Named").field(label).finish(),
        }
    }
}

impl PartialEq for RealFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Poly(a), Self::Poly(b)) => a == b,
            (Self::Named { label: a, .. }, Self::Named { label: b, .. }) => a == b,
            _ => false,
        }
    }
}

/// A real kernel `k(s, t)` on `[0, 1]²`.
#[derive(Clone)]
pub struct KernelFn {
    label: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl KernelFn {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.f)(s, t)
    }
}

impl fmt::Debug for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("KernelFn").field(&self.label).finish()
    }
}

impl PartialEq for KernelFn {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}
