use std::fmt;
use std::sync::Arc;

use fasteval::{Compiler, Evaler, Instruction, Slab};

use crate::error::{FredholmError, Result};

/// A compiled real expression in the variables `s` and `t`.
///
/// Besides the evaluator's builtins (`sin`, `cos`, `abs`, `log`, `pi()`, …)
/// the functions `exp`, `ln` and `sqrt` are available.
#[derive(Clone)]
pub struct Expr {
    source: String,
    compiled: Arc<(Slab, Instruction)>,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let parser = fasteval::Parser::new();
        let mut slab = Slab::new();
        let instr = parser
            .parse(source, &mut slab.ps)
            .map(|p| p.from(&slab.ps).compile(&slab.ps, &mut slab.cs))
            .map_err(|e| FredholmError::InvalidArgument(format!("cannot parse {source:?}: {e}")))?;
        let expr = Self {
            source: source.to_string(),
            compiled: Arc::new((slab, instr)),
        };
        // Unknown names only surface on evaluation.
        expr.try_eval(0.5, 0.5)?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn try_eval(&self, s: f64, t: f64) -> Result<f64> {
        let (slab, instr) = &*self.compiled;
        let mut ns = |name: &str, args: Vec<f64>| -> Option<f64> {
            match (name, args.as_slice()) {
                ("s", []) => Some(s),
                ("t", []) => Some(t),
                ("exp", [x]) => Some(x.exp()),
                ("ln", [x]) => Some(x.ln()),
                ("sqrt", [x]) => Some(x.sqrt()),
                _ => None,
            }
        };
        instr.eval(slab, &mut ns).map_err(|e| {
            FredholmError::InvalidArgument(format!("cannot evaluate {:?}: {e}", self.source))
        })
    }

    /// Evaluation errors become NaN, which vector constructors reject.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        self.try_eval(s, t).unwrap_or(f64::NAN)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Expr").field(&self.source).finish()
    }
}
