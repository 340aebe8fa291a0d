//! Negative-order operators on the circle: a Fourier multiplier plus an
//! optional smoothing finite-rank term, with Sobolev norms and the
//! regularity bootstrap `y = x + P y`.

use serde::Serialize;

use crate::approximation::least_squares_slope;
use crate::error::{FredholmError, Result};
use crate::operator_core::{
    Basis, CoeffVector, CompactOperator, DiagonalMultiplier, FiniteRankOperator,
};
use crate::solver::{solve, Branch, Outcome};

/// Smallest accepted decay exponent for the smoothing term's vectors.
pub const MIN_SMOOTHING_DECAY: f64 = 6.0;
/// Sobolev indices recorded by [`solve_smooth`].
pub const RECORDED_S: [f64; 4] = [0.0, 1.0, 2.0, 4.0];
/// Relative slack allowed in [`bootstrap_check`].
pub const BOOTSTRAP_SLACK: f64 = 0.1;
/// Fewest points accepted by [`decay_exponent`].
pub const MIN_FIT_POINTS: usize = 8;

/// `P = σ(D) + G` with `σ` of order `m < 0` and `G` smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleOperator {
    multiplier: DiagonalMultiplier,
    smoothing: Option<FiniteRankOperator>,
}

impl CircleOperator {
    pub fn new(multiplier: DiagonalMultiplier) -> Result<Self> {
        if !(multiplier.order() < 0.0) {
            return Err(FredholmError::InvalidArgument(format!(
                "circle operators need order m < 0, got {}",
                multiplier.order()
            )));
        }
        Ok(Self {
            multiplier,
            smoothing: None,
        })
    }

    /// Adds `G`; every `u_i`, `v_i` must decay at least like `(1 + |n|)^{−6}`
    /// with coefficients fitted by [`decay_exponent`], or be supported on
    /// fewer than [`MIN_FIT_POINTS`] modes.
    pub fn with_smoothing(mut self, g: FiniteRankOperator) -> Result<Self> {
        if !matches!(g.basis(), Basis::Fourier { .. }) {
            return Err(FredholmError::BasisMismatch {
                expected: "fourier".into(),
                found: g.basis().to_string(),
            });
        }
        for v in g.left().iter().chain(g.right()) {
            match decay_exponent(v) {
                Ok(fit) if fit.slope > -MIN_SMOOTHING_DECAY => {
                    return Err(FredholmError::InvalidArgument(format!(
                        "smoothing term decays like (1 + |n|)^{:.2}, slower than {}",
                        fit.slope, -MIN_SMOOTHING_DECAY
                    )))
                }
                Ok(_) | Err(FredholmError::InsufficientSupport { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        self.smoothing = Some(g);
        Ok(self)
    }

    pub fn multiplier(&self) -> &DiagonalMultiplier {
        &self.multiplier
    }

    pub fn smoothing(&self) -> Option<&FiniteRankOperator> {
        self.smoothing.as_ref()
    }

    /// `m`.
    pub fn order(&self) -> f64 {
        self.multiplier.order()
    }

    /// `C` in `|σ(n)| ≤ C (1 + |n|)^m`.
    pub fn constant(&self) -> f64 {
        self.multiplier.constant()
    }

    pub fn to_operator(&self) -> Result<CompactOperator> {
        let m: CompactOperator = self.multiplier.clone().into();
        match &self.smoothing {
            None => Ok(m),
            Some(g) => CompactOperator::sum(m, g.clone().into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevReading {
    pub s: f64,
    pub value: f64,
    pub resolution: usize,
}

fn fourier_max_index(x: &CoeffVector) -> Result<usize> {
    match x.basis() {
        Basis::Fourier { max_index } => Ok(*max_index),
        other => Err(FredholmError::BasisMismatch {
            expected: "fourier".into(),
            found: other.to_string(),
        }),
    }
}

/// `(Σ (1 + n²)^s |x̂(n)|²)^{1/2}` for any real `s`.
fn weighted_norm(x: &CoeffVector, s: f64) -> Result<f64> {
    let n_max = fourier_max_index(x)? as i64;
    if s == 0.0 {
        return Ok(x.norm());
    }
    let sum: f64 = (-n_max..=n_max)
        .map(|n| (1.0 + (n * n) as f64).powf(s) * x.fourier_coeff(n).norm_sqr())
        .sum();
    Ok(sum.sqrt())
}

/// `‖x‖_{H^s}`.
pub fn sobolev_norm(x: &CoeffVector, s: f64) -> Result<SobolevReading> {
    if !(s >= 0.0) {
        return Err(FredholmError::NegativeS(s));
    }
    Ok(SobolevReading {
        s,
        value: weighted_norm(x, s)?,
        resolution: fourier_max_index(x)?,
    })
}

/// Outcome of [`solve_smooth`] with the solution's Sobolev readings.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothOutcome {
    pub outcome: Outcome,
    /// Readings at [`RECORDED_S`]; empty on the fixed-vector branch.
    pub readings: Vec<SobolevReading>,
}

pub fn solve_smooth(
    p: &CircleOperator,
    rhs: &CoeffVector,
    theta: f64,
    tol: f64,
) -> Result<SmoothOutcome> {
    fourier_max_index(rhs)?;
    let outcome = solve(&p.to_operator()?, rhs, theta, tol)?;
    let readings = match &outcome.branch {
        Branch::Solution { x, .. } => RECORDED_S
            .iter()
            .map(|&s| sobolev_norm(x, s))
            .collect::<Result<_>>()?,
        Branch::FixedVector { .. } => Vec::new(),
    };
    Ok(SmoothOutcome { outcome, readings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapStep {
    pub s: f64,
    /// `‖y‖_{H^s}`.
    pub lhs: f64,
    /// `‖x‖_{H^s} + C ‖y‖_{H^{s−|m|}} + ‖G y‖_{H^s}`.
    pub bound: f64,
}

/// Checks `‖y‖_{H^{k|m|}} ≤ ‖x‖_{H^{k|m|}} + C ‖y‖_{H^{(k−1)|m|}} + ‖G y‖_{H^{k|m|}}`
/// for `k = 0..=steps`, with [`BOOTSTRAP_SLACK`] relative slack.
///
/// The `G` term vanishes without a smoothing part. At `k = 0` the lower
/// index is negative and the same weighted sum is used.
pub fn bootstrap_check(
    p: &CircleOperator,
    rhs: &CoeffVector,
    y: &CoeffVector,
    steps: usize,
) -> Result<Vec<BootstrapStep>> {
    fourier_max_index(rhs)?;
    rhs.basis().check_same(y.basis())?;
    let gy = match p.smoothing() {
        Some(g) => Some(g.apply(y)?),
        None => None,
    };
    let gap = p.order().abs();
    let c = p.constant();
    (0..=steps)
        .map(|k| {
            let s = k as f64 * gap;
            let lhs = weighted_norm(y, s)?;
            let g_term = match &gy {
                Some(v) => weighted_norm(v, s)?,
                None => 0.0,
            };
            let bound = weighted_norm(rhs, s)? + c * weighted_norm(y, s - gap)? + g_term;
            if lhs > (1.0 + BOOTSTRAP_SLACK) * bound {
                return Err(FredholmError::BootstrapViolated { s, lhs, bound });
            }
            Ok(BootstrapStep { s, lhs, bound })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    /// Root-mean-square residual of the log–log fit.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares slope of `ln |x̂(n)|` against `ln(1 + |n|)` over
/// `4 ≤ |n| ≤ N/2`, skipping zero coefficients.
pub fn decay_exponent(x: &CoeffVector) -> Result<DecayFit> {
    let n_max = fourier_max_index(x)? as i64;
    let pts: Vec<(f64, f64)> = (-n_max / 2..=n_max / 2)
        .filter(|n| n.abs() >= 4)
        .filter_map(|n| {
            let a = x.fourier_coeff(n).norm();
            (a > 0.0).then(|| ((1.0 + n.abs() as f64).ln(), a.ln()))
        })
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(FredholmError::InsufficientSupport {
            needed: MIN_FIT_POINTS,
            found: pts.len(),
        });
    }
    let slope = least_squares_slope(&pts).ok_or(FredholmError::InsufficientSupport {
        needed: MIN_FIT_POINTS,
        found: pts.len(),
    })?;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let residual = (pts
        .iter()
        .map(|&(a, b)| (b - (my + slope * (a - mx))).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Ok(DecayFit {
        slope,
        residual,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{Symbol, VectorSpec, C64};

    fn inv_quad(shift: f64) -> CircleOperator {
        CircleOperator::new(
            DiagonalMultiplier::new(Symbol::InverseQuadratic { shift, scale: 1.0 }).unwrap(),
        )
        .unwrap()
    }

    fn power_decay(n: usize, exponent: f64) -> CoeffVector {
        VectorSpec::PowerDecay {
            exponent,
            scale: 1.0,
        }
        .sample(&Basis::fourier(n))
        .unwrap()
    }

    #[test]
    fn sobolev_examples() {
        let e0 = CoeffVector::fourier_mode(8, 0).unwrap();
        for s in [0.0, 1.0, 3.5] {
            assert_eq!(sobolev_norm(&e0, s).unwrap().value, 1.0);
        }
        let e2 = CoeffVector::fourier_mode(8, 2).unwrap();
        assert!((sobolev_norm(&e2, 1.0).unwrap().value - 5f64.sqrt()).abs() < 1e-15);
        let z = CoeffVector::zeros(Basis::fourier(8));
        assert_eq!(sobolev_norm(&z, 2.0).unwrap().value, 0.0);
        assert!(matches!(
            sobolev_norm(&z, -1.0),
            Err(FredholmError::NegativeS(_))
        ));
    }

    #[test]
    fn zero_order_rejected() {
        let m = DiagonalMultiplier::new(Symbol::Power {
            scale: 0.5,
            exponent: 0.0,
        })
        .unwrap();
        assert!(CircleOperator::new(m).is_err());
    }

    #[test]
    fn diagonal_solve_single_mode() {
        let e1 = CoeffVector::fourier_mode(16, 1).unwrap();
        let out = solve_smooth(&inv_quad(2.0), &e1, 0.5, 1e-10).unwrap();
        let Branch::Solution { x, .. } = &out.outcome.branch else {
            panic!("expected a solution")
        };
        assert!((x.fourier_coeff(1) - C64::new(1.5, 0.0)).norm() < 1e-10);
        assert!(x.sub(&e1.scaled(C64::new(1.5, 0.0))).unwrap().norm() < 1e-10);
        assert_eq!(out.readings.len(), 4);
        // ‖1.5 e₁‖_{H^s} = 1.5 · 2^{s/2}
        for r in &out.readings {
            assert!((r.value - 1.5 * 2f64.powf(r.s / 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_zero_mode_is_fixed() {
        let e3 = CoeffVector::fourier_mode(16, 3).unwrap();
        let out = solve_smooth(&inv_quad(1.0), &e3, 0.5, 1e-8).unwrap();
        assert!(!out.outcome.is_solution());
        assert!(out.readings.is_empty());
    }

    #[test]
    fn smoothing_rank_one_fixed_vector() {
        let n = 16;
        let b = Basis::fourier(n);
        let u = power_decay(n, 8.0);
        // ⟨v, u⟩ = 1/3 with v parallel to u, then scaled by 3.
        let v = u.scaled(C64::new(1.0 / (3.0 * u.norm_sqr()), 0.0));
        let g = FiniteRankOperator::new(vec![u.scaled(C64::new(3.0, 0.0))], vec![v]).unwrap();
        let zero = DiagonalMultiplier::new(Symbol::Power {
            scale: 0.0,
            exponent: -2.0,
        })
        .unwrap();
        let p = CircleOperator::new(zero)
            .unwrap()
            .with_smoothing(g)
            .unwrap();
        let out = solve_smooth(&p, &CoeffVector::unit(b, 0), 0.5, 1e-8).unwrap();
        let Branch::FixedVector { y_star, .. } = &out.outcome.branch else {
            panic!("expected a fixed vector")
        };
        let expect = u.normalized().unwrap();
        assert!(y_star.sub(&expect).unwrap().norm() < 1e-8);
    }

    #[test]
    fn rough_smoothing_rejected() {
        let u = power_decay(32, 2.0);
        let g = FiniteRankOperator::new(vec![u.clone()], vec![u]).unwrap();
        let p = inv_quad(2.0);
        assert!(p.with_smoothing(g).is_err());
    }

    #[test]
    fn bootstrap_single_mode_and_zero() {
        let p = inv_quad(2.0);
        let e1 = CoeffVector::fourier_mode(16, 1).unwrap();
        let y = e1.scaled(C64::new(1.5, 0.0));
        let chain = bootstrap_check(&p, &e1, &y, 3).unwrap();
        assert_eq!(chain.len(), 4);
        assert!(chain
            .iter()
            .all(|c| c.lhs.is_finite() && c.lhs <= c.bound * 1.1));

        let z = CoeffVector::zeros(Basis::fourier(16));
        let chain = bootstrap_check(&p, &z, &z, 3).unwrap();
        assert!(chain.iter().all(|c| c.lhs == 0.0 && c.bound == 0.0));
    }

    #[test]
    fn bootstrap_catches_a_wrong_solution() {
        let p = inv_quad(2.0);
        let rhs = CoeffVector::fourier_mode(16, 1).unwrap();
        let wrong = CoeffVector::fourier_mode(16, 12).unwrap();
        assert!(matches!(
            bootstrap_check(&p, &rhs, &wrong, 2),
            Err(FredholmError::BootstrapViolated { .. })
        ));
    }

    #[test]
    fn decay_fits() {
        let fit = decay_exponent(&power_decay(64, 3.0)).unwrap();
        assert!((fit.slope + 3.0).abs() < 1e-6);
        assert!(fit.residual < 1e-10);

        let e5 = CoeffVector::fourier_mode(64, 5).unwrap();
        assert!(matches!(
            decay_exponent(&e5),
            Err(FredholmError::InsufficientSupport { .. })
        ));

        let geo: CoeffVector = VectorSpec::Fourier(
            (-64..=64)
                .map(|n: i64| (n, C64::new(0.5f64.powi(n.abs() as i32), 0.0)))
                .collect(),
        )
        .sample(&Basis::fourier(64))
        .unwrap();
        assert!(decay_exponent(&geo).unwrap().slope < -6.0);
    }

    #[test]
    fn decay_preserved_by_diagonal_solve() {
        let n = 128;
        let rhs = power_decay(n, 8.0);
        let out = solve_smooth(&inv_quad(2.0), &rhs, 0.5, 1e-10).unwrap();
        let slope = decay_exponent(out.outcome.vector()).unwrap().slope;
        assert!((slope + 8.0).abs() <= 0.5, "{slope}");
    }
}
