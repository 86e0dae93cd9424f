//! Frobenius-Rieffel norms, the ladder L-seminorms built from them,
//! Leibniz and strong-Leibniz verification suites, sharp equivalence
//! constant estimation, and the tunnel seminorm on direct sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraShape, Element, Embedding};
use crate::error::{Error, Result};
use crate::report::PropertyCheck;
use crate::sample::{
    random_invertible_self_adjoint, random_self_adjoint, trial_rng,
};
use crate::trace::{conditional_expectation, ConditionalExpectation, TraceState};

/// The norm ||a||_E = sqrt(||E(a* a)||) of a faithful conditional
/// expectation E.
#[derive(Debug, Clone)]
pub struct FrNorm {
    expectation: ConditionalExpectation,
}

impl FrNorm {
    pub fn new(expectation: ConditionalExpectation) -> Self {
        FrNorm { expectation }
    }

    pub fn expectation(&self) -> &ConditionalExpectation {
        &self.expectation
    }

    pub fn value(&self, a: &Element) -> Result<f64> {
        let aa = a.adjoint().multiply(a)?;
        Ok(self.expectation.apply(&aa)?.operator_norm().max(0.0).sqrt())
    }
}

/// One rung (E_m, kappa_m, beta_m) of a ladder seminorm.
#[derive(Debug, Clone)]
pub struct LSeminormRung {
    pub expectation: ConditionalExpectation,
    pub kappa: f64,
    pub beta: f64,
}

/// The ladder seminorm
///   L(a) = max_m  max{ ||a - E_m(a)||_{E_m}, ||a* - E_m(a*)||_{E_m} } / (kappa_m beta_m).
///
/// An empty rung list is the level-0 seminorm, identically zero.
#[derive(Debug, Clone)]
pub struct LSeminorm {
    rungs: Vec<LSeminormRung>,
}

impl LSeminorm {
    pub fn new(rungs: Vec<LSeminormRung>) -> Result<Self> {
        for (m, r) in rungs.iter().enumerate() {
            if !(r.kappa > 0.0) || !(r.beta > 0.0) {
                return Err(Error::Invalid(format!(
                    "rung {m}: kappa and beta must be positive"
                )));
            }
        }
        Ok(LSeminorm { rungs })
    }

    pub fn rungs(&self) -> &[LSeminormRung] {
        &self.rungs
    }

    pub fn level(&self) -> usize {
        self.rungs.len()
    }

    /// Scale one rung's kappa; used by negative-control suites.
    pub fn with_scaled_kappa(&self, rung: usize, factor: f64) -> Self {
        let mut out = self.clone();
        out.rungs[rung].kappa *= factor;
        out
    }

    pub fn evaluate(&self, a: &Element) -> Result<f64> {
        let mut best = 0.0_f64;
        let a_adj = a.adjoint();
        for r in &self.rungs {
            let fr = FrNorm::new(r.expectation.clone());
            let d1 = fr.value(&a.sub(&r.expectation.apply(a)?)?)?;
            let d2 = fr.value(&a_adj.sub(&r.expectation.apply(&a_adj)?)?)?;
            best = best.max(d1.max(d2) / (r.kappa * r.beta));
        }
        Ok(best)
    }
}

/// Quasi-Leibniz parameters (A, B) and strong-Leibniz constant C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeibnizParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LeibnizParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a < 1.0 || b < 0.0 || c < 1.0 {
            return Err(Error::Invalid(
                "Leibniz parameters require A >= 1, B >= 0, C >= 1".into(),
            ));
        }
        Ok(LeibnizParams { a, b, c })
    }

    pub fn leibniz() -> Self {
        LeibnizParams {
            a: 1.0,
            b: 0.0,
            c: 1.0,
        }
    }
}

/// Outcome of a ratio-style inequality suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub check: PropertyCheck,
    pub worst_ratio: f64,
    pub skipped: u64,
}

const INEQ_SLACK: f64 = 1e-8;

/// Verify max{L(jordan), L(lie)} <= A (L(a)||b|| + ||a|| L(b)) + B L(a) L(b)
/// on seeded random self-adjoint pairs. `l_lhs` and `l_rhs` coincide in
/// honest runs; negative controls pass a corrupted left side.
pub fn check_quasi_leibniz(
    shape: &AlgebraShape,
    l_lhs: &dyn Fn(&Element) -> Result<f64>,
    l_rhs: &dyn Fn(&Element) -> Result<f64>,
    params: LeibnizParams,
    trials: u64,
    seed: u64,
) -> Result<RatioReport> {
    let mut worst_violation = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = random_self_adjoint(shape, &mut rng);
        let b = random_self_adjoint(shape, &mut rng);
        let (jordan, lie) = a.jordan_lie(&b)?;
        let lhs = l_lhs(&jordan)?.max(l_lhs(&lie)?);
        let bound = params.a * (l_rhs(&a)? * b.operator_norm() + a.operator_norm() * l_rhs(&b)?)
            + params.b * l_rhs(&a)? * l_rhs(&b)?;
        let slack = INEQ_SLACK * (1.0 + bound);
        worst_violation = worst_violation.max(lhs - bound - slack).max(0.0);
        if bound > 1e-12 {
            worst_ratio = worst_ratio.max(lhs / bound);
        }
    }
    Ok(RatioReport {
        check: PropertyCheck::new("quasi-leibniz", trials, worst_violation, seed),
        worst_ratio,
        skipped: 0,
    })
}

/// Verify L(a^{-1}) <= C ||a^{-1}||^2 L(a) on seeded random invertible
/// self-adjoint samples. Samples failing the invertibility guard are
/// skipped and counted.
pub fn check_strongly_leibniz(
    shape: &AlgebraShape,
    l_lhs: &dyn Fn(&Element) -> Result<f64>,
    l_rhs: &dyn Fn(&Element) -> Result<f64>,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<RatioReport> {
    let mut worst_violation = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    let mut skipped = 0u64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = random_invertible_self_adjoint(shape, &mut rng);
        let inv = match a.inverse() {
            Ok(inv) => inv,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let lhs = l_lhs(&inv)?;
        let inv_norm = inv.operator_norm();
        let bound = c * inv_norm * inv_norm * l_rhs(&a)?;
        let slack = INEQ_SLACK * (1.0 + bound);
        worst_violation = worst_violation.max(lhs - bound - slack).max(0.0);
        if bound > 1e-12 {
            worst_ratio = worst_ratio.max(lhs / bound);
        }
    }
    Ok(RatioReport {
        check: PropertyCheck::new("strongly-leibniz", trials, worst_violation, seed),
        worst_ratio,
        skipped,
    })
}

/// Estimate of min{ small(a) : big(a) = 1 } by seeded multistart
/// projected descent. The returned value is the small-norm of a feasible
/// point, hence an upper bound on the sharp constant, nonincreasing in
/// the (starts * iters) budget.
pub fn sharp_constant_estimate(
    shape: &AlgebraShape,
    small: &dyn Fn(&Element) -> Result<f64>,
    big: &dyn Fn(&Element) -> Result<f64>,
    starts: usize,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    let dim = 2 * shape.linear_dim();
    let to_element = |v: &[f64]| -> Element {
        let mut e = Element::zero(shape);
        let mut idx = 0;
        for k in 0..shape.num_blocks() {
            let d = shape.block_dims()[k];
            for i in 0..d {
                for j in 0..d {
                    e.block_mut(k)[(i, j)] = Complex64::new(v[idx], v[idx + 1]);
                    idx += 2;
                }
            }
        }
        e
    };
    let ratio = |v: &[f64]| -> Result<f64> {
        let e = to_element(v);
        let denom = big(&e)?;
        if denom <= 1e-14 {
            return Ok(f64::INFINITY);
        }
        Ok(small(&e)? / denom)
    };

    let mut best = f64::INFINITY;
    for s in 0..starts {
        let mut rng = trial_rng(seed, s as u64);
        let start = crate::sample::random_element(shape, &mut rng);
        let mut v = vec![0.0f64; dim];
        {
            let mut idx = 0;
            for k in 0..shape.num_blocks() {
                let d = shape.block_dims()[k];
                for i in 0..d {
                    for j in 0..d {
                        let c = start.block(k)[(i, j)];
                        v[idx] = c.re;
                        v[idx + 1] = c.im;
                        idx += 2;
                    }
                }
            }
        }
        // Normalize to big-norm one for scale stability.
        let b0 = big(&to_element(&v))?;
        if b0 <= 1e-14 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= b0;
        }
        let mut f = ratio(&v)?;
        let mut step = 0.1_f64;
        let h = 1e-6_f64;
        for _ in 0..iters {
            // Central-difference gradient of the ratio.
            let mut grad = vec![0.0f64; dim];
            let mut gnorm = 0.0_f64;
            for i in 0..dim {
                let old = v[i];
                v[i] = old + h;
                let fp = ratio(&v)?;
                v[i] = old - h;
                let fm = ratio(&v)?;
                v[i] = old;
                grad[i] = (fp - fm) / (2.0 * h);
                gnorm += grad[i] * grad[i];
            }
            gnorm = gnorm.sqrt();
            if gnorm < 1e-10 {
                break;
            }
            // Backtracking step on the normalized descent direction.
            let mut improved = false;
            for _ in 0..20 {
                let trial: Vec<f64> = v
                    .iter()
                    .zip(&grad)
                    .map(|(x, g)| x - step * g / gnorm)
                    .collect();
                let ft = ratio(&trial)?;
                if ft < f {
                    // Renormalize to stay on the big-norm sphere.
                    let bt = big(&to_element(&trial))?;
                    v = trial.iter().map(|x| x / bt).collect();
                    f = ft;
                    step *= 1.3;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved || step < 1e-12 {
                break;
            }
        }
        best = best.min(f);
    }
    if !best.is_finite() {
        return Err(Error::Invalid(
            "sharp constant estimation found no feasible point".into(),
        ));
    }
    Ok(best)
}

/// A *-epimorphism between direct sums given by selecting, for each
/// target block, a source block of equal dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSelection {
    source: AlgebraShape,
    target: AlgebraShape,
    picks: Vec<usize>,
}

impl BlockSelection {
    pub fn new(source: AlgebraShape, target: AlgebraShape, picks: Vec<usize>) -> Result<Self> {
        if picks.len() != target.num_blocks() {
            return Err(Error::Invalid(
                "one source pick required per target block".into(),
            ));
        }
        for (t, &s) in picks.iter().enumerate() {
            if s >= source.num_blocks() {
                return Err(Error::Invalid(format!("pick {s} out of range")));
            }
            if source.block_dims()[s] != target.block_dims()[t] {
                return Err(Error::Invalid(format!(
                    "pick {s} has dimension {}, target block {t} needs {}",
                    source.block_dims()[s],
                    target.block_dims()[t]
                )));
            }
        }
        Ok(BlockSelection {
            source,
            target,
            picks,
        })
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        BlockSelection {
            source: shape.clone(),
            target: shape.clone(),
            picks: (0..shape.num_blocks()).collect(),
        }
    }

    pub fn target(&self) -> &AlgebraShape {
        &self.target
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        if x.shape() != &self.source {
            return Err(Error::ShapeMismatch {
                expected: self.source.block_dims().to_vec(),
                got: x.shape().block_dims().to_vec(),
            });
        }
        let mut out = Element::zero(&self.target);
        for (t, &s) in self.picks.iter().enumerate() {
            out.block_mut(t).copy_from(x.block(s));
        }
        Ok(out)
    }
}

/// T(a, b) = max{ L_A(a), L_B(b), (1/eps) ||pi_A(a) - pi_B(b)|| }.
pub fn tunnel_seminorm(
    l_a: &dyn Fn(&Element) -> Result<f64>,
    l_b: &dyn Fn(&Element) -> Result<f64>,
    pi_a: &BlockSelection,
    pi_b: &BlockSelection,
    eps: f64,
    a: &Element,
    b: &Element,
) -> Result<f64> {
    if pi_a.target() != pi_b.target() {
        return Err(Error::ShapeMismatch {
            expected: pi_a.target().block_dims().to_vec(),
            got: pi_b.target().block_dims().to_vec(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::Invalid("tunnel epsilon must be positive".into()));
    }
    let mismatch = pi_a.apply(a)?.sub(&pi_b.apply(b)?)?.operator_norm() / eps;
    Ok(l_a(a)?.max(l_b(b)?).max(mismatch))
}

/// Direct-sum shape of a pair algebra A + B, with helpers to split and
/// join elements; lets the generic Leibniz suites run on tunnel
/// seminorms.
pub fn pair_shape(a: &AlgebraShape, b: &AlgebraShape) -> AlgebraShape {
    let mut dims = a.block_dims().to_vec();
    dims.extend_from_slice(b.block_dims());
    AlgebraShape::new(dims).expect("nonempty")
}

pub fn split_pair(a: &AlgebraShape, b: &AlgebraShape, x: &Element) -> Result<(Element, Element)> {
    let expected = pair_shape(a, b);
    if x.shape() != &expected {
        return Err(Error::ShapeMismatch {
            expected: expected.block_dims().to_vec(),
            got: x.shape().block_dims().to_vec(),
        });
    }
    let mut left = Element::zero(a);
    let mut right = Element::zero(b);
    for k in 0..a.num_blocks() {
        left.block_mut(k).copy_from(x.block(k));
    }
    for k in 0..b.num_blocks() {
        right.block_mut(k).copy_from(x.block(a.num_blocks() + k));
    }
    Ok((left, right))
}

/// JSON form of a ladder seminorm: per-rung embedding pattern, trace
/// weights, kappa, beta. Replayable bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LSeminormRungJson {
    pub source_dims: Vec<usize>,
    pub ambient_dims: Vec<usize>,
    pub pattern: Vec<Vec<usize>>,
    pub trace_weights: Vec<f64>,
    pub kappa: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LSeminormJson {
    pub rungs: Vec<LSeminormRungJson>,
}

impl LSeminorm {
    pub fn to_json(&self) -> LSeminormJson {
        let rungs = self
            .rungs
            .iter()
            .map(|r| LSeminormRungJson {
                source_dims: r.expectation.embedding().source().block_dims().to_vec(),
                ambient_dims: r.expectation.ambient().block_dims().to_vec(),
                pattern: r.expectation.embedding().pattern().to_vec(),
                trace_weights: r.expectation.trace().weights().to_vec(),
                kappa: r.kappa,
                beta: r.beta,
            })
            .collect();
        LSeminormJson { rungs }
    }

    pub fn from_json(j: &LSeminormJson) -> Result<Self> {
        let mut rungs = Vec::with_capacity(j.rungs.len());
        for r in &j.rungs {
            let source = AlgebraShape::new(r.source_dims.clone())?;
            let ambient = AlgebraShape::new(r.ambient_dims.clone())?;
            let emb = Embedding::new(source, ambient.clone(), r.pattern.clone())?;
            let trace = TraceState::new(ambient, r.trace_weights.clone())?;
            rungs.push(LSeminormRung {
                expectation: conditional_expectation(&emb, &trace)?,
                kappa: r.kappa,
                beta: r.beta,
            });
        }
        LSeminorm::new(rungs)
    }
}
