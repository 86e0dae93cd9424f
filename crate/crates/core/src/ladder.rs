//! Continued-fraction machinery, the Effros-Shen and UHF inductive
//! ladders (shapes, embeddings, traces, rung constants), and the
//! Baire-space metric on multiplicity sequences.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraShape, Element, Embedding};
use crate::error::{Error, Result};
use crate::seminorm::{sharp_constant_estimate, FrNorm, LSeminorm, LSeminormRung};
use crate::trace::{conditional_expectation, ConditionalExpectation, TraceState};

/// Default cap on the ambient linear dimension (sum of squared block
/// sizes) of any constructed level.
pub const DEFAULT_DIM_BUDGET: usize = 512;

/// Digits r_1, r_2, ... of a continued fraction with r_0 = 0, so the
/// value lies in (0, 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    digits: Vec<u64>,
}

impl ContinuedFraction {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::Invalid("need at least one digit".into()));
        }
        if digits.iter().any(|&d| d == 0) {
            return Err(Error::Invalid("digits must be positive".into()));
        }
        Ok(ContinuedFraction { digits })
    }

    /// n copies of the same digit; digit 1 gives the golden-ratio
    /// conjugate, digit 2 gives sqrt(2) - 1.
    pub fn constant(digit: u64, n: usize) -> Result<Self> {
        ContinuedFraction::new(vec![digit; n])
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Value of the finite fraction [0; r_1, ..., r_n], by backward
    /// recurrence.
    pub fn value(&self) -> f64 {
        let mut v = 0.0_f64;
        for &r in self.digits.iter().rev() {
            v = 1.0 / (r as f64 + v);
        }
        v
    }
}

/// Expand theta in (0, 1) to `n` continued-fraction digits with the
/// Gauss map. Rejects values indistinguishable from rationals, which
/// exhaust their expansion.
pub fn cf_expand(theta: f64, n: usize) -> Result<ContinuedFraction> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Invalid(format!("theta = {theta} not in (0, 1)")));
    }
    let mut digits = Vec::with_capacity(n);
    let mut x = theta;
    for k in 0..n {
        if x < 1e-14 {
            return Err(Error::RationalTheta(k));
        }
        let inv = 1.0 / x;
        let r = inv.floor();
        if r < 1.0 || r > 9.0e15 {
            return Err(Error::RationalTheta(k));
        }
        digits.push(r as u64);
        x = inv - r;
    }
    ContinuedFraction::new(digits)
}

/// Exact convergents p_n/q_n of a continued fraction: p_0 = 0, q_0 = 1,
/// p_1 = 1, q_1 = r_1, and p_{n+1} = r_{n+1} p_n + p_{n-1} (same for q).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergentTable {
    p: Vec<i64>,
    q: Vec<i64>,
}

impl ConvergentTable {
    pub fn new(cf: &ContinuedFraction) -> Result<Self> {
        let n = cf.len();
        let mut p = vec![0i64; n + 1];
        let mut q = vec![0i64; n + 1];
        p[0] = 0;
        q[0] = 1;
        p[1] = 1;
        q[1] = i64::try_from(cf.digits()[0]).map_err(|_| Error::Overflow(1))?;
        for k in 1..n {
            let r = i64::try_from(cf.digits()[k]).map_err(|_| Error::Overflow(k + 1))?;
            p[k + 1] = r
                .checked_mul(p[k])
                .and_then(|x| x.checked_add(p[k - 1]))
                .ok_or(Error::Overflow(k + 1))?;
            q[k + 1] = r
                .checked_mul(q[k])
                .and_then(|x| x.checked_add(q[k - 1]))
                .ok_or(Error::Overflow(k + 1))?;
        }
        Ok(ConvergentTable { p, q })
    }

    /// Largest valid index.
    pub fn max_index(&self) -> usize {
        self.p.len() - 1
    }

    /// p_n for n >= -1, with the standard convention p_{-1} = 1.
    pub fn p(&self, n: isize) -> i64 {
        if n == -1 {
            1
        } else {
            self.p[n as usize]
        }
    }

    /// q_n for n >= -1, with the standard convention q_{-1} = 0.
    pub fn q(&self, n: isize) -> i64 {
        if n == -1 {
            0
        } else {
            self.q[n as usize]
        }
    }

    /// theta q_n - p_n; alternates in sign and shrinks to zero.
    pub fn residue(&self, theta: f64, n: isize) -> f64 {
        theta * self.q(n) as f64 - self.p(n) as f64
    }
}

/// t(theta, n) = (-1)^{n-1} q_n (theta q_{n-1} - p_{n-1}), the weight of
/// the large block in the level-n trace.
pub fn es_trace_weight(theta: f64, conv: &ConvergentTable, n: usize) -> Result<f64> {
    if n == 0 || n > conv.max_index() {
        return Err(Error::Invalid(format!("trace weight undefined at n = {n}")));
    }
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let t = sign * conv.q(n as isize) as f64 * conv.residue(theta, n as isize - 1);
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Invalid(format!(
            "trace weight t = {t} fell outside (0, 1) at n = {n}"
        )));
    }
    Ok(t)
}

/// Explicit equivalence constant
///   kappa_{theta,n} = sqrt( (theta q_n - p_n)
///                           / ((theta q_{n-2} - p_{n-2}) r_n (r_n + 1)^2) )
/// for n >= 1. The n = 1 case references index -1 and is only served
/// when the caller opts into the convention p_{-1} = 1, q_{-1} = 0.
pub fn explicit_kappa(
    theta: f64,
    cf: &ContinuedFraction,
    conv: &ConvergentTable,
    n: usize,
    neg_one_convention: bool,
) -> Result<f64> {
    if n == 0 || n > conv.max_index() {
        return Err(Error::Invalid(format!(
            "explicit kappa undefined at n = {n}"
        )));
    }
    if n == 1 && !neg_one_convention {
        return Err(Error::Invalid(
            "kappa at n = 1 needs the index -1 convention; enable it explicitly".into(),
        ));
    }
    let r = cf.digits()[n - 1] as f64;
    let num = conv.residue(theta, n as isize);
    let den = conv.residue(theta, n as isize - 2) * r * (r + 1.0) * (r + 1.0);
    let ratio = num / den;
    if !(ratio > 0.0) {
        return Err(Error::Invalid(format!(
            "kappa ratio {ratio} not positive at n = {n}"
        )));
    }
    Ok(ratio.sqrt())
}

/// A constant valid for the step expectation onto any unital subalgebra:
/// ||E(a*a)|| >= tau(a*a) >= min_k (v_k/n_k) ||a||^2.
pub fn trace_floor_kappa(trace: &TraceState) -> f64 {
    trace
        .weights()
        .iter()
        .zip(trace.shape().block_dims())
        .map(|(&v, &d)| v / d as f64)
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// One Effros-Shen level: M_{q_n} + M_{q_{n-1}} with its embedding into
/// the next level, trace weights, and rung constants.
#[derive(Debug, Clone)]
pub struct EffrosShenLevel {
    pub n: usize,
    pub shape: AlgebraShape,
    /// alpha_{theta,n}: (a, b) -> diag(a, ..., a, b) + a, with r_{n+1}
    /// copies of a in the first summand.
    pub alpha: Embedding,
    pub trace: TraceState,
    /// Weight of the M_{q_n} block; 1 at level 0.
    pub t: f64,
    pub beta: f64,
    pub kappa: f64,
    /// Digits r_1..r_{n+1} used to build the level.
    pub digits: Vec<u64>,
}

fn es_shape(conv: &ConvergentTable, n: usize, budget: usize) -> Result<AlgebraShape> {
    let shape = if n == 0 {
        AlgebraShape::new(vec![1])?
    } else {
        let qn = usize::try_from(conv.q(n as isize)).map_err(|_| Error::Overflow(n))?;
        let qn1 = usize::try_from(conv.q(n as isize - 1)).map_err(|_| Error::Overflow(n))?;
        AlgebraShape::new(vec![qn, qn1])?
    };
    if shape.linear_dim() > budget {
        return Err(Error::DimBudget(format!(
            "level {n} has linear dimension {} > {budget}",
            shape.linear_dim()
        )));
    }
    Ok(shape)
}

fn es_alpha(
    cf: &ContinuedFraction,
    conv: &ConvergentTable,
    n: usize,
    source: &AlgebraShape,
    budget: usize,
) -> Result<Embedding> {
    let target = es_shape(conv, n + 1, budget.max(usize::MAX / 2))?;
    // The embedding target is metadata, not an ambient algebra, so it is
    // exempt from the budget; usize::MAX/2 disables the check above.
    let r = cf.digits()[n] as usize;
    let mut first = vec![0usize; r];
    if n >= 1 {
        first.push(1);
    }
    let pattern = vec![first, vec![0]];
    Embedding::new(source.clone(), target, pattern)
}

fn es_kappa(
    theta: f64,
    cf: &ContinuedFraction,
    conv: &ConvergentTable,
    n: usize,
    neg_one_convention: bool,
) -> Result<f64> {
    if n == 0 {
        // Rung 0 expects onto the scalars inside level 1; the trace
        // floor of tau_{theta,1} is a valid constant there.
        let t1 = es_trace_weight(theta, conv, 1)?;
        let shape1 = AlgebraShape::new(vec![
            usize::try_from(conv.q(1)).map_err(|_| Error::Overflow(1))?,
            1,
        ])?;
        let tau1 = TraceState::new(shape1, vec![t1, 1.0 - t1])?;
        Ok(trace_floor_kappa(&tau1))
    } else {
        explicit_kappa(theta, cf, conv, n, neg_one_convention)
    }
}

/// Build one Effros-Shen level at the default dimension budget, with
/// the index -1 convention for kappa at n = 1 enabled.
pub fn es_level(theta: f64, n: usize) -> Result<EffrosShenLevel> {
    let cf = cf_expand(theta, n + 1)?;
    let conv = ConvergentTable::new(&cf)?;
    es_level_from_parts(theta, &cf, &conv, n, true, DEFAULT_DIM_BUDGET)
}

fn es_level_from_parts(
    theta: f64,
    cf: &ContinuedFraction,
    conv: &ConvergentTable,
    n: usize,
    neg_one_convention: bool,
    budget: usize,
) -> Result<EffrosShenLevel> {
    let shape = es_shape(conv, n, budget)?;
    let alpha = es_alpha(cf, conv, n, &shape, budget)?;
    let (trace, t) = if n == 0 {
        (TraceState::new(shape.clone(), vec![1.0])?, 1.0)
    } else {
        let t = es_trace_weight(theta, conv, n)?;
        (TraceState::new(shape.clone(), vec![t, 1.0 - t])?, t)
    };
    let beta = 1.0 / shape.linear_dim() as f64;
    let kappa = es_kappa(theta, cf, conv, n, neg_one_convention)?;
    Ok(EffrosShenLevel {
        n,
        shape,
        alpha,
        trace,
        t,
        beta,
        kappa,
        digits: cf.digits()[..=n].to_vec(),
    })
}

/// An Effros-Shen ladder truncated at a top (ambient) level.
#[derive(Debug, Clone)]
pub struct EsLadder {
    theta: f64,
    cf: ContinuedFraction,
    conv: ConvergentTable,
    levels: Vec<EffrosShenLevel>,
}

impl EsLadder {
    pub fn new(theta: f64, top: usize) -> Result<Self> {
        EsLadder::with_options(theta, top, true, DEFAULT_DIM_BUDGET)
    }

    pub fn with_options(
        theta: f64,
        top: usize,
        neg_one_convention: bool,
        budget: usize,
    ) -> Result<Self> {
        let cf = cf_expand(theta, top + 1)?;
        EsLadder::from_cf_with(theta, cf, top, neg_one_convention, budget)
    }

    /// Build from an explicit digit list; theta is taken as the value of
    /// the finite fraction, so pass several digits beyond `top` for an
    /// accurate parameter.
    pub fn from_cf(cf: &ContinuedFraction, top: usize) -> Result<Self> {
        if cf.len() < top + 1 {
            return Err(Error::Invalid(format!(
                "need at least {} digits for top level {top}",
                top + 1
            )));
        }
        EsLadder::from_cf_with(cf.value(), cf.clone(), top, true, DEFAULT_DIM_BUDGET)
    }

    /// As [`EsLadder::from_cf`] with an explicit dimension budget.
    pub fn from_cf_with_budget(cf: &ContinuedFraction, top: usize, budget: usize) -> Result<Self> {
        if cf.len() < top + 1 {
            return Err(Error::Invalid(format!(
                "need at least {} digits for top level {top}",
                top + 1
            )));
        }
        EsLadder::from_cf_with(cf.value(), cf.clone(), top, true, budget)
    }

    fn from_cf_with(
        theta: f64,
        cf: ContinuedFraction,
        top: usize,
        neg_one_convention: bool,
        budget: usize,
    ) -> Result<Self> {
        let conv = ConvergentTable::new(&cf)?;
        let levels = (0..=top)
            .map(|n| es_level_from_parts(theta, &cf, &conv, n, neg_one_convention, budget))
            .collect::<Result<Vec<_>>>()?;
        Ok(EsLadder {
            theta,
            cf,
            conv,
            levels,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn digits(&self) -> &[u64] {
        self.cf.digits()
    }

    pub fn convergents(&self) -> &ConvergentTable {
        &self.conv
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &EffrosShenLevel {
        &self.levels[n]
    }

    /// Composed embedding of level m into level n (m <= n <= top).
    pub fn embed(&self, m: usize, n: usize) -> Result<Embedding> {
        if m > n || n > self.top() {
            return Err(Error::Invalid(format!("embed({m}, {n}) out of range")));
        }
        let mut emb = Embedding::identity(&self.levels[m].shape);
        for k in m..n {
            emb = emb.compose(&self.levels[k].alpha)?;
        }
        Ok(emb)
    }

    /// tau_{theta,n}-preserving expectation of level n onto the image
    /// of level m.
    pub fn expectation(&self, m: usize, n: usize) -> Result<ConditionalExpectation> {
        conditional_expectation(&self.embed(m, n)?, &self.levels[n].trace)
    }

    /// Step expectation of level n+1 onto alpha_n(level n).
    pub fn step_expectation(&self, n: usize) -> Result<ConditionalExpectation> {
        if n + 1 > self.top() {
            return Err(Error::Invalid(format!("step {n} beyond top level")));
        }
        conditional_expectation(&self.levels[n].alpha, &self.levels[n + 1].trace)
    }

    /// The ladder seminorm L_{theta,n} on level n.
    pub fn seminorm(&self, n: usize) -> Result<LSeminorm> {
        if n > self.top() {
            return Err(Error::Invalid(format!("level {n} beyond top level")));
        }
        let rungs = (0..n)
            .map(|m| {
                Ok(LSeminormRung {
                    expectation: self.expectation(m, n)?,
                    kappa: self.levels[m].kappa,
                    beta: self.levels[m].beta,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LSeminorm::new(rungs)
    }

    /// Seeded upper estimate of the sharp equivalence constant of the
    /// step expectation at level n.
    pub fn sharp_kappa_estimate(
        &self,
        n: usize,
        starts: usize,
        iters: usize,
        seed: u64,
    ) -> Result<f64> {
        let e = self.step_expectation(n)?;
        let shape = self.levels[n + 1].shape.clone();
        let fr = FrNorm::new(e);
        let small = move |a: &Element| fr.value(a);
        let big = |a: &Element| Ok(a.operator_norm());
        sharp_constant_estimate(&shape, &small, &big, starts, iters, seed)
    }

    pub fn descriptor(&self, n: usize) -> EsLevelJson {
        let lv = &self.levels[n];
        EsLevelJson {
            theta_digits: lv.digits.clone(),
            n,
            shape: lv.shape.block_dims().to_vec(),
            t: lv.t,
            beta: lv.beta,
            kappa: lv.kappa,
        }
    }
}

/// CLI-facing Effros-Shen level descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EsLevelJson {
    pub theta_digits: Vec<u64>,
    pub n: usize,
    pub shape: Vec<usize>,
    pub t: f64,
    pub beta: f64,
    pub kappa: f64,
}

/// An eventually periodic positive-integer sequence: prefix then a
/// repeating period. All multiplicity sequences used here are of this
/// form, and it makes equality decidable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaireSequence {
    prefix: Vec<u64>,
    period: Vec<u64>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl BaireSequence {
    pub fn new(prefix: Vec<u64>, period: Vec<u64>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Invalid("period must be nonempty".into()));
        }
        if prefix.iter().chain(&period).any(|&d| d == 0) {
            return Err(Error::Invalid("entries must be positive".into()));
        }
        Ok(BaireSequence { prefix, period })
    }

    pub fn constant(digit: u64) -> Result<Self> {
        BaireSequence::new(vec![], vec![digit])
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    pub fn get(&self, i: usize) -> u64 {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// First index where the sequences differ; None means equal
    /// everywhere. Two eventually periodic sequences agreeing past both
    /// prefixes for a full lcm of periods agree forever.
    pub fn first_mismatch(&self, other: &BaireSequence) -> Option<usize> {
        let lcm = self.period.len() / gcd(self.period.len(), other.period.len())
            * other.period.len();
        let bound = self.prefix.len().max(other.prefix.len()) + lcm;
        (0..bound).find(|&i| self.get(i) != other.get(i))
    }
}

/// d(x, y) = 2^{-min{n : x(n) != y(n)}}, zero when equal.
pub fn baire_distance(x: &BaireSequence, y: &BaireSequence) -> f64 {
    match x.first_mismatch(y) {
        None => 0.0,
        Some(n) => 0.5f64.powi(n as i32),
    }
}

/// Full matrix dimension of UHF level n: the product of beta(j)+1 over
/// j < n.
pub fn uhf_dim(beta: &BaireSequence, n: usize) -> Result<u64> {
    let mut d = 1u64;
    for j in 0..n {
        d = d
            .checked_mul(beta.get(j) + 1)
            .ok_or(Error::Overflow(j + 1))?;
    }
    Ok(d)
}

/// One UHF level: the full matrix algebra of dimension boxtimes-beta(n)
/// with its diagonal multiplicity embedding into the next level.
#[derive(Debug, Clone)]
pub struct UHFLevel {
    pub n: usize,
    pub dim: u64,
    pub shape: AlgebraShape,
    /// mu_{beta,n}: a -> diag(a, ..., a) with beta(n)+1 copies.
    pub mu: Embedding,
    pub trace: TraceState,
    pub gamma: f64,
    /// Provable rung constant 1/sqrt(dim of level n+1); it depends only
    /// on the level-(n+1) algebra, as locality requires.
    pub lambda: f64,
}

/// Build one UHF level at the default dimension budget.
pub fn uhf_level(beta: &BaireSequence, n: usize) -> Result<UHFLevel> {
    uhf_level_with_budget(beta, n, DEFAULT_DIM_BUDGET)
}

pub fn uhf_level_with_budget(beta: &BaireSequence, n: usize, budget: usize) -> Result<UHFLevel> {
    let dim = uhf_dim(beta, n)?;
    let next = uhf_dim(beta, n + 1)?;
    let d = usize::try_from(dim).map_err(|_| Error::Overflow(n))?;
    if d * d > budget {
        return Err(Error::DimBudget(format!(
            "level {n} has linear dimension {} > {budget}",
            d * d
        )));
    }
    let shape = AlgebraShape::new(vec![d])?;
    let next_shape =
        AlgebraShape::new(vec![usize::try_from(next).map_err(|_| Error::Overflow(n + 1))?])?;
    let copies = (beta.get(n) + 1) as usize;
    let mu = Embedding::new(shape.clone(), next_shape, vec![vec![0; copies]])?;
    let trace = TraceState::uniform(&shape);
    Ok(UHFLevel {
        n,
        dim,
        shape,
        mu,
        trace,
        gamma: 1.0 / (dim as f64 * dim as f64),
        lambda: 1.0 / (next as f64).sqrt(),
    })
}

impl UHFLevel {
    /// Seeded upper estimate of the sharp constant of the step
    /// expectation onto this level's image in the next level.
    pub fn sharp_lambda_estimate(&self, starts: usize, iters: usize, seed: u64) -> Result<f64> {
        let next_shape = self.mu.target().clone();
        let trace = TraceState::uniform(&next_shape);
        let e = conditional_expectation(&self.mu, &trace)?;
        let fr = FrNorm::new(e);
        let small = move |a: &Element| fr.value(a);
        let big = |a: &Element| Ok(a.operator_norm());
        sharp_constant_estimate(&next_shape, &small, &big, starts, iters, seed)
    }

    pub fn descriptor(&self, beta: &BaireSequence) -> UhfLevelJson {
        UhfLevelJson {
            baire: BaireJson {
                prefix: beta.prefix().to_vec(),
                period: beta.period().to_vec(),
            },
            n: self.n,
            shape: self.shape.block_dims().to_vec(),
            gamma: self.gamma,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaireJson {
    pub prefix: Vec<u64>,
    pub period: Vec<u64>,
}

/// CLI-facing UHF level descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UhfLevelJson {
    pub baire: BaireJson,
    pub n: usize,
    pub shape: Vec<usize>,
    pub gamma: f64,
    pub lambda: f64,
}

/// A UHF ladder truncated at a top (ambient) level.
#[derive(Debug, Clone)]
pub struct UhfLadder {
    beta: BaireSequence,
    levels: Vec<UHFLevel>,
}

impl UhfLadder {
    pub fn new(beta: BaireSequence, top: usize) -> Result<Self> {
        UhfLadder::with_budget(beta, top, DEFAULT_DIM_BUDGET)
    }

    pub fn with_budget(beta: BaireSequence, top: usize, budget: usize) -> Result<Self> {
        let levels = (0..=top)
            .map(|n| uhf_level_with_budget(&beta, n, budget))
            .collect::<Result<Vec<_>>>()?;
        Ok(UhfLadder { beta, levels })
    }

    pub fn beta(&self) -> &BaireSequence {
        &self.beta
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &UHFLevel {
        &self.levels[n]
    }

    pub fn embed(&self, m: usize, n: usize) -> Result<Embedding> {
        if m > n || n > self.top() {
            return Err(Error::Invalid(format!("embed({m}, {n}) out of range")));
        }
        let mut emb = Embedding::identity(&self.levels[m].shape);
        for k in m..n {
            emb = emb.compose(&self.levels[k].mu)?;
        }
        Ok(emb)
    }

    pub fn expectation(&self, m: usize, n: usize) -> Result<ConditionalExpectation> {
        conditional_expectation(&self.embed(m, n)?, &self.levels[n].trace)
    }

    /// The ladder seminorm on level n with the provable rung constants.
    pub fn seminorm(&self, n: usize) -> Result<LSeminorm> {
        if n > self.top() {
            return Err(Error::Invalid(format!("level {n} beyond top level")));
        }
        let rungs = (0..n)
            .map(|m| {
                Ok(LSeminormRung {
                    expectation: self.expectation(m, n)?,
                    kappa: self.levels[m].lambda,
                    beta: self.levels[m].gamma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LSeminorm::new(rungs)
    }
}

/// Verify tau_{n+1}(alpha_n(a)) = tau_n(a) over seeded trials; the
/// ladder traces must be restrictions of one state on the limit.
pub fn trace_coherence_check(
    source_trace: &TraceState,
    alpha: &Embedding,
    target_trace: &TraceState,
    trials: u64,
    seed: u64,
) -> Result<crate::report::PropertyCheck> {
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let mut rng = crate::sample::trial_rng(seed, t);
        let a = crate::sample::random_element(source_trace.shape(), &mut rng);
        let up = target_trace.value(&alpha.apply(&a)?)?;
        let down = source_trace.value(&a)?;
        worst = worst.max((up - down).norm());
    }
    Ok(crate::report::PropertyCheck::new(
        "trace-coherence",
        trials,
        worst,
        seed,
    ))
}

pub const GOLDEN_CONJUGATE: f64 = 0.618033988749894848;

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    const SQRT2_MINUS_1: f64 = 0.41421356237309503;

    #[test]
    fn golden_digits_are_all_ones() {
        let cf = cf_expand(GOLDEN_CONJUGATE, 12).unwrap();
        assert!(cf.digits().iter().all(|&d| d == 1));
        let cf2 = cf_expand(SQRT2_MINUS_1, 10).unwrap();
        assert!(cf2.digits().iter().all(|&d| d == 2));
    }

    #[test]
    fn rational_theta_is_rejected() {
        assert!(matches!(cf_expand(0.5, 5), Err(Error::RationalTheta(_))));
        assert!(matches!(cf_expand(0.375, 8), Err(Error::RationalTheta(_))));
    }

    #[test]
    fn cf_value_round_trips() {
        for &theta in &[GOLDEN_CONJUGATE, SQRT2_MINUS_1, 0.7234058176321, 0.1415926535] {
            // 25 digits pin theta to roughly 1/q_25^2; the golden
            // conjugate converges slowest, near 7e-11.
            let cf = cf_expand(theta, 25).unwrap();
            assert!((cf.value() - theta).abs() < 1e-9, "{theta}");
        }
    }

    #[test]
    fn golden_convergents_are_fibonacci() {
        let cf = ContinuedFraction::constant(1, 6).unwrap();
        let conv = ConvergentTable::new(&cf).unwrap();
        let q: Vec<i64> = (0..=6).map(|n| conv.q(n)).collect();
        assert_eq!(q, vec![1, 1, 2, 3, 5, 8, 13]);
        let p: Vec<i64> = (0..=6).map(|n| conv.p(n)).collect();
        assert_eq!(p, vec![0, 1, 1, 2, 3, 5, 8]);
    }

    #[test]
    fn residues_alternate_and_shrink() {
        let cf = cf_expand(GOLDEN_CONJUGATE, 10).unwrap();
        let conv = ConvergentTable::new(&cf).unwrap();
        let mut prev = f64::INFINITY;
        for n in 0..=10isize {
            let r = conv.residue(GOLDEN_CONJUGATE, n);
            let expected_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!(r * expected_sign > 0.0, "sign at {n}");
            assert!(r.abs() < prev);
            prev = r.abs();
        }
    }

    #[test]
    fn convergent_overflow_is_caught() {
        let cf = ContinuedFraction::constant(u64::MAX / 2, 4).unwrap();
        assert!(matches!(
            ConvergentTable::new(&cf),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn golden_beta_values() {
        let ladder = EsLadder::new(GOLDEN_CONJUGATE, 5).unwrap();
        let betas: Vec<f64> = (1..=5).map(|n| ladder.level(n).beta).collect();
        let expected = [1.0 / 2.0, 1.0 / 5.0, 1.0 / 13.0, 1.0 / 34.0, 1.0 / 89.0];
        for (b, e) in betas.iter().zip(expected) {
            assert!((b - e).abs() < 1e-15);
        }
        assert!((ladder.level(0).beta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_trace_weights() {
        let ladder = EsLadder::new(GOLDEN_CONJUGATE, 4).unwrap();
        assert!((ladder.level(1).t - GOLDEN_CONJUGATE).abs() < 1e-12);
        assert!((ladder.level(2).t - 2.0 * (1.0 - GOLDEN_CONJUGATE)).abs() < 1e-12);
    }

    #[test]
    fn golden_kappa_values() {
        let ladder = EsLadder::new(GOLDEN_CONJUGATE, 4).unwrap();
        let phi = GOLDEN_CONJUGATE;
        // n = 2: sqrt((theta q_2 - p_2) / ((theta q_0 - p_0) r_2 (r_2+1)^2))
        //      = sqrt((2 phi - 1) / (4 phi)).
        let expected2 = ((2.0 * phi - 1.0) / (4.0 * phi)).sqrt();
        assert!((ladder.level(2).kappa - expected2).abs() < 1e-12);
        // n = 1 under the index -1 convention: sqrt((phi - 1) / (-4)).
        let expected1 = ((1.0 - phi) / 4.0).sqrt();
        assert!((ladder.level(1).kappa - expected1).abs() < 1e-12);
    }

    #[test]
    fn kappa_at_one_requires_convention() {
        let cf = cf_expand(GOLDEN_CONJUGATE, 3).unwrap();
        let conv = ConvergentTable::new(&cf).unwrap();
        assert!(explicit_kappa(GOLDEN_CONJUGATE, &cf, &conv, 1, false).is_err());
        assert!(explicit_kappa(GOLDEN_CONJUGATE, &cf, &conv, 1, true).is_ok());
    }

    #[test]
    fn golden_level_shapes() {
        let ladder = EsLadder::new(GOLDEN_CONJUGATE, 4).unwrap();
        assert_eq!(ladder.level(0).shape.block_dims(), &[1]);
        assert_eq!(ladder.level(1).shape.block_dims(), &[1, 1]);
        assert_eq!(ladder.level(2).shape.block_dims(), &[2, 1]);
        assert_eq!(ladder.level(3).shape.block_dims(), &[3, 2]);
        assert_eq!(ladder.level(4).shape.block_dims(), &[5, 3]);
    }

    #[test]
    fn dim_budget_is_enforced() {
        assert!(matches!(
            EsLadder::with_options(GOLDEN_CONJUGATE, 10, true, 64),
            Err(Error::DimBudget(_))
        ));
    }

    #[test]
    fn trace_coherence_along_the_ladder() {
        for &(theta, top) in &[(GOLDEN_CONJUGATE, 4), (SQRT2_MINUS_1, 3)] {
            let ladder = EsLadder::new(theta, top).unwrap();
            for n in 0..top {
                let check = trace_coherence_check(
                    &ladder.level(n).trace,
                    &ladder.level(n).alpha,
                    &ladder.level(n + 1).trace,
                    50,
                    9,
                )
                .unwrap();
                assert!(check.max_violation < 1e-12, "level {n}: {check:?}");
            }
        }
    }

    #[test]
    fn seminorm_kernel_is_scalars() {
        let ladder = EsLadder::new(GOLDEN_CONJUGATE, 3).unwrap();
        let l = ladder.seminorm(3).unwrap();
        let one = Element::scalar(
            &ladder.level(3).shape,
            Complex64::new(2.0, -1.0),
        );
        assert!(l.evaluate(&one).unwrap() < 1e-12);
        // A non-scalar element has a strictly positive seminorm.
        let e = Element::matrix_unit(&ladder.level(3).shape, 0, 0, 1);
        assert!(l.evaluate(&e).unwrap() > 1e-6);
    }

    #[test]
    fn seminorm_vanishes_on_nothing_else() {
        // Probe every traceless hermitian basis direction at level 2.
        let ladder = EsLadder::new(GOLDEN_CONJUGATE, 2).unwrap();
        let l = ladder.seminorm(2).unwrap();
        let shape = &ladder.level(2).shape;
        let basis = crate::trace::matrix_units(shape);
        for (idx, e) in basis.units().iter().enumerate() {
            let h = e.add(&e.adjoint()).unwrap();
            let tau = ladder.level(2).trace.value(&h).unwrap();
            let centered = h.sub(&Element::scalar(shape, tau)).unwrap();
            if centered.operator_norm() > 1e-9 {
                assert!(l.evaluate(&centered).unwrap() > 1e-9, "direction {idx}");
            }
        }
    }

    #[test]
    fn uhf_dims_and_constants() {
        let beta = BaireSequence::constant(1).unwrap();
        let dims: Vec<u64> = (0..5).map(|n| uhf_dim(&beta, n).unwrap()).collect();
        assert_eq!(dims, vec![1, 2, 4, 8, 16]);
        let lv1 = uhf_level(&beta, 1).unwrap();
        assert_eq!(lv1.shape.block_dims(), &[2]);
        assert!((lv1.gamma - 0.25).abs() < 1e-15);
        assert!((lv1.lambda - 0.5).abs() < 1e-15);
        assert_eq!(lv1.mu.pattern(), &[vec![0, 0]]);
    }

    #[test]
    fn uhf_overflow_is_caught() {
        let beta = BaireSequence::constant(u64::MAX - 1).unwrap();
        assert!(matches!(uhf_dim(&beta, 3), Err(Error::Overflow(_))));
    }

    #[test]
    fn uhf_seminorm_kernel_is_scalars() {
        let beta = BaireSequence::constant(1).unwrap();
        let ladder = UhfLadder::new(beta, 2).unwrap();
        let l = ladder.seminorm(2).unwrap();
        let shape = &ladder.level(2).shape;
        let one = Element::scalar(shape, Complex64::new(3.0, 0.0));
        assert!(l.evaluate(&one).unwrap() < 1e-12);
        let e = Element::matrix_unit(shape, 0, 1, 3);
        assert!(l.evaluate(&e).unwrap() > 1e-6);
    }

    #[test]
    fn baire_metric_basics() {
        let x = BaireSequence::constant(1).unwrap();
        let y = BaireSequence::new(vec![1, 1, 2], vec![1]).unwrap();
        assert_eq!(x.first_mismatch(&y), Some(2));
        assert!((baire_distance(&x, &y) - 0.25).abs() < 1e-15);
        // Same sequence, different representations.
        let z = BaireSequence::new(vec![1, 1], vec![1, 1, 1]).unwrap();
        assert_eq!(x.first_mismatch(&z), None);
        assert_eq!(baire_distance(&x, &z), 0.0);
        // Ultrametric triangle on a small family.
        let w = BaireSequence::new(vec![2], vec![1]).unwrap();
        let dxw = baire_distance(&x, &w);
        let dxy = baire_distance(&x, &y);
        let dyw = baire_distance(&y, &w);
        assert!(dxw <= dxy.max(dyw) + 1e-15);
    }

    #[test]
    fn descriptors_serialize() {
        let ladder = EsLadder::new(GOLDEN_CONJUGATE, 3).unwrap();
        let d = ladder.descriptor(2);
        let text = serde_json::to_string(&d).unwrap();
        let back: EsLevelJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.shape, vec![2, 1]);
        assert_eq!(back.theta_digits, vec![1, 1, 1]);

        let beta = BaireSequence::constant(1).unwrap();
        let lv = uhf_level(&beta, 2).unwrap();
        let dj = serde_json::to_string(&lv.descriptor(&beta)).unwrap();
        assert!(dj.contains("\"gamma\""));
    }

    proptest! {
        #[test]
        fn fibonacci_domination(digits in proptest::collection::vec(1u64..6, 1..10)) {
            // q_n of any expansion dominates the golden (all-ones) q_n.
            let cf = ContinuedFraction::new(digits).unwrap();
            let conv = ConvergentTable::new(&cf).unwrap();
            let golden = ContinuedFraction::constant(1, cf.len()).unwrap();
            let gconv = ConvergentTable::new(&golden).unwrap();
            for n in 0..=cf.len() as isize {
                prop_assert!(conv.q(n) >= gconv.q(n));
            }
        }

        #[test]
        fn baire_distance_is_symmetric(
            pa in proptest::collection::vec(1u64..4, 0..4),
            qa in proptest::collection::vec(1u64..4, 1..4),
            pb in proptest::collection::vec(1u64..4, 0..4),
            qb in proptest::collection::vec(1u64..4, 1..4),
        ) {
            let x = BaireSequence::new(pa, qa).unwrap();
            let y = BaireSequence::new(pb, qb).unwrap();
            prop_assert_eq!(baire_distance(&x, &y).to_bits(), baire_distance(&y, &x).to_bits());
        }
    }
}
