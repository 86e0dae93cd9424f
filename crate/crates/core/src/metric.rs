//! States, the Monge-Kantorovich metric as a dual ratio-ascent problem,
//! an exact commutative transport oracle, closed-form propinquity upper
//! bounds with certified rational tails, and the continuity and
//! locality experiments on the two ladders.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraShape, Element, ElementJson, Embedding};
use crate::error::{Error, Result};
use crate::ladder::{uhf_level_with_budget, BaireSequence, ContinuedFraction, EsLadder};
use crate::sample::{random_element, trial_rng};
use crate::trace::{matrix_units, ConditionalExpectation, TraceState};

/// A state given by a block-diagonal density: phi(a) = sum_k Tr(rho_k a_k)
/// with rho >= 0 self-adjoint and total trace one.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    density: Element,
}

impl State {
    pub fn new(density: Element) -> Result<Self> {
        if !density.is_self_adjoint(1e-10) {
            return Err(Error::Invalid("density must be self-adjoint".into()));
        }
        let min_eig = density
            .hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::Invalid(format!(
                "density has negative eigenvalue {min_eig}"
            )));
        }
        let total = density.raw_trace();
        if (total - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::Invalid(format!(
                "density trace {total} is not one"
            )));
        }
        Ok(State { density })
    }

    /// The tracial state itself, as a density.
    pub fn from_trace(trace: &TraceState) -> Self {
        let mut d = Element::identity(trace.shape());
        for (k, (&v, &n)) in trace
            .weights()
            .iter()
            .zip(trace.shape().block_dims())
            .enumerate()
        {
            let c = Complex64::new(v / n as f64, 0.0);
            let scaled = d.block(k) * c;
            d.block_mut(k).copy_from(&scaled);
        }
        State { density: d }
    }

    /// Point evaluation on a diagonal (all 1x1 blocks) algebra.
    pub fn point(shape: &AlgebraShape, i: usize) -> Result<Self> {
        if shape.block_dims().iter().any(|&d| d != 1) {
            return Err(Error::Invalid("point states need a diagonal algebra".into()));
        }
        State::new(Element::matrix_unit(shape, i, 0, 0))
    }

    /// Mixture of point evaluations with the given probability vector.
    pub fn mixture(shape: &AlgebraShape, weights: &[f64]) -> Result<Self> {
        if weights.len() != shape.num_blocks()
            || shape.block_dims().iter().any(|&d| d != 1)
        {
            return Err(Error::Invalid(
                "mixture weights must match a diagonal algebra".into(),
            ));
        }
        let mut d = Element::zero(shape);
        for (k, &w) in weights.iter().enumerate() {
            d.block_mut(k)[(0, 0)] = Complex64::new(w, 0.0);
        }
        State::new(d)
    }

    /// Seeded random faithful state: normalized g*g.
    pub fn random(shape: &AlgebraShape, rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        let g = random_element(shape, rng);
        let rho = g.adjoint().multiply(&g).expect("same shape");
        let total = rho.raw_trace().re;
        State {
            density: rho.scale(Complex64::new(1.0 / total, 0.0)),
        }
    }

    pub fn shape(&self) -> &AlgebraShape {
        self.density.shape()
    }

    pub fn density(&self) -> &Element {
        &self.density
    }

    pub fn eval(&self, a: &Element) -> Result<Complex64> {
        Ok(self.density.multiply(a)?.raw_trace())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KantorovichStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct KantorovichResult {
    pub value: f64,
    pub maximizer: Element,
    pub status: KantorovichStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KantorovichResultJson {
    pub value: f64,
    pub maximizer: ElementJson,
    pub status: KantorovichStatus,
}

impl KantorovichResult {
    pub fn to_json(&self) -> KantorovichResultJson {
        KantorovichResultJson {
            value: self.value,
            maximizer: ElementJson::from(&self.maximizer),
            status: self.status,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KantorovichBudget {
    pub starts: usize,
    pub iters: usize,
}

impl Default for KantorovichBudget {
    fn default() -> Self {
        KantorovichBudget {
            starts: 16,
            iters: 300,
        }
    }
}

/// Real parametrization of the self-adjoint part: diagonal entries,
/// then (re, im) per strictly-upper entry, block by block.
fn herm_from_vec(shape: &AlgebraShape, v: &[f64]) -> Element {
    let mut a = Element::zero(shape);
    let mut idx = 0;
    for k in 0..shape.num_blocks() {
        let d = shape.block_dims()[k];
        for i in 0..d {
            a.block_mut(k)[(i, i)] = Complex64::new(v[idx], 0.0);
            idx += 1;
            for j in (i + 1)..d {
                let c = Complex64::new(v[idx], v[idx + 1]);
                idx += 2;
                a.block_mut(k)[(i, j)] = c;
                a.block_mut(k)[(j, i)] = c.conj();
            }
        }
    }
    a
}

fn center(a: &Element, tau: &TraceState) -> Result<Element> {
    let t = tau.value(a)?;
    a.sub(&Element::scalar(a.shape(), t))
}

/// Reject seminorms whose kernel exceeds the scalars: every centered
/// self-adjoint matrix-unit direction must register.
fn check_nondegenerate(
    l: &dyn Fn(&Element) -> Result<f64>,
    tau: &TraceState,
    shape: &AlgebraShape,
) -> Result<()> {
    let basis = matrix_units(shape);
    for e in basis.units() {
        let re = e.add(&e.adjoint())?;
        let im = e
            .sub(&e.adjoint())?
            .scale(Complex64::new(0.0, 1.0));
        for h in [re, im] {
            let c = center(&h, tau)?;
            if c.operator_norm() > 1e-9 && l(&c)? < 1e-12 {
                return Err(Error::DegenerateSeminorm);
            }
        }
    }
    Ok(())
}

/// Lower-bound estimate of mk_L(phi, psi) = sup{ |phi(a) - psi(a)| :
/// L(a) <= 1 } by seeded multistart ascent of the ratio
/// (phi - psi)(a) / L(a) over centered self-adjoint a. The reported
/// value is evaluated at an exactly feasible renormalized maximizer.
pub fn kantorovich_distance(
    l: &dyn Fn(&Element) -> Result<f64>,
    tau: &TraceState,
    phi: &State,
    psi: &State,
    budget: KantorovichBudget,
    seed: u64,
) -> Result<KantorovichResult> {
    let shape = tau.shape().clone();
    if phi.shape() != &shape || psi.shape() != &shape {
        return Err(Error::ShapeMismatch {
            expected: shape.block_dims().to_vec(),
            got: phi.shape().block_dims().to_vec(),
        });
    }
    check_nondegenerate(l, tau, &shape)?;

    let dim = shape.linear_dim();
    let gap = |a: &Element| -> Result<f64> { Ok((phi.eval(a)? - psi.eval(a)?).re) };
    let ratio = |v: &[f64]| -> Result<f64> {
        let a = center(&herm_from_vec(&shape, v), tau)?;
        let denom = l(&a)?;
        if denom < 1e-14 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(gap(&a)? / denom)
    };

    let mut best_v: Option<Vec<f64>> = None;
    let mut best_f = 0.0_f64;
    let mut best_grad = f64::INFINITY;
    let h = 1e-6_f64;
    for s in 0..budget.starts {
        let mut rng = trial_rng(seed, s as u64);
        let start = crate::sample::random_self_adjoint(&shape, &mut rng);
        let mut v = vec![0.0f64; dim];
        {
            let mut idx = 0;
            for k in 0..shape.num_blocks() {
                let d = shape.block_dims()[k];
                for i in 0..d {
                    v[idx] = start.block(k)[(i, i)].re;
                    idx += 1;
                    for j in (i + 1)..d {
                        v[idx] = start.block(k)[(i, j)].re;
                        v[idx + 1] = start.block(k)[(i, j)].im;
                        idx += 2;
                    }
                }
            }
        }
        let mut f = ratio(&v)?;
        if !f.is_finite() {
            continue;
        }
        if f < 0.0 {
            // The objective is odd; flip into the ascending half.
            for x in v.iter_mut() {
                *x = -*x;
            }
            f = -f;
        }
        let mut step = 0.1_f64;
        let mut gnorm = f64::INFINITY;
        for _ in 0..budget.iters {
            let mut grad = vec![0.0f64; dim];
            gnorm = 0.0;
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
            if gnorm < 1e-7 * (1.0 + f.abs()) {
                break;
            }
            let mut improved = false;
            for _ in 0..25 {
                let trial: Vec<f64> = v
                    .iter()
                    .zip(&grad)
                    .map(|(x, g)| x + step * g / gnorm)
                    .collect();
                let ft = ratio(&trial)?;
                if ft > f {
                    v = trial;
                    f = ft;
                    step *= 1.3;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved || step < 1e-13 {
                break;
            }
        }
        if f > best_f {
            best_f = f;
            best_v = Some(v);
            best_grad = gnorm;
        }
    }

    match best_v {
        None => Ok(KantorovichResult {
            value: 0.0,
            maximizer: Element::zero(&shape),
            status: KantorovichStatus::Converged,
        }),
        Some(v) => {
            let a = center(&herm_from_vec(&shape, &v), tau)?;
            let denom = l(&a)?;
            if denom < 1e-14 || best_f < 1e-13 {
                return Ok(KantorovichResult {
                    value: 0.0,
                    maximizer: Element::zero(&shape),
                    status: KantorovichStatus::Converged,
                });
            }
            let maximizer = a.scale(Complex64::new(1.0 / denom, 0.0));
            let value = (phi.eval(&maximizer)? - psi.eval(&maximizer)?).norm();
            let status = if best_grad <= 1e-6 * (1.0 + best_f) {
                KantorovichStatus::Converged
            } else {
                KantorovichStatus::BudgetExhausted
            };
            Ok(KantorovichResult {
                value,
                maximizer,
                status,
            })
        }
    }
}

/// The Lipschitz seminorm max_{i != j} |f_i - f_j| / d(i, j) of a finite
/// metric space, acting on the diagonal algebra.
pub fn commutative_lipschitz(metric: Vec<Vec<f64>>) -> impl Fn(&Element) -> Result<f64> {
    move |f: &Element| {
        let n = metric.len();
        if f.shape().num_blocks() != n {
            return Err(Error::ShapeMismatch {
                expected: vec![1; n],
                got: f.shape().block_dims().to_vec(),
            });
        }
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (f.block(i)[(0, 0)] - f.block(j)[(0, 0)]).norm();
                worst = worst.max(diff / metric[i][j]);
            }
        }
        Ok(worst)
    }
}

fn validate_metric(metric: &[Vec<f64>]) -> Result<()> {
    let n = metric.len();
    if n == 0 || metric.iter().any(|row| row.len() != n) {
        return Err(Error::Invalid("metric matrix must be square".into()));
    }
    for i in 0..n {
        if metric[i][i].abs() > 1e-12 {
            return Err(Error::Invalid("metric diagonal must vanish".into()));
        }
        for j in 0..n {
            if i != j && !(metric[i][j] > 0.0) {
                return Err(Error::Invalid("off-diagonal distances must be positive".into()));
            }
            if (metric[i][j] - metric[j][i]).abs() > 1e-12 {
                return Err(Error::Invalid("metric must be symmetric".into()));
            }
            for k in 0..n {
                if metric[i][j] > metric[i][k] + metric[k][j] + 1e-12 {
                    return Err(Error::Invalid("triangle inequality fails".into()));
                }
            }
        }
    }
    Ok(())
}

/// Exact optimal transport cost between probability vectors on a finite
/// metric space, by successive shortest augmenting paths (min-cost flow
/// on the bipartite transport graph).
pub fn kantorovich_lp_oracle(metric: &[Vec<f64>], mu: &[f64], nu: &[f64]) -> Result<f64> {
    validate_metric(metric)?;
    let n = metric.len();
    if mu.len() != n || nu.len() != n {
        return Err(Error::Invalid("marginals must match the metric size".into()));
    }
    for w in mu.iter().chain(nu) {
        if *w < -1e-12 {
            return Err(Error::Invalid("marginals must be nonnegative".into()));
        }
    }
    let sm: f64 = mu.iter().sum();
    let sn: f64 = nu.iter().sum();
    if (sm - 1.0).abs() > 1e-9 || (sn - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid("marginals must sum to one".into()));
    }

    // Residual graph: node 0 = source, 1..=n supplies, n+1..=2n demands,
    // 2n+1 = sink. Edges stored as (to, cap, cost, rev-index).
    let nodes = 2 * n + 2;
    let mut adj: Vec<Vec<(usize, f64, f64, usize)>> = vec![Vec::new(); nodes];
    let add_edge = |adj: &mut Vec<Vec<(usize, f64, f64, usize)>>,
                        u: usize,
                        v: usize,
                        cap: f64,
                        cost: f64| {
        let ru = adj[v].len();
        let rv = adj[u].len();
        adj[u].push((v, cap, cost, ru));
        adj[v].push((u, 0.0, -cost, rv));
    };
    for i in 0..n {
        add_edge(&mut adj, 0, 1 + i, mu[i], 0.0);
        add_edge(&mut adj, 1 + n + i, 2 * n + 1, nu[i], 0.0);
        for j in 0..n {
            add_edge(&mut adj, 1 + i, 1 + n + j, f64::INFINITY, metric[i][j]);
        }
    }

    let source = 0;
    let sink = 2 * n + 1;
    let mut total_cost = 0.0_f64;
    let mut remaining = sm.min(sn);
    while remaining > 1e-12 {
        // Bellman-Ford shortest path in the residual graph.
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if !dist[u].is_finite() {
                    continue;
                }
                for (idx, &(v, cap, cost, _)) in adj[u].iter().enumerate() {
                    if cap > 1e-12 && dist[u] + cost < dist[v] - 1e-15 {
                        dist[v] = dist[u] + cost;
                        prev[v] = Some((u, idx));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        // Bottleneck along the path.
        let mut push = remaining;
        let mut v = sink;
        while let Some((u, idx)) = prev[v] {
            push = push.min(adj[u][idx].1);
            v = u;
        }
        let mut v = sink;
        while let Some((u, idx)) = prev[v] {
            adj[u][idx].1 -= push;
            let rev = adj[u][idx].3;
            adj[v][rev].1 += push;
            v = u;
        }
        total_cost += push * dist[sink];
        remaining -= push;
    }
    Ok(total_cost)
}

/// 4 sum_{j >= n} beta(j) split into an exact partial sum and a
/// certified tail bound, both rational.
#[derive(Debug, Clone)]
pub struct PropinquityBound {
    pub level: usize,
    pub partial: BigRational,
    pub tail: BigRational,
    pub terms: usize,
}

impl PropinquityBound {
    pub fn total(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(4)) * (&self.partial + &self.tail)
    }

    pub fn report(&self) -> PropinquityBoundReport {
        PropinquityBoundReport {
            level: self.level,
            partial_sum: self.partial.to_f64().unwrap_or(f64::NAN),
            tail_bound: self.tail.to_f64().unwrap_or(f64::NAN),
            total: self.total().to_f64().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropinquityBoundReport {
    pub level: usize,
    pub partial_sum: f64,
    pub tail_bound: f64,
    pub total: f64,
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

/// beta_theta(j) = 1/(q_j^2 + q_{j-1}^2), exact, for j = 0, 1, 2, ...
struct EsBetaIter<'a> {
    digits: &'a BaireSequence,
    j: usize,
    q_prev: BigInt, // q_{j-1}
    q_curr: BigInt, // q_j
}

impl<'a> EsBetaIter<'a> {
    fn new(digits: &'a BaireSequence) -> Self {
        EsBetaIter {
            digits,
            j: 0,
            q_prev: BigInt::zero(), // q_{-1}
            q_curr: BigInt::one(),  // q_0
        }
    }
}

impl Iterator for EsBetaIter<'_> {
    type Item = BigRational;
    fn next(&mut self) -> Option<BigRational> {
        let denom = &self.q_curr * &self.q_curr + &self.q_prev * &self.q_prev;
        let beta = BigRational::new(BigInt::one(), denom);
        let r = big(self.digits.get(self.j));
        let q_next = r * &self.q_curr + &self.q_prev;
        self.q_prev = std::mem::replace(&mut self.q_curr, q_next);
        self.j += 1;
        Some(beta)
    }
}

/// Exact beta_Phi(j) for the all-ones expansion (Fibonacci q).
fn fibonacci_beta(j: usize) -> BigRational {
    let ones = BaireSequence::constant(1).expect("valid");
    EsBetaIter::new(&ones).nth(j).expect("infinite")
}

/// Certified Effros-Shen bound with an explicit last summed index; the
/// tail past `j_end` is bounded by the Fibonacci majorant
/// beta_theta(j) <= beta_Phi(j) and the ratio beta_Phi(j+1)/beta_Phi(j)
/// <= 1/2, giving tail <= 2 beta_Phi(j_end + 1).
pub fn es_propinquity_bound_with_terms(
    digits: &BaireSequence,
    n: usize,
    j_end: usize,
) -> Result<PropinquityBound> {
    if j_end < n {
        return Err(Error::Invalid("tail start before level".into()));
    }
    let partial: BigRational = EsBetaIter::new(digits)
        .skip(n)
        .take(j_end - n + 1)
        .sum();
    let tail = BigRational::from_integer(big(2)) * fibonacci_beta(j_end + 1);
    Ok(PropinquityBound {
        level: n,
        partial,
        tail,
        terms: j_end - n + 1,
    })
}

/// Effros-Shen propinquity upper bound 4 sum_{j>=n} beta_theta(j) with
/// the tail certified below 1e-12 of the total.
pub fn es_propinquity_bound(digits: &BaireSequence, n: usize) -> Result<PropinquityBound> {
    let rel = BigRational::new(BigInt::one(), BigInt::from(10u64).pow(12));
    let mut j_end = n + 4;
    loop {
        let b = es_propinquity_bound_with_terms(digits, n, j_end)?;
        if &b.tail < &(&rel * (&b.partial + &b.tail)) {
            return Ok(b);
        }
        j_end += 4;
        if j_end > n + 400 {
            return Err(Error::Invalid("propinquity tail failed to certify".into()));
        }
    }
}

/// gamma_beta(j) = 1/(boxtimes beta(j))^2, exact.
fn uhf_gamma_exact(beta: &BaireSequence, j: usize) -> BigRational {
    let mut d = BigInt::one();
    for k in 0..j {
        d *= big(beta.get(k) + 1);
    }
    BigRational::new(BigInt::one(), &d * &d)
}

/// Certified UHF bound: multiplicities are >= 1, so the term ratio is
/// at most 1/4 and the tail past `j_end` is at most (4/3) gamma(j_end+1).
pub fn uhf_propinquity_bound_with_terms(
    beta: &BaireSequence,
    n: usize,
    j_end: usize,
) -> Result<PropinquityBound> {
    if j_end < n {
        return Err(Error::Invalid("tail start before level".into()));
    }
    let mut partial = BigRational::zero();
    for j in n..=j_end {
        partial += uhf_gamma_exact(beta, j);
    }
    let tail = BigRational::new(big(4), big(3)) * uhf_gamma_exact(beta, j_end + 1);
    Ok(PropinquityBound {
        level: n,
        partial,
        tail,
        terms: j_end - n + 1,
    })
}

pub fn uhf_propinquity_bound(beta: &BaireSequence, n: usize) -> Result<PropinquityBound> {
    let rel = BigRational::new(BigInt::one(), BigInt::from(10u64).pow(12));
    let mut j_end = n + 4;
    loop {
        let b = uhf_propinquity_bound_with_terms(beta, n, j_end)?;
        if &b.tail < &(&rel * (&b.partial + &b.tail)) {
            return Ok(b);
        }
        j_end += 4;
        if j_end > n + 400 {
            return Err(Error::Invalid("propinquity tail failed to certify".into()));
        }
    }
}

/// The witness b = E_n(a) for the finite-level approximation property,
/// with its norm defect and seminorm slack.
#[derive(Debug, Clone)]
pub struct ApproximationWitness {
    /// Level-n element.
    pub witness: Element,
    /// ||a - alpha_n(witness)|| at level n+1.
    pub defect: f64,
    /// L_n(witness) - 1; nonpositive when the caller normalized a.
    pub seminorm_slack: f64,
}

/// Generic form: `alpha` embeds level n into n+1, `step` is the
/// tau-preserving expectation onto its image, and the seminorms evaluate
/// on their own levels. The caller supplies a with l_next(a) <= 1.
pub fn approximation_witness(
    alpha: &Embedding,
    step: &ConditionalExpectation,
    l_here: &dyn Fn(&Element) -> Result<f64>,
    a: &Element,
) -> Result<ApproximationWitness> {
    let projected = step.apply(a)?;
    let witness = alpha.retract(&projected)?;
    let defect = a.sub(&alpha.apply(&witness)?)?.operator_norm();
    let seminorm_slack = l_here(&witness)? - 1.0;
    Ok(ApproximationWitness {
        witness,
        defect,
        seminorm_slack,
    })
}

/// Report of one theta-continuity run: a perturbed parameter agreeing
/// with the target through digit k, compared at a fixed common level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaContinuityReport {
    pub k: usize,
    pub level: usize,
    pub shapes_match: bool,
    /// sup over sampled norm-1 elements of |L'(a) - L(a)|.
    pub discrepancy: f64,
    pub t_gap: f64,
    pub kappa_gap: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Build theta' agreeing with theta through digit k then diverging
/// (every later digit bumped by one), and measure the seminorm gap at
/// the given common level.
pub fn theta_continuity_experiment(
    digits: &BaireSequence,
    k: usize,
    level: usize,
    trials: u64,
    seed: u64,
) -> Result<ThetaContinuityReport> {
    if k <= level {
        return Err(Error::Invalid(format!(
            "mismatch index k = {k} must exceed the level {level}"
        )));
    }
    let m = k + 25;
    let base: Vec<u64> = (0..m).map(|j| digits.get(j)).collect();
    let mut pert = base.clone();
    for d in pert.iter_mut().skip(k) {
        *d += 1;
    }
    let cf_base = ContinuedFraction::new(base)?;
    let cf_pert = ContinuedFraction::new(pert)?;
    let base_ladder = EsLadder::from_cf(&cf_base, level)?;
    let pert_ladder = EsLadder::from_cf(&cf_pert, level)?;

    let shapes_match = (0..=level)
        .all(|n| base_ladder.level(n).shape == pert_ladder.level(n).shape)
        && (0..level).all(|n| base_ladder.level(n).alpha == pert_ladder.level(n).alpha);
    if !shapes_match {
        return Err(Error::Invalid(
            "levels disagree below the mismatch index".into(),
        ));
    }

    let l_base = base_ladder.seminorm(level)?;
    let l_pert = pert_ladder.seminorm(level)?;
    let shape = base_ladder.level(level).shape.clone();
    let mut discrepancy = 0.0_f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = crate::sample::random_unit_element(&shape, &mut rng);
        discrepancy = discrepancy
            .max((l_base.evaluate(&a)? - l_pert.evaluate(&a)?).abs());
    }
    let t_gap = (base_ladder.level(level).t - pert_ladder.level(level).t).abs();
    let kappa_gap: f64 = (0..level)
        .map(|n| (base_ladder.level(n).kappa - pert_ladder.level(n).kappa).abs())
        .sum();
    Ok(ThetaContinuityReport {
        k,
        level,
        shapes_match,
        discrepancy,
        t_gap,
        kappa_gap,
        trials,
        seed,
    })
}

/// Outcome of the UHF locality check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UhfLocalityReport {
    pub distance: f64,
    pub n: usize,
    /// False when baire_distance(beta, eta) >= 2^-n; nothing is claimed
    /// then and no levels are compared.
    pub applicable: bool,
    pub all_equal: bool,
    pub first_mismatch_level: Option<usize>,
    /// Sharp-lambda estimates are compared only while the step target
    /// stays small enough to optimize; deterministic data is always
    /// compared at every level.
    pub estimates_compared_through: Option<usize>,
    pub seed: u64,
}

/// When d(beta, eta) < 2^-n, every UHF level k <= n must agree exactly:
/// shapes, embeddings, traces, gamma, the provable lambda, and the
/// seeded sharp-lambda estimates.
pub fn uhf_locality_check(
    beta: &BaireSequence,
    eta: &BaireSequence,
    n: usize,
    budget: usize,
    starts: usize,
    iters: usize,
    seed: u64,
) -> Result<UhfLocalityReport> {
    let distance = crate::ladder::baire_distance(beta, eta);
    let applicable = distance < 0.5f64.powi(n as i32);
    if !applicable {
        return Ok(UhfLocalityReport {
            distance,
            n,
            applicable,
            all_equal: false,
            first_mismatch_level: None,
            estimates_compared_through: None,
            seed,
        });
    }
    let mut first_mismatch_level = None;
    let mut estimates_compared_through = None;
    for k in 0..=n {
        let lb = uhf_level_with_budget(beta, k, budget)?;
        let le = uhf_level_with_budget(eta, k, budget)?;
        let mut same = lb.shape == le.shape
            && lb.mu == le.mu
            && lb.trace.weights() == le.trace.weights()
            && lb.gamma.to_bits() == le.gamma.to_bits()
            && lb.lambda.to_bits() == le.lambda.to_bits();
        if same && lb.mu.target().linear_dim() <= 64 {
            same = lb.sharp_lambda_estimate(starts, iters, seed)?.to_bits()
                == le.sharp_lambda_estimate(starts, iters, seed)?.to_bits();
            if same {
                estimates_compared_through = Some(k);
            }
        }
        if !same {
            first_mismatch_level = Some(k);
            break;
        }
    }
    Ok(UhfLocalityReport {
        distance,
        n,
        applicable,
        all_equal: first_mismatch_level.is_none(),
        first_mismatch_level,
        estimates_compared_through,
        seed,
    })
}
