//! Faithful tracial states on direct sums of matrix algebras and the
//! unique trace-preserving conditional expectations onto embedded
//! subalgebras, computed through the matrix-unit formula
//!
//!   E(a) = sum_e  tau(a alpha(e)*) / tau(alpha(e)* alpha(e)) * alpha(e)
//!
//! over a complete system of matrix units e of the subalgebra.

use num_complex::Complex64;

use crate::algebra::{AlgebraShape, Element, Embedding};
use crate::error::{Error, Result};
use crate::report::PropertyCheck;
use crate::sample::{random_unit_element, trial_rng};

/// A faithful tracial state tau_v(a) = sum_k (v_k / n_k) Tr(a_k).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    shape: AlgebraShape,
    weights: Vec<f64>,
}

impl TraceState {
    pub fn new(shape: AlgebraShape, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != shape.num_blocks() {
            return Err(Error::InvalidTrace(format!(
                "{} weights for {} blocks",
                weights.len(),
                shape.num_blocks()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidTrace("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidTrace(format!("weights sum to {total}")));
        }
        Ok(TraceState { shape, weights })
    }

    /// The unique tracial state when every block has equal weight is not
    /// generally normalized; this is the normalized trace of a single
    /// full matrix block (weights all equal to block count share).
    pub fn uniform(shape: &AlgebraShape) -> Self {
        let n = shape.num_blocks() as f64;
        TraceState {
            shape: shape.clone(),
            weights: vec![1.0 / n; shape.num_blocks()],
        }
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self, x: &Element) -> Result<Complex64> {
        if x.shape() != &self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.block_dims().to_vec(),
                got: x.shape().block_dims().to_vec(),
            });
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (k, b) in x.blocks().iter().enumerate() {
            let d = self.shape.block_dims()[k] as f64;
            let tr: Complex64 = (0..b.nrows()).map(|i| b[(i, i)]).sum();
            total += tr * (self.weights[k] / d);
        }
        Ok(total)
    }
}

/// Complete system of matrix units, one per (block, row, column).
#[derive(Debug, Clone)]
pub struct MatrixUnitBasis {
    shape: AlgebraShape,
    units: Vec<Element>,
    index: Vec<(usize, usize, usize)>,
}

pub fn matrix_units(shape: &AlgebraShape) -> MatrixUnitBasis {
    let mut units = Vec::with_capacity(shape.linear_dim());
    let mut index = Vec::with_capacity(shape.linear_dim());
    for (k, &d) in shape.block_dims().iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                units.push(Element::matrix_unit(shape, k, i, j));
                index.push((k, i, j));
            }
        }
    }
    MatrixUnitBasis {
        shape: shape.clone(),
        units,
        index,
    }
}

impl MatrixUnitBasis {
    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn units(&self) -> &[Element] {
        &self.units
    }

    pub fn index(&self) -> &[(usize, usize, usize)] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Reconstruct an element from its coefficients in this basis.
    pub fn reconstruct(&self, x: &Element) -> Element {
        let mut out = Element::zero(&self.shape);
        for (u, &(k, i, j)) in self.units.iter().zip(&self.index) {
            let coeff = x.block(k)[(i, j)];
            let _ = u; // coefficients read off directly
            out.block_mut(k)[(i, j)] = coeff;
        }
        out
    }
}

/// The unique tau-preserving faithful conditional expectation from an
/// ambient algebra onto the image of a unital embedding.
#[derive(Debug, Clone)]
pub struct ConditionalExpectation {
    ambient: AlgebraShape,
    embedding: Embedding,
    trace: TraceState,
    image_units: Vec<Element>,
    image_units_adj: Vec<Element>,
    denominators: Vec<f64>,
}

pub fn conditional_expectation(
    embedding: &Embedding,
    trace: &TraceState,
) -> Result<ConditionalExpectation> {
    if trace.shape() != embedding.target() {
        return Err(Error::ShapeMismatch {
            expected: embedding.target().block_dims().to_vec(),
            got: trace.shape().block_dims().to_vec(),
        });
    }
    let basis = matrix_units(embedding.source());
    let mut image_units = Vec::with_capacity(basis.len());
    let mut image_units_adj = Vec::with_capacity(basis.len());
    let mut denominators = Vec::with_capacity(basis.len());
    for e in basis.units() {
        let img = embedding.apply(e)?;
        let denom = trace.value(&img.adjoint().multiply(&img)?)?;
        // Faithfulness of the trace keeps every denominator positive.
        if denom.re <= 0.0 {
            return Err(Error::InvalidTrace(
                "non-faithful trace: vanishing matrix-unit weight".into(),
            ));
        }
        image_units_adj.push(img.adjoint());
        image_units.push(img);
        denominators.push(denom.re);
    }
    Ok(ConditionalExpectation {
        ambient: embedding.target().clone(),
        embedding: embedding.clone(),
        trace: trace.clone(),
        image_units,
        image_units_adj,
        denominators,
    })
}

impl ConditionalExpectation {
    pub fn identity(shape: &AlgebraShape, trace: &TraceState) -> Result<Self> {
        conditional_expectation(&Embedding::identity(shape), trace)
    }

    pub fn ambient(&self) -> &AlgebraShape {
        &self.ambient
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn trace(&self) -> &TraceState {
        &self.trace
    }

    pub fn apply(&self, a: &Element) -> Result<Element> {
        if a.shape() != &self.ambient {
            return Err(Error::ShapeMismatch {
                expected: self.ambient.block_dims().to_vec(),
                got: a.shape().block_dims().to_vec(),
            });
        }
        let mut out = Element::zero(&self.ambient);
        for ((img, img_adj), &denom) in self
            .image_units
            .iter()
            .zip(&self.image_units_adj)
            .zip(&self.denominators)
        {
            let coeff = self.trace.value(&a.multiply(img_adj)?)? / denom;
            out = out.add(&img.scale(coeff))?;
        }
        Ok(out)
    }
}

/// Verify the Tomiyama properties of a conditional expectation on
/// seeded random samples. Returns one check per property.
pub fn verify_tomiyama(
    e: &ConditionalExpectation,
    trials: u64,
    seed: u64,
) -> Result<Vec<PropertyCheck>> {
    let ambient = e.ambient().clone();
    let sub = e.embedding().source().clone();
    let mut fixes_image = 0.0_f64;
    let mut contraction = 0.0_f64;
    let mut bimodule = 0.0_f64;
    let mut positivity = 0.0_f64;
    let mut faithfulness = 0.0_f64;
    let mut trace_preserving = 0.0_f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        // E(b) = b on the image, scaled to norm one.
        let b_small = random_unit_element(&sub, &mut rng);
        let b = e.embedding().apply(&b_small)?;
        fixes_image = fixes_image.max(e.apply(&b)?.sub(&b)?.operator_norm());
        // Contraction and trace preservation.
        let a = random_unit_element(&ambient, &mut rng);
        let ea = e.apply(&a)?;
        contraction = contraction.max((ea.operator_norm() - a.operator_norm()).max(0.0));
        let tv = (e.trace().value(&ea)? - e.trace().value(&a)?).norm();
        trace_preserving = trace_preserving.max(tv);
        // Bimodule property E(b a b') = b E(a) b'.
        let bp = e.embedding().apply(&random_unit_element(&sub, &mut rng))?;
        let lhs = e.apply(&b.multiply(&a)?.multiply(&bp)?)?;
        let rhs = b.multiply(&ea)?.multiply(&bp)?;
        bimodule = bimodule.max(lhs.sub(&rhs)?.operator_norm());
        // Positivity and faithfulness on x*x with ||x|| = 1.
        let x = random_unit_element(&ambient, &mut rng);
        let exx = e.apply(&x.adjoint().multiply(&x)?)?;
        let min_eig = exx
            .hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        positivity = positivity.max((-min_eig).max(0.0));
        faithfulness = faithfulness.max((1e-8 - exx.operator_norm()).max(0.0));
    }
    Ok(vec![
        PropertyCheck::new("fixes-image", trials, fixes_image, seed),
        PropertyCheck::new("contraction", trials, contraction, seed),
        PropertyCheck::new("bimodule", trials, bimodule, seed),
        PropertyCheck::new("positivity", trials, positivity, seed),
        PropertyCheck::new("faithfulness", trials, faithfulness, seed),
        PropertyCheck::new("trace-preserving", trials, trace_preserving, seed),
    ])
}

/// Schwarz-type positivity: min eigenvalue of E(a*a) - E(a)*E(a) over
/// seeded unit samples, reported as a violation of positivity.
pub fn schwarz_check(e: &ConditionalExpectation, trials: u64, seed: u64) -> Result<PropertyCheck> {
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = random_unit_element(e.ambient(), &mut rng);
        let lhs = e.apply(&a.adjoint().multiply(&a)?)?;
        let ea = e.apply(&a)?;
        let gap = lhs.sub(&ea.adjoint().multiply(&ea)?)?;
        let min_eig = gap
            .hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((-min_eig).max(0.0));
    }
    Ok(PropertyCheck::new("schwarz", trials, worst, seed))
}

/// Check E_m o E_n = E_m on random samples. Requires the image of E_m
/// to be contained in the image of E_n.
pub fn composition_identity_check(
    e_m: &ConditionalExpectation,
    e_n: &ConditionalExpectation,
    trials: u64,
    seed: u64,
) -> Result<PropertyCheck> {
    if e_m.ambient() != e_n.ambient() {
        return Err(Error::NotNested("different ambient algebras".into()));
    }
    // Nestedness: E_n must fix the image of E_m.
    for u in &e_m.image_units {
        if e_n.apply(u)?.sub(u)?.operator_norm() > 1e-10 {
            return Err(Error::NotNested(
                "image of the smaller expectation is not fixed by the larger one".into(),
            ));
        }
    }
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = random_unit_element(e_m.ambient(), &mut rng);
        let lhs = e_m.apply(&e_n.apply(&a)?)?;
        let rhs = e_m.apply(&a)?;
        worst = worst.max(lhs.sub(&rhs)?.operator_norm());
    }
    Ok(PropertyCheck::new("composition-identity", trials, worst, seed))
}

/// Intertwining of per-level and ambient expectations:
/// E_top(alpha_next(a)) = alpha_next(E_step(a)) for a in the next level.
///
/// `e_top` lives in the ambient algebra onto the image of level n;
/// `e_step` lives in level n+1 onto the embedded level n;
/// `alpha_next` embeds level n+1 into the ambient algebra.
pub fn intertwining_check(
    e_top: &ConditionalExpectation,
    e_step: &ConditionalExpectation,
    alpha_next: &Embedding,
    trials: u64,
    seed: u64,
) -> Result<PropertyCheck> {
    if alpha_next.target() != e_top.ambient() || alpha_next.source() != e_step.ambient() {
        return Err(Error::Invalid(
            "intertwining check requires alpha_next from the step ambient to the top ambient"
                .into(),
        ));
    }
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = random_unit_element(e_step.ambient(), &mut rng);
        let lhs = e_top.apply(&alpha_next.apply(&a)?)?;
        let rhs = alpha_next.apply(&e_step.apply(&a)?)?;
        worst = worst.max(lhs.sub(&rhs)?.operator_norm());
    }
    Ok(PropertyCheck::new("intertwining", trials, worst, seed))
}

/// Sup over sampled unit-ball elements of ||E_v(a) - E_w(a)|| for two
/// trace weight vectors v, w on the same embedding.
pub fn expectation_weight_gap(
    embedding: &Embedding,
    v: &TraceState,
    w: &TraceState,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let ev = conditional_expectation(embedding, v)?;
    let ew = conditional_expectation(embedding, w)?;
    let mut worst = 0.0_f64;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = random_unit_element(embedding.target(), &mut rng);
        worst = worst.max(ev.apply(&a)?.sub(&ew.apply(&a)?)?.operator_norm());
    }
    Ok(worst)
}
