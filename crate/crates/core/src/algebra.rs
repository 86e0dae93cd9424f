//! Finite-dimensional C*-algebras presented as direct sums of complex
//! matrix blocks, together with the unital *-monomorphisms given by
//! multiplicity patterns.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Block dimensions (n_1, ..., n_N) of a direct sum of matrix algebras.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraShape(Vec<usize>);

impl AlgebraShape {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidShape("empty block list".into()));
        }
        if block_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape("zero block dimension".into()));
        }
        Ok(AlgebraShape(block_dims))
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.0
    }

    pub fn num_blocks(&self) -> usize {
        self.0.len()
    }

    /// Complex linear dimension, sum of n_k^2.
    pub fn linear_dim(&self) -> usize {
        self.0.iter().map(|&d| d * d).sum()
    }
}

impl std::fmt::Display for AlgebraShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| format!("M{d}")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// An element of a direct sum of matrix algebras: one dense complex
/// matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    shape: AlgebraShape,
    blocks: Vec<CMat>,
}

fn check_same_shape(x: &Element, y: &Element) -> Result<()> {
    if x.shape != y.shape {
        return Err(Error::ShapeMismatch {
            expected: x.shape.block_dims().to_vec(),
            got: y.shape.block_dims().to_vec(),
        });
    }
    Ok(())
}

impl Element {
    pub fn new(shape: AlgebraShape, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != shape.num_blocks() {
            return Err(Error::InvalidShape(format!(
                "expected {} blocks, got {}",
                shape.num_blocks(),
                blocks.len()
            )));
        }
        for (k, (b, &d)) in blocks.iter().zip(shape.block_dims()).enumerate() {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::InvalidShape(format!(
                    "block {k} is {}x{}, expected {d}x{d}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Element { shape, blocks })
    }

    pub fn zero(shape: &AlgebraShape) -> Self {
        let blocks = shape
            .block_dims()
            .iter()
            .map(|&d| CMat::zeros(d, d))
            .collect();
        Element {
            shape: shape.clone(),
            blocks,
        }
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let blocks = shape
            .block_dims()
            .iter()
            .map(|&d| CMat::identity(d, d))
            .collect();
        Element {
            shape: shape.clone(),
            blocks,
        }
    }

    /// Scalar multiple of the identity.
    pub fn scalar(shape: &AlgebraShape, c: Complex64) -> Self {
        let mut e = Element::identity(shape);
        for b in &mut e.blocks {
            *b *= c;
        }
        e
    }

    /// Matrix unit e_{ij} in the given block, zero elsewhere.
    pub fn matrix_unit(shape: &AlgebraShape, block: usize, i: usize, j: usize) -> Self {
        let mut e = Element::zero(shape);
        e.blocks[block][(i, j)] = Complex64::new(1.0, 0.0);
        e
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut CMat {
        &mut self.blocks[k]
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        check_same_shape(self, other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Element {
            shape: self.shape.clone(),
            blocks,
        })
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        check_same_shape(self, other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Element {
            shape: self.shape.clone(),
            blocks,
        })
    }

    pub fn scale(&self, c: Complex64) -> Element {
        let blocks = self.blocks.iter().map(|b| b * c).collect();
        Element {
            shape: self.shape.clone(),
            blocks,
        }
    }

    /// Blockwise matrix product.
    pub fn multiply(&self, other: &Element) -> Result<Element> {
        check_same_shape(self, other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Element {
            shape: self.shape.clone(),
            blocks,
        })
    }

    /// Blockwise conjugate transpose.
    pub fn adjoint(&self) -> Element {
        let blocks = self.blocks.iter().map(|b| b.adjoint()).collect();
        Element {
            shape: self.shape.clone(),
            blocks,
        }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.sub(&self.adjoint())
            .map(|d| d.operator_norm() <= tol)
            .unwrap_or(false)
    }

    /// Jordan and Lie products: ((xy+yx)/2, (xy-yx)/2i).
    pub fn jordan_lie(&self, other: &Element) -> Result<(Element, Element)> {
        let xy = self.multiply(other)?;
        let yx = other.multiply(self)?;
        let half = Complex64::new(0.5, 0.0);
        let half_over_i = Complex64::new(0.0, -0.5);
        let jordan = xy.add(&yx)?.scale(half);
        let lie = xy.sub(&yx)?.scale(half_over_i);
        Ok((jordan, lie))
    }

    /// C*-norm: max over blocks of the largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                if b.nrows() == 1 {
                    b[(0, 0)].norm()
                } else {
                    b.clone()
                        .svd(false, false)
                        .singular_values
                        .iter()
                        .fold(0.0_f64, |m, &s| m.max(s))
                }
            })
            .fold(0.0_f64, f64::max)
    }

    /// Frobenius (Hilbert-Schmidt) norm over all blocks.
    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Unnormalized sum of block traces.
    pub fn raw_trace(&self) -> Complex64 {
        self.blocks
            .iter()
            .map(|b| (0..b.nrows()).map(|i| b[(i, i)]).sum::<Complex64>())
            .sum()
    }

    /// Eigenvalues of a self-adjoint element, gathered over all blocks.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in &self.blocks {
            if b.nrows() == 1 {
                out.push(b[(0, 0)].re);
            } else {
                let eig = b.clone().symmetric_eigen();
                out.extend(eig.eigenvalues.iter().copied());
            }
        }
        out
    }

    /// Blockwise inverse. Rejects singular blocks and blocks whose
    /// reciprocal condition number falls below `rcond_floor`.
    pub fn inverse_with_guard(&self, rcond_floor: f64) -> Result<Element> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (k, b) in self.blocks.iter().enumerate() {
            let sv = b.clone().svd(false, false).singular_values;
            let smax = sv.iter().fold(0.0_f64, |m, &s| m.max(s));
            let smin = sv.iter().fold(f64::INFINITY, |m, &s| m.min(s));
            if smin == 0.0 || smax == 0.0 {
                return Err(Error::SingularBlock { block: k });
            }
            let rcond = smin / smax;
            if rcond < rcond_floor {
                return Err(Error::IllConditioned { block: k, rcond });
            }
            let inv = b
                .clone()
                .try_inverse()
                .ok_or(Error::SingularBlock { block: k })?;
            blocks.push(inv);
        }
        Ok(Element {
            shape: self.shape.clone(),
            blocks,
        })
    }

    /// Blockwise inverse with the default guard of 1e-10.
    pub fn inverse(&self) -> Result<Element> {
        self.inverse_with_guard(1e-10)
    }
}

/// JSON form of an element: shape plus row-major [re, im] entries per block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementJson {
    pub shape: Vec<usize>,
    pub blocks: Vec<Vec<[f64; 2]>>,
}

impl From<&Element> for ElementJson {
    fn from(e: &Element) -> Self {
        let blocks = e
            .blocks
            .iter()
            .map(|b| {
                let d = b.nrows();
                let mut entries = Vec::with_capacity(d * d);
                for i in 0..d {
                    for j in 0..d {
                        let c = b[(i, j)];
                        entries.push([c.re, c.im]);
                    }
                }
                entries
            })
            .collect();
        ElementJson {
            shape: e.shape.block_dims().to_vec(),
            blocks,
        }
    }
}

impl TryFrom<&ElementJson> for Element {
    type Error = Error;

    fn try_from(j: &ElementJson) -> Result<Element> {
        let shape = AlgebraShape::new(j.shape.clone())?;
        if j.blocks.len() != shape.num_blocks() {
            return Err(Error::InvalidShape("block count mismatch".into()));
        }
        let mut blocks = Vec::with_capacity(j.blocks.len());
        for (entries, &d) in j.blocks.iter().zip(shape.block_dims()) {
            if entries.len() != d * d {
                return Err(Error::InvalidShape(format!(
                    "expected {} entries for a {d}x{d} block, got {}",
                    d * d,
                    entries.len()
                )));
            }
            let mut m = CMat::zeros(d, d);
            for i in 0..d {
                for jj in 0..d {
                    let [re, im] = entries[i * d + jj];
                    m[(i, jj)] = Complex64::new(re, im);
                }
            }
            blocks.push(m);
        }
        Element::new(shape, blocks)
    }
}

/// A unital *-monomorphism between direct sums of matrix algebras,
/// specified positionally: for each target block, the ordered list of
/// source blocks placed as diagonal sub-blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    source: AlgebraShape,
    target: AlgebraShape,
    pattern: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn new(
        source: AlgebraShape,
        target: AlgebraShape,
        pattern: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if pattern.len() != target.num_blocks() {
            return Err(Error::InvalidEmbedding(format!(
                "pattern has {} rows, target has {} blocks",
                pattern.len(),
                target.num_blocks()
            )));
        }
        let mut used = vec![false; source.num_blocks()];
        for (t, row) in pattern.iter().enumerate() {
            let mut total = 0usize;
            for &s in row {
                if s >= source.num_blocks() {
                    return Err(Error::InvalidEmbedding(format!(
                        "source index {s} out of range in target block {t}"
                    )));
                }
                used[s] = true;
                total += source.block_dims()[s];
            }
            if total != target.block_dims()[t] {
                return Err(Error::InvalidEmbedding(format!(
                    "target block {t} has dimension {}, pattern fills {total}",
                    target.block_dims()[t]
                )));
            }
        }
        if used.iter().any(|&u| !u) {
            return Err(Error::InvalidEmbedding(
                "not injective: some source block is never used".into(),
            ));
        }
        Ok(Embedding {
            source,
            target,
            pattern,
        })
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let pattern = (0..shape.num_blocks()).map(|k| vec![k]).collect();
        Embedding {
            source: shape.clone(),
            target: shape.clone(),
            pattern,
        }
    }

    pub fn source(&self) -> &AlgebraShape {
        &self.source
    }

    pub fn target(&self) -> &AlgebraShape {
        &self.target
    }

    pub fn pattern(&self) -> &[Vec<usize>] {
        &self.pattern
    }

    /// Place the source blocks diagonally per the pattern.
    pub fn apply(&self, x: &Element) -> Result<Element> {
        if x.shape() != &self.source {
            return Err(Error::ShapeMismatch {
                expected: self.source.block_dims().to_vec(),
                got: x.shape().block_dims().to_vec(),
            });
        }
        let mut out = Element::zero(&self.target);
        for (t, row) in self.pattern.iter().enumerate() {
            let mut offset = 0usize;
            for &s in row {
                let d = self.source.block_dims()[s];
                out.block_mut(t)
                    .view_mut((offset, offset), (d, d))
                    .copy_from(x.block(s));
                offset += d;
            }
        }
        Ok(out)
    }

    /// Left inverse on the image: read each source block back out of
    /// its first diagonal occurrence in the target.
    pub fn retract(&self, y: &Element) -> Result<Element> {
        if y.shape() != &self.target {
            return Err(Error::ShapeMismatch {
                expected: self.target.block_dims().to_vec(),
                got: y.shape().block_dims().to_vec(),
            });
        }
        let mut out = Element::zero(&self.source);
        let mut seen = vec![false; self.source.num_blocks()];
        for (t, row) in self.pattern.iter().enumerate() {
            let mut offset = 0usize;
            for &s in row {
                let d = self.source.block_dims()[s];
                if !seen[s] {
                    out.block_mut(s)
                        .copy_from(&y.block(t).view((offset, offset), (d, d)));
                    seen[s] = true;
                }
                offset += d;
            }
        }
        Ok(out)
    }

    /// Composite pattern of self followed by `next`.
    pub fn compose(&self, next: &Embedding) -> Result<Embedding> {
        if self.target != next.source {
            return Err(Error::ShapeMismatch {
                expected: self.target.block_dims().to_vec(),
                got: next.source.block_dims().to_vec(),
            });
        }
        let pattern = next
            .pattern
            .iter()
            .map(|row| {
                row.iter()
                    .flat_map(|&m| self.pattern[m].iter().copied())
                    .collect()
            })
            .collect();
        Embedding::new(self.source.clone(), next.target.clone(), pattern)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shape(dims: &[usize]) -> AlgebraShape {
        AlgebraShape::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let s = shape(&[2, 1]);
        let mut x = Element::zero(&s);
        x.block_mut(0)[(0, 1)] = c(1.5, -2.0);
        x.block_mut(1)[(0, 0)] = c(0.0, 3.0);
        let one = Element::identity(&s);
        assert_eq!(one.multiply(&x).unwrap(), x);
        assert_eq!(x.multiply(&one).unwrap(), x);
    }

    #[test]
    fn diag_involution_squares_to_identity() {
        let s = shape(&[2]);
        let mut x = Element::zero(&s);
        x.block_mut(0)[(0, 0)] = c(1.0, 0.0);
        x.block_mut(0)[(1, 1)] = c(-1.0, 0.0);
        let sq = x.multiply(&x).unwrap();
        assert!(sq.sub(&Element::identity(&s)).unwrap().operator_norm() < 1e-15);
    }

    #[test]
    fn matrix_unit_product_rule() {
        let s = shape(&[2]);
        let e12 = Element::matrix_unit(&s, 0, 0, 1);
        let e21 = Element::matrix_unit(&s, 0, 1, 0);
        let e11 = Element::matrix_unit(&s, 0, 0, 0);
        assert_eq!(e12.multiply(&e21).unwrap(), e11);
    }

    #[test]
    fn adjoint_of_matrix_unit() {
        let s = shape(&[2]);
        let e12 = Element::matrix_unit(&s, 0, 0, 1);
        let e21 = Element::matrix_unit(&s, 0, 1, 0);
        assert_eq!(e12.adjoint(), e21);
    }

    #[test]
    fn operator_norm_by_inspection() {
        let s = shape(&[2, 1]);
        let mut x = Element::zero(&s);
        x.block_mut(0)[(0, 0)] = c(3.0, 0.0);
        x.block_mut(0)[(1, 1)] = c(-4.0, 0.0);
        x.block_mut(1)[(0, 0)] = c(2.0, 0.0);
        assert!((x.operator_norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_inverse() {
        let s = shape(&[2]);
        let mut x = Element::zero(&s);
        x.block_mut(0)[(0, 0)] = c(2.0, 0.0);
        x.block_mut(0)[(1, 1)] = c(4.0, 0.0);
        let inv = x.inverse().unwrap();
        assert!((inv.block(0)[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((inv.block(0)[(1, 1)].re - 0.25).abs() < 1e-14);
        let id = Element::identity(&s);
        assert!(Element::identity(&s).inverse().unwrap() == id);
    }

    #[test]
    fn singular_block_is_named() {
        let s = shape(&[1, 2]);
        let mut x = Element::identity(&s);
        *x.block_mut(1) = CMat::zeros(2, 2);
        match x.inverse() {
            Err(Error::SingularBlock { block }) => assert_eq!(block, 1),
            other => panic!("expected singular-block error, got {other:?}"),
        }
    }

    #[test]
    fn jordan_lie_hand_case() {
        // x = e11 - e22, y = e12 + e21: xy = e12 - e21 = -yx, so jordan = 0.
        let s = shape(&[2]);
        let x = Element::matrix_unit(&s, 0, 0, 0)
            .sub(&Element::matrix_unit(&s, 0, 1, 1))
            .unwrap();
        let y = Element::matrix_unit(&s, 0, 0, 1)
            .add(&Element::matrix_unit(&s, 0, 1, 0))
            .unwrap();
        let (j, l) = x.jordan_lie(&y).unwrap();
        assert!(j.operator_norm() < 1e-15);
        // lie = (xy - yx)/2i = (e12 - e21)/i = i e21 - i e12... check self-adjoint.
        assert!(l.is_self_adjoint(1e-14));
        assert!((l.operator_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jordan_lie_commuting_diagonal() {
        let s = shape(&[2]);
        let mut x = Element::zero(&s);
        x.block_mut(0)[(0, 0)] = c(2.0, 0.0);
        x.block_mut(0)[(1, 1)] = c(3.0, 0.0);
        let mut y = Element::zero(&s);
        y.block_mut(0)[(0, 0)] = c(-1.0, 0.0);
        y.block_mut(0)[(1, 1)] = c(5.0, 0.0);
        let (j, l) = x.jordan_lie(&y).unwrap();
        assert!(j.sub(&x.multiply(&y).unwrap()).unwrap().operator_norm() < 1e-14);
        assert!(l.operator_norm() < 1e-14);
    }

    #[test]
    fn effros_shen_style_embedding() {
        // r = 2: (a, b) in M1+M1 -> diag(a, a, b) + (a) in M3+M1.
        let src = shape(&[1, 1]);
        let tgt = shape(&[3, 1]);
        let e = Embedding::new(src.clone(), tgt, vec![vec![0, 0, 1], vec![0]]).unwrap();
        let mut x = Element::zero(&src);
        x.block_mut(0)[(0, 0)] = c(2.0, 0.0);
        x.block_mut(1)[(0, 0)] = c(7.0, 0.0);
        let y = e.apply(&x).unwrap();
        assert_eq!(y.block(0)[(0, 0)], c(2.0, 0.0));
        assert_eq!(y.block(0)[(1, 1)], c(2.0, 0.0));
        assert_eq!(y.block(0)[(2, 2)], c(7.0, 0.0));
        assert_eq!(y.block(1)[(0, 0)], c(2.0, 0.0));
        // Unitality.
        let id = Element::identity(&src);
        assert_eq!(e.apply(&id).unwrap(), Element::identity(e.target()));
    }

    #[test]
    fn compose_with_identity_is_unchanged() {
        let src = shape(&[1, 1]);
        let tgt = shape(&[2, 1]);
        let e = Embedding::new(src.clone(), tgt.clone(), vec![vec![0, 1], vec![0]]).unwrap();
        let idt = Embedding::identity(&tgt);
        assert_eq!(e.compose(&idt).unwrap(), e);
        let ids = Embedding::identity(&src);
        assert_eq!(ids.compose(&e).unwrap(), e);
    }

    #[test]
    fn compose_matches_successive_application() {
        let a0 = shape(&[1]);
        let a1 = shape(&[1, 1]);
        let a2 = shape(&[2, 1]);
        let e01 = Embedding::new(a0.clone(), a1.clone(), vec![vec![0], vec![0]]).unwrap();
        let e12 = Embedding::new(a1, a2, vec![vec![0, 1], vec![0]]).unwrap();
        let e02 = e01.compose(&e12).unwrap();
        let mut x = Element::zero(&a0);
        x.block_mut(0)[(0, 0)] = c(3.0, -1.0);
        let direct = e02.apply(&x).unwrap();
        let staged = e12.apply(&e01.apply(&x).unwrap()).unwrap();
        assert_eq!(direct, staged);
    }

    #[test]
    fn element_json_round_trip() {
        let s = shape(&[2, 1]);
        let mut x = Element::zero(&s);
        x.block_mut(0)[(0, 1)] = c(1.25, -0.5);
        x.block_mut(1)[(0, 0)] = c(0.0, 2.0);
        let j = ElementJson::from(&x);
        let back = Element::try_from(&j).unwrap();
        assert_eq!(back, x);
    }

    fn arb_element(dims: Vec<usize>) -> impl Strategy<Value = Element> {
        let n: usize = dims.iter().map(|d| d * d).sum();
        proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n * 2).prop_map(move |vals| {
            let shape = AlgebraShape::new(dims.clone()).unwrap();
            let mut e = Element::zero(&shape);
            let mut it = vals.into_iter();
            for k in 0..shape.num_blocks() {
                let d = shape.block_dims()[k];
                for i in 0..d {
                    for j in 0..d {
                        let (re, im) = it.next().unwrap();
                        e.block_mut(k)[(i, j)] = c(re, im);
                    }
                }
            }
            e
        })
    }

    proptest! {
        #[test]
        fn cstar_identity(x in arb_element(vec![2, 3])) {
            let n = x.operator_norm();
            let nn = x.adjoint().multiply(&x).unwrap().operator_norm();
            prop_assert!((nn - n * n).abs() <= 1e-10 * (1.0 + n * n));
        }

        #[test]
        fn adjoint_reverses_products(x in arb_element(vec![2, 2]), y in arb_element(vec![2, 2])) {
            let lhs = x.multiply(&y).unwrap().adjoint();
            let rhs = y.adjoint().multiply(&x.adjoint()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().operator_norm() <= 1e-10);
        }

        #[test]
        fn embeddings_are_isometric(x in arb_element(vec![1, 1])) {
            let tgt = AlgebraShape::new(vec![3, 1]).unwrap();
            let e = Embedding::new(x.shape().clone(), tgt, vec![vec![0, 0, 1], vec![0]]).unwrap();
            let y = e.apply(&x).unwrap();
            prop_assert!((y.operator_norm() - x.operator_norm()).abs() <= 1e-12);
        }

        #[test]
        fn embeddings_are_multiplicative(x in arb_element(vec![1, 1]), y in arb_element(vec![1, 1])) {
            let tgt = AlgebraShape::new(vec![3, 1]).unwrap();
            let e = Embedding::new(x.shape().clone(), tgt, vec![vec![0, 0, 1], vec![0]]).unwrap();
            let lhs = e.apply(&x.multiply(&y).unwrap()).unwrap();
            let rhs = e.apply(&x).unwrap().multiply(&e.apply(&y).unwrap()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().operator_norm() <= 1e-12);
        }
    }

    #[test]
    fn inverse_residual_on_hermitian() {
        use crate::sample::{random_self_adjoint, trial_rng};
        let s = shape(&[3, 2]);
        for t in 0..20u64 {
            let mut rng = trial_rng(7, t);
            let h = random_self_adjoint(&s, &mut rng);
            // Shift well away from zero so the guard passes.
            let shift = h.operator_norm() + 1.0;
            let x = h
                .add(&Element::scalar(&s, c(shift, 0.0)))
                .unwrap();
            let inv = x.inverse().unwrap();
            let res = x
                .multiply(&inv)
                .unwrap()
                .sub(&Element::identity(&s))
                .unwrap()
                .operator_norm();
            assert!(res <= 1e-8, "residual {res}");
        }
    }
}
