//! Truncated bosonic Fock spaces over `ℝⁿ` in the monomial basis `x^α`
//! with `‖x^α‖² = α!`: exponential vectors, their closed-form norms and
//! pairings, kernels as operators, and the composition cocycle.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::opalg::{cayley, logdet_pos, schur_compose, BlockPosOp, CayleyForm, SymMatrix};

pub const DEFAULT_TRUNCATION: usize = 16;

/// Exponent vector of a monomial. Ordered graded-lexicographically:
/// by total degree, then by exponents with the first variable dominant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `α! = ∏ αᵢ!`, the squared norm of `x^α`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e)).product()
    }

    fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Splits into the first `k` and the remaining exponents.
    pub fn split(&self, k: usize) -> (MultiIndex, MultiIndex) {
        (
            MultiIndex(self.0[..k].to_vec()),
            MultiIndex(self.0[k..].to_vec()),
        )
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// All multi-indices of a given dimension up to a total degree, in graded-lex order.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    dim: usize,
    max_degree: usize,
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

impl MonomialBasis {
    pub fn new(dim: usize, max_degree: usize) -> Self {
        let mut indices = Vec::new();
        for degree in 0..=max_degree {
            let mut current = vec![0u32; dim];
            push_compositions(&mut indices, &mut current, 0, degree as u32);
        }
        let position = indices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        Self {
            dim,
            max_degree,
            indices,
            position,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }
}

// first exponent descending, so output follows the `MultiIndex` order
fn push_compositions(
    out: &mut Vec<MultiIndex>,
    current: &mut Vec<u32>,
    slot: usize,
    remaining: u32,
) {
    let dim = current.len();
    if dim == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if slot == dim - 1 {
        current[slot] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[slot] = e;
        push_compositions(out, current, slot + 1, remaining - e);
    }
    current[slot] = 0;
}

/// Element of the truncated Fock space over `ℝ^base_dim`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    base_dim: usize,
    truncation_degree: usize,
    coefficients: BTreeMap<MultiIndex, f64>,
}

impl FockVector {
    pub fn vacuum(base_dim: usize, truncation_degree: usize) -> Self {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(MultiIndex::zero(base_dim), 1.0);
        Self {
            base_dim,
            truncation_degree,
            coefficients,
        }
    }

    /// Builds a vector from explicit coefficients, checking dimension and degree.
    pub fn from_coefficients(
        base_dim: usize,
        truncation_degree: usize,
        coefficients: BTreeMap<MultiIndex, f64>,
    ) -> Result<Self> {
        for alpha in coefficients.keys() {
            if alpha.dim() != base_dim || alpha.degree() > truncation_degree {
                return Err(Error::DimensionMismatch(format!(
                    "index {:?} outside dimension {base_dim} truncated at degree {truncation_degree}",
                    alpha.exponents()
                )));
            }
        }
        Ok(Self {
            base_dim,
            truncation_degree,
            coefficients,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn truncation_degree(&self) -> usize {
        self.truncation_degree
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.coefficients.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coefficients
    }

    /// `Σ c_α² α!`.
    pub fn norm_sq(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|(a, c)| c * c * a.factorial())
            .sum()
    }

    /// `Σ c_α d_α α!`.
    pub fn inner(&self, other: &FockVector) -> Result<f64> {
        if self.base_dim != other.base_dim {
            return Err(Error::DimensionMismatch(format!(
                "Fock vectors over dimensions {} and {}",
                self.base_dim, other.base_dim
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .map(|(a, c)| c * other.coefficient(a) * a.factorial())
            .sum())
    }

    /// Norm of the difference, restricted to the common truncation.
    pub fn distance(&self, other: &FockVector) -> Result<f64> {
        if self.base_dim != other.base_dim {
            return Err(Error::DimensionMismatch(
                "Fock vectors over different spaces".into(),
            ));
        }
        let mut acc = 0.0;
        for (a, c) in &self.coefficients {
            let d = c - other.coefficient(a);
            acc += d * d * a.factorial();
        }
        for (a, c) in &other.coefficients {
            if !self.coefficients.contains_key(a) {
                acc += c * c * a.factorial();
            }
        }
        Ok(acc.sqrt())
    }
}

/// `ℰ(C) = Exp(½ S(C))` truncated at polynomial degree `truncation_degree`.
///
/// With `q(x) = ½ xᵀ C x`, the coefficients are those of `Σₙ qⁿ / n!`.
pub fn exp_vector(c: &CayleyForm, truncation_degree: usize) -> FockVector {
    let n = c.dim();
    let m = c.matrix();
    let mut quadratic: Vec<(MultiIndex, f64)> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let coeff = if i == j { 0.5 * m[(i, i)] } else { m[(i, j)] };
            if coeff != 0.0 {
                let mut e = vec![0u32; n];
                e[i] += 1;
                e[j] += 1;
                quadratic.push((MultiIndex(e), coeff));
            }
        }
    }

    let mut total = FockVector::vacuum(n, truncation_degree);
    let mut term: BTreeMap<MultiIndex, f64> = total.coefficients.clone();
    for k in 1..=truncation_degree / 2 {
        let mut next: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (alpha, a) in &term {
            for (beta, b) in &quadratic {
                *next.entry(alpha.add(beta)).or_insert(0.0) += a * b / k as f64;
            }
        }
        for (alpha, v) in &next {
            *total.coefficients.entry(alpha.clone()).or_insert(0.0) += v;
        }
        term = next;
        if term.is_empty() {
            break;
        }
    }
    total
}

/// `ln ‖ℰ(C)‖² = −½ ln det(I − C²)`.
pub fn log_fock_norm_sq(c: &CayleyForm) -> Result<f64> {
    let n = c.dim();
    let m = c.matrix();
    let gram = SymMatrix::new(DMatrix::identity(n, n) - m * m)?;
    Ok(-0.5 * logdet_pos(&gram)?)
}

/// `‖ℰ(C)‖² = det(I − C²)^{-1/2}`.
pub fn fock_norm_sq(c: &CayleyForm) -> Result<f64> {
    Ok(log_fock_norm_sq(c)?.exp())
}

/// `ln ⟨ℰ(A), ℰ(B)⟩ = −½ ln det(I − AB)`, averaged over both orderings.
pub fn log_fock_pairing(a: &CayleyForm, b: &CayleyForm) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "pairing contractions of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let ld = |m: DMatrix<f64>| -> Result<f64> {
        let det = m.lu().determinant();
        if det.is_nan() || det <= 0.0 {
            return Err(Error::NotContraction {
                norm: a.norm().max(b.norm()),
            });
        }
        Ok(det.ln())
    };
    let ab = ld(&id - a.matrix() * b.matrix())?;
    let ba = ld(&id - b.matrix() * a.matrix())?;
    Ok(-0.25 * (ab + ba))
}

pub fn fock_pairing(a: &CayleyForm, b: &CayleyForm) -> Result<f64> {
    Ok(log_fock_pairing(a, b)?.exp())
}

/// Truncated Hilbert–Schmidt operator `Sym(ℝ^in) → Sym(ℝ^out)` in monomial bases:
/// `T x^β = Σ_α matrix[(α, β)] x^α`.
#[derive(Debug, Clone)]
pub struct HSOperatorTrunc {
    out_basis: MonomialBasis,
    in_basis: MonomialBasis,
    matrix: DMatrix<f64>,
}

impl HSOperatorTrunc {
    pub fn identity(dim: usize, truncation_degree: usize) -> Self {
        let basis = MonomialBasis::new(dim, truncation_degree);
        let n = basis.len();
        Self {
            out_basis: basis.clone(),
            in_basis: basis,
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.out_basis.dim()
    }

    pub fn in_dim(&self) -> usize {
        self.in_basis.dim()
    }

    pub fn truncation_degree(&self) -> usize {
        self.out_basis.max_degree()
    }

    pub fn out_basis(&self) -> &MonomialBasis {
        &self.out_basis
    }

    pub fn in_basis(&self) -> &MonomialBasis {
        &self.in_basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, out: &MultiIndex, input: &MultiIndex) -> f64 {
        match (self.out_basis.position(out), self.in_basis.position(input)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }

    /// Vacuum-to-vacuum entry.
    pub fn vacuum_entry(&self) -> f64 {
        self.matrix[(0, 0)]
    }

    /// Matrix in the orthonormal bases `x^α / √α!`.
    pub fn orthonormal_matrix(&self) -> DMatrix<f64> {
        let out_w: Vec<f64> = self
            .out_basis
            .indices()
            .iter()
            .map(|a| a.factorial().sqrt())
            .collect();
        let in_w: Vec<f64> = self
            .in_basis
            .indices()
            .iter()
            .map(|a| a.factorial().sqrt())
            .collect();
        DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
            self.matrix[(i, j)] * out_w[i] / in_w[j]
        })
    }

    /// Trace over the truncated space (requires equal in and out spaces).
    pub fn trace(&self) -> Result<f64> {
        if self.out_dim() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "trace of an operator from dimension {} to {}",
                self.in_dim(),
                self.out_dim()
            )));
        }
        Ok(self.matrix.diagonal().sum())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            out_basis: self.out_basis.clone(),
            in_basis: self.in_basis.clone(),
            matrix: &self.matrix * factor,
        }
    }

    /// `max |ΔO| / max |O_other|` in orthonormal bases.
    pub fn relative_error(&self, other: &HSOperatorTrunc) -> Result<f64> {
        check_same_shape(self, other)?;
        let a = self.orthonormal_matrix();
        let b = other.orthonormal_matrix();
        Ok((&a - &b).amax() / b.amax())
    }
}

fn check_same_shape(a: &HSOperatorTrunc, b: &HSOperatorTrunc) -> Result<()> {
    if a.out_dim() != b.out_dim()
        || a.in_dim() != b.in_dim()
        || a.truncation_degree() != b.truncation_degree()
    {
        return Err(Error::DimensionMismatch(
            "operators have different shapes".into(),
        ));
    }
    Ok(())
}

/// Reads a vector over `ℝ^out ⊕ ℝ^in` as a kernel operator `Sym(ℝ^in) → Sym(ℝ^out)`.
/// Entry `(α_out, α_in)` is `c_α · α_in!`.
pub fn vector_to_hs(v: &FockVector, out_dim: usize) -> Result<HSOperatorTrunc> {
    if out_dim > v.base_dim() {
        return Err(Error::DimensionMismatch(format!(
            "split {} exceeds base dimension {}",
            out_dim,
            v.base_dim()
        )));
    }
    let d = v.truncation_degree();
    let out_basis = MonomialBasis::new(out_dim, d);
    let in_basis = MonomialBasis::new(v.base_dim() - out_dim, d);
    let mut matrix = DMatrix::zeros(out_basis.len(), in_basis.len());
    for (alpha, c) in v.coefficients() {
        let (a_out, a_in) = alpha.split(out_dim);
        let i = out_basis
            .position(&a_out)
            .expect("degree within truncation");
        let j = in_basis.position(&a_in).expect("degree within truncation");
        matrix[(i, j)] = c * a_in.factorial();
    }
    Ok(HSOperatorTrunc {
        out_basis,
        in_basis,
        matrix,
    })
}

/// Operator composition `t2 ∘ t1` on the truncated spaces.
pub fn compose_hs(t2: &HSOperatorTrunc, t1: &HSOperatorTrunc) -> Result<HSOperatorTrunc> {
    if t1.out_dim() != t2.in_dim() || t1.truncation_degree() != t2.truncation_degree() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: inner spaces have dimensions {} and {} at truncations {} and {}",
            t1.out_dim(),
            t2.in_dim(),
            t1.truncation_degree(),
            t2.truncation_degree()
        )));
    }
    Ok(HSOperatorTrunc {
        out_basis: t2.out_basis.clone(),
        in_basis: t1.in_basis.clone(),
        matrix: &t2.matrix * &t1.matrix,
    })
}

/// Kernel operator of the exponential vector of `C(op)`.
pub fn gaussian_operator(op: &BlockPosOp, truncation_degree: usize) -> Result<HSOperatorTrunc> {
    let c = cayley(&op.assembled())?;
    vector_to_hs(&exp_vector(&c, truncation_degree), op.dim_out())
}

/// `ln c(𝒜₂, 𝒜₁)`, where `ℰ(C(𝒜₂)) ∘ ℰ(C(𝒜₁)) = c · ℰ(C(𝒜₂ ∘ 𝒜₁))`.
pub fn log_cocycle_constant(a2: &BlockPosOp, a1: &BlockPosOp) -> Result<f64> {
    let composed = schur_compose(a2, a1)?;
    let middle = SymMatrix::new((a1.out_block().matrix() + a2.in_block().matrix()) * 0.5)?;
    let ld1 = logdet_pos(&a1.assembled())?;
    let ld2 = logdet_pos(&a2.assembled())?;
    let ld21 = logdet_pos(&composed.assembled())?;
    let ld_mid = logdet_pos(&middle)?;
    let ns1 = log_fock_norm_sq(&cayley(&a1.assembled())?)?;
    let ns2 = log_fock_norm_sq(&cayley(&a2.assembled())?)?;
    let ns21 = log_fock_norm_sq(&cayley(&composed.assembled())?)?;
    Ok(0.25 * ld1 + 0.25 * ld2 - 0.5 * ld_mid - 0.25 * ld21 + 0.5 * (ns1 + ns2 - ns21))
}

pub fn cocycle_constant(a2: &BlockPosOp, a1: &BlockPosOp) -> Result<f64> {
    Ok(log_cocycle_constant(a2, a1)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn form(n: usize, data: &[f64]) -> CayleyForm {
        CayleyForm::new(SymMatrix::from_row_slice(n, data).unwrap()).unwrap()
    }

    fn random_contraction(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> CayleyForm {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = SymMatrix::new((&m + m.transpose()) * 0.5).unwrap();
        let scale = radius / s.norm();
        CayleyForm::new(SymMatrix::new(s.matrix() * scale).unwrap()).unwrap()
    }

    fn near_identity(rng: &mut ChaCha8Rng, p: usize, q: usize, radius: f64) -> BlockPosOp {
        let n = p + q;
        let r = radius * rng.random_range(0.1..1.0);
        let e = random_contraction(rng, n, r);
        let m = SymMatrix::new(DMatrix::identity(n, n) + e.matrix()).unwrap();
        BlockPosOp::from_assembled(&m, p).unwrap()
    }

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn basis_is_graded_lex() {
        let b = MonomialBasis::new(2, 2);
        let expected = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
        let got: Vec<Vec<u32>> = b.indices().iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(got, expected.iter().map(|e| e.to_vec()).collect::<Vec<_>>());
        let mut sorted = b.indices().to_vec();
        sorted.sort();
        assert_eq!(sorted, b.indices());
        assert_eq!(MonomialBasis::new(3, 4).len(), 35);
        assert_eq!(MonomialBasis::new(0, 5).len(), 1);
    }

    #[test]
    fn exp_vector_of_zero_is_vacuum() {
        let v = exp_vector(&CayleyForm::zero(3), 10);
        assert_eq!(v, FockVector::vacuum(3, 10));
    }

    #[test]
    fn exp_vector_one_dimensional() {
        let a = 0.7;
        let v = exp_vector(&form(1, &[a]), 12);
        for n in 0..=6u32 {
            let expected = a.powi(n as i32) / (2f64.powi(n as i32) * factorial(n));
            assert_relative_eq!(v.coefficient(&mi(&[2 * n])), expected, max_relative = 1e-14);
            if n < 6 {
                assert_eq!(v.coefficient(&mi(&[2 * n + 1])), 0.0);
            }
        }
        // norm series Σ a^{2n}(2n)!/(2^{2n}(n!)²)
        let series: f64 = (0..=6u32)
            .map(|n| {
                a.powi(2 * n as i32) * factorial(2 * n)
                    / (4f64.powi(n as i32) * factorial(n).powi(2))
            })
            .sum();
        assert_relative_eq!(v.norm_sq(), series, max_relative = 1e-14);
    }

    #[test]
    fn exp_vector_off_diagonal() {
        let g = 0.4;
        let v = exp_vector(&form(2, &[0.0, g, g, 0.0]), 16);
        for (alpha, c) in v.coefficients() {
            let e = alpha.exponents();
            assert_eq!(e[0], e[1], "unexpected index {e:?}");
            assert_relative_eq!(
                *c,
                g.powi(e[0] as i32) / factorial(e[0]),
                max_relative = 1e-14
            );
        }
        assert_eq!(v.coefficients().len(), 9);
    }

    #[test]
    fn norm_closed_form_examples() {
        assert_eq!(fock_norm_sq(&CayleyForm::zero(2)).unwrap(), 1.0);
        assert_relative_eq!(
            fock_norm_sq(&form(1, &[0.6])).unwrap(),
            1.25,
            max_relative = 1e-15
        );
        let series = exp_vector(&form(1, &[0.6]), 120).norm_sq();
        assert_relative_eq!(series, 1.25, max_relative = 1e-12);
    }

    #[test]
    fn pairing_closed_form_examples() {
        let a = form(1, &[0.5]);
        let b = form(1, &[-0.5]);
        assert_eq!(
            fock_pairing(&CayleyForm::zero(1), &CayleyForm::zero(1)).unwrap(),
            1.0
        );
        assert_relative_eq!(
            fock_pairing(&a, &b).unwrap(),
            1.25f64.powf(-0.5),
            max_relative = 1e-15
        );
        let series = exp_vector(&a, 80).inner(&exp_vector(&b, 80)).unwrap();
        assert_relative_eq!(series, 1.25f64.powf(-0.5), max_relative = 1e-12);
    }

    #[test]
    fn norm_and_pairing_match_series_in_three_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = random_contraction(&mut rng, 3, 0.4);
            let b = random_contraction(&mut rng, 3, 0.4);
            let (va, vb) = (exp_vector(&a, 24), exp_vector(&b, 24));
            assert_relative_eq!(va.norm_sq(), fock_norm_sq(&a).unwrap(), max_relative = 1e-8);
            assert_relative_eq!(
                va.inner(&vb).unwrap(),
                fock_pairing(&a, &b).unwrap(),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn series_error_shrinks_with_truncation() {
        let c = form(2, &[0.5, 0.1, 0.1, 0.3]);
        let exact = fock_norm_sq(&c).unwrap();
        let errors: Vec<f64> = [4, 8, 12, 16, 20]
            .iter()
            .map(|&d| exact - exp_vector(&c, d).norm_sq())
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0] && w[1] >= 0.0, "{errors:?}");
        }
    }

    #[test]
    fn pairing_rejects_dimension_mismatch() {
        assert!(fock_pairing(&CayleyForm::zero(1), &CayleyForm::zero(2)).is_err());
    }

    #[test]
    fn vacuum_becomes_rank_one_operator() {
        let t = vector_to_hs(&FockVector::vacuum(2, 4), 1).unwrap();
        assert_eq!(t.vacuum_entry(), 1.0);
        assert_eq!(t.matrix().iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn off_diagonal_kernel_is_diagonal_operator() {
        let g = 0.3;
        let t = vector_to_hs(&exp_vector(&form(2, &[0.0, g, g, 0.0]), 12), 1).unwrap();
        for n in 0..=6u32 {
            assert_relative_eq!(
                t.entry(&mi(&[n]), &mi(&[n])),
                g.powi(n as i32),
                max_relative = 1e-14
            );
        }
        let composed = compose_hs(&t, &t).unwrap();
        for n in 0..=6u32 {
            assert_relative_eq!(
                composed.entry(&mi(&[n]), &mi(&[n])),
                (g * g).powi(n as i32),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn split_beyond_dimension_fails() {
        assert!(vector_to_hs(&FockVector::vacuum(2, 4), 3).is_err());
    }

    #[test]
    fn compose_with_identity_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let op = near_identity(&mut rng, 2, 1, 0.3);
        let t = gaussian_operator(&op, 8).unwrap();
        let left = compose_hs(&HSOperatorTrunc::identity(2, 8), &t).unwrap();
        let right = compose_hs(&t, &HSOperatorTrunc::identity(1, 8)).unwrap();
        assert_eq!(left.matrix(), t.matrix());
        assert_eq!(right.matrix(), t.matrix());
        assert!(compose_hs(&t, &t).is_err());
    }

    #[test]
    fn cocycle_of_identities_is_one() {
        let id = BlockPosOp::identity(1, 1);
        assert_relative_eq!(
            cocycle_constant(&id, &id).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn cocycle_two_by_two_example() {
        let a = BlockPosOp::from_assembled(
            &SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap(),
            1,
        )
        .unwrap();
        let c = cocycle_constant(&a, &a).unwrap();
        // Gaussian contraction: det(I − C(𝒜₁)_out,out · C(𝒜₂)_in,in)^{-1/2}
        let ca = cayley(&a.assembled()).unwrap();
        let oracle = (1.0 - ca.matrix()[(0, 0)] * ca.matrix()[(1, 1)]).powf(-0.5);
        assert_relative_eq!(c, oracle, max_relative = 1e-13);
        assert_relative_eq!(c, 1.032_795_558_988_644, max_relative = 1e-12);
    }

    #[test]
    fn cocycle_matches_gaussian_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let (n1, n2, n3) = (
                rng.random_range(1..4),
                rng.random_range(1..4),
                rng.random_range(1..4),
            );
            let a1 = near_identity(&mut rng, n2, n1, 0.8);
            let a2 = near_identity(&mut rng, n3, n2, 0.8);
            let c1 = cayley(&a1.assembled()).unwrap();
            let c2 = cayley(&a2.assembled()).unwrap();
            let c1_out = c1.matrix().view((0, 0), (n2, n2)).into_owned();
            let c2_in = c2.matrix().view((n3, n3), (n2, n2)).into_owned();
            let det = (DMatrix::identity(n2, n2) - c1_out * c2_in).determinant();
            assert_relative_eq!(
                log_cocycle_constant(&a2, &a1).unwrap(),
                -0.5 * det.ln(),
                max_relative = 1e-10,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn cylinder_blocks_have_trivial_cocycle() {
        let block = |x: f64| {
            let (co, cs) = (1.0 / x.tanh(), 1.0 / x.sinh());
            BlockPosOp::from_assembled(
                &SymMatrix::from_row_slice(2, &[co, -cs, -cs, co]).unwrap(),
                1,
            )
            .unwrap()
        };
        assert_relative_eq!(
            log_cocycle_constant(&block(0.3), &block(1.7)).unwrap(),
            0.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn operator_composition_matches_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(n1, n2, n3) in &[(1, 1, 1), (2, 1, 2)] {
            for _ in 0..3 {
                let a1 = near_identity(&mut rng, n2, n1, 0.3);
                let a2 = near_identity(&mut rng, n3, n2, 0.3);
                let lhs = compose_hs(
                    &gaussian_operator(&a2, 16).unwrap(),
                    &gaussian_operator(&a1, 16).unwrap(),
                )
                .unwrap();
                let c = cocycle_constant(&a2, &a1).unwrap();
                let rhs = gaussian_operator(&schur_compose(&a2, &a1).unwrap(), 16)
                    .unwrap()
                    .scaled(c);
                let err = lhs.relative_error(&rhs).unwrap();
                assert!(err < 1e-6, "dims {:?} error {err}", (n1, n2, n3));
                assert_relative_eq!(lhs.vacuum_entry(), c, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn single_mode_trace_closed_form() {
        // C = [[a, c], [c, b]] has tr ℰ = ((1 − c)² − ab)^{-1/2}
        let (a, b, c) = (0.2, -0.1, 0.3);
        let t = vector_to_hs(&exp_vector(&form(2, &[a, c, c, b]), 60), 1).unwrap();
        let exact = ((1.0 - c).powi(2) - a * b).powf(-0.5);
        assert_relative_eq!(t.trace().unwrap(), exact, max_relative = 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn exp_vector_is_continuous(seed in any::<u64>(), n in 1usize..=3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let c = random_contraction(&mut rng, n, 0.5);
                let dir = random_contraction(&mut rng, n, 0.9);
                let base = exp_vector(&c, 12);
                let mut prev = f64::INFINITY;
                for k in 1..=4 {
                    let eps = 10f64.powi(-2 * k);
                    let moved = CayleyForm::new(SymMatrix::new(c.matrix() + dir.matrix() * eps).unwrap()).unwrap();
                    let d = exp_vector(&moved, 12).distance(&base).unwrap();
                    prop_assert!(d < prev);
                    prop_assert!(d < 10.0 * eps);
                    prev = d;
                }
            }

            #[test]
            fn pairing_is_symmetric(seed in any::<u64>(), n in 1usize..=4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_contraction(&mut rng, n, 0.9);
                let b = random_contraction(&mut rng, n, 0.9);
                prop_assert_eq!(fock_pairing(&a, &b).unwrap(), fock_pairing(&b, &a).unwrap());
                let diag = fock_pairing(&a, &a).unwrap();
                prop_assert!((diag - fock_norm_sq(&a).unwrap()).abs() <= 1e-12 * diag);
            }
        }
    }
}
