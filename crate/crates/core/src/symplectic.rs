//! Finite-dimensional symplectic linear algebra: hyperbolic spaces, complex
//! subspaces of their complexifications, positive Lagrangians and the
//! composition of linear relations.
//!
//! A relation from `V = H_in ⊕ H_in` to `W = H_out ⊕ H_out` lives in
//! `W_ℂ ⊕ conj(V_ℂ)`. Coordinates are always ordered as
//! (outgoing value, outgoing momentum, incoming value, incoming momentum),
//! and the symplectic form on the relation space is `Ω_W ⊕ (−Ω_V)`.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::opalg::BlockPosOp;

type C64 = Complex<f64>;

/// Relative rank threshold for bases and null spaces.
pub const RANK_TOL: f64 = 1e-10;
/// Tolerance for isotropy and for positivity of the Hermitian Gram matrix.
pub const LAGRANGIAN_TOL: f64 = 1e-10;
/// Subspaces closer than this in projector Frobenius distance are equal.
pub const SUBSPACE_TOL: f64 = 1e-8;

/// `V = V⁺ ⊕ V⁻` with `V± = ℝⁿ` and `Ω((a⁺,a⁻),(b⁺,b⁻)) = ⟨a⁺,b⁻⟩ − ⟨b⁺,a⁻⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperbolicSpace {
    n: usize,
}

impl HyperbolicSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "hyperbolic space needs n >= 1".into(),
            ));
        }
        Ok(Self { n })
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn form(&self) -> SymplecticForm {
        SymplecticForm(hyperbolic_gram(self.n))
    }
}

fn hyperbolic_gram(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Gram matrix of a real symplectic form, extended bilinearly to ℂ.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm(DMatrix<f64>);

impl SymplecticForm {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        let n = gram.nrows();
        if n != gram.ncols() || n == 0 || !n.is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "symplectic Gram matrix must be square of even size, got {}x{}",
                n,
                gram.ncols()
            )));
        }
        if (&gram + gram.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidParameter(
                "symplectic Gram matrix is not antisymmetric".into(),
            ));
        }
        let sv = gram.clone().singular_values();
        if sv.min() <= RANK_TOL * sv.max() {
            return Err(Error::InvalidParameter(
                "symplectic form is degenerate".into(),
            ));
        }
        Ok(Self(gram))
    }

    /// `Ω_W ⊕ (−Ω_V)` on `W_ℂ ⊕ conj(V_ℂ)` with `W = ℝ^out ⊕ ℝ^out`, `V = ℝ^in ⊕ ℝ^in`.
    pub fn relation(out_n: usize, in_n: usize) -> Self {
        let dim = 2 * (out_n + in_n);
        let mut j = DMatrix::zeros(dim, dim);
        j.view_mut((0, 0), (2 * out_n, 2 * out_n))
            .copy_from(&hyperbolic_gram(out_n));
        j.view_mut((2 * out_n, 2 * out_n), (2 * in_n, 2 * in_n))
            .copy_from(&(-hyperbolic_gram(in_n)));
        Self(j)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.0
    }

    fn complex_gram(&self) -> DMatrix<C64> {
        self.0.map(|x| C64::new(x, 0.0))
    }
}

/// Complex subspace stored by an orthonormal basis (columns).
#[derive(Debug, Clone)]
pub struct ComplexSubspace {
    basis: DMatrix<C64>,
}

impl ComplexSubspace {
    /// Accepts a basis of full column rank and orthonormalizes it.
    pub fn from_basis(basis: DMatrix<C64>) -> Result<Self> {
        if basis.ncols() == 0 {
            return Ok(Self { basis });
        }
        let svd = basis.clone().svd(true, false);
        let s = &svd.singular_values;
        if s.min() <= RANK_TOL * s.max() {
            return Err(Error::InvalidParameter(format!(
                "basis is rank deficient (singular values {:.3e}..{:.3e})",
                s.min(),
                s.max()
            )));
        }
        let u = svd.u.expect("requested U");
        Ok(Self {
            basis: u.columns(0, basis.ncols()).into_owned(),
        })
    }

    /// Span of arbitrary spanning vectors; dependent columns are discarded.
    pub fn span(vectors: DMatrix<C64>) -> Self {
        let scale = vectors.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        Self::span_with_scale(vectors, scale)
    }

    /// Like [`ComplexSubspace::span`] with singular values below `RANK_TOL * scale` dropped.
    pub fn span_with_scale(vectors: DMatrix<C64>, scale: f64) -> Self {
        let ambient = vectors.nrows();
        if vectors.ncols() == 0 {
            return Self {
                basis: DMatrix::zeros(ambient, 0),
            };
        }
        let svd = vectors.svd(true, false);
        let s = svd.singular_values;
        let u = svd.u.expect("requested U");
        let cutoff = RANK_TOL * scale;
        let idx: Vec<usize> = (0..s.len())
            .filter(|&i| s[i] > cutoff && s[i] > 0.0)
            .collect();
        let basis = DMatrix::from_fn(ambient, idx.len(), |r, c| u[(r, idx[c])]);
        Self { basis }
    }

    pub fn from_real_basis(basis: &DMatrix<f64>) -> Result<Self> {
        Self::from_basis(basis.map(|x| C64::new(x, 0.0)))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> DMatrix<C64> {
        &self.basis * self.basis.adjoint()
    }

    /// Frobenius distance between orthogonal projectors.
    pub fn distance(&self, other: &ComplexSubspace) -> Result<f64> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "subspaces live in dimensions {} and {}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        Ok((self.projector() - other.projector()).norm())
    }

    pub fn approx_eq(&self, other: &ComplexSubspace) -> bool {
        self.distance(other).is_ok_and(|d| d < SUBSPACE_TOL)
    }
}

fn check_ambient(l: &ComplexSubspace, form: &SymplecticForm) -> Result<()> {
    if l.ambient_dim() != form.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace in dimension {} but form has dimension {}",
            l.ambient_dim(),
            form.dim()
        )));
    }
    Ok(())
}

/// Half-dimensional and isotropic for the bilinear extension of `form`.
pub fn is_lagrangian(l: &ComplexSubspace, form: &SymplecticForm) -> Result<bool> {
    check_ambient(l, form)?;
    if 2 * l.dim() != form.dim() {
        return Ok(false);
    }
    let b = l.basis();
    let omega = b.transpose() * form.complex_gram() * b;
    Ok(omega.iter().all(|z| z.norm() <= LAGRANGIAN_TOL))
}

/// Lagrangian with `−iΩ(v̄, w)` positive definite on it.
pub fn is_positive_lagrangian(l: &ComplexSubspace, form: &SymplecticForm) -> Result<bool> {
    if !is_lagrangian(l, form)? {
        return Err(Error::NotLagrangian(format!(
            "{}-dimensional subspace of a {}-dimensional symplectic space",
            l.dim(),
            form.dim()
        )));
    }
    Ok(hermitian_gram_min_eigenvalue(l, form) > LAGRANGIAN_TOL)
}

/// Smallest eigenvalue of `−i Bᴴ Ω B` on the orthonormal basis `B`.
pub fn hermitian_gram_min_eigenvalue(l: &ComplexSubspace, form: &SymplecticForm) -> f64 {
    let b = l.basis();
    let g = (b.adjoint() * form.complex_gram() * b) * C64::new(0.0, -1.0);
    let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(g)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// A subspace of `W_ℂ ⊕ conj(V_ℂ)` with `W = ℝ^out ⊕ ℝ^out`, `V = ℝ^in ⊕ ℝ^in`.
#[derive(Debug, Clone)]
pub struct LinearRelation {
    out_n: usize,
    in_n: usize,
    subspace: ComplexSubspace,
}

impl LinearRelation {
    pub fn new(out_n: usize, in_n: usize, subspace: ComplexSubspace) -> Result<Self> {
        if subspace.ambient_dim() != 2 * (out_n + in_n) {
            return Err(Error::DimensionMismatch(format!(
                "relation between {out_n} and {in_n} dimensional spaces needs ambient dimension {}, got {}",
                2 * (out_n + in_n),
                subspace.ambient_dim()
            )));
        }
        Ok(Self {
            out_n,
            in_n,
            subspace,
        })
    }

    /// Graph `{(S v, v)}` of a real map `S : V → W` between hyperbolic spaces.
    pub fn graph_of_map(s: &DMatrix<f64>) -> Result<Self> {
        if !s.nrows().is_multiple_of(2) || !s.ncols().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(
                "map between hyperbolic spaces needs even dims".into(),
            ));
        }
        let (w, v) = (s.nrows(), s.ncols());
        let mut basis = DMatrix::zeros(w + v, v);
        basis.view_mut((0, 0), (w, v)).copy_from(s);
        basis.view_mut((w, 0), (v, v)).fill_with_identity();
        Self::new(w / 2, v / 2, ComplexSubspace::from_real_basis(&basis)?)
    }

    pub fn out_n(&self) -> usize {
        self.out_n
    }

    pub fn in_n(&self) -> usize {
        self.in_n
    }

    pub fn subspace(&self) -> &ComplexSubspace {
        &self.subspace
    }

    pub fn form(&self) -> SymplecticForm {
        SymplecticForm::relation(self.out_n, self.in_n)
    }

    pub fn is_lagrangian(&self) -> bool {
        is_lagrangian(&self.subspace, &self.form()).unwrap_or(false)
    }

    pub fn is_positive_lagrangian(&self) -> Result<bool> {
        is_positive_lagrangian(&self.subspace, &self.form())
    }

    pub fn approx_eq(&self, other: &LinearRelation) -> bool {
        self.out_n == other.out_n
            && self.in_n == other.in_n
            && self.subspace.approx_eq(&other.subspace)
    }
}

/// Result of a fiber product, with the computed and the Lagrangian dimension.
#[derive(Debug, Clone)]
pub struct RelationComposition {
    pub relation: LinearRelation,
    pub lagrangian_dim: usize,
}

impl RelationComposition {
    /// False when the intersection was not transversal and dimension dropped.
    pub fn has_lagrangian_dim(&self) -> bool {
        self.relation.subspace.dim() == self.lagrangian_dim
    }
}

/// `Q ∘ P = {(u, v) : ∃w, (u, w) ∈ Q, (w, v) ∈ P}` for `P ⊂ W ⊕ V̄`, `Q ⊂ U ⊕ W̄`.
pub fn compose_relations(q: &LinearRelation, p: &LinearRelation) -> Result<RelationComposition> {
    if q.in_n != p.out_n {
        return Err(Error::DimensionMismatch(format!(
            "relations share no middle space: {} vs {}",
            q.in_n, p.out_n
        )));
    }
    let (u, w, v) = (2 * q.out_n, 2 * q.in_n, 2 * p.in_n);
    let bq = q.subspace.basis();
    let bp = p.subspace.basis();
    let (kq, kp) = (bq.ncols(), bp.ncols());

    // solve Bq_w a − Bp_w b = 0
    let cols = kq + kp;
    let rows = w.max(cols);
    let mut system = DMatrix::<C64>::zeros(rows, cols);
    system.view_mut((0, 0), (w, kq)).copy_from(&bq.rows(u, w));
    system
        .view_mut((0, kq), (w, kp))
        .copy_from(&(-bp.rows(0, w)));
    let null = null_space(system);

    let mut spanning = DMatrix::<C64>::zeros(u + v, null.ncols());
    for (j, coeffs) in null.column_iter().enumerate() {
        let a = coeffs.rows(0, kq);
        let b = coeffs.rows(kq, kp);
        spanning
            .view_mut((0, j), (u, 1))
            .copy_from(&(bq.rows(0, u) * a));
        spanning
            .view_mut((u, j), (v, 1))
            .copy_from(&(bp.rows(w, v) * b));
    }
    // bases and null vectors are orthonormal, so images are measured on unit scale
    let relation = LinearRelation::new(
        q.out_n,
        p.in_n,
        ComplexSubspace::span_with_scale(spanning, 1.0),
    )?;
    Ok(RelationComposition {
        relation,
        lagrangian_dim: q.out_n + p.in_n,
    })
}

/// Columns spanning the null space of a matrix with at least as many rows as columns.
fn null_space(m: DMatrix<C64>) -> DMatrix<C64> {
    let cols = m.ncols();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= RANK_TOL * scale).collect();
    DMatrix::from_fn(cols, idx.len(), |r, c| vt[(idx[c], r)].conj())
}

/// Graph of `i𝒜̃` with `𝒜̃ = [A B; −Bᵀ −D]`, as a relation from `H_in ⊕ H_in`
/// to `H_out ⊕ H_out`: points `(x_out, i(A x_out + B x_in), x_in, −i(Bᵀ x_out + D x_in))`.
pub fn graph_of_tilde(op: &BlockPosOp) -> LinearRelation {
    let (p, q) = (op.dim_out(), op.dim_in());
    let i = C64::new(0.0, 1.0);
    let a = op.out_block().matrix().map(|x| C64::new(x, 0.0));
    let b = op.coupling().map(|x| C64::new(x, 0.0));
    let d = op.in_block().matrix().map(|x| C64::new(x, 0.0));
    let mut basis = DMatrix::<C64>::zeros(2 * (p + q), p + q);
    basis.view_mut((0, 0), (p, p)).fill_with_identity();
    basis.view_mut((p, 0), (p, p)).copy_from(&(&a * i));
    basis.view_mut((p, p), (p, q)).copy_from(&(&b * i));
    basis.view_mut((2 * p, p), (q, q)).fill_with_identity();
    basis
        .view_mut((2 * p + q, 0), (q, p))
        .copy_from(&(b.transpose() * (-i)));
    basis
        .view_mut((2 * p + q, p), (q, q))
        .copy_from(&(&d * (-i)));
    let subspace = ComplexSubspace::from_basis(basis).expect("graph basis has full rank");
    LinearRelation {
        out_n: p,
        in_n: q,
        subspace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::{schur_compose, SymMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_block_op(rng: &mut ChaCha8Rng, p: usize, q: usize) -> BlockPosOp {
        let n = p + q;
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let spd = SymMatrix::new(&m * m.transpose() + DMatrix::identity(n, n) * 0.2).unwrap();
        BlockPosOp::from_assembled(&spd, p).unwrap()
    }

    #[test]
    fn hyperbolic_form_is_nondegenerate() {
        let h = HyperbolicSpace::new(3).unwrap();
        let form = SymplecticForm::new(h.form().gram().clone()).unwrap();
        assert_eq!(form.dim(), 6);
        assert!(HyperbolicSpace::new(0).is_err());
    }

    #[test]
    fn lagrangian_examples() {
        let form = HyperbolicSpace::new(1).unwrap().form();
        let graph = ComplexSubspace::from_basis(DMatrix::from_column_slice(
            2,
            1,
            &[c(1.0, 0.0), c(0.0, 1.0)],
        ))
        .unwrap();
        assert!(is_lagrangian(&graph, &form).unwrap());
        assert!(is_positive_lagrangian(&graph, &form).unwrap());

        let vertical = ComplexSubspace::from_basis(DMatrix::from_column_slice(
            2,
            1,
            &[c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap();
        assert!(is_lagrangian(&vertical, &form).unwrap());
        assert!(!is_positive_lagrangian(&vertical, &form).unwrap());

        let whole = ComplexSubspace::from_real_basis(&DMatrix::identity(2, 2)).unwrap();
        assert!(!is_lagrangian(&whole, &form).unwrap());
        assert!(matches!(
            is_positive_lagrangian(&whole, &form),
            Err(Error::NotLagrangian(_))
        ));
    }

    #[test]
    fn graph_of_i_a_positivity_sign() {
        let form = HyperbolicSpace::new(2).unwrap().form();
        let graph = |diag: [f64; 2]| {
            let mut b = DMatrix::<C64>::zeros(4, 2);
            b[(0, 0)] = c(1.0, 0.0);
            b[(1, 1)] = c(1.0, 0.0);
            b[(2, 0)] = c(0.0, diag[0]);
            b[(3, 1)] = c(0.0, diag[1]);
            ComplexSubspace::from_basis(b).unwrap()
        };
        assert!(is_positive_lagrangian(&graph([1.0, 2.0]), &form).unwrap());
        assert!(!is_positive_lagrangian(&graph([-1.0, -2.0]), &form).unwrap());
        assert!(!is_positive_lagrangian(&graph([1.0, -1.0]), &form).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let form = HyperbolicSpace::new(2).unwrap().form();
        let l = ComplexSubspace::from_real_basis(&DMatrix::identity(2, 1)).unwrap();
        assert!(matches!(
            is_lagrangian(&l, &form),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn graph_of_identity_op() {
        let g = graph_of_tilde(&BlockPosOp::identity(1, 1));
        let mut expected = DMatrix::<C64>::zeros(4, 2);
        expected[(0, 0)] = c(1.0, 0.0);
        expected[(1, 0)] = c(0.0, 1.0);
        expected[(2, 1)] = c(1.0, 0.0);
        expected[(3, 1)] = c(0.0, -1.0);
        let expected = ComplexSubspace::from_basis(expected).unwrap();
        assert!(g.subspace().approx_eq(&expected));
        assert!(g.is_positive_lagrangian().unwrap());
    }

    #[test]
    fn compose_with_identity_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let op = random_block_op(&mut rng, 2, 3);
        let g = graph_of_tilde(&op);
        let id_out = LinearRelation::graph_of_map(&DMatrix::identity(4, 4)).unwrap();
        let id_in = LinearRelation::graph_of_map(&DMatrix::identity(6, 6)).unwrap();
        assert!(compose_relations(&id_out, &g)
            .unwrap()
            .relation
            .approx_eq(&g));
        assert!(compose_relations(&g, &id_in)
            .unwrap()
            .relation
            .approx_eq(&g));
    }

    #[test]
    fn graphs_of_maps_compose_to_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let s = DMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
            let t = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
            let composed = compose_relations(
                &LinearRelation::graph_of_map(&s).unwrap(),
                &LinearRelation::graph_of_map(&t).unwrap(),
            )
            .unwrap();
            let oracle = LinearRelation::graph_of_map(&(&s * &t)).unwrap();
            assert!(composed.relation.approx_eq(&oracle));
        }
    }

    #[test]
    fn composition_drops_dimension_when_not_transversal() {
        // Q = {(0, w)} and P = {(w, 0)}: every w matches, image is zero
        let q = LinearRelation::new(
            1,
            1,
            ComplexSubspace::from_real_basis(&DMatrix::from_row_slice(
                4,
                2,
                &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            ))
            .unwrap(),
        )
        .unwrap();
        let p = LinearRelation::new(
            1,
            1,
            ComplexSubspace::from_real_basis(&DMatrix::from_row_slice(
                4,
                2,
                &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            ))
            .unwrap(),
        )
        .unwrap();
        let comp = compose_relations(&q, &p).unwrap();
        assert_eq!(comp.relation.subspace().dim(), 0);
        assert!(!comp.has_lagrangian_dim());
    }

    #[test]
    fn composition_middle_mismatch() {
        let a = graph_of_tilde(&BlockPosOp::identity(1, 2));
        let b = graph_of_tilde(&BlockPosOp::identity(1, 1));
        assert!(matches!(
            compose_relations(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn positive_lagrangians_compose_to_positive_lagrangians() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let (n1, n2, n3) = (
                rng.random_range(1..=2),
                rng.random_range(1..=2),
                rng.random_range(1..=2),
            );
            let a1 = random_block_op(&mut rng, n2, n1);
            let a2 = random_block_op(&mut rng, n3, n2);
            let comp = compose_relations(&graph_of_tilde(&a2), &graph_of_tilde(&a1)).unwrap();
            assert!(comp.has_lagrangian_dim());
            assert!(comp.relation.is_positive_lagrangian().unwrap());
        }
    }

    #[test]
    fn graph_composition_matches_schur_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let (n1, n2, n3) = (
                rng.random_range(1..=3),
                rng.random_range(1..=3),
                rng.random_range(1..=3),
            );
            let a1 = random_block_op(&mut rng, n2, n1);
            let a2 = random_block_op(&mut rng, n3, n2);
            let comp = compose_relations(&graph_of_tilde(&a2), &graph_of_tilde(&a1)).unwrap();
            let oracle = graph_of_tilde(&schur_compose(&a2, &a1).unwrap());
            let d = comp
                .relation
                .subspace()
                .distance(oracle.subspace())
                .unwrap();
            assert!(d < SUBSPACE_TOL, "projector distance {d}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn graph_of_tilde_is_positive_lagrangian(seed in any::<u64>(), p in 1usize..=4, q in 1usize..=4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = graph_of_tilde(&random_block_op(&mut rng, p, q));
                prop_assert!(g.is_positive_lagrangian().unwrap());
            }

            #[test]
            fn composition_of_graphs_stays_positive(
                seed in any::<u64>(),
                dims in (1usize..=2, 1usize..=2, 1usize..=2),
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a1 = random_block_op(&mut rng, dims.1, dims.0);
                let a2 = random_block_op(&mut rng, dims.2, dims.1);
                let comp = compose_relations(&graph_of_tilde(&a2), &graph_of_tilde(&a1)).unwrap();
                prop_assert!(comp.has_lagrangian_dim());
                prop_assert!(comp.relation.is_positive_lagrangian().unwrap());
                let oracle = graph_of_tilde(&schur_compose(&a2, &a1).unwrap());
                prop_assert!(comp.relation.approx_eq(&oracle));
            }
        }
    }
}
