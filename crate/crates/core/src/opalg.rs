//! Dense symmetric operator algebra: block operators on `H_out ⊕ H_in`,
//! their Schur-complement composition, Cayley transforms and determinants.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance for the symmetry check on construction.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue relative to the largest one.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Contractions with norm within this distance of 1 are rejected.
pub const CONTRACTION_MARGIN: f64 = 1e-14;
/// Largest admissible condition number of the middle block `A + M`.
pub const MAX_CONDITION: f64 = 1e12;

/// Real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry to [`SYMMETRY_TOL`] and stores the exactly
    /// symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = (&m - m.transpose()).amax();
        if !asym.is_finite() || asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self(symmetrize(m)))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(diag),
        ))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_positive_definite(&self) -> bool {
        check_positive(self).is_ok()
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn check_positive(m: &SymMatrix) -> Result<()> {
    let ev = m.eigenvalues();
    let min = ev[0];
    let max = *ev.last().unwrap();
    if max.is_nan() || min.is_nan() || max <= 0.0 || min <= POSITIVITY_TOL * max {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Positive definite symmetric operator on `H_out ⊕ H_in`, stored as the
/// blocks of `[A B; Bᵀ D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPosOp {
    a: SymMatrix,
    b: DMatrix<f64>,
    d: SymMatrix,
}

impl BlockPosOp {
    pub fn new(a: SymMatrix, b: DMatrix<f64>, d: SymMatrix) -> Result<Self> {
        if b.nrows() != a.dim() || b.ncols() != d.dim() {
            return Err(Error::DimensionMismatch(format!(
                "off-diagonal block is {}x{}, expected {}x{}",
                b.nrows(),
                b.ncols(),
                a.dim(),
                d.dim()
            )));
        }
        let op = Self { a, b, d };
        check_positive(&op.assembled())?;
        Ok(op)
    }

    /// Splits an assembled `(p+q)×(p+q)` matrix after the first `dim_out` rows.
    pub fn from_assembled(m: &SymMatrix, dim_out: usize) -> Result<Self> {
        let n = m.dim();
        if dim_out == 0 || dim_out >= n {
            return Err(Error::DimensionMismatch(format!(
                "split {dim_out} is not inside a {n}-dimensional operator"
            )));
        }
        let q = n - dim_out;
        let mm = m.matrix();
        let a = SymMatrix(mm.view((0, 0), (dim_out, dim_out)).into_owned());
        let b = mm.view((0, dim_out), (dim_out, q)).into_owned();
        let d = SymMatrix(mm.view((dim_out, dim_out), (q, q)).into_owned());
        Self::new(a, b, d)
    }

    pub fn identity(dim_out: usize, dim_in: usize) -> Self {
        Self {
            a: SymMatrix::identity(dim_out),
            b: DMatrix::zeros(dim_out, dim_in),
            d: SymMatrix::identity(dim_in),
        }
    }

    pub fn dim_out(&self) -> usize {
        self.a.dim()
    }

    pub fn dim_in(&self) -> usize {
        self.d.dim()
    }

    /// Outgoing diagonal block `A`.
    pub fn out_block(&self) -> &SymMatrix {
        &self.a
    }

    /// Off-diagonal block `B : H_in → H_out`.
    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Incoming diagonal block `D`.
    pub fn in_block(&self) -> &SymMatrix {
        &self.d
    }

    pub fn assembled(&self) -> SymMatrix {
        let (p, q) = (self.dim_out(), self.dim_in());
        let mut m = DMatrix::zeros(p + q, p + q);
        m.view_mut((0, 0), (p, p)).copy_from(self.a.matrix());
        m.view_mut((0, p), (p, q)).copy_from(&self.b);
        m.view_mut((p, 0), (q, p)).copy_from(&self.b.transpose());
        m.view_mut((p, p), (q, q)).copy_from(self.d.matrix());
        SymMatrix(m)
    }
}

/// Symmetric contraction `C` with spectral norm strictly below one.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyForm(SymMatrix);

impl CayleyForm {
    pub fn new(m: SymMatrix) -> Result<Self> {
        let norm = m.norm();
        if norm.is_nan() || norm >= 1.0 - CONTRACTION_MARGIN {
            return Err(Error::NotContraction { norm });
        }
        Ok(Self(m))
    }

    pub fn zero(n: usize) -> Self {
        Self(SymMatrix(DMatrix::zeros(n, n)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.0.matrix()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Composition of `a2 : H3⊕H2` after `a1 : H2⊕H1`:
///
/// `[K − L(A+M)⁻¹Lᵀ, −L(A+M)⁻¹B; −Bᵀ(A+M)⁻¹Lᵀ, D − Bᵀ(A+M)⁻¹B]`
///
/// with `a1 = [A B; Bᵀ D]` and `a2 = [K L; Lᵀ M]`.
pub fn schur_compose(a2: &BlockPosOp, a1: &BlockPosOp) -> Result<BlockPosOp> {
    if a1.dim_out() != a2.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: first factor outputs {} dims, second expects {}",
            a1.dim_out(),
            a2.dim_in()
        )));
    }
    let middle = a1.a.matrix() + a2.d.matrix();
    let middle_sym = SymMatrix(symmetrize(middle));
    let ev = middle_sym.eigenvalues();
    let (lo, hi) = (ev[0], *ev.last().unwrap());
    if lo.is_nan() || lo <= 0.0 || hi / lo > MAX_CONDITION {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(Error::IllConditioned { condition });
    }
    let chol = middle_sym
        .0
        .clone()
        .cholesky()
        .ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
        })?;

    let l = &a2.b;
    let b = &a1.b;
    let solve_lt = chol.solve(&l.transpose());
    let solve_b = chol.solve(b);

    let new_a = a2.a.matrix() - l * &solve_lt;
    let new_b = -(l * &solve_b);
    let new_d = a1.d.matrix() - b.transpose() * &solve_b;

    BlockPosOp::new(
        SymMatrix(symmetrize(new_a)),
        new_b,
        SymMatrix(symmetrize(new_d)),
    )
}

/// Cayley transform `C(P) = (I − P)(I + P)⁻¹` of a positive definite matrix.
pub fn cayley(p: &SymMatrix) -> Result<CayleyForm> {
    check_positive(p)?;
    let n = p.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let plus = SymMatrix(id.clone() + p.matrix());
    let chol = plus
        .0
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: f64::NAN,
        })?;
    let c = chol.solve(&(id - p.matrix()));
    CayleyForm::new(SymMatrix(symmetrize(c)))
}

/// Inverse Cayley transform `P = (I − C)(I + C)⁻¹`.
pub fn cayley_inverse(c: &CayleyForm) -> Result<SymMatrix> {
    let norm = c.norm();
    if norm.is_nan() || norm >= 1.0 - CONTRACTION_MARGIN {
        return Err(Error::NotContraction { norm });
    }
    let n = c.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let chol = (id.clone() + c.matrix())
        .cholesky()
        .ok_or(Error::NotContraction { norm })?;
    let p = SymMatrix(symmetrize(chol.solve(&(id - c.matrix()))));
    check_positive(&p)?;
    Ok(p)
}

/// `ln det P` for positive definite `P`, via Cholesky.
pub fn logdet_pos(p: &SymMatrix) -> Result<f64> {
    let chol =
        p.0.clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite {
                min_eigenvalue: p.eigenvalues()[0],
            })?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..p.dim()).map(|i| l[(i, i)].ln()).sum::<f64>())
}
