//! Hermite polynomials, Gaussian quadrature and the Bargmann transform.
//!
//! Used only to certify the conventions of [`crate::fock`]: the map `Q`
//! sends `x^α` to `∏ h_{αᵢ}`, and `S = Q⁻¹` sends `h_α` back to `z^α`.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fock::FockVector;

type C64 = Complex<f64>;

pub const DEFAULT_QUADRATURE_ORDER: usize = 40;

/// Real polynomial in one variable, coefficients by ascending power.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial1D(Vec<f64>);

impl Polynomial1D {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: C64) -> C64 {
        self.0
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// Probabilists' Hermite polynomial `hₙ`, from `h_{n+1} = x hₙ − n h_{n−1}`.
pub fn hermite(n: usize) -> Polynomial1D {
    let mut prev = vec![1.0];
    if n == 0 {
        return Polynomial1D::new(prev);
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    Polynomial1D::new(cur)
}

/// Gauss–Hermite rule for the standard Gaussian measure on ℝ.
#[derive(Debug, Clone)]
pub struct GaussQuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussQuadRule {
    /// Golub–Welsch: nodes are eigenvalues of the Jacobi matrix with
    /// off-diagonal `√k`, weights are squared first eigenvector components.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "quadrature order must be positive".into(),
            ));
        }
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut roots: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        roots.sort_by(f64::total_cmp);
        let n = roots.len();
        // enforce the symmetry of the rule, then polish each root by Newton steps
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| 0.5 * (roots[i] - roots[n - 1 - i]))
            .collect();
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (p, dp) = orthonormal_hermite(order, *x);
                if dp != 0.0 {
                    *x -= p[order] / dp;
                }
            }
        }
        // Christoffel weights 1 / Σ p_k(x)², accurate also in the tails
        let weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                1.0 / orthonormal_hermite(order, x).0[..order]
                    .iter()
                    .map(|p| p * p)
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.order() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(f64) -> C64) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }

    /// `E[x^k]` by quadrature.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k as usize > self.exact_degree() {
            return Err(Error::QuadratureOrder {
                order: self.order(),
                degree: k as usize,
            });
        }
        Ok(self.integrate(|x| x.powi(k as i32)))
    }
}

/// Values `p_0..=p_n` of `h_k / √k!` at `x`, and the derivative of `p_n`.
fn orthonormal_hermite(n: usize, x: f64) -> (Vec<f64>, f64) {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
    }
    for k in 1..n {
        p[k + 1] = (x * p[k] - (k as f64).sqrt() * p[k - 1]) / ((k + 1) as f64).sqrt();
    }
    let dp = if n >= 1 {
        (n as f64).sqrt() * p[n - 1]
    } else {
        0.0
    };
    (p, dp)
}

/// Real polynomial in several variables, `x^α ↦ coefficient`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: f64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    pub fn from_terms(
        nvars: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, f64)>,
    ) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch(format!(
                    "monomial with {} exponents in a {nvars}-variable polynomial",
                    e.len()
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.terms
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: f64) {
        debug_assert_eq!(exponents.len(), self.nvars);
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents).or_insert(0.0);
        *entry += c;
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.iter().zip(b).map(|(x, y)| x + y).collect(), ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| xi.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn eval_complex(&self, z: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(z)
                    .map(|(&k, &zi)| zi.powi(k as i32))
                    .product::<C64>()
                    * *c
            })
            .sum()
    }
}

/// `Q`: replaces each `x^α` by `∏ h_{αᵢ}(xᵢ)`.
pub fn q_map(v: &FockVector) -> MultiPoly {
    hermite_expand(
        v.base_dim(),
        v.coefficients().iter().map(|(a, &c)| (a.exponents(), c)),
    )
}

fn hermite_expand<'a>(n: usize, terms: impl Iterator<Item = (&'a [u32], f64)>) -> MultiPoly {
    let mut out = MultiPoly::zero(n);
    for (alpha, c) in terms {
        let mut term = MultiPoly::constant(n, c);
        for (i, &k) in alpha.iter().enumerate() {
            let mut factor = MultiPoly::zero(n);
            for (p, &hc) in hermite(k as usize).coefficients().iter().enumerate() {
                let mut e = vec![0u32; n];
                e[i] = p as u32;
                factor.add_term(e, hc);
            }
            term = term.mul(&factor);
        }
        for (e, c) in term.terms {
            out.add_term(e, c);
        }
    }
    out
}

/// `∫ exp(−½z² + z u) u^k dμ(u)` for `k = 0..=max_power`.
fn bargmann_monomials(z: C64, max_power: usize, rule: &GaussQuadRule) -> Vec<C64> {
    let pre = (z * z * -0.5).exp();
    (0..=max_power)
        .map(|k| pre * rule.integrate_complex(|u| (z * u).exp() * u.powi(k as i32)))
        .collect()
}

/// `Sf(z) = ∫ exp(−½⟨z,z⟩ + ⟨z,u⟩) f(u) dμₙ(u)`, evaluated by tensor quadrature
/// with the kernel factored over coordinates.
pub fn bargmann_transform(f: &MultiPoly, z: &[C64], rule: &GaussQuadRule) -> Result<C64> {
    if z.len() != f.nvars() {
        return Err(Error::DimensionMismatch(format!(
            "point in ℂ^{} for a polynomial in {} variables",
            z.len(),
            f.nvars()
        )));
    }
    let degree = f.degree();
    if rule.order() < degree + 2 {
        return Err(Error::QuadratureOrder {
            order: rule.order(),
            degree,
        });
    }
    let tables: Vec<Vec<C64>> = z
        .iter()
        .map(|&zi| bargmann_monomials(zi, degree, rule))
        .collect();
    Ok(f.terms()
        .iter()
        .map(|(e, &c)| {
            e.iter()
                .enumerate()
                .map(|(i, &k)| tables[i][k as usize])
                .product::<C64>()
                * c
        })
        .sum())
}

/// Both sides of the kernel identity `(S ∘ L_k ∘ Q) F (w) = ∫ K(w, z̄) F(z) dν(z)`,
/// with `K = S k`, at each test point `w`.
#[derive(Debug, Clone)]
pub struct KernelCheck {
    pub direct: Vec<C64>,
    pub contracted: Vec<C64>,
}

impl KernelCheck {
    pub fn residual(&self) -> f64 {
        self.direct
            .iter()
            .zip(&self.contracted)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `k` is a polynomial in `(y, x) ∈ ℝ^m × ℝ^n` with `y` first, `f` a holomorphic
/// polynomial on `ℂⁿ`, and each `w ∈ ℂ^m`.
pub fn kernel_compose_check(
    k: &MultiPoly,
    f: &MultiPoly,
    points: &[Vec<C64>],
    rule: &GaussQuadRule,
) -> Result<KernelCheck> {
    let n = f.nvars();
    if k.nvars() < n {
        return Err(Error::DimensionMismatch(
            "kernel has fewer variables than F".into(),
        ));
    }
    let m = k.nvars() - n;
    if let Some(w) = points.iter().find(|w| w.len() != m) {
        return Err(Error::DimensionMismatch(format!(
            "test point in ℂ^{} for m = {m}",
            w.len()
        )));
    }
    let degree = k.degree() + f.degree();
    if rule.order() < degree + 2 {
        return Err(Error::QuadratureOrder {
            order: rule.order(),
            degree,
        });
    }

    // Q F in monomials: z^α ↦ h_α
    let qf = hermite_expand(n, f.terms().iter().map(|(e, &c)| (e.as_slice(), c)));

    // L_k Q F as a polynomial in y, integrating x by quadrature moments
    let mut lk = MultiPoly::zero(m);
    for (e, &c) in k.terms() {
        let (ey, ex) = e.split_at(m);
        let mut integral = 0.0;
        for (g, &cg) in qf.terms() {
            let mut prod = cg;
            for i in 0..n {
                prod *= rule.moment(ex[i] + g[i])?;
            }
            integral += prod;
        }
        lk.add_term(ey.to_vec(), c * integral);
    }

    let direct = points
        .iter()
        .map(|w| bargmann_transform(&lk, w, rule))
        .collect::<Result<Vec<_>>>()?;

    // z = (a + i b)/√2 with a, b standard Gaussian realizes ν_n
    let outer = GaussQuadRule::new(degree / 2 + 2)?;
    let mut contracted = Vec::with_capacity(points.len());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for w in points {
        let mut acc = C64::new(0.0, 0.0);
        let total = outer.order().pow(2 * n as u32);
        for flat in 0..total {
            let mut idx = flat;
            let mut weight = 1.0;
            let mut z = Vec::with_capacity(n);
            for _ in 0..n {
                let (ia, ib) = (idx % outer.order(), (idx / outer.order()) % outer.order());
                idx /= outer.order() * outer.order();
                weight *= outer.weights()[ia] * outer.weights()[ib];
                z.push(C64::new(outer.nodes()[ia] * s, outer.nodes()[ib] * s));
            }
            let mut point = w.clone();
            point.extend(z.iter().map(|zi| zi.conj()));
            let kernel = bargmann_transform(k, &point, rule)?;
            acc += kernel * f.eval_complex(&z) * weight;
        }
        contracted.push(acc);
    }
    Ok(KernelCheck { direct, contracted })
}
