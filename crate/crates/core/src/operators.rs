//! Dense Hermitian operators, density matrices and the standard
//! information-theoretic functionals on them.
//!
//! Spectra are computed once at construction and cached; every value is
//! immutable afterwards. Multipartite index order follows the Kronecker
//! product: the first subsystem is the most significant digit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Asymmetry tolerated (and removed by symmetrisation) at construction.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Allowed deviation of a state's trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues down to `-NEGATIVE_TOL` are clipped to zero.
pub const NEGATIVE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::Empty);
    }
    Ok(m.nrows())
}

fn symmetrise(m: &CMatrix) -> Result<CMatrix> {
    let adj = m.adjoint();
    let asym = (m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(asym));
    }
    Ok((m + adj).scale(0.5))
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V diag(values) V^dagger`.
fn from_spectral(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &w) in values.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let col = vectors.column(k);
        for j in 0..n {
            let cj = col[j].conj() * w;
            for i in 0..n {
                out[(i, j)] += col[i] * cj;
            }
        }
    }
    out
}

/// Kronecker product of two spectral decompositions, re-sorted by `cmp`.
fn kron_spectral(
    a: (&[f64], &CMatrix),
    b: (&[f64], &CMatrix),
    combine: impl Fn(f64, f64) -> f64,
    descending: bool,
) -> (Vec<f64>, CMatrix) {
    let (va, ua) = a;
    let (vb, ub) = b;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(va.len() * vb.len());
    for (i, &x) in va.iter().enumerate() {
        for (j, &y) in vb.iter().enumerate() {
            pairs.push((combine(x, y), i, j));
        }
    }
    if descending {
        pairs.sort_by(|p, q| q.0.total_cmp(&p.0));
    } else {
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    }
    let n = va.len() * vb.len();
    let db = vb.len();
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &(_, i, j)) in pairs.iter().enumerate() {
        for r1 in 0..va.len() {
            let x = ua[(r1, i)];
            if x == ZERO {
                continue;
            }
            for r2 in 0..db {
                vecs[(r1 * db + r2, col)] = x * ub[(r2, j)];
            }
        }
    }
    (pairs.iter().map(|p| p.0).collect(), vecs)
}

/// A Hermitian matrix together with its ascending eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let matrix = symmetrise(&matrix)?;
        let (eigenvalues, eigenvectors) = eigh(&matrix);
        Ok(HermitianOperator {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(bad) = diag.iter().find(|x| !x.is_finite()) {
            return Err(Error::OutOfRange {
                quantity: "diagonal entry",
                value: *bad,
                lo: f64::MIN,
                hi: f64::MAX,
            });
        }
        let n = diag.len();
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        });
        // Stable ordering for degenerate entries keeps the basis canonical.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
        let eigenvalues = order.iter().map(|&i| diag[i]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| {
            if r == order[c] {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        });
        Ok(HermitianOperator {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim]).expect("identity is valid")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// `max |V diag(lambda) V^dagger - A|`.
    pub fn reconstruction_error(&self) -> f64 {
        let rebuilt = from_spectral(&self.eigenvalues, &self.eigenvectors);
        (rebuilt - &self.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `A (x) 1 + 1 (x) B`, the Hamiltonian of two non-interacting parts.
    pub fn kron_sum(&self, other: &HermitianOperator) -> HermitianOperator {
        let matrix = self.matrix.kronecker(&CMatrix::identity(other.dim(), other.dim()))
            + CMatrix::identity(self.dim(), self.dim()).kronecker(&other.matrix);
        let (eigenvalues, eigenvectors) = kron_spectral(
            (&self.eigenvalues, &self.eigenvectors),
            (&other.eigenvalues, &other.eigenvectors),
            |x, y| x + y,
            false,
        );
        HermitianOperator {
            matrix,
            eigenvalues,
            eigenvectors,
        }
    }

    /// `A (x) B`.
    pub fn kron(&self, other: &HermitianOperator) -> HermitianOperator {
        let (eigenvalues, eigenvectors) = kron_spectral(
            (&self.eigenvalues, &self.eigenvectors),
            (&other.eigenvalues, &other.eigenvectors),
            |x, y| x * y,
            false,
        );
        HermitianOperator {
            matrix: self.matrix.kronecker(&other.matrix),
            eigenvalues,
            eigenvectors,
        }
    }

    /// `sum_k c_k A_k`.
    pub fn linear_combination(ops: &[HermitianOperator], coeffs: &[f64]) -> Result<Self> {
        let first = ops.first().ok_or(Error::Empty)?;
        if ops.len() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: ops.len(),
                found: coeffs.len(),
            });
        }
        let d = first.dim();
        let mut m = CMatrix::zeros(d, d);
        for (op, &c) in ops.iter().zip(coeffs) {
            if op.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: op.dim(),
                });
            }
            m += op.matrix.scale(c);
        }
        HermitianOperator::new(m)
    }

    /// `max |[A, B]|` entrywise.
    pub fn commutator_norm(&self, other: &HermitianOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let c = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(c.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// The unitary `exp(-i t A)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let n = self.dim();
        let phases: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -t * l))
            .collect();
        let v = &self.eigenvectors;
        let mut out = CMatrix::zeros(n, n);
        for (k, ph) in phases.iter().enumerate() {
            for j in 0..n {
                let cj = v[(j, k)].conj() * ph;
                for i in 0..n {
                    out[(i, j)] += v[(i, k)] * cj;
                }
            }
        }
        out
    }
}

/// A validated quantum state with cached spectrum (descending, clipped at
/// zero and renormalised).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    spectrum: Vec<f64>,
    eigenvectors: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = check_square(&matrix)?;
        let matrix = symmetrise(&matrix)?;
        let tr: f64 = (0..n).map(|i| matrix[(i, i)].re).sum();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr));
        }
        let (values, vectors) = eigh(&matrix);
        let lowest = values[0];
        if lowest < -NEGATIVE_TOL {
            return Err(Error::NegativeEigenvalue(lowest));
        }
        Ok(Self::from_parts(matrix, values, vectors))
    }

    /// Builds the state from its eigen-data (any order). Negative rounding
    /// residue is clipped; the spectrum is renormalised.
    fn from_parts(matrix: CMatrix, values: Vec<f64>, vectors: CMatrix) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let mut spectrum: Vec<f64> = order.iter().map(|&i| values[i].max(0.0)).collect();
        let total: f64 = spectrum.iter().sum();
        for p in &mut spectrum {
            *p /= total;
        }
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
        DensityMatrix {
            matrix,
            spectrum,
            eigenvectors,
        }
    }

    /// `sum_k p_k |v_k><v_k|` for orthonormal columns `v_k`. The caller
    /// guarantees that `probs` is a probability vector.
    pub(crate) fn from_eigen(probs: Vec<f64>, vectors: CMatrix) -> Self {
        let matrix = from_spectral(&probs, &vectors);
        Self::from_parts(matrix, probs, vectors)
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        let n = probs.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(probs[i], 0.0)
            } else {
                ZERO
            }
        });
        Self::new(m)
    }

    /// `|psi><psi|`, normalising `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm == 0.0 {
            return Err(Error::Empty);
        }
        let n = psi.len();
        let v = CMatrix::from_fn(n, 1, |i, _| psi[i] / norm);
        // Complete to an orthonormal basis so the spectral cache is full rank.
        let projector = &v * v.adjoint();
        let (_, basis) = eigh(&projector);
        let mut vectors = basis;
        // eigh is ascending; the eigenvalue-one vector is last.
        vectors.set_column(n - 1, &v.column(0));
        let mut probs = vec![0.0; n];
        probs[n - 1] = 1.0;
        Ok(Self::from_parts(projector, probs, vectors))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_eigen(vec![1.0 / dim as f64; dim], CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in descending order, summing to one.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn entropy(&self) -> f64 {
        shannon(&self.spectrum)
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.spectrum.iter().filter(|&&p| p > tol).count()
    }

    /// `U rho U^dagger`; the spectrum is carried over exactly.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        let matrix = u * &self.matrix * u.adjoint();
        let vectors = u * &self.eigenvectors;
        Ok(DensityMatrix {
            matrix,
            spectrum: self.spectrum.clone(),
            eigenvectors: vectors,
        })
    }

    /// Entrywise maximum distance between two states of equal dimension.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Diagonal of the state in the given orthonormal basis (columns).
    pub fn populations_in(&self, basis: &CMatrix) -> Vec<f64> {
        let rotated = basis.adjoint() * &self.matrix * basis;
        (0..self.dim()).map(|i| rotated[(i, i)].re).collect()
    }
}

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn shannon(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Ordered local dimensions of a multipartite system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemSplit {
    dims: Vec<usize>,
}

impl SubsystemSplit {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            let dim = dims.iter().product();
            return Err(Error::InvalidSplit { dims, dim });
        }
        Ok(SubsystemSplit { dims })
    }

    pub fn bipartite(a: usize, b: usize) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parts(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::InvalidSplit {
                dims: self.dims.clone(),
                dim,
            });
        }
        Ok(())
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }
}

pub fn entropy(rho: &DensityMatrix) -> f64 {
    rho.entropy()
}

/// `Tr(A rho)`.
pub fn expectation(op: &HermitianOperator, rho: &DensityMatrix) -> Result<f64> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: rho.dim(),
        });
    }
    let a = op.matrix();
    let r = rho.matrix();
    let n = op.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * r[(j, i)];
        }
    }
    debug_assert!(acc.im.abs() <= 1e-10 * (1.0 + a.iter().map(|z| z.norm()).fold(0.0, f64::max)));
    Ok(acc.re)
}

/// `rho (x) sigma`, with the spectrum assembled from the factors.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    let (values, vectors) = kron_spectral(
        (&a.spectrum, &a.eigenvectors),
        (&b.spectrum, &b.eigenvectors),
        |x, y| x * y,
        true,
    );
    let matrix = a.matrix.kronecker(&b.matrix);
    DensityMatrix::from_parts(matrix, values, vectors)
}

/// Tensor product of a list of states, left to right.
pub fn tensor_all(states: &[DensityMatrix]) -> Result<DensityMatrix> {
    let (first, rest) = states.split_first().ok_or(Error::Empty)?;
    Ok(rest.iter().fold(first.clone(), |acc, s| tensor(&acc, s)))
}

/// Reduced state on the subsystems listed in `keep` (any order; the output
/// keeps the original subsystem order).
pub fn partial_trace(
    rho: &DensityMatrix,
    split: &SubsystemSplit,
    keep: &[usize],
) -> Result<DensityMatrix> {
    split.check(rho.dim())?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= split.parts()) {
        return Err(Error::InvalidSplit {
            dims: split.dims.clone(),
            dim: rho.dim(),
        });
    }
    let kept_dims: Vec<usize> = keep.iter().map(|&k| split.dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let n = rho.dim();

    // (kept index, traced index) for every joint basis vector
    let labels: Vec<(usize, usize)> = (0..n)
        .map(|idx| {
            let digits = split.digits(idx);
            let (mut kept, mut traced) = (0usize, 0usize);
            for (k, (&dgt, &d)) in digits.iter().zip(&split.dims).enumerate() {
                if keep.binary_search(&k).is_ok() {
                    kept = kept * d + dgt;
                } else {
                    traced = traced * d + dgt;
                }
            }
            (kept, traced)
        })
        .collect();

    let m = rho.matrix();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for r in 0..n {
        let (kr, tr) = labels[r];
        for c in 0..n {
            let (kc, tc) = labels[c];
            if tr == tc {
                out[(kr, kc)] += m[(r, c)];
            }
        }
    }
    let out = (&out + out.adjoint()).scale(0.5);
    let (values, vectors) = eigh(&out);
    let lowest = values[0];
    if lowest < -1e-9 {
        return Err(Error::NegativeEigenvalue(lowest));
    }
    Ok(DensityMatrix::from_parts(out, values, vectors))
}

/// `I(A:B) = S(A) + S(B) - S(AB)` for a bipartite split.
pub fn mutual_information(rho: &DensityMatrix, split: &SubsystemSplit) -> Result<f64> {
    if split.parts() != 2 {
        return Err(Error::InvalidSplit {
            dims: split.dims.clone(),
            dim: rho.dim(),
        });
    }
    let a = partial_trace(rho, split, &[0])?;
    let b = partial_trace(rho, split, &[1])?;
    Ok(a.entropy() + b.entropy() - rho.entropy())
}

/// `D(rho || sigma) = Tr rho (ln rho - ln sigma)`, evaluated in the
/// eigenbasis of `sigma`. Fails when `rho` has weight outside the support
/// of `sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: rho.dim(),
        });
    }
    let weights = rho.populations_in(sigma.eigenvectors());
    let mut cross = 0.0;
    for (&w, &mu) in weights.iter().zip(sigma.spectrum()) {
        if mu > 0.0 {
            cross += w * mu.ln();
        } else if w > 1e-12 {
            return Err(Error::Unsupported(
                "support of rho is not contained in the support of sigma".into(),
            ));
        }
    }
    Ok(-rho.entropy() - cross)
}
