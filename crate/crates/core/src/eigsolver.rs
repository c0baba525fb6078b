//! Generalized eigenproblems `A w = λ M w` with a diagonal, positive `M`.
//!
//! Symmetric systems are scaled to `D^{-1/2} A D^{-1/2}` and diagonalized by
//! cyclic Jacobi rotations. The weighted Chebyshev Galerkin matrices are not
//! symmetric, so [`solve_general`] goes through a dense non-symmetric
//! eigendecomposition instead and keeps only real spectra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problem::BasisLabel;
use crate::quadrature::Interval;

/// Relative Frobenius asymmetry accepted by [`solve`].
pub const SYMMETRY_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Imaginary parts below this fraction of `‖A‖` count as rounding noise.
const COMPLEX_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: DMatrix<f64>,
    pub m_diag: Vec<f64>,
    pub basis_labels: Vec<BasisLabel>,
    pub domain: Interval,
    /// Eigenvalues with `|λ| <= zero_tol` are reported as exactly zero.
    pub zero_tol: f64,
}

impl AssembledSystem {
    pub fn new(a: DMatrix<f64>, m_diag: Vec<f64>, basis_labels: Vec<BasisLabel>, domain: Interval) -> Self {
        Self { a, m_diag, basis_labels, domain, zero_tol: 0.0 }
    }

    pub fn with_zero_tolerance(mut self, tol: f64) -> Self {
        self.zero_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.m_diag.len()
    }

    /// `‖A - Aᵀ‖_F / ‖A‖_F`, zero for the zero matrix.
    pub fn asymmetry(&self) -> f64 {
        let norm = self.a.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.a - self.a.transpose()).norm() / norm
    }

    /// `D^{-1/2} A D^{-1/2}`.
    pub fn scaled(&self) -> DMatrix<f64> {
        let s: Vec<f64> = self.m_diag.iter().map(|d| d.sqrt().recip()).collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.a[(i, j)] * s[i] * s[j])
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.a.nrows() != n || self.a.ncols() != n {
            return Err(Error::MalformedSystem(format!(
                "A is {}x{} but M has {} diagonal entries",
                self.a.nrows(),
                self.a.ncols(),
                n
            )));
        }
        if self.basis_labels.len() != n {
            return Err(Error::MalformedSystem(format!("{} basis labels for a system of size {n}", self.basis_labels.len())));
        }
        if let Some((i, d)) = self.m_diag.iter().enumerate().find(|(_, d)| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::MalformedSystem(format!("M[{i}] = {d} is not strictly positive")));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedSystem("A has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Sorted eigenpairs of an [`AssembledSystem`].
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Coefficient vectors in the basis `basis_labels`, normalized to `wᵀ M w = 1`.
    pub vectors: Vec<Vec<f64>>,
    pub basis_labels: Vec<BasisLabel>,
    pub m_diag: Vec<f64>,
    pub domain: Interval,
    /// True when the vectors are mutually M-orthogonal (symmetric systems).
    pub orthonormal: bool,
}

/// Borrowed handle to the `k`-th eigenfunction.
#[derive(Debug, Clone, Copy)]
pub struct Eigenfunction<'a> {
    decomp: &'a EigenDecomposition,
    k: usize,
}

impl Eigenfunction<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let d = self.decomp;
        d.vectors[self.k]
            .iter()
            .zip(&d.basis_labels)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, l)| c * l.eval(x, d.domain))
            .sum()
    }

    pub fn eigenvalue(&self) -> f64 {
        self.decomp.values[self.k]
    }

    pub fn domain(&self) -> Interval {
        self.decomp.domain
    }
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eigenfunction(&self, k: usize) -> Result<Eigenfunction<'_>> {
        if k >= self.len() {
            return Err(Error::InvalidArgument(format!("eigenfunction index {k} out of range 0..{}", self.len())));
        }
        Ok(Eigenfunction { decomp: self, k })
    }

    pub fn evaluate(&self, k: usize, x: f64) -> Result<f64> {
        Ok(self.eigenfunction(k)?.eval(x))
    }

    /// Matrix whose columns are the coefficient vectors.
    pub fn vector_matrix(&self) -> DMatrix<f64> {
        let n = self.basis_labels.len();
        DMatrix::from_fn(n, self.len(), |i, k| self.vectors[k][i])
    }
}

/// Symmetric solve. Vectors come back M-orthonormal.
pub fn solve(system: &AssembledSystem) -> Result<EigenDecomposition> {
    system.validate()?;
    let asym = system.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::MalformedSystem(format!(
            "A is not symmetric: relative asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:e}"
        )));
    }
    let mut b = system.scaled();
    let bt = b.transpose();
    b = (b + bt) * 0.5;
    let (values, v) = jacobi(b);
    let vectors = (0..values.len()).map(|k| unscale(v.column(k).iter().copied(), &system.m_diag)).collect();
    Ok(finalize(system, values, vectors, true))
}

/// Solve for systems whose `A` is not symmetric. All eigenvalues must be real.
pub fn solve_general(system: &AssembledSystem) -> Result<EigenDecomposition> {
    system.validate()?;
    let n = system.dim();
    if n == 0 {
        return Ok(finalize(system, vec![], vec![], false));
    }
    let c = system.scaled();
    let scale = c.norm().max(f64::MIN_POSITIVE);
    let evd = faer::Mat::<f64>::from_fn(n, n, |i, j| c[(i, j)])
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigen decomposition did not converge: {e:?}")))?;
    let (s, u) = (evd.S(), evd.U());

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = s[k];
        if lambda.im.abs() > COMPLEX_TOL * scale {
            return Err(Error::Numerical(format!(
                "complex eigenvalue pair {:.6e} ± {:.3e}i; the system has no real spectrum",
                lambda.re,
                lambda.im.abs()
            )));
        }
        // rotate the complex vector onto the real axis by its largest entry
        let col = u.col(k);
        let lead = (0..n).fold(0, |b, i| if col[i].norm() > col[b].norm() { i } else { b });
        let phase = col[lead].conj() / col[lead].norm();
        values.push(lambda.re);
        vectors.push(unscale((0..n).map(|i| (col[i] * phase).re), &system.m_diag));
    }
    Ok(finalize(system, values, vectors, false))
}

fn unscale(v: impl Iterator<Item = f64>, m_diag: &[f64]) -> Vec<f64> {
    v.zip(m_diag).map(|(x, d)| x / d.sqrt()).collect()
}

/// Normalize, fix signs, clamp the zero mode and sort ascending.
fn finalize(system: &AssembledSystem, values: Vec<f64>, vectors: Vec<Vec<f64>>, orthonormal: bool) -> EigenDecomposition {
    let mut pairs: Vec<(usize, f64, Vec<f64>)> = values
        .into_iter()
        .zip(vectors)
        .enumerate()
        .map(|(i, (mut lambda, mut w))| {
            let norm = w.iter().zip(&system.m_diag).map(|(x, d)| d * x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                w.iter_mut().for_each(|x| *x /= norm);
            }
            let mut lead = 0;
            for (j, x) in w.iter().enumerate() {
                if x.abs() > w[lead].abs() {
                    lead = j;
                }
            }
            if w[lead] < 0.0 {
                w.iter_mut().for_each(|x| *x = -*x);
            }
            if lambda.abs() <= system.zero_tol {
                lambda = 0.0;
            }
            (i, lambda, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let (values, vectors) = pairs.into_iter().map(|(_, l, w)| (l, w)).unzip();
    EigenDecomposition {
        values,
        vectors,
        basis_labels: system.basis_labels.clone(),
        m_diag: system.m_diag.clone(),
        domain: system.domain,
        orthonormal,
    }
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns unsorted eigenvalues
/// and the orthogonal matrix of eigenvectors (columns).
pub fn jacobi(mut b: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = b.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let fro = b.norm();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += b[(p, q)] * b[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * fro || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = b[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (b[(p, p)], b[(q, q)]);
                if apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    b[(p, q)] = 0.0;
                    b[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (bkp, bkq) = (b[(k, p)], b[(k, q)]);
                    b[(k, p)] = c * bkp - s * bkq;
                    b[(k, q)] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let (bpk, bqk) = (b[(p, k)], b[(q, k)]);
                    b[(p, k)] = c * bpk - s * bqk;
                    b[(q, k)] = s * bpk + c * bqk;
                }
                b[(p, q)] = 0.0;
                b[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| b[(i, i)]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<BasisLabel> {
        (0..n).map(BasisLabel::Chebyshev).collect()
    }

    fn system(a: DMatrix<f64>, m: Vec<f64>) -> AssembledSystem {
        let n = m.len();
        AssembledSystem::new(a, m, labels(n), Interval::new(-1.0, 1.0).unwrap())
    }

    #[test]
    fn identity_and_diagonal() {
        let d = solve(&system(DMatrix::identity(3, 3), vec![1.0; 3])).unwrap();
        assert_eq!(d.values, vec![1.0, 1.0, 1.0]);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let d = solve(&system(a, vec![1.0; 3])).unwrap();
        assert_eq!(d.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(d.vectors[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(d.vectors[1], vec![0.0, 0.0, 1.0]);
        assert_eq!(d.vectors[2], vec![1.0, 0.0, 0.0]);
        assert!(d.orthonormal);
    }

    #[test]
    fn rejects_malformed_systems() {
        let mut a = DMatrix::identity(2, 2);
        a[(0, 1)] = 1.0;
        assert!(matches!(solve(&system(a, vec![1.0; 2])), Err(Error::MalformedSystem(_))));
        assert!(matches!(solve(&system(DMatrix::identity(2, 2), vec![1.0, 0.0])), Err(Error::MalformedSystem(_))));
        assert!(matches!(solve(&system(DMatrix::identity(2, 2), vec![1.0, -2.0])), Err(Error::MalformedSystem(_))));
        assert!(matches!(solve(&system(DMatrix::identity(3, 3), vec![1.0; 2])), Err(Error::MalformedSystem(_))));
    }

    #[test]
    fn zero_clamp_and_sign_convention() {
        let a = DMatrix::from_row_slice(2, 2, &[1e-14, 0.0, 0.0, 2.0]);
        let d = solve(&system(a, vec![1.0, 1.0]).with_zero_tolerance(1e-10)).unwrap();
        assert_eq!(d.values[0], 0.0);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let d = solve(&system(a, vec![1.0, 1.0])).unwrap();
        for w in &d.vectors {
            let lead = if w[0].abs() >= w[1].abs() { w[0] } else { w[1] };
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn general_solver_on_triangular_pencil() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 0.0, 3.0, -1.0, 0.0, 0.0, 2.0]);
        let m = vec![1.0, 2.0, 0.5];
        let s = system(a.clone(), m.clone());
        let d = solve_general(&s).unwrap();
        let expect = [1.0, 1.5, 4.0];
        for (v, e) in d.values.iter().zip(expect) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        for (lambda, w) in d.values.iter().zip(&d.vectors) {
            let w = nalgebra::DVector::from_vec(w.clone());
            let r = &a * &w - nalgebra::DVector::from_fn(3, |i, _| lambda * m[i] * w[i]);
            assert!(r.norm() < 1e-12);
        }
        assert!(!d.orthonormal);
    }

    #[test]
    fn general_solver_rejects_complex_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(solve_general(&system(a, vec![1.0; 2])), Err(Error::Numerical(_))));
    }

    #[test]
    fn eigenfunction_index_checked() {
        let d = solve(&system(DMatrix::identity(2, 2), vec![1.0; 2])).unwrap();
        assert!(d.evaluate(2, 0.0).is_err());
        assert!((d.evaluate(0, 0.3).unwrap() - 1.0).abs() < 1e-15);
    }
}
