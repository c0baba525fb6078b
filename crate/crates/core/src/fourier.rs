//! Galerkin discretization in the real trigonometric basis
//! `{1, cos hx, sin hx : h = 1..N/2}` on the periodic cell `[0, 2π]`.
//!
//! With periodic extension the inner integral over `Ω ∩ B_δ(x)` becomes a
//! convolution, so both `A` and `M` are diagonal: `m = 2π` for the constant
//! and `π` otherwise, and `a_hh = m_hh (β - γ_h)` with `γ_h` the cosine
//! transform of the kernel. The spectrum is therefore `λ_h = β - γ_h`, each
//! `h >= 1` appearing twice (cos and sin partners).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::eigsolver::{AssembledSystem, EigenDecomposition};
use crate::error::{invalid, Result};
use crate::problem::{Basis, BasisLabel, SpectralProblem};
use crate::quadrature::{self, DEFAULT_OVERSAMPLE};

/// Eigenvalues within `ZERO_CLAMP · β` of zero are reported as zero.
pub const ZERO_CLAMP: f64 = 1e-10;

/// Basis order: `1, cos 1x, sin 1x, cos 2x, sin 2x, …`.
pub fn basis_labels(n: usize) -> Vec<BasisLabel> {
    std::iter::once(BasisLabel::Constant)
        .chain((1..=n / 2).flat_map(|h| [BasisLabel::Cos(h), BasisLabel::Sin(h)]))
        .collect()
}

fn check(problem: &SpectralProblem) -> Result<()> {
    if problem.basis != Basis::Fourier {
        return Err(invalid("assemble_fourier called on a non-Fourier problem"));
    }
    Ok(())
}

/// `λ_h = β - γ_h` for `h = 0..=N/2`, with `λ_0 = 0` exactly.
pub fn frequency_eigenvalues(problem: &SpectralProblem) -> Result<Vec<f64>> {
    check(problem)?;
    let beta = problem.kernel.beta();
    let gamma = quadrature::cosine_transform_kernel(&problem.kernel, problem.n / 2, DEFAULT_OVERSAMPLE)?;
    Ok(gamma
        .iter()
        .enumerate()
        .map(|(h, g)| if h == 0 { 0.0 } else { beta - g })
        .collect())
}

pub fn assemble_fourier(problem: &SpectralProblem) -> Result<AssembledSystem> {
    let lambda = frequency_eigenvalues(problem)?;
    let labels = basis_labels(problem.n);
    let m_diag: Vec<f64> = labels
        .iter()
        .map(|l| if *l == BasisLabel::Constant { 2.0 * PI } else { PI })
        .collect();
    let diag: Vec<f64> = labels.iter().zip(&m_diag).map(|(l, m)| m * lambda[l.index()]).collect();
    let a = DMatrix::from_diagonal(&DVector::from_vec(diag));
    Ok(AssembledSystem::new(a, m_diag, labels, problem.domain).with_zero_tolerance(ZERO_CLAMP * problem.kernel.beta()))
}

/// Closed-form spectrum; the eigenfunctions are the basis functions
/// themselves, normalized to unit `L²` norm. Ties keep basis order
/// (frequency, then cos before sin).
pub fn eigen_fourier(problem: &SpectralProblem) -> Result<EigenDecomposition> {
    let system = assemble_fourier(problem)?;
    let n = system.dim();
    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| system.a[(i, i)] / system.m_diag[i]).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let vectors = order
        .iter()
        .map(|&i| {
            let mut w = vec![0.0; n];
            w[i] = system.m_diag[i].sqrt().recip();
            w
        })
        .collect();
    Ok(EigenDecomposition {
        values: order
            .iter()
            .map(|&i| if values[i].abs() <= system.zero_tol { 0.0 } else { values[i] })
            .collect(),
        vectors,
        basis_labels: system.basis_labels,
        m_diag: system.m_diag,
        domain: system.domain,
        orthonormal: true,
    })
}

/// Value of the `k`-th eigenfunction at `x`.
pub fn evaluate_eigenfunction(decomp: &EigenDecomposition, k: usize, x: f64) -> Result<f64> {
    decomp.evaluate(k, x)
}
