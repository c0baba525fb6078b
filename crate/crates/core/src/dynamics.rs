//! Modal solution of `ρ u_tt = L u` from computed eigenpairs:
//!
//! ```text
//! u(x, t) = Σ_k w_k(x) (a_k cos(ω_k t) + b_k sin(ω_k t)),   ω_k = √(λ_k / ρ)
//! ```
//!
//! A mode with `λ_k = 0` evolves as `w_k(a_k + d_k t)` instead.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::eigsolver::{AssembledSystem, EigenDecomposition};
use crate::error::{invalid, Error, Result};
use crate::problem::BasisLabel;
use crate::quadrature::{self, Mesh};

#[derive(Debug, Clone)]
pub struct ModalSolution {
    pub decomp: EigenDecomposition,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Velocity coefficient of each zero mode, zero elsewhere.
    pub drift: Vec<f64>,
    pub rho: f64,
    pub modes_used: usize,
}

fn is_fourier(decomp: &EigenDecomposition) -> bool {
    decomp.basis_labels.iter().all(|l| !matches!(l, BasisLabel::Chebyshev(_)))
}

/// Coefficients of `f` along each eigenfunction, `c_k` with `f ≈ Σ c_k w_k`.
fn modal_coefficients(decomp: &EigenDecomposition, f: &dyn Fn(f64) -> f64, quadrature_n: usize) -> Result<Vec<f64>> {
    let domain = decomp.domain;
    if is_fourier(decomp) {
        // ratio formula ∫ f w_k / ∫ w_k² by the periodic trapezoid rule
        let xs: Vec<f64> = (0..quadrature_n).map(|j| domain.a + domain.length() * j as f64 / quadrature_n as f64).collect();
        let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        return (0..decomp.len())
            .map(|k| {
                let w = decomp.eigenfunction(k)?;
                let wx: Vec<f64> = xs.iter().map(|&x| w.eval(x)).collect();
                let num: Vec<f64> = fx.iter().zip(&wx).map(|(a, b)| a * b).collect();
                let den: Vec<f64> = wx.iter().map(|v| v * v).collect();
                Ok(quadrature::trapezoid_periodic(&num, domain.length())?
                    / quadrature::trapezoid_periodic(&den, domain.length())?)
            })
            .collect();
    }
    // weighted Chebyshev coefficients of f, then V c = f̂ for the
    // non-orthogonal eigenvectors
    let nodes = quadrature::gauss_chebyshev_nodes(quadrature_n, domain);
    let fx: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
    let n = decomp.basis_labels.len();
    let mut rhs = DVector::zeros(n);
    for (i, label) in decomp.basis_labels.iter().enumerate() {
        let vals: Vec<f64> = nodes.iter().zip(&fx).map(|(&x, fv)| fv * label.eval(x, domain)).collect();
        rhs[i] = quadrature::gauss_chebyshev(&vals, domain)? / decomp.m_diag[i];
    }
    let v: DMatrix<f64> = decomp.vector_matrix();
    if v.ncols() != n {
        return Err(Error::MalformedSystem("eigenvector matrix is not square".into()));
    }
    v.lu()
        .solve(&rhs)
        .map(|c| c.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("eigenvector matrix is singular; cannot project initial data".into()))
}

pub fn project_initial(
    decomp: &EigenDecomposition,
    u0: &dyn Fn(f64) -> f64,
    v0: &dyn Fn(f64) -> f64,
    modes: usize,
    quadrature_n: usize,
    rho: f64,
) -> Result<ModalSolution> {
    if modes > decomp.len() {
        return Err(invalid(format!("{modes} modes requested but only {} eigenpairs are available", decomp.len())));
    }
    if quadrature_n < 4 * modes || quadrature_n == 0 {
        return Err(invalid(format!("quadrature_n = {quadrature_n} must be at least 4 * modes = {}", 4 * modes)));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(invalid(format!("density must be positive, got {rho}")));
    }
    let mut a = modal_coefficients(decomp, u0, quadrature_n)?;
    let vel = modal_coefficients(decomp, v0, quadrature_n)?;
    a.truncate(modes);
    let mut b = vec![0.0; modes];
    let mut drift = vec![0.0; modes];
    for k in 0..modes {
        let omega = (decomp.values[k].max(0.0) / rho).sqrt();
        if omega == 0.0 {
            drift[k] = vel[k];
        } else {
            b[k] = vel[k] / omega;
        }
    }
    Ok(ModalSolution { decomp: decomp.clone(), a, b, drift, rho, modes_used: modes })
}

impl ModalSolution {
    pub fn frequency(&self, k: usize) -> f64 {
        (self.decomp.values[k].max(0.0) / self.rho).sqrt()
    }

    /// Time factor multiplying `w_k`.
    pub fn modal_amplitude(&self, k: usize, t: f64) -> f64 {
        let omega = self.frequency(k);
        if omega == 0.0 {
            self.a[k] + self.drift[k] * t
        } else {
            self.a[k] * (omega * t).cos() + self.b[k] * (omega * t).sin()
        }
    }

    /// Time derivative of [`Self::modal_amplitude`].
    pub fn modal_velocity(&self, k: usize, t: f64) -> f64 {
        let omega = self.frequency(k);
        if omega == 0.0 {
            self.drift[k]
        } else {
            omega * (self.b[k] * (omega * t).cos() - self.a[k] * (omega * t).sin())
        }
    }

    /// `√(a_k² + b_k²)`.
    pub fn amplitude(&self, k: usize) -> f64 {
        self.a[k].hypot(self.b[k])
    }

    /// `½ Σ λ_k amplitude_k²`, constant by construction.
    pub fn modal_energy(&self) -> f64 {
        (0..self.modes_used)
            .map(|k| 0.5 * self.decomp.values[k] * self.amplitude(k).powi(2))
            .sum()
    }

    /// Basis coefficients of `u(·, t)` and `u_t(·, t)`.
    pub fn coefficients(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.decomp.basis_labels.len();
        let mut c = vec![0.0; n];
        let mut cdot = vec![0.0; n];
        for k in 0..self.modes_used {
            let (q, qd) = (self.modal_amplitude(k, t), self.modal_velocity(k, t));
            for (i, w) in self.decomp.vectors[k].iter().enumerate() {
                c[i] += q * w;
                cdot[i] += qd * w;
            }
        }
        (c, cdot)
    }

    /// `½ cᵀ A c + ½ ρ ċᵀ M ċ` with the assembled matrices.
    pub fn energy(&self, system: &AssembledSystem, t: f64) -> Result<f64> {
        let n = system.dim();
        if n != self.decomp.basis_labels.len() {
            return Err(Error::MalformedSystem(format!("system of size {n} does not match the solution basis")));
        }
        let (c, cdot) = self.coefficients(t);
        let c = DVector::from_vec(c);
        let potential = 0.5 * c.dot(&(&system.a * &c));
        let kinetic: f64 = 0.5 * self.rho * cdot.iter().zip(&system.m_diag).map(|(v, m)| m * v * v).sum::<f64>();
        Ok(potential + kinetic)
    }
}

pub fn evaluate_solution(sol: &ModalSolution, x: f64, t: f64) -> f64 {
    (0..sol.modes_used)
        .map(|k| {
            let q = sol.modal_amplitude(k, t);
            if q == 0.0 {
                0.0
            } else {
                q * sol.decomp.eigenfunction(k).map(|w| w.eval(x)).unwrap_or(0.0)
            }
        })
        .sum()
}

pub fn snapshot(sol: &ModalSolution, mesh: &Mesh, t: f64) -> Vec<f64> {
    mesh.nodes.iter().map(|&x| evaluate_solution(sol, x, t)).collect()
}

/// `L²` distance of two solutions at time `t` by the periodic trapezoid rule
/// on `n` points of the first solution's domain.
pub fn l2_distance(u: &ModalSolution, v: &ModalSolution, t: f64, n: usize) -> Result<f64> {
    let d = u.decomp.domain;
    let diff: Vec<f64> = (0..n)
        .map(|j| {
            let x = d.a + d.length() * j as f64 / n as f64;
            (evaluate_solution(u, x, t) - evaluate_solution(v, x, t)).powi(2)
        })
        .collect();
    Ok(quadrature::trapezoid_periodic(&diff, d.length())?.sqrt())
}

/// Printed initial displacement `e^{-(x - center)²}`.
pub fn gaussian_pulse(center: f64) -> impl Fn(f64) -> f64 {
    move |x| (-(x - center) * (x - center)).exp()
}

/// Midpoint of the periodic cell, the centred reading of the pulse.
pub const CENTERED: f64 = PI;
