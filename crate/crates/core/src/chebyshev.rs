//! Galerkin discretization in shifted Chebyshev polynomials
//! `T_k(x) = cos(k arccos((x - c)/r))` with the weighted inner product
//! `(u, v)_ω = ∫ u v ω`, `ω(x) = 1/√(1 - ((x-c)/r)²)`.
//!
//! ```text
//! a_kh = β m_kk δ_kh - ∫ ω(x) T_k(x) γ_h(x) dx,   m_kk = (π r / 2) c_k
//! γ_h(x) = ∫_{Ω ∩ B_δ(x)} C(x - x') T_h(x') dx'
//! ```
//!
//! with `c_0 = 2`, `c_k = 1` otherwise. The inner integral stops at the
//! physical boundary. The weight makes `A` non-symmetric, so the pencil goes
//! through [`eigsolver::solve_general`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::eigsolver::{self, AssembledSystem, EigenDecomposition};
use crate::error::{invalid, Error, Result};
use crate::kernel::Micromodulus;
use crate::problem::{Basis, BasisLabel, BoundaryCondition, SpectralProblem};
use crate::quadrature::{self, Interval, VectorQuadrature};

pub const ZERO_CLAMP: f64 = 1e-10;

/// Absolute tolerance of the inner integrals, relative to `β`.
const INNER_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    All,
    EvenOnly,
    OddOnly,
}

impl Parity {
    /// Sub-basis implied by a boundary condition. Periodic problems keep the
    /// full basis; its even and odd halves decouple anyway.
    pub fn for_bc(bc: BoundaryCondition) -> Self {
        match bc {
            BoundaryCondition::Periodic | BoundaryCondition::Free => Parity::All,
            BoundaryCondition::Antiperiodic => Parity::OddOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebBasisSpec {
    pub n: usize,
    pub parity: Parity,
    pub domain: Interval,
}

impl ChebBasisSpec {
    pub fn indices(&self) -> Vec<usize> {
        (0..=self.n)
            .filter(|k| match self.parity {
                Parity::All => true,
                Parity::EvenOnly => k % 2 == 0,
                Parity::OddOnly => k % 2 == 1,
            })
            .collect()
    }

    /// `m_kk = ∫ T_k² ω`.
    pub fn mass(&self, k: usize) -> f64 {
        let c = if k == 0 { 2.0 } else { 1.0 };
        0.5 * PI * self.domain.half_width() * c
    }
}

pub fn eval_t(spec: &ChebBasisSpec, k: usize, x: f64) -> Result<f64> {
    if k > spec.n {
        return Err(invalid(format!("degree {k} exceeds the basis degree {}", spec.n)));
    }
    if !spec.domain.contains(x) {
        return Err(invalid(format!("x = {x} outside [{}, {}]", spec.domain.a, spec.domain.b)));
    }
    Ok(BasisLabel::Chebyshev(k).eval(x, spec.domain))
}

/// Outer rule for `∫ f ω dx` on the right half `x >= c`; the left half is its
/// mirror image `x ↦ 2c - x` with equal weights.
#[derive(Debug, Clone)]
pub struct OuterRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl OuterRule {
    /// `∫ f ω = r ∫_0^π f(c + r cos θ) dθ`, split where `γ_h` has a kink
    /// (`x = b - δ`, mirrored to `a + δ`) and integrated on each piece by a
    /// Gauss–Legendre rule sized for degree `n`.
    pub fn new(n: usize, domain: Interval, delta: f64) -> Self {
        let (c, r) = (domain.center(), domain.half_width());
        let mut breaks = vec![0.0, 0.5 * PI];
        let kink = domain.b - delta;
        if kink > c && kink < domain.b {
            breaks.insert(1, ((kink - c) / r).acos());
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi - lo <= 0.0 {
                continue;
            }
            let m = (n as f64 * (hi - lo)).ceil() as usize + OUTER_EXTRA;
            let (xi, wi) = quadrature::gauss_legendre_rule(m);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (x, w) in xi.iter().zip(&wi) {
                nodes.push(c + r * (mid + half * x).cos());
                weights.push(r * half * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f ω dx`, with `f` sampled at the right-half nodes and at their mirrors.
    pub fn integrate(&self, right: &[f64], left: &[f64]) -> f64 {
        self.weights.iter().zip(right.iter().zip(left)).map(|(w, (p, q))| w * (p + q)).sum()
    }

    /// `2c - x` for every node.
    pub fn mirrored(&self, domain: Interval) -> Vec<f64> {
        let c = domain.center();
        self.nodes.iter().map(|x| 2.0 * c - x).collect()
    }
}

/// Nodes per kink-free piece beyond the `n · length` needed to resolve degree `n`.
const OUTER_EXTRA: usize = 16;

/// `γ_h(x)` for `h = 0..=max_h`.
///
/// With `x' = c + r cos θ` the integrand becomes `C(x - x') r sin θ cos(hθ)`,
/// smooth and free of the endpoint singularity of `T_h` in `x'`.
pub fn gamma_at(kernel: &Micromodulus, domain: Interval, max_h: usize, x: f64) -> Vec<f64> {
    let (c, r) = (domain.center(), domain.half_width());
    let delta = kernel.delta();
    let lo = domain.a.max(x - delta);
    let hi = domain.b.min(x + delta);
    let mut out = vec![0.0; max_h + 1];
    if hi <= lo || kernel.is_zero() {
        return out;
    }
    let t_lo = ((hi - c) / r).clamp(-1.0, 1.0).acos();
    let t_hi = ((lo - c) / r).clamp(-1.0, 1.0).acos();
    let panels = ((t_hi - t_lo) * (max_h as f64 + 1.0) / PI).ceil().max(1.0) as usize;
    let tol = INNER_TOL * kernel.beta().max(f64::MIN_POSITIVE);
    let mut quad = VectorQuadrature::new(max_h + 1);
    quad.integrate(
        |theta, vals: &mut [f64]| {
            let (s, cs) = theta.sin_cos();
            let g = kernel.evaluate(x - (c + r * cs)) * r * s;
            // cos(hθ) by the Chebyshev recurrence in cos θ
            let (mut prev, mut cur) = (1.0, cs);
            vals[0] = g;
            for v in vals.iter_mut().skip(1) {
                *v = g * cur;
                let next = 2.0 * cs * cur - prev;
                prev = cur;
                cur = next;
            }
        },
        t_lo,
        t_hi,
        panels,
        tol,
        &mut out,
    );
    out
}

pub fn assemble_chebyshev(problem: &SpectralProblem) -> Result<AssembledSystem> {
    assemble_with_parity(problem, Parity::for_bc(problem.bc))
}

/// Assembly on an explicitly chosen sub-basis.
pub fn assemble_with_parity(problem: &SpectralProblem, parity: Parity) -> Result<AssembledSystem> {
    if problem.basis != Basis::Chebyshev {
        return Err(invalid("assemble_chebyshev called on a non-Chebyshev problem"));
    }
    let spec = ChebBasisSpec { n: problem.n, parity, domain: problem.domain };
    let idx = spec.indices();
    let dim = idx.len();
    let kernel = &problem.kernel;
    let beta = kernel.beta();
    let domain = problem.domain;

    let rule = OuterRule::new(problem.n, domain, kernel.delta());
    // γ_h(2c - x) = (-1)^h γ_h(x) and T_k(2c - x) = (-1)^k T_k(x), so only
    // the right half is integrated and entries with k + h odd vanish
    let gamma: Vec<Vec<f64>> = rule.nodes.par_iter().map(|&x| gamma_at(kernel, domain, problem.n, x)).collect();
    if gamma.iter().flatten().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("inner kernel integral produced non-finite values".into()));
    }
    let tvals: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| idx.iter().map(|&k| BasisLabel::Chebyshev(k).eval(x, domain)).collect())
        .collect();
    let m_diag: Vec<f64> = idx.iter().map(|&k| spec.mass(k)).collect();
    let a = DMatrix::from_fn(dim, dim, |row, col| {
        let (k, h) = (idx[row], idx[col]);
        let integral = if (k + h) % 2 == 1 {
            0.0
        } else {
            2.0 * (0..rule.len()).map(|q| rule.weights[q] * tvals[q][row] * gamma[q][h]).sum::<f64>()
        };
        let diag = if row == col { beta * m_diag[row] } else { 0.0 };
        diag - integral
    });
    let labels = idx.iter().map(|&k| BasisLabel::Chebyshev(k)).collect();
    Ok(AssembledSystem::new(a, m_diag, labels, domain).with_zero_tolerance(ZERO_CLAMP * beta))
}

pub fn eigen_chebyshev(problem: &SpectralProblem) -> Result<EigenDecomposition> {
    eigsolver::solve_general(&assemble_chebyshev(problem)?)
}

pub fn eigen_with_parity(problem: &SpectralProblem, parity: Parity) -> Result<EigenDecomposition> {
    eigsolver::solve_general(&assemble_with_parity(problem, parity)?)
}

/// Odd-degree sub-basis, so every eigenfunction satisfies `w(a) = -w(b)`.
pub fn antiperiodic_eigen(kernel: &Micromodulus, domain: Interval, n: usize) -> Result<EigenDecomposition> {
    if n < 3 {
        return Err(invalid(format!("antiperiodic problem needs n >= 3, got {n}")));
    }
    let problem = SpectralProblem::chebyshev(kernel.clone(), n, domain, BoundaryCondition::Antiperiodic)?;
    eigen_chebyshev(&problem)
}
