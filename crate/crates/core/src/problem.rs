//! Problem description shared by both discretizations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::Micromodulus;
use crate::quadrature::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Fourier,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Periodic,
    Antiperiodic,
    Free,
}

/// Identifies one basis function of a discrete space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    Constant,
    Cos(usize),
    Sin(usize),
    /// Shifted Chebyshev polynomial `T_k` on the problem domain.
    Chebyshev(usize),
}

impl BasisLabel {
    pub fn eval(&self, x: f64, domain: Interval) -> f64 {
        match *self {
            BasisLabel::Constant => 1.0,
            BasisLabel::Cos(h) => (h as f64 * x).cos(),
            BasisLabel::Sin(h) => (h as f64 * x).sin(),
            BasisLabel::Chebyshev(k) => {
                let s = ((x - domain.center()) / domain.half_width()).clamp(-1.0, 1.0);
                (k as f64 * s.acos()).cos()
            }
        }
    }

    /// Frequency for Fourier labels, degree for Chebyshev labels.
    pub fn index(&self) -> usize {
        match *self {
            BasisLabel::Constant => 0,
            BasisLabel::Cos(h) | BasisLabel::Sin(h) => h,
            BasisLabel::Chebyshev(k) => k,
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Constant => write!(f, "1"),
            BasisLabel::Cos(h) => write!(f, "cos{h}"),
            BasisLabel::Sin(h) => write!(f, "sin{h}"),
            BasisLabel::Chebyshev(k) => write!(f, "T{k}"),
        }
    }
}

/// Domain, truncation `N`, kernel, basis and boundary condition of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProblem {
    pub domain: Interval,
    pub n: usize,
    pub kernel: Micromodulus,
    pub basis: Basis,
    pub bc: BoundaryCondition,
}

impl SpectralProblem {
    pub fn new(domain: Interval, n: usize, kernel: Micromodulus, basis: Basis, bc: BoundaryCondition) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(invalid(format!("truncation N must be a positive even integer, got {n}")));
        }
        if basis == Basis::Fourier {
            if bc != BoundaryCondition::Periodic {
                return Err(invalid("the Fourier basis requires periodic boundary conditions"));
            }
            let cell = Interval::periodic_cell();
            if (domain.a - cell.a).abs() > 1e-12 || (domain.b - cell.b).abs() > 1e-12 {
                return Err(invalid(format!("the Fourier basis requires the domain [0, 2π], got [{}, {}]", domain.a, domain.b)));
            }
        }
        Ok(Self { domain, n, kernel, basis, bc })
    }

    /// Fourier problem on `[0, 2π]`.
    pub fn fourier(kernel: Micromodulus, n: usize) -> Result<Self> {
        Self::new(Interval::periodic_cell(), n, kernel, Basis::Fourier, BoundaryCondition::Periodic)
    }

    pub fn chebyshev(kernel: Micromodulus, n: usize, domain: Interval, bc: BoundaryCondition) -> Result<Self> {
        Self::new(domain, n, kernel, Basis::Chebyshev, bc)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.domain, n, self.kernel.clone(), self.basis, self.bc)
    }
}
