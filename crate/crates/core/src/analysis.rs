//! Spectral error metrics and convergence studies.

use std::f64::consts::PI;
use std::io::Write;

use crate::chebyshev::{self, Parity};
use crate::eigsolver::{EigenDecomposition, Eigenfunction};
use crate::error::{invalid, Error, Result};
use crate::fourier;
use crate::kernel::Micromodulus;
use crate::problem::{Basis, SpectralProblem};
use crate::quadrature::Interval;

/// One row of a convergence table; `rate` is absent on the first row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    pub rate: Option<f64>,
}

/// Reference spectrum for [`convergence_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    /// Exact multipliers at the periodic frequencies of the domain.
    Multiplier,
    /// The same discretization at a finer truncation.
    SelfRefinement(usize),
}

/// `√(Σ (approx_k - exact_k)² / Σ approx_k²)`.
pub fn relative_l2_error(approx: &[f64], exact: &[f64]) -> Result<f64> {
    if approx.len() != exact.len() {
        return Err(invalid(format!("length mismatch: {} approximate vs {} exact values", approx.len(), exact.len())));
    }
    if approx.is_empty() {
        return Err(invalid("relative_l2_error needs at least one value"));
    }
    if exact.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateInput("exact spectrum is identically zero".into()));
    }
    let den: f64 = approx.iter().map(|a| a * a).sum();
    if den == 0.0 {
        return Err(Error::DegenerateInput("approximate spectrum is identically zero".into()));
    }
    let num: f64 = approx.iter().zip(exact).map(|(a, e)| (a - e) * (a - e)).sum();
    Ok((num / den).sqrt())
}

/// `log(e_{i-1}/e_i) / log(n_i/n_{i-1})` for consecutive pairs.
pub fn convergence_rates(ns: &[usize], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| {
            (i > 0).then(|| (errors[i - 1] / errors[i]).ln() / (ns[i] as f64 / ns[i - 1] as f64).ln())
        })
        .collect()
}

/// Dispatch on the basis; `parity` overrides the boundary-condition default
/// of the Chebyshev sub-basis.
pub fn solve_problem(problem: &SpectralProblem, parity: Option<Parity>) -> Result<EigenDecomposition> {
    match (problem.basis, parity) {
        (Basis::Fourier, None) => fourier::eigen_fourier(problem),
        (Basis::Fourier, Some(_)) => Err(invalid("parity applies to the Chebyshev basis only")),
        (Basis::Chebyshev, None) => chebyshev::eigen_chebyshev(problem),
        (Basis::Chebyshev, Some(p)) => chebyshev::eigen_with_parity(problem, p),
    }
}

/// Smallest `count` values of the periodic spectrum on `domain`, sorted.
/// Frequencies are `2πh/|Ω|`; each nonzero frequency carries a cosine and a
/// sine mode unless `deduplicate` is set.
pub fn multiplier_oracle(kernel: &Micromodulus, domain: Interval, count: usize, deduplicate: bool) -> Vec<f64> {
    let step = 2.0 * PI / domain.length();
    let mut out = Vec::with_capacity(count + 1);
    let mut h = 0usize;
    while out.len() < count {
        let lambda = kernel.fourier_multiplier(step * h as f64).lambda;
        out.push(lambda);
        if h > 0 && !deduplicate {
            out.push(lambda);
        }
        h += 1;
    }
    out.truncate(count);
    out.sort_by(f64::total_cmp);
    out
}

fn check_levels(n_values: &[usize], oracle: Oracle) -> Result<()> {
    if n_values.is_empty() {
        return Err(invalid("convergence study needs at least one N"));
    }
    if let Some(n) = n_values.iter().find(|n| **n == 0 || **n % 2 != 0) {
        return Err(invalid(format!("every N must be a positive even integer, got {n}")));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("N values must be strictly increasing"));
    }
    if let Oracle::SelfRefinement(n_ref) = oracle {
        let max = *n_values.last().unwrap();
        if n_ref <= max {
            return Err(invalid(format!("reference N = {n_ref} must exceed the largest N = {max}")));
        }
    }
    Ok(())
}

/// Errors of the sorted discrete spectrum against `oracle` for each `N`,
/// compared index-wise over the smaller of the two counts.
pub fn convergence_study(
    template: &SpectralProblem,
    n_values: &[usize],
    oracle: Oracle,
    parity: Option<Parity>,
) -> Result<Vec<ConvergenceRow>> {
    check_levels(n_values, oracle)?;
    let reference = match oracle {
        Oracle::SelfRefinement(n_ref) => Some(solve_problem(&template.with_n(n_ref)?, parity)?.values),
        Oracle::Multiplier => None,
    };
    let dedup = parity == Some(Parity::EvenOnly);
    let mut errors = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let values = solve_problem(&template.with_n(n)?, parity)?.values;
        let exact = match &reference {
            Some(r) => r.clone(),
            None => multiplier_oracle(&template.kernel, template.domain, values.len(), dedup),
        };
        let m = values.len().min(exact.len());
        errors.push(relative_l2_error(&values[..m], &exact[..m])?);
    }
    let rates = convergence_rates(n_values, &errors);
    Ok(n_values
        .iter()
        .zip(errors)
        .zip(rates)
        .map(|((&n, error), rate)| ConvergenceRow { n, error, rate })
        .collect())
}

/// `‖f - g‖_{L²}` by the closed trapezoid rule on `quadrature_n` points,
/// after flipping `g` if `∫ f g < 0`.
pub fn eigenfunction_l2_distance(f: &Eigenfunction<'_>, g: &Eigenfunction<'_>, quadrature_n: usize) -> Result<f64> {
    if quadrature_n < 2 {
        return Err(invalid(format!("quadrature needs at least 2 points, got {quadrature_n}")));
    }
    let d = f.domain();
    let h = d.length() / (quadrature_n - 1) as f64;
    let samples: Vec<(f64, f64, f64)> = (0..quadrature_n)
        .map(|j| {
            let x = if j + 1 == quadrature_n { d.b } else { d.a + h * j as f64 };
            let w = if j == 0 || j + 1 == quadrature_n { 0.5 * h } else { h };
            (w, f.eval(x), g.eval(x))
        })
        .collect();
    let inner: f64 = samples.iter().map(|(w, a, b)| w * a * b).sum();
    let s = if inner < 0.0 { -1.0 } else { 1.0 };
    Ok(samples.iter().map(|(w, a, b)| w * (a - s * b).powi(2)).sum::<f64>().sqrt())
}

/// `x` with `digits` significant digits in scientific notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.max(1) - 1, x)
}

/// `N,error,rate` with a blank rate on the first row.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: &mut W) -> Result<()> {
    writeln!(out, "N,error,rate")?;
    for r in rows {
        let rate = r.rate.map(|v| format_sig(v, 6)).unwrap_or_default();
        writeln!(out, "{},{},{}", r.n, format_sig(r.error, 6), rate)?;
    }
    Ok(())
}
