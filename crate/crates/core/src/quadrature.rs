//! Integration rules and the discrete cosine transform of the kernel.

use std::f64::consts::PI;

use once_cell::sync::Lazy;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::Micromodulus;

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(invalid(format!("interval requires finite a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    /// `[0, 2π]`, the periodic cell of the Fourier basis.
    pub fn periodic_cell() -> Self {
        Self { a: 0.0, b: 2.0 * PI }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * self.length().max(1.0);
        x >= self.a - slack && x <= self.b + slack
    }
}

const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // p1 = P_n(x), p0 = P_{n-1}(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

static GL16: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre_rule(GL_ORDER));

fn gl_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = &*GL16;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>()
}

const MAX_DEPTH: u32 = 48;

fn adaptive_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl_panel(f, a, m);
    let right = gl_panel(f, m, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= tol.max(4.0 * f64::EPSILON * refined.abs()) || depth >= MAX_DEPTH || m <= a || m >= b {
        return refined;
    }
    adaptive_step(f, a, m, left, 0.5 * tol, depth + 1) + adaptive_step(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Composite 16-point Gauss–Legendre with adaptive bisection to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_panels(f, a, b, 1, tol)
}

/// As [`integrate`], starting from `panels` equal sub-intervals. Useful for
/// oscillatory integrands where a single coarse panel can alias.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let tol_each = tol / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            let whole = gl_panel(&f, lo, hi);
            adaptive_step(&f, lo, hi, whole, tol_each, 0)
        })
        .sum()
}

/// Vector-valued adaptive Gauss–Legendre: `f(x, out)` fills `out` with the
/// integrand components at `x`; the result accumulates into `acc`. A panel is
/// accepted once every component has converged.
pub struct VectorQuadrature {
    dim: usize,
    scratch: Vec<f64>,
}

impl VectorQuadrature {
    pub fn new(dim: usize) -> Self {
        Self { dim, scratch: vec![0.0; dim] }
    }

    /// Returns `max_i ∫|f_i|` over the panel, the scale of its rounding error.
    fn panel<F: FnMut(f64, &mut [f64])>(&mut self, f: &mut F, a: f64, b: f64, out: &mut [f64]) -> f64 {
        let (x, w) = &*GL16;
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut mag = 0.0f64;
        for (xi, wi) in x.iter().zip(w) {
            f(mid + half * xi, &mut self.scratch);
            let s = half * wi;
            let mut peak = 0.0f64;
            for (o, v) in out.iter_mut().zip(&self.scratch) {
                *o += s * v;
                peak = peak.max(v.abs());
            }
            mag += s * peak;
        }
        mag
    }

    #[allow(clippy::too_many_arguments)]
    fn step<F: FnMut(f64, &mut [f64])>(
        &mut self,
        f: &mut F,
        a: f64,
        b: f64,
        whole: &[f64],
        tol: f64,
        depth: u32,
        acc: &mut [f64],
    ) {
        let m = 0.5 * (a + b);
        let mut left = vec![0.0; self.dim];
        let mut right = vec![0.0; self.dim];
        let scale = self.panel(f, a, m, &mut left) + self.panel(f, m, b, &mut right);
        let err = whole
            .iter()
            .zip(left.iter().zip(&right))
            .map(|(w, (l, r))| (l + r - w).abs())
            .fold(0.0, f64::max);
        if err <= tol.max(64.0 * f64::EPSILON * scale) || depth >= MAX_DEPTH || m <= a || m >= b {
            for (o, (l, r)) in acc.iter_mut().zip(left.iter().zip(&right)) {
                *o += l + r;
            }
            return;
        }
        self.step(f, a, m, &left, 0.5 * tol, depth + 1, acc);
        self.step(f, m, b, &right, 0.5 * tol, depth + 1, acc);
    }

    pub fn integrate<F: FnMut(f64, &mut [f64])>(
        &mut self,
        mut f: F,
        a: f64,
        b: f64,
        panels: usize,
        tol: f64,
        acc: &mut [f64],
    ) {
        assert_eq!(acc.len(), self.dim);
        acc.iter_mut().for_each(|v| *v = 0.0);
        if b <= a {
            return;
        }
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let tol_each = tol / panels as f64;
        let mut whole = vec![0.0; self.dim];
        for i in 0..panels {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            self.panel(&mut f, lo, hi, &mut whole);
            self.step(&mut f, lo, hi, &whole.clone(), tol_each, 0, acc);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshKind {
    UniformPeriodic,
    GaussChebyshevLobatto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<f64>,
    pub kind: MeshKind,
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gauss–Chebyshev–Lobatto nodes `c - r cos(πj/n)` on an arbitrary interval.
    pub fn gcl(n: usize, domain: Interval) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("GCL mesh needs n >= 2, got {n}")));
        }
        let (c, r) = (domain.center(), domain.half_width());
        let mut nodes: Vec<f64> = (0..=n).map(|j| c - r * (PI * j as f64 / n as f64).cos()).collect();
        nodes[0] = domain.a;
        nodes[n] = domain.b;
        Ok(Self { nodes, kind: MeshKind::GaussChebyshevLobatto })
    }
}

/// Uniform nodes `a + (b-a) j/n`, `j = 0..=n`; the last node is the periodic
/// image of the first.
pub fn uniform_mesh(a: f64, b: f64, n: usize) -> Result<Mesh> {
    let domain = Interval::new(a, b)?;
    if n < 2 || n % 2 != 0 {
        return Err(invalid(format!("uniform mesh needs an even n >= 2, got {n}")));
    }
    let h = domain.length() / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|j| a + h * j as f64).collect();
    nodes[n] = b;
    Ok(Mesh { nodes, kind: MeshKind::UniformPeriodic })
}

/// Gauss–Chebyshev–Lobatto nodes `π - π cos(πj/n)` on `[0, 2π]`.
pub fn gcl_mesh(n: usize) -> Result<Mesh> {
    Mesh::gcl(n, Interval::periodic_cell())
}

/// `(period / N) Σ values` for `N` samples over one period (endpoint omitted).
pub fn trapezoid_periodic(values: &[f64], period: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("trapezoid_periodic: empty sample list"));
    }
    Ok(period / values.len() as f64 * values.iter().sum::<f64>())
}

/// Interior Chebyshev points `c + r cos((2j+1)π/(2n))`, `j = 0..n`.
pub fn gauss_chebyshev_nodes(n: usize, domain: Interval) -> Vec<f64> {
    let (c, r) = (domain.center(), domain.half_width());
    (0..n).map(|j| c + r * ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos()).collect()
}

/// `∫_a^b f(x) ω(x) dx` with `ω(x) = 1/√(1 - ((x-c)/r)²)`, from samples at
/// [`gauss_chebyshev_nodes`]. Exact for polynomials of degree `< 2n`.
pub fn gauss_chebyshev(fvals: &[f64], domain: Interval) -> Result<f64> {
    if fvals.is_empty() {
        return Err(invalid("gauss_chebyshev: need at least one node"));
    }
    let n = fvals.len() as f64;
    Ok(domain.half_width() * PI / n * fvals.iter().sum::<f64>())
}

pub const DEFAULT_OVERSAMPLE: usize = 8;
const MIN_FFT_GRID: usize = 1 << 16;

/// `γ_h = ∫_{-δ}^{δ} C(y) cos(hy) dy` for `h = 0..=max_h`.
///
/// The kernel is periodised onto a uniform power-of-two grid over one period
/// and transformed with a single FFT. On that grid the FFT is the trapezoid
/// rule over the infinite lattice `kΔ`, so the hard cutoff at `|y| = δ` is
/// repaired by replacing the last lattice cell with its exact integral.
pub fn cosine_transform_kernel(kernel: &Micromodulus, max_h: usize, oversample: usize) -> Result<Vec<f64>> {
    if oversample == 0 {
        return Err(invalid("oversample must be >= 1"));
    }
    let m = (oversample * max_h).max(MIN_FFT_GRID).next_power_of_two();
    let dy = 2.0 * PI / m as f64;
    let delta = kernel.delta();
    let last = (delta / dy).floor() as i64;
    let m_i = m as i64;

    let mut buf: Vec<Complex64> = (0..m_i)
        .map(|j| {
            let centered = if j <= m_i / 2 { j } else { j - m_i };
            // periodic images j + p m with |j + p m| <= last
            let mut v = 0.0;
            let p_lo = (-last - centered).div_euclid(m_i) - 1;
            let p_hi = (last - centered).div_euclid(m_i) + 1;
            for p in p_lo..=p_hi {
                let k = centered + p * m_i;
                if k.abs() <= last {
                    v += kernel.profile(k as f64 * dy);
                }
            }
            Complex64::new(v, 0.0)
        })
        .collect();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    fft.process(&mut buf);

    let edge_lo = last as f64 * dy;
    let edge_w = kernel.profile(edge_lo);
    // Euler–Maclaurin end correction of the lattice sum over [-KΔ, KΔ]
    let fd = 1e-5 * dy;
    let slope = if last > 0 {
        (kernel.profile(edge_lo + fd) - kernel.profile(edge_lo - fd)) / (2.0 * fd)
    } else {
        0.0
    };
    let end_term = |hf: f64| {
        if last == 0 {
            return 0.0;
        }
        let df = slope * (hf * edge_lo).cos() - hf * edge_w * (hf * edge_lo).sin();
        dy * dy / 6.0 * df
    };
    let (x, w) = &*GL16;
    let (mid, half) = (0.5 * (edge_lo + delta), 0.5 * (delta - edge_lo));
    Ok((0..=max_h)
        .map(|h| {
            let hf = h as f64;
            let edge: f64 = half
                * x.iter()
                    .zip(w)
                    .map(|(xi, wi)| {
                        let y = mid + half * xi;
                        wi * kernel.profile(y) * (hf * y).cos()
                    })
                    .sum::<f64>();
            let lattice = dy * buf[h % m].re;
            lattice + 2.0 * edge - dy * edge_w * (hf * edge_lo).cos() - end_term(hf)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn legendre_rule_is_exact_for_degree_31() {
        let (x, w) = gauss_legendre_rule(16);
        close(w.iter().sum::<f64>(), 2.0, 1e-14);
        let m30: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(30)).sum();
        close(m30, 2.0 / 31.0, 1e-14);
    }

    #[test]
    fn adaptive_integration() {
        close(integrate(|x| x.exp(), 0.0, 1.0, 1e-13), std::f64::consts::E - 1.0, 1e-13);
        close(integrate(|x| x.sqrt(), 0.0, 1.0, 1e-12), 2.0 / 3.0, 1e-11);
        close(integrate_panels(|x| (50.0 * x).cos(), 0.0, PI, 20, 1e-13), 0.0, 1e-12);
    }

    #[test]
    fn vector_quadrature_matches_scalar() {
        let mut q = VectorQuadrature::new(3);
        let mut acc = vec![0.0; 3];
        q.integrate(
            |x, out| {
                out[0] = 1.0;
                out[1] = x.sin();
                out[2] = (7.0 * x).cos() * x;
            },
            0.0,
            2.0,
            1,
            1e-13,
            &mut acc,
        );
        close(acc[0], 2.0, 1e-14);
        close(acc[1], 1.0 - 2f64.cos(), 1e-13);
        close(acc[2], integrate(|x| (7.0 * x).cos() * x, 0.0, 2.0, 1e-14), 1e-13);
    }

    #[test]
    fn uniform_mesh_nodes() {
        let m = uniform_mesh(0.0, 2.0 * PI, 4).unwrap();
        assert_eq!(m.kind, MeshKind::UniformPeriodic);
        let expect = [0.0, PI / 2.0, PI, 1.5 * PI, 2.0 * PI];
        for (a, b) in m.nodes.iter().zip(expect) {
            close(*a, b, 1e-15);
        }
        assert_eq!(uniform_mesh(0.0, 2.0 * PI, 2).unwrap().nodes.len(), 3);
        assert!(uniform_mesh(0.0, 2.0 * PI, 3).is_err());
        assert!(uniform_mesh(0.0, 2.0 * PI, 0).is_err());
        assert!(uniform_mesh(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn gcl_mesh_nodes() {
        let m = gcl_mesh(2).unwrap();
        close(m.nodes[0], 0.0, 0.0);
        close(m.nodes[1], PI, 1e-15);
        close(m.nodes[2], 2.0 * PI, 0.0);
        let m = gcl_mesh(4).unwrap();
        close(m.nodes[1], 0.92015, 1e-5);
        close(m.nodes[3], 5.36304, 1e-5);
        assert!(m.nodes.windows(2).all(|p| p[0] < p[1]));
        assert!(gcl_mesh(1).is_err());
    }

    #[test]
    fn periodic_trapezoid() {
        close(trapezoid_periodic(&[1.0; 7], 2.0 * PI).unwrap(), 2.0 * PI, 1e-15);
        let n = 16;
        let cos: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
        close(trapezoid_periodic(&cos, 2.0 * PI).unwrap(), 0.0, 1e-14);
        let n = 32;
        let e: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).sin().exp()).collect();
        let oracle = integrate(|x| x.sin().exp(), 0.0, 2.0 * PI, 1e-14);
        close(trapezoid_periodic(&e, 2.0 * PI).unwrap(), oracle, 1e-12);
        assert!(trapezoid_periodic(&[], 1.0).is_err());
    }

    #[test]
    fn trapezoid_exact_for_low_trig_polynomials() {
        let n = 12;
        for deg in 1..n / 2 {
            let v: Vec<f64> = (0..n)
                .map(|j| {
                    let x = 2.0 * PI * j as f64 / n as f64;
                    (deg as f64 * x).cos() + 0.5 * (deg as f64 * x).sin() + 0.25
                })
                .collect();
            close(trapezoid_periodic(&v, 2.0 * PI).unwrap(), 0.25 * 2.0 * PI, 1e-13);
        }
    }

    #[test]
    fn gauss_chebyshev_moments() {
        let dom = Interval::periodic_cell();
        let n = 8;
        let nodes = gauss_chebyshev_nodes(n, dom);
        let t = |k: f64, x: f64| (k * ((x - PI) / PI).clamp(-1.0, 1.0).acos()).cos();
        let one = vec![1.0; n];
        close(gauss_chebyshev(&one, dom).unwrap(), PI * PI, 1e-12);
        let t2: Vec<f64> = nodes.iter().map(|&x| t(2.0, x)).collect();
        close(gauss_chebyshev(&t2, dom).unwrap(), 0.0, 1e-12);
        let t3sq: Vec<f64> = nodes.iter().map(|&x| t(3.0, x).powi(2)).collect();
        close(gauss_chebyshev(&t3sq, dom).unwrap(), PI * PI / 2.0, 1e-12);
        assert!(gauss_chebyshev(&[], dom).is_err());
    }

    #[test]
    fn cosine_transform_of_benchmark_kernel() {
        let k = Micromodulus::benchmark(3.0);
        let g = cosine_transform_kernel(&k, 20, DEFAULT_OVERSAMPLE).unwrap();
        close(g[0], k.beta(), 1e-8);
        close(g[1], 3.1153, 5e-4);
        close(g[1], k.beta() - k.fourier_multiplier(1.0).lambda, 1e-9);
        assert!(g.iter().all(|&v| v <= k.beta() + 1e-12));
    }

    #[test]
    fn cosine_transform_of_zero_and_wrapped_kernels() {
        let zero = Micromodulus::top_hat(0.0, 1.0).unwrap();
        assert!(cosine_transform_kernel(&zero, 5, 8).unwrap().iter().all(|&v| v == 0.0));
        // tophat over exactly one period: periodised kernel is constant
        let full = Micromodulus::top_hat(1.0, PI).unwrap();
        let g = cosine_transform_kernel(&full, 4, 8).unwrap();
        close(g[0], 2.0 * PI, 1e-12);
        for v in &g[1..] {
            close(*v, 0.0, 1e-12);
        }
        // horizon wider than the cell
        let wide = Micromodulus::top_hat(1.0, 4.0).unwrap();
        let g = cosine_transform_kernel(&wide, 3, 8).unwrap();
        for (h, v) in g.iter().enumerate() {
            let exact = if h == 0 { 8.0 } else { 2.0 * (4.0 * h as f64).sin() / h as f64 };
            close(*v, exact, 1e-10);
        }
        assert!(cosine_transform_kernel(&full, 4, 0).is_err());
    }

    #[test]
    fn cosine_transform_with_tiny_horizon() {
        let k = Micromodulus::gaussian(4.0 / PI.sqrt(), 1.0, 1e-6).unwrap();
        let g = cosine_transform_kernel(&k, 2, 8).unwrap();
        close(g[0], k.beta(), 1e-14);
    }
}
