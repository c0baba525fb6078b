//! Micromodulus functions, their zeroth moment `β` and exact Fourier multipliers.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature;

/// Absolute tolerance of the kernel moment quadratures.
pub const ORACLE_TOL: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;

/// Linearly interpolated kernel samples on a grid symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    offsets: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("tabulated kernel needs at least two samples"));
        }
        let (offsets, values): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        if offsets.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("tabulated kernel has non-finite entries"));
        }
        if !offsets.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("tabulated kernel offsets must be strictly increasing"));
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(invalid(format!("tabulated kernel has negative value {v}")));
        }
        let n = offsets.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            if (offsets[i] + offsets[j]).abs() > SYMMETRY_TOL || (values[i] - values[j]).abs() > SYMMETRY_TOL {
                return Err(invalid(format!(
                    "tabulated kernel is not even: C({}) = {} but C({}) = {}",
                    offsets[i], values[i], offsets[j], values[j]
                )));
            }
        }
        if n % 2 == 1 && offsets[n / 2].abs() > SYMMETRY_TOL {
            return Err(invalid("tabulated kernel with an odd sample count must contain y = 0"));
        }
        Ok(Self { offsets, values })
    }

    /// Reads a two-column `offset,value` CSV. Lines starting with `#` are skipped.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| invalid(format!("cannot read kernel table {}: {e}", path.display())))?;
        let mut samples = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| invalid(format!("kernel table {}: {e}", path.display())))?;
            if record.len() != 2 {
                return Err(invalid(format!("kernel table row {}: expected 2 columns", line + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| invalid(format!("kernel table row {}: bad number {s:?}", line + 1)))
            };
            samples.push((parse(&record[0])?, parse(&record[1])?));
        }
        Self::new(samples)
    }

    fn interpolate(&self, y: f64) -> f64 {
        let (xs, vs) = (&self.offsets, &self.values);
        if y < xs[0] || y > xs[xs.len() - 1] {
            return 0.0;
        }
        let i = xs.partition_point(|&x| x <= y).clamp(1, xs.len() - 1);
        let t = (y - xs[i - 1]) / (xs[i] - xs[i - 1]);
        vs[i - 1] + t * (vs[i] - vs[i - 1])
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.offsets.iter().copied().zip(self.values.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `amplitude · exp(-(y/width)²)`
    Gaussian { amplitude: f64, width: f64 },
    TopHat { height: f64 },
    Tabulated(Table),
}

/// Even, nonnegative micromodulus `C` with hard cutoff at the horizon `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Micromodulus {
    family: KernelFamily,
    delta: f64,
}

/// One point `(ν, λ(ν))` of the multiplier curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSample {
    pub nu: f64,
    pub lambda: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid(format!("horizon delta must be positive, got {delta}")));
    }
    Ok(())
}

impl Micromodulus {
    pub fn gaussian(amplitude: f64, width: f64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(amplitude.is_finite() && amplitude >= 0.0) || !(width.is_finite() && width > 0.0) {
            return Err(invalid(format!("gaussian kernel needs amplitude >= 0 and width > 0, got {amplitude}, {width}")));
        }
        Ok(Self { family: KernelFamily::Gaussian { amplitude, width }, delta })
    }

    pub fn top_hat(height: f64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(height.is_finite() && height >= 0.0) {
            return Err(invalid(format!("tophat height must be >= 0, got {height}")));
        }
        Ok(Self { family: KernelFamily::TopHat { height }, delta })
    }

    pub fn tabulated(table: Table, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { family: KernelFamily::Tabulated(table), delta })
    }

    /// The benchmark kernel `4 e^{-y²} / √π` truncated at `delta`.
    pub fn benchmark(delta: f64) -> Self {
        Self::gaussian(4.0 / PI.sqrt(), 1.0, delta).expect("benchmark kernel parameters are valid")
    }

    /// Parses `gaussian:<amplitude>:<width>`, `tophat:<height>` or
    /// `table:<path-to-csv>`.
    pub fn from_spec(spec: &str, delta: f64) -> Result<Self> {
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| invalid(format!("kernel spec {spec:?}: bad number {s:?}")))
        };
        let (kind, rest) = spec.split_once(':').ok_or_else(|| invalid(format!("kernel spec {spec:?}: missing ':'")))?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "gaussian" => {
                let (a, w) = rest
                    .split_once(':')
                    .ok_or_else(|| invalid(format!("kernel spec {spec:?}: expected gaussian:<amplitude>:<width>")))?;
                Self::gaussian(num(a)?, num(w)?, delta)
            }
            "tophat" => Self::top_hat(num(rest)?, delta),
            "table" => Self::tabulated(Table::from_csv(Path::new(rest))?, delta),
            other => Err(invalid(format!("unknown kernel family {other:?}"))),
        }
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Same family with a different horizon.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { family: self.family.clone(), delta })
    }

    /// Kernel shape without the horizon cutoff.
    pub(crate) fn profile(&self, y: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { amplitude, width } => {
                let s = y / width;
                amplitude * (-s * s).exp()
            }
            KernelFamily::TopHat { height } => *height,
            KernelFamily::Tabulated(t) => t.interpolate(y),
        }
    }

    pub fn evaluate(&self, y: f64) -> f64 {
        if y.abs() > self.delta {
            0.0
        } else {
            self.profile(y)
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            KernelFamily::Gaussian { amplitude, .. } => *amplitude == 0.0,
            KernelFamily::TopHat { height } => *height == 0.0,
            KernelFamily::Tabulated(t) => t.values.iter().all(|v| *v == 0.0),
        }
    }

    /// Points in `(0, δ)` where the integrand of a moment may lose smoothness.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        if let KernelFamily::Tabulated(t) = &self.family {
            pts.extend(t.offsets.iter().copied().filter(|&x| x > 0.0 && x < self.delta));
        }
        pts.push(self.delta);
        pts
    }

    /// `2 ∫_0^δ f(y) dy` for an even integrand, split at table nodes.
    fn even_moment<F: Fn(f64) -> f64>(&self, f: F, panels_per_unit: f64) -> f64 {
        let pts = self.breakpoints();
        let mut total = 0.0;
        for w in pts.windows(2) {
            let panels = ((w[1] - w[0]) * panels_per_unit).ceil().max(1.0) as usize;
            total += quadrature::integrate_panels(&f, w[0], w[1], panels, 0.5 * ORACLE_TOL / pts.len() as f64);
        }
        2.0 * total
    }

    /// `β = ∫_{-δ}^{δ} C(y) dy`.
    pub fn beta(&self) -> f64 {
        self.even_moment(|y| self.profile(y), 1.0)
    }

    /// `λ(ν) = ∫_{-δ}^{δ} C(y)(1 - cos νy) dy`.
    pub fn fourier_multiplier(&self, nu: f64) -> MultiplierSample {
        let lambda = if nu == 0.0 {
            0.0
        } else {
            // 1 - cos(νy) = 2 sin²(νy/2), no cancellation near ν = 0
            self.even_moment(
                |y| {
                    let s = (0.5 * nu * y).sin();
                    2.0 * self.profile(y) * s * s
                },
                nu.abs() / PI + 1.0,
            )
        };
        MultiplierSample { nu, lambda }
    }

    /// Equispaced multiplier samples on `[nu_min, nu_max]`, endpoints included.
    pub fn multiplier_curve(&self, nu_min: f64, nu_max: f64, count: usize) -> Result<Vec<MultiplierSample>> {
        if count < 2 {
            return Err(invalid(format!("multiplier curve needs count >= 2, got {count}")));
        }
        if !(nu_min < nu_max) {
            return Err(invalid(format!("multiplier curve needs nu_min < nu_max, got [{nu_min}, {nu_max}]")));
        }
        let step = (nu_max - nu_min) / (count - 1) as f64;
        Ok((0..count)
            .map(|i| {
                let nu = if i + 1 == count { nu_max } else { nu_min + step * i as f64 };
                self.fourier_multiplier(nu)
            })
            .collect())
    }
}
