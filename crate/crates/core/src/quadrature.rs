//! Expectations over a standard normal variable `z`, written `∫Dz f(z)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Half-width of the truncated domain used by the adaptive rule. The
/// Gaussian tail mass beyond it is below `1e-38`.
pub const TRUNCATION: f64 = 13.0;

pub const MAX_HERMITE_NODES: usize = 500;

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Nodes and weights of an n-point rule for the standard normal measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * f(z)).sum()
    }
}

/// Gauss–Hermite rule for weight `φ(z)`, exact for polynomials of degree
/// `2n - 1`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix of the
/// probabilists' Hermite polynomials and are refined by Newton steps;
/// weights use the Christoffel function, which is accurate where
/// eigenvector components are not.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_HERMITE_NODES {
        return Err(Error::param(
            "nodes",
            format!("Gauss-Hermite order must be in 1..={MAX_HERMITE_NODES}, got {n}"),
        ));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(n);
    for z in &mut nodes {
        for _ in 0..3 {
            let (p_n, p_prev, _) = orthonormal_hermite(n, *z);
            let step = p_n / ((n as f64).sqrt() * p_prev);
            if step.is_finite() {
                *z -= step;
            }
        }
        let (_, _, log_christoffel) = orthonormal_hermite(n, *z);
        weights.push((-log_christoffel).exp());
    }
    // the spectrum is symmetric; enforce it exactly
    for i in 0..n / 2 {
        let z = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Returns `(p_n, p_{n-1}, ln Σ_{k<n} p_k²)` for the orthonormal
/// probabilists' Hermite family at `z`. The first two share an arbitrary
/// common scale; rescaling keeps large `n` and `|z|` in range.
fn orthonormal_hermite(n: usize, z: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sum = 0.0;
    let mut log_scale = 0.0;
    for k in 0..n {
        sum += cur * cur;
        let next = (z * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            prev *= 1e-100;
            cur *= 1e-100;
            sum *= 1e-200;
            log_scale += 200.0 * std::f64::consts::LN_10;
        }
    }
    (cur, prev, sum.ln() + log_scale)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

/// One Gauss–Kronrod 7/15 panel: (Kronrod estimate, |Kronrod - Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH || b - a < 1e-12 {
        return value;
    }
    let c = 0.5 * (a + b);
    adaptive(f, a, c, 0.5 * tol, depth + 1) + adaptive(f, c, b, 0.5 * tol, depth + 1)
}

/// Numerical rule for `∫Dz f(z)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GaussianIntegrator {
    /// Adaptive Gauss–Kronrod on `[-13, 13]` with absolute tolerance `tol`.
    Adaptive { tol: f64 },
    Hermite(QuadratureRule),
}

impl Default for GaussianIntegrator {
    fn default() -> Self {
        GaussianIntegrator::Adaptive { tol: 1e-14 }
    }
}

impl GaussianIntegrator {
    pub fn hermite(n: usize) -> Result<Self> {
        gauss_hermite(n).map(GaussianIntegrator::Hermite)
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.expect_with_breaks(f, &[])
    }

    /// Like [`expect`](Self::expect), but the adaptive rule splits the
    /// domain at `breaks`, where the integrand changes fastest.
    pub fn expect_with_breaks(&self, f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
        match self {
            GaussianIntegrator::Hermite(rule) => rule.integrate(f),
            GaussianIntegrator::Adaptive { tol } => {
                let g = |z: f64| f(z) * std_normal_pdf(z);
                let mut points = vec![-TRUNCATION];
                let mut inner: Vec<f64> = breaks
                    .iter()
                    .copied()
                    .filter(|b| b.abs() < TRUNCATION)
                    .collect();
                inner.sort_by(f64::total_cmp);
                points.extend(inner);
                points.push(TRUNCATION);
                let panels = (points.len() - 1) as f64;
                points
                    .windows(2)
                    .map(|w| adaptive(&g, w[0], w[1], tol / panels, 0))
                    .sum()
            }
        }
    }
}

impl fmt::Display for GaussianIntegrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaussianIntegrator::Adaptive { tol } => write!(f, "adaptive:{tol:e}"),
            GaussianIntegrator::Hermite(rule) => write!(f, "hermite:{}", rule.len()),
        }
    }
}

/// Parses `adaptive`, `adaptive:<tol>` or `hermite:<nodes>`.
impl FromStr for GaussianIntegrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("quad", format!("expected adaptive[:tol] or hermite:N, got `{s}`"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (kind, arg) {
            ("adaptive", None) => Ok(GaussianIntegrator::default()),
            ("adaptive", Some(a)) => {
                let tol: f64 = a.parse().map_err(|_| bad())?;
                if !(tol > 0.0 && tol.is_finite()) {
                    return Err(bad());
                }
                Ok(GaussianIntegrator::Adaptive { tol })
            }
            ("hermite", Some(a)) => GaussianIntegrator::hermite(a.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}
