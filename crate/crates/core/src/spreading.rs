use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

const TABLE_TOLERANCE: f64 = 1e-12;

/// Column-major `N × K` real matrix; column `k` is the signature of user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from column-major data.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[col * self.rows + row] = value;
    }

    pub fn col(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn col_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self · v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (c, &vc) in v.iter().enumerate() {
            if vc != 0.0 {
                for (o, s) in out.iter_mut().zip(self.col(c)) {
                    *o += s * vc;
                }
            }
        }
        out
    }

    /// `selfᵀ · v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|c| dot(self.col(c), v)).collect()
    }

    /// `selfᵀ · self`, row-major `K × K`.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.cols;
        let mut g = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let v = dot(self.col(a), self.col(b));
                g[a * k + b] = v;
                g[b * k + a] = v;
            }
        }
        g
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A finite symmetric law on the real line with unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTable {
    values: Vec<f64>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl SymmetricTable {
    /// Accepts `(value, probability)` atoms. Rejects tables that are not
    /// symmetric under `s → -s` or whose variance differs from 1.
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("empty table".into()));
        }
        let mut atoms: Vec<(f64, f64)> = atoms.to_vec();
        if atoms.iter().any(|&(v, p)| !v.is_finite() || !(p >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "values must be finite and probabilities non-negative".into(),
            ));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // merge duplicated support points
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > TABLE_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        for &(v, p) in &merged {
            let mirror: f64 = merged
                .iter()
                .filter(|a| (a.0 + v).abs() <= TABLE_TOLERANCE)
                .map(|a| a.1)
                .sum();
            if (mirror - p).abs() > TABLE_TOLERANCE {
                return Err(Error::AsymmetricDistribution(format!(
                    "p({v}) = {p} but p({}) = {mirror}",
                    -v
                )));
            }
        }
        let variance: f64 = merged.iter().map(|&(v, p)| p * v * v).sum();
        if (variance - 1.0).abs() > TABLE_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "variance is {variance}, expected 1"
            )));
        }
        let mut acc = 0.0;
        let cdf = merged
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Ok(SymmetricTable {
            values: merged.iter().map(|a| a.0).collect(),
            probs: merged.iter().map(|a| a.1).collect(),
            cdf,
        })
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    fn quantile(&self, u: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c < u);
        self.values[idx.min(self.values.len() - 1)]
    }
}

/// Law of the i.i.d. spreading chips. All variants are symmetric with unit
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub enum SpreadingDistribution {
    GaussianUnit,
    BinaryPm1,
    /// Uniform on `[-√3, √3]`.
    UniformSymmetric,
    Custom(SymmetricTable),
}

impl SpreadingDistribution {
    /// Maps a standard normal draw to this law by the quantile transform.
    /// Every variant is driven by the same normal stream, which couples
    /// experiments that compare distributions under one seed.
    pub fn transform(&self, g: f64) -> f64 {
        match self {
            SpreadingDistribution::GaussianUnit => g,
            SpreadingDistribution::BinaryPm1 => {
                if g < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            SpreadingDistribution::UniformSymmetric => 3f64.sqrt() * (2.0 * normal_cdf(g) - 1.0),
            SpreadingDistribution::Custom(table) => table.quantile(normal_cdf(g)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        self.transform(g)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpreadingDistribution::GaussianUnit => "gaussian",
            SpreadingDistribution::BinaryPm1 => "binary",
            SpreadingDistribution::UniformSymmetric => "uniform",
            SpreadingDistribution::Custom(_) => "custom",
        }
    }

    /// Fills an `N × K` matrix, user by user, from `rng`.
    pub fn fill<R: Rng + ?Sized>(&self, users: usize, chips: usize, rng: &mut R) -> Matrix {
        let mut s = Matrix::zeros(chips, users);
        for k in 0..users {
            for v in s.col_mut(k) {
                *v = self.sample(rng);
            }
        }
        s
    }
}

impl fmt::Display for SpreadingDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpreadingDistribution {
    type Err = Error;

    /// `gaussian`, `binary`, `uniform`, or `custom:v1@p1;v2@p2;...`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian-unit" => Ok(SpreadingDistribution::GaussianUnit),
            "binary" | "binary-pm1" => Ok(SpreadingDistribution::BinaryPm1),
            "uniform" | "uniform-symmetric" => Ok(SpreadingDistribution::UniformSymmetric),
            other => {
                let body = other.strip_prefix("custom:").ok_or_else(|| {
                    Error::InvalidDistribution(format!("unknown spreading distribution `{other}`"))
                })?;
                let atoms = body
                    .split(';')
                    .map(|atom| {
                        let (v, p) = atom.split_once('@').ok_or_else(|| {
                            Error::InvalidDistribution(format!("atom `{atom}` is not value@prob"))
                        })?;
                        let parse = |x: &str| {
                            x.trim().parse::<f64>().map_err(|e| {
                                Error::InvalidDistribution(format!("`{x}`: {e}"))
                            })
                        };
                        Ok((parse(v)?, parse(p)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SpreadingDistribution::Custom(SymmetricTable::new(&atoms)?))
            }
        }
    }
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Draws an `N × K` spreading matrix. The same seed always yields the same
/// matrix.
pub fn sample_spreading(
    dist: &SpreadingDistribution,
    users: usize,
    chips: usize,
    seed: u64,
) -> Result<Matrix> {
    if users == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    if chips == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    let mut rng = stream_rng(seed, 0);
    Ok(dist.fill(users, chips, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(dist: &SpreadingDistribution) -> (f64, f64, f64) {
        let s = sample_spreading(dist, 1000, 1000, 1).unwrap();
        let n = s.as_slice().len() as f64;
        // raw moments; the true mean is zero
        let mean = s.as_slice().iter().sum::<f64>() / n;
        let var = s.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
        let m4 = s.as_slice().iter().map(|v| v.powi(4)).sum::<f64>() / n;
        (mean, var, m4)
    }

    #[test]
    fn binary_support() {
        let s = sample_spreading(&SpreadingDistribution::BinaryPm1, 2, 2, 7).unwrap();
        assert!(s.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn unit_variance_within_five_standard_errors() {
        for dist in [
            SpreadingDistribution::GaussianUnit,
            SpreadingDistribution::BinaryPm1,
            SpreadingDistribution::UniformSymmetric,
        ] {
            let (mean, var, m4) = moments(&dist);
            let n: f64 = 1e6;
            assert!(mean.abs() < 5.0 / n.sqrt(), "{dist}: mean {mean}");
            // SE of the sample variance is sqrt((m4 - 1)/n)
            let se = ((m4 - var * var) / n).sqrt().max(1e-9);
            assert!((var - 1.0).abs() < 5.0 * se, "{dist}: var {var} se {se}");
        }
    }

    #[test]
    fn same_seed_same_matrix() {
        let d = SpreadingDistribution::UniformSymmetric;
        assert_eq!(
            sample_spreading(&d, 5, 7, 42).unwrap(),
            sample_spreading(&d, 5, 7, 42).unwrap()
        );
        assert_ne!(
            sample_spreading(&d, 5, 7, 42).unwrap(),
            sample_spreading(&d, 5, 7, 43).unwrap()
        );
    }

    #[test]
    fn asymmetric_table_is_rejected() {
        let err = SymmetricTable::new(&[(1.0, 0.7), (-1.0, 0.3)]).unwrap_err();
        assert!(matches!(err, Error::AsymmetricDistribution(_)));
        assert!(err.to_string().contains("asymmetric distribution"));
    }

    #[test]
    fn table_with_wrong_variance_is_rejected() {
        let err = SymmetricTable::new(&[(2.0, 0.5), (-2.0, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
    }

    #[test]
    fn custom_table_samples_its_atoms() {
        // three-point law: 0 w.p. 1/2, ±√2 w.p. 1/4
        let r2 = 2f64.sqrt();
        let d: SpreadingDistribution = format!("custom:{}@0.25;0@0.5;{}@0.25", -r2, r2)
            .parse()
            .unwrap();
        let s = sample_spreading(&d, 200, 200, 3).unwrap();
        let zeros = s.as_slice().iter().filter(|&&v| v == 0.0).count() as f64 / 40_000.0;
        assert!((zeros - 0.5).abs() < 0.02);
        assert!(s.as_slice().iter().all(|&v| v == 0.0 || (v.abs() - r2).abs() < 1e-15));
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "binary".parse::<SpreadingDistribution>().unwrap(),
            SpreadingDistribution::BinaryPm1
        );
        assert!("laplace".parse::<SpreadingDistribution>().is_err());
    }
}
