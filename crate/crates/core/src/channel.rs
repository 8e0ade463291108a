use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::spreading::Matrix;

/// One channel use: `y = N^{-1/2} S x0 + σ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spreading: Matrix,
    /// Transmitted bits, each `±1`.
    pub input: Vec<f64>,
    /// Standard normal noise, before scaling by `σ`.
    pub noise: Vec<f64>,
    pub received: Vec<f64>,
    pub sigma2: f64,
}

impl Instance {
    pub fn users(&self) -> usize {
        self.spreading.cols()
    }

    pub fn chips(&self) -> usize {
        self.spreading.rows()
    }
}

/// Builds the received vector from an explicit noise realization.
pub fn channel_output_with_noise(
    spreading: Matrix,
    input: Vec<f64>,
    sigma2: f64,
    noise: Vec<f64>,
) -> Result<Instance> {
    if input.len() != spreading.cols() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} bits but S has {} columns",
            input.len(),
            spreading.cols()
        )));
    }
    if noise.len() != spreading.rows() {
        return Err(Error::DimensionMismatch(format!(
            "noise has {} samples but S has {} rows",
            noise.len(),
            spreading.rows()
        )));
    }
    if input.iter().any(|&x| x != 1.0 && x != -1.0) {
        return Err(Error::param("x0", "bits must be +1 or -1"));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::param("sigma2", format!("must be finite and > 0, got {sigma2}")));
    }
    let scale = 1.0 / (spreading.rows() as f64).sqrt();
    let sigma = sigma2.sqrt();
    let signal = spreading.mul_vec(&input);
    let received = signal
        .iter()
        .zip(&noise)
        .map(|(s, n)| scale * s + sigma * n)
        .collect();
    Ok(Instance {
        spreading,
        input,
        noise,
        received,
        sigma2,
    })
}

/// Draws fresh standard normal noise from `rng`.
pub fn channel_output_rng<R: Rng + ?Sized>(
    spreading: Matrix,
    input: Vec<f64>,
    sigma2: f64,
    rng: &mut R,
) -> Result<Instance> {
    let noise = (0..spreading.rows()).map(|_| rng.sample(StandardNormal)).collect();
    channel_output_with_noise(spreading, input, sigma2, noise)
}

pub fn channel_output(
    spreading: Matrix,
    input: Vec<f64>,
    sigma2: f64,
    seed: u64,
) -> Result<Instance> {
    let mut rng = stream_rng(seed, 1);
    channel_output_rng(spreading, input, sigma2, &mut rng)
}
