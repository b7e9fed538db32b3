use rand::Rng;

use crate::error::{Error, Result};

/// Negative binomial on `{0, 1, …}` with pmf `C(x+n−1, x) pᶰ (1−p)ˣ`,
/// sampled by inverse transform on a precomputed cumulative table.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeBinomial {
    size: u64,
    prob: f64,
    cdf: Vec<f64>,
}

/// Tail mass below which the cumulative table stops growing.
const TAIL_EPS: f64 = 1e-16;

impl NegativeBinomial {
    pub fn new(size: u64, prob: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig(
                "negative binomial size must be positive".into(),
            ));
        }
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "negative binomial probability must lie in (0, 1), got {prob}"
            )));
        }
        let n = size as f64;
        let mut pmf = (n * prob.ln()).exp();
        if pmf == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "P(X = 0) underflows for size {size} and probability {prob}"
            )));
        }
        let mean = n * (1.0 - prob) / prob;
        let mut cdf = vec![pmf];
        let mut total = pmf;
        let mut x = 0.0;
        // P(x+1) = P(x) (1−p)(x+n)/(x+1)
        while 1.0 - total > TAIL_EPS && (x < mean || pmf > 0.0) {
            pmf *= (1.0 - prob) * (x + n) / (x + 1.0);
            x += 1.0;
            total += pmf;
            cdf.push(total);
            if cdf.len() > 50_000_000 {
                break;
            }
        }
        Ok(Self { size, prob, cdf })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn mean(&self) -> f64 {
        self.size as f64 * (1.0 - self.prob) / self.prob
    }

    pub fn variance(&self) -> f64 {
        self.mean() / self.prob
    }

    pub fn pmf(&self, x: u64) -> f64 {
        let x = x as usize;
        match x {
            0 => self.cdf[0],
            _ if x < self.cdf.len() => self.cdf[x] - self.cdf[x - 1],
            _ => 0.0,
        }
    }

    /// Smallest `x` with `F(x) >= u` for one uniform draw `u`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c < u);
        idx.min(self.cdf.len() - 1) as u64
    }
}
