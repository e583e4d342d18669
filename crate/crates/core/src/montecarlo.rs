//! Seeded Monte Carlo estimates of event probabilities and average rates.
//!
//! Trials are cut into fixed blocks of [`BLOCK_TRIALS`]. Block `b` draws from
//! ChaCha8 seeded with the master seed on stream `b`, so every trial's
//! randomness depends only on `(seed, trial index)`. Shards are contiguous
//! runs of blocks; per-block partial results are merged in block order, which
//! makes the output independent of the shard count and of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::analytic::{EventProbabilities, Method};
use crate::error::{Error, Result};
use crate::events::classify_full;
use crate::order_stats::{PairSampler, PairingConfig};
use crate::regions::{noma_rate_pair, tdma_rate_pair, PowerSplit, TimeSplit};

pub const BLOCK_TRIALS: u64 = 1 << 14;

/// Recorded in run manifests so results can be tied to the stream layout.
pub const GENERATOR_ID: &str = "chacha8 (rand_chacha 0.9), seed_from_u64(seed), stream = block index, 16384 trials per block";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    trials: u64,
    seed: u64,
    shards: usize,
}

impl McConfig {
    /// `trials` is rounded up to a multiple of `shards`; see [`McConfig::trials`].
    pub fn new(trials: u64, seed: u64, shards: usize) -> Result<Self> {
        if trials == 0 || shards == 0 {
            return Err(Error::InvalidArgument(format!(
                "need trials >= 1 and shards >= 1, got trials={trials}, shards={shards}"
            )));
        }
        let trials = trials.div_ceil(shards as u64) * shards as u64;
        Ok(Self { trials, seed, shards })
    }

    /// Actual number of trials run.
    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shards(&self) -> usize {
        self.shards
    }

    fn blocks(&self) -> u64 {
        self.trials.div_ceil(BLOCK_TRIALS)
    }

    fn block_len(&self, block: u64) -> u64 {
        (self.trials - block * BLOCK_TRIALS).min(BLOCK_TRIALS)
    }

    fn rng(&self, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block);
        rng
    }

    /// Runs `per_block` on every block, shard by shard, returning block results in order.
    fn run_blocks<T, F>(&self, per_block: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, u64, &mut ChaCha8Rng) -> T + Sync,
    {
        let blocks = self.blocks();
        let per_shard = blocks.div_ceil(self.shards as u64);
        let shards: Vec<Vec<T>> = (0..self.shards as u64)
            .into_par_iter()
            .map(|shard| {
                let start = (shard * per_shard).min(blocks);
                let end = ((shard + 1) * per_shard).min(blocks);
                (start..end)
                    .map(|b| per_block(b, self.block_len(b), &mut self.rng(b)))
                    .collect()
            })
            .collect();
        shards.into_iter().flatten().collect()
    }
}

/// Running mean and sum of squared deviations (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / total as f64;
        self.count = total;
    }

    fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        }
    }
}

/// Mean per-user rates of NOMA and TDMA over the fading distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageRates {
    pub r1_noma: f64,
    pub r2_noma: f64,
    pub r1_tdma: f64,
    pub r2_tdma: f64,
    /// Standard errors in the order above.
    pub stderr: [f64; 4],
    pub trials: u64,
}

/// Exact (Clopper-Pearson) two-sided 95% interval for `hits` out of `trials`.
pub fn clopper_pearson(hits: u64, trials: u64) -> [f64; 2] {
    let alpha = 0.05;
    let (k, n) = (hits as f64, trials as f64);
    let lower = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).map_or(0.0, |b| b.inverse_cdf(alpha / 2.0))
    };
    let upper = if hits == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).map_or(1.0, |b| b.inverse_cdf(1.0 - alpha / 2.0))
    };
    [lower, upper]
}

/// Whether `sqrt(p(1-p)/N)` is an acceptable error bar.
pub fn normal_approx_ok(p: f64, trials: u64) -> bool {
    let n = trials as f64;
    trials >= 10_000 && p > 10.0 / n && p < 1.0 - 10.0 / n
}

/// Empirical event frequencies over `mc.trials()` sampled channel pairs.
pub fn estimate_event_probs(cfg: &PairingConfig, a2: f64, b2: f64, mc: &McConfig) -> Result<EventProbabilities> {
    let power = PowerSplit::noma(a2)?;
    let time = TimeSplit::new(b2)?;
    let blocks = mc.run_blocks(|_, len, rng| -> Result<[u64; 4]> {
        let mut sampler = PairSampler::new(*cfg);
        let mut counts = [0u64; 4];
        for _ in 0..len {
            let ch = sampler.sample(rng);
            counts[classify_full(&ch, &power, &time)?.index()] += 1;
        }
        Ok(counts)
    });
    let mut counts = [0u64; 4];
    for block in blocks {
        for (c, b) in counts.iter_mut().zip(block?) {
            *c += b;
        }
    }
    let n = mc.trials();
    let p = counts.map(|c| c as f64 / n as f64);
    let stderr = p.map(|p| (p * (1.0 - p) / n as f64).sqrt());
    let interval = if p.iter().all(|&p| normal_approx_ok(p, n)) {
        None
    } else {
        Some(counts.map(|c| clopper_pearson(c, n)))
    };
    Ok(EventProbabilities {
        p,
        method: Method::MonteCarlo,
        stderr: Some(stderr),
        interval,
        trials: Some(n),
    })
}

/// Averages the NOMA and TDMA rate pairs over sampled channel pairs.
pub fn estimate_average_rates(cfg: &PairingConfig, a2: f64, b2: f64, mc: &McConfig) -> Result<AverageRates> {
    let power = PowerSplit::noma(a2)?;
    let time = TimeSplit::new(b2)?;
    let blocks = mc.run_blocks(|_, len, rng| -> Result<[Moments; 4]> {
        let mut sampler = PairSampler::new(*cfg);
        let mut acc = [Moments::default(); 4];
        for _ in 0..len {
            let ch = sampler.sample(rng);
            let n = noma_rate_pair(&ch, &power)?;
            let t = tdma_rate_pair(&ch, &time);
            for (m, v) in acc.iter_mut().zip([n.r1, n.r2, t.r1, t.r2]) {
                m.push(v);
            }
        }
        Ok(acc)
    });
    let mut total = [Moments::default(); 4];
    for block in blocks {
        for (t, b) in total.iter_mut().zip(block?) {
            t.merge(&b);
        }
    }
    Ok(AverageRates {
        r1_noma: total[0].mean,
        r2_noma: total[1].mean,
        r1_tdma: total[2].mean,
        r2_tdma: total[3].mean,
        stderr: total.map(|m| m.stderr()),
        trials: mc.trials(),
    })
}
