//! Sampling of gbAR(p) sequences and the on-disk bit-stream format.
//!
//! Randomness comes from ChaCha20 seeded with a 64-bit seed, so a
//! `GeneratorConfig` fully determines its output. Each step draws one uniform
//! variate for the multinomial selector `(|alpha_1|, ..., |alpha_p|, beta)`
//! and, when the noise term is selected, one Bernoulli(`epsilon`) bit.
//!
//! Files are raw little-endian packed bits (bit `i` is bit `i % 8` of byte
//! `i / 8`) with a JSON sidecar at `<path>.json` holding the config.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BitSequence, ContextIndex, GbarParams};

/// 10^4 bytes.
pub const DEFAULT_BURN_IN_BITS: usize = 80_000;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN_BITS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub params: GbarParams,
    pub num_bits: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in_bits: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(params: GbarParams, num_bits: usize, seed: u64) -> Self {
        Self {
            params,
            num_bits,
            burn_in_bits: DEFAULT_BURN_IN_BITS,
            seed,
        }
    }

    pub fn with_burn_in(mut self, bits: usize) -> Self {
        self.burn_in_bits = bits;
        self
    }
}

/// `P(X_t = x | context)` for a gbAR(p) process.
///
/// `P(X_t = 0)` is returned as `1 - P(X_t = 1)` so both outcomes sum to one.
pub fn transition_prob(params: &GbarParams, context: ContextIndex, x: u8) -> Result<f64> {
    if context.width() != params.p() {
        return Err(Error::InvalidArgument(format!(
            "context width {} does not match model order {}",
            context.width(),
            params.p()
        )));
    }
    if x > 1 {
        return Err(Error::InvalidArgument(format!("bit value {x}")));
    }
    let p1 = prob_one(params, context.value());
    Ok(if x == 1 { p1 } else { 1.0 - p1 })
}

#[inline]
fn prob_one(params: &GbarParams, context: u32) -> f64 {
    let mut p = params.beta() * params.epsilon();
    for (i, &a) in params.alpha().iter().enumerate() {
        let lag = (context >> i) & 1;
        // positive coefficient copies the lag, negative copies its complement
        let hit = if a >= 0.0 { lag == 1 } else { lag == 0 };
        if hit {
            p += a.abs();
        }
    }
    p.clamp(0.0, 1.0)
}

/// `P(X_t = 1 | context)` for every context `0..2^p`.
pub fn transition_table(params: &GbarParams) -> Vec<f64> {
    let p = params.p();
    (0..(1u32 << p)).map(|c| prob_one(params, c)).collect()
}

/// Samples `cfg.num_bits` bits after discarding `cfg.burn_in_bits`.
///
/// The first `p` bits of the chain are i.i.d. Bernoulli(`epsilon`).
pub fn generate(cfg: &GeneratorConfig) -> Result<BitSequence> {
    if cfg.num_bits == 0 {
        return Err(Error::InvalidArgument("num_bits must be positive".into()));
    }
    let params = &cfg.params;
    let p = params.p();
    let eps = params.epsilon();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    // cumulative selector weights over lags 1..p; anything beyond is noise
    let mut cumulative = Vec::with_capacity(p);
    let mut acc = 0.0;
    for a in params.alpha() {
        acc += a.abs();
        cumulative.push(acc);
    }
    let flips: Vec<u64> = params.alpha().iter().map(|&a| u64::from(a < 0.0)).collect();
    let mask = (1u64 << p) - 1;

    let mut state = 0u64;
    for _ in 0..p {
        state = (state << 1) | u64::from(rng.random_bool(eps));
    }

    let mut out = BitSequence::with_capacity(cfg.num_bits);
    let total = cfg.burn_in_bits + cfg.num_bits;
    for t in 0..total {
        let u: f64 = rng.random();
        let bit = match cumulative.iter().position(|&c| u < c) {
            Some(i) => ((state >> i) & 1) ^ flips[i],
            None => u64::from(rng.random_bool(eps)),
        };
        state = ((state << 1) | bit) & mask;
        if t >= cfg.burn_in_bits {
            out.push(bit == 1);
        }
    }
    Ok(out)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    num_bits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<GeneratorConfig>,
}

/// Writes `bits` to `path` and the sidecar to `<path>.json`.
pub fn write_bits(path: &Path, bits: &BitSequence, cfg: Option<&GeneratorConfig>) -> Result<()> {
    fs::write(path, bits.to_bytes())?;
    let sidecar = Sidecar {
        num_bits: bits.len(),
        config: cfg.cloned(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a bit file. Without a sidecar every byte is taken as 8 bits.
pub fn read_bits(path: &Path) -> Result<(BitSequence, Option<GeneratorConfig>)> {
    let bytes = fs::read(path)?;
    let side = sidecar_path(path);
    if side.exists() {
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
        let bits = BitSequence::from_bytes(&bytes, sidecar.num_bits)?;
        Ok((bits, sidecar.config))
    } else {
        let len = bytes.len() * 8;
        Ok((BitSequence::from_bytes(&bytes, len)?, None))
    }
}
