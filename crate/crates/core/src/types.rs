//! Shared domain types: gbAR(p) parameters, packed bit sequences and the
//! integer encodings of contexts and futures.
//!
//! Bit order convention, used everywhere in the crate: a tuple of bits is
//! packed into an integer as a shift register, so the most recent bit sits in
//! the lowest position. For a context `(x_{t-1}, ..., x_{t-p})` bit `i` of the
//! index is `x_{t-1-i}`; for a future `(x_t, ..., x_{t+n})` bit `0` is
//! `x_{t+n}` and bit `n` is `x_t`. A full window `(context, future)` of
//! `p + k` bits is therefore `(context << k) | future`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest tuple width accepted by the index encodings.
pub const MAX_INDEX_WIDTH: usize = 30;

/// Tolerance on `sum |alpha_i| + beta = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Parameters `(alpha, beta, epsilon)` of a gbAR(p) process.
///
/// Each step copies lag `i` with probability `|alpha_i|` (flipped when
/// `alpha_i < 0`) or draws a Bernoulli(`epsilon`) noise bit with
/// probability `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GbarParams {
    alpha: Vec<f64>,
    beta: f64,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: Vec<f64>,
    beta: f64,
    epsilon: f64,
}

impl TryFrom<RawParams> for GbarParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        GbarParams::new(raw.alpha, raw.beta, raw.epsilon)
    }
}

impl From<GbarParams> for RawParams {
    fn from(p: GbarParams) -> Self {
        RawParams {
            alpha: p.alpha,
            beta: p.beta,
            epsilon: p.epsilon,
        }
    }
}

impl GbarParams {
    pub fn new(alpha: Vec<f64>, beta: f64, epsilon: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParams("alpha must have at least one coefficient".into()));
        }
        if alpha.len() > MAX_INDEX_WIDTH {
            return Err(Error::WidthOverflow {
                width: alpha.len(),
                max: MAX_INDEX_WIDTH,
            });
        }
        if let Some(a) = alpha.iter().find(|a| !a.is_finite() || a.abs() >= 1.0) {
            return Err(Error::InvalidParams(format!("alpha coefficient {a} outside (-1, 1)")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParams(format!("beta {beta} outside (0, 1]")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParams(format!("epsilon {epsilon} outside (0, 1)")));
        }
        let total: f64 = alpha.iter().map(|a| a.abs()).sum::<f64>() + beta;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidParams(format!(
                "sum |alpha| + beta = {total}, expected 1"
            )));
        }
        Ok(Self { alpha, beta, epsilon })
    }

    /// Builds parameters with `beta = 1 - sum |alpha_i|`.
    pub fn with_implied_beta(alpha: Vec<f64>, epsilon: f64) -> Result<Self> {
        let beta = 1.0 - alpha.iter().map(|a| a.abs()).sum::<f64>();
        Self::new(alpha, beta, epsilon)
    }

    /// Shorthand for `make_alpha` followed by `with_implied_beta`.
    pub fn from_shape(
        shape: AlphaShape,
        p: usize,
        total_mass: f64,
        signs: Option<&[i8]>,
        epsilon: f64,
    ) -> Result<Self> {
        Self::with_implied_beta(make_alpha(shape, p, total_mass, signs)?, epsilon)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Model order.
    pub fn p(&self) -> usize {
        self.alpha.len()
    }

    /// L1 norm of alpha.
    pub fn alpha_mass(&self) -> f64 {
        self.alpha.iter().map(|a| a.abs()).sum()
    }

    pub fn is_uniform_noise(&self) -> bool {
        (self.epsilon - 0.5).abs() <= NORMALIZATION_TOL
    }

    pub fn is_positive(&self) -> bool {
        self.alpha.iter().all(|&a| a >= 0.0)
    }

    /// All alpha mass on lag p.
    pub fn is_point_to_point(&self) -> bool {
        self.alpha[..self.p() - 1].iter().all(|&a| a == 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Autocorrelation shapes for the alpha vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaShape {
    PointToPoint,
    Uniform,
    Exponential,
    Gaussian,
}

impl AlphaShape {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlphaShape::PointToPoint => "point_to_point",
            AlphaShape::Uniform => "uniform",
            AlphaShape::Exponential => "exponential",
            AlphaShape::Gaussian => "gaussian",
        }
    }
}

impl std::fmt::Display for AlphaShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AlphaShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point_to_point" | "point-to-point" => Ok(AlphaShape::PointToPoint),
            "uniform" => Ok(AlphaShape::Uniform),
            "exponential" => Ok(AlphaShape::Exponential),
            "gaussian" => Ok(AlphaShape::Gaussian),
            other => Err(Error::InvalidArgument(format!("unknown alpha shape {other:?}"))),
        }
    }
}

/// Builds an alpha vector of the given shape with `sum |alpha_i| = total_mass`.
///
/// Exponential and Gaussian shapes use unnormalized weights `exp(-i/tau)` and
/// `exp(-(i/sigma)^2)` for lags `i = 1..p`, with `tau = sigma = p/2`.
/// `signs` (one `+1`/`-1` per lag) defaults to all positive.
pub fn make_alpha(
    shape: AlphaShape,
    p: usize,
    total_mass: f64,
    signs: Option<&[i8]>,
) -> Result<Vec<f64>> {
    if p < 1 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    if !(total_mass > 0.0 && total_mass < 1.0) {
        return Err(Error::InvalidArgument(format!("total mass {total_mass} outside (0, 1)")));
    }
    if let Some(s) = signs {
        if s.len() != p {
            return Err(Error::InvalidArgument(format!(
                "sign pattern has length {}, expected {p}",
                s.len()
            )));
        }
        if s.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidArgument("sign pattern entries must be +1 or -1".into()));
        }
    }

    let scale = p as f64 / 2.0;
    let weights: Vec<f64> = match shape {
        AlphaShape::PointToPoint => (1..=p).map(|i| if i == p { 1.0 } else { 0.0 }).collect(),
        AlphaShape::Uniform => vec![1.0; p],
        AlphaShape::Exponential => (1..=p).map(|i| (-(i as f64) / scale).exp()).collect(),
        AlphaShape::Gaussian => (1..=p).map(|i| (-(i as f64 / scale).powi(2)).exp()).collect(),
    };
    let norm: f64 = weights.iter().sum();
    Ok(weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let sign = signs.map_or(1.0, |s| f64::from(s[i]));
            sign * total_mass * w / norm
        })
        .collect())
}

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width > MAX_INDEX_WIDTH {
        return Err(Error::WidthOverflow {
            width,
            max: MAX_INDEX_WIDTH,
        });
    }
    Ok(())
}

fn pack_bits<'a>(bits: impl Iterator<Item = &'a u8>) -> Result<u32> {
    let mut v = 0u32;
    for (i, &b) in bits.enumerate() {
        if b > 1 {
            return Err(Error::InvalidArgument(format!("bit value {b} at position {i}")));
        }
        v |= u32::from(b) << i;
    }
    Ok(v)
}

/// Index of a context `(x_{t-1}, ..., x_{t-p})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextIndex {
    value: u32,
    width: u8,
}

impl ContextIndex {
    pub fn new(value: u32, width: usize) -> Result<Self> {
        check_width(width)?;
        if u64::from(value) >= 1u64 << width {
            return Err(Error::InvalidArgument(format!(
                "context {value} does not fit in {width} bits"
            )));
        }
        Ok(Self {
            value,
            width: width as u8,
        })
    }

    /// `lags[0]` is `x_{t-1}`, `lags[p-1]` is `x_{t-p}`.
    pub fn encode(lags: &[u8]) -> Result<Self> {
        check_width(lags.len())?;
        Ok(Self {
            value: pack_bits(lags.iter())?,
            width: lags.len() as u8,
        })
    }

    /// Inverse of [`ContextIndex::encode`].
    pub fn decode(&self) -> Vec<u8> {
        (0..self.width).map(|i| ((self.value >> i) & 1) as u8).collect()
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn width(&self) -> usize {
        usize::from(self.width)
    }

    /// Value of lag `i` (1-based), i.e. `x_{t-i}`.
    pub fn lag(&self, i: usize) -> u8 {
        ((self.value >> (i - 1)) & 1) as u8
    }
}

/// Index of a future `(x_t, ..., x_{t+n})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FutureIndex {
    value: u32,
    width: u8,
}

impl FutureIndex {
    pub fn new(value: u32, width: usize) -> Result<Self> {
        check_width(width)?;
        if u64::from(value) >= 1u64 << width {
            return Err(Error::InvalidArgument(format!(
                "future {value} does not fit in {width} bits"
            )));
        }
        Ok(Self {
            value,
            width: width as u8,
        })
    }

    /// `bits` in chronological order `(x_t, ..., x_{t+n})`.
    pub fn encode(bits: &[u8]) -> Result<Self> {
        check_width(bits.len())?;
        Ok(Self {
            value: pack_bits(bits.iter().rev())?,
            width: bits.len() as u8,
        })
    }

    /// Chronological bits, inverse of [`FutureIndex::encode`].
    pub fn decode(&self) -> Vec<u8> {
        (0..self.width)
            .rev()
            .map(|i| ((self.value >> i) & 1) as u8)
            .collect()
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn width(&self) -> usize {
        usize::from(self.width)
    }
}

/// Packed binary sequence. Bit `i` lives in word `i / 64` at position `i % 64`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitSequence {
    words: Vec<u64>,
    len: usize,
}

impl BitSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        bits.iter().map(|&b| b != 0).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        ((self.words[i >> 6] >> (i & 63)) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i & 63);
        if bit {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len & 63 == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[self.len >> 6] |= 1u64 << (self.len & 63);
        }
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Copy of bits `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> BitSequence {
        assert!(start <= end && end <= self.len);
        (start..end).map(|i| self.get(i) == 1).collect()
    }

    /// Shift-register values of every window of `width` bits, in order of the
    /// window's last bit. The most recent bit is in the lowest position.
    pub fn windows(&self, width: usize) -> Windows<'_> {
        assert!((1..=63).contains(&width), "window width {width} outside 1..=63");
        Windows {
            seq: self,
            mask: (1u64 << width) - 1,
            width,
            state: 0,
            pos: 0,
        }
    }

    /// Little-endian byte packing: bit `i` is bit `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    /// Inverse of [`BitSequence::to_bytes`]; `len` may trim the final byte.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::TooShort {
                needed: len,
                got: bytes.len() * 8,
            });
        }
        let mut words: Vec<u64> = bytes
            .chunks(8)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(buf)
            })
            .collect();
        words.truncate(len.div_ceil(64));
        if len & 63 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len & 63)) - 1;
            }
        }
        Ok(Self { words, len })
    }
}

impl FromIterator<bool> for BitSequence {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let iter = iter.into_iter();
        let mut seq = BitSequence::with_capacity(iter.size_hint().0);
        for b in iter {
            seq.push(b);
        }
        seq
    }
}

/// Iterator returned by [`BitSequence::windows`].
pub struct Windows<'a> {
    seq: &'a BitSequence,
    mask: u64,
    width: usize,
    state: u64,
    pos: usize,
}

impl Iterator for Windows<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        while self.pos < self.seq.len {
            let bit = (self.seq.words[self.pos >> 6] >> (self.pos & 63)) & 1;
            self.state = ((self.state << 1) | bit) & self.mask;
            self.pos += 1;
            if self.pos >= self.width {
                return Some(self.state);
            }
        }
        None
    }
}
