//! Block entropies of dynamical refinements and KS-entropy estimators.
//!
//! `H[n]` is the Shannon entropy of the length-`(n+1)` symbolic words of a
//! partition along sampled orbits. Words at every depth are counted at the
//! same start positions, so a deeper word always refines a shallower one and
//! the plug-in curve is non-decreasing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::MapSpec;
use crate::error::{Error, Result};
use crate::partition::{Partition, DEFAULT_CELL_CAP};
use crate::rng::stream_rng;

/// Average occurrences per observed word below which a curve is flagged.
pub const MIN_COUNTS_PER_WORD: f64 = 10.0;

/// Minimum curve depth accepted by [`ks_entropy_estimate`].
pub const MIN_ESTIMATE_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampling {
    /// One orbit of `length` symbols from a seeded uniform initial point.
    Orbit { length: usize, seed: u64 },
    /// Midpoints of a `resolution^d` grid, each weighted equally; gives the
    /// cylinder measures up to the grid resolution.
    Grid { resolution: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasCorrection {
    None,
    /// Adds `(K − 1) / 2N` for `K` observed words out of `N`.
    MillerMadow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    /// Orbit steps between consecutive symbols.
    pub stride: usize,
    /// Each symbol is the partition word of this many consecutive base steps,
    /// i.e. the symbol partition is `∨_{j<coding_depth} T^{-j} Q`.
    pub coding_depth: usize,
    /// Applied to orbit sampling only; grid sampling is never corrected.
    pub bias: BiasCorrection,
    /// Cap on the number of distinct words at the deepest level.
    pub cap: u128,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            coding_depth: 1,
            bias: BiasCorrection::MillerMadow,
            cap: DEFAULT_CELL_CAP,
        }
    }
}

impl EntropyOptions {
    /// Stride-`tau` sampling with the matching `tau`-fold symbol refinement.
    pub fn rescaled(tau: usize) -> Self {
        Self {
            stride: tau,
            coding_depth: tau,
            ..Self::default()
        }
    }
}

/// Sorted `(word, count)` table. Merging is commutative and associative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounts {
    pub entries: Vec<(u128, u64)>,
}

impl WordCounts {
    pub fn from_keys(keys: &[u128]) -> Self {
        let mut sorted = keys.to_vec();
        sorted.sort_unstable();
        let entries = sorted
            .chunk_by(|a, b| a == b)
            .map(|run| (run[0], run.len() as u64))
            .collect();
        Self { entries }
    }

    pub fn merge(self, other: Self) -> Self {
        let (a, b) = (self.entries, other.entries);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self { entries: out }
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    /// Plug-in entropy and `Σ p ln² p`.
    pub fn entropy_moments(&self) -> (f64, f64) {
        let n = self.total() as f64;
        let (mut h, mut h2) = (0.0, 0.0);
        for &(_, c) in &self.entries {
            let p = c as f64 / n;
            let l = p.ln();
            h -= p * l;
            h2 += p * l * l;
        }
        (h, h2)
    }
}

/// Counts words in parallel chunks and merges the tables.
pub fn count_words(keys: &[u128]) -> WordCounts {
    keys.par_chunks(1 << 16)
        .map(WordCounts::from_keys)
        .reduce(WordCounts::default, WordCounts::merge)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntropyCurve {
    /// `H[n]` for `n = 0..=n_max`, nats.
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    /// Uncorrected plug-in entropies.
    pub plug_in: Vec<f64>,
    pub distinct_words: Vec<usize>,
    /// `Σ p ln² p` per depth, for the sampling variance of `H`.
    pub sum_p_ln2: Vec<f64>,
    pub n_max: usize,
    pub word_counts_total: u64,
    /// Symbol alphabet size, `m^coding_depth`.
    pub alphabet: u128,
    pub stride: usize,
    pub bias: BiasCorrection,
    /// Fewer than ten occurrences per observed word at `n_max`.
    pub insufficient_samples: bool,
}

impl BlockEntropyCurve {
    /// `H[n] − H[n−1]`, with `H[0]` in slot 0.
    pub fn increments(&self) -> Vec<f64> {
        std::iter::once(self.h[0])
            .chain(self.h.windows(2).map(|w| w[1] - w[0]))
            .collect()
    }

    /// Sampling variance of the plug-in entropy at depth `n`.
    pub fn variance(&self, n: usize) -> f64 {
        // Grid sampling is a quadrature, not a random sample.
        if self.word_counts_total == 0 {
            return 0.0;
        }
        let h = self.plug_in[n];
        (self.sum_p_ln2[n] - h * h).max(0.0) / self.word_counts_total as f64
    }

    /// CSV rows `n,H_n,increment`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,H_n,increment\n");
        for (n, (h, d)) in self.h.iter().zip(self.increments()).enumerate() {
            out.push_str(&format!("{n},{},{}\n", crate::export::fmt_f64(*h), crate::export::fmt_f64(d)));
        }
        out
    }
}

/// Symbol of `x` under the `coding_depth`-fold refinement of `q`.
fn symbol(map: &MapSpec, q: &Partition, x: &[f64], coding_depth: usize, y: &mut Vec<f64>) -> Result<u64> {
    let m = q.len() as u64;
    y.clear();
    y.extend_from_slice(x);
    let mut s = 0u64;
    let mut w = 1u64;
    for j in 0..coding_depth {
        if j > 0 {
            map.forward(y);
        }
        let c = q
            .cell_of(y)
            .ok_or_else(|| Error::InvalidMeasure(format!("point {y:?} lies outside every cell")))?;
        s += c as u64 * w;
        w *= m;
    }
    Ok(s)
}

/// `H[n]` of `∨_{j=0}^{n} T^{-j} Q` for `n = 0..=n_max`.
pub fn block_entropies(
    map: &MapSpec,
    q: &Partition,
    n_max: usize,
    sampling: Sampling,
    opts: EntropyOptions,
) -> Result<BlockEntropyCurve> {
    if n_max == 0 || opts.stride == 0 || opts.coding_depth == 0 {
        return Err(Error::InvalidParameter(
            "block entropies need n_max, stride and coding_depth >= 1".into(),
        ));
    }
    if q.dim != map.coord_len() {
        return Err(Error::RegionMismatch(format!(
            "partition of dimension {} for map `{map}` on {} coordinates",
            q.dim,
            map.coord_len()
        )));
    }
    let overflow = || Error::DepthOverflow {
        predicted: u128::MAX,
        cap: opts.cap,
    };
    let alphabet = (q.len() as u128)
        .checked_pow(opts.coding_depth as u32)
        .filter(|a| *a <= u64::MAX as u128)
        .ok_or_else(overflow)?;
    let word_space = alphabet.checked_pow(n_max as u32 + 1).ok_or_else(overflow)?;

    // Word start positions and the symbol lookup for (position, offset).
    let width = n_max + 1;
    let (symbols, positions, grid) = match sampling {
        Sampling::Orbit { length, seed } => {
            if length <= n_max {
                return Err(Error::InsufficientPoints {
                    needed: n_max + 1,
                    got: length,
                });
            }
            let mut rng = stream_rng(seed, 0);
            let mut x = map.sample_uniform(&mut rng).0;
            let mut y = Vec::with_capacity(x.len());
            let mut symbols = Vec::with_capacity(length);
            for _ in 0..length {
                symbols.push(symbol(map, q, &x, opts.coding_depth, &mut y)?);
                for _ in 0..opts.stride {
                    map.step_typical(&mut x, &mut rng);
                }
            }
            (symbols, length - n_max, false)
        }
        Sampling::Grid { resolution } => {
            if resolution == 0 {
                return Err(Error::InvalidParameter("grid resolution must be >= 1".into()));
            }
            let dim = q.dim;
            let total = resolution
                .checked_pow(dim as u32)
                .filter(|t| t.checked_mul(width).is_some())
                .ok_or_else(|| Error::InvalidParameter("grid too large".into()))?;
            let symbols: Vec<u64> = (0..total)
                .into_par_iter()
                .map(|mut idx| {
                    let mut x = vec![0.0; dim];
                    for k in (0..dim).rev() {
                        x[k] = ((idx % resolution) as f64 + 0.5) / resolution as f64;
                        idx /= resolution;
                    }
                    let mut y = Vec::with_capacity(dim);
                    let mut word = Vec::with_capacity(width);
                    for _ in 0..width {
                        word.push(symbol(map, q, &x, opts.coding_depth, &mut y)?);
                        for _ in 0..opts.stride {
                            map.forward(&mut x);
                        }
                    }
                    Ok(word)
                })
                .collect::<Result<Vec<_>>>()?
                .concat();
            (symbols, total, true)
        }
    };

    let predicted = word_space.min(positions as u128);
    if predicted > opts.cap {
        return Err(Error::DepthOverflow {
            predicted,
            cap: opts.cap,
        });
    }

    let at = |i: usize, j: usize| -> u128 {
        if grid {
            symbols[i * width + j] as u128
        } else {
            symbols[i + j] as u128
        }
    };
    let bias = if grid { BiasCorrection::None } else { opts.bias };
    let mut keys = vec![0u128; positions];
    let mut weight = 1u128;
    let (mut h, mut plug_in, mut distinct_words, mut sum_p_ln2) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for n in 0..=n_max {
        keys.par_iter_mut()
            .enumerate()
            .for_each(|(i, k)| *k += at(i, n) * weight);
        weight = weight.saturating_mul(alphabet);
        let counts = count_words(&keys);
        let (hp, h2) = counts.entropy_moments();
        let k = counts.distinct();
        let corrected = match bias {
            BiasCorrection::None => hp,
            BiasCorrection::MillerMadow => hp + (k as f64 - 1.0) / (2.0 * positions as f64),
        };
        h.push(corrected);
        plug_in.push(hp);
        distinct_words.push(k);
        sum_p_ln2.push(h2);
    }
    let insufficient_samples =
        (positions as f64) / (*distinct_words.last().unwrap() as f64) < MIN_COUNTS_PER_WORD;
    Ok(BlockEntropyCurve {
        h,
        plug_in,
        distinct_words,
        sum_p_ln2,
        n_max,
        word_counts_total: if grid { 0 } else { positions as u64 },
        alphabet,
        stride: opts.stride,
        bias,
        insufficient_samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMethod {
    /// Median of the last three increments `H[n+1] − H[n]`.
    IncrementPlateau,
    /// Least-squares slope of `H[n]` over the last half of the curve.
    Slope,
}

impl std::str::FromStr for EstimatorMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increment-plateau" | "plateau" => Ok(Self::IncrementPlateau),
            "slope" => Ok(Self::Slope),
            other => Err(Error::InvalidParameter(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Entropy-rate estimate in nats per sampled step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub h: f64,
    /// Estimator value before clamping at zero.
    pub raw: f64,
    pub clamped: bool,
    pub method: EstimatorMethod,
    pub stderr: f64,
    pub curve: BlockEntropyCurve,
}

pub fn ks_entropy_estimate(curve: &BlockEntropyCurve, method: EstimatorMethod) -> Result<EntropyEstimate> {
    let n_max = curve.n_max;
    if n_max < MIN_ESTIMATE_DEPTH {
        return Err(Error::CurveTooShallow {
            depth: n_max,
            min: MIN_ESTIMATE_DEPTH,
        });
    }
    let (raw, stderr) = match method {
        EstimatorMethod::IncrementPlateau => {
            let inc = curve.increments();
            let mut last: Vec<f64> = inc[n_max - 2..].to_vec();
            last.sort_by(f64::total_cmp);
            let mean = last.iter().sum::<f64>() / 3.0;
            let spread = last.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 2.0;
            let stat = curve.variance(n_max) + curve.variance(n_max - 1);
            (last[1], (spread / 3.0 + stat).sqrt())
        }
        EstimatorMethod::Slope => {
            let lo = n_max - n_max / 2;
            let xs: Vec<f64> = (lo..=n_max).map(|n| n as f64).collect();
            let ys = &curve.h[lo..=n_max];
            let k = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / k;
            let my = ys.iter().sum::<f64>() / k;
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let slope = sxy / sxx;
            let rss: f64 = xs
                .iter()
                .zip(ys)
                .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
                .sum();
            let se = if k > 2.0 { (rss / (k - 2.0) / sxx).sqrt() } else { 0.0 };
            (slope, se)
        }
    };
    Ok(EntropyEstimate {
        h: raw.max(0.0),
        raw,
        clamped: raw < 0.0,
        method,
        stderr,
        curve: curve.clone(),
    })
}
