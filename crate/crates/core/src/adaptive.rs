//! Adaptive topologies: splits chosen so that both children of every node are
//! visited about equally often, given an estimate of how often each gray
//! value is inserted, removed or extracted.

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::iot::{IotTopology, MAX_BIT_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SourceHistogram,
    MedianEstimate,
    Mixed,
    External,
}

/// Non-negative access weights, one per gray value.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    weights: Vec<f64>,
    provenance: Provenance,
}

impl FrequencyProfile {
    pub fn new(weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if weights.is_empty() || !weights.len().is_power_of_two() {
            return Err(Error::input(format!(
                "profile length must be a power of two, got {}",
                weights.len()
            )));
        }
        if weights.len() > 1 << MAX_BIT_DEPTH {
            return Err(Error::input("profile longer than 2^16 entries"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::input(format!("invalid profile weight {w}")));
        }
        Ok(Self {
            weights,
            provenance,
        })
    }

    pub fn from_histogram(hist: &[u64], provenance: Provenance) -> Result<Self> {
        Self::new(hist.iter().map(|&c| c as f64).collect(), provenance)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True when the profile carries no weight at all.
    pub fn is_degenerate(&self) -> bool {
        self.mass() == 0.0
    }

    pub fn bit_depth(&self) -> u8 {
        self.weights.len().trailing_zeros() as u8
    }

    /// Parses whitespace-separated weights.
    pub fn parse(text: &str) -> Result<Self> {
        let weights = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::input(format!("bad profile weight {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights, Provenance::External)
    }
}

/// Sums the two profiles after scaling each to unit mass, so that both carry
/// the same share of the result. Zero-mass inputs contribute nothing.
pub fn mix_profiles(source: &FrequencyProfile, median: &FrequencyProfile) -> Result<FrequencyProfile> {
    if source.len() != median.len() {
        return Err(Error::input(format!(
            "profile lengths differ: {} vs {}",
            source.len(),
            median.len()
        )));
    }
    let scale = |p: &FrequencyProfile| {
        let m = p.mass();
        if m > 0.0 {
            1.0 / m
        } else {
            0.0
        }
    };
    let (ks, km) = (scale(source), scale(median));
    let weights = source
        .weights
        .iter()
        .zip(&median.weights)
        .map(|(s, m)| s * ks + m * km)
        .collect();
    FrequencyProfile::new(weights, Provenance::Mixed)
}

/// Builds a topology over `[0, 2^bit_depth)` by recursive weighted-median
/// splitting of `profile`, stopping at intervals no wider than
/// `leaf_precision`.
///
/// Intervals without weight are bisected, so a flat or empty profile yields
/// the uniform bisection tree. Among equally balanced splits the one nearest
/// the midpoint wins, then the smaller one.
pub fn build_adaptive_topology(
    profile: &FrequencyProfile,
    bit_depth: u8,
    leaf_precision: u32,
) -> Result<IotTopology> {
    if bit_depth == 0 || bit_depth > MAX_BIT_DEPTH {
        return Err(Error::config(format!("bit depth {bit_depth} out of range")));
    }
    if profile.len() != 1 << bit_depth {
        return Err(Error::input(format!(
            "profile has {} entries, expected {}",
            profile.len(),
            1u32 << bit_depth
        )));
    }
    if leaf_precision == 0 {
        return Err(Error::input("leaf precision must be at least 1"));
    }

    let prefix = prefix_sums(profile.weights());
    let mut split = vec![0u32];
    let mut left_span = vec![0u32];

    enum Task {
        Node { lo: u32, hi: u32 },
        CloseLeft { slot: usize },
    }
    let mut stack = vec![Task::Node {
        lo: 0,
        hi: 1 << bit_depth,
    }];
    while let Some(task) = stack.pop() {
        match task {
            Task::Node { lo, hi } => {
                if hi - lo <= leaf_precision {
                    continue;
                }
                let s = choose_split(&prefix, lo, hi);
                let slot = split.len();
                split.push(s);
                left_span.push(0);
                stack.push(Task::Node { lo: s, hi });
                stack.push(Task::CloseLeft { slot });
                stack.push(Task::Node { lo, hi: s });
            }
            Task::CloseLeft { slot } => {
                left_span[slot] = (split.len() - slot - 1) as u32;
            }
        }
    }
    IotTopology::from_layout(bit_depth, split, left_span)
}

fn prefix_sums(weights: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    prefix.push(acc);
    for &w in weights {
        acc += w;
        prefix.push(acc);
    }
    prefix
}

/// Split `s` in `(lo, hi)` minimizing `|W(lo, s) - W(s, hi)|`.
pub(crate) fn choose_split(prefix: &[f64], lo: u32, hi: u32) -> u32 {
    let mid = lo + (hi - lo) / 2;
    let base = prefix[lo as usize];
    let total = prefix[hi as usize] - base;
    if total <= 0.0 {
        return mid;
    }
    // imbalance(s) = W(lo, s) - W(s, hi) is non-decreasing in s.
    let imbalance = |s: u32| 2.0 * (prefix[s as usize] - base) - total;
    let candidates = (lo + 1)..hi;
    let first_nonneg = lo + 1 + partition_point(candidates.clone(), |s| imbalance(s) < 0.0);
    let mut best = f64::INFINITY;
    for s in [first_nonneg.saturating_sub(1), first_nonneg] {
        if candidates.contains(&s) {
            best = best.min(imbalance(s).abs());
        }
    }
    let eps = total * 1e-12;
    let tol = best + eps;
    // Every split within `tol` of the best balance forms one contiguous run.
    let a = lo + 1 + partition_point(candidates.clone(), |s| imbalance(s) < -tol);
    let b = lo + partition_point(candidates, |s| imbalance(s) <= tol);
    if best <= eps {
        return mid.clamp(a, b);
    }
    // No exact balance: keep the splits adjacent to where the imbalance
    // changes sign, which are the ones closest to the continuous balance point.
    if first_nonneg <= a {
        a
    } else if first_nonneg > b {
        b
    } else {
        let (below, above) = (first_nonneg - 1, first_nonneg);
        if mid.abs_diff(above) < mid.abs_diff(below) {
            above
        } else {
            below
        }
    }
}

/// Number of leading elements of `range` for which `pred` holds (`pred` must
/// be monotone: true then false).
fn partition_point<F: Fn(u32) -> bool>(range: std::ops::Range<u32>, pred: F) -> u32 {
    let (mut lo, mut hi) = (range.start, range.end);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo - range.start
}

/// Box mean of `image` over `n x n` windows with replicated borders,
/// rounded to the nearest integer. Uses a summed-area table of the padded
/// image, so the cost per pixel does not depend on `n`.
pub fn box_mean(image: &GrayImage, n: usize) -> Result<GrayImage> {
    check_window(image, n)?;
    let h = (n / 2) as isize;
    let (w, ht) = (image.width(), image.height());
    let pw = w + n - 1;
    let ph = ht + n - 1;
    let stride = pw + 1;
    let mut sat = vec![0u64; stride * (ph + 1)];
    for py in 0..ph {
        let mut row_sum = 0u64;
        for px in 0..pw {
            row_sum += u64::from(image.get_clamped(px as isize - h, py as isize - h));
            sat[(py + 1) * stride + px + 1] = sat[py * stride + px + 1] + row_sum;
        }
    }
    let area = (n * n) as u64;
    let mut out = GrayImage::new(w, ht, image.bit_depth())?;
    for y in 0..ht {
        for x in 0..w {
            let sum = sat[(y + n) * stride + x + n] + sat[y * stride + x]
                - sat[y * stride + x + n]
                - sat[(y + n) * stride + x];
            out.set(x, y, ((sum + area / 2) / area) as u16);
        }
    }
    Ok(out)
}

/// Global histogram of the running mean, used as a stand-in for the
/// (unknown) distribution of filter outputs.
pub fn estimate_median_profile(image: &GrayImage, n: usize) -> Result<FrequencyProfile> {
    let mean = box_mean(image, n)?;
    FrequencyProfile::from_histogram(&mean.histogram(), Provenance::MedianEstimate)
}

/// Source histogram mixed 1:1 with the running-mean estimate.
pub fn auto_profile(image: &GrayImage, n: usize) -> Result<FrequencyProfile> {
    let source = FrequencyProfile::from_histogram(&image.histogram(), Provenance::SourceHistogram)?;
    let median = estimate_median_profile(image, n)?;
    mix_profiles(&source, &median)
}

pub(crate) fn check_window(image: &GrayImage, n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::config(format!(
            "window size must be odd and at least 3, got {n}"
        )));
    }
    // Replication needs at least one real sample on each side of the centre.
    let extent = image.width().min(image.height());
    if n / 2 > extent {
        return Err(Error::input(format!(
            "window size {n} exceeds twice the smaller image extent ({extent}) plus one"
        )));
    }
    Ok(())
}
