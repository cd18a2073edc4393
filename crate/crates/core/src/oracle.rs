//! Reference filters used as ground truth. All share the replicated border
//! and the 1-based rank convention of the tree filter.

use crate::adaptive::check_window;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::instrument::{OpCounters, PathCost, Phase, Tally};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// Sort all window samples and index the rank.
    FullSort,
    /// Partial selection of the rank.
    Quickselect,
    /// Sliding histogram along each row, with an incrementally tracked rank position.
    Huang,
}

fn check(image: &GrayImage, n: usize, rank: u32) -> Result<()> {
    check_window(image, n)?;
    let area = (n * n) as u32;
    if rank == 0 || rank > area {
        return Err(Error::config(format!("rank {rank} outside [1, {area}]")));
    }
    Ok(())
}

pub fn oracle_filter(image: &GrayImage, n: usize, rank: u32, kind: OracleKind) -> Result<GrayImage> {
    match kind {
        OracleKind::FullSort => window_select(image, n, rank, |buf, k| {
            buf.sort_unstable();
            buf[k]
        }),
        OracleKind::Quickselect => window_select(image, n, rank, |buf, k| *buf.select_nth_unstable(k).1),
        OracleKind::Huang => huang_filter(image, n, rank).map(|(img, _)| img),
    }
}

fn window_select<F>(image: &GrayImage, n: usize, rank: u32, mut pick: F) -> Result<GrayImage>
where
    F: FnMut(&mut [u16], usize) -> u16,
{
    check(image, n, rank)?;
    let h = (n / 2) as isize;
    let mut out = GrayImage::new(image.width(), image.height(), image.bit_depth())?;
    let mut buf = Vec::with_capacity(n * n);
    for y in 0..image.height() {
        for x in 0..image.width() {
            buf.clear();
            for dy in -h..=h {
                for dx in -h..=h {
                    buf.push(image.get_clamped(x as isize + dx, y as isize + dy));
                }
            }
            out.set(x, y, pick(&mut buf, rank as usize - 1));
        }
    }
    Ok(out)
}

/// Huang's sliding-histogram filter with `2^d` bins.
///
/// Histogram increments and decrements are charged as window-update
/// additions; the walk that re-locates the rank position is charged to
/// extraction.
pub fn huang_filter(image: &GrayImage, n: usize, rank: u32) -> Result<(GrayImage, OpCounters)> {
    check(image, n, rank)?;
    let h = (n / 2) as isize;
    let (w, ht) = (image.width(), image.height());
    let mut out = GrayImage::new(w, ht, image.bit_depth())?;
    let mut hist = vec![0u32; image.levels()];
    let mut counters = OpCounters::default();

    for y in 0..ht {
        let yi = y as isize;
        hist.fill(0);
        for dy in -h..=h {
            for dx in -h..=h {
                hist[image.get_clamped(dx, yi + dy) as usize] += 1;
            }
        }
        counters.charge(
            Phase::WindowUpdate,
            PathCost {
                additions: (n * n) as u64,
                comparisons: 0,
            },
        );
        // Invariant after adjustment: below < rank <= below + hist[pos].
        let mut pos = 0usize;
        let mut below = 0u32;

        for x in 0..w {
            let xi = x as isize;
            if x > 0 {
                let mut cost = PathCost::default();
                for dy in -h..=h {
                    let old = image.get_clamped(xi - h - 1, yi + dy) as usize;
                    let new = image.get_clamped(xi + h, yi + dy) as usize;
                    hist[old] -= 1;
                    hist[new] += 1;
                    if old < pos {
                        below -= 1;
                    }
                    if new < pos {
                        below += 1;
                    }
                    cost.additions += 2;
                    cost.comparisons += 2;
                }
                counters.charge(Phase::WindowUpdate, cost);
            }
            let mut cost = PathCost::default();
            while below >= rank {
                pos -= 1;
                below -= hist[pos];
                cost.additions += 1;
                cost.comparisons += 1;
            }
            while below + hist[pos] < rank {
                below += hist[pos];
                pos += 1;
                cost.additions += 1;
                cost.comparisons += 1;
            }
            cost.comparisons += 2;
            counters.charge(Phase::Extraction, cost);
            counters.pixel_done();
            out.set(x, y, pos as u16);
        }
    }
    Ok((out, counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_image(w: usize, h: usize, d: u8, seed: u64) -> GrayImage {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let max = 1u32 << d;
        GrayImage::from_fn(w, h, d, |_, _| rng.random_range(0..max) as u16).unwrap()
    }

    #[test]
    fn kinds_agree_on_random_images() {
        for seed in 0..100u64 {
            let img = random_image(64, 64, 8, seed);
            let n = [3, 5, 9][seed as usize % 3];
            let rank = 1 + (seed as u32 * 7) % (n * n) as u32;
            let sort = oracle_filter(&img, n, rank, OracleKind::FullSort).unwrap();
            let qs = oracle_filter(&img, n, rank, OracleKind::Quickselect).unwrap();
            let huang = oracle_filter(&img, n, rank, OracleKind::Huang).unwrap();
            assert_eq!(sort, qs, "seed {seed}");
            assert_eq!(sort, huang, "seed {seed}");
        }
    }

    #[test]
    fn kinds_agree_on_16_bit() {
        let img = random_image(20, 17, 16, 3);
        for rank in [1, 13, 25] {
            let sort = oracle_filter(&img, 5, rank, OracleKind::FullSort).unwrap();
            assert_eq!(sort, oracle_filter(&img, 5, rank, OracleKind::Huang).unwrap());
        }
    }

    #[test]
    fn constant_in_constant_out() {
        let img = GrayImage::from_vec(6, 6, 8, vec![17; 36]).unwrap();
        for kind in [OracleKind::FullSort, OracleKind::Quickselect, OracleKind::Huang] {
            let out = oracle_filter(&img, 5, 13, kind).unwrap();
            assert!(out.data().iter().all(|&v| v == 17));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let img = GrayImage::new(6, 6, 8).unwrap();
        assert!(oracle_filter(&img, 4, 1, OracleKind::FullSort).is_err());
        assert!(oracle_filter(&img, 3, 10, OracleKind::Quickselect).is_err());
        assert!(huang_filter(&img, 3, 0).is_err());
    }

    #[test]
    fn huang_cost_grows_linearly() {
        let img = random_image(200, 40, 8, 1);
        let adds = |n| {
            let (_, c) = huang_filter(&img, n, (n * n).div_ceil(2) as u32).unwrap();
            c.per_pixel().win_add
        };
        let ratio = adds(45) / adds(11);
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }
}
