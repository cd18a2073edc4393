//! Two-dimensional running order statistics.
//!
//! Every image column keeps a tree over the `n` samples of its current
//! vertical span. The window tree is the sum of `n` adjacent column trees,
//! but its nodes are synchronized lazily: only the nodes a rank descent
//! actually visits are brought up to date, by replaying the column deltas
//! they missed or, when too stale, by summing the `n` columns from scratch.

use std::ops::Range;
use std::sync::Arc;

use crate::adaptive::{auto_profile, build_adaptive_topology, check_window, FrequencyProfile};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::instrument::{OpCounters, PathCost, Phase, SyncKind, Tally};
use crate::iot::{Iot, IotTopology, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdatePolicy {
    /// Synchronize only the window nodes visited by each descent.
    #[default]
    OnDemand,
    /// Update every window node at every step.
    Unconditional,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ProfileSource {
    /// Source histogram mixed 1:1 with the running-mean histogram.
    #[default]
    Auto,
    Given(FrequencyProfile),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum TopologyChoice {
    #[default]
    Uniform,
    Adaptive(ProfileSource),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Odd window side.
    pub window: usize,
    /// 1-based rank within the `window^2` samples; `None` selects the median.
    pub rank: Option<u32>,
    /// Largest tolerated error in gray values; 1 means exact.
    pub max_error: u32,
    pub topology: TopologyChoice,
    pub update: UpdatePolicy,
    /// Number of horizontal bands filtered on separate threads.
    pub bands: usize,
}

impl FilterConfig {
    pub fn median(window: usize) -> Self {
        Self {
            window,
            rank: None,
            max_error: 1,
            topology: TopologyChoice::Uniform,
            update: UpdatePolicy::OnDemand,
            bands: 1,
        }
    }

    pub fn with_rank(mut self, rank: u32) -> Self {
        self.rank = Some(rank);
        self
    }

    pub fn with_max_error(mut self, max_error: u32) -> Self {
        self.max_error = max_error;
        self
    }

    pub fn with_topology(mut self, topology: TopologyChoice) -> Self {
        self.topology = topology;
        self
    }

    pub fn with_update(mut self, update: UpdatePolicy) -> Self {
        self.update = update;
        self
    }

    pub fn with_bands(mut self, bands: usize) -> Self {
        self.bands = bands;
        self
    }

    pub fn effective_rank(&self) -> u32 {
        self.rank.unwrap_or_else(|| median_rank(self.window))
    }
}

/// Rank of the median of an `n x n` window, `(n^2 + 1) / 2`.
pub fn median_rank(n: usize) -> u32 {
    (n * n).div_ceil(2) as u32
}

/// Rank for a percentile in `[0, 100]`: `ceil(p/100 * n^2)`, at least 1.
pub fn percentile_rank(n: usize, percentile: f64) -> Result<u32> {
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::input(format!("percentile {percentile} outside [0, 100]")));
    }
    let area = (n * n) as f64;
    Ok(((percentile / 100.0 * area).ceil() as u32).clamp(1, (n * n) as u32))
}

/// Column trees of one image row, stored slot-major so that summing a node
/// over neighbouring columns reads contiguous memory.
#[derive(Debug, Clone)]
struct ColumnBank {
    width: usize,
    counts: Vec<u32>,
}

impl ColumnBank {
    fn new(topology: &IotTopology, width: usize) -> Self {
        Self {
            width,
            counts: vec![0; topology.slot_count() * width],
        }
    }

    #[inline]
    fn get(&self, slot: usize, x: usize) -> u32 {
        self.counts[slot * self.width + x]
    }

    #[inline]
    fn row(&self, slot: usize) -> &[u32] {
        &self.counts[slot * self.width..(slot + 1) * self.width]
    }

    fn add_many(&mut self, topology: &IotTopology, x: usize, v: u32, count: u32) -> PathCost {
        let w = self.width;
        let counts = &mut self.counts;
        counts[x] += count;
        let mut cost = topology.walk(v, |slot| counts[slot * w + x] += count);
        cost.additions += 1;
        cost
    }

    /// Swaps one stored `outgoing` sample for `incoming`; the column total is unchanged.
    fn replace(&mut self, topology: &IotTopology, x: usize, outgoing: u32, incoming: u32) -> PathCost {
        let w = self.width;
        let counts = &mut self.counts;
        let removed = topology.walk(outgoing, |slot| counts[slot * w + x] -= 1);
        let added = topology.walk(incoming, |slot| counts[slot * w + x] += 1);
        removed + added
    }

    fn to_iot(&self, topology: &Arc<IotTopology>, x: usize) -> Iot {
        let mut iot = Iot::new(topology.clone());
        let counts: Vec<u32> = (0..topology.slot_count()).map(|s| self.get(s, x)).collect();
        iot.load_counters(&counts);
        iot
    }
}

/// Running-order-statistic state for one image (or one band of rows).
pub struct WindowEngine<'a, T: Tally = OpCounters> {
    image: &'a GrayImage,
    topology: Arc<IotTopology>,
    n: usize,
    half: usize,
    rank: u32,
    max_error: u32,
    policy: UpdatePolicy,
    columns: ColumnBank,
    window: Vec<u32>,
    /// `x + 1` of the position a window node was last synchronized at; 0 when invalid.
    synced: Vec<u32>,
    x: usize,
    y: usize,
    rows: Range<usize>,
    tally: T,
}

impl<'a> WindowEngine<'a, OpCounters> {
    /// Engine over the whole image with operation counting.
    pub fn new(
        image: &'a GrayImage,
        n: usize,
        topology: Arc<IotTopology>,
        rank: u32,
        max_error: u32,
    ) -> Result<Self> {
        Self::with_tally(
            image,
            n,
            topology,
            rank,
            max_error,
            UpdatePolicy::OnDemand,
            0..image.height(),
            OpCounters::default(),
        )
    }
}

impl<'a, T: Tally> WindowEngine<'a, T> {
    #[allow(clippy::too_many_arguments)]
    pub fn with_tally(
        image: &'a GrayImage,
        n: usize,
        topology: Arc<IotTopology>,
        rank: u32,
        max_error: u32,
        policy: UpdatePolicy,
        rows: Range<usize>,
        tally: T,
    ) -> Result<Self> {
        check_window(image, n)?;
        let area = (n * n) as u32;
        if rank == 0 || rank > area {
            return Err(Error::config(format!("rank {rank} outside [1, {area}]")));
        }
        if max_error == 0 {
            return Err(Error::config("max_error must be at least 1"));
        }
        if topology.bit_depth() != image.bit_depth() {
            return Err(Error::config(format!(
                "topology is for {}-bit data but the image is {}-bit",
                topology.bit_depth(),
                image.bit_depth()
            )));
        }
        if rows.start >= rows.end || rows.end > image.height() {
            return Err(Error::config(format!(
                "row range {rows:?} invalid for height {}",
                image.height()
            )));
        }
        let slots = topology.slot_count();
        let mut window = vec![0; slots];
        window[0] = area;
        let mut engine = Self {
            image,
            columns: ColumnBank::new(&topology, image.width()),
            topology,
            n,
            half: n / 2,
            rank,
            max_error,
            policy,
            window,
            synced: vec![0; slots],
            x: 0,
            y: rows.start,
            rows,
            tally,
        };
        engine.init_columns();
        Ok(engine)
    }

    /// Fills every column tree with the clamped vertical span of the first row.
    /// Replicated border rows go in as one weighted insertion.
    fn init_columns(&mut self) {
        let h = self.half as isize;
        let y = self.y as isize;
        let last = self.image.height() as isize - 1;
        for x in 0..self.image.width() {
            let mut dy = -h;
            while dy <= h {
                let row = (y + dy).clamp(0, last);
                let mut run = 1;
                while dy + run <= h && (y + dy + run).clamp(0, last) == row {
                    run += 1;
                }
                let v = u32::from(self.image.get(x, row as usize));
                let cost = self.columns.add_many(&self.topology, x, v, run as u32);
                self.tally.charge(Phase::ColumnMaintenance, cost);
                dy += run;
            }
        }
    }

    pub fn topology(&self) -> &Arc<IotTopology> {
        &self.topology
    }

    pub fn window_size(&self) -> usize {
        self.n
    }

    /// Position of the next output pixel.
    pub fn position(&self) -> (usize, usize) {
        (self.x, self.y)
    }

    pub fn is_done(&self) -> bool {
        self.y >= self.rows.end
    }

    pub fn tally(&self) -> &T {
        &self.tally
    }

    pub fn into_tally(self) -> T {
        self.tally
    }

    /// Snapshot of the column tree for image column `x`.
    pub fn column_iot(&self, x: usize) -> Iot {
        self.columns.to_iot(&self.topology, x)
    }

    #[inline]
    fn clamp_col(&self, p: isize) -> usize {
        p.clamp(0, self.image.width() as isize - 1) as usize
    }

    /// Column `x` becomes the incoming column on the current row: drop the
    /// sample leaving its span at the top and add the one entering at the
    /// bottom. No-op on the first row of the engine.
    fn advance_column(&mut self, x: usize) {
        if self.y == self.rows.start {
            return;
        }
        let h = self.half as isize;
        let y = self.y as isize;
        let outgoing = u32::from(self.image.get_clamped(x as isize, y - h - 1));
        let incoming = u32::from(self.image.get_clamped(x as isize, y + h));
        let cost = self.columns.replace(&self.topology, x, outgoing, incoming);
        self.tally.charge(Phase::ColumnMaintenance, cost);
    }

    fn begin_row(&mut self) {
        let last_col = self.half.min(self.image.width() - 1);
        for x in 0..=last_col {
            self.advance_column(x);
        }
        self.synced.fill(0);
        if self.policy == UpdatePolicy::Unconditional {
            for slot in 1..self.window.len() {
                self.window[slot] = self.rebuild_sum(slot, 0);
            }
            let slots = (self.window.len() - 1) as u64;
            self.tally.charge(
                Phase::WindowUpdate,
                PathCost {
                    additions: slots * self.n as u64,
                    comparisons: 0,
                },
            );
        }
    }

    fn rebuild_sum(&self, slot: usize, x: usize) -> u32 {
        let row = self.columns.row(slot);
        let h = self.half as isize;
        let x = x as isize;
        let mut sum = 0;
        for p in (x - h)..=(x + h) {
            sum += row[self.clamp_col(p)];
        }
        sum
    }

    /// Brings window node `slot` up to date for window centre `x` and returns its count.
    #[cfg(test)]
    fn sync_node(&mut self, slot: usize, x: usize) -> u32 {
        sync_slot(
            slot,
            x,
            self.half,
            self.image.width(),
            &self.columns,
            &mut self.window,
            &mut self.synced,
            &mut self.tally,
        )
    }

    /// Computes the next output pixel and advances the scan position.
    /// Returns `None` once every row has been produced.
    pub fn step(&mut self) -> Option<Selection> {
        if self.is_done() {
            return None;
        }
        let x = self.x;
        let width = self.image.width();
        if x == 0 {
            self.begin_row();
        } else {
            let incoming = x + self.half;
            if incoming < width {
                self.advance_column(incoming);
            }
            if self.policy == UpdatePolicy::Unconditional {
                self.shift_all(x);
            }
        }

        let (selection, cost) = match self.policy {
            UpdatePolicy::OnDemand => {
                let Self {
                    topology,
                    columns,
                    window,
                    synced,
                    tally,
                    half,
                    rank,
                    max_error,
                    ..
                } = self;
                topology.descend(*rank, *max_error, |slot| {
                    sync_slot(slot, x, *half, width, columns, window, synced, tally)
                })
            }
            UpdatePolicy::Unconditional => {
                let window = &self.window;
                self.topology
                    .descend(self.rank, self.max_error, |slot| window[slot])
            }
        };
        self.tally.charge(Phase::Extraction, cost);
        self.tally.pixel_done();

        self.x += 1;
        if self.x == width {
            self.x = 0;
            self.y += 1;
        }
        Some(selection)
    }

    fn shift_all(&mut self, x: usize) {
        let h = self.half as isize;
        let out = self.clamp_col(x as isize - h - 1);
        let inc = self.clamp_col(x as isize + h);
        for slot in 1..self.window.len() {
            let row = self.columns.row(slot);
            self.window[slot] = self.window[slot] - row[out] + row[inc];
        }
        let slots = (self.window.len() - 1) as u64;
        self.tally.charge(
            Phase::WindowUpdate,
            PathCost {
                additions: 2 * slots,
                comparisons: 0,
            },
        );
    }

    /// Runs the engine to completion, writing rows `rows` of the output into `out`.
    fn run_into(mut self, out: &mut [u16]) -> T {
        let mut i = 0;
        while let Some(s) = self.step() {
            out[i] = s.value as u16;
            i += 1;
        }
        self.tally
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn sync_slot<T: Tally>(
    slot: usize,
    x: usize,
    half: usize,
    width: usize,
    columns: &ColumnBank,
    window: &mut [u32],
    synced: &mut [u32],
    tally: &mut T,
) -> u32 {
    let stamp = synced[slot];
    let here = x as u32 + 1;
    let mut cost = PathCost {
        additions: 0,
        comparisons: 1,
    };
    if stamp != here {
        let n = 2 * half + 1;
        let row = columns.row(slot);
        let clamp = |p: isize| p.clamp(0, width as isize - 1) as usize;
        let h = half as isize;
        let gap = if stamp == 0 || stamp > here {
            usize::MAX
        } else {
            (here - stamp) as usize
        };
        if gap < n {
            let mut count = window[slot];
            for p in (stamp as usize)..=x {
                let p = p as isize;
                count = count - row[clamp(p - h - 1)] + row[clamp(p + h)];
            }
            window[slot] = count;
            cost.additions = 2 * gap as u64;
            tally.sync_event(if gap == 1 {
                SyncKind::Elementary
            } else {
                SyncKind::Replay
            });
        } else {
            let xi = x as isize;
            let mut sum = 0;
            for p in (xi - h)..=(xi + h) {
                sum += row[clamp(p)];
            }
            window[slot] = sum;
            cost.additions = n as u64;
            tally.sync_event(SyncKind::Rebuild);
        }
        synced[slot] = here;
    }
    tally.charge(Phase::WindowUpdate, cost);
    window[slot]
}

/// The topology a configuration asks for. Adaptive requests whose profile
/// carries no weight fall back to the uniform tree.
pub fn resolve_topology(image: &GrayImage, config: &FilterConfig) -> Result<Arc<IotTopology>> {
    let d = image.bit_depth();
    let topology = match &config.topology {
        TopologyChoice::Uniform => IotTopology::uniform(d)?,
        TopologyChoice::Adaptive(source) => {
            let profile = match source {
                ProfileSource::Auto => auto_profile(image, config.window)?,
                ProfileSource::Given(p) => p.clone(),
            };
            if profile.len() != image.levels() {
                return Err(Error::input(format!(
                    "profile has {} entries but the image has {} gray levels",
                    profile.len(),
                    image.levels()
                )));
            }
            if profile.is_degenerate() {
                IotTopology::uniform(d)?
            } else {
                build_adaptive_topology(&profile, d, 1)?
            }
        }
    };
    Ok(Arc::new(topology))
}

/// Filters the whole image, returning the output and phase-split operation counts.
pub fn filter_image(image: &GrayImage, config: &FilterConfig) -> Result<(GrayImage, OpCounters)> {
    filter_image_with::<OpCounters>(image, config, |a, b| a.merge(&b))
}

/// Same as [`filter_image`] with every counting hook compiled out.
pub fn filter_image_uncounted(image: &GrayImage, config: &FilterConfig) -> Result<GrayImage> {
    filter_image_with::<crate::instrument::NoTally>(image, config, |_, _| {}).map(|(img, _)| img)
}

fn filter_image_with<T>(
    image: &GrayImage,
    config: &FilterConfig,
    merge: impl Fn(&mut T, T),
) -> Result<(GrayImage, T)>
where
    T: Tally + Default + Send,
{
    check_window(image, config.window)?;
    let topology = resolve_topology(image, config)?;
    let rank = config.effective_rank();
    let (w, h) = (image.width(), image.height());
    let bands = config.bands.clamp(1, h);
    let mut out = vec![0u16; w * h];

    let mut engines = Vec::with_capacity(bands);
    for b in 0..bands {
        let rows = (b * h / bands)..((b + 1) * h / bands);
        engines.push(WindowEngine::with_tally(
            image,
            config.window,
            topology.clone(),
            rank,
            config.max_error,
            config.update,
            rows,
            T::default(),
        )?);
    }

    let mut total = T::default();
    if bands == 1 {
        let engine = engines.pop().expect("one engine");
        merge(&mut total, engine.run_into(&mut out));
    } else {
        let mut chunks = Vec::with_capacity(bands);
        let mut rest = out.as_mut_slice();
        for engine in &engines {
            let len = engine.rows.len() * w;
            let (head, tail) = rest.split_at_mut(len);
            chunks.push(head);
            rest = tail;
        }
        let tallies = std::thread::scope(|scope| {
            let handles: Vec<_> = engines
                .into_iter()
                .zip(chunks)
                .map(|(engine, chunk)| scope.spawn(move || engine.run_into(chunk)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("band worker panicked"))
                .collect::<Vec<_>>()
        });
        for t in tallies {
            merge(&mut total, t);
        }
    }
    Ok((GrayImage::from_vec(w, h, image.bit_depth(), out)?, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iot::uniform_topology;
    use rand::{Rng, SeedableRng};

    fn random_image(w: usize, h: usize, d: u8, seed: u64) -> GrayImage {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let max = 1u32 << d;
        GrayImage::from_fn(w, h, d, |_, _| rng.random_range(0..max) as u16).unwrap()
    }

    fn window_values(img: &GrayImage, n: usize, x: usize, y: usize) -> Vec<u32> {
        let h = (n / 2) as isize;
        let mut v = Vec::with_capacity(n * n);
        for dy in -h..=h {
            for dx in -h..=h {
                v.push(u32::from(img.get_clamped(x as isize + dx, y as isize + dy)));
            }
        }
        v
    }

    fn uniform(d: u8) -> Arc<IotTopology> {
        Arc::new(uniform_topology(d).unwrap())
    }

    #[test]
    fn config_errors() {
        let img = random_image(8, 8, 8, 1);
        let t = uniform(8);
        assert!(matches!(
            WindowEngine::new(&img, 4, t.clone(), 8, 1),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            WindowEngine::new(&img, 3, t.clone(), 0, 1),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            WindowEngine::new(&img, 3, t.clone(), 10, 1),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            WindowEngine::new(&img, 19, t.clone(), 1, 1),
            Err(Error::Input(_))
        ));
        assert!(WindowEngine::new(&img, 17, t.clone(), 1, 1).is_ok());
        assert!(matches!(
            WindowEngine::new(&img, 3, uniform(16), 5, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rank_helpers() {
        assert_eq!(median_rank(3), 5);
        assert_eq!(median_rank(51), 1301);
        assert_eq!(percentile_rank(3, 50.0).unwrap(), 5);
        assert_eq!(percentile_rank(3, 0.0).unwrap(), 1);
        assert_eq!(percentile_rank(3, 100.0).unwrap(), 9);
        assert!(percentile_rank(3, 101.0).is_err());
    }

    #[test]
    fn constant_image_columns_hold_one_leaf() {
        let img = GrayImage::from_vec(6, 5, 8, vec![99; 30]).unwrap();
        let engine = WindowEngine::new(&img, 5, uniform(8), 13, 1).unwrap();
        for x in 0..6 {
            let col = engine.column_iot(x);
            assert_eq!(col.total(), 5);
            assert_eq!(col.node_count(crate::iot::NodeId { lo: 99, hi: 100 }).unwrap(), 5);
        }
    }

    #[test]
    fn single_pixel_is_replicated() {
        let img = GrayImage::from_vec(1, 1, 8, vec![7]).unwrap();
        let mut engine = WindowEngine::new(&img, 3, uniform(8), 1, 1).unwrap();
        assert_eq!(engine.column_iot(0).total(), 3);
        assert_eq!(engine.step().unwrap().value, 7);
        assert!(engine.step().is_none());
        for r in 1..=9 {
            let mut e = WindowEngine::new(&img, 3, uniform(8), r, 1).unwrap();
            assert_eq!(e.step().unwrap().value, 7);
        }
    }

    #[test]
    fn initial_columns_match_brute_force_spans() {
        let img = random_image(9, 7, 8, 3);
        let n = 5;
        let engine = WindowEngine::new(&img, n, uniform(8), 13, 1).unwrap();
        for x in 0..9 {
            let col = engine.column_iot(x);
            let span: Vec<u32> = (-2..=2)
                .map(|dy| u32::from(img.get_clamped(x as isize, dy)))
                .collect();
            for node in col.topology().nodes() {
                let brute = span.iter().filter(|&&v| node.id.contains(v)).count() as u32;
                assert_eq!(col.node_count(node.id).unwrap(), brute);
            }
        }
    }

    #[test]
    fn equal_samples_leave_a_column_unchanged() {
        // Every column is constant, so each row swap removes and adds the same value.
        let img = GrayImage::from_fn(4, 6, 8, |x, _| (x * 50) as u16).unwrap();
        let mut engine = WindowEngine::new(&img, 3, uniform(8), 5, 1).unwrap();
        let before: Vec<_> = (0..4).map(|x| engine.column_iot(x)).collect();
        for _ in 0..8 {
            engine.step();
        }
        assert_eq!(engine.position(), (0, 2));
        for (x, b) in before.iter().enumerate() {
            assert_eq!(&engine.column_iot(x), b);
        }
    }

    #[test]
    fn columns_after_a_row_equal_fresh_columns() {
        let img = random_image(11, 9, 8, 5);
        let n = 5;
        let topo = uniform(8);
        let mut engine = WindowEngine::new(&img, n, topo.clone(), 13, 1).unwrap();
        for y in 0..9 {
            while engine.position() != (0, y + 1) {
                engine.step();
            }
            let fresh = WindowEngine::with_tally(
                &img,
                n,
                topo.clone(),
                13,
                1,
                UpdatePolicy::OnDemand,
                y..9,
                OpCounters::default(),
            )
            .unwrap();
            for x in 0..11 {
                assert_eq!(engine.column_iot(x), fresh.column_iot(x), "row {y} column {x}");
            }
        }
    }

    #[test]
    fn synced_nodes_match_brute_force_window_counts() {
        let img = random_image(23, 6, 8, 11);
        let n = 7;
        let topo = uniform(8);
        let nodes = topo.nodes();
        let mut engine = WindowEngine::new(&img, n, topo.clone(), 25, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        while !engine.is_done() {
            let (x, y) = engine.position();
            engine.step();
            let values = window_values(&img, n, x, y);
            // Sync a random selection of nodes at the position just produced.
            for _ in 0..20 {
                let node = nodes[rng.random_range(0..nodes.len())];
                let Some(slot) = node.slot.filter(|&s| s > 0) else { continue };
                let got = engine.sync_node(slot, x);
                let brute = values.iter().filter(|&&v| node.id.contains(v)).count() as u32;
                assert_eq!(got, brute, "node {:?} at ({x}, {y})", node.id);
            }
        }
    }

    #[test]
    fn one_column_gap_is_elementary() {
        let img = random_image(16, 4, 8, 9);
        let mut engine = WindowEngine::new(&img, 3, uniform(8), 5, 1).unwrap();
        engine.step();
        engine.step();
        let slot = 1;
        engine.sync_node(slot, 0);
        let before = engine.tally().clone();
        engine.sync_node(slot, 1);
        let after = engine.tally().clone();
        assert_eq!(after.elementary, before.elementary + 1);
        assert_eq!(after.window.additions - before.window.additions, 2);
        // Already current: only the staleness test.
        engine.sync_node(slot, 1);
        assert_eq!(engine.tally().window.additions, after.window.additions);
        assert_eq!(engine.tally().window.comparisons, after.window.comparisons + 1);
    }

    #[test]
    fn gaps_replay_or_rebuild() {
        let img = random_image(40, 3, 8, 4);
        let n = 5;
        let mut engine = WindowEngine::new(&img, n, uniform(8), 13, 1).unwrap();
        for _ in 0..30 {
            engine.step();
        }
        let slot = engine.topology().slot_count() - 1;
        engine.sync_node(slot, 20);
        let t0 = engine.tally().clone();
        engine.sync_node(slot, 23);
        assert_eq!(engine.tally().replay, t0.replay + 1);
        assert_eq!(engine.tally().window.additions - t0.window.additions, 6);
        let t1 = engine.tally().clone();
        engine.sync_node(slot, 28);
        assert_eq!(engine.tally().rebuild, t1.rebuild + 1);
        assert_eq!(engine.tally().window.additions - t1.window.additions, n as u64);
    }

    #[test]
    fn consecutive_visits_are_elementary() {
        // A constant image sends every descent down the same path.
        let img = GrayImage::from_vec(20, 2, 8, vec![100; 40]).unwrap();
        let mut engine = WindowEngine::new(&img, 3, uniform(8), 5, 1).unwrap();
        while engine.step().is_some() {}
        let t = engine.tally();
        // Each row starts invalid: one rebuild per visited node, then elementary syncs.
        assert_eq!(t.rebuild, 2 * 8);
        assert_eq!(t.replay, 0);
        assert_eq!(t.elementary, 2 * 19 * 8);
    }

    #[test]
    fn checkerboard_majority() {
        let img = GrayImage::from_fn(8, 8, 8, |x, y| if (x + y) % 2 == 0 { 10 } else { 240 }).unwrap();
        let (out, _) = filter_image(&img, &FilterConfig::median(3)).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let mut v = window_values(&img, 3, x, y);
                v.sort_unstable();
                assert_eq!(u32::from(out.get(x, y)), v[4], "({x}, {y})");
            }
        }
    }

    #[test]
    fn outlier_is_removed() {
        let mut img = GrayImage::from_vec(3, 3, 8, vec![50; 9]).unwrap();
        img.set(1, 1, 255);
        let (out, _) = filter_image(&img, &FilterConfig::median(3)).unwrap();
        assert!(out.data().iter().all(|&v| v == 50));
    }

    #[test]
    fn exhausted_engine_returns_none() {
        let img = random_image(3, 2, 8, 1);
        let mut engine = WindowEngine::new(&img, 3, uniform(8), 5, 1).unwrap();
        assert_eq!((0..6).filter_map(|_| engine.step()).count(), 6);
        assert!(engine.is_done());
        assert!(engine.step().is_none());
        assert_eq!(engine.tally().pixels, 6);
    }

    #[test]
    fn extraction_visits_depth_nodes() {
        let img = random_image(30, 20, 16, 8);
        let cfg = FilterConfig::median(5);
        let (_, c) = filter_image(&img, &cfg).unwrap();
        assert_eq!(c.extraction.comparisons, 16 * 600);
        assert_eq!(c.window.comparisons, 16 * 600);
        let (_, c) = filter_image(&img, &cfg.clone().with_max_error(16)).unwrap();
        assert_eq!(c.extraction.comparisons, 12 * 600);
        let (_, c) = filter_image(&img, &cfg.with_max_error(100)).unwrap();
        assert_eq!(c.extraction.comparisons, 10 * 600);
    }

    #[test]
    fn unconditional_matches_on_demand() {
        for seed in 0..4 {
            let img = random_image(17, 13, 8, seed);
            let cfg = FilterConfig::median(5).with_rank(3 + seed as u32);
            let (a, _) = filter_image(&img, &cfg).unwrap();
            let (b, c) = filter_image(&img, &cfg.with_update(UpdatePolicy::Unconditional)).unwrap();
            assert_eq!(a, b);
            assert_eq!(c.sync_events(), 0);
        }
    }

    #[test]
    fn bands_match_single_pass() {
        let img = random_image(31, 29, 8, 21);
        let cfg = FilterConfig::median(7);
        let (one, c1) = filter_image(&img, &cfg).unwrap();
        for bands in [2, 3, 7, 29, 64] {
            let (many, c) = filter_image(&img, &cfg.clone().with_bands(bands)).unwrap();
            assert_eq!(one, many, "{bands} bands");
            assert_eq!(c.pixels, c1.pixels);
        }
    }

    #[test]
    fn counting_does_not_change_output() {
        let img = random_image(25, 19, 16, 6);
        let cfg = FilterConfig::median(9).with_max_error(5);
        let (counted, _) = filter_image(&img, &cfg).unwrap();
        let plain = filter_image_uncounted(&img, &cfg).unwrap();
        assert_eq!(counted, plain);
    }
}
