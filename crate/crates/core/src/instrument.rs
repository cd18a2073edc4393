//! Operation counting.
//!
//! Counts follow three phases: column maintenance (value insertion/removal
//! in column trees), window update (synchronizing window-tree nodes from
//! column trees) and extraction (the rank descent itself). An *addition* is
//! any counter increment, decrement, add or subtract, plus every accumulator
//! addition in a descent. A *comparison* is any value-versus-bound test,
//! descent decision, staleness test or adaptive leaf test. Index arithmetic
//! is free.
//!
//! Engines are generic over [`Tally`]; [`NoTally`] compiles every hook away.

use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    ColumnMaintenance,
    WindowUpdate,
    Extraction,
}

/// How a window-tree node was brought up to date.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncKind {
    /// One-column gap: one subtraction and one addition.
    Elementary,
    /// Gap of several columns, replayed step by step.
    Replay,
    /// Invalid node or gap of at least `n`: summed over all window columns.
    Rebuild,
}

/// Additions and comparisons performed by a single tree walk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathCost {
    pub additions: u64,
    pub comparisons: u64,
}

impl Add for PathCost {
    type Output = PathCost;

    fn add(self, rhs: PathCost) -> PathCost {
        PathCost {
            additions: self.additions + rhs.additions,
            comparisons: self.comparisons + rhs.comparisons,
        }
    }
}

impl AddAssign for PathCost {
    fn add_assign(&mut self, rhs: PathCost) {
        *self = *self + rhs;
    }
}

pub trait Tally {
    fn charge(&mut self, phase: Phase, cost: PathCost);
    fn sync_event(&mut self, kind: SyncKind);
    fn pixel_done(&mut self);
}

/// A tally that records nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTally;

impl Tally for NoTally {
    #[inline(always)]
    fn charge(&mut self, _phase: Phase, _cost: PathCost) {}

    #[inline(always)]
    fn sync_event(&mut self, _kind: SyncKind) {}

    #[inline(always)]
    fn pixel_done(&mut self) {}
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub column: PathCost,
    pub window: PathCost,
    pub extraction: PathCost,
    pub pixels: u64,
    pub elementary: u64,
    pub replay: u64,
    pub rebuild: u64,
}

impl Tally for OpCounters {
    #[inline]
    fn charge(&mut self, phase: Phase, cost: PathCost) {
        match phase {
            Phase::ColumnMaintenance => self.column += cost,
            Phase::WindowUpdate => self.window += cost,
            Phase::Extraction => self.extraction += cost,
        }
    }

    #[inline]
    fn sync_event(&mut self, kind: SyncKind) {
        match kind {
            SyncKind::Elementary => self.elementary += 1,
            SyncKind::Replay => self.replay += 1,
            SyncKind::Rebuild => self.rebuild += 1,
        }
    }

    #[inline]
    fn pixel_done(&mut self) {
        self.pixels += 1;
    }
}

/// Per-pixel averages of an [`OpCounters`] run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerPixel {
    pub col_add: f64,
    pub col_cmp: f64,
    pub win_add: f64,
    pub win_cmp: f64,
    pub ext_add: f64,
    pub ext_cmp: f64,
    pub total_add: f64,
    pub total_cmp: f64,
}

impl OpCounters {
    pub fn total(&self) -> PathCost {
        self.column + self.window + self.extraction
    }

    pub fn sync_events(&self) -> u64 {
        self.elementary + self.replay + self.rebuild
    }

    /// Share of sync events that were elementary; zero when no node was synced.
    pub fn elementary_fraction(&self) -> f64 {
        let events = self.sync_events();
        if events == 0 {
            0.0
        } else {
            self.elementary as f64 / events as f64
        }
    }

    pub fn per_pixel(&self) -> PerPixel {
        let avg = |v: u64| {
            if self.pixels == 0 {
                0.0
            } else {
                v as f64 / self.pixels as f64
            }
        };
        let total = self.total();
        PerPixel {
            col_add: avg(self.column.additions),
            col_cmp: avg(self.column.comparisons),
            win_add: avg(self.window.additions),
            win_cmp: avg(self.window.comparisons),
            ext_add: avg(self.extraction.additions),
            ext_cmp: avg(self.extraction.comparisons),
            total_add: avg(total.additions),
            total_cmp: avg(total.comparisons),
        }
    }

    pub fn merge(&mut self, other: &OpCounters) {
        self.column += other.column;
        self.window += other.window;
        self.extraction += other.extraction;
        self.pixels += other.pixels;
        self.elementary += other.elementary;
        self.replay += other.replay;
        self.rebuild += other.rebuild;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Human,
    Csv,
}

pub const CSV_HEADER: &str = "label,col_add,col_cmp,win_add,win_cmp,ext_add,ext_cmp,total_add,total_cmp,elementary_fraction,pixels";

/// One CSV data row (no trailing newline). Labels must not contain commas.
pub fn csv_row(label: &str, counters: &OpCounters) -> String {
    let p = counters.per_pixel();
    format!(
        "{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
        label,
        p.col_add,
        p.col_cmp,
        p.win_add,
        p.win_cmp,
        p.ext_add,
        p.ext_cmp,
        p.total_add,
        p.total_cmp,
        counters.elementary_fraction(),
        counters.pixels
    )
}

/// Renders a phase table, one row per labelled run.
pub fn counters_report(runs: &[(String, OpCounters)], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for (label, counters) in runs {
                out.push_str(&csv_row(label, counters));
                out.push('\n');
            }
        }
        ReportFormat::Human => {
            let width = runs
                .iter()
                .map(|(l, _)| l.len())
                .max()
                .unwrap_or(0)
                .max(9);
            let _ = writeln!(
                out,
                "{:<width$} | {:>17} | {:>17} | {:>17} | {:>17} | {:>6} | {:>10}",
                "",
                "columns",
                "window",
                "extraction",
                "overall",
                "elem",
                "pixels",
            );
            let _ = writeln!(
                out,
                "{:<width$} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8} | {:>6} | {:>10}",
                "algorithm", "add", "cmp", "add", "cmp", "add", "cmp", "add", "cmp", "frac", "",
            );
            for (label, c) in runs {
                let p = c.per_pixel();
                let _ = writeln!(
                    out,
                    "{:<width$} | {:>8.1} {:>8.1} | {:>8.1} {:>8.1} | {:>8.1} {:>8.1} | {:>8.1} {:>8.1} | {:>6.3} | {:>10}",
                    label,
                    p.col_add,
                    p.col_cmp,
                    p.win_add,
                    p.win_cmp,
                    p.ext_add,
                    p.ext_cmp,
                    p.total_add,
                    p.total_cmp,
                    c.elementary_fraction(),
                    c.pixels,
                );
            }
        }
    }
    out
}
