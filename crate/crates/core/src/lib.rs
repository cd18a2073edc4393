//! Running median and general order-statistic filters for 8- and 16-bit
//! gray images, built on implicit interval-occurrences trees.
//!
//! A tree over a `d`-bit value range keeps one occurrence counter per left
//! child (plus the total), so it needs exactly `2^d` counters, the size of a
//! plain histogram, while inserting, removing and selecting in `d` steps.
//! [`filter_image`] combines one tree per image column with a lazily
//! synchronized window tree to filter with a per-pixel cost that is nearly
//! independent of the window size.
//!
//! ```
//! use iot_median::{filter_image, FilterConfig, GrayImage};
//!
//! let mut img = GrayImage::from_vec(3, 3, 8, vec![50; 9]).unwrap();
//! img.set(1, 1, 255);
//! let (out, counters) = filter_image(&img, &FilterConfig::median(3)).unwrap();
//! assert!(out.data().iter().all(|&v| v == 50));
//! assert_eq!(counters.pixels, 9);
//! ```

pub mod adaptive;
pub mod engine;
pub mod error;
pub mod gen;
pub mod image;
pub mod instrument;
pub mod iot;
pub mod oracle;
pub mod pgm;

pub use adaptive::{
    auto_profile, box_mean, build_adaptive_topology, estimate_median_profile, mix_profiles,
    FrequencyProfile, Provenance,
};
pub use engine::{
    filter_image, filter_image_uncounted, median_rank, percentile_rank, resolve_topology,
    FilterConfig, ProfileSource, TopologyChoice, UpdatePolicy, WindowEngine,
};
pub use error::{Error, Result};
pub use gen::{gen_image, ImageKind};
pub use image::GrayImage;
pub use instrument::{counters_report, OpCounters, PathCost, ReportFormat};
pub use iot::{uniform_topology, Iot, IotTopology, NodeId, Selection, TopologyMode};
pub use oracle::{huang_filter, oracle_filter, OracleKind};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
