//! C ABI for `iot-median`.
//!
//! Every fallible function returns an [`IotmStatus`]; on failure a message
//! for the calling thread is available from [`iotm_last_error`]. Objects are
//! opaque handles created by `*_new`/constructor functions and released by
//! the matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use iot_median::{
    build_adaptive_topology, filter_image, read_pgm, write_pgm, Error, FilterConfig, FrequencyProfile,
    GrayImage, Iot, IotTopology, OpCounters, ProfileSource, Provenance, TopologyChoice, UpdatePolicy,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IotmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidInput = 3,
    /// Selection on an empty tree.
    EmptyQuery = 4,
    /// Removing a value that is not stored.
    Logic = 5,
    Format = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IotmMode {
    Uniform = 0,
    /// Adaptive tree built from the image's own statistics.
    Adaptive = 1,
    /// Uniform tree, every window node updated at every step.
    Unconditional = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IotmFilterConfig {
    /// Odd window side.
    pub window: u32,
    /// 1-based rank; 0 selects the median.
    pub rank: u32,
    /// Largest tolerated error in gray values; 1 is exact.
    pub max_error: u32,
    /// An `IotmMode` value.
    pub mode: u32,
    /// Horizontal bands filtered in parallel; 0 is treated as 1.
    pub bands: u32,
}

/// Operation totals of one filter run, split by phase.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IotmCounters {
    pub column_additions: u64,
    pub column_comparisons: u64,
    pub window_additions: u64,
    pub window_comparisons: u64,
    pub extraction_additions: u64,
    pub extraction_comparisons: u64,
    pub pixels: u64,
    pub elementary_syncs: u64,
    pub replay_syncs: u64,
    pub rebuild_syncs: u64,
}

impl From<&OpCounters> for IotmCounters {
    fn from(c: &OpCounters) -> Self {
        Self {
            column_additions: c.column.additions,
            column_comparisons: c.column.comparisons,
            window_additions: c.window.additions,
            window_comparisons: c.window.comparisons,
            extraction_additions: c.extraction.additions,
            extraction_comparisons: c.extraction.comparisons,
            pixels: c.pixels,
            elementary_syncs: c.elementary,
            replay_syncs: c.replay,
            rebuild_syncs: c.rebuild,
        }
    }
}

/// Shared tree shape.
pub struct IotmTopology(Arc<IotTopology>);

/// One occurrence tree.
pub struct IotmTree(Iot);

/// Gray image with 8- or 16-bit samples.
pub struct IotmImage(GrayImage);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> IotmStatus {
    match e {
        Error::Config(_) => IotmStatus::InvalidConfig,
        Error::Input(_) => IotmStatus::InvalidInput,
        Error::Query(_) => IotmStatus::EmptyQuery,
        Error::Logic(_) => IotmStatus::Logic,
        Error::Format { .. } => IotmStatus::Format,
        Error::Io(_) => IotmStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), IotmStatus>) -> IotmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            IotmStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic");
            IotmStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, IotmStatus>;
}

impl<T> OrStatus<T> for Result<T, Error> {
    fn or_status(self) -> Result<T, IotmStatus> {
        self.map_err(|e| {
            set_last_error(&e.to_string());
            status_of(&e)
        })
    }
}

fn null(what: &str) -> IotmStatus {
    set_last_error(&format!("{what} is null"));
    IotmStatus::NullPointer
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, IotmStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, IotmStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), IotmStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, IotmStatus> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path).to_str().map_err(|_| {
        set_last_error("path is not valid UTF-8");
        IotmStatus::InvalidInput
    })
}

/// Message describing the last failure on this thread, or an empty string.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn iotm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of an `IotmStatus` value.
#[no_mangle]
pub extern "C" fn iotm_status_name(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"invalid configuration",
        3 => c"invalid input",
        4 => c"empty query",
        5 => c"logic error",
        6 => c"format error",
        7 => c"i/o error",
        8 => c"panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}

/// Bisection tree for `bit_depth`-bit values (1..=16).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_topology_uniform(bit_depth: u8, out: *mut *mut IotmTopology) -> IotmStatus {
    guard(|| {
        let t = IotTopology::uniform(bit_depth).or_status()?;
        put(out, IotmTopology(Arc::new(t)))
    })
}

/// Tree balanced for the access frequencies in `weights` (`2^bit_depth`
/// non-negative entries).
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn iotm_topology_adaptive(
    weights: *const f64,
    len: usize,
    bit_depth: u8,
    out: *mut *mut IotmTopology,
) -> IotmStatus {
    guard(|| {
        if weights.is_null() {
            return Err(null("weights"));
        }
        let w = std::slice::from_raw_parts(weights, len).to_vec();
        let profile = FrequencyProfile::new(w, Provenance::External).or_status()?;
        let t = build_adaptive_topology(&profile, bit_depth, 1).or_status()?;
        put(out, IotmTopology(Arc::new(t)))
    })
}

/// Number of counters a tree of this shape stores; 0 for a null handle.
///
/// # Safety
/// `topology` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_topology_counter_count(topology: *const IotmTopology) -> usize {
    topology.as_ref().map_or(0, |t| t.0.slot_count())
}

/// # Safety
/// `topology` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iotm_topology_free(topology: *mut IotmTopology) {
    if !topology.is_null() {
        drop(Box::from_raw(topology));
    }
}

/// Empty tree sharing `topology`; the topology handle may be freed afterwards.
///
/// # Safety
/// `topology` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iotm_tree_new(topology: *const IotmTopology, out: *mut *mut IotmTree) -> IotmStatus {
    guard(|| {
        let t = as_ref(topology, "topology")?;
        put(out, IotmTree(Iot::new(t.0.clone())))
    })
}

/// # Safety
/// `tree` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iotm_tree_free(tree: *mut IotmTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_tree_add(tree: *mut IotmTree, value: u32) -> IotmStatus {
    guard(|| {
        as_mut(tree, "tree")?.0.add_value(value).or_status()?;
        Ok(())
    })
}

/// Removes one occurrence of `value`; fails with `Logic` if none is stored.
///
/// # Safety
/// `tree` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_tree_remove(tree: *mut IotmTree, value: u32) -> IotmStatus {
    guard(|| {
        as_mut(tree, "tree")?.0.remove_value(value).or_status()?;
        Ok(())
    })
}

/// Number of stored values; 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_tree_total(tree: *const IotmTree) -> u32 {
    tree.as_ref().map_or(0, |t| t.0.total())
}

/// The `rank`-th smallest stored value (1-based) to within `max_error`.
/// `error_bound` receives the width of the reported interval and may be null.
///
/// # Safety
/// `tree` must be a live handle; `value` writable; `error_bound` null or writable.
#[no_mangle]
pub unsafe extern "C" fn iotm_tree_select(
    tree: *const IotmTree,
    rank: u32,
    max_error: u32,
    value: *mut u32,
    error_bound: *mut u32,
) -> IotmStatus {
    guard(|| {
        let t = as_ref(tree, "tree")?;
        if value.is_null() {
            return Err(null("value"));
        }
        let s = t.0.select_rank(rank, max_error).or_status()?;
        *value = s.value;
        if !error_bound.is_null() {
            *error_bound = s.error_bound;
        }
        Ok(())
    })
}

/// Image copied from `width * height` row-major samples.
///
/// # Safety
/// `data` must point to `width * height` readable samples; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_from_data(
    width: usize,
    height: usize,
    bit_depth: u8,
    data: *const u16,
    out: *mut *mut IotmImage,
) -> IotmStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let len = width.checked_mul(height).ok_or_else(|| {
            set_last_error("image dimensions overflow");
            IotmStatus::InvalidInput
        })?;
        let samples = std::slice::from_raw_parts(data, len).to_vec();
        let img = GrayImage::from_vec(width, height, bit_depth, samples).or_status()?;
        put(out, IotmImage(img))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_read_pgm(path: *const c_char, out: *mut *mut IotmImage) -> IotmStatus {
    guard(|| {
        let img = read_pgm(path_arg(path)?).or_status()?;
        put(out, IotmImage(img))
    })
}

/// # Safety
/// `image` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_write_pgm(image: *const IotmImage, path: *const c_char) -> IotmStatus {
    guard(|| {
        let img = as_ref(image, "image")?;
        write_pgm(&img.0, path_arg(path)?).or_status()
    })
}

/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_width(image: *const IotmImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_height(image: *const IotmImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_bit_depth(image: *const IotmImage) -> u8 {
    image.as_ref().map_or(0, |i| i.0.bit_depth())
}

/// Row-major samples, valid while the handle lives; null for a null handle.
///
/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_data(image: *const IotmImage) -> *const u16 {
    image.as_ref().map_or(ptr::null(), |i| i.0.data().as_ptr())
}

/// # Safety
/// `image` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iotm_image_free(image: *mut IotmImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Filters `image` into a new image. `counters` may be null.
///
/// # Safety
/// `image` and `config` must be valid; `out` writable; `counters` null or writable.
#[no_mangle]
pub unsafe extern "C" fn iotm_filter(
    image: *const IotmImage,
    config: *const IotmFilterConfig,
    out: *mut *mut IotmImage,
    counters: *mut IotmCounters,
) -> IotmStatus {
    guard(|| {
        let img = as_ref(image, "image")?;
        let c = as_ref(config, "config")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let mut cfg = FilterConfig::median(c.window as usize)
            .with_max_error(c.max_error)
            .with_bands(c.bands.max(1) as usize);
        if c.rank != 0 {
            cfg = cfg.with_rank(c.rank);
        }
        cfg = match c.mode {
            m if m == IotmMode::Uniform as u32 => cfg,
            m if m == IotmMode::Adaptive as u32 => {
                cfg.with_topology(TopologyChoice::Adaptive(ProfileSource::Auto))
            }
            m if m == IotmMode::Unconditional as u32 => cfg.with_update(UpdatePolicy::Unconditional),
            m => {
                set_last_error(&format!("unknown mode {m}"));
                return Err(IotmStatus::InvalidConfig);
            }
        };
        let (filtered, tally) = filter_image(&img.0, &cfg).or_status()?;
        if !counters.is_null() {
            *counters = IotmCounters::from(&tally);
        }
        put(out, IotmImage(filtered))
    })
}
