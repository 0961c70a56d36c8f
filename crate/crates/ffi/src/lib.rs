//! C ABI over the cartography toolkit.
//!
//! Objects cross the boundary as opaque handles. Each is created through an
//! out-pointer and released with the matching `cg_*_free`. Every fallible function returns a [`CgStatus`]; on
//! failure the message is available from [`cg_last_error`] on the same
//! thread until the next failing call.
//!
//! Strings passed in must be NUL-terminated UTF-8. Strings returned through
//! an out-pointer are owned by the caller and released with
//! [`cg_string_free`]. Strings returned directly (guids, the last error,
//! the version) are borrowed from their owner.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cartography::datamap::{render_map, MapStyle};
use cartography::dataset::{self, ColumnSchema, DatasetSplit, SplitKind};
use cartography::dynamics::{compute_dynamics, load_dynamics, save_dynamics, TrainingDynamics};
use cartography::ingest::ingest_file;
use cartography::subset::{self, materialize, recipe, select, SubsetSpec};
use cartography::trainer::{train, TrainConfig};
use cartography::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Selection = 6,
    Training = 7,
    OutOfRange = 8,
    Internal = 9,
}

/// A parsed train/dev/test split.
pub struct CgDataset {
    split: DatasetSplit,
    skipped: usize,
}

/// Per-sample training dynamics, sorted by guid.
pub struct CgDynamics {
    rows: Vec<TrainingDynamics>,
}

/// The guids picked by a subset recipe, in claim order.
pub struct CgSelection {
    spec: SubsetSpec,
    inner: subset::Selection,
    guids: Vec<CString>,
}

/// Per-sample values copied out of a [`CgDynamics`] row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CgDynamicsRow {
    pub confidence: f64,
    pub variability: f64,
    pub correctness: f64,
    pub epochs: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', "\\0")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(CgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn status_of(e: &Error) -> CgStatus {
    match e {
        Error::Parse { .. } | Error::Schema(_) => CgStatus::Parse,
        Error::Io { .. } | Error::RawIo(_) => CgStatus::Io,
        Error::Selection { .. } => CgStatus::Selection,
        Error::Training { .. } => CgStatus::Training,
        Error::Stage { source, .. } => status_of(source),
        _ => CgStatus::Validation,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CgStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {what}"));
            CgStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn path(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    text(p, what).map(PathBuf::from)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn drop_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn cg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a train split in SNLI/GLUE layout. With `row_index_guids` set,
/// guids are the data-row index instead of the `pairID` column.
#[no_mangle]
pub unsafe extern "C" fn cg_dataset_read_tsv(
    tsv_path: *const c_char,
    row_index_guids: bool,
    out: *mut *mut CgDataset,
) -> CgStatus {
    guard(|| {
        let p = path(tsv_path, "tsv_path")?;
        let schema = if row_index_guids { ColumnSchema::without_guid() } else { ColumnSchema::default() };
        let parsed = dataset::read_tsv(&p, &schema, SplitKind::Train)?;
        put(out, CgDataset { split: parsed.split, skipped: parsed.skipped })
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_dataset_len(ds: *const CgDataset, out_len: *mut usize, out_skipped: *mut usize) -> CgStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        if out_len.is_null() {
            return Err(null("out_len"));
        }
        *out_len = ds.split.len();
        if !out_skipped.is_null() {
            *out_skipped = ds.skipped;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_dataset_free(ds: *mut CgDataset) {
    drop_handle(ds);
}

/// Ingests an epoch log (one JSON record per line) and computes dynamics.
#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_from_log(log_path: *const c_char, out: *mut *mut CgDynamics) -> CgStatus {
    guard(|| {
        let p = path(log_path, "log_path")?;
        let (records, _) = ingest_file(&p)?;
        put(out, CgDynamics { rows: compute_dynamics(&records)? })
    })
}

/// Trains the reference classifier on `ds` and computes dynamics from its
/// per-epoch records. Other trainer settings keep their defaults.
#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_train(
    ds: *const CgDataset,
    epochs: usize,
    seed: u64,
    hash_dim: usize,
    out: *mut *mut CgDynamics,
) -> CgStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let config = TrainConfig { epochs, seed, hash_dim, ..TrainConfig::default() };
        config.validate()?;
        let mut records = Vec::new();
        train(&ds.split, &config, &mut records)?;
        put(out, CgDynamics { rows: compute_dynamics(&records)? })
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_load(tsv_path: *const c_char, out: *mut *mut CgDynamics) -> CgStatus {
    guard(|| {
        let p = path(tsv_path, "tsv_path")?;
        put(out, CgDynamics { rows: load_dynamics(&p)? })
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_save(d: *const CgDynamics, tsv_path: *const c_char) -> CgStatus {
    guard(|| {
        let d = handle(d, "dynamics")?;
        save_dynamics(&d.rows, &path(tsv_path, "tsv_path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_len(d: *const CgDynamics) -> usize {
    d.as_ref().map_or(0, |d| d.rows.len())
}

/// Copies row `index` into `out_row`. Rows are sorted by guid.
#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_get(d: *const CgDynamics, index: usize, out_row: *mut CgDynamicsRow) -> CgStatus {
    guard(|| {
        let d = handle(d, "dynamics")?;
        if out_row.is_null() {
            return Err(null("out_row"));
        }
        let row = d
            .rows
            .get(index)
            .ok_or_else(|| Failure(CgStatus::OutOfRange, format!("index {index} out of range for {} rows", d.rows.len())))?;
        *out_row = CgDynamicsRow {
            confidence: row.confidence,
            variability: row.variability,
            correctness: row.correctness,
            epochs: row.epochs,
        };
        Ok(())
    })
}

/// Copies the guid of row `index` into `buf` as a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_guid(d: *const CgDynamics, index: usize, buf: *mut c_char, buf_len: usize) -> CgStatus {
    guard(|| {
        let d = handle(d, "dynamics")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let row = d
            .rows
            .get(index)
            .ok_or_else(|| Failure(CgStatus::OutOfRange, format!("index {index} out of range for {} rows", d.rows.len())))?;
        let bytes = row.guid.as_bytes();
        if bytes.len() + 1 > buf_len {
            return Err(Failure(CgStatus::OutOfRange, format!("guid needs {} bytes, buffer has {buf_len}", bytes.len() + 1)));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_dynamics_free(d: *mut CgDynamics) {
    drop_handle(d);
}

/// Renders the data map as an SVG document (default style, given size).
#[no_mangle]
pub unsafe extern "C" fn cg_render_map(d: *const CgDynamics, width: u32, height: u32, out_svg: *mut *mut c_char) -> CgStatus {
    guard(|| {
        let d = handle(d, "dynamics")?;
        if out_svg.is_null() {
            return Err(null("out_svg"));
        }
        let epochs = d.rows.first().map_or(6, |r| r.epochs);
        let style = MapStyle { width_px: width, height_px: height, ..MapStyle::for_epochs(epochs) };
        let svg = render_map(&d.rows, &style)?;
        *out_svg = CString::new(svg).map_err(|e| Failure(CgStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Selects a subset by recipe name (`easy-33`, `hard+ambiguous`, ...).
#[no_mangle]
pub unsafe extern "C" fn cg_select_recipe(
    d: *const CgDynamics,
    recipe_name: *const c_char,
    seed: u64,
    out: *mut *mut CgSelection,
) -> CgStatus {
    guard(|| {
        let d = handle(d, "dynamics")?;
        let name = text(recipe_name, "recipe_name")?;
        let spec = recipe(name, seed)
            .ok_or_else(|| Failure(CgStatus::Validation, format!("unknown recipe `{name}`")))?;
        let inner = select(&spec, &d.rows, seed)?;
        let guids = inner
            .guids()
            .map(|g| CString::new(g).map_err(|e| Failure(CgStatus::Internal, e.to_string())))
            .collect::<Result<_, _>>()?;
        put(out, CgSelection { spec, inner, guids })
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_selection_len(s: *const CgSelection) -> usize {
    s.as_ref().map_or(0, |s| s.guids.len())
}

/// Guid at `index` in claim order, borrowed from the handle; null when out
/// of range.
#[no_mangle]
pub unsafe extern "C" fn cg_selection_guid(s: *const CgSelection, index: usize) -> *const c_char {
    s.as_ref().and_then(|s| s.guids.get(index)).map_or(ptr::null(), |g| g.as_ptr())
}

/// Writes the selected samples of `ds` as a train TSV and the provenance
/// manifest next to it.
#[no_mangle]
pub unsafe extern "C" fn cg_selection_write(
    s: *const CgSelection,
    ds: *const CgDataset,
    tsv_path: *const c_char,
    manifest_path: *const c_char,
) -> CgStatus {
    guard(|| {
        let s = handle(s, "selection")?;
        let ds = handle(ds, "dataset")?;
        let tsv = path(tsv_path, "tsv_path")?;
        let manifest = path(manifest_path, "manifest_path")?;
        let split = materialize(s.inner.guids(), &ds.split, s.spec.shuffle_seed)?;
        dataset::save_tsv(&split, &tsv)?;
        let mut bytes = Vec::new();
        subset::write_manifest(&s.inner, &mut bytes)?;
        std::fs::write(&manifest, bytes)
            .map_err(|e| Failure(CgStatus::Io, format!("{}: {e}", manifest.display())))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cg_selection_free(s: *mut CgSelection) {
    drop_handle(s);
}
