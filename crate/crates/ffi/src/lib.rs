//! C ABI over `irrevis`.
//!
//! Objects are opaque handles created by `irrevis_*_new`/`_build`/
//! `_compute` functions and released with the matching `_free`. Every
//! fallible call returns an [`IrrevisStatus`]; on failure a description is
//! available from [`irrevis_last_error_message`] on the same thread.
//! Enumerated arguments are passed as `uint32_t` using the values of
//! [`IrrevisGraphKind`], [`IrrevisDivergence`] and [`IrrevisBias`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use irrevis::irreversibility::{irreversibility_profile, window_irreversibility};
use irrevis::nullmodels::{generate, GeneratorKind, GeneratorSpec};
use irrevis::visibility::{build, degree_sequences};
use irrevis::{
    Bias, DirectedVisibilityGraph, DivergenceConfig, DivergenceKind, Error, GraphKind,
    IrreversibilityProfile, TimeSeries,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrevisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    Domain = 4,
    DivergenceInfinite = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrevisGraphKind {
    Vg = 0,
    Hvg = 1,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrevisDivergence {
    Kld = 0,
    L1 = 1,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrevisBias {
    /// Plain divergence; fails on a support violation.
    None = 0,
    /// Zero frequencies become 1/n with n the window length.
    OneOverWindow = 1,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrevisGenerator {
    WhiteNoise = 0,
    AdditiveWalk = 1,
    MultiplicativeWalk = 2,
    Fbm = 3,
}

/// A finite-valued series.
pub struct IrrevisSeries(TimeSeries);

/// A directed visibility graph.
pub struct IrrevisGraph(DirectedVisibilityGraph);

/// Per-window irreversibility values.
pub struct IrrevisProfile(IrreversibilityProfile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IrrevisStatus {
    match e {
        Error::InsufficientData(_) | Error::NoUsableData(_) | Error::EmptySeries(_) => {
            IrrevisStatus::InsufficientData
        }
        Error::Domain(_) => IrrevisStatus::Domain,
        Error::DivergenceInfinite { .. } => IrrevisStatus::DivergenceInfinite,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => IrrevisStatus::Internal,
        _ => IrrevisStatus::InvalidArgument,
    }
}

struct Failure(IrrevisStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: IrrevisStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, turning errors and panics into a status plus message.
fn guard<F>(f: F) -> IrrevisStatus
where
    F: FnOnce() -> Result<(), Failure> + UnwindSafe,
{
    match catch_unwind(f) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            IrrevisStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            IrrevisStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(
            IrrevisStatus::NullPointer,
            format!("`{name}` is NULL"),
        ))
    } else {
        Ok(())
    }
}

fn graph_kind(v: u32) -> Result<GraphKind, Failure> {
    match v {
        0 => Ok(GraphKind::Vg),
        1 => Ok(GraphKind::Hvg),
        _ => Err(fail(
            IrrevisStatus::InvalidArgument,
            format!("unknown graph kind {v}"),
        )),
    }
}

fn divergence_config(divergence: u32, bias: u32) -> Result<DivergenceConfig, Failure> {
    let kind = match divergence {
        0 => DivergenceKind::Kld,
        1 => DivergenceKind::L1,
        _ => {
            return Err(fail(
                IrrevisStatus::InvalidArgument,
                format!("unknown divergence {divergence}"),
            ))
        }
    };
    let bias = match bias {
        0 => Bias::None,
        1 => Bias::OneOverWindow,
        _ => {
            return Err(fail(
                IrrevisStatus::InvalidArgument,
                format!("unknown bias {bias}"),
            ))
        }
    };
    Ok(DivergenceConfig { kind, bias })
}

unsafe fn slice<'a>(values: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(values, "values")?;
    Ok(std::slice::from_raw_parts(values, len))
}

/// Message for the last failed call on this thread, or NULL after a
/// success. Valid until the next `irrevis_*` call on the same thread.
#[no_mangle]
pub extern "C" fn irrevis_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn irrevis_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `len` values into a new series.
#[no_mangle]
pub unsafe extern "C" fn irrevis_series_new(
    values: *const f64,
    len: usize,
    out: *mut *mut IrrevisSeries,
) -> IrrevisStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = slice(values, len)?.to_vec();
        let s = TimeSeries::new("series", v, None)?;
        *out = Box::into_raw(Box::new(IrrevisSeries(s)));
        Ok(())
    })
}

/// Draws a synthetic series; `mu`, `sigma` and `hurst` are used by the
/// kinds they apply to.
#[no_mangle]
pub unsafe extern "C" fn irrevis_series_generate(
    kind: u32,
    length: usize,
    mu: f64,
    sigma: f64,
    hurst: f64,
    seed: u64,
    out: *mut *mut IrrevisSeries,
) -> IrrevisStatus {
    guard(|| {
        non_null(out, "out")?;
        let kind = match kind {
            0 => GeneratorKind::WhiteNoise,
            1 => GeneratorKind::AdditiveWalk,
            2 => GeneratorKind::MultiplicativeWalk,
            3 => GeneratorKind::Fbm,
            _ => {
                return Err(fail(
                    IrrevisStatus::InvalidArgument,
                    format!("unknown generator {kind}"),
                ))
            }
        };
        let spec = GeneratorSpec::new(kind, length, seed)
            .with_mu(mu)
            .with_sigma(sigma)
            .with_hurst(hurst);
        *out = Box::into_raw(Box::new(IrrevisSeries(generate(&spec)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_series_len(series: *const IrrevisSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Copies up to `cap` values into `out`; `written` receives the count.
#[no_mangle]
pub unsafe extern "C" fn irrevis_series_values(
    series: *const IrrevisSeries,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> IrrevisStatus {
    guard(|| {
        non_null(series, "series")?;
        non_null(written, "written")?;
        let v = (*series).0.values();
        if cap < v.len() {
            *written = v.len();
            return Err(fail(
                IrrevisStatus::BufferTooSmall,
                format!("need {} slots, got {cap}", v.len()),
            ));
        }
        non_null(out, "out")?;
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        *written = v.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_series_free(series: *mut IrrevisSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Builds the graph of kind `kind` on `values[start .. start + len]` of
/// `series`.
#[no_mangle]
pub unsafe extern "C" fn irrevis_graph_build(
    series: *const IrrevisSeries,
    start: usize,
    len: usize,
    kind: u32,
    out: *mut *mut IrrevisGraph,
) -> IrrevisStatus {
    guard(|| {
        non_null(series, "series")?;
        non_null(out, "out")?;
        let kind = graph_kind(kind)?;
        let v = (*series).0.values();
        let end = start
            .checked_add(len)
            .filter(|&e| e <= v.len())
            .ok_or_else(|| {
                fail(
                    IrrevisStatus::InvalidArgument,
                    format!("range {start}+{len} exceeds series length {}", v.len()),
                )
            })?;
        let g = build(&v[start..end], kind)?;
        *out = Box::into_raw(Box::new(IrrevisGraph(g)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_graph_node_count(graph: *const IrrevisGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_nodes())
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_graph_edge_count(graph: *const IrrevisGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_edges())
}

/// Writes the edges (source < target, sorted) into `sources`/`targets`,
/// each of capacity `cap`.
#[no_mangle]
pub unsafe extern "C" fn irrevis_graph_edges(
    graph: *const IrrevisGraph,
    sources: *mut usize,
    targets: *mut usize,
    cap: usize,
    written: *mut usize,
) -> IrrevisStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(written, "written")?;
        let g = &(*graph).0;
        let m = g.n_edges();
        *written = m;
        if cap < m {
            return Err(fail(
                IrrevisStatus::BufferTooSmall,
                format!("need {m} slots, got {cap}"),
            ));
        }
        if m > 0 {
            non_null(sources, "sources")?;
            non_null(targets, "targets")?;
        }
        for (k, (i, j)) in g.edges().enumerate() {
            *sources.add(k) = i;
            *targets.add(k) = j;
        }
        Ok(())
    })
}

/// In- and out-degree of every node; both buffers need `node_count` slots.
#[no_mangle]
pub unsafe extern "C" fn irrevis_graph_degrees(
    graph: *const IrrevisGraph,
    k_in: *mut usize,
    k_out: *mut usize,
    cap: usize,
) -> IrrevisStatus {
    guard(|| {
        non_null(graph, "graph")?;
        let g = &(*graph).0;
        if cap < g.n_nodes() {
            return Err(fail(
                IrrevisStatus::BufferTooSmall,
                format!("need {} slots, got {cap}", g.n_nodes()),
            ));
        }
        non_null(k_in, "k_in")?;
        non_null(k_out, "k_out")?;
        let d = degree_sequences(g);
        ptr::copy_nonoverlapping(d.k_in.as_ptr(), k_in, d.k_in.len());
        ptr::copy_nonoverlapping(d.k_out.as_ptr(), k_out, d.k_out.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_graph_free(graph: *mut IrrevisGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Irreversibility `D(P_in || P_out)` of a single window.
#[no_mangle]
pub unsafe extern "C" fn irrevis_window_irreversibility(
    values: *const f64,
    len: usize,
    kind: u32,
    divergence: u32,
    bias: u32,
    out: *mut f64,
) -> IrrevisStatus {
    guard(|| {
        non_null(out, "out")?;
        let x = slice(values, len)?;
        let kind = graph_kind(kind)?;
        let cfg = divergence_config(divergence, bias)?;
        *out = window_irreversibility(x, kind, cfg)?;
        Ok(())
    })
}

/// One value per non-overlapping window of size `n`.
#[no_mangle]
pub unsafe extern "C" fn irrevis_profile_compute(
    series: *const IrrevisSeries,
    n: usize,
    kind: u32,
    divergence: u32,
    bias: u32,
    out: *mut *mut IrrevisProfile,
) -> IrrevisStatus {
    guard(|| {
        non_null(series, "series")?;
        non_null(out, "out")?;
        let kind = graph_kind(kind)?;
        let cfg = divergence_config(divergence, bias)?;
        let p = irreversibility_profile(&(*series).0, n, kind, cfg)?;
        *out = Box::into_raw(Box::new(IrrevisProfile(p)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_profile_len(profile: *const IrrevisProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_profile_values(
    profile: *const IrrevisProfile,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> IrrevisStatus {
    guard(|| {
        non_null(profile, "profile")?;
        non_null(written, "written")?;
        let v = (*profile).0.values();
        *written = v.len();
        if cap < v.len() {
            return Err(fail(
                IrrevisStatus::BufferTooSmall,
                format!("need {} slots, got {cap}", v.len()),
            ));
        }
        non_null(out, "out")?;
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn irrevis_profile_free(profile: *mut IrrevisProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}
