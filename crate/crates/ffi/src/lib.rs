//! C ABI for ml5g-core.
//!
//! Every function returns an [`Ml5gStatus`]. Objects cross the boundary as opaque handles that
//! the caller frees with the matching `*_free` function. After a non-OK status,
//! [`ml5g_last_error`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ml5g_core::assoc::{default_sources, nn_associate, run_training_phase, NnPredictor};
use ml5g_core::mlfo::{instantiate, parse_intent, HostRegistry, PipelineInstance};
use ml5g_core::nn::MlpModel;
use ml5g_core::stats::mean;
use ml5g_core::underlay::{
    compute_throughput, generate_deployment, ssf_associate, AssociationMap, DensityClass, Deployment, RadioConfig,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ml5gStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidIntent = 4,
    ValidationFailed = 5,
    BufferTooSmall = 6,
    Runtime = 7,
    Panic = 8,
}

/// A generated WLAN deployment.
pub struct Ml5gDeployment(Deployment);

/// A trained throughput model.
pub struct Ml5gModel(MlpModel);

/// An orchestrated pipeline instance.
pub struct Ml5gPipeline(PipelineInstance);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut buf = e.borrow_mut();
        buf.clear();
        buf.extend(msg.bytes().filter(|&b| b != 0));
    });
}

type FfiResult = Result<(), (Ml5gStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult) -> Ml5gStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Ml5gStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            Ml5gStatus::Panic
        }
    }
}

fn fail<T>(status: Ml5gStatus, msg: impl ToString) -> Result<T, (Ml5gStatus, String)> {
    Err((status, msg.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, (Ml5gStatus, String)> {
    if p.is_null() {
        return fail(Ml5gStatus::NullPointer, "null string argument");
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(Ml5gStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, (Ml5gStatus, String)> {
    p.as_ref()
        .map_or_else(|| fail(Ml5gStatus::NullPointer, "null handle"), Ok)
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, (Ml5gStatus, String)> {
    p.as_mut()
        .map_or_else(|| fail(Ml5gStatus::NullPointer, "null output pointer"), Ok)
}

/// Copies `text` plus a NUL into `buf`; `needed` receives the full size either way.
unsafe fn copy_out(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> FfiResult {
    let size = text.len() + 1;
    if let Some(n) = needed.as_mut() {
        *n = size;
    }
    if buf.is_null() || len < size {
        return fail(Ml5gStatus::BufferTooSmall, format!("need {size} bytes"));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

fn mean_throughput(d: &Deployment, map: &AssociationMap) -> Result<f64, (Ml5gStatus, String)> {
    let report = compute_throughput(d, map).or_else(|e| fail(Ml5gStatus::Runtime, e))?;
    Ok(mean(&report.per_sta.into_values().collect::<Vec<_>>()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ml5g_status_str(status: Ml5gStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        Ml5gStatus::Ok => b"ok\0",
        Ml5gStatus::NullPointer => b"null pointer\0",
        Ml5gStatus::InvalidUtf8 => b"invalid UTF-8\0",
        Ml5gStatus::InvalidArgument => b"invalid argument\0",
        Ml5gStatus::InvalidIntent => b"invalid intent\0",
        Ml5gStatus::ValidationFailed => b"model failed validation\0",
        Ml5gStatus::BufferTooSmall => b"buffer too small\0",
        Ml5gStatus::Runtime => b"runtime error\0",
        Ml5gStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ml5g_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> Ml5gStatus {
    let msg = LAST_ERROR.with(|e| String::from_utf8_lossy(&e.borrow()).into_owned());
    match copy_out(&msg, buf, len, needed) {
        Ok(()) => Ml5gStatus::Ok,
        Err((s, _)) => s,
    }
}

/// Generates a deployment of a density class (`"sparse"`, `"medium"` or `"dense"`).
///
/// # Safety
/// `density` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml5g_deployment_generate(
    density: *const c_char,
    side_m: f64,
    seed: u64,
    out: *mut *mut Ml5gDeployment,
) -> Ml5gStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let density: DensityClass = str_arg(density)?
            .parse()
            .or_else(|e| fail(Ml5gStatus::InvalidArgument, e))?;
        let d = generate_deployment(density, side_m, seed).or_else(|e| fail(Ml5gStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(Ml5gDeployment(d)));
        Ok(())
    })
}

/// # Safety
/// `deployment` must come from [`ml5g_deployment_generate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml5g_deployment_free(deployment: *mut Ml5gDeployment) {
    if !deployment.is_null() {
        drop(Box::from_raw(deployment));
    }
}

/// # Safety
/// Handles and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ml5g_deployment_counts(
    deployment: *const Ml5gDeployment,
    num_aps: *mut u32,
    num_stas: *mut u32,
) -> Ml5gStatus {
    guard(|| {
        let d = &handle(deployment)?.0;
        *out_ptr(num_aps)? = d.aps.len() as u32;
        *out_ptr(num_stas)? = d.stas.len() as u32;
        Ok(())
    })
}

/// Mean per-STA throughput (Mbps) under Strongest Signal First.
///
/// # Safety
/// Handles and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ml5g_ssf_mean_throughput(deployment: *const Ml5gDeployment, out_mbps: *mut f64) -> Ml5gStatus {
    guard(|| {
        let d = &handle(deployment)?.0;
        let out = out_ptr(out_mbps)?;
        let map = ssf_associate(d).or_else(|e| fail(Ml5gStatus::Runtime, e))?;
        *out = mean_throughput(d, &map)?;
        Ok(())
    })
}

/// Mean per-STA throughput (Mbps) under model-driven association, no policies.
///
/// # Safety
/// Handles and output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ml5g_nn_mean_throughput(
    deployment: *const Ml5gDeployment,
    model: *const Ml5gModel,
    order_seed: u64,
    out_mbps: *mut f64,
) -> Ml5gStatus {
    guard(|| {
        let d = &handle(deployment)?.0;
        let m = &handle(model)?.0;
        let out = out_ptr(out_mbps)?;
        let predictor = NnPredictor::new(m).or_else(|e| fail(Ml5gStatus::InvalidArgument, e))?;
        let map = nn_associate(d, &predictor, &[], order_seed).or_else(|e| fail(Ml5gStatus::Runtime, e))?;
        *out = mean_throughput(d, &map)?;
        Ok(())
    })
}

/// Loads a model from its JSON artifact bytes.
///
/// # Safety
/// `json` must be valid for `len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml5g_model_from_json(json: *const u8, len: usize, out: *mut *mut Ml5gModel) -> Ml5gStatus {
    guard(|| {
        let out = out_ptr(out)?;
        if json.is_null() {
            return fail(Ml5gStatus::NullPointer, "null model bytes");
        }
        let bytes = std::slice::from_raw_parts(json, len);
        let m = MlpModel::from_json(bytes).or_else(|e| fail(Ml5gStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(Ml5gModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml5g_model_free(model: *mut Ml5gModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicts throughput (Mbps) from raw, un-normalized features in the model's input order.
///
/// # Safety
/// `features` must be valid for `n` values; `out_mbps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml5g_model_predict(
    model: *const Ml5gModel,
    features: *const f64,
    n: usize,
    out_mbps: *mut f64,
) -> Ml5gStatus {
    guard(|| {
        let m = &handle(model)?.0;
        let out = out_ptr(out_mbps)?;
        if features.is_null() {
            return fail(Ml5gStatus::NullPointer, "null features");
        }
        let raw = std::slice::from_raw_parts(features, n);
        let x = m
            .norm_schema
            .normalize(raw)
            .or_else(|e| fail(Ml5gStatus::InvalidArgument, e))?;
        let y = m.forward(&x).or_else(|e| fail(Ml5gStatus::InvalidArgument, e))?;
        *out = m.norm_schema.target.denormalize(y).max(0.0);
        Ok(())
    })
}

/// Parses and instantiates an intent on the hosts it names.
///
/// # Safety
/// `intent_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml5g_pipeline_new(intent_json: *const c_char, out: *mut *mut Ml5gPipeline) -> Ml5gStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let text = str_arg(intent_json)?;
        let intent = parse_intent(text.as_bytes()).or_else(|e| fail(Ml5gStatus::InvalidIntent, e))?;
        let inst = instantiate(&intent, &HostRegistry::from_intent(&intent))
            .or_else(|e| fail(Ml5gStatus::InvalidIntent, e))?;
        *out = Box::into_raw(Box::new(Ml5gPipeline(inst)));
        Ok(())
    })
}

/// Runs the training phase; on success the pipeline is serving a validated model.
///
/// # Safety
/// `pipeline` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ml5g_pipeline_train(pipeline: *mut Ml5gPipeline) -> Ml5gStatus {
    guard(|| {
        let p = &mut out_ptr(pipeline)?.0;
        let mut sources = default_sources(&p.intent, RadioConfig::default());
        match run_training_phase(p, &mut sources) {
            Ok(_) => Ok(()),
            Err(e) if e.to_string().contains("passed validation") => fail(Ml5gStatus::ValidationFailed, e),
            Err(e) => fail(Ml5gStatus::Runtime, e),
        }
    })
}

/// Copies the pipeline's JSON state dump into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ml5g_pipeline_state_json(
    pipeline: *const Ml5gPipeline,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> Ml5gStatus {
    guard(|| {
        let p = &handle(pipeline)?.0;
        copy_out(&p.dump_json(), buf, len, needed)
    })
}

/// Copies the active model's JSON artifact into `buf`; fails if nothing is serving.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ml5g_pipeline_model_json(
    pipeline: *const Ml5gPipeline,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> Ml5gStatus {
    guard(|| {
        let p = &handle(pipeline)?.0;
        let Some(model) = p.active_model() else {
            return fail(Ml5gStatus::Runtime, "no active model");
        };
        let bytes = model.to_json().or_else(|e| fail(Ml5gStatus::Runtime, e))?;
        let text = String::from_utf8(bytes).or_else(|e| fail(Ml5gStatus::Runtime, e))?;
        copy_out(&text, buf, len, needed)
    })
}

/// # Safety
/// `pipeline` must come from [`ml5g_pipeline_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml5g_pipeline_free(pipeline: *mut Ml5gPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}
