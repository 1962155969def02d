//! C ABI over molgen: SMILES validation and canonicalisation, descriptors,
//! checkpoint loading and generation campaigns.
//!
//! Every fallible call returns a [`MolgenStatus`]; the message of the last
//! failure on the calling thread is available from
//! [`molgen_last_error_message`]. Handles are opaque and must be released
//! with their `_free` function. Strings are copied into caller buffers: when
//! the buffer is too small the call fails with `MOLGEN_BUFFER_TOO_SMALL` and
//! reports the required size (including the terminating NUL).

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use molgen::cvae::{load_checkpoint, ModelCheckpoint};
use molgen::descriptors::{PropertyId, PropertySet};
use molgen::generate::{self, CampaignConfig, GenerateError, GenerationReport, LatentSampler};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MolgenStatus {
    MolgenOk = 0,
    MolgenNullPointer = 1,
    MolgenInvalidUtf8 = 2,
    MolgenParseError = 3,
    MolgenDescriptorError = 4,
    MolgenIoError = 5,
    MolgenCheckpointError = 6,
    MolgenInvalidArgument = 7,
    MolgenQuotaNotMet = 8,
    MolgenBufferTooSmall = 9,
    MolgenIndexOutOfRange = 10,
    MolgenInternalError = 11,
}

use MolgenStatus::*;

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MolgenProperties {
    pub mw: f64,
    pub logp: f64,
    pub hbd: u32,
    pub hba: u32,
    pub tpsa: f64,
}

impl From<PropertySet> for MolgenProperties {
    fn from(p: PropertySet) -> Self {
        MolgenProperties { mw: p.mw, logp: p.logp, hbd: p.hbd, hba: p.hba, tpsa: p.tpsa }
    }
}

impl From<MolgenProperties> for PropertySet {
    fn from(p: MolgenProperties) -> Self {
        PropertySet { mw: p.mw, logp: p.logp, hbd: p.hbd, hba: p.hba, tpsa: p.tpsa }
    }
}

/// Campaign settings; start from [`molgen_campaign_defaults`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MolgenCampaignOptions {
    pub quota: u32,
    pub attempt_cap: u64,
    pub seed: u64,
    pub workers: u32,
    pub writeouts_per_attempt: u32,
    pub temperature: f64,
    /// Neighbourhood noise scale; used only with a seed molecule.
    pub sigma: f64,
}

/// A loaded checkpoint.
pub struct MolgenModel {
    inner: ModelCheckpoint,
}

/// The outcome of a generation campaign.
pub struct MolgenReport {
    inner: GenerationReport,
    quota_met: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: MolgenStatus, message: impl std::fmt::Display) -> MolgenStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.to_string());
    status
}

fn guard(f: impl FnOnce() -> MolgenStatus) -> MolgenStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(MolgenInternalError, "panic inside molgen"))
}

unsafe fn text<'a>(ptr: *const c_char) -> Result<&'a str, MolgenStatus> {
    if ptr.is_null() {
        return Err(fail(MolgenNullPointer, "null string argument"));
    }
    CStr::from_ptr(ptr).to_str().map_err(|e| fail(MolgenInvalidUtf8, e))
}

/// Copies `s` and a NUL into `buf`; `needed` (if not null) receives the size
/// required.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> MolgenStatus {
    let size = s.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if buf.is_null() || len < size {
        return fail(MolgenBufferTooSmall, format!("buffer of {len} bytes, {size} needed"));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    MolgenOk
}

/// Length in bytes of the last error message on this thread, plus one for
/// the NUL.
#[no_mangle]
pub extern "C" fn molgen_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len() + 1)
}

/// Copies the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn molgen_last_error_message(buf: *mut c_char, len: usize, needed: *mut usize) -> MolgenStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_out(&msg, buf, len, needed)
}

/// 1 if `smiles` parses into a valid molecule, 0 if not, -1 on a bad
/// argument.
///
/// # Safety
/// `smiles` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn molgen_is_valid(smiles: *const c_char) -> i32 {
    match text(smiles) {
        Ok(s) => catch_unwind(|| molgen::is_valid(s) as i32).unwrap_or(-1),
        Err(_) => -1,
    }
}

/// Canonical SMILES of `smiles`.
///
/// # Safety
/// `smiles` must be a NUL-terminated string and `buf` must point to `len`
/// writable bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn molgen_canonicalize(smiles: *const c_char, buf: *mut c_char, len: usize, needed: *mut usize) -> MolgenStatus {
    guard(|| {
        let s = match text(smiles) {
            Ok(s) => s,
            Err(e) => return e,
        };
        match molgen::parse_smiles(s) {
            Ok(m) => copy_out(&molgen::canonicalize(&m), buf, len, needed),
            Err(e) => fail(MolgenParseError, e),
        }
    })
}

/// The five descriptors of `smiles`.
///
/// # Safety
/// `smiles` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn molgen_properties(smiles: *const c_char, out: *mut MolgenProperties) -> MolgenStatus {
    guard(|| {
        if out.is_null() {
            return fail(MolgenNullPointer, "null output");
        }
        let s = match text(smiles) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let mol = match molgen::parse_smiles(s) {
            Ok(m) => m,
            Err(e) => return fail(MolgenParseError, e),
        };
        match molgen::property_vector(&mol) {
            Ok(p) => {
                *out = p.into();
                MolgenOk
            }
            Err(e) => fail(MolgenDescriptorError, e),
        }
    })
}

/// Loads a checkpoint into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn molgen_model_load(path: *const c_char, out: *mut *mut MolgenModel) -> MolgenStatus {
    guard(|| {
        if out.is_null() {
            return fail(MolgenNullPointer, "null output");
        }
        *out = std::ptr::null_mut();
        let p = match text(path) {
            Ok(p) => p,
            Err(e) => return e,
        };
        match load_checkpoint(Path::new(p)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MolgenModel { inner }));
                MolgenOk
            }
            Err(molgen::cvae::CvaeError::Io { path, source }) => fail(MolgenIoError, format!("{path}: {source}")),
            Err(e) => fail(MolgenCheckpointError, e),
        }
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`molgen_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn molgen_model_free(model: *mut MolgenModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Latent dimension of a model, 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn molgen_model_latent_dim(model: *const MolgenModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.hyper.latent_dim)
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MolgenProperty {
    MolgenMw = 0,
    MolgenLogp = 1,
    MolgenHbd = 2,
    MolgenHba = 3,
    MolgenTpsa = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MolgenRange {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Training-set minimum, maximum and mean of one property.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn molgen_model_stats(model: *const MolgenModel, property: MolgenProperty, out: *mut MolgenRange) -> MolgenStatus {
    let Some(m) = model.as_ref() else { return fail(MolgenNullPointer, "null model") };
    if out.is_null() {
        return fail(MolgenNullPointer, "null output");
    }
    let id = PropertyId::ALL[property as usize];
    let r = m.inner.stats.get(id);
    *out = MolgenRange { min: r.min, max: r.max, mean: r.mean };
    MolgenOk
}

/// The training maximum of `property` scaled by 1.1, or NaN for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn molgen_beyond_range_value(model: *const MolgenModel, property: MolgenProperty) -> f64 {
    model
        .as_ref()
        .map_or(f64::NAN, |m| generate::beyond_range_condition(PropertyId::ALL[property as usize], &m.inner.stats))
}

#[no_mangle]
pub extern "C" fn molgen_campaign_defaults() -> MolgenCampaignOptions {
    let d = CampaignConfig::default();
    MolgenCampaignOptions {
        quota: d.quota as u32,
        attempt_cap: d.attempt_cap,
        seed: d.seed,
        workers: d.workers as u32,
        writeouts_per_attempt: d.writeouts_per_attempt as u32,
        temperature: d.temperature,
        sigma: generate::DEFAULT_SIGMA,
    }
}

/// Runs a campaign towards `target`. Latents are drawn from the prior, or
/// around `seed_smiles` when it is not null. A report is returned in `*out`
/// both on success and when the attempt cap ends the campaign early (status
/// `MOLGEN_QUOTA_NOT_MET`).
///
/// # Safety
/// `model` must be a live handle, `target` and `options` readable,
/// `seed_smiles` null or NUL-terminated, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn molgen_generate(
    model: *const MolgenModel,
    target: *const MolgenProperties,
    seed_smiles: *const c_char,
    options: *const MolgenCampaignOptions,
    out: *mut *mut MolgenReport,
) -> MolgenStatus {
    guard(|| {
        if out.is_null() {
            return fail(MolgenNullPointer, "null output");
        }
        *out = std::ptr::null_mut();
        let (Some(m), Some(t), Some(o)) = (model.as_ref(), target.as_ref(), options.as_ref()) else {
            return fail(MolgenNullPointer, "null model, target or options");
        };
        let sampler = if seed_smiles.is_null() {
            LatentSampler::Random
        } else {
            match text(seed_smiles) {
                Ok(s) => LatentSampler::AroundMolecule { smiles: s.to_string(), sigma: o.sigma },
                Err(e) => return e,
            }
        };
        let cfg = CampaignConfig {
            quota: o.quota as usize,
            attempt_cap: o.attempt_cap,
            seed: o.seed,
            workers: o.workers.max(1) as usize,
            writeouts_per_attempt: o.writeouts_per_attempt.max(1) as usize,
            temperature: o.temperature,
        };
        let target: PropertySet = (*t).into();
        match generate::generate_until(&m.inner, &target, &sampler, &m.inner.stats, &cfg) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MolgenReport { inner, quota_met: true }));
                MolgenOk
            }
            Err(GenerateError::AttemptCapExceeded { report, found, quota, cap }) => {
                *out = Box::into_raw(Box::new(MolgenReport { inner: *report, quota_met: false }));
                fail(MolgenQuotaNotMet, format!("attempt cap {cap} reached with {found} of {quota} successes"))
            }
            Err(e @ GenerateError::Io { .. }) => fail(MolgenIoError, e),
            Err(e) => fail(MolgenInvalidArgument, e),
        }
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must come from [`molgen_generate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn molgen_report_free(report: *mut MolgenReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Campaign counts. Any output pointer may be null.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn molgen_report_counts(
    report: *const MolgenReport,
    attempts: *mut u64,
    writeouts: *mut u64,
    valid: *mut u64,
    unique_valid: *mut u64,
    successes: *mut u64,
) -> MolgenStatus {
    let Some(r) = report.as_ref() else { return fail(MolgenNullPointer, "null report") };
    let put = |p: *mut u64, v: u64| {
        if !p.is_null() {
            *p = v;
        }
    };
    let i = &r.inner;
    put(attempts, i.attempts);
    put(writeouts, i.writeouts);
    put(valid, i.valid);
    put(unique_valid, i.unique_valid);
    put(successes, i.successes.len() as u64);
    MolgenOk
}

/// 1 if the campaign reached its quota, 0 if not or for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn molgen_report_quota_met(report: *const MolgenReport) -> i32 {
    report.as_ref().is_some_and(|r| r.quota_met) as i32
}

/// Canonical SMILES and properties of the `index`-th success.
///
/// # Safety
/// `report` must be a live handle, `buf` must point to `len` writable bytes,
/// and `needed` and `props` may be null.
#[no_mangle]
pub unsafe extern "C" fn molgen_report_success(
    report: *const MolgenReport,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
    props: *mut MolgenProperties,
) -> MolgenStatus {
    let Some(r) = report.as_ref() else { return fail(MolgenNullPointer, "null report") };
    let Some((smiles, p)) = r.inner.successes.get(index) else {
        return fail(MolgenIndexOutOfRange, format!("index {index} of {} successes", r.inner.successes.len()));
    };
    if !props.is_null() {
        *props = (*p).into();
    }
    copy_out(smiles, buf, len, needed)
}

/// Writes every distinct valid molecule of the campaign as CSV.
///
/// # Safety
/// `report` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn molgen_report_write_csv(report: *const MolgenReport, path: *const c_char) -> MolgenStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return fail(MolgenNullPointer, "null report") };
        let p = match text(path) {
            Ok(p) => p,
            Err(e) => return e,
        };
        match generate::write_results_csv(&r.inner, Path::new(p)) {
            Ok(()) => MolgenOk,
            Err(e) => fail(MolgenIoError, e),
        }
    })
}
