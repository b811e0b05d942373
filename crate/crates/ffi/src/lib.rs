//! C ABI over the hdcc compiler and interpreter.
//!
//! Every function returns an [`HdccStatus`]. On failure the message is kept
//! per thread and read with [`hdcc_last_error_message`]. Strings handed out
//! by the library are released with [`hdcc_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hdcc::driver::{self, DataPaths, DriverError, Overrides};
use hdcc::frontend::{EmbeddingKind, ProgramDescription};
use hdcc::hdc::{HdcError, Model, Sample, ValueRange};
use hdcc::ir::{dump, fuse, lower};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdccStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Lex, parse, semantic or type diagnostics.
    Diagnostic = 3,
    Io = 4,
    /// Malformed data, bad labels or sample shape.
    Data = 5,
    Backend = 6,
    /// Call not valid in the model's current state.
    State = 7,
    Panic = 8,
}

/// A validated, type-checked description.
pub struct HdccProgram {
    desc: ProgramDescription,
}

/// A trainable associative-memory classifier for one program.
pub struct HdccModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: HdccStatus, msg: impl Into<String>) -> HdccStatus {
    set_error(msg);
    status
}

fn driver_status(e: &DriverError) -> HdccStatus {
    match e {
        DriverError::Diagnostics { .. } | DriverError::Usage(_) => HdccStatus::Diagnostic,
        DriverError::Io { .. } | DriverError::Description { .. } => HdccStatus::Io,
        DriverError::Data(_) | DriverError::Hdc(_) => HdccStatus::Data,
        DriverError::Backend(_) | DriverError::Toolchain(_) => HdccStatus::Backend,
    }
}

fn from_driver(e: DriverError) -> HdccStatus {
    fail(driver_status(&e), e.to_string())
}

fn from_hdc(e: HdcError) -> HdccStatus {
    fail(HdccStatus::Data, e.to_string())
}

/// Runs `f`, converting a panic into `HdccStatus::Panic`.
fn guard(f: impl FnOnce() -> HdccStatus) -> HdccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == HdccStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(HdccStatus::Panic, format!("internal error: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, HdccStatus> {
    if p.is_null() {
        return Err(fail(HdccStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HdccStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, HdccStatus> {
    p.as_ref()
        .ok_or_else(|| fail(HdccStatus::NullArgument, format!("{what} is NULL")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, HdccStatus> {
    p.as_mut()
        .ok_or_else(|| fail(HdccStatus::NullArgument, format!("{what} is NULL")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NUL removed").into_raw()
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn hdcc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hdcc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and checks a description held in memory.
#[no_mangle]
pub unsafe extern "C" fn hdcc_program_from_source(source: *const c_char, out: *mut *mut HdccProgram) -> HdccStatus {
    guard(|| {
        let out = tri!(out_arg(out, "out"));
        *out = ptr::null_mut();
        let src = tri!(str_arg(source, "source"));
        let desc = tri!(driver::load_source("<source>", src, &Overrides::default()).map_err(from_driver));
        *out = Box::into_raw(Box::new(HdccProgram { desc }));
        HdccStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_program_from_file(path: *const c_char, out: *mut *mut HdccProgram) -> HdccStatus {
    guard(|| {
        let out = tri!(out_arg(out, "out"));
        *out = ptr::null_mut();
        let path = tri!(str_arg(path, "path"));
        let desc = tri!(driver::load_description(Path::new(path), &Overrides::default()).map_err(from_driver));
        *out = Box::into_raw(Box::new(HdccProgram { desc }));
        HdccStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_program_free(program: *mut HdccProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Replaces the seed used for basis tables.
#[no_mangle]
pub unsafe extern "C" fn hdcc_program_set_seed(program: *mut HdccProgram, seed: u64) -> HdccStatus {
    guard(|| {
        tri!(out_arg(program, "program")).desc.seed = seed;
        HdccStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_program_input_dim(program: *const HdccProgram) -> usize {
    program.as_ref().map_or(0, |p| p.desc.input_dim)
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_program_classes(program: *const HdccProgram) -> usize {
    program.as_ref().map_or(0, |p| p.desc.classes)
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_program_dimensions(program: *const HdccProgram) -> usize {
    program.as_ref().map_or(0, |p| p.desc.dimensions)
}

/// True when samples are real values; false when they are integer indices.
#[no_mangle]
pub unsafe extern "C" fn hdcc_program_real_input(program: *const HdccProgram) -> bool {
    program
        .as_ref()
        .is_some_and(|p| p.desc.weight_embed.kind == EmbeddingKind::Level)
}

/// Textual IR, fused unless `unfused`. Free with `hdcc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn hdcc_program_ir_dump(
    program: *const HdccProgram,
    unfused: bool,
    out: *mut *mut c_char,
) -> HdccStatus {
    guard(|| {
        let out = tri!(out_arg(out, "out"));
        *out = ptr::null_mut();
        let p = tri!(ref_arg(program, "program"));
        let ir = lower(&p.desc).expect("checked when the program was created");
        *out = into_c_string(if unfused { dump(&ir) } else { dump(&fuse(&ir)) });
        HdccStatus::Ok
    })
}

/// Writes the C sources and Makefile into `dir`.
#[no_mangle]
pub unsafe extern "C" fn hdcc_program_emit(
    program: *const HdccProgram,
    dir: *const c_char,
    range_min: f64,
    range_max: f64,
) -> HdccStatus {
    guard(|| {
        let p = tri!(ref_arg(program, "program"));
        let dir = tri!(str_arg(dir, "dir"));
        let range = tri!(ValueRange::new(range_min, range_max).map_err(from_hdc));
        let artifact = tri!(driver::compile(&p.desc, range).map_err(from_driver));
        tri!(artifact
            .write_to(Path::new(dir))
            .map_err(|e| fail(HdccStatus::Io, format!("{dir}: {e}"))));
        HdccStatus::Ok
    })
}

/// Trains and tests from the four data files; either output may be NULL.
#[no_mangle]
pub unsafe extern "C" fn hdcc_run_files(
    program: *const HdccProgram,
    train_data: *const c_char,
    train_labels: *const c_char,
    test_data: *const c_char,
    test_labels: *const c_char,
    accuracy: *mut f64,
    digest: *mut u64,
) -> HdccStatus {
    guard(|| {
        let p = tri!(ref_arg(program, "program"));
        let paths = DataPaths::new([
            tri!(str_arg(train_data, "train_data")),
            tri!(str_arg(train_labels, "train_labels")),
            tri!(str_arg(test_data, "test_data")),
            tri!(str_arg(test_labels, "test_labels")),
        ]);
        let report = tri!(driver::run(&p.desc, &paths, ValueRange::DEFAULT).map_err(from_driver));
        if let Some(a) = accuracy.as_mut() {
            *a = report.accuracy;
        }
        if let Some(d) = digest.as_mut() {
            *d = report.memory_digest;
        }
        HdccStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_model_new(
    program: *const HdccProgram,
    range_min: f64,
    range_max: f64,
    out: *mut *mut HdccModel,
) -> HdccStatus {
    guard(|| {
        let out = tri!(out_arg(out, "out"));
        *out = ptr::null_mut();
        let p = tri!(ref_arg(program, "program"));
        let range = tri!(ValueRange::new(range_min, range_max).map_err(from_hdc));
        let model = Model::new(&p.desc, range).expect("checked when the program was created");
        *out = Box::into_raw(Box::new(HdccModel { model }));
        HdccStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_model_free(model: *mut HdccModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn real_sample(model: &HdccModel, x: *const f64, n: usize) -> Result<Sample, HdccStatus> {
    if model.model.description().weight_embed.kind != EmbeddingKind::Level {
        return Err(fail(HdccStatus::Data, "this program takes integer index samples"));
    }
    if x.is_null() {
        return Err(fail(HdccStatus::NullArgument, "features is NULL"));
    }
    Ok(Sample::Real(std::slice::from_raw_parts(x, n).to_vec()))
}

unsafe fn index_sample(model: &HdccModel, x: *const i64, n: usize) -> Result<Sample, HdccStatus> {
    if model.model.description().weight_embed.kind != EmbeddingKind::Random {
        return Err(fail(HdccStatus::Data, "this program takes real-valued samples"));
    }
    if x.is_null() {
        return Err(fail(HdccStatus::NullArgument, "indices is NULL"));
    }
    Ok(Sample::Indices(std::slice::from_raw_parts(x, n).to_vec()))
}

fn train(model: &mut HdccModel, sample: Sample, label: usize) -> HdccStatus {
    if model.model.is_finalized() {
        return fail(HdccStatus::State, "model is finalized");
    }
    tri!(model.model.train(&sample, label).map_err(from_hdc));
    HdccStatus::Ok
}

fn predict(model: &HdccModel, sample: Sample, out: &mut usize) -> HdccStatus {
    if !model.model.is_finalized() {
        return fail(HdccStatus::State, "call hdcc_model_finalize before predicting");
    }
    *out = tri!(model.model.predict(&sample).map_err(from_hdc));
    HdccStatus::Ok
}

/// Adds one real-valued sample of `n` features to class `label`.
#[no_mangle]
pub unsafe extern "C" fn hdcc_model_train(model: *mut HdccModel, features: *const f64, n: usize, label: usize) -> HdccStatus {
    guard(|| {
        let m = tri!(out_arg(model, "model"));
        let s = tri!(real_sample(m, features, n));
        train(m, s, label)
    })
}

/// Adds one index sample (`-1` = absent) to class `label`.
#[no_mangle]
pub unsafe extern "C" fn hdcc_model_train_indices(
    model: *mut HdccModel,
    indices: *const i64,
    n: usize,
    label: usize,
) -> HdccStatus {
    guard(|| {
        let m = tri!(out_arg(model, "model"));
        let s = tri!(index_sample(m, indices, n));
        train(m, s, label)
    })
}

/// Normalizes the class prototypes. Training afterwards is an error.
#[no_mangle]
pub unsafe extern "C" fn hdcc_model_finalize(model: *mut HdccModel) -> HdccStatus {
    guard(|| {
        tri!(out_arg(model, "model")).model.finalize();
        HdccStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_model_predict(
    model: *const HdccModel,
    features: *const f64,
    n: usize,
    class_out: *mut usize,
) -> HdccStatus {
    guard(|| {
        let m = tri!(ref_arg(model, "model"));
        let out = tri!(out_arg(class_out, "class_out"));
        let s = tri!(real_sample(m, features, n));
        predict(m, s, out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn hdcc_model_predict_indices(
    model: *const HdccModel,
    indices: *const i64,
    n: usize,
    class_out: *mut usize,
) -> HdccStatus {
    guard(|| {
        let m = tri!(ref_arg(model, "model"));
        let out = tri!(out_arg(class_out, "class_out"));
        let s = tri!(index_sample(m, indices, n));
        predict(m, s, out)
    })
}

/// Digest of the class counts; matches the emitted program's report.
#[no_mangle]
pub unsafe extern "C" fn hdcc_model_digest(model: *const HdccModel, out: *mut u64) -> HdccStatus {
    guard(|| {
        let m = tri!(ref_arg(model, "model"));
        *tri!(out_arg(out, "out")) = m.model.digest();
        HdccStatus::Ok
    })
}
