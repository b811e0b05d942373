//! Library side of the `hdcc` command: loading descriptions, compiling,
//! running the interpreter and comparing it against an emitted binary.

use std::env;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use thiserror::Error;

use crate::backend::{self, BackendError, EmittedArtifact};
use crate::dataio::{open_labels, open_samples, DataError};
use crate::frontend::{parse_description, Diagnostic, DiagnosticKind, ProgramDescription};
use crate::hdc::{HdcError, Model, ValueRange};
use crate::ir::{dump, fuse, lower, TypeError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("{}", render(file, diagnostics))]
    Diagnostics {
        file: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: cannot read description: {source}", path.display())]
    Description {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Hdc(#[from] HdcError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("{0}")]
    Usage(String),
    #[error("toolchain: {0}")]
    Toolchain(String),
}

fn render(file: &str, diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.render(file)).collect::<Vec<_>>().join("\n")
}

impl DriverError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Data(_) | DriverError::Hdc(_) => EXIT_DATA,
            DriverError::Io { .. } => EXIT_DATA,
            _ => EXIT_USAGE,
        }
    }
}

pub fn type_diagnostic(e: &TypeError) -> Diagnostic {
    Diagnostic::new(DiagnosticKind::Type, e.to_string(), Some(e.span()))
}

/// Command-line overrides; each wins over the matching directive.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub range: Option<ValueRange>,
    pub threads: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, desc: &mut ProgramDescription) {
        if let Some(s) = self.seed {
            desc.seed = s;
        }
        if let Some(t) = self.threads {
            desc.num_threads = t.max(1);
        }
    }

    pub fn range(&self) -> ValueRange {
        self.range.unwrap_or(ValueRange::DEFAULT)
    }
}

/// Parses, validates and type-checks `source`; `file` is used for rendering.
pub fn load_source(file: &str, source: &str, ov: &Overrides) -> Result<ProgramDescription, DriverError> {
    let diag = |diagnostics| DriverError::Diagnostics {
        file: file.to_string(),
        diagnostics,
    };
    let mut desc = parse_description(source).map_err(diag)?;
    ov.apply(&mut desc);
    lower(&desc).map_err(|e| diag(vec![type_diagnostic(&e)]))?;
    Ok(desc)
}

pub fn load_description(path: &Path, ov: &Overrides) -> Result<ProgramDescription, DriverError> {
    let source = fs::read_to_string(path).map_err(|source| DriverError::Description {
        path: path.to_path_buf(),
        source,
    })?;
    load_source(&path.display().to_string(), &source, ov)
}

pub fn compile(desc: &ProgramDescription, range: ValueRange) -> Result<EmittedArtifact, DriverError> {
    let ir = fuse(&lower(desc).map_err(|e| DriverError::Usage(e.to_string()))?);
    let plan = backend::plan(&ir, desc)?;
    Ok(backend::emit_program(&plan, desc, range)?)
}

pub fn cmd_compile(path: &Path, out_dir: &Path, ov: &Overrides) -> Result<Vec<PathBuf>, DriverError> {
    let desc = load_description(path, ov)?;
    let artifact = compile(&desc, ov.range())?;
    artifact.write_to(out_dir).map_err(|source| DriverError::Io {
        path: out_dir.to_path_buf(),
        source,
    })
}

pub fn cmd_check(path: &Path, ov: &Overrides) -> Result<(), DriverError> {
    load_description(path, ov).map(drop)
}

pub fn cmd_ir_dump(path: &Path, unfused: bool, ov: &Overrides) -> Result<String, DriverError> {
    let desc = load_description(path, ov)?;
    let ir = lower(&desc).expect("type-checked on load");
    Ok(if unfused { dump(&ir) } else { dump(&fuse(&ir)) })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPaths {
    pub train_data: PathBuf,
    pub train_labels: PathBuf,
    pub test_data: PathBuf,
    pub test_labels: PathBuf,
}

impl DataPaths {
    pub fn new(paths: [impl Into<PathBuf>; 4]) -> Self {
        let [a, b, c, d] = paths.map(Into::into);
        Self {
            train_data: a,
            train_labels: b,
            test_data: c,
            test_labels: d,
        }
    }

    pub fn as_args(&self) -> [&Path; 4] {
        [&self.train_data, &self.train_labels, &self.test_data, &self.test_labels]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub accuracy: f64,
    pub train_seconds: f64,
    pub test_seconds: f64,
    pub predictions: Vec<usize>,
    pub memory_digest: u64,
}

impl RunReport {
    /// The three summary lines printed by emitted binaries.
    pub fn summary(&self) -> String {
        format!(
            "acc={:.6}\ntrain_s={:.6}\ntest_s={:.6}\n",
            self.accuracy, self.train_seconds, self.test_seconds
        )
    }

    /// Digest line followed by one prediction per line.
    pub fn report_text(&self) -> String {
        let mut out = format!("digest={:016x}\n", self.memory_digest);
        for p in &self.predictions {
            let _ = writeln!(out, "{p}");
        }
        out
    }
}

/// Digest and predictions as written to an `HDCC_REPORT` file.
pub fn parse_report(text: &str) -> Option<(u64, Vec<usize>)> {
    let mut lines = text.lines();
    let digest = u64::from_str_radix(lines.next()?.strip_prefix("digest=")?, 16).ok()?;
    let preds = lines.map(|l| l.parse().ok()).collect::<Option<Vec<_>>>()?;
    Some((digest, preds))
}

fn pairs<'a>(
    desc: &'a ProgramDescription,
    data: &Path,
    labels: &Path,
    n: usize,
) -> Result<impl Iterator<Item = Result<(crate::hdc::Sample, usize), DriverError>> + 'a, DriverError> {
    let mut xs = open_samples(data, desc)?.expect_count(n);
    let mut ys = open_labels(labels, desc.classes)?.expect_count(n);
    Ok(std::iter::from_fn(move || match (xs.next_sample(), ys.next_label()) {
        (Err(e), _) | (_, Err(e)) => Some(Err(e.into())),
        (Ok(Some(x)), Ok(Some(y))) => Some(Ok((x, y))),
        _ => None,
    }))
}

/// Train, normalize and infer with the reference interpreter.
pub fn run(desc: &ProgramDescription, paths: &DataPaths, range: ValueRange) -> Result<RunReport, DriverError> {
    let threads = desc.effective_threads();
    let t0 = Instant::now();
    let mut model = Model::new(desc, range).map_err(|e| DriverError::Usage(e.to_string()))?;
    model.train_stream(pairs(desc, &paths.train_data, &paths.train_labels, desc.train_size)?, threads)?;
    model.finalize();
    let t1 = Instant::now();

    let mut labels = Vec::with_capacity(desc.test_size);
    let samples = pairs(desc, &paths.test_data, &paths.test_labels, desc.test_size)?.map(|r| {
        r.map(|(x, y)| {
            labels.push(y);
            x
        })
    });
    let predictions = model.predict_stream(samples, threads)?;
    let t2 = Instant::now();

    let correct = predictions.iter().zip(&labels).filter(|(p, y)| p == y).count();
    Ok(RunReport {
        accuracy: correct as f64 / desc.test_size as f64,
        train_seconds: (t1 - t0).as_secs_f64(),
        test_seconds: (t2 - t1).as_secs_f64(),
        predictions,
        memory_digest: model.digest(),
    })
}

pub fn cmd_run(path: &Path, paths: &DataPaths, ov: &Overrides) -> Result<RunReport, DriverError> {
    let desc = load_description(path, ov)?;
    let report = run(&desc, paths, ov.range())?;
    if let Some(out) = env::var_os("HDCC_REPORT").filter(|p| !p.is_empty()) {
        let out = PathBuf::from(out);
        fs::write(&out, report.report_text()).map_err(|source| DriverError::Io { path: out, source })?;
    }
    Ok(report)
}

/// A host C compiler plus, when present, `make`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toolchain {
    pub cc: String,
    pub make: Option<String>,
}

fn runs(program: &str, arg: &str) -> bool {
    Command::new(program)
        .arg(arg)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

impl Toolchain {
    /// `HDCC_CC`, then `CC`, then `cc`. `None` when the compiler does not run.
    pub fn discover() -> Option<Self> {
        let cc = ["HDCC_CC", "CC"]
            .iter()
            .find_map(|v| env::var(v).ok().filter(|s| !s.trim().is_empty()))
            .unwrap_or_else(|| "cc".to_string());
        if !runs(&cc, "--version") {
            return None;
        }
        let make = runs("make", "--version").then(|| "make".to_string());
        Some(Self { cc, make })
    }

    /// Writes `artifact` to `dir` and builds it; returns the binary path.
    pub fn build(&self, artifact: &EmittedArtifact, dir: &Path) -> Result<PathBuf, DriverError> {
        artifact.write_to(dir).map_err(|source| DriverError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut cmd = match &self.make {
            Some(make) => {
                let mut c = Command::new(make);
                c.arg("-s").arg(format!("CC={}", self.cc)).current_dir(dir);
                c
            }
            None => {
                let mut c = Command::new(&self.cc);
                c.args(["-O3", "-std=c99", "-o", &artifact.binary, &artifact.source_name(), "-lm", "-lpthread"])
                    .current_dir(dir);
                c
            }
        };
        let out = cmd
            .output()
            .map_err(|e| DriverError::Toolchain(format!("{}: {e}", self.cc)))?;
        if !out.status.success() {
            return Err(DriverError::Toolchain(String::from_utf8_lossy(&out.stderr).into_owned()));
        }
        Ok(dir.join(&artifact.binary))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conformance {
    Pass { digest: u64 },
    Fail { reasons: Vec<String> },
    Skipped(String),
}

impl Conformance {
    pub fn line(&self) -> String {
        match self {
            Conformance::Pass { digest } => format!("PASS digest={digest:016x}"),
            Conformance::Fail { reasons } => format!("FAIL {}", reasons.join("; ")),
            Conformance::Skipped(why) => format!("skipped: {why}"),
        }
    }
}

/// Output of one emitted-binary run.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRun {
    pub stdout: String,
    pub digest: u64,
    pub predictions: Vec<usize>,
}

/// Runs a built binary on `paths` and reads back its report file.
pub fn run_binary(binary: &Path, paths: &DataPaths, range: Option<ValueRange>) -> Result<BinaryRun, DriverError> {
    let dir = tempfile::tempdir().map_err(|source| DriverError::Io {
        path: env::temp_dir(),
        source,
    })?;
    let report = dir.path().join("report.txt");
    let mut cmd = Command::new(binary);
    cmd.args(paths.as_args()).env("HDCC_REPORT", &report);
    if let Some(r) = range {
        cmd.arg(format!("{:e}", r.min)).arg(format!("{:e}", r.max));
    }
    let out = cmd.output().map_err(|source| DriverError::Io {
        path: binary.to_path_buf(),
        source,
    })?;
    if !out.status.success() {
        return Err(DriverError::Toolchain(format!(
            "{} exited with {}: {}",
            binary.display(),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    let text = fs::read_to_string(&report).map_err(|source| DriverError::Io { path: report, source })?;
    let (digest, predictions) =
        parse_report(&text).ok_or_else(|| DriverError::Toolchain("malformed report file".into()))?;
    Ok(BinaryRun {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        digest,
        predictions,
    })
}

fn summary_keys(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with("dbg:"))
        .filter_map(|l| l.split_once('=').map(|(k, _)| k))
        .collect()
}

/// Compiles and runs `desc` natively and compares it with the interpreter.
/// `perturb_seed` builds the binary with a different seed.
pub fn conformance(
    desc: &ProgramDescription,
    paths: &DataPaths,
    range: ValueRange,
    perturb_seed: Option<u64>,
) -> Result<Conformance, DriverError> {
    let Some(tc) = Toolchain::discover() else {
        return Ok(Conformance::Skipped("no target toolchain".into()));
    };
    let expected = run(desc, paths, range)?;
    let mut target = desc.clone();
    if let Some(s) = perturb_seed {
        target.seed = s;
    }
    let dir = tempfile::tempdir().map_err(|source| DriverError::Io {
        path: env::temp_dir(),
        source,
    })?;
    let bin = tc.build(&compile(&target, range)?, dir.path())?;
    let got = run_binary(&bin, paths, None)?;

    let mut reasons = Vec::new();
    if got.digest != expected.memory_digest {
        reasons.push(format!(
            "digest {:016x} != {:016x}",
            got.digest, expected.memory_digest
        ));
    }
    if got.predictions != expected.predictions {
        let n = got.predictions.iter().zip(&expected.predictions).filter(|(a, b)| a != b).count();
        reasons.push(format!("{n} predictions differ"));
    }
    if summary_keys(&got.stdout) != summary_keys(&expected.summary()) {
        reasons.push("summary format differs".into());
    }
    Ok(if reasons.is_empty() {
        Conformance::Pass {
            digest: got.digest,
        }
    } else {
        Conformance::Fail { reasons }
    })
}

pub fn cmd_conformance(
    path: &Path,
    paths: &DataPaths,
    ov: &Overrides,
    perturb_seed: Option<u64>,
) -> Result<Conformance, DriverError> {
    let desc = load_description(path, ov)?;
    conformance(&desc, paths, ov.range(), perturb_seed)
}
