use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::frontend::{EmbeddingKind, ExecType, ProgramDescription};
use crate::hdc::ValueRange;

use super::plan::{BackendError, CodegenPlan, Kernel, LoadKind};
use super::template::{fragment, instantiate, Bindings};

pub const RUNTIME_HEADER: &str = "hdcc_runtime.h";
pub const MAKEFILE: &str = "Makefile";

/// Generated files keyed by relative path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedArtifact {
    pub files: BTreeMap<String, Vec<u8>>,
    /// Name of the binary the Makefile builds.
    pub binary: String,
}

impl EmittedArtifact {
    pub fn source_name(&self) -> String {
        format!("{}.c", self.binary)
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.get(name).and_then(|b| std::str::from_utf8(b).ok())
    }

    /// Writes every file under `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                fs::write(&path, bytes)?;
                Ok(path)
            })
            .collect()
    }
}

fn c_double(x: f64) -> String {
    format!("{x:e}")
}

fn common(desc: &ProgramDescription, plan: &CodegenPlan) -> Bindings {
    let weight = &desc.weight_embed;
    let mut b = Bindings::new();
    b.insert("DIMENSIONS", desc.dimensions.to_string());
    b.insert("LANES", plan.lanes.to_string());
    b.insert("NUM_BATCH", plan.num_batches.to_string());
    b.insert("INPUT_DIM", desc.input_dim.to_string());
    b.insert("CLASSES", desc.classes.to_string());
    b.insert("THREADS", plan.threads.to_string());
    b.insert("SEED", desc.seed.to_string());
    b.insert("NAME", desc.name.clone());
    b.insert("REAL_INPUT", u8::from(weight.kind == EmbeddingKind::Level).to_string());
    b.insert("WEIGHT_ITEMS", weight.items.to_string());
    b
}

fn kernel(id: usize, k: &Kernel, base: &Bindings) -> Result<String, BackendError> {
    let mut b = base.clone();
    b.insert("ID", id.to_string());
    let name = match *k {
        Kernel::Load { table, items, kind } => {
            b.insert("TABLE", table.to_string());
            b.insert("ITEMS", items.to_string());
            match kind {
                LoadKind::Level => "load_level",
                LoadKind::Index => "load_index",
                LoadKind::Position => "load_position",
            }
        }
        Kernel::BatchBind(a, c) | Kernel::FusedBindBundle(a, c) | Kernel::Bind(a, c) | Kernel::Bundle(a, c) => {
            b.insert("A", a.to_string());
            b.insert("B", c.to_string());
            match k {
                Kernel::BatchBind(..) => "batch_bind",
                Kernel::FusedBindBundle(..) => "fused_bind_bundle",
                Kernel::Bind(..) => "bind",
                _ => "bundle",
            }
        }
        Kernel::PermuteStream(x, s) | Kernel::PermuteSingle(x, s) => {
            b.insert("X", x.to_string());
            b.insert("SHIFT", s.to_string());
            if matches!(k, Kernel::PermuteStream(..)) {
                "permute_stream"
            } else {
                "permute_single"
            }
        }
        Kernel::FusedNgram(x, n) => {
            b.insert("X", x.to_string());
            b.insert("N", n.to_string());
            "fused_ngram"
        }
        Kernel::MultiBundleStream(x) => {
            b.insert("X", x.to_string());
            "multibundle_stream"
        }
        Kernel::MultiBundleMaterialized(x) => {
            b.insert("X", x.to_string());
            "multibundle_materialized"
        }
    };
    Ok(instantiate(fragment(name)?, &b)?)
}

/// Makefile with `all` and `clean`; parallel programs link the thread
/// library.
pub fn emit_makefile(desc: &ProgramDescription) -> Result<String, BackendError> {
    let mut b = Bindings::new();
    b.insert("BIN", desc.binary_name());
    let libs = match desc.exec_type {
        ExecType::Sequential => "-lm",
        ExecType::Parallel => "-lm -lpthread",
    };
    b.insert("LDLIBS", libs.to_string());
    Ok(instantiate(fragment("makefile")?, &b)?)
}

/// Generates the program source, the runtime header and the Makefile.
/// `range` becomes the compiled-in default for the level mapping.
pub fn emit_program(plan: &CodegenPlan, desc: &ProgramDescription, range: ValueRange) -> Result<EmittedArtifact, BackendError> {
    let mut b = common(desc, plan);

    let mut decls = String::new();
    let mut init = String::new();
    for (stream, spec) in desc.all_embeddings().enumerate() {
        let _ = writeln!(decls, "static int32_t *T{stream}; /* {} */", spec.name);
        let f = match spec.kind {
            EmbeddingKind::Random => "random_table",
            EmbeddingKind::Level => "level_table",
        };
        let _ = writeln!(init, "    T{stream} = {f}({}, SEED, {stream});", spec.items);
    }
    let mut mats = String::new();
    let mut kernels = String::new();
    for (id, k) in plan.schedule.iter().enumerate() {
        if matches!(k, Kernel::MultiBundleMaterialized(_)) {
            let _ = writeln!(
                mats,
                "    c->mat[{id}] = xcalloc((size_t)INPUT_DIM * PD + INPUT_DIM, sizeof(int32_t));"
            );
        }
        kernels.push_str(&kernel(id, k, &b)?);
    }

    let (driver, include) = match plan.exec_type {
        ExecType::Sequential => ("driver_sequential", ""),
        ExecType::Parallel => ("driver_pool", "#include <pthread.h>\n"),
    };
    let driver = instantiate(fragment(driver)?, &b)?;

    b.insert("THREAD_INCLUDE", include.to_string());
    b.insert("TRAIN_SIZE", desc.train_size.to_string());
    b.insert("TEST_SIZE", desc.test_size.to_string());
    b.insert("NODES", plan.schedule.len().to_string());
    b.insert("DEBUG", u8::from(desc.debug).to_string());
    b.insert("TABLE_DECLS", decls);
    b.insert("TABLE_INIT", init);
    b.insert("MAT_INIT", mats);
    b.insert("KERNELS", kernels);
    b.insert("OUTPUT", plan.output.to_string());
    b.insert("RANGE_MIN", c_double(range.min));
    b.insert("RANGE_MAX", c_double(range.max));
    b.insert("DRIVER", driver);
    let program = instantiate(fragment("program")?, &b)?;
    let runtime = instantiate(fragment("runtime")?, &b)?;

    let binary = desc.binary_name();
    let mut files = BTreeMap::new();
    files.insert(format!("{binary}.c"), program.into_bytes());
    files.insert(RUNTIME_HEADER.to_string(), runtime.into_bytes());
    files.insert(MAKEFILE.to_string(), emit_makefile(desc)?.into_bytes());
    Ok(EmittedArtifact { files, binary })
}
