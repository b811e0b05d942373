//! C99 code generation: SIMD kernels via the compiler vector extension and
//! an optional POSIX thread pool.

mod emit;
mod plan;
mod template;

pub use emit::{emit_makefile, emit_program, EmittedArtifact, MAKEFILE, RUNTIME_HEADER};
pub use plan::{lanes_for, plan, BackendError, CodegenPlan, Kernel, LoadKind};
pub use template::{fragment, instantiate, Bindings, TemplateError, TemplateFragment, FRAGMENTS};
