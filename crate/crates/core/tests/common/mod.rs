//! Shared generators for integration tests: random descriptions and
//! synthetic data files.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use hdcc::driver::DataPaths;
use hdcc::frontend::{parse_description, EmbeddingKind, ProgramDescription};
use hdcc::hdc::Sample;

pub struct Shape {
    pub input_dim: usize,
    pub dims: usize,
    pub classes: usize,
    pub weight_level: bool,
}

/// Random encoding expression of single-hypervector type.
fn single(rng: &mut StdRng, names: &[String], input_dim: usize, depth: u32) -> String {
    let pick = |rng: &mut StdRng| names.choose(rng).unwrap().clone();
    let choice = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..6) };
    match choice {
        0 => format!("MULTIBUNDLE({})", stream(rng, names, depth.saturating_sub(1))),
        1 => format!("NGRAM({},{})", pick(rng), rng.gen_range(1..=input_dim)),
        2 => format!("HASHTABLE({},{})", pick(rng), pick(rng)),
        3 => format!("PERMUTE({},{})", single(rng, names, input_dim, depth - 1), rng.gen_range(0..100)),
        4 => format!(
            "BIND({},{})",
            single(rng, names, input_dim, depth - 1),
            single(rng, names, input_dim, depth - 1)
        ),
        _ => format!(
            "BUNDLE({},{})",
            single(rng, names, input_dim, depth - 1),
            single(rng, names, input_dim, depth - 1)
        ),
    }
}

/// Random encoding expression of feature-stream type.
fn stream(rng: &mut StdRng, names: &[String], depth: u32) -> String {
    let choice = if depth == 0 { 0 } else { rng.gen_range(0..3) };
    match choice {
        0 => names.choose(rng).unwrap().clone(),
        1 => format!("BATCHBIND({},{})", stream(rng, names, depth - 1), stream(rng, names, depth - 1)),
        _ => format!("PERMUTE({},{})", stream(rng, names, depth - 1), rng.gen_range(0..100)),
    }
}

/// A random valid description with the given sizes and encoding.
pub fn description(shape: &Shape, encoding: &str, extra: &str, rng: &mut StdRng) -> String {
    let wkind = if shape.weight_level { "LEVEL" } else { "RANDOM" };
    let witems = rng.gen_range(2..=8);
    let mut src = format!(".NAME P; .WEIGHT_EMBED (W {wkind} {witems});\n");
    let others = ["A", "B"];
    let groups: Vec<String> = others
        .iter()
        .map(|n| {
            let kind = if rng.gen_bool(0.5) { "RANDOM" } else { "LEVEL" };
            format!("({n} {kind} {})", shape.input_dim.max(2) + rng.gen_range(0..3))
        })
        .collect();
    let _ = writeln!(src, ".EMBEDDING {};", groups.join(", "));
    let _ = writeln!(
        src,
        ".INPUT_DIM {}; .ENCODING {encoding}; .CLASSES {}; .DIMENSIONS {};",
        shape.input_dim, shape.classes, shape.dims
    );
    let _ = writeln!(src, ".TRAIN_SIZE 1; .TEST_SIZE 1; .SEED {}; {extra}", rng.gen::<u32>());
    src
}

/// A random description whose encoding uses every embedding name.
pub fn random_description(rng: &mut StdRng, shape: &Shape, depth: u32) -> ProgramDescription {
    let names: Vec<String> = ["W", "A", "B"].iter().map(|s| s.to_string()).collect();
    let enc = single(rng, &names, shape.input_dim, depth);
    let src = description(shape, &enc, "", rng);
    parse_description(&src).unwrap_or_else(|e| panic!("{src}\n{e:?}"))
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A random sample for `desc`; reals range a little past [-1, 1].
pub fn random_sample(rng: &mut StdRng, desc: &ProgramDescription) -> Sample {
    let n = desc.input_dim;
    match desc.weight_embed.kind {
        EmbeddingKind::Level => Sample::Real((0..n).map(|_| rng.gen_range(-1.2..1.2)).collect()),
        EmbeddingKind::Random => {
            let items = desc.weight_embed.items as i64;
            Sample::Indices((0..n).map(|_| rng.gen_range(-1..items)).collect())
        }
    }
}

fn sample_line(s: &Sample) -> String {
    match s {
        Sample::Real(v) => v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","),
        Sample::Indices(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
    }
}

pub fn write_split(dir: &Path, name: &str, rows: &[(Sample, usize)]) -> (std::path::PathBuf, std::path::PathBuf) {
    let data = dir.join(format!("{name}_data.txt"));
    let labels = dir.join(format!("{name}_labels.txt"));
    let mut d = String::new();
    let mut l = String::new();
    for (s, y) in rows {
        d.push_str(&sample_line(s));
        d.push('\n');
        let _ = writeln!(l, "{y}");
    }
    fs::write(&data, d).unwrap();
    fs::write(&labels, l).unwrap();
    (data, labels)
}

/// Random samples with random labels for `desc`, written to `dir`. The
/// description's sizes must already match `train`/`test`.
pub fn random_dataset(rng: &mut StdRng, desc: &ProgramDescription, dir: &Path) -> DataPaths {
    let mut rows = |n| -> Vec<(Sample, usize)> {
        (0..n)
            .map(|_| (random_sample(rng, desc), rng.gen_range(0..desc.classes)))
            .collect()
    };
    let train = rows(desc.train_size);
    let test = rows(desc.test_size);
    let (a, b) = write_split(dir, "train", &train);
    let (c, d) = write_split(dir, "test", &test);
    DataPaths::new([a, b, c, d])
}

/// Class-separable real samples: each class has a random mean in
/// [-0.8, 0.8]^n and samples add Gaussian noise of `sigma`.
pub fn gaussian_rows(rng: &mut StdRng, means: &[Vec<f64>], sigma: f64, n: usize) -> Vec<(Sample, usize)> {
    let noise = Normal::new(0.0, sigma).unwrap();
    (0..n)
        .map(|i| {
            let c = i % means.len();
            let x = means[c].iter().map(|m| m + noise.sample(rng)).collect();
            (Sample::Real(x), c)
        })
        .collect()
}

pub fn class_means(rng: &mut StdRng, classes: usize, input_dim: usize) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|_| (0..input_dim).map(|_| rng.gen_range(-0.8..0.8)).collect())
        .collect()
}

/// Sets TRAIN_SIZE and TEST_SIZE on a description source.
pub fn with_sizes(desc: &ProgramDescription, train: usize, test: usize) -> ProgramDescription {
    let mut d = desc.clone();
    d.train_size = train;
    d.test_size = test;
    d
}
