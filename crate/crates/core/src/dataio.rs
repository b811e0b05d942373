//! Streaming readers for comma-separated sample files and label files.
//!
//! One sample per line, no header, LF or CRLF endings, optional trailing
//! newline. Blank lines are errors. Only one line is held in memory.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::frontend::{EmbeddingKind, ProgramDescription};
use crate::hdc::{Sample, ValueRange};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}:{col}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{}: expected {expected} lines, found {found}", path.display())]
    Count {
        path: PathBuf,
        expected: usize,
        /// Lines read before stopping; one past `expected` when the file is
        /// longer.
        found: usize,
    },
    #[error("{}: {message}", path.display())]
    Range { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Real,
    /// Integer indices in `[-1, items)`; `-1` marks an absent feature.
    IntegerIndex { items: usize },
}

impl SampleMode {
    pub fn for_description(desc: &ProgramDescription) -> Self {
        match desc.weight_embed.kind {
            EmbeddingKind::Level => SampleMode::Real,
            EmbeddingKind::Random => SampleMode::IntegerIndex {
                items: desc.weight_embed.items,
            },
        }
    }
}

/// Line source shared by the sample and label readers.
struct Lines<R> {
    path: PathBuf,
    reader: R,
    buf: String,
    line: usize,
    limit: Option<usize>,
}

impl<R: BufRead> Lines<R> {
    fn new(path: PathBuf, reader: R) -> Self {
        Self {
            path,
            reader,
            buf: String::new(),
            line: 0,
            limit: None,
        }
    }

    fn format_err(&self, col: usize, message: impl Into<String>) -> DataError {
        DataError::Format {
            path: self.path.clone(),
            line: self.line,
            col,
            message: message.into(),
        }
    }

    /// Next line without its terminator, or `None` at end of input.
    fn next_line(&mut self) -> Result<Option<&str>, DataError> {
        self.buf.clear();
        let n = self.reader.read_line(&mut self.buf).map_err(|source| DataError::Io {
            path: self.path.clone(),
            source,
        })?;
        if n == 0 {
            return match self.limit {
                Some(expected) if self.line < expected => Err(DataError::Count {
                    path: self.path.clone(),
                    expected,
                    found: self.line,
                }),
                _ => Ok(None),
            };
        }
        self.line += 1;
        if let Some(expected) = self.limit {
            if self.line > expected {
                return Err(DataError::Count {
                    path: self.path.clone(),
                    expected,
                    found: self.line,
                });
            }
        }
        let text = self.buf.strip_suffix('\n').unwrap_or(&self.buf);
        let text = text.strip_suffix('\r').unwrap_or(text);
        if text.trim_matches([' ', '\t']).is_empty() {
            return Err(self.format_err(1, "blank line"));
        }
        Ok(Some(text))
    }
}

/// Splits a line into trimmed fields with their 1-based columns.
fn fields(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut start = 0;
    line.split(',').map(move |raw| {
        let lead = raw.len() - raw.trim_start_matches([' ', '\t']).len();
        let col = start + lead + 1;
        start += raw.len() + 1;
        (col, raw.trim_matches([' ', '\t']))
    })
}

fn parse_real(field: &str) -> Option<f64> {
    if field.is_empty() || !field.bytes().all(|b| matches!(b, b'0'..=b'9' | b'+' | b'-' | b'.' | b'e' | b'E')) {
        return None;
    }
    field.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path).map(BufReader::new).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub struct SampleStream<R = BufReader<File>> {
    lines: Lines<R>,
    input_dim: usize,
    mode: SampleMode,
}

/// Opens a sample file in the mode implied by the weight embedding.
pub fn open_samples(path: impl AsRef<Path>, desc: &ProgramDescription) -> Result<SampleStream, DataError> {
    let path = path.as_ref();
    Ok(SampleStream::from_reader(
        path,
        open(path)?,
        desc.input_dim,
        SampleMode::for_description(desc),
    ))
}

impl<R: BufRead> SampleStream<R> {
    pub fn from_reader(path: impl Into<PathBuf>, reader: R, input_dim: usize, mode: SampleMode) -> Self {
        Self {
            lines: Lines::new(path.into(), reader),
            input_dim,
            mode,
        }
    }

    /// Requires exactly `n` samples: reading past `n` or ending early is a
    /// count error.
    pub fn expect_count(mut self, n: usize) -> Self {
        self.lines.limit = Some(n);
        self
    }

    pub fn mode(&self) -> SampleMode {
        self.mode
    }

    /// Samples consumed so far.
    pub fn cursor(&self) -> usize {
        self.lines.line
    }

    pub fn next_sample(&mut self) -> Result<Option<Sample>, DataError> {
        let (input_dim, mode) = (self.input_dim, self.mode);
        let Some(text) = self.lines.next_line()? else {
            return Ok(None);
        };
        let mut reals = Vec::new();
        let mut ints = Vec::new();
        let mut count = 0;
        let mut bad = None;
        for (col, field) in fields(text) {
            count += 1;
            if count > input_dim {
                bad = Some((col, format!("more than {input_dim} fields")));
                break;
            }
            match mode {
                SampleMode::Real => match parse_real(field) {
                    Some(x) => reals.push(x),
                    None => {
                        bad = Some((col, format!("invalid number \"{field}\"")));
                        break;
                    }
                },
                SampleMode::IntegerIndex { items } => match field.parse::<i64>() {
                    Ok(i) if i >= -1 && i < items as i64 => ints.push(i),
                    Ok(i) => {
                        bad = Some((col, format!("index {i} outside [-1, {items})")));
                        break;
                    }
                    Err(_) => {
                        bad = Some((col, format!("invalid integer \"{field}\"")));
                        break;
                    }
                },
            }
        }
        if bad.is_none() && count < input_dim {
            bad = Some((text.len() + 1, format!("expected {input_dim} fields, found {count}")));
        }
        if let Some((col, message)) = bad {
            return Err(self.lines.format_err(col, message));
        }
        Ok(Some(match mode {
            SampleMode::Real => Sample::Real(reals),
            SampleMode::IntegerIndex { .. } => Sample::Indices(ints),
        }))
    }
}

impl<R: BufRead> Iterator for SampleStream<R> {
    type Item = Result<Sample, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_sample().transpose()
    }
}

pub struct LabelStream<R = BufReader<File>> {
    lines: Lines<R>,
    classes: usize,
}

pub fn open_labels(path: impl AsRef<Path>, classes: usize) -> Result<LabelStream, DataError> {
    let path = path.as_ref();
    Ok(LabelStream::from_reader(path, open(path)?, classes))
}

impl<R: BufRead> LabelStream<R> {
    pub fn from_reader(path: impl Into<PathBuf>, reader: R, classes: usize) -> Self {
        Self {
            lines: Lines::new(path.into(), reader),
            classes,
        }
    }

    pub fn expect_count(mut self, n: usize) -> Self {
        self.lines.limit = Some(n);
        self
    }

    pub fn next_label(&mut self) -> Result<Option<usize>, DataError> {
        let classes = self.classes;
        let Some(text) = self.lines.next_line()? else {
            return Ok(None);
        };
        let (col, field) = fields(text).next().expect("split yields one field");
        let outcome = if text.contains(',') {
            Err(format!("invalid label \"{}\"", text.trim()))
        } else {
            match field.parse::<u64>() {
                Ok(l) if (l as u128) < classes as u128 => Ok(l as usize),
                Ok(l) => Err(format!("label {l} outside [0, {classes})")),
                Err(_) => Err(format!("invalid label \"{field}\"")),
            }
        };
        outcome.map(Some).map_err(|m| self.lines.format_err(col, m))
    }
}

impl<R: BufRead> Iterator for LabelStream<R> {
    type Item = Result<usize, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_label().transpose()
    }
}

/// Global minimum and maximum over every field of a real-valued file, in
/// one streaming pass.
pub fn prescan_range(path: impl AsRef<Path>, input_dim: usize) -> Result<ValueRange, DataError> {
    let path = path.as_ref();
    prescan_reader(path, open(path)?, input_dim)
}

pub fn prescan_reader(path: &Path, reader: impl BufRead, input_dim: usize) -> Result<ValueRange, DataError> {
    let mut stream = SampleStream::from_reader(path, reader, input_dim, SampleMode::Real);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    while let Some(s) = stream.next_sample()? {
        if let Sample::Real(v) = s {
            for x in v {
                min = min.min(x);
                max = max.max(x);
            }
        }
    }
    let range_err = |message: &str| DataError::Range {
        path: path.to_path_buf(),
        message: message.into(),
    };
    if stream.cursor() == 0 {
        return Err(range_err("no values to take a range from"));
    }
    ValueRange::new(min, max).map_err(|_| range_err(&format!("degenerate range [{min}, {max}]")))
}
