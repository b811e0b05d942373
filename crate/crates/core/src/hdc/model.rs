//! Train/normalize/infer pipeline over a compiled description.

use std::sync::mpsc;
use std::thread;

use crate::frontend::ProgramDescription;
use crate::ir::{fuse, lower, EncodingIR, TypeError};

use super::{hard_quantize, AssociativeMemory, Encoder, HdcError, Hypervector, Sample, Tables, ValueRange};

#[derive(Debug, Clone)]
pub struct Model {
    desc: ProgramDescription,
    ir: EncodingIR,
    tables: Tables,
    range: ValueRange,
    memory: AssociativeMemory,
}

impl Model {
    /// Lowers and fuses the encoding of `desc` and generates its tables.
    pub fn new(desc: &ProgramDescription, range: ValueRange) -> Result<Self, TypeError> {
        let ir = fuse(&lower(desc)?);
        Ok(Self::with_ir(desc, ir, range))
    }

    pub fn with_ir(desc: &ProgramDescription, ir: EncodingIR, range: ValueRange) -> Self {
        Self {
            tables: Tables::generate(desc),
            memory: AssociativeMemory::new(desc.classes, desc.dimensions),
            desc: desc.clone(),
            ir,
            range,
        }
    }

    pub fn description(&self) -> &ProgramDescription {
        &self.desc
    }

    pub fn ir(&self) -> &EncodingIR {
        &self.ir
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn memory(&self) -> &AssociativeMemory {
        &self.memory
    }

    pub fn range(&self) -> ValueRange {
        self.range
    }

    pub fn encoder(&self) -> Encoder<'_> {
        Encoder::new(&self.ir, &self.tables, self.range)
    }

    /// Quantized encoding of one sample.
    pub fn encode(&self, sample: &Sample) -> Result<Hypervector, HdcError> {
        Ok(hard_quantize(&self.encoder().encode(sample)?))
    }

    pub fn train(&mut self, sample: &Sample, label: usize) -> Result<(), HdcError> {
        let enc = self.encode(sample)?;
        self.memory.update(&enc, label)
    }

    /// Trains on a stream of labelled samples. With more than one thread the
    /// samples are dealt round-robin to workers that each fill a private
    /// memory; the partial memories are summed once every worker is done.
    pub fn train_stream<I, E>(&mut self, samples: I, threads: usize) -> Result<(), E>
    where
        I: Iterator<Item = Result<(Sample, usize), E>>,
        E: From<HdcError>,
    {
        if threads <= 1 {
            for item in samples {
                let (s, l) = item?;
                self.train(&s, l)?;
            }
            return Ok(());
        }
        let this = &*self;
        let partials = dispatch(samples, threads, |rx: mpsc::Receiver<(usize, (Sample, usize))>| {
            let mut mem = AssociativeMemory::new(this.desc.classes, this.desc.dimensions);
            for (_, (s, l)) in rx {
                mem.update(&this.encode(&s)?, l)?;
            }
            Ok(mem)
        })?;
        for p in &partials {
            self.memory.merge(p);
        }
        Ok(())
    }

    pub fn finalize(&mut self) {
        self.memory.normalize();
    }

    pub fn is_finalized(&self) -> bool {
        self.memory.is_normalized()
    }

    pub fn predict(&self, sample: &Sample) -> Result<usize, HdcError> {
        Ok(self.memory.infer(&self.encode(sample)?))
    }

    /// Predictions for a stream of samples, in stream order.
    pub fn predict_stream<I, E>(&self, samples: I, threads: usize) -> Result<Vec<usize>, E>
    where
        I: Iterator<Item = Result<Sample, E>>,
        E: From<HdcError>,
    {
        if threads <= 1 {
            return samples.map(|s| Ok(self.predict(&s?)?)).collect();
        }
        let parts = dispatch(samples, threads, |rx: mpsc::Receiver<(usize, Sample)>| {
            rx.into_iter()
                .map(|(i, s)| Ok((i, self.predict(&s)?)))
                .collect::<Result<Vec<_>, HdcError>>()
        })?;
        let mut all: Vec<(usize, usize)> = parts.into_iter().flatten().collect();
        all.sort_unstable();
        Ok(all.into_iter().map(|(_, p)| p).collect())
    }

    pub fn digest(&self) -> u64 {
        self.memory.digest()
    }
}

/// Deals items round-robin to `threads` scoped workers and returns their
/// results in worker order. Reading stops at the first input error.
fn dispatch<T, R, I, E, W>(items: I, threads: usize, work: W) -> Result<Vec<R>, E>
where
    T: Send,
    R: Send,
    I: Iterator<Item = Result<T, E>>,
    E: From<HdcError>,
    W: Fn(mpsc::Receiver<(usize, T)>) -> Result<R, HdcError> + Sync,
{
    thread::scope(|scope| {
        let mut senders = Vec::with_capacity(threads);
        let mut handles = Vec::with_capacity(threads);
        for _ in 0..threads {
            let (tx, rx) = mpsc::sync_channel(4);
            senders.push(tx);
            let work = &work;
            handles.push(scope.spawn(move || work(rx)));
        }
        let mut input_err = None;
        for (i, item) in items.enumerate() {
            match item {
                // a closed channel means that worker failed; its error is
                // reported at join
                Ok(v) => {
                    if senders[i % threads].send((i, v)).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    input_err = Some(e);
                    break;
                }
            }
        }
        drop(senders);
        let results: Vec<_> = handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect();
        if let Some(e) = input_err {
            return Err(e);
        }
        results.into_iter().map(|r| r.map_err(E::from)).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_description;

    fn model() -> Model {
        let desc = parse_description(
            ".NAME T; .WEIGHT_EMBED (VALUE LEVEL 16); .EMBEDDING (ID RANDOM 4);
             .INPUT_DIM 4; .ENCODING MULTIBUNDLE(BATCHBIND(ID,VALUE)); .CLASSES 3;
             .DIMENSIONS 256; .TRAIN_SIZE 30; .TEST_SIZE 30;",
        )
        .unwrap();
        Model::new(&desc, ValueRange::DEFAULT).unwrap()
    }

    fn data() -> Vec<(Sample, usize)> {
        (0..30)
            .map(|i| {
                let c = i % 3;
                let base = c as f64 * 0.8 - 0.8;
                let jitter = ((i * 7) % 5) as f64 * 0.02;
                (Sample::Real(vec![base + jitter, -base, base, jitter]), c)
            })
            .collect()
    }

    #[test]
    fn threads_do_not_change_memory() {
        let mut digests = Vec::new();
        for threads in [1, 2, 3, 8] {
            let mut m = model();
            m.train_stream(data().into_iter().map(Ok::<_, HdcError>), threads).unwrap();
            digests.push(m.digest());
        }
        assert!(digests.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn predictions_keep_order_and_learn() {
        let mut m = model();
        m.train_stream(data().into_iter().map(Ok::<_, HdcError>), 1).unwrap();
        m.finalize();
        let samples = || data().into_iter().map(|(s, _)| Ok::<_, HdcError>(s));
        let seq = m.predict_stream(samples(), 1).unwrap();
        let par = m.predict_stream(samples(), 4).unwrap();
        assert_eq!(seq, par);
        let labels: Vec<_> = data().into_iter().map(|(_, l)| l).collect();
        assert_eq!(seq, labels);
    }

    #[test]
    fn label_errors_surface_from_workers() {
        let mut m = model();
        let bad = vec![Ok::<_, HdcError>((Sample::Real(vec![0.0; 4]), 5))];
        assert!(matches!(
            m.train_stream(bad.into_iter(), 2),
            Err(HdcError::LabelOutOfRange { .. })
        ));
    }
}
