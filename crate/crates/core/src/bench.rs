//! Training-time ladders over growing synthetic datasets.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::data::synth_labels;
use crate::error::{Error, Result};
use crate::similarity::similarity_from_labels;
use crate::train::{train, TrainConfig, TrainMode};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchPoint {
    pub mode: TrainMode,
    pub n: usize,
    /// Fastest of the repeats, training call only.
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct LadderSpec {
    pub sizes: Vec<usize>,
    pub classes: usize,
    pub repeats: usize,
    pub data_seed: u64,
}

/// Times `train` at every ladder size. Labels are synthetic one-hot classes;
/// building the similarity is excluded from the timing and no objective
/// trace is recorded.
pub fn run_ladder(spec: &LadderSpec, config: &TrainConfig) -> Result<Vec<BenchPoint>> {
    if spec.sizes.is_empty() || spec.repeats == 0 {
        return Err(Error::Config("bench needs at least one size and one repeat".into()));
    }
    let mut config = config.clone();
    config.trace = false;
    config.early_stop = None;
    let mut out = Vec::with_capacity(spec.sizes.len());
    for &n in &spec.sizes {
        let labels = synth_labels(n, spec.classes, spec.data_seed)?;
        let s = similarity_from_labels(&labels, &labels)?;
        let mut best = Duration::MAX;
        for _ in 0..spec.repeats {
            let start = Instant::now();
            let state = train(&s, &config)?;
            best = best.min(start.elapsed());
            std::hint::black_box(state);
        }
        out.push(BenchPoint {
            mode: config.mode,
            n,
            seconds: best.as_secs_f64(),
        });
    }
    Ok(out)
}

/// `t[k+1] / t[k]` for consecutive ladder points.
pub fn doubling_ratios(points: &[BenchPoint]) -> Vec<f64> {
    points.windows(2).map(|w| w[1].seconds / w[0].seconds).collect()
}

pub fn write_bench_csv(
    mut w: impl Write,
    header: &[(String, String)],
    points: &[BenchPoint],
) -> Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "mode,n,seconds")?;
    for p in points {
        let mode = match p.mode {
            TrainMode::Full => "full",
            TrainMode::Stochastic => "stochastic",
        };
        writeln!(w, "{mode},{},{:.6}", p.n, p.seconds)?;
    }
    Ok(())
}
