//! Repeated-run word-count benchmark.

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::tagger::Tagger;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("run {run} produced {found} tokens, run 1 produced {expected}")]
    Nondeterministic {
        run: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Time to build the tagger, when the caller measured it.
    pub construction: Option<Duration>,
    pub runs: Vec<Duration>,
    pub tokens: usize,
    pub distinct_words: usize,
    pub chars: usize,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

impl BenchReport {
    pub fn mean(&self) -> Duration {
        self.runs.iter().sum::<Duration>() / self.runs.len() as u32
    }

    pub fn chars_per_sec(&self) -> f64 {
        self.chars as f64 / self.mean().as_secs_f64().max(f64::MIN_POSITIVE)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.construction {
            writeln!(f, "construction_ms={:.3}", ms(c))?;
        }
        for (i, r) in self.runs.iter().enumerate() {
            writeln!(f, "run {}: {:.3} ms", i + 1, ms(*r))?;
        }
        writeln!(f, "mean_ms={:.3}", ms(self.mean()))?;
        writeln!(f, "tokens={}", self.tokens)?;
        writeln!(f, "distinct_words={}", self.distinct_words)?;
        writeln!(f, "chars={}", self.chars)?;
        write!(f, "chars_per_sec={:.0}", self.chars_per_sec())
    }
}

fn count_words(tagger: &Tagger, corpus: &str) -> HashMap<String, usize> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for line in corpus.lines() {
        for t in tagger.tag_line(line) {
            *counts.entry(t.surface).or_default() += 1;
        }
    }
    counts
}

/// Counts word frequencies in `corpus` `runs` times, timing each run.
pub fn run_bench(tagger: &Tagger, corpus: &str, runs: usize) -> Result<BenchReport, BenchError> {
    if runs == 0 {
        return Err(BenchError::NoRuns);
    }
    let mut times = Vec::with_capacity(runs);
    let mut first: Option<(usize, usize)> = None;
    for run in 1..=runs {
        let start = Instant::now();
        let counts = count_words(tagger, corpus);
        times.push(start.elapsed());
        let tokens = counts.values().sum();
        match first {
            None => first = Some((tokens, counts.len())),
            Some((expected, _)) if expected != tokens => {
                return Err(BenchError::Nondeterministic {
                    run,
                    expected,
                    found: tokens,
                })
            }
            Some(_) => {}
        }
    }
    let (tokens, distinct_words) = first.expect("at least one run");
    Ok(BenchReport {
        construction: None,
        runs: times,
        tokens,
        distinct_words,
        chars: corpus.lines().map(|l| l.chars().count()).sum(),
    })
}
