//! The full ratio pipeline with per-chunk checkpoints.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::charsums::scan::{combine_chunks, ChunkResult};
use crate::charsums::{
    denominator_asymptotic, pigeonhole_extract, sigma1, sigma1_from_signs, sigma2, DiscriminantScan, PartialSumKernel,
    WorkLimits,
};
use crate::error::{Error, Result};
use crate::resonator::{assign_signs, CoefficientTable};
use crate::smoothing::ExpGlueBump;

use super::config::RunConfig;
use super::report::{num, write_csv, write_json, Diagnostics, RunReport, SignSummary, Timing, VERSION};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_digest: String,
    pub chunk_count: usize,
    pub chunks: Vec<ChunkResult>,
}

impl Checkpoint {
    pub fn load(path: &Path, digest: &str) -> Result<Option<Self>> {
        if !path.exists() {
            return Ok(None);
        }
        let cp: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if cp.config_digest != digest {
            return Err(Error::Checkpoint(format!(
                "{} belongs to a different configuration (digest {})",
                path.display(),
                cp.config_digest
            )));
        }
        Ok(Some(cp))
    }
}

#[derive(Clone, Debug, Default)]
pub struct RatioOptions {
    pub checkpoint: Option<PathBuf>,
    /// Stop after this many newly computed chunks (simulated interruption).
    pub stop_after: Option<usize>,
}

pub enum RatioOutcome {
    Complete(Box<RunReport>, Vec<(u64, f64)>),
    Interrupted { completed: usize, total: usize },
}

/// params → table → S → signs → Σ₁, Σ₂ → 𝒩, 𝒟 → pigeonhole.
pub fn run_ratio(cfg: &RunConfig, opts: &RatioOptions) -> Result<RatioOutcome> {
    let t0 = Instant::now();
    let params = cfg.params()?;
    let limits = WorkLimits {
        max_d: cfg.max_d,
        ..WorkLimits::default()
    };
    limits.check(params.d, 1, params.x)?;
    let base = CoefficientTable::new(&params)?;
    let kernel = PartialSumKernel::new(&base, params.x)?;
    let t1 = Instant::now();
    let signs = assign_signs(&base, |y| kernel.s_of_y(y))?;
    let table = base.with_signs(&signs)?;
    let s1 = sigma1(&table, &kernel);
    let s2 = sigma2(&table, &kernel);
    let t2 = Instant::now();

    let scan = DiscriminantScan::new(&table, &ExpGlueBump, &limits, true)?;
    let total = scan.chunk_count();
    let digest = cfg.digest();
    let mut done: BTreeMap<usize, ChunkResult> = BTreeMap::new();
    if let Some(path) = &opts.checkpoint {
        if let Some(cp) = Checkpoint::load(path, &digest)? {
            if cp.chunk_count != total {
                return Err(Error::Checkpoint("chunk count changed".into()));
            }
            for c in cp.chunks {
                done.insert(c.index, c);
            }
        }
    }
    let todo: Vec<usize> = (0..total).filter(|i| !done.contains_key(i)).collect();
    let budget = opts.stop_after.unwrap_or(usize::MAX);
    let batch = rayon::current_num_threads().max(1);
    let mut computed = 0;
    for group in todo.chunks(batch) {
        if computed >= budget {
            break;
        }
        let take = group.len().min(budget - computed);
        let results: Vec<ChunkResult> = {
            use rayon::prelude::*;
            group[..take].par_iter().map(|&i| scan.run_chunk(i)).collect()
        };
        computed += take;
        for c in results {
            done.insert(c.index, c);
        }
        if let Some(path) = &opts.checkpoint {
            let cp = Checkpoint {
                config_digest: digest.clone(),
                chunk_count: total,
                chunks: done.values().cloned().collect(),
            };
            write_json(path, &cp)?;
        }
    }
    if done.len() < total {
        return Ok(RatioOutcome::Interrupted {
            completed: done.len(),
            total,
        });
    }
    let chunks: Vec<ChunkResult> = done.into_values().collect();
    let totals = combine_chunks(&chunks);
    let den_asym = denominator_asymptotic(&table);
    let result = pigeonhole_extract(&table, &totals, s1, s2, den_asym)?;
    let pairs: Vec<(u64, f64)> = chunks
        .iter()
        .flat_map(|c| c.pairs.iter().map(|&(d, b)| (d, f64::from_bits(b))))
        .collect();
    let t3 = Instant::now();
    let s1_signs = sigma1_from_signs(&table, &signs);
    let report = RunReport {
        version: VERSION.to_string(),
        config: cfg.clone(),
        config_digest: digest,
        params: params.clone(),
        table: table.document(),
        signs: SignSummary {
            primes: signs.primes.len(),
            negative: signs.epsilon.iter().filter(|&&e| e < 0).count(),
            values: signs
                .primes
                .iter()
                .zip(&signs.epsilon)
                .zip(&signs.s_values)
                .map(|((&p, &e), &s)| (p, e, s))
                .collect(),
        },
        result,
        diagnostics: Diagnostics {
            support_len: table.support().len(),
            pplus_energy: table.pplus_energy(),
            sigma1_from_signs: s1_signs,
            sigma1_plus_sigma2: s1 + s2,
            chunks: total,
        },
        timing: cfg.timing.then(|| Timing {
            setup_seconds: (t1 - t0).as_secs_f64(),
            signs_seconds: (t2 - t1).as_secs_f64(),
            scan_seconds: (t3 - t2).as_secs_f64(),
        }),
    };
    Ok(RatioOutcome::Complete(Box::new(report), pairs))
}

/// Writes ratio.json and ratio_sums.csv under the output directory.
pub fn write_ratio_outputs(dir: &Path, report: &RunReport, pairs: &[(u64, f64)]) -> Result<()> {
    write_json(&dir.join("ratio.json"), report)?;
    write_csv(
        &dir.join("ratio_sums.csv"),
        &["d", "sum"],
        pairs.iter().map(|&(d, v)| vec![d.to_string(), num(v)]),
    )
}
