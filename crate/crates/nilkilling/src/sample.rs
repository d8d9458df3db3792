//! Deterministic low-discrepancy sampling of chart boxes.
//!
//! Points come from a Halton sequence (one prime base per coordinate),
//! offset by the seed, and are filtered by the chart's singular-locus
//! predicate and the degenerate-metric check.

use crate::geometry::{metric_at, GeometryError, MetricSpec};

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// Outcome of sampling: the admissible points plus how many candidates were
/// excluded (singular locus or degenerate metric).
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub excluded: usize,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
#[error("no admissible sample points found (tried {tried}, all excluded)")]
pub struct NoAdmissiblePoints {
    pub tried: usize,
}

/// Draw `count` admissible points from the metric's sampling box.
pub fn sample_points(
    spec: &MetricSpec,
    count: usize,
    seed: u64,
) -> Result<SampleSet, NoAdmissiblePoints> {
    let n = spec.dim();
    assert!(n <= PRIMES.len(), "sampling supports up to 8 dimensions");
    let start = seed.wrapping_mul(7919).wrapping_add(1);
    let mut points = Vec::with_capacity(count);
    let mut excluded = 0;
    let budget = count * 20 + 100;
    let mut tried = 0;
    let mut index = start;
    while points.len() < count && tried < budget {
        let p: Vec<f64> = (0..n)
            .map(|i| {
                let (lo, hi) = spec.chart.sampling_box[i];
                lo + halton(index, PRIMES[i]) * (hi - lo)
            })
            .collect();
        index += 1;
        tried += 1;
        if !spec.chart.off_singular_locus(&p, &spec.params) {
            excluded += 1;
            continue;
        }
        match metric_at(spec, &p, 0) {
            Ok(_) => points.push(p),
            Err(GeometryError::Degenerate { .. }) | Err(GeometryError::Eval(_)) => excluded += 1,
            Err(_) => excluded += 1,
        }
    }
    if points.is_empty() {
        return Err(NoAdmissiblePoints { tried });
    }
    Ok(SampleSet {
        points,
        excluded,
        seed,
    })
}
