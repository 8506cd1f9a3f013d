//! Timing harness for the field-evaluation hot path.
//!
//! Wall-clock timing after at least 30 untimed warm-up iterations. The
//! nearest-point search is timed separately from the rest of the field so
//! the report can state the fraction of time spent searching.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{ec_distance, CurveQueryResult, DiscretizedCurve, SearchOptions};
use crate::distance::{ee_distance_generic, ee_distance_se3};
use crate::field::{escape_policy, evaluate_from_query, FieldOptions, GainSchedule};
use crate::group::{Group, GroupElement, GroupKind};
use crate::properties::MAX_ANGLE;
use crate::sampling::{random_element, random_se3};

pub const MIN_WARMUP: usize = 30;
pub const WORKER_COUNTS: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub median_ms: f64,
}

impl Summary {
    pub fn of(samples_ms: &[f64]) -> Self {
        if samples_ms.is_empty() {
            return Summary { mean_ms: 0.0, stddev_ms: 0.0, median_ms: 0.0 };
        }
        let n = samples_ms.len() as f64;
        let mean = samples_ms.iter().sum::<f64>() / n;
        let var = if samples_ms.len() > 1 { samples_ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let mut sorted = samples_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) { 0.5 * (sorted[mid - 1] + sorted[mid]) } else { sorted[mid] };
        Summary { mean_ms: mean, stddev_ms: var.sqrt(), median_ms: median }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkerTiming {
    pub workers: usize,
    pub search: Summary,
    pub speedup_vs_serial: f64,
    /// Index and distance bits agree with the serial search on every state.
    pub bit_identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub trials: usize,
    pub warmup: usize,
    pub workers: usize,
    pub host_threads: usize,
    pub per_iteration_mean_ms: f64,
    pub per_iteration_stddev_ms: f64,
    pub per_iteration_median_ms: f64,
    pub fraction_in_search: f64,
    /// Serial search time over parallel search time at `workers`.
    pub speedup_vs_serial: f64,
    pub parallel: Vec<WorkerTiming>,
    pub checksum_timed: u64,
    pub checksum_untimed: u64,
}

impl BenchReport {
    pub fn checksums_match(&self) -> bool {
        self.checksum_timed == self.checksum_untimed
    }

    pub fn all_bit_identical(&self) -> bool {
        self.parallel.iter().all(|p| p.bit_identical)
    }

    pub fn speedup_at(&self, workers: usize) -> Option<f64> {
        self.parallel.iter().find(|p| p.workers == workers).map(|p| p.speedup_vs_serial)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "field evaluation, N = {}, {} trials, {} warm-up, host threads {}\n",
            self.n, self.trials, self.warmup, self.host_threads
        ));
        s.push_str(&format!(
            "  per iteration   {:.4} ms +- {:.4} (median {:.4})\n",
            self.per_iteration_mean_ms, self.per_iteration_stddev_ms, self.per_iteration_median_ms
        ));
        s.push_str(&format!("  time in search  {:.2} %\n", 100.0 * self.fraction_in_search));
        s.push_str(&format!("  checksums       {}\n", if self.checksums_match() { "match" } else { "DIFFER" }));
        s.push_str("  workers  search mean ms  median ms  speedup  identical\n");
        for p in &self.parallel {
            s.push_str(&format!(
                "  {:>7}  {:>14.4}  {:>9.4}  {:>7.2}  {}\n",
                p.workers,
                p.search.mean_ms,
                p.search.median_ms,
                p.speedup_vs_serial,
                if p.bit_identical { "yes" } else { "NO" }
            ));
        }
        s
    }
}

fn checksum(results: &[CurveQueryResult]) -> u64 {
    results.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, q| {
        let h = (h ^ q.distance.to_bits()).wrapping_mul(0x0100_0000_01b3);
        (h ^ q.s_star_index as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Half on-curve samples, half perturbed off-curve states.
pub fn bench_states(curve: &DiscretizedCurve, count: usize, seed: u64) -> Vec<GroupElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = curve.group();
    (0..count)
        .map(|i| {
            let k = rng.gen_range(0..curve.len());
            if i % 2 == 0 {
                *curve.sample(k)
            } else {
                let offset = match g.kind() {
                    GroupKind::SE3 => random_se3(&mut rng, 0.5, 0.3),
                    _ => random_element(&mut rng, g, 0.5, 0.3),
                };
                offset.compose(curve.sample(k))
            }
        })
        .collect()
}

fn field_once(curve: &DiscretizedCurve, h: &GroupElement, gains: &GainSchedule, opts: &FieldOptions) -> (CurveQueryResult, f64, f64) {
    let t0 = Instant::now();
    let query = ec_distance(curve, h, &opts.search);
    let t1 = Instant::now();
    let xi = if query.near_tie {
        escape_policy(curve, h, &query, 1e-3).map(|x| x.norm())
    } else {
        evaluate_from_query(curve, h, &query, gains, opts).map(|e| e.xi.norm())
    };
    let t2 = Instant::now();
    std::hint::black_box(xi.ok());
    (query, (t1 - t0).as_secs_f64() * 1e3, (t2 - t0).as_secs_f64() * 1e3)
}

fn time_search(
    curve: &DiscretizedCurve,
    states: &[GroupElement],
    opts: &SearchOptions,
    warmup: usize,
) -> (Vec<CurveQueryResult>, Vec<f64>) {
    for h in states.iter().cycle().take(warmup) {
        std::hint::black_box(ec_distance(curve, h, opts));
    }
    let mut out = Vec::with_capacity(states.len());
    let mut times = Vec::with_capacity(states.len());
    for h in states {
        let t0 = Instant::now();
        let q = ec_distance(curve, h, opts);
        times.push(t0.elapsed().as_secs_f64() * 1e3);
        out.push(q);
    }
    (out, times)
}

/// Times serial field evaluation and the parallel search at 1, 2, 4 and 8
/// workers (plus `workers` if it is not among them).
pub fn bench_field_eval(curve: &DiscretizedCurve, trials: usize, workers: usize, warmup: usize, seed: u64) -> crate::Result<BenchReport> {
    if curve.len() < 100 {
        return Err(crate::Error::InvalidConfig(format!("benchmark curve needs at least 100 samples, got {}", curve.len())));
    }
    let warmup = warmup.max(MIN_WARMUP);
    let workers = workers.max(1);
    let states = bench_states(curve, trials, seed);
    let gains = GainSchedule::default();
    let opts = FieldOptions::default();

    for h in states.iter().cycle().take(warmup) {
        std::hint::black_box(field_once(curve, h, &gains, &opts));
    }
    let mut serial = Vec::with_capacity(trials);
    let mut search_ms = Vec::with_capacity(trials);
    let mut total_ms = Vec::with_capacity(trials);
    for h in &states {
        let (q, s, t) = field_once(curve, h, &gains, &opts);
        serial.push(q);
        search_ms.push(s);
        total_ms.push(t);
    }
    let untimed: Vec<_> = states.iter().map(|h| ec_distance(curve, h, &opts.search)).collect();
    let total = Summary::of(&total_ms);
    let search_sum: f64 = search_ms.iter().sum();
    let total_sum: f64 = total_ms.iter().sum();
    let fraction = if total_sum > 0.0 { (search_sum / total_sum).clamp(0.0, 1.0) } else { 0.0 };
    let serial_search = Summary::of(&search_ms);

    let mut counts: Vec<usize> = WORKER_COUNTS.to_vec();
    if !counts.contains(&workers) {
        counts.push(workers);
    }
    let par_opts = SearchOptions { parallel: true, ..opts.search };
    let mut parallel = Vec::new();
    for &w in &counts {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build().map_err(|e| crate::Error::InvalidConfig(e.to_string()))?;
        let (results, times) = pool.install(|| time_search(curve, &states, &par_opts, warmup));
        let bit_identical =
            results.iter().zip(&serial).all(|(a, b)| a.s_star_index == b.s_star_index && a.distance.to_bits() == b.distance.to_bits());
        let search = Summary::of(&times);
        let speedup = if search.mean_ms > 0.0 { serial_search.mean_ms / search.mean_ms } else { 0.0 };
        parallel.push(WorkerTiming { workers: w, search, speedup_vs_serial: speedup, bit_identical });
    }
    let speedup_vs_serial = parallel.iter().find(|p| p.workers == workers).map_or(0.0, |p| p.speedup_vs_serial);

    Ok(BenchReport {
        n: curve.len(),
        trials,
        warmup,
        workers,
        host_threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        per_iteration_mean_ms: total.mean_ms,
        per_iteration_stddev_ms: total.stddev_ms,
        per_iteration_median_ms: total.median_ms,
        fraction_in_search: fraction,
        speedup_vs_serial,
        parallel,
        checksum_timed: checksum(&serial),
        checksum_untimed: checksum(&untimed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub trials: usize,
    pub closed_form_ops_per_sec: f64,
    pub generic_ops_per_sec: f64,
    /// Closed-form throughput over generic throughput.
    pub ratio: f64,
    pub max_abs_difference: f64,
    /// First (cold) closed-form pass time over the second (warm) one.
    pub cold_over_warm: f64,
}

impl KernelReport {
    pub fn is_empty(&self) -> bool {
        self.trials == 0
    }

    pub fn to_table(&self) -> String {
        format!(
            "distance kernels, {} pairs\n  closed form  {:.3e} ops/s\n  generic      {:.3e} ops/s\n  ratio        {:.1}x\n  max |diff|   {:.3e}\n  cold/warm    {:.2}\n",
            self.trials, self.closed_form_ops_per_sec, self.generic_ops_per_sec, self.ratio, self.max_abs_difference, self.cold_over_warm
        )
    }
}

/// Throughput of the closed-form `SE(3)` distance against the generic
/// logarithm on identical random pairs.
pub fn bench_distance_kernels(trials: usize, seed: u64) -> KernelReport {
    if trials == 0 {
        return KernelReport {
            trials: 0,
            closed_form_ops_per_sec: 0.0,
            generic_ops_per_sec: 0.0,
            ratio: 0.0,
            max_abs_difference: 0.0,
            cold_over_warm: 0.0,
        };
    }
    let g = Group::se3();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<_> = (0..trials).map(|_| (random_se3(&mut rng, MAX_ANGLE, 1.0), random_se3(&mut rng, MAX_ANGLE, 1.0))).collect();

    let closed_pass = || {
        let t0 = Instant::now();
        let v: Vec<f64> = pairs.iter().map(|(a, b)| ee_distance_se3(a, b).0).collect();
        (v, t0.elapsed().as_secs_f64())
    };
    let (closed, cold) = closed_pass();
    let (_, warm) = closed_pass();
    let t0 = Instant::now();
    let generic: Vec<f64> = pairs.iter().map(|(a, b)| ee_distance_generic(&g, a, b).unwrap_or(f64::NAN)).collect();
    let generic_time = t0.elapsed().as_secs_f64();

    let max_abs_difference = closed.iter().zip(&generic).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let closed_rate = trials as f64 / warm.max(1e-12);
    let generic_rate = trials as f64 / generic_time.max(1e-12);
    KernelReport {
        trials,
        closed_form_ops_per_sec: closed_rate,
        generic_ops_per_sec: generic_rate,
        ratio: closed_rate / generic_rate,
        max_abs_difference,
        cold_over_warm: cold / warm.max(1e-12),
    }
}
