//! Monte Carlo simulation of isotropic random flights.
//!
//! A flight takes `n + 1` directions at renewal epochs whose normalized
//! spacings follow one of three Dirichlet laws (uniform simplex for d = 1,
//! Dirichlet(d-1, ...) or Dirichlet(d/2-1, ...) for higher dimensions), and
//! moves at constant speed between collisions. The time-rescaled flight
//! `Y^n(t) = X^n(t^beta)` with speed `c = k^{-1/alpha}` has the NPME solution
//! as its law.
//!
//! Sampling is rejection-free: the simplex fractions come from normalized
//! independent Gamma variates and the directions from normalized standard
//! normals. Every terminal position is a deterministic function of an
//! [`RngStream`]; batches assign one stream per sample so results do not
//! depend on the worker count or schedule.

use crate::kernel::{m_from_flight, norm, FlightCase, NpmeParams};
use crate::{Error, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Renewal-time law of the flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RenewalLaw {
    /// Uniform on the simplex (Dirichlet(1, ..., 1)); d = 1.
    F1,
    /// Dirichlet(d-1, ..., d-1); d >= 2.
    F2A,
    /// Dirichlet(d/2-1, ..., d/2-1); d >= 3.
    F3B,
}

impl From<FlightCase> for RenewalLaw {
    fn from(case: FlightCase) -> Self {
        match case {
            FlightCase::D1 => RenewalLaw::F1,
            FlightCase::DirA => RenewalLaw::F2A,
            FlightCase::DirB => RenewalLaw::F3B,
        }
    }
}

/// One random-flight process: dimension, direction changes, renewal law, speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightConfig {
    pub d: usize,
    pub n: usize,
    pub law: RenewalLaw,
    pub speed: f64,
}

impl FlightConfig {
    pub fn new(d: usize, n: usize, law: RenewalLaw, speed: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Validity("n must be at least 1".into()));
        }
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::Domain(format!("speed must be positive, got {speed}")));
        }
        match law {
            RenewalLaw::F1 if d != 1 => {
                return Err(Error::Validity(format!("law F1 requires d = 1, got d={d}")))
            }
            RenewalLaw::F2A if d < 2 => {
                return Err(Error::Validity(format!("law F2A requires d >= 2, got d={d}")))
            }
            RenewalLaw::F3B if d < 3 => {
                return Err(Error::Validity(format!("law F3B requires d >= 3, got d={d}")))
            }
            _ => {}
        }
        Ok(FlightConfig { d, n, law, speed })
    }
}

/// Reproducible RNG stream identity: identical `(seed, stream_id)` pairs
/// replay identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        // splitmix64 expansion of (seed, stream_id) into a full 256-bit key
        let mut state = self.seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(self.stream_id ^ 0x5851_f42d_4c95_7f2d);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

/// One Gamma(shape, 1) variate.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::Domain(format!("Gamma shape must be positive, got {shape}")));
    }
    let dist = Gamma::new(shape, 1.0)
        .map_err(|e| Error::Domain(format!("Gamma({shape}, 1): {e}")))?;
    Ok(dist.sample(rng))
}

/// One direction: uniform on the unit sphere for d >= 2 (normalized
/// standard normals); for d = 1, a uniform sign initially and strict
/// alternation afterwards.
pub fn sample_direction<R: Rng + ?Sized>(
    d: usize,
    rng: &mut R,
    prev: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    if d == 1 {
        return Ok(match prev {
            Some(p) => vec![-p[0]],
            None => vec![if rng.random::<bool>() { 1.0 } else { -1.0 }],
        });
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&v);
        if len > 1e-150 {
            return Ok(v.into_iter().map(|c| c / len).collect());
        }
        // degenerate draw, resample
    }
}

/// The `n + 1` normalized renewal fractions for one flight, Dirichlet by
/// normalized independent Gamma variates.
pub fn sample_renewal_fractions<R: Rng + ?Sized>(
    n: usize,
    law: RenewalLaw,
    d: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::Validity("n must be at least 1".into()));
    }
    let shape = match law {
        RenewalLaw::F1 => {
            if d != 1 {
                return Err(Error::Validity(format!("law F1 requires d = 1, got d={d}")));
            }
            1.0
        }
        RenewalLaw::F2A => {
            if d < 2 {
                return Err(Error::Validity(format!("law F2A requires d >= 2, got d={d}")));
            }
            d as f64 - 1.0
        }
        RenewalLaw::F3B => {
            if d < 3 {
                return Err(Error::Validity(format!("law F3B requires d >= 3, got d={d}")));
            }
            d as f64 / 2.0 - 1.0
        }
    };
    let dist = Gamma::new(shape, 1.0).expect("validated shape");
    let mut draws: Vec<f64> = (0..=n).map(|_| dist.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 {
        // astronomically unlikely underflow of every variate
        return Err(Error::Domain("degenerate Dirichlet sample".into()));
    }
    for v in &mut draws {
        *v /= total;
    }
    Ok(draws)
}

/// Terminal position from explicit fractions and directions:
/// `speed * t * sum_k fraction_k V_k`, with compensated summation.
pub fn position_from_parts(
    fractions: &[f64],
    directions: &[Vec<f64>],
    speed: f64,
    t_obs: f64,
) -> Vec<f64> {
    let d = directions[0].len();
    let mut acc = vec![0.0f64; d];
    let mut comp = vec![0.0f64; d];
    for (frac, dir) in fractions.iter().zip(directions) {
        for i in 0..d {
            let term = frac * dir[i] - comp[i];
            let next = acc[i] + term;
            comp[i] = (next - acc[i]) - term;
            acc[i] = next;
        }
    }
    for v in &mut acc {
        *v *= speed * t_obs;
    }
    acc
}

/// Terminal position `X^n(t_obs)` of one flight.
pub fn simulate_position<R: Rng + ?Sized>(
    t_obs: f64,
    config: &FlightConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(t_obs > 0.0) || !t_obs.is_finite() {
        return Err(Error::Domain(format!("t_obs must be positive, got {t_obs}")));
    }
    let fractions = sample_renewal_fractions(config.n, config.law, config.d, rng)?;
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(config.n + 1);
    for k in 0..=config.n {
        let prev = if k == 0 { None } else { Some(directions[k - 1].as_slice()) };
        directions.push(sample_direction(config.d, rng, prev)?);
    }
    Ok(position_from_parts(&fractions, &directions, config.speed, t_obs))
}

/// Terminal position of the time-rescaled flight `Y^n(t_obs) =
/// X^n(t_obs^beta)` with speed `c` from the NPME parameters.
pub fn simulate_rescaled<R: Rng + ?Sized>(
    t_obs: f64,
    n: usize,
    case: FlightCase,
    params: &NpmeParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let m = m_from_flight(n, params.d, params.alpha, case)?;
    if ((m - params.m) / params.m).abs() > 1e-9 {
        return Err(Error::Validity(format!(
            "flight (n={n}, case={}) maps to m={m}, params carry m={}",
            case.as_str(),
            params.m
        )));
    }
    let config = FlightConfig::new(params.d, n, case.into(), params.speed_c)?;
    simulate_position(t_obs.powf(params.beta), &config, rng)
}

/// N terminal positions at a common observation time, with the metadata that
/// reproduces them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub positions: Vec<Vec<f64>>,
    pub t_obs: f64,
    pub config: FlightConfig,
    pub seed: u64,
}

/// How to execute a batch; `Parallel` requires the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

/// Default execution mode of [`batch_sample`].
pub fn default_mode() -> ExecMode {
    if cfg!(feature = "parallel") {
        ExecMode::Parallel
    } else {
        ExecMode::Sequential
    }
}

/// Samples `count` rescaled flights. Sample `i` draws from stream
/// `(seed, i)`, so the result is a deterministic function of `(count, seed)`
/// alone; `workers` only bounds the parallelism and leaves no trace in the
/// output.
pub fn batch_sample(
    count: usize,
    t_obs: f64,
    n: usize,
    case: FlightCase,
    params: &NpmeParams,
    seed: u64,
    workers: usize,
) -> Result<SampleBatch> {
    batch_sample_with(count, t_obs, n, case, params, seed, workers, default_mode())
}

#[allow(clippy::too_many_arguments)]
pub fn batch_sample_with(
    count: usize,
    t_obs: f64,
    n: usize,
    case: FlightCase,
    params: &NpmeParams,
    seed: u64,
    workers: usize,
    mode: ExecMode,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::Argument("batch size must be at least 1".into()));
    }
    if workers == 0 {
        return Err(Error::Argument("workers must be at least 1".into()));
    }
    // fail fast on invalid (n, case, params) before spawning work
    let m = m_from_flight(n, params.d, params.alpha, case)?;
    if ((m - params.m) / params.m).abs() > 1e-9 {
        return Err(Error::Validity(format!(
            "flight (n={n}, case={}) maps to m={m}, params carry m={}",
            case.as_str(),
            params.m
        )));
    }
    let sample_one = |i: usize| -> Result<Vec<f64>> {
        let mut rng = RngStream::new(seed, i as u64).rng();
        simulate_rescaled(t_obs, n, case, params, &mut rng)
    };
    let positions: Result<Vec<Vec<f64>>> = match mode {
        ExecMode::Sequential => (0..count).map(sample_one).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
            pool.install(|| (0..count).into_par_iter().map(sample_one).collect())
        }
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => {
            return Err(Error::Argument(
                "parallel execution requires the `parallel` feature".into(),
            ))
        }
    };
    Ok(SampleBatch {
        positions: positions?,
        t_obs,
        config: FlightConfig::new(params.d, n, case.into(), params.speed_c)?,
        seed,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct BatchHeader {
    config: FlightConfig,
    t_obs: f64,
    seed: u64,
    count: usize,
}

impl SampleBatch {
    /// Norms of all positions.
    pub fn norms(&self) -> Vec<f64> {
        self.positions.iter().map(|p| norm(p)).collect()
    }

    /// JSONL: a header record, then one position per line as an array of d floats.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = BatchHeader {
            config: self.config,
            t_obs: self.t_obs,
            seed: self.seed,
            count: self.positions.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for pos in &self.positions {
            serde_json::to_writer(&mut w, pos)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Argument("empty JSONL batch".into()))??;
        let header: BatchHeader = serde_json::from_str(&header_line)?;
        let mut positions = Vec::with_capacity(header.count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let pos: Vec<f64> = serde_json::from_str(&line)?;
            if pos.len() != header.config.d {
                return Err(Error::Argument(format!(
                    "position of dimension {} in a d={} batch",
                    pos.len(),
                    header.config.d
                )));
            }
            positions.push(pos);
        }
        if positions.len() != header.count {
            return Err(Error::Argument(format!(
                "batch header promises {} samples, found {}",
                header.count,
                positions.len()
            )));
        }
        Ok(SampleBatch {
            positions,
            t_obs: header.t_obs,
            config: header.config,
            seed: header.seed,
        })
    }
}
