//! Monte Carlo validation: Euler-scheme simulators, sample statistics with
//! batch-means standard errors, an Itô-integral conditional-moment oracle
//! and derived-vs-sample comparison reports.
//!
//! Determinism contract: every sampler is keyed by `(seed, chunk index,
//! stream index)` through a ChaCha12 generator, chunks have a fixed size
//! independent of the worker count, and aggregation runs in chunk order.
//! Identical `(params, config)` therefore produce bit-identical output no
//! matter how many rayon workers participate.
//!
//! Each chunk is an independent stationary segment: the variance starts at
//! its stationary mean `theta` and the first [`BURN_IN`] observations are
//! discarded before returns are recorded. Variance positivity uses the
//! full-truncation scheme (`v⁺ = max(v, 0)` inside drift and diffusion; the
//! state itself may go negative).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval::{eval_poly, EvalError, HestonParams, SlotRegistry, SvjParams};
use crate::heston::{self, ModelError};
use crate::ito::IndexTriple;
use crate::svj;

/// Observations discarded at the start of every chunk to reach the
/// stationary regime.
pub const BURN_IN: usize = 1_000;
/// Returns per independent chunk; fixed so that the output is invariant to
/// the degree of parallelism.
pub const CHUNK_SIZE: usize = 50_000;
/// Batches used for batch-means standard errors (returns are serially
/// dependent, so i.i.d. formulas would understate the error).
const N_BATCHES: usize = 100;

/// Errors raised by simulation and reporting.
#[derive(Debug, Error)]
pub enum McError {
    /// Parameter or configuration values outside their domain.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// Too few observations for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Failure in the symbolic layer while deriving reference values.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Failure evaluating a derived formula.
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Variance-positivity scheme used by the Euler discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum VarianceScheme {
    /// `v⁺ = max(v, 0)` inside drift and diffusion, state left untruncated.
    #[default]
    FullTruncation,
}

/// Simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Number of recorded returns.
    pub n_obs: usize,
    /// Euler substeps per observation interval.
    pub n_substeps: u32,
    /// Observation interval length; must match the parameter set's `h`.
    pub h: f64,
    /// Master seed for the counter-based substreams.
    pub seed: u64,
    /// Variance-positivity scheme.
    pub scheme: VarianceScheme,
}

impl SimConfig {
    /// Configuration with the default full-truncation scheme.
    pub fn new(n_obs: usize, n_substeps: u32, h: f64, seed: u64) -> Self {
        SimConfig {
            n_obs,
            n_substeps,
            h,
            seed,
            scheme: VarianceScheme::FullTruncation,
        }
    }

    fn validate(&self, h_params: f64) -> Result<(), McError> {
        if self.n_obs == 0 {
            return Err(McError::InvalidParams("n_obs must be >= 1".into()));
        }
        if self.n_substeps == 0 {
            return Err(McError::InvalidParams("n_substeps must be >= 1".into()));
        }
        if self.h != h_params {
            return Err(McError::InvalidParams(format!(
                "interval length mismatch: config h = {}, parameter h = {}",
                self.h, h_params
            )));
        }
        Ok(())
    }
}

/// ChaCha12 keyed by `(seed, chunk, stream)`: the reproducible substream
/// contract documented in the crate README.
fn chunk_rng(seed: u64, chunk: u64, stream: u64) -> ChaCha12Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&chunk.to_le_bytes());
    bytes[16..24].copy_from_slice(&stream.to_le_bytes());
    bytes[24..32].copy_from_slice(b"svmom.01");
    ChaCha12Rng::from_seed(bytes)
}

fn chunk_lengths(n_obs: usize) -> Vec<usize> {
    let mut lens = vec![CHUNK_SIZE; n_obs / CHUNK_SIZE];
    if !n_obs.is_multiple_of(CHUNK_SIZE) {
        lens.push(n_obs % CHUNK_SIZE);
    }
    lens
}

fn simulate_chunk_diffusion(p: &HestonParams, cfg: &SimConfig, chunk: u64, len: usize) -> Vec<f64> {
    let mut rng = chunk_rng(cfg.seed, chunk, 0);
    let dt = cfg.h / f64::from(cfg.n_substeps);
    let sqrt_dt = dt.sqrt();
    let ortho = (1.0 - p.rho * p.rho).sqrt();
    let mut v = p.theta;
    let mut out = Vec::with_capacity(len);
    for i in 0..(BURN_IN + len) {
        let mut y = 0.0;
        for _ in 0..cfg.n_substeps {
            let zv: f64 = rng.sample(StandardNormal);
            let zs: f64 = rng.sample(StandardNormal);
            let vp = v.max(0.0);
            let noise = vp.sqrt() * sqrt_dt;
            y += (p.mu - 0.5 * vp) * dt + noise * (p.rho * zv + ortho * zs);
            v += p.k * (p.theta - vp) * dt + p.sigma_v * noise * zv;
        }
        if i >= BURN_IN {
            out.push(y);
        }
    }
    out
}

fn check_feller(p: &HestonParams) -> Result<(), McError> {
    if p.feller_ok() {
        Ok(())
    } else {
        Err(McError::InvalidParams(format!(
            "Feller condition violated: 2*k*theta = {} <= sigma_v^2 = {}",
            2.0 * p.k * p.theta,
            p.sigma_v * p.sigma_v
        )))
    }
}

/// Simulate `cfg.n_obs` returns of the pure-diffusion model.
pub fn simulate_heston(p: &HestonParams, cfg: &SimConfig) -> Result<Vec<f64>, McError> {
    cfg.validate(p.h)?;
    check_feller(p)?;
    let lens = chunk_lengths(cfg.n_obs);
    let chunks: Vec<Vec<f64>> = lens
        .par_iter()
        .enumerate()
        .map(|(c, &len)| simulate_chunk_diffusion(p, cfg, c as u64, len))
        .collect();
    Ok(chunks.concat())
}

/// Simulate `cfg.n_obs` returns of the jump-extended model. Jump draws come
/// from a dedicated substream, so `lambda = 0` reproduces
/// [`simulate_heston`] exactly under a shared seed.
pub fn simulate_svj(p: &SvjParams, cfg: &SimConfig) -> Result<Vec<f64>, McError> {
    cfg.validate(p.heston.h)?;
    check_feller(&p.heston)?;
    let lens = chunk_lengths(cfg.n_obs);
    let chunks: Vec<Vec<f64>> = lens
        .par_iter()
        .enumerate()
        .map(|(c, &len)| {
            let mut returns = simulate_chunk_diffusion(&p.heston, cfg, c as u64, len);
            if p.lambda > 0.0 {
                let mut rng = chunk_rng(cfg.seed, c as u64, 1);
                let count = Poisson::new(p.lambda * cfg.h).expect("positive rate");
                for r in &mut returns {
                    let n = count.sample(&mut rng) as u64;
                    for _ in 0..n {
                        let jump = if p.sigma_j > 0.0 {
                            Normal::new(p.mu_j, p.sigma_j)
                                .expect("valid jump size")
                                .sample(&mut rng)
                        } else {
                            p.mu_j
                        };
                        *r += jump;
                    }
                }
            }
            returns
        })
        .collect();
    Ok(chunks.concat())
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStat {
    /// The estimate.
    pub value: f64,
    /// Batch-means (or across-path) standard error.
    pub std_error: f64,
}

fn batch_means(series: impl ExactSizeIterator<Item = f64> + Clone) -> Result<SampleStat, McError> {
    let n = series.len();
    if n <= N_BATCHES {
        return Err(McError::InsufficientData(format!(
            "{n} observations, need more than {N_BATCHES}"
        )));
    }
    let batch_len = n / N_BATCHES;
    let mut means = Vec::with_capacity(N_BATCHES);
    let mut iter = series;
    for _ in 0..N_BATCHES {
        let mut sum = 0.0;
        for _ in 0..batch_len {
            sum += iter.next().expect("length checked");
        }
        means.push(sum / batch_len as f64);
    }
    let grand = means.iter().sum::<f64>() / N_BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / ((N_BATCHES - 1) as f64);
    Ok(SampleStat {
        value: grand,
        std_error: (var / N_BATCHES as f64).sqrt(),
    })
}

/// Empirical raw moments `mean(y^l)` for `l = 1..=max_order`, with
/// batch-means standard errors.
pub fn sample_moments(returns: &[f64], max_order: u32) -> Result<Vec<SampleStat>, McError> {
    (1..=max_order)
        .map(|l| batch_means(returns.iter().map(move |&y| y.powi(l as i32))))
        .collect()
}

/// Empirical lag-1 covariances for the requested `(l1, l2)` orders:
/// `mean[(y_n^{l1} - mean(y^{l1})) (y_{n+1}^{l2} - mean(y^{l2}))]`,
/// matching `E[y_n^{l1} y_{n+1}^{l2}] - E[y^{l1}] E[y^{l2}]`.
pub fn sample_cov(returns: &[f64], orders: &[(u32, u32)]) -> Result<Vec<SampleStat>, McError> {
    if returns.len() <= N_BATCHES + 1 {
        return Err(McError::InsufficientData(format!(
            "{} observations, need more than {}",
            returns.len(),
            N_BATCHES + 1
        )));
    }
    orders
        .iter()
        .map(|&(l1, l2)| {
            let m1 = returns.iter().map(|&y| y.powi(l1 as i32)).sum::<f64>() / returns.len() as f64;
            let m2 = returns.iter().map(|&y| y.powi(l2 as i32)).sum::<f64>() / returns.len() as f64;
            batch_means(
                returns
                    .windows(2)
                    .map(move |w| (w[0].powi(l1 as i32) - m1) * (w[1].powi(l2 as i32) - m2)),
            )
        })
        .collect()
}

/// Monte Carlo oracle for the conditional Itô product moments: simulate the
/// variance path by full-truncation Euler from `v(0) = v0`, accumulate the
/// discretized integrals `IE`, `I`, `I*` over `[0, tau]` and average the
/// product `IE^{m1} I^{m2} I*^{m3}` across paths.
pub fn oracle_ieii(
    t: IndexTriple,
    params: &HestonParams,
    v0: f64,
    tau: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<SampleStat, McError> {
    Ok(oracle_ieii_batch(&[t], params, v0, tau, n_paths, n_steps, seed)?[0])
}

/// Batched variant of [`oracle_ieii`]: all triples are estimated from the
/// same simulated paths, so a whole grid costs one simulation.
pub fn oracle_ieii_batch(
    triples: &[IndexTriple],
    params: &HestonParams,
    v0: f64,
    tau: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<SampleStat>, McError> {
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(McError::InvalidParams(format!("v0 = {v0} must be >= 0")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(McError::InvalidParams(format!("tau = {tau} must be > 0")));
    }
    if n_paths == 0 || n_steps == 0 {
        return Err(McError::InvalidParams(
            "n_paths and n_steps must be >= 1".into(),
        ));
    }

    const PATHS_PER_BLOCK: usize = 10_000;
    let mut blocks = vec![PATHS_PER_BLOCK; n_paths / PATHS_PER_BLOCK];
    if !n_paths.is_multiple_of(PATHS_PER_BLOCK) {
        blocks.push(n_paths % PATHS_PER_BLOCK);
    }
    let dt = tau / n_steps as f64;
    let sqrt_dt = dt.sqrt();

    // per block: (sum of products, sum of squared products) per triple
    let partials: Vec<Vec<(f64, f64)>> = blocks
        .par_iter()
        .enumerate()
        .map(|(b, &len)| {
            let mut rng = chunk_rng(seed, b as u64, 2);
            let mut acc = vec![(0.0, 0.0); triples.len()];
            for _ in 0..len {
                let mut v = v0;
                let (mut ie, mut i_int, mut istar) = (0.0, 0.0, 0.0);
                for s in 0..n_steps {
                    let zv: f64 = rng.sample(StandardNormal);
                    let zs: f64 = rng.sample(StandardNormal);
                    let vp = v.max(0.0);
                    let noise = vp.sqrt() * sqrt_dt;
                    let time = s as f64 * dt;
                    ie += (params.k * time).exp() * noise * zv;
                    i_int += noise * zv;
                    istar += noise * zs;
                    v += params.k * (params.theta - vp) * dt + params.sigma_v * noise * zv;
                }
                for (j, t) in triples.iter().enumerate() {
                    let prod =
                        ie.powi(t.m1 as i32) * i_int.powi(t.m2 as i32) * istar.powi(t.m3 as i32);
                    acc[j].0 += prod;
                    acc[j].1 += prod * prod;
                }
            }
            acc
        })
        .collect();

    Ok((0..triples.len())
        .map(|j| {
            let (sum, sumsq) = partials
                .iter()
                .fold((0.0, 0.0), |(s, q), block| (s + block[j].0, q + block[j].1));
            let n = n_paths as f64;
            let mean = sum / n;
            let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
            SampleStat {
                value: mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect())
}

/// Model selector for report building.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    /// Pure-diffusion one-factor model.
    Heston(HestonParams),
    /// Jump-in-return extension.
    Svj(SvjParams),
}

impl ModelSpec {
    fn label(&self) -> &'static str {
        match self {
            ModelSpec::Heston(_) => "1fsv",
            ModelSpec::Svj(_) => "1fsvj",
        }
    }

    fn h(&self) -> f64 {
        match self {
            ModelSpec::Heston(p) => p.h,
            ModelSpec::Svj(p) => p.heston.h,
        }
    }

    fn registry(&self) -> SlotRegistry {
        match self {
            ModelSpec::Heston(p) => SlotRegistry::heston(p),
            ModelSpec::Svj(p) => SlotRegistry::svj(p),
        }
    }

    fn derived_moment(&self, l: u32) -> Result<f64, McError> {
        let poly = match self {
            ModelSpec::Heston(_) => heston::moment_y(l)?,
            ModelSpec::Svj(_) => svj::svj_moment_y(l)?,
        };
        Ok(eval_poly(&poly, &self.registry())?)
    }

    fn derived_cov(&self, l1: u32, l2: u32) -> Result<f64, McError> {
        let poly = match self {
            ModelSpec::Heston(_) => heston::cov_yy(l1, l2)?,
            ModelSpec::Svj(_) => svj::svj_cov_yy(l1, l2)?,
        };
        Ok(eval_poly(&poly, &self.registry())?)
    }
}

/// One comparison row of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    /// Order label, e.g. `E[y^2]` or `cov(y^2,y'^1)`.
    pub order: String,
    /// Value of the derived closed-form formula.
    pub derived: f64,
    /// Sample statistic from the simulated path.
    pub sample: f64,
    /// Batch-means standard error of the sample statistic.
    pub se: f64,
    /// `|derived - sample|`.
    pub abs_diff: f64,
    /// `|diff| / |derived|` in whole percent; blank when the derived value
    /// is within one standard error of zero.
    pub pct_diff: Option<i64>,
}

fn make_row(order: String, derived: f64, stat: SampleStat) -> McRow {
    let abs_diff = (derived - stat.value).abs();
    let pct_diff = if derived.abs() <= stat.std_error {
        None
    } else {
        Some((100.0 * abs_diff / derived.abs()).round() as i64)
    };
    McRow {
        order,
        derived,
        sample: stat.value,
        se: stat.std_error,
        abs_diff,
        pct_diff,
    }
}

/// Derived-vs-sample comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    /// Model label (`1fsv` or `1fsvj`).
    pub model: String,
    /// Number of simulated returns.
    pub n_obs: usize,
    /// Euler substeps per interval.
    pub n_substeps: u32,
    /// Seed the report was generated from.
    pub seed: u64,
    /// Comparison rows, moments first, then covariances.
    pub rows: Vec<McRow>,
}

impl McReport {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "model {}   n_obs {}   substeps {}   seed {}\n",
            self.model, self.n_obs, self.n_substeps, self.seed
        );
        out.push_str(&format!(
            "{:<16} {:>12} {:>12} {:>12} {:>12} {:>9}\n",
            "order", "derived", "sample", "se", "abs_diff", "pct_diff"
        ));
        for r in &self.rows {
            let pct = match r.pct_diff {
                Some(p) => format!("{p}%"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<16} {:>12.6} {:>12.6} {:>12.3e} {:>12.6} {:>9}\n",
                r.order, r.derived, r.sample, r.se, r.abs_diff, pct
            ));
        }
        out
    }

    /// Pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// CSV with columns `order,derived,sample,se,abs_diff,pct_diff`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("row serialization cannot fail");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer cannot fail"))
            .expect("csv output is utf-8")
    }
}

/// Simulate the requested model once and compare sample statistics against
/// the derived formulae: one row per moment order in `orders`, then one per
/// covariance order pair in `cov_orders`.
pub fn build_report(
    model: &ModelSpec,
    orders: &[u32],
    cov_orders: &[(u32, u32)],
    cfg: &SimConfig,
) -> Result<McReport, McError> {
    let returns = match model {
        ModelSpec::Heston(p) => simulate_heston(p, cfg)?,
        ModelSpec::Svj(p) => simulate_svj(p, cfg)?,
    };
    debug_assert_eq!(cfg.h, model.h());

    let max_order = orders.iter().copied().max().unwrap_or(0);
    let moment_stats = sample_moments(&returns, max_order)?;
    let mut rows = Vec::with_capacity(orders.len() + cov_orders.len());
    for &l in orders {
        let stat = if l == 0 {
            SampleStat {
                value: 1.0,
                std_error: 0.0,
            }
        } else {
            moment_stats[(l - 1) as usize]
        };
        rows.push(make_row(
            format!("E[y^{l}]"),
            model.derived_moment(l)?,
            stat,
        ));
    }
    if !cov_orders.is_empty() {
        let cov_stats = sample_cov(&returns, cov_orders)?;
        for (&(l1, l2), stat) in cov_orders.iter().zip(cov_stats) {
            rows.push(make_row(
                format!("cov(y^{l1},y'^{l2})"),
                model.derived_cov(l1, l2)?,
                stat,
            ));
        }
    }

    Ok(McReport {
        model: model.label().to_string(),
        n_obs: cfg.n_obs,
        n_substeps: cfg.n_substeps,
        seed: cfg.seed,
        rows,
    })
}
