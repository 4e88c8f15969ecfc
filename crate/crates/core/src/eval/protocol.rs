//! End-to-end retrieval evaluation: split, build, encode, rank, score.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;

use crate::baseline::build_lsh;
use crate::codes::{BinaryCode, CodeDatabase, Metric};
use crate::error::{Error, Result};
use crate::eval::ground_truth::{exact_knn, GroundTruth};
use crate::eval::independence::bit_independence_test;
use crate::eval::metrics::{average_precision, mean_average_precision};
use crate::eval::occupancy::occupancy_stats;
use crate::eval::report::{EvalReport, RankedPrPoint, Timings};
use crate::hasher::{bits_for_psi, build_hasher};
use crate::io::RunConfig;
use crate::matrix::Matrix;
use crate::model::{AnyModel, Encoder, ModelKind};
use crate::rng::{stream_rng, SPLIT_STREAM};
use crate::scalar::Scalar;

/// Independence tests are quadratic in `L`; longer codes skip them.
pub const MAX_INDEPENDENCE_BITS: usize = 1024;

/// Points on the aggregated precision-recall curve, besides the first
/// `ground_truth_k` ranks.
const PR_SAMPLES: usize = 200;

#[derive(Debug, Clone)]
pub struct Split<T> {
    pub database: Matrix<T>,
    pub database_rows: Vec<usize>,
    pub queries: Matrix<T>,
    pub query_rows: Vec<usize>,
}

/// Draws `query_count` query rows and then `train_size` disjoint database
/// rows (every remaining row when `None`) from a seeded permutation.
pub fn split_dataset<T: Scalar>(
    data: &Matrix<T>,
    query_count: usize,
    train_size: Option<usize>,
    seed: u64,
) -> Result<Split<T>> {
    let n = data.rows();
    let train = train_size.unwrap_or(n.saturating_sub(query_count));
    if query_count == 0 || train == 0 || query_count + train > n {
        return Err(Error::param(format!(
            "cannot draw {query_count} queries and {train} database rows from {n} rows"
        )));
    }
    let mut rng = stream_rng(seed, SPLIT_STREAM);
    let picks = index::sample(&mut rng, n, query_count + train).into_vec();
    let (query_rows, database_rows) = picks.split_at(query_count);
    Ok(Split {
        database: data.select_rows(database_rows),
        database_rows: database_rows.to_vec(),
        queries: data.select_rows(query_rows),
        query_rows: query_rows.to_vec(),
    })
}

pub fn build_model<T: Scalar>(cfg: &RunConfig, train: &Matrix<T>) -> Result<AnyModel<T>> {
    Ok(match cfg.model_kind {
        ModelKind::Vdeh => build_hasher(train, cfg.psi, cfg.code_bits, cfg.seed)?.into(),
        ModelKind::Lsh => build_lsh(train.cols(), cfg.code_bits, cfg.seed)?.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalScores {
    pub average_precisions: Vec<f64>,
    pub map: f64,
    pub pr_curve: Vec<RankedPrPoint>,
}

/// Ranks the whole database for every query and scores the rankings
/// against the ground truth. Database row ids must be the row indices the
/// ground truth refers to.
pub fn score_retrieval(
    db: &CodeDatabase,
    queries: &[BinaryCode],
    gt: &GroundTruth,
    metric: Metric,
) -> Result<RetrievalScores> {
    if queries.len() != gt.len() {
        return Err(Error::Shape {
            expected: gt.len(),
            found: queries.len(),
        });
    }
    if db.is_empty() {
        return Err(Error::param(
            "cannot score retrieval over an empty database",
        ));
    }
    let n = db.len();
    let cutoffs = pr_cutoffs(n, gt.k);

    let per_query: Vec<(f64, Vec<(usize, usize)>)> = queries
        .par_iter()
        .zip(&gt.neighbors)
        .map(|(q, truth)| {
            let ranked: Vec<u64> = db
                .knn_query(q, n, metric)?
                .iter()
                .map(|nb| nb.row_id)
                .collect();
            let relevant: HashSet<u64> = truth.iter().copied().collect();
            let ap = average_precision(&ranked, &relevant)?;
            // hits within each cutoff
            let mut hits = Vec::with_capacity(cutoffs.len());
            let mut found = 0;
            let mut next = 0;
            for (r, id) in ranked.iter().enumerate() {
                found += relevant.contains(id) as usize;
                while next < cutoffs.len() && cutoffs[next] == r + 1 {
                    hits.push((cutoffs[next], found));
                    next += 1;
                }
            }
            Ok((ap, hits))
        })
        .collect::<Result<_>>()?;

    let average_precisions: Vec<f64> = per_query.iter().map(|(ap, _)| *ap).collect();
    let map = mean_average_precision(&average_precisions)?;
    let q = queries.len() as f64;
    let k = gt.k as f64;
    let pr_curve = cutoffs
        .iter()
        .enumerate()
        .map(|(i, &cutoff)| {
            let hits: usize = per_query.iter().map(|(_, h)| h[i].1).sum();
            RankedPrPoint {
                cutoff,
                recall: hits as f64 / (k * q),
                precision: hits as f64 / (cutoff as f64 * q),
            }
        })
        .collect();
    Ok(RetrievalScores {
        average_precisions,
        map,
        pr_curve,
    })
}

fn pr_cutoffs(n: usize, k: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (1..=k.min(n)).collect();
    c.extend((1..=PR_SAMPLES).map(|i| (i * n).div_ceil(PR_SAMPLES)));
    c.sort_unstable();
    c.dedup();
    c
}

/// Splits `data`, builds the configured model on the database rows, encodes
/// database and queries, and scores full rankings against exact Euclidean
/// neighbours.
pub fn run_protocol<T: Scalar>(data: &Matrix<T>, cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let split = split_dataset(data, cfg.query_count, cfg.train_size, cfg.seed)?;
    let gt = exact_knn(&split.database, &split.queries, cfg.ground_truth_k)?;
    evaluate_split(&split, &gt, cfg)
}

/// The model-dependent part of [`run_protocol`], reusing a precomputed
/// ground truth for `split`.
pub fn evaluate_split<T: Scalar>(
    split: &Split<T>,
    gt: &GroundTruth,
    cfg: &RunConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    let start = Instant::now();
    let model = build_model(cfg, &split.database)?;
    let build = start.elapsed();
    let mut report = evaluate_model(&model, split, gt, cfg)?;
    report.timings.build = build;
    Ok(report)
}

/// Scores an already built `model` on `split`. `cfg` supplies the metric
/// and is echoed in the report; the build time is reported as zero.
pub fn evaluate_model<T: Scalar>(
    model: &AnyModel<T>,
    split: &Split<T>,
    gt: &GroundTruth,
    cfg: &RunConfig,
) -> Result<EvalReport> {
    if gt.len() != split.queries.rows() {
        return Err(Error::Shape {
            expected: split.queries.rows(),
            found: gt.len(),
        });
    }
    let start = Instant::now();
    let db = model.encode_dataset(&split.database)?;
    let query_codes: Vec<BinaryCode> = model.encode_dataset(&split.queries)?.iter().collect();
    let encode = start.elapsed();

    let start = Instant::now();
    let scores = score_retrieval(&db, &query_codes, gt, cfg.metric)?;
    let query = start.elapsed();

    let occupancy = match model {
        AnyModel::Vdeh(m) => Some(occupancy_stats(m, &split.database)?),
        AnyModel::Lsh(_) => None,
    };
    let independence = if db.layout().code_bits() <= MAX_INDEPENDENCE_BITS && db.len() >= 2 {
        Some(bit_independence_test(&db)?)
    } else {
        None
    };

    Ok(EvalReport {
        method: method_label(model.kind()).to_string(),
        config: cfg.clone(),
        database_size: db.len(),
        query_count: query_codes.len(),
        ground_truth_k: gt.k,
        map: scores.map,
        pr_curve: scores.pr_curve,
        occupancy,
        independence,
        timings: Timings {
            build: Default::default(),
            encode,
            query,
        },
    })
}

/// Seeded sample of `size` rows without replacement, in sampled order, plus
/// their source indices. `None` or a size covering every row returns all
/// rows in order.
pub fn sample_training_set<T: Scalar>(
    data: &Matrix<T>,
    size: Option<usize>,
    seed: u64,
) -> Result<(Matrix<T>, Vec<usize>)> {
    let n = data.rows();
    match size {
        Some(0) => Err(Error::param("train size must be at least 1")),
        Some(m) if m > n => Err(Error::InsufficientData {
            needed: m,
            available: n,
        }),
        Some(m) if m < n => {
            let mut rng = stream_rng(seed, SPLIT_STREAM);
            let rows = index::sample(&mut rng, n, m).into_vec();
            Ok((data.select_rows(&rows), rows))
        }
        _ => Ok((data.clone(), (0..n).collect())),
    }
}

pub fn method_label(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Vdeh => "vdeh",
        ModelKind::Lsh => "lsh (sign random projection stand-in)",
    }
}

/// `psi` values from 4 to 256 whose `log2` divides `code_bits`.
pub fn psi_grid(code_bits: usize) -> Vec<usize> {
    (2..=8)
        .map(|w| 1usize << w)
        .filter(|&psi| bits_for_psi(psi).is_ok_and(|w| code_bits.is_multiple_of(w as usize)))
        .collect()
}

/// Runs the protocol once per `psi` in [`psi_grid`] on one shared split.
pub fn grid_search_psi<T: Scalar>(data: &Matrix<T>, cfg: &RunConfig) -> Result<Vec<EvalReport>> {
    let split = split_dataset(data, cfg.query_count, cfg.train_size, cfg.seed)?;
    let gt = exact_knn(&split.database, &split.queries, cfg.ground_truth_k)?;
    psi_grid(cfg.code_bits)
        .into_iter()
        .map(|psi| evaluate_split(&split, &gt, &RunConfig { psi, ..cfg.clone() }))
        .collect()
}
