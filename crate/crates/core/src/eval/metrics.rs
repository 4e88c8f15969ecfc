//! Average precision, mAP and precision-recall curves over ranked lists.

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

fn check_inputs(ranked: &[u64], relevant: &HashSet<u64>) -> Result<()> {
    if relevant.is_empty() {
        return Err(Error::param("relevant set is empty"));
    }
    let mut seen = HashSet::with_capacity(ranked.len());
    if let Some(dup) = ranked.iter().find(|id| !seen.insert(**id)) {
        return Err(Error::param(format!(
            "row {dup} appears twice in the ranking"
        )));
    }
    Ok(())
}

/// `(1/|relevant|) * sum over relevant hits at rank r of (hits so far / r)`.
/// Relevant items missing from the ranking contribute zero.
pub fn average_precision(ranked: &[u64], relevant: &HashSet<u64>) -> Result<f64> {
    check_inputs(ranked, relevant)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, id) in ranked.iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

pub fn mean_average_precision(per_query: &[f64]) -> Result<f64> {
    if per_query.is_empty() {
        return Err(Error::param("mAP over zero queries"));
    }
    if let Some(bad) = per_query.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::param(format!(
            "average precision {bad} outside [0, 1]"
        )));
    }
    Ok(per_query.iter().sum::<f64>() / per_query.len() as f64)
}

/// One point per rank `r`: recall `hits/|relevant|`, precision `hits/r`.
pub fn pr_curve(ranked: &[u64], relevant: &HashSet<u64>) -> Result<Vec<PrPoint>> {
    check_inputs(ranked, relevant)?;
    let total = relevant.len() as f64;
    let mut hits = 0usize;
    Ok(ranked
        .iter()
        .enumerate()
        .map(|(r, id)| {
            hits += relevant.contains(id) as usize;
            PrPoint {
                recall: hits as f64 / total,
                precision: hits as f64 / (r + 1) as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn set(ids: &[u64]) -> HashSet<u64> {
        ids.iter().copied().collect()
    }

    #[test]
    fn perfect_ranking_scores_one() {
        assert_eq!(
            average_precision(&[3, 1, 7, 9], &set(&[1, 3])).unwrap(),
            1.0
        );
    }

    #[test]
    fn hand_computed_ap() {
        let ap = average_precision(&[5, 8, 6, 2], &set(&[5, 6])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn missing_relevant_counts_zero() {
        assert_eq!(average_precision(&[1, 2], &set(&[1, 99])).unwrap(), 0.5);
        assert_eq!(average_precision(&[], &set(&[1])).unwrap(), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(average_precision(&[1], &set(&[])).is_err());
        assert!(average_precision(&[1, 1], &set(&[1])).is_err());
        assert!(pr_curve(&[1], &set(&[])).is_err());
        assert!(mean_average_precision(&[]).is_err());
        assert!(mean_average_precision(&[1.5]).is_err());
    }

    #[test]
    fn map_examples() {
        assert_eq!(mean_average_precision(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mean_average_precision(&[0.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn map_matches_compensated_sum() {
        let mut rng = stream_rng(4, 0);
        let aps: Vec<f64> = (0..500).map(|_| rng.random()).collect();
        // Kahan summation
        let (mut sum, mut c) = (0.0f64, 0.0f64);
        for &v in &aps {
            let y = v - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        let oracle = sum / 500.0;
        assert!((mean_average_precision(&aps).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn pr_examples() {
        let pts = pr_curve(&[4, 2], &set(&[2, 4])).unwrap();
        assert_eq!(
            pts,
            vec![
                PrPoint {
                    recall: 0.5,
                    precision: 1.0
                },
                PrPoint {
                    recall: 1.0,
                    precision: 1.0
                }
            ]
        );
        let pts = pr_curve(&[0, 4], &set(&[4])).unwrap();
        assert_eq!(pts[0].precision, 0.0);
        assert_eq!(
            pts[1],
            PrPoint {
                recall: 1.0,
                precision: 0.5
            }
        );
    }

    #[test]
    fn random_rankings_match_literal_definitions() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..200 {
            let n = rng.random_range(1..60u64);
            let mut ranked: Vec<u64> = (0..n).collect();
            ranked.shuffle(&mut rng);
            let cut = rng.random_range(0..=n as usize);
            ranked.truncate(cut);
            let relevant: HashSet<u64> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
            if relevant.is_empty() {
                continue;
            }
            // precision@r for every r where ranked[r] is relevant
            let mut terms = Vec::new();
            for r in 0..ranked.len() {
                if relevant.contains(&ranked[r]) {
                    let hits = ranked[..=r].iter().filter(|x| relevant.contains(x)).count();
                    terms.push(hits as f64 / (r + 1) as f64);
                }
            }
            let oracle = terms.iter().sum::<f64>() / relevant.len() as f64;
            let ap = average_precision(&ranked, &relevant).unwrap();
            assert_eq!(ap, oracle);
            assert!((0.0..=1.0).contains(&ap));

            let pr = pr_curve(&ranked, &relevant).unwrap();
            for (r, p) in pr.iter().enumerate() {
                let hits = ranked[..=r].iter().filter(|x| relevant.contains(x)).count();
                assert_eq!(p.recall, hits as f64 / relevant.len() as f64);
                assert_eq!(p.precision, hits as f64 / (r + 1) as f64);
            }
            assert!(pr.windows(2).all(|w| w[0].recall <= w[1].recall));
        }
    }
}
