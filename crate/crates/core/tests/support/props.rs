//! Property checks run both by the core test suite and by the acceptance
//! report. Each returns `Err` with the shrunk counterexample on failure.

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use coggpt::eval_metrics::{cohen_kappa, majority_rating, spearman_rho, to_polarity, Polarity};
use coggpt::llm_provider::pseudo_embed;
use coggpt::memory::{commit_knowledge, cosine, LongTermMemory};
use coggpt::prompt_kit::KnowledgeDraft;
use coggpt::ExactRatio;

pub const CASES: u32 = 1000;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn report<T: std::fmt::Debug>(result: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    result.map_err(|e| e.to_string())
}

fn paired_ratings() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (1usize..40).prop_flat_map(|n| (vec(1u8..=5, n), vec(1u8..=5, n)))
}

fn kappa(a: &[u8], b: &[u8]) -> Option<ExactRatio> {
    cohen_kappa::<ExactRatio, u8>(a, b).ok()
}

pub fn kappa_symmetry() -> Result<(), String> {
    report(runner().run(&paired_ratings(), |(a, b)| {
        prop_assert_eq!(kappa(&a, &b), kappa(&b, &a));
        Ok(())
    }))
}

pub fn kappa_relabeling() -> Result<(), String> {
    let perm = Just(vec![1u8, 2, 3, 4, 5]).prop_shuffle();
    report(runner().run(&(paired_ratings(), perm), |((a, b), perm)| {
        let relabel = |v: &[u8]| v.iter().map(|&r| perm[usize::from(r) - 1]).collect::<Vec<_>>();
        prop_assert_eq!(kappa(&a, &b), kappa(&relabel(&a), &relabel(&b)));
        Ok(())
    }))
}

/// Strictly increasing maps, chosen to bend the scale in different ways.
fn monotone(which: u8, x: f64) -> f64 {
    match which {
        0 => 3.0 * x + 7.0,
        1 => x * x * x + x,
        2 => (x / 10.0).exp(),
        _ => x.atan(),
    }
}

pub fn spearman_monotone_invariance() -> Result<(), String> {
    let data = (2usize..30).prop_flat_map(|n| (vec(-20i32..20, n), vec(-20i32..20, n), 0u8..4, 0u8..4));
    report(runner().run(&data, |(a, b, f, g)| {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let fa: Vec<f64> = a.iter().map(|&x| monotone(f, x)).collect();
        let gb: Vec<f64> = b.iter().map(|&x| monotone(g, x)).collect();
        match (spearman_rho::<f64>(&a, &b), spearman_rho::<f64>(&fa, &gb)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{x:?} vs {y:?}"),
        }
        Ok(())
    }))
}

pub fn majority_is_an_input() -> Result<(), String> {
    report(runner().run(&vec(1u8..=5, 1..16), |ratings| {
        let m = majority_rating(&ratings).unwrap();
        prop_assert!(ratings.contains(&m));
        let count = |r: u8| ratings.iter().filter(|&&x| x == r).count();
        prop_assert!((1..=5).all(|r| count(r) <= count(m)));
        Ok(())
    }))
}

pub fn polarity_is_total() -> Result<(), String> {
    report(runner().run(&any::<u8>(), |r| {
        let expected = match r {
            1..=2 => Some(Polarity::Negative),
            3 => Some(Polarity::Neutral),
            4..=5 => Some(Polarity::Positive),
            _ => None,
        };
        prop_assert_eq!(to_polarity(r).ok(), expected);
        Ok(())
    }))
}

fn drafts(scores: &[u8]) -> Vec<KnowledgeDraft> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &score)| KnowledgeDraft {
            thoughts: String::new(),
            knowledge: format!("k{i}"),
            score,
        })
        .collect()
}

pub fn forgetting_drops_lowest_forty_percent() -> Result<(), String> {
    let scores = (0usize..=200).prop_flat_map(|n| vec(1u8..=5, n));
    report(runner().run(&scores, |scores| {
        let n = scores.len();
        let commit = commit_knowledge(drafts(&scores));
        prop_assert_eq!(commit.dropped.len(), n * 4 / 10);
        prop_assert_eq!(commit.retained.len() + commit.dropped.len(), n);
        if let (Some(hi), Some(lo)) = (
            commit.dropped.iter().map(|d| d.score).max(),
            commit.retained.iter().map(|d| d.score).min(),
        ) {
            prop_assert!(hi <= lo, "dropped {hi} above retained {lo}");
        }
        // Both halves keep their relative order.
        let index = |d: &KnowledgeDraft| d.knowledge[1..].parse::<usize>().unwrap();
        prop_assert!(commit.retained.windows(2).all(|w| index(&w[0]) < index(&w[1])));
        prop_assert!(commit.dropped.windows(2).all(|w| index(&w[0]) < index(&w[1])));
        Ok(())
    }))
}

pub fn recall_matches_brute_force() -> Result<(), String> {
    const DIM: usize = 8;
    let data = (vec(0u16..300, 0..=500), 0u16..300, 0usize..12);
    report(runner().run(&data, |(ids, query, k)| {
        let mut ltm = LongTermMemory::<f64>::new(DIM);
        let items: Vec<KnowledgeDraft> = ids
            .iter()
            .map(|id| KnowledgeDraft {
                thoughts: String::new(),
                knowledge: format!("statement {id}"),
                score: 3,
            })
            .collect();
        ltm.store(&items, 1, &[], |t| Ok(pseudo_embed(t, DIM, 0))).unwrap();
        let q = pseudo_embed(&format!("statement {query}"), DIM, 0);

        let mut scan: Vec<(usize, f64)> = ltm
            .items()
            .iter()
            .enumerate()
            .map(|(i, item)| (i, cosine(q.values(), item.embedding.values())))
            .collect();
        scan.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        scan.truncate(k);

        let got: Vec<(usize, f64)> = ltm.recall(&q, k).hits.iter().map(|h| (h.index, h.similarity)).collect();
        prop_assert_eq!(got, scan);
        Ok(())
    }))
}

pub type Property = fn() -> Result<(), String>;

/// Every criterion-level property with its label.
pub fn all() -> Vec<(&'static str, Property)> {
    vec![
        ("kappa symmetry", kappa_symmetry as Property),
        ("kappa relabeling invariance", kappa_relabeling),
        ("spearman monotone invariance", spearman_monotone_invariance),
        ("majority rating is an input", majority_is_an_input),
        ("polarity mapping is total", polarity_is_total),
        ("forgetting drops floor(0.4n) lowest", forgetting_drops_lowest_forty_percent),
        ("recall equals brute-force scan", recall_matches_brute_force),
    ]
}
