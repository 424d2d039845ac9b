//! Benchmark fixtures.

use woet_core::corpus::{corpus, CorpusInstance};
use woet_core::MartingaleSpec;

/// Corpus instances small enough for the brute-force oracle.
pub fn oracle_instances() -> Vec<CorpusInstance> {
    corpus().into_iter().filter(|i| i.spec.mu1.len() * i.spec.mu2.len() <= 4).collect()
}

pub fn instances() -> Vec<CorpusInstance> {
    corpus()
}

pub fn martingale_instances() -> Vec<(&'static str, MartingaleSpec)> {
    corpus()
        .into_iter()
        .filter_map(|i| match i.spec.cost.kind() {
            woet_core::CostKind::Martingale(c) => {
                MartingaleSpec::new(i.spec.mu1.clone(), i.spec.mu2.clone(), i.spec.f1, i.spec.f2, c.clone())
                    .ok()
                    .map(|m| (i.name, m))
            }
            _ => None,
        })
        .collect()
}
