#![allow(dead_code)]

use rand::distributions::{Distribution, WeightedIndex};
use richness::estimators::breakaway_nof1;
use richness::freqtab::FrequencyCountTable;
use richness::simlab::{replicate_rng, sample_nb_counts, stats, truncate_to_observed};

/// Observed table from one negative-binomial population.
pub fn nb_table(
    true_richness: u64,
    size: u64,
    prob: f64,
    seed: u64,
    index: u64,
) -> FrequencyCountTable {
    let counts =
        sample_nb_counts(true_richness, size, prob, &mut replicate_rng(seed, index)).unwrap();
    truncate_to_observed(&counts).unwrap()
}

pub struct Bootstrap {
    pub delta_se: f64,
    pub sd: f64,
    pub failures: usize,
}

/// Treats the `nof1` fit on `table` as the truth and redraws `round(Ĉ)` taxa
/// over the cells `(f̂0, f̂1, f_2, …)` `draws` times.
pub fn parametric_bootstrap(table: &FrequencyCountTable, draws: usize, seed: u64) -> Bootstrap {
    let est = breakaway_nof1(table).unwrap();
    let mut cells: Vec<(u64, f64)> = vec![(0, est.f0_hat), (1, est.f1_hat.unwrap())];
    cells.extend(
        table
            .entries()
            .iter()
            .filter(|(j, _)| *j >= 2)
            .map(|&(j, f)| (j, f as f64)),
    );
    let taxa = est.c_hat.round() as usize;
    let index = WeightedIndex::new(cells.iter().map(|c| c.1)).unwrap();

    let mut estimates = Vec::with_capacity(draws);
    let mut failures = 0;
    for d in 0..draws {
        let mut rng = replicate_rng(seed, d as u64);
        let mut freq = vec![0u64; cells.len()];
        for _ in 0..taxa {
            freq[index.sample(&mut rng)] += 1;
        }
        let pairs = cells
            .iter()
            .zip(&freq)
            .filter(|((j, _), _)| *j > 0)
            .map(|((j, _), &f)| (*j, f));
        match FrequencyCountTable::from_pairs(pairs).and_then(|t| breakaway_nof1(&t)) {
            Ok(e) => estimates.push(e.c_hat),
            Err(_) => failures += 1,
        }
    }
    Bootstrap {
        delta_se: est.se,
        sd: stats::sample_sd(&estimates).unwrap_or(f64::NAN),
        failures,
    }
}
