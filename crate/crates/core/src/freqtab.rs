//! Frequency-count tables: `f_j` is the number of taxa observed exactly `j` times.
//!
//! Tables are read either from two-column delimited text (`j<sep>f_j`) or built
//! from a vector of per-taxon abundances.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of ratio points required before any model is fitted.
pub const MIN_RATIO_POINTS: usize = 4;

/// Sparse frequency-count table with strictly increasing `j` and every `f_j >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyCountTable {
    entries: Vec<(u64, u64)>,
}

impl FrequencyCountTable {
    /// Builds a table from `(j, f_j)` pairs in any order. Zero frequencies are
    /// dropped; zero `j` and duplicate `j` are rejected.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut map = BTreeMap::new();
        for (idx, (j, f)) in pairs.into_iter().enumerate() {
            if j == 0 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "count value j must be positive".into(),
                });
            }
            if map.insert(j, f).is_some() {
                return Err(Error::DuplicateCount { line: idx + 1, j });
            }
        }
        let entries: Vec<_> = map.into_iter().filter(|&(_, f)| f > 0).collect();
        if entries.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { entries })
    }

    /// Counts how many taxa have each abundance.
    pub fn from_abundances(abundances: &[u64]) -> Result<Self> {
        if abundances.is_empty() {
            return Err(Error::Empty);
        }
        let mut map = BTreeMap::new();
        for (index, &a) in abundances.iter().enumerate() {
            if a == 0 {
                return Err(Error::InvalidAbundance { index });
            }
            *map.entry(a).or_insert(0u64) += 1;
        }
        Ok(Self {
            entries: map.into_iter().collect(),
        })
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    /// `f_j`, or zero when `j` is absent.
    pub fn get(&self, j: u64) -> u64 {
        self.entries
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn contains(&self, j: u64) -> bool {
        self.get(j) > 0
    }

    /// Observed richness `c = Σ f_j`.
    pub fn observed_richness(&self) -> u64 {
        self.entries.iter().map(|&(_, f)| f).sum()
    }

    /// `Σ_{j >= from} f_j`.
    pub fn sum_from(&self, from: u64) -> u64 {
        self.entries
            .iter()
            .filter(|&&(j, _)| j >= from)
            .map(|&(_, f)| f)
            .sum()
    }

    /// Total number of individuals, `Σ j f_j`.
    pub fn total_individuals(&self) -> u64 {
        self.entries.iter().map(|&(j, f)| j * f).sum()
    }

    pub fn max_count(&self) -> u64 {
        self.entries.last().map(|&(j, _)| j).unwrap_or(0)
    }

    /// Replaces (or inserts, or with `f = 0` removes) the entry for `j`.
    pub fn with_frequency(&self, j: u64, f: u64) -> Result<Self> {
        let pairs = self
            .entries
            .iter()
            .copied()
            .filter(|&(k, _)| k != j)
            .chain(std::iter::once((j, f)));
        Self::from_pairs(pairs)
    }

    /// Multiplies every frequency by `k`.
    pub fn scaled(&self, k: u64) -> Result<Self> {
        Self::from_pairs(self.entries.iter().map(|&(j, f)| (j, f * k)))
    }

    /// Expands back to one abundance per taxon, in ascending order.
    pub fn to_abundances(&self) -> Vec<u64> {
        self.entries
            .iter()
            .flat_map(|&(j, f)| std::iter::repeat_n(j, f as usize))
            .collect()
    }

    /// Tab-separated text that [`parse_frequency_table`] reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(j, f) in &self.entries {
            let _ = writeln!(out, "{j}\t{f}");
        }
        out
    }
}

/// A parsed table together with any non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == '\t' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

fn is_data_line(line: &str) -> bool {
    let trimmed = line.trim();
    !trimmed.is_empty() && !trimmed.starts_with('#')
}

fn parse_count(field: &str, line: usize, what: &str) -> Result<u64> {
    if let Ok(v) = field.parse::<u64>() {
        return Ok(v);
    }
    let message = match field.parse::<f64>() {
        Ok(v) if v < 0.0 => format!("{what} must not be negative (got {field})"),
        Ok(_) => format!("{what} must be an integer (got {field})"),
        Err(_) => format!("{what} is not a number (got {field:?})"),
    };
    Err(Error::Parse { line, message })
}

/// Parses `j<sep>f_j` lines. Separators may be tabs, commas or spaces; lines
/// starting with `#` are comments. A leading header row with no numeric
/// fields is skipped with a warning.
pub fn parse_frequency_table(text: &str) -> Result<Parsed<FrequencyCountTable>> {
    let mut warnings = Vec::new();
    let mut pairs: Vec<(u64, u64)> = Vec::new();
    let mut seen_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if !is_data_line(raw) {
            continue;
        }
        let fields = split_fields(raw);
        if !seen_data && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            warnings.push(format!(
                "line {line_no}: skipped header row {:?}",
                raw.trim()
            ));
            seen_data = true;
            continue;
        }
        seen_data = true;
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let j = parse_count(fields[0], line_no, "count value j")?;
        let f = parse_count(fields[1], line_no, "frequency f_j")?;
        if j == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "count value j must be positive".into(),
            });
        }
        if pairs.iter().any(|&(k, _)| k == j) {
            return Err(Error::DuplicateCount { line: line_no, j });
        }
        if f == 0 {
            warnings.push(format!(
                "line {line_no}: dropped zero frequency for j = {j}"
            ));
        }
        pairs.push((j, f));
    }

    let table = FrequencyCountTable::from_pairs(pairs)?;
    Ok(Parsed {
        value: table,
        warnings,
    })
}

/// Parses one positive integer abundance per line (`#` comments allowed).
pub fn parse_abundances(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if !is_data_line(raw) {
            continue;
        }
        let fields = split_fields(raw);
        if fields.len() != 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected a single abundance, found {} fields", fields.len()),
            });
        }
        let a = parse_count(fields[0], line_no, "abundance")?;
        if a == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "abundance must be positive".into(),
            });
        }
        out.push(a);
    }
    if out.is_empty() {
        return Err(Error::Empty);
    }
    Ok(out)
}

/// Largest `J` such that every `j` in `[j_start, J + 1]` has `f_j >= 1`.
///
/// Fails with [`Error::InsufficientData`] when the contiguous run yields fewer
/// than [`MIN_RATIO_POINTS`] ratios.
pub fn tail_cutoff(table: &FrequencyCountTable, j_start: u64) -> Result<u64> {
    if !table.contains(j_start) {
        return Err(Error::MissingCount(j_start));
    }
    let mut last = j_start;
    while table.contains(last + 1) {
        last += 1;
    }
    // `last` is J + 1; the ratio points are j_start..=J.
    let available = (last - j_start) as usize;
    if available < MIN_RATIO_POINTS {
        return Err(Error::InsufficientData {
            available,
            required: MIN_RATIO_POINTS,
        });
    }
    Ok(last - 1)
}
