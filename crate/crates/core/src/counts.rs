//! Unigram and bigram count tables backing the PMI computations.
//!
//! Unigram file: TSV `token<TAB>count`, optional first line `#total<TAB>N`.
//! Bigram file: TSV `token1 token2<TAB>count` with a single space inside the
//! first field. Lines starting with `#` are otherwise treated as comments.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CountsError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: non-positive count {count}")]
    NonPositiveCount {
        path: PathBuf,
        line: usize,
        count: i64,
    },
    #[error("total token count {total} is smaller than the largest unigram count {max}")]
    TotalTooSmall { total: u64, max: u64 },
}

/// Corpus occurrence counts. Zero-count entries are simply absent.
#[derive(Debug, Clone, Default)]
pub struct NGramCounts {
    unigrams: HashMap<String, u64>,
    bigrams: HashMap<(String, String), u64>,
    total_tokens: u64,
}

fn parse_count(
    raw: &str,
    path: &Path,
    line_no: usize,
) -> Result<u64, CountsError> {
    let value: i64 = raw.trim().parse().map_err(|_| CountsError::Malformed {
        path: path.to_path_buf(),
        line: line_no,
        message: format!("invalid count `{raw}`"),
    })?;
    if value <= 0 {
        return Err(CountsError::NonPositiveCount {
            path: path.to_path_buf(),
            line: line_no,
            count: value,
        });
    }
    Ok(value as u64)
}

impl NGramCounts {
    pub fn load(
        unigram_path: impl AsRef<Path>,
        bigram_path: impl AsRef<Path>,
    ) -> Result<NGramCounts, CountsError> {
        let unigram_path = unigram_path.as_ref();
        let bigram_path = bigram_path.as_ref();

        let mut unigrams: HashMap<String, u64> = HashMap::new();
        let mut declared_total: Option<u64> = None;

        for (line_no, line) in read_lines(unigram_path)? {
            let line = line.map_err(|source| CountsError::Io {
                path: unigram_path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#total\t") {
                if line_no == 1 {
                    declared_total = Some(parse_count(rest, unigram_path, line_no)?);
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (token, count) =
                line.split_once('\t')
                    .ok_or_else(|| CountsError::Malformed {
                        path: unigram_path.to_path_buf(),
                        line: line_no,
                        message: "expected `token<TAB>count`".into(),
                    })?;
            let count = parse_count(count, unigram_path, line_no)?;
            *unigrams.entry(token.to_string()).or_insert(0) += count;
        }

        let mut bigrams: HashMap<(String, String), u64> = HashMap::new();
        for (line_no, line) in read_lines(bigram_path)? {
            let line = line.map_err(|source| CountsError::Io {
                path: bigram_path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (pair, count) =
                line.split_once('\t')
                    .ok_or_else(|| CountsError::Malformed {
                        path: bigram_path.to_path_buf(),
                        line: line_no,
                        message: "expected `token1 token2<TAB>count`".into(),
                    })?;
            let (first, second) =
                pair.split_once(' ')
                    .ok_or_else(|| CountsError::Malformed {
                        path: bigram_path.to_path_buf(),
                        line: line_no,
                        message: "first field must hold two space-separated tokens".into(),
                    })?;
            if first.is_empty() || second.is_empty() || second.contains(' ') {
                return Err(CountsError::Malformed {
                    path: bigram_path.to_path_buf(),
                    line: line_no,
                    message: "first field must hold exactly two tokens".into(),
                });
            }
            let count = parse_count(count, bigram_path, line_no)?;
            *bigrams
                .entry((first.to_string(), second.to_string()))
                .or_insert(0) += count;
        }

        let total_tokens = match declared_total {
            Some(total) => total,
            None => unigrams.values().sum(),
        };
        Self::from_parts(unigrams, bigrams, total_tokens)
    }

    /// Assemble counts in memory, enforcing the same invariants as `load`.
    pub fn from_parts(
        unigrams: HashMap<String, u64>,
        bigrams: HashMap<(String, String), u64>,
        total_tokens: u64,
    ) -> Result<NGramCounts, CountsError> {
        let max = unigrams.values().copied().max().unwrap_or(0);
        if total_tokens < max {
            return Err(CountsError::TotalTooSmall {
                total: total_tokens,
                max,
            });
        }
        Ok(NGramCounts {
            unigrams,
            bigrams,
            total_tokens,
        })
    }

    pub fn unigram(&self, token: &str) -> Option<u64> {
        self.unigrams.get(token).copied()
    }

    /// Joint count summed over both token orders; `None` when neither order
    /// was observed.
    pub fn bigram_both_orders(&self, a: &str, b: &str) -> Option<u64> {
        let forward = self.bigrams.get(&(a.to_string(), b.to_string()));
        let backward = self.bigrams.get(&(b.to_string(), a.to_string()));
        match (forward, backward) {
            (None, None) => None,
            (f, r) => Some(f.copied().unwrap_or(0) + r.copied().unwrap_or(0)),
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn unigram_count(&self) -> usize {
        self.unigrams.len()
    }

    pub fn bigram_count(&self) -> usize {
        self.bigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unigrams.is_empty() && self.bigrams.is_empty()
    }
}

fn read_lines(
    path: &Path,
) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>, CountsError> {
    let file = File::open(path).map_err(|source| CountsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}
