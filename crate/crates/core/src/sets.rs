//! Set-valued predictions and their CSV form.
//!
//! One row per test sample: `sample`, optional `score_<class>` columns, then
//! `set` holding the included class names joined by `;`, or the literal
//! `OUTLIER` when the set is empty.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const OUTLIER_TOKEN: &str = "OUTLIER";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSets {
    class_names: Vec<String>,
    sets: Vec<Vec<usize>>,
    scores: Option<Vec<Vec<f64>>>,
}

impl PredictionSets {
    /// Sets are stored sorted and deduplicated.
    pub fn new(class_names: Vec<String>, mut sets: Vec<Vec<usize>>) -> Result<Self> {
        let k = class_names.len();
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
            if s.iter().any(|&c| c >= k) {
                return Err(Error::InvalidInput(format!("set member outside {k} classes")));
            }
        }
        Ok(Self {
            class_names,
            sets,
            scores: None,
        })
    }

    /// Attach one score per (sample, class).
    pub fn with_scores(mut self, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != self.sets.len() || scores.iter().any(|r| r.len() != self.class_names.len()) {
            return Err(Error::LengthMismatch("score table does not match sets".into()));
        }
        self.scores = Some(scores);
        Ok(self)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.sets[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.sets.iter().map(Vec::as_slice)
    }

    pub fn contains(&self, i: usize, k: usize) -> bool {
        self.sets[i].binary_search(&k).is_ok()
    }

    /// Empty set: the sample is flagged as belonging to no training class.
    pub fn is_outlier(&self, i: usize) -> bool {
        self.sets[i].is_empty()
    }

    pub fn scores(&self) -> Option<&[Vec<f64>]> {
        self.scores.as_deref()
    }

    pub fn mean_size(&self) -> f64 {
        if self.sets.is_empty() {
            return 0.0;
        }
        self.sets.iter().map(Vec::len).sum::<usize>() as f64 / self.sets.len() as f64
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("sample");
        if self.scores.is_some() {
            for name in &self.class_names {
                let _ = write!(out, ",score_{name}");
            }
        }
        out.push_str(",set\n");
        for (i, set) in self.sets.iter().enumerate() {
            let _ = write!(out, "{i}");
            if let Some(scores) = &self.scores {
                for v in &scores[i] {
                    let _ = write!(out, ",{v}");
                }
            }
            let rendered = if set.is_empty() {
                OUTLIER_TOKEN.to_string()
            } else {
                set.iter()
                    .map(|&k| self.class_names[k].as_str())
                    .collect::<Vec<_>>()
                    .join(";")
            };
            let _ = writeln!(out, ",{rendered}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Parse the CSV form. Class names come from the score columns when
    /// present, otherwise `class_names` must be supplied.
    pub fn from_csv_str(s: &str, class_names: Option<&[String]>) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: "<prediction sets>".into(),
            line,
            message,
        };
        let mut lines = s.lines();
        let header: Vec<&str> = lines.next().ok_or(Error::NoData)?.split(',').collect();
        if header.first() != Some(&"sample") || header.last() != Some(&"set") {
            return Err(parse_err(1, "expected header sample,…,set".into()));
        }
        let score_names: Vec<String> = header[1..header.len() - 1]
            .iter()
            .map(|h| {
                h.strip_prefix("score_")
                    .map(str::to_string)
                    .ok_or_else(|| parse_err(1, format!("bad column {h}")))
            })
            .collect::<Result<_>>()?;
        let names: Vec<String> = match (score_names.is_empty(), class_names) {
            (false, _) => score_names.clone(),
            (true, Some(n)) => n.to_vec(),
            (true, None) => return Err(Error::Config("class names required for score-less sets".into())),
        };
        let mut sets = Vec::new();
        let mut scores = Vec::new();
        for (off, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != header.len() {
                return Err(parse_err(off + 2, "wrong column count".into()));
            }
            let row: Vec<f64> = cells[1..cells.len() - 1]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|e| parse_err(off + 2, e.to_string())))
                .collect::<Result<_>>()?;
            scores.push(row);
            let last = cells[cells.len() - 1];
            let set = if last == OUTLIER_TOKEN {
                Vec::new()
            } else {
                last.split(';')
                    .map(|n| {
                        names
                            .iter()
                            .position(|c| c == n)
                            .ok_or_else(|| parse_err(off + 2, format!("unknown class {n}")))
                    })
                    .collect::<Result<_>>()?
            };
            sets.push(set);
        }
        let out = Self::new(names, sets)?;
        if score_names.is_empty() {
            Ok(out)
        } else {
            out.with_scores(scores)
        }
    }
}
