//! Signed connectivity of the 1D "2-4" bump network: each neuron excites
//! neighbours within `excit_reach` and inhibits those in the band
//! `inhib_reach_lo..=inhib_reach_hi`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Connections past either end of the index range are absent.
    #[default]
    Linear,
    /// Indices wrap; distance is measured around the ring.
    Ring,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Boundary::Linear),
            "ring" => Ok(Boundary::Ring),
            other => Err(Error::parameter(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySpec {
    pub n: usize,
    pub excit_reach: usize,
    pub inhib_reach_lo: usize,
    pub inhib_reach_hi: usize,
    /// Excitatory weight (µS peak conductance).
    pub w_excit: f64,
    /// Inhibitory weight magnitude (µS peak conductance).
    pub w_inhib: f64,
    pub boundary: Boundary,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            n: 100,
            excit_reach: 2,
            inhib_reach_lo: 3,
            inhib_reach_hi: 6,
            w_excit: 0.08,
            w_inhib: 0.08,
            boundary: Boundary::Linear,
        }
    }
}

impl TopologySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n <= 2 * self.inhib_reach_hi {
            return Err(Error::parameter(format!(
                "n = {} must exceed 2·inhib_reach_hi = {}",
                self.n,
                2 * self.inhib_reach_hi
            )));
        }
        if !(0 < self.excit_reach
            && self.excit_reach < self.inhib_reach_lo
            && self.inhib_reach_lo <= self.inhib_reach_hi)
        {
            return Err(Error::parameter(
                "require 0 < excit_reach < inhib_reach_lo <= inhib_reach_hi",
            ));
        }
        for (name, w) in [("w_excit", self.w_excit), ("w_inhib", self.w_inhib)] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::parameter(format!(
                    "{name} must be a non-negative finite weight"
                )));
            }
        }
        Ok(())
    }

    /// Distance between two indices under the configured boundary.
    pub fn distance(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j);
        match self.boundary {
            Boundary::Linear => d,
            Boundary::Ring => d.min(self.n - d),
        }
    }

    /// Signed weight for a connection at distance `d`.
    pub fn weight_at(&self, d: usize) -> f64 {
        if d >= 1 && d <= self.excit_reach {
            self.w_excit
        } else if d >= self.inhib_reach_lo && d <= self.inhib_reach_hi {
            -self.w_inhib
        } else {
            0.0
        }
    }
}

/// Dense signed weight matrix; row = presynaptic, column = postsynaptic.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix {
    n: usize,
    entries: Vec<f64>,
}

/// Build the bump-network matrix for `spec`.
pub fn build_bump_matrix(spec: &TopologySpec) -> Result<ConnectivityMatrix> {
    spec.validate()?;
    let n = spec.n;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = spec.weight_at(spec.distance(i, j));
        }
    }
    Ok(ConnectivityMatrix { n, entries })
}

impl ConnectivityMatrix {
    pub fn from_dense(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::parameter(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, pre: usize, post: usize) -> f64 {
        self.entries[pre * self.n + post]
    }

    pub fn row(&self, pre: usize) -> &[f64] {
        &self.entries[pre * self.n..(pre + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Nonzero entries of row `i`, ascending by target index.
    pub fn out_neighbors(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            });
        }
        Ok(self
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(j, w)| (j, *w))
            .collect())
    }

    /// Sparse view used by the simulation loop.
    pub fn fanout(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n)
            .map(|i| self.out_neighbors(i).expect("row index in range"))
            .collect()
    }

    pub fn count_positive(&self) -> usize {
        self.entries.iter().filter(|w| **w > 0.0).count()
    }

    pub fn count_negative(&self) -> usize {
        self.entries.iter().filter(|w| **w < 0.0).count()
    }

    /// Write as CSV: one line per presynaptic row, no header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        for i in 0..self.n {
            wtr.write_record(self.row(i).iter().map(|w| w.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .from_reader(input);
        let mut entries = Vec::new();
        let mut rows = 0usize;
        let mut width = None;
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            match width {
                None => width = Some(rec.len()),
                Some(w) if w != rec.len() => {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected {w} columns, found {}", rec.len()),
                    })
                }
                _ => {}
            }
            for field in rec.iter() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("not a number: '{field}'"),
                })?;
                entries.push(v);
            }
            rows += 1;
        }
        if width.unwrap_or(0) != rows {
            return Err(Error::Parse {
                line: rows as u64,
                message: format!("matrix is not square ({rows} rows)"),
            });
        }
        Self::from_dense(rows, entries)
    }
}
