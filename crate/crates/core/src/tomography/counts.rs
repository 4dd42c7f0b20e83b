//! Photon-count simulation with a simple detector model.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use super::{CountTable, MeasurementBasis, N_PATHS};
use crate::error::{Error, Result};

/// Detector efficiency and background. Dark counts are spread uniformly
/// over all detector cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
    /// Photon rate at which the source is run, per second. Only used to
    /// turn a number of trials into an acquisition time.
    pub max_rate: f64,
    /// Fraction of the acquisition time during which a detector is open.
    pub gate_window: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            efficiency: 0.70,
            dark_rate: 50.0,
            max_rate: 20_000.0,
            gate_window: 1.0,
        }
    }
}

impl DetectorModel {
    /// Lossless detector without background.
    pub fn ideal() -> Self {
        DetectorModel {
            efficiency: 1.0,
            dark_rate: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Domain(format!(
                "efficiency {} outside [0, 1]",
                self.efficiency
            )));
        }
        if !(self.dark_rate >= 0.0 && self.gate_window >= 0.0) {
            return Err(Error::Domain(
                "dark rate and gate window must be nonnegative".into(),
            ));
        }
        if !(self.max_rate > 0.0) {
            return Err(Error::Domain(format!(
                "max rate {} must be positive",
                self.max_rate
            )));
        }
        Ok(())
    }

    /// Expected dark counts in one detector cell for a run of `trials` photons.
    pub fn dark_mean(&self, trials: u64) -> f64 {
        self.dark_rate * self.gate_window * trials as f64 / self.max_rate
    }
}

/// Simulated counts for every path and analyzer setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsRecord {
    /// `counts[path][basis]`, basis order `H, V, D, R`.
    pub counts: [[u64; 4]; N_PATHS],
    /// Photons sent per analyzer setting.
    pub trials: u64,
    pub seed: u64,
    pub model: DetectorModel,
}

impl CountsRecord {
    pub fn as_table(&self) -> CountTable {
        self.counts.map(|row| row.map(|c| c as f64))
    }

    /// Counts with the expected dark background removed, clamped at zero.
    pub fn signal_table(&self) -> CountTable {
        let bg = self.model.dark_mean(self.trials);
        self.counts.map(|row| row.map(|c| (c as f64 - bg).max(0.0)))
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        writeln!(s, "# trials {}", self.trials).unwrap();
        writeln!(s, "# seed {}", self.seed).unwrap();
        writeln!(s, "# efficiency {:.6}", m.efficiency).unwrap();
        writeln!(s, "# dark_rate {:.6}", m.dark_rate).unwrap();
        writeln!(s, "# max_rate {:.6}", m.max_rate).unwrap();
        writeln!(s, "# gate_window {:.6}", m.gate_window).unwrap();
        writeln!(s, "path basis count").unwrap();
        for (path, row) in self.counts.iter().enumerate() {
            for (b, c) in MeasurementBasis::ALL.iter().zip(row) {
                writeln!(s, "{path} {b} {c}").unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Domain(format!("counts table: {what}"));
        let mut header = std::collections::HashMap::new();
        let mut counts = [[None; 4]; N_PATHS];
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if let (Some(k), Some(v)) = (it.next(), it.next()) {
                    header.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if line.starts_with("path") {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let [p, b, c] = f.as_slice() else {
                return Err(bad(&format!("malformed line {line:?}")));
            };
            let p: usize = p.parse().map_err(|_| bad("bad path"))?;
            let b = MeasurementBasis::ALL
                .iter()
                .position(|x| x.to_string() == *b)
                .ok_or_else(|| bad("bad basis"))?;
            let c: u64 = c.parse().map_err(|_| bad("bad count"))?;
            *counts
                .get_mut(p)
                .ok_or_else(|| bad("path out of range"))?
                .get_mut(b)
                .expect("four bases") = Some(c);
        }
        let num = |k: &str| -> Result<f64> {
            header
                .get(k)
                .ok_or_else(|| bad(&format!("missing {k}")))?
                .parse()
                .map_err(|_| bad(&format!("bad {k}")))
        };
        let int = |k: &str| -> Result<u64> {
            header
                .get(k)
                .ok_or_else(|| bad(&format!("missing {k}")))?
                .parse()
                .map_err(|_| bad(&format!("bad {k}")))
        };
        let mut out = [[0u64; 4]; N_PATHS];
        for (row, parsed) in out.iter_mut().zip(counts) {
            for (cell, value) in row.iter_mut().zip(parsed) {
                *cell = value.ok_or_else(|| bad("missing cell"))?;
            }
        }
        Ok(CountsRecord {
            counts: out,
            trials: int("trials")?,
            seed: int("seed")?,
            model: DetectorModel {
                efficiency: num("efficiency")?,
                dark_rate: num("dark_rate")?,
                max_rate: num("max_rate")?,
                gate_window: num("gate_window")?,
            },
        })
    }
}

/// Generator for analyzer setting `setting` of a run seeded with `seed`.
pub(crate) fn setting_rng(seed: u64, setting: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(setting);
    rng
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0))
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let x: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    x as u64
}

/// Draws counts for each (path, basis) cell: the photon is detected with
/// probability `probs · efficiency` per trial, plus Poisson dark counts.
/// Each analyzer setting uses its own random stream.
pub fn simulate_counts(
    probs: &CountTable,
    model: &DetectorModel,
    trials: u64,
    seed: u64,
) -> Result<CountsRecord> {
    model.validate()?;
    if trials == 0 {
        return Err(Error::Domain("trials must be positive".into()));
    }
    for (b, _) in MeasurementBasis::ALL.iter().enumerate() {
        let total: f64 = probs.iter().map(|row| row[b]).sum();
        if probs.iter().any(|row| !(row[b] >= -1e-12)) || total > 1.0 + 1e-9 {
            return Err(Error::Domain(format!(
                "invalid probabilities for setting {b}"
            )));
        }
    }
    let dark = model.dark_mean(trials);
    let mut counts = [[0u64; 4]; N_PATHS];
    for b in 0..4 {
        let mut rng = setting_rng(seed, b as u64);
        for (path, row) in probs.iter().enumerate() {
            let signal = binomial(&mut rng, trials, row[b] * model.efficiency);
            counts[path][b] = signal + poisson(&mut rng, dark);
        }
    }
    Ok(CountsRecord {
        counts,
        trials,
        seed,
        model: *model,
    })
}

/// Parametric resample of `record`: every cell is redrawn from a binomial
/// with the observed frequency.
pub fn resample(record: &CountsRecord, rng: &mut ChaCha8Rng) -> CountsRecord {
    let n = record.trials;
    let counts = record
        .counts
        .map(|row| row.map(|c| binomial(rng, n, c as f64 / n as f64)));
    CountsRecord {
        counts,
        ..record.clone()
    }
}
