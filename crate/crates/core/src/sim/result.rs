use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "snr_db,trials,bit_errors,block_errors,ber,bler,ci95";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    /// Blocks simulated.
    pub trials: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub bler: f64,
    /// Normal-approximation 95% half-width of the BER.
    pub ci95: f64,
}

impl SweepPoint {
    pub fn new(snr_db: f64, trials: u64, bits: u64, bit_errors: u64, block_errors: u64) -> Self {
        let ber = if bits == 0 { 0.0 } else { bit_errors as f64 / bits as f64 };
        let bler = if trials == 0 {
            0.0
        } else {
            block_errors as f64 / trials as f64
        };
        let ci95 = if bits == 0 {
            0.0
        } else {
            1.96 * (ber * (1.0 - ber) / bits as f64).sqrt()
        };
        SweepPoint {
            snr_db,
            trials,
            bit_errors,
            block_errors,
            ber,
            bler,
            ci95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub label: String,
    pub seed: u64,
    pub config_hash: u64,
    pub points: Vec<SweepPoint>,
    /// Hard-decision baseline for variable-length sweeps: a block is in
    /// error when any detected channel bit differs.
    pub raw: Option<Vec<SweepPoint>>,
}

impl SweepResult {
    pub(crate) fn from_rows(seed: u64, points: impl Iterator<Item = SweepPoint>) -> Self {
        SweepResult {
            label: String::new(),
            seed,
            config_hash: 0,
            points: points.collect(),
            raw: None,
        }
    }

    pub fn to_csv(&self) -> String {
        points_to_csv(&self.points)
    }

    pub fn raw_csv(&self) -> Option<String> {
        self.raw.as_deref().map(points_to_csv)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn points_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        // `{}` on f64 prints the shortest string that parses back exactly
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.snr_db, p.trials, p.bit_errors, p.block_errors, p.ber, p.bler, p.ci95
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepPoint>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Format {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let bad = |what: &str| Error::Format {
                line: i + 1,
                message: format!("bad {what} in `{line}`"),
            };
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 7 {
                return Err(bad("field count"));
            }
            let real = |j: usize, name: &str| f[j].parse::<f64>().map_err(|_| bad(name));
            let int = |j: usize, name: &str| f[j].parse::<u64>().map_err(|_| bad(name));
            Ok(SweepPoint {
                snr_db: real(0, "snr_db")?,
                trials: int(1, "trials")?,
                bit_errors: int(2, "bit_errors")?,
                block_errors: int(3, "block_errors")?,
                ber: real(4, "ber")?,
                bler: real(5, "bler")?,
                ci95: real(6, "ci95")?,
            })
        })
        .collect()
}

pub fn load_csv(path: &Path) -> Result<Vec<SweepPoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let points = vec![
            SweepPoint::new(0.0, 1000, 4000, 317, 250),
            SweepPoint::new(1.5, 123_457, 493_828, 3, 3),
            SweepPoint::new(9.0, 10, 40, 0, 0),
        ];
        let csv = points_to_csv(&points);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(parse_csv(&csv).unwrap(), points);
    }

    #[test]
    fn statistics() {
        let p = SweepPoint::new(2.0, 100, 400, 40, 25);
        assert_eq!(p.ber, 0.1);
        assert_eq!(p.bler, 0.25);
        assert!((p.ci95 - 1.96 * (0.09f64 / 400.0).sqrt()).abs() < 1e-15);
        let empty = SweepPoint::new(2.0, 0, 0, 0, 0);
        assert_eq!((empty.ber, empty.bler, empty.ci95), (0.0, 0.0, 0.0));
    }

    #[test]
    fn malformed_csv() {
        assert!(parse_csv("snr,ber\n").is_err());
        let bad = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(matches!(parse_csv(&bad), Err(Error::Format { line: 2, .. })));
    }
}
