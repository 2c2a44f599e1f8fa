//! Modulation, AWGN, soft and hard detection.
//!
//! BPSK maps bit 0 to +1 and bit 1 to -1, so a positive LLR favours 0.
//! OOK sends the bit value itself as the symbol amplitude.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Ook,
    Bpsk,
}

impl Modulation {
    pub fn symbol(self, bit: u8) -> f64 {
        match (self, bit) {
            (Modulation::Bpsk, 0) => 1.0,
            (Modulation::Bpsk, _) => -1.0,
            (Modulation::Ook, 0) => 0.0,
            (Modulation::Ook, _) => 1.0,
        }
    }

    /// Mean symbol energy over equiprobable bits.
    pub fn mean_symbol_energy(self) -> f64 {
        match self {
            Modulation::Bpsk => 1.0,
            Modulation::Ook => 0.5,
        }
    }

    fn threshold(self) -> f64 {
        match self {
            Modulation::Bpsk => 0.0,
            Modulation::Ook => 0.5,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Ook => "ook",
            Modulation::Bpsk => "bpsk",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ook" => Ok(Modulation::Ook),
            "bpsk" => Ok(Modulation::Bpsk),
            other => Err(Error::Config(format!("unknown modulation `{other}`"))),
        }
    }
}

/// How an SNR in dB is turned into a noise level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SnrConvention {
    /// Energy per information bit over N0; the code rate enters.
    #[default]
    EbN0,
    /// Energy per channel symbol over N0.
    EsN0,
}

impl fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnrConvention::EbN0 => "ebn0",
            SnrConvention::EsN0 => "esn0",
        })
    }
}

impl FromStr for SnrConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ebn0" => Ok(SnrConvention::EbN0),
            "esn0" => Ok(SnrConvention::EsN0),
            other => Err(Error::Config(format!("unknown SNR convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub modulation: Modulation,
    pub snr_db: f64,
    pub rate: f64,
    pub convention: SnrConvention,
    pub sigma: f64,
}

impl ChannelConfig {
    pub fn new(modulation: Modulation, snr_db: f64, rate: f64, convention: SnrConvention) -> Result<Self> {
        let sigma = snr_to_sigma(snr_db, modulation, rate, convention)?;
        Ok(ChannelConfig {
            modulation,
            snr_db,
            rate,
            convention,
            sigma,
        })
    }

    /// A channel with an explicit noise level, bypassing the SNR conversion.
    pub fn with_sigma(modulation: Modulation, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(ChannelConfig {
            modulation,
            snr_db: f64::NAN,
            rate: 1.0,
            convention: SnrConvention::EsN0,
            sigma,
        })
    }
}

pub fn modulate(bits: &[u8], modulation: Modulation) -> Vec<f64> {
    bits.iter().map(|&b| modulation.symbol(b)).collect()
}

/// `sigma^2 = Es / (2 * R * 10^(snr/10))` for Eb/N0; `R` is dropped for Es/N0.
pub fn snr_to_sigma(snr_db: f64, modulation: Modulation, rate: f64, convention: SnrConvention) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Parameter(format!("code rate must lie in (0, 1], got {rate}")));
    }
    let linear = 10f64.powf(snr_db / 10.0);
    let bits_per_symbol = match convention {
        SnrConvention::EbN0 => rate,
        SnrConvention::EsN0 => 1.0,
    };
    let variance = modulation.mean_symbol_energy() / (2.0 * bits_per_symbol * linear);
    Ok(variance.sqrt())
}

pub fn add_awgn<R: Rng + ?Sized>(symbols: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    symbols
        .iter()
        .map(|&y| {
            let n: f64 = rng.sample(StandardNormal);
            y + sigma * n
        })
        .collect()
}

/// Adds noise in place, leaving entries for which `skip` is true untouched.
pub fn add_awgn_masked<R: Rng + ?Sized>(symbols: &mut [f64], sigma: f64, rng: &mut R, skip: impl Fn(usize) -> bool) {
    for (i, y) in symbols.iter_mut().enumerate() {
        if !skip(i) {
            let n: f64 = rng.sample(StandardNormal);
            *y += sigma * n;
        }
    }
}

/// `ln P(bit = 0 | r) / P(bit = 1 | r)` per sample.
pub fn llr(received: &[f64], sigma: f64, modulation: Modulation) -> Vec<f64> {
    let var = sigma * sigma;
    received
        .iter()
        .map(|&r| match modulation {
            Modulation::Bpsk => 2.0 * r / var,
            Modulation::Ook => (0.5 - r) / var,
        })
        .collect()
}

/// Threshold detection; a sample exactly on the threshold decides 0.
pub fn hard_detect(received: &[f64], modulation: Modulation) -> Vec<u8> {
    let t = modulation.threshold();
    received
        .iter()
        .map(|&r| {
            let is_one = match modulation {
                Modulation::Bpsk => r < t,
                Modulation::Ook => r > t,
            };
            u8::from(is_one)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn modulation_maps() {
        assert_eq!(modulate(&[0, 1], Modulation::Bpsk), vec![1.0, -1.0]);
        assert_eq!(modulate(&[1, 0], Modulation::Ook), vec![1.0, 0.0]);
        assert!(modulate(&[], Modulation::Ook).is_empty());
    }

    #[test]
    fn sigma_conversion() {
        let s = snr_to_sigma(0.0, Modulation::Bpsk, 1.0, SnrConvention::EbN0).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let bpsk = snr_to_sigma(1.0, Modulation::Bpsk, 2.0 / 3.0, SnrConvention::EbN0).unwrap();
        let expect = 1.0 / (2.0 * (2.0 / 3.0) * 10f64.powf(0.1));
        assert!((bpsk * bpsk - expect).abs() < 1e-15);
        let ook = snr_to_sigma(1.0, Modulation::Ook, 2.0 / 3.0, SnrConvention::EbN0).unwrap();
        assert!((ook * ook - 0.5 * expect).abs() < 1e-15);
        let es = snr_to_sigma(0.0, Modulation::Bpsk, 0.5, SnrConvention::EsN0).unwrap();
        assert!((es - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(snr_to_sigma(0.0, Modulation::Bpsk, 0.0, SnrConvention::EbN0).is_err());
    }

    #[test]
    fn awgn_vanishing_sigma() {
        let y = modulate(&[0, 1, 1, 0], Modulation::Bpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = add_awgn(&y, 1e-12, &mut rng);
        for (a, b) in y.iter().zip(&r) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn awgn_is_seed_deterministic() {
        let y = vec![0.0; 64];
        let a = add_awgn(&y, 0.7, &mut ChaCha8Rng::seed_from_u64(11));
        let b = add_awgn(&y, 0.7, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn awgn_moments() {
        let sigma = 0.8;
        let draws = add_awgn(&vec![0.0; 1_000_000], sigma, &mut ChaCha8Rng::seed_from_u64(5));
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        // 1% of sigma for the mean, 1% of sigma^2 for the variance
        assert!(mean.abs() < 0.01 * sigma, "mean {mean}");
        assert!((var - sigma * sigma).abs() < 0.01 * sigma * sigma, "var {var}");
    }

    #[test]
    fn llr_examples() {
        assert_eq!(llr(&[1.0], 1.0, Modulation::Bpsk), vec![2.0]);
        assert_eq!(llr(&[0.0], 1.0, Modulation::Bpsk), vec![0.0]);
        assert_eq!(llr(&[0.5], 1.0, Modulation::Ook), vec![0.0]);
    }

    #[test]
    fn llr_agrees_with_exact_likelihoods() {
        let sigma: f64 = 0.6;
        let gauss = |x: f64, mu: f64| (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp();
        for m in [Modulation::Bpsk, Modulation::Ook] {
            for r in [-1.3, -0.2, 0.1, 0.45, 0.9, 1.7] {
                let exact = (gauss(r, m.symbol(0)) / gauss(r, m.symbol(1))).ln();
                let got = llr(&[r], sigma, m)[0];
                assert!((exact - got).abs() < 1e-12, "{m} r={r}");
            }
        }
    }

    #[test]
    fn hard_decisions() {
        assert_eq!(hard_detect(&[-0.2, 0.3], Modulation::Bpsk), vec![1, 0]);
        assert_eq!(hard_detect(&[0.7, 0.2], Modulation::Ook), vec![1, 0]);
        assert_eq!(hard_detect(&[0.0], Modulation::Bpsk), vec![0]);
        assert_eq!(hard_detect(&[0.5], Modulation::Ook), vec![0]);
    }

    proptest::proptest! {
        #[test]
        fn llr_sign_matches_hard_decision(r in -3.0f64..3.0, sigma in 0.05f64..2.0, ook in proptest::bool::ANY) {
            let m = if ook { Modulation::Ook } else { Modulation::Bpsk };
            let l = llr(&[r], sigma, m)[0];
            let bit = hard_detect(&[r], m)[0];
            if l > 0.0 {
                proptest::prop_assert_eq!(bit, 0);
            } else if l < 0.0 {
                proptest::prop_assert_eq!(bit, 1);
            }
        }
    }
}
