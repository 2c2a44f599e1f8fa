//! Monte-Carlo BER/BLER sweeps over an AWGN channel.
//!
//! Each SNR point runs rounds of `chunk` blocks. Round `r` at point `i`
//! draws from its own generator seeded from `(seed, i, r)`, and rounds run
//! in fixed-size parallel groups, so results do not depend on the thread
//! count. The stop rule is checked after each group.

mod plot;
mod result;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::hamming;
use crate::channel::{add_awgn, add_awgn_masked, hard_detect, llr, modulate, snr_to_sigma, Modulation, SnrConvention};
use crate::codec_fl::{fl_encode, lut_decode, map_decode, ConcatCodebook, FrameCode};
use crate::codec_vl::{
    encode_within, modulate_padded, pad_batch, postprocess_multistate, postprocess_single_state, vl_decode_bitwise,
    vl_decode_resync, BoundaryVector, VlCodebook, PAD_VALUE,
};
use crate::config::{fnv1a, resolve_fl_codebook, resolve_vl_codebook, KeyValues};
use crate::error::{Error, Result};
use crate::neural::{load_checkpoint, Network};

pub use plot::{render_svg, Curve};
pub use result::{load_csv, parse_csv, points_to_csv, SweepPoint, SweepResult, CSV_HEADER};

/// Rounds evaluated together before the stop rule is checked.
const GROUP: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum DecoderKind {
    Lut,
    Map,
    Dnn(PathBuf),
    VlBitwise,
    VlResync,
    VlCnn(PathBuf),
}

impl DecoderKind {
    pub fn is_variable_length(&self) -> bool {
        matches!(self, DecoderKind::VlBitwise | DecoderKind::VlResync | DecoderKind::VlCnn(_))
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderKind::Lut => f.write_str("lut"),
            DecoderKind::Map => f.write_str("map"),
            DecoderKind::Dnn(p) => write!(f, "dnn:{}", p.display()),
            DecoderKind::VlBitwise => f.write_str("vl-bitwise"),
            DecoderKind::VlResync => f.write_str("vl-resync"),
            DecoderKind::VlCnn(p) => write!(f, "vl-cnn:{}", p.display()),
        }
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "lut" => DecoderKind::Lut,
            "map" => DecoderKind::Map,
            "vl-bitwise" => DecoderKind::VlBitwise,
            "vl-resync" => DecoderKind::VlResync,
            _ => {
                if let Some(p) = s.strip_prefix("dnn:").filter(|p| !p.is_empty()) {
                    DecoderKind::Dnn(p.into())
                } else if let Some(p) = s.strip_prefix("vl-cnn:").filter(|p| !p.is_empty()) {
                    DecoderKind::VlCnn(p.into())
                } else {
                    return Err(Error::Config(format!("unknown decoder `{s}`")));
                }
            }
        })
    }
}

/// Stop after `min_block_errors` block errors or `max_bits` source bits,
/// whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_block_errors: u64,
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_block_errors: 400,
            max_bits: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub modulation: Modulation,
    pub convention: SnrConvention,
    pub snrs: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
    /// Blocks per round.
    pub chunk: u64,
}

impl SweepParams {
    pub fn new(modulation: Modulation, snrs: Vec<f64>, seed: u64) -> Self {
        SweepParams {
            modulation,
            convention: SnrConvention::EbN0,
            snrs,
            stop: StopRule::default(),
            seed,
            chunk: 1000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.snrs.is_empty() {
            return Err(Error::Config("SNR list is empty".into()));
        }
        if self.snrs.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if self.stop.max_bits == 0 || self.chunk == 0 {
            return Err(Error::Config("max_bits and chunk must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub decoder: DecoderKind,
    pub codebook: String,
    pub frames: usize,
    pub shuffle_seed: Option<u64>,
    /// Batch length for variable-length codes.
    pub l_max: usize,
    pub params: SweepParams,
}

const SWEEP_KEYS: &[&str] = &[
    "decoder",
    "codebook",
    "frames",
    "shuffle_seed",
    "l_max",
    "modulation",
    "convention",
    "snrs",
    "min_block_errors",
    "max_bits",
    "seed",
    "chunk",
];

impl SweepConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(SWEEP_KEYS)?;
        let decoder: DecoderKind = kv
            .get("decoder")
            .ok_or_else(|| Error::Config("missing `decoder`".into()))?
            .parse()?;
        let default_cb = if decoder.is_variable_length() {
            "builtin:rll13"
        } else {
            "builtin:4b6b"
        };
        let codebook = kv.get("codebook").unwrap_or(default_cb).to_string();
        let modulation = match kv.get("modulation") {
            Some(m) => m.parse()?,
            None => default_modulation(&codebook)?,
        };
        let snrs = match kv.get("snrs") {
            Some(s) => parse_snr_list(s)?,
            None => return Err(Error::Config("missing `snrs`".into())),
        };
        let stop = StopRule {
            min_block_errors: kv.count_or("min_block_errors", 400)?,
            max_bits: kv.count_or("max_bits", 10_000_000)?,
        };
        let params = SweepParams {
            modulation,
            convention: kv.parse_or("convention", SnrConvention::EbN0)?,
            snrs,
            stop,
            seed: kv.count_or("seed", 1)?,
            chunk: kv.count_or("chunk", 1000)?,
        };
        params.validate()?;
        Ok(SweepConfig {
            decoder,
            codebook,
            frames: kv.count_or("frames", 1)? as usize,
            shuffle_seed: kv.parse_opt("shuffle_seed")?,
            l_max: kv.count_or("l_max", 12)? as usize,
            params,
        })
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.set("decoder", &self.decoder);
        kv.set("codebook", &self.codebook);
        kv.set("frames", self.frames);
        if let Some(s) = self.shuffle_seed {
            kv.set("shuffle_seed", s);
        }
        kv.set("l_max", self.l_max);
        kv.set("modulation", self.params.modulation);
        kv.set("convention", self.params.convention);
        let snrs: Vec<String> = self.params.snrs.iter().map(f64::to_string).collect();
        kv.set("snrs", snrs.join(","));
        kv.set("min_block_errors", self.params.stop.min_block_errors);
        kv.set("max_bits", self.params.stop.max_bits);
        kv.set("seed", self.params.seed);
        kv.set("chunk", self.params.chunk);
        kv
    }

    pub fn hash(&self) -> u64 {
        fnv1a(self.to_kv().to_text().as_bytes())
    }
}

/// Default modulation for the built-in codebooks: OOK for the DC-free
/// codes, BPSK for the run-length-limited one.
pub fn default_modulation(codebook: &str) -> Result<Modulation> {
    match codebook {
        "builtin:4b6b" | "builtin:dcfree-vl" => Ok(Modulation::Ook),
        "builtin:rll13" => Ok(Modulation::Bpsk),
        other => Err(Error::Config(format!("`modulation` is required for codebook `{other}`"))),
    }
}

/// Comma-separated values or `start:stop:step` (inclusive).
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad SNR list `{s}`"));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    let v: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::Config("SNR list is empty".into()));
    }
    Ok(v)
}

pub enum FlDecoder {
    Lut,
    Map,
    Dnn(Network),
}

pub enum VlDecoder {
    Bitwise,
    Resync,
    Cnn(Network),
}

/// Runs the sweep described by a configuration, loading codebooks and
/// checkpoints as needed.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let label = config.decoder.to_string();
    let mut result = if config.decoder.is_variable_length() {
        let cb = resolve_vl_codebook(&config.codebook)?;
        let dec = match &config.decoder {
            DecoderKind::VlBitwise => VlDecoder::Bitwise,
            DecoderKind::VlResync => VlDecoder::Resync,
            DecoderKind::VlCnn(p) => VlDecoder::Cnn(load_checkpoint(p).map_err(config_error)?),
            _ => unreachable!(),
        };
        sweep_vl(&cb, config.l_max, &dec, &config.params)?
    } else {
        let cb = resolve_fl_codebook(&config.codebook, config.frames, config.shuffle_seed)?;
        let dec = match &config.decoder {
            DecoderKind::Lut => FlDecoder::Lut,
            DecoderKind::Map => FlDecoder::Map,
            DecoderKind::Dnn(p) => FlDecoder::Dnn(load_checkpoint(p).map_err(config_error)?),
            _ => unreachable!(),
        };
        sweep_fl(&cb, &dec, &config.params)?
    };
    result.label = label;
    result.config_hash = config.hash();
    Ok(result)
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Io { .. } | Error::Format { .. } | Error::Version { .. } => Error::Config(e.to_string()),
        other => other,
    }
}

/// BER/BLER of a fixed-length code with the given decoder.
pub fn ber_sweep(cb: &ConcatCodebook, decoder: &FlDecoder, params: &SweepParams) -> Result<SweepResult> {
    sweep_fl(cb, decoder, params)
}

/// BLER of a variable-length code, with the raw hard-decision BLER as the
/// baseline in [`SweepResult::raw`].
pub fn bler_sweep_vl(cb: &VlCodebook, l_max: usize, decoder: &VlDecoder, params: &SweepParams) -> Result<SweepResult> {
    sweep_vl(cb, l_max, decoder, params)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    trials: u64,
    bits: u64,
    bit_errors: u64,
    block_errors: u64,
    raw_bits: u64,
    raw_bit_errors: u64,
    raw_block_errors: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.trials += o.trials;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.block_errors += o.block_errors;
        self.raw_bits += o.raw_bits;
        self.raw_bit_errors += o.raw_bit_errors;
        self.raw_block_errors += o.raw_block_errors;
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b.rotate_left(32))
}

pub(crate) fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let word: u64 = rng.random();
        let take = (n - out.len()).min(64);
        out.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    out
}

fn run_points<F>(params: &SweepParams, rate: f64, round: F) -> Result<Vec<(f64, Counts)>>
where
    F: Fn(&mut ChaCha8Rng, f64) -> Result<Counts> + Sync,
{
    params.validate()?;
    let mut out = Vec::with_capacity(params.snrs.len());
    for (i, &snr) in params.snrs.iter().enumerate() {
        let sigma = snr_to_sigma(snr, params.modulation, rate, params.convention)?;
        let mut total = Counts::default();
        let mut next_round = 0u64;
        while total.block_errors < params.stop.min_block_errors
            && total.bits < params.stop.max_bits
            && total.trials < params.stop.max_bits
        {
            let rounds: Vec<Result<Counts>> = (next_round..next_round + GROUP)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, i as u64, r));
                    round(&mut rng, sigma)
                })
                .collect();
            for c in rounds {
                total.add(&c?);
            }
            next_round += GROUP;
        }
        out.push((snr, total));
    }
    Ok(out)
}

fn sweep_fl(cb: &ConcatCodebook, decoder: &FlDecoder, params: &SweepParams) -> Result<SweepResult> {
    let (k_len, n_len) = (cb.block_source_len(), cb.block_code_len());
    if let FlDecoder::Dnn(net) = decoder {
        if net.input_width() != n_len || net.output_width() != k_len {
            return Err(Error::Config(format!(
                "network maps {} -> {} values but the codebook needs {n_len} -> {k_len}",
                net.input_width(),
                net.output_width()
            )));
        }
    }
    let m = params.modulation;
    let rows = run_points(params, cb.effective_k() as f64 / cb.effective_n() as f64, |rng, sigma| {
        let mut c = Counts::default();
        let mut ws = match decoder {
            FlDecoder::Dnn(net) => Some(net.workspace()),
            _ => None,
        };
        for _ in 0..params.chunk {
            let src = random_bits(rng, k_len);
            let tx = modulate(&fl_encode(cb, &src)?, m);
            let rx = add_awgn(&tx, sigma, rng);
            let est = match decoder {
                FlDecoder::Lut => lut_decode(cb, &hard_detect(&rx, m))?,
                FlDecoder::Map => map_decode(cb, &rx, m)?,
                FlDecoder::Dnn(net) => {
                    let out = net.forward_ws(&llr(&rx, sigma, m), ws.as_mut().unwrap())?;
                    out.iter().map(|&y| u8::from(y > 0.5)).collect()
                }
            };
            let e = hamming(&src, &est) as u64;
            c.trials += 1;
            c.bits += k_len as u64;
            c.bit_errors += e;
            c.block_errors += u64::from(e > 0);
        }
        Ok(c)
    })?;
    Ok(SweepResult::from_rows(params.seed, rows.iter().map(|(s, c)| point(*s, c))))
}

fn sweep_vl(cb: &VlCodebook, l_max: usize, decoder: &VlDecoder, params: &SweepParams) -> Result<SweepResult> {
    if l_max < 2 || l_max % 2 != 0 || l_max < cb.l_max() {
        return Err(Error::Config(format!(
            "batch length {l_max} must be even and at least the longest codeword ({})",
            cb.l_max()
        )));
    }
    if let VlDecoder::Cnn(net) = decoder {
        if net.input_width() != l_max || net.output_width() != l_max / 2 {
            return Err(Error::Config(format!(
                "network maps {} -> {} values but a batch of {l_max} needs {l_max} -> {}",
                net.input_width(),
                net.output_width(),
                l_max / 2
            )));
        }
    }
    let m = params.modulation;
    let rate = cb.average_rate(1.0)?.rate.min(1.0);
    let rows = run_points(params, rate, |rng, sigma| {
        let mut c = Counts::default();
        let mut ws = match decoder {
            VlDecoder::Cnn(net) => Some(net.workspace()),
            _ => None,
        };
        for _ in 0..params.chunk {
            let full = random_bits(rng, l_max / 2);
            let (consumed, coded, _) = encode_within(cb, &full, 0, l_max)?;
            let src = &full[..consumed];
            let mut rx = modulate_padded(&pad_batch(&coded, l_max)?, m);
            add_awgn_masked(&mut rx, sigma, rng, |i| i >= coded.len());
            let data: Vec<f64> = rx.iter().copied().filter(|&r| r != PAD_VALUE).collect();
            let hard = hard_detect(&data, m);
            let est = match decoder {
                VlDecoder::Bitwise => match vl_decode_bitwise(cb, &hard, 0) {
                    Ok(v) => v,
                    Err(Error::TrailingResidue { decoded, .. }) => decoded,
                    Err(e) => return Err(e),
                },
                VlDecoder::Resync => vl_decode_resync(cb, &hard, cb.l_max(), 0)?,
                VlDecoder::Cnn(net) => {
                    let out = net.forward_ws(&rx, ws.as_mut().unwrap())?;
                    let gamma = BoundaryVector::from_outputs(out, l_max);
                    let decoded = if cb.is_single_state() {
                        postprocess_single_state(cb, &gamma, &hard_detect(&rx, m))
                    } else {
                        postprocess_multistate(cb, &gamma, &rx, m, 0).map(|d| d.source)
                    };
                    decoded.unwrap_or_default()
                }
            };
            let e = mismatch(src, &est);
            let raw = hamming(&coded, &hard) as u64;
            c.trials += 1;
            c.bits += src.len() as u64;
            c.bit_errors += e;
            c.block_errors += u64::from(e > 0 || est.len() != src.len());
            c.raw_bits += coded.len() as u64;
            c.raw_bit_errors += raw;
            c.raw_block_errors += u64::from(raw > 0);
        }
        Ok(c)
    })?;
    let mut result = SweepResult::from_rows(params.seed, rows.iter().map(|(s, c)| point(*s, c)));
    result.raw = Some(
        rows.iter()
            .map(|(s, c)| SweepPoint::new(*s, c.trials, c.raw_bits, c.raw_bit_errors, c.raw_block_errors))
            .collect(),
    );
    Ok(result)
}

/// Positional bit errors, counting missing or extra bits as errors.
fn mismatch(truth: &[u8], est: &[u8]) -> u64 {
    let common = truth.len().min(est.len());
    (hamming(&truth[..common], &est[..common]) + truth.len().abs_diff(est.len())) as u64
}

fn point(snr: f64, c: &Counts) -> SweepPoint {
    SweepPoint::new(snr, c.trials, c.bits, c.bit_errors, c.block_errors)
}
