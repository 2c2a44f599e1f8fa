//! Training data generation, training loops, and model selection by
//! normalized validation error.
//!
//! Channel layers (modulation, noise, LLR) have no parameters, so every
//! epoch is regenerated from noiseless codewords with fresh noise.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::u64_to_bits;
use crate::channel::{add_awgn, add_awgn_masked, llr, modulate, ChannelConfig, Modulation, SnrConvention};
use crate::codec_fl::{fl_encode, FrameCode};
use crate::codec_vl::{encode_within, modulate_padded, pad_batch, target_boundaries, BoundaryVector, VlCodebook};
use crate::config::{resolve_fl_codebook, resolve_vl_codebook, KeyValues};
use crate::error::{Error, Result};
use crate::neural::{mse_loss, save_checkpoint, Adam, Network};
use crate::sim::{self, derive_seed, FlDecoder, StopRule, SweepParams, VlDecoder};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub train_snr_db: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub modulation: Modulation,
    pub convention: SnrConvention,
    /// Standard deviation of the added noise, replacing the one implied by
    /// the SNR. LLRs keep the SNR-derived scale.
    pub noise_sigma: Option<f64>,
}

impl TrainConfig {
    /// Fixed-length defaults: 1 dB, batches of 16, epochs by frame count.
    pub fn fl_default(frames: usize) -> Self {
        TrainConfig {
            train_snr_db: 1.0,
            epochs: fl_default_epochs(frames),
            batch_size: 16,
            lr: 1e-3,
            seed: 1,
            modulation: Modulation::Ook,
            convention: SnrConvention::EbN0,
            noise_sigma: None,
        }
    }

    /// Segmentation defaults: 1e5 epochs in batches of 16.
    pub fn vl_default(modulation: Modulation, train_snr_db: f64) -> Self {
        TrainConfig {
            train_snr_db,
            epochs: 100_000,
            batch_size: 16,
            lr: 1e-3,
            seed: 1,
            modulation,
            convention: SnrConvention::EbN0,
            noise_sigma: None,
        }
    }

    fn channel(&self, rate: f64) -> Result<(ChannelConfig, f64)> {
        let ch = ChannelConfig::new(self.modulation, self.train_snr_db, rate, self.convention)?;
        let noise = self.noise_sigma.unwrap_or(ch.sigma);
        if !(noise >= 0.0) {
            return Err(Error::Config(format!("noise level must be non-negative, got {noise}")));
        }
        Ok((ch, noise))
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be at least 1".into()));
        }
        if !(self.lr > 0.0) || !self.train_snr_db.is_finite() {
            return Err(Error::Config("learning rate must be positive and the SNR finite".into()));
        }
        Ok(())
    }
}

pub fn fl_default_epochs(frames: usize) -> usize {
    match frames {
        0 | 1 => 40_000,
        2 | 3 => 30_000,
        _ => 2_500,
    }
}

/// Hidden sizes used for each frame count, for the MLP and the CNN.
pub fn fl_default_hidden(cnn: bool, frames: usize) -> Vec<usize> {
    let i = frames.clamp(1, 5) - 1;
    let mlp = [[32, 16, 8], [64, 32, 16], [128, 64, 32], [128, 128, 64], [256, 128, 64]];
    let conv = [[8, 12, 8], [8, 14, 8], [8, 16, 8], [16, 16, 12], [16, 32, 12]];
    if cnn { conv[i] } else { mlp[i] }.to_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// One epoch of (LLR, source bits) pairs. A single frame covers every
/// source word once in random order; `F` frames draw `2^k * F` random
/// blocks.
pub fn gen_fl_epoch<C, R>(cb: &C, channel: &ChannelConfig, rng: &mut R) -> Result<Vec<Sample>>
where
    C: FrameCode + ?Sized,
    R: Rng + ?Sized,
{
    fl_epoch(cb, channel, channel.sigma, rng)
}

fn fl_epoch<C, R>(cb: &C, channel: &ChannelConfig, noise: f64, rng: &mut R) -> Result<Vec<Sample>>
where
    C: FrameCode + ?Sized,
    R: Rng + ?Sized,
{
    let k = cb.k();
    let sources: Vec<Vec<u8>> = if cb.frames() == 1 {
        let mut all: Vec<u64> = (0..1u64 << k).collect();
        all.shuffle(rng);
        all.into_iter().map(|s| u64_to_bits(s, k)).collect()
    } else {
        (0..(1usize << k) * cb.frames())
            .map(|_| sim::random_bits(rng, cb.block_source_len()))
            .collect()
    };
    sources
        .into_iter()
        .map(|src| {
            let tx = modulate(&fl_encode(cb, &src)?, channel.modulation);
            let rx = add_awgn(&tx, noise, rng);
            Ok(Sample {
                input: llr(&rx, channel.sigma, channel.modulation),
                target: src.iter().map(|&b| f64::from(b)).collect(),
            })
        })
        .collect()
}

/// One epoch of (noisy padded batch, boundary vector) pairs: every source
/// of `l_max / 2` bits once in random order, each cut to the longest
/// prefix whose encoding fits the batch. Padding stays noise-free.
pub fn gen_vl_epoch<R: Rng + ?Sized>(
    cb: &VlCodebook,
    l_max: usize,
    channel: &ChannelConfig,
    rng: &mut R,
) -> Result<Vec<Sample>> {
    vl_epoch(cb, l_max, channel.modulation, channel.sigma, rng)
}

fn vl_epoch<R: Rng + ?Sized>(
    cb: &VlCodebook,
    l_max: usize,
    modulation: Modulation,
    noise: f64,
    rng: &mut R,
) -> Result<Vec<Sample>> {
    check_batch_len(cb, l_max)?;
    let half = l_max / 2;
    let mut order: Vec<u64> = (0..1u64 << half).collect();
    order.shuffle(rng);
    order
        .into_iter()
        .map(|s| {
            let full = u64_to_bits(s, half);
            let (consumed, coded, _) = encode_within(cb, &full, 0, l_max)?;
            let gamma = target_boundaries(cb, &full[..consumed], l_max, 0)?;
            let mut input = modulate_padded(&pad_batch(&coded, l_max)?, modulation);
            add_awgn_masked(&mut input, noise, rng, |i| i >= coded.len());
            Ok(Sample {
                input,
                target: gamma.as_targets(),
            })
        })
        .collect()
}

fn check_batch_len(cb: &VlCodebook, l_max: usize) -> Result<()> {
    if l_max < 2 || l_max % 2 != 0 || l_max < cb.l_max() || l_max > 40 {
        return Err(Error::Config(format!(
            "batch length {l_max} must be even, at most 40, and at least the longest codeword ({})",
            cb.l_max()
        )));
    }
    Ok(())
}

struct Trainer {
    adam: Adam,
    grads: Vec<f64>,
    batch: usize,
}

impl Trainer {
    fn new(net: &Network, cfg: &TrainConfig) -> Self {
        Trainer {
            adam: Adam::new(net.count_params(), cfg.lr),
            grads: vec![0.0; net.count_params()],
            batch: cfg.batch_size,
        }
    }

    /// One pass over `samples` in mini-batches; returns the mean sample loss.
    fn epoch(&mut self, net: &mut Network, samples: &[Sample], epoch: usize) -> Result<f64> {
        let mut ws = net.workspace();
        let mut total = 0.0;
        for batch in samples.chunks(self.batch) {
            self.grads.fill(0.0);
            for s in batch {
                let out = net.forward_ws(&s.input, &mut ws)?;
                let (loss, grad) = mse_loss(out, &s.target)?;
                total += loss;
                net.backward_ws(&mut ws, &grad, &mut self.grads)?;
            }
            let scale = 1.0 / batch.len() as f64;
            self.grads.iter_mut().for_each(|g| *g *= scale);
            self.adam.step(net.params_mut(), &self.grads)?;
        }
        let mean = total / samples.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("loss became {mean}"),
            });
        }
        Ok(mean)
    }
}

fn check_fl_shape<C: FrameCode + ?Sized>(net: &Network, cb: &C) -> Result<()> {
    if net.input_width() != cb.block_code_len() || net.output_width() != cb.block_source_len() {
        return Err(Error::Config(format!(
            "network maps {} -> {} values but the codebook needs {} -> {}",
            net.input_width(),
            net.output_width(),
            cb.block_code_len(),
            cb.block_source_len()
        )));
    }
    Ok(())
}

pub fn train_fl<C: FrameCode + ?Sized>(net: &mut Network, cb: &C, cfg: &TrainConfig) -> Result<Vec<f64>> {
    train_fl_with(net, cb, cfg, |_, _| {})
}

/// Trains with mean-squared error against the source bits. `progress`
/// sees each epoch index and mean loss.
pub fn train_fl_with<C: FrameCode + ?Sized>(
    net: &mut Network,
    cb: &C,
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_fl_shape(net, cb)?;
    let rate = cb.k() as f64 / cb.n() as f64;
    let (channel, noise) = cfg.channel(rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1, 0));
    let mut trainer = Trainer::new(net, cfg);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let samples = fl_epoch(cb, &channel, noise, &mut rng)?;
        let loss = trainer.epoch(net, &samples, epoch)?;
        progress(epoch, loss);
        curve.push(loss);
    }
    Ok(curve)
}

pub fn train_vl(net: &mut Network, cb: &VlCodebook, l_max: usize, cfg: &TrainConfig) -> Result<Vec<f64>> {
    train_vl_with(net, cb, l_max, cfg, |_, _| {})
}

/// Trains a segmentation network with mean-squared error against the
/// boundary vector. No LLR layer is used.
pub fn train_vl_with(
    net: &mut Network,
    cb: &VlCodebook,
    l_max: usize,
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_batch_len(cb, l_max)?;
    if net.input_width() != l_max || net.output_width() != l_max / 2 {
        return Err(Error::Config(format!(
            "network maps {} -> {} values but a batch of {l_max} needs {l_max} -> {}",
            net.input_width(),
            net.output_width(),
            l_max / 2
        )));
    }
    let rate = cb.average_rate(1.0)?.rate.min(1.0);
    let (channel, noise) = cfg.channel(rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2, 0));
    let mut trainer = Trainer::new(net, cfg);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let samples = vl_epoch(cb, l_max, channel.modulation, noise, &mut rng)?;
        let loss = trainer.epoch(net, &samples, epoch)?;
        progress(epoch, loss);
        curve.push(loss);
    }
    Ok(curve)
}

/// Fraction of sources whose noiseless batch yields the exact boundary
/// vector after rounding.
pub fn segmentation_accuracy(net: &Network, cb: &VlCodebook, l_max: usize, modulation: Modulation) -> Result<f64> {
    check_batch_len(cb, l_max)?;
    let half = l_max / 2;
    let mut hits = 0usize;
    let mut ws = net.workspace();
    for s in 0..1u64 << half {
        let full = u64_to_bits(s, half);
        let (consumed, coded, _) = encode_within(cb, &full, 0, l_max)?;
        let gamma = target_boundaries(cb, &full[..consumed], l_max, 0)?;
        let input = modulate_padded(&pad_batch(&coded, l_max)?, modulation);
        let out = net.forward_ws(&input, &mut ws)?;
        hits += usize::from(BoundaryVector::from_outputs(out, l_max) == gamma);
    }
    Ok(hits as f64 / (1u64 << half) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NveReport {
    /// Training SNRs of the candidates.
    pub candidates: Vec<f64>,
    pub values: Vec<f64>,
    pub selected: usize,
    /// Validation SNR indices skipped because the reference had no errors.
    pub excluded: Vec<usize>,
}

/// Normalized validation error of each candidate: the mean over validation
/// SNRs of its error rate divided by the reference rate. The lowest value
/// wins, ties going to the lower training SNR.
pub fn nve(candidates: &[f64], rates: &[Vec<f64>], reference: &[f64]) -> Result<NveReport> {
    if candidates.is_empty() || candidates.len() != rates.len() {
        return Err(Error::Input("need one error-rate row per candidate".into()));
    }
    if rates.iter().any(|r| r.len() != reference.len()) {
        return Err(Error::Input("error-rate rows must match the validation SNR count".into()));
    }
    let excluded: Vec<usize> = (0..reference.len()).filter(|&s| !(reference[s] > 0.0)).collect();
    let kept: Vec<usize> = (0..reference.len()).filter(|s| !excluded.contains(s)).collect();
    if kept.is_empty() {
        return Err(Error::Numeric("reference has no errors at any validation SNR".into()));
    }
    let values: Vec<f64> = rates
        .iter()
        .map(|row| kept.iter().map(|&s| row[s] / reference[s]).sum::<f64>() / kept.len() as f64)
        .collect();
    let mut selected = 0;
    for i in 1..values.len() {
        let better = values[i] < values[selected]
            || (values[i] == values[selected] && candidates[i] < candidates[selected]);
        if better {
            selected = i;
        }
    }
    Ok(NveReport {
        candidates: candidates.to_vec(),
        values,
        selected,
        excluded,
    })
}

/// Where a training run left its files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub final_loss: f64,
    pub params: usize,
}

const FL_KEYS: &[&str] = &[
    "codebook",
    "frames",
    "shuffle_seed",
    "arch",
    "hidden",
    "train_snr_db",
    "epochs",
    "batch",
    "lr",
    "seed",
    "modulation",
    "convention",
    "validate_snrs",
    "validate_bits",
    "out",
];

const VL_KEYS: &[&str] = &[
    "codebook",
    "l_max",
    "hidden",
    "train_snr_db",
    "epochs",
    "batch",
    "lr",
    "seed",
    "modulation",
    "convention",
    "validate_snrs",
    "validate_bits",
    "out",
];

fn train_config(kv: &KeyValues, base: TrainConfig) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        train_snr_db: kv.parse_or("train_snr_db", base.train_snr_db)?,
        epochs: kv.count_or("epochs", base.epochs as u64)? as usize,
        batch_size: kv.count_or("batch", base.batch_size as u64)? as usize,
        lr: kv.parse_or("lr", base.lr)?,
        seed: kv.count_or("seed", base.seed)?,
        modulation: base.modulation,
        convention: kv.parse_or("convention", base.convention)?,
        noise_sigma: None,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn modulation_for(kv: &KeyValues, codebook: &str) -> Result<Modulation> {
    match kv.get("modulation") {
        Some(m) => m.parse(),
        None => sim::default_modulation(codebook),
    }
}

fn validation_params(kv: &KeyValues, cfg: &TrainConfig) -> Result<Option<SweepParams>> {
    let Some(snrs) = kv.get("validate_snrs") else {
        return Ok(None);
    };
    let mut p = SweepParams::new(cfg.modulation, sim::parse_snr_list(snrs)?, cfg.seed);
    p.convention = cfg.convention;
    p.stop = StopRule {
        min_block_errors: 400,
        max_bits: kv.count_or("validate_bits", 1_000_000)?,
    };
    Ok(Some(p))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_loss(dir: &Path, curve: &[f64]) -> Result<()> {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in curve.iter().enumerate() {
        let _ = writeln!(s, "{},{l}", i + 1);
    }
    write_file(&dir.join("loss.csv"), &s)
}

fn write_nve(dir: &Path, snrs: &[f64], rates: &[f64], reference: &[f64]) -> Result<()> {
    let mut s = String::from("snr_db,dnn,reference\n");
    for ((snr, r), f) in snrs.iter().zip(rates).zip(reference) {
        let _ = writeln!(s, "{snr},{r},{f}");
    }
    write_file(&dir.join("nve.csv"), &s)
}

fn prepare_dir(kv: &KeyValues, out: Option<&Path>) -> Result<PathBuf> {
    let dir = match (out, kv.get("out")) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(Error::Config("no output directory (`out` key or --out)".into())),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Trains a fixed-length decoder from a `key=value` configuration and
/// writes `config.txt`, `loss.csv`, `model.ckpt` and, when `validate_snrs`
/// is set, `nve.csv` (network BER against MAP BER).
pub fn run_train_fl(kv: &KeyValues, out: Option<&Path>, progress: impl FnMut(usize, f64)) -> Result<RunSummary> {
    kv.reject_unknown(FL_KEYS)?;
    let codebook = kv.get("codebook").unwrap_or("builtin:4b6b").to_string();
    let frames = kv.count_or("frames", 1)? as usize;
    let shuffle_seed: Option<u64> = kv.parse_opt("shuffle_seed")?;
    let cb = resolve_fl_codebook(&codebook, frames, shuffle_seed)?;
    let frames = cb.frame_count();
    let arch = kv.get("arch").unwrap_or("mlp").to_string();
    let cnn = match arch.as_str() {
        "mlp" => false,
        "cnn" => true,
        other => return Err(Error::Config(format!("unknown arch `{other}` (mlp or cnn)"))),
    };
    let hidden = kv.list::<usize>("hidden")?.unwrap_or_else(|| fl_default_hidden(cnn, frames));
    let mut base = TrainConfig::fl_default(frames);
    base.modulation = modulation_for(kv, &codebook)?;
    let cfg = train_config(kv, base)?;
    let dir = prepare_dir(kv, out)?;

    let (v, k) = (cb.block_code_len(), cb.block_source_len());
    let mut net = if cnn {
        Network::fl_cnn(v, &hidden, k)
    } else {
        Network::mlp(v, &hidden, k)
    }
    .map_err(|e| Error::Config(e.to_string()))?;
    net.xavier_init(cfg.seed);

    let mut resolved = KeyValues::default();
    resolved.set("task", "fl");
    resolved.set("codebook", &codebook);
    resolved.set("frames", frames);
    if let Some(s) = shuffle_seed {
        resolved.set("shuffle_seed", s);
    }
    resolved.set("arch", &arch);
    resolved.set("hidden", join(&hidden));
    put_train(&mut resolved, &cfg);
    if let Some(v) = kv.get("validate_snrs") {
        resolved.set("validate_snrs", v);
        resolved.set("validate_bits", kv.count_or("validate_bits", 1_000_000)?);
    }
    write_file(&dir.join("config.txt"), &resolved.to_text())?;

    let curve = train_fl_with(&mut net, &cb, &cfg, progress)?;
    write_loss(&dir, &curve)?;
    save_checkpoint(&net, dir.join("model.ckpt"))?;

    if let Some(p) = validation_params(kv, &cfg)? {
        let dnn = sim::ber_sweep(&cb, &FlDecoder::Dnn(net.clone()), &p)?;
        let map = sim::ber_sweep(&cb, &FlDecoder::Map, &p)?;
        let rates: Vec<f64> = dnn.points.iter().map(|x| x.ber).collect();
        let reference: Vec<f64> = map.points.iter().map(|x| x.ber).collect();
        write_nve(&dir, &p.snrs, &rates, &reference)?;
    }
    Ok(RunSummary {
        dir,
        final_loss: *curve.last().unwrap(),
        params: net.count_params(),
    })
}

/// Trains a segmentation network; `nve.csv` compares the decoder BLER with
/// the raw hard-decision BLER.
pub fn run_train_vl(kv: &KeyValues, out: Option<&Path>, progress: impl FnMut(usize, f64)) -> Result<RunSummary> {
    kv.reject_unknown(VL_KEYS)?;
    let codebook = kv.get("codebook").unwrap_or("builtin:rll13").to_string();
    let cb = resolve_vl_codebook(&codebook)?;
    let l_max = kv.count_or("l_max", 12)? as usize;
    check_batch_len(&cb, l_max).map_err(|e| Error::Config(e.to_string()))?;
    let hidden = kv.list::<usize>("hidden")?.unwrap_or_else(|| vec![16, 32, 20, 80, 30]);
    let modulation = modulation_for(kv, &codebook)?;
    let default_snr = if cb.is_single_state() { 10.0 } else { 11.0 };
    let cfg = train_config(kv, TrainConfig::vl_default(modulation, default_snr))?;
    let dir = prepare_dir(kv, out)?;

    let mut net = Network::vl_cnn(l_max, &hidden).map_err(|e| Error::Config(e.to_string()))?;
    net.xavier_init(cfg.seed);

    let mut resolved = KeyValues::default();
    resolved.set("task", "vl");
    resolved.set("codebook", &codebook);
    resolved.set("l_max", l_max);
    resolved.set("hidden", join(&hidden));
    put_train(&mut resolved, &cfg);
    if let Some(v) = kv.get("validate_snrs") {
        resolved.set("validate_snrs", v);
        resolved.set("validate_bits", kv.count_or("validate_bits", 1_000_000)?);
    }
    write_file(&dir.join("config.txt"), &resolved.to_text())?;

    let curve = train_vl_with(&mut net, &cb, l_max, &cfg, progress)?;
    write_loss(&dir, &curve)?;
    save_checkpoint(&net, dir.join("model.ckpt"))?;

    if let Some(p) = validation_params(kv, &cfg)? {
        let r = sim::bler_sweep_vl(&cb, l_max, &VlDecoder::Cnn(net.clone()), &p)?;
        let rates: Vec<f64> = r.points.iter().map(|x| x.bler).collect();
        let reference: Vec<f64> = r.raw.as_ref().unwrap().iter().map(|x| x.bler).collect();
        write_nve(&dir, &p.snrs, &rates, &reference)?;
    }
    Ok(RunSummary {
        dir,
        final_loss: *curve.last().unwrap(),
        params: net.count_params(),
    })
}

fn put_train(kv: &mut KeyValues, cfg: &TrainConfig) {
    kv.set("train_snr_db", cfg.train_snr_db);
    kv.set("epochs", cfg.epochs);
    kv.set("batch", cfg.batch_size);
    kv.set("lr", cfg.lr);
    kv.set("seed", cfg.seed);
    kv.set("modulation", cfg.modulation);
    kv.set("convention", cfg.convention);
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Reads `config.txt` and `nve.csv` from each run directory and selects
/// the run with the lowest normalized validation error.
pub fn nve_from_runs(dirs: &[PathBuf]) -> Result<NveReport> {
    if dirs.is_empty() {
        return Err(Error::Config("no run directories given".into()));
    }
    let mut candidates = Vec::new();
    let mut rates = Vec::new();
    let mut grid: Option<(Vec<f64>, Vec<f64>)> = None;
    for dir in dirs {
        let cfg = KeyValues::load(&dir.join("config.txt"))?;
        let snr: f64 = cfg
            .parse_opt("train_snr_db")?
            .ok_or_else(|| Error::Config(format!("{}: config.txt lacks train_snr_db", dir.display())))?;
        let path = dir.join("nve.csv");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut snrs = Vec::new();
        let mut row = Vec::new();
        let mut reference = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .ok()
                .filter(|f: &Vec<f64>| f.len() == 3)
                .ok_or_else(|| Error::Config(format!("{}:{}: malformed row", path.display(), i + 1)))?;
            snrs.push(f[0]);
            row.push(f[1]);
            reference.push(f[2]);
        }
        match &grid {
            None => grid = Some((snrs, reference)),
            Some((g, _)) if *g != snrs => {
                return Err(Error::Config(format!(
                    "{} was validated on a different SNR grid",
                    dir.display()
                )))
            }
            Some(_) => {}
        }
        candidates.push(snr);
        rates.push(row);
    }
    let (_, reference) = grid.unwrap();
    nve(&candidates, &rates, &reference)
}
