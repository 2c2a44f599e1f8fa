#![allow(dead_code)]

use cscode::neural::Network;
use cscode::training::fl_default_hidden;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every network the toolkit trains: MLP and CNN decoders for one to five
/// 4B6B frames, and the segmentation CNN on 12-bit batches.
pub fn shipped_architectures() -> Vec<(String, Network)> {
    let mut out = Vec::new();
    for frames in 1..=5 {
        let (v, k) = (6 * frames, 4 * frames);
        let mlp = Network::mlp(v, &fl_default_hidden(false, frames), k).unwrap();
        out.push((format!("mlp-f{frames}"), mlp));
        let cnn = Network::fl_cnn(v, &fl_default_hidden(true, frames), k).unwrap();
        out.push((format!("cnn-f{frames}"), cnn));
    }
    out.push(("vl-cnn".into(), Network::vl_cnn(12, &[16, 32, 20, 80, 30]).unwrap()));
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random input and target shaped for `net`.
pub fn random_point(net: &Network, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let input = (0..net.input_width()).map(|_| rng.random_range(-3.0..3.0)).collect();
    let target = (0..net.output_width()).map(|_| rng.random_range(0.0..2.0f64).floor()).collect();
    (input, target)
}

/// SNR at which a curve falls to `level`, by linear interpolation of
/// log10(rate) between the bracketing points.
pub fn crossing(points: &[(f64, f64)], level: f64) -> Option<f64> {
    let lv = level.log10();
    points.windows(2).find_map(|w| {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if y0 >= level && y1 <= level && y1 > 0.0 && y0 > y1 {
            let (l0, l1) = (y0.log10(), y1.log10());
            Some(x0 + (l0 - lv) / (l0 - l1) * (x1 - x0))
        } else {
            None
        }
    })
}
