use cscode::channel::Modulation;
use cscode::codec_fl::{ConcatCodebook, FlCodebook};
use cscode::neural::Network;
use cscode::sim::{ber_sweep, FlDecoder, StopRule, SweepParams};
use cscode::training::{fl_default_epochs, train_fl, TrainConfig};

fn four_b_six_b() -> ConcatCodebook {
    ConcatCodebook::repeated(&FlCodebook::four_b_six_b(), 1).unwrap()
}

fn params(snrs: Vec<f64>, min_block_errors: u64, max_bits: u64) -> SweepParams {
    let mut p = SweepParams::new(Modulation::Ook, snrs, 3);
    p.stop = StopRule {
        min_block_errors,
        max_bits,
    };
    p
}

fn trained_mlp(cb: &ConcatCodebook) -> Network {
    let mut net = Network::mlp(6, &[32, 16, 8], 4).unwrap();
    net.xavier_init(1);
    let mut cfg = TrainConfig::fl_default(1);
    cfg.train_snr_db = 5.0;
    cfg.epochs = 4 * fl_default_epochs(1);
    train_fl(&mut net, cb, &cfg).unwrap();
    net
}

#[test]
fn map_ber_is_tiny_at_high_snr() {
    let cb = four_b_six_b();
    let r = ber_sweep(&cb, &FlDecoder::Map, &params(vec![13.0], 400, 2_000_000)).unwrap();
    assert!(r.points[0].ber < 1e-5, "{:?}", r.points[0]);
}

#[test]
fn no_errors_over_a_million_bits_at_high_snr() {
    let cb = four_b_six_b();
    let p = params(vec![14.0], u64::MAX, 1_000_000);
    for decoder in [FlDecoder::Map, FlDecoder::Dnn(trained_mlp(&cb))] {
        let r = ber_sweep(&cb, &decoder, &p).unwrap();
        let point = &r.points[0];
        assert!(point.trials * 4 >= 1_000_000);
        assert_eq!(point.bit_errors, 0, "{point:?}");
    }
}

#[test]
fn ber_falls_with_snr() {
    let cb = four_b_six_b();
    let p = params(vec![0.0, 2.0, 4.0, 6.0, 8.0], 400, 400_000);
    for decoder in [FlDecoder::Map, FlDecoder::Lut] {
        let r = ber_sweep(&cb, &decoder, &p).unwrap();
        for w in r.points.windows(2) {
            assert!(w[1].ber < w[0].ber, "{:?} then {:?}", w[0], w[1]);
        }
    }
}

#[test]
fn map_never_loses_to_lut() {
    let cb = four_b_six_b();
    let p = params(vec![2.0, 5.0, 8.0], 400, 400_000);
    let map = ber_sweep(&cb, &FlDecoder::Map, &p).unwrap();
    let lut = ber_sweep(&cb, &FlDecoder::Lut, &p).unwrap();
    for (m, l) in map.points.iter().zip(&lut.points) {
        assert!(m.ber <= l.ber + m.ci95 + l.ci95, "{m:?} vs {l:?}");
    }
}
