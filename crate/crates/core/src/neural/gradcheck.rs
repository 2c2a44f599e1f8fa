use super::network::Network;
use super::optim::mse_loss;
use crate::error::Result;

/// Compares the backpropagated MSE gradient against central differences.
///
/// Returns `|g_a - g_n| / (|g_a| + |g_n|)` in the Euclidean norm, taken
/// over `coords` (all parameters when `None`). Zero when both vanish.
pub fn gradient_check(
    net: &Network,
    input: &[f64],
    target: &[f64],
    eps: f64,
    coords: Option<&[usize]>,
) -> Result<f64> {
    let out = net.forward(input)?;
    let (_, loss_grad) = mse_loss(&out, target)?;
    let analytic = net.backward(input, &loss_grad)?;

    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..net.count_params()).collect();
            &all
        }
    };
    let mut probe = net.clone();
    let mut ws = probe.workspace();
    let mut diff2 = 0.0;
    let mut norm_a = 0.0;
    let mut norm_n = 0.0;
    for &i in coords {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + eps;
        let up = mse_loss(probe.forward_ws(input, &mut ws)?, target)?.0;
        probe.params_mut()[i] = orig - eps;
        let down = mse_loss(probe.forward_ws(input, &mut ws)?, target)?.0;
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        diff2 += (analytic[i] - numeric).powi(2);
        norm_a += analytic[i] * analytic[i];
        norm_n += numeric * numeric;
    }
    let denom = norm_a.sqrt() + norm_n.sqrt();
    Ok(if denom == 0.0 { 0.0 } else { diff2.sqrt() / denom })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{LayerSpec, Padding};

    fn perturbed(mut net: Network, seed: u64) -> Network {
        net.xavier_init(seed);
        // nonzero biases so their gradients are exercised too
        for (i, p) in net.params_mut().iter_mut().enumerate() {
            *p += 0.05 * ((i as f64 * 1.7 + seed as f64).sin());
        }
        net
    }

    #[test]
    fn each_layer_kind() {
        let conv = |stride, padding| LayerSpec::Conv1d {
            in_channels: 2,
            out_channels: 3,
            kernel: 3,
            stride,
            padding,
        };
        let nets = [
            Network::new(5, vec![LayerSpec::Dense { inputs: 5, outputs: 3 }, LayerSpec::Sigmoid]),
            Network::new(5, vec![LayerSpec::Dense { inputs: 5, outputs: 3 }, LayerSpec::Relu]),
            Network::new(
                5,
                vec![
                    LayerSpec::Conv1d { in_channels: 1, out_channels: 2, kernel: 2, stride: 1, padding: Padding::Valid },
                    conv(1, Padding::Same),
                    LayerSpec::Relu,
                    conv_in3(),
                    LayerSpec::Sigmoid,
                ],
            ),
            Network::new(
                9,
                vec![
                    LayerSpec::Conv1d { in_channels: 1, out_channels: 2, kernel: 1, stride: 1, padding: Padding::Valid },
                    conv(2, Padding::Valid),
                    LayerSpec::Sigmoid,
                ],
            ),
        ];
        for (n, net) in nets.into_iter().enumerate() {
            let net = perturbed(net.unwrap(), n as u64);
            let x: Vec<f64> = (0..net.input_width()).map(|i| (i as f64 * 0.9 + 0.3).cos()).collect();
            let t: Vec<f64> = (0..net.output_width()).map(|i| (i % 2) as f64).collect();
            let err = gradient_check(&net, &x, &t, 1e-5, None).unwrap();
            assert!(err < 1e-6, "net {n}: {err}");
        }
    }

    fn conv_in3() -> LayerSpec {
        LayerSpec::Conv1d {
            in_channels: 3,
            out_channels: 1,
            kernel: 3,
            stride: 1,
            padding: Padding::Same,
        }
    }
}
