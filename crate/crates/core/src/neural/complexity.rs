use super::network::{LayerSpec, Network};

/// Inference cost estimate with 4-byte values and biases left out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityReport {
    pub flops: u64,
    pub bytes: u64,
}

impl ComplexityReport {
    pub fn megabytes(&self) -> f64 {
        self.bytes as f64 / (1u64 << 20) as f64
    }
}

/// Each parametrized layer costs its weight count times its output length
/// in multiply-accumulates, and stores its weights plus its output
/// activations. The input vector is stored once.
pub fn complexity(net: &Network) -> ComplexityReport {
    let mut flops = 0u64;
    let mut values = net.input_width() as u64;
    for (layer, out) in net.layers().iter().zip(&net.shapes()[1..]) {
        let weights = layer.weight_count() as u64;
        let positions = match layer {
            LayerSpec::Conv1d { .. } => out.length as u64,
            LayerSpec::Dense { .. } => 1,
            LayerSpec::Sigmoid | LayerSpec::Relu => continue,
        };
        flops += weights * positions;
        values += weights + out.size() as u64;
    }
    ComplexityReport { flops, bytes: 4 * values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_frame_networks() {
        let mlp = complexity(&Network::mlp(6, &[32, 16, 8], 4).unwrap());
        assert_eq!(mlp.flops, 864);
        assert_eq!(mlp.bytes, 3720);
        let cnn = complexity(&Network::fl_cnn(6, &[8, 12, 8], 4).unwrap());
        assert_eq!(cnn.flops, 2528);
        assert_eq!(cnn.bytes, 3400);
    }

    #[test]
    fn activations_cost_nothing() {
        let bare = Network::new(4, vec![LayerSpec::Dense { inputs: 4, outputs: 2 }]).unwrap();
        let act = Network::new(4, vec![LayerSpec::Dense { inputs: 4, outputs: 2 }, LayerSpec::Sigmoid]).unwrap();
        assert_eq!(complexity(&bare), complexity(&act));
        assert_eq!(complexity(&bare), ComplexityReport { flops: 8, bytes: 4 * (4 + 8 + 2) });
    }
}
