use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// No padding; output length `(len - kernel) / stride + 1`.
    Valid,
    /// Symmetric zero padding keeping the length (odd kernel, stride 1).
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    },
    Sigmoid,
    Relu,
}

/// Activation shape, stored channel-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub length: usize,
}

impl Shape {
    pub fn flat(length: usize) -> Self {
        Shape { channels: 1, length }
    }

    pub fn size(&self) -> usize {
        self.channels * self.length
    }
}

impl LayerSpec {
    /// Weights plus biases.
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, outputs } => inputs * outputs + outputs,
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => kernel * in_channels * out_channels + out_channels,
            LayerSpec::Sigmoid | LayerSpec::Relu => 0,
        }
    }

    pub fn weight_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { outputs, .. } | LayerSpec::Conv1d { out_channels: outputs, .. } => {
                self.param_count() - outputs
            }
            _ => 0,
        }
    }

    fn fans(&self) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => Some((inputs, outputs)),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => Some((in_channels * kernel, out_channels * kernel)),
            _ => None,
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                if input.size() != inputs || inputs == 0 || outputs == 0 {
                    return Err(Error::Shape(format!(
                        "dense layer expects {inputs} inputs, got {}",
                        input.size()
                    )));
                }
                Ok(Shape::flat(outputs))
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                if input.channels != in_channels || in_channels == 0 || out_channels == 0 {
                    return Err(Error::Shape(format!(
                        "conv layer expects {in_channels} channels, got {}",
                        input.channels
                    )));
                }
                if kernel == 0 || stride == 0 {
                    return Err(Error::Shape("kernel and stride must be at least 1".into()));
                }
                let length = match padding {
                    Padding::Valid => {
                        if input.length < kernel {
                            return Err(Error::Shape(format!(
                                "kernel {kernel} longer than input length {}",
                                input.length
                            )));
                        }
                        (input.length - kernel) / stride + 1
                    }
                    Padding::Same => {
                        if kernel % 2 == 0 || stride != 1 {
                            return Err(Error::Shape(
                                "same padding needs an odd kernel and stride 1".into(),
                            ));
                        }
                        input.length
                    }
                };
                Ok(Shape {
                    channels: out_channels,
                    length,
                })
            }
            LayerSpec::Sigmoid | LayerSpec::Relu => Ok(input),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Dense { inputs, outputs } => write!(f, "dense({inputs},{outputs})"),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let pad = match padding {
                    Padding::Valid => "valid",
                    Padding::Same => "same",
                };
                write!(f, "conv1d({in_channels},{out_channels},{kernel},{stride},{pad})")
            }
            LayerSpec::Sigmoid => f.write_str("sigmoid"),
            LayerSpec::Relu => f.write_str("relu"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Shape(format!("unrecognised layer `{s}`"));
        match s {
            "sigmoid" => return Ok(LayerSpec::Sigmoid),
            "relu" => return Ok(LayerSpec::Relu),
            _ => {}
        }
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest.strip_suffix(')').ok_or_else(bad)?.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<usize> { args.get(i).and_then(|a| a.parse().ok()).ok_or_else(bad) };
        match (name, args.len()) {
            ("dense", 2) => Ok(LayerSpec::Dense {
                inputs: num(0)?,
                outputs: num(1)?,
            }),
            ("conv1d", 5) => Ok(LayerSpec::Conv1d {
                in_channels: num(0)?,
                out_channels: num(1)?,
                kernel: num(2)?,
                stride: num(3)?,
                padding: match args[4] {
                    "valid" => Padding::Valid,
                    "same" => Padding::Same,
                    _ => return Err(bad()),
                },
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<LayerSpec>,
    /// `shapes[0]` is the input; `shapes[i + 1]` is the output of layer `i`.
    shapes: Vec<Shape>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// Cached activations for one forward/backward pass.
#[derive(Debug, Clone)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
    /// Unrolled convolution windows per layer, one row per output position.
    cols: Vec<Vec<f64>>,
    grad_col: Vec<f64>,
}

impl Network {
    /// Network with all parameters zero.
    pub fn new(input_width: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        if input_width == 0 || layers.is_empty() {
            return Err(Error::Shape("network needs an input and at least one layer".into()));
        }
        let mut shapes = vec![Shape::flat(input_width)];
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for layer in &layers {
            let next = layer.output_shape(*shapes.last().unwrap())?;
            shapes.push(next);
            offsets.push(total);
            total += layer.param_count();
        }
        Ok(Network {
            layers,
            shapes,
            offsets,
            params: vec![0.0; total],
        })
    }

    /// Dense hidden layers with ReLU and a sigmoid output layer.
    pub fn mlp(input_width: usize, hidden: &[usize], output_width: usize) -> Result<Self> {
        let mut layers = Vec::new();
        let mut width = input_width;
        for &h in hidden {
            layers.push(LayerSpec::Dense { inputs: width, outputs: h });
            layers.push(LayerSpec::Relu);
            width = h;
        }
        layers.push(LayerSpec::Dense {
            inputs: width,
            outputs: output_width,
        });
        layers.push(LayerSpec::Sigmoid);
        Self::new(input_width, layers)
    }

    /// Fixed-length decoder CNN: a length-3 valid convolution, then
    /// length-3 same-padded convolutions, each followed by ReLU, then a
    /// dense sigmoid output layer.
    pub fn fl_cnn(input_width: usize, kernels: &[usize], output_width: usize) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Shape("CNN needs at least one convolution".into()));
        }
        let mut layers = Vec::new();
        let mut channels = 1;
        for (i, &h) in kernels.iter().enumerate() {
            layers.push(LayerSpec::Conv1d {
                in_channels: channels,
                out_channels: h,
                kernel: 3,
                stride: 1,
                padding: if i == 0 { Padding::Valid } else { Padding::Same },
            });
            layers.push(LayerSpec::Relu);
            channels = h;
        }
        let length = input_width.checked_sub(2).filter(|&l| l > 0).ok_or_else(|| {
            Error::Shape(format!("input width {input_width} too short for a length-3 kernel"))
        })?;
        layers.push(LayerSpec::Dense {
            inputs: channels * length,
            outputs: output_width,
        });
        layers.push(LayerSpec::Sigmoid);
        Self::new(input_width, layers)
    }

    /// Segmentation CNN: valid convolutions of length 4, 5, 5 with the
    /// first three entries of `hidden` as channel counts, dense layers for
    /// the remaining entries, and a dense output of `l_max / 2` boundaries.
    /// Hidden layers are followed by ReLU; the output is linear.
    pub fn vl_cnn(l_max: usize, hidden: &[usize]) -> Result<Self> {
        const KERNELS: [usize; 3] = [4, 5, 5];
        if hidden.len() < KERNELS.len() {
            return Err(Error::Shape("segmentation CNN needs at least three conv widths".into()));
        }
        let mut layers = Vec::new();
        let mut shape = Shape::flat(l_max);
        for (&h, &kernel) in hidden.iter().zip(&KERNELS) {
            let conv = LayerSpec::Conv1d {
                in_channels: shape.channels,
                out_channels: h,
                kernel,
                stride: 1,
                padding: Padding::Valid,
            };
            shape = conv.output_shape(shape)?;
            layers.push(conv);
            layers.push(LayerSpec::Relu);
        }
        let mut width = shape.size();
        for &h in &hidden[KERNELS.len()..] {
            layers.push(LayerSpec::Dense { inputs: width, outputs: h });
            layers.push(LayerSpec::Relu);
            width = h;
        }
        // a rectified output unit can die on the large boundary targets
        layers.push(LayerSpec::Dense {
            inputs: width,
            outputs: l_max / 2,
        });
        Self::new(l_max, layers)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn input_width(&self) -> usize {
        self.shapes[0].size()
    }

    pub fn output_width(&self) -> usize {
        self.shapes.last().unwrap().size()
    }

    pub fn count_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params = params;
        Ok(())
    }

    /// `(weights, biases)` of layer `i`; both empty for activations.
    pub fn layer_params(&self, i: usize) -> (&[f64], &[f64]) {
        let layer = &self.layers[i];
        let start = self.offsets[i];
        let w = layer.weight_count();
        let p = layer.param_count();
        (&self.params[start..start + w], &self.params[start + w..start + p])
    }

    /// Layer list in the checkpoint grammar, e.g. `input=6;dense(6,4);sigmoid`.
    pub fn describe(&self) -> String {
        let mut out = format!("input={}", self.input_width());
        for l in &self.layers {
            out.push(';');
            out.push_str(&l.to_string());
        }
        out
    }

    pub fn from_description(desc: &str) -> Result<Self> {
        let mut parts = desc.trim().split(';');
        let input = parts
            .next()
            .and_then(|p| p.trim().strip_prefix("input="))
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| Error::Shape(format!("layer list must start with `input=<width>`: `{desc}`")))?;
        let layers = parts.map(str::parse).collect::<Result<Vec<LayerSpec>>>()?;
        Self::new(input, layers)
    }

    /// Glorot-uniform weights, zero biases. Convolution fans count the
    /// kernel taps on each side.
    pub fn xavier_init(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, layer) in self.layers.iter().enumerate() {
            let Some((fan_in, fan_out)) = layer.fans() else {
                continue;
            };
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = self.offsets[i];
            let w = layer.weight_count();
            for p in &mut self.params[start..start + w] {
                *p = rng.random_range(-bound..=bound);
            }
            self.params[start + w..start + layer.param_count()].fill(0.0);
        }
    }

    pub fn workspace(&self) -> Workspace {
        let widest = self.shapes.iter().map(Shape::size).max().unwrap_or(0);
        let cols: Vec<Vec<f64>> = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| match *l {
                LayerSpec::Conv1d { in_channels, kernel, .. } => {
                    vec![0.0; self.shapes[i + 1].length * in_channels * kernel]
                }
                _ => Vec::new(),
            })
            .collect();
        let grad_col = vec![0.0; cols.iter().map(Vec::len).max().unwrap_or(0)];
        Workspace {
            acts: self.shapes.iter().map(|s| vec![0.0; s.size()]).collect(),
            grad_a: vec![0.0; widest],
            grad_b: vec![0.0; widest],
            cols,
            grad_col,
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut ws = self.workspace();
        Ok(self.forward_ws(input, &mut ws)?.to_vec())
    }

    /// Forward pass keeping every activation in `ws` for a later
    /// [`Network::backward_ws`].
    pub fn forward_ws<'w>(&self, input: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64]> {
        if input.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_width(),
                input.len()
            )));
        }
        ws.acts[0].copy_from_slice(input);
        for (i, layer) in self.layers.iter().enumerate() {
            let (before, after) = ws.acts.split_at_mut(i + 1);
            let x = &before[i];
            let y = &mut after[0];
            let p = &self.params[self.offsets[i]..self.offsets[i] + layer.param_count()];
            match *layer {
                LayerSpec::Dense { inputs, outputs } => {
                    let (w, b) = p.split_at(inputs * outputs);
                    for (o, yo) in y.iter_mut().enumerate() {
                        let row = &w[o * inputs..(o + 1) * inputs];
                        *yo = b[o] + dot(row, x);
                    }
                }
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let geo = ConvGeometry::new(self.shapes[i], self.shapes[i + 1], kernel, stride, padding);
                    let (w, b) = p.split_at(kernel * in_channels * out_channels);
                    let width = in_channels * kernel;
                    let col = &mut ws.cols[i];
                    geo.unroll(x, in_channels, kernel, col);
                    for o in 0..out_channels {
                        let wo = &w[o * width..(o + 1) * width];
                        for (t, yt) in y[o * geo.out_len..(o + 1) * geo.out_len].iter_mut().enumerate() {
                            *yt = b[o] + dot(wo, &col[t * width..(t + 1) * width]);
                        }
                    }
                }
                LayerSpec::Sigmoid => {
                    for (yo, &xv) in y.iter_mut().zip(x.iter()) {
                        *yo = 1.0 / (1.0 + (-xv).exp());
                    }
                }
                LayerSpec::Relu => {
                    for (yo, &xv) in y.iter_mut().zip(x.iter()) {
                        // NaN passes through so divergence stays visible
                        *yo = if xv < 0.0 { 0.0 } else { xv };
                    }
                }
            }
        }
        Ok(ws.acts.last().unwrap())
    }

    /// Gradient of the loss with respect to every parameter, given the
    /// gradient with respect to the network output.
    pub fn backward(&self, input: &[f64], loss_grad: &[f64]) -> Result<Vec<f64>> {
        let mut ws = self.workspace();
        self.forward_ws(input, &mut ws)?;
        let mut grads = vec![0.0; self.params.len()];
        self.backward_ws(&mut ws, loss_grad, &mut grads)?;
        Ok(grads)
    }

    /// Backpropagates through the activations cached by the last
    /// [`Network::forward_ws`] and adds the parameter gradient into `grads`.
    pub fn backward_ws(&self, ws: &mut Workspace, loss_grad: &[f64], grads: &mut [f64]) -> Result<()> {
        if loss_grad.len() != self.output_width() || grads.len() != self.params.len() {
            return Err(Error::Shape("gradient buffer sizes do not match the network".into()));
        }
        let Workspace {
            acts,
            grad_a,
            grad_b,
            cols,
            grad_col,
        } = ws;
        let (mut gy, mut gx) = (grad_a, grad_b);
        gy[..loss_grad.len()].copy_from_slice(loss_grad);

        for i in (0..self.layers.len()).rev() {
            let layer = self.layers[i];
            let need_gx = i > 0;
            let x = &acts[i];
            let y = &acts[i + 1];
            let in_size = self.shapes[i].size();
            let out_size = self.shapes[i + 1].size();
            let start = self.offsets[i];
            let p = &self.params[start..start + layer.param_count()];
            let g = &mut grads[start..start + layer.param_count()];
            let gyl = &gy[..out_size];
            let gxl = &mut gx[..in_size];
            match layer {
                LayerSpec::Dense { inputs, outputs } => {
                    let (w, _) = p.split_at(inputs * outputs);
                    let (gw, gb) = g.split_at_mut(inputs * outputs);
                    if need_gx {
                        gxl.fill(0.0);
                    }
                    for (o, &go) in gyl.iter().enumerate() {
                        gb[o] += go;
                        if go == 0.0 {
                            continue;
                        }
                        let gw_row = &mut gw[o * inputs..(o + 1) * inputs];
                        for (gwv, &xv) in gw_row.iter_mut().zip(x.iter()) {
                            *gwv += go * xv;
                        }
                        if need_gx {
                            let row = &w[o * inputs..(o + 1) * inputs];
                            for (gxv, &wv) in gxl.iter_mut().zip(row) {
                                *gxv += go * wv;
                            }
                        }
                    }
                }
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let geo = ConvGeometry::new(self.shapes[i], self.shapes[i + 1], kernel, stride, padding);
                    let (w, _) = p.split_at(kernel * in_channels * out_channels);
                    let (gw, gb) = g.split_at_mut(kernel * in_channels * out_channels);
                    let width = in_channels * kernel;
                    let col = &cols[i];
                    let gcol = &mut grad_col[..geo.out_len * width];
                    if need_gx {
                        gcol.fill(0.0);
                    }
                    for o in 0..out_channels {
                        let go = &gyl[o * geo.out_len..(o + 1) * geo.out_len];
                        let wo = &w[o * width..(o + 1) * width];
                        let gwo = &mut gw[o * width..(o + 1) * width];
                        for (t, &gt) in go.iter().enumerate() {
                            gb[o] += gt;
                            if gt == 0.0 {
                                continue;
                            }
                            axpy(gt, &col[t * width..(t + 1) * width], gwo);
                            if need_gx {
                                axpy(gt, wo, &mut gcol[t * width..(t + 1) * width]);
                            }
                        }
                    }
                    if need_gx {
                        gxl.fill(0.0);
                        geo.fold(gcol, in_channels, kernel, gxl);
                    }
                }
                LayerSpec::Sigmoid => {
                    for ((gxv, &gyv), &yv) in gxl.iter_mut().zip(gyl).zip(y.iter()) {
                        *gxv = gyv * yv * (1.0 - yv);
                    }
                }
                LayerSpec::Relu => {
                    for ((gxv, &gyv), &xv) in gxl.iter_mut().zip(gyl).zip(x.iter()) {
                        *gxv = if xv > 0.0 { gyv } else { 0.0 };
                    }
                }
            }
            std::mem::swap(&mut gy, &mut gx);
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler keep independent FMA chains
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for (j, slot) in acc.iter_mut().enumerate() {
            *slot += a[4 * i + j] * b[4 * i + j];
        }
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        sum += a[i] * b[i];
    }
    sum
}

/// `y += a * x`
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

struct ConvGeometry {
    in_len: usize,
    out_len: usize,
    stride: usize,
    pad: usize,
}

impl ConvGeometry {
    fn new(input: Shape, output: Shape, kernel: usize, stride: usize, padding: Padding) -> Self {
        let pad = match padding {
            Padding::Valid => 0,
            Padding::Same => (kernel - 1) / 2,
        };
        ConvGeometry {
            in_len: input.length,
            out_len: output.length,
            stride,
            pad,
        }
    }

    /// Input index read by output position `t` through tap `k`, if inside.
    fn source(&self, t: usize, k: usize) -> Option<usize> {
        (t * self.stride + k).checked_sub(self.pad).filter(|&j| j < self.in_len)
    }

    /// Row `t` of `col` holds the window for output `t`, channel-major
    /// then tap, matching the weight layout. Padding reads as zero.
    fn unroll(&self, x: &[f64], channels: usize, kernel: usize, col: &mut [f64]) {
        let width = channels * kernel;
        for t in 0..self.out_len {
            let row = &mut col[t * width..(t + 1) * width];
            for c in 0..channels {
                let xc = &x[c * self.in_len..(c + 1) * self.in_len];
                for k in 0..kernel {
                    row[c * kernel + k] = self.source(t, k).map_or(0.0, |j| xc[j]);
                }
            }
        }
    }

    /// Adjoint of [`ConvGeometry::unroll`]: scatters window gradients back
    /// onto the input.
    fn fold(&self, gcol: &[f64], channels: usize, kernel: usize, gx: &mut [f64]) {
        let width = channels * kernel;
        for t in 0..self.out_len {
            let row = &gcol[t * width..(t + 1) * width];
            for c in 0..channels {
                for k in 0..kernel {
                    if let Some(j) = self.source(t, k) {
                        gx[c * self.in_len + j] += row[c * kernel + k];
                    }
                }
            }
        }
    }
}
