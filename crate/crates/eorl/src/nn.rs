//! Minimal feedforward Q-network with manual backpropagation and SGD.
//!
//! The architecture is fixed-shape (ReLU hidden layers, linear output) and
//! the regression loss only flows through the output of the action actually
//! taken, so the backward pass exploits that sparsity. Inner loops are
//! written as contiguous scaled-accumulate passes so they vectorise without
//! changing summation order; results are bit-deterministic for a given seed.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::replay::Transition;
use crate::rng::Rng;

/// Flat list of all weights and biases of one network, ordered layer by
/// layer: row-major weights (one row per output unit), then biases.
pub type ParameterVector = Vec<f64>;

/// Shape of an MLP: ReLU hidden layers, linear output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
}

impl MlpSpec {
    pub fn new(input_size: usize, hidden_sizes: Vec<usize>, output_size: usize) -> Result<Self> {
        if input_size == 0 || output_size == 0 || hidden_sizes.iter().any(|&h| h == 0) {
            return Err(Error::Config("all layer sizes must be >= 1".into()));
        }
        Ok(Self {
            input_size,
            hidden_sizes,
            output_size,
        })
    }

    /// (fan_in, fan_out) of every layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_sizes.len() + 1);
        let mut prev = self.input_size;
        for &h in &self.hidden_sizes {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_size));
        dims
    }

    /// Total parameter count P (weights + biases over all layers).
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|(i, o)| i * o + o)
            .sum()
    }
}

#[derive(Debug, Clone)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major weights, one contiguous row of `in_dim` per output unit.
    w: Vec<f64>,
    /// Transposed copy (one contiguous row of `out_dim` per input), kept in
    /// sync with `w`; the forward pass accumulates along it.
    wt: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            w: vec![0.0; in_dim * out_dim],
            wt: vec![0.0; in_dim * out_dim],
            b: vec![0.0; out_dim],
        }
    }

    fn sync_wt(&mut self) {
        for u in 0..self.out_dim {
            for k in 0..self.in_dim {
                self.wt[k * self.out_dim + u] = self.w[u * self.in_dim + k];
            }
        }
    }

    /// out = b + x * W^T, accumulating along contiguous transposed rows.
    fn affine(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
        for (k, &xk) in x.iter().enumerate() {
            let row = &self.wt[k * self.out_dim..(k + 1) * self.out_dim];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xk * w;
            }
        }
    }

    fn row(&self, u: usize) -> &[f64] {
        &self.w[u * self.in_dim..(u + 1) * self.in_dim]
    }
}

/// MLP Q-value approximator: state in, one Q-value per action out.
#[derive(Debug, Clone)]
pub struct QNetwork {
    spec: MlpSpec,
    layers: Vec<Layer>,
}

/// Reusable buffers for training steps. Allocate once per training loop via
/// [`QNetwork::new_scratch`] and pass to the `*_with` methods; the hot path
/// then runs allocation-free.
pub struct TrainScratch {
    /// Hidden activations, one vec per hidden layer.
    h: Vec<Vec<f64>>,
    /// Deltas per hidden layer.
    d: Vec<Vec<f64>>,
    /// Transposed weight grads for hidden layers (fan_in x fan_out).
    gwt: Vec<Vec<f64>>,
    /// Bias grads per hidden layer.
    gb: Vec<Vec<f64>>,
    /// Row-major weight grad for the output layer.
    gw_out: Vec<f64>,
    gb_out: Vec<f64>,
    /// Pre-step residuals `Q(s, a) - G` of the last processed batch.
    residuals: Vec<f64>,
}

impl TrainScratch {
    fn new(net: &QNetwork) -> Self {
        let n_hidden = net.layers.len() - 1;
        let out = net.layers.last().expect("at least one layer");
        TrainScratch {
            h: (0..n_hidden).map(|i| vec![0.0; net.layers[i].out_dim]).collect(),
            d: (0..n_hidden).map(|i| vec![0.0; net.layers[i].out_dim]).collect(),
            gwt: (0..n_hidden)
                .map(|i| vec![0.0; net.layers[i].in_dim * net.layers[i].out_dim])
                .collect(),
            gb: (0..n_hidden).map(|i| vec![0.0; net.layers[i].out_dim]).collect(),
            gw_out: vec![0.0; out.in_dim * out.out_dim],
            gb_out: vec![0.0; out.out_dim],
            residuals: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for v in self.gwt.iter_mut().chain(self.gb.iter_mut()) {
            v.iter_mut().for_each(|g| *g = 0.0);
        }
        self.gw_out.iter_mut().for_each(|g| *g = 0.0);
        self.gb_out.iter_mut().for_each(|g| *g = 0.0);
        self.residuals.clear();
    }

    /// Pre-step residuals of the most recent batch.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

/// Weights drawn uniformly from +-1/sqrt(fan_in), biases zero. The draw
/// order equals the flatten order, so a seed pins the exact parameters.
pub fn init_network(spec: &MlpSpec, rng: &mut Rng) -> QNetwork {
    let mut layers = Vec::new();
    for (in_dim, out_dim) in spec.layer_dims() {
        let mut layer = Layer::zeros(in_dim, out_dim);
        let limit = 1.0 / (in_dim as f64).sqrt();
        for w in layer.w.iter_mut() {
            *w = rng.random_range(-limit..limit);
        }
        layer.sync_wt();
        layers.push(layer);
    }
    QNetwork {
        spec: spec.clone(),
        layers,
    }
}

impl QNetwork {
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count()
    }

    /// Build a network directly from a flat parameter vector.
    pub fn from_params(spec: &MlpSpec, params: &[f64]) -> Result<Self> {
        let mut net = QNetwork {
            spec: spec.clone(),
            layers: spec
                .layer_dims()
                .into_iter()
                .map(|(i, o)| Layer::zeros(i, o))
                .collect(),
        };
        net.load_params(params)?;
        Ok(net)
    }

    /// Q-values for a single state.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.spec.input_size {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_size,
                got: state.len(),
            });
        }
        let mut cur = state.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.out_dim];
            layer.affine(&cur, &mut next);
            if !std::ptr::eq(layer, self.layers.last().unwrap()) {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Forward pass that also exposes the hidden activations (tests / probes).
    pub fn forward_trace(&self, state: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        if state.len() != self.spec.input_size {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_size,
                got: state.len(),
            });
        }
        let mut hidden = Vec::new();
        let mut cur = state.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            layer.affine(&cur, &mut next);
            if li < last {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
                hidden.push(next.clone());
            }
            cur = next;
        }
        Ok((hidden, cur))
    }

    /// Flatten all parameters (layer-major, row-major weights, then biases).
    pub fn flatten_params(&self) -> ParameterVector {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    /// Load a flat parameter vector; must have exactly P entries.
    pub fn load_params(&mut self, params: &[f64]) -> Result<()> {
        let p = self.param_count();
        if params.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: params.len(),
            });
        }
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.in_dim * layer.out_dim;
            layer.w.copy_from_slice(&params[off..off + nw]);
            off += nw;
            layer.b.copy_from_slice(&params[off..off + layer.out_dim]);
            off += layer.out_dim;
            layer.sync_wt();
        }
        Ok(())
    }

    /// Reusable training buffers matching this architecture.
    pub fn new_scratch(&self) -> TrainScratch {
        TrainScratch::new(self)
    }

    /// One SGD step on the mean squared regression error of the selected
    /// actions. Returns the pre-step loss.
    pub fn train_batch(&mut self, batch: &[&Transition], learning_rate: f64) -> Result<f64> {
        let mut scratch = self.new_scratch();
        self.train_batch_with(batch, learning_rate, &mut scratch)
    }

    /// Allocation-free variant of [`train_batch`](Self::train_batch).
    pub fn train_batch_with(
        &mut self,
        batch: &[&Transition],
        learning_rate: f64,
        scratch: &mut TrainScratch,
    ) -> Result<f64> {
        scratch.reset();
        let loss = self.accumulate(batch, None, scratch)?;
        self.apply_step(scratch, learning_rate);
        Ok(loss)
    }

    /// Weighted variant used by prioritized replay: the loss is the mean of
    /// `w_i * (Q(s_i, a_i) - G_i)^2` and the per-sample pre-step residuals
    /// `Q(s_i, a_i) - G_i` are returned for priority refreshes.
    pub fn train_batch_weighted(
        &mut self,
        batch: &[&Transition],
        weights: &[f64],
        learning_rate: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let mut scratch = self.new_scratch();
        let loss = self.train_batch_weighted_with(batch, weights, learning_rate, &mut scratch)?;
        Ok((loss, scratch.residuals.clone()))
    }

    /// Allocation-free weighted step; residuals stay in the scratch.
    pub fn train_batch_weighted_with(
        &mut self,
        batch: &[&Transition],
        weights: &[f64],
        learning_rate: f64,
        scratch: &mut TrainScratch,
    ) -> Result<f64> {
        if weights.len() != batch.len() {
            return Err(Error::DimensionMismatch {
                expected: batch.len(),
                got: weights.len(),
            });
        }
        scratch.reset();
        let loss = self.accumulate(batch, Some(weights), scratch)?;
        self.apply_step(scratch, learning_rate);
        Ok(loss)
    }

    /// Gradient of the batch loss with respect to the flat parameter vector,
    /// without applying a step. Shares the backward pass with training.
    pub fn grad_batch(&self, batch: &[&Transition]) -> Result<(f64, Vec<f64>)> {
        let mut scratch = self.new_scratch();
        scratch.reset();
        let loss = self.accumulate(batch, None, &mut scratch)?;
        let mut grad = Vec::with_capacity(self.param_count());
        let last = self.layers.len() - 1;
        for li in 0..self.layers.len() {
            let layer = &self.layers[li];
            if li < last {
                for u in 0..layer.out_dim {
                    for k in 0..layer.in_dim {
                        grad.push(scratch.gwt[li][k * layer.out_dim + u]);
                    }
                }
                grad.extend_from_slice(&scratch.gb[li]);
            } else {
                grad.extend_from_slice(&scratch.gw_out);
                grad.extend_from_slice(&scratch.gb_out);
            }
        }
        Ok((loss, grad))
    }

    /// Batch loss without gradient or update.
    pub fn batch_loss(&self, batch: &[&Transition]) -> Result<f64> {
        let mut loss = 0.0;
        for t in batch {
            let q = self.forward(&t.state)?;
            let d = q[t.action] - t.mc_return;
            loss += d * d;
        }
        Ok(loss / batch.len() as f64)
    }

    /// Forward + backward over the batch, accumulating gradients in
    /// `scratch`. Returns the pre-step mean loss.
    fn accumulate(
        &self,
        batch: &[&Transition],
        weights: Option<&[f64]>,
        scratch: &mut TrainScratch,
    ) -> Result<f64> {
        assert!(!batch.is_empty(), "train_batch requires a non-empty batch");
        for t in batch {
            if t.state.len() != self.spec.input_size {
                return Err(Error::DimensionMismatch {
                    expected: self.spec.input_size,
                    got: t.state.len(),
                });
            }
            if t.action >= self.spec.output_size {
                return Err(Error::ActionOutOfRange {
                    action: t.action,
                    n_actions: self.spec.output_size,
                });
            }
        }

        // The benchmark architecture gets a compile-time-width kernel; it
        // mirrors the generic loop order exactly, so both produce identical
        // bits. Everything else takes the generic path.
        let loss = if self.spec.hidden_sizes == [32, 8] {
            self.accumulate_two_hidden::<32, 8>(batch, weights, scratch)
        } else {
            self.accumulate_generic(batch, weights, scratch)
        };

        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "training loss".into(),
            });
        }
        let grads_finite = scratch.gw_out.iter().all(|g| g.is_finite())
            && scratch.gwt.iter().flatten().all(|g| g.is_finite());
        if !grads_finite {
            return Err(Error::NonFinite {
                what: "gradient".into(),
            });
        }
        Ok(loss)
    }

    fn accumulate_generic(
        &self,
        batch: &[&Transition],
        weights: Option<&[f64]>,
        scratch: &mut TrainScratch,
    ) -> f64 {
        let n_hidden = self.layers.len() - 1;
        let out_layer = &self.layers[n_hidden];
        let inv_b = 1.0 / batch.len() as f64;
        let mut loss = 0.0;

        for (bi, t) in batch.iter().enumerate() {
            // Forward through the hidden stack.
            for li in 0..n_hidden {
                let layer = &self.layers[li];
                let (done, rest) = scratch.h.split_at_mut(li);
                let input: &[f64] = if li == 0 { &t.state } else { &done[li - 1] };
                let h = &mut rest[0];
                layer.affine(input, h);
                for v in h.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            let h_last: &[f64] = if n_hidden == 0 {
                &t.state
            } else {
                &scratch.h[n_hidden - 1]
            };

            // Only the selected action's output carries gradient.
            let a = t.action;
            let mut q = out_layer.b[a];
            for (w, h) in out_layer.row(a).iter().zip(h_last) {
                q += w * h;
            }
            let delta = q - t.mc_return;
            let wgt = weights.map_or(1.0, |w| w[bi]);
            loss += wgt * delta * delta;
            scratch.residuals.push(delta);
            let scale = 2.0 * wgt * delta * inv_b;

            scratch.gb_out[a] += scale;
            let grow = &mut scratch.gw_out[a * out_layer.in_dim..(a + 1) * out_layer.in_dim];
            for (g, &h) in grow.iter_mut().zip(h_last) {
                *g += scale * h;
            }
            if n_hidden == 0 {
                continue;
            }

            // Delta into the last hidden layer, masked by its ReLU.
            {
                let d = &mut scratch.d[n_hidden - 1];
                let h = &scratch.h[n_hidden - 1];
                for ((d, &w), &h) in d.iter_mut().zip(out_layer.row(a)).zip(h) {
                    *d = if h > 0.0 { scale * w } else { 0.0 };
                }
            }

            // Walk the hidden stack backwards.
            for li in (0..n_hidden).rev() {
                let layer = &self.layers[li];
                let input: &[f64] = if li == 0 { &t.state } else { &scratch.h[li - 1] };
                for (gb, &d) in scratch.gb[li].iter_mut().zip(&scratch.d[li]) {
                    *gb += d;
                }
                let gwt = &mut scratch.gwt[li];
                for (k, &x) in input.iter().enumerate() {
                    let row = &mut gwt[k * layer.out_dim..(k + 1) * layer.out_dim];
                    for (g, &d) in row.iter_mut().zip(&scratch.d[li]) {
                        *g += x * d;
                    }
                }
                if li > 0 {
                    let (dprev_part, dcur_part) = scratch.d.split_at_mut(li);
                    let dprev = &mut dprev_part[li - 1];
                    let dcur = &dcur_part[0];
                    dprev.iter_mut().for_each(|v| *v = 0.0);
                    for (u, &d) in dcur.iter().enumerate() {
                        if d != 0.0 {
                            for (p, &w) in dprev.iter_mut().zip(layer.row(u)) {
                                *p += d * w;
                            }
                        }
                    }
                    let hprev = &scratch.h[li - 1];
                    for (p, &h) in dprev.iter_mut().zip(hprev) {
                        if h <= 0.0 {
                            *p = 0.0;
                        }
                    }
                }
            }
        }

        loss * inv_b
    }

    /// Hot-path kernel for two-hidden-layer networks with compile-time
    /// widths: same arithmetic and order as the generic path, but every
    /// inner loop fully unrolls.
    fn accumulate_two_hidden<const H1: usize, const H2: usize>(
        &self,
        batch: &[&Transition],
        weights: Option<&[f64]>,
        scratch: &mut TrainScratch,
    ) -> f64 {
        #[inline(always)]
        fn arr<const N: usize>(s: &[f64]) -> &[f64; N] {
            s.try_into().expect("slice length is checked by the caller")
        }
        #[inline(always)]
        fn arr_mut<const N: usize>(s: &mut [f64]) -> &mut [f64; N] {
            s.try_into().expect("slice length is checked by the caller")
        }

        let (l1, l2, l3) = (&self.layers[0], &self.layers[1], &self.layers[2]);
        let inv_b = 1.0 / batch.len() as f64;
        let mut loss = 0.0;

        for (bi, t) in batch.iter().enumerate() {
            let mut h1 = [0.0f64; H1];
            h1.copy_from_slice(&l1.b);
            for (k, &x) in t.state.iter().enumerate() {
                let row = arr::<H1>(&l1.wt[k * H1..(k + 1) * H1]);
                for i in 0..H1 {
                    h1[i] += x * row[i];
                }
            }
            for v in h1.iter_mut() {
                *v = v.max(0.0);
            }

            let mut h2 = [0.0f64; H2];
            h2.copy_from_slice(&l2.b);
            for (k, &x) in h1.iter().enumerate() {
                let row = arr::<H2>(&l2.wt[k * H2..(k + 1) * H2]);
                for i in 0..H2 {
                    h2[i] += x * row[i];
                }
            }
            for v in h2.iter_mut() {
                *v = v.max(0.0);
            }

            let a = t.action;
            let row_a = arr::<H2>(&l3.w[a * H2..(a + 1) * H2]);
            let mut q = l3.b[a];
            for i in 0..H2 {
                q += row_a[i] * h2[i];
            }
            let delta = q - t.mc_return;
            let wgt = weights.map_or(1.0, |w| w[bi]);
            loss += wgt * delta * delta;
            scratch.residuals.push(delta);
            let scale = 2.0 * wgt * delta * inv_b;

            scratch.gb_out[a] += scale;
            let grow = arr_mut::<H2>(&mut scratch.gw_out[a * H2..(a + 1) * H2]);
            for i in 0..H2 {
                grow[i] += scale * h2[i];
            }

            let mut d2 = [0.0f64; H2];
            for i in 0..H2 {
                d2[i] = if h2[i] > 0.0 { scale * row_a[i] } else { 0.0 };
            }

            for (g, &d) in scratch.gb[1].iter_mut().zip(&d2) {
                *g += d;
            }
            let gwt2 = &mut scratch.gwt[1];
            for (k, &x) in h1.iter().enumerate() {
                let row = arr_mut::<H2>(&mut gwt2[k * H2..(k + 1) * H2]);
                for i in 0..H2 {
                    row[i] += x * d2[i];
                }
            }

            let mut d1 = [0.0f64; H1];
            for (u, &d) in d2.iter().enumerate() {
                if d != 0.0 {
                    let row = arr::<H1>(&l2.w[u * H1..(u + 1) * H1]);
                    for i in 0..H1 {
                        d1[i] += d * row[i];
                    }
                }
            }
            for i in 0..H1 {
                if h1[i] <= 0.0 {
                    d1[i] = 0.0;
                }
            }

            for (g, &d) in scratch.gb[0].iter_mut().zip(&d1) {
                *g += d;
            }
            let gwt1 = &mut scratch.gwt[0];
            for (k, &x) in t.state.iter().enumerate() {
                let row = arr_mut::<H1>(&mut gwt1[k * H1..(k + 1) * H1]);
                for i in 0..H1 {
                    row[i] += x * d1[i];
                }
            }
        }

        loss * inv_b
    }

    fn apply_step(&mut self, scratch: &TrainScratch, lr: f64) {
        let n_hidden = self.layers.len() - 1;
        for li in 0..n_hidden {
            let layer = &mut self.layers[li];
            let gwt = &scratch.gwt[li];
            for u in 0..layer.out_dim {
                for k in 0..layer.in_dim {
                    layer.w[u * layer.in_dim + k] -= lr * gwt[k * layer.out_dim + u];
                }
            }
            for (b, &g) in layer.b.iter_mut().zip(&scratch.gb[li]) {
                *b -= lr * g;
            }
            layer.sync_wt();
        }
        let out = &mut self.layers[n_hidden];
        for (w, &g) in out.w.iter_mut().zip(&scratch.gw_out) {
            *w -= lr * g;
        }
        for (b, &g) in out.b.iter_mut().zip(&scratch.gb_out) {
            *b -= lr * g;
        }
        out.sync_wt();
    }
}
