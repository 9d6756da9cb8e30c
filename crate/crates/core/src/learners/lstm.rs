//! Stacked LSTM view model trained with truncated backpropagation through
//! time and rmsprop.

use super::{check_dim, mse, LearnError, ModelSnapshot, OnlineViewModel, SnapshotBody};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const DEFAULT_BPTT_HORIZON: usize = 30;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dense: usize,
    pub bptt_horizon: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl LstmConfig {
    pub fn new(n_inputs: usize, n_outputs: usize) -> Self {
        Self {
            n_inputs,
            n_outputs,
            hidden: 3,
            layers: 2,
            dense: 50,
            bptt_horizon: DEFAULT_BPTT_HORIZON,
            learning_rate: DEFAULT_LEARNING_RATE,
            decay: 0.9,
            epsilon: 1e-8,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.into()));
        if self.n_inputs == 0 || self.n_outputs == 0 || self.hidden == 0 || self.layers == 0 || self.dense == 0 {
            return bad("all layer sizes must be positive");
        }
        if self.bptt_horizon == 0 {
            return bad("bptt_horizon must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.decay) || !(self.epsilon > 0.0) {
            return bad("rmsprop decay must be in [0, 1) and epsilon positive");
        }
        Ok(())
    }

    /// Shapes of the parameter tensors in storage order: per layer the gate
    /// matrix `4H x (H + input)` and bias `4H x 1`, then the dense layer and
    /// the output head.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let h = self.hidden;
        let mut s = Vec::new();
        for l in 0..self.layers {
            let input = if l == 0 { self.n_inputs } else { h };
            s.push((4 * h, h + input));
            s.push((4 * h, 1));
        }
        s.push((self.dense, h));
        s.push((self.dense, 1));
        s.push((self.n_outputs, self.dense));
        s.push((self.n_outputs, 1));
        s
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for l in 0..self.layers {
            names.push(format!("lstm{l}.weight"));
            names.push(format!("lstm{l}.bias"));
        }
        names.extend(["dense.weight", "dense.bias", "head.weight", "head.bias"].map(String::from));
        names
    }
}

/// Hidden and cell vectors per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmRecurrentState {
    pub h: Vec<DVector<f64>>,
    pub c: Vec<DVector<f64>>,
}

impl LstmRecurrentState {
    pub fn zeros(layers: usize, hidden: usize) -> Self {
        Self {
            h: vec![DVector::zeros(hidden); layers],
            c: vec![DVector::zeros(hidden); layers],
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct CellCache {
    input: DVector<f64>,
    i: DVector<f64>,
    f: DVector<f64>,
    o: DVector<f64>,
    g: DVector<f64>,
    c_prev: DVector<f64>,
    tanh_c: DVector<f64>,
}

fn cell_forward(
    w: &DMatrix<f64>,
    b: &DMatrix<f64>,
    x: &DVector<f64>,
    h_prev: &DVector<f64>,
    c_prev: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, CellCache) {
    let hd = h_prev.len();
    let mut input = DVector::zeros(hd + x.len());
    input.rows_mut(0, hd).copy_from(h_prev);
    input.rows_mut(hd, x.len()).copy_from(x);
    let z = w * &input + b.column(0);
    let i = z.rows(0, hd).map(sigmoid);
    let f = z.rows(hd, hd).map(sigmoid);
    let o = z.rows(2 * hd, hd).map(sigmoid);
    let g = z.rows(3 * hd, hd).map(f64::tanh);
    let c = f.component_mul(c_prev) + i.component_mul(&g);
    let tanh_c = c.map(f64::tanh);
    let h = o.component_mul(&tanh_c);
    let cache = CellCache {
        input,
        i,
        f,
        o,
        g,
        c_prev: c_prev.clone(),
        tanh_c,
    };
    (h, c, cache)
}

/// One step of a single LSTM layer with gate order (input, forget, output,
/// candidate): `c = f*c_prev + i*tanh(.)`, `h = o*tanh(c)`.
pub fn lstm_cell_step(
    w: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    h_prev: &DVector<f64>,
    c_prev: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), LearnError> {
    let hd = h_prev.len();
    if c_prev.len() != hd || w.nrows() != 4 * hd || b.len() != 4 * hd || w.ncols() != hd + x.len() {
        return Err(LearnError::DimensionMismatch {
            expected: w.ncols(),
            actual: hd + x.len(),
        });
    }
    let b = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let (h, c, _) = cell_forward(w, &b, x, h_prev, c_prev);
    Ok((h, c))
}

/// Backward pass through one cell. Returns the gradient with respect to the
/// cell input `[h_prev; x]` and to `c_prev`, accumulating into `dw`, `db`.
fn cell_backward(
    w: &DMatrix<f64>,
    cache: &CellCache,
    dh: &DVector<f64>,
    dc_next: &DVector<f64>,
    dw: &mut DMatrix<f64>,
    db: &mut DMatrix<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let hd = dh.len();
    let d_o = dh.component_mul(&cache.tanh_c);
    let dc = dc_next + dh.component_mul(&cache.o).component_mul(&cache.tanh_c.map(|t| 1.0 - t * t));
    let di = dc.component_mul(&cache.g);
    let dg = dc.component_mul(&cache.i);
    let df = dc.component_mul(&cache.c_prev);
    let dc_prev = dc.component_mul(&cache.f);
    let mut dz = DVector::zeros(4 * hd);
    for k in 0..hd {
        let (i, f, o, g) = (cache.i[k], cache.f[k], cache.o[k], cache.g[k]);
        dz[k] = di[k] * i * (1.0 - i);
        dz[hd + k] = df[k] * f * (1.0 - f);
        dz[2 * hd + k] = d_o[k] * o * (1.0 - o);
        dz[3 * hd + k] = dg[k] * (1.0 - g * g);
    }
    dw.ger(1.0, &dz, &cache.input, 1.0);
    db.column_mut(0).axpy(1.0, &dz, 1.0);
    (w.tr_mul(&dz), dc_prev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    config: LstmConfig,
    params: Vec<DMatrix<f64>>,
    mean_square: Vec<DMatrix<f64>>,
    /// Recurrent state before the first input in `window`.
    start: LstmRecurrentState,
    /// Most recent past inputs, at most `bptt_horizon - 1` of them.
    window: VecDeque<DVector<f64>>,
}

impl Lstm {
    /// Weights uniform in `+-1/sqrt(fan_in)`, biases zero.
    pub fn new(config: LstmConfig) -> Result<Self, LearnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = config
            .shapes()
            .into_iter()
            .map(|(r, c)| {
                if c == 1 {
                    DMatrix::zeros(r, 1)
                } else {
                    let bound = 1.0 / (c as f64).sqrt();
                    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-bound..=bound))
                }
            })
            .collect();
        Ok(Self::with_params(config, params))
    }

    /// Every parameter zero; the output is identically zero.
    pub fn zeroed(config: LstmConfig) -> Result<Self, LearnError> {
        config.validate()?;
        let params = config.shapes().into_iter().map(|(r, c)| DMatrix::zeros(r, c)).collect();
        Ok(Self::with_params(config, params))
    }

    fn with_params(config: LstmConfig, params: Vec<DMatrix<f64>>) -> Self {
        let mean_square = params.iter().map(|p| DMatrix::zeros(p.nrows(), p.ncols())).collect();
        let start = LstmRecurrentState::zeros(config.layers, config.hidden);
        Self {
            config,
            params,
            mean_square,
            start,
            window: VecDeque::new(),
        }
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    pub fn params(&self) -> &[DMatrix<f64>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.params
    }

    /// Recurrent state after the inputs seen so far.
    pub fn recurrent_state(&self) -> LstmRecurrentState {
        let mut state = self.start.clone();
        for x in &self.window {
            state = self.step_state(&state, x);
        }
        state
    }

    /// Drops the rmsprop accumulators, keeping weights and recurrent state.
    pub fn reset_optimizer(&mut self) {
        for m in &mut self.mean_square {
            m.fill(0.0);
        }
    }

    fn step_state(&self, state: &LstmRecurrentState, x: &DVector<f64>) -> LstmRecurrentState {
        let mut next = state.clone();
        let mut input = x.clone();
        for l in 0..self.config.layers {
            let (h, c, _) = cell_forward(&self.params[2 * l], &self.params[2 * l + 1], &input, &state.h[l], &state.c[l]);
            input = h.clone();
            next.h[l] = h;
            next.c[l] = c;
        }
        next
    }

    fn head_index(&self) -> usize {
        2 * self.config.layers
    }

    fn sequence<'a>(&'a self, x: &'a DVector<f64>) -> Vec<&'a DVector<f64>> {
        self.window.iter().chain(std::iter::once(x)).collect()
    }

    /// Forward pass over the stored window followed by `x`.
    fn forward(&self, xs: &[&DVector<f64>]) -> (DVector<f64>, Vec<Vec<CellCache>>, DVector<f64>, DVector<f64>) {
        let layers = self.config.layers;
        let mut h = self.start.h.clone();
        let mut c = self.start.c.clone();
        let mut caches: Vec<Vec<CellCache>> = (0..layers).map(|_| Vec::with_capacity(xs.len())).collect();
        for x in xs {
            let mut input = (*x).clone();
            for l in 0..layers {
                let (hn, cn, cache) = cell_forward(&self.params[2 * l], &self.params[2 * l + 1], &input, &h[l], &c[l]);
                caches[l].push(cache);
                input = hn.clone();
                h[l] = hn;
                c[l] = cn;
            }
        }
        let k = self.head_index();
        let top = &h[layers - 1];
        let a = (&self.params[k] * top + self.params[k + 1].column(0)).map(f64::tanh);
        let y = &self.params[k + 2] * &a + self.params[k + 3].column(0);
        (y, caches, a, top.clone())
    }

    /// Mean squared error of the prediction for `x` against `target`.
    pub fn loss(&self, x: &DVector<f64>, target: &DVector<f64>) -> Result<f64, LearnError> {
        Ok(mse(&self.predict(x)?, target))
    }

    /// Loss and its gradient with respect to every parameter tensor,
    /// backpropagated through the stored window.
    pub fn loss_and_gradient(
        &self,
        x: &DVector<f64>,
        target: &DVector<f64>,
    ) -> Result<(f64, Vec<DMatrix<f64>>), LearnError> {
        check_dim(x, self.config.n_inputs)?;
        check_dim(target, self.config.n_outputs)?;
        let xs = self.sequence(x);
        let (y, caches, a, top) = self.forward(&xs);
        let loss = mse(&y, target);
        let mut grads: Vec<DMatrix<f64>> = self.params.iter().map(|p| DMatrix::zeros(p.nrows(), p.ncols())).collect();

        let k = self.head_index();
        let dy = (&y - target) * (2.0 / y.len() as f64);
        grads[k + 2].ger(1.0, &dy, &a, 0.0);
        grads[k + 3].column_mut(0).copy_from(&dy);
        let da = self.params[k + 2].tr_mul(&dy);
        let dza = da.component_mul(&a.map(|v| 1.0 - v * v));
        grads[k].ger(1.0, &dza, &top, 0.0);
        grads[k + 1].column_mut(0).copy_from(&dza);
        let dtop = self.params[k].tr_mul(&dza);

        let steps = xs.len();
        let hd = self.config.hidden;
        // Gradient arriving at each step's hidden output from the layer above.
        let mut from_above: Vec<DVector<f64>> = vec![DVector::zeros(hd); steps];
        from_above[steps - 1] = dtop;
        for l in (0..self.config.layers).rev() {
            let (gw, rest) = grads.split_at_mut(2 * l + 1);
            let dw = &mut gw[2 * l];
            let db = &mut rest[0];
            let mut dh_rec = DVector::zeros(hd);
            let mut dc = DVector::zeros(hd);
            let mut below = vec![DVector::zeros(0); steps];
            for s in (0..steps).rev() {
                let dh = &from_above[s] + &dh_rec;
                let (dinput, dc_prev) = cell_backward(&self.params[2 * l], &caches[l][s], &dh, &dc, dw, db);
                dh_rec = dinput.rows(0, hd).into_owned();
                below[s] = dinput.rows(hd, dinput.len() - hd).into_owned();
                dc = dc_prev;
            }
            from_above = below;
        }
        Ok((loss, grads))
    }

    fn push_input(&mut self, x: &DVector<f64>) {
        self.window.push_back(x.clone());
        while self.window.len() >= self.config.bptt_horizon {
            let oldest = self.window.pop_front().expect("non-empty window");
            self.start = self.step_state(&self.start, &oldest);
        }
    }
}

impl OnlineViewModel for Lstm {
    fn n_inputs(&self) -> usize {
        self.config.n_inputs
    }

    fn n_outputs(&self) -> usize {
        self.config.n_outputs
    }

    fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>, LearnError> {
        check_dim(x, self.config.n_inputs)?;
        Ok(self.forward(&self.sequence(x)).0)
    }

    fn update(&mut self, x: &DVector<f64>, target: &DVector<f64>) -> Result<f64, LearnError> {
        if target.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFiniteTarget);
        }
        let (loss, grads) = self.loss_and_gradient(x, target)?;
        if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(LearnError::NonFiniteLoss);
        }
        let (lr, rho, eps) = (self.config.learning_rate, self.config.decay, self.config.epsilon);
        for ((p, ms), g) in self.params.iter_mut().zip(&mut self.mean_square).zip(&grads) {
            for ((pv, mv), gv) in p.iter_mut().zip(ms.iter_mut()).zip(g.iter()) {
                *mv = rho * *mv + (1.0 - rho) * gv * gv;
                *pv -= lr * gv / (mv.sqrt() + eps);
            }
        }
        self.push_input(x);
        Ok(loss)
    }

    fn reset(&mut self) {
        *self = Lstm::new(self.config.clone()).expect("config validated at construction");
    }

    fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot::new(SnapshotBody::Lstm(Box::new(self.clone())))
    }

    fn restore(&mut self, snap: &ModelSnapshot) -> Result<(), LearnError> {
        match &snap.model {
            SnapshotBody::Lstm(m) if m.config.n_inputs == self.config.n_inputs && m.config.n_outputs == self.config.n_outputs => {
                *self = (**m).clone();
                Ok(())
            }
            _ => Err(LearnError::SnapshotMismatch("expected an LSTM of the same shape".into())),
        }
    }
}
