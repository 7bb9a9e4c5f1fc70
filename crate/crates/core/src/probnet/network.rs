//! Stacked LSTM with a distribution head, trained by exact reverse-mode
//! gradients through the unrolled window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{cell_backward, cell_forward, dot, HiddenState, LayerGrads, LayerWeights};
use super::student_t::{gaussian_nll_grad, nll_grad, DistParams};
use crate::error::{Error, Result};
use crate::panel::{calendar_features, TrainingWindow, CALENDAR_DIM};

/// Lower bound added to the softplus scale output.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadType {
    StudentT,
    Gaussian,
}

impl HeadType {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeadType::StudentT => "student_t",
            HeadType::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "student_t" => Some(HeadType::StudentT),
            "gaussian" => Some(HeadType::Gaussian),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    pub hidden: usize,
    pub layers: usize,
    pub head: HeadType,
    /// Append hour-of-day / day-of-week one-hot covariates to every input.
    pub calendar: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: 25,
            layers: 2,
            head: HeadType::StudentT,
            calendar: false,
        }
    }
}

impl NetConfig {
    pub fn input_dim(&self) -> usize {
        1 + if self.calendar { CALENDAR_DIM } else { 0 }
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim()
        } else {
            self.hidden
        }
    }

    /// Named tensor shapes in storage order.
    pub fn param_shapes(&self) -> Vec<(String, usize, usize)> {
        let g = 4 * self.hidden;
        let mut v = Vec::new();
        for l in 0..self.layers {
            v.push((format!("lstm{l}.w_input"), g, self.layer_input(l)));
            v.push((format!("lstm{l}.w_recurrent"), g, self.hidden));
            v.push((format!("lstm{l}.bias"), g, 1));
        }
        v.push(("head.weight".into(), 3, self.hidden));
        v.push(("head.bias".into(), 3, 1));
        v
    }

    pub fn num_params(&self) -> usize {
        self.param_shapes().iter().map(|(_, r, c)| r * c).sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerOffsets {
    w_input: usize,
    w_recurrent: usize,
    bias: usize,
    end: usize,
}

/// All learnable parameters of the global network, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    cfg: NetConfig,
    data: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(cfg: NetConfig) -> Self {
        Self {
            data: vec![0.0; cfg.num_params()],
            cfg,
        }
    }

    /// Uniform `±1/sqrt(hidden)` initialisation with forget-gate bias 1.
    pub fn init(cfg: NetConfig, seed: u64) -> Self {
        let mut p = Self::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1.0 / (cfg.hidden as f64).sqrt();
        for v in p.data.iter_mut() {
            *v = rng.random_range(-k..k);
        }
        let hd = cfg.hidden;
        for l in 0..cfg.layers {
            let off = p.offsets(l);
            p.data[off.bias + hd..off.bias + 2 * hd]
                .iter_mut()
                .for_each(|b| *b = 1.0);
        }
        p
    }

    pub fn from_flat(cfg: NetConfig, data: Vec<f64>) -> Result<Self> {
        if data.len() != cfg.num_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                cfg.num_params(),
                data.len()
            )));
        }
        Ok(Self { cfg, data })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn offsets(&self, layer: usize) -> LayerOffsets {
        let g = 4 * self.cfg.hidden;
        let mut start = 0;
        for l in 0..layer {
            start += g * (self.cfg.layer_input(l) + self.cfg.hidden + 1);
        }
        let w_input = start;
        let w_recurrent = w_input + g * self.cfg.layer_input(layer);
        let bias = w_recurrent + g * self.cfg.hidden;
        LayerOffsets {
            w_input,
            w_recurrent,
            bias,
            end: bias + g,
        }
    }

    fn head_offset(&self) -> usize {
        self.offsets(self.cfg.layers - 1).end
    }

    pub fn layer(&self, l: usize) -> LayerWeights<'_> {
        let off = self.offsets(l);
        LayerWeights {
            input_dim: self.cfg.layer_input(l),
            hidden: self.cfg.hidden,
            w_input: &self.data[off.w_input..off.w_recurrent],
            w_recurrent: &self.data[off.w_recurrent..off.bias],
            bias: &self.data[off.bias..off.end],
        }
    }

    /// `(weight 3 x hidden, bias 3)` of the distribution head.
    pub fn head(&self) -> (&[f64], &[f64]) {
        let o = self.head_offset();
        let hd = self.cfg.hidden;
        (&self.data[o..o + 3 * hd], &self.data[o + 3 * hd..o + 3 * hd + 3])
    }

    pub fn head_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let o = self.head_offset();
        let hd = self.cfg.hidden;
        let (w, b) = self.data[o..o + 3 * hd + 3].split_at_mut(3 * hd);
        (w, b)
    }

    /// Network input for a step: previous scaled value plus optional calendar covariates.
    pub(crate) fn fill_input(&self, prev_scaled: f64, time: i64, utc_offset: i32, out: &mut [f64]) {
        out[0] = prev_scaled;
        if self.cfg.calendar {
            calendar_features(time, utc_offset, &mut out[1..]);
        }
    }

    /// Advances the state by one input and returns the predictive distribution.
    pub fn step(&self, x: &[f64], state: &mut HiddenState, scratch: &mut StepScratch) -> DistParams {
        for l in 0..self.cfg.layers {
            let w = self.layer(l);
            let (below, rest) = state.layers.split_at_mut(l);
            let st = &mut rest[0];
            let input: &[f64] = if l == 0 { x } else { &below[l - 1].h };
            scratch.h_prev.copy_from_slice(&st.h);
            scratch.c_prev.copy_from_slice(&st.c);
            cell_forward(
                input,
                &scratch.h_prev,
                &scratch.c_prev,
                w,
                &mut scratch.gates,
                &mut st.c,
                &mut scratch.tc,
                &mut st.h,
            );
        }
        let (hw, hb) = self.head();
        let top = &state.layers[self.cfg.layers - 1].h;
        distribution_head(top, hw, hb).0
    }

    pub fn zero_state(&self) -> HiddenState {
        HiddenState::zeros(self.cfg.layers, self.cfg.hidden)
    }
}

/// Reusable buffers for [`NetworkParams::step`].
#[derive(Debug, Clone)]
pub struct StepScratch {
    gates: Vec<f64>,
    tc: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
}

impl StepScratch {
    pub fn new(cfg: &NetConfig) -> Self {
        Self {
            gates: vec![0.0; 4 * cfg.hidden],
            tc: vec![0.0; cfg.hidden],
            h_prev: vec![0.0; cfg.hidden],
            c_prev: vec![0.0; cfg.hidden],
        }
    }
}

#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Maps the top hidden vector to `(mu, sigma, nu)` and the raw head outputs.
///
/// `sigma = softplus(.) + 1e-6` and `nu = 2 + softplus(.)`, so both stay in range
/// for any finite input.
pub fn distribution_head(h: &[f64], weight: &[f64], bias: &[f64]) -> (DistParams, [f64; 3]) {
    let hd = h.len();
    let raw = [
        bias[0] + dot(&weight[..hd], h),
        bias[1] + dot(&weight[hd..2 * hd], h),
        bias[2] + dot(&weight[2 * hd..3 * hd], h),
    ];
    (
        DistParams {
            mu: raw[0],
            sigma: softplus(raw[1]) + SIGMA_FLOOR,
            nu: 2.0 + softplus(raw[2]),
        },
        raw,
    )
}

/// Intermediates of one unrolled window, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    steps: usize,
    context_len: usize,
    inputs: Vec<f64>,
    /// Per layer: activated gates (`steps x 4H`).
    gates: Vec<Vec<f64>>,
    /// Per layer: cell states (`steps x H`).
    cells: Vec<Vec<f64>>,
    tanh_cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    /// Loss gradient w.r.t. raw head outputs for each step (zero on context steps).
    d_raw: Vec<[f64; 3]>,
    /// Predicted distribution at every step.
    pub dists: Vec<DistParams>,
}

impl Tape {
    /// Distributions predicted for the target positions.
    pub fn target_dists(&self) -> &[DistParams] {
        &self.dists[self.context_len - 1..]
    }
}

/// Teacher-forced unroll over `context ++ target`.
///
/// Step `k` feeds the scaled value at window position `k-1` and predicts
/// position `k`; the loss is the mean NLL over the target positions, in scaled units.
pub fn forward_loss(window: &TrainingWindow, params: &NetworkParams) -> Result<(f64, Tape)> {
    let cfg = *params.config();
    let c_len = window.context.len();
    let h_len = window.target.len();
    if c_len == 0 || h_len == 0 {
        return Err(Error::Shape(
            "training window needs non-empty context and target".into(),
        ));
    }
    let steps = c_len + h_len - 1;
    let hd = cfg.hidden;
    let nin = cfg.input_dim();
    let inv_scale = 1.0 / window.scale;

    let mut tape = Tape {
        steps,
        context_len: c_len,
        inputs: vec![0.0; steps * nin],
        gates: vec![vec![0.0; steps * 4 * hd]; cfg.layers],
        cells: vec![vec![0.0; steps * hd]; cfg.layers],
        tanh_cells: vec![vec![0.0; steps * hd]; cfg.layers],
        hidden: vec![vec![0.0; steps * hd]; cfg.layers],
        d_raw: vec![[0.0; 3]; steps],
        dists: Vec::with_capacity(steps),
    };
    let zeros = vec![0.0; hd];
    let (hw, hb) = params.head();
    let mut loss = 0.0;

    for s in 0..steps {
        let k = s + 1;
        params.fill_input(
            window.value(k - 1) * inv_scale,
            window.time_at(k),
            window.utc_offset_secs,
            &mut tape.inputs[s * nin..(s + 1) * nin],
        );
        for l in 0..cfg.layers {
            let w = params.layer(l);
            let (lower, upper) = tape.hidden.split_at_mut(l);
            let x: &[f64] = if l == 0 {
                &tape.inputs[s * nin..(s + 1) * nin]
            } else {
                &lower[l - 1][s * hd..(s + 1) * hd]
            };
            let (h_done, h_cur) = upper[0].split_at_mut(s * hd);
            let (c_done, c_cur) = tape.cells[l].split_at_mut(s * hd);
            let (h_prev, c_prev): (&[f64], &[f64]) = if s == 0 {
                (&zeros, &zeros)
            } else {
                (&h_done[(s - 1) * hd..], &c_done[(s - 1) * hd..])
            };
            cell_forward(
                x,
                h_prev,
                c_prev,
                w,
                &mut tape.gates[l][s * 4 * hd..(s + 1) * 4 * hd],
                &mut c_cur[..hd],
                &mut tape.tanh_cells[l][s * hd..(s + 1) * hd],
                &mut h_cur[..hd],
            );
        }
        let top = &tape.hidden[cfg.layers - 1][s * hd..(s + 1) * hd];
        let (dist, raw) = distribution_head(top, hw, hb);
        tape.dists.push(dist);
        if k >= c_len {
            let y = window.value(k) * inv_scale;
            let (nll, d_raw) = head_loss(cfg.head, y, dist, raw);
            if !nll.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss at window step {k} (unit `{}`)",
                    window.unit_id
                )));
            }
            loss += nll;
            tape.d_raw[s] = d_raw.map(|d| d / h_len as f64);
        }
    }
    Ok((loss / h_len as f64, tape))
}

/// NLL of `y` and its gradient w.r.t. the raw head outputs.
pub(crate) fn head_loss(head: HeadType, y: f64, dist: DistParams, raw: [f64; 3]) -> (f64, [f64; 3]) {
    let sig1 = super::lstm::sigmoid(raw[1]);
    match head {
        HeadType::StudentT => {
            let (nll, dm, ds, dn) = nll_grad(y, dist.mu, dist.sigma, dist.nu);
            (nll, [dm, ds * sig1, dn * super::lstm::sigmoid(raw[2])])
        }
        HeadType::Gaussian => {
            let (nll, dm, ds) = gaussian_nll_grad(y, dist.mu, dist.sigma);
            (nll, [dm, ds * sig1, 0.0])
        }
    }
}

/// Exact gradient of the window loss w.r.t. every parameter (same flat layout).
pub fn backward(tape: &Tape, params: &NetworkParams) -> Vec<f64> {
    let cfg = *params.config();
    let hd = cfg.hidden;
    let nin = cfg.input_dim();
    let nl = cfg.layers;
    let mut grad = vec![0.0; params.as_slice().len()];
    let head_off = params.head_offset();
    let (hw, _) = params.head();

    let mut dh_rec = vec![vec![0.0; hd]; nl];
    let mut dc_rec = vec![vec![0.0; hd]; nl];
    let mut dh = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];
    let mut dx_buf = vec![0.0; hd.max(nin)];
    let mut dh_prev = vec![0.0; hd];
    let zeros = vec![0.0; hd];
    let offsets: Vec<LayerOffsets> = (0..nl).map(|l| params.offsets(l)).collect();

    for s in (0..tape.steps).rev() {
        // Head contribution into the top hidden state.
        dh.copy_from_slice(&dh_rec[nl - 1]);
        let d_raw = tape.d_raw[s];
        if d_raw != [0.0; 3] {
            let top = &tape.hidden[nl - 1][s * hd..(s + 1) * hd];
            for j in 0..3 {
                let d = d_raw[j];
                grad[head_off + 3 * hd + j] += d;
                let gw = &mut grad[head_off + j * hd..head_off + (j + 1) * hd];
                for k in 0..hd {
                    gw[k] += d * top[k];
                    dh[k] += d * hw[j * hd + k];
                }
            }
        }
        for l in (0..nl).rev() {
            let w = params.layer(l);
            let lin = w.input_dim;
            let x: &[f64] = if l == 0 {
                &tape.inputs[s * nin..(s + 1) * nin]
            } else {
                &tape.hidden[l - 1][s * hd..(s + 1) * hd]
            };
            let (h_prev, c_prev): (&[f64], &[f64]) = if s == 0 {
                (&zeros, &zeros)
            } else {
                (
                    &tape.hidden[l][(s - 1) * hd..s * hd],
                    &tape.cells[l][(s - 1) * hd..s * hd],
                )
            };
            let off = offsets[l];
            let (before_bias, rest) = grad.split_at_mut(off.bias);
            let (gw_in, gw_rec) = before_bias[off.w_input..].split_at_mut(off.w_recurrent - off.w_input);
            let mut g = LayerGrads {
                w_input: gw_in,
                w_recurrent: gw_rec,
                bias: &mut rest[..4 * hd],
            };
            let dx = &mut dx_buf[..lin];
            cell_backward(
                x,
                h_prev,
                c_prev,
                &tape.gates[l][s * 4 * hd..(s + 1) * 4 * hd],
                &tape.tanh_cells[l][s * hd..(s + 1) * hd],
                w,
                &dh,
                &mut dc_rec[l],
                &mut dz,
                dx,
                &mut dh_prev,
                &mut g,
            );
            dh_rec[l].copy_from_slice(&dh_prev);
            if l > 0 {
                for k in 0..hd {
                    dh[k] = dh_rec[l - 1][k] + dx[k];
                }
            }
        }
    }
    grad
}

/// Loss and gradient in one call.
pub fn loss_and_grad(window: &TrainingWindow, params: &NetworkParams) -> Result<(f64, Vec<f64>)> {
    let (loss, tape) = forward_loss(window, params)?;
    Ok((loss, backward(&tape, params)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn window(values: &[f64], context: usize) -> TrainingWindow {
        let ctx = values[..context].to_vec();
        TrainingWindow {
            unit_id: "u".into(),
            scale: crate::panel::compute_scale(&ctx),
            context: ctx,
            target: values[context..].to_vec(),
            start_time: 0,
            step_secs: 3600,
            utc_offset_secs: 0,
            start_index: 0,
        }
    }

    #[test]
    fn zero_head_gives_softplus_defaults() {
        let h = vec![0.37; 25];
        let (d, _) = distribution_head(&h, &[0.0; 75], &[0.0; 3]);
        assert_eq!(d.mu, 0.0);
        assert_abs_diff_eq!(d.sigma, std::f64::consts::LN_2 + 1e-6, epsilon = 1e-15);
        assert_abs_diff_eq!(d.nu, 2.0 + std::f64::consts::LN_2, epsilon = 1e-15);
        assert!((d.sigma - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn head_constraints_hold_for_extreme_inputs() {
        for &v in &[-1e3, -50.0, 0.0, 50.0, 1e3] {
            let (d, _) = distribution_head(&[v; 4], &[1.0; 12], &[0.0; 3]);
            assert!(d.sigma > 0.0);
            // softplus underflows to exactly 0 far in the left tail.
            assert!(if v < 0.0 { d.nu >= 2.0 } else { d.nu > 2.0 });
        }
    }

    #[test]
    fn shapes_and_layout() {
        let cfg = NetConfig::default();
        let p = NetworkParams::init(cfg, 1);
        assert_eq!(p.as_slice().len(), 100 * 1 + 100 * 25 + 100 + 100 * 25 + 100 * 25 + 100 + 75 + 3);
        let w = window(&[1.0, 2.0, 3.0, 4.0, 5.0], 2);
        let (_, g) = loss_and_grad(&w, &p).unwrap();
        assert_eq!(g.len(), p.as_slice().len());
    }

    #[test]
    fn loss_finite_and_sigma_sensitive() {
        let p = NetworkParams::init(NetConfig::default(), 3);
        let w = window(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0], 4);
        let (l0, _) = forward_loss(&w, &p).unwrap();
        assert!(l0.is_finite());
        let mut q = p.clone();
        q.head_mut().1[1] += 1.0;
        let (l1, _) = forward_loss(&w, &q).unwrap();
        assert!(l1 != l0);
    }

    #[test]
    fn step_matches_tape() {
        let p = NetworkParams::init(NetConfig::default(), 9);
        let vals = [2.0, 2.5, 3.0, 2.0, 1.0, 1.5];
        let w = window(&vals, 3);
        let (_, tape) = forward_loss(&w, &p).unwrap();
        let mut state = p.zero_state();
        let mut scratch = StepScratch::new(p.config());
        for k in 1..vals.len() {
            let d = p.step(&[vals[k - 1] / w.scale], &mut state, &mut scratch);
            assert_abs_diff_eq!(d.mu, tape.dists[k - 1].mu, epsilon = 1e-14);
            assert_abs_diff_eq!(d.sigma, tape.dists[k - 1].sigma, epsilon = 1e-14);
        }
    }
}
