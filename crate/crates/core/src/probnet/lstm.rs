//! LSTM cell arithmetic on borrowed weight slices.
//!
//! Gate rows are stacked `[input, forget, candidate, output]`, each `hidden`
//! rows long, and all matrices are row-major.

use crate::error::{Error, Result};

/// Borrowed weights for one LSTM layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerWeights<'a> {
    pub input_dim: usize,
    pub hidden: usize,
    /// `4*hidden x input_dim`
    pub w_input: &'a [f64],
    /// `4*hidden x hidden`
    pub w_recurrent: &'a [f64],
    /// `4*hidden`
    pub bias: &'a [f64],
}

impl LayerWeights<'_> {
    fn check(&self) -> Result<()> {
        let g = 4 * self.hidden;
        if self.w_input.len() != g * self.input_dim
            || self.w_recurrent.len() != g * self.hidden
            || self.bias.len() != g
        {
            return Err(Error::Shape(format!(
                "LSTM layer weights do not match input_dim={} hidden={}",
                self.input_dim, self.hidden
            )));
        }
        Ok(())
    }
}

/// Hidden and cell vectors of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LayerState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Per-layer state of the stacked network.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub layers: Vec<LayerState>,
}

impl HiddenState {
    pub fn zeros(layers: usize, hidden: usize) -> Self {
        Self {
            layers: (0..layers).map(|_| LayerState::zeros(hidden)).collect(),
        }
    }
}

/// One LSTM step with shape checking.
pub fn lstm_cell_forward(x: &[f64], state: &LayerState, weights: LayerWeights<'_>) -> Result<LayerState> {
    weights.check()?;
    if x.len() != weights.input_dim || state.h.len() != weights.hidden || state.c.len() != weights.hidden {
        return Err(Error::Shape(format!(
            "LSTM step got x={}, h={}, c={} for input_dim={} hidden={}",
            x.len(),
            state.h.len(),
            state.c.len(),
            weights.input_dim,
            weights.hidden
        )));
    }
    let hidden = weights.hidden;
    let mut gates = vec![0.0; 4 * hidden];
    let mut out = LayerState::zeros(hidden);
    let mut tc = vec![0.0; hidden];
    cell_forward(x, &state.h, &state.c, weights, &mut gates, &mut out.c, &mut tc, &mut out.h);
    Ok(out)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Unchecked step writing activated gates, new cell, `tanh(cell)` and new hidden.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w: LayerWeights<'_>,
    gates: &mut [f64],
    c: &mut [f64],
    tc: &mut [f64],
    h: &mut [f64],
) {
    let hd = w.hidden;
    let nin = w.input_dim;
    for r in 0..4 * hd {
        let mut z = w.bias[r] + dot(&w.w_recurrent[r * hd..(r + 1) * hd], h_prev);
        z += if nin == 1 {
            w.w_input[r] * x[0]
        } else {
            dot(&w.w_input[r * nin..(r + 1) * nin], x)
        };
        gates[r] = if (2 * hd..3 * hd).contains(&r) {
            z.tanh()
        } else {
            sigmoid(z)
        };
    }
    for k in 0..hd {
        let (i, f, g, o) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
        c[k] = f * c_prev[k] + i * g;
        tc[k] = c[k].tanh();
        h[k] = o * tc[k];
    }
}

/// Mutable gradient slices matching [`LayerWeights`].
pub(crate) struct LayerGrads<'a> {
    pub w_input: &'a mut [f64],
    pub w_recurrent: &'a mut [f64],
    pub bias: &'a mut [f64],
}

/// Reverse step through one cell.
///
/// `dh` is the total gradient reaching this step's hidden output and `dc` the
/// gradient carried into its cell from the next step; on return `dc` holds the
/// gradient for the previous cell. `dx` and `dh_prev` are overwritten.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cell_backward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &[f64],
    tc: &[f64],
    w: LayerWeights<'_>,
    dh: &[f64],
    dc: &mut [f64],
    dz: &mut [f64],
    dx: &mut [f64],
    dh_prev: &mut [f64],
    g: &mut LayerGrads<'_>,
) {
    let hd = w.hidden;
    let nin = w.input_dim;
    for k in 0..hd {
        let (i, f, gg, o) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
        let dck = dc[k] + dh[k] * o * (1.0 - tc[k] * tc[k]);
        dz[k] = dck * gg * i * (1.0 - i);
        dz[hd + k] = dck * c_prev[k] * f * (1.0 - f);
        dz[2 * hd + k] = dck * i * (1.0 - gg * gg);
        dz[3 * hd + k] = dh[k] * tc[k] * o * (1.0 - o);
        dc[k] = dck * f;
    }
    dx.iter_mut().for_each(|v| *v = 0.0);
    dh_prev.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..4 * hd {
        let d = dz[r];
        g.bias[r] += d;
        if d == 0.0 {
            continue;
        }
        axpy(d, h_prev, &mut g.w_recurrent[r * hd..(r + 1) * hd]);
        axpy(d, &w.w_recurrent[r * hd..(r + 1) * hd], dh_prev);
        axpy(d, x, &mut g.w_input[r * nin..(r + 1) * nin]);
        axpy(d, &w.w_input[r * nin..(r + 1) * nin], dx);
    }
}
