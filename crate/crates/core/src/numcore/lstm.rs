//! LSTM cell. Gate weights are packed column-wise as `[i | f | g | o]`, each
//! block `hidden` wide: input, forget, candidate, output.

use super::{sigmoid, NumError, ParamStore, Scalar, Tensor};
use super::graph::{Graph, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmCellParams {
    pub input: usize,
    pub hidden: usize,
    /// `[input, 4*hidden]`
    pub w_x: usize,
    /// `[hidden, 4*hidden]`
    pub w_h: usize,
    /// `[1, 4*hidden]`
    pub bias: usize,
}

impl LstmCellParams {
    /// Registers the three tensors under `prefix`, zero-initialised.
    pub fn register<T: Scalar>(store: &mut ParamStore<T>, prefix: &str, input: usize, hidden: usize) -> Self {
        let w_x = store.add(format!("{prefix}.w_x"), Tensor::zeros(input, 4 * hidden));
        let w_h = store.add(format!("{prefix}.w_h"), Tensor::zeros(hidden, 4 * hidden));
        let bias = store.add(format!("{prefix}.bias"), Tensor::zeros(1, 4 * hidden));
        LstmCellParams { input, hidden, w_x, w_h, bias }
    }

    /// Looks up tensors registered by [`LstmCellParams::register`].
    pub fn find<T: Scalar>(store: &ParamStore<T>, prefix: &str) -> Option<Self> {
        let w_x = store.find(&format!("{prefix}.w_x"))?;
        let w_h = store.find(&format!("{prefix}.w_h"))?;
        let bias = store.find(&format!("{prefix}.bias"))?;
        let (input, four_h) = store.get(w_x).dims();
        Some(LstmCellParams { input, hidden: four_h / 4, w_x, w_h, bias })
    }
}

/// One step: `(h', c')` from input `x` and state `(h, c)`.
pub fn lstm_cell<T: Scalar>(g: &mut Graph<T>, p: &LstmCellParams, x: Var, h: Var, c: Var) -> Result<(Var, Var), NumError> {
    let w_x = g.param(p.w_x);
    let x_proj = g.matmul(x, w_x)?;
    lstm_cell_projected(g, p, x_proj, h, c)
}

/// Like [`lstm_cell`] with `x·w_x` already computed.
pub fn lstm_cell_projected<T: Scalar>(
    g: &mut Graph<T>,
    p: &LstmCellParams,
    x_proj: Var,
    h: Var,
    c: Var,
) -> Result<(Var, Var), NumError> {
    let hd = p.hidden;
    let w_h = g.param(p.w_h);
    let bias = g.param(p.bias);
    let rec = g.matmul(h, w_h)?;
    let pre = g.add(x_proj, rec)?;
    let pre = g.add_row(pre, bias)?;
    let i = g.slice(pre, 0, hd)?;
    let i = g.sigmoid(i);
    let f = g.slice(pre, hd, hd)?;
    let f = g.sigmoid(f);
    let cand = g.slice(pre, 2 * hd, hd)?;
    let cand = g.tanh(cand);
    let o = g.slice(pre, 3 * hd, hd)?;
    let o = g.sigmoid(o);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_next = g.add(keep, write)?;
    let squashed = g.tanh(c_next);
    let h_next = g.mul(o, squashed)?;
    Ok((h_next, c_next))
}

/// Tape-free step for inference. `pre` holds `x·w_x` (plus any constant
/// input terms) for each row and is consumed as scratch; `h` and `c` are
/// updated in place.
pub fn lstm_cell_forward<T: Scalar>(store: &ParamStore<T>, p: &LstmCellParams, pre: &mut [T], h: &mut [T], c: &mut [T]) {
    let hd = p.hidden;
    let rows = h.len() / hd;
    T::gemm(rows, hd, 4 * hd, h, hd, 1, &store.get(p.w_h).data, 4 * hd, 1, T::one(), pre);
    let bias = &store.get(p.bias).data;
    for r in 0..rows {
        let gates = &mut pre[r * 4 * hd..(r + 1) * 4 * hd];
        for (x, &b) in gates.iter_mut().zip(bias) {
            *x += b;
        }
        for k in 0..hd {
            let i = sigmoid(gates[k]);
            let f = sigmoid(gates[hd + k]);
            let cand = gates[2 * hd + k].tanh();
            let o = sigmoid(gates[3 * hd + k]);
            let cell = f * c[r * hd + k] + i * cand;
            c[r * hd + k] = cell;
            h[r * hd + k] = o * cell.tanh();
        }
    }
}
