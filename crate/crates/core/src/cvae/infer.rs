//! Tape-free decoding used by generation.

use super::{CvaeError, Cvae};
use crate::numcore::{lstm_cell_forward, NumError, Scalar, Tensor};

/// `z = mu + exp(logvar / 2) * noise`, element-wise.
pub fn reparameterize<T: Scalar>(mu: &[T], logvar: &[T], noise: &[T]) -> Vec<T> {
    mu.iter()
        .zip(logvar)
        .zip(noise)
        .map(|((&m, &lv), &n)| m + (lv * T::of(0.5)).exp() * n)
        .collect()
}

/// Per-row `[z; c]` contribution to the first decoder layer, fixed for a
/// whole write-out.
pub struct DecodeContext<T> {
    rows: usize,
    zc_proj: Vec<T>,
}

impl<T: Copy> DecodeContext<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Keeps only the listed rows, in the given order.
    pub fn retain_rows(&mut self, keep: &[usize]) {
        self.zc_proj = select_rows(&self.zc_proj, self.rows, keep);
        self.rows = keep.len();
    }
}

fn select_rows<T: Copy>(data: &[T], rows: usize, keep: &[usize]) -> Vec<T> {
    let width = if rows == 0 { 0 } else { data.len() / rows };
    keep.iter().flat_map(|&r| data[r * width..(r + 1) * width].iter().copied()).collect()
}

/// Hidden and cell state of every decoder layer for a set of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState<T> {
    pub h: Vec<Vec<T>>,
    pub c: Vec<Vec<T>>,
}

impl<T: Copy> DecoderState<T> {
    /// Keeps only the listed rows of `rows`, in the given order.
    pub fn retain_rows(&mut self, rows: usize, keep: &[usize]) {
        for layer in self.h.iter_mut().chain(self.c.iter_mut()) {
            *layer = select_rows(layer, rows, keep);
        }
    }
}

impl<T: Scalar> Cvae<T> {
    /// Context for `rows` write-outs; `z` and `c` are `[rows, latent]` and
    /// `[rows, condition]`.
    pub fn decode_context(&self, z: &Tensor<T>, c: &Tensor<T>) -> Result<DecodeContext<T>, CvaeError> {
        let (l, cd) = (self.hyper.latent_dim, self.hyper.condition_dim);
        let rows = z.rows();
        if z.cols() != l || c.cols() != cd || c.rows() != rows {
            return Err(NumError::ShapeMismatch { op: "decode_context", left: z.shape.clone(), right: c.shape.clone() }.into());
        }
        let mut zc = Vec::with_capacity(rows * (l + cd));
        for r in 0..rows {
            zc.extend_from_slice(z.row(r));
            zc.extend_from_slice(c.row(r));
        }
        let cell = &self.ids.decoder[0];
        let four_h = 4 * self.hyper.hidden_dim;
        let wx = &self.params.get(cell.w_x).data[self.hyper.embedding_dim * four_h..];
        let mut zc_proj = vec![T::zero(); rows * four_h];
        T::gemm(rows, l + cd, four_h, &zc, l + cd, 1, wx, four_h, 1, T::zero(), &mut zc_proj);
        Ok(DecodeContext { rows, zc_proj })
    }

    pub fn initial_state(&self, rows: usize) -> DecoderState<T> {
        let n = rows * self.hyper.hidden_dim;
        let layers = self.hyper.num_layers;
        DecoderState { h: vec![vec![T::zero(); n]; layers], c: vec![vec![T::zero(); n]; layers] }
    }

    /// One decoder step for every row: feeds `prev` (the previous
    /// character, the terminator at the start), updates `state` and returns
    /// `[rows, vocab]` logits.
    pub fn decode_step(&self, ctx: &DecodeContext<T>, prev: &[usize], state: &mut DecoderState<T>) -> Result<Tensor<T>, CvaeError> {
        let rows = ctx.rows;
        if prev.len() != rows {
            return Err(NumError::ShapeMismatch { op: "decode_step", left: vec![rows], right: vec![prev.len()] }.into());
        }
        let (e, hd) = (self.hyper.embedding_dim, self.hyper.hidden_dim);
        let four_h = 4 * hd;
        let table = self.params.get(self.ids.embedding);
        let mut emb = Vec::with_capacity(rows * e);
        for &p in prev {
            if p >= table.rows() {
                return Err(NumError::IndexOutOfRange { op: "decode_step", index: p, bound: table.rows() }.into());
            }
            emb.extend_from_slice(table.row(p));
        }
        let mut input = emb;
        let mut width = e;
        for (l, cell) in self.ids.decoder.iter().enumerate() {
            let wx = &self.params.get(cell.w_x).data;
            let mut pre = if l == 0 { ctx.zc_proj.clone() } else { vec![T::zero(); rows * four_h] };
            T::gemm(rows, width, four_h, &input, width, 1, &wx[..width * four_h], four_h, 1, T::one(), &mut pre);
            lstm_cell_forward(&self.params, cell, &mut pre, &mut state.h[l], &mut state.c[l]);
            input = state.h[l].clone();
            width = hd;
        }
        let vocab = self.vocab.len();
        let mut logits = Tensor::zeros(rows, vocab);
        T::gemm(rows, hd, vocab, &input, hd, 1, &self.params.get(self.ids.out_w).data, vocab, 1, T::zero(), &mut logits.data);
        let bias = &self.params.get(self.ids.out_b).data;
        for row in logits.data.chunks_mut(vocab) {
            for (x, &b) in row.iter_mut().zip(bias) {
                *x += b;
            }
        }
        Ok(logits)
    }
}
