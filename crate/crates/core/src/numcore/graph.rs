//! Op tape with reverse-mode accumulation. A graph is built per training
//! step and dropped afterwards.

use super::{sigmoid, softmax_rows, NumError, ParamStore, Scalar, Tensor};

/// Handle to a node on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op<T> {
    Input,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Concat(Vec<Var>, usize),
    Slice(Var, usize, usize),
    SliceRows(Var, usize),
    Embedding(Var, Vec<usize>),
    Blend(Vec<T>, Var, Var),
    Softmax(Var),
    Sum(Var),
    CrossEntropy(Var, Vec<usize>, Vec<T>),
    SoftmaxCrossEntropy(Var, Vec<usize>, Vec<T>),
    KlStandardNormal(Var, Var),
}

struct Node<T> {
    op: Op<T>,
    value: Option<Tensor<T>>,
}

const PROB_FLOOR: f64 = 1e-12;

pub struct Graph<'p, T: Scalar> {
    params: &'p ParamStore<T>,
    param_vars: Vec<Option<Var>>,
    nodes: Vec<Node<T>>,
}

fn mismatch<T>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> NumError {
    NumError::ShapeMismatch { op, left: a.shape.clone(), right: b.shape.clone() }
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Graph { params, param_vars: vec![None; params.len()], nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        let node = &self.nodes[v.0];
        match (&node.op, &node.value) {
            (_, Some(t)) => t,
            (Op::Param(id), None) => self.params.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    /// Scalar value of a `[1, 1]` node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v).data[0]
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>) -> Var {
        self.nodes.push(Node { op, value: Some(value) });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(Op::Input, t)
    }

    /// Leaf for parameter `id`; repeated calls return the same node.
    pub fn param(&mut self, id: usize) -> Var {
        if let Some(v) = self.param_vars[id] {
            return v;
        }
        self.nodes.push(Node { op: Op::Param(id), value: None });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), out))
    }

    fn zip(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T, op: Op<T>) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.dims() != y.dims() {
            return Err(mismatch(name, x, y));
        }
        let data = x.data.iter().zip(&y.data).map(|(&p, &q)| f(p, q)).collect();
        let out = Tensor::from_rows(x.rows(), x.cols(), data);
        Ok(self.push(op, out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.zip("add", a, b, |p, q| p + q, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.zip("mul", a, b, |p, q| p * q, Op::Mul(a, b))
    }

    /// Adds the `[1, n]` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var, NumError> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(mismatch("add_row", x, b));
        }
        let n = x.cols();
        let mut out = x.clone();
        for row in out.data.chunks_mut(n) {
            for (o, &bb) in row.iter_mut().zip(&b.data) {
                *o += bb;
            }
        }
        out.shape = vec![x.rows(), n];
        Ok(self.push(Op::AddRow(a, bias), out))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let out = self.value(a).map(|x| x * s);
        self.push(Op::Scale(a, s), out)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(T::tanh);
        self.push(Op::Tanh(a), out)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(T::exp);
        self.push(Op::Exp(a), out)
    }

    /// Concatenation along `axis` (0 = rows, 1 = columns).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, NumError> {
        let first = self.value(parts[0]);
        let (rows, cols) = first.dims();
        let out = if axis == 0 {
            let mut data = Vec::new();
            let mut total = 0;
            for &p in parts {
                let t = self.value(p);
                if t.cols() != cols {
                    return Err(mismatch("concat", first, t));
                }
                total += t.rows();
                data.extend_from_slice(&t.data);
            }
            Tensor::from_rows(total, cols, data)
        } else {
            let mut total = 0;
            for &p in parts {
                let t = self.value(p);
                if t.rows() != rows {
                    return Err(mismatch("concat", first, t));
                }
                total += t.cols();
            }
            let mut data = Vec::with_capacity(rows * total);
            for r in 0..rows {
                for &p in parts {
                    data.extend_from_slice(self.value(p).row(r));
                }
            }
            Tensor::from_rows(rows, total, data)
        };
        Ok(self.push(Op::Concat(parts.to_vec(), axis), out))
    }

    /// Columns `start..start + len`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var, NumError> {
        let x = self.value(a);
        let (rows, cols) = x.dims();
        if start + len > cols {
            return Err(NumError::IndexOutOfRange { op: "slice", index: start + len, bound: cols });
        }
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&x.row(r)[start..start + len]);
        }
        let out = Tensor::from_rows(rows, len, data);
        Ok(self.push(Op::Slice(a, start, len), out))
    }

    /// Rows `start..start + len`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var, NumError> {
        let x = self.value(a);
        let (rows, cols) = x.dims();
        if start + len > rows {
            return Err(NumError::IndexOutOfRange { op: "slice_rows", index: start + len, bound: rows });
        }
        let out = Tensor::from_rows(len, cols, x.data[start * cols..(start + len) * cols].to_vec());
        Ok(self.push(Op::SliceRows(a, start), out))
    }

    /// Row `indices[i]` of `table` as output row `i`.
    pub fn embedding(&mut self, table: Var, indices: &[usize]) -> Result<Var, NumError> {
        let t = self.value(table);
        let (rows, cols) = t.dims();
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            if i >= rows {
                return Err(NumError::IndexOutOfRange { op: "embedding", index: i, bound: rows });
            }
            data.extend_from_slice(t.row(i));
        }
        let out = Tensor::from_rows(indices.len(), cols, data);
        Ok(self.push(Op::Embedding(table, indices.to_vec()), out))
    }

    /// Row-wise `mask[r] * a + (1 - mask[r]) * b`; freezes finished rows of
    /// a padded batch.
    pub fn blend(&mut self, mask: &[T], a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.dims() != y.dims() || mask.len() != x.rows() {
            return Err(mismatch("blend", x, y));
        }
        let cols = x.cols();
        let mut data = Vec::with_capacity(x.len());
        for (r, &m) in mask.iter().enumerate() {
            for c in 0..cols {
                data.push(m * x.data[r * cols + c] + (T::one() - m) * y.data[r * cols + c]);
            }
        }
        let out = Tensor::from_rows(x.rows(), cols, data);
        Ok(self.push(Op::Blend(mask.to_vec(), a, b), out))
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let mut out = self.value(a).clone();
        let cols = out.cols();
        softmax_rows(&mut out.data, cols);
        self.push(Op::Softmax(a), out)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().copied().sum();
        self.push(Op::Sum(a), Tensor::from_rows(1, 1, vec![s]))
    }

    fn check_targets(&self, op: &'static str, x: &Tensor<T>, targets: &[usize], weights: &[T]) -> Result<(), NumError> {
        if targets.len() != x.rows() || weights.len() != x.rows() {
            return Err(NumError::ShapeMismatch { op, left: x.shape.clone(), right: vec![targets.len(), weights.len()] });
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= x.cols()) {
            return Err(NumError::IndexOutOfRange { op, index: t, bound: x.cols() });
        }
        Ok(())
    }

    /// Weighted mean over rows of `-ln max(p[target], 1e-12)`.
    pub fn cross_entropy(&mut self, probs: Var, targets: &[usize], weights: &[T]) -> Result<Var, NumError> {
        let p = self.value(probs);
        self.check_targets("cross_entropy", p, targets, weights)?;
        let floor = T::of(PROB_FLOOR);
        let total: T = weights.iter().copied().sum();
        let mut loss = T::zero();
        for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
            loss += w * -p.at(r, t).max(floor).ln();
        }
        let out = Tensor::from_rows(1, 1, vec![loss / total]);
        Ok(self.push(Op::CrossEntropy(probs, targets.to_vec(), weights.to_vec()), out))
    }

    /// Same as `cross_entropy(softmax(logits))`, computed in log space.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize], weights: &[T]) -> Result<Var, NumError> {
        let x = self.value(logits);
        self.check_targets("softmax_cross_entropy", x, targets, weights)?;
        let log_floor = T::of(PROB_FLOOR.ln());
        let total: T = weights.iter().copied().sum();
        let mut loss = T::zero();
        for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
            if w == T::zero() {
                continue;
            }
            loss += w * -log_softmax_at(x.row(r), t).max(log_floor);
        }
        let out = Tensor::from_rows(1, 1, vec![loss / total]);
        Ok(self.push(Op::SoftmaxCrossEntropy(logits, targets.to_vec(), weights.to_vec()), out))
    }

    /// Batch mean of `-0.5 * sum(1 + logvar - mu^2 - exp(logvar))` per row.
    pub fn kl_standard_normal(&mut self, mu: Var, logvar: Var) -> Result<Var, NumError> {
        let (m, lv) = (self.value(mu), self.value(logvar));
        if m.dims() != lv.dims() {
            return Err(mismatch("kl_standard_normal", m, lv));
        }
        let mut kl = T::zero();
        for (&a, &b) in m.data.iter().zip(&lv.data) {
            kl += T::one() + b - a * a - b.exp();
        }
        let rows = T::of(m.rows() as f64);
        let out = Tensor::from_rows(1, 1, vec![T::of(-0.5) * kl / rows]);
        Ok(self.push(Op::KlStandardNormal(mu, logvar), out))
    }

    /// Reverse pass from the `[1, 1]` node `loss`.
    pub fn backward(&self, loss: Var) -> Gradients<T> {
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let params = self
            .param_vars
            .iter()
            .map(|v| v.and_then(|v| grads[v.0].take()))
            .collect();
        Gradients { nodes: grads, params }
    }

    fn propagate(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let out = self.nodes[i].value.as_ref();
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [T])| {
            let len = self.value(v).len();
            let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); len]);
            f(slot);
        };
        match &self.nodes[i].op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let (m, k) = x.dims();
                let n = y.cols();
                acc(*a, &mut |ga| T::gemm(m, n, k, g, n, 1, &y.data, 1, n, T::one(), ga));
                acc(*b, &mut |gb| T::gemm(k, m, n, &x.data, 1, k, g, n, 1, T::one(), gb));
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    acc(v, &mut |ga| add_into(ga, g));
                }
            }
            Op::AddRow(a, bias) => {
                acc(*a, &mut |ga| add_into(ga, g));
                let n = self.value(*bias).cols();
                acc(*bias, &mut |gb| {
                    for row in g.chunks(n) {
                        add_into(gb, row);
                    }
                });
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                acc(*a, &mut |ga| {
                    for ((o, &gg), &yy) in ga.iter_mut().zip(g).zip(&y.data) {
                        *o += gg * yy;
                    }
                });
                acc(*b, &mut |gb| {
                    for ((o, &gg), &xx) in gb.iter_mut().zip(g).zip(&x.data) {
                        *o += gg * xx;
                    }
                });
            }
            Op::Scale(a, s) => acc(*a, &mut |ga| {
                for (o, &gg) in ga.iter_mut().zip(g) {
                    *o += gg * *s;
                }
            }),
            Op::Sigmoid(a) => {
                let y = &out.unwrap().data;
                acc(*a, &mut |ga| {
                    for ((o, &gg), &yy) in ga.iter_mut().zip(g).zip(y) {
                        *o += gg * yy * (T::one() - yy);
                    }
                });
            }
            Op::Tanh(a) => {
                let y = &out.unwrap().data;
                acc(*a, &mut |ga| {
                    for ((o, &gg), &yy) in ga.iter_mut().zip(g).zip(y) {
                        *o += gg * (T::one() - yy * yy);
                    }
                });
            }
            Op::Exp(a) => {
                let y = &out.unwrap().data;
                acc(*a, &mut |ga| {
                    for ((o, &gg), &yy) in ga.iter_mut().zip(g).zip(y) {
                        *o += gg * yy;
                    }
                });
            }
            Op::Concat(parts, axis) => {
                let total = out.unwrap().cols();
                let mut offset = 0;
                for &p in parts {
                    let (rows, cols) = self.value(p).dims();
                    if *axis == 0 {
                        let start = offset * total;
                        acc(p, &mut |gp| add_into(gp, &g[start..start + rows * cols]));
                        offset += rows;
                    } else {
                        acc(p, &mut |gp| {
                            for r in 0..rows {
                                add_into(&mut gp[r * cols..(r + 1) * cols], &g[r * total + offset..r * total + offset + cols]);
                            }
                        });
                        offset += cols;
                    }
                }
            }
            Op::Slice(a, start, len) => {
                let cols = self.value(*a).cols();
                acc(*a, &mut |ga| {
                    for (r, row) in g.chunks(*len).enumerate() {
                        add_into(&mut ga[r * cols + start..r * cols + start + len], row);
                    }
                });
            }
            Op::SliceRows(a, start) => {
                let cols = self.value(*a).cols();
                acc(*a, &mut |ga| add_into(&mut ga[start * cols..start * cols + g.len()], g));
            }
            Op::Embedding(table, indices) => {
                let cols = self.value(*table).cols();
                acc(*table, &mut |gt| {
                    for (r, &idx) in indices.iter().enumerate() {
                        add_into(&mut gt[idx * cols..(idx + 1) * cols], &g[r * cols..(r + 1) * cols]);
                    }
                });
            }
            Op::Blend(mask, a, b) => {
                let cols = self.value(*a).cols();
                acc(*a, &mut |ga| {
                    for (r, &m) in mask.iter().enumerate() {
                        for c in r * cols..(r + 1) * cols {
                            ga[c] += m * g[c];
                        }
                    }
                });
                acc(*b, &mut |gb| {
                    for (r, &m) in mask.iter().enumerate() {
                        for c in r * cols..(r + 1) * cols {
                            gb[c] += (T::one() - m) * g[c];
                        }
                    }
                });
            }
            Op::Softmax(a) => {
                let y = out.unwrap();
                let cols = y.cols();
                acc(*a, &mut |ga| {
                    for ((orow, grow), yrow) in ga.chunks_mut(cols).zip(g.chunks(cols)).zip(y.data.chunks(cols)) {
                        let dot: T = grow.iter().zip(yrow).map(|(&p, &q)| p * q).sum();
                        for ((o, &gg), &yy) in orow.iter_mut().zip(grow).zip(yrow) {
                            *o += yy * (gg - dot);
                        }
                    }
                });
            }
            Op::Sum(a) => acc(*a, &mut |ga| {
                for o in ga.iter_mut() {
                    *o += g[0];
                }
            }),
            Op::CrossEntropy(probs, targets, weights) => {
                let p = self.value(*probs);
                let cols = p.cols();
                let total: T = weights.iter().copied().sum();
                let floor = T::of(PROB_FLOOR);
                acc(*probs, &mut |gp| {
                    for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                        let pt = p.at(r, t);
                        if pt > floor {
                            gp[r * cols + t] += -g[0] * w / (total * pt);
                        }
                    }
                });
            }
            Op::SoftmaxCrossEntropy(logits, targets, weights) => {
                let x = self.value(*logits);
                let cols = x.cols();
                let total: T = weights.iter().copied().sum();
                let log_floor = T::of(PROB_FLOOR.ln());
                acc(*logits, &mut |gx| {
                    for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                        if w == T::zero() || log_softmax_at(x.row(r), t) < log_floor {
                            continue;
                        }
                        let mut p = x.row(r).to_vec();
                        softmax_rows(&mut p, cols);
                        p[t] -= T::one();
                        let scale = g[0] * w / total;
                        for (o, &pp) in gx[r * cols..(r + 1) * cols].iter_mut().zip(&p) {
                            *o += scale * pp;
                        }
                    }
                });
            }
            Op::KlStandardNormal(mu, logvar) => {
                let (m, lv) = (self.value(*mu), self.value(*logvar));
                let scale = g[0] / T::of(m.rows() as f64);
                acc(*mu, &mut |gm| {
                    for (o, &a) in gm.iter_mut().zip(&m.data) {
                        *o += scale * a;
                    }
                });
                acc(*logvar, &mut |gl| {
                    for (o, &b) in gl.iter_mut().zip(&lv.data) {
                        *o += scale * T::of(0.5) * (b.exp() - T::one());
                    }
                });
            }
        }
    }
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn log_softmax_at<T: Scalar>(row: &[T], t: usize) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = row.iter().map(|&x| (x - max).exp()).sum::<T>().ln() + max;
    row[t] - lse
}

/// Result of a reverse pass.
pub struct Gradients<T> {
    nodes: Vec<Option<Vec<T>>>,
    params: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the loss with respect to a non-parameter node.
    pub fn of(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].as_deref()
    }

    /// Per-parameter gradients in store order; `None` for parameters the
    /// loss does not touch.
    pub fn params(&self) -> &[Option<Vec<T>>] {
        &self.params
    }

    pub fn into_params(self) -> Vec<Option<Vec<T>>> {
        self.params
    }
}
