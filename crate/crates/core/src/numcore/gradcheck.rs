//! Central finite-difference checks of tape gradients, in 64-bit mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lstm_cell, Graph, LstmCellParams, NumError, ParamStore, Tensor, Var};

pub const EPS: f64 = 1e-5;

/// `||a - b|| / max(||a||, ||b||)`, 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-12 {
        0.0
    } else {
        diff / scale
    }
}

/// Comparison of a tape gradient with central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    /// Relative error over all parameters taken as one vector.
    pub overall: f64,
    /// Largest relative error of a single parameter tensor.
    pub worst_tensor: f64,
    pub worst_name: String,
}

/// Largest relative error between the tape gradient of the scalar built by
/// `loss` and central differences over every parameter in `store`.
pub fn check<F, E>(store: &ParamStore<f64>, loss: F) -> Result<f64, E>
where
    F: Fn(&mut Graph<f64>) -> Result<Var, E>,
{
    Ok(check_report(store, loss)?.worst_tensor)
}

pub fn check_report<F, E>(store: &ParamStore<f64>, loss: F) -> Result<GradReport, E>
where
    F: Fn(&mut Graph<f64>) -> Result<Var, E>,
{
    let analytic = {
        let mut g = Graph::new(store);
        let l = loss(&mut g)?;
        g.backward(l).into_params()
    };
    let eval = |s: &ParamStore<f64>| -> Result<f64, E> {
        let mut g = Graph::new(s);
        let l = loss(&mut g)?;
        Ok(g.scalar(l))
    };
    let mut report = GradReport { overall: 0.0, worst_tensor: 0.0, worst_name: String::new() };
    let (mut all_a, mut all_n) = (Vec::new(), Vec::new());
    let mut probe = store.clone();
    for k in 0..store.len() {
        let mut numeric = vec![0.0; store.get(k).len()];
        for (j, slot) in numeric.iter_mut().enumerate() {
            let x = store.get(k).data[j];
            probe.get_mut(k).data[j] = x + EPS;
            let up = eval(&probe)?;
            probe.get_mut(k).data[j] = x - EPS;
            let down = eval(&probe)?;
            probe.get_mut(k).data[j] = x;
            *slot = (up - down) / (2.0 * EPS);
        }
        let a = analytic[k].clone().unwrap_or_else(|| vec![0.0; numeric.len()]);
        let e = relative_error(&a, &numeric);
        if e > report.worst_tensor {
            report.worst_tensor = e;
            report.worst_name = store.name(k).to_string();
        }
        all_a.extend(a);
        all_n.extend(numeric);
    }
    report.overall = relative_error(&all_a, &all_n);
    Ok(report)
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_rows(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect())
}

/// Reduces a matrix output to a scalar through fixed random weights so
/// every output element carries a distinct gradient.
fn weighted_sum(g: &mut Graph<f64>, out: Var, rng_seed: u64) -> Result<Var, NumError> {
    let (rows, cols) = g.value(out).dims();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let w = random(&mut rng, rows, cols, -1.0, 1.0);
    let w = g.input(w);
    let prod = g.mul(out, w)?;
    Ok(g.sum(prod))
}

pub const OPS: &[&str] = &[
    "matmul", "add", "add_row", "mul", "scale", "sigmoid", "tanh", "exp", "concat_rows", "concat_cols", "slice",
    "slice_rows", "embedding", "blend", "softmax", "sum", "cross_entropy", "softmax_cross_entropy",
    "kl_standard_normal", "lstm_sequence",
];

/// Gradient check of one named op on shapes and values drawn from `seed`.
pub fn check_op(op: &str, seed: u64) -> Result<f64, NumError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(1..5usize);
    let c = rng.random_range(1..6usize);
    let k = rng.random_range(1..5usize);
    let mut s = ParamStore::default();
    let ws = seed ^ 0x5eed;
    match op {
        "matmul" => {
            s.add("a", random(&mut rng, r, k, -1.0, 1.0));
            s.add("b", random(&mut rng, k, c, -1.0, 1.0));
            check(&s, |g| {
                let (a, b) = (g.param(0), g.param(1));
                let o = g.matmul(a, b)?;
                weighted_sum(g, o, ws)
            })
        }
        "add" | "mul" => {
            s.add("a", random(&mut rng, r, c, -1.0, 1.0));
            s.add("b", random(&mut rng, r, c, -1.0, 1.0));
            let is_add = op == "add";
            check(&s, |g| {
                let (a, b) = (g.param(0), g.param(1));
                let o = if is_add { g.add(a, b)? } else { g.mul(a, b)? };
                weighted_sum(g, o, ws)
            })
        }
        "add_row" => {
            s.add("a", random(&mut rng, r, c, -1.0, 1.0));
            s.add("b", random(&mut rng, 1, c, -1.0, 1.0));
            check(&s, |g| {
                let (a, b) = (g.param(0), g.param(1));
                let o = g.add_row(a, b)?;
                weighted_sum(g, o, ws)
            })
        }
        "scale" | "sigmoid" | "tanh" | "exp" | "softmax" | "sum" => {
            s.add("a", random(&mut rng, r, c, -2.0, 2.0));
            let factor = rng.random_range(-3.0..3.0);
            check(&s, |g| {
                let a = g.param(0);
                let o = match op {
                    "scale" => g.scale(a, factor),
                    "sigmoid" => g.sigmoid(a),
                    "tanh" => g.tanh(a),
                    "exp" => g.exp(a),
                    "softmax" => g.softmax(a),
                    _ => return Ok(g.sum(a)),
                };
                weighted_sum(g, o, ws)
            })
        }
        "concat_rows" | "concat_cols" => {
            let axis = usize::from(op == "concat_cols");
            let (r2, c2) = if axis == 0 { (k, c) } else { (r, k) };
            s.add("a", random(&mut rng, r, c, -1.0, 1.0));
            s.add("b", random(&mut rng, r2, c2, -1.0, 1.0));
            check(&s, |g| {
                let (a, b) = (g.param(0), g.param(1));
                let o = g.concat(&[a, b, a], axis)?;
                weighted_sum(g, o, ws)
            })
        }
        "slice" | "slice_rows" => {
            s.add("a", random(&mut rng, r + 2, c + 2, -1.0, 1.0));
            let start = rng.random_range(0..3usize);
            let by_rows = op == "slice_rows";
            check(&s, |g| {
                let a = g.param(0);
                let o = if by_rows { g.slice_rows(a, start, r)? } else { g.slice(a, start, c)? };
                weighted_sum(g, o, ws)
            })
        }
        "embedding" => {
            s.add("table", random(&mut rng, k + 1, c, -1.0, 1.0));
            let idx: Vec<usize> = (0..r + 2).map(|_| rng.random_range(0..=k)).collect();
            check(&s, |g| {
                let t = g.param(0);
                let o = g.embedding(t, &idx)?;
                weighted_sum(g, o, ws)
            })
        }
        "blend" => {
            s.add("a", random(&mut rng, r, c, -1.0, 1.0));
            s.add("b", random(&mut rng, r, c, -1.0, 1.0));
            let mask: Vec<f64> = (0..r).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
            check(&s, |g| {
                let (a, b) = (g.param(0), g.param(1));
                let o = g.blend(&mask, a, b)?;
                weighted_sum(g, o, ws)
            })
        }
        "cross_entropy" | "softmax_cross_entropy" => {
            let cols = c + 1;
            let (lo, hi) = if op == "cross_entropy" { (0.05, 1.0) } else { (-2.0, 2.0) };
            s.add("x", random(&mut rng, r, cols, lo, hi));
            let targets: Vec<usize> = (0..r).map(|_| rng.random_range(0..cols)).collect();
            let weights: Vec<f64> = (0..r).map(|i| if i == 0 { 1.0 } else { rng.random_range(0..2) as f64 }).collect();
            let plain = op == "cross_entropy";
            check(&s, |g| {
                let x = g.param(0);
                if plain {
                    g.cross_entropy(x, &targets, &weights)
                } else {
                    g.softmax_cross_entropy(x, &targets, &weights)
                }
            })
        }
        "kl_standard_normal" => {
            s.add("mu", random(&mut rng, r, c, -1.0, 1.0));
            s.add("logvar", random(&mut rng, r, c, -1.0, 1.0));
            check(&s, |g| {
                let (m, l) = (g.param(0), g.param(1));
                g.kl_standard_normal(m, l)
            })
        }
        "lstm_sequence" => {
            let (input, hidden, steps) = (k + 1, c, 3);
            let p = LstmCellParams::register(&mut s, "cell", input, hidden);
            for id in [p.w_x, p.w_h, p.bias] {
                let (rr, cc) = s.get(id).dims();
                *s.get_mut(id) = random(&mut rng, rr, cc, -0.8, 0.8);
            }
            let xs: Vec<usize> = (0..steps).map(|_| s.add("x", random(&mut rng, r, input, -1.0, 1.0))).collect();
            let h0 = s.add("h0", random(&mut rng, r, hidden, -0.5, 0.5));
            let c0 = s.add("c0", random(&mut rng, r, hidden, -0.5, 0.5));
            check(&s, |g| {
                let (mut h, mut cell) = (g.param(h0), g.param(c0));
                for &x in &xs {
                    let xv = g.param(x);
                    (h, cell) = lstm_cell(g, &p, xv, h, cell)?;
                }
                let both = g.concat(&[h, cell], 1)?;
                weighted_sum(g, both, ws)
            })
        }
        other => panic!("no gradient check for {other}"),
    }
}
