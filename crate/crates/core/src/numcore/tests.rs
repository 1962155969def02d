use super::*;
use proptest::prelude::*;

fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor<f64> {
    Tensor::from_rows(rows, cols, data.to_vec())
}

#[test]
fn matmul_identity() {
    let a = t(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(Tensor::identity(2).matmul(&a).unwrap(), a);
    assert!(matches!(a.matmul(&t(3, 1, &[0.0; 3])), Err(NumError::ShapeMismatch { .. })));
}

#[test]
fn elementwise_values() {
    assert_eq!(sigmoid(0.0f64), 0.5);
    let store = ParamStore::<f64>::default();
    let mut g = Graph::new(&store);
    let x = g.input(t(1, 3, &[0.0, 0.0, 0.0]));
    let p = g.softmax(x);
    for &v in &g.value(p).data {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    let x = g.input(t(1, 2, &[1000.0, 0.0]));
    let p = g.softmax(x);
    assert!((g.value(p).data[0] - 1.0).abs() < 1e-12);
    assert!(g.value(p).data[1] >= 0.0 && g.value(p).data.iter().all(|v| v.is_finite()));
}

#[test]
fn cross_entropy_values() {
    let store = ParamStore::<f64>::default();
    let mut g = Graph::new(&store);
    let p = g.input(t(2, 4, &[0.0, 1.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25]));
    let first = g.cross_entropy(p, &[1, 0], &[1.0, 0.0]).unwrap();
    assert_eq!(g.scalar(first), 0.0);
    let second = g.cross_entropy(p, &[1, 0], &[0.0, 1.0]).unwrap();
    assert!((g.scalar(second) - 4f64.ln()).abs() < 1e-12);
    let zero = g.cross_entropy(p, &[0, 0], &[1.0, 0.0]).unwrap();
    assert!((g.scalar(zero) - -(1e-12f64).ln()).abs() < 1e-9);

    // batch mean equals the per-row average
    let probs = [0.1, 0.7, 0.2, 0.5, 0.3, 0.2, 0.05, 0.05, 0.9];
    let targets = [1, 0, 2];
    let x = g.input(t(3, 3, &probs));
    let l = g.cross_entropy(x, &targets, &[1.0; 3]).unwrap();
    let brute: f64 = targets.iter().enumerate().map(|(r, &c)| -probs[r * 3 + c].ln()).sum::<f64>() / 3.0;
    assert!((g.scalar(l) - brute).abs() < 1e-12);
    let logits = g.input(t(3, 3, &probs.map(f64::ln)));
    let fused = g.softmax_cross_entropy(logits, &targets, &[1.0; 3]).unwrap();
    assert!((g.scalar(fused) - brute).abs() < 1e-12);
}

#[test]
fn kl_closed_forms() {
    let store = ParamStore::<f64>::default();
    let mut g = Graph::new(&store);
    let zero = g.input(Tensor::zeros(2, 5));
    let ones = g.input(Tensor::filled(2, 5, 1.0));
    let kl = g.kl_standard_normal(zero, zero).unwrap();
    assert_eq!(g.scalar(kl), 0.0);
    let kl = g.kl_standard_normal(ones, zero).unwrap();
    assert!((g.scalar(kl) - 2.5).abs() < 1e-12);
}

#[test]
fn lstm_zero_params_give_zero_state() {
    let mut s = ParamStore::<f64>::default();
    let p = LstmCellParams::register(&mut s, "l", 3, 4);
    let mut g = Graph::new(&s);
    let x = g.input(Tensor::filled(2, 3, 0.7));
    let h = g.input(Tensor::zeros(2, 4));
    let c = g.input(Tensor::zeros(2, 4));
    let (h1, c1) = lstm_cell(&mut g, &p, x, h, c).unwrap();
    assert!(g.value(h1).data.iter().all(|&v| v == 0.0));
    assert!(g.value(c1).data.iter().all(|&v| v == 0.0));
}

#[test]
fn lstm_saturated_forget_gate_adds_to_cell() {
    let mut s = ParamStore::<f64>::default();
    let p = LstmCellParams::register(&mut s, "l", 2, 3);
    for j in 0..12 {
        s.get_mut(p.w_x).data[j] = 0.1 * (j as f64 - 5.0);
        s.get_mut(p.w_x).data[12 + j] = -0.05 * j as f64;
    }
    for j in 3..6 {
        s.get_mut(p.bias).data[j] = 50.0;
    }
    let x = t(1, 2, &[0.3, -0.4]);
    let c0 = t(1, 3, &[0.5, -1.0, 2.0]);
    let mut g = Graph::new(&s);
    let (xv, h, c) = (g.input(x.clone()), g.input(Tensor::zeros(1, 3)), g.input(c0.clone()));
    let (_, c1) = lstm_cell(&mut g, &p, xv, h, c).unwrap();
    let pre = x.matmul(s.get(p.w_x)).unwrap();
    for k in 0..3 {
        let i = sigmoid(pre.data[k]);
        let cand = pre.data[6 + k].tanh();
        assert!((g.value(c1).data[k] - (c0.data[k] + i * cand)).abs() < 1e-12);
    }
}

#[test]
fn tape_free_cell_matches_tape() {
    let mut s = ParamStore::<f64>::default();
    let p = LstmCellParams::register(&mut s, "l", 3, 4);
    for id in [p.w_x, p.w_h, p.bias] {
        for (j, v) in s.get_mut(id).data.iter_mut().enumerate() {
            *v = ((j * 37 % 11) as f64 - 5.0) * 0.07;
        }
    }
    let x = t(2, 3, &[0.1, 0.2, -0.3, 0.5, -0.1, 0.0]);
    let h0 = t(2, 4, &[0.1, -0.2, 0.3, 0.0, 0.2, 0.2, -0.1, 0.4]);
    let c0 = t(2, 4, &[0.5, 0.0, -0.3, 0.1, 0.0, 0.1, 0.2, -0.2]);
    let mut g = Graph::new(&s);
    let (xv, hv, cv) = (g.input(x.clone()), g.input(h0.clone()), g.input(c0.clone()));
    let (h1, c1) = lstm_cell(&mut g, &p, xv, hv, cv).unwrap();
    let mut pre = x.matmul(s.get(p.w_x)).unwrap().data;
    let (mut h, mut c) = (h0.data, c0.data);
    lstm_cell_forward(&s, &p, &mut pre, &mut h, &mut c);
    for (a, b) in h.iter().zip(&g.value(h1).data).chain(c.iter().zip(&g.value(c1).data)) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn every_op_passes_finite_differences() {
    for op in gradcheck::OPS {
        for seed in 0..20 {
            let err = gradcheck::check_op(op, seed).unwrap();
            assert!(err < 1e-4, "{op} seed {seed}: {err}");
        }
    }
}

#[test]
fn adam_hand_computed_step() {
    let mut params = vec![Tensor::from_rows(1, 1, vec![1.0f64])];
    let mut state = OptimizerState::new(&params);
    adam_step(&mut params, &[Some(vec![0.5])], &mut state, 0.1);
    // m = 0.05, v = 0.00025; corrected 0.5 and 0.25; step = 0.1*0.5/(0.5+1e-8)
    let expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
    assert!((params[0].data[0] - expected).abs() < 1e-15);

    let mut params = vec![Tensor::from_rows(1, 2, vec![1.0f64, -2.0])];
    let mut state = OptimizerState::new(&params);
    for _ in 0..5 {
        adam_step(&mut params, &[None], &mut state, 0.1);
    }
    assert_eq!(params[0].data, vec![1.0, -2.0]);

    let mut params = vec![Tensor::from_rows(1, 1, vec![0.0f64])];
    let mut state = OptimizerState::new(&params);
    let mut prev = 0.0;
    for _ in 0..200 {
        adam_step(&mut params, &[Some(vec![3.0])], &mut state, 0.01);
        let step = prev - params[0].data[0];
        assert!((step - 0.01).abs() < 1e-6);
        prev = params[0].data[0];
    }
}

#[test]
fn clipping_bounds_the_norm() {
    let mut g = vec![Some(vec![3.0f64, 4.0]), None, Some(vec![12.0])];
    let before = clip_global_norm(&mut g, 5.0);
    assert_eq!(before, 13.0);
    let after: f64 = g.iter().flatten().flatten().map(|x| x * x).sum::<f64>().sqrt();
    assert!((after - 5.0).abs() < 1e-12);
}

#[test]
fn learning_rate_schedule() {
    assert_eq!(lr_schedule(0), 1e-4);
    assert!((lr_schedule(1) - 9.7e-5).abs() < 1e-18);
    assert!((lr_schedule(10) - 7.374e-5).abs() < 1e-8);
}

#[test]
fn forward_is_deterministic() {
    let run = || {
        let out = gradcheck::check_op("lstm_sequence", 7).unwrap();
        out.to_bits()
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn softmax_sums_to_one(row in proptest::collection::vec(-500.0f64..500.0, 1..12)) {
        let mut data = row.clone();
        softmax_rows(&mut data, row.len());
        let s: f64 = data.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-6);
        prop_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn softmax_sums_to_one_f32(row in proptest::collection::vec(-80.0f32..80.0, 1..12)) {
        let mut data = row.clone();
        softmax_rows(&mut data, row.len());
        let s: f32 = data.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-6);
    }
}
