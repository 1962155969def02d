use super::*;
use crate::chem::parse_smiles;
use crate::codec::{build_vocabulary, encode_smiles, make_condition, ConditionLayout, NormalizationStats};
use crate::descriptors::property_vector;
use crate::numcore::softmax_rows;
use rand_distr::{Distribution, StandardNormal};

const SMILES: &[&str] = &["CCO", "c1ccccc1O", "CC(=O)Oc1ccccc1C(=O)O", "CCN(CC)CC", "OC(=O)CCl", "C1CCNCC1"];

fn tiny_hyper(layout: &ConditionLayout) -> ModelHyper {
    ModelHyper { embedding_dim: 4, hidden_dim: 5, num_layers: 2, latent_dim: 3, ..ModelHyper::desk(layout.dim()) }
}

fn fixture<T: Scalar>(hyper: impl Fn(&ConditionLayout) -> ModelHyper, seed: u64) -> (Cvae<T>, Vec<Example>) {
    let vocab = build_vocabulary(SMILES).unwrap();
    let props: Vec<_> = SMILES.iter().map(|s| property_vector(&parse_smiles(s).unwrap()).unwrap()).collect();
    let stats = NormalizationStats::from_properties(&props).unwrap();
    let layout = ConditionLayout::default();
    let model = Cvae::new(hyper(&layout), vocab.clone(), stats, layout, seed).unwrap();
    let examples = SMILES
        .iter()
        .zip(&props)
        .map(|(s, p)| Example {
            indices: encode_smiles(s, &vocab).unwrap().indices,
            condition: make_condition(p, &stats, &layout).values,
        })
        .collect();
    (model, examples)
}

#[test]
fn initialisation_ranges() {
    let (m, _) = fixture::<f32>(tiny_hyper, 1);
    let hd = m.hyper.hidden_dim;
    for (name, t) in m.params.iter() {
        if name.ends_with("bias") {
            for (j, &x) in t.data.iter().enumerate() {
                assert_eq!(x, if (hd..2 * hd).contains(&j) { 1.0 } else { 0.0 }, "{name}");
            }
        } else if name.ends_with(".b") {
            assert!(t.data.iter().all(|&x| x == 0.0));
        } else {
            assert!(t.data.iter().all(|&x| x.abs() <= 0.08 && x != 0.0), "{name}");
        }
    }
    assert_eq!(m.params.get(0).dims(), (m.vocab.len(), 4));
}

#[test]
fn encode_shapes_and_determinism() {
    let (m, ex) = fixture::<f32>(tiny_hyper, 2);
    let (mu, lv) = m.encode(&ex[2].indices, &ex[2].condition).unwrap();
    assert_eq!((mu.len(), lv.len()), (3, 3));
    assert_eq!(m.encode(&ex[2].indices, &ex[2].condition).unwrap(), (mu.clone(), lv));
    // batched encoding with padding agrees with single encoding
    let seqs: Vec<&[usize]> = ex.iter().map(|e| e.indices.as_slice()).collect();
    let conds: Vec<&[f64]> = ex.iter().map(|e| e.condition.as_slice()).collect();
    let (batch_mu, _) = m.encode_batch(&seqs, &conds).unwrap();
    for (a, b) in batch_mu.row(2).iter().zip(&mu) {
        assert!((a - b).abs() < 1e-6);
    }
    let mut other = ex[2].condition.clone();
    other[1] = -other[1] + 0.5;
    assert_ne!(m.encode(&ex[2].indices, &other).unwrap().0, mu);
}

#[test]
fn reparameterization() {
    let mu = [0.5f64, -1.0];
    assert_eq!(reparameterize(&mu, &[0.3, 2.0], &[0.0, 0.0]), mu.to_vec());
    assert_eq!(reparameterize(&mu, &[0.0, 0.0], &[1.5, -2.0]), vec![2.0, -3.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (m, lv) = (0.7f64, (0.4f64).ln() * 2.0);
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| reparameterize(&[m], &[lv], &[StandardNormal.sample(&mut rng)])[0])
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((mean - m).abs() / m < 0.01);
    assert!((sd - 0.4).abs() / 0.4 < 0.01);
}

#[test]
fn stepwise_decoding_matches_teacher_forcing() {
    let (m, ex) = fixture::<f64>(tiny_hyper, 4);
    let e = &ex[2];
    let z = vec![0.3, -0.2, 0.9];
    let tf = m.teacher_forced_logits(&e.indices, &e.condition, &z).unwrap();
    assert_eq!(tf.dims(), (e.indices.len(), m.vocab.len()));

    let ctx = m
        .decode_context(&Tensor::from_rows(1, 3, z.clone()), &Tensor::from_rows(1, 27, e.condition.clone()))
        .unwrap();
    let mut state = m.initial_state(1);
    let mut prev = m.vocab.terminator_index();
    for t in 0..e.indices.len() {
        let logits = m.decode_step(&ctx, &[prev], &mut state).unwrap();
        assert_eq!(logits.cols(), m.vocab.len());
        for (a, b) in logits.row(0).iter().zip(tf.row(t)) {
            assert!((a - b).abs() < 1e-12);
        }
        prev = e.indices[t];
    }
    let mut again = m.initial_state(1);
    let first = m.decode_step(&ctx, &[m.vocab.terminator_index()], &mut again).unwrap();
    assert_eq!(first.row(0), tf.row(0));
}

#[test]
fn loss_closed_forms() {
    let (m, ex) = fixture::<f64>(tiny_hyper, 5);
    let b = BatchInput::new(&[ex[0].indices.as_slice()], &[ex[0].condition.as_slice()], m.vocab.terminator_index());
    let mut g = Graph::new(&m.params);
    let v = m.loss_graph(&mut g, &b, Tensor::zeros(1, 3), 0.5).unwrap();
    let (recon, kl, total) = (g.scalar(v.recon), g.scalar(v.kl), g.scalar(v.total));
    assert!(kl >= 0.0);
    assert!((total - (recon + 0.5 * kl)).abs() < 1e-12);
    // recon is the mean per-position cross entropy of the logits
    let mut p = g.value(v.logits).data.clone();
    softmax_rows(&mut p, m.vocab.len());
    let per_pos: f64 = ex[0].indices.iter().enumerate().map(|(t, &c)| -p[t * m.vocab.len() + c].ln()).sum::<f64>()
        / ex[0].indices.len() as f64;
    assert!((recon - per_pos).abs() < 1e-12);

    // perfect predictions leave only the weighted KL
    let mut g = Graph::new(&m.params);
    let n = ex[0].indices.len();
    let mut logits = vec![0.0; n * m.vocab.len()];
    for (t, &c) in ex[0].indices.iter().enumerate() {
        logits[t * m.vocab.len() + c] = 100.0;
    }
    let l = g.input(Tensor::from_rows(n, m.vocab.len(), logits));
    let r = g.softmax_cross_entropy(l, &ex[0].indices, &vec![1.0; n]).unwrap();
    assert!(g.scalar(r) < 1e-40);
}

#[test]
fn full_model_gradient_matches_finite_differences() {
    let (mut m, ex) = fixture::<f64>(tiny_hyper, 6);
    // at the initial scale the encoder gradients sit near the
    // finite-difference noise floor; a wider draw keeps them measurable
    for t in m.params.tensors_mut() {
        for x in t.data.iter_mut() {
            *x *= 6.0;
        }
    }
    let err = loss_gradient_error(&m, &ex[..2], 0.7, 11).unwrap();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let (mut m, _) = fixture::<f32>(tiny_hyper, 7);
    m.meta.mu_std = vec![0.25, 1.5, 0.1];
    save_checkpoint(&m, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, m);
    for ((_, a), (_, b)) in back.params.iter().zip(m.params.iter()) {
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let header = read_header(&path).unwrap();
    assert_eq!(header.hyper, m.hyper);
    assert_eq!(header.vocab, m.vocab);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(CvaeError::CorruptCheckpoint(_))));
    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x40;
    std::fs::write(&path, &flipped).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(CvaeError::CorruptCheckpoint(_))));
    let mut versioned = bytes.clone();
    versioned[6] = 9;
    std::fs::write(&path, &versioned).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(CvaeError::VersionMismatch { found: 9, expected: 1 })));

    std::fs::write(&path, &bytes).unwrap();
    let narrow = ConditionLayout { hbd_slots: 6, hba_slots: 6 };
    assert!(matches!(
        load_checkpoint_with_layout(&path, &narrow),
        Err(CvaeError::ConditionDimMismatch { checkpoint: 27, layout: 15 })
    ));
}

#[test]
fn zero_epochs_keep_initialisation() {
    let (mut m, ex) = fixture::<f32>(tiny_hyper, 8);
    let init = m.params.clone();
    let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
    let summary = train(&mut m, &ex, &[], &cfg, &mut ()).unwrap();
    assert_eq!(summary.epochs_run, 0);
    assert_eq!(m.params, init);
    assert_eq!(m.meta.mu_std.len(), 3);
}

#[test]
fn training_is_deterministic_and_learns() {
    let run = || {
        let (mut m, ex) = fixture::<f32>(tiny_hyper, 9);
        let cfg = TrainConfig { epochs: 30, batch_size: 3, learning_rate: 1e-2, lr_decay: 1.0, patience: 100, ..TrainConfig::default() };
        let mut kls = Vec::new();
        let s = train(&mut m, &ex, &ex[..2], &cfg, &mut OnBatch(|b: &BatchStats| kls.push(b.kl))).unwrap();
        assert!(kls.iter().all(|&k| k >= 0.0));
        s.history
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert!(a.last().unwrap().train_recon < 0.8 * a[0].train_recon);
}

#[test]
fn empty_training_set_is_rejected() {
    let (mut m, _) = fixture::<f32>(tiny_hyper, 10);
    assert!(matches!(train(&mut m, &[], &[], &TrainConfig::default(), &mut ()), Err(CvaeError::EmptyDataset)));
}

#[test]
fn bucketed_batches_cover_every_index() {
    let lengths: Vec<usize> = (0..103).map(|i| (i * 7) % 40 + 2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batches = bucketed_batches(&lengths, 10, 4, &mut rng);
    let mut all: Vec<usize> = batches.concat();
    all.sort_unstable();
    assert_eq!(all, (0..103).collect::<Vec<_>>());
    assert!(batches.iter().all(|b| b.len() <= 10));
}
