use std::io::{BufRead, BufReader};

use flate2::read::GzDecoder;
use molgen::chem::{canonical_ranks, canonicalize, parse_smiles, write_smiles_with_order};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<String> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/desk_corpus.smi.gz");
    let file = std::fs::File::open(path).unwrap();
    BufReader::new(GzDecoder::new(file))
        .lines()
        .map(Result::unwrap)
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .collect()
}

#[test]
fn desk_corpus_round_trips() {
    let mut failures = Vec::new();
    for s in corpus() {
        let first = match parse_smiles(&s) {
            Ok(m) => canonicalize(&m),
            Err(e) => {
                failures.push(format!("{s}: {e}"));
                continue;
            }
        };
        match parse_smiles(&first) {
            Ok(m) if canonicalize(&m) == first => {}
            Ok(m) => failures.push(format!("{s}: {first} -> {}", canonicalize(&m))),
            Err(e) => failures.push(format!("{s}: {first} reparse {e}")),
        }
    }
    assert!(failures.is_empty(), "{} failures, first: {:?}", failures.len(), &failures[..failures.len().min(10)]);
}

#[test]
fn canonical_form_ignores_atom_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    for s in corpus().iter().take(2000) {
        let mol = parse_smiles(s).unwrap();
        let canon = canonicalize(&mol);
        let n = mol.atoms.len() as u32;
        for _ in 0..3 {
            let mut order: Vec<u32> = (0..n).collect();
            order.shuffle(&mut rng);
            let random = write_smiles_with_order(&mol, &order);
            let again = canonicalize(&parse_smiles(&random).unwrap());
            if again != canon {
                failures.push(format!("{s}: {random} gave {again} vs {canon}"));
            }
        }
        assert_eq!(canonical_ranks(&mol).len(), mol.atoms.len());
    }
    assert!(failures.is_empty(), "{} failures, first: {:?}", failures.len(), &failures[..failures.len().min(10)]);
}
