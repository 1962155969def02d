//! SMILES <-> index sequences, and property sets <-> condition vectors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{PropertyId, PropertySet};

/// Terminator appended to every sequence and used as the start token.
pub const TERMINATOR: char = 'E';
/// Decoder unroll length; a sequence (with terminator) must fit.
pub const MAX_LEN: usize = 120;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("corpus uses the reserved terminator character '{TERMINATOR}'")]
    ReservedSymbol,
    #[error("character {symbol:?} at position {position} is not in the vocabulary")]
    UnknownSymbol { symbol: char, position: usize },
    #[error("SMILES has {length} characters; at most {} fit", MAX_LEN - 1)]
    TooLong { length: usize },
    #[error("index {index} is outside the vocabulary")]
    IndexOutOfRange { index: usize },
    #[error("no terminator in the sequence")]
    NoTerminator,
    #[error("no data to compute normalization statistics from")]
    EmptyStats,
}

/// Character vocabulary sorted by character code, terminator included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Vocabulary {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    pub fn from_symbols(mut symbols: Vec<char>) -> Result<Self, CodecError> {
        if !symbols.contains(&TERMINATOR) {
            symbols.push(TERMINATOR);
        }
        symbols.sort_unstable();
        symbols.dedup();
        let index = symbols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(Vocabulary { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn terminator_index(&self) -> usize {
        self.index[&TERMINATOR]
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn symbol(&self, i: usize) -> Option<char> {
        self.symbols.get(i).copied()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }
}

impl TryFrom<String> for Vocabulary {
    type Error = CodecError;

    fn try_from(s: String) -> Result<Self, CodecError> {
        Vocabulary::from_symbols(s.chars().collect())
    }
}

impl From<Vocabulary> for String {
    fn from(v: Vocabulary) -> String {
        v.symbols.iter().collect()
    }
}

/// Every character used by the corpus plus the terminator, sorted.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[S]) -> Result<Vocabulary, CodecError> {
    if corpus.is_empty() {
        return Err(CodecError::EmptyCorpus);
    }
    let mut symbols: Vec<char> = Vec::new();
    for s in corpus {
        for c in s.as_ref().chars() {
            if c == TERMINATOR {
                return Err(CodecError::ReservedSymbol);
            }
            symbols.push(c);
        }
        symbols.sort_unstable();
        symbols.dedup();
    }
    Vocabulary::from_symbols(symbols)
}

/// Indices of a SMILES string, terminator last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedSequence {
    pub indices: Vec<usize>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn encode_smiles(text: &str, vocab: &Vocabulary) -> Result<EncodedSequence, CodecError> {
    let length = text.chars().count();
    if length + 1 > MAX_LEN {
        return Err(CodecError::TooLong { length });
    }
    let mut indices = Vec::with_capacity(length + 1);
    for (position, symbol) in text.chars().enumerate() {
        if symbol == TERMINATOR {
            return Err(CodecError::UnknownSymbol { symbol, position });
        }
        indices.push(vocab.index_of(symbol).ok_or(CodecError::UnknownSymbol { symbol, position })?);
    }
    indices.push(vocab.terminator_index());
    Ok(EncodedSequence { indices })
}

/// Characters before the first terminator.
pub fn decode_indices(indices: &[usize], vocab: &Vocabulary) -> Result<String, CodecError> {
    let end = vocab.terminator_index();
    let mut out = String::new();
    for &i in indices {
        if i == end {
            return Ok(out);
        }
        out.push(vocab.symbol(i).ok_or(CodecError::IndexOutOfRange { index: i })?);
    }
    Err(CodecError::NoTerminator)
}

/// Range and mean of one property over the whole dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mw: RangeStats,
    pub logp: RangeStats,
    pub hbd: RangeStats,
    pub hba: RangeStats,
    pub tpsa: RangeStats,
}

impl NormalizationStats {
    /// Min, max and mean of every property.
    pub fn from_properties<'a>(props: impl IntoIterator<Item = &'a PropertySet>) -> Result<Self, CodecError> {
        let mut acc = [(f64::INFINITY, f64::NEG_INFINITY, 0.0f64); 5];
        let mut n = 0usize;
        for p in props {
            n += 1;
            for (slot, id) in acc.iter_mut().zip(PropertyId::ALL) {
                let v = p.get(id);
                slot.0 = slot.0.min(v);
                slot.1 = slot.1.max(v);
                slot.2 += v;
            }
        }
        if n == 0 {
            return Err(CodecError::EmptyStats);
        }
        let r = |i: usize| RangeStats { min: acc[i].0, max: acc[i].1, mean: acc[i].2 / n as f64 };
        Ok(NormalizationStats { mw: r(0), logp: r(1), hbd: r(2), hba: r(3), tpsa: r(4) })
    }

    pub fn get(&self, id: PropertyId) -> RangeStats {
        match id {
            PropertyId::Mw => self.mw,
            PropertyId::Logp => self.logp,
            PropertyId::Hbd => self.hbd,
            PropertyId::Hba => self.hba,
            PropertyId::Tpsa => self.tpsa,
        }
    }

    /// Dataset means as a property set (counts rounded).
    pub fn means(&self) -> PropertySet {
        let mut p = PropertySet { mw: 0.0, logp: 0.0, hbd: 0, hba: 0, tpsa: 0.0 };
        for id in PropertyId::ALL {
            p.set(id, self.get(id).mean);
        }
        p
    }
}

/// Width used for normalisation; a property without spread gets width 1.
fn span(s: &RangeStats) -> f64 {
    if s.max > s.min {
        s.max - s.min
    } else {
        1.0
    }
}

/// Affine map sending min to -1 and max to +1; values outside the range
/// land beyond +-1.
pub fn normalize_property(value: f64, id: PropertyId, stats: &NormalizationStats) -> f64 {
    let s = stats.get(id);
    2.0 * (value - s.min) / span(&s) - 1.0
}

pub fn denormalize_property(norm: f64, id: PropertyId, stats: &NormalizationStats) -> f64 {
    let s = stats.get(id);
    (norm + 1.0) * 0.5 * span(&s) + s.min
}

/// Slot layout of the condition vector:
/// `[mw | logp | hbd one-hot | hba one-hot | tpsa]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionLayout {
    pub hbd_slots: usize,
    pub hba_slots: usize,
}

impl Default for ConditionLayout {
    fn default() -> Self {
        ConditionLayout { hbd_slots: 12, hba_slots: 12 }
    }
}

impl ConditionLayout {
    pub fn dim(&self) -> usize {
        3 + self.hbd_slots + self.hba_slots
    }

    pub fn mw_offset(&self) -> usize {
        0
    }

    pub fn logp_offset(&self) -> usize {
        1
    }

    pub fn hbd_offset(&self) -> usize {
        2
    }

    pub fn hba_offset(&self) -> usize {
        2 + self.hbd_slots
    }

    pub fn tpsa_offset(&self) -> usize {
        2 + self.hbd_slots + self.hba_slots
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionVector {
    pub values: Vec<f64>,
}

/// Builds the condition vector; counts beyond a block are clamped into its
/// last slot with a warning.
pub fn make_condition(props: &PropertySet, stats: &NormalizationStats, layout: &ConditionLayout) -> ConditionVector {
    let mut values = vec![0.0; layout.dim()];
    values[layout.mw_offset()] = normalize_property(props.mw, PropertyId::Mw, stats);
    values[layout.logp_offset()] = normalize_property(props.logp, PropertyId::Logp, stats);
    values[layout.tpsa_offset()] = normalize_property(props.tpsa, PropertyId::Tpsa, stats);
    let mut one_hot = |count: u32, offset: usize, slots: usize, name: &str| {
        let slot = if count as usize >= slots {
            log::warn!("{name} {count} exceeds the {slots}-slot block; clamped");
            slots - 1
        } else {
            count as usize
        };
        values[offset + slot] = 1.0;
    };
    one_hot(props.hbd, layout.hbd_offset(), layout.hbd_slots, "hbd");
    one_hot(props.hba, layout.hba_offset(), layout.hba_slots, "hba");
    ConditionVector { values }
}

/// Reads a condition vector back into properties (counts by arg-max).
pub fn read_condition(c: &ConditionVector, stats: &NormalizationStats, layout: &ConditionLayout) -> PropertySet {
    let argmax = |offset: usize, slots: usize| {
        (0..slots)
            .max_by(|&a, &b| c.values[offset + a].total_cmp(&c.values[offset + b]))
            .unwrap_or(0) as u32
    };
    PropertySet {
        mw: denormalize_property(c.values[layout.mw_offset()], PropertyId::Mw, stats),
        logp: denormalize_property(c.values[layout.logp_offset()], PropertyId::Logp, stats),
        hbd: argmax(layout.hbd_offset(), layout.hbd_slots),
        hba: argmax(layout.hba_offset(), layout.hba_slots),
        tpsa: denormalize_property(c.values[layout.tpsa_offset()], PropertyId::Tpsa, stats),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> NormalizationStats {
        let r = |min, max| RangeStats { min, max, mean: (min + max) / 2.0 };
        NormalizationStats { mw: r(100.0, 500.0), logp: r(-2.0, 5.0), hbd: r(0.0, 5.0), hba: r(0.0, 10.0), tpsa: r(0.0, 150.0) }
    }

    #[test]
    fn vocabulary_is_sorted_with_terminator() {
        let v = build_vocabulary(&["CC", "CO"]).unwrap();
        assert_eq!(v.symbols(), &['C', 'E', 'O']);
        assert_eq!(v.len(), 3);
        let v = build_vocabulary(&["c1ccccc1Cl"]).unwrap();
        for c in ['C', 'l', 'c', '1'] {
            assert!(v.index_of(c).is_some());
        }
        assert_eq!(build_vocabulary(&["CCO", "c1ccccc1"]).unwrap(), build_vocabulary(&["CCO", "c1ccccc1"]).unwrap());
        assert_eq!(build_vocabulary::<&str>(&[]), Err(CodecError::EmptyCorpus));
    }

    #[test]
    fn encode_and_decode() {
        let v = Vocabulary::from_symbols(vec!['C']).unwrap();
        assert_eq!(v.terminator_index(), 1);
        assert_eq!(encode_smiles("CC", &v).unwrap().indices, vec![0, 0, 1]);
        assert_eq!(encode_smiles("", &v).unwrap().indices, vec![1]);
        assert_eq!(encode_smiles(&"C".repeat(120), &v), Err(CodecError::TooLong { length: 120 }));
        assert!(encode_smiles(&"C".repeat(119), &v).is_ok());
        assert!(matches!(encode_smiles("CO", &v), Err(CodecError::UnknownSymbol { symbol: 'O', position: 1 })));
        assert_eq!(decode_indices(&[0, 0, 1], &v).unwrap(), "CC");
        assert_eq!(decode_indices(&[1, 0], &v).unwrap(), "");
        assert_eq!(decode_indices(&[0; 120], &v), Err(CodecError::NoTerminator));
    }

    #[test]
    fn vocabulary_serializes_as_string() {
        let v = build_vocabulary(&["CC(=O)O"]).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "\"()=CEO\"");
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), v);
    }

    #[test]
    fn normalization_is_affine() {
        let s = stats();
        assert_eq!(normalize_property(100.0, PropertyId::Mw, &s), -1.0);
        assert_eq!(normalize_property(300.0, PropertyId::Mw, &s), 0.0);
        assert!((normalize_property(540.0, PropertyId::Mw, &s) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn condition_layout() {
        let s = stats();
        let layout = ConditionLayout::default();
        assert_eq!(layout.dim(), 27);
        let mid = PropertySet { mw: 300.0, logp: 1.5, hbd: 0, hba: 0, tpsa: 75.0 };
        let c = make_condition(&mid, &s, &layout);
        assert_eq!(c.values[0], 0.0);
        assert_eq!(c.values[1], 0.0);
        assert_eq!(c.values[26], 0.0);
        assert_eq!(c.values[2], 1.0);
        assert_eq!(c.values[14], 1.0);
        assert_eq!(c.values.iter().sum::<f64>(), 2.0);

        let other = make_condition(&PropertySet { logp: 3.0, ..mid }, &s, &layout);
        let differing: Vec<usize> = (0..27).filter(|&i| c.values[i] != other.values[i]).collect();
        assert_eq!(differing, vec![1]);

        let big = make_condition(&PropertySet { hbd: 40, ..mid }, &s, &layout);
        assert_eq!(big.values[13], 1.0);
        assert_eq!(read_condition(&c, &s, &layout), mid);
    }

    #[test]
    fn stats_without_spread() {
        let p = PropertySet { mw: 1.0, logp: 1.0, hbd: 0, hba: 0, tpsa: 1.0 };
        let s = NormalizationStats::from_properties([&p, &p]).unwrap();
        assert_eq!(normalize_property(1.0, PropertyId::Tpsa, &s), -1.0);
        assert_eq!(denormalize_property(-1.0, PropertyId::Tpsa, &s), 1.0);
        assert_eq!(NormalizationStats::from_properties([]), Err(CodecError::EmptyStats));
    }
}
