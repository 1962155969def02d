//! Chemical tokenizer for SMILES text.
//!
//! Every token records the byte span it was read from, so joining the
//! lexemes in order reproduces the input exactly.

use std::ops::Range;

use super::element::Element;
use super::ChemError;

/// Contents of a `[...]` atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketAtom {
    pub isotope: Option<u16>,
    pub hydrogens: u8,
    pub charge: i8,
    pub chiral: bool,
    pub class: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomToken {
    pub element: Element,
    pub aromatic: bool,
    pub bracket: Option<BracketAtom>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    /// `/` or `\`: directional single bond; the direction is dropped.
    Directional,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    Atom(AtomToken),
    Bond(BondSymbol),
    Open,
    Close,
    Ring(u8),
    Dot,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexeme {
    pub token: Token,
    pub span: Range<usize>,
}

impl Lexeme {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.span.clone()]
    }
}

/// Splits SMILES text into atoms, bonds, branches, ring closures and dots.
pub fn tokenize_smiles(text: &str) -> Result<Vec<Lexeme>, ChemError> {
    if text.is_empty() {
        return Err(ChemError::Empty);
    }
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let c = bytes[i];
        let token = match c {
            b'(' => {
                i += 1;
                Token::Open
            }
            b')' => {
                i += 1;
                Token::Close
            }
            b'.' => {
                i += 1;
                Token::Dot
            }
            b'-' => {
                i += 1;
                Token::Bond(BondSymbol::Single)
            }
            b'=' => {
                i += 1;
                Token::Bond(BondSymbol::Double)
            }
            b'#' => {
                i += 1;
                Token::Bond(BondSymbol::Triple)
            }
            b':' => {
                i += 1;
                Token::Bond(BondSymbol::Aromatic)
            }
            b'/' | b'\\' => {
                i += 1;
                log::warn!("stereo bond '{}' at {} ignored", c as char, start);
                Token::Bond(BondSymbol::Directional)
            }
            b'0'..=b'9' => {
                i += 1;
                Token::Ring(c - b'0')
            }
            b'%' => {
                let d = bytes.get(i + 1..i + 3).filter(|d| d.iter().all(u8::is_ascii_digit));
                match d {
                    Some(d) => {
                        i += 3;
                        Token::Ring((d[0] - b'0') * 10 + (d[1] - b'0'))
                    }
                    None => return Err(ChemError::UnknownCharacter { position: i }),
                }
            }
            b'[' => {
                let close = bytes[i..]
                    .iter()
                    .position(|&b| b == b']')
                    .ok_or(ChemError::UnclosedBracketAtom { position: i })?;
                let inner = &text[i + 1..i + close];
                let atom = parse_bracket(inner, i + 1)?;
                i += close + 1;
                Token::Atom(atom)
            }
            _ => {
                let (atom, len) = organic_atom(bytes, i).ok_or(ChemError::UnknownCharacter { position: i })?;
                i += len;
                Token::Atom(atom)
            }
        };
        out.push(Lexeme { token, span: start..i });
    }
    Ok(out)
}

fn organic_atom(bytes: &[u8], i: usize) -> Option<(AtomToken, usize)> {
    let two = bytes.get(i..i + 2);
    let (element, aromatic, len) = match (bytes[i], two) {
        (b'C', Some(b"Cl")) => (Element::CL, false, 2),
        (b'B', Some(b"Br")) => (Element::BR, false, 2),
        (b'B', _) => (Element::B, false, 1),
        (b'C', _) => (Element::C, false, 1),
        (b'N', _) => (Element::N, false, 1),
        (b'O', _) => (Element::O, false, 1),
        (b'P', _) => (Element::P, false, 1),
        (b'S', _) => (Element::S, false, 1),
        (b'F', _) => (Element::F, false, 1),
        (b'I', _) => (Element::I, false, 1),
        (b'b', _) => (Element::B, true, 1),
        (b'c', _) => (Element::C, true, 1),
        (b'n', _) => (Element::N, true, 1),
        (b'o', _) => (Element::O, true, 1),
        (b'p', _) => (Element::P, true, 1),
        (b's', _) => (Element::S, true, 1),
        _ => return None,
    };
    Some((AtomToken { element, aromatic, bracket: None }, len))
}

fn parse_bracket(inner: &str, offset: usize) -> Result<AtomToken, ChemError> {
    let bad = |at: usize| ChemError::InvalidBracketAtom { position: offset + at };
    let b = inner.as_bytes();
    let mut i = 0;

    let digits = |i: &mut usize| -> Option<u32> {
        let s = *i;
        while *i < b.len() && b[*i].is_ascii_digit() && *i - s < 6 {
            *i += 1;
        }
        (*i > s).then(|| inner[s..*i].parse().unwrap())
    };

    let isotope = digits(&mut i).map(|v| v.min(u16::MAX as u32) as u16);

    // element symbol: aromatic forms are lowercase, two-letter aromatics first
    let (element, aromatic) = {
        let rest = &inner[i..];
        let aromatic_two = ["se", "as", "te"];
        if let Some(sym) = aromatic_two.iter().find(|s| rest.starts_with(**s)) {
            i += 2;
            let mut cap = sym[..1].to_ascii_uppercase();
            cap.push_str(&sym[1..]);
            (Element::from_symbol(&cap).unwrap(), true)
        } else if let Some(&c) = b.get(i) {
            if c.is_ascii_lowercase() {
                let e = match c {
                    b'b' => Element::B,
                    b'c' => Element::C,
                    b'n' => Element::N,
                    b'o' => Element::O,
                    b'p' => Element::P,
                    b's' => Element::S,
                    _ => return Err(bad(i)),
                };
                i += 1;
                (e, true)
            } else if c.is_ascii_uppercase() {
                let two = b.get(i + 1).filter(|c| c.is_ascii_lowercase());
                let e2 = two.and_then(|_| Element::from_symbol(&inner[i..i + 2]));
                match e2 {
                    Some(e) => {
                        i += 2;
                        (e, false)
                    }
                    None => {
                        let e = Element::from_symbol(&inner[i..i + 1]).ok_or(bad(i))?;
                        i += 1;
                        (e, false)
                    }
                }
            } else {
                return Err(bad(i));
            }
        } else {
            return Err(bad(i));
        }
    };

    let mut chiral = false;
    while b.get(i) == Some(&b'@') {
        chiral = true;
        i += 1;
    }
    if chiral {
        // extended chirality classes such as @TH1 or @SP2
        while i < b.len() && (b[i].is_ascii_uppercase() && b[i] != b'H' || b[i].is_ascii_digit()) {
            i += 1;
        }
        log::warn!("chirality at {} ignored", offset);
    }

    let mut hydrogens = 0u8;
    if b.get(i) == Some(&b'H') {
        i += 1;
        hydrogens = 1;
        if let Some(&d) = b.get(i) {
            if d.is_ascii_digit() {
                hydrogens = d - b'0';
                i += 1;
            }
        }
    }

    let mut charge: i32 = 0;
    if let Some(&sign) = b.get(i) {
        if sign == b'+' || sign == b'-' {
            let unit = if sign == b'+' { 1 } else { -1 };
            i += 1;
            if let Some(&d) = b.get(i).filter(|d| d.is_ascii_digit()) {
                charge = unit * (d - b'0') as i32;
                i += 1;
                if b.get(i).is_some_and(u8::is_ascii_digit) {
                    return Err(bad(i));
                }
            } else {
                charge = unit;
                while b.get(i) == Some(&sign) {
                    charge += unit;
                    i += 1;
                }
            }
        }
    }
    if !(-4..=4).contains(&charge) {
        return Err(ChemError::ChargeOutOfRange { position: offset, charge });
    }

    let mut class = None;
    if b.get(i) == Some(&b':') {
        i += 1;
        class = Some(digits(&mut i).ok_or(bad(i))?);
    }
    if i != b.len() {
        return Err(bad(i));
    }
    if aromatic && !element.can_be_aromatic() {
        return Err(bad(0));
    }

    Ok(AtomToken {
        element,
        aromatic,
        bracket: Some(BracketAtom { isotope, hydrogens, charge: charge as i8, chiral, class }),
    })
}
