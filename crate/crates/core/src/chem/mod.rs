//! SMILES tokenization, molecular graphs, validity and canonical SMILES.

mod aromaticity;
mod canon;
pub mod element;
pub mod lexer;
mod parser;
pub mod rings;

use thiserror::Error;

pub use canon::{canonical_ranks, canonicalize, write_smiles_with_order};
pub use element::Element;
pub use lexer::{tokenize_smiles, BondSymbol, Lexeme, Token};
pub use parser::parse_smiles;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("empty SMILES")]
    Empty,
    #[error("unknown character at position {position}")]
    UnknownCharacter { position: usize },
    #[error("unclosed bracket atom starting at position {position}")]
    UnclosedBracketAtom { position: usize },
    #[error("malformed bracket atom at position {position}")]
    InvalidBracketAtom { position: usize },
    #[error("formal charge {charge} out of range at position {position}")]
    ChargeOutOfRange { position: usize, charge: i32 },
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: &'static str },
    #[error("ring closure {digit} never closed")]
    UnmatchedRingClosure { digit: u8 },
    #[error("unmatched parenthesis at position {position}")]
    UnmatchedParenthesis { position: usize },
    #[error("duplicate bond between atoms {a} and {b}")]
    DuplicateBond { a: usize, b: usize },
    #[error("atom {atom} has valence {valence}, not allowed for {element}")]
    ValenceViolation { atom: usize, valence: u32, element: &'static str },
    #[error("aromaticity error at atom {atom}: {message}")]
    AromaticityError { atom: usize, message: &'static str },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to valence with aromatic bonds counted as single.
    pub fn base_order(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    /// Hydrogens written inside a bracket atom.
    pub explicit_h: u8,
    /// Hydrogens implied by the valence model.
    pub implicit_h: u8,
    pub aromatic: bool,
    pub bracket: bool,
    pub isotope: Option<u16>,
    /// Indices into [`Molecule::rings`].
    pub rings: Vec<usize>,
}

impl Atom {
    pub fn total_h(&self) -> u32 {
        self.explicit_h as u32 + self.implicit_h as u32
    }

    pub fn in_ring(&self) -> bool {
        !self.rings.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// Localised order for aromatic bonds (single or double); equals
    /// `order` otherwise.
    pub kekule: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub source: String,
    /// Smallest set of smallest rings, each as an ordered atom cycle.
    pub rings: Vec<Vec<usize>>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    pub(crate) fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, source: String) -> Molecule {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, i));
            adjacency[b.b].push((b.a, i));
        }
        Molecule { atoms, bonds, source, rings: Vec::new(), adjacency }
    }

    /// `(neighbour atom, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    /// Number of heavy-atom neighbours.
    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a].iter().find(|(n, _)| *n == b).map(|&(_, i)| &self.bonds[i])
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Sum of bond orders (aromatic counted through the Kekulé form) plus hydrogens.
    pub fn valence(&self, atom: usize) -> u32 {
        let bonds: u32 = self.adjacency[atom].iter().map(|&(_, b)| self.bonds[b].kekule.base_order()).sum();
        bonds + self.atoms[atom].total_h()
    }

    pub fn atom_in_ring_of_size(&self, atom: usize, size: usize) -> bool {
        self.atoms[atom].rings.iter().any(|&r| self.rings[r].len() == size)
    }

    /// Connected components as lists of atom indices, in ascending order of
    /// their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut k = 0;
            while k < comp.len() {
                let a = comp[k];
                k += 1;
                for &(n, _) in &self.adjacency[a] {
                    if !seen[n] {
                        seen[n] = true;
                        comp.push(n);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// True iff `text` parses into a valid molecule.
pub fn is_valid(text: &str) -> bool {
    parse_smiles(text).is_ok()
}
