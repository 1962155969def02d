//! The five condition properties: MW, LogP, HBD, HBA and TPSA.

mod crippen;
mod env;
mod tpsa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crippen::{CrippenRow, CrippenTable};
pub use tpsa::{PolarEnv, TpsaRow, TpsaTable};

use crate::chem::{Element, Molecule};
use env::{Env, B};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("no logP atom type matches atom {atom} ({element})")]
    UnclassifiedAtom { atom: usize, element: &'static str },
    #[error("no polar surface entry matches atom {atom} ({element})")]
    UnclassifiedPolarAtom { atom: usize, element: &'static str },
    #[error("contribution table line {line}: cannot read '{message}'")]
    Table { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertySet {
    pub mw: f64,
    pub logp: f64,
    pub hbd: u32,
    pub hba: u32,
    pub tpsa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyId {
    Mw,
    Logp,
    Hbd,
    Hba,
    Tpsa,
}

impl PropertyId {
    pub const ALL: [PropertyId; 5] = [PropertyId::Mw, PropertyId::Logp, PropertyId::Hbd, PropertyId::Hba, PropertyId::Tpsa];

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::Mw => "mw",
            PropertyId::Logp => "logp",
            PropertyId::Hbd => "hbd",
            PropertyId::Hba => "hba",
            PropertyId::Tpsa => "tpsa",
        }
    }

    pub fn is_count(self) -> bool {
        matches!(self, PropertyId::Hbd | PropertyId::Hba)
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropertyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PropertyId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown property '{s}' (expected mw, logp, hbd, hba or tpsa)"))
    }
}

impl PropertySet {
    pub fn get(&self, p: PropertyId) -> f64 {
        match p {
            PropertyId::Mw => self.mw,
            PropertyId::Logp => self.logp,
            PropertyId::Hbd => self.hbd as f64,
            PropertyId::Hba => self.hba as f64,
            PropertyId::Tpsa => self.tpsa,
        }
    }

    /// Sets a property; counts are rounded to the nearest non-negative integer.
    pub fn set(&mut self, p: PropertyId, value: f64) {
        match p {
            PropertyId::Mw => self.mw = value,
            PropertyId::Logp => self.logp = value,
            PropertyId::Hbd => self.hbd = value.round().max(0.0) as u32,
            PropertyId::Hba => self.hba = value.round().max(0.0) as u32,
            PropertyId::Tpsa => self.tpsa = value,
        }
    }

    pub fn with(mut self, p: PropertyId, value: f64) -> Self {
        self.set(p, value);
        self
    }
}

/// Sum of most-abundant-isotope masses over all atoms and their hydrogens.
pub fn molecular_weight(mol: &Molecule) -> f64 {
    let h = Element::H.monoisotopic_mass();
    mol.atoms.iter().map(|a| a.element.monoisotopic_mass() + a.total_h() as f64 * h).sum()
}

/// N and O atoms carrying at least one hydrogen.
pub fn hbd(mol: &Molecule) -> u32 {
    let env = Env::new(mol);
    (0..mol.atoms.len()).filter(|&a| matches!(env.z(a), 7 | 8) && env.h(a) > 0).count() as u32
}

/// N and O acceptors: hydroxyl O not on an acid-type centre, ether and
/// carbonyl O, anionic O, trivalent N that is not amide-like, and aromatic
/// n without H or aromatic o.
pub fn hba(mol: &Molecule) -> u32 {
    let e = Env::new(mol);
    (0..mol.atoms.len()).filter(|&a| is_acceptor(&e, a)).count() as u32
}

fn is_acceptor(e: &Env, a: usize) -> bool {
    let acid_partner = |x: usize| !e.aromatic(x) && matches!(e.z(x), 7 | 8 | 15 | 16);
    if e.aliph(a, 8) {
        let hydroxyl = e.h(a) == 1
            && e.valence(a) == 2
            && e.any(a, None, B::Single, &|n| !e.any(n, Some(a), B::Double, &acid_partner));
        return hydroxyl || (e.h(a) == 0 && e.valence(a) == 2) || e.q(a) < 0;
    }
    if e.aliph(a, 7) {
        let amide_like = e.any(a, None, B::Single, &|n| {
            e.mol
                .neighbors(n)
                .iter()
                .any(|&(x, b)| x != a && mol_bond_is_chain_double(e, b) && acid_partner(x))
        });
        return e.valence(a) == 3 && !amide_like;
    }
    e.q(a) == 0 && ((e.arom(a, 7) && e.h(a) == 0) || e.arom(a, 8))
}

fn mol_bond_is_chain_double(e: &Env, b: usize) -> bool {
    let bond = &e.mol.bonds[b];
    bond.order == crate::chem::BondOrder::Double && !bond.in_ring
}

/// Polar surface area; fails on an N/O environment missing from the table.
pub fn tpsa(mol: &Molecule) -> Result<f64, DescriptorError> {
    // an empty float sum is -0.0
    TpsaTable::builtin().contributions(mol).into_iter().map(|(_, v)| v).sum::<Result<f64, _>>().map(|s| s + 0.0)
}

/// Polar surface area where unclassified atoms contribute 0 (with a warning).
pub fn tpsa_lenient(mol: &Molecule) -> f64 {
    TpsaTable::builtin()
        .contributions(mol)
        .into_iter()
        .map(|(_, v)| {
            v.unwrap_or_else(|e| {
                log::warn!("{}: {e}; counted as 0", mol.source);
                0.0
            })
        })
        .sum::<f64>()
        + 0.0
}

/// Crippen logP; fails when an atom matches no type.
pub fn clogp(mol: &Molecule) -> Result<f64, DescriptorError> {
    CrippenTable::builtin().contributions(mol).into_iter().sum()
}

/// Crippen logP where unclassified atoms contribute 0 (with a warning).
pub fn clogp_lenient(mol: &Molecule) -> f64 {
    CrippenTable::builtin()
        .contributions(mol)
        .into_iter()
        .map(|v| {
            v.unwrap_or_else(|e| {
                log::warn!("{}: {e}; counted as 0", mol.source);
                0.0
            })
        })
        .sum()
}

pub fn property_vector(mol: &Molecule) -> Result<PropertySet, DescriptorError> {
    Ok(PropertySet { mw: molecular_weight(mol), logp: clogp(mol)?, hbd: hbd(mol), hba: hba(mol), tpsa: tpsa(mol)? })
}

pub fn property_vector_lenient(mol: &Molecule) -> PropertySet {
    PropertySet { mw: molecular_weight(mol), logp: clogp_lenient(mol), hbd: hbd(mol), hba: hba(mol), tpsa: tpsa_lenient(mol) }
}
