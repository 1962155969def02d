//! Topological polar surface area from N/O fragment contributions.

use std::sync::OnceLock;

use super::DescriptorError;
use crate::chem::{BondOrder, Molecule};

/// Bonding environment of a polar atom.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PolarEnv {
    pub z: u8,
    pub neighbors: u32,
    pub hydrogens: u32,
    pub charge: i8,
    pub single: u32,
    pub double: u32,
    pub triple: u32,
    pub aromatic: u32,
    pub in_ring3: bool,
}

impl PolarEnv {
    pub fn of(mol: &Molecule, a: usize) -> PolarEnv {
        let atom = &mol.atoms[a];
        let mut env = PolarEnv {
            z: atom.element.atomic_number(),
            neighbors: mol.degree(a) as u32,
            hydrogens: atom.total_h(),
            charge: atom.formal_charge,
            in_ring3: mol.atom_in_ring_of_size(a, 3),
            ..PolarEnv::default()
        };
        for &(_, b) in mol.neighbors(a) {
            match mol.bonds[b].order {
                BondOrder::Single => env.single += 1,
                BondOrder::Double => env.double += 1,
                BondOrder::Triple => env.triple += 1,
                BondOrder::Aromatic => env.aromatic += 1,
            }
        }
        env
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cond {
    Element(u8),
    Neighbors(u32),
    Hydrogens(u32),
    Charge(i8),
    Single(u32),
    Double(u32),
    Triple(u32),
    Aromatic(u32),
    Ring3(bool),
}

impl Cond {
    fn holds(self, e: &PolarEnv) -> bool {
        match self {
            Cond::Element(z) => e.z == z,
            Cond::Neighbors(n) => e.neighbors == n,
            Cond::Hydrogens(n) => e.hydrogens == n,
            Cond::Charge(q) => e.charge == q,
            Cond::Single(n) => e.single == n,
            Cond::Double(n) => e.double == n,
            Cond::Triple(n) => e.triple == n,
            Cond::Aromatic(n) => e.aromatic == n,
            Cond::Ring3(r) => e.in_ring3 == r,
        }
    }

    fn parse(token: &str) -> Option<Cond> {
        let num = |prefix: &str| token.strip_prefix(prefix).and_then(|v| v.parse::<u32>().ok());
        Some(match token {
            "N" => Cond::Element(7),
            "O" => Cond::Element(8),
            "r3" => Cond::Ring3(true),
            "!r3" => Cond::Ring3(false),
            t if t.starts_with("nbr") => Cond::Neighbors(num("nbr")?),
            t if t.starts_with('q') => Cond::Charge(t[1..].parse().ok()?),
            t if t.starts_with('h') => Cond::Hydrogens(num("h")?),
            t if t.starts_with('s') => Cond::Single(num("s")?),
            t if t.starts_with('d') => Cond::Double(num("d")?),
            t if t.starts_with('t') => Cond::Triple(num("t")?),
            t if t.starts_with('a') => Cond::Aromatic(num("a")?),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TpsaRow {
    pub type_id: String,
    pub predicate_id: String,
    pub value: f64,
    conds: Vec<Cond>,
}

#[derive(Clone, Debug)]
pub struct TpsaTable {
    rows: Vec<TpsaRow>,
}

const BUILTIN: &str = include_str!("../../data/tpsa.txt");

impl TpsaTable {
    /// Parses `type-id predicate-id value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = || DescriptorError::Table { line: n + 1, message: line.to_string() };
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [type_id, predicate_id, value] = cols[..] else { return Err(bad()) };
            let value: f64 = value.parse().map_err(|_| bad())?;
            let conds = predicate_id.split('.').map(Cond::parse).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
            rows.push(TpsaRow { type_id: type_id.into(), predicate_id: predicate_id.into(), value, conds });
        }
        Ok(TpsaTable { rows })
    }

    pub fn builtin() -> &'static TpsaTable {
        static TABLE: OnceLock<TpsaTable> = OnceLock::new();
        TABLE.get_or_init(|| TpsaTable::parse(BUILTIN).expect("built-in TPSA table is well formed"))
    }

    pub fn rows(&self) -> &[TpsaRow] {
        &self.rows
    }

    pub fn classify(&self, env: &PolarEnv) -> Option<&TpsaRow> {
        self.rows.iter().find(|r| r.conds.iter().all(|c| c.holds(env)))
    }

    /// Contribution of each N/O atom (atom index, value or error).
    pub fn contributions(&self, mol: &Molecule) -> Vec<(usize, Result<f64, DescriptorError>)> {
        (0..mol.atoms.len())
            .filter(|&a| matches!(mol.atoms[a].element.atomic_number(), 7 | 8))
            .map(|a| {
                let env = PolarEnv::of(mol, a);
                let v = self.classify(&env).map(|r| r.value).ok_or(DescriptorError::UnclassifiedPolarAtom {
                    atom: a,
                    element: mol.atoms[a].element.symbol(),
                });
                (a, v)
            })
            .collect()
    }
}
