//! Small helpers for describing atom environments as predicates.

use crate::chem::{BondOrder, Molecule};

/// Bond constraint. `Default` is the implicit SMARTS bond: single or aromatic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum B {
    Default,
    Single,
    Double,
    Triple,
    Aromatic,
}

impl B {
    fn accepts(self, order: BondOrder) -> bool {
        match self {
            B::Default => matches!(order, BondOrder::Single | BondOrder::Aromatic),
            B::Single => order == BondOrder::Single,
            B::Double => order == BondOrder::Double,
            B::Triple => order == BondOrder::Triple,
            B::Aromatic => order == BondOrder::Aromatic,
        }
    }
}

pub(crate) type AtomTest<'a> = &'a dyn Fn(usize) -> bool;

#[derive(Clone, Copy)]
pub(crate) struct Env<'m> {
    pub mol: &'m Molecule,
}

impl<'m> Env<'m> {
    pub fn new(mol: &'m Molecule) -> Self {
        Env { mol }
    }

    pub fn z(&self, a: usize) -> u8 {
        self.mol.atoms[a].element.atomic_number()
    }

    pub fn aromatic(&self, a: usize) -> bool {
        self.mol.atoms[a].aromatic
    }

    /// Aliphatic atom of element `z`.
    pub fn aliph(&self, a: usize, z: u8) -> bool {
        self.z(a) == z && !self.aromatic(a)
    }

    /// Aromatic atom of element `z`.
    pub fn arom(&self, a: usize, z: u8) -> bool {
        self.z(a) == z && self.aromatic(a)
    }

    /// Any aliphatic non-hydrogen atom.
    pub fn aliph_heavy(&self, a: usize) -> bool {
        !self.aromatic(a) && self.z(a) != 1
    }

    pub fn heavy(&self, a: usize) -> bool {
        self.z(a) != 1
    }

    /// Total hydrogen count, including hydrogens written as graph atoms.
    pub fn h(&self, a: usize) -> u32 {
        let graph_h = self.mol.neighbors(a).iter().filter(|&&(n, _)| self.z(n) == 1).count() as u32;
        self.mol.atoms[a].total_h() + graph_h
    }

    /// Total connections including hydrogens.
    pub fn x(&self, a: usize) -> u32 {
        self.mol.degree(a) as u32 + self.h(a)
    }

    pub fn q(&self, a: usize) -> i8 {
        self.mol.atoms[a].formal_charge
    }

    /// Sum of Kekulé bond orders plus hydrogens.
    pub fn valence(&self, a: usize) -> u32 {
        self.mol.valence(a)
    }

    /// True if distinct neighbours of `a` (other than `exclude`) satisfy every
    /// requirement, one neighbour per requirement.
    pub fn has(&self, a: usize, exclude: Option<usize>, reqs: &[(B, AtomTest<'_>)]) -> bool {
        let nbrs: Vec<(usize, BondOrder)> = self
            .mol
            .neighbors(a)
            .iter()
            .filter(|&&(n, _)| Some(n) != exclude)
            .map(|&(n, b)| (n, self.mol.bonds[b].order))
            .collect();
        if nbrs.len() < reqs.len() {
            return false;
        }
        let mut used = vec![false; nbrs.len()];
        assign(&nbrs, reqs, &mut used)
    }

    /// Some neighbour reached through a bond accepted by `bond` satisfies `test`.
    pub fn any(&self, a: usize, exclude: Option<usize>, bond: B, test: AtomTest<'_>) -> bool {
        self.has(a, exclude, &[(bond, test)])
    }
}

fn assign(nbrs: &[(usize, BondOrder)], reqs: &[(B, AtomTest<'_>)], used: &mut [bool]) -> bool {
    let Some(((bond, test), rest)) = reqs.split_first() else {
        return true;
    };
    for i in 0..nbrs.len() {
        if used[i] {
            continue;
        }
        let (n, order) = nbrs[i];
        if bond.accepts(order) && test(n) {
            used[i] = true;
            if assign(nbrs, rest, used) {
                return true;
            }
            used[i] = false;
        }
    }
    false
}
