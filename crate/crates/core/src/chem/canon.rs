//! Canonical atom ranking and SMILES writing.

use std::fmt::Write;

use super::parser::bare_atom_state;
use super::{BondOrder, Molecule};

/// Dense ranks (0-based) of `keys`, equal keys sharing a rank.
fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0u32; keys.len()];
    let mut r = 0;
    for w in 0..order.len() {
        if w > 0 && keys[order[w]] != keys[order[w - 1]] {
            r += 1;
        }
        ranks[order[w]] = r;
    }
    ranks
}

fn class_count(ranks: &[u32]) -> usize {
    ranks.iter().max().map_or(0, |&m| m as usize + 1)
}

fn refine(mol: &Molecule, ranks: &mut Vec<u32>) {
    loop {
        let keys: Vec<(u32, Vec<(u32, u8)>)> = (0..mol.atoms.len())
            .map(|a| {
                let mut env: Vec<(u32, u8)> =
                    mol.neighbors(a).iter().map(|&(n, b)| (ranks[n], mol.bonds[b].order.code())).collect();
                env.sort_unstable();
                (ranks[a], env)
            })
            .collect();
        let next = dense_ranks(&keys);
        let done = class_count(&next) == class_count(ranks);
        *ranks = next;
        if done {
            return;
        }
    }
}

/// Canonical rank of every atom: a permutation of `0..n` that depends only
/// on the labelled graph, not on input atom order (up to true symmetry).
pub fn canonical_ranks(mol: &Molecule) -> Vec<u32> {
    let invariants: Vec<_> = mol
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            // degree first so that strings start at a chain end
            (
                mol.degree(i),
                a.element.atomic_number(),
                a.isotope.unwrap_or(0),
                a.aromatic,
                a.formal_charge,
                a.total_h(),
                a.in_ring(),
            )
        })
        .collect();
    let mut ranks = dense_ranks(&invariants);
    loop {
        refine(mol, &mut ranks);
        if class_count(&ranks) == ranks.len() {
            return ranks;
        }
        // break the lowest tie by promoting one of its members
        let mut counts = vec![0usize; ranks.len()];
        for &r in &ranks {
            counts[r as usize] += 1;
        }
        let tied = counts.iter().position(|&c| c > 1).unwrap() as u32;
        let pick = ranks.iter().position(|&r| r == tied).unwrap();
        for r in ranks.iter_mut() {
            *r = *r * 2 + 1;
        }
        ranks[pick] -= 1;
    }
}

/// Canonical SMILES of `mol`.
pub fn canonicalize(mol: &Molecule) -> String {
    write_smiles_with_order(mol, &canonical_ranks(mol))
}

/// Writes SMILES visiting atoms by ascending `ranks`: each fragment starts at
/// its lowest-ranked atom and branches are taken in rank order. Any
/// permutation gives a valid SMILES for the same molecule.
pub fn write_smiles_with_order(mol: &Molecule, ranks: &[u32]) -> String {
    let n = mol.atoms.len();
    let mut writer = Writer {
        mol,
        ranks,
        visited: vec![false; n],
        tree_bond: vec![false; mol.bonds.len()],
        closures: vec![Vec::new(); n],
        children: vec![Vec::new(); n],
    };
    let mut starts: Vec<usize> = mol
        .components()
        .iter()
        .map(|c| *c.iter().min_by_key(|&&a| ranks[a]).unwrap())
        .collect();
    starts.sort_by_key(|&a| ranks[a]);

    let mut out = String::new();
    for (k, &start) in starts.iter().enumerate() {
        writer.plan(start);
        if k > 0 {
            out.push('.');
        }
        let mut digits = Digits::default();
        writer.emit(start, &mut out, &mut digits);
    }
    out
}

struct Writer<'a> {
    mol: &'a Molecule,
    ranks: &'a [u32],
    visited: Vec<bool>,
    tree_bond: Vec<bool>,
    /// Ring-closure bonds per atom, in discovery order.
    closures: Vec<Vec<usize>>,
    children: Vec<Vec<(usize, usize)>>,
}

#[derive(Default)]
struct Digits {
    open: Vec<(usize, u32)>, // (bond, digit)
    used: Vec<u32>,
}

impl Digits {
    fn take(&mut self) -> u32 {
        let d = (1..).find(|d| !self.used.contains(d)).unwrap();
        self.used.push(d);
        d
    }

    fn release(&mut self, d: u32) {
        self.used.retain(|&x| x != d);
    }
}

impl Writer<'_> {
    /// DFS that fixes the spanning tree and ring-closure bonds. Iterative so
    /// that long chains cannot exhaust the call stack.
    fn plan(&mut self, start: usize) {
        let mol = self.mol;
        let sorted = |a: usize| {
            let mut v: Vec<(usize, usize)> = mol.neighbors(a).to_vec();
            v.sort_by_key(|&(n, _)| self.ranks[n]);
            v
        };
        self.visited[start] = true;
        let mut stack = vec![(start, usize::MAX, sorted(start), 0usize)];
        while let Some((a, parent_bond, nbrs, next)) = stack.last_mut() {
            let a = *a;
            if *next == nbrs.len() {
                stack.pop();
                continue;
            }
            let (nb, b) = nbrs[*next];
            *next += 1;
            if b == *parent_bond || self.tree_bond[b] {
                continue;
            }
            if self.visited[nb] {
                if !self.closures[a].contains(&b) {
                    self.closures[nb].push(b);
                    self.closures[a].push(b);
                }
                continue;
            }
            self.visited[nb] = true;
            self.tree_bond[b] = true;
            self.children[a].push((nb, b));
            let list = sorted(nb);
            stack.push((nb, b, list, 0));
        }
    }

    fn emit(&self, start: usize, out: &mut String, digits: &mut Digits) {
        // explicit stack of (atom, incoming bond, child cursor)
        enum Step {
            Enter(usize, Option<usize>, bool),
            Close,
        }
        let mut work = vec![Step::Enter(start, None, false)];
        while let Some(step) = work.pop() {
            match step {
                Step::Close => out.push(')'),
                Step::Enter(a, via, branch) => {
                    if branch {
                        out.push('(');
                    }
                    if let Some(b) = via {
                        out.push_str(self.bond_symbol(b));
                    }
                    self.write_atom(a, out);
                    self.write_closures(a, out, digits);
                    let kids = &self.children[a];
                    if let Some((&(last, lb), rest)) = kids.split_last() {
                        work.push(Step::Enter(last, Some(lb), false));
                        for &(c, cb) in rest.iter().rev() {
                            work.push(Step::Close);
                            work.push(Step::Enter(c, Some(cb), true));
                        }
                    }
                }
            }
        }
    }

    fn write_closures(&self, a: usize, out: &mut String, digits: &mut Digits) {
        let mut closing = Vec::new();
        let mut opening = Vec::new();
        for &b in &self.closures[a] {
            match digits.open.iter().position(|&(ob, _)| ob == b) {
                Some(i) => closing.push(digits.open.remove(i)),
                None => opening.push(b),
            }
        }
        closing.sort_by_key(|&(_, d)| d);
        for (b, d) in closing {
            out.push_str(self.bond_symbol(b));
            push_digit(out, d);
            digits.release(d);
        }
        opening.sort_by_key(|&b| self.ranks[self.mol.bonds[b].other(a)]);
        for b in opening {
            let d = digits.take();
            push_digit(out, d);
            digits.open.push((b, d));
        }
    }

    fn bond_symbol(&self, b: usize) -> &'static str {
        let bond = &self.mol.bonds[b];
        match bond.order {
            BondOrder::Aromatic => "",
            BondOrder::Single => {
                if self.mol.atoms[bond.a].aromatic && self.mol.atoms[bond.b].aromatic {
                    "-"
                } else {
                    ""
                }
            }
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
        }
    }

    fn write_atom(&self, a: usize, out: &mut String) {
        let mol = self.mol;
        let atom = &mol.atoms[a];
        let base: u32 = mol.neighbors(a).iter().map(|&(_, b)| mol.bonds[b].order.base_order()).sum();
        let has_pi = mol
            .neighbors(a)
            .iter()
            .any(|&(_, b)| mol.bonds[b].order == BondOrder::Aromatic && mol.bonds[b].kekule == BondOrder::Double);
        let symbol = if atom.aromatic {
            atom.element.symbol().to_ascii_lowercase()
        } else {
            atom.element.symbol().to_string()
        };
        let bare_ok = atom.formal_charge == 0
            && atom.isotope.is_none()
            && bare_atom_state(atom.element, atom.aromatic, base)
                .is_some_and(|(h, pi)| h as u32 == atom.total_h() && (!atom.aromatic || pi == has_pi));
        if bare_ok {
            out.push_str(&symbol);
            return;
        }
        out.push('[');
        if let Some(iso) = atom.isotope {
            let _ = write!(out, "{iso}");
        }
        out.push_str(&symbol);
        match atom.total_h() {
            0 => {}
            1 => out.push('H'),
            h => {
                let _ = write!(out, "H{h}");
            }
        }
        match atom.formal_charge {
            0 => {}
            1 => out.push('+'),
            -1 => out.push('-'),
            q if q > 0 => {
                let _ = write!(out, "+{q}");
            }
            q => {
                let _ = write!(out, "-{}", -q);
            }
        }
        out.push(']');
    }
}

fn push_digit(out: &mut String, d: u32) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d:02}");
    }
}
