//! Hückel-style aromaticity perception on a Kekulé structure.

use super::{BondOrder, Molecule};

/// Pi electrons an atom donates to a ring, or `None` if it cannot be part of
/// an aromatic ring.
fn pi_electrons(mol: &Molecule, a: usize) -> Option<u32> {
    let atom = &mol.atoms[a];
    if !atom.in_ring() {
        return None;
    }
    let z = atom.element.atomic_number();
    if !matches!(z, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52) {
        return None;
    }
    let connections = mol.degree(a) as u32 + atom.total_h();
    if connections > 3 {
        return None;
    }
    let (mut ring_double, mut exo_double, mut triple) = (0, None, 0);
    for &(n, b) in mol.neighbors(a) {
        let bond = &mol.bonds[b];
        match bond.kekule {
            BondOrder::Double if bond.in_ring => ring_double += 1,
            BondOrder::Double => exo_double = Some(n),
            BondOrder::Triple => triple += 1,
            _ => {}
        }
    }
    if triple > 0 || ring_double + exo_double.is_some() as u32 > 1 {
        return None;
    }
    if ring_double == 1 {
        return Some(1);
    }
    if let Some(n) = exo_double {
        // an exocyclic double bond to a more electronegative partner keeps
        // the electron out of the ring
        let pulls = electronegativity(mol.atoms[n].element.atomic_number()) > electronegativity(z);
        return Some(if pulls { 0 } else { 1 });
    }
    let charge = atom.formal_charge;
    match z {
        6 => match charge {
            -1 => Some(2),
            1 => Some(0),
            _ => None,
        },
        7 | 15 | 33 => match charge {
            0 if connections == 3 => Some(2),
            -1 if connections == 2 => Some(2),
            _ => None,
        },
        8 | 16 | 34 | 52 => (charge == 0 && connections == 2).then_some(2),
        5 => (charge == 0 && connections == 3).then_some(0),
        _ => None,
    }
}

/// Pauling electronegativity for the elements that can reach a ring atom
/// through a double bond.
fn electronegativity(z: u8) -> f64 {
    match z {
        5 => 2.04,
        6 => 2.55,
        7 => 3.04,
        8 => 3.44,
        9 => 3.98,
        15 => 2.19,
        16 => 2.58,
        17 => 3.16,
        33 => 2.18,
        34 => 2.55,
        35 => 2.96,
        52 => 2.1,
        53 => 2.66,
        _ => 0.0,
    }
}

fn huckel(count: u32) -> bool {
    count % 4 == 2
}

/// Returns `(aromatic atoms, aromatic bonds)`. Rings are tested one at a
/// time and then as fused pairs and triples sharing atoms.
pub(crate) fn perceive(mol: &Molecule) -> (Vec<bool>, Vec<bool>) {
    let n = mol.atoms.len();
    let electrons: Vec<Option<u32>> = (0..n).map(|a| pi_electrons(mol, a)).collect();
    let mut atom_flags = vec![false; n];
    let mut bond_flags = vec![false; mol.bonds.len()];

    let rings = &mol.rings;
    let eligible: Vec<bool> = rings.iter().map(|r| r.iter().all(|&a| electrons[a].is_some())).collect();
    let mut ring_aromatic = vec![false; rings.len()];

    let mark = |ring: &[usize], atom_flags: &mut Vec<bool>, bond_flags: &mut Vec<bool>| {
        for i in 0..ring.len() {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            atom_flags[a] = true;
            if let Some(&(_, bi)) = mol.neighbors(a).iter().find(|(x, _)| *x == b) {
                bond_flags[bi] = true;
            }
        }
    };

    for (i, ring) in rings.iter().enumerate() {
        if eligible[i] {
            let sum: u32 = ring.iter().map(|&a| electrons[a].unwrap()).sum();
            if huckel(sum) {
                ring_aromatic[i] = true;
                mark(ring, &mut atom_flags, &mut bond_flags);
            }
        }
    }

    // fused systems: connected sets of eligible rings sharing bonds
    let candidates: Vec<usize> = (0..rings.len()).filter(|&i| eligible[i]).collect();
    let shares_bond = |x: usize, y: usize| rings[x].iter().filter(|a| rings[y].contains(a)).count() >= 2;
    for system in fused_systems(&candidates, shares_bond) {
        if system.len() < 2 || system.iter().all(|&r| ring_aromatic[r]) {
            continue;
        }
        let max_size = if system.len() <= MAX_EXHAUSTIVE_RINGS { system.len() } else { 3 };
        for subset in connected_subsets(&system, max_size, shares_bond) {
            if subset.iter().all(|&r| ring_aromatic[r]) {
                continue;
            }
            let mut atoms: Vec<usize> = subset.iter().flat_map(|&r| rings[r].iter().copied()).collect();
            atoms.sort_unstable();
            atoms.dedup();
            let sum: u32 = atoms.iter().map(|&a| electrons[a].unwrap()).sum();
            if huckel(sum) {
                for &r in &subset {
                    mark(&rings[r], &mut atom_flags, &mut bond_flags);
                }
            }
        }
    }
    (atom_flags, bond_flags)
}

/// Fused systems larger than this only have pairs and triples tested.
const MAX_EXHAUSTIVE_RINGS: usize = 10;

fn fused_systems(rings: &[usize], linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; rings.len()];
    let mut out = Vec::new();
    for s in 0..rings.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut members = vec![s];
        let mut k = 0;
        while k < members.len() {
            let x = members[k];
            k += 1;
            for y in 0..rings.len() {
                if !seen[y] && linked(rings[x], rings[y]) {
                    seen[y] = true;
                    members.push(y);
                }
            }
        }
        members.sort_unstable();
        out.push(members.into_iter().map(|i| rings[i]).collect());
    }
    out
}

/// Subsets of `system` with 2..=`max_size` members whose rings form a
/// connected graph under `linked`.
fn connected_subsets(system: &[usize], max_size: usize, linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let n = system.len();
    let mut out = Vec::new();
    let mut pick = Vec::new();
    fn rec(
        start: usize,
        n: usize,
        max_size: usize,
        pick: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        system: &[usize],
        linked: &dyn Fn(usize, usize) -> bool,
    ) {
        if pick.len() >= 2 && is_connected(pick, system, linked) {
            out.push(pick.iter().map(|&i| system[i]).collect());
        }
        if pick.len() == max_size {
            return;
        }
        for i in start..n {
            pick.push(i);
            rec(i + 1, n, max_size, pick, out, system, linked);
            pick.pop();
        }
    }
    rec(0, n, max_size, &mut pick, &mut out, system, &linked);
    out
}

fn is_connected(pick: &[usize], system: &[usize], linked: &dyn Fn(usize, usize) -> bool) -> bool {
    let mut reached = vec![false; pick.len()];
    reached[0] = true;
    let mut stack = vec![0];
    while let Some(x) = stack.pop() {
        for y in 0..pick.len() {
            if !reached[y] && linked(system[pick[x]], system[pick[y]]) {
                reached[y] = true;
                stack.push(y);
            }
        }
    }
    reached.iter().all(|&r| r)
}
