//! SMILES parser: builds the atom/bond graph, assigns implicit hydrogens,
//! kekulizes aromatic input, checks valences and perceives aromaticity.

use super::aromaticity;
use super::lexer::{tokenize_smiles, AtomToken, BondSymbol, Token};
use super::rings::{ring_bonds, sssr};
use super::{Atom, Bond, BondOrder, ChemError, Molecule};

/// Upper bound on matching search steps before kekulization gives up.
const KEKULE_STEP_LIMIT: usize = 200_000;

struct RawAtom {
    token: AtomToken,
}

struct RawBond {
    a: usize,
    b: usize,
    order: BondOrder,
}

pub fn parse_smiles(text: &str) -> Result<Molecule, ChemError> {
    let lexemes = tokenize_smiles(text)?;
    let (raw_atoms, raw_bonds) = build_graph(&lexemes)?;
    let n = raw_atoms.len();

    // aromatic bonds outside any cycle cannot be aromatic
    let edges: Vec<(usize, usize)> = raw_bonds.iter().map(|b| (b.a, b.b)).collect();
    let in_ring = ring_bonds(n, &edges);
    let orders: Vec<BondOrder> = raw_bonds
        .iter()
        .zip(&in_ring)
        .map(|(b, &ring)| if b.order == BondOrder::Aromatic && !ring { BondOrder::Single } else { b.order })
        .collect();

    let mut adjacency = vec![Vec::new(); n];
    for (i, b) in raw_bonds.iter().enumerate() {
        adjacency[b.a].push((b.b, i));
        adjacency[b.b].push((b.a, i));
    }

    let mut atoms = Vec::with_capacity(n);
    let mut needs_pi = vec![false; n];
    for (i, raw) in raw_atoms.iter().enumerate() {
        let base: u32 = adjacency[i].iter().map(|&(_, b)| orders[b].base_order()).sum();
        let (implicit_h, pi) = hydrogens_and_pi(&raw.token, base);
        needs_pi[i] = pi;
        let br = raw.token.bracket.as_ref();
        atoms.push(Atom {
            element: raw.token.element,
            formal_charge: br.map_or(0, |b| b.charge),
            explicit_h: br.map_or(0, |b| b.hydrogens),
            implicit_h,
            aromatic: raw.token.aromatic,
            bracket: br.is_some(),
            isotope: br.and_then(|b| b.isotope),
            rings: Vec::new(),
        });
    }

    let double = kekulize(&needs_pi, &adjacency, &orders)?;
    let mut kekule = orders.clone();
    for (i, k) in kekule.iter_mut().enumerate() {
        if *k == BondOrder::Aromatic {
            *k = if double[i] { BondOrder::Double } else { BondOrder::Single };
        }
    }

    for (i, atom) in atoms.iter().enumerate() {
        let bonds: u32 = adjacency[i].iter().map(|&(_, b)| kekule[b].base_order()).sum();
        let valence = bonds + atom.total_h();
        if let Some(allowed) = atom.element.allowed_valences(atom.formal_charge) {
            if !allowed.iter().any(|&v| v as u32 == valence) {
                return Err(ChemError::ValenceViolation { atom: i, valence, element: atom.element.symbol() });
            }
        }
    }

    let bonds: Vec<Bond> = raw_bonds
        .iter()
        .enumerate()
        .map(|(i, b)| Bond { a: b.a, b: b.b, order: orders[i], kekule: kekule[i], in_ring: in_ring[i] })
        .collect();
    let mut mol = Molecule::new(atoms, bonds, text.to_string());
    mol.rings = sssr(n, &edges, &in_ring);
    for (r, ring) in mol.rings.iter().enumerate() {
        for &a in ring {
            mol.atoms[a].rings.push(r);
        }
    }

    let (aromatic_atoms, aromatic_bonds) = aromaticity::perceive(&mol);
    for (i, atom) in mol.atoms.iter().enumerate() {
        if atom.aromatic && !aromatic_atoms[i] {
            return Err(ChemError::AromaticityError { atom: i, message: "aromatic atom is not on an aromatic ring" });
        }
    }
    for (atom, &flag) in mol.atoms.iter_mut().zip(&aromatic_atoms) {
        atom.aromatic = flag;
    }
    for (i, bond) in mol.bonds.iter_mut().enumerate() {
        bond.order = if aromatic_bonds[i] { BondOrder::Aromatic } else { bond.kekule };
    }
    Ok(mol)
}

fn build_graph(lexemes: &[super::lexer::Lexeme]) -> Result<(Vec<RawAtom>, Vec<RawBond>), ChemError> {
    let syntax = |position: usize, message: &'static str| ChemError::Syntax { position, message };
    let mut atoms: Vec<RawAtom> = Vec::new();
    let mut bonds: Vec<RawBond> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<BondSymbol> = None;
    let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
    let mut open_rings: [Option<(usize, Option<BondSymbol>)>; 100] = [None; 100];
    let mut last_was_open = false;

    let mut add_bond = |atoms: &[RawAtom], a: usize, b: usize, symbol: Option<BondSymbol>, pos: usize| {
        if bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
            return Err(ChemError::DuplicateBond { a, b });
        }
        let both_aromatic = atoms[a].token.aromatic && atoms[b].token.aromatic;
        let order = match symbol {
            None if both_aromatic => BondOrder::Aromatic,
            None | Some(BondSymbol::Single) | Some(BondSymbol::Directional) => BondOrder::Single,
            Some(BondSymbol::Double) => BondOrder::Double,
            Some(BondSymbol::Triple) => BondOrder::Triple,
            Some(BondSymbol::Aromatic) if both_aromatic => BondOrder::Aromatic,
            Some(BondSymbol::Aromatic) => {
                return Err(ChemError::Syntax { position: pos, message: "aromatic bond between non-aromatic atoms" })
            }
        };
        bonds.push(RawBond { a, b, order });
        Ok(())
    };

    for lex in lexemes {
        let pos = lex.span.start;
        let was_open = std::mem::replace(&mut last_was_open, false);
        match &lex.token {
            Token::Atom(t) => {
                let idx = atoms.len();
                atoms.push(RawAtom { token: t.clone() });
                if let Some(p) = prev {
                    add_bond(&atoms, p, idx, pending.take(), pos)?;
                } else if pending.is_some() {
                    return Err(syntax(pos, "bond without a preceding atom"));
                }
                prev = Some(idx);
            }
            Token::Bond(s) => {
                if prev.is_none() || pending.is_some() {
                    return Err(syntax(pos, "misplaced bond symbol"));
                }
                pending = Some(*s);
            }
            Token::Open => {
                if prev.is_none() || pending.is_some() {
                    return Err(syntax(pos, "branch without a preceding atom"));
                }
                branches.push((prev, pos));
                last_was_open = true;
            }
            Token::Close => {
                let (p, _) = branches.pop().ok_or(ChemError::UnmatchedParenthesis { position: pos })?;
                if pending.is_some() || was_open {
                    return Err(syntax(pos, "empty or dangling branch"));
                }
                prev = p;
            }
            Token::Ring(d) => {
                let here = prev.ok_or(syntax(pos, "ring closure without an atom"))?;
                match open_rings[*d as usize].take() {
                    Some((other, first)) => {
                        let symbol = match (first, pending.take()) {
                            (Some(x), Some(y)) if x != y => return Err(syntax(pos, "conflicting ring-closure bonds")),
                            (x, y) => x.or(y),
                        };
                        if other == here {
                            return Err(syntax(pos, "ring closure to the same atom"));
                        }
                        add_bond(&atoms, other, here, symbol, pos)?;
                    }
                    None => open_rings[*d as usize] = Some((here, pending.take())),
                }
            }
            Token::Dot => {
                if prev.is_none() || pending.is_some() || !branches.is_empty() {
                    return Err(syntax(pos, "misplaced '.'"));
                }
                prev = None;
            }
        }
    }
    if pending.is_some() {
        return Err(syntax(lexemes.last().map_or(0, |l| l.span.start), "dangling bond"));
    }
    if let Some(&(_, position)) = branches.first() {
        return Err(ChemError::UnmatchedParenthesis { position });
    }
    if let Some(digit) = open_rings.iter().position(Option::is_some) {
        return Err(ChemError::UnmatchedRingClosure { digit: digit as u8 });
    }
    if atoms.is_empty() {
        return Err(ChemError::Empty);
    }
    Ok((atoms, bonds))
}

/// Default implicit hydrogen count for an organic-subset atom (or 0 for a
/// bracket atom) and whether the atom must take a double bond in the
/// Kekulé form.
fn hydrogens_and_pi(token: &AtomToken, base: u32) -> (u8, bool) {
    match &token.bracket {
        Some(br) => {
            if !token.aromatic {
                return (0, false);
            }
            let b = base + br.hydrogens as u32;
            match token.element.allowed_valences(br.charge) {
                Some(allowed) => {
                    let has = |v: u32| allowed.iter().any(|&a| a as u32 == v);
                    (0, !has(b) && has(b + 1))
                }
                None => (0, false),
            }
        }
        None => {
            let allowed = token.element.default_valences().unwrap_or(&[]);
            let Some(&v) = allowed.iter().find(|&&v| v as u32 >= base) else {
                return (0, false);
            };
            let free = v as u32 - base;
            if token.aromatic && free > 0 {
                ((free - 1) as u8, true)
            } else {
                (free as u8, false)
            }
        }
    }
}

/// Implicit hydrogens and pi flag the parser would assign to an unbracketed
/// atom with the given bond valence sum; `None` outside the organic subset.
/// The writer uses this to decide when brackets are needed.
pub(crate) fn bare_atom_state(element: super::Element, aromatic: bool, base: u32) -> Option<(u8, bool)> {
    let token = AtomToken { element, aromatic, bracket: None };
    element.is_organic_subset().then(|| hydrogens_and_pi(&token, base))
}

/// Picks one double bond per atom that needs a pi bond, among the aromatic
/// bonds. Returns a per-bond double flag.
fn kekulize(needs_pi: &[bool], adjacency: &[Vec<(usize, usize)>], orders: &[BondOrder]) -> Result<Vec<bool>, ChemError> {
    let n = needs_pi.len();
    let mut double = vec![false; orders.len()];
    if !needs_pi.iter().any(|&x| x) {
        return Ok(double);
    }
    let options: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|a| {
            adjacency[a]
                .iter()
                .copied()
                .filter(|&(nb, b)| orders[b] == BondOrder::Aromatic && needs_pi[nb])
                .collect()
        })
        .collect();
    for a in 0..n {
        if needs_pi[a] && options[a].is_empty() {
            return Err(ChemError::AromaticityError { atom: a, message: "cannot kekulize aromatic system" });
        }
    }
    let mut matched = vec![false; n];
    let mut steps = 0usize;
    if match_rest(needs_pi, &options, &mut matched, &mut double, &mut steps) {
        Ok(double)
    } else {
        let atom = (0..n).find(|&a| needs_pi[a]).unwrap_or(0);
        Err(ChemError::AromaticityError { atom, message: "cannot kekulize aromatic system" })
    }
}

fn match_rest(
    needs_pi: &[bool],
    options: &[Vec<(usize, usize)>],
    matched: &mut [bool],
    double: &mut [bool],
    steps: &mut usize,
) -> bool {
    *steps += 1;
    if *steps > KEKULE_STEP_LIMIT {
        return false;
    }
    // most constrained unmatched atom first
    let mut best: Option<(usize, usize)> = None;
    for a in 0..needs_pi.len() {
        if !needs_pi[a] || matched[a] {
            continue;
        }
        let free = options[a].iter().filter(|&&(nb, _)| !matched[nb]).count();
        if free == 0 {
            return false;
        }
        if best.is_none_or(|(_, f)| free < f) {
            best = Some((a, free));
        }
    }
    let Some((a, _)) = best else { return true };
    for &(nb, b) in &options[a] {
        if matched[nb] {
            continue;
        }
        matched[a] = true;
        matched[nb] = true;
        double[b] = true;
        if match_rest(needs_pi, options, matched, double, steps) {
            return true;
        }
        matched[a] = false;
        matched[nb] = false;
        double[b] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane() {
        let m = parse_smiles("C").unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert_eq!(m.bonds.len(), 0);
        assert_eq!(m.atoms[0].total_h(), 4);
    }

    #[test]
    fn benzene_is_aromatic() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert!(m.atoms.iter().all(|a| a.aromatic && a.total_h() == 1));
        assert!(m.bonds.iter().all(|b| b.order == BondOrder::Aromatic));
        assert_eq!(m.bonds.iter().filter(|b| b.kekule == BondOrder::Double).count(), 3);
    }

    #[test]
    fn kekule_benzene_is_perceived() {
        let m = parse_smiles("C1=CC=CC=C1").unwrap();
        assert!(m.atoms.iter().all(|a| a.aromatic));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(parse_smiles("C1CC").unwrap_err(), ChemError::UnmatchedRingClosure { digit: 1 });
        assert!(matches!(
            parse_smiles("C(F)(F)(F)(F)F").unwrap_err(),
            ChemError::ValenceViolation { atom: 0, valence: 5, .. }
        ));
        assert!(matches!(parse_smiles("CC(").unwrap_err(), ChemError::UnmatchedParenthesis { .. }));
        assert!(matches!(parse_smiles("CC)").unwrap_err(), ChemError::UnmatchedParenthesis { .. }));
        assert!(matches!(parse_smiles("C1CC1C1").unwrap_err(), ChemError::UnmatchedRingClosure { .. }));
        assert!(matches!(parse_smiles("C12CC12").unwrap_err(), ChemError::DuplicateBond { .. }));
        assert!(matches!(parse_smiles("C=").unwrap_err(), ChemError::Syntax { .. }));
        assert!(matches!(parse_smiles("C()C").unwrap_err(), ChemError::Syntax { .. }));
        assert!(matches!(parse_smiles("c1ccc1").unwrap_err(), ChemError::AromaticityError { .. }));
        assert!(matches!(parse_smiles("c1cccc1").unwrap_err(), ChemError::AromaticityError { .. }));
    }

    #[test]
    fn heteroaromatics() {
        for s in [
            "c1ccncc1",
            "c1cc[nH]c1",
            "c1ccoc1",
            "c1ccsc1",
            "Cn1ccnc1",
            "c1ccc2ccccc2c1",
            "c1ccc2[nH]ccc2c1",
            "O=c1cccc[nH]1",
            "c1cc[n+](C)cc1",
            "[O-][n+]1ccccc1",
            "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
            "c1ccc(-c2ccccc2)cc1",
            "c1ccc2c(c1)ccc1ccccc12",
        ] {
            let m = parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert!(m.atoms.iter().any(|a| a.aromatic), "{s}");
        }
    }

    #[test]
    fn biphenyl_link_is_single() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = m.bonds.iter().filter(|b| !b.in_ring).collect::<Vec<_>>();
        assert_eq!(link.len(), 1);
        assert_eq!(link[0].order, BondOrder::Single);
    }

    #[test]
    fn charged_and_bracket_atoms() {
        let m = parse_smiles("C[N+](C)(C)C").unwrap();
        assert_eq!(m.atoms[1].formal_charge, 1);
        let m = parse_smiles("CC(=O)[O-]").unwrap();
        assert_eq!(m.atoms[3].total_h(), 0);
        let m = parse_smiles("[Na+].[Cl-]").unwrap();
        assert_eq!(m.components().len(), 2);
        assert!(parse_smiles("[CH5]").is_err());
        assert!(parse_smiles("O=S(=O)(O)O").is_ok());
        assert!(parse_smiles("CS(C)=O").is_ok());
        assert!(parse_smiles("C[N+](=O)[O-]").is_ok());
    }
}
