//! Ring perception: ring-bond detection and the smallest set of smallest
//! rings (a minimum cycle basis built from Horton candidate cycles).

/// Marks every bond that lies on at least one cycle (i.e. is not a bridge).
pub fn ring_bonds(n_atoms: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n_atoms];
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    let mut in_ring = vec![true; edges.len()];
    let mut disc = vec![usize::MAX; n_atoms];
    let mut low = vec![0usize; n_atoms];
    let mut time = 0;
    // iterative DFS: (vertex, parent edge, next neighbour slot)
    for root in 0..n_atoms {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (v, pe, ref mut slot)) = stack.last_mut() {
            if *slot < adj[v].len() {
                let (w, e) = adj[v][*slot];
                *slot += 1;
                if e == pe {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, e, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        in_ring[pe] = false;
                    }
                }
            }
        }
    }
    in_ring
}

/// Smallest set of smallest rings over the ring bonds of the graph. Each ring
/// is returned as atom indices in traversal order.
pub fn sssr(n_atoms: usize, edges: &[(usize, usize)], ring_mask: &[bool]) -> Vec<Vec<usize>> {
    let ring_edges: Vec<usize> = (0..edges.len()).filter(|&i| ring_mask[i]).collect();
    if ring_edges.is_empty() {
        return Vec::new();
    }
    let mut adj = vec![Vec::new(); n_atoms];
    for &e in &ring_edges {
        let (a, b) = edges[e];
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    // cyclomatic number of the ring subgraph
    let ring_atoms: Vec<usize> = (0..n_atoms).filter(|&a| !adj[a].is_empty()).collect();
    let components = count_components(&ring_atoms, &adj);
    let needed = ring_edges.len() + components - ring_atoms.len();

    let words = edges.len().div_ceil(64);
    let mut candidates: Vec<(Vec<usize>, Vec<u64>)> = Vec::new();
    let mut seen = std::collections::HashSet::new();

    let mut dist = vec![usize::MAX; n_atoms];
    let mut parent = vec![(usize::MAX, usize::MAX); n_atoms];
    for &root in &ring_atoms {
        for &a in &ring_atoms {
            dist[a] = usize::MAX;
            parent[a] = (usize::MAX, usize::MAX);
        }
        dist[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(w, e) in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = (v, e);
                    queue.push_back(w);
                }
            }
        }
        for &e in &ring_edges {
            let (x, y) = edges[e];
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            if parent[x].1 == e || parent[y].1 == e {
                continue;
            }
            let px = path_to_root(x, &parent);
            let py = path_to_root(y, &parent);
            // paths must meet only at the root
            let shared = px.iter().filter(|(a, _)| py.iter().any(|(b, _)| a == b)).count();
            if shared != 1 {
                continue;
            }
            let mut bits = vec![0u64; words];
            let mut set = |e: usize| bits[e / 64] ^= 1 << (e % 64);
            set(e);
            for &(_, pe) in px.iter().chain(py.iter()) {
                if pe != usize::MAX {
                    set(pe);
                }
            }
            if !seen.insert(bits.clone()) {
                continue;
            }
            // atoms: x .. root, then root's successor on y's side .. y
            let mut atoms: Vec<usize> = px.iter().map(|&(a, _)| a).collect();
            atoms.extend(py.iter().rev().skip(1).map(|&(a, _)| a));
            candidates.push((atoms, bits));
        }
    }
    candidates.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));

    // greedy selection of independent cycles over GF(2)
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new(); // (pivot bit, reduced row)
    let mut rings = Vec::new();
    for (atoms, bits) in candidates {
        if rings.len() == needed {
            break;
        }
        let mut row = bits;
        for (pivot, b) in &basis {
            if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (r, x) in row.iter_mut().zip(b) {
                    *r ^= x;
                }
            }
        }
        if let Some(pivot) = first_bit(&row) {
            // keep rows reduced so later eliminations stay single-pass
            for (_, b) in basis.iter_mut() {
                if b[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    for (x, r) in b.iter_mut().zip(&row) {
                        *x ^= r;
                    }
                }
            }
            basis.push((pivot, row));
            rings.push(atoms);
        }
    }
    rings
}

fn path_to_root(mut v: usize, parent: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    loop {
        let (p, e) = parent[v];
        out.push((v, e));
        if p == usize::MAX {
            break;
        }
        v = p;
    }
    out
}

fn first_bit(row: &[u64]) -> Option<usize> {
    row.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn count_components(atoms: &[usize], adj: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for &s in atoms {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Vec<(usize, usize)> {
        (0..n).map(|i| (i, (i + 1) % n)).collect()
    }

    #[test]
    fn bridges_are_not_ring_bonds() {
        // cyclopropane with a tail
        let mut e = cycle(3);
        e.push((2, 3));
        e.push((3, 4));
        assert_eq!(ring_bonds(5, &e), vec![true, true, true, false, false]);
    }

    #[test]
    fn naphthalene_has_two_six_rings() {
        let mut e = cycle(6);
        e.extend([(5, 6), (6, 7), (7, 8), (8, 9), (9, 0)]);
        let mask = ring_bonds(10, &e);
        let rings = sssr(10, &e, &mask);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.len() == 6));
    }

    #[test]
    fn cubane_basis_is_five_four_rings() {
        let e = vec![
            (0, 1), (1, 2), (2, 3), (3, 0),
            (4, 5), (5, 6), (6, 7), (7, 4),
            (0, 4), (1, 5), (2, 6), (3, 7),
        ];
        let mask = ring_bonds(8, &e);
        let rings = sssr(8, &e, &mask);
        assert_eq!(rings.len(), 5);
        assert!(rings.iter().all(|r| r.len() == 4));
    }

    #[test]
    fn ring_atoms_are_in_cycle_order() {
        let e = cycle(7);
        let rings = sssr(7, &e, &ring_bonds(7, &e));
        let r = &rings[0];
        assert_eq!(r.len(), 7);
        for i in 0..r.len() {
            let (a, b) = (r[i], r[(i + 1) % r.len()]);
            assert!(e.contains(&(a, b)) || e.contains(&(b, a)));
        }
    }
}
