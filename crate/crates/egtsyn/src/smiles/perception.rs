//! Structure perception: implicit hydrogens, ring bonds, conjugation.

use super::{Bond, BondOrder, Molecule};

/// Default valence ladder per organic-subset element, smallest first.
fn default_valences(element: &str) -> &'static [u8] {
    match element {
        "B" => &[3],
        "C" => &[4],
        "N" => &[3],
        "O" => &[2],
        "P" => &[3, 5],
        "S" => &[2, 4, 6],
        "F" | "Cl" | "Br" | "I" => &[1],
        _ => &[],
    }
}

/// Implicit hydrogen count for one atom; bracket atoms report their written
/// count, everything else gets a standard-valence fill.
pub fn implicit_hydrogens(mol: &Molecule, atom_index: usize) -> u8 {
    mol.implicit_h(atom_index)
}

/// Per-bond ring flags; a bond lies on a cycle iff it is not a bridge.
pub fn ring_membership(mol: &Molecule) -> Vec<bool> {
    ring_flags(mol.atom_count(), mol.bonds())
}

/// Per-bond conjugation flags; see [`conjugation_flags`] for the rule.
pub fn conjugation(mol: &Molecule) -> Vec<bool> {
    conjugation_flags(mol.atom_count(), mol.bonds())
}

/// Valence-fill pass over all atoms. Returns the hydrogen counts and a
/// per-atom flag marking atoms whose bond-order sum exceeds every default
/// valence of their element (those atoms get zero hydrogens).
pub(crate) fn hydrogen_fill(atoms: &[super::Atom], bonds: &[Bond]) -> (Vec<u8>, Vec<bool>) {
    let mut order_sum = vec![0.0f64; atoms.len()];
    for bond in bonds {
        let w = bond.order.valence_weight();
        order_sum[bond.a] += w;
        order_sum[bond.b] += w;
    }
    let mut counts = Vec::with_capacity(atoms.len());
    let mut warnings = vec![false; atoms.len()];
    for (i, atom) in atoms.iter().enumerate() {
        if let Some(h) = atom.explicit_h {
            counts.push(h);
            continue;
        }
        let valence = default_valences(&atom.element)
            .iter()
            .copied()
            .find(|&v| f64::from(v) >= order_sum[i]);
        match valence {
            Some(v) => {
                let free =
                    f64::from(v) - order_sum[i] - f64::from(atom.formal_charge.unsigned_abs());
                counts.push(free.max(0.0).floor() as u8);
            }
            None => {
                warnings[i] = true;
                counts.push(0);
            }
        }
    }
    (counts, warnings)
}

/// Marks each bond as in-ring iff it is not a bridge, found by one
/// iterative depth-first sweep with low-link values.
pub(crate) fn ring_flags(n: usize, bonds: &[Bond]) -> Vec<bool> {
    let mut adjacency = vec![Vec::new(); n];
    for (j, bond) in bonds.iter().enumerate() {
        adjacency[bond.a].push((bond.b, j));
        adjacency[bond.b].push((bond.a, j));
    }

    const UNSEEN: usize = usize::MAX;
    let mut disc = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut bridge = vec![false; bonds.len()];
    let mut time = 0;

    struct Frame {
        node: usize,
        parent_edge: usize,
        next: usize,
    }

    for start in 0..n {
        if disc[start] != UNSEEN {
            continue;
        }
        disc[start] = time;
        low[start] = time;
        time += 1;
        let mut stack = vec![Frame {
            node: start,
            parent_edge: usize::MAX,
            next: 0,
        }];
        while let Some(top) = stack.last_mut() {
            let u = top.node;
            if top.next < adjacency[u].len() {
                let (v, e) = adjacency[u][top.next];
                top.next += 1;
                if e == top.parent_edge {
                    continue;
                }
                if disc[v] == UNSEEN {
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push(Frame {
                        node: v,
                        parent_edge: e,
                        next: 0,
                    });
                } else if disc[v] < low[u] {
                    low[u] = disc[v];
                }
            } else {
                let done = stack.pop().expect("frame present");
                if let Some(parent) = stack.last() {
                    let p = parent.node;
                    if low[done.node] < low[p] {
                        low[p] = low[done.node];
                    }
                    if low[done.node] > disc[p] {
                        bridge[done.parent_edge] = true;
                    }
                }
            }
        }
    }
    bridge.iter().map(|&b| !b).collect()
}

/// Conjugation rule, applied in three passes: aromatic bonds are
/// conjugated; a single bond is conjugated when both of its atoms carry at
/// least one multiple or aromatic bond; a double or triple bond is
/// conjugated when it shares an atom with a conjugated single bond.
pub(crate) fn conjugation_flags(n: usize, bonds: &[Bond]) -> Vec<bool> {
    let mut carries_multiple = vec![false; n];
    for bond in bonds {
        if bond.order.is_multiple() {
            carries_multiple[bond.a] = true;
            carries_multiple[bond.b] = true;
        }
    }

    let mut conjugated = vec![false; bonds.len()];
    for (j, bond) in bonds.iter().enumerate() {
        match bond.order {
            BondOrder::Aromatic => conjugated[j] = true,
            BondOrder::Single => {
                conjugated[j] = carries_multiple[bond.a] && carries_multiple[bond.b];
            }
            _ => {}
        }
    }

    let mut touches_conjugated_single = vec![false; n];
    for (j, bond) in bonds.iter().enumerate() {
        if conjugated[j] && bond.order == BondOrder::Single {
            touches_conjugated_single[bond.a] = true;
            touches_conjugated_single[bond.b] = true;
        }
    }
    for (j, bond) in bonds.iter().enumerate() {
        if matches!(bond.order, BondOrder::Double | BondOrder::Triple)
            && (touches_conjugated_single[bond.a] || touches_conjugated_single[bond.b])
        {
            conjugated[j] = true;
        }
    }
    conjugated
}
