//! SMILES parsing for drug structures.
//!
//! Covers the grammar subset the benchmark drugs need: the organic subset
//! with aromatic lowercase forms, bracket atoms (charge and hydrogen count
//! honored, isotopes and chirality accepted but ignored), branches, ring
//! closures including `%nn`, explicit bond symbols, stereo slashes recorded
//! as bond direction, and dot-separated components. Aromaticity is read
//! from the notation, never perceived. Parsing also derives per-atom
//! implicit hydrogen counts and per-bond ring and conjugation flags.

mod parser;
mod perception;
mod tokenizer;

pub use parser::parse;
pub use perception::{conjugation, implicit_hydrogens, ring_membership};
pub use tokenizer::{tokenize, AtomToken, BondSymbol, SpannedToken, Token};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("unrecognized character '{ch}' at byte {offset}")]
    Lexical { ch: char, offset: usize },
    #[error("unknown element '{symbol}' at byte {offset}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("malformed bracket atom at byte {offset}: {reason}")]
    BadBracket { offset: usize, reason: &'static str },
    #[error("unbalanced parenthesis at byte {offset}")]
    UnbalancedParen { offset: usize },
    #[error("branch opened at byte {offset} before any atom")]
    BranchWithoutAtom { offset: usize },
    #[error("ring closure {label} at byte {offset} never paired")]
    UnmatchedRingClosure { label: u16, offset: usize },
    #[error("ring closure at byte {offset} has no preceding atom")]
    RingWithoutAtom { offset: usize },
    #[error("ring closure at byte {offset} would bond an atom to itself")]
    RingSelfBond { offset: usize },
    #[error("ring closure at byte {offset} duplicates an existing bond")]
    RingDuplicateBond { offset: usize },
    #[error("ring closure at byte {offset} disagrees with the bond symbol at its opening site")]
    RingBondConflict { offset: usize },
    #[error("bond symbol at byte {offset} is not followed by an atom or ring closure")]
    DanglingBond { offset: usize },
    #[error("bond symbol at byte {offset} has no preceding atom")]
    StrayBond { offset: usize },
}

/// Order of a chemical bond. Aromatic order arises from lowercase notation
/// or an explicit `:` symbol, never from perception.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution toward an atom's valence sum; aromatic counts 1.5.
    pub fn valence_weight(self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }

    pub fn is_multiple(self) -> bool {
        !matches!(self, BondOrder::Single)
    }
}

/// Stereo direction carried by `/` and `\` bond symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondDirection {
    None,
    Up,
    Down,
}

/// A heavy atom in parse order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: String,
    pub aromatic: bool,
    pub formal_charge: i32,
    /// Hydrogen count written inside a bracket atom; organic-subset atoms
    /// carry `None` and get their count from the valence-fill rule.
    pub explicit_h: Option<u8>,
    pub index: usize,
}

/// An undirected bond between two atoms, with perception flags filled in
/// by [`parse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub direction: BondDirection,
    pub in_ring: bool,
    pub conjugated: bool,
}

/// A parsed molecule: atoms, bonds, connected-component labels, and cached
/// implicit hydrogen counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source: String,
    component: Vec<usize>,
    component_count: usize,
    implicit_h: Vec<u8>,
    valence_warning: Vec<bool>,
}

impl Molecule {
    pub(crate) fn assemble(atoms: Vec<Atom>, bonds: Vec<Bond>, source: String) -> Self {
        let (component, component_count) = components(atoms.len(), &bonds);
        let mut mol = Molecule {
            atoms,
            bonds,
            source,
            component,
            component_count,
            implicit_h: Vec::new(),
            valence_warning: Vec::new(),
        };
        let rings = perception::ring_flags(mol.atoms.len(), &mol.bonds);
        for (bond, in_ring) in mol.bonds.iter_mut().zip(&rings) {
            bond.in_ring = *in_ring;
        }
        let conj = perception::conjugation_flags(mol.atoms.len(), &mol.bonds);
        for (bond, conjugated) in mol.bonds.iter_mut().zip(&conj) {
            bond.conjugated = *conjugated;
        }
        let (implicit_h, valence_warning) = perception::hydrogen_fill(&mol.atoms, &mol.bonds);
        mol.implicit_h = implicit_h;
        mol.valence_warning = valence_warning;
        mol
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Connected-component index of an atom, in order of first appearance.
    pub fn component_of(&self, atom_index: usize) -> usize {
        self.component[atom_index]
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Number of bonds incident to an atom.
    pub fn degree(&self, atom_index: usize) -> usize {
        self.bonds
            .iter()
            .filter(|b| b.a == atom_index || b.b == atom_index)
            .count()
    }

    /// Sum of bond-order valence weights at an atom (aromatic = 1.5).
    pub fn bond_order_sum(&self, atom_index: usize) -> f64 {
        self.bonds
            .iter()
            .filter(|b| b.a == atom_index || b.b == atom_index)
            .map(|b| b.order.valence_weight())
            .sum()
    }

    /// Cached implicit hydrogen count for an atom.
    pub fn implicit_h(&self, atom_index: usize) -> u8 {
        self.implicit_h[atom_index]
    }

    /// True when the valence-fill rule found more bond order than the
    /// element's largest default valence allows.
    pub fn valence_warning(&self, atom_index: usize) -> bool {
        self.valence_warning[atom_index]
    }

    pub fn has_valence_warnings(&self) -> bool {
        self.valence_warning.iter().any(|&w| w)
    }

    /// Relabels atom `i` as `atom_perm[i]` and moves bond `j` to position
    /// `bond_perm[j]`, then recomputes all derived state (components, ring
    /// membership, conjugation, hydrogen counts) from the relabeled
    /// structure. Bond endpoints keep their stored orientation so
    /// direction flags stay meaningful.
    ///
    /// Panics if either argument is not a permutation of the right length.
    pub fn permuted(&self, atom_perm: &[usize], bond_perm: &[usize]) -> Molecule {
        check_permutation(atom_perm, self.atoms.len(), "atom");
        check_permutation(bond_perm, self.bonds.len(), "bond");
        let mut atoms = self.atoms.clone();
        for atom in &mut atoms {
            atom.index = atom_perm[atom.index];
        }
        atoms.sort_by_key(|a| a.index);
        let mut bonds = self.bonds.clone();
        for (j, bond) in self.bonds.iter().enumerate() {
            let mut moved = *bond;
            moved.a = atom_perm[bond.a];
            moved.b = atom_perm[bond.b];
            bonds[bond_perm[j]] = moved;
        }
        Molecule::assemble(atoms, bonds, self.source.clone())
    }
}

fn check_permutation(perm: &[usize], len: usize, what: &str) {
    assert_eq!(perm.len(), len, "{what} permutation length");
    let mut seen = vec![false; len];
    for &p in perm {
        assert!(p < len, "{what} permutation index {p} out of range");
        assert!(!seen[p], "{what} permutation repeats index {p}");
        seen[p] = true;
    }
}

/// Connected-component labels by breadth-first search over bonds; labels
/// are assigned in order of first appearance by atom index.
fn components(n: usize, bonds: &[Bond]) -> (Vec<usize>, usize) {
    let mut adjacency = vec![Vec::new(); n];
    for bond in bonds {
        adjacency[bond.a].push(bond.b);
        adjacency[bond.b].push(bond.a);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        label[start] = next;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    (label, next)
}
