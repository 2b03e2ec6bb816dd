//! Dual-graph featurization: the atom-based graph and the atom-bond-based
//! graph that the model consumes.
//!
//! Both graphs share one 78-dimensional feature space. Atom vectors fill it
//! with four one-hot blocks plus an aromatic flag; bond vectors use the
//! first eleven positions and are zero-padded, so a single GCN weight
//! matrix can process the mixed node kinds of the atom-bond graph.

use thiserror::Error;

use crate::smiles::{BondDirection, BondOrder, Molecule};
use crate::tensor::Tensor;

/// Shared width of atom and bond feature vectors.
pub const FEATURE_DIM: usize = 78;

/// Element alphabet for the atom-symbol one-hot block; symbols outside the
/// list map to a dedicated final slot.
pub const ATOM_SYMBOLS: [&str; 43] = [
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al", "I", "B",
    "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H", "Li", "Ge", "Cu",
    "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt", "Hg", "Pb",
];

const SYMBOL_BLOCK: usize = ATOM_SYMBOLS.len() + 1;
const COUNT_BLOCK: usize = 11;
const DEGREE_OFFSET: usize = SYMBOL_BLOCK;
const VALENCE_OFFSET: usize = DEGREE_OFFSET + COUNT_BLOCK;
const HYDROGEN_OFFSET: usize = VALENCE_OFFSET + COUNT_BLOCK;
const ATOM_AROMATIC_INDEX: usize = HYDROGEN_OFFSET + COUNT_BLOCK;

const BOND_ORDER_OFFSET: usize = 0;
const BOND_DIRECTION_OFFSET: usize = 4;
const BOND_CONJUGATED_INDEX: usize = 7;
const BOND_AROMATIC_INDEX: usize = 8;
const BOND_RING_INDEX: usize = 9;
const BOND_COMPONENT_INDEX: usize = 10;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("molecule has no atoms")]
    EmptyMolecule,
    #[error("adjacency matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("adjacency matrix is asymmetric at ({row},{col})")]
    Asymmetric { row: usize, col: usize },
    #[error("adjacency diagonal entry {index} must be zero before normalization")]
    NonzeroDiagonal { index: usize },
    #[error("adjacency entry ({row},{col}) is {value}, expected 0 or 1")]
    NonBinary { row: usize, col: usize, value: f64 },
}

/// Whether a graph node stands for an atom or for a chemical bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Atom,
    Bond,
}

/// One featurized graph: node feature matrix, symmetrically normalized
/// adjacency with self-loops, and the kind of each node.
#[derive(Debug, Clone)]
pub struct FeatureGraph {
    pub node_features: Tensor,
    pub adjacency_norm: Tensor,
    pub node_kind: Vec<NodeKind>,
}

impl FeatureGraph {
    pub fn node_count(&self) -> usize {
        self.node_kind.len()
    }
}

/// The pair of graphs built from one molecule.
#[derive(Debug, Clone)]
pub struct DualGraph {
    pub atom_graph: FeatureGraph,
    pub atom_bond_graph: FeatureGraph,
    pub drug_id: String,
}

fn one_hot_count(vector: &mut [f64], offset: usize, value: usize) {
    let slot = value.min(COUNT_BLOCK - 1);
    vector[offset + slot] = 1.0;
}

/// 78-dimensional atom descriptor: element symbol, degree, total valence,
/// implicit hydrogen count (each one-hot), and an aromatic flag.
pub fn featurize_atom(mol: &Molecule, atom_index: usize) -> Vec<f64> {
    let atom = &mol.atoms()[atom_index];
    let mut v = vec![0.0; FEATURE_DIM];
    let symbol_slot = ATOM_SYMBOLS
        .iter()
        .position(|&s| s == atom.element)
        .unwrap_or(ATOM_SYMBOLS.len());
    v[symbol_slot] = 1.0;
    one_hot_count(&mut v, DEGREE_OFFSET, mol.degree(atom_index));
    let total_valence =
        mol.bond_order_sum(atom_index).floor() as usize + mol.implicit_h(atom_index) as usize;
    one_hot_count(&mut v, VALENCE_OFFSET, total_valence);
    one_hot_count(&mut v, HYDROGEN_OFFSET, mol.implicit_h(atom_index) as usize);
    if atom.aromatic {
        v[ATOM_AROMATIC_INDEX] = 1.0;
    }
    v
}

/// 78-dimensional bond descriptor: order and direction one-hots plus
/// conjugation, aromaticity, ring, and component-parity flags in the first
/// eleven positions; the rest is zero padding.
pub fn featurize_bond(mol: &Molecule, bond_index: usize) -> Vec<f64> {
    let bond = &mol.bonds()[bond_index];
    let mut v = vec![0.0; FEATURE_DIM];
    let order_slot = match bond.order {
        BondOrder::Single => 0,
        BondOrder::Double => 1,
        BondOrder::Triple => 2,
        BondOrder::Aromatic => 3,
    };
    v[BOND_ORDER_OFFSET + order_slot] = 1.0;
    let direction_slot = match bond.direction {
        BondDirection::None => 0,
        BondDirection::Up => 1,
        BondDirection::Down => 2,
    };
    v[BOND_DIRECTION_OFFSET + direction_slot] = 1.0;
    if bond.conjugated {
        v[BOND_CONJUGATED_INDEX] = 1.0;
    }
    if bond.order == BondOrder::Aromatic {
        v[BOND_AROMATIC_INDEX] = 1.0;
    }
    if bond.in_ring {
        v[BOND_RING_INDEX] = 1.0;
    }
    if mol.component_of(bond.a) % 2 == 1 {
        v[BOND_COMPONENT_INDEX] = 1.0;
    }
    v
}

/// Symmetric normalization D^(-1/2) (A + I) D^(-1/2) where D is the degree
/// matrix of A + I. The input must be square, symmetric, zero-diagonal,
/// and 0/1-valued.
pub fn normalize_adjacency(a: &Tensor) -> Result<Tensor, GraphError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(GraphError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if v != 0.0 && v != 1.0 {
                return Err(GraphError::NonBinary {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if j > i && v != a.get(j, i) {
                return Err(GraphError::Asymmetric { row: i, col: j });
            }
        }
        if a.get(i, i) != 0.0 {
            return Err(GraphError::NonzeroDiagonal { index: i });
        }
    }

    let mut degree = vec![0.0; n];
    for i in 0..n {
        degree[i] = (0..n).map(|j| a.get(i, j)).sum::<f64>() + 1.0;
    }
    // 1/sqrt(d_i * d_j) rather than a product of two square roots: the
    // single rounding keeps diagonals exactly 1/(deg+1).
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let tilde = a.get(i, j) + if i == j { 1.0 } else { 0.0 };
            if tilde != 0.0 {
                out.set(i, j, tilde / (degree[i] * degree[j]).sqrt());
            }
        }
    }
    Ok(out)
}

fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Tensor {
    let mut a = Tensor::zeros(n, n);
    for &(i, j) in edges {
        a.set(i, j, 1.0);
        a.set(j, i, 1.0);
    }
    a
}

/// Atom-based graph: one node per atom, one edge per bond.
pub fn build_atom_graph(mol: &Molecule) -> Result<FeatureGraph, GraphError> {
    let n = mol.atom_count();
    if n == 0 {
        return Err(GraphError::EmptyMolecule);
    }
    let mut features = Vec::with_capacity(n * FEATURE_DIM);
    for i in 0..n {
        features.extend(featurize_atom(mol, i));
    }
    let edges: Vec<(usize, usize)> = mol.bonds().iter().map(|b| (b.a, b.b)).collect();
    let adjacency = adjacency_from_edges(n, &edges);
    Ok(FeatureGraph {
        node_features: Tensor::new(n, FEATURE_DIM, features).expect("feature shape"),
        adjacency_norm: normalize_adjacency(&adjacency)?,
        node_kind: vec![NodeKind::Atom; n],
    })
}

/// Atom-bond-based graph: atoms first, then one node per bond, with edges
/// only between a bond node and its two endpoint atoms.
pub fn build_atom_bond_graph(mol: &Molecule) -> Result<FeatureGraph, GraphError> {
    let n = mol.atom_count();
    if n == 0 {
        return Err(GraphError::EmptyMolecule);
    }
    let m = mol.bond_count();
    let total = n + m;
    let mut features = Vec::with_capacity(total * FEATURE_DIM);
    for i in 0..n {
        features.extend(featurize_atom(mol, i));
    }
    for j in 0..m {
        features.extend(featurize_bond(mol, j));
    }
    let mut edges = Vec::with_capacity(2 * m);
    for (j, bond) in mol.bonds().iter().enumerate() {
        edges.push((bond.a, n + j));
        edges.push((bond.b, n + j));
    }
    let adjacency = adjacency_from_edges(total, &edges);
    let mut node_kind = vec![NodeKind::Atom; n];
    node_kind.extend(vec![NodeKind::Bond; m]);
    Ok(FeatureGraph {
        node_features: Tensor::new(total, FEATURE_DIM, features).expect("feature shape"),
        adjacency_norm: normalize_adjacency(&adjacency)?,
        node_kind,
    })
}

/// Builds both graphs for one molecule.
pub fn build_dual_graph(mol: &Molecule, drug_id: &str) -> Result<DualGraph, GraphError> {
    Ok(DualGraph {
        atom_graph: build_atom_graph(mol)?,
        atom_bond_graph: build_atom_bond_graph(mol)?,
        drug_id: drug_id.to_string(),
    })
}

/// Structured-text dump of a dual graph: node kinds with the indices of
/// their set feature bits, then each graph's edge list. Diffable, and
/// stable for golden-file tests.
pub fn render_dump(dual: &DualGraph) -> String {
    let mut out = String::new();
    out.push_str(&format!("drug {}\n", dual.drug_id));
    for (name, graph) in [
        ("atom_graph", &dual.atom_graph),
        ("atom_bond_graph", &dual.atom_bond_graph),
    ] {
        out.push_str(&format!("{} nodes {}\n", name, graph.node_count()));
        for i in 0..graph.node_count() {
            let kind = match graph.node_kind[i] {
                NodeKind::Atom => "atom",
                NodeKind::Bond => "bond",
            };
            let set: Vec<String> = (0..FEATURE_DIM)
                .filter(|&j| graph.node_features.get(i, j) != 0.0)
                .map(|j| j.to_string())
                .collect();
            out.push_str(&format!("node {i} kind={kind} features={}\n", set.join(",")));
        }
        out.push_str(&format!("{name} edges\n"));
        for i in 0..graph.node_count() {
            for j in i + 1..graph.node_count() {
                if graph.adjacency_norm.get(i, j) != 0.0 {
                    out.push_str(&format!("{i} {j}\n"));
                }
            }
        }
    }
    out
}
