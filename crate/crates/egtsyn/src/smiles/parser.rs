//! Graph assembly from the token stream.

use std::collections::HashMap;

use super::tokenizer::{tokenize, BondSymbol, Token};
use super::{Atom, Bond, BondDirection, BondOrder, Molecule, SmilesError};

/// A bond symbol waiting for its right-hand atom or ring closure.
#[derive(Clone, Copy)]
struct PendingBond {
    symbol: BondSymbol,
    offset: usize,
}

/// An opened ring closure waiting for its partner digit.
struct OpenRing {
    atom: usize,
    bond: Option<BondSymbol>,
    offset: usize,
}

fn order_of(symbol: BondSymbol) -> BondOrder {
    match symbol {
        BondSymbol::Single | BondSymbol::Up | BondSymbol::Down => BondOrder::Single,
        BondSymbol::Double => BondOrder::Double,
        BondSymbol::Triple => BondOrder::Triple,
        BondSymbol::Aromatic => BondOrder::Aromatic,
    }
}

fn direction_of(symbol: BondSymbol) -> BondDirection {
    match symbol {
        BondSymbol::Up => BondDirection::Up,
        BondSymbol::Down => BondDirection::Down,
        _ => BondDirection::None,
    }
}

/// Parses a SMILES string into a [`Molecule`] with ring, conjugation, and
/// implicit-hydrogen perception already applied.
pub fn parse(smiles: &str) -> Result<Molecule, SmilesError> {
    let tokens = tokenize(smiles)?;
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut prev_atom: Option<usize> = None;
    let mut pending: Option<PendingBond> = None;
    let mut branch_stack: Vec<(Option<usize>, usize)> = Vec::new();
    let mut open_rings: HashMap<u16, OpenRing> = HashMap::new();

    let bond_exists = |bonds: &[Bond], a: usize, b: usize| {
        bonds
            .iter()
            .any(|bond| (bond.a, bond.b) == (a, b) || (bond.a, bond.b) == (b, a))
    };

    for spanned in &tokens {
        let offset = spanned.offset;
        match &spanned.token {
            Token::Atom(tok) => {
                let index = atoms.len();
                atoms.push(Atom {
                    element: tok.element.clone(),
                    aromatic: tok.aromatic,
                    formal_charge: tok.charge,
                    explicit_h: tok.explicit_h,
                    index,
                });
                if let Some(prev) = prev_atom {
                    let (order, direction) = match pending.take() {
                        Some(p) => (order_of(p.symbol), direction_of(p.symbol)),
                        None => {
                            let order = if atoms[prev].aromatic && tok.aromatic {
                                BondOrder::Aromatic
                            } else {
                                BondOrder::Single
                            };
                            (order, BondDirection::None)
                        }
                    };
                    bonds.push(Bond {
                        a: prev,
                        b: index,
                        order,
                        direction,
                        in_ring: false,
                        conjugated: false,
                    });
                } else if let Some(p) = pending.take() {
                    return Err(SmilesError::StrayBond { offset: p.offset });
                }
                prev_atom = Some(index);
            }
            Token::Bond(symbol) => {
                if pending.is_some() {
                    return Err(SmilesError::DanglingBond {
                        offset: pending.unwrap().offset,
                    });
                }
                pending = Some(PendingBond {
                    symbol: *symbol,
                    offset,
                });
            }
            Token::Ring(label) => {
                let Some(atom) = prev_atom else {
                    return Err(SmilesError::RingWithoutAtom { offset });
                };
                let here = pending.take().map(|p| p.symbol);
                match open_rings.remove(label) {
                    None => {
                        open_rings.insert(
                            *label,
                            OpenRing {
                                atom,
                                bond: here,
                                offset,
                            },
                        );
                    }
                    Some(open) => {
                        if open.atom == atom {
                            return Err(SmilesError::RingSelfBond { offset });
                        }
                        if bond_exists(&bonds, open.atom, atom) {
                            return Err(SmilesError::RingDuplicateBond { offset });
                        }
                        let symbol = match (open.bond, here) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(SmilesError::RingBondConflict { offset })
                            }
                            (Some(a), _) => Some(a),
                            (None, b) => b,
                        };
                        let (order, direction) = match symbol {
                            Some(s) => (order_of(s), direction_of(s)),
                            None => {
                                let order =
                                    if atoms[open.atom].aromatic && atoms[atom].aromatic {
                                        BondOrder::Aromatic
                                    } else {
                                        BondOrder::Single
                                    };
                                (order, BondDirection::None)
                            }
                        };
                        bonds.push(Bond {
                            a: open.atom,
                            b: atom,
                            order,
                            direction,
                            in_ring: false,
                            conjugated: false,
                        });
                    }
                }
            }
            Token::Open => {
                if pending.is_some() {
                    return Err(SmilesError::DanglingBond {
                        offset: pending.unwrap().offset,
                    });
                }
                let Some(prev) = prev_atom else {
                    return Err(SmilesError::BranchWithoutAtom { offset });
                };
                branch_stack.push((Some(prev), offset));
            }
            Token::Close => {
                if let Some(p) = pending {
                    return Err(SmilesError::DanglingBond { offset: p.offset });
                }
                let Some((restored, _)) = branch_stack.pop() else {
                    return Err(SmilesError::UnbalancedParen { offset });
                };
                prev_atom = restored;
            }
            Token::Dot => {
                if let Some(p) = pending {
                    return Err(SmilesError::DanglingBond { offset: p.offset });
                }
                prev_atom = None;
            }
        }
    }

    if let Some(p) = pending {
        return Err(SmilesError::DanglingBond { offset: p.offset });
    }
    if let Some((_, offset)) = branch_stack.first() {
        return Err(SmilesError::UnbalancedParen { offset: *offset });
    }
    if let Some((label, open)) = open_rings
        .iter()
        .min_by_key(|(_, open)| open.offset)
    {
        return Err(SmilesError::UnmatchedRingClosure {
            label: *label,
            offset: open.offset,
        });
    }

    Ok(Molecule::assemble(atoms, bonds, smiles.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom() {
        let mol = parse("C").unwrap();
        assert_eq!(mol.atom_count(), 1);
        assert_eq!(mol.bond_count(), 0);
    }

    #[test]
    fn carbon_dioxide_has_two_double_bonds() {
        let mol = parse("O=C=O").unwrap();
        assert_eq!(mol.atom_count(), 3);
        assert_eq!(mol.bond_count(), 2);
        assert!(mol.bonds().iter().all(|b| b.order == BondOrder::Double));
    }

    #[test]
    fn benzene_is_an_aromatic_six_ring() {
        let mol = parse("c1ccccc1").unwrap();
        assert_eq!(mol.atom_count(), 6);
        assert_eq!(mol.bond_count(), 6);
        assert!(mol.atoms().iter().all(|a| a.aromatic));
        assert!(mol
            .bonds()
            .iter()
            .all(|b| b.order == BondOrder::Aromatic && b.in_ring && b.conjugated));
    }

    #[test]
    fn branches_attach_to_the_stack_atom() {
        let mol = parse("CC(C)C").unwrap();
        assert_eq!(mol.atom_count(), 4);
        assert_eq!(mol.bond_count(), 3);
        assert_eq!(mol.degree(1), 3);
    }

    #[test]
    fn branch_order_is_isomorphic() {
        let left = parse("C(O)N").unwrap();
        let right = parse("C(N)O").unwrap();
        let mut deg_left: Vec<usize> = (0..3).map(|i| left.degree(i)).collect();
        let mut deg_right: Vec<usize> = (0..3).map(|i| right.degree(i)).collect();
        deg_left.sort_unstable();
        deg_right.sort_unstable();
        assert_eq!(deg_left, deg_right);
        let mut el_left: Vec<&str> = left.atoms().iter().map(|a| a.element.as_str()).collect();
        let mut el_right: Vec<&str> = right.atoms().iter().map(|a| a.element.as_str()).collect();
        el_left.sort_unstable();
        el_right.sort_unstable();
        assert_eq!(el_left, el_right);
    }

    #[test]
    fn ring_closure_bond_symbol_applies_to_the_ring_bond() {
        let mol = parse("C=1CCCCC=1").unwrap();
        let ring_bond = mol
            .bonds()
            .iter()
            .find(|b| (b.a, b.b) == (0, 5) || (b.a, b.b) == (5, 0))
            .expect("closure bond");
        assert_eq!(ring_bond.order, BondOrder::Double);
    }

    #[test]
    fn ring_closure_symbol_conflict_is_rejected() {
        assert!(matches!(
            parse("C=1CCCCC#1"),
            Err(SmilesError::RingBondConflict { .. })
        ));
    }

    #[test]
    fn ring_digit_reuse_after_closing_is_allowed() {
        let mol = parse("C1CC1C1CC1").unwrap();
        assert_eq!(mol.atom_count(), 6);
        assert_eq!(mol.bond_count(), 7);
    }

    #[test]
    fn dot_separates_components() {
        let mol = parse("CC.O").unwrap();
        assert_eq!(mol.atom_count(), 3);
        assert_eq!(mol.bond_count(), 1);
        assert_eq!(mol.component_count(), 2);
        assert_eq!(mol.component_of(0), 0);
        assert_eq!(mol.component_of(2), 1);
    }

    #[test]
    fn ring_closure_can_join_dot_components() {
        let mol = parse("C1.C1").unwrap();
        assert_eq!(mol.bond_count(), 1);
        assert_eq!(mol.component_count(), 1);
    }

    #[test]
    fn slash_bonds_record_direction_only() {
        let mol = parse("F/C=C/F").unwrap();
        assert_eq!(mol.bond_count(), 3);
        assert_eq!(mol.bonds()[0].order, BondOrder::Single);
        assert_eq!(mol.bonds()[0].direction, BondDirection::Up);
        assert_eq!(mol.bonds()[1].order, BondOrder::Double);
        assert_eq!(mol.bonds()[2].direction, BondDirection::Up);
    }

    #[test]
    fn unbalanced_open_paren_is_positioned() {
        assert_eq!(
            parse("CC(C"),
            Err(SmilesError::UnbalancedParen { offset: 2 })
        );
    }

    #[test]
    fn unbalanced_close_paren_is_positioned() {
        assert_eq!(
            parse("CC)C"),
            Err(SmilesError::UnbalancedParen { offset: 2 })
        );
    }

    #[test]
    fn dangling_ring_digit_is_positioned() {
        assert_eq!(
            parse("C1CC"),
            Err(SmilesError::UnmatchedRingClosure {
                label: 1,
                offset: 1
            })
        );
    }

    #[test]
    fn trailing_bond_symbol_is_rejected() {
        assert_eq!(parse("CC="), Err(SmilesError::DanglingBond { offset: 2 }));
    }

    #[test]
    fn bond_before_close_paren_is_rejected() {
        assert_eq!(
            parse("C(C=)O"),
            Err(SmilesError::DanglingBond { offset: 3 })
        );
    }

    #[test]
    fn leading_bond_symbol_is_rejected() {
        assert_eq!(parse("=C"), Err(SmilesError::StrayBond { offset: 0 }));
    }

    #[test]
    fn ring_self_bond_is_rejected() {
        assert!(matches!(
            parse("C11"),
            Err(SmilesError::RingSelfBond { .. })
        ));
    }

    #[test]
    fn duplicate_bond_via_ring_closure_is_rejected() {
        assert!(matches!(
            parse("C1C1"),
            Err(SmilesError::RingDuplicateBond { .. })
        ));
    }

    #[test]
    fn aromatic_implicit_bond_requires_both_ends_aromatic() {
        let mol = parse("c1ccccc1C").unwrap();
        let to_methyl = mol
            .bonds()
            .iter()
            .find(|b| b.a == 6 || b.b == 6)
            .expect("methyl bond");
        assert_eq!(to_methyl.order, BondOrder::Single);
    }

    #[test]
    fn explicit_aromatic_symbol_gives_aromatic_order() {
        let mol = parse("C:C").unwrap();
        assert_eq!(mol.bonds()[0].order, BondOrder::Aromatic);
    }

    #[test]
    fn connected_molecule_satisfies_tree_bound() {
        for s in ["C", "CCO", "c1ccccc1", "CC(C)(C)C", "C1CC1C1CC1"] {
            let mol = parse(s).unwrap();
            if mol.component_count() == 1 && mol.atom_count() > 0 {
                assert!(mol.bond_count() >= mol.atom_count() - 1, "{s}");
            }
        }
    }
}
