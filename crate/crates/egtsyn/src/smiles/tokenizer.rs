//! Lexer turning a SMILES string into spanned tokens.

use super::SmilesError;

/// All element symbols accepted inside bracket atoms.
const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
    "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Aromatic symbols allowed inside brackets.
const BRACKET_AROMATIC: &[&str] = &["b", "c", "n", "o", "p", "s", "se", "as"];

fn is_known_element(symbol: &str) -> bool {
    ELEMENTS.contains(&symbol)
}

/// An atom as written, before graph assembly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomToken {
    pub element: String,
    pub aromatic: bool,
    pub charge: i32,
    pub explicit_h: Option<u8>,
    pub bracket: bool,
}

impl AtomToken {
    fn organic(element: &str, aromatic: bool) -> Self {
        AtomToken {
            element: element.to_string(),
            aromatic,
            charge: 0,
            explicit_h: None,
            bracket: false,
        }
    }
}

/// Explicit bond symbols; slashes carry direction, not order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Atom(AtomToken),
    Bond(BondSymbol),
    Open,
    Close,
    Ring(u16),
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpannedToken {
    pub token: Token,
    pub offset: usize,
}

/// Splits a SMILES string into tokens, reporting the byte offset of
/// anything it cannot recognize.
pub fn tokenize(smiles: &str) -> Result<Vec<SpannedToken>, SmilesError> {
    if smiles.is_empty() {
        return Err(SmilesError::Empty);
    }
    let bytes = smiles.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let offset = i;
        let c = bytes[i];
        let token = match c {
            b'(' => {
                i += 1;
                Token::Open
            }
            b')' => {
                i += 1;
                Token::Close
            }
            b'.' => {
                i += 1;
                Token::Dot
            }
            b'-' => {
                i += 1;
                Token::Bond(BondSymbol::Single)
            }
            b'=' => {
                i += 1;
                Token::Bond(BondSymbol::Double)
            }
            b'#' => {
                i += 1;
                Token::Bond(BondSymbol::Triple)
            }
            b':' => {
                i += 1;
                Token::Bond(BondSymbol::Aromatic)
            }
            b'/' => {
                i += 1;
                Token::Bond(BondSymbol::Up)
            }
            b'\\' => {
                i += 1;
                Token::Bond(BondSymbol::Down)
            }
            b'0'..=b'9' => {
                i += 1;
                Token::Ring((c - b'0') as u16)
            }
            b'%' => {
                let d1 = bytes.get(i + 1).copied().filter(u8::is_ascii_digit);
                let d2 = bytes.get(i + 2).copied().filter(u8::is_ascii_digit);
                let (Some(d1), Some(d2)) = (d1, d2) else {
                    return Err(SmilesError::Lexical { ch: '%', offset });
                };
                i += 3;
                Token::Ring(((d1 - b'0') as u16) * 10 + (d2 - b'0') as u16)
            }
            b'[' => {
                let (atom, next) = lex_bracket(bytes, i)?;
                i = next;
                Token::Atom(atom)
            }
            b'C' => {
                if bytes.get(i + 1) == Some(&b'l') {
                    i += 2;
                    Token::Atom(AtomToken::organic("Cl", false))
                } else {
                    i += 1;
                    Token::Atom(AtomToken::organic("C", false))
                }
            }
            b'B' => {
                if bytes.get(i + 1) == Some(&b'r') {
                    i += 2;
                    Token::Atom(AtomToken::organic("Br", false))
                } else {
                    i += 1;
                    Token::Atom(AtomToken::organic("B", false))
                }
            }
            b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                i += 1;
                Token::Atom(AtomToken::organic(&(c as char).to_string(), false))
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                i += 1;
                let upper = (c as char).to_ascii_uppercase().to_string();
                Token::Atom(AtomToken {
                    element: upper,
                    aromatic: true,
                    charge: 0,
                    explicit_h: None,
                    bracket: false,
                })
            }
            _ => {
                return Err(SmilesError::Lexical {
                    ch: smiles[i..].chars().next().unwrap_or('?'),
                    offset,
                })
            }
        };
        tokens.push(SpannedToken { token, offset });
    }
    Ok(tokens)
}

/// Lexes one bracket atom starting at the `[`; returns the token and the
/// index just past the `]`.
///
/// Grammar inside the bracket: optional isotope digits (ignored), element
/// symbol, optional `@`/`@@` (ignored), optional `H` with count, optional
/// charge, optional `:class` (ignored).
fn lex_bracket(bytes: &[u8], start: usize) -> Result<(AtomToken, usize), SmilesError> {
    let mut i = start + 1;
    let fail = |reason: &'static str| SmilesError::BadBracket {
        offset: start,
        reason,
    };

    // Isotope prefix.
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i >= bytes.len() {
        return Err(fail("unterminated bracket"));
    }

    // Element symbol: maximal two-letter match first.
    let (element, aromatic) = if bytes[i].is_ascii_uppercase() {
        let two = if i + 1 < bytes.len() && bytes[i + 1].is_ascii_lowercase() {
            Some(String::from_utf8_lossy(&bytes[i..i + 2]).into_owned())
        } else {
            None
        };
        match two {
            Some(sym) if is_known_element(&sym) => {
                i += 2;
                (sym, false)
            }
            _ => {
                let sym = (bytes[i] as char).to_string();
                if !is_known_element(&sym) {
                    return Err(SmilesError::UnknownElement {
                        symbol: sym,
                        offset: i,
                    });
                }
                i += 1;
                (sym, false)
            }
        }
    } else if bytes[i].is_ascii_lowercase() {
        let two = if i + 1 < bytes.len() && bytes[i + 1].is_ascii_lowercase() {
            Some(String::from_utf8_lossy(&bytes[i..i + 2]).into_owned())
        } else {
            None
        };
        let sym = match two {
            Some(s) if BRACKET_AROMATIC.contains(&s.as_str()) => {
                i += 2;
                s
            }
            _ => {
                let s = (bytes[i] as char).to_string();
                if !BRACKET_AROMATIC.contains(&s.as_str()) {
                    return Err(SmilesError::UnknownElement {
                        symbol: s,
                        offset: i,
                    });
                }
                i += 1;
                s
            }
        };
        let mut cap = sym.clone();
        cap[..1].make_ascii_uppercase();
        (cap, true)
    } else {
        return Err(fail("expected an element symbol"));
    };

    // Chirality markers, accepted and discarded.
    while i < bytes.len() && bytes[i] == b'@' {
        i += 1;
    }

    // Hydrogen count.
    let mut explicit_h: u8 = 0;
    if i < bytes.len() && bytes[i] == b'H' {
        i += 1;
        explicit_h = 1;
        if i < bytes.len() && bytes[i].is_ascii_digit() {
            explicit_h = bytes[i] - b'0';
            i += 1;
        }
    }

    // Charge: +, -, repeated signs, or a sign with digits.
    let mut charge: i32 = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        let sign: i32 = if bytes[i] == b'+' { 1 } else { -1 };
        let sign_byte = bytes[i];
        i += 1;
        if i < bytes.len() && bytes[i].is_ascii_digit() {
            let mut magnitude = 0i32;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                magnitude = magnitude * 10 + (bytes[i] - b'0') as i32;
                i += 1;
            }
            charge = sign * magnitude;
        } else {
            let mut magnitude = 1;
            while i < bytes.len() && bytes[i] == sign_byte {
                magnitude += 1;
                i += 1;
            }
            charge = sign * magnitude;
        }
    }

    // Atom class, accepted and discarded.
    if i < bytes.len() && bytes[i] == b':' {
        i += 1;
        if i >= bytes.len() || !bytes[i].is_ascii_digit() {
            return Err(fail("atom class marker without digits"));
        }
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }

    if i >= bytes.len() || bytes[i] != b']' {
        return Err(fail("expected closing ']'"));
    }
    Ok((
        AtomToken {
            element,
            aromatic,
            charge,
            explicit_h: Some(explicit_h),
            bracket: true,
        },
        i + 1,
    ))
}
