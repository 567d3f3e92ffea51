//! Text format for polynomials.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! poly   := ('+'|'-')? term (('+'|'-') term)*
//! term   := coeff ('*' factor)* | factor ('*' factor)*
//! factor := var ('^' uint)?
//! var    := 'x' uint            -- indices start at 1
//! coeff  := int ('/' uint)?
//! ```
//!
//! Rendering emits graded-lexicographic order (degree-major, `x1 > x2 > ...`),
//! so `render . parse` is the identity on canonical forms.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::poly::{Monomial, PolyError, Polynomial, MAX_VARS};
use crate::rat::Rational;

/// Syntax or semantic error with a byte position into the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at position {}: {}", self.pos, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str) -> Self {
        Scanner {
            bytes: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos,
            message: message.into(),
        }
    }

    fn uint(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an unsigned integer"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError {
                pos: start,
                message: "integer literal too large".into(),
            })
    }

    fn bigint(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(ParseError {
                pos: start,
                message: "expected an integer".into(),
            });
        }
        Ok(BigInt::from_str(std::str::from_utf8(&self.bytes[start..self.pos]).unwrap()).unwrap())
    }
}

struct RawTerm {
    coeff: Rational,
    // (variable index, exponent) pairs, 0-based, possibly repeated.
    factors: Vec<(usize, u32)>,
    max_var: usize,
}

fn parse_factor(sc: &mut Scanner) -> Result<(usize, u32), ParseError> {
    let xpos = sc.pos;
    match sc.bump() {
        Some(b'x') => {}
        _ => {
            return Err(ParseError {
                pos: xpos,
                message: "expected a variable".into(),
            })
        }
    }
    let idx_pos = sc.pos;
    let idx = sc.uint()?;
    if idx == 0 {
        return Err(ParseError {
            pos: idx_pos,
            message: "variable indices start at x1".into(),
        });
    }
    if idx as usize > MAX_VARS {
        return Err(ParseError {
            pos: idx_pos,
            message: format!("variable x{idx} exceeds the {MAX_VARS}-variable limit"),
        });
    }
    let exp = if sc.peek() == Some(b'^') {
        sc.bump();
        let e = sc.uint()?;
        u32::try_from(e).map_err(|_| sc.error("exponent too large"))?
    } else {
        1
    };
    Ok((idx as usize - 1, exp))
}

fn parse_term(sc: &mut Scanner) -> Result<RawTerm, ParseError> {
    let mut coeff = Rational::one();
    let mut factors = Vec::new();
    let mut max_var = 0usize;

    match sc.peek() {
        Some(b) if b == b'-' || b.is_ascii_digit() => {
            let num = sc.bigint()?;
            let den = if sc.peek() == Some(b'/') {
                sc.bump();
                let dpos = sc.pos;
                let d = sc.bigint()?;
                if d == BigInt::from(0) {
                    return Err(ParseError {
                        pos: dpos,
                        message: "zero denominator".into(),
                    });
                }
                d
            } else {
                BigInt::from(1)
            };
            coeff = Rational::new(num, den).expect("denominator checked nonzero");
            while sc.peek() == Some(b'*') {
                sc.bump();
                let (v, e) = parse_factor(sc)?;
                max_var = max_var.max(v + 1);
                factors.push((v, e));
            }
        }
        Some(b'x') => {
            let (v, e) = parse_factor(sc)?;
            max_var = max_var.max(v + 1);
            factors.push((v, e));
            while sc.peek() == Some(b'*') {
                sc.bump();
                let (v, e) = parse_factor(sc)?;
                max_var = max_var.max(v + 1);
                factors.push((v, e));
            }
        }
        _ => return Err(sc.error("expected a term")),
    }
    Ok(RawTerm {
        coeff,
        factors,
        max_var,
    })
}

/// Parses the grammar above. When `nvars` is `None` the arity is inferred
/// from the largest variable index; a constant-only input then fails because
/// its dimension cannot be known.
pub fn parse_polynomial(text: &str, nvars: Option<usize>) -> Result<Polynomial, PolyError> {
    let mut sc = Scanner::new(text);
    let mut raw: Vec<(Rational, Vec<(usize, u32)>)> = Vec::new();
    let mut max_var = 0usize;

    let mut sign = match sc.peek() {
        Some(b'-') => {
            sc.bump();
            -1
        }
        Some(b'+') => {
            sc.bump();
            1
        }
        _ => 1,
    };
    loop {
        let term = parse_term(&mut sc).map_err(PolyError::Parse)?;
        max_var = max_var.max(term.max_var);
        let coeff = if sign < 0 {
            term.coeff.neg()
        } else {
            term.coeff
        };
        raw.push((coeff, term.factors));
        match sc.peek() {
            None => break,
            Some(b'+') => {
                sc.bump();
                sign = 1;
            }
            Some(b'-') => {
                sc.bump();
                sign = -1;
            }
            Some(_) => {
                return Err(PolyError::Parse(
                    sc.error("expected '+', '-', or end of input"),
                ))
            }
        }
    }

    let nvars = match nvars {
        Some(n) => {
            if max_var > n {
                return Err(PolyError::Parse(ParseError {
                    pos: 0,
                    message: format!("unknown variable: x{max_var} (declared {n} variables)"),
                }));
            }
            n
        }
        None => {
            if max_var == 0 {
                return Err(PolyError::Parse(ParseError {
                    pos: 0,
                    message: "cannot infer the number of variables from a constant; \
                              declare it explicitly"
                        .into(),
                }));
            }
            max_var
        }
    };

    let mut terms = Vec::with_capacity(raw.len());
    for (coeff, factors) in raw {
        let mut exps = vec![0u32; nvars];
        for (v, e) in factors {
            exps[v] = exps[v].checked_add(e).ok_or(PolyError::Parse(ParseError {
                pos: 0,
                message: "exponent overflow".into(),
            }))?;
        }
        terms.push((Monomial::new(&exps)?, coeff));
    }
    Polynomial::from_terms(nvars, terms)
}

/// Canonical text form: graded-lex term order, explicit `*`, coefficients
/// printed as `int` or `int/uint`.
pub fn render(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().iter().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let mag = c.abs();
        let mut pieces: Vec<String> = Vec::new();
        if !mag.is_one() || m.is_constant() {
            pieces.push(mag.to_string());
        }
        for (v, &e) in m.exps().iter().enumerate() {
            match e {
                0 => {}
                1 => pieces.push(format!("x{}", v + 1)),
                _ => pieces.push(format!("x{}^{}", v + 1, e)),
            }
        }
        out.push_str(&pieces.join("*"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar_examples() {
        let p = parse_polynomial("x1 + 3*x2^3", None).unwrap();
        assert_eq!(p.nvars(), 2);
        assert_eq!(render(&p), "3*x2^3 + x1");

        let q = parse_polynomial("-1/2*x1*x2", None).unwrap();
        assert_eq!(q.terms().len(), 1);
        assert_eq!(q.terms()[0].1, Rational::ratio(-1, 2));
        assert_eq!(render(&q), "-1/2*x1*x2");
    }

    #[test]
    fn degree_major_round_trip() {
        let p = parse_polynomial("x2^3 + x1", None).unwrap();
        assert_eq!(render(&p), "x2^3 + x1");
        let again = parse_polynomial(&render(&p), Some(2)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn unary_minus_and_signs() {
        let p = parse_polynomial("-x2^3", Some(2)).unwrap();
        assert_eq!(render(&p), "-x2^3");
        let q = parse_polynomial("x1 - x2 + 2", Some(2)).unwrap();
        assert_eq!(render(&q), "x1 - x2 + 2");
    }

    #[test]
    fn constant_needs_declared_arity() {
        assert!(parse_polynomial("5", None).is_err());
        let p = parse_polynomial("5", Some(3)).unwrap();
        assert_eq!(p.nvars(), 3);
        let z = parse_polynomial("0", Some(2)).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn rejects_unknown_variable() {
        let err = parse_polynomial("x3", Some(2)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown variable"), "{msg}");
    }

    #[test]
    fn rejects_bad_syntax_with_position() {
        match parse_polynomial("x1 + * x2", Some(2)) {
            Err(PolyError::Parse(e)) => assert_eq!(e.pos, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_polynomial("3x1", Some(1)).is_err());
        assert!(parse_polynomial("x0", Some(1)).is_err());
        assert!(parse_polynomial("1/0", Some(1)).is_err());
        assert!(parse_polynomial("", Some(1)).is_err());
        assert!(parse_polynomial("x1^", Some(1)).is_err());
    }

    #[test]
    fn repeated_factors_merge() {
        let p = parse_polynomial("x1*x1*x1", Some(1)).unwrap();
        assert_eq!(render(&p), "x1^3");
    }

    #[test]
    fn cancellation_to_zero_renders_as_zero() {
        let p = parse_polynomial("x1 - x1", Some(1)).unwrap();
        assert!(p.is_zero());
        assert_eq!(render(&p), "0");
    }

    mod properties {
        use super::*;
        use crate::poly::Monomial;
        use proptest::prelude::*;

        fn arb_poly() -> impl Strategy<Value = Polynomial> {
            let term = (
                proptest::collection::vec(0u32..4, 3),
                (-9i64..=9, 1i64..=4),
            );
            proptest::collection::vec(term, 0..6).prop_map(|ts| {
                let terms = ts
                    .into_iter()
                    .map(|(exps, (n, d))| {
                        (Monomial::new(&exps).unwrap(), Rational::ratio(n, d))
                    })
                    .collect();
                Polynomial::from_terms(3, terms).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            #[test]
            fn parse_render_round_trip(p in arb_poly()) {
                let text = render(&p);
                let back = parse_polynomial(&text, Some(3)).unwrap();
                prop_assert_eq!(back, p);
            }
        }
    }
}
