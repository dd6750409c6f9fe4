//! Recursive-descent parser for polynomial symbols.
//!
//! ```text
//! expr  := ['+'|'-'] term (('+'|'-') term)*
//! term  := coeff ['*' mono] | mono
//! coeff := REAL | '(' ['+'|'-'] REAL [('+'|'-') REAL 'i'] ')' | '(' ['+'|'-'] REAL 'i' ')'
//! mono  := var ['^' UINT] ('*' var ['^' UINT])*
//! var   := 'z' UINT | 'z'            (bare 'z' only when m = 1)
//! ```

use num_complex::Complex64;
use thiserror::Error;

use crate::multiindex::MultiIndex;
use crate::series::PolynomialMap;

/// Exponents above this are rejected.
pub const MAX_EXPONENT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },

    #[error("unknown variable `{name}` at byte {offset} (m = {m})")]
    UnknownVariable { offset: usize, name: String, m: usize },

    #[error("exponent at byte {offset} exceeds {MAX_EXPONENT}")]
    ExponentOverflow { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::SyntaxError { offset, .. }
            | ParseError::UnknownVariable { offset, .. }
            | ParseError::ExponentOverflow { offset } => *offset,
        }
    }
}

/// Parses `text` as a polynomial in `m` variables.
pub fn parse_poly(text: &str, m: usize) -> Result<PolynomialMap, ParseError> {
    if m == 0 {
        return Err(ParseError::UnknownVariable {
            offset: 0,
            name: String::new(),
            m,
        });
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        m,
    };
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(poly)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    m: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError::SyntaxError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sign(&mut self) -> Option<f64> {
        match self.peek() {
            Some(b'+') => {
                self.pos += 1;
                Some(1.0)
            }
            Some(b'-') => {
                self.pos += 1;
                Some(-1.0)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<PolynomialMap, ParseError> {
        let mut poly = PolynomialMap::zero(self.m);
        if self.peek().is_none() {
            return Err(self.error("empty expression"));
        }
        let mut sign = self.sign().unwrap_or(1.0);
        loop {
            let (j, c) = self.term()?;
            poly.add_term(j, c * sign);
            match self.sign() {
                Some(s) => sign = s,
                None => return Ok(poly),
            }
        }
    }

    fn term(&mut self) -> Result<(MultiIndex, Complex64), ParseError> {
        match self.peek() {
            Some(b'z') => Ok((self.mono()?, Complex64::new(1.0, 0.0))),
            Some(b'(') | Some(b'0'..=b'9') | Some(b'.') => {
                let c = self.coeff()?;
                if self.eat(b'*') {
                    if self.peek() != Some(b'z') {
                        return Err(self.error("expected a variable after `*`"));
                    }
                    Ok((self.mono()?, c))
                } else {
                    Ok((MultiIndex::zero(self.m), c))
                }
            }
            Some(_) => Err(self.error("expected a coefficient or a variable")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn coeff(&mut self) -> Result<Complex64, ParseError> {
        if !self.eat(b'(') {
            return Ok(Complex64::new(self.real()?, 0.0));
        }
        let s = self.sign().unwrap_or(1.0);
        let first = s * self.real()?;
        let c = if self.eat(b'i') {
            Complex64::new(0.0, first)
        } else if let Some(s2) = self.sign() {
            let im = s2 * self.real()?;
            if !self.eat(b'i') {
                return Err(self.error("expected `i` after the imaginary part"));
            }
            Complex64::new(first, im)
        } else {
            Complex64::new(first, 0.0)
        };
        if !self.eat(b')') {
            return Err(self.error("expected `)`"));
        }
        Ok(c)
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn real(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut mantissa = self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            mantissa += self.digits();
        }
        if mantissa == 0 {
            self.pos = start;
            return Err(self.error("expected a number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                return Err(self.error("expected exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ParseError::SyntaxError {
                offset: start,
                message: format!("number `{text}` is out of range"),
            }),
        }
    }

    fn uint(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.digits() == 0 {
            return Err(self.error("expected an unsigned integer"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(text.parse::<u64>().unwrap_or(u64::MAX))
    }

    fn mono(&mut self) -> Result<MultiIndex, ParseError> {
        let mut exps = vec![0u64; self.m];
        loop {
            let (var, offset) = self.var()?;
            let e = if self.eat(b'^') {
                let at = self.pos;
                let e = self.uint()?;
                if e > MAX_EXPONENT {
                    return Err(ParseError::ExponentOverflow { offset: at });
                }
                e
            } else {
                1
            };
            exps[var] += e;
            if exps[var] > MAX_EXPONENT {
                return Err(ParseError::ExponentOverflow { offset });
            }
            let save = self.pos;
            if !self.eat(b'*') {
                break;
            }
            if self.peek() != Some(b'z') {
                self.pos = save;
                return Err(self.error("coefficients must precede the monomial"));
            }
        }
        Ok(MultiIndex::new(exps.into_iter().map(|e| e as u32).collect()))
    }

    fn var(&mut self) -> Result<(usize, usize), ParseError> {
        self.skip_ws();
        let offset = self.pos;
        if !self.eat(b'z') {
            return Err(self.error("expected a variable"));
        }
        let has_index = self.src.get(self.pos).is_some_and(u8::is_ascii_digit);
        if !has_index {
            return if self.m == 1 {
                Ok((0, offset))
            } else {
                Err(ParseError::UnknownVariable {
                    offset,
                    name: "z".into(),
                    m: self.m,
                })
            };
        }
        let index = self.uint()?;
        if index == 0 || index > self.m as u64 {
            let name = String::from_utf8_lossy(&self.src[offset..self.pos]).into_owned();
            return Err(ParseError::UnknownVariable { offset, name, m: self.m });
        }
        Ok((index as usize - 1, offset))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn examples() {
        let p = parse_poly("0.5*z", 1).unwrap();
        assert_eq!(p, PolynomialMap::monomial([1], 0.5));

        let p = parse_poly("(0.1+0.2i)*z1*z2^2", 2).unwrap();
        assert_eq!(p, PolynomialMap::monomial([1, 2], c(0.1, 0.2)));

        let p = parse_poly("z^2 - 0.25", 1).unwrap();
        assert_eq!(p.coeff(&MultiIndex::from([2])), c(1.0, 0.0));
        assert_eq!(p.coeff(&MultiIndex::from([0])), c(-0.25, 0.0));
        assert_eq!(p.terms().count(), 2);
    }

    #[test]
    fn accumulation_and_whitespace() {
        let p = parse_poly(" z1 * z2 + 2 *z2*z1 - z1^ 1*z2 ", 2).unwrap();
        assert_eq!(p, PolynomialMap::monomial([1, 1], 2.0));
        assert!(parse_poly("z - z", 1).unwrap().is_zero());
        assert_eq!(parse_poly("-(0.5i)*z", 1).unwrap(), PolynomialMap::monomial([1], c(0.0, -0.5)));
        assert_eq!(parse_poly("(-1e-3-2.5E2i)", 1).unwrap(), PolynomialMap::constant(1, c(-1e-3, -250.0)));
        assert_eq!(parse_poly("z1^3*z1", 1).unwrap(), PolynomialMap::monomial([4], 1.0));
    }

    #[test]
    fn errors_are_positioned() {
        assert_eq!(
            parse_poly("0.5*z3", 2),
            Err(ParseError::UnknownVariable { offset: 4, name: "z3".into(), m: 2 })
        );
        assert!(matches!(parse_poly("z", 2), Err(ParseError::UnknownVariable { offset: 0, .. })));
        assert!(matches!(parse_poly("z0", 1), Err(ParseError::UnknownVariable { .. })));
        assert_eq!(parse_poly("z^1000001", 1), Err(ParseError::ExponentOverflow { offset: 2 }));
        assert!(parse_poly("z^1000000", 1).is_ok());
        assert!(matches!(parse_poly("z^600000*z^600000", 1), Err(ParseError::ExponentOverflow { .. })));
        assert_eq!(parse_poly("0.1+0.2i*z", 1).unwrap_err().offset(), 7);
        assert_eq!(parse_poly("", 1).unwrap_err().offset(), 0);
        assert_eq!(parse_poly("z +", 1).unwrap_err().offset(), 3);
        assert!(matches!(parse_poly("z*0.5", 1), Err(ParseError::SyntaxError { offset: 1, .. })));
        assert!(matches!(parse_poly("1e999", 1), Err(ParseError::SyntaxError { offset: 0, .. })));
        assert!(matches!(parse_poly("(1+2)", 1), Err(ParseError::SyntaxError { .. })));
        assert!(matches!(parse_poly("sin(z)", 1), Err(ParseError::SyntaxError { offset: 0, .. })));
        assert!(matches!(parse_poly("z/2", 1), Err(ParseError::SyntaxError { offset: 1, .. })));
    }

    fn arb_poly(m: usize) -> impl Strategy<Value = PolynomialMap> {
        let coeff = prop_oneof![
            (-1e3..1e3f64).prop_map(|r| c(r, 0.0)),
            ((-1e3..1e3f64), (-1e3..1e3f64)).prop_map(|(r, i)| c(r, i)),
            (-10i32..10).prop_map(|r| c(r as f64, 0.0)),
            (1e-30..1e-10f64).prop_map(|r| c(0.0, r)),
        ];
        let term = (proptest::collection::vec(0u32..12, m), coeff);
        proptest::collection::vec(term, 0..8).prop_map(move |ts| {
            PolynomialMap::from_terms(m, ts.into_iter().map(|(j, c)| (MultiIndex::new(j), c)))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn display_round_trips((m, p) in (1usize..4).prop_flat_map(|m| (Just(m), arb_poly(m)))) {
            let text = p.to_string();
            prop_assert_eq!(parse_poly(&text, m).unwrap(), p, "{}", text);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn total_on_random_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..40), m in 1usize..4) {
            let text = String::from_utf8_lossy(&bytes);
            if let Err(e) = parse_poly(&text, m) {
                prop_assert!(e.offset() <= text.len());
            }
        }

        #[test]
        fn total_on_grammar_tokens(tokens in proptest::collection::vec(
            prop_oneof![
                Just("z"), Just("z1"), Just("z2"), Just("z9"), Just("^"), Just("*"), Just("+"),
                Just("-"), Just("("), Just(")"), Just("i"), Just("0.5"), Just("3"), Just("1e5"),
                Just(" "), Just("."), Just("e"), Just("99999999999"),
            ], 0..16), m in 1usize..4) {
            let text: String = tokens.concat();
            if let Err(e) = parse_poly(&text, m) {
                prop_assert!(e.offset() <= text.len());
            }
        }
    }
}
