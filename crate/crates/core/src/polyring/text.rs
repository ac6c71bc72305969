//! Plain-text polynomial format: `c * x<i>^<e>` terms joined by `+`/`-`,
//! exact rational coefficients written `num/den`, variables 1-based.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{ExponentVector, Polynomial, Rational};
use crate::error::{Error, Result};

impl fmt::Display for Polynomial<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms().enumerate() {
            let magnitude = c.abs();
            if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
            }
            write!(f, "{magnitude}")?;
            for (i, &p) in e.exponents().iter().enumerate() {
                if p > 0 {
                    write!(f, " * x{}^{}", i + 1, p)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(Rational),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            'x' | 'X' => {
                let start = i + 1;
                i = start;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let idx: usize = digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad variable name near position {start}")))?;
                if idx == 0 {
                    return Err(Error::Parse("variables are numbered from x1".into()));
                }
                out.push(Token::Var(idx - 1));
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/')
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Token::Number(parse_rational(&text)?));
            }
            other => return Err(Error::Parse(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

/// Parses `a`, `a/b` or a decimal like `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("bad number '{text}'"));
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: Rational = parse_rational(n)?;
        let d: Rational = parse_rational(d)?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{text}'")));
        }
        return Ok(n / d);
    }
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(&digits).map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(Rational::new(numer * sign, denom))
}

/// Parses the text format into a polynomial in `nvars` variables.
pub fn parse_polynomial(text: &str, nvars: usize) -> Result<Polynomial<Rational>> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut p = Polynomial::zero(nvars);
    let mut pos = 0;
    let mut first = true;
    while pos < tokens.len() {
        let mut sign = Rational::one();
        match tokens[pos] {
            Token::Plus => pos += 1,
            Token::Minus => {
                sign = -sign;
                pos += 1;
            }
            _ if first => {}
            _ => return Err(Error::Parse("expected '+' or '-' between terms".into())),
        }
        first = false;
        // unary signs directly in front of a term, e.g. "+ -3 * x1"
        while pos < tokens.len() && matches!(tokens[pos], Token::Plus | Token::Minus) {
            if tokens[pos] == Token::Minus {
                sign = -sign;
            }
            pos += 1;
        }
        let (coeff, exp, next) = parse_term(&tokens, pos, nvars)?;
        p.add_term(exp, sign * coeff);
        pos = next;
    }
    Ok(p)
}

fn parse_term(tokens: &[Token], mut pos: usize, nvars: usize) -> Result<(Rational, ExponentVector, usize)> {
    let mut coeff = Rational::one();
    let mut exps = vec![0u32; nvars];
    let mut expect_factor = true;
    while pos < tokens.len() {
        if !expect_factor {
            match tokens[pos] {
                Token::Star => {
                    pos += 1;
                    expect_factor = true;
                    continue;
                }
                _ => break,
            }
        }
        match &tokens[pos] {
            Token::Number(c) => {
                coeff *= c;
                pos += 1;
            }
            Token::Var(i) => {
                if *i >= nvars {
                    return Err(Error::Dimension {
                        expected: nvars,
                        found: i + 1,
                    });
                }
                pos += 1;
                let mut power = 1u32;
                if pos < tokens.len() && tokens[pos] == Token::Caret {
                    match tokens.get(pos + 1) {
                        Some(Token::Number(k)) if k.is_integer() && !k.is_negative() => {
                            power = u32::try_from(k.to_integer())
                                .map_err(|_| Error::Parse("exponent too large".into()))?;
                            pos += 2;
                        }
                        _ => return Err(Error::Parse("expected a nonnegative integer exponent".into())),
                    }
                }
                exps[*i] += power;
            }
            t => return Err(Error::Parse(format!("unexpected token {t:?}"))),
        }
        expect_factor = false;
    }
    if expect_factor {
        return Err(Error::Parse("dangling operator".into()));
    }
    Ok((coeff, ExponentVector::new(exps), pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::rat;
    use proptest::prelude::*;

    #[test]
    fn formats_terms_in_term_order() {
        let p = parse_polynomial("x2^2 - 3/2 * x1 + 4", 2).unwrap();
        assert_eq!(p.to_string(), "4 - 3/2 * x1^1 + 1 * x2^2");
        assert_eq!(Polynomial::<Rational>::zero(3).to_string(), "0");
    }

    #[test]
    fn accepts_shorthand() {
        let p = parse_polynomial("x1*x2 - x1^2 + 0.5", 2).unwrap();
        assert_eq!(p.coeff(&ExponentVector::new(vec![1, 1])), Some(&rat(1, 1)));
        assert_eq!(p.coeff(&ExponentVector::new(vec![2, 0])), Some(&rat(-1, 1)));
        assert_eq!(p.coeff(&ExponentVector::zero(2)), Some(&rat(1, 2)));
        let q = parse_polynomial("-x1", 1).unwrap();
        assert_eq!(q, Polynomial::var(1, 0).scale(&rat(-1, 1)));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_polynomial("x0", 2).is_err());
        assert!(matches!(parse_polynomial("x3", 2), Err(Error::Dimension { .. })));
        assert!(parse_polynomial("x1 x2", 2).is_err());
        assert!(parse_polynomial("x1 *", 2).is_err());
        assert!(parse_polynomial("1/0", 2).is_err());
        assert!(parse_polynomial("", 2).is_err());
        assert!(parse_polynomial("x1 ^ -1", 2).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial<Rational>> {
        proptest::collection::vec(
            (proptest::collection::vec(0u32..4, 3), -20i64..20, 1i64..7),
            0..8,
        )
        .prop_map(|terms| {
            Polynomial::from_terms(
                3,
                terms
                    .into_iter()
                    .map(|(e, n, d)| (ExponentVector::new(e), rat(n, d))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(p in arb_poly()) {
            let text = p.to_string();
            prop_assert_eq!(parse_polynomial(&text, 3).unwrap(), p);
        }
    }
}
