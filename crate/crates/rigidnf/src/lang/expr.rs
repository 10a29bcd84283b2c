//! Recursive-descent parser for germ component expressions.
//!
//! Grammar: rational/decimal literals, the imaginary unit `i`, variables,
//! `+ - * /` with conventional precedence, `^` with a nonnegative integer
//! exponent, parentheses. Division requires a unit denominator (nonzero
//! constant term). Decimal literals become exact decimal fractions in exact
//! mode.

use thiserror::Error;

use crate::multiseries::{Coeff, Series, SeriesError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { pos: usize, name: String },
    #[error("division by a non-unit at byte {pos}")]
    DivisionByNonUnit { pos: usize },
    #[error("malformed number literal at byte {pos}")]
    BadNumber { pos: usize },
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn next_token(&mut self) -> Result<Option<(usize, Tok)>, ExprError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let b = self.src[self.pos];
        let tok = match b {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                let mut seen_e = false;
                while end < self.src.len() {
                    let c = self.src[end];
                    if c.is_ascii_digit() || c == b'.' {
                        end += 1;
                    } else if (c == b'e' || c == b'E') && !seen_e {
                        // exponent marker, optionally signed
                        let mut peek = end + 1;
                        if peek < self.src.len()
                            && (self.src[peek] == b'+' || self.src[peek] == b'-')
                        {
                            peek += 1;
                        }
                        if peek < self.src.len() && self.src[peek].is_ascii_digit() {
                            seen_e = true;
                            end = peek;
                        } else {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                return Ok(Some((start, Tok::Num(text))));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                return Ok(Some((start, Tok::Ident(text))));
            }
            other => {
                return Err(ExprError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok(Some((start, tok)))
    }
}

struct Parser<'a, C: Coeff> {
    tokens: Vec<(usize, Tok)>,
    cursor: usize,
    vars: &'a [String],
    dim: usize,
    trunc: u32,
    _marker: std::marker::PhantomData<C>,
}

impl<'a, C: Coeff> Parser<'a, C> {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.tokens.get(self.cursor)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.tokens.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Series<C>, ExprError> {
        let mut acc = self.term()?;
        while let Some((_, tok)) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.bump();
                    acc = acc.add(&self.term()?)?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.sub(&self.term()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Series<C>, ExprError> {
        let mut acc = self.factor()?;
        while let Some((pos, tok)) = self.peek().cloned() {
            match tok {
                Tok::Star => {
                    self.bump();
                    acc = acc.mul(&self.factor()?)?;
                }
                Tok::Slash => {
                    self.bump();
                    let denom = self.factor()?;
                    let inv = denom
                        .unit_inverse()
                        .map_err(|_| ExprError::DivisionByNonUnit { pos })?;
                    acc = acc.mul(&inv)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Series<C>, ExprError> {
        match self.peek().cloned() {
            Some((_, Tok::Minus)) => {
                self.bump();
                Ok(self.factor()?.neg())
            }
            Some((_, Tok::Plus)) => {
                self.bump();
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Series<C>, ExprError> {
        let base = self.atom()?;
        if let Some((pos, Tok::Caret)) = self.peek().cloned() {
            self.bump();
            let (npos, tok) = self
                .bump()
                .ok_or(ExprError::Syntax { pos, msg: "exponent expected".into() })?;
            let exp: usize = match tok {
                Tok::Num(text) if !text.contains(['.', 'e', 'E']) => {
                    text.parse().map_err(|_| ExprError::BadNumber { pos: npos })?
                }
                _ => {
                    return Err(ExprError::Syntax {
                        pos: npos,
                        msg: "exponent must be a nonnegative integer".into(),
                    })
                }
            };
            return Ok(base.pow_usize(exp)?);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Series<C>, ExprError> {
        match self.bump() {
            Some((pos, Tok::Num(text))) => {
                let c = C::from_decimal(&text).ok_or(ExprError::BadNumber { pos })?;
                Ok(Series::constant(c, self.dim, self.trunc))
            }
            Some((pos, Tok::Ident(name))) => {
                if name == "i" {
                    return Ok(Series::constant(C::imaginary_unit(), self.dim, self.trunc));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(idx) => Ok(Series::variable(idx, self.dim, self.trunc)),
                    None => Err(ExprError::UnknownVariable { pos, name }),
                }
            }
            Some((_, Tok::LParen)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(inner),
                    Some((pos, _)) => {
                        Err(ExprError::Syntax { pos, msg: "expected `)`".into() })
                    }
                    None => Err(ExprError::Syntax {
                        pos: self.tokens.last().map_or(0, |t| t.0),
                        msg: "unclosed parenthesis".into(),
                    }),
                }
            }
            Some((pos, tok)) => Err(ExprError::Syntax {
                pos,
                msg: format!("unexpected token {tok:?}"),
            }),
            None => Err(ExprError::Syntax { pos: 0, msg: "empty expression".into() }),
        }
    }
}

/// Parse one expression into a series over the named variables.
pub fn parse_expr<C: Coeff>(
    src: &str,
    vars: &[String],
    trunc: u32,
) -> Result<Series<C>, ExprError> {
    let mut lex = Lexer::new(src);
    let mut tokens = Vec::new();
    while let Some(t) = lex.next_token()? {
        tokens.push(t);
    }
    let mut p = Parser::<C> {
        tokens,
        cursor: 0,
        vars,
        dim: vars.len(),
        trunc,
        _marker: std::marker::PhantomData,
    };
    let s = p.expr()?;
    if let Some((pos, tok)) = p.peek() {
        return Err(ExprError::Syntax {
            pos: *pos,
            msg: format!("trailing input {tok:?}"),
        });
    }
    Ok(s)
}

/// Render a series as an expression the parser accepts, terms in graded-lex
/// order. Exact coefficients print as `p/q` in lowest terms.
pub fn series_to_expr<C: Coeff>(s: &Series<C>, vars: &[String]) -> String {
    if s.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (n, c)) in s.terms().enumerate() {
        let coeff_txt = coeff_expr(c);
        if idx > 0 {
            out.push_str(" + ");
        }
        let mut parts: Vec<String> = Vec::new();
        parts.push(coeff_txt);
        for (v, &e) in n.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(vars[v].clone()),
                _ => parts.push(format!("{}^{}", vars[v], e)),
            }
        }
        out.push_str(&parts.join("*"));
    }
    out
}

fn coeff_expr<C: Coeff>(c: &C) -> String {
    let z = c.to_c64();
    if C::EXACT {
        // GaussRational renders as re±im i; rebuild as (re + im*i).
        let full = c.render();
        if z.im == 0.0 && !full.contains('i') {
            wrap_signed(&full)
        } else {
            let (re, im) = split_gauss(&full);
            format!("({} + ({})*i)", re, im)
        }
    } else if z.im == 0.0 {
        wrap_signed(&format!("{:?}", z.re))
    } else {
        format!("({:?} + ({:?})*i)", z.re, z.im)
    }
}

fn wrap_signed(t: &str) -> String {
    if t.starts_with('-') || t.contains('/') {
        format!("({t})")
    } else {
        t.to_string()
    }
}

fn split_gauss(full: &str) -> (String, String) {
    // Forms: "a+bi", "a-bi", "bi"
    let body = full.strip_suffix('i').unwrap_or(full);
    if let Some(pos) = body[1..].rfind(['+', '-']).map(|p| p + 1) {
        let (re, im) = body.split_at(pos);
        (re.to_string(), im.to_string())
    } else {
        ("0".to_string(), body.to_string())
    }
}
