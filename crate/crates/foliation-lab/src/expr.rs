//! Sparse multivariate polynomials and the small analytic expression language
//! used for field components, leaf charts and paths.
//!
//! The expression language is closed under evaluation and formal
//! differentiation: polynomials are one leaf node, `exp` is the only
//! transcendental, and sums/products fold back into polynomials whenever both
//! operands are polynomial.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Sparse multivariate polynomial over C, keyed by exponent multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Poly::zero(nvars);
        if c != ZERO {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, j: usize) -> Self {
        assert!(j < nvars, "variable index {j} out of range for {nvars} vars");
        let mut idx = vec![0u32; nvars];
        idx[j] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(idx, C::new(1.0, 0.0));
        p
    }

    pub fn monomial(nvars: usize, exps: &[u32], c: C) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Poly::zero(nvars);
        if c != ZERO {
            p.terms.insert(exps.to_vec(), c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], C)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.iter().sum()).max()
    }

    /// Some((exponents, coeff)) when the polynomial is a single term.
    pub fn as_monomial(&self) -> Option<(&[u32], C)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(k, v)| (k.as_slice(), *v))
        } else {
            None
        }
    }

    fn insert(&mut self, key: Vec<u32>, c: C) {
        if c == ZERO {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == ZERO {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(k.clone(), *v);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -*v;
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: C) -> Poly {
        if c == ZERO {
            return Poly::zero(self.nvars);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let key: Vec<u32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.insert(key, va * vb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, C::new(1.0, 0.0));
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Formal partial derivative with respect to variable `j`.
    pub fn partial(&self, j: usize) -> Poly {
        assert!(j < self.nvars);
        let mut out = Poly::zero(self.nvars);
        for (k, v) in &self.terms {
            if k[j] == 0 {
                continue;
            }
            let mut key = k.clone();
            key[j] -= 1;
            out.insert(key, v * C::new(k[j] as f64, 0.0));
        }
        out
    }

    pub fn eval(&self, z: &[C]) -> C {
        assert_eq!(z.len(), self.nvars);
        let mut acc = ZERO;
        for (k, v) in &self.terms {
            let mut t = *v;
            for (j, &e) in k.iter().enumerate() {
                match e {
                    0 => {}
                    1 => t *= z[j],
                    2 => t *= z[j] * z[j],
                    _ => t *= z[j].powu(e),
                }
            }
            acc += t;
        }
        acc
    }

    /// True when every term of `self` is divisible by the monomial `exps`.
    pub fn divisible_by_monomial(&self, exps: &[u32]) -> bool {
        assert_eq!(exps.len(), self.nvars);
        self.terms
            .keys()
            .all(|k| k.iter().zip(exps).all(|(a, b)| a >= b))
    }

    /// Certified upper bound for sup |p| over the closed polydisc
    /// `{ |z_j - c_j| <= r_j }` via |z_j| <= |c_j| + r_j termwise.
    pub fn sup_bound(&self, center: &[C], radii: &[f64]) -> f64 {
        assert_eq!(center.len(), self.nvars);
        assert_eq!(radii.len(), self.nvars);
        let mut acc = 0.0;
        for (k, v) in &self.terms {
            let mut t = v.norm();
            for (j, &e) in k.iter().enumerate() {
                let m = center[j].norm() + radii[j];
                t *= m.powi(e as i32);
            }
            acc += t;
        }
        acc
    }
}

fn var_name(nvars: usize, j: usize) -> String {
    if nvars <= 3 {
        ["x", "y", "z"][j].to_string()
    } else {
        format!("x{}", j + 1)
    }
}

fn fmt_coeff(c: C) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("({}{}i)", c.re, c.im)
    } else {
        format!("({}+{}i)", c.re, c.im)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, v) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut parts: Vec<String> = Vec::new();
            let is_const = k.iter().all(|&e| e == 0);
            if is_const || *v != C::new(1.0, 0.0) {
                parts.push(fmt_coeff(*v));
            }
            for (j, &e) in k.iter().enumerate() {
                match e {
                    0 => {}
                    1 => parts.push(var_name(self.nvars, j)),
                    _ => parts.push(format!("{}^{}", var_name(self.nvars, j), e)),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// Analytic expression node: polynomials extended by `exp`, closed under
/// evaluation and formal differentiation.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Poly(Poly),
    Exp(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn poly(p: Poly) -> Expr {
        Expr::Poly(p)
    }

    pub fn constant(nvars: usize, c: C) -> Expr {
        Expr::Poly(Poly::constant(nvars, c))
    }

    pub fn var(nvars: usize, j: usize) -> Expr {
        Expr::Poly(Poly::var(nvars, j))
    }

    pub fn nvars(&self) -> usize {
        match self {
            Expr::Poly(p) => p.nvars(),
            Expr::Exp(e) => e.nvars(),
            Expr::Add(a, _) | Expr::Mul(a, _) => a.nvars(),
        }
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        match self {
            Expr::Poly(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Poly(p) if p.is_zero())
    }

    /// Sum with polynomial folding.
    pub fn add(self, other: Expr) -> Expr {
        match (self, other) {
            (Expr::Poly(a), Expr::Poly(b)) => Expr::Poly(a.add(&b)),
            (a, b) if a.is_zero() => b,
            (a, b) if b.is_zero() => a,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    /// Product with polynomial folding.
    pub fn mul(self, other: Expr) -> Expr {
        match (self, other) {
            (Expr::Poly(a), Expr::Poly(b)) => Expr::Poly(a.mul(&b)),
            (a, b) => {
                if a.is_zero() || b.is_zero() {
                    Expr::Poly(Poly::zero(a.nvars()))
                } else {
                    Expr::Mul(Box::new(a), Box::new(b))
                }
            }
        }
    }

    pub fn neg(self) -> Expr {
        let n = self.nvars();
        self.mul(Expr::constant(n, C::new(-1.0, 0.0)))
    }

    pub fn exp(self) -> Expr {
        if let Expr::Poly(p) = &self {
            if p.num_terms() == 0 {
                return Expr::constant(self.nvars(), C::new(1.0, 0.0));
            }
            if let Some((exps, c)) = p.as_monomial() {
                if exps.iter().all(|&e| e == 0) {
                    return Expr::constant(self.nvars(), c.exp());
                }
            }
        }
        Expr::Exp(Box::new(self))
    }

    pub fn eval(&self, z: &[C]) -> C {
        match self {
            Expr::Poly(p) => p.eval(z),
            Expr::Exp(e) => e.eval(z).exp(),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
        }
    }

    /// Formal partial derivative with respect to variable `j`.
    pub fn partial(&self, j: usize) -> Expr {
        match self {
            Expr::Poly(p) => Expr::Poly(p.partial(j)),
            Expr::Exp(e) => e.partial(j).mul(Expr::Exp(e.clone())),
            Expr::Add(a, b) => a.partial(j).add(b.partial(j)),
            Expr::Mul(a, b) => {
                let da = a.partial(j).mul((**b).clone());
                let db = (**a).clone().mul(b.partial(j));
                da.add(db)
            }
        }
    }

    /// Certified upper bound for sup |expr| over the closed polydisc
    /// `{ |z_j - c_j| <= r_j }`.
    pub fn sup_bound(&self, center: &[C], radii: &[f64]) -> f64 {
        match self {
            Expr::Poly(p) => p.sup_bound(center, radii),
            Expr::Exp(e) => e.sup_bound(center, radii).exp(),
            Expr::Add(a, b) => a.sup_bound(center, radii) + b.sup_bound(center, radii),
            Expr::Mul(a, b) => a.sup_bound(center, radii) * b.sup_bound(center, radii),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Poly(p) => write!(f, "{p}"),
            Expr::Exp(e) => write!(f, "exp({e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "({a})*({b})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected character {0:?} at byte {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token {0:?}")]
    UnexpectedToken(String),
    #[error("unknown variable {0:?} (have {1} variables)")]
    UnknownVariable(String, usize),
    #[error("exponent must be a nonnegative integer")]
    BadExponent,
    #[error("division is only supported by nonzero constants")]
    BadDivisor,
    #[error("malformed number {0:?}")]
    BadNumber(String),
    #[error("expected a constant expression")]
    NotConstant,
    #[error("expected {expected} components, found {found}")]
    ComponentCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<Tok>, ParseError> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                // scientific exponent
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text.parse().map_err(|_| ParseError::BadNumber(text.clone()))?;
                // `2i` is the imaginary literal 2*sqrt(-1)
                if i < bytes.len() && bytes[i] == 'i' {
                    let next_is_word = i + 1 < bytes.len() && bytes[i + 1].is_ascii_alphanumeric();
                    if !next_is_word {
                        out.push(Tok::Imag(v));
                        i += 1;
                        continue;
                    }
                }
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().collect();
                if word == "i" {
                    out.push(Tok::Imag(1.0));
                } else {
                    out.push(Tok::Ident(word));
                }
            }
            other => return Err(ParseError::UnexpectedChar(other, i)),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    nvars: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Result<Tok, ParseError> {
        let t = self.toks.get(self.pos).cloned().ok_or(ParseError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        let got = self.bump()?;
        if &got == t {
            Ok(())
        } else {
            Err(ParseError::UnexpectedToken(format!("{got:?}")))
        }
    }

    fn var_index(&self, name: &str) -> Result<usize, ParseError> {
        let idx = match name {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    rest.parse::<usize>().ok().and_then(|k| k.checked_sub(1))
                } else {
                    None
                }
            }
        };
        match idx {
            Some(j) if j < self.nvars => Ok(j),
            _ => Err(ParseError::UnknownVariable(name.to_string(), self.nvars)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.add(self.term()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(self.factor()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d = self.factor()?;
                    let c = d
                        .as_poly()
                        .and_then(|p| {
                            if p.is_zero() {
                                Some(ZERO)
                            } else {
                                p.as_monomial().and_then(|(e, c)| {
                                    if e.iter().all(|&k| k == 0) {
                                        Some(c)
                                    } else {
                                        None
                                    }
                                })
                            }
                        })
                        .ok_or(ParseError::BadDivisor)?;
                    if c == ZERO {
                        return Err(ParseError::BadDivisor);
                    }
                    acc = acc.mul(Expr::constant(self.nvars, C::new(1.0, 0.0) / c));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let e = match self.bump()? {
                Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 => v as u32,
                _ => return Err(ParseError::BadExponent),
            };
            let p = base.as_poly().ok_or(ParseError::BadExponent)?;
            return Ok(Expr::Poly(p.pow(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump()? {
            Tok::Num(v) => Ok(Expr::constant(self.nvars, C::new(v, 0.0))),
            Tok::Imag(v) => Ok(Expr::constant(self.nvars, C::new(0.0, v))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "exp" {
                    self.expect(&Tok::LParen)?;
                    let inner = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    Ok(inner.exp())
                } else {
                    let j = self.var_index(&name)?;
                    Ok(Expr::var(self.nvars, j))
                }
            }
            other => Err(ParseError::UnexpectedToken(format!("{other:?}"))),
        }
    }
}

/// Parse a single expression in `nvars` variables.
pub fn parse_expr(src: &str, nvars: usize) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks: &toks, pos: 0, nvars };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(ParseError::UnexpectedToken(format!("{:?}", toks[p.pos])));
    }
    Ok(e)
}

/// Parse `;`-separated field components, one expression per dimension.
pub fn parse_components(src: &str, nvars: usize) -> Result<Vec<Expr>, ParseError> {
    let parts: Vec<&str> = src.split(';').collect();
    if parts.len() != nvars {
        return Err(ParseError::ComponentCount { expected: nvars, found: parts.len() });
    }
    parts.iter().map(|s| parse_expr(s, nvars)).collect()
}

/// Parse a constant complex scalar such as `0.5`, `2i` or `1-0.25i`.
pub fn parse_complex(src: &str) -> Result<C, ParseError> {
    let e = parse_expr(src, 0)?;
    match e.as_poly() {
        Some(p) if p.is_zero() => Ok(ZERO),
        Some(p) => match p.as_monomial() {
            Some((exps, c)) if exps.iter().all(|&k| k == 0) => Ok(c),
            _ => Err(ParseError::NotConstant),
        },
        None => Err(ParseError::NotConstant),
    }
}

/// Parse a tuple literal `(a, b, c)` of constant complex scalars.
pub fn parse_tuple(src: &str) -> Result<Vec<C>, ParseError> {
    let s = src.trim();
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| ParseError::UnexpectedToken(s.to_string()))?;
    inner.split(',').map(parse_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn parse_simple_field_components() {
        let comps = parse_components("x ; z*y ; z*y", 3).unwrap();
        let z = [c(0.5, 0.0), c(0.25, 0.0), c(-0.5, 0.0)];
        assert_eq!(comps[0].eval(&z), c(0.5, 0.0));
        assert_eq!(comps[1].eval(&z), c(-0.125, 0.0));
        assert_eq!(comps[2].eval(&z), c(-0.125, 0.0));
    }

    #[test]
    fn parse_imaginary_and_powers() {
        let e = parse_expr("x + 2i*y - (1+1i)*x^2", 2).unwrap();
        let z = [c(1.0, 0.0), c(2.0, 0.0)];
        // 1 + 4i - (1+i) = -i + 4i ... compute: 1 + 4i - 1 - i = 3i
        assert_eq!(e.eval(&z), c(0.0, 3.0));
    }

    #[test]
    fn parse_exp_node_and_derivative() {
        let e = parse_expr("exp(z)*y", 3).unwrap();
        let z = [c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        let expected = c(1.0, 0.0).exp() * 2.0;
        assert!((e.eval(&z) - expected).norm() < 1e-15);
        // d/dz (e^z y) = e^z y ; d/dy = e^z
        let dz = e.partial(2);
        assert!((dz.eval(&z) - expected).norm() < 1e-15);
        let dy = e.partial(1);
        assert!((dy.eval(&z) - c(1.0, 0.0).exp()).norm() < 1e-15);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_expr("w", 3).is_err());
        assert!(parse_expr("x +", 2).is_err());
        assert!(parse_expr("x / y", 2).is_err());
        assert!(matches!(
            parse_components("x ; y ; z", 2),
            Err(ParseError::ComponentCount { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn parse_complex_literals() {
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("-1").unwrap(), c(-1.0, 0.0));
        assert_eq!(parse_complex("0.5 - 0.25i").unwrap(), c(0.5, -0.25));
        assert_eq!(parse_tuple("(0, 0.3, 0)").unwrap()[1], c(0.3, 0.0));
    }

    #[test]
    fn poly_partial_and_eval() {
        // f = x^2 y + 3y
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let f = x.pow(2).mul(&y).add(&y.scale(c(3.0, 0.0)));
        let fx = f.partial(0); // 2xy
        let fy = f.partial(1); // x^2 + 3
        let z = [c(2.0, 0.0), c(5.0, 0.0)];
        assert_eq!(f.eval(&z), c(35.0, 0.0));
        assert_eq!(fx.eval(&z), c(20.0, 0.0));
        assert_eq!(fy.eval(&z), c(7.0, 0.0));
    }

    #[test]
    fn poly_divisibility_by_monomial() {
        // xy + x^2 y^2 is divisible by x*y but not by x^2
        let f = parse_expr("x*y + x^2*y^2", 2).unwrap();
        let p = f.as_poly().unwrap();
        assert!(p.divisible_by_monomial(&[1, 1]));
        assert!(!p.divisible_by_monomial(&[2, 0]));
    }

    #[test]
    fn sup_bound_is_an_upper_bound() {
        let e = parse_expr("exp(z)*y + x^2", 3).unwrap();
        let center = [c(0.0, 0.0); 3];
        let radii = [1.0, 1.0, 1.0];
        let bound = e.sup_bound(&center, &radii);
        for t in 0..50 {
            let th = t as f64 * 0.41;
            let z = [
                c(0.9 * th.cos(), 0.9 * th.sin()),
                c(0.8 * (th * 1.3).cos(), 0.8 * (th * 1.3).sin()),
                c(0.7 * (th * 0.7).cos(), 0.7 * (th * 0.7).sin()),
            ];
            assert!(e.eval(&z).norm() <= bound + 1e-12);
        }
    }
}
