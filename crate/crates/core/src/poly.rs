//! Sparse multivariate polynomials over a [`Scalar`] coefficient type.
//!
//! A point configuration of `m` points in `n` dimensions is flattened into
//! `n * m` variables, point-major: coordinate `j` of point `i` is variable
//! `i * n + j`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{fmt_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {var} out of range for {num_vars} variables")]
    VarOutOfRange { var: usize, num_vars: usize },
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Exponent vector of fixed length `num_vars`; ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(num_vars: usize) -> Self {
        Monomial(vec![0; num_vars])
    }

    pub fn var(num_vars: usize, var: usize) -> Self {
        let mut exps = vec![0; num_vars];
        exps[var] = 1;
        Monomial(exps)
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Total degree; the zero polynomial has degree [`Degree::NegInfinity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Degree {
    NegInfinity,
    Finite(u32),
}

impl Degree {
    pub fn finite(self) -> Option<u32> {
        match self {
            Degree::Finite(d) => Some(d),
            Degree::NegInfinity => None,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => f.write_str("-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    num_vars: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(num_vars: usize) -> Self {
        Poly {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: T) -> Self {
        Self::from_terms(num_vars, [(Monomial::one(num_vars), c)])
    }

    pub fn var(num_vars: usize, var: usize) -> Self {
        assert!(var < num_vars, "variable {var} out of range");
        Self::from_terms(num_vars, [(Monomial::var(num_vars, var), T::one())])
    }

    /// Builds a polynomial, merging repeated monomials and dropping zeros.
    pub fn from_terms(num_vars: usize, terms: impl IntoIterator<Item = (Monomial, T)>) -> Self {
        let mut out = Poly::zero(num_vars);
        for (m, c) in terms {
            assert_eq!(m.0.len(), num_vars, "monomial length must equal num_vars");
            out.add_term(m, c);
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing = existing.clone() + c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> T {
        self.terms.get(m).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Degree {
        self.terms
            .keys()
            .map(Monomial::degree)
            .max()
            .map_or(Degree::NegInfinity, Degree::Finite)
    }

    /// The value of a constant polynomial (zero included).
    pub fn constant_value(&self) -> Option<T> {
        match self.degree() {
            Degree::NegInfinity => Some(T::zero()),
            Degree::Finite(0) => Some(self.coefficient(&Monomial::one(self.num_vars))),
            Degree::Finite(_) => None,
        }
    }

    pub fn eval(&self, point: &[T]) -> Result<T, PolyError> {
        if point.len() != self.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                got: point.len(),
            });
        }
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                for _ in 0..e {
                    term = term * x.clone();
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Formal partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Result<Self, PolyError> {
        if var >= self.num_vars {
            return Err(PolyError::VarOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        let terms = self.terms.iter().filter_map(|(m, c)| {
            let e = m.0[var];
            (e > 0).then(|| {
                let mut exps = m.0.clone();
                exps[var] -= 1;
                (Monomial(exps), c.clone() * T::from_int(e as i64))
            })
        });
        Ok(Self::from_terms(self.num_vars, terms))
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.num_vars).map(|v| self.partial(v).expect("in range")).collect()
    }

    pub fn scale(&self, k: &T) -> Self {
        Self::from_terms(
            self.num_vars,
            self.terms.iter().map(|(m, c)| (m.clone(), c.clone() * k.clone())),
        )
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Poly::constant(self.num_vars, T::one());
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Replaces variable `v` by `images[v]`; all images share one variable space.
    pub fn substitute(&self, images: &[Poly<T>]) -> Result<Self, PolyError> {
        if images.len() != self.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                got: images.len(),
            });
        }
        let target_vars = images.first().map_or(0, |p| p.num_vars);
        assert!(
            images.iter().all(|p| p.num_vars == target_vars),
            "substitution images must share a variable space"
        );
        let mut powers: Vec<Vec<Poly<T>>> = images
            .iter()
            .map(|p| vec![Poly::constant(target_vars, T::one()), p.clone()])
            .collect();
        let mut out = Poly::zero(target_vars);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(target_vars, c.clone());
            for (v, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[v];
                while cache.len() <= e as usize {
                    let next = cache.last().expect("nonempty") * &images[v];
                    cache.push(next);
                }
                term = &term * &cache[e as usize];
            }
            out = out + term;
        }
        Ok(out)
    }

    /// Sum of `|coefficient| * prod bound_v^e` over all terms: an upper
    /// bound for `|P|` on the box `|x_v| <= bound_v`.
    pub fn magnitude_bound(&self, bounds: &[T]) -> T {
        assert_eq!(bounds.len(), self.num_vars);
        self.terms.iter().fold(T::zero(), |acc, (m, c)| {
            let mut term = c.abs();
            for (b, &e) in bounds.iter().zip(&m.0) {
                for _ in 0..e {
                    term = term * b.clone();
                }
            }
            acc + term
        })
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        Poly::from_terms(self.num_vars, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Differentiates along the lexicographically smallest monomial of top
    /// degree, one variable at a time in ascending index order, until a
    /// nonzero constant remains.
    pub fn top_monomial_chain(&self) -> Result<DerivativeChain<T>, PolyError> {
        let top = match self.degree() {
            Degree::NegInfinity => return Err(PolyError::ZeroPolynomial),
            Degree::Finite(d) => d,
        };
        let chosen = self
            .terms
            .keys()
            .find(|m| m.degree() == top)
            .expect("a monomial attains the degree");
        let var_order: Vec<usize> = chosen
            .0
            .iter()
            .enumerate()
            .flat_map(|(v, &e)| std::iter::repeat_n(v, e as usize))
            .collect();
        let mut polys = vec![self.clone()];
        for &v in &var_order {
            let next = polys.last().expect("nonempty").partial(v)?;
            polys.push(next);
        }
        Ok(DerivativeChain { polys, var_order })
    }
}

impl Poly<Rational> {
    /// Returns `(lambda * P, lambda)` with `lambda > 0` minimal such that the
    /// result has integer coefficients with collective gcd 1.
    pub fn clear_denominators(&self) -> (Self, Rational) {
        if self.is_zero() {
            return (self.clone(), Rational::one());
        }
        let lcm = self.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let gcd = self
            .terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(&(c.numer() * (&lcm / c.denom()))));
        let lambda = Rational::new(lcm, gcd);
        (self.scale(&lambda), lambda)
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.denom().is_one())
    }

    /// Parses the text format produced by `Display`, e.g.
    /// `3/1 * x0^2 * x1^1 + -1/2 * x2^1 + 5/1`.
    pub fn parse(text: &str, num_vars: usize) -> Result<Self, PolyError> {
        Parser::new(text, num_vars).parse_poly()
    }
}

/// Canonical text form: terms in ascending monomial order joined by ` + `,
/// each `p/q` followed by ` * x<i>^<e>` factors. Zero prints as `0/1`.
impl fmt::Display for Poly<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0/1");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            f.write_str(&fmt_rational(c))?;
            for (v, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    write!(f, " * x{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    num_vars: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, num_vars: usize) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            num_vars,
        }
    }

    fn err<R>(&self, msg: impl Into<String>) -> Result<R, PolyError> {
        Err(PolyError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
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

    fn digits(&mut self) -> Result<BigInt, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(s.parse().expect("digits parse"))
    }

    fn parse_poly(mut self) -> Result<Poly<Rational>, PolyError> {
        let mut out = Poly::zero(self.num_vars);
        let mut negate = false;
        loop {
            if self.peek() == Some(b'-') {
                self.pos += 1;
                negate = !negate;
            }
            let (m, c) = self.parse_term()?;
            out.add_term(m, if negate { -c } else { c });
            match self.peek() {
                None => return Ok(out),
                Some(b'+') => {
                    self.pos += 1;
                    negate = false;
                }
                Some(b'-') => {
                    self.pos += 1;
                    negate = true;
                }
                Some(_) => return self.err("expected '+', '-' or end of input"),
            }
        }
    }

    fn parse_term(&mut self) -> Result<(Monomial, Rational), PolyError> {
        let mut coef = Rational::one();
        let mut exps = vec![0u32; self.num_vars];
        let mut first = true;
        loop {
            match self.peek() {
                Some(b'-') if first => {
                    self.pos += 1;
                    coef = -coef;
                    continue;
                }
                Some(c) if c.is_ascii_digit() => {
                    let p = self.digits()?;
                    let q = if self.peek() == Some(b'/') {
                        self.pos += 1;
                        let q = self.digits()?;
                        if q.is_zero() {
                            return self.err("zero denominator");
                        }
                        q
                    } else {
                        BigInt::one()
                    };
                    coef *= Rational::new(p, q);
                }
                Some(b'x') => {
                    self.pos += 1;
                    let v = self.digits()?;
                    let v: usize = match v.try_into() {
                        Ok(v) if v < self.num_vars => v,
                        _ => return self.err(format!("variable out of range (num_vars = {})", self.num_vars)),
                    };
                    let e: u32 = if self.peek() == Some(b'^') {
                        self.pos += 1;
                        match self.digits()?.try_into() {
                            Ok(e) => e,
                            Err(_) => return self.err("exponent too large"),
                        }
                    } else {
                        1
                    };
                    exps[v] += e;
                }
                _ => return self.err("expected coefficient or variable"),
            }
            first = false;
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok((Monomial(exps), coef));
            }
        }
    }
}

/// `polys[k + 1]` is the partial derivative of `polys[k]` in direction
/// `var_order[k]`; the last entry is a nonzero constant.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeChain<T> {
    pub polys: Vec<Poly<T>>,
    pub var_order: Vec<usize>,
}

impl<T: Scalar> DerivativeChain<T> {
    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn last(&self) -> &Poly<T> {
        self.polys.last().expect("chain is never empty")
    }

    /// Re-derives every link symbolically and checks the terminal constant.
    pub fn is_consistent(&self) -> bool {
        if self.polys.len() != self.var_order.len() + 1 {
            return false;
        }
        let links_ok = self
            .polys
            .windows(2)
            .zip(&self.var_order)
            .all(|(pair, &v)| pair[0].partial(v).as_ref() == Ok(&pair[1]));
        let last = self.last();
        links_ok && !last.is_zero() && last.degree() == Degree::Finite(0)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl<T: Scalar> $trait<Poly<T>> for Poly<T> {
            type Output = Poly<T>;
            fn $method(self, rhs: Poly<T>) -> Poly<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Scalar> $trait<&Poly<T>> for Poly<T> {
            type Output = Poly<T>;
            fn $method(self, rhs: &Poly<T>) -> Poly<T> {
                (&self).$method(rhs)
            }
        }
    };
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        assert_eq!(self.num_vars, rhs.num_vars, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        self + &(-rhs)
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        assert_eq!(self.num_vars, rhs.num_vars, "variable count mismatch");
        let mut out = Poly::zero(self.num_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl<T: Scalar> Neg for Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        -&self
    }
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    type P = Poly<Rational>;

    fn x(nv: usize, i: usize) -> P {
        P::var(nv, i)
    }

    fn right_angle_p1(n: usize) -> P {
        let nv = 4 * n;
        (0..n).fold(P::zero(nv), |acc, i| {
            acc + (x(nv, i) - x(nv, n + i)) * (x(nv, 2 * n + i) - x(nv, 3 * n + i))
        })
    }

    fn pt(vals: &[i64]) -> Vec<Rational> {
        vals.iter().map(|&v| int(v)).collect()
    }

    #[test]
    fn eval_right_angle_examples() {
        let p = right_angle_p1(2);
        assert_eq!(p.eval(&pt(&[1, 0, 0, 0, 0, 1, 0, 0])).unwrap(), int(0));
        assert_eq!(p.eval(&pt(&[1, 0, 0, 0, 1, 1, 0, 0])).unwrap(), int(1));
        assert_eq!(P::zero(3).eval(&pt(&[4, 5, 6])).unwrap(), int(0));
    }

    #[test]
    fn eval_rejects_wrong_length() {
        let err = right_angle_p1(2).eval(&pt(&[1, 2])).unwrap_err();
        assert_eq!(err, PolyError::DimensionMismatch { expected: 8, got: 2 });
    }

    #[test]
    fn partial_derivative_rules() {
        let p = x(2, 0) * x(2, 0) * x(2, 1);
        assert_eq!(p.partial(0).unwrap(), (x(2, 0) * x(2, 1)).scale(&int(2)));
        assert!((x(2, 0) * x(2, 0)).partial(1).unwrap().is_zero());
        assert!(matches!(p.partial(2), Err(PolyError::VarOutOfRange { var: 2, .. })));
    }

    #[test]
    fn partial_of_right_angle_form() {
        // d/dx1 of sum (x_i - y_i)(z_i - v_i) is z1 - v1.
        let p = right_angle_p1(2);
        assert_eq!(p.partial(0).unwrap(), x(8, 4) - x(8, 6));
    }

    #[test]
    fn degree_and_sentinel() {
        assert_eq!(right_angle_p1(2).degree(), Degree::Finite(2));
        assert_eq!(P::zero(4).degree(), Degree::NegInfinity);
        assert!(Degree::NegInfinity < Degree::Finite(0));
        assert_eq!(P::constant(2, int(3)).degree(), Degree::Finite(0));
    }

    #[test]
    fn chain_of_product() {
        let chain = (x(2, 0) * x(2, 1)).top_monomial_chain().unwrap();
        assert_eq!(chain.var_order, vec![0, 1]);
        assert_eq!(chain.polys, vec![x(2, 0) * x(2, 1), x(2, 1), P::constant(2, int(1))]);
        assert!(chain.is_consistent());
    }

    #[test]
    fn chain_of_square() {
        let chain = (x(1, 0) * x(1, 0)).top_monomial_chain().unwrap();
        assert_eq!(
            chain.polys,
            vec![x(1, 0) * x(1, 0), x(1, 0).scale(&int(2)), P::constant(1, int(2))]
        );
    }

    #[test]
    fn chain_of_right_angle_form() {
        let chain = right_angle_p1(2).top_monomial_chain().unwrap();
        assert_eq!(chain.len(), 3);
        let last = chain.last().constant_value().unwrap();
        assert!(!last.is_zero() && last.denom().is_one());
        assert!(chain.is_consistent());
    }

    #[test]
    fn chain_rejects_zero() {
        assert_eq!(P::zero(2).top_monomial_chain(), Err(PolyError::ZeroPolynomial));
    }

    #[test]
    fn clear_denominators_examples() {
        let p = x(1, 0).scale(&ratio(1, 2)) + P::constant(1, ratio(1, 3));
        let (q, lambda) = p.clear_denominators();
        assert_eq!(lambda, int(6));
        assert_eq!(q, x(1, 0).scale(&int(3)) + P::constant(1, int(2)));

        let r = x(2, 0).scale(&int(4)) - x(2, 1).scale(&int(6));
        assert_eq!(r.clear_denominators().1, ratio(1, 2));

        let s = x(2, 0) + x(2, 1).scale(&int(7));
        assert_eq!(s.clear_denominators(), (s.clone(), int(1)));
        assert_eq!(P::zero(2).clear_denominators(), (P::zero(2), int(1)));
    }

    #[test]
    fn text_format_round_trip() {
        let p = right_angle_p1(2).scale(&ratio(-3, 7)) + P::constant(8, ratio(5, 2));
        let text = p.to_string();
        let back = P::parse(&text, 8).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_string(), text);
        assert_eq!(P::parse("0/1", 3).unwrap(), P::zero(3));
        assert_eq!(P::zero(3).to_string(), "0/1");
    }

    #[test]
    fn parser_accepts_loose_forms() {
        let p = P::parse("x0^2 - 2 * x0 * x1 + 1/2", 2).unwrap();
        let expected = x(2, 0) * x(2, 0) - (x(2, 0) * x(2, 1)).scale(&int(2)) + P::constant(2, ratio(1, 2));
        assert_eq!(p, expected);
        assert!(P::parse("x5", 2).is_err());
        assert!(P::parse("1/0", 2).is_err());
        assert!(P::parse("3 +", 2).is_err());
    }

    #[test]
    fn substitution_composes() {
        // (x0 + x1)^2 with x0 -> 2t, x1 -> t + 1 gives (3t + 1)^2.
        let p = (x(2, 0) + x(2, 1)).pow(2);
        let t = Poly::<Rational>::var(1, 0);
        let images = [t.scale(&int(2)), &t + &P::constant(1, int(1))];
        let expected = (t.scale(&int(3)) + P::constant(1, int(1))).pow(2);
        assert_eq!(p.substitute(&images).unwrap(), expected);
    }

    #[test]
    fn float_polynomials_share_the_code_path() {
        let p: Poly<f64> = Poly::var(2, 0) * Poly::var(2, 1) + Poly::constant(2, 0.5);
        assert_eq!(p.eval(&[2.0, 3.0]).unwrap(), 6.5);
        assert_eq!(p.partial(0).unwrap().eval(&[2.0, 3.0]).unwrap(), 3.0);
    }
}
