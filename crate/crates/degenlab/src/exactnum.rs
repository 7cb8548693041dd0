//! Exact scalars: arbitrary-precision rationals and univariate rational
//! functions in the contraction parameter `t`.
//!
//! A [`RationalFunction`] is always stored reduced, with a monic denominator,
//! so structural equality is mathematical equality.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("pole at t = 0")]
    PoleAtZero,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational, NumError> {
    let s = s.trim();
    let bad = |msg: &str| NumError::Parse { pos: 0, msg: format!("{msg}: {s:?}") };
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad("bad numerator"))?;
            let q: BigInt = q.trim().parse().map_err(|_| bad("bad denominator"))?;
            if q.is_zero() {
                return Err(NumError::DivisionByZero);
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad("bad integer"))?)),
    }
}

/// Dense polynomial in `t`; `coeffs[k]` multiplies `t^k`. No trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// `c * t^k`
    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    pub fn t() -> Self {
        Self::monomial(Rational::one(), 1)
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => Self::zero(),
        }
    }

    /// Euclidean division; panics on a zero divisor (callers check).
    pub fn div_rem(&self, d: &Polynomial) -> (Polynomial, Polynomial) {
        let dd = d.degree().expect("polynomial division by zero");
        let lead_inv = d.coeffs[dd].recip();
        let mut rem = self.coeffs.clone();
        let Some(sd) = self.degree().filter(|&s| s >= dd) else {
            return (Self::zero(), self.clone());
        };
        let mut quot = vec![Rational::zero(); sd - dd + 1];
        for k in (dd..=sd).rev() {
            let c = &rem[k] * &lead_inv;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k - dd + j] -= &c * dc;
            }
            quot[k - dd] = c;
        }
        (Self::from_coeffs(quot), Self::from_coeffs(rem))
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Lowest power of `t` with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, o: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, o: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, o: &Polynomial) -> Polynomial {
        if self.is_zero() || o.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::from_coeffs(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

fn fmt_rational_coeff(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let body = match k {
                0 => fmt_rational_coeff(&a),
                _ => {
                    let pow = if k == 1 { "t".to_string() } else { format!("t^{k}") };
                    if a.is_one() {
                        pow
                    } else if a.is_integer() {
                        format!("{}*{pow}", a.numer())
                    } else {
                        format!("({})*{pow}", fmt_rational_coeff(&a))
                    }
                }
            };
            write!(f, "{body}")?;
        }
        Ok(())
    }
}

/// Reduced quotient `num / den` with `den` monic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, NumError> {
        if den.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = Polynomial::gcd(&num, &den);
        let (mut num, mut den) = (num.div_rem(&g).0, den.div_rem(&g).0);
        let lead = den.leading().cloned().expect("nonzero den");
        if !lead.is_one() {
            let inv = lead.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Ok(Self { num, den })
    }

    pub fn from_poly(p: Polynomial) -> Self {
        Self { num: p, den: Polynomial::one() }
    }

    pub fn from_rational(c: Rational) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat(n))
    }

    pub fn zero() -> Self {
        Self::from_poly(Polynomial::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(Polynomial::one())
    }

    pub fn t() -> Self {
        Self::from_poly(Polynomial::t())
    }

    /// `t^k` for any integer `k`.
    pub fn t_pow(k: i32) -> Self {
        let m = Polynomial::monomial(Rational::one(), k.unsigned_abs() as usize);
        if k >= 0 {
            Self::from_poly(m)
        } else {
            Self { num: Polynomial::one(), den: m }
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The constant value, if this function does not depend on `t`.
    pub fn as_constant(&self) -> Option<Rational> {
        (self.num.degree().unwrap_or(0) == 0 && self.den.degree() == Some(0))
            .then(|| self.num.coeff(0))
    }

    pub fn eval_at_zero(&self) -> Result<Rational, NumError> {
        let d0 = self.den.coeff(0);
        if d0.is_zero() {
            return Err(NumError::PoleAtZero);
        }
        Ok(self.num.coeff(0) / d0)
    }

    pub fn checked_div(&self, o: &Self) -> Result<Self, NumError> {
        if o.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Self::new(&self.num * &o.den, &self.den * &o.num)
    }

    pub fn recip(&self) -> Result<Self, NumError> {
        Self::one().checked_div(self)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }
}

impl Default for RationalFunction {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<Rational> for RationalFunction {
    fn from(c: Rational) -> Self {
        Self::from_rational(c)
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, o: &RationalFunction) -> RationalFunction {
        if self.den == o.den {
            return RationalFunction::new(&self.num + &o.num, self.den.clone()).expect("den");
        }
        let num = &(&self.num * &o.den) + &(&o.num * &self.den);
        RationalFunction::new(num, &self.den * &o.den).expect("nonzero den")
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, o: &RationalFunction) -> RationalFunction {
        self + &(-o)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, o: &RationalFunction) -> RationalFunction {
        if self.is_zero() || o.is_zero() {
            return RationalFunction::zero();
        }
        RationalFunction::new(&self.num * &o.num, &self.den * &o.den).expect("nonzero den")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |p: &Polynomial| {
            let s = p.to_string();
            if p.coeffs.iter().filter(|c| !c.is_zero()).count() > 1 {
                format!("({s})")
            } else {
                s
            }
        };
        if self.den.degree() == Some(0) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", wrap(&self.num), wrap(&self.den))
        }
    }
}

/// Arithmetic selector for [`rf_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn rf_arith(
    a: &RationalFunction,
    b: &RationalFunction,
    op: ArithOp,
) -> Result<RationalFunction, NumError> {
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.checked_div(b)?,
    })
}

pub fn rf_eval_at_zero(f: &RationalFunction) -> Result<Rational, NumError> {
    f.eval_at_zero()
}

/// Field operations shared by [`Rational`] and [`RationalFunction`], so
/// matrices can be generic over the scalar kind.
pub trait Scalar: Clone + PartialEq + fmt::Debug + Send + Sync + Zero + One {
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    /// Panics only if `o` is zero; elimination code never does that.
    fn over(&self, o: &Self) -> Self;
    fn from_rational(r: &Rational) -> Self;
}

impl Scalar for Rational {
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

impl Scalar for RationalFunction {
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn over(&self, o: &Self) -> Self {
        self.checked_div(o).expect("division by zero rational function")
    }
    fn from_rational(r: &Rational) -> Self {
        RationalFunction::from_rational(r.clone())
    }
}

impl Add for RationalFunction {
    type Output = RationalFunction;
    fn add(self, o: RationalFunction) -> RationalFunction {
        &self + &o
    }
}

impl Mul for RationalFunction {
    type Output = RationalFunction;
    fn mul(self, o: RationalFunction) -> RationalFunction {
        &self * &o
    }
}

impl Zero for RationalFunction {
    fn zero() -> Self {
        RationalFunction::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RationalFunction {
    fn one() -> Self {
        RationalFunction::one()
    }
}

// ---------------------------------------------------------------------------
// Text syntax

/// Parse an expression in `t`: integer literals, `t`, `+ - * / ^ ( )`.
pub fn parse_rf(src: &str) -> Result<RationalFunction, NumError> {
    let mut p = ExprParser::new(src, &|_| None);
    let v = p.expr()?;
    p.finish()?;
    v.into_scalar(0)
}

/// A value in the linear-combination grammar used for basis rows:
/// either a scalar or a vector `Σ c_k e_k` (k is 1-based).
#[derive(Debug, Clone, PartialEq)]
pub enum LinValue {
    Scalar(RationalFunction),
    Vector(Vec<(usize, RationalFunction)>),
}

impl LinValue {
    fn into_scalar(self, pos: usize) -> Result<RationalFunction, NumError> {
        match self {
            LinValue::Scalar(s) => Ok(s),
            LinValue::Vector(_) => Err(NumError::Parse { pos, msg: "expected a scalar".into() }),
        }
    }

    fn scale(v: Vec<(usize, RationalFunction)>, c: &RationalFunction) -> Vec<(usize, RationalFunction)> {
        v.into_iter().map(|(k, x)| (k, &x * c)).filter(|(_, x)| !x.is_zero()).collect()
    }

    fn combine(a: Vec<(usize, RationalFunction)>, b: Vec<(usize, RationalFunction)>, sign: bool)
        -> Vec<(usize, RationalFunction)> {
        let mut out = a;
        for (k, x) in b {
            let x = if sign { x } else { -&x };
            match out.iter_mut().find(|(j, _)| *j == k) {
                Some((_, y)) => *y = &*y + &x,
                None => out.push((k, x)),
            }
        }
        out.retain(|(_, x)| !x.is_zero());
        out.sort_by_key(|(k, _)| *k);
        out
    }
}

/// Parse a row such as `(1/t)*e4 - (1/t^2)*e7` into a dense vector of length
/// `n`. `index` resolves the text between `e{` and `}` (or the digits after
/// `e`) to a 1-based coordinate.
pub fn parse_linear_combination(
    src: &str,
    n: usize,
    index: &dyn Fn(&str) -> Option<i64>,
) -> Result<Vec<RationalFunction>, NumError> {
    let mut p = ExprParser::new(src, index);
    let v = p.expr()?;
    p.finish()?;
    let mut out = vec![RationalFunction::zero(); n];
    match v {
        LinValue::Vector(terms) => {
            for (k, c) in terms {
                if k == 0 || k > n {
                    return Err(NumError::Parse { pos: 0, msg: format!("e{k} out of range 1..={n}") });
                }
                out[k - 1] = c;
            }
            Ok(out)
        }
        LinValue::Scalar(s) if s.is_zero() => Ok(out),
        LinValue::Scalar(_) => Err(NumError::Parse { pos: 0, msg: "expected a vector".into() }),
    }
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    index: &'a dyn Fn(&str) -> Option<i64>,
}

impl<'a> ExprParser<'a> {
    fn new(src: &'a str, index: &'a dyn Fn(&str) -> Option<i64>) -> Self {
        Self { src: src.as_bytes(), pos: 0, index }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, NumError> {
        Err(NumError::Parse { pos: self.pos, msg: msg.into() })
    }

    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn finish(&mut self) -> Result<(), NumError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(format!("unexpected {:?}", c as char)),
        }
    }

    fn expr(&mut self) -> Result<LinValue, NumError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = self.add(acc, rhs, c == b'+')?;
        }
        Ok(acc)
    }

    fn add(&self, a: LinValue, b: LinValue, plus: bool) -> Result<LinValue, NumError> {
        use LinValue::*;
        Ok(match (a, b) {
            (Scalar(x), Scalar(y)) => Scalar(if plus { &x + &y } else { &x - &y }),
            (Vector(x), Vector(y)) => Vector(LinValue::combine(x, y, plus)),
            (Scalar(x), Vector(y)) if x.is_zero() => Vector(LinValue::combine(vec![], y, plus)),
            (Vector(x), Scalar(y)) if y.is_zero() => Vector(x),
            _ => return self.err("cannot add a scalar to a vector"),
        })
    }

    fn term(&mut self) -> Result<LinValue, NumError> {
        let mut acc = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = self.mul(acc, rhs, c == b'*')?;
        }
        Ok(acc)
    }

    fn mul(&self, a: LinValue, b: LinValue, times: bool) -> Result<LinValue, NumError> {
        use LinValue::*;
        Ok(match (a, b, times) {
            (Scalar(x), Scalar(y), true) => Scalar(&x * &y),
            (Scalar(x), Scalar(y), false) => Scalar(x.checked_div(&y)?),
            (Scalar(x), Vector(v), true) | (Vector(v), Scalar(x), true) => Vector(LinValue::scale(v, &x)),
            (Vector(v), Scalar(x), false) => Vector(LinValue::scale(v, &x.recip()?)),
            _ => return self.err("vectors can only be scaled"),
        })
    }

    fn unary(&mut self) -> Result<LinValue, NumError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                let v = self.unary()?;
                self.mul(LinValue::Scalar(RationalFunction::from_int(-1)), v, true)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<LinValue, NumError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let k = self.integer()?;
            let k: u32 = match k.try_into() {
                Ok(k) if k <= 64 => k,
                _ => return self.err("exponent too large"),
            };
            let s = base.into_scalar(self.pos)?;
            let p = s.pow(k);
            return Ok(LinValue::Scalar(if neg { p.recip()? } else { p }));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt, NumError> {
        self.peek();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(s.parse().expect("digits"))
    }

    fn atom(&mut self) -> Result<LinValue, NumError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b't') => {
                self.pos += 1;
                Ok(LinValue::Scalar(RationalFunction::t()))
            }
            Some(b'e') => {
                self.pos += 1;
                let k = self.basis_index()?;
                if k < 1 {
                    return self.err(format!("basis index {k} < 1"));
                }
                Ok(LinValue::Vector(vec![(k as usize, RationalFunction::one())]))
            }
            Some(c) if c.is_ascii_digit() => {
                let k = self.integer()?;
                Ok(LinValue::Scalar(RationalFunction::from_rational(Rational::from_integer(k))))
            }
            Some(c) => self.err(format!("unexpected {:?}", c as char)),
            None => self.err("unexpected end of input"),
        }
    }

    fn basis_index(&mut self) -> Result<i64, NumError> {
        if self.src.get(self.pos) == Some(&b'{') {
            let start = self.pos + 1;
            let Some(len) = self.src[start..].iter().position(|&c| c == b'}') else {
                return self.err("unclosed '{'");
            };
            let body = std::str::from_utf8(&self.src[start..start + len]).expect("ascii");
            self.pos = start + len + 1;
            return match (self.index)(body) {
                Some(k) => Ok(k),
                None => self.err(format!("cannot resolve index {body:?}")),
            };
        }
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected basis index after 'e'");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        s.parse().map_err(|_| NumError::Parse { pos: start, msg: "bad index".into() })
    }
}
