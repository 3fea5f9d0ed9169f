//! Exact rational functions in chart coordinates.

mod gcd;
mod parse;
mod poly;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::ExprError;

pub use gcd::{cross_equal, gcd, zgcd};
pub use parse::{parse_expr, parse_poly};
pub use poly::{Coefficient, Monomial, Poly, ZPoly, MAX_VARS};

/// A quotient of polynomials kept in lowest terms with a monic denominator.
///
/// Because the representation is canonical, structural equality decides
/// equality of rational functions.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RationalExpr {
    num: Poly,
    den: Poly,
}

impl RationalExpr {
    pub fn zero(nvars: usize) -> Self {
        Self { num: Poly::zero(nvars), den: Poly::one(nvars) }
    }

    pub fn one(nvars: usize) -> Self {
        Self { num: Poly::one(nvars), den: Poly::one(nvars) }
    }

    pub fn from_integer(nvars: usize, k: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(BigInt::from(k)))
    }

    pub fn from_ratio(nvars: usize, p: i64, q: i64) -> Self {
        Self::constant(nvars, BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self { num: Poly::constant(nvars, c), den: Poly::one(nvars) }
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        Self { num: Poly::var(nvars, index), den: Poly::one(nvars) }
    }

    pub fn from_poly(p: Poly) -> Self {
        let nvars = p.nvars();
        Self { num: p, den: Poly::one(nvars) }
    }

    /// Builds `num / den` in canonical form.
    pub fn new(num: Poly, den: Poly) -> Result<Self, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        let nvars = num.nvars();
        if num.is_zero() {
            return Self::zero(nvars);
        }
        if let Some(c) = den.constant_value() {
            return Self { num: num.scale(&c.recip()), den: Poly::one(nvars) };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides numerator"), den.div_exact(&g).expect("gcd divides denominator"))
        };
        Self::with_monic_den(num, den)
    }

    fn with_monic_den(num: Poly, den: Poly) -> Self {
        let lc = den.leading_coefficient();
        if lc.is_one() {
            Self { num, den }
        } else {
            let inv = lc.recip();
            Self { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    #[inline]
    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    #[inline]
    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    #[inline]
    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// The value when the expression is a constant.
    pub fn constant_value(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero(self.nvars());
        }
        Self { num: self.num.scale(k), den: self.den.clone() }
    }

    pub fn recip(&self) -> Result<Self, ExprError> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(Self::with_monic_den(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self * &other.recip()?)
    }

    pub fn pow(&self, exp: u32) -> Self {
        Self { num: self.num.pow(exp), den: self.den.pow(exp) }
    }

    /// Partial derivative with respect to the coordinate with index `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let dn = self.num.derivative(var);
        if self.den.is_one() {
            return Self { num: dn, den: self.den.clone() };
        }
        let dd = self.den.derivative(var);
        if dd.is_zero() {
            return Self::reduce(dn, self.den.clone());
        }
        // d(a/b) = (a'b - ab')/b^2; with g = gcd(b, b') this is
        // (a'(b/g) - a(b'/g)) / (b (b/g)), which keeps intermediate sizes down.
        let g = gcd(&self.den, &dd);
        let b_g = self.den.div_exact(&g).expect("gcd divides");
        let db_g = dd.div_exact(&g).expect("gcd divides");
        let top = dn.mul(&b_g).sub(&self.num.mul(&db_g));
        Self::reduce(top, self.den.mul(&b_g))
    }

    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational, ExprError> {
        let d = self.den.eval(point);
        if d.is_zero() {
            return Err(ExprError::Pole);
        }
        Ok(self.num.eval(point) / d)
    }

    /// Equality decided by cross-multiplication, independent of the
    /// canonical form.
    pub fn cross_equal(&self, other: &Self) -> bool {
        cross_equal(&self.num, &self.den, &other.num, &other.den)
    }

    /// Canonical text using the given coordinate names.
    pub fn display_with(&self, names: &[&str]) -> String {
        let num = format_poly(&self.num, names);
        if self.den.is_one() {
            return num;
        }
        let num = if self.num.len() > 1 { format!("({num})") } else { num };
        let den = format_poly(&self.den, names);
        let single_power = self.den.len() == 1 && {
            let m = self.den.terms()[0].0;
            (0..self.nvars()).filter(|&v| m.exponent(v) > 0).count() == 1
        };
        if single_power {
            format!("{num}/{den}")
        } else {
            format!("{num}/({den})")
        }
    }

    /// Sum of many terms, grouping those with a common denominator first.
    pub fn sum<'a, I: IntoIterator<Item = &'a RationalExpr>>(nvars: usize, items: I) -> Self {
        let mut groups: Vec<(Poly, Poly)> = Vec::new();
        for e in items {
            if e.is_zero() {
                continue;
            }
            match groups.iter_mut().find(|(d, _)| *d == e.den) {
                Some((_, n)) => *n = n.add(&e.num),
                None => groups.push((e.den.clone(), e.num.clone())),
            }
        }
        let mut acc = Self::zero(nvars);
        for (d, n) in groups {
            let part = if d.is_one() { Self::from_poly(n) } else { Self::reduce(n, d) };
            acc = &acc + &part;
        }
        acc
    }
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = default_names(self.nvars());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        f.write_str(&self.display_with(&refs))
    }
}

fn format_monomial(m: &Monomial, names: &[&str]) -> String {
    let mut parts = Vec::new();
    for (v, name) in names.iter().enumerate() {
        match m.exponent(v) {
            0 => {}
            1 => parts.push((*name).to_string()),
            e => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}

/// Canonical printing of a polynomial, terms in descending graded-lex order.
pub fn format_poly(p: &Poly, names: &[&str]) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().iter().enumerate() {
        let negative = c.is_negative();
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mag = c.abs();
        if m.is_one() {
            out.push_str(&mag.to_string());
        } else {
            if !mag.is_one() {
                out.push_str(&mag.to_string());
                out.push('*');
            }
            out.push_str(&format_monomial(m, names));
        }
    }
    out
}

impl Add for &RationalExpr {
    type Output = RationalExpr;

    fn add(self, rhs: &RationalExpr) -> RationalExpr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let n = self.num.add(&rhs.num);
            if self.den.is_one() {
                return RationalExpr::from_poly(n);
            }
            return RationalExpr::reduce(n, self.den.clone());
        }
        if self.den.is_one() {
            return RationalExpr { num: self.num.mul(&rhs.den).add(&rhs.num), den: rhs.den.clone() };
        }
        if rhs.den.is_one() {
            return RationalExpr { num: rhs.num.mul(&self.den).add(&self.num), den: self.den.clone() };
        }
        let g = gcd(&self.den, &rhs.den);
        if g.is_one() {
            let n = self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den));
            if n.is_zero() {
                return RationalExpr::zero(self.nvars());
            }
            return RationalExpr { num: n, den: self.den.mul(&rhs.den) };
        }
        let b1 = self.den.div_exact(&g).expect("gcd divides");
        let d1 = rhs.den.div_exact(&g).expect("gcd divides");
        let t = self.num.mul(&d1).add(&rhs.num.mul(&b1));
        if t.is_zero() {
            return RationalExpr::zero(self.nvars());
        }
        let g2 = gcd(&t, &g);
        if g2.is_one() {
            return RationalExpr { num: t, den: b1.mul(&rhs.den) };
        }
        let t = t.div_exact(&g2).expect("gcd divides");
        let rest = rhs.den.div_exact(&g2).expect("gcd divides");
        RationalExpr::with_monic_den(t, b1.mul(&rest))
    }
}

impl Neg for &RationalExpr {
    type Output = RationalExpr;

    fn neg(self) -> RationalExpr {
        RationalExpr { num: self.num.neg(), den: self.den.clone() }
    }
}

impl Sub for &RationalExpr {
    type Output = RationalExpr;

    fn sub(self, rhs: &RationalExpr) -> RationalExpr {
        self + &(-rhs)
    }
}

impl Mul for &RationalExpr {
    type Output = RationalExpr;

    fn mul(self, rhs: &RationalExpr) -> RationalExpr {
        if self.is_zero() || rhs.is_zero() {
            return RationalExpr::zero(self.nvars());
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RationalExpr::from_poly(self.num.mul(&rhs.num));
        }
        if let Some(c) = self.constant_value() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.constant_value() {
            return self.scale(&c);
        }
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let a = self.num.div_exact(&g1).expect("gcd divides");
        let d = rhs.den.div_exact(&g1).expect("gcd divides");
        let c = rhs.num.div_exact(&g2).expect("gcd divides");
        let b = self.den.div_exact(&g2).expect("gcd divides");
        RationalExpr::with_monic_den(a.mul(&c), b.mul(&d))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for RationalExpr {
            type Output = RationalExpr;
            fn $method(self, rhs: RationalExpr) -> RationalExpr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&RationalExpr> for RationalExpr {
            type Output = RationalExpr;
            fn $method(self, rhs: &RationalExpr) -> RationalExpr {
                (&self).$method(rhs)
            }
        }
        impl $tr<RationalExpr> for &RationalExpr {
            type Output = RationalExpr;
            fn $method(self, rhs: RationalExpr) -> RationalExpr {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        -&self
    }
}

impl AddAssign<&RationalExpr> for RationalExpr {
    fn add_assign(&mut self, rhs: &RationalExpr) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&RationalExpr> for RationalExpr {
    fn sub_assign(&mut self, rhs: &RationalExpr) {
        *self = &*self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const X4: [&str; 4] = ["x1", "x2", "x3", "x4"];

    fn e(s: &str) -> RationalExpr {
        parse_expr(s, &X4).unwrap()
    }

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn parses_polynomial_terms() {
        let p = parse_expr("x1^2 + 2*x1*x2", &["x1", "x2"]).unwrap();
        assert!(p.is_polynomial());
        let terms = p.numerator().terms();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].0.exponents(2), vec![2, 0]);
        assert_eq!(terms[0].1, q(1, 1));
        assert_eq!(terms[1].0.exponents(2), vec![1, 1]);
        assert_eq!(terms[1].1, q(2, 1));
    }

    #[test]
    fn inverse_square_norm() {
        let r = e("1/(x1^2+x2^2+x3^2+x4^2)");
        assert!(r.numerator().is_one());
        assert_eq!(RationalExpr::from_poly(r.denominator().clone()), e("x1^2+x2^2+x3^2+x4^2"));
    }

    #[test]
    fn cancels_common_factor() {
        assert_eq!(e("(x1^2-1)/(x1-1)"), e("x1+1"));
        assert_eq!(e("(x1^2-x2^2)").checked_div(&e("x1-x2")).unwrap(), e("x1+x2"));
    }

    #[test]
    fn field_inverses() {
        assert!((e("x1") + e("-x1")).is_zero());
        assert!((e("1/(x1^2+x2^2+x3^2+x4^2)") * e("x1^2+x2^2+x3^2+x4^2")).is_one());
        assert_eq!(e("x1").checked_div(&e("0")), Err(ExprError::DivisionByZero));
    }

    #[test]
    fn derivatives() {
        assert_eq!(e("x1^2").derivative(0), e("2*x1"));
        assert!(e("x1").derivative(1).is_zero());
        let r2 = "(x1^2+x2^2+x3^2+x4^2)";
        assert_eq!(e(&format!("1/{r2}")).derivative(0), e(&format!("-2*x1/{r2}^2")));
    }

    #[test]
    fn zero_tests() {
        assert!(e("(x1+x2)^2 - x1^2 - 2*x1*x2 - x2^2").is_zero());
        assert!((e("x1/(x1^2+x2^2)") - e("x1/(x1^2+x2^2)")).is_zero());
        assert!(!e("x1 - x2").is_zero());
    }

    #[test]
    fn evaluation() {
        let one = q(1, 1);
        let zero = q(0, 1);
        let p = [one.clone(), zero.clone(), zero.clone(), zero.clone()];
        assert_eq!(e("1/(x1^2+x2^2+x3^2+x4^2)").eval(&p).unwrap(), one);
        let s = parse_expr("x1+x2", &["x1", "x2"]).unwrap();
        assert_eq!(s.eval(&[q(1, 2), q(1, 3)]).unwrap(), q(5, 6));
        let origin = [zero.clone(), one.clone(), one.clone(), one];
        assert_eq!(e("1/x1").eval(&origin), Err(ExprError::Pole));
    }

    #[test]
    fn printing_round_trips() {
        for s in ["0", "-3/4*x1 + 2", "x1^2*x2 - x3/(x1^2 + 1)", "(x1 - x2)/x3^2", "-x1/(2*x2 + x3)", "5/(x1*x2)"] {
            let v = e(s);
            let printed = v.display_with(&X4);
            assert_eq!(e(&printed), v, "{s} printed as {printed}");
        }
        assert_eq!(e("x2 + 2*x1^2 - 1/2").to_string(), "2*x1^2 + x2 - 1/2");
    }

    #[test]
    fn sum_groups_denominators() {
        let terms = [e("1/(x1+1)"), e("x1/(x1+1)"), e("x2")];
        assert_eq!(RationalExpr::sum(4, terms.iter()), e("1 + x2"));
    }
}
