//! Sparse multivariate polynomials with terms kept in graded-lex order.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Largest number of chart coordinates a polynomial may carry.
pub const MAX_VARS: usize = 8;

/// Exponent vector ordered graded-lexicographically (total degree first,
/// then lexicographic with the first coordinate most significant).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Monomial {
    degree: u32,
    exps: [u16; MAX_VARS],
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(index: usize) -> Self {
        let mut m = Self::default();
        m.exps[index] = 1;
        m.degree = 1;
        m
    }

    pub fn from_exponents(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_VARS, "too many variables");
        let mut m = Self::default();
        for (slot, &e) in m.exps.iter_mut().zip(exps) {
            *slot = u16::try_from(e).expect("exponent overflow");
            m.degree += e;
        }
        m
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    #[inline]
    pub fn exponent(&self, var: usize) -> u32 {
        u32::from(self.exps[var])
    }

    pub fn exponents(&self, nvars: usize) -> Vec<u32> {
        self.exps[..nvars].iter().map(|&e| u32::from(e)).collect()
    }

    pub fn is_one(&self) -> bool {
        self.degree == 0
    }

    #[inline]
    pub fn mul(&self, other: &Self) -> Self {
        let mut exps = self.exps;
        for (e, o) in exps.iter_mut().zip(other.exps.iter()) {
            *e = e.checked_add(*o).expect("exponent overflow");
        }
        Self { degree: self.degree + other.degree, exps }
    }

    /// `self / other` when `other` divides `self`.
    #[inline]
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        if other.degree > self.degree {
            return None;
        }
        let mut exps = self.exps;
        for (e, o) in exps.iter_mut().zip(other.exps.iter()) {
            *e = e.checked_sub(*o)?;
        }
        Some(Self { degree: self.degree - other.degree, exps })
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let exps: [u16; MAX_VARS] = std::array::from_fn(|i| self.exps[i].min(other.exps[i]));
        let degree = exps.iter().map(|&e| u32::from(e)).sum();
        Self { degree, exps }
    }

    /// Drops the exponent of `var`, returning the removed power.
    pub fn without(&self, var: usize) -> (Self, u32) {
        let mut m = *self;
        let e = u32::from(m.exps[var]);
        m.exps[var] = 0;
        m.degree -= e;
        (m, e)
    }

    pub fn with_power(&self, var: usize, power: u32) -> Self {
        let mut m = *self;
        let old = u32::from(m.exps[var]);
        m.exps[var] = u16::try_from(power).expect("exponent overflow");
        m.degree = m.degree - old + power;
        m
    }
}

/// Ring operations a coefficient domain has to provide.
pub trait Coefficient: Clone + Eq + Hash + Debug + Zero + One + Signed {
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    /// Exact quotient, `None` if `other` does not divide `self`.
    fn exact_div(&self, other: &Self) -> Option<Self>;
}

impl Coefficient for BigInt {
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn exact_div(&self, other: &Self) -> Option<Self> {
        let (q, r) = self.div_rem(other);
        r.is_zero().then_some(q)
    }
}

impl Coefficient for BigRational {
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn exact_div(&self, other: &Self) -> Option<Self> {
        (!other.is_zero()).then(|| self / other)
    }
}

/// Multivariate polynomial in a fixed number of variables.
///
/// Terms are stored strictly descending in graded-lex order and no stored
/// coefficient is zero, so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly<C = BigRational> {
    nvars: usize,
    terms: Vec<(Monomial, C)>,
}

/// Integer polynomials, used internally by the GCD.
pub type ZPoly = Poly<BigInt>;

impl<C: Coefficient> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables are supported");
        Self { nvars, terms: Vec::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.push((Monomial::one(), c));
        }
        p
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars);
        let mut p = Self::zero(nvars);
        p.terms.push((Monomial::var(index), C::one()));
        p
    }

    pub fn monomial(nvars: usize, m: Monomial, c: C) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.push((m, c));
        }
        p
    }

    /// Builds a polynomial from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, C)>>(nvars: usize, terms: I) -> Self {
        let mut raw: Vec<(Monomial, C)> = terms.into_iter().collect();
        raw.sort_unstable_by_key(|t| std::cmp::Reverse(t.0));
        let mut out: Vec<(Monomial, C)> = Vec::with_capacity(raw.len());
        for (m, c) in raw {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc = lc.add_ref(&c),
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Self { nvars, terms: out }
    }

    #[inline]
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    #[inline]
    pub fn terms(&self) -> &[(Monomial, C)] {
        &self.terms
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    /// Value of a constant polynomial.
    pub fn constant_value(&self) -> Option<C> {
        match self.terms.as_slice() {
            [] => Some(C::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<&(Monomial, C)> {
        self.terms.first()
    }

    pub fn leading_coefficient(&self) -> C {
        self.terms.first().map(|t| t.1.clone()).unwrap_or_else(C::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.first().map(|t| t.0.degree()).unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|(m, _)| m.exponent(var)).max().unwrap_or(0)
    }

    /// Bit set of variables that occur with positive exponent.
    pub fn support(&self) -> u32 {
        let mut bits = 0u32;
        for (m, _) in &self.terms {
            for v in 0..self.nvars {
                if m.exponent(v) > 0 {
                    bits |= 1 << v;
                }
            }
        }
        bits
    }

    pub fn neg(&self) -> Self {
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect() }
    }

    pub fn scale(&self, k: &C) -> Self {
        if k.is_zero() {
            return Self::zero(self.nvars);
        }
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (*m, c.mul_ref(k))).collect() }
    }

    fn merge(&self, other: &Self, negate_other: bool) -> Self {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &other.terms;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate_other { -b[j].1.clone() } else { b[j].1.clone() };
                    out.push((b[j].0, c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate_other { a[i].1.sub_ref(&b[j].1) } else { a[i].1.add_ref(&b[j].1) };
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            let c = if negate_other { -t.1.clone() } else { t.1.clone() };
            out.push((t.0, c));
        }
        Self { nvars: self.nvars, terms: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.merge(other, true)
    }

    pub fn mul_term(&self, m: &Monomial, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(tm, tc)| (tm.mul(m), tc.mul_ref(c))).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars, other.nvars);
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.nvars);
        }
        if other.terms.len() == 1 {
            return self.mul_term(&other.terms[0].0, &other.terms[0].1);
        }
        if self.terms.len() == 1 {
            return other.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                raw.push((ma.mul(mb), ca.mul_ref(cb)));
            }
        }
        Self::from_terms(self.nvars, raw)
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.nvars);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves a
    /// remainder.
    pub fn div_exact(&self, divisor: &Self) -> Option<Self> {
        let (lm_d, lc_d) = divisor.leading()?.clone();
        if self.is_zero() {
            return Some(Self::zero(self.nvars));
        }
        if divisor.terms.len() == 1 {
            let mut terms = Vec::with_capacity(self.terms.len());
            for (m, c) in &self.terms {
                terms.push((m.checked_div(&lm_d)?, c.exact_div(&lc_d)?));
            }
            return Some(Self { nvars: self.nvars, terms });
        }
        let mut rem = self.clone();
        let mut quotient = Vec::new();
        while let Some((lm_r, lc_r)) = rem.leading() {
            let m = lm_r.checked_div(&lm_d)?;
            let c = lc_r.exact_div(&lc_d)?;
            rem = rem.sub(&divisor.mul_term(&m, &c));
            quotient.push((m, c));
        }
        Some(Self { nvars: self.nvars, terms: quotient })
    }

    pub fn derivative(&self, var: usize) -> Self {
        let terms = self.terms.iter().filter_map(|(m, c)| {
            let e = m.exponent(var);
            (e > 0).then(|| {
                let mut k = C::zero();
                for _ in 0..e {
                    k = k.add_ref(&C::one());
                }
                (m.with_power(var, e - 1), c.mul_ref(&k))
            })
        });
        // Differentiation is injective on the surviving monomials, so order is preserved
        // within fixed degree only; re-sort to be safe.
        Self::from_terms(self.nvars, terms)
    }

    /// Substitutes `value` for variable `var`.
    pub fn eval_var(&self, var: usize, value: &C) -> Self {
        let mut powers: Vec<C> = vec![C::one()];
        let terms = self.terms.iter().map(|(m, c)| {
            let (rest, e) = m.without(var);
            while powers.len() <= e as usize {
                let next = powers.last().unwrap().mul_ref(value);
                powers.push(next);
            }
            (rest, c.mul_ref(&powers[e as usize]))
        });
        let terms: Vec<_> = terms.collect();
        Self::from_terms(self.nvars, terms)
    }

    /// Coefficients with respect to `var`: entry `k` multiplies `var^k`.
    pub fn coefficients_in(&self, var: usize) -> Vec<Self> {
        let deg = self.degree_in(var) as usize;
        let mut buckets: Vec<Vec<(Monomial, C)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let (rest, e) = m.without(var);
            buckets[e as usize].push((rest, c.clone()));
        }
        buckets.into_iter().map(|b| Self::from_terms(self.nvars, b)).collect()
    }

    pub fn from_coefficients_in(nvars: usize, var: usize, coeffs: &[Self]) -> Self {
        let mut terms = Vec::new();
        for (k, coeff) in coeffs.iter().enumerate() {
            for (m, c) in &coeff.terms {
                terms.push((m.with_power(var, m.exponent(var) + k as u32), c.clone()));
            }
        }
        Self::from_terms(nvars, terms)
    }

    /// Largest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let first = match it.next() {
            Some(t) => t.0,
            None => return Monomial::one(),
        };
        it.fold(first, |acc, (m, _)| acc.gcd(m))
    }

    /// Same polynomial viewed in a larger variable set.
    pub fn with_nvars(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars || self.support() >> nvars == 0);
        Self { nvars, terms: self.terms.clone() }
    }
}

impl Poly<BigRational> {
    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        assert_eq!(point.len(), self.nvars);
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, x) in point.iter().enumerate() {
                let e = m.exponent(v);
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            total += t;
        }
        total
    }

    /// Splits `self = content * primitive` where `primitive` has coprime
    /// integer coefficients and a positive leading coefficient.
    pub fn integer_primitive(&self) -> (BigRational, ZPoly) {
        if self.is_zero() {
            return (BigRational::zero(), ZPoly::zero(self.nvars));
        }
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut num_gcd = BigInt::zero();
        for (_, c) in &self.terms {
            let scaled = c.numer() * (&den_lcm / c.denom());
            num_gcd = num_gcd.gcd(&scaled);
        }
        if self.leading_coefficient().is_negative() {
            num_gcd = -num_gcd;
        }
        let content = BigRational::new(num_gcd.clone(), den_lcm.clone());
        let z = ZPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (*m, c.numer() * (&den_lcm / c.denom()) / &num_gcd)).collect(),
        };
        (content, z)
    }

    /// Leading coefficient made one.
    pub fn monic(&self) -> Self {
        match self.leading() {
            None => self.clone(),
            Some((_, lc)) if lc.is_one() => self.clone(),
            Some((_, lc)) => {
                let inv = lc.recip();
                self.scale(&inv)
            }
        }
    }
}

impl ZPoly {
    pub fn to_rational(&self) -> Poly<BigRational> {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (*m, BigRational::from_integer(c.clone()))).collect(),
        }
    }

    /// gcd of the integer coefficients (non-negative).
    pub fn integer_content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    pub fn max_norm(&self) -> BigInt {
        self.terms.iter().map(|(_, c)| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    pub fn div_integer(&self, k: &BigInt) -> Self {
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (*m, c / k)).collect() }
    }

    /// Primitive part with positive leading coefficient.
    pub fn primitive(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut g = self.integer_content();
        if self.leading_coefficient().is_negative() {
            g = -g;
        }
        if g.is_one() {
            self.clone()
        } else {
            self.div_integer(&g)
        }
    }
}
