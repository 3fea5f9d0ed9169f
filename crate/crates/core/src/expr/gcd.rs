//! Multivariate polynomial GCD over the integers.
//!
//! The main path is the heuristic evaluation/interpolation GCD (Char, Geddes
//! and Gonnet): substitute a large integer for one variable, recurse, then
//! lift the result back with balanced base-`x` digits and confirm it by exact
//! division. If the heuristic gives up, a primitive pseudo-remainder sequence
//! is used instead.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use super::poly::{Monomial, Poly, ZPoly};

const HEU_ATTEMPTS: usize = 6;

/// GCD of two rational polynomials, monic (or zero when both are zero).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one(a.nvars());
    }
    if a == b {
        return a.monic();
    }
    let (_, za) = a.integer_primitive();
    let (_, zb) = b.integer_primitive();
    if provably_coprime(&za, &zb) {
        return Poly::one(a.nvars());
    }
    zgcd(&za, &zb).to_rational().monic()
}

const PRIME: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(PRIME)) as u64
}

fn powmod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b);
        }
        b = mulmod(b, b);
        e >>= 1;
    }
    r
}

fn reduce_mod(c: &BigInt) -> u64 {
    let m = c.mod_floor(&BigInt::from(PRIME));
    u64::try_from(m).expect("reduced below the prime")
}

/// Image of `p` in `F_p[t]` after substituting `point` for every variable
/// except `var`; coefficients indexed by degree.
fn univariate_image(p: &ZPoly, var: usize, point: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; p.degree_in(var) as usize + 1];
    for (m, c) in p.terms() {
        let mut v = reduce_mod(c);
        for (i, &a) in point.iter().enumerate() {
            if i != var && m.exponent(i) > 0 {
                v = mulmod(v, powmod(a, u64::from(m.exponent(i))));
            }
        }
        let k = m.exponent(var) as usize;
        out[k] = (out[k] + v) % PRIME;
    }
    out
}

fn trim(p: &mut Vec<u64>) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

/// Degree of `gcd(f, g)` in `F_p[t]`; both inputs nonzero.
fn univariate_gcd_degree(mut f: Vec<u64>, mut g: Vec<u64>) -> usize {
    trim(&mut f);
    trim(&mut g);
    while !g.is_empty() {
        let inv = powmod(*g.last().unwrap(), PRIME - 2);
        while f.len() >= g.len() {
            let q = mulmod(*f.last().unwrap(), inv);
            let shift = f.len() - g.len();
            for (i, &c) in g.iter().enumerate() {
                f[shift + i] = (f[shift + i] + PRIME - mulmod(q, c)) % PRIME;
            }
            trim(&mut f);
        }
        std::mem::swap(&mut f, &mut g);
    }
    f.len().saturating_sub(1)
}

/// Cheap sufficient test for a constant GCD.
///
/// For each variable both inputs depend on, evaluate the others at a fixed
/// point mod a prime. When the leading coefficient of `f` in that variable
/// survives, the true GCD keeps its degree there, so a constant image GCD
/// proves the true GCD has degree zero in that variable.
fn provably_coprime(f: &ZPoly, g: &ZPoly) -> bool {
    let common = f.support() & g.support();
    let nvars = f.nvars();
    let point: Vec<u64> = (0..nvars as u64).map(|i| 1_000_003 + 7919 * i * i + 104_729 * i).collect();
    (0..nvars).filter(|v| common & (1 << v) != 0).all(|var| {
        let fi = univariate_image(f, var, &point);
        if fi.last() == Some(&0) {
            return false;
        }
        let gi = univariate_image(g, var, &point);
        univariate_gcd_degree(fi, gi) == 0
    })
}

/// GCD of integer polynomials with positive leading coefficient.
pub fn zgcd(f: &ZPoly, g: &ZPoly) -> ZPoly {
    if f.is_zero() {
        return normalize_sign(g);
    }
    if g.is_zero() {
        return normalize_sign(f);
    }
    if f.is_constant() || g.is_constant() {
        let k = f.integer_content().gcd(&g.integer_content());
        return ZPoly::constant(f.nvars(), k);
    }
    if f == g {
        return normalize_sign(f);
    }
    if f.len() == 1 || g.len() == 1 {
        let m = f.monomial_content().gcd(&g.monomial_content());
        let k = f.integer_content().gcd(&g.integer_content());
        return ZPoly::monomial(f.nvars(), m, k);
    }
    match heu_gcd(f, g) {
        Some((h, _, _)) => normalize_sign(&h),
        None => prs_gcd(f, g),
    }
}

fn normalize_sign(p: &ZPoly) -> ZPoly {
    if p.leading_coefficient().is_negative() {
        p.neg()
    } else {
        p.clone()
    }
}

fn lowest_var(p: &ZPoly, q: &ZPoly) -> Option<usize> {
    let s = p.support() | q.support();
    (s != 0).then(|| s.trailing_zeros() as usize)
}

/// Balanced residue of `c` modulo `m`, in `(-m/2, m/2]`.
fn symmetric_mod(c: &BigInt, m: &BigInt) -> BigInt {
    let r = c.mod_floor(m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}

/// Recovers a polynomial in `var` from its value at `var = x`, reading the
/// coefficients as balanced base-`x` digits.
fn interpolate(h: &ZPoly, x: &BigInt, var: usize) -> ZPoly {
    let nvars = h.nvars();
    let mut rest = h.clone();
    let mut coeffs: Vec<ZPoly> = Vec::new();
    while !rest.is_zero() {
        let digit = Poly::from_terms(nvars, rest.terms().iter().map(|(m, c)| (*m, symmetric_mod(c, x))));
        let next = rest.sub(&digit);
        coeffs.push(digit);
        rest = Poly::from_terms(nvars, next.terms().iter().map(|(m, c)| (*m, c / x)));
    }
    let p = ZPoly::from_coefficients_in(nvars, var, &coeffs);
    normalize_sign(&p)
}

/// Heuristic GCD returning `(h, f/h, g/h)`; `None` when every attempt fails.
fn heu_gcd(f: &ZPoly, g: &ZPoly) -> Option<(ZPoly, ZPoly, ZPoly)> {
    let nvars = f.nvars();
    let cf = f.integer_content();
    let cg = g.integer_content();
    let content = cf.gcd(&cg);
    let f = f.div_integer(&content);
    let g = g.div_integer(&content);

    let var = match lowest_var(&f, &g) {
        Some(v) => v,
        None => {
            let a = f.leading_coefficient();
            let b = g.leading_coefficient();
            let h = a.gcd(&b);
            let k = &h * &content;
            return Some((ZPoly::constant(nvars, k), ZPoly::constant(nvars, a / &h), ZPoly::constant(nvars, b / &h)));
        }
    };
    if f.is_constant() || g.is_constant() {
        // After removing the common integer content the gcd is that content.
        return Some((ZPoly::constant(nvars, content), f, g));
    }

    let f_norm = f.max_norm();
    let g_norm = g.max_norm();
    let bound: BigInt = 2 * f_norm.clone().min(g_norm.clone()) + 29;
    let lf = f.leading_coefficient().abs();
    let lg = g.leading_coefficient().abs();
    let mut x = bound.clone().min(99 * bound.sqrt());
    let alt = 2 * (&f_norm / &lf).min(&g_norm / &lg) + 4;
    x = x.max(alt);

    for _ in 0..HEU_ATTEMPTS {
        let ff = f.eval_var(var, &x);
        let gg = g.eval_var(var, &x);
        if !ff.is_zero() && !gg.is_zero() {
            if let Some((h, cff, cfg)) = heu_gcd(&ff, &gg) {
                let h = interpolate(&h, &x, var);
                let h = h.primitive();
                if let (Some(cff), Some(cfg)) = (f.div_exact(&h), g.div_exact(&h)) {
                    let hk = h.scale(&content);
                    return Some((hk, cff, cfg));
                }
                let cff = interpolate(&cff, &x, var);
                if let Some(h2) = f.div_exact(&cff) {
                    if let Some(cfg2) = g.div_exact(&h2) {
                        return Some((h2.scale(&content), cff, cfg2));
                    }
                }
                let cfg = interpolate(&cfg, &x, var);
                if let Some(h3) = g.div_exact(&cfg) {
                    if let Some(cff3) = f.div_exact(&h3) {
                        return Some((h3.scale(&content), cff3, cfg));
                    }
                }
            }
        }
        x = 73794 * &x * x.sqrt().sqrt() / 27011;
    }
    None
}

/// Content of `p` viewed as a polynomial in `var` over the other variables.
fn content_in(p: &ZPoly, var: usize) -> ZPoly {
    let mut acc = ZPoly::zero(p.nvars());
    for c in p.coefficients_in(var) {
        if c.is_zero() {
            continue;
        }
        acc = zgcd(&acc, &c);
        if acc.is_one() {
            break;
        }
    }
    acc
}

/// Pseudo-remainder of `f` by `g` with respect to `var`.
fn pseudo_remainder(f: &ZPoly, g: &ZPoly, var: usize) -> ZPoly {
    let dg = g.degree_in(var);
    let g_coeffs = g.coefficients_in(var);
    let lc_g = g_coeffs[dg as usize].clone();
    let mut r = f.clone();
    while !r.is_zero() && r.degree_in(var) >= dg {
        let dr = r.degree_in(var);
        let lc_r = r.coefficients_in(var)[dr as usize].clone();
        let shift = Monomial::var(var);
        let mut t = lc_r;
        for _ in 0..(dr - dg) {
            t = t.mul_term(&shift, &BigInt::one());
        }
        r = r.mul(&lc_g).sub(&t.mul(g));
    }
    r
}

/// GCD through primitive pseudo-remainder sequences, recursive in the
/// variables.
fn prs_gcd(f: &ZPoly, g: &ZPoly) -> ZPoly {
    let var = match lowest_var(f, g) {
        Some(v) => v,
        None => return zgcd(f, g),
    };
    if f.degree_in(var) == 0 || g.degree_in(var) == 0 {
        // One side is free of `var`: the gcd is the gcd with the other's content.
        let (free, other) = if f.degree_in(var) == 0 { (f, g) } else { (g, f) };
        return zgcd(free, &content_in(other, var));
    }
    let cf = content_in(f, var);
    let cg = content_in(g, var);
    let c = zgcd(&cf, &cg);
    let mut a = f.div_exact(&cf).expect("content divides");
    let mut b = g.div_exact(&cg).expect("content divides");
    if a.degree_in(var) < b.degree_in(var) {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_zero() && b.degree_in(var) > 0 {
        let r = pseudo_remainder(&a, &b, var);
        a = b;
        b = if r.is_zero() {
            r
        } else {
            let cr = content_in(&r, var);
            r.div_exact(&cr).expect("content divides")
        };
    }
    let prim = if b.is_zero() { a } else { ZPoly::one(f.nvars()) };
    let prim = prim.primitive();
    normalize_sign(&c.mul(&prim))
}

/// Whether two rational functions `a/b` and `c/d` are equal, by
/// cross-multiplication.
pub fn cross_equal(a: &Poly, b: &Poly, c: &Poly, d: &Poly) -> bool {
    a.mul(d) == c.mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;

    fn p(s: &str) -> Poly {
        parse_poly(s, &["x1", "x2", "x3", "x4"]).unwrap()
    }

    #[test]
    fn univariate_common_factor() {
        let g = gcd(&p("x1^2-1"), &p("x1^2+2*x1+1"));
        assert_eq!(g, p("x1+1"));
    }

    #[test]
    fn multivariate_common_factor() {
        let common = p("x1*x2 + x3^2 - 7");
        let a = common.mul(&p("x1 - x4 + 3"));
        let b = common.mul(&p("x2^2 + x1*x3 + 1"));
        assert_eq!(gcd(&a, &b), common.monic());
    }

    #[test]
    fn coprime_inputs() {
        assert!(gcd(&p("x1 + x2"), &p("x1 - x2")).is_one());
    }

    #[test]
    fn monomial_inputs() {
        assert_eq!(gcd(&p("x1^3*x2"), &p("x1*x2^2 + x1^2*x2")), p("x1*x2"));
    }

    #[test]
    fn prs_agrees_with_heuristic() {
        let common = p("x1^2 + x2*x3 - 2*x4 + 1");
        let a = common.mul(&p("3*x1 - x2 + 5")).integer_primitive().1;
        let b = common.mul(&p("x3*x4 - x1^2")).integer_primitive().1;
        let heu = heu_gcd(&a, &b).unwrap().0;
        let prs = prs_gcd(&a, &b);
        assert_eq!(normalize_sign(&heu).primitive(), prs.primitive());
    }
}
