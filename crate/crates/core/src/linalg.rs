//! Exact linear algebra over the rational-function field and over Q.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::RationalExpr;

/// Square or rectangular matrix of rational functions, row-major.
pub type Matrix = Vec<Vec<RationalExpr>>;

/// Outcome of solving a linear system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Unique(Vec<RationalExpr>),
    Inconsistent,
    Underdetermined,
}

fn weight(e: &RationalExpr) -> usize {
    e.numerator().len() + e.denominator().len()
}

/// Row-reduces `m` in place to reduced echelon form, returning the pivot
/// columns among the first `ncols` columns.
fn row_reduce(m: &mut Matrix, ncols: usize) -> Vec<usize> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == rows {
            break;
        }
        let best = (r..rows).filter(|&i| !m[i][col].is_zero()).min_by_key(|&i| weight(&m[i][col]));
        let Some(p) = best else { continue };
        m.swap(r, p);
        let inv = m[r][col].recip().expect("pivot is nonzero");
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i == r || m[i][col].is_zero() {
                continue;
            }
            let factor = m[i][col].clone();
            for j in 0..m[i].len() {
                if m[r][j].is_zero() {
                    continue;
                }
                let delta = &factor * &m[r][j];
                m[i][j] = &m[i][j] - &delta;
            }
        }
        pivots.push(col);
        r += 1;
    }
    pivots
}

/// Inverse of a square matrix, `None` when singular.
pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let nvars = m.first()?.first()?.nvars();
    let mut aug: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { RationalExpr::one(nvars) } else { RationalExpr::zero(nvars) }));
            r
        })
        .collect();
    let pivots = row_reduce(&mut aug, n);
    if pivots.len() < n {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let nvars = a[0][0].nvars();
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| {
                    let prods: Vec<RationalExpr> = row
                        .iter()
                        .zip(b.iter())
                        .filter(|(x, r)| !x.is_zero() && !r[j].is_zero())
                        .map(|(x, r)| x * &r[j])
                        .collect();
                    RationalExpr::sum(nvars, prods.iter())
                })
                .collect()
        })
        .collect()
}

pub fn transpose(a: &Matrix) -> Matrix {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Solves `a x = b` for a possibly overdetermined system.
pub fn solve(a: &Matrix, b: &[RationalExpr]) -> Solution {
    let ncols = a.first().map(Vec::len).unwrap_or(0);
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = row_reduce(&mut aug, ncols);
    if aug.iter().skip(pivots.len()).any(|row| !row[ncols].is_zero()) {
        return Solution::Inconsistent;
    }
    if pivots.len() < ncols {
        return Solution::Underdetermined;
    }
    Solution::Unique(aug.iter().take(ncols).map(|row| row[ncols].clone()).collect())
}

/// Rank of a matrix over Q.
pub fn rank_q(m: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = m.to_vec();
    let rows = m.len();
    let cols = m.first().map(Vec::len).unwrap_or(0);
    let mut r = 0;
    for col in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..rows {
            if m[i][col].is_zero() {
                continue;
            }
            let f = &m[i][col] / &m[r][col];
            let (pivot, rest) = m.split_at_mut(i);
            for (x, y) in rest[0][col..cols].iter_mut().zip(&pivot[r][col..cols]) {
                *x -= &f * y;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Rank at a pseudo-random rational point, re-sampling when a denominator
/// vanishes there. The sample is deterministic in `seed`.
pub fn rank_at_generic_point(m: &Matrix, seed: u64) -> usize {
    let nvars = m.first().and_then(|r| r.first()).map(RationalExpr::nvars).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let point = random_point(&mut rng, nvars);
        let values: Option<Vec<Vec<BigRational>>> =
            m.iter().map(|row| row.iter().map(|e| e.eval(&point).ok()).collect()).collect();
        if let Some(values) = values {
            return rank_q(&values);
        }
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, nvars: usize) -> Vec<BigRational> {
    (0..nvars)
        .map(|_| {
            let p: i64 = rng.gen_range(-97..=97);
            let q: i64 = rng.gen_range(1..=31);
            BigRational::new(BigInt::from(p), BigInt::from(q))
        })
        .collect()
}

/// Whether every 2x2 minor vanishes identically, i.e. rank at most one over
/// the function field.
pub fn rank_at_most_one(m: &Matrix) -> bool {
    let rows = m.len();
    let cols = m.first().map(Vec::len).unwrap_or(0);
    for i in 0..rows {
        for k in i + 1..rows {
            for j in 0..cols {
                for l in j + 1..cols {
                    let minor = &(&m[i][j] * &m[k][l]) - &(&m[i][l] * &m[k][j]);
                    if !minor.is_zero() {
                        return false;
                    }
                }
            }
        }
    }
    true
}
