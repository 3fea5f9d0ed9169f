//! Torsion-free affine connections given by Christoffel symbols.
//!
//! Sign conventions: `nabla_a phi_b = d_a phi_b - Gamma^c_ab phi_c` and
//! `nabla_a X^c = d_a X^c + Gamma^c_ab X^b`. The new derivative index is
//! always the first slot of the result.

use crate::check::{Check, Suite};
use crate::error::{Error, Result};
use crate::expr::RationalExpr;
use crate::linalg;
use crate::tensor::{multi_indices, Chart, Tensor, Variance};

use Variance::{Down, Up};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    /// `Gamma^c_ab` stored at index `[c, a, b]`.
    gamma: Tensor,
}

impl Connection {
    pub fn new(gamma: Tensor) -> Result<Self> {
        if gamma.variance() != [Up, Down, Down] {
            return Err(Error::Variance("Christoffel symbols have variance (up, down, down)".into()));
        }
        let dim = gamma.dim();
        for idx in multi_indices(dim, 3) {
            if idx[1] < idx[2] && gamma.get(&idx) != gamma.get(&[idx[0], idx[2], idx[1]]) {
                let label: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
                return Err(Error::Torsion(label.join(",")));
            }
        }
        Ok(Self { gamma })
    }

    pub fn flat(dim: usize) -> Self {
        Self { gamma: Tensor::zeros(dim, &[Up, Down, Down]) }
    }

    pub fn gamma(&self) -> &Tensor {
        &self.gamma
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn is_flat_chart(&self) -> bool {
        self.gamma.is_zero()
    }

    /// Covariant derivative of an arbitrary tensor.
    pub fn covariant_derivative(&self, t: &Tensor) -> Tensor {
        let dim = t.dim();
        assert_eq!(dim, self.dim(), "chart mismatch");
        let variance = t.variance().to_vec();
        let mut out_variance = vec![Down];
        out_variance.extend_from_slice(&variance);
        let mut src = vec![0; t.rank()];
        Tensor::from_fn(dim, &out_variance, |idx| {
            let a = idx[0];
            let rest = &idx[1..];
            let mut terms = vec![t.get(rest).derivative(a)];
            for (slot, v) in variance.iter().enumerate() {
                for e in 0..dim {
                    src.copy_from_slice(rest);
                    src[slot] = e;
                    let comp = t.get(&src);
                    if comp.is_zero() {
                        continue;
                    }
                    match v {
                        Up => {
                            let g = self.gamma.get(&[rest[slot], a, e]);
                            if !g.is_zero() {
                                terms.push(g * comp);
                            }
                        }
                        Down => {
                            let g = self.gamma.get(&[e, a, rest[slot]]);
                            if !g.is_zero() {
                                terms.push(-(g * comp));
                            }
                        }
                    }
                }
            }
            RationalExpr::sum(dim, terms.iter())
        })
    }

    /// `Gamma^c_ab + nu_a delta_b^c + nu_b delta_a^c`, which gives
    /// `nabla'_a phi_b = nabla_a phi_b - nu_a phi_b - nu_b phi_a`.
    pub fn projective_shift(&self, nu: &Tensor) -> Self {
        assert_eq!(nu.variance(), [Down]);
        let gamma = Tensor::from_fn(self.dim(), &[Up, Down, Down], |i| {
            let (c, a, b) = (i[0], i[1], i[2]);
            let mut v = self.gamma.get(i).clone();
            if b == c {
                v += nu.get(&[a]);
            }
            if a == c {
                v += nu.get(&[b]);
            }
            v
        });
        Self { gamma }
    }

    /// Levi-Civita connection of a non-degenerate symmetric metric.
    pub fn levi_civita(g: &Tensor) -> Result<Self> {
        if g.variance() != [Down, Down] {
            return Err(Error::Variance("a metric has two lower indices".into()));
        }
        if !g.has_swap_symmetry(0, 1, 1) {
            return Err(Error::NotSymmetric("metric".into()));
        }
        let dim = g.dim();
        let inv = linalg::inverse(&g.to_matrix()).ok_or_else(|| Error::Singular("metric".into()))?;
        let dg = g.partial();
        let half = RationalExpr::from_ratio(dim, 1, 2);
        let gamma = Tensor::from_fn(dim, &[Up, Down, Down], |i| {
            let (c, a, b) = (i[0], i[1], i[2]);
            let terms: Vec<RationalExpr> = (0..dim)
                .filter(|&d| !inv[c][d].is_zero())
                .map(|d| {
                    let bracket = dg.get(&[a, d, b]) + dg.get(&[b, d, a]) - dg.get(&[d, a, b]);
                    &inv[c][d] * &bracket
                })
                .collect();
            &RationalExpr::sum(dim, terms.iter()) * &half
        });
        Ok(Self { gamma })
    }

    /// `R_ab^c_d` with variance (down, down, up, down), defined by
    /// `(nabla_a nabla_b - nabla_b nabla_a) X^c = R_ab^c_d X^d`.
    pub fn riemann(&self) -> Tensor {
        let dim = self.dim();
        let dgamma = self.gamma.partial();
        let quad = Tensor::einsum("cae,ebd->abcd", &[&self.gamma, &self.gamma]).expect("valid spec");
        Tensor::from_fn(dim, &[Down, Down, Up, Down], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let lin = dgamma.get(&[a, c, b, d]) - dgamma.get(&[b, c, a, d]);
            &lin + &(quad.get(&[a, b, c, d]) - quad.get(&[b, a, c, d]))
        })
    }
}

/// Residuals of the algebraic and differential Bianchi identities for `r`.
pub fn bianchi_suite(conn: &Connection, r: &Tensor, chart: &Chart) -> Suite {
    let mut suite = Suite::new();
    let alg = r.antisymmetrize(&[0, 1, 3]).expect("lower slots");
    suite.push(Check::vanishing("bianchi.algebraic", &alg, chart));
    let diff = conn.covariant_derivative(r).antisymmetrize(&[0, 1, 2]).expect("lower slots");
    suite.push(Check::vanishing("bianchi.differential", &diff, chart));
    suite
}

/// Whether both Bianchi identities hold exactly.
pub fn bianchi_check(conn: &Connection, r: &Tensor, chart: &Chart) -> bool {
    bianchi_suite(conn, r, chart).all_passed()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart::standard(4).unwrap()
    }

    /// Normalized connection of the dilation-invariant structure on R^4 \ {0}.
    fn dilation(c: &Chart) -> Connection {
        let r2 = c.norm_squared();
        let nu = Tensor::from_fn(4, &[Down], |i| (-c.coord(i[0])).checked_div(&r2).unwrap());
        Connection::flat(4).projective_shift(&nu)
    }

    fn poly_field(c: &Chart, seed: i64) -> Tensor {
        Tensor::from_fn(4, &[Up], |i| {
            let k = seed + i[0] as i64;
            c.int(k) * c.coord(i[0]).pow(2) * c.coord((i[0] + 1) % 4) + c.coord((i[0] + 3) % 4)
        })
    }

    #[test]
    fn flat_derivative_is_partial() {
        let c = chart();
        let x = poly_field(&c, 2);
        assert_eq!(Connection::flat(4).covariant_derivative(&x), x.partial());
    }

    #[test]
    fn delta_is_parallel() {
        let c = chart();
        assert!(dilation(&c).covariant_derivative(&Tensor::delta(4)).is_zero());
    }

    #[test]
    fn dilation_derivative_display() {
        let c = chart();
        let conn = dilation(&c);
        let phi = Tensor::from_fn(4, &[Down], |i| c.coord(i[0]).pow(3) + c.coord((i[0] + 2) % 4));
        let r2 = c.norm_squared();
        let expected = Tensor::from_fn(4, &[Down, Down], |i| {
            let (a, b) = (i[0], i[1]);
            let extra = &(c.coord(a) * phi.get(&[b])) + &(c.coord(b) * phi.get(&[a]));
            phi.get(&[b]).derivative(a) + extra.checked_div(&r2).unwrap()
        });
        assert_eq!(conn.covariant_derivative(&phi), expected);
    }

    #[test]
    fn shift_group_law_and_leibniz() {
        let c = chart();
        let nu = Tensor::from_fn(4, &[Down], |i| c.coord(i[0]) * c.coord((i[0] + 1) % 4));
        let base = dilation(&c);
        assert_eq!(base.projective_shift(&nu).projective_shift(&nu.neg()), base);
        assert_eq!(base.projective_shift(&Tensor::zeros(4, &[Down])), base);
        let phi = Tensor::from_fn(4, &[Down], |i| c.coord((i[0] + 1) % 4).pow(2));
        let shifted = base.projective_shift(&nu).covariant_derivative(&phi);
        let expected = base.covariant_derivative(&phi).sub(&nu.outer(&phi)).sub(&phi.outer(&nu));
        assert_eq!(shifted, expected);
    }

    #[test]
    fn symmetrized_skew_form_shift() {
        let c = chart();
        let j = Tensor::from_fn(4, &[Down, Down], |i| {
            let (a, b) = (i[0], i[1]);
            if a == b {
                c.zero()
            } else {
                let p = c.coord(a.min(b)) * c.coord(a.max(b)) + c.int((a.min(b) + 2 * a.max(b)) as i64);
                if a < b {
                    p
                } else {
                    -p
                }
            }
        });
        let nu = Tensor::from_fn(4, &[Down], |i| c.coord(i[0]).pow(2) - c.coord(3 - i[0]));
        let base = Connection::flat(4);
        let sym = |t: &Tensor| t.symmetrize(&[0, 1]).unwrap();
        let lhs = sym(&base.projective_shift(&nu).covariant_derivative(&j));
        let rhs = sym(&base.covariant_derivative(&j)).sub(&sym(&nu.outer(&j)).scale(&c.int(3)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn riemann_sign_matches_commutator() {
        let c = chart();
        let conn = dilation(&c).projective_shift(&Tensor::from_fn(4, &[Down], |i| c.coord(i[0]) * c.coord(3 - i[0])));
        let r = conn.riemann();
        let x = poly_field(&c, 5);
        let nnx = conn.covariant_derivative(&conn.covariant_derivative(&x));
        let commutator = nnx.sub(&nnx.permute(&[1, 0, 2]));
        let rx = Tensor::einsum("abcd,d->abc", &[&r, &x]).unwrap();
        assert_eq!(commutator, rx);
        let f = Tensor::scalar(c.parse("x1^2*x3 - x4").unwrap());
        let nnf = conn.covariant_derivative(&conn.covariant_derivative(&f));
        assert!(nnf.sub(&nnf.permute(&[1, 0])).is_zero());
    }

    #[test]
    fn levi_civita_basics() {
        let c = chart();
        let euclid = Tensor::from_fn(4, &[Down, Down], |i| if i[0] == i[1] { c.one() } else { c.zero() });
        assert!(Connection::levi_civita(&euclid).unwrap().is_flat_chart());
        let g = Tensor::from_fn(4, &[Down, Down], |i| {
            if i[0] == i[1] {
                c.one() + c.coord(i[0]).pow(2)
            } else if i[0] + i[1] == 3 {
                c.coord(0) * c.coord(3)
            } else {
                c.zero()
            }
        });
        let lc = Connection::levi_civita(&g).unwrap();
        assert!(lc.covariant_derivative(&g).is_zero());
        let lowered = Tensor::einsum("abed,ec->abcd", &[&lc.riemann(), &g]).unwrap();
        assert!(lowered.add(&lowered.permute(&[0, 1, 3, 2])).is_zero());
        let mut bad = euclid.clone();
        bad.set(&[0, 1], c.one());
        assert_eq!(Connection::levi_civita(&bad), Err(Error::NotSymmetric("metric".into())));
    }

    #[test]
    fn bianchi_identities() {
        let c = chart();
        let flat = Connection::flat(4);
        assert!(bianchi_check(&flat, &flat.riemann(), &c));
        let conn = dilation(&c);
        let r = conn.riemann();
        assert!(bianchi_check(&conn, &r, &c));
        let mut bad = r.clone();
        bad.set(&[0, 1, 2, 3], r.get(&[0, 1, 2, 3]) + &c.coord(0));
        assert!(!bianchi_check(&conn, &bad, &c));
    }

    #[test]
    fn torsion_rejected() {
        let c = chart();
        let mut g = Tensor::zeros(4, &[Up, Down, Down]);
        g.set(&[0, 1, 2], c.one());
        assert_eq!(Connection::new(g), Err(Error::Torsion("1,2,3".into())));
    }
}
