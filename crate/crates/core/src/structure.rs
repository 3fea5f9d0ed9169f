//! Conformally symplectic and conformally Fedosov structures on a chart.

use crate::check::{Check, Suite};
use crate::connection::Connection;
use crate::error::{Error, Result};
use crate::expr::RationalExpr;
use crate::linalg::{self, Solution};
use crate::tensor::{inverse_two_form, multi_indices, Chart, Tensor, Variance};

use Variance::Down;

/// A representative pair `(J, nabla)` together with its 1-forms `alpha`
/// (the Lee form) and `beta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FedosovStructure {
    pub chart: Chart,
    pub j: Tensor,
    pub j_inv: Tensor,
    pub conn: Connection,
    pub alpha: Tensor,
    pub beta: Tensor,
}

/// A change of representative `J -> W J` with `W = Omega^2`.
///
/// Only `W` is stored so that the whole calculus stays rational; the
/// 1-form is `Upsilon_a = (d_a W) / (2 W)`. Positivity of `W` on the working
/// domain is the caller's responsibility.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeTransform {
    pub w: RationalExpr,
    pub upsilon: Tensor,
}

impl GaugeTransform {
    pub fn new(w: RationalExpr) -> Result<Self> {
        let dim = w.nvars();
        let inv = w.recip()?;
        let half = RationalExpr::from_ratio(dim, 1, 2);
        let upsilon = Tensor::from_fn(dim, &[Down], |i| &(&w.derivative(i[0]) * &inv) * &half);
        Ok(Self { w, upsilon })
    }

    pub fn identity(dim: usize) -> Self {
        Self { w: RationalExpr::one(dim), upsilon: Tensor::zeros(dim, &[Down]) }
    }

    /// The transform undoing this one.
    pub fn inverse(&self) -> Self {
        Self { w: self.w.recip().expect("nonzero factor"), upsilon: self.upsilon.neg() }
    }

    /// `Omega^w` for an even weight `w`.
    pub fn power(&self, weight: i32) -> Result<RationalExpr> {
        if weight % 2 != 0 {
            return Err(Error::OddWeight(weight));
        }
        let k = weight / 2;
        let base = if k >= 0 { self.w.clone() } else { self.w.recip().expect("nonzero factor") };
        Ok(base.pow(k.unsigned_abs()))
    }

    /// `d_[a Upsilon_b]`, which vanishes for any gradient.
    pub fn closure_residual(&self) -> Tensor {
        self.upsilon.partial().antisymmetrize(&[0, 1]).expect("lower slots")
    }
}

/// `2 alpha_[a J_bc]`.
fn two_alt(alpha: &Tensor, j: &Tensor) -> Tensor {
    alpha.outer(j).antisymmetrize(&[0, 1, 2]).expect("lower slots").scale_ratio(2, 1)
}

/// `beta_(a J_b)c`.
fn sym_first_pair(beta: &Tensor, j: &Tensor) -> Tensor {
    beta.outer(j).symmetrize(&[0, 1]).expect("lower slots")
}

fn check_form(j: &Tensor) -> Result<Tensor> {
    if j.variance() != [Down, Down] {
        return Err(Error::Variance("J must have two lower indices".into()));
    }
    inverse_two_form(j)
}

fn solve_lee_form(chart: &Chart, j: &Tensor, skew: &Tensor) -> Result<Tensor> {
    let dim = chart.dim();
    let two_thirds = chart.ratio(2, 3);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for idx in multi_indices(dim, 3) {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        if !(a < b && b < c) {
            continue;
        }
        // 2 alpha_[a J_bc] = (2/3)(alpha_a J_bc + alpha_b J_ca + alpha_c J_ab)
        let row = (0..dim)
            .map(|e| {
                let mut k = chart.zero();
                if e == a {
                    k += j.get(&[b, c]);
                }
                if e == b {
                    k += j.get(&[c, a]);
                }
                if e == c {
                    k += j.get(&[a, b]);
                }
                &k * &two_thirds
            })
            .collect();
        rows.push(row);
        rhs.push(skew.get(&idx).clone());
    }
    match linalg::solve(&rows, &rhs) {
        Solution::Unique(v) => Ok(Tensor::from_fn(dim, &[Down], |i| v[i[0]].clone())),
        Solution::Inconsistent => Err(Error::Equation {
            equation: "structure.alternation".into(),
            witness: "no 1-form alpha solves the alternated equation".into(),
        }),
        Solution::Underdetermined => Err(Error::Equation {
            equation: "structure.alternation".into(),
            witness: "the alternated equation does not determine alpha".into(),
        }),
    }
}

/// Lee form from the trace `J^{bc} nabla_[a J_bc] = (4/3)(n-1) alpha_a`.
pub fn lee_form_by_trace(chart: &Chart, j_inv: &Tensor, skew: &Tensor) -> Tensor {
    let n = chart.n() as i64;
    let trace = Tensor::einsum("bc,abc->a", &[j_inv, skew]).expect("valid spec");
    trace.scale_ratio(3, 4 * (n - 1))
}

/// Candidate 1-forms `(alpha, beta)` for the pair `(J, nabla)`.
///
/// In dimension four the alternated equation is solved as a linear system;
/// in higher dimension the trace formula is used. Callers validate the
/// result with [`check_structure`].
pub fn lee_and_beta(chart: &Chart, j: &Tensor, conn: &Connection) -> Result<(Tensor, Tensor)> {
    let j_inv = check_form(j)?;
    let nj = conn.covariant_derivative(j);
    let skew = nj.antisymmetrize(&[0, 1, 2]).expect("lower slots");
    let alpha =
        if chart.dim() == 4 { solve_lee_form(chart, j, &skew)? } else { lee_form_by_trace(chart, &j_inv, &skew) };
    let sym = nj.symmetrize(&[0, 1]).expect("lower slots");
    let n = chart.n() as i64;
    let beta = Tensor::einsum("bc,abc->a", &[&j_inv, &sym]).expect("valid spec").scale_ratio(2, 2 * n + 1);
    Ok((alpha, beta))
}

impl FedosovStructure {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn n(&self) -> usize {
        self.chart.n()
    }

    pub fn nabla_j(&self) -> Tensor {
        self.conn.covariant_derivative(&self.j)
    }

    /// `alpha^b = J^{bc} alpha_c`.
    pub fn alpha_up(&self) -> Tensor {
        self.alpha.raise(0, &self.j_inv).expect("lower slot")
    }

    /// Residuals of the three defining equations and closure of `alpha`.
    pub fn defining_suite(&self) -> Suite {
        let nj = self.nabla_j();
        let mut suite = Suite::new();
        let alt = nj.antisymmetrize(&[0, 1, 2]).expect("lower slots").sub(&two_alt(&self.alpha, &self.j));
        suite.push(Check::vanishing("structure.alternation", &alt, &self.chart));
        let closure = self.conn.covariant_derivative(&self.alpha).antisymmetrize(&[0, 1]).expect("lower");
        suite.push(Check::vanishing("structure.lee-closed", &closure, &self.chart));
        let sym = nj.symmetrize(&[0, 1]).expect("lower").sub(&sym_first_pair(&self.beta, &self.j));
        suite.push(Check::vanishing("structure.symmetrization", &sym, &self.chart));
        suite
    }

    /// Residual of the reconstruction
    /// `nabla_a J_bc = 2 alpha_[a J_bc] + 2/3 beta_(a J_b)c - 2/3 beta_(a J_c)b`.
    pub fn reconstruction_residual(&self) -> Tensor {
        let first = sym_first_pair(&self.beta, &self.j);
        let second = first.permute(&[0, 2, 1]);
        let rhs = two_alt(&self.alpha, &self.j).add(&first.sub(&second).scale_ratio(2, 3));
        self.nabla_j().sub(&rhs)
    }

    /// `nabla_a J_bc - (J_ab alpha_c - J_ac alpha_b)`.
    pub fn master_residual(&self) -> Tensor {
        let ja = self.j.outer(&self.alpha);
        let rhs = ja.sub(&ja.permute(&[0, 2, 1]));
        self.nabla_j().sub(&rhs)
    }

    /// `nabla_a J^bc - (alpha^b delta_a^c - alpha^c delta_a^b)`.
    pub fn raised_master_residual(&self) -> Tensor {
        let lhs = self.conn.covariant_derivative(&self.j_inv);
        let da = Tensor::delta(self.dim()).outer(&self.alpha_up());
        // da[a, c, b] = delta_a^c alpha^b
        let rhs = da.permute(&[0, 2, 1]).sub(&da);
        lhs.sub(&rhs)
    }

    pub fn master_suite(&self) -> Suite {
        let mut suite = Suite::new();
        suite.push(Check::vanishing("master.lower", &self.master_residual(), &self.chart));
        suite.push(Check::vanishing("master.upper", &self.raised_master_residual(), &self.chart));
        suite
    }

    pub fn satisfies_master(&self) -> bool {
        self.master_residual().is_zero()
    }

    fn require(suite: Suite) -> Result<()> {
        if let Some(bad) = suite.failures().next() {
            let witness = match &bad.witness {
                Some(w) => format!("component {:?} is {}", w.index, w.value),
                None => bad.note.clone().unwrap_or_default(),
            };
            return Err(Error::Equation { equation: bad.name.clone(), witness });
        }
        Ok(())
    }

    /// Shifts the connection so that `alpha + beta = 0`, which is the unique
    /// projective representative satisfying the master equation.
    pub fn normalize_to_master(&self) -> Result<Self> {
        let nu = self.alpha.add(&self.beta).scale_ratio(1, 3);
        let conn = self.conn.projective_shift(&nu);
        let normalized = Self {
            chart: self.chart.clone(),
            j: self.j.clone(),
            j_inv: self.j_inv.clone(),
            conn,
            alpha: self.alpha.clone(),
            beta: self.alpha.neg(),
        };
        Self::require(normalized.defining_suite())?;
        Self::require(normalized.master_suite())?;
        Ok(normalized)
    }

    /// Simultaneous change `J -> W J`, `nabla -> nabla` shifted by `Upsilon`.
    pub fn rescale(&self, g: &GaugeTransform) -> Self {
        let j = self.j.scale(&g.w);
        let winv = g.w.recip().expect("nonzero factor");
        Self {
            chart: self.chart.clone(),
            j,
            j_inv: self.j_inv.scale(&winv),
            conn: self.conn.projective_shift(&g.upsilon),
            alpha: self.alpha.add(&g.upsilon),
            beta: self.beta.sub(&g.upsilon),
        }
    }

    /// Rescales by a potential `W` whose `Upsilon` cancels `alpha`, so that
    /// the new pair is a genuine Fedosov manifold (`nabla J = 0`).
    pub fn to_fedosov_gauge(&self, w: &RationalExpr) -> Result<Self> {
        let g = GaugeTransform::new(w.clone())?;
        let mismatch = g.upsilon.add(&self.alpha);
        if let Some((idx, v)) = mismatch.first_nonzero() {
            return Err(Error::GaugeMismatch(format!(
                "Upsilon + alpha at {:?} is {}",
                idx.iter().map(|i| i + 1).collect::<Vec<_>>(),
                self.chart.display(v)
            )));
        }
        let out = self.rescale(&g);
        let nj = out.nabla_j();
        Self::require(Suite { checks: vec![Check::vanishing("fedosov.parallel", &nj, &self.chart)] })?;
        Ok(out)
    }

    pub fn is_fedosov_gauge(&self) -> bool {
        self.alpha.is_zero() && self.nabla_j().is_zero()
    }
}

/// Computes `alpha` and `beta` for `(J, nabla)` and verifies the defining
/// equations exactly.
pub fn check_structure(chart: &Chart, j: &Tensor, conn: &Connection) -> Result<FedosovStructure> {
    let j_inv = check_form(j)?;
    let (alpha, beta) = lee_and_beta(chart, j, conn)?;
    let s = FedosovStructure { chart: chart.clone(), j: j.clone(), j_inv, conn: conn.clone(), alpha, beta };
    FedosovStructure::require(s.defining_suite())?;
    Ok(s)
}

/// Projective and conformal behaviour of the symmetrized equation.
///
/// Verifies the shift law of `nabla_(a J_b)c` for skew `J`, that the
/// symmetrized equation survives a projective change with
/// `beta -> beta + factor * nu` (the correct factor is -3), and that under
/// `J -> W J` it survives with `beta -> beta + 2 Upsilon`.
pub fn projective_invariance_suite_with_factor(
    chart: &Chart,
    j: &Tensor,
    conn: &Connection,
    nu: &Tensor,
    gauge: &GaugeTransform,
    factor: i64,
) -> Result<Suite> {
    let mut suite = Suite::new();
    let shifted = conn.projective_shift(nu);
    let sym = |c: &Connection, form: &Tensor| c.covariant_derivative(form).symmetrize(&[0, 1]).expect("lower");
    let lemma = sym(&shifted, j).sub(&sym(conn, j)).add(&sym_first_pair(nu, j).scale_ratio(3, 1));
    suite.push(Check::vanishing("projective.shift-law", &lemma, chart));

    let (_, beta) = lee_and_beta(chart, j, conn)?;
    let beta_hat = beta.add(&nu.scale_ratio(factor, 1));
    let (_, recomputed) = lee_and_beta(chart, j, &shifted)?;
    suite.push(Check::vanishing("projective.beta-shift", &recomputed.sub(&beta_hat), chart));
    let residual = sym(&shifted, j).sub(&sym_first_pair(&beta_hat, j));
    suite.push(Check::vanishing("projective.symmetrization-invariant", &residual, chart));

    let j_hat = j.scale(&gauge.w);
    let beta_conf = beta.add(&gauge.upsilon.scale_ratio(2, 1));
    let residual = sym(conn, &j_hat).sub(&sym_first_pair(&beta_conf, &j_hat));
    suite.push(Check::vanishing("conformal.symmetrization-invariant", &residual, chart));
    Ok(suite)
}

pub fn projective_invariance_suite(
    chart: &Chart,
    j: &Tensor,
    conn: &Connection,
    nu: &Tensor,
    gauge: &GaugeTransform,
) -> Result<Suite> {
    projective_invariance_suite_with_factor(chart, j, conn, nu, gauge, -3)
}

/// The standard constant symplectic form `dx1^dx2 + dx3^dx4 + ...`.
pub fn darboux_form(chart: &Chart) -> Tensor {
    Tensor::from_fn(chart.dim(), &[Down, Down], |i| {
        let (a, b) = (i[0], i[1]);
        if a % 2 == 0 && b == a + 1 {
            chart.one()
        } else if b % 2 == 0 && a == b + 1 {
            chart.int(-1)
        } else {
            chart.zero()
        }
    })
}
