//! Concrete structures with known answers: the flat Darboux model, the
//! dilation-invariant structure on `R^2n \ {0}`, and `CP^2` with its
//! Fubini-Study Kähler structure.

use num_rational::BigRational;
use num_traits::Signed;

use crate::check::{Check, Suite};
use crate::connection::{bianchi_suite, Connection};
use crate::curvature::{full_decompose, CurvatureDecomposition};
use crate::expr::RationalExpr;
use crate::linalg::{self, Matrix};
use crate::structure::{check_structure, darboux_form, FedosovStructure};
use crate::tensor::{Chart, Tensor, Variance};
use crate::tractor::{self, TractorContext};
use crate::{Error, Result};

use Variance::{Down, Up};

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Stated in the literature for this example.
    Published,
    /// Computed here by an independent construction.
    Derived,
    /// Immediate from the definitions.
    Baseline,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Quantity {
    Tensor(Tensor),
    Matrix(Matrix),
    Rank(usize),
    Scalar(BigRational),
}

#[derive(Clone, Debug)]
pub struct Expected {
    pub name: &'static str,
    pub provenance: Provenance,
    pub value: Quantity,
}

/// A structure together with the values it is known to produce.
#[derive(Clone, Debug)]
pub struct ExampleSpec {
    pub name: &'static str,
    pub n: usize,
    /// The pair as first written down.
    pub given: FedosovStructure,
    /// The representative satisfying the master equation.
    pub master: FedosovStructure,
    /// `W` with `master.to_fedosov_gauge(W)` a genuine Fedosov manifold.
    pub fedosov_factor: RationalExpr,
    pub fedosov: FedosovStructure,
    pub expected: Vec<Expected>,
    /// Scale `lambda` with `R_abcd = lambda * (model curvature)`, `CP^n` only.
    pub curvature_scale: Option<BigRational>,
}

pub const NAMES: [&str; 3] = ["flat_darboux", "dilation", "cp2"];

pub fn by_name(name: &str) -> Result<ExampleSpec> {
    match name {
        "flat_darboux" => build_flat_darboux(2),
        "dilation" => build_dilation_example(2),
        "cp2" => build_cpn(2),
        other => Err(Error::Shape(format!("unknown example `{other}`"))),
    }
}

fn expect(name: &'static str, provenance: Provenance, value: Quantity) -> Expected {
    Expected { name, provenance, value }
}

fn zero_form(dim: usize, rank: usize) -> Quantity {
    Quantity::Tensor(Tensor::zeros(dim, &vec![Down; rank]))
}

/// `diag(-1, -Phi, -X)` as a matrix, built without the tractor module.
fn block_theta(phi: &Tensor, x: &RationalExpr) -> Matrix {
    let dim = phi.dim();
    let size = dim + 2;
    let mut m = vec![vec![RationalExpr::zero(dim); size]; size];
    m[0][0] = RationalExpr::from_integer(dim, -1);
    for b in 0..dim {
        for c in 0..dim {
            m[b + 1][c + 1] = -phi.get(&[b, c]);
        }
    }
    m[size - 1][size - 1] = -x;
    m
}

pub fn build_flat_darboux(n: usize) -> Result<ExampleSpec> {
    let chart = Chart::standard(2 * n)?;
    let dim = chart.dim();
    let s = check_structure(&chart, &darboux_form(&chart), &Connection::flat(dim))?;
    let use_b = Provenance::Baseline;
    let expected = vec![
        expect("alpha", use_b, zero_form(dim, 1)),
        expect("beta", use_b, zero_form(dim, 1)),
        expect("v", use_b, zero_form(dim, 4)),
        expect("phi", use_b, zero_form(dim, 2)),
        expect("p", use_b, zero_form(dim, 2)),
        expect("theta", use_b, Quantity::Matrix(block_theta(&Tensor::zeros(dim, &[Down, Down]), &chart.zero()))),
        expect("theta_rank", use_b, Quantity::Rank(1)),
    ];
    Ok(ExampleSpec {
        name: "flat_darboux",
        n,
        given: s.clone(),
        master: s.clone(),
        fedosov_factor: chart.one(),
        fedosov: s,
        expected,
        curvature_scale: None,
    })
}

/// `J = omega / |x|^2` with the flat connection.
pub fn build_dilation_example(n: usize) -> Result<ExampleSpec> {
    let chart = Chart::standard(2 * n)?;
    let dim = chart.dim();
    let r2 = chart.norm_squared();
    let inv = r2.recip()?;
    let j = darboux_form(&chart).scale(&inv);
    let given = check_structure(&chart, &j, &Connection::flat(dim))?;
    let master = given.normalize_to_master()?;
    let fedosov = master.to_fedosov_gauge(&r2)?;

    let x_over = |k: i64| Tensor::from_fn(dim, &[Down], |i| &(&chart.coord(i[0]) * &inv) * &chart.int(k));
    // nabla_a phi_b = d_a phi_b + (x_a phi_b + x_b phi_a) / |x|^2
    let gamma = Tensor::from_fn(dim, &[Up, Down, Down], |i| {
        let (c, a, b) = (i[0], i[1], i[2]);
        let mut e = chart.zero();
        if b == c {
            e = &e - &chart.coord(a);
        }
        if a == c {
            e = &e - &chart.coord(b);
        }
        &e * &inv
    });
    let inv2 = &inv * &inv;
    let size = dim + 2;
    // The matrix displayed for this example, entry by entry.
    let theta = {
        let mut m = vec![vec![chart.zero(); size]; size];
        m[0][0] = chart.int(-1);
        m[0][size - 1] = -&inv;
        m[size - 1][0] = -&inv;
        m[size - 1][size - 1] = -&inv2;
        for b in 0..dim {
            let xb = chart.coord(b);
            m[0][b + 1] = &xb * &inv;
            m[b + 1][0] = &xb * &inv;
            m[b + 1][size - 1] = &xb * &inv2;
            m[size - 1][b + 1] = &xb * &inv2;
            for c in 0..dim {
                m[b + 1][c + 1] = -&(&(&xb * &chart.coord(c)) * &inv2);
            }
        }
        m
    };
    let pubd = Provenance::Published;
    let expected = vec![
        expect("alpha", pubd, Quantity::Tensor(x_over(-1))),
        expect("beta", pubd, Quantity::Tensor(x_over(-2))),
        expect("gamma", pubd, Quantity::Tensor(gamma)),
        expect("v", pubd, zero_form(dim, 4)),
        expect("phi", pubd, zero_form(dim, 2)),
        expect("theta", pubd, Quantity::Matrix(theta)),
        expect("theta_rank", pubd, Quantity::Rank(1)),
    ];
    Ok(ExampleSpec { name: "dilation", n, given, master, fedosov_factor: r2, fedosov, expected, curvature_scale: None })
}

/// Complex structure with `I d_1 = d_2`, `I d_3 = d_4`, ...; entries `I^c_a`
/// stored at `[c][a]`.
fn complex_structure(dim: usize) -> Tensor {
    Tensor::from_fn(dim, &[Up, Down], |i| {
        let (c, a) = (i[0], i[1]);
        if a % 2 == 0 && c == a + 1 {
            RationalExpr::one(dim)
        } else if a % 2 == 1 && c + 1 == a {
            RationalExpr::from_integer(dim, -1)
        } else {
            RationalExpr::zero(dim)
        }
    })
}

/// `R_abcd` of the model: `g_bd J_ac - g_ad J_bc - g_ac J_bd + g_bc J_ad + 2 J_ab g_cd`.
pub fn model_curvature(g: &Tensor, j: &Tensor) -> Tensor {
    let gj = |gs: [usize; 2], js: [usize; 2]| {
        Tensor::from_fn(g.dim(), &[Down; 4], |i| g.get(&[i[gs[0]], i[gs[1]]]) * j.get(&[i[js[0]], i[js[1]]]))
    };
    gj([1, 3], [0, 2])
        .sub(&gj([0, 3], [1, 2]))
        .sub(&gj([0, 2], [1, 3]))
        .add(&gj([1, 2], [0, 3]))
        .add(&gj([2, 3], [0, 1]).scale_ratio(2, 1))
}

/// The constant `c` with `a = c b`, if there is one.
pub fn constant_ratio(a: &Tensor, b: &Tensor) -> Option<BigRational> {
    let (idx, bv) = b.first_nonzero()?;
    let c = a.get(&idx).checked_div(bv).ok()?.constant_value()?;
    let cexpr = RationalExpr::constant(a.dim(), c.clone());
    a.sub(&b.scale(&cexpr)).is_zero().then_some(c)
}

/// Fubini-Study metric `g = (H + I^T H I)/2` with `H` the real Hessian of
/// `log(1 + |x|^2)`, and `J_ab = I^c_a g_cb`.
pub fn fubini_study(chart: &Chart) -> (Tensor, Tensor) {
    let dim = chart.dim();
    let q = &chart.one() + &chart.norm_squared();
    let qi = q.recip().expect("positive");
    let qi2 = &qi * &qi;
    let h = Tensor::from_fn(dim, &[Down, Down], |i| {
        let mut e = &(&chart.coord(i[0]) * &chart.coord(i[1])) * &(&qi2 * &chart.int(-4));
        if i[0] == i[1] {
            e = &e + &(&qi * &chart.int(2));
        }
        e
    });
    let cx = complex_structure(dim);
    let ihi = Tensor::einsum("ca,cd,db->ab", &[&cx, &h, &cx]).expect("valid spec");
    let g = h.add(&ihi).scale_ratio(1, 2);
    let j = Tensor::einsum("ca,cb->ab", &[&cx, &g]).expect("valid spec");
    (g, j)
}

pub fn build_cpn(n: usize) -> Result<ExampleSpec> {
    let chart = Chart::standard(2 * n)?;
    let dim = chart.dim();
    let (g, j) = fubini_study(&chart);
    let conn = Connection::levi_civita(&g)?;
    let s = check_structure(&chart, &j, &conn)?;
    for (name, t) in [("kahler.metric-parallel", conn.covariant_derivative(&g)), ("kahler.form-parallel", s.nabla_j())]
    {
        if let Some((idx, v)) = t.first_nonzero() {
            return Err(Error::Equation { equation: name.into(), witness: format!("{idx:?}: {}", chart.display(v)) });
        }
    }
    let d = full_decompose(&s);
    let lambda = constant_ratio(&d.r_low, &model_curvature(&g, &j)).ok_or_else(|| Error::Equation {
        equation: "cpn.curvature-scale".into(),
        witness: "curvature is not a constant multiple of the model".into(),
    })?;
    if !lambda.is_positive() {
        return Err(Error::Equation { equation: "cpn.curvature-scale".into(), witness: format!("scale {lambda}") });
    }
    let phi_scale = constant_ratio(&d.phi, &g).ok_or_else(|| Error::Equation {
        equation: "cpn.phi-scale".into(),
        witness: "Phi is not a constant multiple of g".into(),
    })?;
    let nn = n as i64;
    let lam = RationalExpr::constant(dim, phi_scale.clone());
    let phi = g.scale(&lam);
    let p = g.scale(&lam).scale_ratio(2 * (nn + 1), 2 * nn - 1);
    // X = (1/2n) Phi_de Phi^de, with Phi^de = lambda' g^de for a Kähler pair.
    let g_inv = Tensor::from_matrix(&linalg::inverse(&g.to_matrix()).expect("metric"), [Up, Up]);
    let trace = Tensor::einsum("de,de->", &[&g, &g_inv]).expect("valid spec");
    let x = &(&(&lam * &lam) * trace.value()) * &RationalExpr::from_ratio(dim, 1, 2 * nn);
    let pubd = Provenance::Published;
    let der = Provenance::Derived;
    let expected = vec![
        expect("alpha", pubd, zero_form(dim, 1)),
        expect("v", pubd, zero_form(dim, 4)),
        expect("phi", der, Quantity::Tensor(phi.clone())),
        expect("p", der, Quantity::Tensor(p)),
        expect("y", pubd, zero_form(dim, 3)),
        expect("s", pubd, zero_form(dim, 1)),
        expect("phi_scale", der, Quantity::Scalar(phi_scale)),
        expect("theta", pubd, Quantity::Matrix(block_theta(&phi, &x))),
        expect("theta_rank", der, Quantity::Rank(dim + 2)),
    ];
    Ok(ExampleSpec {
        name: "cp2",
        n,
        given: s.clone(),
        master: s.clone(),
        fedosov_factor: chart.one(),
        fedosov: s,
        expected,
        curvature_scale: Some(lambda),
    })
}

/// Computed values for every quantity an example may state.
pub struct Computed {
    pub master_decomposition: CurvatureDecomposition,
    pub decomposition: CurvatureDecomposition,
    pub einstein: tractor::Einstein,
}

impl ExampleSpec {
    pub fn chart(&self) -> &Chart {
        &self.given.chart
    }

    pub fn expected(&self, name: &str) -> Option<&Expected> {
        self.expected.iter().find(|e| e.name == name)
    }

    pub fn compute(&self) -> Computed {
        let master_decomposition = full_decompose(&self.master);
        let decomposition = full_decompose(&self.fedosov);
        let einstein = tractor::einstein_check(&TractorContext::new(&self.master, &master_decomposition));
        Computed { master_decomposition, decomposition, einstein }
    }

    /// The computed counterpart of an expected quantity.
    pub fn actual(&self, name: &str, c: &Computed) -> Option<Quantity> {
        let d = &c.decomposition;
        let t = |x: &Tensor| Some(Quantity::Tensor(x.clone()));
        match name {
            "alpha" => t(&self.given.alpha),
            "beta" => t(&self.given.beta),
            "gamma" => t(self.master.conn.gamma()),
            "v" => t(&d.v),
            "phi" => t(&d.phi),
            "p" => t(&d.p),
            "y" => t(&d.y),
            "s" => t(&d.s),
            "phi_scale" => constant_ratio(&d.phi, &self.expected_metric()?).map(Quantity::Scalar),
            "theta" => c.einstein.theta.clone().map(Quantity::Matrix),
            "theta_rank" => {
                let th = c.einstein.theta.as_ref()?;
                Some(Quantity::Rank(linalg::rank_at_generic_point(th, 17)))
            }
            _ => None,
        }
    }

    fn expected_metric(&self) -> Option<Tensor> {
        (self.name == "cp2").then(|| fubini_study(self.chart()).0)
    }

    /// Compares every expected value with its computed counterpart.
    pub fn expected_suite(&self, c: &Computed) -> Suite {
        let chart = self.chart();
        let mut suite = Suite::new();
        for e in &self.expected {
            let name = format!("example.{}.{}", self.name, e.name);
            let check = match (self.actual(e.name, c), &e.value) {
                (Some(Quantity::Tensor(a)), Quantity::Tensor(b)) => Check::vanishing(name, &a.sub(b), chart),
                (Some(Quantity::Matrix(a)), Quantity::Matrix(b)) => {
                    tractor::matrix_check(&name, &tractor::matrix_sub(&a, b), chart)
                }
                (Some(a), b) if a == *b => Check::flag(name, true, None),
                (Some(a), b) => Check::flag(name, false, Some(format!("computed {a:?}, expected {b:?}"))),
                (None, _) => Check::failed(name, "not computable for this example"),
            };
            suite.push(check.with_provenance(e.provenance));
        }
        suite
    }

    /// Every identity that applies to this example.
    pub fn full_suite(&self) -> Suite {
        self.full_suite_with(&self.compute())
    }

    pub fn full_suite_with(&self, c: &Computed) -> Suite {
        let mut suite = Suite::new();
        suite.extend(self.master.defining_suite());
        suite.extend(self.master.master_suite());
        suite.extend(bianchi_suite(&self.master.conn, &c.master_decomposition.r, self.chart()));
        suite.extend(c.master_decomposition.suite(&self.master));
        suite.extend(c.decomposition.suite(&self.fedosov));
        suite.extend(tractor::curvature_suite(&self.fedosov, &c.decomposition));
        suite.push(tractor::york_divergence_check(&self.fedosov, &c.decomposition));
        suite.push(c.einstein.check.clone());
        if c.decomposition.v.is_zero() {
            suite.extend(tractor::grad_theta_suite(&self.fedosov, &c.decomposition));
        }
        suite.extend(self.expected_suite(c));
        suite
    }
}

trait WithProvenance {
    fn with_provenance(self, p: Provenance) -> Self;
}

impl WithProvenance for Check {
    fn with_provenance(self, p: Provenance) -> Self {
        let tag = match p {
            Provenance::Published => "published value",
            Provenance::Derived => "derived value",
            Provenance::Baseline => "baseline value",
        };
        match self.note.clone() {
            Some(n) => self.with_note(format!("{tag}; {n}")),
            None => self.with_note(tag),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_example_matches() {
        let e = build_flat_darboux(2).unwrap();
        let suite = e.full_suite();
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
    }

    #[test]
    fn cp2_example_matches() {
        let e = build_cpn(2).unwrap();
        assert!(e.curvature_scale.as_ref().unwrap().is_positive());
        let suite = e.full_suite();
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
    }

    #[test]
    fn dilation_theta_is_minus_u_u_transpose() {
        let e = build_dilation_example(2).unwrap();
        let c = e.compute();
        let chart = e.chart();
        let inv = chart.norm_squared().recip().unwrap();
        // u = (1, -x_b / |x|^2, 0)
        let mut u = vec![chart.one()];
        u.extend((0..4).map(|b| -&(&chart.coord(b) * &inv)));
        u.push(chart.zero());
        let expected: Matrix = u.iter().map(|a| u.iter().map(|b| -&(a * b)).collect()).collect();
        assert_eq!(c.einstein.theta.clone().unwrap(), expected);
        // Everything else agrees with the published values.
        let suite = e.full_suite();
        let failed: Vec<_> = suite.failures().map(|f| f.name.as_str()).collect();
        assert_eq!(failed, ["example.dilation.theta"]);
        let w = suite.get("example.dilation.theta").unwrap().witness.as_ref().unwrap();
        assert_eq!(w.index, [1, 6]);
    }
}
