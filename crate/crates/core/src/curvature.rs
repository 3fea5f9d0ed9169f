//! Decompositions of the curvature of a conformally Fedosov structure.
//!
//! `R` always has variance (down, down, up, down). Its lowered form is
//! `R_abcd = R_ab^e_d J_ec`.

use crate::check::{Check, Suite};
use crate::error::{Error, Result};
use crate::structure::{FedosovStructure, GaugeTransform};
use crate::tensor::{Chart, Tensor, Variance};

use Variance::{Down, Up};

/// The projective pieces `R_ab^c_d = W_ab^c_d + 2 delta_[a^c P_b]d + beta_ab delta^c_d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectiveParts {
    pub w: Tensor,
    pub p: Tensor,
    pub beta_skew: Tensor,
}

/// All pieces of the curvature of one representative.
///
/// `y` and `s` are computed from the formula with the representative's own
/// connection; they carry their usual meaning in Fedosov gauge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurvatureDecomposition {
    pub r: Tensor,
    pub r_low: Tensor,
    pub w: Tensor,
    pub p: Tensor,
    pub beta_skew: Tensor,
    pub v: Tensor,
    pub phi: Tensor,
    pub y: Tensor,
    pub s: Tensor,
}

/// `J_{i[js0] i[js1]} X_{i[xs0] i[xs1]}` as a rank-4 tensor.
fn jx(j: &Tensor, x: &Tensor, js: [usize; 2], xs: [usize; 2]) -> Tensor {
    let mut perm = [0; 4];
    perm[js[0]] = 0;
    perm[js[1]] = 1;
    perm[xs[0]] = 2;
    perm[xs[1]] = 3;
    j.outer(x).permute(&perm)
}

/// `delta_a^c X_bd` laid out as (a, b, c, d).
fn delta_ac(x: &Tensor) -> Tensor {
    Tensor::delta(x.dim()).outer(x).permute(&[0, 2, 1, 3])
}

pub fn lower_curvature(r: &Tensor, j: &Tensor) -> Tensor {
    r.lower(2, j).expect("upper third slot")
}

pub fn raise_curvature(r_low: &Tensor, j_inv: &Tensor) -> Tensor {
    r_low.raise(2, j_inv).expect("lower third slot")
}

/// Extracts `beta_ab = R_ab^c_c / (2n+1)` and
/// `P_bd = (R_ab^a_d + beta_bd) / (2n-1)`, with `W` by subtraction.
pub fn projective_decompose(r: &Tensor, chart: &Chart) -> ProjectiveParts {
    let n = chart.n() as i64;
    let beta_skew = r.contract(2, 3).expect("curvature variance").scale_ratio(1, 2 * n + 1);
    let ricci = r.contract(2, 0).expect("curvature variance");
    let p = ricci.add(&beta_skew).scale_ratio(1, 2 * n - 1);
    let w = r.sub(&projective_assemble(&Tensor::zeros(chart.dim(), &[Down, Down, Up, Down]), &p, &beta_skew));
    ProjectiveParts { w, p, beta_skew }
}

pub fn projective_assemble(w: &Tensor, p: &Tensor, beta_skew: &Tensor) -> Tensor {
    let dp = delta_ac(p);
    let schouten = dp.sub(&dp.permute(&[1, 0, 2, 3]));
    let trace = beta_skew.outer(&Tensor::delta(w.dim())).permute(&[0, 1, 3, 2]);
    w.add(&schouten).add(&trace)
}

/// Lowered curvature of a Fedosov-gauge connection built from `(V, Phi)`.
pub fn branched_assemble(v: &Tensor, phi: &Tensor, j: &Tensor) -> Tensor {
    v.add(&jx(j, phi, [0, 2], [1, 3]))
        .sub(&jx(j, phi, [1, 2], [0, 3]))
        .add(&jx(j, phi, [0, 3], [1, 2]))
        .sub(&jx(j, phi, [1, 3], [0, 2]))
        .add(&jx(j, phi, [0, 1], [2, 3]).scale_ratio(2, 1))
}

/// Lowered curvature of any master-equation representative from `(V, Phi, P)`.
pub fn full_assemble(v: &Tensor, phi: &Tensor, p: &Tensor, j: &Tensor, n: usize) -> Tensor {
    let k = 2 * n as i64 - 1;
    v.add(&jx(j, phi, [0, 1], [2, 3]).scale_ratio(2, 1))
        .sub(&jx(j, phi, [1, 3], [2, 0]))
        .add(&jx(j, phi, [0, 3], [2, 1]))
        .sub(&jx(j, phi, [0, 2], [1, 3]).scale_ratio(3, k))
        .add(&jx(j, phi, [1, 2], [0, 3]).scale_ratio(3, k))
        .add(&jx(j, p, [0, 2], [1, 3]))
        .sub(&jx(j, p, [1, 2], [0, 3]))
}

/// Lowered `W_abcd` in terms of `(V, Phi)`.
pub fn weyl_from_parts(v: &Tensor, phi: &Tensor, j: &Tensor, n: usize) -> Tensor {
    let (p, q) = (3, 2 * n as i64 - 1);
    v.sub(&jx(j, phi, [0, 2], [1, 3]).scale_ratio(p, q))
        .add(&jx(j, phi, [1, 2], [0, 3]).scale_ratio(p, q))
        .add(&jx(j, phi, [0, 3], [1, 2]))
        .sub(&jx(j, phi, [1, 3], [0, 2]))
        .add(&jx(j, phi, [0, 1], [2, 3]).scale_ratio(2, 1))
}

/// `Phi_cd = ((2n-1) / (8(n+1)(n-1))) (J^{ab} R_abcd - 2 P_cd)`.
fn phi_from(r_low: &Tensor, p: &Tensor, j_inv: &Tensor, n: i64) -> Tensor {
    let trace = Tensor::einsum("ab,abcd->cd", &[j_inv, r_low]).expect("valid spec");
    trace.sub(&p.scale_ratio(2, 1)).scale_ratio(2 * n - 1, 8 * (n + 1) * (n - 1))
}

/// `P_bd = J^{ac} R_abcd / (2n-1)`.
fn p_from_trace(r_low: &Tensor, j_inv: &Tensor, n: i64) -> Tensor {
    Tensor::einsum("ac,abcd->bd", &[j_inv, r_low]).expect("valid spec").scale_ratio(1, 2 * n - 1)
}

/// Residual of `R_abcd = R_[ab](cd)` and `R_[abc]d = 0` for a lowered tensor.
pub fn fedosov_symmetry_suite(r_low: &Tensor, chart: &Chart, prefix: &str) -> Suite {
    let mut suite = Suite::new();
    let skew = r_low.add(&r_low.permute(&[1, 0, 2, 3]));
    suite.push(Check::vanishing(format!("{prefix}.skew"), &skew, chart));
    let sym = r_low.sub(&r_low.permute(&[0, 1, 3, 2]));
    suite.push(Check::vanishing(format!("{prefix}.symmetric"), &sym, chart));
    let cyc = r_low.antisymmetrize(&[0, 1, 2]).expect("lower slots");
    suite.push(Check::vanishing(format!("{prefix}.cyclic"), &cyc, chart));
    suite
}

/// Branches a Fedosov-gauge curvature into `(V, Phi, P)`.
pub fn symplectic_branch(r: &Tensor, j: &Tensor, j_inv: &Tensor, chart: &Chart) -> Result<(Tensor, Tensor, Tensor)> {
    let n = chart.n() as i64;
    let r_low = lower_curvature(r, j);
    let sym = fedosov_symmetry_suite(&r_low, chart, "curvature.fedosov");
    if let Some(bad) = sym.failures().next() {
        let w = bad.witness.as_ref().map(|w| format!("component {:?} is {}", w.index, w.value));
        return Err(Error::Equation {
            equation: bad.name.clone(),
            witness: w.unwrap_or_else(|| "not in Fedosov gauge".into()),
        });
    }
    let p = p_from_trace(&r_low, j_inv, n);
    let phi = phi_from(&r_low, &p, j_inv, n);
    let v = r_low.sub(&branched_assemble(&Tensor::zeros(chart.dim(), &[Down; 4]), &phi, j));
    Ok((v, phi, p))
}

/// `(Y, S)` from `Phi` and a connection, with `S_a = (1/(2n+1)) nabla^b Phi_ab`.
pub fn cotton_york(s: &FedosovStructure, phi: &Tensor) -> (Tensor, Tensor) {
    let n = s.n() as i64;
    let grad = s.conn.covariant_derivative(phi);
    let div = Tensor::einsum("bc,cab->a", &[&s.j_inv, &grad]).expect("valid spec");
    let sv = div.scale_ratio(1, 2 * n + 1);
    let js = |js: [usize; 2], xs: usize| {
        let mut perm = [0; 3];
        perm[js[0]] = 0;
        perm[js[1]] = 1;
        perm[xs] = 2;
        s.j.outer(&sv).permute(&perm)
    };
    let y = grad
        .sub(&grad.permute(&[1, 0, 2]))
        .add(&js([0, 2], 1))
        .sub(&js([1, 2], 0))
        .add(&js([0, 1], 2).scale_ratio(2, 1));
    (y, sv)
}

/// Decomposes the curvature of a master-equation representative.
/// The pointwise pieces of a curvature tensor `R_ab^c_d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraicParts {
    pub r_low: Tensor,
    pub w: Tensor,
    pub p: Tensor,
    pub beta_skew: Tensor,
    pub v: Tensor,
    pub phi: Tensor,
}

/// Splits `R_ab^c_d` into `(W, P, beta)` and then `(V, Phi)`, using only
/// algebra at each point.
pub fn decompose_curvature(r: &Tensor, j: &Tensor, j_inv: &Tensor, chart: &Chart) -> AlgebraicParts {
    let n = chart.n() as i64;
    let ProjectiveParts { w, p, beta_skew } = projective_decompose(r, chart);
    let r_low = lower_curvature(r, j);
    let phi = phi_from(&r_low, &p, j_inv, n);
    let zero = Tensor::zeros(chart.dim(), &[Down; 4]);
    let v = r_low.sub(&full_assemble(&zero, &phi, &p, j, chart.n()));
    AlgebraicParts { r_low, w, p, beta_skew, v, phi }
}

pub fn full_decompose(s: &FedosovStructure) -> CurvatureDecomposition {
    let r = s.conn.riemann();
    let AlgebraicParts { r_low, w, p, beta_skew, v, phi } = decompose_curvature(&r, &s.j, &s.j_inv, &s.chart);
    let (y, sv) = cotton_york(s, &phi);
    CurvatureDecomposition { r, r_low, w, p, beta_skew, v, phi, y, s: sv }
}

impl CurvatureDecomposition {
    /// Lowered `W_abcd`.
    pub fn w_low(&self, j: &Tensor) -> Tensor {
        lower_curvature(&self.w, j)
    }

    /// Consistency checks of the decomposition of `s`'s curvature.
    pub fn suite(&self, s: &FedosovStructure) -> Suite {
        let chart = &s.chart;
        let n = s.n() as i64;
        let mut suite = Suite::new();
        let rebuilt = projective_assemble(&self.w, &self.p, &self.beta_skew);
        suite.push(Check::vanishing("curvature.projective-reconstruction", &self.r.sub(&rebuilt), chart));
        let wt = self.w.contract(2, 0).expect("variance");
        suite.push(Check::vanishing("curvature.w-trace-free", &wt, chart));
        let wb = self.w.antisymmetrize(&[0, 1, 3]).expect("lower slots");
        suite.push(Check::vanishing("curvature.w-cyclic", &wb, chart));
        let p_skew = self.p.antisymmetrize(&[0, 1]).expect("lower").scale_ratio(-2, 1);
        suite.push(Check::vanishing("curvature.beta-skew", &p_skew.sub(&self.beta_skew), chart));
        suite.push(Check::vanishing("curvature.p-trace", &p_from_trace(&self.r_low, &s.j_inv, n).sub(&self.p), chart));
        for c in fedosov_symmetry_suite(&self.v, chart, "curvature.v").checks {
            suite.push(c);
        }
        let vt = Tensor::einsum("ab,abcd->cd", &[&s.j_inv, &self.v]).expect("valid spec");
        suite.push(Check::vanishing("curvature.v-trace-free", &vt, chart));
        let split = self.w_low(&s.j).sub(&weyl_from_parts(&self.v, &self.phi, &s.j, s.n()));
        suite.push(Check::vanishing("curvature.w-split", &split, chart));
        suite.push(Check::vanishing(
            "curvature.phi-symmetric",
            &self.phi.antisymmetrize(&[0, 1]).expect("lower"),
            chart,
        ));
        if s.is_fedosov_gauge() {
            suite.extend(fedosov_symmetry_suite(&self.r_low, chart, "curvature.fedosov"));
            let rho = self.p.scale_ratio(2 * n - 1, 1).sub(&self.phi.scale_ratio(2 * (n + 1), 1));
            suite.push(Check::vanishing("curvature.rho-phi", &rho, chart));
            let branched = self.r_low.sub(&branched_assemble(&self.v, &self.phi, &s.j));
            suite.push(Check::vanishing("curvature.branched", &branched, chart));
            suite.extend(cotton_york_suite(&self.y, &s.j_inv, chart));
        }
        suite
    }
}

/// `Y_abc = Y_[ab]c`, `Y_[abc] = 0` and `J^{ab} Y_abc = 0`.
pub fn cotton_york_suite(y: &Tensor, j_inv: &Tensor, chart: &Chart) -> Suite {
    let mut suite = Suite::new();
    suite.push(Check::vanishing("cotton-york.skew", &y.add(&y.permute(&[1, 0, 2])), chart));
    suite.push(Check::vanishing("cotton-york.cyclic", &y.antisymmetrize(&[0, 1, 2]).expect("lower"), chart));
    let t = Tensor::einsum("ab,abc->c", &[j_inv, y]).expect("valid spec");
    suite.push(Check::vanishing("cotton-york.trace-free", &t, chart));
    suite
}

/// Residual of `J^{de} nabla_e V_abcd + (2n+1) Y_abc`.
pub fn contracted_bianchi_residual(d: &CurvatureDecomposition, s: &FedosovStructure) -> Tensor {
    let n = s.n() as i64;
    let grad = s.conn.covariant_derivative(&d.v);
    let div = Tensor::einsum("de,eabcd->abc", &[&s.j_inv, &grad]).expect("valid spec");
    div.add(&d.y.scale_ratio(2 * n + 1, 1))
}

pub fn contracted_bianchi_check(d: &CurvatureDecomposition, s: &FedosovStructure) -> Check {
    Check::vanishing("curvature.contracted-bianchi", &contracted_bianchi_residual(d, s), &s.chart)
}

/// `T_a = 2 alpha^b P_ab + alpha^b nabla_a alpha_b`.
pub fn t_form(s: &FedosovStructure, p: &Tensor) -> Tensor {
    let au = s.alpha_up();
    let grad = s.conn.covariant_derivative(&s.alpha);
    let first = Tensor::einsum("b,ab->a", &[&au, p]).expect("valid spec").scale_ratio(2, 1);
    first.add(&Tensor::einsum("b,ab->a", &[&au, &grad]).expect("valid spec"))
}

/// Transformation laws of the curvature pieces under `J -> W J`.
pub fn transformation_suite(s: &FedosovStructure, g: &GaugeTransform) -> Suite {
    let chart = &s.chart;
    let hat = s.rescale(g);
    let before = full_decompose(s);
    let after = full_decompose(&hat);
    let ups = &g.upsilon;
    let mut suite = Suite::new();
    suite.push(Check::vanishing("transform.weyl", &after.w.sub(&before.w), chart));
    suite.push(Check::vanishing("transform.v", &after.v.sub(&before.v.scale(&g.w)), chart));
    suite.push(Check::vanishing("transform.phi", &after.phi.sub(&before.phi), chart));
    let grad_ups = s.conn.covariant_derivative(ups);
    let p_law = before.p.sub(&grad_ups).add(&ups.outer(ups));
    suite.push(Check::vanishing("transform.schouten", &after.p.sub(&p_law), chart));

    // nabla_a Upsilon^b = J^{bc} nabla_a Upsilon_c + Upsilon_a alpha^b + Upsilon^c alpha_c delta_a^b
    let ups_up = ups.raise(0, &s.j_inv).expect("lower slot");
    let lhs = s.conn.covariant_derivative(&ups_up);
    let au = s.alpha_up();
    let contracted = Tensor::einsum("c,c->", &[&ups_up, &s.alpha]).expect("valid spec");
    let rhs = grad_ups
        .raise(1, &s.j_inv)
        .expect("lower slot")
        .add(&ups.outer(&au))
        .add(&Tensor::delta(s.dim()).scale(contracted.value()));
    suite.push(Check::vanishing("transform.raised-upsilon", &lhs.sub(&rhs), chart));

    // T has weight -2, so the rescaled T is compared after multiplying by W.
    let t = t_form(s, &before.p);
    let t_hat = t_form(&hat, &after.p).scale(&g.w);
    let grad_alpha = s.conn.covariant_derivative(&s.alpha);
    let contract = |v: &Tensor, m: &Tensor| Tensor::einsum("b,ab->a", &[v, m]).expect("valid spec");
    let ua = contracted.value().clone();
    let rhs = t
        .add(&contract(&ups_up, &before.p).scale_ratio(2, 1))
        .sub(&contract(&ups_up, &grad_ups))
        .sub(&contract(&au, &grad_ups))
        .add(&s.alpha.scale(&ua))
        .add(&contract(&ups_up, &grad_alpha))
        .sub(&ups.scale(&ua));
    suite.push(Check::vanishing("transform.t-form", &t_hat.sub(&rhs), chart));
    suite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Connection;
    use crate::structure::{check_structure, darboux_form};

    fn chart() -> Chart {
        Chart::standard(4).unwrap()
    }

    fn dilation(c: &Chart) -> FedosovStructure {
        let j = darboux_form(c).scale(&c.norm_squared().recip().unwrap());
        check_structure(c, &j, &Connection::flat(4)).unwrap().normalize_to_master().unwrap()
    }

    /// Symplectic connection `Gamma^f_ab = J^{fc} S_abc` for a totally
    /// symmetric `S` with linear entries.
    fn symplectic(c: &Chart) -> FedosovStructure {
        let j = darboux_form(c);
        let j_inv = crate::tensor::inverse_two_form(&j).unwrap();
        let s3 = Tensor::from_fn(4, &[Down; 3], |i| {
            let mut k = i.to_vec();
            k.sort_unstable();
            let w = (k[0] + 2 * k[1] + 3 * k[2]) as i64;
            c.int(w % 3 - 1) + c.coord(k[1]) * c.int((w % 2) + 1) - c.coord((k[0] + 1) % 4) * c.int(k[2] as i64)
        });
        let gamma = Tensor::einsum("fc,abc->fab", &[&j_inv, &s3]).unwrap();
        check_structure(c, &j, &Connection::new(gamma).unwrap()).unwrap()
    }

    #[test]
    fn flat_is_all_zero() {
        let c = chart();
        let s = check_structure(&c, &darboux_form(&c), &Connection::flat(4)).unwrap();
        let d = full_decompose(&s);
        for t in [&d.w, &d.p, &d.beta_skew, &d.v, &d.phi, &d.y, &d.s] {
            assert!(t.is_zero());
        }
        assert!(d.suite(&s).all_passed());
    }

    #[test]
    fn dilation_has_vanishing_v_and_phi() {
        let c = chart();
        let s = dilation(&c);
        let d = full_decompose(&s);
        assert!(d.v.is_zero() && d.phi.is_zero());
        assert!(!d.r.is_zero());
        assert!(d.suite(&s).all_passed(), "{:?}", d.suite(&s).failures().collect::<Vec<_>>());
    }

    #[test]
    fn symplectic_connection_branches() {
        let c = chart();
        let s = symplectic(&c);
        assert!(s.is_fedosov_gauge());
        let d = full_decompose(&s);
        let suite = d.suite(&s);
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
        assert!(!d.v.is_zero() && !d.phi.is_zero());
        let (v, phi, p) = symplectic_branch(&d.r, &s.j, &s.j_inv, &c).unwrap();
        assert_eq!((v, phi, p), (d.v.clone(), d.phi.clone(), d.p.clone()));
        assert!(contracted_bianchi_check(&d, &s).passed());
        let mut bad = d.clone();
        let mut v = bad.v.clone();
        v.set(&[0, 1, 2, 3], v.get(&[0, 1, 2, 3]) + &c.coord(0));
        bad.v = v;
        assert!(!contracted_bianchi_check(&bad, &s).passed());
    }

    #[test]
    fn branch_rejects_non_fedosov_curvature() {
        let c = chart();
        let s = dilation(&c);
        let r = s.conn.riemann();
        assert!(!r.is_zero());
        assert!(matches!(symplectic_branch(&r, &s.j, &s.j_inv, &c), Err(Error::Equation { .. })));
    }

    #[test]
    fn projective_round_trip_on_random_parts() {
        let c = chart();
        // W built from an arbitrary tensor by removing traces is awkward, so
        // use the curvature of a non-normalized connection instead.
        let gamma = Tensor::from_fn(4, &[Up, Down, Down], |i| {
            let k = (i[0] + i[1] * i[2]) as i64;
            c.coord((i[1] + i[2]) % 4) * c.int(k % 3 - 1) + c.int(k % 2)
        });
        let r = Connection::new(gamma).unwrap().riemann();
        let parts = projective_decompose(&r, &c);
        assert_eq!(projective_assemble(&parts.w, &parts.p, &parts.beta_skew), r);
        assert!(parts.w.contract(2, 0).unwrap().is_zero());
        assert!(parts.w.contract(2, 3).unwrap().is_zero());
    }

    #[test]
    fn transformation_laws() {
        let c = chart();
        let flat = check_structure(&c, &darboux_form(&c), &Connection::flat(4)).unwrap();
        let g = GaugeTransform::new(c.norm_squared().recip().unwrap()).unwrap();
        let suite = transformation_suite(&flat, &g);
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
        assert!(transformation_suite(&flat, &GaugeTransform::identity(4)).all_passed());
        let s = symplectic(&c);
        let g = GaugeTransform::new(c.one() + c.coord(1).pow(2)).unwrap();
        let suite = transformation_suite(&s, &g);
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
        let suite = transformation_suite(&s.rescale(&g), &g);
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
    }
}
