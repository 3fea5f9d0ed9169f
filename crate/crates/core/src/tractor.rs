//! The tractor bundle `T = E[1] + E_a[1] + E[-1]` of a conformally Fedosov
//! structure.
//!
//! Sections are stored in a chosen representative. Density weights are
//! tracked formally: a [`TractorContext`] built in a frame `W = Omega^2`
//! works with components divided by `Omega^w`, so every identity stays
//! rational even though `Omega` itself is not.

use num_rational::BigRational;

use crate::check::{Check, Suite, Witness};
use crate::connection::Connection;
use crate::curvature::CurvatureDecomposition;
use crate::expr::RationalExpr;
use crate::linalg::{self, Matrix, Solution};
use crate::structure::{FedosovStructure, GaugeTransform};
use crate::tensor::{Chart, Tensor, Variance};

use Variance::Down;

const SPECTATORS: &str = "pqrstuvw";

fn letters(k: usize) -> &'static str {
    &SPECTATORS[..k]
}

fn einsum(spec: &str, operands: &[&Tensor]) -> Tensor {
    Tensor::einsum(spec, operands).expect("valid spec")
}

/// `[a, b, s..]` to `[a, s.., b]`.
fn second_to_last(t: &Tensor) -> Tensor {
    let r = t.rank();
    let mut perm = vec![0];
    perm.extend(2..r);
    perm.push(1);
    t.permute(&perm)
}

/// `[s.., c]` to `[c, s..]`.
fn last_to_front(t: &Tensor) -> Tensor {
    let r = t.rank();
    let mut perm = vec![r - 1];
    perm.extend(0..r - 1);
    t.permute(&perm)
}

/// A section `(sigma, mu_b, rho)`, possibly carrying extra form slots.
///
/// `sigma` and `rho` have the spectator slots only; `mu` has them followed
/// by its own lower index. Weights are 1, 1 and -1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TractorSection {
    pub sigma: Tensor,
    pub mu: Tensor,
    pub rho: Tensor,
}

pub const WEIGHTS: [i64; 3] = [1, 1, -1];

impl TractorSection {
    pub fn new(sigma: RationalExpr, mu: Tensor, rho: RationalExpr) -> Self {
        assert_eq!(mu.variance(), [Down]);
        Self { sigma: Tensor::scalar(sigma), mu, rho: Tensor::scalar(rho) }
    }

    pub fn zeros(dim: usize, spectators: &[Variance]) -> Self {
        let mut mv = spectators.to_vec();
        mv.push(Down);
        Self { sigma: Tensor::zeros(dim, spectators), mu: Tensor::zeros(dim, &mv), rho: Tensor::zeros(dim, spectators) }
    }

    /// The constant section with a single unit entry; `slot` runs over
    /// `sigma, mu_1, .., mu_2n, rho`.
    pub fn basis(dim: usize, slot: usize) -> Self {
        let mut t = Self::zeros(dim, &[]);
        let one = RationalExpr::one(dim);
        if slot == 0 {
            t.sigma.set(&[], one);
        } else if slot <= dim {
            t.mu.set(&[slot - 1], one);
        } else {
            t.rho.set(&[], one);
        }
        t
    }

    /// Builds a section from a column of `2n + 2` entries.
    pub fn from_column(col: &[RationalExpr]) -> Self {
        let dim = col.len() - 2;
        let mu = Tensor::from_fn(dim, &[Down], |i| col[i[0] + 1].clone());
        Self::new(col[0].clone(), mu, col[dim + 1].clone())
    }

    /// Entries `sigma, mu_1, .., rho` at a fixed spectator multi-index.
    pub fn column_at(&self, spectator: &[usize]) -> Vec<RationalExpr> {
        let dim = self.dim();
        let mut out = vec![self.sigma.get(spectator).clone()];
        let mut idx = spectator.to_vec();
        idx.push(0);
        for b in 0..dim {
            *idx.last_mut().unwrap() = b;
            out.push(self.mu.get(&idx).clone());
        }
        out.push(self.rho.get(spectator).clone());
        out
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn spectators(&self) -> usize {
        self.sigma.rank()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { sigma: self.sigma.add(&o.sigma), mu: self.mu.add(&o.mu), rho: self.rho.add(&o.rho) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { sigma: self.sigma.sub(&o.sigma), mu: self.mu.sub(&o.mu), rho: self.rho.sub(&o.rho) }
    }

    pub fn scale(&self, k: &RationalExpr) -> Self {
        Self { sigma: self.sigma.scale(k), mu: self.mu.scale(k), rho: self.rho.scale(k) }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.is_zero() && self.mu.is_zero() && self.rho.is_zero()
    }

    /// Swaps the first two spectator slots.
    pub fn swap_first_two(&self) -> Self {
        let swap = |t: &Tensor| {
            let mut perm: Vec<usize> = (0..t.rank()).collect();
            perm.swap(0, 1);
            t.permute(&perm)
        };
        Self { sigma: swap(&self.sigma), mu: swap(&self.mu), rho: swap(&self.rho) }
    }

    /// Prepends `form` to every part: `form (x) self`.
    pub fn times_form(&self, form: &Tensor) -> Self {
        Self { sigma: form.outer(&self.sigma), mu: form.outer(&self.mu), rho: form.outer(&self.rho) }
    }

    /// Passes iff every part vanishes; the witness names the part.
    pub fn check(&self, name: impl Into<String>, chart: &Chart) -> Check {
        let name = name.into();
        for (label, part) in [("sigma", &self.sigma), ("mu", &self.mu), ("rho", &self.rho)] {
            let c = Check::vanishing(name.clone(), part, chart);
            if !c.passed() {
                return c.with_note(format!("{label} component"));
            }
        }
        Check::vanishing(name, &self.sigma, chart)
    }
}

/// `(sigma, mu_b + Upsilon_b sigma, rho - Upsilon^b mu_b + Upsilon^b alpha_b sigma)`.
///
/// `alpha` and `j_inv` belong to the representative before the change.
pub fn splitting_change_with(t: &TractorSection, upsilon: &Tensor, alpha: &Tensor, j_inv: &Tensor) -> TractorSection {
    let k = t.spectators();
    let s = letters(k);
    let ups_up = upsilon.raise(0, j_inv).expect("lower slot");
    let mu = t.mu.add(&t.sigma.outer(upsilon));
    let ua = einsum("b,b->", &[&ups_up, alpha]);
    let rho = t.rho.sub(&einsum(&format!("b,{s}b->{s}"), &[&ups_up, &t.mu])).add(&t.sigma.scale(ua.value()));
    TractorSection { sigma: t.sigma.clone(), mu, rho }
}

/// Change of splitting under the rescaling `g` of the representative `s`.
pub fn splitting_change(t: &TractorSection, g: &GaugeTransform, s: &FedosovStructure) -> TractorSection {
    splitting_change_with(t, &g.upsilon, &s.alpha, &s.j_inv)
}

/// `<t, u> = sigma rho~ - J^{bc} mu_b mu~_c - rho sigma~`; `u` has no
/// spectators and the result keeps those of `t`.
pub fn pairing(t: &TractorSection, u: &TractorSection, j_inv: &Tensor) -> Tensor {
    let s = letters(t.spectators());
    let mid = einsum(&format!("bc,{s}b,c->{s}"), &[j_inv, &t.mu, &u.mu]);
    t.sigma.scale(u.rho.value()).sub(&mid).sub(&t.rho.scale(u.sigma.value()))
}

/// Multiplies a tensor by an even power `Omega^weight` of the frame.
///
/// Only even weights are rational; callers use this for coefficients whose
/// weights balance.
pub fn density_rescale(t: &Tensor, weight: i32, g: &GaugeTransform) -> crate::Result<Tensor> {
    Ok(t.scale(&g.power(weight)?))
}

/// Which of the two connections to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// The connection built from `P` alone.
    Proto,
    /// The tractor connection, corrected by the invariant homomorphisms.
    Full,
}

/// Everything the tractor connections need in one representative.
#[derive(Clone, Debug)]
pub struct TractorContext {
    pub chart: Chart,
    pub n: usize,
    /// `J` and `J^{-1}` divided by the frame's powers of `Omega`.
    pub j: Tensor,
    pub j_inv: Tensor,
    pub conn: Connection,
    pub alpha: Tensor,
    pub alpha_up: Tensor,
    pub p: Tensor,
    pub phi: Tensor,
    /// `nabla^b Phi_ab`.
    pub div_phi: Tensor,
    grad_alpha: Tensor,
    /// Shift `w Upsilon_a` applied to derivatives of weight-`w` quantities.
    pub shift: Tensor,
}

impl TractorContext {
    /// Densities trivialized by the representative itself.
    pub fn new(s: &FedosovStructure, d: &CurvatureDecomposition) -> Self {
        Self::in_frame(s, d, &GaugeTransform::identity(s.dim()))
    }

    /// Densities trivialized by `J / W` where `W` is `frame.w`, i.e. with
    /// components measured against the representative before `frame`.
    pub fn in_frame(s: &FedosovStructure, d: &CurvatureDecomposition, frame: &GaugeTransform) -> Self {
        let winv = frame.w.recip().expect("nonzero factor");
        let j = s.j.scale(&winv);
        let j_inv = s.j_inv.scale(&frame.w);
        let alpha_up = s.alpha.raise(0, &j_inv).expect("lower slot");
        let grad_phi = s.conn.covariant_derivative(&d.phi);
        let div_phi = einsum("bc,cab->a", &[&j_inv, &grad_phi]);
        Self {
            chart: s.chart.clone(),
            n: s.n(),
            j,
            j_inv,
            conn: s.conn.clone(),
            alpha: s.alpha.clone(),
            alpha_up,
            p: d.p.clone(),
            phi: d.phi.clone(),
            div_phi,
            grad_alpha: s.conn.covariant_derivative(&s.alpha),
            shift: frame.upsilon.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Covariant derivative of a quantity of density weight `weight`.
    pub fn nabla(&self, t: &Tensor, weight: i64) -> Tensor {
        let d = self.conn.covariant_derivative(t);
        if weight == 0 || self.shift.is_zero() {
            return d;
        }
        d.add(&self.shift.outer(t).scale_ratio(weight, 1))
    }

    /// Coefficient of `mu^b` in the bottom slot and of `sigma` in the middle.
    fn middle_coefficient(&self, v: Variant) -> Tensor {
        match v {
            Variant::Proto => self.p.clone(),
            Variant::Full => self.p.sub(&self.phi.scale_ratio(3, 2 * self.n as i64 - 1)),
        }
    }

    /// `T_a = 2 alpha^b P_ab + alpha^b nabla_a alpha_b`.
    pub fn t_form(&self) -> Tensor {
        einsum("b,ab->a", &[&self.alpha_up, &self.p])
            .scale_ratio(2, 1)
            .add(&einsum("b,ab->a", &[&self.alpha_up, &self.grad_alpha]))
    }

    /// Coefficient of `-sigma` in the bottom slot.
    fn bottom_coefficient(&self, v: Variant) -> Tensor {
        let n = self.n as i64;
        let t = self.t_form();
        match v {
            Variant::Proto => t,
            Variant::Full => {
                let ap = einsum("b,ab->a", &[&self.alpha_up, &self.phi]);
                t.add(&self.div_phi.scale_ratio(1, 2 * n + 1))
                    .sub(&ap.scale_ratio(10 * n + 7, (2 * n + 1) * (2 * n - 1)))
            }
        }
    }

    /// Applies the chosen connection; the derivative slot is prepended.
    pub fn apply(&self, t: &TractorSection, v: Variant) -> TractorSection {
        let k = t.spectators();
        let s = letters(k);
        let sigma = self.nabla(&t.sigma, WEIGHTS[0]).sub(&last_to_front(&t.mu));

        let m = self.middle_coefficient(v);
        let am = einsum(&format!("c,{s}c->{s}"), &[&self.alpha_up, &t.mu]);
        let mu = self
            .nabla(&t.mu, WEIGHTS[1])
            .sub(&second_to_last(&self.j.outer(&t.rho)))
            .add(&second_to_last(&m.outer(&t.sigma)))
            .sub(&second_to_last(&self.j.outer(&am)));

        let raised = einsum(&format!("ab,bc,{s}c->a{s}"), &[&m, &self.j_inv, &t.mu]);
        let rho = self.nabla(&t.rho, WEIGHTS[2]).add(&raised).sub(&self.bottom_coefficient(v).outer(&t.sigma));
        TractorSection { sigma, mu, rho }
    }

    pub fn proto_connection(&self, t: &TractorSection) -> TractorSection {
        self.apply(t, Variant::Proto)
    }

    pub fn tractor_connection(&self, t: &TractorSection) -> TractorSection {
        self.apply(t, Variant::Full)
    }

    /// `(0, Phi_ab sigma, Phi_ab mu^b + 2 nabla^b Phi_ab sigma)`.
    pub fn first_homomorphism(&self, t: &TractorSection) -> TractorSection {
        let s = letters(t.spectators());
        let mut out = TractorSection::zeros(self.dim(), &vec![Down; t.spectators() + 1]);
        out.mu = second_to_last(&self.phi.outer(&t.sigma));
        out.rho = einsum(&format!("ab,bc,{s}c->a{s}"), &[&self.phi, &self.j_inv, &t.mu])
            .add(&self.div_phi.scale_ratio(2, 1).outer(&t.sigma));
        out
    }

    /// `(0, 0, (nabla^b Phi_ab + alpha^b Phi_ab) sigma)`.
    pub fn second_homomorphism(&self, t: &TractorSection) -> TractorSection {
        let mut out = TractorSection::zeros(self.dim(), &vec![Down; t.spectators() + 1]);
        let ap = einsum("b,ab->a", &[&self.alpha_up, &self.phi]);
        out.rho = self.div_phi.add(&ap).outer(&t.sigma);
        out
    }

    /// `(nabla_a nabla_b - nabla_b nabla_a) t` with the outer derivative
    /// coupled to the affine connection on the inner form slot.
    pub fn curvature_on(&self, t: &TractorSection, v: Variant) -> TractorSection {
        let second = self.apply(&self.apply(t, v), v);
        second.sub(&second.swap_first_two())
    }

    /// Curvature applied to each constant basis section.
    pub fn curvature_columns(&self, v: Variant) -> Vec<TractorSection> {
        (0..self.dim() + 2).map(|k| self.curvature_on(&TractorSection::basis(self.dim(), k), v)).collect()
    }
}

/// Fedosov-gauge formula `(nabla sigma - mu_a, nabla mu_b - J_ab rho + Phi_ab sigma,
/// nabla rho + Phi_ab mu^b - S_a sigma)`.
pub fn fedosov_gauge_connection(
    s: &FedosovStructure,
    d: &CurvatureDecomposition,
    t: &TractorSection,
) -> TractorSection {
    let sp = letters(t.spectators());
    let nab = |x: &Tensor| s.conn.covariant_derivative(x);
    let sigma = nab(&t.sigma).sub(&last_to_front(&t.mu));
    let mu = nab(&t.mu).sub(&second_to_last(&s.j.outer(&t.rho))).add(&second_to_last(&d.phi.outer(&t.sigma)));
    let rho =
        nab(&t.rho).add(&einsum(&format!("ab,bc,{sp}c->a{sp}"), &[&d.phi, &s.j_inv, &t.mu])).sub(&d.s.outer(&t.sigma));
    TractorSection { sigma, mu, rho }
}

/// Pieces of the curvature display in Fedosov gauge.
struct CurvatureData {
    v: Tensor,
    y: Tensor,
    s: Tensor,
    phi: Tensor,
    sigma_coeff: Tensor,
    x: RationalExpr,
    j: Tensor,
    j_inv: Tensor,
}

/// `Phi^{ce} = J^{cf} J^{eg} Phi_fg`.
fn raise_both(phi: &Tensor, j_inv: &Tensor) -> Tensor {
    einsum("cf,eg,fg->ce", &[j_inv, j_inv, phi])
}

/// `X = (1/2n)(Phi_de Phi^de + nabla^c S_c)`.
pub fn theta_scalar(s: &FedosovStructure, d: &CurvatureDecomposition) -> RationalExpr {
    let n = s.n() as i64;
    let phi_up = raise_both(&d.phi, &s.j_inv);
    let sq = einsum("de,de->", &[&d.phi, &phi_up]);
    let div_s = einsum("cd,dc->", &[&s.j_inv, &s.conn.covariant_derivative(&d.s)]);
    sq.add(&div_s).scale_ratio(1, 2 * n).value().clone()
}

fn curvature_data(s: &FedosovStructure, d: &CurvatureDecomposition) -> CurvatureData {
    let n = s.n() as i64;
    let phi_up = raise_both(&d.phi, &s.j_inv);
    let grad_y = s.conn.covariant_derivative(&d.y);
    let div_y = einsum("cd,dabc->ab", &[&s.j_inv, &grad_y]);
    let v_phi = einsum("abce,ce->ab", &[&d.v, &phi_up]);
    CurvatureData {
        v: d.v.clone(),
        y: d.y.clone(),
        s: d.s.clone(),
        phi: d.phi.clone(),
        sigma_coeff: div_y.sub(&v_phi).scale_ratio(-1, 2 * n),
        x: theta_scalar(s, d),
        j: s.j.clone(),
        j_inv: s.j_inv.clone(),
    }
}

/// The curvature display in Fedosov gauge applied to a section without
/// spectators.
fn assembled_on(c: &CurvatureData, t: &TractorSection) -> TractorSection {
    let sigma_v = t.sigma.value();
    let rho_v = t.rho.value();
    let mu_up = t.mu.raise(0, &c.j_inv).expect("lower slot");
    let sigma = c.j.scale(rho_v).scale_ratio(-2, 1);
    // V_abcd mu^d + Y_abc sigma - 2 J_ab (S_c sigma - Phi_cd mu^d)
    let v_mu = einsum("abcd,d->abc", &[&c.v, &mu_up]);
    let phi_mu = einsum("cd,d->c", &[&c.phi, &mu_up]);
    let inner = c.s.scale(sigma_v).sub(&phi_mu);
    let mu = v_mu.add(&c.y.scale(sigma_v)).sub(&c.j.outer(&inner).scale_ratio(2, 1));
    // Y_abc mu^c + coeff sigma - 2 J_ab (S_c mu^c - X sigma)
    let y_mu = einsum("abc,c->ab", &[&c.y, &mu_up]);
    let s_mu = einsum("c,c->", &[&c.s, &mu_up]);
    let inner = s_mu.value() - &(&c.x * sigma_v);
    let rho = y_mu.add(&c.sigma_coeff.scale(sigma_v)).sub(&c.j.scale(&inner).scale_ratio(2, 1));
    TractorSection { sigma, mu, rho }
}

/// Curvature columns assembled from `(V, Y, Phi, S)`; Fedosov gauge only.
pub fn assembled_curvature_columns(s: &FedosovStructure, d: &CurvatureDecomposition) -> Vec<TractorSection> {
    let c = curvature_data(s, d);
    (0..s.dim() + 2).map(|k| assembled_on(&c, &TractorSection::basis(s.dim(), k))).collect()
}

/// Extracts `E` from columns of the form `2 J_ab E`, as a matrix whose
/// column `k` is `E` applied to basis section `k`.
pub fn endomorphism_part(cols: &[TractorSection], j_inv: &Tensor, n: usize) -> Matrix {
    let scale = RationalExpr::from_ratio(j_inv.dim(), 1, 4 * n as i64);
    let extracted: Vec<Vec<RationalExpr>> = cols
        .iter()
        .map(|c| {
            let e = TractorSection {
                sigma: einsum("ab,ab->", &[j_inv, &c.sigma]),
                mu: einsum("ab,abc->c", &[j_inv, &c.mu]),
                rho: einsum("ab,ab->", &[j_inv, &c.rho]),
            };
            e.column_at(&[]).iter().map(|x| x * &scale).collect()
        })
        .collect();
    linalg::transpose(&extracted)
}

/// Columns minus `2 J_ab E`, the part trace-free against `J^{ab}`.
pub fn trace_free_part(cols: &[TractorSection], e: &Matrix, j: &Tensor) -> Vec<TractorSection> {
    cols.iter()
        .enumerate()
        .map(|(k, c)| {
            let col: Vec<RationalExpr> = e.iter().map(|row| row[k].clone()).collect();
            let es = TractorSection::from_column(&col);
            c.sub(&es.times_form(j).scale(&RationalExpr::from_integer(j.dim(), 2)))
        })
        .collect()
}

/// `h^{-1}` for the pairing matrix `h = [[0,0,1],[0,-J^{bc},0],[-1,0,0]]`.
fn pairing_inverse(j: &Tensor) -> Matrix {
    let dim = j.dim();
    let size = dim + 2;
    let mut m = vec![vec![RationalExpr::zero(dim); size]; size];
    m[0][size - 1] = RationalExpr::from_integer(dim, -1);
    m[size - 1][0] = RationalExpr::one(dim);
    for b in 0..dim {
        for c in 0..dim {
            m[b + 1][c + 1] = j.get(&[b, c]).clone();
        }
    }
    m
}

/// `Theta = E h^{-1}`, the bilinear form with `E = Theta h`.
pub fn theta_from_endomorphism(e: &Matrix, j: &Tensor) -> Matrix {
    linalg::mat_mul(e, &pairing_inverse(j))
}

/// The pieces `(Phi, S, X)` of `Theta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theta {
    pub phi: Tensor,
    pub s: Tensor,
    pub x: RationalExpr,
}

impl Theta {
    pub fn from_decomposition(s: &FedosovStructure, d: &CurvatureDecomposition) -> Self {
        Self { phi: d.phi.clone(), s: d.s.clone(), x: theta_scalar(s, d) }
    }

    /// `[[-1, 0, 0], [0, -Phi_bc, S_b], [0, S_c, -X]]`.
    pub fn matrix(&self) -> Matrix {
        let dim = self.phi.dim();
        let size = dim + 2;
        let mut m = vec![vec![RationalExpr::zero(dim); size]; size];
        m[0][0] = RationalExpr::from_integer(dim, -1);
        for b in 0..dim {
            for c in 0..dim {
                m[b + 1][c + 1] = -self.phi.get(&[b, c]);
            }
            m[b + 1][size - 1] = self.s.get(&[b]).clone();
            m[size - 1][b + 1] = self.s.get(&[b]).clone();
        }
        m[size - 1][size - 1] = -&self.x;
        m
    }
}

/// First nonzero entry of a stack of matrices, as a check.
pub fn matrices_check(name: &str, mats: &[Matrix], chart: &Chart) -> Check {
    for (a, m) in mats.iter().enumerate() {
        for (i, row) in m.iter().enumerate() {
            for (k, x) in row.iter().enumerate() {
                if !x.is_zero() {
                    let mut c = Check::flag(name, false, None);
                    c.witness = Some(Witness { index: vec![a + 1, i + 1, k + 1], value: chart.display(x) });
                    return c;
                }
            }
        }
    }
    Check::flag(name, true, None)
}

pub fn matrix_check(name: &str, m: &Matrix, chart: &Chart) -> Check {
    let mut c = matrices_check(name, std::slice::from_ref(m), chart);
    if let Some(w) = c.witness.as_mut() {
        w.index.remove(0);
    }
    c
}

pub fn matrix_sub(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

/// Result of testing whether the curvature is `2 J_ab Theta`.
#[derive(Clone, Debug)]
pub struct Einstein {
    pub is_einstein: bool,
    pub endomorphism: Matrix,
    /// `Theta` as a bilinear form; present when the curvature has the form.
    pub theta: Option<Matrix>,
    pub check: Check,
}

/// Tests the Einstein condition using the commutator route in the
/// representative `ctx` was built for.
pub fn einstein_check(ctx: &TractorContext) -> Einstein {
    let cols = ctx.curvature_columns(Variant::Full);
    let e = endomorphism_part(&cols, &ctx.j_inv, ctx.n);
    let rest = trace_free_part(&cols, &e, &ctx.j);
    let bad = rest.iter().position(|r| !r.is_zero());
    let check = match bad {
        None => Check::flag("tractor.einstein", true, None),
        Some(k) => rest[k].check("tractor.einstein", &ctx.chart).with_note(format!("basis section {}", k + 1)),
    };
    let is_einstein = bad.is_none();
    let theta = is_einstein.then(|| theta_from_endomorphism(&e, &ctx.j));
    Einstein { is_einstein, endomorphism: e, theta, check }
}

/// Compares an Einstein verdict with `V` and, when `V = 0`, demands `Y = 0`.
pub fn einstein_consistency(e: &Einstein, d: &CurvatureDecomposition) -> crate::Result<()> {
    if e.is_einstein != d.v.is_zero() {
        return Err(crate::Error::Equation {
            equation: "tractor.einstein".into(),
            witness: format!("Einstein is {} but V vanishing is {}", e.is_einstein, d.v.is_zero()),
        });
    }
    if d.v.is_zero() && !d.y.is_zero() {
        return Err(crate::Error::Equation {
            equation: "curvature.contracted-bianchi".into(),
            witness: "V vanishes but Y does not".into(),
        });
    }
    Ok(())
}

/// Two-route comparison of the tractor curvature and its block structure.
/// Requires Fedosov gauge.
pub fn curvature_suite(s: &FedosovStructure, d: &CurvatureDecomposition) -> Suite {
    let ctx = TractorContext::new(s, d);
    let commutator = ctx.curvature_columns(Variant::Full);
    let assembled = assembled_curvature_columns(s, d);
    let mut suite = Suite::new();
    let diff: Vec<TractorSection> = commutator.iter().zip(&assembled).map(|(a, b)| a.sub(b)).collect();
    suite.push(first_failing("tractor.curvature.two-route", &diff, &s.chart));

    // The V/Y block lies in the J-trace-free 2-forms.
    let e = endomorphism_part(&commutator, &ctx.j_inv, ctx.n);
    let theta = theta_from_endomorphism(&e, &ctx.j);
    let expected = Theta::from_decomposition(s, d).matrix();
    suite.push(matrix_check("tractor.curvature.theta", &matrix_sub(&theta, &expected), &s.chart));
    let rest = trace_free_part(&commutator, &e, &ctx.j);
    let traces: Vec<TractorSection> = rest
        .iter()
        .map(|r| TractorSection {
            sigma: einsum("ab,ab->", &[&ctx.j_inv, &r.sigma]),
            mu: einsum("ab,abc->c", &[&ctx.j_inv, &r.mu]),
            rho: einsum("ab,ab->", &[&ctx.j_inv, &r.rho]),
        })
        .collect();
    suite.push(first_failing("tractor.curvature.trace-free-block", &traces, &s.chart));
    suite
}

fn first_failing(name: &str, sections: &[TractorSection], chart: &Chart) -> Check {
    for (k, t) in sections.iter().enumerate() {
        let c = t.check(name, chart);
        if !c.passed() {
            let note = c.note.clone().unwrap_or_default();
            return c.with_note(format!("{note} of basis section {}", k + 1));
        }
    }
    Check::flag(name, true, None)
}

/// `nabla_a Theta` for `Theta` a section of `T (x) T`, by Leibniz from the
/// tractor connection. Index order `[a][I][K]`.
pub fn grad_theta(ctx: &TractorContext, theta: &Matrix) -> Vec<Matrix> {
    let dim = ctx.dim();
    let size = dim + 2;
    let columns: Vec<TractorSection> = (0..size)
        .map(|k| {
            let col: Vec<RationalExpr> = theta.iter().map(|row| row[k].clone()).collect();
            ctx.tractor_connection(&TractorSection::from_column(&col))
        })
        .collect();
    let basis: Vec<TractorSection> =
        (0..size).map(|j| ctx.tractor_connection(&TractorSection::basis(dim, j))).collect();
    (0..dim)
        .map(|a| {
            let first: Vec<Vec<RationalExpr>> = columns.iter().map(|c| c.column_at(&[a])).collect();
            let first = linalg::transpose(&first);
            // (nabla e_J)^K as a matrix [J][K]
            let conn: Matrix = basis.iter().map(|b| b.column_at(&[a])).collect();
            let second = linalg::mat_mul(theta, &conn);
            let shift = ctx.shift.get(&[a]).clone();
            (0..size)
                .map(|i| {
                    (0..size)
                        .map(|k| {
                            let mut v = &first[i][k] + &second[i][k];
                            if !shift.is_zero() {
                                v = &v - &(&(&shift * &theta[i][k]) * &RationalExpr::from_integer(dim, 2));
                            }
                            v
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Mobility and prolongation equations together with `nabla Theta = 0`.
/// Requires Fedosov gauge and `V = 0`.
pub fn grad_theta_suite(s: &FedosovStructure, d: &CurvatureDecomposition) -> Suite {
    let chart = &s.chart;
    let dim = s.dim();
    let n = s.n() as i64;
    let ctx = TractorContext::new(s, d);
    let theta = Theta::from_decomposition(s, d);
    let m = theta.matrix();
    let grad = grad_theta(&ctx, &m);
    let mut suite = Suite::new();
    suite.push(matrices_check("theta.parallel", &grad, chart));

    let nab = |t: &Tensor| s.conn.covariant_derivative(t);
    let grad_phi = nab(&d.phi);
    let grad_s = nab(&d.s);
    let grad_x = Tensor::scalar(theta.x.clone()).partial();
    let phi_mixed = einsum("ac,cd,bd->ab", &[&d.phi, &s.j_inv, &d.phi]);
    let s_up = d.s.raise(0, &s.j_inv).expect("lower slot");
    let phi_s = einsum("ab,b->a", &[&d.phi, &s_up]);

    // The displayed blocks of nabla_a Theta.
    let js = |x: &Tensor, js: [usize; 2], xs: usize| {
        let mut perm = [0; 3];
        perm[js[0]] = 0;
        perm[js[1]] = 1;
        perm[xs] = 2;
        s.j.outer(x).permute(&perm)
    };
    let mm = grad_phi.neg().sub(&js(&d.s, [0, 1], 2)).sub(&js(&d.s, [0, 2], 1));
    let mr = grad_s.add(&s.j.scale(&theta.x)).sub(&phi_mixed);
    let rr = grad_x.neg().add(&phi_s.scale_ratio(2, 1));
    let display: Vec<Matrix> = (0..dim)
        .map(|a| {
            let mut out = vec![vec![chart.zero(); dim + 2]; dim + 2];
            for b in 0..dim {
                for c in 0..dim {
                    out[b + 1][c + 1] = mm.get(&[a, b, c]).clone();
                }
                out[b + 1][dim + 1] = mr.get(&[a, b]).clone();
                out[dim + 1][b + 1] = mr.get(&[a, b]).clone();
            }
            out[dim + 1][dim + 1] = rr.get(&[a]).clone();
            out
        })
        .collect();
    let diff: Vec<Matrix> = grad.iter().zip(&display).map(|(x, y)| matrix_sub(x, y)).collect();
    suite.push(matrices_check("theta.gradient-display", &diff, chart));

    let grad_phi_eq = grad_phi.add(&js(&d.s, [0, 1], 2)).add(&js(&d.s, [0, 2], 1));
    suite.push(Check::vanishing("mobility.grad-phi", &grad_phi_eq, chart));

    // Trace-free part of nabla_a Phi^{bc}.
    let phi_up = raise_both(&d.phi, &s.j_inv);
    let z = nab(&phi_up);
    let lambda = z.contract(1, 0).expect("variance").scale_ratio(1, 2 * n + 1);
    let dl = Tensor::delta(dim).outer(&lambda);
    let free = z.sub(&dl).sub(&dl.permute(&[0, 2, 1]));
    suite.push(Check::vanishing("mobility.trace-free", &free, chart));

    let delta_s = Tensor::delta(dim).outer(&s_up);
    let first = z.add(&delta_s).add(&delta_s.permute(&[0, 2, 1]));
    suite.push(Check::vanishing("prolongation.phi", &first, chart));
    let phi_phi = einsum("ac,bc->ab", &[&d.phi, &phi_up]);
    let second = nab(&s_up).add(&Tensor::delta(dim).scale(&theta.x)).sub(&phi_phi);
    suite.push(Check::vanishing("prolongation.s", &second, chart));
    let third = Tensor::scalar(theta.x.clone()).partial().sub(&phi_s.scale_ratio(2, 1));
    suite.push(Check::vanishing("prolongation.x", &third, chart));
    suite
}

/// Residual of `nabla^c Y_abc = V_abce Phi^ce + 2 J_ab (Phi_de Phi^de + nabla^c S_c)
/// + 2n (nabla_a S_b - nabla_b S_a + 2 Phi_a^c Phi_bc)`.
pub fn york_divergence_residual(s: &FedosovStructure, d: &CurvatureDecomposition) -> Tensor {
    let n = s.n() as i64;
    let nab = |t: &Tensor| s.conn.covariant_derivative(t);
    let lhs = einsum("cd,dabc->ab", &[&s.j_inv, &nab(&d.y)]);
    let phi_up = raise_both(&d.phi, &s.j_inv);
    let v_phi = einsum("abce,ce->ab", &[&d.v, &phi_up]);
    let sq = einsum("de,de->", &[&d.phi, &phi_up]);
    let div_s = einsum("cd,dc->", &[&s.j_inv, &nab(&d.s)]);
    let scalar = sq.value() + div_s.value();
    let gs = nab(&d.s);
    let curl = gs.sub(&gs.permute(&[1, 0]));
    let pp = einsum("cd,ad,bc->ab", &[&s.j_inv, &d.phi, &d.phi]);
    let rhs =
        v_phi.add(&s.j.scale(&scalar).scale_ratio(2, 1)).add(&curl.add(&pp.scale_ratio(2, 1)).scale_ratio(2 * n, 1));
    lhs.sub(&rhs)
}

pub fn york_divergence_check(s: &FedosovStructure, d: &CurvatureDecomposition) -> Check {
    Check::vanishing("curvature.york-divergence", &york_divergence_residual(s, d), &s.chart)
}

/// `d_a <t, u> - <nabla_a t, u> - <t, nabla_a u>` for the chosen connection.
pub fn metricity_residual(ctx: &TractorContext, t: &TractorSection, u: &TractorSection, v: Variant) -> Tensor {
    let lhs = pairing(t, u, &ctx.j_inv).partial();
    let dt = ctx.apply(t, v);
    let du = ctx.apply(u, v);
    lhs.sub(&pairing(&dt, u, &ctx.j_inv)).add(&pairing(&du, t, &ctx.j_inv))
}

/// Gauge equivariance of both connections and invariance of the pairing
/// for the sections `ts` under the rescaling `g` of `s`.
pub fn equivariance_suite(
    s: &FedosovStructure,
    d: &CurvatureDecomposition,
    g: &GaugeTransform,
    ts: &[TractorSection],
) -> Suite {
    let chart = &s.chart;
    let ctx = TractorContext::new(s, d);
    let hat = s.rescale(g);
    let dh = crate::curvature::full_decompose(&hat);
    let ctx_hat = TractorContext::in_frame(&hat, &dh, g);
    let change = |t: &TractorSection| splitting_change(t, g, s);
    let mut suite = Suite::new();
    for (v, name) in [(Variant::Proto, "tractor.equivariance.proto"), (Variant::Full, "tractor.equivariance.full")] {
        let diffs: Vec<TractorSection> =
            ts.iter().map(|t| ctx_hat.apply(&change(t), v).sub(&change(&ctx.apply(t, v)))).collect();
        suite.push(first_failing(name, &diffs, chart));
    }
    let mut pair = Vec::new();
    for (i, t) in ts.iter().enumerate() {
        for u in &ts[i + 1..] {
            let before = pairing(t, u, &s.j_inv);
            let after = pairing(&change(t), &change(u), &s.j_inv);
            pair.push(after.sub(&before));
        }
    }
    let bad = pair.iter().find(|p| !p.is_zero()).unwrap_or_else(|| &pair[0]);
    suite.push(Check::vanishing("tractor.pairing-invariant", bad, chart));
    suite
}

/// Metricity of both connections for every pair among `ts`.
pub fn metricity_suite(ctx: &TractorContext, ts: &[TractorSection]) -> Suite {
    let mut suite = Suite::new();
    for (v, name) in [(Variant::Proto, "tractor.metricity.proto"), (Variant::Full, "tractor.metricity.full")] {
        let mut worst = Tensor::zeros(ctx.dim(), &[Down]);
        for (i, t) in ts.iter().enumerate() {
            for u in &ts[i..] {
                let r = metricity_residual(ctx, t, u, v);
                if !r.is_zero() {
                    worst = r;
                }
            }
        }
        suite.push(Check::vanishing(name, &worst, &ctx.chart));
    }
    suite
}

fn flatten(x: &TractorSection) -> Vec<RationalExpr> {
    x.sigma.components().iter().chain(x.mu.components()).chain(x.rho.components()).cloned().collect()
}

/// Solves `tractor - proto = c1 H1 + c2 H2` on the sections `ts`.
///
/// Returns `None` unless the solution is unique and constant.
pub fn homomorphism_coefficients(ctx: &TractorContext, ts: &[TractorSection]) -> Option<(BigRational, BigRational)> {
    let mut rows: Matrix = Vec::new();
    let mut rhs = Vec::new();
    for t in ts {
        let diff = ctx.tractor_connection(t).sub(&ctx.proto_connection(t));
        let h1 = flatten(&ctx.first_homomorphism(t));
        let h2 = flatten(&ctx.second_homomorphism(t));
        for ((a, b), c) in h1.into_iter().zip(h2).zip(flatten(&diff)) {
            if !(a.is_zero() && b.is_zero() && c.is_zero()) {
                rows.push(vec![a, b]);
                rhs.push(c);
            }
        }
    }
    if rows.is_empty() {
        return None;
    }
    match linalg::solve(&rows, &rhs) {
        Solution::Unique(v) => Some((v[0].constant_value()?, v[1].constant_value()?)),
        _ => None,
    }
}

/// Both homomorphisms commute with the change of splitting under `g`.
pub fn homomorphism_invariance_suite(
    s: &FedosovStructure,
    d: &CurvatureDecomposition,
    g: &GaugeTransform,
    ts: &[TractorSection],
) -> Suite {
    let ctx = TractorContext::new(s, d);
    let hat = s.rescale(g);
    let dh = crate::curvature::full_decompose(&hat);
    let ctx_hat = TractorContext::in_frame(&hat, &dh, g);
    let change = |t: &TractorSection| splitting_change(t, g, s);
    let mut suite = Suite::new();
    let first: Vec<TractorSection> =
        ts.iter().map(|t| ctx_hat.first_homomorphism(&change(t)).sub(&change(&ctx.first_homomorphism(t)))).collect();
    suite.push(first_failing("tractor.homomorphism.first", &first, &s.chart));
    let second: Vec<TractorSection> =
        ts.iter().map(|t| ctx_hat.second_homomorphism(&change(t)).sub(&change(&ctx.second_homomorphism(t)))).collect();
    suite.push(first_failing("tractor.homomorphism.second", &second, &s.chart));
    suite
}

/// Rank of a square matrix at a seeded generic point together with the
/// symbolic rank-one test.
pub fn theta_rank(theta: &Matrix, seed: u64) -> (usize, bool) {
    (linalg::rank_at_generic_point(theta, seed), linalg::rank_at_most_one(theta))
}

/// Whether a square matrix is symmetric.
pub fn is_symmetric(m: &Matrix) -> bool {
    m.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(k, x)| *x == m[k][i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Connection;
    use crate::curvature::full_decompose;
    use crate::sample;
    use crate::structure::{check_structure, darboux_form};

    fn chart() -> Chart {
        Chart::standard(4).unwrap()
    }

    fn flat(c: &Chart) -> FedosovStructure {
        check_structure(c, &darboux_form(c), &Connection::flat(4)).unwrap()
    }

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn flat_model_has_flat_tractors_and_rank_one_theta() {
        let c = chart();
        let s = flat(&c);
        let d = full_decompose(&s);
        let ctx = TractorContext::new(&s, &d);
        let cols = ctx.curvature_columns(Variant::Full);
        // Only the rho column carries curvature, namely -2 J_ab in the sigma slot.
        assert!(cols[..5].iter().all(TractorSection::is_zero));
        assert_eq!(cols[5].sigma, s.j.scale_ratio(-2, 1));
        let e = einstein_check(&ctx);
        assert!(e.is_einstein);
        let theta = e.theta.unwrap();
        assert_eq!(theta, Theta::from_decomposition(&s, &d).matrix());
        assert_eq!(theta_rank(&theta, 1), (1, true));
        assert!(curvature_suite(&s, &d).all_passed());
        assert!(grad_theta_suite(&s, &d).all_passed());
    }

    #[test]
    fn pairing_is_skew() {
        let c = chart();
        let s = flat(&c);
        let mut r = sample::rng(3);
        let t = sample::random_section(&c, &mut r);
        let u = sample::random_section(&c, &mut r);
        let tu = pairing(&t, &u, &s.j_inv);
        assert_eq!(tu, pairing(&u, &t, &s.j_inv).neg());
        assert!(pairing(&t, &t, &s.j_inv).is_zero());
    }

    #[test]
    fn symplectic_curvature_two_routes() {
        let c = chart();
        let mut r = sample::rng(11);
        let s = sample::random_symplectic(&c, &mut r);
        let d = full_decompose(&s);
        assert!(!d.phi.is_zero());
        let suite = curvature_suite(&s, &d);
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
        assert!(york_divergence_check(&s, &d).passed());
        let ctx = TractorContext::new(&s, &d);
        let t = sample::random_section(&c, &mut r);
        assert_eq!(ctx.tractor_connection(&t), fedosov_gauge_connection(&s, &d, &t));
        let u = sample::random_section(&c, &mut r);
        assert!(metricity_suite(&ctx, &[t, u]).all_passed());
        // Generic symplectic connections are not Einstein.
        let e = einstein_check(&ctx);
        assert!(!e.is_einstein);
        einstein_consistency(&e, &d).unwrap();
    }

    #[test]
    fn connections_commute_with_splitting_changes() {
        let c = chart();
        let mut r = sample::rng(5);
        let smp = sample::random_structure(&c, &mut r, false).unwrap();
        let s = &smp.structure;
        let d = full_decompose(s);
        let g = sample::random_gauge(&c, &mut r);
        let ts = [sample::random_section(&c, &mut r), sample::random_section(&c, &mut r)];
        let suite = equivariance_suite(s, &d, &g, &ts);
        assert!(suite.all_passed(), "{:?}", suite.failures().collect::<Vec<_>>());
        let ctx = TractorContext::new(s, &d);
        assert!(metricity_suite(&ctx, &ts).all_passed());
    }

    #[test]
    fn homomorphisms_are_invariant_and_coefficients_recovered() {
        let c = chart();
        let mut r = sample::rng(7);
        let smp = sample::random_structure(&c, &mut r, false).unwrap();
        let s = &smp.structure;
        let d = full_decompose(s);
        let g = sample::random_gauge(&c, &mut r);
        let ts = [sample::random_section(&c, &mut r)];
        assert!(homomorphism_invariance_suite(s, &d, &g, &ts).all_passed());
        let ctx = TractorContext::new(s, &d);
        assert_eq!(homomorphism_coefficients(&ctx, &ts), Some((q(-1, 1), q(9, 5))));
    }

    #[test]
    fn dilation_theta_in_fedosov_gauge() {
        let c = chart();
        let j = darboux_form(&c).scale(&c.norm_squared().recip().unwrap());
        let s = check_structure(&c, &j, &Connection::flat(4)).unwrap().normalize_to_master().unwrap();
        let d = full_decompose(&s);
        let ctx = TractorContext::new(&s, &d);
        let e = einstein_check(&ctx);
        assert!(e.is_einstein);
        let theta = e.theta.unwrap();
        assert!(is_symmetric(&theta));
        assert_eq!(theta_rank(&theta, 2), (1, true));
        let fed = s.to_fedosov_gauge(&c.norm_squared()).unwrap();
        let df = full_decompose(&fed);
        assert!(grad_theta_suite(&fed, &df).all_passed());
    }
}
