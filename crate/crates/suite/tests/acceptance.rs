//! Acceptance suite: one PASS/FAIL line per criterion, exact arithmetic
//! throughout.

use std::process::ExitCode;

use num_traits::Signed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fedosov::connection::Connection;
use fedosov::curvature::{
    contracted_bianchi_check, decompose_curvature, full_assemble, raise_curvature, transformation_suite,
};
use fedosov::examples::{self, ExampleSpec, Quantity};
use fedosov::linalg::{self, Solution};
use fedosov::sample::{self, Sample};
use fedosov::structure::{projective_invariance_suite, FedosovStructure};
use fedosov::tensor::multi_indices;
use fedosov::tractor::{self, TractorContext, TractorSection};
use fedosov::{full_decompose, inverse_two_form, Chart, CurvatureDecomposition, RationalExpr, Suite, Tensor, Variance};

use Variance::{Down, Up};

struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, details: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.details.push(what.into());
        }
    }

    fn suite(&mut self, label: &str, suite: &Suite) {
        for f in suite.failures() {
            let w = f.witness.as_ref().map(|w| format!(" at {:?}: {}", w.index, w.value)).unwrap_or_default();
            let note = f.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default();
            self.require(false, format!("{label}: {}{w}{note}", f.name));
        }
    }
}

fn chart() -> Chart {
    Chart::standard(4).unwrap()
}

fn all_examples() -> Vec<ExampleSpec> {
    examples::NAMES.iter().map(|n| examples::by_name(n).unwrap()).collect()
}

fn c1_structure_fixtures() -> Outcome {
    let mut out = Outcome::new();
    let e = examples::build_dilation_example(2).unwrap();
    let c = chart();
    let inv = c.norm_squared().recip().unwrap();
    let alpha = Tensor::from_fn(4, &[Down], |i| -&(&c.coord(i[0]) * &inv));
    let beta = alpha.scale_ratio(2, 1);
    out.require(e.given.alpha.sub(&alpha).is_zero(), "alpha differs from -x/|x|^2");
    out.require(e.given.beta.sub(&beta).is_zero(), "beta differs from -2x/|x|^2");
    out
}

fn c2_master_normalization() -> Outcome {
    let mut out = Outcome::new();
    let e = examples::build_dilation_example(2).unwrap();
    let c = chart();
    let inv = c.norm_squared().recip().unwrap();
    // With nabla_a phi_b = d_a phi_b - Gamma^c_ab phi_c, the displayed
    // derivative corresponds to Gamma^c_ab = -(x_a delta_b^c + x_b delta_a^c)/|x|^2.
    let gamma = Tensor::from_fn(4, &[Up, Down, Down], |i| {
        let (cc, a, b) = (i[0], i[1], i[2]);
        let mut v = c.zero();
        if b == cc {
            v = &v + &c.coord(a);
        }
        if a == cc {
            v = &v + &c.coord(b);
        }
        -&(&v * &inv)
    });
    let diff = e.master.conn.gamma().sub(&gamma);
    out.require(diff.is_zero(), format!("Gamma differs: {:?}", diff.first_nonzero().map(|(i, v)| (i, c.display(v)))));
    // Generic covector: phi_b = x_{b+1}^2 + (b+1) x_1 x_3.
    let phi = Tensor::from_fn(4, &[Down], |i| {
        let b = i[0];
        &(&c.coord((b + 1) % 4) * &c.coord((b + 1) % 4)) + &(&(&c.coord(0) * &c.coord(2)) * &c.int(b as i64 + 1))
    });
    let displayed = phi.partial().add(&Tensor::from_fn(4, &[Down, Down], |i| {
        let (a, b) = (i[0], i[1]);
        &(&(&c.coord(a) * phi.get(&[b])) + &(&c.coord(b) * phi.get(&[a]))) * &inv
    }));
    let computed = e.master.conn.covariant_derivative(&phi);
    out.require(computed.sub(&displayed).is_zero(), "covariant derivative differs from the displayed formula");
    out.require(e.master.satisfies_master(), "normalized pair fails the master equation");
    out
}

fn random_constant_j(rng: &mut ChaCha8Rng, c: &Chart) -> Tensor {
    loop {
        let mut j = Tensor::zeros(4, &[Down, Down]);
        for a in 0..4 {
            for b in a + 1..4 {
                let v = c.int(rng.gen_range(-3..=3));
                j.set(&[b, a], -&v);
                j.set(&[a, b], v);
            }
        }
        if inverse_two_form(&j).is_ok() {
            return j;
        }
    }
}

fn affine(rng: &mut ChaCha8Rng, c: &Chart) -> RationalExpr {
    let mut e = c.int(rng.gen_range(-3..=3));
    let i = rng.gen_range(0..4);
    e = &e + &(&c.coord(i) * &c.int(rng.gen_range(-2..=2)));
    e
}

/// `J^{ab} B(Phi)_abcd` for the branched part, assembled with `V = P = 0`.
fn branched_trace(phi: &Tensor, j: &Tensor, j_inv: &Tensor) -> Tensor {
    let zero4 = Tensor::zeros(4, &[Down; 4]);
    let zero2 = Tensor::zeros(4, &[Down, Down]);
    let b = fedosov::curvature::branched_assemble(&zero4, phi, j);
    let _ = zero2;
    Tensor::einsum("ab,abcd->cd", &[j_inv, &b]).unwrap()
}

/// Random `(V, Phi, P)` built without the decomposition code: `R` from a
/// symmetric cubic form, `Phi` by solving the trace condition, `V = R - B(Phi)`.
fn random_parts(rng: &mut ChaCha8Rng, c: &Chart, j: &Tensor, j_inv: &Tensor) -> (Tensor, Tensor, Tensor) {
    let mut x = Tensor::zeros(4, &[Down; 4]);
    for idx in multi_indices(4, 4) {
        if idx[1] <= idx[2] && idx[2] <= idx[3] {
            let v = affine(rng, c);
            for p in [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]] {
                x.set(&[idx[0], idx[p[0]], idx[p[1]], idx[p[2]]], v.clone());
            }
        }
    }
    let r = x.sub(&x.permute(&[1, 0, 2, 3]));
    let pairs: Vec<(usize, usize)> = (0..4).flat_map(|a| (a..4).map(move |b| (a, b))).collect();
    let unit = |k: usize| {
        let (a, b) = pairs[k];
        let mut t = Tensor::zeros(4, &[Down, Down]);
        t.set(&[a, b], c.one());
        t.set(&[b, a], c.one());
        t
    };
    let columns: Vec<Tensor> = (0..pairs.len()).map(|k| branched_trace(&unit(k), j, j_inv)).collect();
    let target = Tensor::einsum("ab,abcd->cd", &[j_inv, &r]).unwrap();
    let rows: linalg::Matrix =
        multi_indices(4, 2).map(|i| columns.iter().map(|col| col.get(&i).clone()).collect()).collect();
    let rhs: Vec<RationalExpr> = multi_indices(4, 2).map(|i| target.get(&i).clone()).collect();
    let Solution::Unique(coeffs) = linalg::solve(&rows, &rhs) else { panic!("trace condition not uniquely solvable") };
    let mut phi = Tensor::zeros(4, &[Down, Down]);
    for (k, v) in coeffs.iter().enumerate() {
        phi = phi.add(&unit(k).scale(v));
    }
    let v = r.sub(&fedosov::curvature::branched_assemble(&Tensor::zeros(4, &[Down; 4]), &phi, j));
    let mut p = Tensor::zeros(4, &[Down, Down]);
    for (a, b) in pairs {
        let e = affine(rng, c);
        p.set(&[a, b], e.clone());
        p.set(&[b, a], e);
    }
    (v, phi, p)
}

fn c3_decomposition_round_trip() -> Outcome {
    let mut out = Outcome::new();
    let c = chart();
    let mut rng = sample::rng(303);
    for trial in 0..25 {
        let j = random_constant_j(&mut rng, &c);
        let j_inv = inverse_two_form(&j).unwrap();
        let (v, phi, p) = random_parts(&mut rng, &c, &j, &j_inv);
        let r = raise_curvature(&full_assemble(&v, &phi, &p, &j, 2), &j_inv);
        let parts = decompose_curvature(&r, &j, &j_inv, &c);
        out.require(parts.v == v, format!("trial {trial}: V not recovered"));
        out.require(parts.phi == phi, format!("trial {trial}: Phi not recovered"));
        out.require(parts.p == p, format!("trial {trial}: P not recovered"));
        out.require(parts.beta_skew.is_zero(), format!("trial {trial}: spurious skew part"));
    }
    out
}

fn c4_cp2_fixture() -> Outcome {
    let mut out = Outcome::new();
    let e = examples::build_cpn(2).unwrap();
    let computed = e.compute();
    let suite = e.expected_suite(&computed);
    out.suite("cp2", &suite);
    match e.expected("phi_scale").map(|x| &x.value) {
        Some(Quantity::Scalar(l)) => out.require(l.is_positive(), format!("Phi scale {l} is not positive")),
        _ => out.require(false, "no Phi scale recorded"),
    }
    out.require(computed.einstein.is_einstein, "tractor curvature is not 2 J Theta");
    out
}

fn c5_dilation_tractor() -> Outcome {
    let mut out = Outcome::new();
    let e = examples::build_dilation_example(2).unwrap();
    let computed = e.compute();
    out.require(computed.einstein.is_einstein, "tractor curvature is not of the form 2 J_ab Theta");
    let suite = e.expected_suite(&computed);
    for name in ["example.dilation.theta", "example.dilation.theta_rank"] {
        let check = suite.get(name).unwrap();
        out.suite("dilation", &Suite { checks: vec![check.clone()] });
    }
    out
}

fn sections(rng: &mut ChaCha8Rng, c: &Chart) -> Vec<TractorSection> {
    vec![sample::random_section(c, rng), sample::random_section(c, rng)]
}

fn c6_gauge_equivariance() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = sample::rng(606);
    for e in all_examples() {
        let d = full_decompose(&e.master);
        for k in 0..5 {
            let g = sample::random_gauge(e.chart(), &mut rng);
            let ts = sections(&mut rng, e.chart());
            let suite = tractor::equivariance_suite(&e.master, &d, &g, &ts);
            out.suite(&format!("{} gauge {k}", e.name), &suite);
        }
    }
    out
}

/// Every identity checked per structure: the master representative `s`,
/// its Fedosov representative `f`, a gauge and a projective shift.
fn identity_suite(s: &FedosovStructure, f: &FedosovStructure, rng: &mut ChaCha8Rng) -> Suite {
    let c = &s.chart;
    let g = sample::random_gauge(c, rng);
    let nu = Tensor::from_fn(c.dim(), &[Down], |_| sample::affine(c, rng, 1));
    let mut suite = projective_invariance_suite(c, &s.j, &s.conn, &nu, &g).unwrap();
    suite.extend(s.master_suite());
    suite.extend(transformation_suite(s, &g));
    let df = full_decompose(f);
    suite.push(contracted_bianchi_check(&df, f));
    suite.push(tractor::york_divergence_check(f, &df));
    let ds = full_decompose(s);
    let ts = sections(rng, c);
    suite.extend(tractor::metricity_suite(&TractorContext::new(s, &ds), &ts));
    suite
}

fn random_samples() -> Vec<Sample> {
    let c = chart();
    let mut rng = sample::rng(707);
    (0..10).map(|k| sample::random_structure(&c, &mut rng, k < 5).unwrap()).collect()
}

fn c7_identity_suite() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = sample::rng(77);
    for e in all_examples() {
        out.suite(e.name, &identity_suite(&e.master, &e.fedosov, &mut rng));
    }
    for (k, smp) in random_samples().iter().enumerate() {
        out.suite(&format!("random {k}"), &identity_suite(&smp.structure, &smp.fedosov, &mut rng));
    }
    out
}

fn c8_two_route_curvature() -> Outcome {
    let mut out = Outcome::new();
    for e in all_examples() {
        let d = full_decompose(&e.fedosov);
        out.suite(e.name, &tractor::curvature_suite(&e.fedosov, &d));
    }
    for (k, smp) in random_samples().iter().enumerate().skip(5).take(2) {
        let d = full_decompose(&smp.fedosov);
        out.suite(&format!("random {k}"), &tractor::curvature_suite(&smp.fedosov, &d));
    }
    out
}

/// Adds `x1 + 1` to a single component.
fn perturb(t: &Tensor, idx: &[usize]) -> Tensor {
    let mut out = t.clone();
    let c = chart();
    out.set(idx, t.get(idx) + &(&c.coord(0) + &c.one()));
    out
}

fn perturbed_decomposition(d: &CurvatureDecomposition, field: &str) -> CurvatureDecomposition {
    let mut d = d.clone();
    match field {
        "v" => d.v = perturb(&d.v, &[0, 1, 0, 0]),
        "phi" => d.phi = perturb(&d.phi, &[0, 0]),
        "y" => d.y = perturb(&d.y, &[0, 1, 0]),
        "s" => d.s = perturb(&d.s, &[0]),
        "p" => d.p = perturb(&d.p, &[0, 0]),
        _ => unreachable!(),
    }
    d
}

fn must_fail(out: &mut Outcome, label: &str, suite: &Suite) {
    out.require(!suite.all_passed(), format!("{label}: perturbed input passed"));
}

fn c9_negative_controls() -> Outcome {
    let mut out = Outcome::new();
    let cp2 = examples::build_cpn(2).unwrap();
    let dil = examples::build_dilation_example(2).unwrap();
    let smp = &random_samples()[6];
    let c = chart();
    let mut rng = sample::rng(909);

    // Structure and master equations with one Christoffel symbol changed.
    let mut bad = dil.master.clone();
    bad.conn = Connection::new(perturb(bad.conn.gamma(), &[0, 0, 0])).unwrap();
    must_fail(&mut out, "structure.defining", &bad.defining_suite());
    must_fail(&mut out, "structure.master", &bad.master_suite());
    let g = sample::random_gauge(&c, &mut rng);
    let nu = Tensor::from_fn(4, &[Down], |i| c.int(i[0] as i64 - 1));
    let wrong_factor =
        fedosov::structure::projective_invariance_suite_with_factor(&c, &dil.master.j, &dil.master.conn, &nu, &g, -2)
            .unwrap();
    must_fail(&mut out, "projective.beta-shift", &wrong_factor);

    // Decomposition round trip with a perturbed V.
    let j = random_constant_j(&mut rng, &c);
    let j_inv = inverse_two_form(&j).unwrap();
    let (v, phi, p) = random_parts(&mut rng, &c, &j, &j_inv);
    let r = raise_curvature(&full_assemble(&perturb(&v, &[0, 1, 0, 0]), &phi, &p, &j, 2), &j_inv);
    let parts = decompose_curvature(&r, &j, &j_inv, &c);
    out.require(parts.v != v || parts.phi != phi || parts.p != p, "round trip: perturbed V passed");

    // Curvature-level suites with one perturbed piece.
    let df = full_decompose(&smp.fedosov);
    must_fail(&mut out, "curvature.suite", &perturbed_decomposition(&df, "v").suite(&smp.fedosov));
    let bianchi = contracted_bianchi_check(&perturbed_decomposition(&df, "v"), &smp.fedosov);
    must_fail(&mut out, "contracted-bianchi", &Suite { checks: vec![bianchi] });
    let fab = tractor::york_divergence_check(&smp.fedosov, &perturbed_decomposition(&df, "y"));
    must_fail(&mut out, "york-divergence", &Suite { checks: vec![fab] });
    let mut bad_s = smp.fedosov.clone();
    bad_s.alpha = perturb(&bad_s.alpha, &[0]);
    must_fail(&mut out, "transformation", &transformation_suite(&bad_s, &g));

    // Tractor suites.
    must_fail(&mut out, "two-route", &tractor::curvature_suite(&smp.fedosov, &perturbed_decomposition(&df, "phi")));
    let dc = full_decompose(&cp2.fedosov);
    must_fail(&mut out, "grad-theta", &tractor::grad_theta_suite(&cp2.fedosov, &perturbed_decomposition(&dc, "s")));
    let ts = sections(&mut rng, &c);
    let mut ctx = TractorContext::new(&dil.master, &full_decompose(&dil.master));
    ctx.j = perturb(&ctx.j, &[0, 1]);
    must_fail(&mut out, "metricity", &tractor::metricity_suite(&ctx, &ts));
    let dm = full_decompose(&dil.master);
    let eq = tractor::equivariance_suite(&dil.master, &perturbed_decomposition(&dm, "p"), &g, &ts);
    must_fail(&mut out, "equivariance", &eq);
    let mut bad_cp2 = cp2.clone();
    if let Some(x) = bad_cp2.expected.iter_mut().find(|x| x.name == "phi") {
        if let Quantity::Tensor(t) = &x.value {
            x.value = Quantity::Tensor(perturb(t, &[0, 0]));
        }
    }
    must_fail(&mut out, "fixtures", &bad_cp2.expected_suite(&bad_cp2.compute()));
    out
}

fn c10_mobility() -> Outcome {
    let mut out = Outcome::new();
    for e in [examples::build_cpn(2).unwrap(), examples::build_dilation_example(2).unwrap()] {
        let d = full_decompose(&e.fedosov);
        out.suite(e.name, &tractor::grad_theta_suite(&e.fedosov, &d));
    }
    out
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("1 structure fixtures (dilation alpha, beta)", c1_structure_fixtures),
        ("2 master-equation normalization (dilation connection)", c2_master_normalization),
        ("3 decomposition round trip (25 random assemblies)", c3_decomposition_round_trip),
        ("4 CP^2 fixture (V, Phi, P, Y, S, Theta)", c4_cp2_fixture),
        ("5 dilation tractor fixture (Theta, rank)", c5_dilation_tractor),
        ("6 gauge equivariance (5 gauges per example)", c6_gauge_equivariance),
        ("7 identity suite (examples and 10 random structures)", c7_identity_suite),
        ("8 two-route tractor curvature", c8_two_route_curvature),
        ("9 negative controls", c9_negative_controls),
        ("10 mobility and prolongation", c10_mobility),
    ];
    let mut failed = 0;
    for (label, run) in criteria {
        let out = run();
        println!("{} criterion {label}", if out.passed { "PASS" } else { "FAIL" });
        for d in &out.details {
            println!("    {d}");
        }
        if !out.passed {
            failed += 1;
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
