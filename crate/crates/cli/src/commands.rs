//! The `verify`, `tractor` and `example` pipelines.

use fedosov::connection::bianchi_suite;
use fedosov::curvature::contracted_bianchi_check;
use fedosov::examples::{self, Quantity};
use fedosov::structure::lee_and_beta;
use fedosov::tractor::{self, TractorContext};
use fedosov::{full_decompose, inverse_two_form, sample, Check, CurvatureDecomposition, FedosovStructure, Suite};

use crate::document::Manifold;
use crate::error::CliError;
use crate::report::{Report, Value};

/// Seed for the gauge and sections used by the tractor identities.
const SEED: u64 = 2024;

/// Representatives and decompositions produced by `verify`.
pub struct Verified {
    pub master: FedosovStructure,
    pub master_decomposition: CurvatureDecomposition,
    pub fedosov: Option<(FedosovStructure, CurvatureDecomposition)>,
}

/// Turns a failed defining equation into a report line instead of an error.
fn equation_failure(e: fedosov::Error) -> Result<Check, CliError> {
    match e {
        fedosov::Error::Equation { equation, witness } => Ok(Check::failed(equation, witness)),
        fedosov::Error::GaugeMismatch(w) => Ok(Check::failed("gauge.fedosov", w)),
        other => Err(other.into()),
    }
}

pub fn verify(m: &Manifold, report: &mut Report) -> Result<Option<Verified>, CliError> {
    let chart = &m.chart;
    let j_inv = inverse_two_form(&m.j)?;
    let (alpha, beta) = match lee_and_beta(chart, &m.j, &m.conn) {
        Ok(x) => x,
        Err(e) => {
            report.push(equation_failure(e)?);
            return Ok(None);
        }
    };
    let given = FedosovStructure { chart: chart.clone(), j: m.j.clone(), j_inv, conn: m.conn.clone(), alpha, beta };
    report.tensor("alpha", &given.alpha, chart);
    report.tensor("beta", &given.beta, chart);
    report.add_suite(given.defining_suite());
    if report.failed() {
        return Ok(None);
    }

    let master = match given.normalize_to_master() {
        Ok(s) => s,
        Err(e) => {
            report.push(equation_failure(e)?);
            return Ok(None);
        }
    };
    report.tensor("master.gamma", master.conn.gamma(), chart);
    report.add_suite(master.master_suite());

    let fedosov = match &m.omega_squared {
        Some(w) => match master.to_fedosov_gauge(w) {
            Ok(f) => {
                report.push(Check::flag("gauge.fedosov", true, None));
                Some(f)
            }
            Err(e) => {
                report.push(equation_failure(e)?);
                None
            }
        },
        None if master.is_fedosov_gauge() => Some(master.clone()),
        None => {
            report.push(Check::skipped("gauge.fedosov", "no omega_squared given and alpha does not vanish"));
            None
        }
    };

    let dm = full_decompose(&master);
    report.add_suite(bianchi_suite(&master.conn, &dm.r, chart).renamed("master."));
    report.add_suite(dm.suite(&master).renamed("master."));
    let fedosov = fedosov.map(|f| {
        let df = full_decompose(&f);
        report.add_suite(bianchi_suite(&f.conn, &df.r, chart));
        report.add_suite(df.suite(&f));
        report.push(contracted_bianchi_check(&df, &f));
        (f, df)
    });
    let shown = fedosov.as_ref().map_or(&dm, |(_, d)| d);
    report.derive(
        "decomposition",
        Value::Text(if fedosov.is_some() { "fedosov gauge" } else { "master representative" }.into()),
    );
    report.tensor("p", &shown.p, chart);
    report.tensor("phi", &shown.phi, chart);
    report.derive("v_nonzero", Value::Flag(!shown.v.is_zero()));
    if let Some((_, d)) = &fedosov {
        report.tensor("s", &d.s, chart);
    }
    Ok(Some(Verified { master, master_decomposition: dm, fedosov }))
}

pub fn tractor(m: &Manifold, report: &mut Report) -> Result<(), CliError> {
    let Some(v) = verify(m, report)? else {
        report.push(Check::skipped("tractor", "the structure does not verify"));
        return Ok(());
    };
    let chart = &m.chart;
    let (s, d) = (&v.master, &v.master_decomposition);
    let ctx = TractorContext::new(s, d);
    let einstein = tractor::einstein_check(&ctx);
    report.derive("is_einstein", Value::Flag(einstein.is_einstein));
    report.push(einstein.check.clone());
    if let Err(e) = tractor::einstein_consistency(&einstein, v.fedosov.as_ref().map_or(d, |(_, df)| df)) {
        report.push(equation_failure(e)?);
    }
    if let Some(theta) = &einstein.theta {
        report.matrix("theta", theta, chart);
        report.derive("theta_rank", Value::Count(tractor::theta_rank(theta, SEED).0));
    }

    let mut rng = sample::rng(SEED);
    let g = sample::random_gauge(chart, &mut rng);
    let ts = [sample::random_section(chart, &mut rng), sample::random_section(chart, &mut rng)];
    report.add_suite(tractor::equivariance_suite(s, d, &g, &ts));
    report.add_suite(tractor::metricity_suite(&ctx, &ts));
    report.add_suite(tractor::homomorphism_invariance_suite(s, d, &g, &ts));
    if let Some((c1, c2)) = tractor::homomorphism_coefficients(&ctx, &ts) {
        report.derive("homomorphism_coefficients", Value::Text(format!("{c1}, {c2}")));
    }
    match &v.fedosov {
        Some((f, df)) => {
            report.add_suite(tractor::curvature_suite(f, df));
            report.push(tractor::york_divergence_check(f, df));
            if df.v.is_zero() {
                report.add_suite(tractor::grad_theta_suite(f, df));
            }
        }
        None => report.push(Check::skipped("tractor.curvature", "requires a Fedosov-gauge representative")),
    }
    Ok(())
}

pub fn example(name: &str, report: &mut Report) -> Result<(), CliError> {
    if !examples::NAMES.contains(&name) {
        return Err(CliError::UnknownExample(name.into()));
    }
    let e = examples::by_name(name)?;
    let chart = e.chart();
    let c = e.compute();
    report.tensor("alpha", &e.given.alpha, chart);
    report.tensor("beta", &e.given.beta, chart);
    report.tensor("phi", &c.decomposition.phi, chart);
    report.derive("v_nonzero", Value::Flag(!c.decomposition.v.is_zero()));
    if let Some(l) = &e.curvature_scale {
        report.derive("curvature_scale", Value::Text(l.to_string()));
    }
    if let Some(Quantity::Scalar(k)) = e.actual("phi_scale", &c) {
        report.derive("phi_scale", Value::Text(k.to_string()));
    }
    report.derive("is_einstein", Value::Flag(c.einstein.is_einstein));
    if let Some(theta) = &c.einstein.theta {
        report.matrix("theta", theta, chart);
        report.derive("theta_rank", Value::Count(tractor::theta_rank(theta, SEED).0));
    }
    report.add_suite(e.full_suite_with(&c));
    Ok(())
}

trait Renamed {
    fn renamed(self, prefix: &str) -> Self;
}

impl Renamed for Suite {
    fn renamed(mut self, prefix: &str) -> Self {
        for c in &mut self.checks {
            c.name = format!("{prefix}{}", c.name);
        }
        self
    }
}
