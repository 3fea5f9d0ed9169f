//! Seeded random structures, gauges and sections for property checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::connection::Connection;
use crate::expr::RationalExpr;
use crate::structure::{check_structure, darboux_form, FedosovStructure, GaugeTransform};
use crate::tensor::{inverse_two_form, Chart, Tensor, Variance};
use crate::tractor::TractorSection;
use crate::Result;

use Variance::Down;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small(rng: &mut ChaCha8Rng, bound: i64) -> i64 {
    rng.gen_range(-bound..=bound)
}

/// `c0 + sum c_i x_i` with small integer coefficients.
pub fn affine(chart: &Chart, rng: &mut ChaCha8Rng, bound: i64) -> RationalExpr {
    let mut e = chart.int(small(rng, bound));
    for i in 0..chart.dim() {
        e = &e + &(&chart.coord(i) * &chart.int(small(rng, bound)));
    }
    e
}

/// A polynomial of degree at most two with small integer coefficients.
pub fn quadratic(chart: &Chart, rng: &mut ChaCha8Rng) -> RationalExpr {
    let mut e = affine(chart, rng, 2);
    for i in 0..chart.dim() {
        for k in i..chart.dim() {
            if rng.gen_bool(0.3) {
                let m = &chart.coord(i) * &chart.coord(k);
                e = &e + &(&m * &chart.int(small(rng, 2)));
            }
        }
    }
    e
}

/// `W = 1 + L^2` for a random affine `L` in one or two coordinates;
/// positive everywhere.
pub fn random_gauge(chart: &Chart, rng: &mut ChaCha8Rng) -> GaugeTransform {
    let mut l = chart.int(small(rng, 2));
    for _ in 0..rng.gen_range(1..=2) {
        let i = rng.gen_range(0..chart.dim());
        let c = if rng.gen_bool(0.5) { 1 } else { -1 } * rng.gen_range(1..=2);
        l = &l + &(&chart.coord(i) * &chart.int(c));
    }
    GaugeTransform::new(&chart.one() + &(&l * &l)).expect("positive factor")
}

/// A symplectic connection `Gamma^f_ab = J^{fc} S_abc` with `J` the Darboux
/// form and `S` totally symmetric with affine entries.
pub fn random_symplectic(chart: &Chart, rng: &mut ChaCha8Rng) -> FedosovStructure {
    let dim = chart.dim();
    let j = darboux_form(chart);
    let j_inv = inverse_two_form(&j).expect("Darboux form");
    let mut s3 = Tensor::zeros(dim, &[Down; 3]);
    for idx in crate::tensor::multi_indices(dim, 3) {
        if idx[0] <= idx[1] && idx[1] <= idx[2] {
            let e = affine(chart, rng, 1);
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                s3.set(&[idx[perm[0]], idx[perm[1]], idx[perm[2]]], e.clone());
            }
        }
    }
    let gamma = Tensor::einsum("fc,abc->fab", &[&j_inv, &s3]).expect("valid spec");
    check_structure(chart, &j, &Connection::new(gamma).expect("symmetric")).expect("symplectic connection")
}

/// A master representative together with the gauge that took its Fedosov
/// representative to it.
#[derive(Clone, Debug)]
pub struct Sample {
    pub structure: FedosovStructure,
    pub fedosov: FedosovStructure,
    pub gauge: GaugeTransform,
}

/// Rescales a Fedosov-gauge structure by a random gauge, applies a random
/// projective shift, and normalizes back to the master representative.
pub fn disguise(fedosov: &FedosovStructure, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let chart = &fedosov.chart;
    let gauge = random_gauge(chart, rng);
    let hat = fedosov.rescale(&gauge);
    let nu = Tensor::from_fn(chart.dim(), &[Down], |_| chart.int(small(rng, 1)));
    let shifted = check_structure(chart, &hat.j, &hat.conn.projective_shift(&nu))?;
    Ok(Sample { structure: shifted.normalize_to_master()?, fedosov: fedosov.clone(), gauge })
}

/// A flat Darboux model or a symplectic connection, disguised.
pub fn random_structure(chart: &Chart, rng: &mut ChaCha8Rng, flat_model: bool) -> Result<Sample> {
    let base = if flat_model {
        check_structure(chart, &darboux_form(chart), &Connection::flat(chart.dim()))?
    } else {
        random_symplectic(chart, rng)
    };
    disguise(&base, rng)
}

/// A section without spectators with quadratic entries.
pub fn random_section(chart: &Chart, rng: &mut ChaCha8Rng) -> TractorSection {
    let sigma = quadratic(chart, rng);
    let mu = Tensor::from_fn(chart.dim(), &[Down], |_| quadratic(chart, rng));
    let rho = quadratic(chart, rng);
    TractorSection::new(sigma, mu, rho)
}
