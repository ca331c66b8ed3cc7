//! Self-check suites: independent numerical verification of the
//! closed-form volume correction and of the geometric identities.
//!
//! The Jacobian suite rebuilds the log-determinant of the sampling map
//! `proj_mu = exp_mu . PT_{mu0->mu}` from central finite differences and a
//! Lorentzian Gram matrix — no use of the closed form being verified — and
//! compares it with `(n-1) log(sinh r / r)`.

use rand::Rng;

use crate::lorentz::{
    distance, exp_map, lift_to_manifold, log_map, minkowski_dot, parallel_transport,
    inverse_parallel_transport, LorentzPoint, TangentVector,
};
use crate::wrapped::log_det_proj;

/// Outcome of one named check suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckReport {
            name,
            passed,
            detail,
        }
    }
}

/// `proj_mu` on raw base coordinates: the full sampling map of the wrapped
/// normal with identity covariance.
fn proj(mu: &LorentzPoint, vt: &[f64]) -> Vec<f64> {
    let v0 = TangentVector::at_origin(vt);
    let u = parallel_transport(mu, &v0).expect("transport");
    exp_map(&u).expect("exp").into_coords()
}

/// log|det| of the differential of `proj_mu` at `vt`, via central finite
/// differences and the Lorentzian Gram matrix of the columns:
/// `log det = (1/2) log det(J^T G_L J)`.
pub fn fd_log_det_proj(mu: &LorentzPoint, vt: &[f64], h: f64) -> f64 {
    let n = vt.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut plus = vt.to_vec();
        let mut minus = vt.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let zp = proj(mu, &plus);
        let zm = proj(mu, &minus);
        let col: Vec<f64> = zp
            .iter()
            .zip(&zm)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        cols.push(col);
    }
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = minkowski_dot(&cols[i], &cols[j]);
        }
    }
    0.5 * log_det_spd(&mut gram, n)
}

/// log det of a symmetric positive-definite matrix via in-place Cholesky.
fn log_det_spd(a: &mut [f64], n: usize) -> f64 {
    let mut log_det = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                assert!(sum > 0.0, "matrix not positive definite");
                let d = sum.sqrt();
                a[i * n + i] = d;
                log_det += 2.0 * d.ln();
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    log_det
}

fn random_unit(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn random_mu(n: usize, max_dist: f64, rng: &mut impl Rng) -> LorentzPoint {
    let dir = random_unit(n, rng);
    let r = rng.gen_range(0.0..max_dist);
    lift_to_manifold(&dir.iter().map(|d| d * r).collect::<Vec<_>>()).expect("lift")
}

/// Verifies the closed-form log-determinant `(n-1) log(sinh r / r)` against
/// the finite-difference oracle for n in {2, 3, 5}, r in {0.1, 1, 2, 4},
/// `pairs_per_case` random (mu, direction) pairs each, at relative
/// tolerance `rel_tol`.
pub fn jacobian_oracle_suite(
    pairs_per_case: usize,
    rel_tol: f64,
    rng: &mut impl Rng,
) -> CheckReport {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for &n in &[2usize, 3, 5] {
        for &r in &[0.1, 1.0, 2.0, 4.0] {
            for _ in 0..pairs_per_case {
                let mu = random_mu(n, 3.0, rng);
                let dir = random_unit(n, rng);
                let vt: Vec<f64> = dir.iter().map(|d| d * r).collect();
                let got = fd_log_det_proj(&mu, &vt, 1e-5);
                let want = log_det_proj(r, n);
                let rel = if want.abs() > 1e-12 {
                    (got - want).abs() / want.abs()
                } else {
                    (got - want).abs()
                };
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    CheckReport::new(
        "jacobian-oracle",
        worst <= rel_tol,
        format!("{checked} cases, worst rel error {worst:.3e} (tol {rel_tol:.1e})"),
    )
}

/// Round-trip and isometry identities: log.exp, exp.log, inverse transport,
/// transport isometry, and norm preservation, `cases` random draws each.
pub fn roundtrip_suite(cases: usize, rng: &mut impl Rng) -> CheckReport {
    let n = 3;
    let mut worst_log_exp: f64 = 0.0;
    let mut worst_exp_log: f64 = 0.0;
    let mut worst_pt: f64 = 0.0;
    let mut worst_iso: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;

    for _ in 0..cases {
        let mu = random_mu(n, 3.0, rng);
        let nu = random_mu(n, 3.0, rng);

        // Random tangent at mu with norm <= 5.
        let dir = random_unit(n, rng);
        let scale = rng.gen_range(0.0..5.0);
        let v0 = TangentVector::at_origin(&dir.iter().map(|d| d * scale).collect::<Vec<_>>());
        let u = parallel_transport(&mu, &v0).expect("transport");

        let z = exp_map(&u).expect("exp");
        let u_back = log_map(&mu, &z).expect("log");
        for (a, b) in u_back.coords().iter().zip(u.coords()) {
            worst_log_exp = worst_log_exp.max((a - b).abs());
        }

        let norm = u.norm().expect("norm");
        let d = distance(&mu, &z).expect("distance");
        worst_norm = worst_norm.max((d - norm).abs() / norm.max(1.0));

        // exp.log on a random point pair.
        let zu = log_map(&mu, &nu).expect("log pair");
        let nu_back = exp_map(&zu).expect("exp pair");
        for (a, b) in nu_back.coords().iter().zip(nu.coords()) {
            worst_exp_log = worst_exp_log.max((a - b).abs());
        }

        // Transport round-trip and isometry.
        let w0 = TangentVector::at_origin(&random_unit(n, rng));
        let v = parallel_transport(&mu, &v0).expect("pt v");
        let w = parallel_transport(&mu, &w0).expect("pt w");
        let pv = parallel_transport(&nu, &v).expect("pt v on");
        let pw = parallel_transport(&nu, &w).expect("pt w on");
        let v_back = inverse_parallel_transport(&mu, &pv).expect("pt back");
        for (a, b) in v_back.coords().iter().zip(v.coords()) {
            worst_pt = worst_pt.max((a - b).abs());
        }
        let before = minkowski_dot(v.coords(), w.coords());
        let after = minkowski_dot(pv.coords(), pw.coords());
        worst_iso = worst_iso.max((before - after).abs());
    }

    let passed = worst_log_exp <= 1e-9
        && worst_exp_log <= 1e-9
        && worst_pt <= 1e-10
        && worst_iso <= 1e-10
        && worst_norm <= 1e-9;
    CheckReport::new(
        "round-trips",
        passed,
        format!(
            "{cases} cases: log.exp {worst_log_exp:.3e} (1e-9), exp.log {worst_exp_log:.3e} \
             (1e-9), PT {worst_pt:.3e} (1e-10), isometry {worst_iso:.3e} (1e-10), \
             norm {worst_norm:.3e} (1e-9)"
        ),
    )
}

/// Runs every self-check suite with a deterministic RNG.
pub fn run_selfcheck(seed: u64) -> Vec<CheckReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    vec![
        jacobian_oracle_suite(20, 1e-4, &mut rng),
        roundtrip_suite(1000, &mut rng),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_det_spd_known_matrix() {
        // det([[4,2],[2,3]]) = 8.
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        assert!((log_det_spd(&mut a, 2) - 8.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fd_jacobian_spot_check() {
        // One cheap case; the full sweep runs in the self-check/acceptance.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mu = random_mu(2, 2.0, &mut rng);
        let vt = [0.6, 0.8]; // r = 1
        let got = fd_log_det_proj(&mu, &vt, 1e-5);
        let want = log_det_proj(1.0, 2);
        assert!((got - want).abs() / want.abs() < 1e-5, "got {got}, want {want}");
    }
}
