//! The wrapped normal distribution G(mu, Sigma) on the Lorentz model.
//!
//! Construction: draw `v~ ~ N(0, Sigma)` on R^n, embed it as `v = [0, v~]`
//! in the tangent space at the origin, parallel-transport it to `mu`, and
//! push it through the exponential map. Because both maps are invertible and
//! their Jacobian determinants are known in closed form — transport has
//! determinant 1 and the exponential map contributes `(sinh r / r)^{n-1}`
//! with `r = ||u||_L` — the density is exact:
//!
//! `log p(z) = log N(v~ | 0, Sigma) - (n-1) log(sinh r / r)`.
//!
//! The typed [`WrappedNormal`] API works on validated `f64` values; the
//! `*_any` functions at the bottom are generic over [`Real`] so the same
//! formulas run on the autodiff tape for reparametrized training.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lorentz::{
    distance, exp_map, exp_map_any, inverse_parallel_transport, log_map, log_map_any,
    parallel_transport, LorentzPoint, TangentVector,
};
use crate::scalar::{log_sinhc, log_sinhc_from_sq, Real};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Covariance parametrization of the base Gaussian on R^n.
#[derive(Debug, Clone, PartialEq)]
pub enum CovKind {
    /// Identity covariance.
    Unit,
    /// Diagonal covariance given by per-coordinate standard deviations.
    Diagonal(Vec<f64>),
    /// Full covariance `Sigma = L L^T`, `L` lower-triangular with positive
    /// diagonal, stored row-major (`n(n+1)/2` entries).
    Full(Vec<f64>),
}

impl CovKind {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            CovKind::Unit => Ok(()),
            CovKind::Diagonal(sigma) => {
                if sigma.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: sigma.len(),
                    });
                }
                if sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
                    return Err(Error::InvalidConfig(
                        "diagonal standard deviations must be positive and finite".into(),
                    ));
                }
                Ok(())
            }
            CovKind::Full(l) => {
                let want = n * (n + 1) / 2;
                if l.len() != want {
                    return Err(Error::DimensionMismatch {
                        expected: want,
                        got: l.len(),
                    });
                }
                if l.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("Cholesky factor".into()));
                }
                for i in 0..n {
                    if l[i * (i + 1) / 2 + i] <= 0.0 {
                        return Err(Error::InvalidConfig(
                            "Cholesky factor must have a positive diagonal".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// `v~ = scale * eps` for a standard-normal draw `eps`.
    fn scale(&self, eps: &[f64]) -> Vec<f64> {
        match self {
            CovKind::Unit => eps.to_vec(),
            CovKind::Diagonal(sigma) => sigma.iter().zip(eps).map(|(s, e)| s * e).collect(),
            CovKind::Full(l) => {
                let n = eps.len();
                let mut out = vec![0.0; n];
                for i in 0..n {
                    let row = &l[i * (i + 1) / 2..];
                    out[i] = row[..=i].iter().zip(eps).map(|(a, b)| a * b).sum();
                }
                out
            }
        }
    }

    /// `log N(v~ | 0, Sigma)`.
    fn base_log_density(&self, vt: &[f64]) -> f64 {
        let n = vt.len() as f64;
        match self {
            CovKind::Unit => {
                -0.5 * n * LN_2PI - 0.5 * vt.iter().map(|v| v * v).sum::<f64>()
            }
            CovKind::Diagonal(sigma) => {
                let mut acc = -0.5 * n * LN_2PI;
                for (&v, &s) in vt.iter().zip(sigma) {
                    acc -= s.ln() + 0.5 * (v / s) * (v / s);
                }
                acc
            }
            CovKind::Full(l) => {
                // Solve L w = v~ by forward substitution; then
                // log N = -n/2 ln 2pi - sum ln L_ii - |w|^2 / 2.
                let dim = vt.len();
                let mut w = vec![0.0; dim];
                let mut log_det = 0.0;
                for i in 0..dim {
                    let row = &l[i * (i + 1) / 2..];
                    let partial: f64 = row[..i].iter().zip(&w).map(|(a, b)| a * b).sum();
                    w[i] = (vt[i] - partial) / row[i];
                    log_det += row[i].ln();
                }
                -0.5 * n * LN_2PI - log_det - 0.5 * w.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }
}

/// Log-determinant of the sampling map `proj_mu = exp_mu . PT_{mu0->mu}`
/// at radius `r`: `(n-1) * log(sinh r / r)`. Transport contributes 1;
/// only the exponential map distorts volume.
pub fn log_det_proj(r: f64, n: usize) -> f64 {
    (n as f64 - 1.0) * log_sinhc(r)
}

/// A wrapped normal distribution on H^n.
#[derive(Debug, Clone)]
pub struct WrappedNormal {
    mu: LorentzPoint,
    cov: CovKind,
}

impl WrappedNormal {
    pub fn new(mu: LorentzPoint, cov: CovKind) -> Result<Self> {
        cov.validate(mu.dim())?;
        Ok(WrappedNormal { mu, cov })
    }

    /// Standard distribution G(mu0, I) on H^n — the VAE prior.
    pub fn standard(n: usize) -> Self {
        WrappedNormal {
            mu: LorentzPoint::origin(n),
            cov: CovKind::Unit,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn mu(&self) -> &LorentzPoint {
        &self.mu
    }

    pub fn cov(&self) -> &CovKind {
        &self.cov
    }

    /// Draws one sample. Returns the on-manifold point and the base draw
    /// `v~ ~ N(0, Sigma)` (kept for reparametrized training and for
    /// round-trip verification).
    pub fn sample(&self, rng: &mut impl Rng) -> (LorentzPoint, Vec<f64>) {
        let n = self.dim();
        let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let vt = self.cov.scale(&eps);
        let z = self.push_forward(&vt);
        (z, vt)
    }

    /// The deterministic part of sampling: base draw -> manifold point.
    pub fn push_forward(&self, vt: &[f64]) -> LorentzPoint {
        let v0 = TangentVector::at_origin(vt);
        let u = parallel_transport(&self.mu, &v0).expect("transport from origin cannot degenerate");
        exp_map(&u).expect("transported vector stays spacelike")
    }

    /// Inverts the sampling map: recovers the base draw `v~` from a point.
    pub fn recover_base(&self, z: &LorentzPoint) -> Result<Vec<f64>> {
        let u = log_map(&self.mu, z)?;
        let origin = LorentzPoint::origin(self.dim());
        let v = inverse_parallel_transport(&origin, &u)?;
        Ok(v.coords()[1..].to_vec())
    }

    /// Exact log-density via the inverse maps and the closed-form
    /// log-determinant. Finite for every on-manifold `z`; the correction
    /// term vanishes as `z -> mu` and for n = 1.
    pub fn log_prob(&self, z: &LorentzPoint) -> Result<f64> {
        let vt = self.recover_base(z)?;
        let r = distance(&self.mu, z)?;
        Ok(self.cov.base_log_density(&vt) - log_det_proj(r, self.dim()))
    }

    /// Draws a sample together with its log-density, skipping the inverse
    /// maps: the base draw is already known and `r = ||v~||_2` because both
    /// maps preserve norms.
    pub fn sample_with_log_prob(&self, rng: &mut impl Rng) -> (LorentzPoint, f64) {
        let (z, vt) = self.sample(rng);
        let r = vt.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lp = self.cov.base_log_density(&vt) - log_det_proj(r, self.dim());
        (z, lp)
    }

    /// Monte-Carlo KL divergence `D_KL(q || p) ~= (1/k) sum [log q(z_j) -
    /// log p(z_j)]` with `z_j ~ q`.
    pub fn kl_monte_carlo(q: &Self, p: &Self, k: usize, rng: &mut impl Rng) -> Result<f64> {
        if q.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                got: p.dim(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidConfig("KL sample count must be >= 1".into()));
        }
        let mut acc = 0.0;
        for _ in 0..k {
            let (z, log_q) = q.sample_with_log_prob(rng);
            acc += log_q - p.log_prob(&z)?;
        }
        Ok(acc / k as f64)
    }
}

// ---------------------------------------------------------------------------
// Generic (tape-compatible) formulas for reparametrized training.
//
// The location parameter is typically the unconstrained `h` with
// `mu = lift_any(h)`; covariance is diagonal (or unit: sigma of ones).

/// Parallel transport of the origin-tangent `[0, vt]` to `mu`, specialized
/// so no origin constants are needed: with `alpha = mu_0`,
/// `coeff = (sum_i mu_i vt_i) / (mu_0 + 1)`, the result is
/// `[coeff (mu_0 + 1), vt_i + coeff mu_i]`.
pub fn transport_from_origin_any<T: Real>(mu: &[T], vt: &[T]) -> Vec<T> {
    debug_assert_eq!(mu.len(), vt.len() + 1);
    let mut dot = mu[1] * vt[0];
    for i in 1..vt.len() {
        dot = dot + mu[i + 1] * vt[i];
    }
    let denom = mu[0] + 1.0;
    let coeff = dot / denom;
    let mut u = Vec::with_capacity(mu.len());
    u.push(coeff * denom);
    for (i, &v) in vt.iter().enumerate() {
        u.push(v + coeff * mu[i + 1]);
    }
    u
}

/// Inverse of [`transport_from_origin_any`]: transports the tangent `u` at
/// `mu` back to the origin and returns its n spatial coordinates (the time
/// coordinate is identically zero).
pub fn transport_to_origin_any<T: Real>(mu: &[T], u: &[T]) -> Vec<T> {
    debug_assert_eq!(mu.len(), u.len());
    let coeff = u[0] / (mu[0] + 1.0);
    (1..u.len()).map(|i| u[i] - coeff * mu[i]).collect()
}

/// Differentiable log-density of G(mu, diag(sigma^2)) at ambient `z`.
pub fn log_prob_any<T: Real>(mu: &[T], sigma: &[T], z: &[T]) -> T {
    let n = sigma.len();
    debug_assert_eq!(mu.len(), n + 1);
    let u = log_map_any(mu, z);
    let vt = transport_to_origin_any(mu, &u);
    let mut s = vt[0] * vt[0];
    let mut base = -(sigma[0].ln()) - (vt[0] / sigma[0]) * (vt[0] / sigma[0]) * 0.5;
    for i in 1..n {
        s = s + vt[i] * vt[i];
        base = base - sigma[i].ln() - (vt[i] / sigma[i]) * (vt[i] / sigma[i]) * 0.5;
    }
    base - 0.5 * n as f64 * LN_2PI - log_sinhc_from_sq(s) * (n as f64 - 1.0)
}

/// Differentiable log-density of the standard wrapped normal G(mu0, I) at
/// ambient `z`. Specializing the prior avoids putting constant parameter
/// leaves on the tape: at the origin `alpha = z_0`, transport is the
/// identity, and the base draw is `z_{1..} / sinhc(r)`.
pub fn standard_log_prob_any<T: Real>(z: &[T]) -> T {
    let n = z.len() - 1;
    let alpha = z[0].max_const(1.0);
    let r = alpha.acosh_clamped();
    let inv_sinhc = if r.value() < crate::scalar::EPS_R {
        let s = r * r;
        s * s * (7.0 / 360.0) - s * (1.0 / 6.0) + 1.0
    } else {
        r / r.sinh()
    };
    let mut sq = (inv_sinhc * z[1]) * (inv_sinhc * z[1]);
    for zi in &z[2..] {
        let v = inv_sinhc * *zi;
        sq = sq + v * v;
    }
    -(sq * 0.5) - 0.5 * n as f64 * LN_2PI - log_sinhc(r) * (n as f64 - 1.0)
}

/// Differentiable reparametrized sample from G(mu, diag(sigma^2)) with its
/// log-density, given the fixed standard-normal draw `eps` (a constant on
/// the tape, per the pathwise gradient route).
pub fn rsample_with_log_prob_any<T: Real>(mu: &[T], sigma: &[T], eps: &[f64]) -> (Vec<T>, T) {
    let n = sigma.len();
    debug_assert_eq!(mu.len(), n + 1);
    debug_assert_eq!(eps.len(), n);
    let vt: Vec<T> = sigma.iter().zip(eps).map(|(&s, &e)| s * e).collect();
    let u = transport_from_origin_any(mu, &vt);
    let z = exp_map_any(mu, &u);
    let mut s = vt[0] * vt[0];
    let mut base = -(sigma[0].ln()) - (0.5 * eps[0] * eps[0]);
    for i in 1..n {
        s = s + vt[i] * vt[i];
        base = base - sigma[i].ln() - (0.5 * eps[i] * eps[i]);
    }
    let lp = base - 0.5 * n as f64 * LN_2PI - log_sinhc_from_sq(s) * (n as f64 - 1.0);
    (z, lp)
}

/// Differentiable Monte-Carlo KL between diagonal wrapped normals, reusing
/// the draws in `eps` (length `k * n`, one standard-normal block per
/// sample).
pub fn kl_monte_carlo_any<T: Real>(
    mu_q: &[T],
    sigma_q: &[T],
    mu_p: &[T],
    sigma_p: &[T],
    eps: &[f64],
    k: usize,
) -> T {
    let n = sigma_q.len();
    debug_assert_eq!(eps.len(), k * n);
    let (z0, lq0) = rsample_with_log_prob_any(mu_q, sigma_q, &eps[..n]);
    let mut acc = lq0 - log_prob_any(mu_p, sigma_p, &z0);
    for j in 1..k {
        let (z, lq) = rsample_with_log_prob_any(mu_q, sigma_q, &eps[j * n..(j + 1) * n]);
        acc = acc + (lq - log_prob_any(mu_p, sigma_p, &z));
    }
    acc / k as f64
}

/// Closed-form KL between diagonal Euclidean Gaussians,
/// `KL(N(mu_q, sigma_q^2) || N(mu_p, sigma_p^2))`. Used by the Euclidean
/// control models.
pub fn gaussian_kl_any<T: Real>(mu_q: &[T], sigma_q: &[T], mu_p: &[T], sigma_p: &[T]) -> T {
    let n = mu_q.len();
    debug_assert_eq!(sigma_q.len(), n);
    let mut acc = gaussian_kl_term(mu_q[0], sigma_q[0], mu_p[0], sigma_p[0]);
    for i in 1..n {
        acc = acc + gaussian_kl_term(mu_q[i], sigma_q[i], mu_p[i], sigma_p[i]);
    }
    acc
}

fn gaussian_kl_term<T: Real>(mq: T, sq: T, mp: T, sp: T) -> T {
    let d = mq - mp;
    sp.ln() - sq.ln() + (sq * sq + d * d) / (sp * sp * 2.0) - 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::lift_to_manifold;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn mu_at(h: &[f64]) -> LorentzPoint {
        lift_to_manifold(h).unwrap()
    }

    #[test]
    fn degenerate_sigma_collapses_to_mu() {
        let mu = mu_at(&[0.7, -0.3]);
        let d = WrappedNormal::new(mu.clone(), CovKind::Diagonal(vec![1e-12, 1e-12])).unwrap();
        let mut rng = StdRng::seed_from_u64(0);
        for _ in 0..50 {
            let (z, _) = d.sample(&mut rng);
            // Compare coordinates: the geodesic distance of nearly identical
            // points is dominated by acosh noise near 1 (~1e-8).
            for (a, b) in z.coords().iter().zip(mu.coords()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sample_at_origin_is_direct_exp() {
        // At mu = mu0 the transport is the identity, so z = exp_{mu0}([0, v~]).
        let d = WrappedNormal::standard(3);
        let mut rng = StdRng::seed_from_u64(1);
        let (z, vt) = d.sample(&mut rng);
        let direct = exp_map(&TangentVector::at_origin(&vt)).unwrap();
        for (a, b) in z.coords().iter().zip(direct.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn base_draw_roundtrip() {
        let mu = mu_at(&[1.2, 0.4, -0.8]);
        let d = WrappedNormal::new(mu, CovKind::Diagonal(vec![0.5, 1.5, 1.0])).unwrap();
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..1000 {
            let (z, vt) = d.sample(&mut rng);
            let back = d.recover_base(&z).unwrap();
            for (a, b) in back.iter().zip(&vt) {
                assert!((a - b).abs() <= 1e-8, "got {a}, want {b}");
            }
        }
    }

    #[test]
    fn log_prob_n1_equals_base_gaussian() {
        // For n = 1 the correction exponent n-1 is zero.
        let mu = mu_at(&[0.9]);
        let sigma = 0.7;
        let d = WrappedNormal::new(mu, CovKind::Diagonal(vec![sigma])).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let (z, vt) = d.sample(&mut rng);
            let want = -0.5 * LN_2PI - sigma.ln() - 0.5 * (vt[0] / sigma).powi(2);
            assert!((d.log_prob(&z).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn log_prob_closed_form_point() {
        // n = 2, mu = mu0, Sigma = I, z = exp_{mu0}([0,1,0]):
        // log p = -1/2 - log(2 pi) - log(sinh 1).
        let d = WrappedNormal::standard(2);
        let z = exp_map(&TangentVector::at_origin(&[1.0, 0.0])).unwrap();
        let want = -0.5 - LN_2PI - 1.0_f64.sinh().ln();
        assert!((d.log_prob(&z).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn log_det_proj_limits() {
        assert_eq!(log_det_proj(0.0, 5), 0.0);
        assert_eq!(log_det_proj(3.7, 1), 0.0);
        assert!((log_det_proj(2.0, 3) - 2.0 * (2.0_f64.sinh() / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn change_of_variables_holds_by_construction() {
        // log_prob(sample) = log N(v~|0,Sigma) - log_det_proj(r, n).
        let mu = mu_at(&[0.4, -1.1, 0.2, 0.9]);
        let d = WrappedNormal::new(mu, CovKind::Diagonal(vec![1.3, 0.4, 0.9, 2.0])).unwrap();
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..500 {
            let (z, vt) = d.sample(&mut rng);
            let r = vt.iter().map(|v| v * v).sum::<f64>().sqrt();
            let want = d.cov().base_log_density(&vt) - log_det_proj(r, 4);
            assert!((d.log_prob(&z).unwrap() - want).abs() <= 1e-8);
        }
    }

    #[test]
    fn sample_with_log_prob_consistent() {
        let mu = mu_at(&[-0.6, 0.8]);
        let d = WrappedNormal::new(mu, CovKind::Diagonal(vec![0.8, 1.4])).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let mut max_diff: f64 = 0.0;
        for _ in 0..1000 {
            let (z, lp) = d.sample_with_log_prob(&mut rng);
            max_diff = max_diff.max((lp - d.log_prob(&z).unwrap()).abs());
        }
        assert!(max_diff <= 1e-8, "max diff {max_diff}");
    }

    #[test]
    fn full_covariance_matches_diagonal_special_case() {
        // L = diag(s) reproduces the diagonal parametrization.
        let mu = mu_at(&[0.3, -0.2]);
        let s = [0.6, 1.7];
        let full = WrappedNormal::new(
            mu.clone(),
            CovKind::Full(vec![s[0], 0.0, s[1]]),
        )
        .unwrap();
        let diag = WrappedNormal::new(mu, CovKind::Diagonal(s.to_vec())).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..100 {
            let (z, _) = diag.sample(&mut rng);
            let a = full.log_prob(&z).unwrap();
            let b = diag.log_prob(&z).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_of_identical_distributions_is_zero_mean() {
        let mu = mu_at(&[0.5, 0.5]);
        let q = WrappedNormal::new(mu, CovKind::Diagonal(vec![1.0, 0.7])).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let kl = WrappedNormal::kl_monte_carlo(&q, &q, 512, &mut rng).unwrap();
        // The two log-probs agree to round-trip accuracy, so the mean is
        // bounded by that rather than by MC noise.
        assert!(kl.abs() < 1e-8, "kl = {kl}");
    }

    #[test]
    fn kl_n1_matches_gaussian_closed_form() {
        // Shared mu at the origin, n = 1: the correction vanishes and the
        // wrapped KL reduces to the KL of the base Gaussians.
        let o = LorentzPoint::origin(1);
        let (sq, sp) = (0.8, 1.6);
        let q = WrappedNormal::new(o.clone(), CovKind::Diagonal(vec![sq])).unwrap();
        let p = WrappedNormal::new(o, CovKind::Diagonal(vec![sp])).unwrap();
        let want = (sp / sq).ln() + (sq * sq) / (2.0 * sp * sp) - 0.5;
        let mut rng = StdRng::seed_from_u64(8);
        let k = 20_000;
        let kl = WrappedNormal::kl_monte_carlo(&q, &p, k, &mut rng).unwrap();
        assert!((kl - want).abs() < 0.02, "kl = {kl}, want {want}");
    }

    #[test]
    fn kl_nonnegative_up_to_mc_noise() {
        let mut rng = StdRng::seed_from_u64(9);
        for trial in 0..20 {
            let h1 = [0.1 * trial as f64, -0.05 * trial as f64];
            let h2 = [0.3, 0.2 - 0.02 * trial as f64];
            let q = WrappedNormal::new(mu_at(&h1), CovKind::Diagonal(vec![0.9, 1.1])).unwrap();
            let p = WrappedNormal::new(mu_at(&h2), CovKind::Diagonal(vec![1.2, 0.6])).unwrap();
            let k = 512;
            // Estimate KL and its MC standard error together.
            let mut vals = Vec::with_capacity(k);
            for _ in 0..k {
                let (z, lq) = q.sample_with_log_prob(&mut rng);
                vals.push(lq - p.log_prob(&z).unwrap());
            }
            let mean = vals.iter().sum::<f64>() / k as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k as f64;
            let se = (var / k as f64).sqrt();
            assert!(mean >= -3.0 * se, "mean {mean}, se {se}");
        }
    }

    #[test]
    fn generic_path_matches_typed_path() {
        // The tape-compatible formulas and the validated f64 API must agree.
        let h = [0.6, -0.9, 0.3];
        let sigma = [0.7, 1.3, 1.0];
        let mu = mu_at(&h);
        let d = WrappedNormal::new(mu.clone(), CovKind::Diagonal(sigma.to_vec())).unwrap();
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..200 {
            let (z, _) = d.sample(&mut rng);
            let generic = log_prob_any(mu.coords(), &sigma, z.coords());
            assert!((generic - d.log_prob(&z).unwrap()).abs() < 1e-10);
        }

        // rsample agrees with push_forward + log_prob.
        let eps = [0.4, -1.2, 0.9];
        let vt: Vec<f64> = sigma.iter().zip(&eps).map(|(s, e)| s * e).collect();
        let (z, lp) = rsample_with_log_prob_any(mu.coords(), &sigma, &eps);
        let z_typed = d.push_forward(&vt);
        for (a, b) in z.iter().zip(z_typed.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((lp - d.log_prob(&z_typed).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn standard_log_prob_specialization_matches() {
        let prior = WrappedNormal::standard(3);
        let mut rng = StdRng::seed_from_u64(11);
        let source = WrappedNormal::new(
            mu_at(&[0.5, -0.7, 0.1]),
            CovKind::Diagonal(vec![1.2, 0.6, 0.9]),
        )
        .unwrap();
        for _ in 0..200 {
            let (z, _) = source.sample(&mut rng);
            let fast = standard_log_prob_any(z.coords());
            let slow = prior.log_prob(&z).unwrap();
            assert!((fast - slow).abs() < 1e-10, "fast {fast}, slow {slow}");
        }
    }

    #[test]
    fn gaussian_kl_closed_form_sanity() {
        // Identical distributions -> 0; known asymmetric example.
        let mu = [0.0, 0.0];
        let s = [1.0, 1.0];
        assert!(gaussian_kl_any(&mu, &s, &mu, &s).abs() < 1e-15);
        let kl = gaussian_kl_any(&[1.0], &[1.0], &[0.0], &[1.0]);
        assert!((kl - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let o = LorentzPoint::origin(2);
        assert!(WrappedNormal::new(o.clone(), CovKind::Diagonal(vec![1.0])).is_err());
        assert!(WrappedNormal::new(o.clone(), CovKind::Diagonal(vec![1.0, -1.0])).is_err());
        assert!(WrappedNormal::new(o.clone(), CovKind::Full(vec![1.0, 0.0, -0.5])).is_err());
        assert!(WrappedNormal::new(o, CovKind::Full(vec![1.0])).is_err());
    }
}
