//! The Lorentz (hyperboloid) model of hyperbolic space at curvature -1.
//!
//! Points live in ambient R^{n+1} on the upper sheet `<z,z>_L = -1, z_0 > 0`
//! of the two-sheeted hyperboloid, where `<a,b>_L = -a_0 b_0 + sum a_i b_i`
//! is the Lorentzian inner product. Tangent vectors at `mu` are the ambient
//! vectors with `<mu,u>_L = 0`.
//!
//! The low-level functions at the bottom of this module are generic over
//! [`Real`], so the same formulas serve both plain evaluation and the
//! reverse-mode tape. The typed API ([`LorentzPoint`], [`TangentVector`])
//! wraps them with validation for `f64` use.

use crate::error::{Error, Result};
use crate::scalar::{cosh_sinhc_from_sq, sinhc, Real, EPS_R, TOL_MANIFOLD};

/// A point on H^n, stored as n+1 ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint {
    coords: Vec<f64>,
}

/// A vector in the tangent space at `base`, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    coords: Vec<f64>,
    base: LorentzPoint,
}

impl LorentzPoint {
    /// Validates the hyperboloid constraint to within `TOL_MANIFOLD`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("lorentz point coordinates".into()));
        }
        let violation = (minkowski_dot(&coords, &coords) + 1.0).abs();
        // The tolerance scales with z_0^2: evaluating <z,z>_L cancels terms
        // of that magnitude, so a few ulps of z_0^2 are unavoidable noise
        // for far-from-origin points.
        let tol = TOL_MANIFOLD * (coords[0] * coords[0]).max(1.0);
        if violation > tol || coords[0] <= 0.0 {
            return Err(Error::OffManifold { violation, tol });
        }
        Ok(LorentzPoint { coords })
    }

    /// The distinguished origin `mu_0 = [1, 0, ..., 0]` of H^n.
    pub fn origin(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[0] = 1.0;
        LorentzPoint { coords }
    }

    /// Manifold dimension n (one less than the ambient length).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Projection to the Poincare ball: `x_i = z_i / (1 + z_0)`.
    pub fn to_poincare(&self) -> Vec<f64> {
        let denom = 1.0 + self.coords[0];
        self.coords[1..].iter().map(|&c| c / denom).collect()
    }

    /// Inverse of [`to_poincare`](Self::to_poincare); `x` must satisfy
    /// `||x||_2 < 1`.
    pub fn from_poincare(x: &[f64]) -> Result<Self> {
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        if !(norm_sq < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "poincare coordinates must lie inside the unit ball, got ||x||^2 = {norm_sq}"
            )));
        }
        let denom = 1.0 - norm_sq;
        let mut coords = Vec::with_capacity(x.len() + 1);
        coords.push((1.0 + norm_sq) / denom);
        coords.extend(x.iter().map(|&v| 2.0 * v / denom));
        // Renormalize away the rounding drift of the rational map.
        Ok(project_to_hyperboloid(&coords))
    }
}

impl TangentVector {
    /// Validates tangency `<base, v>_L = 0` to within `TOL_MANIFOLD`.
    pub fn new(coords: Vec<f64>, base: LorentzPoint) -> Result<Self> {
        if coords.len() != base.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: base.coords.len(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("tangent vector coordinates".into()));
        }
        let violation = minkowski_dot(&coords, base.coords()).abs();
        if violation > TOL_MANIFOLD {
            return Err(Error::NotTangent {
                violation,
                tol: TOL_MANIFOLD,
            });
        }
        Ok(TangentVector { coords, base })
    }

    /// Tangent vector `[0, v]` at the origin.
    pub fn at_origin(spatial: &[f64]) -> Self {
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push(0.0);
        coords.extend_from_slice(spatial);
        TangentVector {
            coords,
            base: LorentzPoint::origin(spatial.len()),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn base(&self) -> &LorentzPoint {
        &self.base
    }

    /// Lorentzian norm `sqrt(<v,v>_L)`; non-negative on tangent spaces.
    pub fn norm(&self) -> Result<f64> {
        let sq = minkowski_dot(&self.coords, &self.coords);
        if sq < -TOL_MANIFOLD {
            return Err(Error::NonSpacelike { value: sq });
        }
        Ok(sq.max(0.0).sqrt())
    }
}

/// Geodesic distance `arccosh(-<z1,z2>_L)`; the inner product is clamped to
/// (-inf, -1] before arccosh to absorb float noise.
pub fn distance(z1: &LorentzPoint, z2: &LorentzPoint) -> Result<f64> {
    check_same_dim(z1, z2)?;
    let alpha = (-minkowski_dot(z1.coords(), z2.coords())).max(1.0);
    Ok(crate::scalar::acosh_stable(alpha))
}

/// `exp_mu(u) = cosh(||u||) mu + sinh(||u||) u / ||u||`, series-guarded at
/// small norms. Preserves the norm: `d(mu, exp_mu(u)) = ||u||_L`.
pub fn exp_map(u: &TangentVector) -> Result<LorentzPoint> {
    u.norm()?; // validates spacelike
    let coords = exp_map_any(u.base.coords(), u.coords());
    Ok(project_to_hyperboloid(&coords))
}

/// Inverse exponential map: the tangent vector at `mu` pointing to `z` with
/// `||u||_L = d(mu, z)`. Coincident points give the zero vector.
pub fn log_map(mu: &LorentzPoint, z: &LorentzPoint) -> Result<TangentVector> {
    check_same_dim(mu, z)?;
    let coords = log_map_any(mu.coords(), z.coords());
    let coords = orthogonalize(coords, mu.coords());
    Ok(TangentVector {
        coords,
        base: mu.clone(),
    })
}

/// Parallel transport of `v` from the tangent space at `nu` to the one at
/// `mu` along the connecting geodesic, preserving Lorentzian inner products.
pub fn parallel_transport(mu: &LorentzPoint, v: &TangentVector) -> Result<TangentVector> {
    let nu = &v.base;
    check_same_dim(nu, mu)?;
    let alpha = -minkowski_dot(nu.coords(), mu.coords());
    if alpha + 1.0 < TOL_MANIFOLD {
        return Err(Error::DegenerateTransport { value: alpha + 1.0 });
    }
    let coords = transport_any(nu.coords(), mu.coords(), v.coords());
    let coords = orthogonalize(coords, mu.coords());
    Ok(TangentVector {
        coords,
        base: mu.clone(),
    })
}

/// Transport back from the tangent space at `mu` (where `u` lives) to the
/// one at `nu`; equal to `parallel_transport` with the endpoints swapped.
pub fn inverse_parallel_transport(nu: &LorentzPoint, u: &TangentVector) -> Result<TangentVector> {
    parallel_transport(nu, u)
}

/// Lifts an unconstrained `h` in R^n onto the manifold through the origin's
/// exponential map: `[cosh ||h||, sinh(||h||) h / ||h||]`.
pub fn lift_to_manifold(h: &[f64]) -> Result<LorentzPoint> {
    if h.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("lift input".into()));
    }
    let coords = lift_any(h);
    Ok(project_to_hyperboloid(&coords))
}

fn check_same_dim(a: &LorentzPoint, b: &LorentzPoint) -> Result<()> {
    if a.coords.len() != b.coords.len() {
        return Err(Error::DimensionMismatch {
            expected: a.coords.len(),
            got: b.coords.len(),
        });
    }
    Ok(())
}

/// Rescales ambient coordinates exactly onto the hyperboloid. Inputs are
/// already on-manifold up to rounding; this keeps long op chains from
/// accumulating drift past `TOL_MANIFOLD`.
fn project_to_hyperboloid(coords: &[f64]) -> LorentzPoint {
    let spatial_sq: f64 = coords[1..].iter().map(|c| c * c).sum();
    let mut out = coords.to_vec();
    out[0] = (1.0 + spatial_sq).sqrt();
    LorentzPoint { coords: out }
}

/// Removes the (rounding-level) component of `v` along the base point:
/// `v + <v,mu>_L mu` is exactly tangent when `<mu,mu>_L = -1`.
fn orthogonalize(mut v: Vec<f64>, mu: &[f64]) -> Vec<f64> {
    let inner = minkowski_dot(&v, mu);
    for (vi, mi) in v.iter_mut().zip(mu) {
        *vi += inner * mi;
    }
    v
}

// ---------------------------------------------------------------------------
// Generic formulas, shared with the tape.

/// Lorentzian inner product `-a_0 b_0 + sum_{i>=1} a_i b_i`.
pub fn minkowski_dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = -(a[0] * b[0]);
    for i in 1..a.len() {
        acc = acc + a[i] * b[i];
    }
    acc
}

/// Checked variant for public consumption of raw slices.
pub fn lorentz_inner(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: a.len().max(2),
            got: b.len(),
        });
    }
    Ok(minkowski_dot(a, b))
}

/// `exp_mu(u)` on raw ambient coordinates; `u` must be tangent at `mu`.
///
/// Works in `s = <u,u>_L` so the map stays differentiable at `u = 0`.
pub fn exp_map_any<T: Real>(mu: &[T], u: &[T]) -> Vec<T> {
    let s = minkowski_dot(u, u).max_const(0.0);
    let (cosh_r, sinhc_r) = cosh_sinhc_from_sq(s);
    mu.iter()
        .zip(u)
        .map(|(&m, &ui)| cosh_r * m + sinhc_r * ui)
        .collect()
}

/// `exp_mu^{-1}(z)` on raw ambient coordinates.
///
/// With `alpha = -<mu,z>_L` and `r = arccosh(alpha)`, the coefficient
/// `arccosh(alpha)/sqrt(alpha^2-1)` equals `1/sinhc(r)`, which is the form
/// used here: it is smooth through coincident points.
pub fn log_map_any<T: Real>(mu: &[T], z: &[T]) -> Vec<T> {
    let alpha = (-minkowski_dot(mu, z)).max_const(1.0);
    let r = alpha.acosh_clamped();
    let coeff = if r.value() < EPS_R {
        let s = r * r;
        // 1/sinhc(r) = 1 - r^2/6 + 7 r^4 / 360 + O(r^6)
        s * s * (7.0 / 360.0) - s * (1.0 / 6.0) + 1.0
    } else {
        r / r.sinh()
    };
    mu.iter()
        .zip(z)
        .map(|(&m, &zi)| coeff * (zi - alpha * m))
        .collect()
}

/// Parallel transport on raw coordinates:
/// `v + <mu - alpha nu, v>_L / (alpha + 1) * (nu + mu)`.
pub fn transport_any<T: Real>(nu: &[T], mu: &[T], v: &[T]) -> Vec<T> {
    let alpha = -minkowski_dot(nu, mu);
    let mut shifted = Vec::with_capacity(mu.len());
    for (&m, &n) in mu.iter().zip(nu) {
        shifted.push(m - alpha * n);
    }
    let coeff = minkowski_dot(&shifted, v) / (alpha + 1.0);
    nu.iter()
        .zip(mu)
        .zip(v)
        .map(|((&n, &m), &vi)| vi + coeff * (n + m))
        .collect()
}

/// `exp_{mu_0}(h)` for unconstrained `h` in R^n, returning ambient
/// coordinates `[cosh r, sinhc(r) h]` with `r = ||h||_2`.
pub fn lift_any<T: Real>(h: &[T]) -> Vec<T> {
    let mut s = h[0] * h[0];
    for &hi in &h[1..] {
        s = s + hi * hi;
    }
    let (cosh_r, sinhc_r) = cosh_sinhc_from_sq(s);
    let mut out = Vec::with_capacity(h.len() + 1);
    out.push(cosh_r);
    out.extend(h.iter().map(|&hi| sinhc_r * hi));
    out
}

/// Distance on raw coordinates, differentiable.
pub fn distance_any<T: Real>(a: &[T], b: &[T]) -> T {
    (-minkowski_dot(a, b)).max_const(1.0).acosh_clamped()
}

/// Euclidean norm of the origin tangent coordinates, used where the base
/// draw norm equals the transported radius. Differentiable away from zero.
pub fn norm2<T: Real>(v: &[T]) -> T {
    let mut s = v[0] * v[0];
    for &vi in &v[1..] {
        s = s + vi * vi;
    }
    s.sqrt()
}

#[allow(unused)]
fn _assert_sinhc_used() {
    let _ = sinhc(0.5_f64);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn origin(n: usize) -> LorentzPoint {
        LorentzPoint::origin(n)
    }

    /// Random point within geodesic distance `max_r` of the origin.
    fn random_point(n: usize, max_r: f64, rng: &mut impl Rng) -> LorentzPoint {
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > 0.0 {
            rng.gen_range(0.0..max_r) / norm
        } else {
            0.0
        };
        let h: Vec<f64> = h.iter().map(|v| v * scale).collect();
        lift_to_manifold(&h).unwrap()
    }

    fn random_tangent(at: &LorentzPoint, max_norm: f64, rng: &mut impl Rng) -> TangentVector {
        let n = at.dim();
        let spatial: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v0 = TangentVector::at_origin(&spatial);
        let v = parallel_transport(at, &v0).unwrap();
        let norm = v.norm().unwrap();
        let scale = if norm > 0.0 {
            rng.gen_range(0.0..max_norm) / norm
        } else {
            0.0
        };
        let coords = v.coords().iter().map(|c| c * scale).collect();
        TangentVector::new(coords, at.clone()).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let mu0 = [1.0, 0.0, 0.0];
        assert_eq!(lorentz_inner(&mu0, &mu0).unwrap(), -1.0);
        assert_eq!(
            lorentz_inner(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(),
            0.0
        );
        let z = [1.0_f64.cosh(), 1.0_f64.sinh(), 0.0];
        assert!((lorentz_inner(&z, &z).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_length_mismatch_errors() {
        assert!(lorentz_inner(&[1.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
        assert!(lorentz_inner(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let o = origin(2);
        assert_eq!(distance(&o, &o).unwrap(), 0.0);

        // d(mu_0, exp_{mu_0}([0,t,0])) = |t|
        for &t in &[0.25, 1.0, 3.0] {
            let z = exp_map(&TangentVector::at_origin(&[t, 0.0])).unwrap();
            assert!((distance(&o, &z).unwrap() - t).abs() < 1e-12);
        }

        // arccosh(cosh 1 * cosh 1) for two orthogonal unit steps.
        let z1 = exp_map(&TangentVector::at_origin(&[1.0, 0.0])).unwrap();
        let z2 = exp_map(&TangentVector::at_origin(&[0.0, 1.0])).unwrap();
        let want = (1.0_f64.cosh() * 1.0_f64.cosh()).acosh();
        assert!((distance(&z1, &z2).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn exp_map_closed_form_at_origin() {
        let a = 0.8;
        let z = exp_map(&TangentVector::at_origin(&[a, 0.0])).unwrap();
        assert!((z.coords()[0] - a.cosh()).abs() < 1e-14);
        assert!((z.coords()[1] - a.sinh()).abs() < 1e-14);
        assert_eq!(z.coords()[2], 0.0);

        let id = exp_map(&TangentVector::at_origin(&[0.0, 0.0])).unwrap();
        assert_eq!(id.coords(), origin(2).coords());
    }

    #[test]
    fn exp_map_rejects_nonspacelike() {
        // A deliberately corrupted "tangent" with negative Lorentzian norm.
        let bad = TangentVector {
            coords: vec![1.0, 0.5, 0.0],
            base: origin(2),
        };
        assert!(matches!(exp_map(&bad), Err(Error::NonSpacelike { .. })));
    }

    #[test]
    fn log_map_examples() {
        let o = origin(2);
        let u = log_map(&o, &o).unwrap();
        assert_eq!(u.coords(), &[0.0, 0.0, 0.0]);

        let a = 1.3;
        let z = LorentzPoint::new(vec![a.cosh(), a.sinh(), 0.0]).unwrap();
        let u = log_map(&o, &z).unwrap();
        assert!((u.coords()[1] - a).abs() < 1e-12);
        assert!(u.coords()[0].abs() < 1e-12);
    }

    #[test]
    fn transport_examples() {
        let o = origin(2);
        let t = 0.9_f64;
        let mu = LorentzPoint::new(vec![t.cosh(), t.sinh(), 0.0]).unwrap();

        // Identity transport.
        let v = random_tangent(&o, 1.0, &mut StdRng::seed_from_u64(7));
        let same = parallel_transport(&o, &v).unwrap();
        for (a, b) in same.coords().iter().zip(v.coords()) {
            assert!((a - b).abs() < 1e-12);
        }

        // Orthogonal component is untouched.
        let v = TangentVector::at_origin(&[0.0, 1.0]);
        let moved = parallel_transport(&mu, &v).unwrap();
        for (a, b) in moved.coords().iter().zip(&[0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }

        // Component along the geodesic picks up the boost.
        let v = TangentVector::at_origin(&[1.0, 0.0]);
        let moved = parallel_transport(&mu, &v).unwrap();
        let want = [t.sinh(), t.cosh(), 0.0];
        for (a, b) in moved.coords().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        // Tangency at the destination.
        assert!(minkowski_dot(moved.coords(), mu.coords()).abs() < 1e-12);

        // Round-trip recovers the original.
        let back = inverse_parallel_transport(&o, &moved).unwrap();
        for (a, b) in back.coords().iter().zip(v.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn poincare_projection() {
        let o = origin(2);
        assert_eq!(o.to_poincare(), vec![0.0, 0.0]);

        let a = 1.7_f64;
        let z = LorentzPoint::new(vec![a.cosh(), a.sinh(), 0.0]).unwrap();
        let p = z.to_poincare();
        assert!((p[0] - (a / 2.0).tanh()).abs() < 1e-14);
        assert_eq!(p[1], 0.0);

        let back = LorentzPoint::from_poincare(&p).unwrap();
        for (x, y) in back.coords().iter().zip(z.coords()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_examples() {
        let p = lift_to_manifold(&[0.0, 0.0]).unwrap();
        assert_eq!(p.coords(), origin(2).coords());

        let a = 2.1_f64;
        let p = lift_to_manifold(&[a, 0.0]).unwrap();
        assert!((p.coords()[0] - a.cosh()).abs() < 1e-12);
        assert!((p.coords()[1] - a.sinh()).abs() < 1e-12);

        assert!(lift_to_manifold(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn validation_rejects_off_manifold() {
        assert!(LorentzPoint::new(vec![1.0, 0.5, 0.0]).is_err());
        assert!(LorentzPoint::new(vec![-1.0, 0.0, 0.0]).is_err());
        let o = origin(2);
        assert!(TangentVector::new(vec![1.0, 0.0, 0.0], o).is_err());
    }

    #[test]
    fn small_r_series_continuity() {
        // exp and log agree with their series branches at the switchover
        // to within 1e-12.
        let o = origin(2);
        for &r in &[EPS_R * 0.999, EPS_R * 1.001] {
            let z = exp_map(&TangentVector::at_origin(&[r, 0.0])).unwrap();
            assert!((z.coords()[0] - r.cosh()).abs() < 1e-12);
            assert!((z.coords()[1] - r.sinh()).abs() < 1e-12);
            let u = log_map(&o, &z).unwrap();
            assert!((u.coords()[1] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrips_and_isometry_random() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..1000 {
            let mu = random_point(3, 3.0, &mut rng);
            let u = random_tangent(&mu, 5.0, &mut rng);

            // log(exp(u)) = u
            let z = exp_map(&u).unwrap();
            let u_back = log_map(&mu, &z).unwrap();
            for (a, b) in u_back.coords().iter().zip(u.coords()) {
                assert!((a - b).abs() < 1e-9, "log.exp roundtrip");
            }

            // norm preservation
            let d = distance(&mu, &z).unwrap();
            let n = u.norm().unwrap();
            assert!((d - n).abs() <= 1e-9 * n.max(1.0), "norm preservation");

            // PT isometry + inverse roundtrip
            let nu = random_point(3, 3.0, &mut rng);
            let v = random_tangent(&mu, 2.0, &mut rng);
            let w = random_tangent(&mu, 2.0, &mut rng);
            let pv = parallel_transport(&nu, &v).unwrap();
            let pw = parallel_transport(&nu, &w).unwrap();
            let before = minkowski_dot(v.coords(), w.coords());
            let after = minkowski_dot(pv.coords(), pw.coords());
            assert!((before - after).abs() < 1e-10, "isometry");

            let v_back = inverse_parallel_transport(&mu, &pv).unwrap();
            for (a, b) in v_back.coords().iter().zip(v.coords()) {
                assert!((a - b).abs() < 1e-10, "PT roundtrip");
            }
        }
    }

    proptest! {
        #[test]
        fn lift_lands_on_manifold(h in prop::collection::vec(-6.0_f64..6.0, 1..6)) {
            let p = lift_to_manifold(&h).unwrap();
            let inner = minkowski_dot(p.coords(), p.coords());
            // Tolerance scaled by z_0^2 (cancellation noise of the check
            // itself); for moderate radii this reduces to an absolute 1e-9.
            let tol = 1e-9 * (p.coords()[0] * p.coords()[0]).max(1.0);
            prop_assert!((inner + 1.0).abs() <= tol);
            prop_assert!(p.coords()[0] > 0.0);
        }

        #[test]
        fn poincare_stays_in_ball(h in prop::collection::vec(-8.0_f64..8.0, 2..5)) {
            let p = lift_to_manifold(&h).unwrap();
            let x = p.to_poincare();
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>();
            prop_assert!(norm < 1.0);
        }

        #[test]
        fn exp_log_roundtrip_on_points(
            ha in prop::collection::vec(-2.0_f64..2.0, 3),
            hb in prop::collection::vec(-2.0_f64..2.0, 3),
        ) {
            let a = lift_to_manifold(&ha).unwrap();
            let b = lift_to_manifold(&hb).unwrap();
            prop_assume!(distance(&a, &b).unwrap() <= 5.0);
            let u = log_map(&a, &b).unwrap();
            let b_back = exp_map(&u).unwrap();
            for (x, y) in b_back.coords().iter().zip(b.coords()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
