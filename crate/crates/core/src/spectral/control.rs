use super::{
    ensure_finite, ensure_square, spectral_norm, spectral_radius, symmetrize, Matrix, Result,
    SpectralError,
};

const DOUBLING_MAX_ITERS: usize = 128;
const RICCATI_TOL: f64 = 1e-6;
const POLISH_MAX_ITERS: usize = 200;

fn riccati_map(f: &Matrix, g: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Option<Matrix> {
    let gtp = g.transpose() * p;
    let s = r + &gtp * g;
    let gain = s.cholesky()?.solve(&(&gtp * f));
    Some(symmetrize(&(f.transpose() * p * f - f.transpose() * p * g * gain + q)))
}

/// Relative residual of the discrete algebraic Riccati equation at `p`.
pub fn riccati_residual(f: &Matrix, g: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> f64 {
    match riccati_map(f, g, q, r, p) {
        Some(next) => spectral_norm(&(next - p)) / spectral_norm(p).max(1.0),
        None => f64::INFINITY,
    }
}

fn check_lqr_shapes(f: &Matrix, g: &Matrix, q: &Matrix, r: &Matrix) -> Result<(usize, usize)> {
    let k = ensure_square(f)?;
    let m = ensure_square(r)?;
    if g.shape() != (k, m) || q.shape() != (k, k) {
        return Err(SpectralError::DimensionMismatch(format!(
            "F {:?}, G {:?}, Q {:?}, R {:?}",
            f.shape(),
            g.shape(),
            q.shape(),
            r.shape()
        )));
    }
    for x in [f, g, q, r] {
        ensure_finite(x)?;
    }
    Ok((k, m))
}

/// Infinite-horizon discrete LQR gain with the convention `u = K y`, so the
/// closed loop is `F + G K`. The Riccati solution comes from the structured
/// doubling algorithm and is then polished by fixed-point steps.
pub fn lqr_gain(f: &Matrix, g: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let (k, _) = check_lqr_shapes(f, g, q, r)?;
    let r_chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| SpectralError::Unstabilizable("R is not positive definite".into()))?;
    let ident = Matrix::identity(k, k);

    let mut a_k = f.clone();
    let mut g_k = symmetrize(&(g * r_chol.solve(&g.transpose())));
    let mut h_k = symmetrize(q);
    let mut converged = false;
    for _ in 0..DOUBLING_MAX_ITERS {
        let w = &ident + &g_k * &h_k;
        let w_lu = w.lu();
        let w_inv_a = w_lu
            .solve(&a_k)
            .ok_or_else(|| SpectralError::Unstabilizable("doubling step is singular".into()))?;
        let w_inv_g = w_lu
            .solve(&g_k)
            .ok_or_else(|| SpectralError::Unstabilizable("doubling step is singular".into()))?;
        let h_next = symmetrize(&(&h_k + a_k.transpose() * &h_k * &w_inv_a));
        let g_next = symmetrize(&(&g_k + &a_k * w_inv_g * a_k.transpose()));
        let a_next = &a_k * &w_inv_a;
        if !h_next.iter().chain(a_next.iter()).chain(g_next.iter()).all(|v| v.is_finite()) {
            return Err(SpectralError::Unstabilizable("Riccati iteration diverged".into()));
        }
        let change = spectral_norm(&(&h_next - &h_k));
        let scale = spectral_norm(&h_next).max(1.0);
        a_k = a_next;
        g_k = g_next;
        h_k = h_next;
        if change <= 1e-14 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpectralError::Unstabilizable("Riccati iteration did not settle".into()));
    }

    let mut p = h_k;
    for _ in 0..POLISH_MAX_ITERS {
        if riccati_residual(f, g, q, r, &p) < RICCATI_TOL * 1e-6 {
            break;
        }
        p = riccati_map(f, g, q, r, &p)
            .ok_or_else(|| SpectralError::Unstabilizable("R + GᵀPG is not positive definite".into()))?;
    }
    let residual = riccati_residual(f, g, q, r, &p);
    if !(residual < RICCATI_TOL) {
        return Err(SpectralError::Unstabilizable(format!("Riccati residual {residual:.3e}")));
    }

    let gtp = g.transpose() * &p;
    let gain = (r + &gtp * g)
        .cholesky()
        .ok_or_else(|| SpectralError::Unstabilizable("R + GᵀPG is not positive definite".into()))?
        .solve(&(&gtp * f));
    let gain = -gain;
    let rho = spectral_radius(&(f + g * &gain));
    if !(rho < 1.0) {
        return Err(SpectralError::Unstabilizable(format!("closed-loop spectral radius {rho}")));
    }
    Ok(gain)
}

/// Solves `Aclᵀ H Acl + G − H = 0` by Smith doubling.
pub fn dlyap_solve(acl: &Matrix, g: &Matrix) -> Result<Matrix> {
    let n = ensure_square(acl)?;
    if g.shape() != (n, n) {
        return Err(SpectralError::DimensionMismatch(format!(
            "Acl {:?}, G {:?}",
            acl.shape(),
            g.shape()
        )));
    }
    ensure_finite(acl)?;
    ensure_finite(g)?;
    let rho = spectral_radius(acl);
    if !(rho < 1.0) {
        return Err(SpectralError::NotSchurStable { rho });
    }
    let mut h = symmetrize(g);
    let mut a_j = acl.clone();
    for _ in 0..DOUBLING_MAX_ITERS {
        let increment = a_j.transpose() * &h * &a_j;
        h = symmetrize(&(&h + &increment));
        a_j = &a_j * &a_j;
        if spectral_norm(&increment) <= f64::EPSILON * spectral_norm(&h) || a_j.amax() == 0.0 {
            return Ok(h);
        }
        if !h.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(SpectralError::NoConvergence("Lyapunov doubling"))
}

/// Operator norm of `x` induced by `‖v‖_H = √(vᵀHv)`, i.e. `‖Lᵀ X L⁻ᵀ‖₂`
/// with `H = L Lᵀ`.
pub fn weighted_norm(x: &Matrix, h: &Matrix) -> Result<f64> {
    let n = ensure_square(x)?;
    if h.shape() != (n, n) {
        return Err(SpectralError::DimensionMismatch(format!(
            "X {:?}, H {:?}",
            x.shape(),
            h.shape()
        )));
    }
    let l = h
        .clone()
        .cholesky()
        .ok_or_else(|| SpectralError::DimensionMismatch("H is not positive definite".into()))?
        .l();
    let lt_x = l.transpose() * x;
    // (Lᵀ X) L⁻ᵀ = ((L⁻¹ (Lᵀ X)ᵀ))ᵀ
    let solved = l
        .solve_lower_triangular(&lt_x.transpose())
        .ok_or(SpectralError::NonFinite)?;
    Ok(spectral_norm(&solved.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_lqr_unstable() {
        let k = lqr_gain(&s(2.0), &s(1.0), &s(1.0), &s(1.0)).unwrap();
        assert_abs_diff_eq!(k[(0, 0)], -1.618_033_988_749_895, epsilon = 1e-9);
        assert_abs_diff_eq!(2.0 + k[(0, 0)], 0.381_966_011_250_105_1, epsilon = 1e-9);
    }

    #[test]
    fn scalar_lqr_stable() {
        let k = lqr_gain(&s(0.5), &s(1.0), &s(1.0), &s(1.0)).unwrap();
        assert_abs_diff_eq!(k[(0, 0)], -0.265_564_437_074_637_4, epsilon = 1e-9);
    }

    #[test]
    fn no_actuation_is_unstabilizable() {
        assert!(matches!(
            lqr_gain(&s(2.0), &s(0.0), &s(1.0), &s(1.0)),
            Err(SpectralError::Unstabilizable(_))
        ));
    }

    #[test]
    fn scalar_lyapunov() {
        assert_abs_diff_eq!(dlyap_solve(&s(0.0), &s(1.0)).unwrap()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dlyap_solve(&s(0.5), &s(1.0)).unwrap()[(0, 0)], 4.0 / 3.0, epsilon = 1e-12);
        assert!(matches!(dlyap_solve(&s(1.5), &s(1.0)), Err(SpectralError::NotSchurStable { .. })));
    }

    #[test]
    fn weighted_norm_identity_weight_is_spectral() {
        let x = Matrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.25]);
        let w = weighted_norm(&x, &Matrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(w, spectral_norm(&x), epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_weight_contracts() {
        // With AᵀHA = H − G and G ≻ 0 the H-norm of A is below one.
        let a = Matrix::from_row_slice(2, 2, &[0.9, 5.0, 0.0, 0.8]);
        let h = dlyap_solve(&a, &(Matrix::identity(2, 2) * 2.01)).unwrap();
        assert!(spectral_norm(&a) > 1.0);
        assert!(weighted_norm(&a, &h).unwrap() < 1.0);
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn random_instances_have_small_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=16 {
            let m = 1 + n / 3;
            let f = random_matrix(&mut rng, n, n) * (1.5 / (n as f64).sqrt());
            let g = random_matrix(&mut rng, n, m);
            let q = Matrix::identity(n, n);
            let r = Matrix::identity(m, m);
            let k = lqr_gain(&f, &g, &q, &r).unwrap();
            let acl = &f + &g * &k;
            assert!(spectral_radius(&acl) < 1.0);
            let h = dlyap_solve(&acl, &(Matrix::identity(n, n) * 2.01)).unwrap();
            let residual = acl.transpose() * &h * &acl + Matrix::identity(n, n) * 2.01 - &h;
            assert!(spectral_norm(&residual) < 1e-8 * spectral_norm(&h).max(1.0), "n = {n}");
            assert!(h.clone().cholesky().is_some());
        }
    }
}
