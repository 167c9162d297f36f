//! Small numerical kernels: RK4 integration, adaptive Simpson quadrature
//! and bracketed bisection.

/// Fixed-step fourth-order Runge-Kutta for a scalar-vector ODE.
///
/// `field(x, dx)` writes the derivative of `x` into `dx`. The last step is
/// shortened so the integration lands exactly on `dt`.
pub fn rk4<F>(field: F, x0: &[f64], dt: f64, step: f64) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let d = x0.len();
    let mut x = x0.to_vec();
    if dt <= 0.0 || d == 0 {
        return x;
    }
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let steps = (dt / step).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    for _ in 0..steps {
        field(&x, &mut k1);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        field(&tmp, &mut k2);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        field(&tmp, &mut k3);
        for i in 0..d {
            tmp[i] = x[i] + h * k3[i];
        }
        field(&tmp, &mut k4);
        for i in 0..d {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = (rel_tol * whole.abs()).max(1e-300);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Solve `g(s) = target` for nondecreasing `g` on `[lo, hi]` by bisection.
///
/// Requires `g(lo) <= target <= g(hi)`; stops when the bracket is narrower
/// than `tol` or after `max_iter` halvings.
pub fn bisect_increasing<G: Fn(f64) -> f64>(g: G, target: f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_exponential_decay() {
        let x = rk4(|x, dx| dx[0] = -0.5 * x[0], &[2.0], 3.0, 1e-3);
        assert!((x[0] - 2.0 * (-1.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|u| (-u).exp(), 0.0, 4.0, 1e-12);
        assert!((v - (1.0 - (-4.0f64).exp())).abs() < 1e-11);
        assert_eq!(adaptive_simpson(|_| 1.0, 2.0, 2.0, 1e-10), 0.0);
    }

    #[test]
    fn bisection_finds_root() {
        let s = bisect_increasing(|s| s * s, 2.0, 0.0, 2.0, 1e-12, 200);
        assert!((s - 2f64.sqrt()).abs() < 1e-11);
    }
}
