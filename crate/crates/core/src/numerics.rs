//! Small numerical utilities: deterministic summation, adaptive quadrature,
//! log-log regression, tiny dense linear solves.

/// Pairwise (cascade) summation with a fixed recursion tree.
///
/// The tree shape depends only on the slice length, so the result is
/// bit-identical no matter how the caller schedules work around it.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Pairwise summation of `f(i)` over `0..n` with the same fixed tree as
/// [`pairwise_sum`].
pub fn pairwise_sum_by<F: Fn(usize) -> f64 + Copy>(range: std::ops::Range<usize>, f: F) -> f64 {
    let n = range.len();
    if n <= 32 {
        let mut s = 0.0;
        for i in range {
            s += f(i);
        }
        s
    } else {
        let mid = range.start + n / 2;
        pairwise_sum_by(range.start..mid, f) + pairwise_sum_by(mid..range.end, f)
    }
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64 + Copy>(
        f: F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Ordinary least squares of `y` on `x`; returns `(slope, intercept)`.
///
/// Requires at least two distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Gamma function at half-integer arguments `k/2` for integer `k >= 1`.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k >= 1);
    if k % 2 == 0 {
        // Gamma(m) = (m-1)!
        let m = k / 2;
        (1..m).map(|i| i as f64).product::<f64>()
    } else {
        // Gamma(1/2 + m) = sqrt(pi) * (2m)! / (4^m m!)
        let m = (k - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for i in 1..=m {
            v *= i as f64 - 0.5;
        }
        v
    }
}

/// Surface area of the unit sphere in `d` dimensions.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Solve the dense system `A x = b` in place by partial-pivot Gaussian
/// elimination. `a` is `n x n` row-major. Returns `None` if singular.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col * n + k] * b[k];
        }
        b[col] = v / a[col * n + col];
    }
    Some(())
}

/// Frobenius norm of a row-major matrix.
pub fn frobenius_norm(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean norm.
pub fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Thomas algorithm for a tridiagonal system.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (with `lower[0]` unused),
/// `upper[i]` multiplies `x[i+1]` (with `upper[n-1]` unused).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c_star = vec![0.0; n];
    let mut denom = diag[0];
    rhs[0] /= denom;
    for i in 1..n {
        c_star[i - 1] = upper[i - 1] / denom;
        denom = diag[i] - lower[i] * c_star[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_star[i] * rhs[i + 1];
    }
}
