//! Bracketed scalar root finding.

/// Termination settings for [`find_root`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct RootTol {
    /// Stop once `|f(x)| <= ftol`.
    pub ftol: f64,
    /// Stop once the bracket is narrower than `xtol`.
    pub xtol: f64,
    pub max_iter: usize,
}

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite
/// sign (or one of them zero). Every step either interpolates inside the
/// current bracket or bisects it, so the bracket never grows and progress is
/// at least as fast as bisection after a bounded number of slow steps.
///
/// `fa` and `fb` are passed in because callers usually evaluated them while
/// growing the bracket.
pub(crate) fn find_root<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, tol: RootTol) -> f64
where
    F: FnMut(f64) -> f64,
{
    if fa.abs() <= tol.ftol || fa == 0.0 {
        return a;
    }
    if fb.abs() <= tol.ftol || fb == 0.0 {
        return b;
    }
    debug_assert!(
        fa.signum() != fb.signum(),
        "root not bracketed: f({a})={fa}, f({b})={fb}"
    );

    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= tol.ftol {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    b
}
