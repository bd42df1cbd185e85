//! Special functions and quadrature for the chunked-code analysis.

#[allow(unused_imports)]
use num_traits::Float;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate range.
        let pi = core::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * core::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Natural logs of the regularized incomplete gamma functions
/// `(ln P(a, x), ln Q(a, x))` for `a > 0`, `x >= 0`.
///
/// The series for `P` is used below `x = a + 1` and a Lentz continued
/// fraction for `Q` above, so whichever of the two is small is computed
/// directly and keeps full relative precision.
pub fn ln_regularized_gamma(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let prefix = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        let ln_p = prefix + sum.ln();
        (ln_p, ln_one_minus_exp(ln_p))
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        let ln_q = prefix + h.ln();
        (ln_one_minus_exp(ln_q), ln_q)
    }
}

/// `(P(a, x), Q(a, x))`.
pub fn regularized_gamma(a: f64, x: f64) -> (f64, f64) {
    let (lp, lq) = ln_regularized_gamma(a, x);
    (lp.exp(), lq.exp())
}

/// `ln(1 - e^v)` for `v <= 0`.
fn ln_one_minus_exp(v: f64) -> f64 {
    if v > -core::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The interval is first cut into `panels` equal pieces so narrow features
/// are not missed by the initial five-point estimate; each piece gets an
/// equal share of the absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol / panels as f64, 50);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
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
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_at_integers_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..60u32 {
            assert!(
                (ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0),
                "{n}"
            );
            fact *= n as f64;
        }
        let half = ln_gamma(0.5);
        assert!((half - core::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn ln_binomial_small_values() {
        assert!((ln_binomial(10, 3).exp() - 120.0).abs() < 1e-9);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
        assert_eq!(ln_binomial(7, 0), 0.0);
    }

    /// Q(h, x) for integer h equals the Poisson tail sum e^-x sum_{i<h} x^i/i!.
    fn poisson_q(h: u32, x: f64) -> f64 {
        let mut term = (-x).exp();
        let mut sum = term;
        for i in 1..h {
            term *= x / i as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn incomplete_gamma_matches_poisson_sums() {
        for h in [1u32, 2, 5, 8, 64] {
            for x in [0.01, 0.5, 1.0, 3.0, 7.5, 20.0, 63.0, 64.0, 65.0, 90.0] {
                let (p, q) = regularized_gamma(h as f64, x);
                let exact = poisson_q(h, x);
                assert!((q - exact).abs() < 1e-13, "Q({h},{x}) {q} vs {exact}");
                assert!((p + q - 1.0).abs() < 1e-13);
            }
        }
        assert_eq!(regularized_gamma(3.0, 0.0), (0.0, 1.0));
    }

    #[test]
    fn small_tails_keep_relative_precision() {
        // Q(1, x) = e^-x far into the tail.
        let (_, lq) = ln_regularized_gamma(1.0, 700.0);
        assert!((lq + 700.0).abs() < 1e-9);
        let (lp, _) = ln_regularized_gamma(1.0, 1e-12);
        assert!((lp - (1e-12f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn simpson_integrates_smooth_and_sharp_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, core::f64::consts::PI, 1e-12, 1);
        assert!((v - 2.0).abs() < 1e-10);
        // Steep logistic step, symmetric about 10, so the integral over [0, 20] is 10.
        let f = |x: f64| 1.0 / (1.0 + (-(x - 10.0) * 10.0).exp());
        let v = adaptive_simpson(&f, 0.0, 20.0, 1e-10, 16);
        assert!((v - 10.0).abs() < 1e-8, "{v}");
    }
}
