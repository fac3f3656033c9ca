//! Real roots of small-degree univariate polynomials.
//!
//! Roots are isolated between consecutive critical points (the real roots of
//! the derivative, found recursively) and refined by bisection. A critical
//! point where the polynomial vanishes to rounding is reported as a root, which
//! catches even-multiplicity roots that never change sign.

/// Evaluates `sum c_i s^i` (coefficients in ascending powers) by Horner's rule.
pub fn eval(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

/// `sum |c_i| |s|^i`, the rounding scale of `eval`.
fn magnitude(coeffs: &[f64], s: f64) -> f64 {
    let a = s.abs();
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * a + c.abs())
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Drops leading coefficients that are negligible relative to the largest one.
pub fn trim(coeffs: &[f64], rel_tol: f64) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut out = coeffs.to_vec();
    while let Some(&last) = out.last() {
        if last.abs() <= rel_tol * scale {
            out.pop();
        } else {
            break;
        }
    }
    out
}

const ROOT_REL_TOL: f64 = 1e-12;

/// Sorted, deduplicated real roots. An identically-zero polynomial has no
/// isolated roots and yields an empty list; check for it separately.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let p = trim(coeffs, 1e-13);
    let mut roots = roots_inner(&p);
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    roots
}

fn roots_inner(p: &[f64]) -> Vec<f64> {
    match p.len() {
        0 | 1 => return Vec::new(),
        2 => return vec![-p[0] / p[1]],
        _ => {}
    }
    let lead = p[p.len() - 1];
    let bound = 1.0 + p[..p.len() - 1].iter().fold(0.0f64, |m, c| m.max((c / lead).abs()));
    let mut crit: Vec<f64> = roots_inner(&derivative(p))
        .into_iter()
        .filter(|c| c.abs() < bound)
        .collect();
    crit.sort_by(f64::total_cmp);

    let mut roots = Vec::new();
    for &c in &crit {
        if eval(p, c).abs() <= ROOT_REL_TOL * magnitude(p, c) {
            roots.push(c);
        }
    }
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(-bound);
    knots.extend(crit);
    knots.push(bound);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(p, a), eval(p, b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(bisect(p, a, b, fa));
        }
    }
    if eval(p, bound) == 0.0 {
        roots.push(bound);
    }
    roots
}

fn bisect(p: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = eval(p, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
