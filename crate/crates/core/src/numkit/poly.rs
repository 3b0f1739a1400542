//! Real-coefficient polynomials and Aberth-Ehrlich simultaneous root finding.
//!
//! Roots of real polynomials are returned as an exactly conjugate-closed
//! multiset: after convergence each root is matched with its nearest
//! conjugate candidate and the pair is replaced by `(m, conj(m))` where `m`
//! averages the two estimates. The FCFO stage depends on this exactness.

use crate::error::{Error, Result};
use num_complex::Complex64;

const TRIM_REL: f64 = 1e-12;
const MAX_ITERATIONS: u32 = 200;
const STEP_TOL: f64 = 1e-13;

/// Polynomial with real coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoly {
    coeffs: Vec<f64>,
}

impl RealPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a polynomial needs at least one coefficient"
        );
        assert!(
            coeffs.iter().all(|c| c.is_finite()),
            "polynomial coefficients must be finite"
        );
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree as stored, before any trimming.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// Outcome of a root-finding run.
#[derive(Debug, Clone)]
pub struct RootReport {
    /// All roots with multiplicity; conjugate-closed bit-exactly.
    pub roots: Vec<Complex64>,
    /// Number of near-zero leading coefficients dropped before rooting.
    pub trimmed: usize,
    /// Aberth iterations used.
    pub iterations: u32,
}

/// Horner evaluation of p, p' and the roundoff noise floor
/// `eps * sum_k |c_k| |z|^k` in one pass.
fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut mag = 0.0f64;
    let zn = z.norm();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
        mag = mag * zn + c.abs();
    }
    (p, dp, f64::EPSILON * mag)
}

/// Complex division that scales the denominator first, so huge intermediate
/// magnitudes never overflow `|b|^2`.
fn robust_div(a: Complex64, b: Complex64) -> Complex64 {
    let scale = b.re.abs().max(b.im.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    let br = b.re / scale;
    let bi = b.im / scale;
    let ar = a.re / scale;
    let ai = a.im / scale;
    let denom = br * br + bi * bi;
    Complex64::new((ar * br + ai * bi) / denom, (ai * br - ar * bi) / denom)
}

/// Enforce exact conjugate closure on the computed root multiset.
///
/// A root is paired with its nearest conjugate candidate only when that
/// candidate sits within the pairing radius `max(4 |Im|, 1e-8 (1 + |z|))`;
/// the radius covers both genuine complex pairs (whose partner lies within
/// root-finder accuracy of the exact conjugate) and double real roots split
/// symmetrically by roundoff. Distinct real roots fail the radius test and
/// are merely snapped onto the axis, never merged.
fn enforce_conjugate_pairs(roots: &mut [Complex64]) {
    let n = roots.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    while let Some((pos_i, &idx_i)) = remaining
        .iter()
        .enumerate()
        .max_by(|a, b| {
            roots[*a.1]
                .im
                .abs()
                .partial_cmp(&roots[*b.1].im.abs())
                .unwrap()
        })
        .map(|x| (x.0, x.1))
    {
        remaining.swap_remove(pos_i);
        let target = roots[idx_i].conj();
        let nearest = remaining
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (roots[*a.1] - target)
                    .norm()
                    .partial_cmp(&(roots[*b.1] - target).norm())
                    .unwrap()
            })
            .map(|(pos, &idx)| (pos, idx));
        let radius = (4.0 * roots[idx_i].im.abs()).max(1e-8 * (1.0 + roots[idx_i].norm()));
        match nearest {
            Some((pos_j, idx_j)) if (roots[idx_j] - target).norm() <= radius => {
                remaining.swap_remove(pos_j);
                let m = 0.5 * (roots[idx_i] + roots[idx_j].conj());
                roots[idx_i] = m;
                roots[idx_j] = m.conj();
            }
            _ => {
                // No partner within reach: a (numerically) real root.
                roots[idx_i] = Complex64::new(roots[idx_i].re, 0.0);
            }
        }
    }
}

/// All complex roots of a real polynomial via Aberth-Ehrlich iteration.
///
/// Leading coefficients with magnitude below `1e-12 * max|c_k|` are trimmed
/// first; the zero polynomial (or an all-tiny one) is a degenerate input.
pub fn roots_real_poly(p: &RealPoly) -> Result<RootReport> {
    let max_coeff = p.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if max_coeff == 0.0 {
        return Err(Error::Degenerate("zero polynomial has no roots".into()));
    }
    let mut coeffs = p.coeffs.clone();
    let mut trimmed = 0usize;
    while coeffs.len() > 1 && coeffs.last().unwrap().abs() < TRIM_REL * max_coeff {
        coeffs.pop();
        trimmed += 1;
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Err(Error::Degenerate(
            "polynomial is constant after leading-coefficient trimming".into(),
        ));
    }

    let lead = *coeffs.last().unwrap();
    // Geometric mean of the root magnitudes (|c_0/c_d|^(1/d)) centers the
    // initial circle on the actual root cloud; loose upper bounds like
    // Cauchy's can start the iteration at overflow-inducing magnitudes.
    let radius = (coeffs[0] / lead).abs().powf(1.0 / degree as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| {
            // Slightly irrational angular offset breaks the real-axis symmetry
            // that can stall Aberth on real-coefficient polynomials.
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.354_894) / degree as f64;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    let mut iterations = 0;
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let mut worst_step = 0.0f64;
        for i in 0..degree {
            let (pv, dv, noise_floor) = eval_with_derivative(&coeffs, z[i]);
            // Residual at the evaluation noise floor: the approximation is a
            // root to working precision. Multiple roots never shrink the
            // Aberth step below this plateau, so the step test alone would
            // spin until the iteration cap.
            if pv.norm() <= 4.0 * noise_floor {
                continue;
            }
            let newton = if dv.norm() == 0.0 {
                // Derivative vanished; nudge off the stationary point.
                Complex64::new(1e-8 * (1.0 + radius), 1e-8 * (1.0 + radius))
            } else {
                robust_div(pv, dv)
            };
            let mut repulse = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    repulse += robust_div(Complex64::new(1.0, 0.0), z[i] - zj);
                }
            }
            let step = robust_div(newton, Complex64::new(1.0, 0.0) - newton * repulse);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            worst_step = worst_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if worst_step < STEP_TOL {
            break;
        }
    }
    if z.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numerical(
            "root iteration produced non-finite values".into(),
        ));
    }

    // Backward-error acceptance: |p(r)| <= 1e-8 * max|c| * max(1, |r|)^d.
    for r in &z {
        let bound = 1e-8 * max_coeff * r.norm().max(1.0).powi(degree as i32);
        let residual = p.eval_complex(*r).norm();
        if residual.is_nan() || residual > bound {
            return Err(Error::Numerical(format!(
                "root finder residual {residual:.3e} exceeds bound {bound:.3e} at {r}"
            )));
        }
    }

    enforce_conjugate_pairs(&mut z);
    z.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(RootReport {
        roots: z,
        trimmed,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    fn sorted_roots(mut roots: Vec<Complex64>) -> Vec<Complex64> {
        roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        roots
    }

    #[test]
    fn quadratic_with_imaginary_pair() {
        let report = roots_real_poly(&RealPoly::new(vec![1.0, 0.0, 1.0])).unwrap();
        let roots = sorted_roots(report.roots);
        assert!((roots[0] - Complex64::new(0.0, -1.0)).norm() < 1e-10);
        assert!((roots[1] - Complex64::new(0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn quadratic_with_real_roots() {
        // (g - 2)(g + 3) = g^2 + g - 6
        let report = roots_real_poly(&RealPoly::new(vec![-6.0, 1.0, 1.0])).unwrap();
        let roots = sorted_roots(report.roots);
        assert!((roots[0] - Complex64::new(-3.0, 0.0)).norm() < 1e-10);
        assert!((roots[1] - Complex64::new(2.0, 0.0)).norm() < 1e-10);
    }

    /// Companion-matrix oracle via nalgebra's Schur decomposition.
    fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
        let d = coeffs.len() - 1;
        let lead = coeffs[d];
        let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
        for r in 1..d {
            m[(r, r - 1)] = 1.0;
        }
        for r in 0..d {
            m[(r, d - 1)] = -coeffs[r] / lead;
        }
        m.complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect()
    }

    #[test]
    fn degree_30_matches_companion_oracle() {
        let mut rng = substream(3, "poly-oracle", &[0]);
        for case in 0..3 {
            let coeffs: Vec<f64> = (0..31).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let poly = RealPoly::new(coeffs.clone());
            let mine = sorted_roots(roots_real_poly(&poly).unwrap().roots);
            let oracle = sorted_roots(companion_roots(&coeffs));
            assert_eq!(mine.len(), 30);
            for (a, b) in mine.iter().zip(&oracle) {
                assert!(
                    (a - b).norm() < 1e-7,
                    "case {case}: root mismatch {a} vs oracle {b}"
                );
            }
        }
    }

    #[test]
    fn roots_are_exactly_conjugate_closed() {
        let mut rng = substream(5, "poly-conj", &[0]);
        for _ in 0..10 {
            let deg = 2 + (rng.gen::<u64>() % 18) as usize;
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let roots = roots_real_poly(&RealPoly::new(coeffs)).unwrap().roots;
            let mut pool: Vec<Complex64> = roots.clone();
            while let Some(r) = pool.pop() {
                if r.im == 0.0 {
                    continue;
                }
                let pos = pool
                    .iter()
                    .position(|c| c.re == r.re && c.im == -r.im)
                    .expect("missing bit-exact conjugate partner");
                pool.swap_remove(pos);
            }
        }
    }

    #[test]
    fn trimming_is_reported() {
        // Tiny leading coefficient relative to max drops the degree by one.
        let poly = RealPoly::new(vec![-6.0, 1.0, 1.0, 1e-15]);
        let report = roots_real_poly(&poly).unwrap();
        assert_eq!(report.trimmed, 1);
        assert_eq!(report.roots.len(), 2);
    }

    #[test]
    fn zero_polynomial_is_degenerate() {
        assert!(matches!(
            roots_real_poly(&RealPoly::new(vec![0.0, 0.0])),
            Err(crate::error::Error::Degenerate(_))
        ));
        assert!(matches!(
            roots_real_poly(&RealPoly::new(vec![3.0])),
            Err(crate::error::Error::Degenerate(_))
        ));
    }

    #[test]
    fn double_root_backward_error_holds() {
        // (g-1)^2 (g^2+4) has a real double root at 1.
        let poly = RealPoly::new(vec![4.0, -8.0, 5.0, -2.0, 1.0]);
        let report = roots_real_poly(&poly).unwrap();
        let near_one: Vec<_> = report
            .roots
            .iter()
            .filter(|r| (r.re - 1.0).abs() < 1e-4)
            .collect();
        assert_eq!(near_one.len(), 2);
        for r in report.roots {
            assert!(poly.eval_complex(r).norm() < 1e-8 * 8.0 * r.norm().max(1.0).powi(4));
        }
    }
}
