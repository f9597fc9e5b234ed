//! Characteristic polynomial of the 3x3 Hamiltonian and its roots.

use std::cmp::Ordering;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::model::SystemParams;
use crate::scalar::{im, re, Real};

/// Relative tolerance under which two real parts count as tied when ordering.
const TIE_RTOL: f64 = 1e-9;

/// Monic cubic `x^3 + c2 x^2 + c1 x + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoefficients<T> {
    pub c2: Complex<T>,
    pub c1: Complex<T>,
    pub c0: Complex<T>,
}

impl<T: Real> CubicCoefficients<T> {
    pub fn new(c2: Complex<T>, c1: Complex<T>, c0: Complex<T>) -> Self {
        Self { c2, c1, c0 }
    }

    /// Horner evaluation.
    #[inline]
    pub fn eval(&self, x: Complex<T>) -> Complex<T> {
        ((x + self.c2) * x + self.c1) * x + self.c0
    }

    #[inline]
    pub fn derivative(&self, x: Complex<T>) -> Complex<T> {
        let three = T::lit(3.0);
        let two = T::lit(2.0);
        x * x * three + self.c2 * x * two + self.c1
    }

    /// `18 c2 c1 c0 - 4 c2^3 c0 + c2^2 c1^2 - 4 c1^3 - 27 c0^2`.
    pub fn discriminant(&self) -> Complex<T> {
        let (a, b, c) = (self.c2, self.c1, self.c0);
        let l = T::lit;
        a * b * c * l(18.0) - a * a * a * c * l(4.0) + a * a * b * b
            - b * b * b * l(4.0)
            - c * c * l(27.0)
    }
}

/// Coefficients of `det(x I - H_nH)`:
/// `c2 = i(gamma + kappa)`, `c1 = -(W^2/4 + g^2 + gamma kappa)`, `c0 = -i W^2 kappa / 4`.
pub fn characteristic_coefficients<T: Real>(params: &SystemParams<T>) -> CubicCoefficients<T> {
    coefficients_from_rates(params.g, params.omega, params.gamma(), params.kappa)
}

/// Same as [`characteristic_coefficients`] from bare rates.
pub fn coefficients_from_rates<T: Real>(
    g: T,
    omega: T,
    gamma: T,
    kappa: T,
) -> CubicCoefficients<T> {
    let quarter_omega_sq = omega * omega * T::lit(0.25);
    CubicCoefficients {
        c2: im(gamma + kappa),
        c1: re(-(quarter_omega_sq + g * g + gamma * kappa)),
        c0: im(-quarter_omega_sq * kappa),
    }
}

/// Three eigenvalues in canonical order: descending real part, ties
/// (relative to the triple's magnitude) broken by descending imaginary part.
///
/// Serializes as `[[re, im], [re, im], [re, im]]` and is re-sorted on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", from = "[Complex<T>; 3]", into = "[Complex<T>; 3]")]
pub struct ComplexTriple<T> {
    values: [Complex<T>; 3],
}

impl<T: Real> ComplexTriple<T> {
    /// Sorts `values` into canonical order.
    pub fn new(values: [Complex<T>; 3]) -> Self {
        let scale = values.iter().fold(T::one(), |m, z| m.max(z.norm()));
        let tol = T::lit(TIE_RTOL) * scale;
        let mut values = values;
        values.sort_by(|a, b| canonical_cmp(a, b, tol));
        Self { values }
    }

    #[inline]
    pub fn values(&self) -> &[Complex<T>; 3] {
        &self.values
    }

    #[inline]
    pub fn lambda1(&self) -> Complex<T> {
        self.values[0]
    }

    #[inline]
    pub fn lambda2(&self) -> Complex<T> {
        self.values[1]
    }

    #[inline]
    pub fn lambda3(&self) -> Complex<T> {
        self.values[2]
    }

    pub fn sum(&self) -> Complex<T> {
        self.values[0] + self.values[1] + self.values[2]
    }

    /// `l1 l2 + l1 l3 + l2 l3`.
    pub fn pair_sum(&self) -> Complex<T> {
        let [a, b, c] = self.values;
        a * b + a * c + b * c
    }

    pub fn product(&self) -> Complex<T> {
        let [a, b, c] = self.values;
        a * b * c
    }

    /// Monic polynomial with these roots.
    pub fn polynomial(&self) -> CubicCoefficients<T> {
        CubicCoefficients {
            c2: -self.sum(),
            c1: self.pair_sum(),
            c0: -self.product(),
        }
    }

    /// Largest pairwise distance.
    pub fn spread(&self) -> T {
        let [a, b, c] = self.values;
        (a - b).norm().max((a - c).norm()).max((b - c).norm())
    }

    /// Minimal summed distance to `other` over the six permutations, along
    /// with the permutation `p` such that `self[i]` pairs with `other[p[i]]`.
    pub fn match_to(&self, other: &ComplexTriple<T>) -> ([usize; 3], T) {
        best_permutation(&self.values, &other.values, |a, b| (a - b).norm())
    }
}

fn canonical_cmp<T: Real>(a: &Complex<T>, b: &Complex<T>, tol: T) -> Ordering {
    if (a.re - b.re).abs() > tol {
        b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal)
    } else {
        b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal)
    }
}

/// All permutations of three items in lexicographic order.
pub const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Permutation minimizing `sum_i cost(from[i], to[p[i]])`. Ties resolve to the
/// first permutation in [`PERMUTATIONS`].
pub fn best_permutation<T: Real>(
    from: &[Complex<T>; 3],
    to: &[Complex<T>; 3],
    cost: impl Fn(Complex<T>, Complex<T>) -> T,
) -> ([usize; 3], T) {
    let mut best = (PERMUTATIONS[0], T::infinity());
    for p in PERMUTATIONS {
        let c = (0..3).map(|i| cost(from[i], to[p[i]])).sum::<T>();
        if c < best.1 {
            best = (p, c);
        }
    }
    best
}

/// Roots of the monic cubic by Cardano's formula, each refined by Newton
/// steps that are kept only while they reduce the residual.
pub fn solve_cubic<T: Real>(coeffs: &CubicCoefficients<T>) -> ComplexTriple<T> {
    let CubicCoefficients { c2, c1, c0 } = *coeffs;
    let l = T::lit;
    let third = c2 / l(3.0);
    // x = t - c2/3  =>  t^3 + p t + q = 0
    let p = c1 - c2 * third;
    let q = third * third * third * l(2.0) - third * c1 + c0;

    let half_q = q * l(0.5);
    let p3 = p / l(3.0);
    let disc = half_q * half_q + p3 * p3 * p3;
    let root = disc.sqrt();
    let (u_plus, u_minus) = (-half_q + root, -half_q - root);
    let u_cubed = if u_plus.norm() >= u_minus.norm() {
        u_plus
    } else {
        u_minus
    };

    let mut roots = [Complex::zero(); 3];
    if u_cubed.norm() == T::zero() {
        // p = q = 0: triple root
        roots = [-third; 3];
    } else {
        let u = u_cubed.cbrt();
        let half_sqrt3 = l(3.0).sqrt() * l(0.5);
        let omega = Complex::new(l(-0.5), half_sqrt3);
        let mut uk = u;
        for r in roots.iter_mut() {
            let vk = -p3 / uk;
            *r = uk + vk - third;
            uk *= omega;
        }
    }
    for r in roots.iter_mut() {
        *r = polish(coeffs, *r);
    }
    ComplexTriple::new(roots)
}

fn polish<T: Real>(coeffs: &CubicCoefficients<T>, mut x: Complex<T>) -> Complex<T> {
    let mut fx = coeffs.eval(x).norm();
    for _ in 0..4 {
        if fx == T::zero() {
            break;
        }
        let d = coeffs.derivative(x);
        if d.norm() == T::zero() {
            break;
        }
        let cand = x - coeffs.eval(x) / d;
        let fc = coeffs.eval(cand).norm();
        if fc < fx {
            x = cand;
            fx = fc;
        } else {
            break;
        }
    }
    x
}

/// Eigenvalues of `H_nH` for `params`.
pub fn eigenvalues<T: Real>(params: &SystemParams<T>) -> ComplexTriple<T> {
    solve_cubic(&characteristic_coefficients(params))
}

impl<T: Real> Default for ComplexTriple<T> {
    fn default() -> Self {
        Self {
            values: [Complex::zero(); 3],
        }
    }
}

impl<T: Real> From<[Complex<T>; 3]> for ComplexTriple<T> {
    fn from(v: [Complex<T>; 3]) -> Self {
        Self::new(v)
    }
}

impl<T: Real> From<ComplexTriple<T>> for [Complex<T>; 3] {
    fn from(t: ComplexTriple<T>) -> Self {
        t.values
    }
}

/// `(x - a)(x - b)(x - c)` evaluated directly.
pub fn eval_from_roots<T: Real>(roots: &[Complex<T>; 3], x: Complex<T>) -> Complex<T> {
    roots.iter().fold(Complex::one(), |acc, r| acc * (x - r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::model::build_hnh;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn params(g: f64, omega: f64, kappa: f64) -> SystemParams<f64> {
        SystemParams::new(g, omega, 1.0, 0.0, kappa, 0.1).unwrap()
    }

    #[test]
    fn coefficients_decoupled() {
        let cc = characteristic_coefficients(&params(0.0, 0.0, 7.0));
        assert_eq!(cc.c2, c(0.0, 8.0));
        assert_eq!(cc.c1, c(-7.0, 0.0));
        assert_eq!(cc.c0, c(0.0, 0.0));
    }

    #[test]
    fn coefficients_near_ep3() {
        let cc = characteristic_coefficients(&params(3.41, 3.29, 7.0));
        // -i 3.29^2 7 / 4
        assert_relative_eq!(cc.c0.im, -18.942175, epsilon = 1e-9);
        assert_eq!(cc.c0.re, 0.0);
    }

    #[test]
    fn coefficients_match_determinant() {
        let p = params(2.7, 1.3, 7.0);
        let h = build_hnh(&p).unwrap();
        let cc = characteristic_coefficients(&p);
        for x in [
            c(0.3, -1.2),
            c(-2.0, 0.5),
            c(4.1, 3.3),
            c(0.0, 0.0),
            c(-0.7, -6.0),
        ] {
            let m = ComplexMatrix::identity(3).scale(x) - h.clone();
            let det = m.determinant();
            assert!((det - cc.eval(x)).norm() < 1e-12 * (1.0 + det.norm()));
        }
    }

    #[test]
    fn decoupled_roots() {
        let t = eigenvalues(&params(0.0, 0.0, 7.0));
        let expect = [c(0.0, 0.0), c(0.0, -1.0), c(0.0, -7.0)];
        for (a, b) in t.values().iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn strong_coupling_without_pump() {
        // lambda^2 + 8i lambda - 23 = 0 and lambda = 0
        let t = eigenvalues(&params(4.0, 0.0, 7.0));
        let r = 7.0f64.sqrt();
        let expect = [c(r, -4.0), c(0.0, 0.0), c(-r, -4.0)];
        for (a, b) in t.values().iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn triple_root_at_exact_ep3() {
        let (g, w) = (3.4094484340342537, 3.291804799191294);
        let t = eigenvalues(&params(g, w, 7.0));
        assert!(t.spread() < 1e-3, "spread {}", t.spread());
        for z in t.values() {
            assert!((z - c(0.0, -8.0 / 3.0)).norm() < 1e-3);
        }
        // At the 4-decimal rounding the triple root is already visibly split.
        let t = eigenvalues(&params(3.4094, 3.2918, 7.0));
        for z in t.values() {
            assert!((z - c(0.0, -8.0 / 3.0)).norm() < 0.1);
        }
    }

    #[test]
    fn exact_triple_root_branch() {
        let cc = CubicCoefficients::new(c(-3.0, 0.0), c(3.0, 0.0), c(-1.0, 0.0));
        let t = solve_cubic(&cc);
        for z in t.values() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_order_ties_break_on_imaginary() {
        let t = ComplexTriple::new([c(0.0, -7.0), c(1e-17, -1.0), c(-1e-17, 0.0)]);
        assert_eq!(t.values(), &[c(-1e-17, 0.0), c(1e-17, -1.0), c(0.0, -7.0)]);
        let t = ComplexTriple::new([c(-2.0, 1.0), c(2.0, 0.0), c(0.0, 5.0)]);
        assert_eq!(t.lambda1(), c(2.0, 0.0));
        assert_eq!(t.lambda3(), c(-2.0, 1.0));
    }

    #[test]
    fn discriminant_vanishes_only_at_degeneracy() {
        let (g, w) = (3.4094484340342537, 3.291804799191294);
        let d = characteristic_coefficients(&params(g, w, 7.0)).discriminant();
        assert!(d.norm() < 1e-6, "{d}");
        let d = characteristic_coefficients(&params(4.0, 0.0, 7.0)).discriminant();
        // roots 0, +-sqrt7 - 4i are distinct
        assert!(d.norm() > 1.0);
        // real after factoring: Im is zero for every params set
        assert_eq!(d.im, 0.0);
    }

    #[test]
    fn match_to_finds_permutation() {
        let a = ComplexTriple::new([c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let b = ComplexTriple::new([c(1.0, 0.1), c(0.0, -0.1), c(-1.0, 0.0)]);
        let (p, cost) = a.match_to(&b);
        assert_eq!(p, [0, 1, 2]);
        assert_relative_eq!(cost, 0.2, epsilon = 1e-15);
    }
}
