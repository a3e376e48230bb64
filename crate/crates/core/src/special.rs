//! Spherical Bessel functions, Legendre polynomials and Gauss-Legendre
//! quadrature used by the modal scattering computation.

use std::f64::consts::PI;

/// Spherical Bessel function of the first kind, j_n(x).
///
/// Uses the ascending power series for small arguments (upward recurrence
/// is unstable when n exceeds x) and upward recurrence otherwise.
pub fn spherical_bessel_j(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if (n as f64) < x && x > 0.5 {
        // stable upward recurrence: j_{m+1} = (2m+1)/x j_m - j_{m-1}
        let mut jm1 = x.sin() / x;
        if n == 0 {
            return jm1;
        }
        let mut jm = x.sin() / (x * x) - x.cos() / x;
        for m in 1..n {
            let next = (2 * m + 1) as f64 / x * jm - jm1;
            jm1 = jm;
            jm = next;
        }
        jm
    } else {
        // j_n(x) = x^n / (2n+1)!! sum_k (-x^2/2)^k / (k! (2n+2k+1)!!)
        let mut double_fact = 1.0;
        for m in 0..n {
            double_fact *= (2 * m + 3) as f64;
        }
        let prefactor = x.powi(n as i32) / double_fact;
        let mut term = 1.0;
        let mut sum = 1.0;
        let half_x2 = 0.5 * x * x;
        for k in 1..200 {
            term *= -half_x2 / (k as f64 * (2 * n + 2 * k + 1) as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        prefactor * sum
    }
}

/// Spherical Bessel function of the second kind, y_n(x). Upward recurrence
/// is stable for this (dominant) solution.
pub fn spherical_bessel_y(n: usize, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut ym1 = -x.cos() / x;
    if n == 0 {
        return ym1;
    }
    let mut ym = -x.cos() / (x * x) - x.sin() / x;
    for m in 1..n {
        let next = (2 * m + 1) as f64 / x * ym - ym1;
        ym1 = ym;
        ym = next;
    }
    ym
}

/// Derivative of a spherical Bessel function from the recurrence
/// f_n'(x) = f_{n-1}(x) - (n+1)/x f_n(x), with f_0' = -f_1.
pub fn spherical_bessel_j_prime(n: usize, x: f64) -> f64 {
    if n == 0 {
        -spherical_bessel_j(1, x)
    } else {
        spherical_bessel_j(n - 1, x) - (n + 1) as f64 / x * spherical_bessel_j(n, x)
    }
}

pub fn spherical_bessel_y_prime(n: usize, x: f64) -> f64 {
    if n == 0 {
        -spherical_bessel_y(1, x)
    } else {
        spherical_bessel_y(n - 1, x) - (n + 1) as f64 / x * spherical_bessel_y(n, x)
    }
}

/// Legendre polynomial P_n(x) by the three-term recurrence.
pub fn legendre_p(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let mut pm1 = 1.0;
            let mut pm = x;
            for m in 1..n {
                let next = ((2 * m + 1) as f64 * x * pm - m as f64 * pm1) / (m + 1) as f64;
                pm1 = pm;
                pm = next;
            }
            pm
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// P_n with the Chebyshev initial guess. Exact for polynomials of degree
/// 2n - 1, so modal products integrate exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let p = legendre_p(n, x);
            let pm1 = legendre_p(n - 1, x);
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_order_closed_forms() {
        for &x in &[1e-4, 0.3, 1.0, 2.5, 10.0] {
            assert_relative_eq!(spherical_bessel_j(0, x), x.sin() / x, max_relative = 1e-12);
            assert_relative_eq!(spherical_bessel_y(0, x), -x.cos() / x, max_relative = 1e-12);
        }
        // the j_1 closed form cancels catastrophically for tiny x, so
        // compare only where it is well conditioned
        for &x in &[0.3f64, 1.0, 2.5, 10.0] {
            assert_relative_eq!(
                spherical_bessel_j(1, x),
                x.sin() / (x * x) - x.cos() / x,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn small_argument_leading_order() {
        // j_n(x) -> x^n / (2n+1)!! for small x
        let x = 1e-3;
        assert_relative_eq!(spherical_bessel_j(2, x), x * x / 15.0, max_relative = 1e-6);
        assert_relative_eq!(
            spherical_bessel_j(3, x),
            x.powi(3) / 105.0,
            max_relative = 1e-6
        );
        // y_n(x) -> -(2n-1)!!/x^{n+1}
        assert_relative_eq!(
            spherical_bessel_y(2, x),
            -3.0 / x.powi(3),
            max_relative = 1e-5
        );
    }

    #[test]
    fn wronskian_identity() {
        // j_n(x) y_n'(x) - j_n'(x) y_n(x) = 1/x^2
        for n in 0..8 {
            for &x in &[0.05, 0.7, 1.3, 6.0] {
                let w = spherical_bessel_j(n, x) * spherical_bessel_y_prime(n, x)
                    - spherical_bessel_j_prime(n, x) * spherical_bessel_y(n, x);
                assert_relative_eq!(w, 1.0 / (x * x), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn legendre_recurrence_values() {
        let x = 0.37;
        assert_eq!(legendre_p(0, x), 1.0);
        assert_eq!(legendre_p(1, x), x);
        assert_relative_eq!(legendre_p(2, x), 0.5 * (3.0 * x * x - 1.0), max_relative = 1e-14);
        assert_relative_eq!(
            legendre_p(3, x),
            0.5 * (5.0 * x.powi(3) - 3.0 * x),
            max_relative = 1e-13
        );
    }

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre(8);
        assert_relative_eq!(weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
        // integral of x^10 over [-1,1] is 2/11 (degree 10 < 2*8-1)
        let int: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * x.powi(10))
            .sum();
        assert_relative_eq!(int, 2.0 / 11.0, max_relative = 1e-13);
        // orthogonality of P_3 and P_5
        let dot: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * legendre_p(3, *x) * legendre_p(5, *x))
            .sum();
        assert!(dot.abs() < 1e-14);
    }
}
