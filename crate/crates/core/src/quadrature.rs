//! Gauss–Legendre and Gauss–Lobatto–Legendre rules on [−1, 1] and Lagrange
//! bases on arbitrary nodes.

/// `(P_n(x), P_{n−1}(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * x * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `n`-point Gauss–Legendre rule, exact for degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, pm) = legendre(n, x);
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, pm) = legendre(n, x);
        dp = if p.is_finite() { n as f64 * (x * p - pm) / (x * x - 1.0) } else { dp };
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `(p + 1)`-point Gauss–Lobatto–Legendre rule (endpoints included), exact
/// for degree `2p − 1`.
pub fn gauss_lobatto(p: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 1);
    let pf = p as f64;
    let mut nodes = vec![0.0; p + 1];
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    for i in 1..p {
        // interior nodes are the roots of P_p′
        let mut x = -(std::f64::consts::PI * i as f64 / pf).cos();
        for _ in 0..100 {
            let (pp, pm) = legendre(p, x);
            let d1 = pf * (x * pp - pm) / (x * x - 1.0);
            let d2 = (2.0 * x * d1 - pf * (pf + 1.0) * pp) / (1.0 - x * x);
            let dx = d1 / d2;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (pp, _) = legendre(p, x);
            2.0 / (pf * (pf + 1.0) * pp * pp)
        })
        .collect();
    (nodes, weights)
}

/// Values of the Lagrange basis on `nodes` at `x`.
pub fn lagrange_values(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, &xk)| (x - xk) / (nodes[i] - xk))
                .product()
        })
        .collect()
}

/// Derivatives of the Lagrange basis on `nodes` at `x`.
pub fn lagrange_derivatives(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for m in (0..n).filter(|&m| m != i) {
                let mut prod = 1.0 / (nodes[i] - nodes[m]);
                for k in (0..n).filter(|&k| k != i && k != m) {
                    prod *= (x - nodes[k]) / (nodes[i] - nodes[k]);
                }
                s += prod;
            }
            s
        })
        .collect()
}

/// Composite Simpson weights for `n` (even) uniform subintervals of [0, 1].
pub fn simpson_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "Simpson needs an even number of subintervals");
    let h = 1.0 / n as f64;
    (0..=n)
        .map(|j| {
            let c = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(nodes: &[f64], weights: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        nodes.iter().zip(weights).map(|(&x, &w)| w * f(x)).sum()
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for d in 0..2 * n {
                let exact = if d % 2 == 0 { 2.0 / (d + 1) as f64 } else { 0.0 };
                assert!((integrate(&x, &w, |t| t.powi(d as i32)) - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn gauss_lobatto_exactness() {
        for p in 1..12 {
            let (x, w) = gauss_lobatto(p);
            assert_eq!((x[0], x[p]), (-1.0, 1.0));
            for d in 0..2 * p {
                let exact = if d % 2 == 0 { 2.0 / (d + 1) as f64 } else { 0.0 };
                assert!((integrate(&x, &w, |t| t.powi(d as i32)) - exact).abs() < 1e-13, "p={p} d={d}");
            }
        }
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        let (x, _) = gauss_lobatto(5);
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t.powi(4);
        let df = |t: f64| -2.0 + 12.0 * t.powi(3);
        for &t in &[-0.9, -0.1, 0.37, 0.99] {
            let v: f64 = lagrange_values(&x, t).iter().zip(&x).map(|(l, &xi)| l * f(xi)).sum();
            let d: f64 = lagrange_derivatives(&x, t).iter().zip(&x).map(|(l, &xi)| l * f(xi)).sum();
            assert!((v - f(t)).abs() < 1e-13);
            assert!((d - df(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let w = simpson_weights(6);
        let s: f64 = w.iter().enumerate().map(|(j, w)| w * (j as f64 / 6.0).powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-15);
    }
}
