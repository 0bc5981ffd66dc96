//! Small quadrature helpers shared across modules.

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Nodes are roots of the Legendre polynomial, found by Newton iteration
/// from the Chebyshev initial guess; accurate to machine precision for the
/// orders used here (n <= 64).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

/// Uniform angles on [0, 2pi); the matching trapezoid weight is 2pi/m.
///
/// For band-limited integrands of order < m the periodic trapezoid rule is
/// exact, which is what the geometric quadratures rely on.
pub fn uniform_angles(m: usize) -> Vec<f64> {
    let step = std::f64::consts::TAU / m as f64;
    (0..m).map(|i| i as f64 * step).collect()
}

/// Integrate a periodic function on [0, 2pi) with the m-point trapezoid rule.
pub fn trapezoid_periodic(m: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let step = std::f64::consts::TAU / m as f64;
    (0..m).map(|i| f(i as f64 * step)).sum::<f64>() * step
}
