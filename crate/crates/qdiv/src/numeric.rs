//! Shared numerical kernels: Gauss-Legendre rules, Nelder-Mead simplex
//! search, and Richardson/Neville extrapolation.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre polynomial with the
/// usual asymptotic initial guesses; exact for polynomials of degree
/// 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    static CACHE: Lazy<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    if let Some(rule) = CACHE.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
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
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    CACHE
        .lock()
        .unwrap()
        .insert(n, (nodes.clone(), weights.clone()));
    (nodes, weights)
}

/// n-point Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        t.iter().map(|&ti| mid + half * ti).collect(),
        w.iter().map(|&wi| half * wi).collect(),
    )
}

/// Integrate `f` over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(n: usize, a: f64, b: f64, f: F) -> f64 {
    let (x, w) = gauss_legendre_on(n, a, b);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Derivative-free Nelder-Mead minimisation with the standard
/// reflection/expansion/contraction/shrink coefficients.
///
/// The objective may return non-finite values; they are treated as +inf
/// so constraint violations can be signalled by the caller.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    scale: f64,
    max_iters: usize,
    tol: f64,
) -> NmResult {
    let n = x0.len();
    let clean = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1e-12 {
            0.05 * scale * p[i].abs().max(scale)
        } else {
            0.1 * scale
        };
        simplex.push(p);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|p| clean(f(p))).collect();
    let mut iters = 0;
    let mut converged = false;
    while iters < max_iters {
        iters += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if (fvals[worst] - fvals[best]).abs() <= tol * (1.0 + fvals[best].abs()) {
            converged = true;
            break;
        }
        // centroid of all points except the worst
        let mut centroid = vec![0.0; n];
        for (k, p) in simplex.iter().enumerate() {
            if k != worst {
                for j in 0..n {
                    centroid[j] += p[j] / n as f64;
                }
            }
        }
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(&ai, &bi)| ai + t * (bi - ai))
                .collect()
        };
        let reflected = lerp(&centroid, &simplex[worst], -1.0);
        let fr = clean(f(&reflected));
        if fr < fvals[best] {
            let expanded = lerp(&centroid, &simplex[worst], -2.0);
            let fe = clean(f(&expanded));
            if fe < fr {
                simplex[worst] = expanded;
                fvals[worst] = fe;
            } else {
                simplex[worst] = reflected;
                fvals[worst] = fr;
            }
        } else if fr < fvals[second_worst] {
            simplex[worst] = reflected;
            fvals[worst] = fr;
        } else {
            let contracted = if fr < fvals[worst] {
                lerp(&centroid, &simplex[worst], -0.5)
            } else {
                lerp(&centroid, &simplex[worst], 0.5)
            };
            let fc = clean(f(&contracted));
            if fc < fvals[worst].min(fr) {
                simplex[worst] = contracted;
                fvals[worst] = fc;
            } else {
                // shrink towards the best vertex
                let anchor = simplex[best].clone();
                for k in 0..=n {
                    if k != best {
                        simplex[k] = lerp(&anchor, &simplex[k], 0.5);
                        fvals[k] = clean(f(&simplex[k]));
                    }
                }
            }
        }
    }
    let (bi, _) = fvals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    NmResult {
        x: simplex[bi].clone(),
        fx: fvals[bi],
        iters,
        converged,
    }
}

/// Neville polynomial extrapolation of `(h_i, v_i)` samples to h = 0.
///
/// The samples should correspond to a quantity v(h) = L + c1 h + c2 h^2
/// + ...; convergence of second-order limits is driven through this.
pub fn extrapolate_to_zero(hs: &[f64], vs: &[f64]) -> f64 {
    assert_eq!(hs.len(), vs.len());
    let n = hs.len();
    assert!(n >= 1);
    let mut tab = vs.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            let h_lo = hs[i];
            let h_hi = hs[i - level];
            tab[i] = (h_hi * tab[i] - h_lo * tab[i - 1]) / (h_hi - h_lo);
        }
    }
    tab[n - 1]
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}
