//! Brute-force oracles for the integration suite, implemented independently
//! of the library's numerics: an exact integer characteristic polynomial, a
//! root finder for polynomials with all-real roots, and a union-find
//! connected-component counter.

use ndarray::Array2;

/// Characteristic polynomial det(λI − M) of an integer-valued matrix via the
/// Faddeev-LeVerrier recursion in exact i128 arithmetic. Returns descending
/// powers with leading coefficient 1.
pub fn integer_charpoly(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    let a: Vec<i128> = m
        .iter()
        .map(|&x| {
            let r = x.round();
            assert!((x - r).abs() < 1e-9, "integer-valued matrix required");
            r as i128
        })
        .collect();
    let idx = |i: usize, j: usize| i * n + j;
    let mut coeffs = vec![1i128];
    let mut mk = vec![0i128; n * n];
    for k in 1..=n as i128 {
        // M_k = A·M_{k−1} + c_{k−1}·I, then c_k = −tr(A·M_k)/k (exact).
        let mut next = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i128;
                for t in 0..n {
                    acc += a[idx(i, t)] * mk[idx(t, j)];
                }
                next[idx(i, j)] = acc;
            }
        }
        let c_prev = *coeffs.last().unwrap();
        for i in 0..n {
            next[idx(i, i)] += c_prev;
        }
        let mut tr = 0i128;
        for i in 0..n {
            for t in 0..n {
                tr += a[idx(i, t)] * next[idx(t, i)];
            }
        }
        assert_eq!(tr % k, 0, "Faddeev-LeVerrier trace must divide exactly");
        coeffs.push(-tr / k);
        mk = next;
    }
    coeffs.into_iter().map(|c| c as f64).collect()
}

fn eval_poly(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Magnitude bound Σ|c_k|·|x|^(deg−k), used to scale the root tolerance.
fn eval_magnitude(p: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    p.iter().fold(0.0, |acc, &c| acc * ax + c.abs()).max(1.0)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    let deg = p.len() - 1;
    p[..deg]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (deg - i) as f64)
        .collect()
}

/// All roots, with multiplicity, of a polynomial whose roots are known to be
/// real (descending coefficients). Recurses on the derivative: simple roots
/// are bracketed between consecutive critical points, and a critical point
/// where the polynomial vanishes is a root one order higher than its
/// multiplicity among the critical points.
pub fn all_real_roots(p: &[f64]) -> Vec<f64> {
    assert!(p[0] != 0.0, "leading coefficient must be nonzero");
    let deg = p.len() - 1;
    if deg == 0 {
        return vec![];
    }
    if deg == 1 {
        return vec![-p[1] / p[0]];
    }
    let crit = all_real_roots(&derivative(p));
    let mut clusters: Vec<(f64, usize)> = vec![];
    for &c in &crit {
        match clusters.last_mut() {
            Some((v, count)) if (c - *v).abs() < 1e-7 => *count += 1,
            _ => clusters.push((c, 1)),
        }
    }
    // Relative to the evaluation magnitude: true multiple roots evaluate at
    // the f64 rounding floor (~1e-16 relative), while an extremum that merely
    // comes close to the axis stays orders of magnitude above it.
    let is_root = |x: f64| eval_poly(p, x).abs() <= 1e-13 * eval_magnitude(p, x);
    let mut roots = vec![];
    for &(c, m) in &clusters {
        if is_root(c) {
            roots.extend(std::iter::repeat(c).take(m + 1));
        }
    }
    let bound = 1.0 + p[1..].iter().map(|c| (c / p[0]).abs()).fold(0.0, f64::max);
    let mut candidates = vec![-bound];
    candidates.extend(clusters.iter().map(|&(v, _)| v));
    candidates.push(bound);
    for w in candidates.windows(2) {
        let (a, b) = (w[0], w[1]);
        if is_root(a) || is_root(b) {
            continue;
        }
        let (fa, fb) = (eval_poly(p, a), eval_poly(p, b));
        if fa.signum() != fb.signum() {
            roots.push(bisect(p, a, b, fa));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn bisect(p: &[f64], mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let low_negative = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = eval_poly(p, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == low_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Connected components by union-find with path halving.
pub fn component_count(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..num_nodes).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for (u, v) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }
    (0..num_nodes)
        .filter(|&v| find(&mut parent, v) == v)
        .count()
}
