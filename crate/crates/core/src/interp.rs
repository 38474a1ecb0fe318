//! Shape-preserving cubic interpolation and small linear-algebra helpers.

/// Partial derivatives of one node slope with respect to three node values.
pub type Stencil = [(usize, f64); 3];

/// Monotone piecewise-cubic Hermite slopes (weighted harmonic mean, with the
/// one-sided three-point rule at both ends).
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    pchip_slopes_with_partials(x, y).0
}

/// Slopes together with their partial derivatives with respect to `y`.
///
/// Where a limiter sets a slope to zero the partials are zero as well.
pub fn pchip_slopes_with_partials(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<Stencil>) {
    let n = x.len();
    assert_eq!(n, y.len());
    assert!(n >= 2, "interpolation needs two nodes");
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    let mut p = vec![[(0usize, 0.0f64); 3]; n];

    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        p[0] = [(0, -1.0 / h[0]), (1, 1.0 / h[0]), (1, 0.0)];
        p[1] = p[0];
        return (d, p);
    }

    for k in 1..n - 1 {
        let (a, b) = (del[k - 1], del[k]);
        p[k] = [(k - 1, 0.0), (k, 0.0), (k + 1, 0.0)];
        if a * b <= 0.0 {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        let den = w1 * b + w2 * a;
        d[k] = (w1 + w2) * a * b / den;
        let da = (w1 + w2) * w1 * b * b / (den * den);
        let db = (w1 + w2) * w2 * a * a / (den * den);
        let (ia, ib) = (1.0 / h[k - 1], 1.0 / h[k]);
        p[k] = [(k - 1, -da * ia), (k, da * ia - db * ib), (k + 1, db * ib)];
    }

    let (d0, p0) = edge(h[0], h[1], del[0], del[1], [0, 1, 2]);
    d[0] = d0;
    p[0] = p0;
    let (dn, pn) = edge(h[n - 2], h[n - 3], del[n - 2], del[n - 3], [n - 1, n - 2, n - 3]);
    d[n - 1] = dn;
    p[n - 1] = pn;
    (d, p)
}

// `idx` lists the end node, its neighbour, and the next one inward.
// Differences are taken so that the same formula serves both ends.
fn edge(h0: f64, h1: f64, del0: f64, del1: f64, idx: [usize; 3]) -> (f64, Stencil) {
    let c0 = (2.0 * h0 + h1) / (h0 + h1);
    let c1 = -h0 / (h0 + h1);
    let d = c0 * del0 + c1 * del1;
    let zero = [(idx[0], 0.0), (idx[1], 0.0), (idx[2], 0.0)];
    if d.signum() != del0.signum() || d == 0.0 || del0 == 0.0 {
        return (0.0, zero);
    }
    // del0 = (y[idx1] - y[idx0]) / (x[idx1] - x[idx0]) in both orientations.
    let (g0, g1) = (1.0 / h0, 1.0 / h1);
    let right = idx[0] > idx[1];
    // Derivatives of del0 and del1 w.r.t. (y_idx0, y_idx1, y_idx2).
    let (ddel0, ddel1) = if right {
        ([g0, -g0, 0.0], [0.0, g1, -g1])
    } else {
        ([-g0, g0, 0.0], [0.0, -g1, g1])
    };
    if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        let s = [3.0 * ddel0[0], 3.0 * ddel0[1], 3.0 * ddel0[2]];
        return (3.0 * del0, [(idx[0], s[0]), (idx[1], s[1]), (idx[2], s[2])]);
    }
    let s: Vec<f64> = (0..3).map(|j| c0 * ddel0[j] + c1 * ddel1[j]).collect();
    (d, [(idx[0], s[0]), (idx[1], s[1]), (idx[2], s[2])])
}

/// Cubic Hermite interpolant on the cell `[x0, x1]`.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Evaluate a Hermite interpolant given node data, clamping outside the range.
pub fn hermite_eval(x: &[f64], y: &[f64], d: &[f64], xq: f64) -> f64 {
    let n = x.len();
    if xq <= x[0] {
        return y[0];
    }
    if xq >= x[n - 1] {
        return y[n - 1];
    }
    let k = x.partition_point(|&v| v <= xq).saturating_sub(1).min(n - 2);
    hermite(x[k], x[k + 1], y[k], y[k + 1], d[k], d[k + 1], xq)
}

/// Euclidean projection onto non-increasing sequences with positive weights
/// (pool-adjacent-violators).
pub fn project_non_increasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut level: Vec<f64> = Vec::with_capacity(y.len());
    let mut weight: Vec<f64> = Vec::with_capacity(y.len());
    let mut count: Vec<usize> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        level.push(v);
        weight.push(wt);
        count.push(1);
        while level.len() > 1 && level[level.len() - 2] < level[level.len() - 1] {
            let (l1, w1, c1) = (level.pop().unwrap(), weight.pop().unwrap(), count.pop().unwrap());
            let k = level.len() - 1;
            let wt = weight[k] + w1;
            level[k] = (level[k] * weight[k] + l1 * w1) / wt;
            weight[k] = wt;
            count[k] += c1;
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (l, c) in level.iter().zip(&count) {
        out.extend(std::iter::repeat(*l).take(*c));
    }
    out
}

/// Solve a tridiagonal system by the Thomas algorithm.
///
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i];
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i + 1] * next;
    }
    x
}
