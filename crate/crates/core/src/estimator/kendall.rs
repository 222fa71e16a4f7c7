//! Empirical Kendall's tau (tau-b).
//!
//! Both paths reduce to the same integer counts and share the final float
//! formula, so they agree bit for bit.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Counts {
    // concordant minus discordant pairs
    s: i64,
    n0: i64,
    // pairs tied in x, pairs tied in y
    ties_x: i64,
    ties_y: i64,
}

impl Counts {
    fn tau_b(self) -> Result<f64> {
        let dx = self.n0 - self.ties_x;
        let dy = self.n0 - self.ties_y;
        if dx == 0 || dy == 0 {
            return Err(undefined("a series is constant"));
        }
        Ok((self.s as f64 / (dx as f64 * dy as f64).sqrt()).clamp(-1.0, 1.0))
    }
}

fn undefined(reason: &str) -> Error {
    Error::UndefinedTau {
        first: "x".into(),
        second: "y".into(),
        reason: reason.into(),
    }
}

fn validate(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!("series lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(undefined("fewer than two observations"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Domain("series contain NaN".into()));
    }
    Ok(())
}

fn sign(a: f64) -> i64 {
    if a > 0.0 {
        1
    } else if a < 0.0 {
        -1
    } else {
        0
    }
}

/// O(m^2) reference implementation of tau-b.
pub fn kendall_tau_brute(x: &[f64], y: &[f64]) -> Result<f64> {
    validate(x, y)?;
    let m = x.len();
    let mut c = Counts {
        s: 0,
        n0: (m * (m - 1) / 2) as i64,
        ties_x: 0,
        ties_y: 0,
    };
    for i in 0..m {
        for j in (i + 1)..m {
            let sx = sign(x[i] - x[j]);
            let sy = sign(y[i] - y[j]);
            c.s += sx * sy;
            c.ties_x += (sx == 0) as i64;
            c.ties_y += (sy == 0) as i64;
        }
    }
    c.tau_b()
}

fn tied_pairs_in_sorted(v: &[f64]) -> i64 {
    let mut total = 0i64;
    let mut run = 1i64;
    for w in v.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

// Sorts `v` and returns the number of inversions (strictly decreasing pairs).
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// O(m log m) tau-b by sorting on x and counting inversions in y.
pub fn empirical_kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    validate(x, y)?;
    let m = x.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let ties_x = tied_pairs_in_sorted(&xs);
    // pairs tied in both coordinates
    let mut ties_xy = 0i64;
    let mut start = 0;
    for end in 1..=m {
        if end == m || xs[end] != xs[start] {
            ties_xy += tied_pairs_in_sorted(&ys[start..end]);
            start = end;
        }
    }
    let mut buf = vec![0.0; m];
    let swaps = merge_count(&mut ys, &mut buf);
    let ties_y = tied_pairs_in_sorted(&ys);
    let n0 = (m * (m - 1) / 2) as i64;
    let s = n0 - ties_x - ties_y + ties_xy - 2 * swaps;
    Counts { s, n0, ties_x, ties_y }.tau_b()
}

struct Fenwick(Vec<i64>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Self(vec![0; n + 1])
    }
    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    // number of inserted ranks < i
    fn below(&self, i: usize) -> i64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Tau-b together with the asymptotic standard error of the U-statistic,
/// `sqrt(4/m * Var(h_i / (m - 1)))`, where `h_i` is the concordance count of
/// observation `i` against all others.
pub fn kendall_tau_with_std_error(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let tau = empirical_kendall_tau(x, y)?;
    let m = x.len();
    let mut sorted_y: Vec<f64> = y.to_vec();
    sorted_y.sort_unstable_by(|a, b| a.total_cmp(b));
    sorted_y.dedup();
    let rank = |v: f64| sorted_y.partition_point(|&s| s < v);
    let ranks: Vec<usize> = y.iter().map(|&v| rank(v)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));

    let mut h = vec![0i64; m];
    for backward in [false, true] {
        let seq: Vec<usize> = if backward { order.iter().rev().cloned().collect() } else { order.clone() };
        let mut tree = Fenwick::new(sorted_y.len());
        let mut inserted = 0i64;
        let mut g = 0;
        while g < m {
            let mut e = g;
            while e < m && x[seq[e]] == x[seq[g]] {
                e += 1;
            }
            for &i in &seq[g..e] {
                let less = tree.below(ranks[i]);
                let greater = inserted - tree.below(ranks[i] + 1);
                h[i] += if backward { greater - less } else { less - greater };
            }
            for &i in &seq[g..e] {
                tree.add(ranks[i]);
                inserted += 1;
            }
            g = e;
        }
    }
    let scale = 1.0 / (m as f64 - 1.0);
    let mean = h.iter().map(|&v| v as f64 * scale).sum::<f64>() / m as f64;
    let var = h.iter().map(|&v| (v as f64 * scale - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0).max(1.0);
    Ok((tau, (4.0 * var / m as f64).sqrt()))
}
