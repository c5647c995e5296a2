//! Overlaps between displaced Fock ladders.

use std::sync::OnceLock;

use faer::Mat;

const LN_FACTORIAL_LEN: usize = 1024;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for i in 1..LN_FACTORIAL_LEN {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`, tabulated for small `n` and extended by summation beyond.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorial_table();
    if n < table.len() {
        return table[n];
    }
    let mut acc = table[table.len() - 1];
    for i in table.len()..=n {
        acc += (i as f64).ln();
    }
    acc
}

/// Generalized Laguerre polynomial `L_n^{(alpha)}(x)` returned as
/// `(value / e^scale, scale)`; the forward three-term recurrence is rescaled
/// whenever the iterate grows large, so the pair never overflows.
fn laguerre_scaled(n: usize, alpha: f64, x: f64) -> (f64, f64) {
    const BIG: f64 = 1e150;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0f64;
    let mut cur = 1.0 + alpha - x;
    let mut scale = 0.0f64;
    for i in 1..n {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0 + alpha - x) * cur - (fi + alpha) * prev) / (fi + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            scale += BIG.ln();
        }
    }
    (cur, scale)
}

/// `⟨l| exp(G (a − a†)) |k⟩`: the overlap between Fock state `l` and Fock
/// state `k` displaced by `−G`.
///
/// For `l ≥ k` this is `√(k!/l!) (−G)^{l−k} e^{−G²/2} L_k^{(l−k)}(G²)` and the
/// `l < k` branch follows from `D(−G)† = D(G)`. Everything is assembled in the
/// log domain, which keeps the result finite well past `l, k = 200`.
pub fn displaced_overlap(l: usize, k: usize, g: f64) -> f64 {
    if g == 0.0 {
        return if l == k { 1.0 } else { 0.0 };
    }
    let (hi, lo) = if l >= k { (l, k) } else { (k, l) };
    let diff = hi - lo;
    let x = g * g;
    let (lag, lag_scale) = laguerre_scaled(lo, diff as f64, x);
    if lag == 0.0 {
        return 0.0;
    }
    let ln_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + diff as f64 * g.abs().ln()
        - 0.5 * x
        + lag_scale
        + lag.abs().ln();
    let mut sign = lag.signum();
    // (−G)^diff for l ≥ k, G^diff for l < k.
    let base_negative = if l >= k { g > 0.0 } else { g < 0.0 };
    if base_negative && diff % 2 == 1 {
        sign = -sign;
    }
    sign * ln_mag.exp()
}

/// Dense table `T[(r, c)] = displaced_overlap(r, c, g)`.
pub fn overlap_table(rows: usize, cols: usize, g: f64) -> Mat<f64> {
    Mat::from_fn(rows, cols, |r, c| displaced_overlap(r, c, g))
}
