//! Dense row-major helpers used by the forward and backward passes.

/// `out += m · x` where `m` is `rows × cols`.
#[inline]
pub(crate) fn matvec_add(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        let row = &m[r * cols..(r + 1) * cols];
        *o += dot(row, x);
    }
}

/// `out += mᵀ · y` where `m` is `rows × cols`.
#[inline]
pub(crate) fn matvec_t_add(m: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    for (r, &yr) in y.iter().enumerate().take(rows) {
        if yr == 0.0 {
            continue;
        }
        let row = &m[r * cols..(r + 1) * cols];
        for (o, &v) in out.iter_mut().zip(row) {
            *o += yr * v;
        }
    }
}

/// `g += y · xᵀ` where `g` is `rows × cols`.
#[inline]
pub(crate) fn outer_add(g: &mut [f64], rows: usize, cols: usize, y: &[f64], x: &[f64]) {
    debug_assert_eq!(g.len(), rows * cols);
    for (r, &yr) in y.iter().enumerate().take(rows) {
        if yr == 0.0 {
            continue;
        }
        let row = &mut g[r * cols..(r + 1) * cols];
        for (gv, &xv) in row.iter_mut().zip(x) {
            *gv += yr * xv;
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}
