//! Stationary distributions of finite row-stochastic matrices.
//!
//! Two routes are provided. [`gth`] is the Grassmann-Taksar-Heyman state
//! reduction: Gaussian elimination written so that it never subtracts, which
//! keeps it accurate on stiff chains whose time scales differ by many orders
//! of magnitude. It runs on a band around the diagonal of a caller-chosen
//! state ordering, so a good ordering keeps fill and work small.
//! [`power_iteration`] is the plain fixed-point iteration `x <- xP`.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix one row at a time. Columns within a row must be
    /// strictly increasing.
    pub fn builder(n: usize) -> CsrBuilder {
        CsrBuilder {
            m: CsrMatrix {
                n,
                row_ptr: vec![0],
                cols: Vec::new(),
                vals: Vec::new(),
            },
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut b = CsrMatrix::builder(n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix must be square");
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(c, v);
                }
            }
            b.end_row();
        }
        b.finish()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).map(|(_, v)| v).sum()
    }

    /// All `(row, col, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Row vector times matrix: `y = x P`.
    pub fn left_mul(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                y[c] += xr * v;
            }
        }
    }
}

pub struct CsrBuilder {
    m: CsrMatrix,
}

impl CsrBuilder {
    pub fn push(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.m.n);
        let start = *self.m.row_ptr.last().unwrap();
        debug_assert!(
            self.m.cols.len() == start || *self.m.cols.last().unwrap() < col,
            "columns must be strictly increasing within a row"
        );
        self.m.cols.push(col);
        self.m.vals.push(val);
    }

    pub fn end_row(&mut self) {
        self.m.row_ptr.push(self.m.cols.len());
    }

    pub fn finish(self) -> CsrMatrix {
        assert_eq!(self.m.row_ptr.len(), self.m.n + 1, "row count mismatch");
        self.m
    }
}

/// `||xP - x||_1`.
pub fn residual_l1(p: &CsrMatrix, x: &[f64]) -> f64 {
    let mut y = vec![0.0; p.dim()];
    p.left_mul(x, &mut y);
    y.iter().zip(x).map(|(a, b)| (a - b).abs()).sum()
}

/// Doubles needed for banded GTH storage under `order`.
pub fn gth_storage(p: &CsrMatrix, order: Option<&[usize]>) -> usize {
    let (lower, upper) = bandwidths(p, &position_map(p.dim(), order));
    p.dim() * (lower + upper + 1)
}

fn position_map(n: usize, order: Option<&[usize]>) -> Vec<usize> {
    match order {
        None => (0..n).collect(),
        Some(order) => {
            assert_eq!(order.len(), n, "ordering must cover every state");
            let mut pos = vec![usize::MAX; n];
            for (p, &s) in order.iter().enumerate() {
                assert!(pos[s] == usize::MAX, "ordering repeats state {s}");
                pos[s] = p;
            }
            pos
        }
    }
}

fn bandwidths(p: &CsrMatrix, pos: &[usize]) -> (usize, usize) {
    let (mut lower, mut upper) = (0, 0);
    for (r, c, v) in p.triplets() {
        if v == 0.0 {
            continue;
        }
        let (pr, pc) = (pos[r], pos[c]);
        if pr > pc {
            lower = lower.max(pr - pc);
        } else {
            upper = upper.max(pc - pr);
        }
    }
    (lower, upper)
}

/// Strongly connected components (iterative Tarjan). Returns the component
/// id of every state; ids are in reverse topological order.
fn components(p: &CsrMatrix) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let n = p.dim();
    let mut index = vec![NONE; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let (mut next, mut count) = (0, 0);
    for root in 0..n {
        if index[root] != NONE {
            continue;
        }
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, p.row_ptr[root]));
        while let Some(&(v, e)) = call.last() {
            if e < p.row_ptr[v + 1] {
                call.last_mut().unwrap().1 += 1;
                let w = p.cols[e];
                if p.vals[e] == 0.0 {
                    continue;
                }
                if index[w] == NONE {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, p.row_ptr[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = count;
                        if w == v {
                            break;
                        }
                    }
                    count += 1;
                }
            }
        }
    }
    comp
}

/// The states of the unique closed communicating class, ascending. Every
/// other state is transient. Fails with [`Error::ReducibleChain`] naming a
/// state of a second closed class when the stationary law is not unique.
pub fn closed_class(p: &CsrMatrix) -> Result<Vec<usize>> {
    let comp = components(p);
    let count = comp.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut closed = vec![true; count];
    for (r, c, v) in p.triplets() {
        if v != 0.0 && comp[r] != comp[c] {
            closed[comp[r]] = false;
        }
    }
    let mut class: Option<usize> = None;
    for (s, &c) in comp.iter().enumerate() {
        if closed[c] {
            match class {
                None => class = Some(c),
                Some(first) if first != c => return Err(Error::ReducibleChain { state: s }),
                _ => {}
            }
        }
    }
    Ok(match class {
        Some(c) => (0..p.dim()).filter(|&s| comp[s] == c).collect(),
        None => Vec::new(),
    })
}

/// Stationary vector by GTH state reduction.
///
/// `order[p]` is the state placed at elimination position `p`; states are
/// eliminated from the last position backwards. `None` keeps the natural
/// order. The result is indexed by the original state numbering. Transient
/// states get probability zero and the reduction runs on the closed class.
pub fn gth(p: &CsrMatrix, order: Option<&[usize]>) -> Result<Vec<f64>> {
    let n = p.dim();
    let class = closed_class(p)?;
    if class.len() == n {
        return gth_irreducible(p, order);
    }
    let mut local = vec![usize::MAX; n];
    for (a, &s) in class.iter().enumerate() {
        local[s] = a;
    }
    let mut b = CsrMatrix::builder(class.len());
    for &s in &class {
        for (c, v) in p.row(s) {
            if local[c] != usize::MAX {
                b.push(local[c], v);
            }
        }
        b.end_row();
    }
    let sub_order: Option<Vec<usize>> =
        order.map(|o| o.iter().filter(|&&s| local[s] != usize::MAX).map(|&s| local[s]).collect());
    let sub = gth_irreducible(&b.finish(), sub_order.as_deref()).map_err(|e| match e {
        Error::ReducibleChain { state } => Error::ReducibleChain { state: class[state] },
        other => other,
    })?;
    let mut pi = vec![0.0; n];
    for (a, &s) in class.iter().enumerate() {
        pi[s] = sub[a];
    }
    Ok(pi)
}

fn gth_irreducible(p: &CsrMatrix, order: Option<&[usize]>) -> Result<Vec<f64>> {
    let n = p.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let pos = position_map(n, order);
    let (lower, upper) = bandwidths(p, &pos);
    let width = lower + upper + 1;
    // Row r holds columns r - lower ..= r + upper.
    let mut band = vec![0.0f64; n * width];
    let at = |r: usize, c: usize| r * width + (c + lower - r);
    for (r, c, v) in p.triplets() {
        band[at(pos[r], pos[c])] = v;
    }

    for m in (1..n).rev() {
        let lo = m.saturating_sub(lower);
        let pivot_row = at(m, lo)..at(m, m);
        let s: f64 = band[pivot_row.clone()].iter().sum();
        if !(s > 0.0) {
            let state = order.map_or(m, |o| o[m]);
            return Err(Error::ReducibleChain { state });
        }
        let (head, tail) = band.split_at_mut(m * width);
        let pivot = &tail[pivot_row.start - m * width..pivot_row.end - m * width];
        for i in m.saturating_sub(upper)..m {
            let im = i * width + (m + lower - i);
            head[im] /= s;
            let f = head[im];
            if f == 0.0 {
                continue;
            }
            let start = i * width + (lo + lower - i);
            let row = &mut head[start..start + pivot.len()];
            for (a, &b) in row.iter_mut().zip(pivot) {
                *a += f * b;
            }
        }
    }

    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for m in 1..n {
        let mut acc = 0.0;
        for i in m.saturating_sub(upper)..m {
            acc += x[i] * band[at(i, m)];
        }
        x[m] = acc;
    }
    let total: f64 = x.iter().sum();
    let mut pi = vec![0.0; n];
    for (state, &p) in pos.iter().enumerate() {
        pi[state] = x[p] / total;
    }
    Ok(pi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    pub pi: Vec<f64>,
    pub iterations: usize,
}

/// Iterates `x <- xP` from the uniform vector until successive iterates
/// differ by less than `tol` in 1-norm.
pub fn power_iteration(p: &CsrMatrix, tol: f64, max_iterations: usize) -> Result<PowerOutcome> {
    let n = p.dim();
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut step = f64::INFINITY;
    for it in 1..=max_iterations {
        p.left_mul(&x, &mut y);
        let total: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= total);
        step = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut y);
        if step < tol {
            return Ok(PowerOutcome { pi: x, iterations: it });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        last_step: step,
    })
}
