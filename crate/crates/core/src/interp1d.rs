//! One-dimensional piecewise-cubic extension of reticulated data.
//!
//! For each knot interval `I_k = (ξ_k, ξ_{k+1})` a cubic is chosen from the
//! neighborhood `S_k = {ξ_{k-2}, …, ξ_{k+3}}` (clipped to the data) and
//! evaluated in Newton form. Two selection rules are provided:
//!
//! * **ENO** keeps `ξ_k, ξ_{k+1}` and picks the extra pair among the three
//!   consecutive candidates whose cubic is closest in L² to the linear
//!   interpolant on `I_k`. Ties go to the centered stencil. The result
//!   interpolates every knot and is continuous.
//! * **OF** searches all 4-subsets of `S_k` for the cubic with the smallest
//!   L² norm of its second derivative on `I_k`. The winning subset may skip
//!   the interval's own endpoints, which is how isolated outliers get
//!   filtered; the extension can jump at knots.
//!
//! Interval indices and knot indices are 0-based throughout.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Eno,
    Of,
}

/// Strictly increasing abscissae with one value each.
#[derive(Debug, Clone, PartialEq)]
pub struct Knots1D {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl Knots1D {
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyKnots);
        }
        if xs.len() != fs.len() {
            return Err(Error::InvalidKnots(format!(
                "{} abscissae but {} values",
                xs.len(),
                fs.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidKnots("at least 2 knots are required".into()));
        }
        if let Some(v) = xs.iter().chain(&fs).find(|v| !v.is_finite()) {
            return Err(Error::InvalidKnots(format!("non-finite entry {v}")));
        }
        if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
            return Err(if w[1] == w[0] {
                Error::DuplicateKnot(w[0])
            } else {
                Error::InvalidKnots(format!("abscissae not increasing at {} -> {}", w[0], w[1]))
            });
        }
        Ok(Self { xs, fs })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn fs(&self) -> &[f64] {
        &self.fs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Divided difference `[ξ_1; …; ξ_n] f` of order `points.len() - 1`.
///
/// Symmetric in the order of `points`.
pub fn divided_difference(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyKnots);
    }
    for (a, pa) in points.iter().enumerate() {
        if points[a + 1..].iter().any(|pb| pb.0 == pa.0) {
            return Err(Error::DuplicateKnot(pa.0));
        }
    }
    let mut table: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = points.len();
    for order in 1..n {
        for a in 0..n - order {
            table[a] = (table[a + 1] - table[a]) / (points[a + order].0 - points[a].0);
        }
    }
    Ok(table[0])
}

/// Interpolating polynomial of degree `len - 1 ≤ 3` through selected knots,
/// kept in Newton form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil1D {
    /// The interval `I_k` this stencil was selected for.
    pub interval: usize,
    pub method: Method,
    idx: [usize; 4],
    len: usize,
    nodes: [f64; 4],
    coef: [f64; 4],
}

impl Stencil1D {
    /// Builds the Newton form with nodes taken in the order of `idx`.
    fn build(xs: &[f64], fs: &[f64], interval: usize, idx: &[usize], method: Method) -> Self {
        debug_assert!((1..=4).contains(&idx.len()));
        let len = idx.len();
        let mut nodes = [0.0; 4];
        let mut coef = [0.0; 4];
        let mut ids = [0usize; 4];
        for (a, &i) in idx.iter().enumerate() {
            ids[a] = i;
            nodes[a] = xs[i];
            coef[a] = fs[i];
        }
        // in-place divided difference table; coef[a] ends as [ξ_0; …; ξ_a] f
        for order in 1..len {
            for a in (order..len).rev() {
                coef[a] = (coef[a] - coef[a - 1]) / (nodes[a] - nodes[a - order]);
            }
        }
        Self { interval, method, idx: ids, len, nodes, coef }
    }

    /// Knot indices in Newton-node order.
    pub fn indices(&self) -> &[usize] {
        &self.idx[..self.len]
    }

    /// Sorted knot indices.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.indices().to_vec();
        v.sort_unstable();
        v
    }

    /// Newton coefficients `[ξ_0]f, [ξ_0;ξ_1]f, …`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coef[..self.len]
    }

    pub fn degree(&self) -> usize {
        self.len - 1
    }

    /// ENO offset `b ∈ {-1, 0, 1}` of the extra knot pair, if this is a full
    /// ENO stencil.
    pub fn eno_offset(&self) -> Option<i8> {
        if self.method != Method::Eno || self.len != 4 {
            return None;
        }
        let k = self.interval;
        match (self.idx[2], self.idx[3]) {
            (p, q) if p + 2 == k && q + 1 == k => Some(-1),
            (p, q) if p + 1 == k && q == k + 2 => Some(0),
            (p, q) if p == k + 2 && q == k + 3 => Some(1),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.coef[self.len - 1];
        for a in (0..self.len - 1).rev() {
            acc = self.coef[a] + (x - self.nodes[a]) * acc;
        }
        acc
    }

    /// Second derivative, which is affine in `x` for a cubic.
    pub fn second_derivative(&self, x: f64) -> f64 {
        match self.len {
            4 => {
                let s = (x - self.nodes[0]) + (x - self.nodes[1]) + (x - self.nodes[2]);
                2.0 * self.coef[2] + 2.0 * self.coef[3] * s
            }
            3 => 2.0 * self.coef[2],
            _ => 0.0,
        }
    }
}

/// Evaluates the stencil's Newton polynomial at `x`.
pub fn newton_cubic_eval(stencil: &Stencil1D, x: f64) -> f64 {
    stencil.eval(x)
}

/// Extra knot pair `(p, q)` of ENO candidate `b`, when both knots exist.
fn eno_pair(n: usize, k: usize, b: i8) -> Option<(usize, usize)> {
    let (p, q) = match b {
        -1 => (k.checked_sub(2)?, k - 1),
        0 => (k.checked_sub(1)?, k + 2),
        _ => (k + 2, k + 3),
    };
    (q < n && p < n).then_some((p, q))
}

/// ENO candidate offsets available on interval `k` of an `n`-knot set.
pub fn eno_candidates(n: usize, k: usize) -> Vec<i8> {
    [-1, 0, 1].into_iter().filter(|&b| eno_pair(n, k, b).is_some()).collect()
}

fn third_dd(xs: &[f64], fs: &[f64], i: [usize; 4]) -> (f64, f64) {
    let d1 = |a: usize, b: usize| (fs[b] - fs[a]) / (xs[b] - xs[a]);
    let d2 = |a: usize, b: usize, c: usize| (d1(b, c) - d1(a, b)) / (xs[c] - xs[a]);
    let second = d2(i[0], i[1], i[2]);
    let third = (d2(i[1], i[2], i[3]) - second) / (xs[i[3]] - xs[i[0]]);
    (second, third)
}

fn eno_score_raw(xs: &[f64], fs: &[f64], k: usize, p: usize, q: usize) -> f64 {
    let h = xs[k + 1] - xs[k];
    let (dd_kkp, dd3) = third_dd(xs, fs, [k, k + 1, p, q]);
    let delta = h * dd3;
    let lambda = (xs[k] - xs[p]) / h * delta + dd_kkp;
    let mu = lambda + delta;
    lambda * lambda + mu * mu + 1.5 * lambda * mu
}

/// Oscillation score of the ENO cubic through `k, k+1, p, q` on `I_k`.
///
/// Proportional to the squared L² distance between that cubic and the linear
/// interpolant on `I_k`, with a positive factor that depends only on `k`.
///
/// Panics if any index is out of range.
pub fn eno_score(knots: &Knots1D, k: usize, p: usize, q: usize) -> f64 {
    eno_score_raw(&knots.xs, &knots.fs, k, p, q)
}

fn eno_select_raw(xs: &[f64], fs: &[f64], k: usize) -> Stencil1D {
    let n = xs.len();
    let mut scores: [Option<f64>; 3] = [None; 3];
    for (slot, b) in [-1i8, 0, 1].into_iter().enumerate() {
        if let Some((p, q)) = eno_pair(n, k, b) {
            scores[slot] = Some(eno_score_raw(xs, fs, k, p, q));
        }
    }
    let best = scores.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let minimizers: Vec<usize> =
        (0..3).filter(|&s| scores[s].is_some_and(|v| v == best || near_tie(v, best))).collect();
    let slot = match minimizers.as_slice() {
        [only] => *only,
        _ if scores[1].is_some() => 1,
        [first, ..] => *first,
        // all scores NaN: fall back to any available candidate
        [] => (0..3).find(|&s| scores[s].is_some()).expect("at least one ENO candidate"),
    };
    let b = slot as i8 - 1;
    let (p, q) = eno_pair(n, k, b).expect("selected candidate exists");
    Stencil1D::build(xs, fs, k, &[k, k + 1, p, q], Method::Eno)
}

/// Scores this close are treated as equal so rounding noise cannot override
/// the tie-break rule.
const TIE_RTOL: f64 = 1e-10;

fn near_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs()) + f64::MIN_POSITIVE
}

fn check_interval(n: usize, k: usize) -> Result<()> {
    if k + 1 >= n {
        return Err(Error::InvalidKnots(format!("interval {k} out of range for {n} knots")));
    }
    if n < 4 {
        return Err(Error::InsufficientKnots { interval: k, available: n });
    }
    Ok(())
}

/// ENO stencil for interval `k`.
pub fn eno_select(knots: &Knots1D, k: usize) -> Result<Stencil1D> {
    check_interval(knots.len(), k)?;
    Ok(eno_select_raw(&knots.xs, &knots.fs, k))
}

fn of_objective_raw(xs: &[f64], fs: &[f64], idx: &[usize], k: usize) -> f64 {
    let st = Stencil1D::build(xs, fs, k, idx, Method::Of);
    second_derivative_norm(&st, xs[k], xs[k + 1])
}

/// Exact L² norm over `(a, b)` of the affine second derivative.
fn second_derivative_norm(st: &Stencil1D, a: f64, b: f64) -> f64 {
    let u0 = st.second_derivative(a);
    let u1 = st.second_derivative(b);
    ((b - a) * (u0 * u0 + u0 * u1 + u1 * u1) / 3.0).sqrt()
}

/// L² norm on `I_k` of the second derivative of the cubic through `idx`.
///
/// Panics if any index is out of range.
pub fn of_objective(knots: &Knots1D, idx: [usize; 4], k: usize) -> f64 {
    of_objective_raw(&knots.xs, &knots.fs, &idx, k)
}

fn of_select_raw(xs: &[f64], fs: &[f64], k: usize) -> Stencil1D {
    let n = xs.len();
    let lo = k.saturating_sub(2);
    let hi = (k + 3).min(n - 1);
    let mut best: Option<(f64, Stencil1D)> = None;
    for a in lo..=hi {
        for b in a + 1..=hi {
            for c in b + 1..=hi {
                for d in c + 1..=hi {
                    let st = Stencil1D::build(xs, fs, k, &[a, b, c, d], Method::Of);
                    let score = second_derivative_norm(&st, xs[k], xs[k + 1]);
                    // only a clear improvement replaces the lexicographically earlier subset
                    if best.as_ref().map_or(true, |(s, _)| score < *s && !near_tie(score, *s)) {
                        best = Some((score, st));
                    }
                }
            }
        }
    }
    best.expect("neighborhood has at least 4 knots").1
}

/// OF stencil for interval `k`.
pub fn of_select(knots: &Knots1D, k: usize) -> Result<Stencil1D> {
    check_interval(knots.len(), k)?;
    Ok(of_select_raw(&knots.xs, &knots.fs, k))
}

fn select_raw(xs: &[f64], fs: &[f64], k: usize, method: Method) -> Stencil1D {
    match method {
        Method::Eno => eno_select_raw(xs, fs, k),
        Method::Of => of_select_raw(xs, fs, k),
    }
}

/// Extension value at `x` from unchecked slices (`xs` strictly increasing,
/// at least one knot).
pub(crate) fn extend_raw(xs: &[f64], fs: &[f64], x: f64, method: Method) -> f64 {
    let n = xs.len();
    debug_assert!(n >= 1 && n == fs.len());
    let at_knot = xs.binary_search_by(|v| v.total_cmp(&x));

    if n < 4 {
        // short rows: quadratic or linear through every knot
        if let Ok(j) = at_knot {
            return fs[j];
        }
        let idx: Vec<usize> = (0..n).collect();
        return Stencil1D::build(xs, fs, 0, &idx, method).eval(x);
    }
    if x < xs[0] {
        return Stencil1D::build(xs, fs, 0, &[0, 1, 2, 3], method).eval(x);
    }
    if x > xs[n - 1] {
        return Stencil1D::build(xs, fs, n - 2, &[n - 2, n - 1, n - 4, n - 3], method).eval(x);
    }
    match at_knot {
        Ok(j) => match method {
            Method::Eno => fs[j],
            Method::Of => {
                let left = (j > 0).then(|| of_select_raw(xs, fs, j - 1).eval(x));
                let right = (j + 1 < n).then(|| of_select_raw(xs, fs, j).eval(x));
                match (left, right) {
                    (Some(l), Some(r)) => 0.5 * (l + r),
                    (Some(v), None) | (None, Some(v)) => v,
                    (None, None) => fs[j],
                }
            }
        },
        Err(pos) => select_raw(xs, fs, pos - 1, method).eval(x),
    }
}

/// Evaluates the 1D extension of `knots` at `x`.
///
/// Points left of the first knot use the cubic through the first four
/// knots, points right of the last knot the cubic through the last four. At
/// a knot, ENO returns the knot value and OF the mean of the two one-sided
/// limits (one-sided at the ends). With fewer than four knots, the
/// interpolating quadratic or line is used.
pub fn extend_1d(knots: &Knots1D, x: f64, method: Method) -> f64 {
    extend_raw(&knots.xs, &knots.fs, x, method)
}

/// The stencil used on interval `k`, degrading below four knots.
pub fn select(knots: &Knots1D, k: usize, method: Method) -> Result<Stencil1D> {
    let n = knots.len();
    if k + 1 >= n {
        return Err(Error::InvalidKnots(format!("interval {k} out of range for {n} knots")));
    }
    if n < 4 {
        let idx: Vec<usize> = (0..n).collect();
        return Ok(Stencil1D::build(&knots.xs, &knots.fs, k, &idx, method));
    }
    Ok(select_raw(&knots.xs, &knots.fs, k, method))
}
