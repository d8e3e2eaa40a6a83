//! Adaptive quadrature of matrix-valued integrands over the whole real
//! frequency line.
//!
//! The line is split into a finite core window plus two semi-infinite tails.
//! Each tail is compactified by omega = edge +/- c tan(u) with u in
//! [0, pi/2), which turns 1/omega^2 decay into a bounded integrand. Panels
//! are refined adaptively with a 7/15 Gauss-Kronrod pair; supplied
//! breakpoints (resonances, chemical potentials, band edges) always start
//! as panel boundaries so that kinks and T = 0 Fermi steps never sit inside
//! a panel. The final reduction runs in a fixed panel order, so results are
//! reproducible bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Tolerances and window controls shared by all frequency integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Explicit core window; derived from the breakpoints when absent.
    pub window: Option<(f64, f64)>,
    /// Frequencies forced to be panel boundaries.
    pub breakpoints: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            window: None,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidSpec(format!(
                "tolerances must be > 0 (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions < 10 {
            return Err(QuadratureError::InvalidSpec(format!(
                "max_subdivisions must be >= 10, got {}",
                self.max_subdivisions
            )));
        }
        if let Some((lo, hi)) = self.window {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(QuadratureError::InvalidSpec(format!(
                    "invalid window ({lo}, {hi})"
                )));
            }
        }
        if self.breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(QuadratureError::InvalidSpec("non-finite breakpoint".into()));
        }
        Ok(())
    }

    /// Copy of this spec with extra breakpoints appended.
    pub fn with_breakpoints(&self, extra: impl IntoIterator<Item = f64>) -> Self {
        let mut spec = self.clone();
        spec.breakpoints.extend(extra);
        spec
    }
}

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),

    #[error(
        "quadrature did not converge within {panels} panels: error {error:.3e} > target {target:.3e}, worst entry ({row}, {col})"
    )]
    ToleranceNotReached {
        /// Best estimate reached before giving up.
        best: Box<DMatrix<Complex64>>,
        error: f64,
        target: f64,
        panels: usize,
        row: usize,
        col: usize,
    },

    #[error("integrand returned a non-finite value at omega = {omega:.6e}")]
    NonFinite { omega: f64 },
}

/// Converged integral of a matrix-valued function.
#[derive(Debug, Clone)]
pub struct MatrixIntegral {
    pub value: DMatrix<Complex64>,
    pub error: f64,
    pub panels: usize,
}

/// Converged integral of a scalar function.
#[derive(Debug, Clone, Copy)]
pub struct ScalarIntegral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Integrate an m x m (or rectangular) complex-matrix-valued function over
/// the real line. The integrand must decay at least as 1/omega^2 entrywise.
pub fn integrate_matrix<F>(
    f: F,
    spec: &QuadratureSpec,
) -> Result<MatrixIntegral, QuadratureError>
where
    F: Fn(f64) -> DMatrix<Complex64>,
{
    let r = adaptive(&f, spec)?;
    Ok(MatrixIntegral { value: r.value, error: r.error, panels: r.panels })
}

/// Integrate a real scalar function over the real line.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<ScalarIntegral, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let r = adaptive(&f, spec)?;
    Ok(ScalarIntegral { value: r.value, error: r.error, panels: r.panels })
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Value types the adaptive engine can accumulate.
pub(crate) trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn scaled(&self, s: f64) -> Self;
    fn add_scaled(&mut self, other: &Self, s: f64);
    fn max_abs(&self) -> f64;
    /// Maximum |self - other| and where it occurs.
    fn argmax_abs_diff(&self, other: &Self) -> (usize, usize, f64);
    fn is_finite(&self) -> bool;
    fn into_error_matrix(self) -> DMatrix<Complex64>;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += other * s;
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
    fn argmax_abs_diff(&self, other: &Self) -> (usize, usize, f64) {
        (0, 0, (self - other).abs())
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn into_error_matrix(self) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, Complex64::new(self, 0.0))
    }
}

impl QuadValue for DMatrix<Complex64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for z in out.iter_mut() {
            *z *= s;
        }
        out
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        for (z, o) in self.iter_mut().zip(other.iter()) {
            *z += o * s;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
    fn argmax_abs_diff(&self, other: &Self) -> (usize, usize, f64) {
        let mut best = (0, 0, 0.0);
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                let d = (self[(i, j)] - other[(i, j)]).norm();
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        best
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
    fn into_error_matrix(self) -> DMatrix<Complex64> {
        self
    }
}

// 7-point Gauss, 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Region {
    LeftTail,
    Core,
    RightTail,
}

struct LineMap {
    w_min: f64,
    w_max: f64,
    tail_scale: f64,
}

impl LineMap {
    /// Map a region-local coordinate to (omega, jacobian).
    fn point(&self, region: Region, u: f64) -> (f64, f64) {
        match region {
            Region::Core => (u, 1.0),
            Region::RightTail => {
                let t = u.tan();
                (self.w_max + self.tail_scale * t, self.tail_scale * (1.0 + t * t))
            }
            Region::LeftTail => {
                let t = u.tan();
                (self.w_min - self.tail_scale * t, self.tail_scale * (1.0 + t * t))
            }
        }
    }
}

struct Panel<V> {
    region: Region,
    a: f64,
    b: f64,
    value: V,
    gauss: V,
    err: f64,
    alive: bool,
}

struct HeapEntry {
    err: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on error; older panels win ties for determinism.
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

struct Accumulated<V> {
    value: V,
    error: f64,
    panels: usize,
}

fn adaptive<V, F>(f: &F, spec: &QuadratureSpec) -> Result<Accumulated<V>, QuadratureError>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    spec.validate()?;

    let mut bps: Vec<f64> = spec.breakpoints.clone();
    bps.retain(|b| b.is_finite());
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())));

    let (w_min, w_max) = match spec.window {
        Some(w) => w,
        None => {
            if bps.is_empty() {
                (-8.0, 8.0)
            } else {
                let lo = bps[0];
                let hi = bps[bps.len() - 1];
                let pad = (0.25 * (hi - lo)).max(2.0);
                (lo - pad, hi + pad)
            }
        }
    };
    let tail_scale = bps
        .iter()
        .fold(1.0f64, |m, b| m.max(b.abs()))
        .max(0.5 * (w_max - w_min).abs())
        .max(1.0);
    let map = LineMap { w_min, w_max, tail_scale };

    // Initial boundaries: core split at interior breakpoints, tails split at
    // the images of breakpoints beyond the window edges.
    let mut seeds: Vec<(Region, f64, f64)> = Vec::new();
    if w_max > w_min {
        let mut edges = vec![w_min];
        for &b in &bps {
            if b > w_min && b < w_max && b - edges.last().unwrap() > 1e-12 * tail_scale {
                edges.push(b);
            }
        }
        edges.push(w_max);
        for w in edges.windows(2) {
            if w[1] > w[0] {
                seeds.push((Region::Core, w[0], w[1]));
            }
        }
    }
    for (region, edge, sign) in [(Region::LeftTail, w_min, -1.0), (Region::RightTail, w_max, 1.0)]
    {
        let mut us = vec![0.0];
        let mut images: Vec<f64> = bps
            .iter()
            .map(|b| sign * (b - edge) / tail_scale)
            .filter(|x| *x > 0.0)
            .map(f64::atan)
            .collect();
        images.sort_by(f64::total_cmp);
        for u in images {
            if u - us.last().unwrap() > 1e-9 {
                us.push(u);
            }
        }
        us.push(FRAC_PI_2);
        for w in us.windows(2) {
            seeds.push((region, w[0], w[1]));
        }
    }

    let mut panels: Vec<Panel<V>> = Vec::with_capacity(seeds.len() + spec.max_subdivisions);
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    for (region, a, b) in seeds {
        let p = eval_panel(f, &map, region, a, b)?;
        heap.push(HeapEntry { err: p.err, idx: panels.len() });
        panels.push(p);
    }

    let mut total_err: f64 = panels.iter().map(|p| p.err).sum();
    let mut total_value = panels[0].value.zero_like();
    for p in &panels {
        total_value.add_scaled(&p.value, 1.0);
    }

    let mut splits = 0usize;
    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total_value.max_abs());
        if total_err <= target {
            break;
        }
        if splits >= spec.max_subdivisions {
            return Err(failure(&panels, total_err, target));
        }
        // Pop the worst live panel.
        let idx = loop {
            match heap.pop() {
                Some(e) if panels[e.idx].alive && panels[e.idx].err == e.err => break Some(e.idx),
                Some(_) => continue,
                None => break None,
            }
        };
        let Some(idx) = idx else {
            return Err(failure(&panels, total_err, target));
        };
        let (region, a, b) = (panels[idx].region, panels[idx].a, panels[idx].b);
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            // Cannot split further; leave the panel in the totals and retry
            // the next-worst one. Mark dead so the heap drains.
            panels[idx].alive = false;
            let p = &panels[idx];
            let keep = Panel {
                region: p.region,
                a: p.a,
                b: p.b,
                value: p.value.clone(),
                gauss: p.gauss.clone(),
                err: p.err,
                alive: true,
            };
            // Re-insert as a frozen panel that can never be popped again.
            panels.push(keep);
            panels.last_mut().unwrap().alive = true;
            continue;
        }
        let left = eval_panel(f, &map, region, a, mid)?;
        let right = eval_panel(f, &map, region, mid, b)?;
        splits += 1;

        total_err += left.err + right.err - panels[idx].err;
        total_value.add_scaled(&panels[idx].value, -1.0);
        total_value.add_scaled(&left.value, 1.0);
        total_value.add_scaled(&right.value, 1.0);

        panels[idx].alive = false;
        heap.push(HeapEntry { err: left.err, idx: panels.len() });
        panels.push(left);
        heap.push(HeapEntry { err: right.err, idx: panels.len() });
        panels.push(right);
    }

    Ok(reduce(&panels))
}

/// Deterministic final reduction: panels sorted by (region, left edge).
fn reduce<V: QuadValue>(panels: &[Panel<V>]) -> Accumulated<V> {
    let mut order: Vec<usize> = (0..panels.len()).filter(|i| panels[*i].alive).collect();
    order.sort_by(|&i, &j| {
        (panels[i].region, panels[i].a)
            .partial_cmp(&(panels[j].region, panels[j].a))
            .unwrap_or(Ordering::Equal)
    });
    let mut value = panels[order[0]].value.zero_like();
    let mut error = 0.0;
    for &i in &order {
        value.add_scaled(&panels[i].value, 1.0);
        error += panels[i].err;
    }
    Accumulated { value, error, panels: order.len() }
}

fn failure<V: QuadValue>(panels: &[Panel<V>], total_err: f64, target: f64) -> QuadratureError {
    let acc = reduce(panels);
    let worst = panels
        .iter()
        .filter(|p| p.alive)
        .max_by(|a, b| a.err.total_cmp(&b.err));
    let (row, col) = match worst {
        Some(p) => {
            let (r, c, _) = p.value.argmax_abs_diff(&p.gauss);
            (r, c)
        }
        None => (0, 0),
    };
    QuadratureError::ToleranceNotReached {
        best: Box::new(acc.value.into_error_matrix()),
        error: total_err,
        target,
        panels: acc.panels,
        row,
        col,
    }
}

fn eval_panel<V, F>(
    f: &F,
    map: &LineMap,
    region: Region,
    a: f64,
    b: f64,
) -> Result<Panel<V>, QuadratureError>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |u: f64| -> Result<(V, f64), QuadratureError> {
        let (omega, jac) = map.point(region, u);
        let v = f(omega);
        if !v.is_finite() {
            return Err(QuadratureError::NonFinite { omega });
        }
        Ok((v, jac))
    };

    let (fc, jc) = eval(center)?;
    let mut kron = fc.scaled(WGK[7] * jc);
    let mut gauss = fc.scaled(WG[3] * jc);
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let (f1, j1) = eval(center - half * x)?;
        let (f2, j2) = eval(center + half * x)?;
        kron.add_scaled(&f1, WGK[j] * j1);
        kron.add_scaled(&f2, WGK[j] * j2);
        if j % 2 == 1 {
            let w = WG[j / 2];
            gauss.add_scaled(&f1, w * j1);
            gauss.add_scaled(&f2, w * j2);
        }
    }
    let value = kron.scaled(half);
    let gauss = gauss.scaled(half);
    let (_, _, err) = value.argmax_abs_diff(&gauss);
    Ok(Panel { region, a, b, value, gauss, err, alive: true })
}
