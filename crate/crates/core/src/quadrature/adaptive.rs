//! Globally adaptive panel subdivision on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::kronrod::{panel_nodes, qk15};
use super::QuadratureError;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub err: f64,
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .err
            .total_cmp(&other.0.err)
            // deterministic tie-break: leftmost panel first
            .then_with(|| other.0.a.total_cmp(&self.0.a))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Adapted {
    /// Final panels, sorted by left endpoint.
    pub panels: Vec<Panel>,
    pub value: f64,
    pub err: f64,
    pub evaluations: usize,
}

impl Adapted {
    /// Kronrod nodes of all final panels, usable as a frozen rule.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.panels.len() * 15);
        for p in &self.panels {
            panel_nodes(p.a, p.b, &mut out);
        }
        out
    }
}

/// Integrates `f` over `[a, b]`. `cuts` are mandatory panel boundaries and
/// `initial` is the number of equal panels each cut segment starts with.
pub(crate) fn adapt<F>(f: &F, a: f64, b: f64, cuts: &[f64], initial: usize, tol: Tolerance) -> Result<Adapted, QuadratureError>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let mut edges = vec![a];
    let mut interior: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    edges.extend(interior);
    edges.push(b);

    let eval = |lo: f64, hi: f64| -> Result<Panel, QuadratureError> {
        let r = qk15(f, lo, hi).map_err(|bad| QuadratureError::NonFinite { at: bad.at, value: bad.value })?;
        Ok(Panel { a: lo, b: hi, value: r.value, err: r.err })
    };

    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    let mut evaluations = 0;
    let initial = initial.max(1);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let step = (hi - lo) / initial as f64;
        for k in 0..initial {
            let pa = lo + step * k as f64;
            let pb = if k + 1 == initial { hi } else { lo + step * (k + 1) as f64 };
            heap.push(ByError(eval(pa, pb)?));
            evaluations += 15;
        }
    }

    let totals = |heap: &BinaryHeap<ByError>, frozen: &[Panel]| {
        let mut v = 0.0;
        let mut e = 0.0;
        for p in heap.iter().map(|b| &b.0).chain(frozen.iter()) {
            v += p.value;
            e += p.err;
        }
        (v, e)
    };

    loop {
        let (value, err) = totals(&heap, &frozen);
        let target = tol.abs.max(tol.rel * value.abs());
        if err <= target {
            break;
        }
        if heap.len() + frozen.len() >= tol.max_panels {
            return Err(QuadratureError::Accuracy { achieved: err, requested: target, radius: b });
        }
        let Some(ByError(worst)) = heap.pop() else {
            return Err(QuadratureError::Accuracy { achieved: err, requested: target, radius: b });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-14 * worst.b.abs().max(1e-300) {
            // cannot be split further in floating point
            frozen.push(worst);
            continue;
        }
        heap.push(ByError(eval(worst.a, mid)?));
        heap.push(ByError(eval(mid, worst.b)?));
        evaluations += 30;
    }

    let mut panels: Vec<Panel> = heap.into_iter().map(|b| b.0).chain(frozen).collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.value).sum();
    let err = panels.iter().map(|p| p.err).sum();
    Ok(Adapted { panels, value, err, evaluations })
}
