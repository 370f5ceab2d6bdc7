//! Top-k selection and the unit direction vector built from an index message.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// The sorted set of `k` indices selected out of a block of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexMessage {
    n: usize,
    indices: Vec<usize>,
}

impl IndexMessage {
    /// Builds a message from strictly increasing indices, all below `n`.
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.len() >= n {
            return Err(Error::Usage(format!(
                "a message needs 1 <= k < n indices, got k = {} for n = {n}",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("message indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::Usage(format!("index {last} out of range for n = {n}")));
            }
        }
        Ok(Self { n, indices })
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of selected indices.
    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

/// Orders (value desc, index asc): "larger value first, smaller index on ties".
#[inline]
fn rank_order(x: &[f64], a: usize, b: usize) -> Ordering {
    x[b].partial_cmp(&x[a])
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// Indices of the `k` largest entries of `x`, ties broken toward the smaller index.
///
/// Runs in average linear time via partial selection.
pub fn g_k(x: &[f64], k: usize) -> Result<IndexMessage> {
    let n = x.len();
    if k == 0 || k >= n {
        return Err(Error::Usage(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("input block contains a non-finite sample".into()));
    }
    let indices = if k == 1 {
        let mut best = 0;
        for (j, &v) in x.iter().enumerate().skip(1) {
            if v > x[best] {
                best = j;
            }
        }
        vec![best]
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.select_nth_unstable_by(k - 1, |&a, &b| rank_order(x, a, b));
        order.truncate(k);
        order.sort_unstable();
        order
    };
    Ok(IndexMessage { n, indices })
}

/// The two levels of the direction vector: `(selected, unselected)`.
pub fn direction_levels(n: usize, k: usize) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    (((nf - kf) / (nf * kf)).sqrt(), -(kf / (nf * (nf - kf))).sqrt())
}

/// Unit, zero-sum vector pointing at the selected indices.
pub fn build_direction(m: &IndexMessage) -> Vec<f64> {
    let (hi, lo) = direction_levels(m.n, m.k());
    let mut u = vec![lo; m.n];
    for &j in &m.indices {
        u[j] = hi;
    }
    u
}

/// `x -= scale * U(m)` without materializing `U`.
pub(crate) fn subtract_direction(x: &mut [f64], m: &IndexMessage, scale: f64) {
    let (hi, lo) = direction_levels(m.n, m.k());
    let shift = scale * lo;
    for v in x.iter_mut() {
        *v -= shift;
    }
    let bump = scale * (hi - lo);
    for &j in &m.indices {
        x[j] -= bump;
    }
}

/// `x += scale * U(m)` without materializing `U`.
pub(crate) fn add_direction(x: &mut [f64], m: &IndexMessage, scale: f64) {
    subtract_direction(x, m, -scale);
}
