use crate::error::{Result, WoetError};
use crate::extended::ExtReal;

/// Lower convex hull of a finite 1-D point set, stored by its vertices.
///
/// Evaluation interpolates linearly between consecutive vertices and is
/// `+∞` outside `[first vertex, last vertex]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePiece {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl EnvelopePiece {
    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    /// Slope of each segment, non-decreasing.
    pub fn slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn eval(&self, x: f64) -> ExtReal {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return f64::INFINITY;
        }
        if n == 1 {
            return self.ys[0];
        }
        // first vertex strictly to the right of x, clamped to a valid segment
        let k = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        self.eval_segment(k - 1, x)
    }

    /// Linear interpolation on segment `k` (between vertices `k`, `k+1`).
    pub(crate) fn eval_segment(&self, k: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        if x == x0 {
            return y0;
        }
        if x == x1 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Greatest convex function below the data `(xs[k], ys[k])`. Points whose
/// value is `+∞` are ignored.
pub fn convex_envelope_1d(xs: &[f64], ys: &[f64]) -> Result<EnvelopePiece> {
    if xs.len() != ys.len() {
        return Err(WoetError::ShapeMismatch(format!(
            "{} locations but {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(WoetError::Validation("envelope locations must be strictly increasing".into()));
    }
    let mut hx: Vec<f64> = Vec::with_capacity(xs.len());
    let mut hy: Vec<f64> = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if y == f64::INFINITY {
            continue;
        }
        while hx.len() >= 2 {
            let k = hx.len();
            let (ox, oy) = (hx[k - 2], hy[k - 2]);
            let (ax, ay) = (hx[k - 1], hy[k - 1]);
            // drop the middle vertex when it is on or above the chord
            if (ax - ox) * (y - oy) - (ay - oy) * (x - ox) <= 0.0 {
                hx.pop();
                hy.pop();
            } else {
                break;
            }
        }
        hx.push(x);
        hy.push(y);
    }
    if hx.is_empty() {
        return Err(WoetError::EmptyFinitePart);
    }
    Ok(EnvelopePiece { xs: hx, ys: hy })
}
