//! Time integrals and batch-means accumulation.

/// Number of equal-time batches behind every confidence half-width.
pub const BATCHES: usize = 20;
/// Two-sided 95% Student-t quantile with `BATCHES - 1` degrees of freedom.
pub const T_QUANTILE: f64 = 2.093024054408263;

const MAX_BINS: usize = 2000;

/// Piecewise-constant counter with a lazily updated integral.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Tally {
    pub count: u32,
    pub area: f64,
    last: f64,
}

impl Tally {
    pub fn add(&mut self, delta: i32, t: f64) {
        self.flush(t);
        self.count = (self.count as i64 + delta as i64) as u32;
    }

    pub fn flush(&mut self, t: f64) {
        self.area += self.count as f64 * (t - self.last);
        self.last = t;
    }

    /// Drops everything integrated so far.
    pub fn restart(&mut self, t: f64) {
        self.flush(t);
        self.area = 0.0;
    }
}

/// Fine time bins over the window; adjacent bins merge when the run outgrows
/// them, so the horizon need not be known in advance.
#[derive(Debug, Clone)]
pub(crate) struct Bins {
    start: f64,
    width: f64,
    fixed_end: Option<f64>,
    deliveries: Vec<u64>,
    area: Vec<f64>,
}

impl Bins {
    pub fn new(start: f64, end: Option<f64>, guess_width: f64) -> Self {
        let width = match end {
            Some(end) => (end - start) / MAX_BINS as f64,
            None => guess_width,
        };
        Bins {
            start,
            width,
            fixed_end: end,
            deliveries: vec![0; MAX_BINS],
            area: vec![0.0; MAX_BINS],
        }
    }

    fn index(&mut self, t: f64) -> usize {
        loop {
            let idx = ((t - self.start) / self.width).max(0.0) as usize;
            if idx < MAX_BINS {
                return idx;
            }
            if self.fixed_end.is_some() {
                return MAX_BINS - 1;
            }
            self.merge();
        }
    }

    fn merge(&mut self) {
        for i in 0..MAX_BINS / 2 {
            self.deliveries[i] = self.deliveries[2 * i] + self.deliveries[2 * i + 1];
            self.area[i] = self.area[2 * i] + self.area[2 * i + 1];
        }
        for i in MAX_BINS / 2..MAX_BINS {
            self.deliveries[i] = 0;
            self.area[i] = 0.0;
        }
        self.width *= 2.0;
    }

    pub fn delivery(&mut self, t: f64) {
        let i = self.index(t);
        self.deliveries[i] += 1;
    }

    /// Adds `level * (t1 - t0)` split across the bins it covers.
    pub fn integrate(&mut self, level: f64, mut t0: f64, t1: f64) {
        if level == 0.0 || t1 <= t0 {
            return;
        }
        let last = self.index(t1);
        let mut i = self.index(t0);
        while i < last {
            let edge = self.start + (i + 1) as f64 * self.width;
            if edge > t0 {
                self.area[i] += level * (edge - t0);
                t0 = edge;
            }
            i += 1;
        }
        self.area[last] += level * (t1 - t0).max(0.0);
    }

    /// Per-batch (deliveries per time, mean level) over `[start, end]`;
    /// `None` if the window is too short to form all batches.
    pub fn batches(&mut self, end: f64) -> Option<Vec<(f64, f64)>> {
        if end <= self.start {
            return None;
        }
        let used = self.index(end) + 1;
        if used < BATCHES {
            return None;
        }
        let mut out = Vec::with_capacity(BATCHES);
        for b in 0..BATCHES {
            let lo = b * used / BATCHES;
            let hi = (b + 1) * used / BATCHES;
            let from = self.start + lo as f64 * self.width;
            let to = if hi == used { end } else { self.start + hi as f64 * self.width };
            let span = to - from;
            if span <= 0.0 {
                return None;
            }
            let d: u64 = self.deliveries[lo..hi].iter().sum();
            let a: f64 = self.area[lo..hi].iter().sum();
            out.push((d as f64 / span, a / span));
        }
        Some(out)
    }
}

/// Batch-means confidence half-width of the mean of `values`.
pub(crate) fn half_width(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    T_QUANTILE * (var / n).sqrt()
}
