//! Binned empirical densities.

/// Equal-width histogram on `[lo, hi]`. Samples outside the range are
/// counted separately and excluded from the density.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    outside: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
        Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            outside: 0,
        }
    }

    pub fn from_values(
        values: impl IntoIterator<Item = f64>,
        lo: f64,
        hi: f64,
        bins: usize,
    ) -> Self {
        let mut h = Histogram::new(lo, hi, bins);
        for v in values {
            h.add(v);
        }
        h
    }

    pub fn add(&mut self, v: f64) {
        match self.bin_of(v) {
            Some(i) => self.counts[i] += 1,
            None => self.outside += 1,
        }
    }

    fn bin_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.lo && v <= self.hi) {
            return None;
        }
        let i = ((v - self.lo) / self.width()) as usize;
        Some(i.min(self.counts.len() - 1))
    }

    /// Adds the counts of `other`, which must share the binning.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(
            (self.lo, self.hi, self.counts.len()),
            (other.lo, other.hi, other.counts.len())
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins())
            .map(|i| {
                let (a, b) = self.edges(i);
                0.5 * (a + b)
            })
            .collect()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn outside(&self) -> u64 {
        self.outside
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of in-range samples per bin.
    pub fn masses(&self) -> Vec<f64> {
        let n = self.in_range().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        let w = self.width();
        self.masses().into_iter().map(|m| m / w).collect()
    }
}

/// Joint opinion-knowledge histogram. Rows index knowledge, columns opinion.
/// Knowledge above the display limit is counted in the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    opinion_bins: usize,
    knowledge_bins: usize,
    knowledge_max: f64,
    counts: Vec<u64>,
}

impl Grid2D {
    pub fn new(opinion_bins: usize, knowledge_bins: usize, knowledge_max: f64) -> Self {
        assert!(opinion_bins > 0 && knowledge_bins > 0 && knowledge_max > 0.0);
        Grid2D {
            opinion_bins,
            knowledge_bins,
            knowledge_max,
            counts: vec![0; opinion_bins * knowledge_bins],
        }
    }

    pub fn add(&mut self, w: f64, x: f64) {
        let col =
            (((w + 1.0) / 2.0 * self.opinion_bins as f64) as usize).min(self.opinion_bins - 1);
        let row = ((x.max(0.0) / self.knowledge_max * self.knowledge_bins as f64) as usize)
            .min(self.knowledge_bins - 1);
        self.counts[row * self.opinion_bins + col] += 1;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.knowledge_bins, self.opinion_bins)
    }

    pub fn opinion_centers(&self) -> Vec<f64> {
        let dw = 2.0 / self.opinion_bins as f64;
        (0..self.opinion_bins)
            .map(|i| -1.0 + (i as f64 + 0.5) * dw)
            .collect()
    }

    pub fn knowledge_centers(&self) -> Vec<f64> {
        let dx = self.knowledge_max / self.knowledge_bins as f64;
        (0..self.knowledge_bins)
            .map(|i| (i as f64 + 0.5) * dx)
            .collect()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Densities in row-major order, normalized to unit integral.
    pub fn densities(&self) -> Vec<f64> {
        let total = self.counts.iter().sum::<u64>().max(1) as f64;
        let cell =
            (2.0 / self.opinion_bins as f64) * (self.knowledge_max / self.knowledge_bins as f64);
        self.counts
            .iter()
            .map(|&c| c as f64 / (total * cell))
            .collect()
    }
}
