use super::{AssetUniverse, FrameAccess, SentimentRecord};
use chrono::NaiveDate;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

/// Counters filled in by [`CausalView`] reads.
#[derive(Debug, Default)]
pub struct AccessAudit {
    reads: AtomicU64,
    violations: AtomicU64,
    max_lookahead: AtomicUsize,
}

impl AccessAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    /// Number of reads of a row later than the view's horizon.
    pub fn violations(&self) -> u64 {
        self.violations.load(Ordering::Relaxed)
    }

    /// Largest `row - horizon` seen among violating reads.
    pub fn max_lookahead(&self) -> usize {
        self.max_lookahead.load(Ordering::Relaxed)
    }

    fn record(&self, row: usize, horizon: usize) {
        self.reads.fetch_add(1, Ordering::Relaxed);
        if row > horizon {
            self.violations.fetch_add(1, Ordering::Relaxed);
            self.max_lookahead.fetch_max(row - horizon, Ordering::Relaxed);
        }
    }
}

/// A frame seen as of day `horizon`: `n_days()` ends at the horizon and every
/// read is counted in the attached audit. Reads past the horizon still
/// return data so an instrumented run completes and reports them.
pub struct CausalView<'a, F: FrameAccess + ?Sized> {
    inner: &'a F,
    horizon: usize,
    audit: Option<&'a AccessAudit>,
}

impl<'a, F: FrameAccess + ?Sized> CausalView<'a, F> {
    pub fn new(inner: &'a F, horizon: usize) -> Self {
        Self {
            inner,
            horizon,
            audit: None,
        }
    }

    pub fn audited(inner: &'a F, horizon: usize, audit: &'a AccessAudit) -> Self {
        Self {
            inner,
            horizon,
            audit: Some(audit),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    fn touch(&self, t: usize) {
        if let Some(a) = self.audit {
            a.record(t, self.horizon);
        }
    }
}

impl<F: FrameAccess + ?Sized> FrameAccess for CausalView<'_, F> {
    fn universe(&self) -> &AssetUniverse {
        self.inner.universe()
    }
    fn n_days(&self) -> usize {
        (self.horizon + 1).min(self.inner.n_days())
    }
    fn date(&self, t: usize) -> NaiveDate {
        self.touch(t);
        self.inner.date(t)
    }
    fn price(&self, t: usize, i: usize) -> f64 {
        self.touch(t);
        self.inner.price(t, i)
    }
    fn volume(&self, t: usize, i: usize) -> f64 {
        self.touch(t);
        self.inner.volume(t, i)
    }
    fn mcap(&self, t: usize, i: usize) -> f64 {
        self.touch(t);
        self.inner.mcap(t, i)
    }
    fn sentiment(&self, t: usize, i: usize) -> SentimentRecord {
        self.touch(t);
        self.inner.sentiment(t, i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::synthetic::SyntheticMarket;

    #[test]
    fn reads_past_horizon_are_counted() {
        let frame = SyntheticMarket::new(2, 20, 3).build();
        let audit = AccessAudit::new();
        let view = CausalView::audited(&frame, 10, &audit);
        assert_eq!(view.n_days(), 11);
        let _ = view.price(10, 0);
        let _ = view.volume(3, 1);
        assert_eq!(audit.violations(), 0);
        let _ = view.price(12, 0);
        assert_eq!(audit.violations(), 1);
        assert_eq!(audit.max_lookahead(), 2);
        assert_eq!(audit.reads(), 3);
    }
}
