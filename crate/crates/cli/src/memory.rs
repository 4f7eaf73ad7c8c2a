//! Peak-memory measurement for `bench`.
//!
//! The `s2gnn` binary installs [`CountingAlloc`] as its global allocator,
//! which keeps a resettable high-water mark of live heap bytes. When the
//! counter is not installed (e.g. inside a test harness) the process-wide
//! resident-set high-water mark from `/proc/self/status` is used instead.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static ACTIVE: AtomicBool = AtomicBool::new(false);

/// System allocator wrapper tracking live and peak heap bytes.
pub struct CountingAlloc;

fn grow(size: usize) {
    let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

// SAFETY: every call forwards to `System` with the caller's layout; the
// counters are side bookkeeping only.
unsafe impl GlobalAlloc for CountingAlloc {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            grow(layout.size());
            ACTIVE.store(true, Ordering::Relaxed);
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            grow(layout.size());
            ACTIVE.store(true, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
            grow(new_size);
        }
        p
    }
}

/// How the memory column was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryMethod {
    /// Heap high-water mark above the pre-measurement baseline.
    AllocatorPeak,
    /// Process resident-set high-water mark (`VmHWM`), not resettable.
    RssHighWater,
    Unavailable,
}

impl MemoryMethod {
    pub fn detect() -> Self {
        if ACTIVE.load(Ordering::Relaxed) {
            MemoryMethod::AllocatorPeak
        } else if rss_high_water().is_some() {
            MemoryMethod::RssHighWater
        } else {
            MemoryMethod::Unavailable
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MemoryMethod::AllocatorPeak => "allocator_peak",
            MemoryMethod::RssHighWater => "rss_high_water",
            MemoryMethod::Unavailable => "unavailable",
        }
    }
}

fn rss_high_water() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Brackets one measured region.
#[derive(Debug)]
pub struct PeakProbe {
    method: MemoryMethod,
    baseline: usize,
}

impl PeakProbe {
    pub fn start() -> Self {
        let method = MemoryMethod::detect();
        let baseline = CURRENT.load(Ordering::Relaxed);
        PEAK.store(baseline, Ordering::Relaxed);
        Self { method, baseline }
    }

    pub fn method(&self) -> MemoryMethod {
        self.method
    }

    /// Peak bytes attributable to the region, if measurable.
    pub fn finish(&self) -> Option<u64> {
        match self.method {
            MemoryMethod::AllocatorPeak => {
                Some(PEAK.load(Ordering::Relaxed).saturating_sub(self.baseline) as u64)
            }
            MemoryMethod::RssHighWater => rss_high_water(),
            MemoryMethod::Unavailable => None,
        }
    }
}

/// Available physical memory in bytes (`MemAvailable`), if known.
pub fn available_memory() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
