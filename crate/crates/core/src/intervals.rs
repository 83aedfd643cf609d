//! Interval schedules on 1-indexed time.
//!
//! Two schedules decide when black-box runs start and how long they live:
//!
//! * geometric covering (GC): for every `k >= 0` and `i >= 1`, the interval
//!   `[i 2^k .. (i+1) 2^k - 1]`. Exactly `floor(log2 t) + 1` of them contain `t`.
//! * data streaming (DS) with multiplier `g`: one interval per start time,
//!   `[t .. t + g 2^u(t) - 1]`, where `2^u(t)` is the largest power of two
//!   dividing `t`.

use std::fmt;

use crate::error::{Error, Result};

/// Closed interval `[start..end]` of time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
}

impl Interval {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if start == 0 {
            return Err(Error::ZeroTime);
        }
        if end < start {
            return Err(Error::InvalidParameter(format!("interval [{start}..{end}] is empty")));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: u64) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.start <= self.start && self.end <= other.end
    }

    /// Same start and contained in `other`.
    pub fn is_prefix_of(&self, other: &Interval) -> bool {
        self.start == other.start && self.end <= other.end
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<u64> {
        self.start..=self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.start, self.end)
    }
}

/// Which family of intervals to spawn runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    GeometricCovering,
    DataStreaming { g: u64 },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::DataStreaming { g: 2 }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::DataStreaming { g: 0 } => {
                Err(Error::InvalidParameter("data streaming multiplier g must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Schedule::GeometricCovering => "gc".into(),
            Schedule::DataStreaming { g } => format!("ds{g}"),
        }
    }

    /// Intervals of this schedule that start at `t`.
    pub fn starts_at(&self, t: u64) -> Result<Vec<Interval>> {
        if t == 0 {
            return Err(Error::ZeroTime);
        }
        self.validate()?;
        let u = two_adic_valuation(t);
        Ok(match *self {
            Schedule::GeometricCovering => {
                (0..=u).map(|k| Interval { start: t, end: t + (1u64 << k) - 1 }).collect()
            }
            Schedule::DataStreaming { g } => {
                vec![Interval { start: t, end: t + g * (1u64 << u) - 1 }]
            }
        })
    }

    /// Intervals of this schedule containing `t`, sorted by `(start, end)`.
    pub fn active(&self, t: u64) -> Result<Vec<Interval>> {
        if t == 0 {
            return Err(Error::ZeroTime);
        }
        self.validate()?;
        let mut out = Vec::new();
        match *self {
            Schedule::GeometricCovering => {
                for k in 0..=floor_log2(t) {
                    let len = 1u64 << k;
                    let start = (t >> k) << k;
                    out.push(Interval { start, end: start + len - 1 });
                }
            }
            Schedule::DataStreaming { g } => {
                // Starts with valuation exactly u are the odd multiples of 2^u;
                // such a start s covers t iff t - g 2^u < s <= t.
                for u in 0..=floor_log2(t) {
                    let step = 1u64 << u;
                    let len = g * step;
                    let lo = t.saturating_sub(len - 1).max(1);
                    // smallest odd multiple of step that is >= lo
                    let mut m = lo.div_ceil(step);
                    if m.is_multiple_of(2) {
                        m += 1;
                    }
                    let mut s = m * step;
                    while s <= t {
                        out.push(Interval { start: s, end: s + len - 1 });
                        s += 2 * step;
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Largest `u` such that `2^u` divides `t` (`t >= 1`).
pub fn two_adic_valuation(t: u64) -> u32 {
    debug_assert!(t > 0);
    t.trailing_zeros()
}

/// `floor(log2 t)` for `t >= 1`.
pub fn floor_log2(t: u64) -> u32 {
    debug_assert!(t > 0);
    63 - t.leading_zeros()
}

/// Split `target` into consecutive GC intervals whose lengths strictly double
/// up to a peak and then at least halve.
///
/// Built greedily from the left: at each position take the longest GC
/// interval that starts there and still fits inside `target`.
pub fn partition_gc(target: Interval) -> Vec<Interval> {
    let mut blocks = Vec::new();
    let mut pos = target.start;
    while pos <= target.end {
        let remaining = target.end - pos + 1;
        let max_k = two_adic_valuation(pos).min(floor_log2(remaining));
        let end = pos + (1u64 << max_k) - 1;
        blocks.push(Interval { start: pos, end });
        pos = end + 1;
    }
    blocks
}

/// Split `target` into consecutive blocks, each a prefix of the DS interval
/// (multiplier `g`) starting at the block's first step.
///
/// Block boundaries follow the `g = 1` intervals `[s .. s + 2^u(s) - 1]`, so
/// block lengths at least double from one block to the next; only the last
/// block is truncated to end at `target.end`. Every such block is a prefix
/// of the (longer) DS interval with multiplier `g`.
pub fn partition_ds(target: Interval, g: u64) -> Result<Vec<Interval>> {
    if g == 0 {
        return Err(Error::InvalidParameter("data streaming multiplier g must be >= 1".into()));
    }
    let mut blocks = Vec::new();
    let mut pos = target.start;
    while pos <= target.end {
        let len = 1u64 << two_adic_valuation(pos);
        let end = (pos + len - 1).min(target.end);
        blocks.push(Interval { start: pos, end });
        pos = end + 1;
    }
    Ok(blocks)
}

/// Checks the GC partition law: blocks are GC members inside `target`,
/// disjoint, consecutive, cover `target`, and split into a strictly doubling
/// left run followed by a strictly halving right run.
pub fn check_gc_partition(target: Interval, blocks: &[Interval]) -> std::result::Result<(), String> {
    check_cover(target, blocks)?;
    for b in blocks {
        let len = b.len();
        if !len.is_power_of_two() || b.start % len != 0 {
            return Err(format!("{b} is not a geometric covering interval"));
        }
    }
    let lens: Vec<u64> = blocks.iter().map(Interval::len).collect();
    let split_ok = (0..=lens.len()).any(|k| {
        lens[..k].windows(2).all(|w| 2 * w[0] <= w[1])
            && lens[k..].windows(2).all(|w| 2 * w[1] <= w[0])
    });
    if split_ok {
        Ok(())
    } else {
        Err(format!("block lengths {lens:?} violate the doubling/halving law"))
    }
}

/// Checks the DS partition law: cover, prefix of the DS interval at each
/// block start, and at-least-doubling lengths between consecutive blocks
/// except into the final (possibly truncated) block.
pub fn check_ds_partition(
    target: Interval,
    g: u64,
    blocks: &[Interval],
) -> std::result::Result<(), String> {
    check_cover(target, blocks)?;
    let schedule = Schedule::DataStreaming { g };
    for b in blocks {
        let ds = schedule.starts_at(b.start).map_err(|e| e.to_string())?[0];
        if !b.is_prefix_of(&ds) {
            return Err(format!("{b} is not a prefix of {ds}"));
        }
    }
    let n = blocks.len();
    if n >= 3 {
        for w in blocks[..n - 1].windows(2) {
            if w[1].len() < 2 * w[0].len() {
                return Err(format!("{} does not at least double {}", w[1], w[0]));
            }
        }
    }
    Ok(())
}

fn check_cover(target: Interval, blocks: &[Interval]) -> std::result::Result<(), String> {
    let first = blocks.first().ok_or("empty partition")?;
    if first.start != target.start {
        return Err(format!("partition starts at {} not {}", first.start, target.start));
    }
    for w in blocks.windows(2) {
        if w[1].start != w[0].end + 1 {
            return Err(format!("{} and {} are not consecutive", w[0], w[1]));
        }
    }
    for b in blocks {
        if b.end < b.start || !b.is_subset_of(&target) {
            return Err(format!("{b} is not a subset of {target}"));
        }
    }
    let last = blocks.last().ok_or("empty partition")?;
    if last.end != target.end {
        return Err(format!("partition ends at {} not {}", last.end, target.end));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: u64, b: u64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn gc_starts() {
        let gc = Schedule::GeometricCovering;
        assert_eq!(gc.starts_at(6).unwrap(), vec![iv(6, 6), iv(6, 7)]);
        assert_eq!(gc.starts_at(1).unwrap(), vec![iv(1, 1)]);
        assert_eq!(gc.starts_at(8).unwrap().len(), 4);
        assert_eq!(gc.starts_at(0), Err(Error::ZeroTime));
    }

    #[test]
    fn ds_starts() {
        assert_eq!(Schedule::DataStreaming { g: 1 }.starts_at(12).unwrap(), vec![iv(12, 15)]);
        assert_eq!(Schedule::DataStreaming { g: 2 }.starts_at(1).unwrap(), vec![iv(1, 2)]);
        assert_eq!(two_adic_valuation(12), 2);
    }

    #[test]
    fn active_examples() {
        let gc = Schedule::GeometricCovering;
        assert_eq!(gc.active(1).unwrap(), vec![iv(1, 1)]);
        assert_eq!(gc.active(6).unwrap(), vec![iv(4, 7), iv(6, 6), iv(6, 7)]);
        let ds = Schedule::DataStreaming { g: 1 };
        assert_eq!(ds.active(7).unwrap(), vec![iv(4, 7), iv(6, 7), iv(7, 7)]);
    }

    #[test]
    fn ds_active_matches_brute_force() {
        for g in 1..=4 {
            let ds = Schedule::DataStreaming { g };
            for t in 1..=300u64 {
                let brute: Vec<Interval> = (1..=t)
                    .map(|s| ds.starts_at(s).unwrap()[0])
                    .filter(|j| j.contains(t))
                    .collect();
                assert_eq!(ds.active(t).unwrap(), brute, "g={g} t={t}");
            }
        }
    }

    #[test]
    fn gc_active_matches_brute_force() {
        let gc = Schedule::GeometricCovering;
        for t in 1..=300u64 {
            let mut brute: Vec<Interval> = (1..=t)
                .flat_map(|s| gc.starts_at(s).unwrap())
                .filter(|j| j.contains(t))
                .collect();
            brute.sort();
            assert_eq!(gc.active(t).unwrap(), brute, "t={t}");
        }
    }

    #[test]
    fn gc_partition_examples() {
        assert_eq!(partition_gc(iv(1, 1)), vec![iv(1, 1)]);
        assert_eq!(
            partition_gc(iv(5, 12)),
            vec![iv(5, 5), iv(6, 7), iv(8, 11), iv(12, 12)]
        );
        assert_eq!(partition_gc(iv(4, 7)), vec![iv(4, 7)]);
        // equal-length blocks at the peak are allowed
        assert_eq!(partition_gc(iv(2, 5)), vec![iv(2, 3), iv(4, 5)]);
        check_gc_partition(iv(2, 5), &partition_gc(iv(2, 5))).unwrap();
    }

    #[test]
    fn ds_partition_examples() {
        assert_eq!(partition_ds(iv(3, 6), 1).unwrap(), vec![iv(3, 3), iv(4, 6)]);
        assert_eq!(partition_ds(iv(8, 15), 1).unwrap(), vec![iv(8, 15)]);
        assert_eq!(partition_ds(iv(1, 3), 2).unwrap(), vec![iv(1, 1), iv(2, 3)]);
        assert_eq!(partition_ds(iv(3, 10), 1).unwrap(), vec![iv(3, 3), iv(4, 7), iv(8, 10)]);
    }

    #[test]
    fn partition_checkers_catch_errors() {
        let target = iv(5, 12);
        assert!(check_gc_partition(target, &[iv(5, 6), iv(7, 12)]).is_err());
        assert!(check_gc_partition(target, &[iv(5, 5), iv(6, 7), iv(8, 11)]).is_err());
        assert!(check_gc_partition(iv(1, 4), &[iv(1, 1), iv(2, 2), iv(3, 3), iv(4, 4)]).is_err());
        assert!(check_ds_partition(iv(1, 7), 2, &[iv(1, 2), iv(3, 4), iv(5, 7)]).is_err());
    }
}
