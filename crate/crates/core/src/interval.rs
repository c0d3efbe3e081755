//! Finite unions of half-open intervals with rational endpoints.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{invalid, Error, Result};
use crate::rational::{fmt_q, Q};

/// Sorted, pairwise disjoint, non-touching intervals `[l, r)` with `l < r`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    intervals: Vec<(Q, Q)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Rejects empty or reversed intervals and overlapping inputs. Touching
    /// intervals are merged.
    pub fn new(intervals: Vec<(Q, Q)>) -> Result<Self> {
        if let Some((l, r)) = intervals.iter().find(|(l, r)| l >= r) {
            return Err(invalid(format!("empty interval [{}, {})", fmt_q(l), fmt_q(r))));
        }
        let mut intervals = intervals;
        intervals.sort();
        if let Some(w) = intervals.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(Error::Overlap(format!(
                "[{}, {}) and [{}, {})",
                fmt_q(&w[0].0),
                fmt_q(&w[0].1),
                fmt_q(&w[1].0),
                fmt_q(&w[1].1)
            )));
        }
        Ok(Self::merge_sorted(intervals))
    }

    pub fn interval(l: Q, r: Q) -> Result<Self> {
        Self::new(vec![(l, r)])
    }

    /// Union of arbitrary (possibly overlapping) intervals; empty ones are dropped.
    pub fn from_union(intervals: Vec<(Q, Q)>) -> Self {
        let mut intervals: Vec<(Q, Q)> = intervals.into_iter().filter(|(l, r)| l < r).collect();
        intervals.sort();
        Self::merge_sorted(intervals)
    }

    fn merge_sorted(sorted: Vec<(Q, Q)>) -> Self {
        let mut out: Vec<(Q, Q)> = Vec::with_capacity(sorted.len());
        for (l, r) in sorted {
            match out.last_mut() {
                Some(last) if l <= last.1 => {
                    if r > last.1 {
                        last.1 = r;
                    }
                }
                _ => out.push((l, r)),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[(Q, Q)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> Q {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }

    pub fn contains(&self, x: &Q) -> bool {
        let i = self.intervals.partition_point(|(l, _)| l <= x);
        i > 0 && *x < self.intervals[i - 1].1
    }

    pub fn translate(&self, offset: &Q) -> Self {
        Self { intervals: self.intervals.iter().map(|(l, r)| (l + offset, r + offset)).collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend(other.intervals.iter().cloned());
        all.sort();
        Self::merge_sorted(all)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut k) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && k < b.len() {
            let l = std::cmp::max(&a[i].0, &b[k].0);
            let r = std::cmp::min(&a[i].1, &b[k].1);
            if l < r {
                out.push((l.clone(), r.clone()));
            }
            if a[i].1 < b[k].1 {
                i += 1;
            } else {
                k += 1;
            }
        }
        Self { intervals: out }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let mut k = 0;
        for (l, r) in &self.intervals {
            let mut cur = l.clone();
            while k < other.intervals.len() && other.intervals[k].1 <= cur {
                k += 1;
            }
            let mut j = k;
            while j < other.intervals.len() && other.intervals[j].0 < *r {
                let (ol, or) = &other.intervals[j];
                if *ol > cur {
                    out.push((cur.clone(), ol.clone()));
                }
                if *or > cur {
                    cur = or.clone();
                }
                j += 1;
            }
            if cur < *r {
                out.push((cur, r.clone()));
            }
        }
        Self::merge_sorted(out)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }

    /// Smallest left and largest right endpoint.
    pub fn hull(&self) -> Option<(Q, Q)> {
        Some((self.intervals.first()?.0.clone(), self.intervals.last()?.1.clone()))
    }

    /// CSV with columns `left_num,left_den,right_num,right_den`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("left_num,left_den,right_num,right_den\n");
        for (l, r) in &self.intervals {
            s.push_str(&format!("{},{},{},{}\n", l.numer(), l.denom(), r.numer(), r.denom()));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut intervals = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parse = |s: &str| -> Result<num_bigint::BigInt> {
                s.trim().parse().map_err(|_| Error::Parse { line: n + 1, msg: format!("bad integer `{s}`") })
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse { line: n + 1, msg: "expected four columns".into() });
            }
            let (ld, rd) = (parse(f[1])?, parse(f[3])?);
            if ld.is_zero() || rd.is_zero() || ld.is_negative() || rd.is_negative() {
                return Err(Error::Parse { line: n + 1, msg: "denominators must be positive".into() });
            }
            intervals.push((Q::new(parse(f[0])?, ld), Q::new(parse(f[2])?, rd)));
        }
        Self::new(intervals)
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> =
            self.intervals.iter().map(|(l, r)| format!("[{}, {})", fmt_q(l), fmt_q(r))).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}
