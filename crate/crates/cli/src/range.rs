//! `A..B[xF]` size sweeps.

use std::fmt;
use std::str::FromStr;

/// Geometric sweep `A, A*F, A*F^2, ...` capped at `B`, with `B` always the
/// last value. `F` defaults to 2; a bare `A` is the single value `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeRange {
    pub start: usize,
    pub end: usize,
    pub factor: usize,
}

impl SizeRange {
    pub fn single(v: usize) -> Self {
        SizeRange {
            start: v,
            end: v,
            factor: 2,
        }
    }

    pub fn values(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut v = self.start;
        while v < self.end {
            out.push(v);
            v = v.saturating_mul(self.factor);
        }
        out.push(self.end);
        out
    }
}

impl fmt::Display for SizeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}..{}x{}", self.start, self.end, self.factor)
        }
    }
}

fn positive(s: &str, what: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err(format!("{what} must be at least 1")),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("{what} {s:?} is not a positive integer")),
    }
}

impl FromStr for SizeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let Some((start, rest)) = s.split_once("..") else {
            return positive(s, "size").map(SizeRange::single);
        };
        let (end, factor) = match rest.split_once('x') {
            Some((e, f)) => (e, positive(f, "step")?),
            None => (rest, 2),
        };
        let (start, end) = (positive(start, "range start")?, positive(end, "range end")?);
        if start > end {
            return Err(format!("range start {start} exceeds end {end}"));
        }
        if factor < 2 {
            return Err("step must be at least 2".into());
        }
        Ok(SizeRange { start, end, factor })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sweeps() {
        assert_eq!("250..1000".parse::<SizeRange>().unwrap().values(), vec![250, 500, 1000]);
        assert_eq!("10..1000x10".parse::<SizeRange>().unwrap().values(), vec![10, 100, 1000]);
        assert_eq!("3..20x3".parse::<SizeRange>().unwrap().values(), vec![3, 9, 20]);
        assert_eq!("7".parse::<SizeRange>().unwrap().values(), vec![7]);
        assert_eq!("5..5".parse::<SizeRange>().unwrap().values(), vec![5]);
    }

    #[test]
    fn rejects_nonsense() {
        for bad in ["", "0", "a..b", "10..5", "1..8x1", "1..", "..4", "-3"] {
            assert!(bad.parse::<SizeRange>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["4", "1..64x4"] {
            let r: SizeRange = s.parse().unwrap();
            assert_eq!(r.to_string().parse::<SizeRange>().unwrap(), r);
        }
    }
}
