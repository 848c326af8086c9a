use crate::rational::Rat;
use num_traits::Zero;

/// Non-degenerate closed interval `[lo, hi]` with `lo < hi`. Pieces of cake
/// are finite unions of these; endpoints never matter because densities are
/// atomless.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl Interval {
    /// Returns `None` for empty or inverted input.
    pub fn new(lo: Rat, hi: Rat) -> Option<Self> {
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn len(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo >= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi <= other.hi { self.hi.clone() } else { other.hi.clone() };
        Interval::new(lo, hi)
    }

    pub fn overlap_len(&self, other: &Interval) -> Rat {
        self.intersect(other).map_or_else(Rat::zero, |iv| iv.len())
    }
}

/// Sorts and merges overlapping or touching intervals.
pub fn normalize_pieces(mut pieces: Vec<Interval>) -> Vec<Interval> {
    pieces.sort();
    let mut out: Vec<Interval> = Vec::with_capacity(pieces.len());
    for iv in pieces {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

pub fn total_len(pieces: &[Interval]) -> Rat {
    pieces.iter().map(Interval::len).sum()
}

/// The whole cake, `[0, 1]`.
pub fn unit_interval() -> Interval {
    Interval { lo: Rat::zero(), hi: num_traits::One::one() }
}

/// Set difference `pieces \ taken`, both assumed normalized.
pub fn subtract_pieces(pieces: &[Interval], taken: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for piece in pieces {
        let mut cursor = piece.lo.clone();
        for t in taken {
            if t.hi <= cursor {
                continue;
            }
            if t.lo >= piece.hi {
                break;
            }
            if t.lo > cursor {
                let hi = if t.lo < piece.hi { t.lo.clone() } else { piece.hi.clone() };
                if let Some(iv) = Interval::new(cursor.clone(), hi) {
                    out.push(iv);
                }
            }
            if t.hi > cursor {
                cursor = t.hi.clone();
            }
            if cursor >= piece.hi {
                break;
            }
        }
        if let Some(iv) = Interval::new(cursor, piece.hi.clone()) {
            out.push(iv);
        }
    }
    out
}

/// Intersection of two unions of intervals, both assumed normalized.
pub fn intersect_pieces(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            if y.lo >= x.hi {
                break;
            }
            if let Some(iv) = x.intersect(y) {
                out.push(iv);
            }
        }
    }
    normalize_pieces(out)
}

/// True when the two unions of intervals share no interior point.
pub fn interior_disjoint(a: &[Interval], b: &[Interval]) -> bool {
    for x in a {
        for y in b {
            if !x.overlap_len(y).is_zero() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(rat(a.0, a.1), rat(b.0, b.1)).unwrap()
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Interval::new(rat(1, 2), rat(1, 2)).is_none());
        assert!(Interval::new(rat(2, 3), rat(1, 3)).is_none());
    }

    #[test]
    fn merges_touching_pieces() {
        let merged = normalize_pieces(vec![iv((1, 2), (7, 10)), iv((0, 1), (1, 2)), iv((4, 5), (1, 1))]);
        assert_eq!(merged, vec![iv((0, 1), (7, 10)), iv((4, 5), (1, 1))]);
    }

    #[test]
    fn subtracts_middle() {
        let rest = subtract_pieces(&[iv((0, 1), (1, 1))], &[iv((1, 4), (1, 2))]);
        assert_eq!(rest, vec![iv((0, 1), (1, 4)), iv((1, 2), (1, 1))]);
    }

    #[test]
    fn subtracts_across_pieces() {
        let rest = subtract_pieces(
            &[iv((0, 1), (1, 4)), iv((1, 2), (1, 1))],
            &[iv((1, 8), (5, 8))],
        );
        assert_eq!(rest, vec![iv((0, 1), (1, 8)), iv((5, 8), (1, 1))]);
        assert_eq!(total_len(&rest), rat(1, 2));
    }
}
