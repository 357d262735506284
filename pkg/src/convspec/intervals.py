"""Sorted unions of disjoint closed intervals.

Used to represent essential spectra, essential ranges of potentials and
spectral gaps.  Points are degenerate intervals [x, x].
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint closed intervals."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev_hi = None
        for lo, hi in self.intervals:
            if lo > hi:
                raise ValueError(f"interval [{lo}, {hi}] has lo > hi")
            if prev_hi is not None and lo <= prev_hi:
                raise ValueError("intervals overlap or touch; normalize first")
            prev_hi = hi

    @staticmethod
    def from_intervals(pairs, merge_tol: float = 0.0) -> "IntervalUnion":
        """Normalize arbitrary closed intervals: sort and merge overlaps.

        Intervals whose gap is <= merge_tol are merged into one component.
        """
        pairs = [(float(lo), float(hi)) for lo, hi in pairs]
        for lo, hi in pairs:
            if lo > hi:
                raise ValueError(f"interval [{lo}, {hi}] has lo > hi")
        if not pairs:
            return IntervalUnion(())
        pairs.sort()
        merged = [list(pairs[0])]
        for lo, hi in pairs[1:]:
            if lo <= merged[-1][1] + merge_tol:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return IntervalUnion(tuple((lo, hi) for lo, hi in merged))

    @staticmethod
    def from_points(points, merge_tol: float = 0.0) -> "IntervalUnion":
        return IntervalUnion.from_intervals([(p, p) for p in points], merge_tol)

    def union(self, other: "IntervalUnion", merge_tol: float = 0.0) -> "IntervalUnion":
        return IntervalUnion.from_intervals(
            list(self.intervals) + list(other.intervals), merge_tol
        )

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self.intervals)

    def distance(self, x: float) -> float:
        """Distance from the point x to the union (0 when inside)."""
        if self.is_empty():
            return float("inf")
        best = float("inf")
        for lo, hi in self.intervals:
            if lo <= x <= hi:
                return 0.0
            best = min(best, abs(x - lo), abs(x - hi))
        return best

    def interior_gaps(self) -> list[tuple[float, float]]:
        """Open intervals between consecutive components."""
        out = []
        for (lo0, hi0), (lo1, hi1) in zip(self.intervals, self.intervals[1:]):
            out.append((hi0, lo1))
        return out

    def to_json(self) -> list[list[float]]:
        return [[lo, hi] for lo, hi in self.intervals]

    @staticmethod
    def from_json(data) -> "IntervalUnion":
        return IntervalUnion.from_intervals([(lo, hi) for lo, hi in data])
