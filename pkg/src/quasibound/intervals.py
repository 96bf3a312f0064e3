"""Finite unions of closed subintervals of [-1, 1]."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from gmpy2 import mpfr

MPFR = type(mpfr(0))

from ._mp import current_precision, to_decimal, to_mpfr, workprec


def _normalize(pairs, clip=True):
    cleaned = []
    for a, b in pairs:
        # endpoints that are already mpfr keep their own precision
        a = a if isinstance(a, MPFR) else to_mpfr(a)
        b = b if isinstance(b, MPFR) else to_mpfr(b)
        if clip:
            a = max(a, mpfr(-1))
            b = min(b, mpfr(1))
        if b < a:
            continue
        cleaned.append((a, b))
    cleaned.sort(key=lambda ab: (ab[0], ab[1]))
    merged = []
    for a, b in cleaned:
        if merged and a <= merged[-1][1]:
            if b > merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return tuple(merged)


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, pairwise disjoint closed intervals inside [-1, 1].

    Build instances with :meth:`from_pairs`, which clips, sorts and merges.
    """

    intervals: tuple = ()

    @classmethod
    def from_pairs(cls, pairs, clip=True):
        return cls(_normalize(pairs, clip=clip))

    @classmethod
    def interval(cls, a, b):
        return cls.from_pairs([(a, b)])

    @classmethod
    def full(cls):
        return cls(((mpfr(-1), mpfr(1)),))

    @classmethod
    def empty(cls):
        return cls(())

    def _bits(self):
        # arithmetic on endpoints never runs below their own precision
        return max([current_precision()] + [v.precision for ab in self.intervals for v in ab])

    @property
    def total_length(self):
        with workprec(self._bits()):
            total = mpfr(0)
            for a, b in self.intervals:
                total += b - a
            return total

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    @property
    def is_empty(self):
        return not self.intervals

    @property
    def hull(self):
        if not self.intervals:
            raise ValueError("empty set has no hull")
        return self.intervals[0][0], self.intervals[-1][1]

    def intersect_interval(self, a, b):
        a = to_mpfr(a)
        b = to_mpfr(b)
        out = []
        for lo, hi in self.intervals:
            lo2 = max(lo, a)
            hi2 = min(hi, b)
            if lo2 <= hi2:
                out.append((lo2, hi2))
        return IntervalSet(tuple(out))

    def intersection(self, other):
        out = []
        i = j = 0
        A, B = self.intervals, other.intervals
        while i < len(A) and j < len(B):
            lo = max(A[i][0], B[j][0])
            hi = min(A[i][1], B[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if A[i][1] < B[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def union(self, other):
        return IntervalSet.from_pairs(list(self.intervals) + list(other.intervals), clip=False)

    def contains_point(self, x):
        x = to_mpfr(x)
        return any(a <= x <= b for a, b in self.intervals)

    def is_subset(self, other, slack=0):
        """True if every component lies in ``other`` up to ``slack`` at each end."""
        with workprec(max(self._bits(), other._bits())):
            slack = to_mpfr(slack)
            for a, b in self.intervals:
                if not any(c - slack <= a and b <= d + slack for c, d in other.intervals):
                    return False
            return True

    def to_json(self, bits=None):
        return {
            "intervals": [[to_decimal(a, bits), to_decimal(b, bits)] for a, b in self.intervals],
            "total_length": to_decimal(self.total_length, bits),
        }

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        pairs = doc["intervals"] if isinstance(doc, dict) else doc
        return cls.from_pairs([(a, b) for a, b in pairs], clip=False)

    def to_csv(self, bits=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "b"])
        for a, b in self.intervals:
            w.writerow([to_decimal(a, bits), to_decimal(b, bits)])
        return buf.getvalue()

    def __repr__(self):
        parts = ", ".join(f"[{float(a):.6g}, {float(b):.6g}]" for a, b in self.intervals[:6])
        more = "" if len(self.intervals) <= 6 else f", ... ({len(self.intervals)} total)"
        return f"IntervalSet({parts}{more}; length={float(self.total_length):.6g})"
