'''
Finitely supported sequences on Z with pointwise operations and the
l_1, l_2 and l_1/2 (quasi-)norms.
'''
from dataclasses import dataclass
import math

import numpy as np

from util.typing import FloatArray


@dataclass(frozen=True, eq=False)
class FiniteSequence:
    '''
    values[i] sits at index offset + i; everything else is zero.
    '''
    values: FloatArray
    offset: int = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).ravel()
        object.__setattr__(self, "values", values)

    @classmethod
    def delta(cls, k: int = 0) -> "FiniteSequence":
        return cls(np.ones(1), k)

    @classmethod
    def zero(cls) -> "FiniteSequence":
        return cls(np.zeros(0))

    @property
    def end(self) -> int:
        return self.offset + len(self.values)

    def _aligned(self, other: "FiniteSequence", union: bool):
        if union:
            lo, hi = min(self.offset, other.offset), max(self.end, other.end)
        else:
            lo, hi = max(self.offset, other.offset), min(self.end, other.end)
        if hi <= lo:
            return lo, np.zeros(0), np.zeros(0)
        a, b = np.zeros(hi - lo), np.zeros(hi - lo)
        for target, s in ((a, self), (b, other)):
            start, stop = max(s.offset, lo), min(s.end, hi)
            if stop > start:
                target[start - lo:stop - lo] = s.values[start - s.offset:stop - s.offset]
        return lo, a, b

    def __add__(self, other: "FiniteSequence") -> "FiniteSequence":
        lo, a, b = self._aligned(other, union=True)
        return FiniteSequence(a + b, lo)

    def __mul__(self, other: "FiniteSequence") -> "FiniteSequence":
        """pointwise product"""
        lo, a, b = self._aligned(other, union=False)
        return FiniteSequence(a * b, lo)


def l1_norm(s: FiniteSequence) -> float:
    return float(np.sum(np.abs(s.values)))


def l2_norm(s: FiniteSequence) -> float:
    return float(np.sqrt(np.sum(np.square(s.values))))


def half_sum(s: FiniteSequence) -> float:
    return float(np.sum(np.sqrt(np.abs(s.values))))


def half_norm(s: FiniteSequence) -> float:
    '''
    The l_1/2 quasi-norm (sum |s_k|^(1/2))^2; it satisfies
    half_norm(a b) <= l1(a) l1(b) and
    half_norm(a + b) <= 2 (half_norm(a) + half_norm(b)).
    '''
    return half_sum(s) ** 2


def partial_sums(terms, windows) -> list:
    '''
    sum_{1 <= k <= N} terms(k) for each window size N, accumulated in
    increasing k.
    '''
    out = []
    total, k = 0.0, 0
    for N in sorted(windows):
        values = terms(np.arange(k + 1, N + 1, dtype=np.float64))
        total += math.fsum(values)
        k = N
        out.append(total)
    return out
