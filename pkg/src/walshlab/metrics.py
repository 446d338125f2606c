"""Spectral metrics: entropy, min-entropy, influence, classification, ratios.

Everything that can be exact is exact: influence is always a rational with
denominator dividing 4^n, min-entropy is an integer whenever the largest
squared correlation is a power of two, and entropy falls back to binary64
with compensated summation otherwise. ``ExactValue`` carries both the exact
rational (when one exists) and a binary64 shadow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Spectrum, TruthTable, popcounts


class SpectrumError(ValueError):
    """A spectrum failed its Parseval identity; the data is corrupted."""


@dataclass(frozen=True)
class ExactValue:
    """A number with a binary64 shadow and, when available, its exact rational."""

    value: float
    rational: Fraction | None = None

    @property
    def exact(self) -> bool:
        return self.rational is not None

    @classmethod
    def from_fraction(cls, q: Fraction | int) -> "ExactValue":
        q = Fraction(q)
        return cls(float(q), q)

    @classmethod
    def from_float(cls, x: float) -> "ExactValue":
        return cls(float(x))

    @classmethod
    def log2_of(cls, q: Fraction) -> "ExactValue":
        """log2 of a positive rational; exact when q is a power of two."""
        if q <= 0:
            raise ValueError("log2 of a non-positive value")
        num, den = q.numerator, q.denominator
        if num & (num - 1) == 0 and den & (den - 1) == 0:
            return cls.from_fraction(num.bit_length() - den.bit_length())
        return cls(math.log2(num) - math.log2(den))

    def __add__(self, other: "ExactValue") -> "ExactValue":
        if self.exact and other.exact:
            return ExactValue.from_fraction(self.rational + other.rational)
        return ExactValue.from_float(self.value + other.value)

    def __mul__(self, other: "ExactValue") -> "ExactValue":
        if self.exact and other.exact:
            return ExactValue.from_fraction(self.rational * other.rational)
        return ExactValue.from_float(self.value * other.value)

    def as_str(self) -> str:
        if self.rational is not None:
            q = self.rational
            return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
        return repr(self.value)


def ratio(numerator: ExactValue, denominator: ExactValue) -> ExactValue | None:
    """numerator/denominator, exact when both sides are; None when undefined."""
    if denominator.value == 0 and (denominator.rational is None or denominator.rational == 0):
        return None
    if numerator.exact and denominator.exact:
        return ExactValue.from_fraction(numerator.rational / denominator.rational)
    return ExactValue.from_float(numerator.value / denominator.value)


@dataclass(frozen=True)
class MetricsReport:
    """Full spectral profile of one Boolean function."""

    n: int
    weight: int
    balanced: bool
    resilience_order: int
    plateaued: bool
    plateau_level: int | None
    bent: bool
    entropy: ExactValue
    min_entropy: ExactValue
    influence: ExactValue
    max_corr_sq: int
    ei_ratio: ExactValue | None
    mei_ratio: ExactValue | None


def _check_parseval(s: Spectrum) -> None:
    if not s.parseval_holds():
        raise SpectrumError(
            f"correlation squares sum to {int(np.dot(s.corr, s.corr))}, expected {4**s.n}"
        )


def entropy(s: Spectrum) -> ExactValue:
    """Shannon entropy of the squared-spectrum distribution, in bits.

    Exact only in the plateaued case with a power-of-two support, where it
    equals log2(support size); otherwise a compensated binary64 sum.
    """
    _check_parseval(s)
    nz = np.abs(s.corr[s.corr != 0]).astype(np.float64)
    support = nz.size
    levels = np.unique(nz)
    if levels.size == 1 and support & (support - 1) == 0:
        return ExactValue.from_fraction(support.bit_length() - 1)
    total = float(4**s.n)
    terms = (nz * nz) * (2.0 * np.log2(nz))
    if terms.size <= 1 << 16:
        acc = math.fsum(terms.tolist())
    else:
        acc = float(np.sum(terms, dtype=np.longdouble))
    return ExactValue.from_float(2 * s.n - acc / total)


def min_entropy(s: Spectrum) -> ExactValue:
    """-log2 of the largest squared normalised Walsh value."""
    _check_parseval(s)
    m = s.max_corr_sq
    return ExactValue.log2_of(Fraction(4**s.n, m))


def influence_spectral(s: Spectrum) -> ExactValue:
    """Total influence from the weight-weighted squared spectrum; always exact."""
    _check_parseval(s)
    wt = popcounts(s.size)
    total = int(np.dot(wt, s.corr * s.corr))
    return ExactValue.from_fraction(Fraction(total, 4**s.n))


def influence_probe(f: TruthTable) -> ExactValue:
    """Total influence by direct counting of output flips; always exact."""
    arr = f.bit_array()
    half_flips = 0
    for i in range(f.n):
        v = arr.reshape(-1, 2, 1 << i)
        half_flips += int(np.count_nonzero(v[:, 0, :] != v[:, 1, :]))
    return ExactValue.from_fraction(Fraction(half_flips, 1 << (f.n - 1)))


def resilience_order(s: Spectrum) -> int:
    """Largest t with a zero spectrum on all points of weight <= t; -1 if unbalanced."""
    wt = popcounts(s.size)
    nz = s.corr != 0
    return int(wt[nz].min()) - 1 if nz.any() else s.n - 1


def classify(s: Spectrum) -> MetricsReport:
    """All metrics, classification flags, and both conjecture ratios."""
    _check_parseval(s)
    corr0 = int(s.corr[0])
    weight = (s.size - corr0) // 2
    levels = np.unique(np.abs(s.corr[s.corr != 0]))
    plateaued = levels.size == 1
    plateau_level = int(levels[0]) if plateaued else None
    bent = plateaued and s.support_size == s.size
    h = entropy(s)
    hmin = min_entropy(s)
    inf = influence_spectral(s)
    return MetricsReport(
        n=s.n,
        weight=weight,
        balanced=corr0 == 0,
        resilience_order=resilience_order(s),
        plateaued=plateaued,
        plateau_level=plateau_level,
        bent=bent,
        entropy=h,
        min_entropy=hmin,
        influence=inf,
        max_corr_sq=s.max_corr_sq,
        ei_ratio=ratio(h, inf),
        mei_ratio=ratio(hmin, inf),
    )
