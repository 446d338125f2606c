"""Exhaustive and class-restricted sweeps maximising spectral ratios.

Three function families are searchable: all functions on n <= 5 variables,
symmetric functions on n <= 16 (by weight-value vector), and rotation
symmetric functions on n <= 7 (by necklace-orbit assignment). A sweep either
maximises a metric or counts the functions achieving an exact threshold.

The general-family engine never transforms one function at a time: the two
2^(n-1)-point half spectra A, B of every function are precomputed once, the
full spectrum is [A+B | A-B], and both the largest squared correlation and
the weight-weighted spectral sum come from a handful of vectorised passes
per batch of 2^(2^(n-1)) functions.

Aggregation is associative and exact: float metric values only pre-filter
candidates, and the running maximum is decided on the exact integer key
(max corr^2, weighted spectral sum), so results are identical for every
chunking and worker count.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import struct
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import mpmath
import numpy as np

from .core import TruthTable, fwht_inplace, popcounts
from .metrics import ExactValue

FAMILIES = ("general", "symmetric", "rotsym")
METRICS = ("mei", "ei", "ot1-mei")
GENERAL_N_MAX = 5
SYMMETRIC_N_MAX = 16
SYMMETRIC_N_DEFAULT = 12
ROTSYM_N_MAX = 7

_FLOAT_TOL = 1e-9
_BATCH_CELLS = 1 << 22

CHECKPOINT_DIR_ENV = "WALSHLAB_CHECKPOINT_DIR"
_CKPT_MAGIC = b"WLSWEEP1"
_CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<8sIIII16s")


class SweepBoundError(ValueError):
    """A sweep was requested outside its family's feasible bounds."""


class CheckpointError(ValueError):
    """A checkpoint file is missing, corrupt, or belongs to another job."""


# --- Function classes ---------------------------------------------------------


def necklaces(n: int) -> tuple[tuple[int, ...], np.ndarray]:
    """Cyclic-rotation orbit representatives of n-bit strings, ascending.

    Returns the representatives (each the smallest integer in its orbit,
    i.e. the lexicographically minimal rotation) and an array mapping every
    n-bit input to its orbit index.
    """
    size = 1 << n
    orbit = np.full(size, -1, dtype=np.int64)
    reps: list[int] = []
    mask = size - 1
    for x in range(size):
        if orbit[x] >= 0:
            continue
        rid = len(reps)
        reps.append(x)
        y = x
        while orbit[y] < 0:
            orbit[y] = rid
            y = ((y >> 1) | ((y & 1) << (n - 1))) & mask
    return tuple(reps), orbit


@dataclass(frozen=True)
class SymmetricFunction:
    """Boolean function invariant under every input permutation.

    Bit w of ``value_vector`` is the output on inputs of weight w.
    """

    n: int
    value_vector: int

    def __post_init__(self):
        if not 0 <= self.value_vector < 1 << (self.n + 1):
            raise ValueError("value vector needs exactly n+1 bits")

    def expand(self) -> TruthTable:
        wt = popcounts(1 << self.n)
        vbits = np.array([(self.value_vector >> w) & 1 for w in range(self.n + 1)], dtype=np.uint8)
        return TruthTable.from_array(vbits[wt], self.n)


def and_function(n: int) -> SymmetricFunction:
    """The conjunction of all n variables, as a symmetric function."""
    return SymmetricFunction(n, 1 << n)


@dataclass(frozen=True)
class RotSymFunction:
    """Boolean function invariant under cyclic input shifts.

    Bit r of ``necklace_values`` is the output on orbit r, orbits indexed by
    their representatives in increasing order (see :func:`necklaces`).
    """

    n: int
    necklace_values: int

    def expand(self) -> TruthTable:
        reps, orbit = necklaces(self.n)
        vbits = np.array(
            [(self.necklace_values >> r) & 1 for r in range(len(reps))], dtype=np.uint8
        )
        return TruthTable.from_array(vbits[orbit], self.n)


# --- Jobs and results ----------------------------------------------------------

_KNOWN_FILTERS = ("balanced", "plateaued", "weight1-max-walsh")


def _parse_filters(filters: tuple[str, ...]) -> tuple[bool, bool, bool, int | None]:
    balanced = plateaued = weight1 = False
    resilient: int | None = None
    for f in filters:
        if f == "balanced":
            balanced = True
        elif f == "plateaued":
            plateaued = True
        elif f == "weight1-max-walsh":
            weight1 = True
        elif f.startswith("resilient:"):
            resilient = int(f.split(":", 1)[1])
            if resilient < 0:
                raise ValueError("resilience order filter must be >= 0")
        else:
            raise ValueError(f"unknown filter {f!r}; known: {_KNOWN_FILTERS} and resilient:<t>")
    return balanced, plateaued, weight1, resilient


@dataclass(frozen=True)
class SearchJob:
    """A sweep specification; identical jobs always produce identical results."""

    family: str
    n: int
    metric: str = "mei"
    filters: tuple[str, ...] = ()
    target: str = "maximize"  # "maximize" | "count"
    threshold: Fraction | None = None
    chunk_bits: int = 6
    witness_cap: int = 16
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.target not in ("maximize", "count"):
            raise ValueError("target must be 'maximize' or 'count'")
        if self.target == "count" and self.threshold is None:
            raise ValueError("count target needs a threshold")
        if not 0 <= self.chunk_bits <= 16:
            raise ValueError("chunk_bits must be in [0, 16]")
        if self.witness_cap < 0:
            raise ValueError("witness cap must be >= 0")
        _parse_filters(self.filters)
        bound = {"general": GENERAL_N_MAX, "symmetric": SYMMETRIC_N_MAX, "rotsym": ROTSYM_N_MAX}[
            self.family
        ]
        if not 1 <= self.n <= bound:
            raise SweepBoundError(f"{self.family} sweeps support 1 <= n <= {bound}, got {self.n}")

    def canonical(self) -> dict:
        thr = self.threshold
        return {
            "family": self.family,
            "n": self.n,
            "metric": self.metric,
            "filters": sorted(self.filters),
            "target": self.target,
            "threshold": None if thr is None else f"{thr.numerator}/{thr.denominator}",
            "chunk_bits": self.chunk_bits,
            "witness_cap": self.witness_cap,
        }

    def digest(self) -> bytes:
        payload = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(payload).digest()[:16]


@dataclass(frozen=True)
class SearchResult:
    """Aggregated outcome of a sweep; exact keys allow exact re-verification."""

    job: SearchJob
    functions_scanned: int
    best_ratio: ExactValue | None
    max_corr_sq: int | None
    influence_numerator: int | None  # influence of the maximisers = this / 4^n
    witness_total: int
    witnesses: tuple[str, ...]
    balanced_at_best: int
    count_achieving: int | None
    elapsed: float
    resumed_chunks: int = 0


def expand_witness(job: SearchJob, func_id: int) -> TruthTable:
    if job.family == "general":
        return TruthTable(job.n, func_id)
    if job.family == "symmetric":
        return SymmetricFunction(job.n, func_id).expand()
    return RotSymFunction(job.n, func_id).expand()


# --- Exact metric keys ----------------------------------------------------------


def _cmp_int(a, b) -> int:
    return (a > b) - (a < b)


def _dyadic_log2(m: int) -> int | None:
    return m.bit_length() - 1 if m & (m - 1) == 0 else None


def _perfect_power_base(m: int) -> tuple[int, int]:
    """Smallest base b with m = b^k; returns (b, k). m must be >= 2."""
    for k in range(m.bit_length() - 1, 1, -1):
        b = round(m ** (1.0 / k))
        for cand in (b - 1, b, b + 1):
            if cand >= 2 and cand**k == m:
                return cand, k
    return m, 1


def _log_values_equal(k1: tuple[int, int], k2: tuple[int, int], n: int, p: int) -> bool:
    """Exact test of e2*(2n - log2 M1) == e1*(2n - log2 M2) with e = i^p.

    Equivalent to M1^e2 == M2^e1 * 2^(2n(e2-e1)), decided by factor
    structure instead of the (astronomically large) integer powers.
    """
    (m1, i1), (m2, i2) = k1, k2
    e1, e2 = i1**p, i2**p
    a1, odd1 = (m1 & -m1).bit_length() - 1, m1 >> ((m1 & -m1).bit_length() - 1)
    a2, odd2 = (m2 & -m2).bit_length() - 1, m2 >> ((m2 & -m2).bit_length() - 1)
    if a1 * e2 != a2 * e1 + 2 * n * (e2 - e1):
        return False
    if odd1 == 1 or odd2 == 1:
        return odd1 == odd2
    b1, q1 = _perfect_power_base(odd1)
    b2, q2 = _perfect_power_base(odd2)
    return b1 == b2 and q1 * e2 == q2 * e1


def _cmp_log_keys(k1: tuple[int, int], k2: tuple[int, int], n: int, p: int) -> int:
    """Exact three-way compare of (2n - log2 M) / i^p values.

    Rational cases compare as fractions; provably-unequal irrational cases
    are separated at escalating precision (60 digits always suffices for
    the integer ranges this library produces, the loop is a safety net).
    """
    if k1 == k2:
        return 0
    (m1, i1), (m2, i2) = k1, k2
    j1, j2 = _dyadic_log2(m1), _dyadic_log2(m2)
    if j1 is not None and j2 is not None:
        return _cmp_int(Fraction(2 * n - j1, i1**p), Fraction(2 * n - j2, i2**p))
    if j1 is None and j2 is None and _log_values_equal(k1, k2, n, p):
        return 0
    for dps in (60, 120, 240, 480, 960):
        with mpmath.workdps(dps):
            a = (2 * n - mpmath.log(m1, 2)) / mpmath.mpf(i1) ** p
            b = (2 * n - mpmath.log(m2, 2)) / mpmath.mpf(i2) ** p
            if abs(a - b) > mpmath.mpf(10) ** (30 - dps):
                return _cmp_int(a, b)
    raise ArithmeticError(f"could not separate metric keys {k1} and {k2}")


def _key_value(metric: str, key: tuple[int, int], n: int) -> ExactValue:
    m, i = key
    j = _dyadic_log2(m)
    if metric == "mei":
        if j is not None:
            return ExactValue.from_fraction(Fraction((2 * n - j) * 4**n, i))
        return ExactValue.from_float((2 * n - math.log2(m)) * 4**n / i)
    if metric == "ot1-mei":
        if j is not None:
            return ExactValue.from_fraction(Fraction(2 * (2 * n - j) * 16**n, i * i))
        return ExactValue.from_float(2 * (2 * n - math.log2(m)) * (4**n / i) ** 2)
    raise ValueError(metric)


def _cmp_keys(metric: str, k1: tuple[int, int], k2: tuple[int, int], n: int) -> int:
    return _cmp_log_keys(k1, k2, n, 1 if metric == "mei" else 2)


def _key_equals_threshold(metric: str, key: tuple[int, int], n: int, thr: Fraction) -> bool:
    m, i = key
    j = _dyadic_log2(m)
    if j is None:
        return False  # the value is irrational, the threshold rational
    v = _key_value(metric, key, n)
    return v.rational == thr


# --- Aggregation -----------------------------------------------------------------


@dataclass
class _Agg:
    """Associative, exact accumulator for one chunk or a merge of chunks."""

    n: int
    metric: str
    target: str
    threshold: Fraction | None
    cap: int
    scanned: int = 0
    best_float: float = -math.inf
    best_key: tuple[int, int] | None = None
    count: int = 0
    balanced: int = 0
    witnesses: list[int] = field(default_factory=list)

    def _add_witnesses(self, ids: Iterable[int]) -> None:
        merged = sorted(set(self.witnesses).union(ids))
        self.witnesses = merged[: self.cap]

    def update(
        self,
        ids: np.ndarray,
        m_arr: np.ndarray,
        inf_arr: np.ndarray,
        val: np.ndarray,
        corr0: np.ndarray,
        scanned: int,
    ) -> None:
        self.scanned += scanned
        if ids.size == 0:
            return
        if self.target == "count":
            self._update_count(ids, m_arr, inf_arr, val, corr0)
        else:
            self._update_max(ids, m_arr, inf_arr, val, corr0)

    def _update_count(self, ids, m_arr, inf_arr, val, corr0) -> None:
        thr_f = float(self.threshold)
        cand = np.nonzero(np.abs(val - thr_f) <= _FLOAT_TOL)[0]
        if cand.size == 0:
            return
        if self.metric == "ei":
            hit = cand  # float tolerance decides; entropy sums admit no exact test
        else:
            keys = {}
            for r in cand:
                keys.setdefault((int(m_arr[r]), int(inf_arr[r])), []).append(r)
            hit = [
                r
                for key, rows in keys.items()
                if _key_equals_threshold(self.metric, key, self.n, self.threshold)
                for r in rows
            ]
        if len(hit):
            hit = np.asarray(hit, dtype=np.int64)
            self.count += int(hit.size)
            self.balanced += int(np.count_nonzero(corr0[hit] == 0))
            self._add_witnesses(int(ids[r]) for r in hit)

    def _update_max(self, ids, m_arr, inf_arr, val, corr0) -> None:
        mx = float(val.max())
        if not math.isfinite(mx):
            return  # only ratio-less (constant) functions in this batch
        thresh = max(mx, self.best_float) - _FLOAT_TOL
        cand = np.nonzero(val >= thresh)[0]
        if cand.size == 0:
            return
        if self.metric == "ei":
            self._update_max_float(ids, val, corr0, cand, mx)
            return
        groups: dict[tuple[int, int], list[int]] = {}
        for r in cand:
            groups.setdefault((int(m_arr[r]), int(inf_arr[r])), []).append(r)
        top_key = None
        for key in groups:
            if top_key is None or _cmp_keys(self.metric, key, top_key, self.n) > 0:
                top_key = key
        if self.best_key is not None:
            rel = _cmp_keys(self.metric, top_key, self.best_key, self.n)
            if rel < 0:
                return
            fresh = rel > 0
        else:
            fresh = True
        if fresh:
            self.best_key = top_key
            self.best_float = _key_value(self.metric, top_key, self.n).value
            self.count = 0
            self.balanced = 0
            self.witnesses = []
        rows: list[int] = []
        for key, members in groups.items():
            if _cmp_keys(self.metric, key, self.best_key, self.n) == 0:
                rows.extend(members)
        rows = np.asarray(rows, dtype=np.int64)
        self.count += int(rows.size)
        self.balanced += int(np.count_nonzero(corr0[rows] == 0))
        self._add_witnesses(int(ids[r]) for r in rows)

    def _update_max_float(self, ids, val, corr0, cand, mx) -> None:
        if mx < self.best_float:
            return
        if mx > self.best_float:
            self.best_float = mx
            self.count = 0
            self.balanced = 0
            self.witnesses = []
        rows = cand[val[cand] == self.best_float]
        self.count += int(rows.size)
        self.balanced += int(np.count_nonzero(corr0[rows] == 0))
        self._add_witnesses(int(ids[r]) for r in rows)

    def merge(self, other: "_Agg") -> None:
        self.scanned += other.scanned
        if other.count == 0 and other.best_key is None and other.best_float == -math.inf:
            return
        if self.target == "count":
            self.count += other.count
            self.balanced += other.balanced
            self._add_witnesses(other.witnesses)
            return
        if self.metric == "ei":
            if other.best_float < self.best_float:
                return
            if other.best_float > self.best_float:
                self.best_float = other.best_float
                self.count, self.balanced, self.witnesses = 0, 0, []
            self.count += other.count
            self.balanced += other.balanced
            self._add_witnesses(other.witnesses)
            return
        if other.best_key is None:
            return
        if self.best_key is None:
            rel = 1
        else:
            rel = _cmp_keys(self.metric, other.best_key, self.best_key, self.n)
        if rel < 0:
            return
        if rel > 0:
            self.best_key = other.best_key
            self.best_float = other.best_float
            self.count, self.balanced, self.witnesses = 0, 0, []
        self.count += other.count
        self.balanced += other.balanced
        self._add_witnesses(other.witnesses)


# --- Evaluation kernels -----------------------------------------------------------

_GENERAL_TABLES: dict[int, tuple] = {}


def _general_tables(n: int):
    cached = _GENERAL_TABLES.get(n)
    if cached is not None:
        return cached
    h = 1 << (n - 1)
    nh = 1 << h
    idx = np.arange(nh, dtype=np.uint32)
    bits = ((idx[:, None] >> np.arange(h, dtype=np.uint32)[None, :]) & 1).astype(np.int32)
    T = fwht_inplace(1 - 2 * bits)
    T64 = T.astype(np.int64)
    wt_half = popcounts(h)
    W = (T64 * T64) @ wt_half
    cached = (h, nh, T64, W, wt_half)
    _GENERAL_TABLES[n] = cached
    return cached


def _entropy_rows(c2_f: np.ndarray, n: int) -> np.ndarray:
    """Row entropies from float64 squared correlations (exact ints < 2^53)."""
    lg = np.log2(np.maximum(c2_f, 1.0))
    return 2 * n - (c2_f * lg).sum(axis=1) / float(4**n)


def _filter_rows(
    c2: np.ndarray,
    corr0: np.ndarray,
    m_arr: np.ndarray,
    wt_cols: np.ndarray,
    filters: tuple[str, ...],
    n: int,
) -> np.ndarray:
    balanced, plateaued, weight1, resilient = _parse_filters(filters)
    mask = np.ones(c2.shape[0], dtype=bool)
    if balanced:
        mask &= corr0 == 0
    if resilient is not None:
        cols = np.nonzero(wt_cols <= resilient)[0]
        mask &= (c2[:, cols] == 0).all(axis=1)
    if plateaued:
        mask &= ((c2 == 0) | (c2 == m_arr[:, None])).all(axis=1)
    if weight1:
        cols = np.nonzero(wt_cols == 1)[0]
        mask &= c2[:, cols].max(axis=1) == m_arr
    return mask


def _metric_values(metric: str, c2, m_arr, inf_arr, n: int) -> np.ndarray:
    tot = float(4**n)
    with np.errstate(divide="ignore", invalid="ignore"):
        if metric == "ei":
            h = _entropy_rows(c2.astype(np.float64), n)
            val = np.where(inf_arr > 0, h * tot / inf_arr, -np.inf)
        else:
            hinf = 2 * n - np.log2(m_arr.astype(np.float64))
            val = np.where(inf_arr > 0, hinf * tot / inf_arr, -np.inf)
            if metric == "ot1-mei":
                val = np.where(inf_arr > 0, 2.0 * val * tot / inf_arr, -np.inf)
    return val


def _eval_general_chunk(job: SearchJob, lo_start: int, lo_stop: int, agg: _Agg) -> None:
    n = job.n
    h, nh, T64, W, wt_half = _general_tables(n)
    balanced, plateaued, weight1, resilient = _parse_filters(job.filters)
    parseval_half = 2 * 4 ** (n - 1)
    wt_cols = np.concatenate([wt_half, wt_half + 1])  # [S | D] column weights
    hi_ids = np.arange(nh, dtype=np.int64) << h
    s_buf = np.empty_like(T64)
    d_buf = np.empty_like(T64)
    secondary = plateaued or weight1 or resilient is not None
    for lo in range(lo_start, lo_stop):
        A = T64[lo]
        corr0 = T64[:, 0] + A[0]
        if balanced:
            sel = np.nonzero(corr0 == 0)[0]
            if sel.size == 0:
                agg.scanned += nh
                continue
            t_sel, corr0, w_sel, ids = T64[sel], corr0[sel], W[sel], hi_ids[sel] | lo
            s = np.add(t_sel, A)
            d = np.subtract(A, t_sel)
        else:
            t_sel, w_sel, ids = T64, W, hi_ids | lo
            s = np.add(t_sel, A, out=s_buf)
            d = np.subtract(A, t_sel, out=d_buf)
        dot = t_sel @ A
        np.multiply(s, s, out=s)
        np.multiply(d, d, out=d)
        m_arr = np.maximum(s.max(axis=1), d.max(axis=1))
        inf_arr = 2 * (W[lo] + w_sel) + (parseval_half - 2 * dot)
        c2 = np.concatenate([s, d], axis=1) if (secondary or job.metric == "ei") else None
        if secondary:
            mask = np.ones(c2.shape[0], dtype=bool)
            if resilient is not None:
                cols = np.nonzero(wt_cols <= resilient)[0]
                mask &= (c2[:, cols] == 0).all(axis=1)
            if plateaued:
                mask &= ((c2 == 0) | (c2 == m_arr[:, None])).all(axis=1)
            if weight1:
                cols = np.nonzero(wt_cols == 1)[0]
                mask &= c2[:, cols].max(axis=1) == m_arr
            keep = np.nonzero(mask)[0]
            if keep.size == 0:
                agg.scanned += nh
                continue
            c2, corr0, m_arr, inf_arr, ids = (
                c2[keep], corr0[keep], m_arr[keep], inf_arr[keep], ids[keep],
            )
        val = _metric_values(job.metric, c2, m_arr, inf_arr, n)
        agg.update(ids, m_arr, inf_arr, val, corr0, nh)


def _eval_batch_chunk(job: SearchJob, id_start: int, id_stop: int, agg: _Agg) -> None:
    n = job.n
    size = 1 << n
    wt = popcounts(size)
    if job.family == "symmetric":
        nbits = n + 1
        expand_cols = wt
    else:
        reps, orbit = necklaces(n)
        nbits = len(reps)
        expand_cols = orbit
    rows_per_batch = max(1, _BATCH_CELLS // size)
    col_idx = np.arange(nbits, dtype=np.uint64)
    for start in range(id_start, id_stop, rows_per_batch):
        stop = min(start + rows_per_batch, id_stop)
        ids = np.arange(start, stop, dtype=np.int64)
        assign = ((ids[:, None].astype(np.uint64) >> col_idx[None, :]) & 1).astype(np.int32)
        tts = assign[:, expand_cols]
        corr = fwht_inplace(1 - 2 * tts)
        c2 = corr.astype(np.int64)
        np.multiply(c2, c2, out=c2)
        corr0 = corr[:, 0].astype(np.int64)
        m_arr = c2.max(axis=1)
        inf_arr = c2 @ wt
        if job.filters:
            mask = _filter_rows(c2, corr0, m_arr, wt, job.filters, n)
            sel = np.nonzero(mask)[0]
            if sel.size == 0:
                agg.scanned += int(ids.size)
                continue
            c2, corr0, m_arr, inf_arr, ids = c2[sel], corr0[sel], m_arr[sel], inf_arr[sel], ids[sel]
        val = _metric_values(job.metric, c2, m_arr, inf_arr, n)
        agg.update(ids, m_arr, inf_arr, val, corr0, int(stop - start))


def _unit_count(job: SearchJob) -> int:
    if job.family == "general":
        return 1 << (1 << (job.n - 1))  # number of half tables
    if job.family == "symmetric":
        return 1 << (job.n + 1)
    return 1 << len(necklaces(job.n)[0])


def _chunk_ranges(job: SearchJob) -> list[tuple[int, int]]:
    units = _unit_count(job)
    chunks = min(1 << job.chunk_bits, units)
    bounds = [units * i // chunks for i in range(chunks + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(chunks)]


def _run_chunk(job: SearchJob, chunk_idx: int) -> _Agg:
    agg = _Agg(job.n, job.metric, job.target, job.threshold, job.witness_cap)
    start, stop = _chunk_ranges(job)[chunk_idx]
    if job.family == "general":
        _eval_general_chunk(job, start, stop, agg)
    else:
        _eval_batch_chunk(job, start, stop, agg)
    return agg


# --- Checkpoints -------------------------------------------------------------------


def _record_struct(cap: int) -> struct.Struct:
    return struct.Struct(f"<QQQQQdQQQ{cap}Q")


def resolve_checkpoint_path(path: str) -> str:
    if os.path.isabs(path):
        return path
    return os.path.join(os.environ.get(CHECKPOINT_DIR_ENV, "."), path)


def _write_header(fh, job: SearchJob) -> None:
    rec = _record_struct(job.witness_cap)
    fh.write(
        _CKPT_HEADER.pack(_CKPT_MAGIC, _CKPT_VERSION, job.witness_cap, rec.size, 0, job.digest())
    )
    fh.flush()
    os.fsync(fh.fileno())


def _append_record(fh, job: SearchJob, chunk_idx: int, agg: _Agg) -> None:
    rec = _record_struct(job.witness_cap)
    wit = list(agg.witnesses[: job.witness_cap])
    wit += [0] * (job.witness_cap - len(wit))
    m, i = agg.best_key if agg.best_key is not None else (0, 0)
    fh.write(
        rec.pack(
            chunk_idx,
            agg.scanned,
            1 if agg.best_key is not None else 0,
            m,
            i,
            agg.best_float,
            agg.count,
            agg.balanced,
            len(agg.witnesses),
            *wit,
        )
    )
    fh.flush()
    os.fsync(fh.fileno())


def _load_checkpoint(path: str, job: SearchJob) -> dict[int, _Agg]:
    rec = _record_struct(job.witness_cap)
    done: dict[int, _Agg] = {}
    with open(path, "rb") as fh:
        header = fh.read(_CKPT_HEADER.size)
        if len(header) != _CKPT_HEADER.size:
            raise CheckpointError(f"{path}: truncated header")
        magic, version, cap, rec_size, _, digest = _CKPT_HEADER.unpack(header)
        if magic != _CKPT_MAGIC or version != _CKPT_VERSION:
            raise CheckpointError(f"{path}: not a sweep checkpoint (magic/version mismatch)")
        if cap != job.witness_cap or rec_size != rec.size:
            raise CheckpointError(f"{path}: record layout does not match the job")
        if digest != job.digest():
            raise CheckpointError(f"{path}: checkpoint belongs to a different job")
        while True:
            blob = fh.read(rec.size)
            if not blob:
                break
            if len(blob) != rec.size:
                raise CheckpointError(f"{path}: truncated record")
            fields = rec.unpack(blob)
            chunk_idx, scanned, has_best, m, i, best_float, count, balanced, nwit = fields[:9]
            wit = list(fields[9 : 9 + nwit])
            agg = _Agg(job.n, job.metric, job.target, job.threshold, job.witness_cap)
            agg.scanned = scanned
            agg.best_key = (m, i) if has_best else None
            agg.best_float = best_float if (has_best or job.metric == "ei") else -math.inf
            agg.count = count
            agg.balanced = balanced
            agg.witnesses = wit
            done[int(chunk_idx)] = agg
    return done


# --- Driver -------------------------------------------------------------------------


def _finalize(job: SearchJob, chunks: dict[int, _Agg], elapsed: float, resumed: int) -> SearchResult:
    total = _Agg(job.n, job.metric, job.target, job.threshold, job.witness_cap)
    for idx in sorted(chunks):
        total.merge(chunks[idx])
    best_ratio = None
    max_corr_sq = influence_numerator = None
    if job.target == "maximize":
        if job.metric == "ei":
            if total.best_float != -math.inf:
                best_ratio = ExactValue.from_float(total.best_float)
        elif total.best_key is not None:
            best_ratio = _key_value(job.metric, total.best_key, job.n)
            max_corr_sq, influence_numerator = total.best_key
    witnesses = tuple(expand_witness(job, w).to_hex() for w in total.witnesses)
    return SearchResult(
        job=job,
        functions_scanned=total.scanned,
        best_ratio=best_ratio,
        max_corr_sq=max_corr_sq,
        influence_numerator=influence_numerator,
        witness_total=total.count,
        witnesses=witnesses,
        balanced_at_best=total.balanced,
        count_achieving=total.count if job.target == "count" else None,
        elapsed=elapsed,
        resumed_chunks=resumed,
    )


def sweep(
    job: SearchJob,
    threads: int | None = None,
    allow_large: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> SearchResult:
    """Run a sweep, optionally in parallel and resumably.

    The outcome is a pure function of the job: worker count, chunk layout,
    and resume points cannot change it. Symmetric sweeps above n=12 must be
    enabled with ``allow_large``.
    """
    if job.family == "symmetric" and job.n > SYMMETRIC_N_DEFAULT and not allow_large:
        raise SweepBoundError(
            f"symmetric sweeps above n={SYMMETRIC_N_DEFAULT} are opt-in (allow_large=True)"
        )
    t0 = time.perf_counter()
    ranges = _chunk_ranges(job)
    done: dict[int, _Agg] = {}
    ckpt_path = None
    ckpt_fh = None
    if job.checkpoint_path is not None:
        ckpt_path = resolve_checkpoint_path(job.checkpoint_path)
        if os.path.exists(ckpt_path):
            done = _load_checkpoint(ckpt_path, job)
            ckpt_fh = open(ckpt_path, "ab")
        else:
            ckpt_fh = open(ckpt_path, "wb")
            _write_header(ckpt_fh, job)
    resumed = len(done)
    pending = [i for i in range(len(ranges)) if i not in done]
    try:
        if threads is None:
            threads = os.cpu_count() or 1
        if threads <= 1 or len(pending) <= 1:
            for i in pending:
                done[i] = _run_chunk(job, i)
                if ckpt_fh is not None:
                    _append_record(ckpt_fh, job, i, done[i])
                if progress is not None:
                    progress(len(done), len(ranges))
        else:
            if job.family == "general":
                _general_tables(job.n)  # built pre-fork so workers share it
            with ProcessPoolExecutor(max_workers=threads) as pool:
                futures = {pool.submit(_run_chunk, job, i): i for i in pending}
                for fut in as_completed(futures):
                    i = futures[fut]
                    done[i] = fut.result()
                    if ckpt_fh is not None:
                        _append_record(ckpt_fh, job, i, done[i])
                    if progress is not None:
                        progress(len(done), len(ranges))
    finally:
        if ckpt_fh is not None:
            ckpt_fh.close()
    return _finalize(job, done, time.perf_counter() - t0, resumed)


def sweep_symmetric(
    n: int, metric: str = "ei", threads: int | None = None, allow_large: bool = False
) -> SearchResult:
    """Scan all 2^(n+1) symmetric functions on n variables."""
    return sweep(SearchJob("symmetric", n, metric), threads=threads, allow_large=allow_large)


def sweep_rotsym(n: int, metric: str = "ei", threads: int | None = None) -> SearchResult:
    """Scan all rotation symmetric functions on n variables."""
    return sweep(SearchJob("rotsym", n, metric), threads=threads)


# --- Conjecture checks ----------------------------------------------------------------


@dataclass(frozen=True)
class ConjectureCheck:
    """Outcome of the symmetric-function ratio checks for one arity."""

    n: int
    and_ei_ratio: float
    and_ratio_below_4: bool
    ei_max: float
    ei_achievers: int
    ei_achievers_conjugate_to_and: bool
    mei_max: float
    mei_claim_holds: bool
    bent_achievers: int
    passed: bool
    counterexample: str | None


def _symmetric_rows(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-function (H, infnum, max c^2, corr0, bent) over all symmetric functions."""
    size = 1 << n
    wt = popcounts(size)
    nfuncs = 1 << (n + 1)
    rows_per_batch = max(1, _BATCH_CELLS // size)
    H = np.empty(nfuncs)
    infnum = np.empty(nfuncs, dtype=np.int64)
    m_arr = np.empty(nfuncs, dtype=np.int64)
    corr0 = np.empty(nfuncs, dtype=np.int64)
    bent = np.empty(nfuncs, dtype=bool)
    cols = np.arange(n + 1, dtype=np.uint64)
    for start in range(0, nfuncs, rows_per_batch):
        stop = min(start + rows_per_batch, nfuncs)
        ids = np.arange(start, stop, dtype=np.uint64)
        assign = ((ids[:, None] >> cols[None, :]) & 1).astype(np.int32)
        corr = fwht_inplace(1 - 2 * assign[:, wt])
        c2 = corr.astype(np.int64)
        np.multiply(c2, c2, out=c2)
        sl = slice(start, stop)
        H[sl] = _entropy_rows(c2.astype(np.float64), n)
        infnum[sl] = c2 @ wt
        m_arr[sl] = c2.max(axis=1)
        corr0[sl] = corr[:, 0]
        bent[sl] = (c2 == size).all(axis=1)
    return H, infnum, m_arr, corr0, bent


def _sym_c2(n: int, value_vector: int) -> np.ndarray:
    s = SymmetricFunction(n, value_vector).expand()
    corr = fwht_inplace(s.signs().astype(np.int64))
    return corr * corr


def _mp_ei(c2: np.ndarray, infnum: int, n: int) -> mpmath.mpf:
    tot = mpmath.mpf(4) ** n
    h = mpmath.mpf(0)
    for v in np.unique(c2[c2 > 0]):
        count = int(np.count_nonzero(c2 == v))
        h += count * mpmath.mpf(int(v)) * mpmath.log(int(v), 2)
    h = 2 * n - h / tot
    return h * tot / infnum


def check_conjecture(ns: Iterable[int], allow_large: bool = False) -> list[ConjectureCheck]:
    """Exhaustively test both symmetric-function ratio claims for each arity.

    Claim 1: the all-variable conjunction maximises the entropy/influence
    ratio, uniquely up to input/output complementation (which preserves
    squared spectra), and its ratio is below 4. Claim 2: the min-entropy/
    influence ratio never exceeds 2, with equality exactly at bent functions
    (even n) and strictly below 2 for odd n. A counterexample is reported as
    a result, not an error.
    """
    out = []
    for n in ns:
        if not 1 <= n <= SYMMETRIC_N_MAX:
            raise SweepBoundError(f"symmetric checks support 1 <= n <= {SYMMETRIC_N_MAX}")
        if n > SYMMETRIC_N_DEFAULT and not allow_large:
            raise SweepBoundError(
                f"symmetric checks above n={SYMMETRIC_N_DEFAULT} are opt-in (allow_large=True)"
            )
        out.append(_check_one(n))
    return out


def _check_one(n: int) -> ConjectureCheck:
    size = 1 << n
    tot = float(4**n)
    H, infnum, m_arr, corr0, bent = _symmetric_rows(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ei = np.where(infnum > 0, H * tot / infnum, -np.inf)
        mei = np.where(infnum > 0, (2 * n - np.log2(m_arr.astype(float))) * tot / infnum, -np.inf)
    and_id = and_function(n).value_vector
    and_c2 = _sym_c2(n, and_id)
    and_ei = float(ei[and_id])
    and_below_4 = and_ei < 4.0 - 1e-9
    counterexample = None

    ei_max = float(ei.max())
    cand = np.nonzero(ei >= ei_max - _FLOAT_TOL)[0]
    achievers = 0
    all_conjugate = True
    with mpmath.workdps(60):
        and_mp = _mp_ei(and_c2, int(infnum[and_id]), n)
        for vid in cand:
            c2 = _sym_c2(n, int(vid))
            if np.array_equal(c2, and_c2):
                achievers += 1
                continue
            other = _mp_ei(c2, int(infnum[vid]), n)
            if other >= and_mp - mpmath.mpf(10) ** -40:
                all_conjugate = False
                counterexample = SymmetricFunction(n, int(vid)).expand().to_hex()
    ei_part = all_conjugate and abs(ei_max - and_ei) <= _FLOAT_TOL and and_below_4

    mei_max = float(mei.max())
    mei_part = True
    bent_achievers = int(np.count_nonzero(bent))
    if n % 2 == 0 and bent_achievers:
        # every bent row must sit exactly at 2, everything else strictly below
        bent_exact = bool(
            (m_arr[bent] == size).all() and (2 * infnum[bent] == n * 4**n).all()
        )
        mei_part &= bent_exact
        rest = np.nonzero(~bent)[0]
        strict = _all_mei_strictly_below(rest, mei, m_arr, infnum, n, 2)
    else:
        bent_achievers = 0
        strict = _all_mei_strictly_below(np.arange(mei.size), mei, m_arr, infnum, n, 2)
    if strict is not True:
        mei_part = False
        counterexample = SymmetricFunction(n, int(strict)).expand().to_hex()

    return ConjectureCheck(
        n=n,
        and_ei_ratio=and_ei,
        and_ratio_below_4=and_below_4,
        ei_max=ei_max,
        ei_achievers=achievers,
        ei_achievers_conjugate_to_and=all_conjugate,
        mei_max=mei_max,
        mei_claim_holds=mei_part,
        bent_achievers=bent_achievers,
        passed=ei_part and mei_part,
        counterexample=counterexample,
    )


def _all_mei_strictly_below(rows, mei, m_arr, infnum, n, bound: int):
    """True when every row's mei ratio is strictly below the bound; else a row id."""
    near = rows[mei[rows] >= bound - _FLOAT_TOL]
    for r in near:
        m, i = int(m_arr[r]), int(infnum[r])
        j = _dyadic_log2(m)
        if j is not None:
            if Fraction((2 * n - j) * 4**n, i) >= bound:
                return int(r)
        else:
            with mpmath.workdps(60):
                if (2 * n - mpmath.log(m, 2)) * mpmath.mpf(4**n) / i >= bound:
                    return int(r)
    return True
