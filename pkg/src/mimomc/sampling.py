"""Randomized per-antenna acquisition and fusion-center assembly.

Each receive antenna keeps a seeded random subset of its samples (a random
subset of matched-filter outputs, or of Nyquist-rate samples) and forwards
the samples plus its seed.  The fusion center regenerates every index set
from the seeds alone and scatters the samples into a partially observed
matrix, so only ``L * n_rows`` samples plus ``n_rows`` seeds ever travel.

The random machinery is fixed by algorithm, not by library, so any other
implementation can reproduce masks bit-exactly:

* seed derivation: SplitMix64 finalizer applied per mixed-in word;
* index draws: xoshiro256** seeded by four SplitMix64 outputs;
* subset selection: partial Fisher-Yates shuffle, each swap partner drawn
  by rejection sampling of 64-bit words (no modulo bias).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signal_model import DataMatrix, Scheme

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """One SplitMix64 step: advance by the golden gamma, then avalanche."""
    x = (x + _SPLITMIX_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_row_seed(master_seed: int, antenna_index: int, pulse_index: int) -> int:
    """Derive a per-(antenna, pulse) seed from a master seed.

    Avalanches the master seed first, then folds each index word with a
    SplitMix64 avalanche in between.  The leading mix keeps structured
    inputs apart: without it, raw XOR folding would collide whenever
    ``master ^ antenna`` coincides across calls, which sequential master
    seeds hit constantly.  The mixing step is bijective, hence two calls
    differing in exactly one argument word never collide.
    """
    seed = _mix64(master_seed & _MASK64)
    seed = _mix64(seed ^ (antenna_index & _MASK64))
    seed = _mix64(seed ^ (pulse_index & _MASK64))
    return seed


class _Xoshiro256StarStar:
    """xoshiro256** PRNG; state expanded from a 64-bit seed via SplitMix64."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        state = seed & _MASK64
        words = []
        for _ in range(4):
            state = (state + _SPLITMIX_GAMMA) & _MASK64
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
            words.append(z ^ (z >> 31))
        self._s0, self._s1, self._s2, self._s3 = words

    def next64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        r = (s1 * 5) & _MASK64
        r = ((r << 7) | (r >> 57)) & _MASK64
        r = (r * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return r

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection; one draw minimum."""
        threshold = (1 << 64) - ((1 << 64) % bound)
        while True:
            v = self.next64()
            if v < threshold:
                return v % bound


def draw_indices(seed: int, universe_size: int, count: int) -> np.ndarray:
    """Draw a sorted, uniformly random size-``count`` subset of [0, U).

    Partial Fisher-Yates shuffle: for i = 0..count-1 swap position i with a
    position drawn uniformly from [i, U).  Deterministic per seed.
    """
    if count > universe_size:
        raise ValueError("cannot draw more indices than the universe holds")
    if count < 0 or universe_size < 0:
        raise ValueError("count and universe_size must be nonnegative")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    rng = _Xoshiro256StarStar(seed)
    pool = list(range(universe_size))
    for i in range(count):
        j = i + rng.below(universe_size - i)
        pool[i], pool[j] = pool[j], pool[i]
    return np.asarray(sorted(pool[:count]), dtype=np.int64)


@dataclass(frozen=True)
class ObservationMask:
    """Per-row observed column indices plus the seeds that generated them.

    Every row holds the same number of distinct sorted indices; the tuple
    layout keeps masks hashable and cheap to compare in tests.
    """

    n_rows: int
    n_cols: int
    per_row_indices: tuple[tuple[int, ...], ...]
    per_row_seed: tuple[int, ...]
    scheme: Scheme

    def __post_init__(self) -> None:
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("mask dimensions must be positive")
        if len(self.per_row_indices) != self.n_rows:
            raise ValueError("one index set per row required")
        if len(self.per_row_seed) != self.n_rows:
            raise ValueError("one seed per row required")
        counts = {len(idx) for idx in self.per_row_indices}
        if len(counts) != 1:
            raise ValueError("all rows must observe the same number of columns")
        for idx in self.per_row_indices:
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError("row indices must be sorted and distinct")
            if idx and (idx[0] < 0 or idx[-1] >= self.n_cols):
                raise ValueError("row indices out of column range")

    @property
    def count_per_row(self) -> int:
        return len(self.per_row_indices[0])

    @property
    def num_observed(self) -> int:
        return self.count_per_row * self.n_rows

    @property
    def occupancy(self) -> float:
        return self.num_observed / (self.n_rows * self.n_cols)

    def bool_array(self) -> np.ndarray:
        """Dense boolean indicator of the observed entries."""
        b = np.zeros((self.n_rows, self.n_cols), dtype=bool)
        for l, idx in enumerate(self.per_row_indices):
            b[l, list(idx)] = True
        return b


@dataclass(frozen=True)
class ObservedMatrix:
    """Dense matrix whose entries outside the mask are stored as zero."""

    values: np.ndarray
    mask: ObservationMask

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.shape != (self.mask.n_rows, self.mask.n_cols):
            raise ValueError("values shape must match the mask")


def make_mask(master_seed: int, n_rows: int, n_cols: int, count_per_row: int,
              scheme: Scheme, pulse_index: int = 1) -> ObservationMask:
    """Build the mask every antenna row would generate for one pulse.

    Row l gets seed derive_row_seed(master_seed, l, pulse_index), so each
    pulse sees an independent mask from the same master seed.
    """
    if not 1 <= count_per_row <= n_cols:
        raise ValueError("count_per_row must lie in [1, n_cols]")
    seeds = tuple(derive_row_seed(master_seed, l, pulse_index)
                  for l in range(n_rows))
    indices = tuple(tuple(int(i) for i in draw_indices(s, n_cols, count_per_row))
                    for s in seeds)
    return ObservationMask(n_rows=n_rows, n_cols=n_cols,
                           per_row_indices=indices, per_row_seed=seeds,
                           scheme=scheme)


def observe(full: DataMatrix | np.ndarray, mask: ObservationMask) -> ObservedMatrix:
    """Keep the masked entries of a full matrix, zero elsewhere."""
    values = np.asarray(getattr(full, "values", full))
    if values.shape != (mask.n_rows, mask.n_cols):
        raise ValueError("matrix shape must match the mask")
    kept = np.where(mask.bool_array(), values, 0.0).astype(complex)
    return ObservedMatrix(values=kept, mask=mask)


def extract_row_samples(full: DataMatrix | np.ndarray, mask: ObservationMask
                        ) -> list[tuple[int, np.ndarray, int]]:
    """What the antennas would forward: (row, samples in index order, seed)."""
    values = np.asarray(getattr(full, "values", full))
    if values.shape != (mask.n_rows, mask.n_cols):
        raise ValueError("matrix shape must match the mask")
    out = []
    for l, (idx, seed) in enumerate(zip(mask.per_row_indices, mask.per_row_seed)):
        out.append((l, values[l, list(idx)].copy(), seed))
    return out


def assemble_fusion_matrix(per_antenna: list[tuple[int, np.ndarray, int]],
                           scheme: Scheme, n_rows: int, n_cols: int
                           ) -> ObservedMatrix:
    """Rebuild the observed matrix from forwarded (row, samples, seed) triples.

    The index set of each row is regenerated from its seed; the j-th sample
    lands at column J_l(j).  Every row must appear exactly once and all rows
    must carry the same sample count.
    """
    if len(per_antenna) != n_rows:
        raise ValueError("need exactly one sample batch per receive antenna")
    rows_seen = sorted(entry[0] for entry in per_antenna)
    if rows_seen != list(range(n_rows)):
        raise ValueError("antenna rows must cover 0..n_rows-1 exactly once")
    counts = {len(entry[1]) for entry in per_antenna}
    if len(counts) != 1:
        raise ValueError("all antennas must forward the same sample count")
    count = counts.pop()
    if not 1 <= count <= n_cols:
        raise ValueError("forwarded sample count must lie in [1, n_cols]")
    values = np.zeros((n_rows, n_cols), dtype=complex)
    indices: list[tuple[int, ...]] = [()] * n_rows
    seeds: list[int] = [0] * n_rows
    for l, samples, seed in per_antenna:
        idx = draw_indices(seed, n_cols, count)
        values[l, idx] = samples
        indices[l] = tuple(int(i) for i in idx)
        seeds[l] = seed
    mask = ObservationMask(n_rows=n_rows, n_cols=n_cols,
                           per_row_indices=tuple(indices),
                           per_row_seed=tuple(seeds), scheme=scheme)
    return ObservedMatrix(values=values, mask=mask)


def mask_to_csv(mask: ObservationMask, path: str | Path) -> None:
    """Write a mask as one header row plus one (l, seed, count, indices...) row each."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mask", mask.scheme.value, mask.n_rows, mask.n_cols])
        for l, (seed, idx) in enumerate(zip(mask.per_row_seed,
                                            mask.per_row_indices)):
            writer.writerow([l, seed, len(idx), *idx])


def mask_from_csv(path: str | Path) -> ObservationMask:
    """Read a mask written by mask_to_csv."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["mask"]:
        raise ValueError("not a mask file")
    _, scheme_value, n_rows, n_cols = rows[0]
    indices: list[tuple[int, ...]] = []
    seeds: list[int] = []
    for row in rows[1:]:
        if not row:
            continue
        _, seed, count, *idx = row
        if int(count) != len(idx):
            raise ValueError("row index count does not match its declared count")
        seeds.append(int(seed))
        indices.append(tuple(int(i) for i in idx))
    return ObservationMask(n_rows=int(n_rows), n_cols=int(n_cols),
                           per_row_indices=tuple(indices),
                           per_row_seed=tuple(seeds),
                           scheme=Scheme(scheme_value))
