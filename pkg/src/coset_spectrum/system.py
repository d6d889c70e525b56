"""Linear model between coset correlations and the autocorrelation, and its LS inverse.

Lag bookkeeping used throughout: column ``j`` (0-based, ``j = 0..N-2``) of the
system matrix holds lag ``j + 1`` of the autocorrelation.  Autocorrelation
vectors are stacked as ``[r[0], r[1..N-1], r[-(N-1)..-1]]`` so index ``i``
carries lag ``i`` for ``i < N`` and lag ``i - (2N-1)`` otherwise; this is the
ordinary DFT index order of lags modulo ``2N-1``.

The DFT is the unnormalized forward transform with a negative exponent.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .ruler import DomainError, RulerBank, union_covers

PLUS_ZERO_LAG = 0  # r^{(m,m')}[0] with m > m'
MINUS_LAG_ONE = 1  # r^{(m,m')}[1] with m < m'


class RankDeficientError(DomainError):
    def __init__(self, missing_lags):
        self.missing_lags = sorted(missing_lags)
        super().__init__(f"system is rank deficient; uncovered lags: {self.missing_lags}")


@lru_cache(maxsize=None)
def pair_indices(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices ``(i, j)``, ``i < j``, in the fixed pair order.

    The plus block uses pairs ``(m, m') = (j, i)`` and the minus block uses
    ``(m, m') = (i, j)``; both orders are lexicographic in the smaller index.
    """
    i, j = np.triu_indices(m, 1)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Sparse form of the stacked selection-correlation matrix.

    Every row has a single one; ``columns[k]`` is where row ``k`` keeps it.
    Rows are ordered as all plus blocks (groups ``0..Z-1``) followed by all
    minus blocks.
    """

    bank: RulerBank
    groups: np.ndarray
    first: np.ndarray
    second: np.ndarray
    kinds: np.ndarray
    columns: np.ndarray

    @property
    def period(self) -> int:
        return self.bank.period

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.columns), self.period - 1

    @property
    def row_map(self) -> list[tuple[int, tuple[int, int], int]]:
        return [
            (int(z), (int(a), int(b)), int(k))
            for z, a, b, k in zip(self.groups, self.first, self.second, self.kinds)
        ]

    def lags(self) -> np.ndarray:
        return self.columns + 1

    @cached_property
    def counts(self) -> np.ndarray:
        return np.bincount(self.columns, minlength=self.period - 1)

    def dense(self) -> np.ndarray:
        mat = np.zeros(self.shape)
        mat[np.arange(len(self.columns)), self.columns] = 1.0
        return mat


@lru_cache(maxsize=64)
def build_system(bank: RulerBank) -> SystemMatrix:
    n, m = bank.period, bank.marks_per_pattern
    i, j = pair_indices(m)
    marks = np.array([p.marks for p in bank], dtype=np.int64)  # (Z, M)
    z_count = len(marks)
    z_idx = np.repeat(np.arange(z_count), len(i))

    # plus rows: pair (m, m') = (j, i), lag n_j - n_i in 1..N-1
    plus_lag = (marks[:, j] - marks[:, i]).ravel()
    # minus rows: pair (m, m') = (i, j), lag N + n_i - n_j in 1..N-1
    minus_lag = (n + marks[:, i] - marks[:, j]).ravel()

    groups = np.concatenate([z_idx, z_idx])
    first = np.concatenate([np.tile(j, z_count), np.tile(i, z_count)])
    second = np.concatenate([np.tile(i, z_count), np.tile(j, z_count)])
    kinds = np.concatenate([
        np.full(len(plus_lag), PLUS_ZERO_LAG),
        np.full(len(minus_lag), MINUS_LAG_ONE),
    ])
    columns = np.concatenate([plus_lag, minus_lag]) - 1
    for arr in (groups, first, second, kinds, columns):
        arr.setflags(write=False)
    return SystemMatrix(bank, groups, first, second, kinds, columns)


def check_full_column_rank(system: SystemMatrix) -> bool:
    return union_covers(system.bank)[0]


def reconstruct_r0(zero_lag_estimates: Sequence[float]) -> float:
    values = np.asarray(zero_lag_estimates, dtype=float)
    if values.size == 0:
        raise DomainError("need at least one zero-lag estimate")
    return float(values.mean())


def reconstruct_r1(system: SystemMatrix, stacked, *, method: str = "fast") -> np.ndarray:
    """LS estimate of ``r[1..N-1]`` from measurements stacked in row order.

    Rows are unit vectors, so the normal equations are diagonal and the LS
    solution is the per-lag average (``method="fast"``).  ``method="lstsq"``
    solves the same problem with a dense generic solver.
    """
    stacked = np.asarray(stacked, dtype=complex)
    if stacked.shape != (system.shape[0],):
        raise DomainError(f"expected {system.shape[0]} measurements, got shape {stacked.shape}")
    counts = system.counts
    if np.any(counts == 0):
        raise RankDeficientError(np.flatnonzero(counts == 0) + 1)
    if method == "fast":
        size = system.period - 1
        re = np.bincount(system.columns, weights=stacked.real, minlength=size)
        im = np.bincount(system.columns, weights=stacked.imag, minlength=size)
        return (re + 1j * im) / counts
    if method == "lstsq":
        sol, *_ = np.linalg.lstsq(system.dense(), stacked, rcond=None)
        return sol
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class AutocorrelationVector:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 1 or values.size % 2 == 0:
            raise DomainError("autocorrelation stack must have odd length 2N-1")
        object.__setattr__(self, "values", values)

    @property
    def period(self) -> int:
        return (self.values.size + 1) // 2

    def lags(self) -> np.ndarray:
        size = self.values.size
        idx = np.arange(size)
        return np.where(idx < self.period, idx, idx - size)

    def at(self, lag: int) -> complex:
        if abs(lag) >= self.period:
            raise DomainError(f"lag {lag} outside +-{self.period - 1}")
        return complex(self.values[lag % self.values.size])

    def is_hermitian(self, atol: float = 0.0) -> bool:
        v = self.values
        mirrored = np.conj(np.concatenate([v[:1], v[:0:-1]]))
        return bool(np.allclose(v, mirrored, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))

    def __len__(self):
        return self.values.size

    def real_view(self) -> tuple[np.ndarray, np.ndarray]:
        """Real part and a mask of bins whose real part is negative."""
        re = self.values.real.copy()
        return re, re < 0

    def frequencies(self) -> np.ndarray:
        """Bin frequencies in rad/sample, in ``[0, 2*pi)``."""
        size = self.values.size
        return 2 * np.pi * np.arange(size) / size


def assemble_rx(r0: float, r1) -> AutocorrelationVector:
    r1 = np.asarray(r1, dtype=complex)
    return AutocorrelationVector(np.concatenate([[r0], r1, np.conj(r1[::-1])]))


def autocorrelation_from_lags(rx_by_lag) -> AutocorrelationVector:
    """Stack a callable or array indexed by lag ``-(N-1)..N-1`` (centered)."""
    rx_by_lag = np.asarray(rx_by_lag, dtype=complex)
    n = (rx_by_lag.size + 1) // 2
    return AutocorrelationVector(np.concatenate([rx_by_lag[n - 1:], rx_by_lag[:n - 1]]))


def power_spectrum(rx: AutocorrelationVector) -> PowerSpectrum:
    return PowerSpectrum(np.fft.fft(rx.values))


def autocorrelation_from_spectrum(spectrum) -> AutocorrelationVector:
    """Inverse of ``power_spectrum``."""
    return AutocorrelationVector(np.fft.ifft(np.asarray(spectrum, dtype=complex)))
