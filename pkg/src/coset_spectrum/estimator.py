"""Coset compression and unbiased sample correlations per sensor group."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ruler import CosetPattern, DomainError, RulerBank
from .system import (
    AutocorrelationVector,
    PowerSpectrum,
    assemble_rx,
    build_system,
    pair_indices,
    power_spectrum,
    reconstruct_r0,
    reconstruct_r1,
)


@dataclass(frozen=True, eq=False)
class SensorBlockSeries:
    group: int
    sensor: int
    samples: np.ndarray  # (L, N)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 2:
            raise DomainError("blocks must be an L x N matrix")
        if samples.shape[0] < 2:
            raise DomainError(f"need at least 2 blocks, got {samples.shape[0]}")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_sequence(cls, sequence, period: int, blocks: int, *, group: int = 0, sensor: int = 0):
        """Cut the first ``blocks * period`` samples of a sequence into blocks."""
        sequence = np.asarray(sequence)
        need = blocks * period
        if sequence.size < need:
            raise DomainError(f"need {need} samples for L={blocks}, N={period}; got {sequence.size}")
        return cls(group, sensor, sequence[:need].reshape(blocks, period))

    @property
    def period(self) -> int:
        return self.samples.shape[1]

    @property
    def blocks(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class CompressedSeries:
    group: int
    sensor: int
    pattern: CosetPattern
    samples: np.ndarray  # (L, M)

    @property
    def blocks(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class GroupCorrelations:
    group: int
    r0_zero_lag: np.ndarray
    plus_zero_lag: np.ndarray
    minus_lag_one: np.ndarray
    sample_counts: tuple[int, int]

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.r0_zero_lag, self.plus_zero_lag, self.minus_lag_one])


def compress(blocks: SensorBlockSeries, pattern: CosetPattern) -> CompressedSeries:
    if blocks.period != pattern.period:
        raise DomainError(f"block length {blocks.period} != pattern period {pattern.period}")
    return CompressedSeries(blocks.group, blocks.sensor, pattern, blocks.samples[:, list(pattern.marks)])


def sample_correlations(series: Sequence[CompressedSeries], lag: int) -> np.ndarray:
    """Unbiased estimate of ``E[y_m[l'] y_m'*[l'-lag]]`` for all pairs, lag in {-1, 0, 1}.

    Entry ``[m, m']`` averages over all sensors of the group and all block
    indices where both samples exist.  The lag-0 matrix is returned exactly
    Hermitian.
    """
    if not series:
        raise DomainError("need at least one sensor series")
    if lag not in (-1, 0, 1):
        raise DomainError(f"only lags -1, 0, 1 are needed, got {lag}")
    pattern = series[0].pattern
    n_blocks = series[0].blocks
    for s in series:
        if s.pattern != pattern:
            raise DomainError("all sensors of a group must share one pattern")
        if s.blocks != n_blocks:
            raise DomainError("all sensors of a group must have the same number of blocks")
    if n_blocks <= abs(lag):
        raise DomainError(f"L={n_blocks} too short for lag {lag}")

    y = np.stack([s.samples for s in series])  # (P, L, M)
    if lag == -1:
        return sample_correlations(series, 1).conj().T
    lead = y[:, lag:, :].reshape(-1, y.shape[2])
    trail = y[:, :y.shape[1] - lag, :].reshape(-1, y.shape[2])
    corr = lead.T @ trail.conj() / (len(series) * (n_blocks - lag))
    if lag == 0:
        lower = np.tril(corr, -1)
        corr = lower + lower.conj().T + np.diag(corr.diagonal().real)
    return corr


def stack_group(lag0: np.ndarray, lag1: np.ndarray, *, group: int = 0, sample_counts=(0, 0)) -> GroupCorrelations:
    m = lag0.shape[0]
    i, j = pair_indices(m)
    return GroupCorrelations(
        group=group,
        r0_zero_lag=lag0.diagonal().real.copy(),
        plus_zero_lag=lag0[j, i].copy(),
        minus_lag_one=lag1[i, j].copy(),
        sample_counts=tuple(sample_counts),
    )


def estimate_group(series: Sequence[CompressedSeries], *, group: int | None = None) -> GroupCorrelations:
    lag0 = sample_correlations(series, 0)
    lag1 = sample_correlations(series, 1)
    if group is None:
        group = series[0].group
    return stack_group(lag0, lag1, group=group, sample_counts=(len(series), series[0].blocks))


def exact_group_correlations(rx: AutocorrelationVector, pattern: CosetPattern, *, group: int = 0) -> GroupCorrelations:
    """Noise-free group correlations from a known autocorrelation.

    Uses ``r_y^{(m,m')}[l] = r_x[l*N + n_m - n_m']``.
    """
    n = pattern.period
    if rx.period != n:
        raise DomainError(f"autocorrelation period {rx.period} != pattern period {n}")
    marks = np.array(pattern.marks)
    size = rx.values.size
    diff = marks[:, None] - marks[None, :]
    lag0 = rx.values[diff % size]
    # lag-1 values are only consumed for m < m', where n + n_m - n_m' lies in 1..N-1
    lag1 = np.zeros_like(lag0)
    i, j = pair_indices(len(marks))
    lag1[i, j] = rx.values[(n + marks[i] - marks[j]) % size]
    lag0 = lag0.copy()
    np.fill_diagonal(lag0, rx.values[0].real)
    return stack_group(lag0, lag1, group=group)


def fuse(bank: RulerBank, groups: Sequence[GroupCorrelations], *, method: str = "fast") -> AutocorrelationVector:
    """Fusion-centre solve: LS for lags 0 and 1..N-1, Hermitian extension."""
    if len(groups) != bank.num_groups:
        raise DomainError(f"bank has {bank.num_groups} groups, got {len(groups)} correlation sets")
    system = build_system(bank)
    r0 = reconstruct_r0(np.concatenate([g.r0_zero_lag for g in groups]))
    stacked = np.concatenate([g.plus_zero_lag for g in groups] + [g.minus_lag_one for g in groups])
    r1 = reconstruct_r1(system, stacked, method=method)
    return assemble_rx(r0, r1)


def estimate_spectrum(bank: RulerBank, group_blocks: Sequence[Sequence[SensorBlockSeries]]) -> tuple[PowerSpectrum, AutocorrelationVector, list[GroupCorrelations]]:
    """Run compression, correlation estimation and fusion for a whole bank.

    ``group_blocks[z]`` lists the Nyquist block series of the sensors in
    group ``z``.
    """
    groups = []
    for z, (pattern, sensors) in enumerate(zip(bank, group_blocks, strict=True)):
        compressed = [compress(s, pattern) for s in sensors]
        groups.append(estimate_group(compressed, group=z))
    rx = fuse(bank, groups)
    return power_spectrum(rx), rx, groups
