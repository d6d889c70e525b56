"""Monte-Carlo study: compressive vs. Nyquist-rate spectrum estimates.

Each run draws fresh user signals, fading and noise; the compressed bank and
the all-cosets baseline see the same realization.  Run ``r`` of every grid
point uses the seed ``SeedSequence(rng_seed, spawn_key=(r,))`` so grid points
sharing ``(P, L)`` are evaluated on identical data (paired comparisons).
"""

from __future__ import annotations

import logging
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import signal

from .design import design_for_groups
from .estimator import SensorBlockSeries, estimate_spectrum, exact_group_correlations, fuse
from .ruler import CosetPattern, DomainError, RulerBank, lower_bound_z, union_covers
from .system import AutocorrelationVector, PowerSpectrum, autocorrelation_from_lags, power_spectrum

log = logging.getLogger(__name__)

THREADS_ENV = "COSET_SPECTRUM_THREADS"


def dbm_to_linear(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class UserBand:
    band_lo: float
    band_hi: float
    power_dbm: float  # power density per rad/sample
    path_loss_db: float = 0.0

    def __post_init__(self):
        if not self.band_hi > self.band_lo:
            raise DomainError(f"empty band [{self.band_lo}, {self.band_hi}]")
        if self.band_lo < -math.pi - 1e-12 or self.band_hi > math.pi + 1e-12:
            raise DomainError(f"band [{self.band_lo}, {self.band_hi}] outside [-pi, pi]")

    @property
    def width(self) -> float:
        return self.band_hi - self.band_lo

    @property
    def center(self) -> float:
        return 0.5 * (self.band_lo + self.band_hi)


# Six users of the reference scenario: band (rad/sample), density (dBm per
# rad/sample), path loss including shadowing (dB).
TABLE1_USERS = (
    UserBand(-8 * math.pi / 9, -7 * math.pi / 9, 38.0, -18.0),
    UserBand(-6 * math.pi / 9, -5 * math.pi / 9, 40.0, -19.0),
    UserBand(1 * math.pi / 9, 2 * math.pi / 9, 34.0, -11.0),
    UserBand(3 * math.pi / 9, 4 * math.pi / 9, 34.0, -17.0),
    UserBand(4 * math.pi / 9, 5 * math.pi / 9, 32.0, -13.0),
    UserBand(6 * math.pi / 9, 7 * math.pi / 9, 35.0, -19.0),
)


@dataclass(frozen=True)
class SimConfig:
    n: int = 103
    m: int = 3
    z: int = 17
    p: int = 4
    l: int = 64
    users: tuple[UserBand, ...] = TABLE1_USERS
    noise_power_dbm: float = 16.0
    sensor_offset_samples: int = 14
    rng_seed: int = 0
    runs: int = 100
    bank: RulerBank | None = None
    exact: bool = False

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if self.n < 2:
            raise DomainError("N must be at least 2")
        if self.p < 1 or self.z < 1 or self.runs < 1:
            raise DomainError("P, Z and runs must be positive")
        if self.l < 2:
            raise DomainError("L must be at least 2")
        users = sorted(self.users, key=lambda u: u.band_lo)
        for a, b in zip(users, users[1:]):
            if b.band_lo < a.band_hi - 1e-12:
                raise DomainError("user bands overlap")
        if self.bank is not None:
            if self.bank.period != self.n or self.bank.num_groups != self.z:
                raise DomainError("bank does not match N/Z of the configuration")

    @property
    def sensors(self) -> int:
        return self.z * self.p

    def resolved_bank(self) -> RulerBank:
        if self.bank is not None and self.bank.marks_per_pattern == self.m:
            return self.bank
        return design_for_groups(self.n, self.m, self.z)


@dataclass(frozen=True)
class NmseResult:
    m: int
    p: int
    l: int
    nmse: float
    runs: int
    baseline_id: str = "nyquist-all-cosets"
    per_run: tuple[float, ...] = field(default=(), repr=False)


def bandpass_taps(user: UserBand, taps: int) -> np.ndarray:
    """Linear-phase windowed-sinc band-pass filter with unit gain at band center."""
    half_width = user.width / 2
    if half_width >= math.pi - 1e-12:
        proto = signal.unit_impulse(taps, "mid")
    else:
        proto = signal.firwin(taps, half_width / math.pi, window="hamming", scale=False)
    n = np.arange(taps) - (taps - 1) / 2
    h = proto * np.exp(1j * user.center * n)
    gain = np.sum(h * np.exp(-1j * user.center * n))
    return h / gain


def _complex_gaussian(rng: np.random.Generator, size, variance: float) -> np.ndarray:
    z = rng.standard_normal((*np.atleast_1d(size), 2))
    return math.sqrt(variance / 2) * (z[..., 0] + 1j * z[..., 1])


def sequence_length(config: SimConfig) -> int:
    """Samples needed per user so every staggered sensor gets ``L*N`` samples."""
    return config.l * config.n + config.sensor_offset_samples * (config.sensors - 1)


def generate_user_signals(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """One row per user: band-limited circular Gaussian noise at the user's density.

    The white input has variance ``2*pi*density`` so that the filtered output
    has power spectral density ``density`` (per rad/sample) across the band.
    """
    length = sequence_length(config)
    out = np.zeros((len(config.users), length), dtype=complex)
    burn = config.n
    for k, user in enumerate(config.users):
        h = bandpass_taps(user, config.n)
        white = _complex_gaussian(rng, length + burn, 2 * math.pi * dbm_to_linear(user.power_dbm))
        out[k] = signal.lfilter(h, 1.0, white)[burn:]
    return out


def draw_fading(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh block-fading coefficients, shape ``(users, sensors)``."""
    coeffs = _complex_gaussian(rng, (len(config.users), config.sensors), 1.0)
    scale = np.sqrt([db_to_linear(u.path_loss_db) for u in config.users])
    return coeffs * scale[:, None]


def apply_channel(user_signals: np.ndarray, sensor: int, config: SimConfig, rng: np.random.Generator | None,
                  fading: np.ndarray | None = None, *, noise: bool = True) -> np.ndarray:
    """Received Nyquist samples of one sensor.

    Sensor ``s`` observes the composite signal delayed by
    ``s * sensor_offset_samples``.  ``fading`` is a per-user vector for this
    sensor; ``rng`` is only used for noise.
    """
    need = config.l * config.n
    start = config.sensor_offset_samples * (config.sensors - 1 - sensor)
    if start < 0 or start + need > user_signals.shape[1]:
        raise DomainError(f"sensor {sensor} outside the generated window")
    if fading is None:
        fading = np.ones(user_signals.shape[0])
    received = np.asarray(fading) @ user_signals[:, start:start + need] if len(user_signals) else np.zeros(need, complex)
    if noise:
        received = received + _complex_gaussian(rng, need, dbm_to_linear(config.noise_power_dbm))
    return received


def _group_blocks(received: Sequence[np.ndarray], config: SimConfig):
    return [
        [
            SensorBlockSeries.from_sequence(received[z * config.p + q], config.n, config.l, group=z, sensor=q)
            for q in range(config.p)
        ]
        for z in range(config.z)
    ]


def full_bank(n: int, z: int) -> RulerBank:
    return RulerBank(n, (CosetPattern.full(n),) * z)


def nyquist_baseline(received: Sequence[np.ndarray], config: SimConfig) -> PowerSpectrum:
    """Same estimator, LS and DFT with all ``N`` cosets active in every group."""
    spectrum, _, _ = estimate_spectrum(full_bank(config.n, config.z), _group_blocks(received, config))
    return spectrum


def compressed_estimate(received: Sequence[np.ndarray], bank: RulerBank, config: SimConfig) -> PowerSpectrum:
    spectrum, _, _ = estimate_spectrum(bank, _group_blocks(received, config))
    return spectrum


def nmse(estimate: PowerSpectrum, baseline: PowerSpectrum) -> float:
    est = np.asarray(getattr(estimate, "values", estimate))
    ref = np.asarray(getattr(baseline, "values", baseline))
    if est.shape != ref.shape:
        raise DomainError(f"length mismatch {est.shape} vs {ref.shape}")
    denom = np.vdot(ref, ref).real
    if denom == 0:
        raise DomainError("baseline spectrum is identically zero")
    diff = est - ref
    return float(np.vdot(diff, diff).real / denom)


def analytic_autocorrelation(config: SimConfig, *, noise: bool = True) -> AutocorrelationVector:
    """Expected autocorrelation of a received sequence (fading averaged out)."""
    n = config.n
    lags = np.zeros(2 * n - 1, dtype=complex)  # centered, lag -(N-1)..N-1
    for user in config.users:
        h = bandpass_taps(user, n)
        var = 2 * math.pi * dbm_to_linear(user.power_dbm) * db_to_linear(user.path_loss_db)
        lags += var * np.convolve(h, np.conj(h[::-1]))
    if noise:
        lags[n - 1] += dbm_to_linear(config.noise_power_dbm)
    return autocorrelation_from_lags(lags)


def run_seed(config: SimConfig, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(config.rng_seed, spawn_key=(run,))


def simulate_received(config: SimConfig, run: int) -> list[np.ndarray]:
    users_ss, fading_ss, noise_ss = run_seed(config, run).spawn(3)
    user_signals = generate_user_signals(config, np.random.default_rng(users_ss))
    fading = draw_fading(config, np.random.default_rng(fading_ss))
    noise_rngs = [np.random.default_rng(s) for s in noise_ss.spawn(config.sensors)]
    return [apply_channel(user_signals, s, config, noise_rngs[s], fading[:, s]) for s in range(config.sensors)]


def _run_once(args) -> list[float]:
    config, banks, run = args
    if config.exact:
        rx = analytic_autocorrelation(config)
        base = power_spectrum(fuse(full_bank(config.n, config.z),
                                   [exact_group_correlations(rx, CosetPattern.full(config.n), group=z)
                                    for z in range(config.z)]))
        out = []
        for bank in banks:
            est = power_spectrum(fuse(bank, [exact_group_correlations(rx, p, group=z) for z, p in enumerate(bank)]))
            out.append(nmse(est, base))
        return out
    received = simulate_received(config, run)
    base = nyquist_baseline(received, config)
    return [nmse(compressed_estimate(received, bank, config), base) for bank in banks]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _evaluate(config: SimConfig, banks: Sequence[RulerBank]) -> np.ndarray:
    """Per-run NMSE for each bank, shape ``(runs, len(banks))``."""
    jobs = [(config, tuple(banks), r) for r in range(config.runs)]
    workers = min(worker_count(), config.runs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_once, jobs))
    else:
        rows = [_run_once(job) for job in jobs]
    return np.array(rows, dtype=float).reshape(config.runs, len(banks))


def simulate(config: SimConfig) -> NmseResult:
    bank = config.resolved_bank()
    covered, missing = union_covers(bank)
    if not covered:
        raise DomainError(f"bank does not cover distances {sorted(missing)}")
    per_run = _evaluate(config, [bank])[:, 0]
    return NmseResult(config.m, config.p, config.l, float(per_run.mean()), config.runs, per_run=tuple(per_run))


def run_sweep(config: SimConfig, ms: Iterable[int] | None = None, ps: Iterable[int] | None = None,
              ls: Iterable[int] | None = None) -> list[NmseResult]:
    """NMSE over the grid ``ms x ps x ls``; missing axes use the config value.

    Grid points whose ``M`` admits no covering bank with ``config.z`` groups
    are logged and skipped.
    """
    ms = list(ms or [config.m])
    ps = list(ps or [config.p])
    ls = list(ls or [config.l])
    banks = {}
    for m in ms:
        try:
            if m < 2 or m > config.n or lower_bound_z(config.n, m) > config.z:
                raise DomainError(f"M={m} cannot cover N={config.n} with Z={config.z}")
            if config.bank is not None and config.bank.marks_per_pattern == m:
                banks[m] = config.bank
            else:
                banks[m] = design_for_groups(config.n, m, config.z)
        except DomainError as exc:
            log.warning("skipping grid point: %s", exc)
    results = []
    for p in ps:
        for l in ls:
            cell = replace(config, p=p, l=l, bank=None)
            if not banks:
                continue
            per_run = _evaluate(cell, list(banks.values()))
            for k, m in enumerate(banks):
                values = per_run[:, k]
                results.append(NmseResult(m, p, l, float(values.mean()), cell.runs, per_run=tuple(values)))
    results.sort(key=lambda r: (r.m, r.p, r.l))
    return results


# -- configuration files ------------------------------------------------------

_PI_EXPR = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(value) -> float:
    """Accept numbers or strings such as ``"-8pi/9"`` / ``"pi"``."""
    if isinstance(value, (int, float)):
        return float(value)
    match = _PI_EXPR.match(str(value))
    if not match:
        return float(value)
    coef, denom = match.groups()
    if coef in ("", "+"):
        scale = 1.0
    elif coef == "-":
        scale = -1.0
    else:
        scale = float(coef)
    return scale * math.pi / (float(denom) if denom else 1.0)


def config_from_dict(data: dict, bank: RulerBank | None = None) -> SimConfig:
    known = {"N", "M", "Z", "P", "L", "users", "noise_power_dbm", "sensor_offset_samples",
             "rng_seed", "runs", "exact", "bank"}
    unknown = set(data) - known
    if unknown:
        raise DomainError(f"unknown configuration keys: {sorted(unknown)}")
    kwargs = {}
    for key, attr in (("N", "n"), ("M", "m"), ("Z", "z"), ("P", "p"), ("L", "l"), ("runs", "runs"),
                      ("rng_seed", "rng_seed"), ("sensor_offset_samples", "sensor_offset_samples")):
        if key in data:
            kwargs[attr] = int(data[key])
    if "noise_power_dbm" in data:
        kwargs["noise_power_dbm"] = float(data["noise_power_dbm"])
    if "exact" in data:
        kwargs["exact"] = bool(data["exact"])
    if "users" in data:
        kwargs["users"] = tuple(
            UserBand(parse_angle(u["band_lo"]), parse_angle(u["band_hi"]), float(u["power_dbm"]),
                     float(u.get("path_loss_db", 0.0)))
            for u in data["users"]
        )
    if bank is not None:
        kwargs["bank"] = bank
        kwargs.setdefault("n", bank.period)
        kwargs.setdefault("z", bank.num_groups)
        kwargs.setdefault("m", bank.marks_per_pattern)
    return SimConfig(**kwargs)
