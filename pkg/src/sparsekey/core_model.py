"""Statistical model of a delta-sparse reciprocal channel and a correlated eavesdropper.

The main channel has ``M = ceil(tau_m * W)`` resolvable delay bins, each active
independently with probability ``rho = (tau_m * W) ** -(1 - delta)``.  Eve's
pattern is obtained by passing the main pattern through an asymmetric binary
channel: an active main bin stays active for Eve with probability ``theta`` and
an inactive one turns on with probability ``q0``, chosen so that Eve's marginal
is also ``rho``-sparse.

Everything downstream only needs the pattern weights ``(b_ab, b_e, b_q)``,
so the model exposes samplers and the exact joint pmf of those counts.
"""

from __future__ import annotations

import dataclasses
import json
import math
import zlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import stats

__all__ = [
    "ChannelConfig",
    "ConfigError",
    "DofCounts",
    "DofPmf",
    "sparsity_probability",
    "eve_transitions",
    "sample_dof",
    "sample_dof_batch",
    "dof_pmf",
    "pattern_conditional_entropy",
    "state_entropy_bonus",
    "make_rng",
]

# tau_m * W is a product of two user floats; 10e-6 * 100e6 == 1000.0000000000001
_CEIL_RTOL = 1e-9


class ConfigError(ValueError):
    """Raised when a channel configuration violates the model's constraints."""


@dataclass(frozen=True)
class ChannelConfig:
    """Physical and statistical parameters of the sounding scenario.

    Parameters
    ----------
    bandwidth_hz : float
        Signal bandwidth ``W`` in Hz.
    max_delay_s : float
        Maximum delay spread ``tau_m`` in seconds.
    delta : float
        Sparsity exponent in (0, 1]; ``delta = 1`` is a rich channel.
    theta : float
        Probability that Eve's bin is active given the main bin is active.
    eta : float
        Correlation magnitude between main and Eve coefficients on common bins.
    snr_a, snr_b, snr_e : float
        Linear SNRs ``P / N`` of Alice, Bob and Eve.
    power : float
        Sounding power ``P``; only the covariance oracle uses it directly.
    """

    bandwidth_hz: float
    max_delay_s: float
    delta: float
    theta: float
    eta: float
    snr_a: float = 1.0
    snr_b: float = 1.0
    snr_e: float = 1.0
    power: float = 1.0

    def __post_init__(self) -> None:
        if not (self.bandwidth_hz > 0 and self.max_delay_s > 0):
            raise ConfigError("bandwidth_hz and max_delay_s must be positive")
        if not self.time_bandwidth > 1:
            raise ConfigError(
                f"max_delay_s * bandwidth_hz must exceed 1, got {self.time_bandwidth!r}"
            )
        if not 0 < self.delta <= 1:
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta!r}")
        if not 0 <= self.theta <= 1:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta!r}")
        if not 0 <= self.eta <= 1:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta!r}")
        for name in ("snr_a", "snr_b", "snr_e", "power"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def time_bandwidth(self) -> float:
        return self.max_delay_s * self.bandwidth_hz

    @property
    def n_bins(self) -> int:
        """Number of resolvable delay bins ``M``."""
        tw = self.time_bandwidth
        return max(1, math.ceil(tw * (1 - _CEIL_RTOL)))

    @property
    def rho(self) -> float:
        return sparsity_probability(self)

    @property
    def mean_dof(self) -> float:
        """Real-valued mean DoF ``L = (tau_m W) ** delta``."""
        return self.time_bandwidth**self.delta

    def replace(self, **changes) -> "ChannelConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown channel fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_json(cls, text: str) -> "ChannelConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DofCounts:
    """Pattern weights of one state realization.

    ``b_ab`` is the main-channel DoF, ``b_e`` Eve's DoF and ``b_q`` the size of
    the common support.
    """

    b_ab: int
    b_e: int
    b_q: int

    def __post_init__(self) -> None:
        if min(self.b_ab, self.b_e, self.b_q) < 0:
            raise ValueError("DoF counts must be nonnegative")
        if self.b_q > min(self.b_ab, self.b_e):
            raise ValueError("common support cannot exceed either pattern weight")


@dataclass
class DofPmf:
    """Exact joint pmf of ``(b_ab, b_q, e0)`` with ``e0 = b_e - b_q``.

    ``mass[i, j, k]`` is the probability of ``b_ab = i, b_q = j, e0 = k``.
    """

    mass: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.mass.shape[0] - 1

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def support(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(b_ab, b_e, b_q, p)`` arrays over cells with nonzero mass."""
        i, j, k = np.nonzero(self.mass)
        return i, j + k, j, self.mass[i, j, k]

    def marginal_b_ab(self) -> np.ndarray:
        return self.mass.sum(axis=(1, 2))

    def marginal_b_q(self) -> np.ndarray:
        return self.mass.sum(axis=(0, 2))

    def marginal_b_e(self) -> np.ndarray:
        m = self.n_bins
        b_ab, b_e, _, p = self.support()
        out = np.zeros(m + 1)
        np.add.at(out, b_e, p)
        return out

    def expect(self, fn) -> float:
        """Expectation of ``fn(b_ab, b_e, b_q)`` (vectorized over arrays)."""
        b_ab, b_e, b_q, p = self.support()
        return float(np.sum(p * fn(b_ab, b_e, b_q)))

    def items(self) -> Iterator[tuple[tuple[int, int, int], float]]:
        for idx in zip(*np.nonzero(self.mass)):
            yield tuple(int(v) for v in idx), float(self.mass[idx])


def make_rng(seed, *keys) -> np.random.Generator:
    """Build a generator from a seed and optional substream keys.

    ``seed`` may already be a Generator, in which case it is returned unchanged
    (keys must then be empty).  String keys are hashed with CRC32 so substreams
    are stable across runs and platforms.
    """
    if isinstance(seed, np.random.Generator):
        if keys:
            raise ValueError("substream keys need an integer seed")
        return seed
    entropy = [int(seed)]
    for key in keys:
        entropy.append(zlib.crc32(key.encode()) if isinstance(key, str) else int(key))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def sparsity_probability(cfg: ChannelConfig) -> float:
    """Per-bin activity probability ``rho = (tau_m W) ** -(1 - delta)``."""
    return cfg.time_bandwidth ** (-(1.0 - cfg.delta))


def eve_transitions(cfg: ChannelConfig) -> tuple[float, float]:
    """Return ``(theta, q0)`` for Eve's pattern channel.

    ``q0 = rho (1 - theta) / (1 - rho)`` keeps Eve's marginal activity at ``rho``.
    When ``rho == 1`` there are no inactive main bins, so ``q0`` never enters
    the model and is reported as 0.

    Raises
    ------
    ConfigError
        If matching the marginal would need ``q0 > 1``.
    """
    rho = sparsity_probability(cfg)
    theta = cfg.theta
    if rho >= 1.0:
        return theta, 0.0
    q0 = rho * (1.0 - theta) / (1.0 - rho)
    if q0 > 1.0:
        raise ConfigError(
            f"Eve's off-support probability q0={q0:.6g} exceeds 1 "
            f"(rho={rho:.6g}, theta={theta:.6g}); no marginal-matching pattern channel exists"
        )
    return theta, q0


def sample_dof_batch(cfg: ChannelConfig, size: int, seed) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``size`` independent ``(b_ab, b_e, b_q)`` triples as integer arrays."""
    rng = make_rng(seed)
    theta, q0 = eve_transitions(cfg)
    m = cfg.n_bins
    b_ab = rng.binomial(m, cfg.rho, size=size)
    b_q = rng.binomial(b_ab, theta)
    e0 = rng.binomial(m - b_ab, q0)
    return b_ab, b_q + e0, b_q


def sample_dof(cfg: ChannelConfig, seed) -> DofCounts:
    """Draw one realization of the pattern weights."""
    b_ab, b_e, b_q = sample_dof_batch(cfg, 1, seed)
    return DofCounts(int(b_ab[0]), int(b_e[0]), int(b_q[0]))


def dof_pmf(cfg: ChannelConfig, m_cap: int = 128) -> DofPmf:
    """Exact factorized pmf ``p(b_ab) p(b_q | b_ab) p(e0 | b_ab)``.

    Raises
    ------
    ConfigError
        If the bin count exceeds ``m_cap``.
    """
    m = cfg.n_bins
    if m > m_cap:
        raise ConfigError(f"exact enumeration needs M <= {m_cap}, got M = {m}")
    theta, q0 = eve_transitions(cfg)
    k = np.arange(m + 1)
    p_ab = stats.binom.pmf(k, m, cfg.rho)
    # rows: b_ab, cols: b_q (resp. e0); binom.pmf is 0 outside each support
    p_q = stats.binom.pmf(k[None, :], k[:, None], theta)
    p_e0 = stats.binom.pmf(k[None, :], m - k[:, None], q0)
    mass = p_ab[:, None, None] * p_q[:, :, None] * p_e0[:, None, :]
    return DofPmf(mass)


def _entropy_bits(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def pattern_conditional_entropy(rho: float, theta: float, q0: float) -> float:
    """Per-bin ``H(S_ab | S_e)`` in bits for the asymmetric pattern channel."""
    joint = np.array(
        [rho * theta, rho * (1 - theta), (1 - rho) * q0, (1 - rho) * (1 - q0)]
    )
    # order above: (1,1), (1,0), (0,1), (0,0) as (s_ab, s_e)
    p_e = np.array([joint[0] + joint[2], joint[1] + joint[3]])
    return max(0.0, _entropy_bits(joint) - _entropy_bits(p_e))


def state_entropy_bonus(cfg: ChannelConfig, n: int) -> float:
    """Pattern-uncertainty term ``(1/n) H(S_ab | S_e)`` in bits per observation.

    Bins are independent, so the pattern entropy is ``M`` times the per-bin value.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    theta, q0 = eve_transitions(cfg)
    return cfg.n_bins / n * pattern_conditional_entropy(cfg.rho, theta, q0)
