"""Instantaneous and ergodic secret-key rates, on-off sounding, and sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Callable, Sequence

import numpy as np

from .core_model import (
    ChannelConfig,
    ConfigError,
    DofCounts,
    dof_pmf,
    make_rng,
    sample_dof_batch,
)
from .mutual_info import i_ab, i_ae

__all__ = [
    "RatePoint",
    "OnOffResult",
    "inst_rate",
    "inst_rate_array",
    "rate_function",
    "ergodic_rate",
    "onoff_optimize",
    "golden_section_max",
    "wideband_approx",
    "sweep",
    "EXACT_M_CAP",
]

EXACT_M_CAP = 128
# cells below this mass are dropped from the exact sum; total error stays < 1e-13 relative
_PMF_FLOOR = 1e-20

RateFn = Callable[[float], "tuple[float, float] | float"]


@dataclass(frozen=True)
class RatePoint:
    snr: float
    bandwidth_hz: float
    rate_bits: float
    method: str
    mc_stderr: float = 0.0
    delta: float = float("nan")
    lambda_star: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OnOffResult:
    lambda_star: float
    rate_bits: float
    grid_points: int
    stderr: float = 0.0


def inst_rate_array(b_ab, b_e, b_q, snr: float, eta: float) -> np.ndarray:
    """Vectorized instantaneous key rate under uniform delay profiles.

    ``b_ab * i_ab(snr/b_ab, snr/b_ab) - b_q * i_ae(snr/b_ab, snr/b_e, eta)``,
    with zero main DoF giving zero rate and zero overlap giving zero leakage.
    """
    b_ab = np.asarray(b_ab, dtype=float)
    b_e = np.asarray(b_e, dtype=float)
    b_q = np.asarray(b_q, dtype=float)
    x = np.divide(snr, b_ab, out=np.zeros_like(b_ab), where=b_ab > 0)
    y = np.divide(snr, b_e, out=np.zeros_like(b_e), where=b_e > 0)
    main = b_ab * i_ab(x, x)
    leak = np.where(b_q > 0, b_q * i_ae(x, y, eta), 0.0)
    return main - leak


def inst_rate(counts: DofCounts, snr: float, eta: float) -> float:
    """Instantaneous key rate in bits for one state realization."""
    if counts.b_ab == 0:
        return 0.0
    return float(inst_rate_array(counts.b_ab, counts.b_e, counts.b_q, snr, eta))


class _ExactRate:
    """``E[I_inst(snr)]`` by summing over the exact DoF pmf.

    The main term depends on ``b_ab`` alone and the leakage term is linear in
    ``b_q``, so the sum collapses to ``M+1`` and ``(M+1)^2`` terms.
    """

    def __init__(self, cfg: ChannelConfig):
        pmf = dof_pmf(cfg, m_cap=EXACT_M_CAP)
        mass = pmf.mass
        m = pmf.n_bins
        self.eta = cfg.eta
        self.p_ab = mass.sum(axis=(1, 2))
        # weight[b_ab, b_e] = sum over b_q of b_q * p(b_ab, b_q, e0 = b_e - b_q)
        weight = np.zeros((m + 1, m + 1))
        j = np.arange(m + 1)
        for b_q in range(1, m + 1):
            weight[:, b_q:] += b_q * mass[:, b_q, : m + 1 - b_q]
        keep = weight > _PMF_FLOOR
        self.lk_ab, self.lk_e = np.nonzero(keep)
        self.lk_w = weight[keep]
        self.b = j.astype(float)

    def __call__(self, snr: float) -> tuple[float, float]:
        b = self.b[1:]
        x = snr / b
        main = np.sum(self.p_ab[1:] * b * i_ab(x, x))
        xa = snr / self.lk_ab
        xe = snr / self.lk_e
        leak = np.sum(self.lk_w * i_ae(xa, xe, self.eta))
        return float(main - leak), 0.0


class _SampledRate:
    """Sample mean of ``I_inst`` over a fixed set of drawn states.

    The states are drawn once, so the estimate is a smooth deterministic
    function of snr (common random numbers across snr values).
    """

    def __init__(self, cfg: ChannelConfig, samples: int, seed):
        if samples < 2:
            raise ValueError("Monte Carlo needs at least 2 samples")
        b_ab, b_e, b_q = sample_dof_batch(cfg, samples, seed)
        # collapse repeated states; rates only depend on the triple
        triples, counts = np.unique(np.stack([b_ab, b_e, b_q]), axis=1, return_counts=True)
        self.b_ab, self.b_e, self.b_q = triples
        self.w = counts.astype(float)
        self.n = samples
        self.eta = cfg.eta

    def __call__(self, snr: float) -> tuple[float, float]:
        r = inst_rate_array(self.b_ab, self.b_e, self.b_q, snr, self.eta)
        mean = np.sum(self.w * r) / self.n
        var = np.sum(self.w * (r - mean) ** 2) / (self.n - 1)
        return float(mean), float(math.sqrt(var / self.n))


def _resolve_method(cfg: ChannelConfig, method: str) -> str:
    if method == "auto":
        return "exact" if cfg.n_bins <= EXACT_M_CAP else "mc"
    if method not in ("exact", "mc", "approx"):
        raise ValueError(f"unknown method {method!r}")
    return method


def rate_function(cfg: ChannelConfig, method: str = "auto", samples: int = 100_000, seed=0):
    """Return a callable ``snr -> (rate_bits, stderr)`` for the ergodic rate."""
    method = _resolve_method(cfg, method)
    if method == "exact":
        return _ExactRate(cfg)
    if method == "mc":
        return _SampledRate(cfg, samples, seed)
    return lambda snr: (wideband_approx(cfg, snr), 0.0)


def ergodic_rate(
    cfg: ChannelConfig,
    snr: float,
    method: str = "auto",
    samples: int = 100_000,
    seed=0,
) -> RatePoint:
    """Ergodic key rate ``E[I_inst(snr)]`` as a :class:`RatePoint`.

    ``method="exact"`` enumerates the DoF pmf and needs ``M <= 128``;
    ``"mc"`` averages ``samples`` drawn states; ``"auto"`` picks between them.
    """
    method = _resolve_method(cfg, method)
    if method == "exact" and cfg.n_bins > EXACT_M_CAP:
        raise ConfigError(f"exact ergodic rate needs M <= {EXACT_M_CAP}, got {cfg.n_bins}")
    rate, err = rate_function(cfg, method, samples, seed)(snr)
    return RatePoint(snr, cfg.bandwidth_hz, rate, method, err, cfg.delta)


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _as_pair(value) -> tuple[float, float]:
    if isinstance(value, tuple):
        return float(value[0]), float(value[1])
    return float(value), 0.0


def onoff_optimize(
    cfg: ChannelConfig,
    snr: float,
    rate_fn: RateFn | None = None,
    grid_points: int = 200,
    lambda_min: float = 1e-4,
    method: str = "auto",
    samples: int = 100_000,
    seed=0,
) -> OnOffResult:
    """Best on-off sounding: maximize ``lam * I_erg(snr / lam)`` over ``lam`` in (0, 1].

    A logarithmic grid on ``[lambda_min, 1]`` locates the best bracket, which
    golden-section search (in ``log lam``) refines.  Ties with ``lam = 1`` are
    resolved in favour of continuous sounding.

    ``rate_fn`` maps an SNR to a rate, or to ``(rate, stderr)``; by default it
    is built from ``cfg`` with :func:`rate_function`.
    """
    if rate_fn is None:
        rate_fn = rate_function(cfg, method, samples, seed)

    def objective(log_lam: float) -> float:
        lam = math.exp(log_lam)
        return lam * _as_pair(rate_fn(snr / lam))[0]

    logs = np.linspace(math.log(lambda_min), 0.0, grid_points)
    values = np.array([objective(v) for v in logs])
    i = int(np.argmax(values))
    best_log, best_val = logs[i], values[i]
    lo, hi = logs[max(i - 1, 0)], logs[min(i + 1, grid_points - 1)]
    if hi > lo:
        x, fx = golden_section_max(objective, lo, hi)
        if fx > best_val:
            best_log, best_val = x, fx
    at_one = values[-1]
    if at_one >= best_val - 1e-12 * max(abs(best_val), 1e-300):
        best_log, best_val = 0.0, at_one
    lam = math.exp(best_log)
    err = lam * _as_pair(rate_fn(snr / lam))[1]
    return OnOffResult(lam, float(best_val), grid_points, err)


def wideband_approx(cfg: ChannelConfig, snr: float) -> float:
    """Wideband ergodic rate ``snr^2 (1 - theta eta^2) / (ln 2 (tau_m W)^delta)``."""
    return snr**2 * (1.0 - cfg.theta * cfg.eta**2) / (math.log(2.0) * cfg.mean_dof)


_AXES = {"snr", "bandwidth", "delta"}


def sweep(
    cfg: ChannelConfig,
    axis: str,
    grid: Sequence[float],
    snr: float | None = None,
    use_onoff: bool = False,
    method: str = "auto",
    samples: int = 100_000,
    seed: int = 0,
    max_workers: int | None = None,
) -> list[RatePoint]:
    """Evaluate the ergodic rate along one axis of a configuration template.

    ``axis`` is ``"snr"``, ``"bandwidth"`` or ``"delta"``; for the latter two
    the fixed ``snr`` must be given.  Each grid point draws from its own
    substream ``(seed, index)``, so results do not depend on ``max_workers``.
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}")
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    if axis != "snr" and snr is None:
        raise ValueError(f"sweeping {axis} needs a fixed snr")

    def point(index: int) -> RatePoint:
        value = grid[index]
        c, g = cfg, snr
        if axis == "snr":
            g = value
        elif axis == "bandwidth":
            c = cfg.replace(bandwidth_hz=value)
        else:
            c = cfg.replace(delta=value)
        m = _resolve_method(c, method)
        fn = rate_function(c, m, samples, make_rng(seed, index))
        if use_onoff:
            res = onoff_optimize(c, g, rate_fn=fn)
            return RatePoint(g, c.bandwidth_hz, res.rate_bits, m, res.stderr, c.delta, res.lambda_star)
        rate, err = fn(g)
        return RatePoint(g, c.bandwidth_hz, rate, m, err, c.delta)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            return list(pool.map(point, range(len(grid))))
    return [point(i) for i in range(len(grid))]
