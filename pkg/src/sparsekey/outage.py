"""Secrecy-outage probabilities, Chernoff/KL bounds and exponents."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .core_model import ChannelConfig, DofCounts, make_rng, sample_dof_batch
from .ergodic import inst_rate, inst_rate_array
from .mutual_info import i_ab, i_ae

__all__ = [
    "BackoffSpec",
    "OutageReport",
    "ExponentPoint",
    "conditional_capacity",
    "backoff_threshold",
    "mi_ratio",
    "kl_bernoulli",
    "outage_exact",
    "outage_bound",
    "outage_exponent",
    "gaussian_tail",
    "outage_mc",
    "outage_report",
    "exponent_curve",
    "integer_dof",
    "reports_to_csv",
]

# guards ceil(a*L) against products like 0.75*4 landing a hair above an integer
_CEIL_EPS = 1e-9


def conditional_capacity(counts: DofCounts, snr: float, eta: float) -> float:
    """State-conditional secret key capacity ``Cs(s_ab, s_e)``; same as :func:`inst_rate`."""
    return inst_rate(counts, snr, eta)


def backoff_threshold(alpha: float, A: float, theta: float) -> float:
    """Normalized outage threshold ``a = (1 - alpha) A + alpha theta``."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    if A < 1:
        raise ValueError(f"mutual-information ratio A must be >= 1, got {A!r}")
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    return (1.0 - alpha) * A + alpha * theta


def mi_ratio(snr_per_bin: float, eta: float) -> float:
    """Finite-SNR ratio ``i_ab(x, x) / i_ae(x, x)``; tends to ``1/eta^2`` as x -> 0."""
    if eta == 0:
        return math.inf
    num = float(i_ab(snr_per_bin, snr_per_bin))
    den = float(i_ae(snr_per_bin, snr_per_bin, eta))
    if den == 0:
        return 1.0 / eta**2
    return num / den


@dataclass(frozen=True)
class BackoffSpec:
    """alpha-backoff parameters; ``a`` is derived, never set."""

    alpha: float
    A: float
    theta: float

    @property
    def a(self) -> float:
        return backoff_threshold(self.alpha, self.A, self.theta)

    @classmethod
    def wideband(cls, alpha: float, eta: float, theta: float) -> "BackoffSpec":
        return cls(alpha, 1.0 / eta**2, theta)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "A": self.A, "theta": self.theta, "a": self.a}


def kl_bernoulli(a: float, p: float) -> float:
    """Binary KL divergence ``D(a || p)`` in bits, with ``0 log 0 = 0``."""
    if not (0 <= a <= 1 and 0 <= p <= 1):
        raise ValueError("arguments of kl_bernoulli must lie in [0, 1]")
    total = 0.0
    for u, v in ((a, p), (1.0 - a, 1.0 - p)):
        if u == 0:
            continue
        if v == 0:
            return math.inf
        total += u * math.log2(u / v)
    return max(total, 0.0)


def _threshold_index(L: int, a: float) -> int:
    return math.ceil(a * L - _CEIL_EPS)


def outage_exact(L: int, theta: float, a: float) -> float:
    """Exact ``Pr(B >= a L)`` for ``B ~ Binomial(L, theta)``, summed in log space."""
    if L < 1:
        raise ValueError("L must be at least 1")
    k0 = max(_threshold_index(L, a), 0)
    if k0 > L:
        return 0.0
    k = np.arange(k0, L + 1)
    with np.errstate(divide="ignore"):
        logp = stats.binom.logpmf(k, L, theta)
    out = float(np.exp(logsumexp(logp)))
    return min(out, 1.0)


def outage_exponent(L: float, theta: float, a: float) -> float:
    """Chernoff exponent ``L D(a || theta)`` in bits; +inf when ``a > 1``, 0 when ``a <= theta``."""
    if a > 1:
        return math.inf
    if a <= theta:
        return 0.0
    return L * kl_bernoulli(a, theta)


def outage_bound(L: float, theta: float, a: float) -> float:
    """Upper bound ``2 ** (-L D(a || theta))`` on the outage probability."""
    e = outage_exponent(L, theta, a)
    if math.isinf(e):
        return 0.0
    return min(1.0, max(0.0, 2.0 ** (-e)))


def gaussian_tail(L: int, theta: float, a: float) -> float:
    """Continuity-corrected normal approximation of ``Pr(B >= a L)``."""
    if not 0 < theta < 1:
        raise ValueError("gaussian_tail needs 0 < theta < 1")
    mean = L * theta
    sd = math.sqrt(L * theta * (1.0 - theta))
    return float(stats.norm.sf(_threshold_index(L, a) - 0.5, loc=mean, scale=sd))


def integer_dof(cfg: ChannelConfig) -> int:
    """Integer DoF ``round((tau_m W)^delta)`` used for exact tails (at least 1)."""
    return max(1, int(round(cfg.mean_dof)))


def outage_mc(
    cfg: ChannelConfig,
    snr: float,
    rate_bits: float,
    lam: float = 1.0,
    samples: int = 100_000,
    seed=0,
    force_dof: int | None = None,
    chunk: int = 1 << 16,
) -> tuple[float, float]:
    """Monte Carlo outage ``Pr(rate_bits > lam * Cs(state, snr / lam))``.

    States come from the full pattern model unless ``force_dof`` is given, in
    which case ``b_ab = b_e = force_dof`` and ``b_q ~ Binomial(force_dof, theta)``.
    Chunks use their own substreams ``(seed, chunk index)``.

    Returns
    -------
    (p, stderr)
    """
    if not 0 < lam <= 1:
        raise ValueError("lam must lie in (0, 1]")
    hits = 0
    done = 0
    for index in range(math.ceil(samples / chunk)):
        size = min(chunk, samples - done)
        rng = make_rng(seed, index) if not isinstance(seed, np.random.Generator) else seed
        if force_dof is None:
            b_ab, b_e, b_q = sample_dof_batch(cfg, size, rng)
        else:
            b_ab = np.full(size, force_dof)
            b_e = b_ab
            b_q = rng.binomial(force_dof, cfg.theta, size=size)
        cap = lam * inst_rate_array(b_ab, b_e, b_q, snr / lam, cfg.eta)
        hits += int(np.count_nonzero(rate_bits > cap))
        done += size
    p = hits / samples
    return p, math.sqrt(p * (1.0 - p) / samples)


@dataclass(frozen=True)
class OutageReport:
    L: int
    theta: float
    a: float
    p_exact: float
    p_bound: float
    p_gauss: float
    exponent: float
    p_mc: float | None = None
    p_mc_stderr: float | None = None

    @property
    def impossible(self) -> bool:
        return self.a > 1

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        # json has no infinity literal; write it as the string "inf"
        d = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in self.to_dict().items()}
        return json.dumps(d)

    @staticmethod
    def csv_header() -> list[str]:
        return [f.name for f in fields(OutageReport)]

    def csv_row(self) -> list[str]:
        return [_fmt(v) for v in self.to_dict().values()]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def outage_report(
    L: int,
    theta: float,
    a: float,
    L_exponent: float | None = None,
    mc: tuple[float, float] | None = None,
) -> OutageReport:
    """Collect exact tail, KL bound, Gaussian approximation and exponent.

    ``L_exponent`` is the (possibly real-valued) DoF used in the exponent and
    bound; it defaults to the integer ``L``.
    """
    le = float(L) if L_exponent is None else float(L_exponent)
    p_mc, p_se = mc if mc is not None else (None, None)
    gauss = gaussian_tail(L, theta, a) if 0 < theta < 1 else float(outage_exact(L, theta, a))
    return OutageReport(
        L=int(L),
        theta=theta,
        a=a,
        p_exact=outage_exact(L, theta, a),
        p_bound=outage_bound(le, theta, a),
        p_gauss=gauss,
        exponent=outage_exponent(le, theta, a),
        p_mc=p_mc,
        p_mc_stderr=p_se,
    )


def reports_to_csv(reports: Sequence[OutageReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(OutageReport.csv_header())
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


@dataclass(frozen=True)
class ExponentPoint:
    bandwidth_hz: float
    L: float
    a: float
    exponent: float

    @property
    def impossible(self) -> bool:
        return math.isinf(self.exponent)


def exponent_curve(
    cfg: ChannelConfig,
    alpha: float,
    w_grid: Sequence[float],
    A: float | None = None,
) -> list[ExponentPoint]:
    """Outage exponent ``L D(a || theta)`` along a bandwidth grid.

    ``L = (tau_m W)^delta`` is kept real-valued.  ``A`` defaults to the
    wideband ratio ``1 / eta^2``.  Points with ``a > 1`` carry an infinite
    exponent (outage impossible).
    """
    if A is None:
        A = math.inf if cfg.eta == 0 else 1.0 / cfg.eta**2
    if math.isfinite(A):
        a = backoff_threshold(alpha, A, cfg.theta)
    else:
        a = cfg.theta if alpha == 1 else math.inf
    out = []
    for w in w_grid:
        L = (cfg.max_delay_s * w) ** cfg.delta
        out.append(ExponentPoint(float(w), L, a, outage_exponent(L, cfg.theta, a)))
    return out
