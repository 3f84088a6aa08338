"""Gaussian mutual-information kernels for the sparse sounding model.

All quantities are in bits.  The scalar kernels accept numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import toeplitz

__all__ = [
    "PowerProfile",
    "SoundingDesign",
    "i_ab",
    "i_ae",
    "i_ab_lowsnr",
    "i_ae_lowsnr",
    "is_eve_degraded",
    "vector_mi_closed_form",
    "vector_mi_logdet_oracle",
    "impulse_sounding",
    "pn_sounding",
    "load_sounding",
    "uniform_profile",
]

_LN2 = np.log(2.0)


def i_ab(ga, gb):
    """Alice-Bob kernel ``log2((1+ga)(1+gb) / (1+ga+gb))``."""
    ga = np.asarray(ga, dtype=float)
    gb = np.asarray(gb, dtype=float)
    if np.any(ga < 0) or np.any(gb < 0):
        raise ValueError("SNR arguments must be nonnegative")
    # log1p form keeps precision when ga*gb is tiny
    out = np.log1p(ga * gb / (1.0 + ga + gb)) / _LN2
    return out[()] if out.ndim == 0 else out


def i_ae(ga, ge, eta):
    """Alice-Eve kernel ``log2((1+ga)(1+ge) / (1 + ga ge (1-eta^2) + ga + ge))``."""
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    ga = np.asarray(ga, dtype=float)
    ge = np.asarray(ge, dtype=float)
    if np.any(ga < 0) or np.any(ge < 0):
        raise ValueError("SNR arguments must be nonnegative")
    e2 = eta * eta
    out = np.log1p(e2 * ga * ge / (1.0 + ga + ge + ga * ge * (1.0 - e2))) / _LN2
    return out[()] if out.ndim == 0 else out


def i_ab_lowsnr(x):
    """Low-SNR approximation of ``i_ab(x, x)``."""
    x = np.asarray(x, dtype=float)
    out = x * x / _LN2
    return out[()] if out.ndim == 0 else out


def i_ae_lowsnr(x, y, eta):
    """Low-SNR approximation of ``i_ae(x, y, eta)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = eta * eta * x * y / _LN2
    return out[()] if out.ndim == 0 else out


def is_eve_degraded(var_h, var_he, P, nb, ne, eta) -> bool:
    """True when Eve's per-bin effective SNR is strictly below Bob's.

    Eve observes ``eta`` times the main coefficient plus an independent
    component of variance ``(1 - eta^2) var_he``, which acts as extra noise.
    """
    bob = var_h * P / nb
    eve = eta**2 * var_he * P / ((1 - eta**2) * var_he * P + ne)
    return bool(bob > eve)


@dataclass(frozen=True)
class PowerProfile:
    """Per-bin variances of the main and Eve channels with their patterns.

    Each nonempty pattern carries unit total power.  An all-zero pattern is
    allowed and carries zero power.
    """

    var_h: np.ndarray
    var_he: np.ndarray
    s_ab: np.ndarray
    s_e: np.ndarray

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("var_h", "var_he", "s_ab", "s_e"):
            arrays[name] = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arrays[name])
        if len({a.shape for a in arrays.values()}) != 1 or self.var_h.ndim != 1:
            raise ValueError("profile arrays must be 1-D and of equal length")
        for var, pat, label in ((self.var_h, self.s_ab, "main"), (self.var_he, self.s_e, "Eve")):
            if np.any(var < 0):
                raise ValueError(f"{label} variances must be nonnegative")
            if not np.all(np.isin(pat, (0.0, 1.0))):
                raise ValueError(f"{label} pattern must be binary")
            if np.any((var > 0) != (pat == 1)):
                raise ValueError(f"{label} variances must be positive exactly on the pattern")
            if pat.any() and abs(var.sum() - 1.0) > 1e-9:
                raise ValueError(f"{label} channel must have unit power, got {var.sum()!r}")

    @property
    def n_bins(self) -> int:
        return self.var_h.shape[0]

    @property
    def overlap(self) -> np.ndarray:
        return self.s_ab * self.s_e


def uniform_profile(s_ab, s_e) -> PowerProfile:
    """Uniform delay profile: each active bin gets ``1 / weight`` of the power."""
    s_ab = np.asarray(s_ab, dtype=float)
    s_e = np.asarray(s_e, dtype=float)
    var_h = s_ab / s_ab.sum() if s_ab.any() else np.zeros_like(s_ab)
    var_he = s_e / s_e.sum() if s_e.any() else np.zeros_like(s_e)
    return PowerProfile(var_h, var_he, s_ab, s_e)


def vector_mi_closed_form(profile: PowerProfile, ga, gb, ge, eta) -> tuple[float, float]:
    """Per-bin sum form of ``I(X;Y|S)`` and ``I(X;Z,S_e|S)`` for white sounding."""
    var_h, var_he = profile.var_h, profile.var_he
    i_xy = np.sum(profile.s_ab * i_ab(var_h * ga, var_h * gb))
    i_xz = np.sum(profile.overlap * i_ae(var_h * ga, var_he * ge, eta))
    return float(i_xy), float(i_xz)


@dataclass(frozen=True)
class SoundingDesign:
    """A known sounding sequence ``d``; power is ``d^H d``."""

    d: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.d, dtype=complex).ravel()
        if d.size == 0:
            raise ValueError("sounding sequence must be nonempty")
        object.__setattr__(self, "d", d)

    @property
    def power(self) -> float:
        return float(np.real(np.vdot(self.d, self.d)))

    def n_rows(self, n_bins: int) -> int:
        return self.d.size + n_bins - 1

    def matrix(self, n_bins: int) -> np.ndarray:
        """Toeplitz convolution matrix of shape ``(K + M - 1, M)``."""
        col = np.concatenate([self.d, np.zeros(n_bins - 1, dtype=complex)])
        row = np.zeros(n_bins, dtype=complex)
        row[0] = self.d[0]
        return toeplitz(col, row)


def impulse_sounding(power: float, length: int = 1) -> SoundingDesign:
    d = np.zeros(length, dtype=complex)
    d[0] = np.sqrt(power)
    return SoundingDesign(d)


def pn_sounding(power: float, length: int, seed=None) -> SoundingDesign:
    """Unit-modulus pseudo-random sequence (random QPSK chips) scaled to ``power``."""
    rng = np.random.default_rng(seed)
    chips = np.exp(0.5j * np.pi * rng.integers(0, 4, size=length))
    return SoundingDesign(np.sqrt(power / length) * chips)


def load_sounding(path) -> SoundingDesign:
    """Read a sounding sequence from a text/CSV file.

    One column gives real chips; two columns are read as (real, imag).
    Lines starting with ``#`` are ignored.
    """
    data = np.loadtxt(Path(path), delimiter=None if _is_whitespace(path) else ",", ndmin=2)
    if data.shape[1] == 1:
        return SoundingDesign(data[:, 0])
    if data.shape[1] == 2:
        return SoundingDesign(data[:, 0] + 1j * data[:, 1])
    raise ValueError("sounding file must have one or two columns")


def _is_whitespace(path) -> bool:
    with open(path) as fh:
        for line in fh:
            if line.strip() and not line.lstrip().startswith("#"):
                return "," not in line
    return True


def _logdet2(mat: np.ndarray) -> float:
    """log2 det of a Hermitian positive-definite matrix via Cholesky."""
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("covariance is not positive definite") from exc
    diag = np.real(np.diag(chol))
    if np.any(diag <= 1e-9 * np.sqrt(np.max(np.abs(np.diag(mat))))):
        raise np.linalg.LinAlgError("covariance is numerically singular")
    return float(2.0 * np.sum(np.log2(diag)))


def vector_mi_logdet_oracle(
    design: SoundingDesign,
    profile: PowerProfile,
    na: float,
    nb: float,
    ne: float,
    eta: float,
) -> tuple[float, float]:
    """Exact Gaussian mutual informations from the full sounding covariances.

    Builds ``R_X, R_Y, R_Z`` and the joint covariances from the Toeplitz
    sounding matrix and evaluates ``log2(det R_X det R_Y / det R_XY)`` (and the
    X-Z analogue).  The main/Eve cross-covariance on a common bin is
    ``eta * sqrt(var_h * var_he)``.
    """
    if min(na, nb, ne) <= 0:
        raise np.linalg.LinAlgError("noise variances must be positive")
    m = profile.n_bins
    D = design.matrix(m)
    n_rows = D.shape[0]
    eye = np.eye(n_rows)
    cross = eta * np.sqrt(profile.var_h * profile.var_he) * profile.overlap

    s_h = (D * profile.var_h) @ D.conj().T
    s_he = (D * profile.var_he) @ D.conj().T
    s_x = (D * cross) @ D.conj().T

    r_x = s_h + na * eye
    r_y = s_h + nb * eye
    r_z = s_he + ne * eye
    r_xy = np.block([[r_x, s_h], [s_h.conj().T, r_y]])
    r_xz = np.block([[r_x, s_x], [s_x.conj().T, r_z]])

    ld_x = _logdet2(r_x)
    i_xy = ld_x + _logdet2(r_y) - _logdet2(r_xy)
    i_xz = ld_x + _logdet2(r_z) - _logdet2(r_xz)
    return i_xy, i_xz
