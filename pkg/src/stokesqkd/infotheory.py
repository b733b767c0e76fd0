"""Shannon mutual informations and the secret-key-rate bound dI = I_AB - I_AE.

With modulation variance ``v_m``, source thermal ratio ``r`` and Bob's
channel noise ``n_B`` (Eve's noise being ``1/n_B``)::

    I_AB = 1/2 log2[(v_m + (1+r) + n_B)   / ((1+r) + n_B)]
    I_AE = 1/2 log2[(v_m + (1+r) + 1/n_B) / ((1+r) + 1/n_B)]

All rates are in bits per sifted round.  Functions accept scalars or numpy
arrays and broadcast.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .channel import eta_to_nB
from .errors import DegenerateSample, InvalidGrid

#: |dI| at or below this is classified as the security boundary.
BOUNDARY_TOL = 1e-12

#: Value returned by :func:`estimate_mi_gaussian` when 1 - rho^2 underflows.
MI_CAP_BITS = 32.0

#: Minimum sample size accepted by the Gaussian MI estimator.
MIN_MI_SAMPLES = 1000

DEFAULT_SURFACE_VM = 10.0


def _half_log2_snr(v_m, noise):
    out = 0.5 * np.log1p(np.asarray(v_m, dtype=float) / noise) / math.log(2.0)
    return float(out) if np.ndim(out) == 0 else out


def mutual_info_ab(v_m, n_B, r=0.0):
    """Alice-Bob information of the Gaussian channel with noise 1 + r + n_B."""
    return _half_log2_snr(v_m, 1.0 + np.asarray(r, dtype=float) + n_B)


def mutual_info_ae(v_m, n_B, r=0.0):
    """Alice-Eve information under the cloning attack (Eve's noise 1/n_B).

    The perfect-line limit n_B = 0 evaluates to exactly 0.
    """
    n_B = np.asarray(n_B, dtype=float)
    with np.errstate(divide="ignore"):
        n_E = np.where(n_B > 0, 1.0 / np.where(n_B > 0, n_B, 1.0), np.inf)
    out = np.where(np.isinf(n_E), 0.0, _half_log2_snr(v_m, 1.0 + np.asarray(r, dtype=float) + n_E))
    return float(out) if np.ndim(out) == 0 else out


class Regime(str, enum.Enum):
    SECURE = "Secure"
    BOUNDARY = "Boundary"
    INSECURE = "Insecure"


def classify(delta: float) -> Regime:
    if abs(delta) <= BOUNDARY_TOL:
        return Regime.BOUNDARY
    return Regime.SECURE if delta > 0 else Regime.INSECURE


@dataclass(frozen=True)
class MIReport:
    i_ab: float
    i_ae: float
    delta_i: float
    regime: Regime

    def to_dict(self) -> dict:
        return {
            "i_ab": self.i_ab,
            "i_ae": self.i_ae,
            "delta_i": self.delta_i,
            "regime": self.regime.value,
        }

    @classmethod
    def from_informations(cls, i_ab: float, i_ae: float) -> "MIReport":
        d = i_ab - i_ae
        return cls(float(i_ab), float(i_ae), float(d), classify(d))


def delta_i(v_m: float, n_B: float, r: float = 0.0) -> MIReport:
    """Closed-form report for one operating point."""
    return MIReport.from_informations(mutual_info_ab(v_m, n_B, r), mutual_info_ae(v_m, n_B, r))


def delta_i_values(v_m, n_B, r=0.0):
    """Vectorized I_AB - I_AE without the report wrapper."""
    return np.asarray(mutual_info_ab(v_m, n_B, r)) - np.asarray(mutual_info_ae(v_m, n_B, r))


@dataclass(frozen=True)
class SurfaceGrid:
    """dI over an (r, eta) grid; ``delta_i[i, j]`` belongs to ``(r_values[i], eta_values[j])``."""

    r_values: np.ndarray
    eta_values: np.ndarray
    v_m: float
    delta_i: np.ndarray = field(repr=False)

    @property
    def n_B_values(self) -> np.ndarray:
        return (1.0 - self.eta_values) / self.eta_values

    def cells(self):
        """Yield ``(r, eta, n_B, delta_i)`` in r-major ascending order."""
        n_B = self.n_B_values
        for i, r in enumerate(self.r_values):
            for j, eta in enumerate(self.eta_values):
                yield float(r), float(eta), float(n_B[j]), float(self.delta_i[i, j])


def default_r_axis() -> np.ndarray:
    return np.arange(33) / 16.0


def default_eta_axis() -> np.ndarray:
    # integer numerators keep eta = 0.5 exact
    return np.arange(5, 101) / 100.0


def _check_axis(name, values, lo, hi, lo_open):
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InvalidGrid(f"{name} axis must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(values)):
        raise InvalidGrid(f"{name} axis contains non-finite values")
    below = values <= lo if lo_open else values < lo
    if np.any(below) or np.any(values > hi):
        raise InvalidGrid(f"{name} axis values out of domain")
    if np.any(np.diff(values) <= 0):
        raise InvalidGrid(f"{name} axis must be strictly ascending")
    return values


def generate_surface(
    r_values: Sequence[float] | None = None,
    eta_values: Sequence[float] | None = None,
    v_m: float = DEFAULT_SURFACE_VM,
) -> SurfaceGrid:
    """Tabulate dI(v_m, n_B(eta), r) on the Cartesian product of the axes."""
    r_axis = _check_axis("r", default_r_axis() if r_values is None else r_values, 0.0, np.inf, False)
    eta_axis = _check_axis("eta", default_eta_axis() if eta_values is None else eta_values, 0.0, 1.0, True)
    if not (math.isfinite(v_m) and v_m > 0):
        raise InvalidGrid(f"v_m must be > 0, got {v_m}")
    n_B = np.array([eta_to_nB(e) for e in eta_axis])
    table = delta_i_values(v_m, n_B[None, :], r_axis[:, None])
    return SurfaceGrid(r_axis, eta_axis, float(v_m), np.asarray(table, dtype=float))


class MIEstimate(NamedTuple):
    bits: float
    rho: float
    n: int
    saturated: bool


def estimate_mi_gaussian(x, y) -> MIEstimate:
    """Mutual information of jointly Gaussian samples from their correlation.

    ``I = -1/2 log2(1 - rho^2)``.  If ``1 - rho^2`` falls below 2**-64 the
    estimate is capped at :data:`MI_CAP_BITS` and flagged as saturated.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if len(x) < MIN_MI_SAMPLES:
        raise ValueError(f"need at least {MIN_MI_SAMPLES} samples, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("samples must be finite")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSample("zero variance sample")
    rho = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    gap = 1.0 - rho * rho
    if gap <= 2.0**-64:
        return MIEstimate(MI_CAP_BITS, rho, len(x), True)
    return MIEstimate(-0.5 * math.log2(gap), rho, len(x), False)
