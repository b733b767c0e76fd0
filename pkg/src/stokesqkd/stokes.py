"""Stokes moments of polarized two-mode coherent states.

A polarized beam is described by the coherent amplitudes of two orthogonal
modes x and y, optionally smeared into a thermal coherent state with ``n_th``
mean thermal photons per mode.  Only first and second moments are carried;
that is all the Gaussian key-rate analysis needs.

Stokes operators (photon-number units)::

    S0 = n_x + n_y
    S1 = n_x - n_y
    S2 = a_x^+ a_y + a_y^+ a_x
    S3 = i (a_y^+ a_x - a_x^+ a_y)

For a pure coherent state every variance equals <S0> (shot noise).  When the
beam is strongly polarized along x, (S2, S3) behave like a conjugate
quadrature pair with commutator 2i|alpha_x|^2, so dividing by |alpha_x| gives
unit shot-noise variables ``s2 = S2/|alpha_x|`` and ``s3 = S3/|alpha_x|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import ModulationTooLarge, PolarizationTooWeak, ZeroCarrier

#: Default ratio |alpha_x|^2 / |alpha_y|^2 above which a beam counts as
#: strongly polarized along x.
KAPPA_POL = 100.0

#: Absolute slack used by inequality checks.
INEQUALITY_SLACK = 1e-9


@dataclass(frozen=True)
class PolarizedState:
    """Gaussian summary of a (thermal) two-mode coherent state.

    Parameters
    ----------
    alpha_x, alpha_y : complex
        Central coherent amplitudes of the x and y modes, in sqrt(photons).
    n_th : float
        Mean thermal photon number per mode (same in both modes).
    """

    alpha_x: complex
    alpha_y: complex = 0j
    n_th: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha_x", complex(self.alpha_x))
        object.__setattr__(self, "alpha_y", complex(self.alpha_y))
        object.__setattr__(self, "n_th", float(self.n_th))
        if not self.n_th >= 0.0:
            raise ValueError(f"n_th must be >= 0, got {self.n_th}")

    @property
    def intensity_x(self) -> float:
        return abs(self.alpha_x) ** 2

    @property
    def intensity_y(self) -> float:
        return abs(self.alpha_y) ** 2

    @property
    def is_pure(self) -> bool:
        return self.n_th == 0.0

    def is_strongly_polarized(self, kappa_pol: float = KAPPA_POL) -> bool:
        return self.intensity_x >= kappa_pol * self.intensity_y

    @property
    def thermal_ratio(self) -> float:
        """r = n_th / |alpha_x|^2."""
        if self.alpha_x == 0:
            raise ZeroCarrier("thermal ratio needs |alpha_x| > 0")
        return self.n_th / self.intensity_x


@dataclass(frozen=True)
class StokesMoments:
    """Expectations of S0..S3 and, when computed, their variances."""

    s0: float
    s1: float
    s2: float
    s3: float
    v0: Optional[float] = None
    v1: Optional[float] = None
    v2: Optional[float] = None
    v3: Optional[float] = None

    @property
    def has_variances(self) -> bool:
        return None not in (self.v0, self.v1, self.v2, self.v3)

    def polarization_norm(self) -> float:
        """sqrt(s1^2 + s2^2 + s3^2); equals s0 for a fully polarized field."""
        return math.sqrt(self.s1**2 + self.s2**2 + self.s3**2)


@dataclass(frozen=True)
class NormalizedStokes:
    """Stokes expectations S2, S3 divided by the carrier amplitude |alpha_x|."""

    s2n: float
    s3n: float

    def __post_init__(self):
        if not (math.isfinite(self.s2n) and math.isfinite(self.s3n)):
            raise ValueError("normalized Stokes values must be finite")


def stokes_expectations(state: PolarizedState) -> StokesMoments:
    """Return <S0>..<S3> for ``state``; variance fields are left unset.

    The thermal contribution only enters S0 (+2 n_th); it cancels in S1 and
    averages out of the cross terms S2, S3.
    """
    ax, ay = state.alpha_x, state.alpha_y
    ix, iy = state.intensity_x, state.intensity_y
    cross = ax.conjugate() * ay
    return StokesMoments(
        s0=ix + iy + 2.0 * state.n_th,
        s1=ix - iy,
        s2=2.0 * cross.real,
        s3=2.0 * cross.imag,
    )


def stokes_variances(state: PolarizedState, kappa_pol: float = KAPPA_POL) -> StokesMoments:
    """Return the expectations together with the variances V0..V3.

    Pure coherent states have ``V_i = <S0>`` for every i.  For thermal
    coherent states V2 and V3 are only known in the strong-polarization
    regime, where neglecting y-mode thermal fluctuations gives
    ``V2 = V3 = n_th + |alpha_x|^2``; outside it we refuse.  V0 and V1 are
    the exact photon-number variances of two independent displaced thermal
    modes, ``n(n+1) + |alpha|^2 (2n+1)`` summed over x and y.

    Raises
    ------
    PolarizationTooWeak
        ``n_th > 0`` and the state is not strongly polarized.
    """
    m = stokes_expectations(state)
    if state.is_pure:
        v = m.s0
        return StokesMoments(m.s0, m.s1, m.s2, m.s3, v, v, v, v)
    if not state.is_strongly_polarized(kappa_pol):
        raise PolarizationTooWeak(
            f"|alpha_x|^2={state.intensity_x:g} < {kappa_pol:g}*|alpha_y|^2="
            f"{kappa_pol * state.intensity_y:g}; thermal S2/S3 variances undefined"
        )
    n = state.n_th
    v_number = 2.0 * n * (n + 1.0) + (state.intensity_x + state.intensity_y) * (2.0 * n + 1.0)
    v_cross = n + state.intensity_x
    return StokesMoments(m.s0, m.s1, m.s2, m.s3, v_number, v_number, v_cross, v_cross)


def normalized_stokes(state: PolarizedState) -> NormalizedStokes:
    """Divide <S2>, <S3> by |alpha_x|."""
    carrier = abs(state.alpha_x)
    if carrier == 0.0:
        raise ZeroCarrier("cannot normalize by |alpha_x| = 0")
    m = stokes_expectations(state)
    return NormalizedStokes(m.s2 / carrier, m.s3 / carrier)


def normalized_variances(state: PolarizedState, kappa_pol: float = KAPPA_POL) -> tuple[float, float]:
    """Normalized S2/S3 variances ``(1 + r, 1 + r)`` with r = n_th/|alpha_x|^2.

    This is the leading order of V/|alpha_x|^2 in the strong-polarization
    regime; r = 0 is the unit shot-noise level.
    """
    if state.alpha_x == 0:
        raise ZeroCarrier("normalized variances need |alpha_x| > 0")
    if not state.is_strongly_polarized(kappa_pol):
        raise PolarizationTooWeak("normalized variances need a strongly polarized state")
    v = 1.0 + state.thermal_ratio
    return v, v


def encode_modulation(
    carrier: float, target: NormalizedStokes, kappa_pol: float = KAPPA_POL
) -> PolarizedState:
    """Build the pure state whose normalized (S2, S3) equal ``target``.

    The carrier amplitude alpha_x is taken real and positive; then
    ``alpha_y = (s2n + i*s3n) / 2`` reproduces the requested values exactly
    because <S2> + i<S3> = 2 conj(alpha_x) alpha_y.

    Raises
    ------
    ModulationTooLarge
        The resulting state is not strongly polarized.
    """
    if not carrier > 0.0:
        raise ValueError(f"carrier must be > 0, got {carrier}")
    state = PolarizedState(complex(carrier), complex(target.s2n, target.s3n) / 2.0)
    if not state.is_strongly_polarized(kappa_pol):
        raise ModulationTooLarge(
            f"|alpha_y|^2={state.intensity_y:g} too large for carrier |alpha_x|^2={state.intensity_x:g}"
        )
    return state


class UncertaintyCheck(NamedTuple):
    product: float
    bound: float
    satisfied: bool


def uncertainty_product(moments: StokesMoments) -> UncertaintyCheck:
    """Check sqrt(V2 V3) >= |<S1>|."""
    if moments.v2 is None or moments.v3 is None:
        raise ValueError("moments carry no S2/S3 variances; use stokes_variances()")
    product = math.sqrt(moments.v2 * moments.v3)
    bound = abs(moments.s1)
    return UncertaintyCheck(product, bound, product >= bound - INEQUALITY_SLACK)
