"""Dispersion kinematics of polaritons in a 1D atom array coupled to a waveguide.

Everything here is dimensionless: the lattice constant d and hbar are set to 1,
all rates are measured in a caller-chosen reference rate, momenta are phases per
lattice site in radians inside the first Brillouin zone (-pi, pi].

The single-polariton dispersion is

    omega(k) = -(gamma_r / 2) cot((k - k0) / 2) + (gamma_l / 2) cot((k + k0) / 2)

with simple poles at k = +-k0.  Two-polariton quantities are expressed through
the center-of-mass momentum K = (k1 + k2)/2 and relative momentum
q = (k1 - k2)/2; the pair energy depends on q only through cos(q), which is what
makes the degenerate-partner problem a quadratic in cos(q').
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DegenerateQuadratic, PoleAtResonance, RequiresNonChiral

TWO_PI = 2.0 * math.pi

#: Guard distance (radians) around the dispersion poles +-k0d.
POLE_TOL = 1e-9

#: Imaginary parts of q'd below this threshold count as real (open channel).
TOL_IM = 1e-8

#: If both quadratic roots lie within this distance of cos(qd) the point is
#: flagged DegenerateQuadratic instead of guessing a partner.
ROOT_MATCH_TOL = 1e-8


def reduce_zone(x):
    """Reduce momenta (radians) to the first Brillouin zone (-pi, pi].

    Values already inside the zone are returned unchanged (bit-exact), so
    symmetry identities like omega(-k) == omega(k) survive at the floating
    point level.
    """
    if np.isscalar(x) or isinstance(x, float):
        x = float(x)
        if -math.pi < x <= math.pi:
            return x
        y = math.fmod(x + math.pi, TWO_PI)
        if y <= 0.0:
            y += TWO_PI
        return y - math.pi
    x = np.asarray(x, dtype=float)
    wrapped = np.mod(x + math.pi, TWO_PI) - math.pi
    wrapped = np.where(wrapped == -math.pi, math.pi, wrapped)
    return np.where((x > -math.pi) & (x <= math.pi), x, wrapped)


def _circle_distance(x, y):
    """Distance between two phases on the momentum circle."""
    return np.abs(reduce_zone(np.asarray(x) - y))


@dataclass(frozen=True)
class ChainParams:
    """Physical configuration of the chain in dimensionless units.

    Attributes:
        gamma_r: decay rate into right-propagating waveguide modes (>= 0).
        gamma_l: decay rate into left-propagating modes (>= 0).
        gamma_s: side loss rate (>= 0).  Excluded from all analytic
            kinematics; only the finite-chain oracle uses it.
        k0d: resonance phase per lattice site, strictly inside (0, pi).
    """

    gamma_r: float
    gamma_l: float
    k0d: float
    gamma_s: float = 0.0

    def __post_init__(self):
        if self.gamma_r < 0 or self.gamma_l < 0 or self.gamma_s < 0:
            raise ValueError("decay rates must be non-negative")
        if self.gamma_r + self.gamma_l <= 0:
            raise ValueError("gamma_r + gamma_l must be positive")
        if not (POLE_TOL < self.k0d < math.pi - POLE_TOL):
            raise ValueError(
                f"k0d must lie strictly inside (0, pi), got {self.k0d!r}"
            )

    @property
    def is_nonchiral(self) -> bool:
        return self.gamma_r == self.gamma_l

    @property
    def is_fully_chiral(self) -> bool:
        return self.gamma_l == 0.0 or self.gamma_r == 0.0

    @property
    def chirality_ratio(self) -> float:
        """gamma_r / gamma_l; +inf for a fully chiral chain."""
        if self.gamma_l == 0.0:
            return math.inf
        return self.gamma_r / self.gamma_l

    @property
    def gamma_ref(self) -> float:
        """Scale used in relative tolerances."""
        return max(self.gamma_r, self.gamma_l)

    def mirrored(self) -> "ChainParams":
        """Spatially reflected chain (swaps the two propagation directions)."""
        return ChainParams(self.gamma_l, self.gamma_r, self.k0d, self.gamma_s)


@dataclass(frozen=True)
class BlochMomentum:
    """Single-polariton momentum, zone-reduced on construction."""

    kd: float

    def __post_init__(self):
        object.__setattr__(self, "kd", reduce_zone(float(self.kd)))


@dataclass(frozen=True)
class PairMomentum:
    """Center-of-mass / relative momentum pair, zone-reduced on construction."""

    Kd: float
    qd: float

    def __post_init__(self):
        object.__setattr__(self, "Kd", reduce_zone(float(self.Kd)))
        object.__setattr__(self, "qd", reduce_zone(float(self.qd)))

    @property
    def k1d(self) -> float:
        return reduce_zone(self.Kd + self.qd)

    @property
    def k2d(self) -> float:
        return reduce_zone(self.Kd - self.qd)


@dataclass(frozen=True)
class ComplexMomentum:
    """Relative momentum of the inelastic/resonance channel.

    `im > 0` marks the localized branch (scattering resonance); `im` below
    TOL_IM counts as real and the channel is open.
    """

    re: float
    im: float

    def __post_init__(self):
        if self.im < 0:
            raise ValueError("localized branch requires im >= 0")

    @property
    def is_real(self) -> bool:
        return self.im < TOL_IM

    @property
    def as_complex(self) -> complex:
        return complex(self.re, self.im)


def _as_kd(k: Union[float, BlochMomentum]) -> float:
    if isinstance(k, BlochMomentum):
        return k.kd
    return reduce_zone(float(k))


def _as_pair(p: Union[PairMomentum, tuple]) -> PairMomentum:
    if isinstance(p, PairMomentum):
        return p
    return PairMomentum(*p)


def check_single_pole(params: ChainParams, kd) -> None:
    """Raise PoleAtResonance if kd is within POLE_TOL of either pole."""
    d1 = _circle_distance(kd, params.k0d)
    d2 = _circle_distance(kd, -params.k0d)
    if np.any(d1 <= POLE_TOL) or np.any(d2 <= POLE_TOL):
        raise PoleAtResonance(
            f"kd within {POLE_TOL} of a dispersion pole at +-k0d={params.k0d}"
        )


def check_pair_pole(params: ChainParams, p: PairMomentum) -> None:
    check_single_pole(params, p.k1d)
    check_single_pole(params, p.k2d)


def _cot(x):
    return np.cos(x) / np.sin(x)


def omega_single(params: ChainParams, k) -> float:
    """Single-polariton dispersion omega(k) in units of the reference rate."""
    kd = _as_kd(k) if not isinstance(k, np.ndarray) else reduce_zone(k)
    check_single_pole(params, kd)
    return (-0.5 * params.gamma_r) * _cot(0.5 * (kd - params.k0d)) + (
        0.5 * params.gamma_l
    ) * _cot(0.5 * (kd + params.k0d))


def group_velocity_single(params: ChainParams, k) -> float:
    """Analytic derivative of omega(k); units reference-rate times d."""
    kd = _as_kd(k) if not isinstance(k, np.ndarray) else reduce_zone(k)
    check_single_pole(params, kd)
    return 0.25 * params.gamma_r / np.sin(0.5 * (kd - params.k0d)) ** 2 - (
        0.25 * params.gamma_l
    ) / np.sin(0.5 * (kd + params.k0d)) ** 2


def degenerate_partner_single(params: ChainParams, k) -> Optional[BlochMomentum]:
    """The distinct momentum k' with omega(k') == omega(k), if one exists.

    The degeneracy condition is reduced to a quadratic in e^{ik'd}; the root
    equal to e^{ikd} is discarded.  Non-chiral chains have k' = -k exactly; a
    fully chiral chain has a strictly monotonic dispersion branch and no
    partner.  Returns None when no distinct real partner exists (also at the
    band-edge extrema k in {0, pi}).
    """
    kd = _as_kd(k)
    check_single_pole(params, kd)
    if params.is_nonchiral:
        if kd == 0.0 or kd == math.pi:
            return None
        return BlochMomentum(-kd)

    w = float(omega_single(params, kd))
    a = cmath.exp(1j * params.k0d)
    z = cmath.exp(1j * kd)
    half_diff = 0.5j * (params.gamma_r - params.gamma_l)
    half_sum = 0.5j * (params.gamma_r + params.gamma_l)
    coeffs = [
        a * (-half_diff - w),
        -half_sum * (a * a - 1.0) + w * (1.0 + a * a),
        a * (half_diff - w),
    ]
    if abs(coeffs[0]) == 0.0:
        return None
    roots = np.roots(coeffs)
    keep = roots[int(np.argmax(np.abs(roots - z)))]
    if abs(keep - z) <= ROOT_MATCH_TOL:
        return None
    # Newton polish on g(z') = omega(z') - w using the rational form of omega.
    for _ in range(4):
        num_r = keep / a
        num_l = keep * a
        g = (
            -0.5j * params.gamma_r * (num_r + 1.0) / (num_r - 1.0)
            + 0.5j * params.gamma_l * (num_l + 1.0) / (num_l - 1.0)
            - w
        )
        dg = (
            1j * params.gamma_r / a / (num_r - 1.0) ** 2
            - 1j * params.gamma_l * a / (num_l - 1.0) ** 2
        )
        if dg == 0:
            break
        keep = keep - g / dg
    if abs(abs(keep) - 1.0) > 1e-9:
        return None
    kpd = math.atan2(keep.imag, keep.real)
    try:
        w_partner = float(omega_single(params, kpd))
    except PoleAtResonance:
        return None
    if abs(w_partner - w) > 1e-10 * max(abs(w), params.gamma_ref):
        return None
    partner = BlochMomentum(kpd)
    if _circle_distance(partner.kd, kd) <= ROOT_MATCH_TOL:
        return None
    return partner


def omega_pair(params: ChainParams, p) -> float:
    """Total two-polariton energy omega(K+q) + omega(K-q)."""
    p = _as_pair(p)
    check_pair_pole(params, p)
    return float(
        omega_single(params, p.k1d) + omega_single(params, p.k2d)
    )


def group_velocity_pair(params: ChainParams, p) -> float:
    """Relative group velocity d omega_pair / d q."""
    p = _as_pair(p)
    check_pair_pole(params, p)
    return float(
        group_velocity_single(params, p.k1d)
        - group_velocity_single(params, p.k2d)
    )


def _pair_trig(params: ChainParams, Kd):
    """(s-, c-, s+, c+) = sin/cos of (k0 -+ K)d used throughout the pair sector."""
    sm = np.sin(params.k0d - Kd)
    cm = np.cos(params.k0d - Kd)
    sp = np.sin(params.k0d + Kd)
    cp = np.cos(params.k0d + Kd)
    return sm, cm, sp, cp


def pair_energy_of_cos(params: ChainParams, Kd, x):
    """Pair energy as a function of x = cos(qd) at fixed K.

    omega(q, K) = gamma_r s- / (x - c-) + gamma_l s+ / (x - c+).
    """
    sm, cm, sp, cp = _pair_trig(params, Kd)
    return params.gamma_r * sm / (x - cm) + params.gamma_l * sp / (x - cp)


def degeneracy_quadratic(params: ChainParams, Kd, x):
    """Coefficients (c1, c2, c3) of the quadratic for x' = cos(q'd).

    Built directly from omega(q', K) == omega(q, K) by cross multiplication
    with the two pole factors (x' - c-)(x' - c+); the root x' == x is the
    trivial q' = +-q branch.
    """
    sm, cm, sp, cp = _pair_trig(params, Kd)
    g = pair_energy_of_cos(params, Kd, x)
    c1 = -g
    c2 = params.gamma_r * sm + params.gamma_l * sp + g * (cm + cp)
    c3 = (
        -params.gamma_r * sm * cp
        - params.gamma_l * sp * cm
        - g * cm * cp
    )
    return c1, c2, c3


def _partner_cos(params: ChainParams, Kd: float, qd: float) -> complex:
    """Solve the degeneracy quadratic and return the non-trivial root."""
    x = math.cos(qd)
    c1, c2, c3 = degeneracy_quadratic(params, Kd, x)
    scale = max(abs(c1), abs(c2), abs(c3))
    if scale == 0.0:
        raise DegenerateQuadratic("degeneracy quadratic vanished identically")
    disc = complex(c2 * c2 - 4.0 * c1 * c3)
    sq = cmath.sqrt(disc)
    if c2.real * sq.real < 0:
        sq = -sq
    qq = -0.5 * (c2 + sq)
    if abs(c1) * 1e14 < max(abs(c2), abs(c3)):
        # Quadratic degenerates to linear (pair energy ~ 0); the non-trivial
        # partner runs away to |cos q'| -> inf which still maps to a finite,
        # strongly localized q'.
        roots = [complex(x), c3 / c1 / x if x != 0.0 else qq / c1]
    else:
        roots = [qq / c1, c3 / qq if qq != 0 else qq / c1]
    d0 = abs(roots[0] - x)
    d1 = abs(roots[1] - x)
    if d0 <= ROOT_MATCH_TOL and d1 <= ROOT_MATCH_TOL:
        raise DegenerateQuadratic(
            f"both quadratic roots coincide with cos(qd) at Kd={Kd}, qd={qd}"
        )
    other = roots[1] if d0 <= d1 else roots[0]
    # Newton polish of the degeneracy condition in x'.
    sm, cm, sp, cp = _pair_trig(params, Kd)
    target = pair_energy_of_cos(params, Kd, x)
    for _ in range(4):
        if min(abs(other - cm), abs(other - cp)) < 1e-14:
            break
        h = (
            params.gamma_r * sm / (other - cm)
            + params.gamma_l * sp / (other - cp)
            - target
        )
        hp = (
            -params.gamma_r * sm / (other - cm) ** 2
            - params.gamma_l * sp / (other - cp) ** 2
        )
        if hp == 0:
            break
        step = h / hp
        if not (abs(step) <= 1.0 + abs(other)):
            break
        other = other - step
    return other


def degenerate_partner_pair(params: ChainParams, p) -> ComplexMomentum:
    """The degenerate relative momentum q' with omega(q',K) == omega(q,K).

    Returned with Re q'd in [0, pi] and Im q'd >= 0; Im below TOL_IM means a
    real partner (open inelastic channel, four-fold degeneracy), larger Im
    marks the localized resonance branch.
    """
    p = _as_pair(p)
    check_pair_pole(params, p)
    other = _partner_cos(params, p.Kd, p.qd)
    qpd = cmath.acos(other)
    if qpd.imag < 0:
        qpd = qpd.conjugate()
    if qpd.real < 0:
        qpd = complex(-qpd.real, qpd.imag)
    if abs(qpd.imag) < TOL_IM:
        qpd = complex(qpd.real, abs(qpd.imag))
        w_in = omega_pair(params, p)
        w_out = omega_pair(params, PairMomentum(p.Kd, qpd.real))
        if abs(w_out - w_in) > 1e-9 * (abs(w_in) + params.gamma_ref):
            raise DegenerateQuadratic(
                "real partner failed the energy degeneracy post-check"
            )
    return ComplexMomentum(qpd.real, qpd.imag)


def effective_mass(params: ChainParams) -> float:
    """Effective mass of a slow polariton in a non-chiral chain.

    Convention: near k = 0 the dispersion expands as
    omega(k) ~ omega(0) + k^2 / m_e, i.e. m_e equals twice the inverse of the
    second derivative of omega at k = 0.
    """
    if not params.is_nonchiral:
        raise RequiresNonChiral("effective mass is defined for gamma_r == gamma_l")
    g0 = params.gamma_r
    return 2.0 * (1.0 - math.cos(params.k0d)) ** 2 / (g0 * math.sin(params.k0d))
