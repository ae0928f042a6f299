"""Photon-polariton conversion at the end of a semi-infinite chain.

A photon of frequency omega entering the array couples to the Bloch mode
k(omega) and its degenerate partner k'.  The reflection amplitude

    r(k) = -(e^{-i(k'+k0)d} - 1) / (e^{-i(k+k0)d} - 1)

cancels the pole-momentum source term that the chain end would otherwise
inject, and the entry probability density is 1 - |v_{k'}/v_k| |r(k)|^2.

The input relation is derived for a mode propagating toward the terminating
end (v_k > 0).  Modes with v_k < 0 reach the opposite end, so all boundary
quantities for them are evaluated on the mirror image of the chain
(gamma_r <-> gamma_l, k -> -k), which leaves every non-chiral result
unchanged and keeps probabilities in [0, 1] at every chirality.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import ConsistencyError, ModeOutOfRange, PoleAtResonance, RequiresNonChiral
from .kinematics import (
    BlochMomentum,
    ChainParams,
    POLE_TOL,
    _as_kd,
    check_single_pole,
    degenerate_partner_single,
    group_velocity_single,
    reduce_zone,
)

#: Probability clamping window around [0, 1]; larger violations raise.
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class BoundaryAmplitudes:
    """Boundary data of one Bloch mode.

    `k_partner` is None only for a fully chiral chain (no degenerate partner);
    at band-edge extrema the confluent limit k' -> k is used instead.
    """

    k: BlochMomentum
    k_partner: Optional[BlochMomentum]
    r: complex
    t: complex
    entry_probability: float


@dataclass(frozen=True)
class SubradiancePrediction:
    """Decay rate of the standing-wave mode xi of an N-atom chain."""

    N: int
    xi: int
    kd: float
    gamma_exact: float
    gamma_asymptotic: float


def f_factor(kd: float, k0d: float) -> complex:
    """Boundary sum factor f(k - k0) = 1 / (1 - e^{i(k0-k)d})."""
    if abs(reduce_zone(kd - k0d)) <= POLE_TOL:
        raise PoleAtResonance("f factor diverges at k == k0")
    return 1.0 / (1.0 - cmath.exp(1j * (k0d - kd)))


def _oriented(params: ChainParams, kd: float) -> Tuple[ChainParams, float, bool]:
    """Reduce to the frame where the mode runs toward the terminating end."""
    v = float(group_velocity_single(params, kd))
    if v < 0:
        return params.mirrored(), reduce_zone(-kd), True
    return params, kd, False


def _partner_kd(params: ChainParams, kd: float) -> Optional[float]:
    """Partner momentum for boundary matching.

    None means no partner exists at all (fully chiral); the confluent
    band-edge case (double root) returns k itself, reproducing the r -> -1
    mirror limit.
    """
    partner = degenerate_partner_single(params, kd)
    if partner is not None:
        return partner.kd
    if params.is_fully_chiral:
        return None
    return kd


def boundary_amplitudes(params: ChainParams, k) -> BoundaryAmplitudes:
    """Reflection/transmission amplitudes and entry probability for mode k."""
    kd_in = _as_kd(k)
    check_single_pole(params, kd_in)
    work, kd, _ = _oriented(params, kd_in)
    kpd = _partner_kd(work, kd)
    if kpd is None:
        r = 0.0
        t = -1j * math.sqrt(work.gamma_r) * f_factor(kd, work.k0d)
        entry = 1.0
        partner = None
    else:
        num = cmath.exp(-1j * (kpd + work.k0d)) - 1.0
        den = cmath.exp(-1j * (kd + work.k0d)) - 1.0
        r = -num / den
        t = -1j * math.sqrt(work.gamma_r) * (
            f_factor(kd, work.k0d) + r * f_factor(kpd, work.k0d)
        )
        if kpd == kd:
            ratio = 1.0  # confluent extremum: |v'/v| -> 1
        else:
            ratio = abs(
                group_velocity_single(work, kpd) / group_velocity_single(work, kd)
            )
        entry = 1.0 - ratio * abs(r) ** 2
        partner = BlochMomentum(kpd)
    if entry < -CLAMP_TOL or entry > 1.0 + CLAMP_TOL:
        raise ConsistencyError(
            f"entry probability {entry} outside [0, 1] beyond the clamping window"
        )
    entry = min(max(entry, 0.0), 1.0)
    return BoundaryAmplitudes(
        k=BlochMomentum(kd_in),
        k_partner=partner,
        r=complex(r),
        t=complex(t),
        entry_probability=float(entry),
    )


def reflection(params: ChainParams, k) -> complex:
    """Boundary reflection amplitude r(k); 0 when no partner exists."""
    return boundary_amplitudes(params, k).r


def input_transmission(params: ChainParams, k) -> complex:
    """Input transmission amplitude t(k) = -i sqrt(gamma_r d) [f + r f']."""
    return boundary_amplitudes(params, k).t


def entry_probability(params: ChainParams, k) -> float:
    """Probability for a photon at omega(k) to enter the array as a polariton."""
    return boundary_amplitudes(params, k).entry_probability


def exit_spectral_map(params: ChainParams, N: int, k) -> Tuple[float, complex]:
    """Exit probability and length phase for a polariton leaving an N-atom array.

    The exit probability equals the entry probability (reciprocity); the
    accumulated phase is e^{i L (k - k0)} with L = (N - 1) d.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    kd = _as_kd(k)
    amp = boundary_amplitudes(params, kd)
    phase = cmath.exp(1j * (N - 1) * (kd - params.k0d))
    return amp.entry_probability, phase


def asymptotic_rate_coefficient(k0d: float) -> float:
    """Dimensionless prefactor sin^2(k0d) / (1 - cos(k0d))^3 of the N^-3 law."""
    return math.sin(k0d) ** 2 / (1.0 - math.cos(k0d)) ** 3


def subradiant_rate(params: ChainParams, N: int, xi: int) -> SubradiancePrediction:
    """Decay rate prediction for the long-lived standing-wave mode xi.

    gamma_exact evaluates v_k (1 - |r(k)|^2) / (N d) at kd = pi xi / N;
    gamma_asymptotic is its leading small-k form
    2 pi^2 gamma_0 xi^2 / N^3 * sin^2(k0d)/(1 - cos k0d)^3.
    """
    if not params.is_nonchiral:
        raise RequiresNonChiral("subradiance formulas require gamma_r == gamma_l")
    if N < 2:
        raise ValueError("N must be >= 2")
    if xi < 1:
        raise ModeOutOfRange("mode index xi must be >= 1")
    kd = math.pi * xi / N
    if kd >= params.k0d - POLE_TOL:
        raise ModeOutOfRange(
            f"kd = pi*{xi}/{N} reaches the resonance pole region below k0d"
        )
    g0 = params.gamma_r
    amp = boundary_amplitudes(params, kd)
    v = abs(float(group_velocity_single(params, kd)))
    gamma_exact = v * (1.0 - abs(amp.r) ** 2) / N
    gamma_asym = (
        2.0 * math.pi**2 * g0 * xi**2 / N**3 * asymptotic_rate_coefficient(params.k0d)
    )
    return SubradiancePrediction(
        N=N, xi=xi, kd=kd, gamma_exact=gamma_exact, gamma_asymptotic=gamma_asym
    )
