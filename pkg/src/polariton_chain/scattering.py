"""Two-polariton scattering amplitudes on the infinite chain.

A two-polariton plane wave |q, K> is not an eigenstate of the effective
Hamiltonian: acting with it leaves two source terms in which one constituent
sits exactly at a dispersion pole.  The scattering ansatz

    |Psi> = |q, K> + t1 |-q, K> + t2 |-q', K>

removes both source terms, where q' is the degenerate relative momentum with
omega(q', K) = omega(q, K) and |q'| != |q|.  In relative-coordinate site space
(r = z2 - z1 > 0) the three kets read e^{iqr}, e^{-iqr} and e^{iq'r}; the
localized resonance branch therefore needs Im q'd >= 0.  The two cancellation
conditions are linear in (t1, t2):

    [1 + i a(q, p)] + t1 [1 - i a(q, p)] + t2 [1 + i a(q', p)] = 0,
    p = (k0 - K)d  and  p = (k0 + K)d,

with the interaction coefficient a(q, p) = sin(qd) / [cos(qd) - cos(pd)].
For an open inelastic channel (real q') the solve uses the q' sign carrying
outgoing flux, i.e. relative group velocities of the q and q' waves opposite
in sign; the reported q' keeps the Re in [0, pi] convention.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    DegenerateDenominator,
    DegenerateQuadratic,
    PoleAtResonance,
    PoleInACoeff,
)
from .kinematics import (
    ChainParams,
    ComplexMomentum,
    PairMomentum,
    ROOT_MATCH_TOL,
    TOL_IM,
    _as_pair,
    _pair_trig,
    _partner_cos,
    check_pair_pole,
    group_velocity_pair,
    omega_pair,
    pair_energy_of_cos,
    reduce_zone,
)

A_COEFF_TOL = 1e-9

#: |t2| below this counts as a purely elastic solution.
ELASTIC_T2_TOL = 1e-12


class Channel(Enum):
    """Classification of a two-polariton scattering point."""

    INELASTIC_OPEN = "inelastic"
    RESONANCE = "resonance"
    ELASTIC_PURE = "elastic"


def a_coeff(qd: float, pd: float) -> float:
    """Interaction coefficient a(q, p) = sin(qd) / [cos(qd) - cos(pd)]."""
    den = math.cos(qd) - math.cos(pd)
    if abs(den) < A_COEFF_TOL:
        raise PoleInACoeff(f"cos(qd) == cos(pd) at qd={qd}, pd={pd}")
    return math.sin(qd) / den


def _a_any(qd, pd):
    """a(q, p) for possibly complex qd (entire continuation of sin/cos)."""
    return cmath.sin(qd) / (cmath.cos(qd) - cmath.cos(pd))


@dataclass(frozen=True)
class ScatteringSolution:
    """Solution of the two-polariton scattering problem at one (q, K) point.

    Attributes:
        input: the incoming pair momentum.
        t1: elastic amplitude (into -q).
        t2: amplitude of the q' channel (inelastic wave or localized piece).
        qprime: degenerate partner, Re in [0, pi], Im >= 0.
        qprime_solve: signed q'd actually used in the linear solve (debug;
            for an open channel its relative group velocity opposes v(q, K)).
        channel: channel classification.
        velocity_ratio: |v(q',K) / v(q,K)| (open inelastic channel only).
        velocity_ratio_signed: signed ratio (debug; open channel only).
        unitarity_defect: deviation from the channel's probability identity.
        omega: total pair energy.
    """

    input: PairMomentum
    t1: complex
    t2: complex
    qprime: ComplexMomentum
    qprime_solve: complex
    channel: Channel
    velocity_ratio: Optional[float]
    velocity_ratio_signed: Optional[float]
    unitarity_defect: float
    omega: float

    @property
    def elastic_probability(self) -> float:
        return abs(self.t1) ** 2

    @property
    def inelastic_probability(self) -> float:
        if self.channel is Channel.INELASTIC_OPEN:
            return abs(self.t2) ** 2 * self.velocity_ratio
        return 0.0


def _degenerate_conditions(params: ChainParams, Kd: float) -> bool:
    """True when the two cancellation conditions coincide (K = 0 or pi)."""
    sm, cm, sp, cp = _pair_trig(params, Kd)
    scale = 1.0 + abs(sm) + abs(cm)
    return abs(sm - sp) < 1e-12 * scale and abs(cm - cp) < 1e-12 * scale


def t1_K0(params: ChainParams, qd: float) -> complex:
    """Elastic amplitude at vanishing center-of-mass momentum.

    t1 = -(e^{iqd} - cos k0d) / (e^{-iqd} - cos k0d); unit modulus for real qd.
    """
    qd = reduce_zone(float(qd))
    c0 = math.cos(params.k0d)
    den = cmath.exp(-1j * qd) - c0
    if abs(den) < 1e-12:
        raise DegenerateDenominator("e^{-iqd} - cos k0d vanished")
    return -(cmath.exp(1j * qd) - c0) / den


def solve_scattering(params: ChainParams, p) -> ScatteringSolution:
    """Solve the two cancellation conditions for (t1, t2) and classify."""
    p = _as_pair(p)
    check_pair_pole(params, p)
    w = omega_pair(params, p)
    sm, cm, sp, cp = _pair_trig(params, p.Kd)
    pm = params.k0d - p.Kd
    pp = params.k0d + p.Kd

    if _degenerate_conditions(params, p.Kd):
        # Both conditions collapse into one; the q' channel decouples exactly.
        aq = a_coeff(p.qd, pm)
        t1 = -(1.0 + 1j * aq) / (1.0 - 1j * aq)
        xprime = _partner_cos(params, p.Kd, p.qd)
        qpd = cmath.acos(xprime)
        if qpd.imag < 0:
            qpd = qpd.conjugate()
        qprime = ComplexMomentum(abs(qpd.real), abs(qpd.imag) if abs(qpd.imag) > 0 else 0.0)
        return ScatteringSolution(
            input=p,
            t1=t1,
            t2=0.0,
            qprime=qprime,
            qprime_solve=qprime.as_complex,
            channel=Channel.ELASTIC_PURE,
            velocity_ratio=None,
            velocity_ratio_signed=None,
            unitarity_defect=abs(abs(t1) - 1.0),
            omega=w,
        )

    xprime = _partner_cos(params, p.Kd, p.qd)
    qpd = cmath.acos(xprime)
    if qpd.imag < 0:
        qpd = qpd.conjugate()
    if qpd.real < 0:
        qpd = complex(-qpd.real, qpd.imag)

    if qpd.imag < TOL_IM:
        qp_real = qpd.real
        w_out = omega_pair(params, PairMomentum(p.Kd, qp_real))
        if abs(w_out - w) > 1e-9 * (abs(w) + params.gamma_ref):
            raise DegenerateQuadratic(
                "real partner failed the energy degeneracy post-check"
            )
        v_in = group_velocity_pair(params, p)
        v_out = group_velocity_pair(params, PairMomentum(p.Kd, qp_real))
        # outgoing flux: the q' wave must run against the incoming q wave
        if v_in * v_out > 0:
            qp_real = -qp_real
            v_out = -v_out
        qp_solve = complex(qp_real)
        ratio_signed = v_out / v_in
        ratio = abs(ratio_signed)
    else:
        qp_solve = qpd
        ratio = None
        ratio_signed = None

    for pd in (pm, pp):
        if abs(cmath.cos(qp_solve) - math.cos(pd)) < A_COEFF_TOL:
            raise PoleInACoeff("q' channel sits on an interaction pole")

    aqp = a_coeff(p.qd, pp)
    aqm = a_coeff(p.qd, pm)
    apj = _a_any(qp_solve, pp)
    apm = _a_any(qp_solve, pm)
    mat = np.array(
        [[1.0 - 1j * aqp, 1.0 + 1j * apj], [1.0 - 1j * aqm, 1.0 + 1j * apm]],
        dtype=complex,
    )
    rhs = np.array([-(1.0 + 1j * aqp), -(1.0 + 1j * aqm)], dtype=complex)
    t1, t2 = np.linalg.solve(mat, rhs)

    qprime = ComplexMomentum(abs(qpd.real), abs(qpd.imag) if abs(qpd.imag) > 0 else 0.0)
    if abs(t2) <= ELASTIC_T2_TOL:
        channel = Channel.ELASTIC_PURE
        defect = abs(abs(t1) - 1.0)
        ratio = None
        ratio_signed = None
    elif qpd.imag >= TOL_IM:
        channel = Channel.RESONANCE
        defect = abs(abs(t1) - 1.0)
    else:
        channel = Channel.INELASTIC_OPEN
        defect = abs(abs(t1) ** 2 + abs(t2) ** 2 * ratio - 1.0)
    return ScatteringSolution(
        input=p,
        t1=complex(t1),
        t2=complex(t2),
        qprime=qprime,
        qprime_solve=qp_solve,
        channel=channel,
        velocity_ratio=ratio,
        velocity_ratio_signed=ratio_signed,
        unitarity_defect=float(defect),
        omega=w,
    )


def closed_form_t1_t2(params: ChainParams, p, qprime_solve: complex):
    """Quotient form of the solution of the cancellation conditions.

    Algebraically identical to the 2x2 linear solve; kept as an independent
    evaluation path to cross-check against transcription mistakes.
    """
    p = _as_pair(p)
    pp = params.k0d + p.Kd
    pm = params.k0d - p.Kd
    al = a_coeff(p.qd, pp)
    be = a_coeff(p.qd, pm)
    alp = _a_any(qprime_solve, pp)
    bep = _a_any(qprime_solve, pm)
    den = al * (bep - 1j) + 1j * (be + bep) - alp * (be + 1j)
    t1 = (al * (bep - 1j) + 1j * (be - bep) - alp * (be - 1j)) / den
    t2 = 2j * (al - be) / den
    return t1, t2


def scattering_length(params: ChainParams) -> float:
    """Low-energy scattering length a = d / [2 (1 - cos k0d)]."""
    return 0.5 / (1.0 - math.cos(params.k0d))


def lieb_liniger_t1(a: float, qd) -> complex:
    """Contact-interaction reference amplitude -(1 + 2iqa) / (1 - 2iqa).

    The unique unit-modulus first-order rational amplitude whose small-q
    expansion matches t1_K0 through O(q) for scattering length a.
    """
    if a <= 0:
        raise ValueError("scattering length must be positive")
    qa = np.asarray(qd) * a
    result = -(1.0 + 2j * qa) / (1.0 - 2j * qa)
    if np.ndim(result) == 0:
        return complex(result)
    return result


# ---------------------------------------------------------------------------
# Vectorized grid classification
# ---------------------------------------------------------------------------

ERR_OK = ""
ERR_POLE = "pole"
ERR_DEGENERATE = "degenerate"
ERR_ACOEFF = "acoeff-pole"

_CHANNEL_CODES = {
    0: Channel.ELASTIC_PURE,
    1: Channel.INELASTIC_OPEN,
    2: Channel.RESONANCE,
}


def solve_grid(params: ChainParams, Kd, qd):
    """Vectorized scattering solve over flat arrays of (Kd, qd) points.

    Returns a dict of arrays: t1, t2, qprime (complex, reported branch),
    im_qprime, channel (int code: 0 elastic, 1 inelastic, 2 resonance, -1
    error), velocity_ratio, abs_t1_sq, inelastic_prob, unitarity_defect and
    error (string code per cell).  Cells never raise; failures are marked.
    """
    Kd = reduce_zone(np.asarray(Kd, dtype=float).ravel())
    qd = reduce_zone(np.asarray(qd, dtype=float).ravel())
    n = Kd.size
    gr, gl, k0d = params.gamma_r, params.gamma_l, params.k0d

    k1 = reduce_zone(Kd + qd)
    k2 = reduce_zone(Kd - qd)
    pole_ok = np.ones(n, dtype=bool)
    for k in (k1, k2):
        for pole in (k0d, -k0d):
            pole_ok &= np.abs(reduce_zone(k - pole)) > 1e-9

    sm = np.sin(k0d - Kd)
    cm = np.cos(k0d - Kd)
    sp = np.sin(k0d + Kd)
    cp = np.cos(k0d + Kd)
    x = np.cos(qd)

    with np.errstate(divide="ignore", invalid="ignore"):
        g = gr * sm / (x - cm) + gl * sp / (x - cp)
        c1 = -g
        c2 = gr * sm + gl * sp + g * (cm + cp)
        c3 = -gr * sm * cp - gl * sp * cm - g * cm * cp
        disc = (c2 * c2 - 4.0 * c1 * c3).astype(complex)
        sq = np.sqrt(disc)
        sq = np.where(c2 * sq.real < 0, -sq, sq)
        qq = -0.5 * (c2 + sq)
        r1 = qq / c1
        r2 = np.where(qq != 0, c3 / np.where(qq != 0, qq, 1.0), np.inf)
        pick2 = np.abs(r1 - x) <= np.abs(r2 - x)
        xprime = np.where(pick2, r2, r1)
        degen = (np.abs(r1 - x) <= ROOT_MATCH_TOL) & (np.abs(r2 - x) <= ROOT_MATCH_TOL)
        # Newton polish of the degeneracy condition
        for _ in range(4):
            h = gr * sm / (xprime - cm) + gl * sp / (xprime - cp) - g
            hp = -gr * sm / (xprime - cm) ** 2 - gl * sp / (xprime - cp) ** 2
            step = np.where(hp != 0, h / np.where(hp != 0, hp, 1.0), 0.0)
            step = np.where(
                ~np.isfinite(step) | (np.abs(step) > 1.0 + np.abs(xprime)), 0.0, step
            )
            xprime = xprime - step

        qpd = np.arccos(xprime.astype(complex))
        qpd = np.where(qpd.imag < 0, qpd.conj(), qpd)
        qpd = np.where(qpd.real < 0, -qpd.conj(), qpd)
        is_real = np.abs(qpd.imag) < TOL_IM

        # group velocities (relative coordinate)
        def vpair(qq_):
            kk1 = Kd + qq_
            kk2 = Kd - qq_
            v1 = 0.25 * gr / np.sin(0.5 * (kk1 - k0d)) ** 2 - 0.25 * gl / np.sin(
                0.5 * (kk1 + k0d)
            ) ** 2
            v2 = 0.25 * gr / np.sin(0.5 * (kk2 - k0d)) ** 2 - 0.25 * gl / np.sin(
                0.5 * (kk2 + k0d)
            ) ** 2
            return v1 - v2

        v_in = vpair(qd)
        qp_real = qpd.real.copy()
        v_out = vpair(qp_real)
        flip = is_real & (v_in * v_out > 0)
        qp_real = np.where(flip, -qp_real, qp_real)
        v_out = np.where(flip, -v_out, v_out)
        qp_solve = np.where(is_real, qp_real.astype(complex), qpd)

        # interaction coefficients
        def a_of(qq_, s_, c_):
            return np.sin(qq_) / (np.cos(qq_) - c_)

        aqp = a_of(qd.astype(complex), sp, cp)
        aqm = a_of(qd.astype(complex), sm, cm)
        apj = a_of(qp_solve, sp, cp)
        apm = a_of(qp_solve, sm, cm)

        # degenerate conditions (K = 0 or pi): elastic collapse; the q'
        # channel decouples there, so its interaction poles are irrelevant
        scale_deg = 1.0 + np.abs(sm) + np.abs(cm)
        collapsed = (np.abs(sm - sp) < 1e-12 * scale_deg) & (
            np.abs(cm - cp) < 1e-12 * scale_deg
        )
        acoeff_bad = ~collapsed & (
            (np.abs(np.cos(qp_solve) - cp) < A_COEFF_TOL)
            | (np.abs(np.cos(qp_solve) - cm) < A_COEFF_TOL)
        )

        # Cramer solve of the 2x2 system
        m11 = 1.0 - 1j * aqp
        m12 = 1.0 + 1j * apj
        m21 = 1.0 - 1j * aqm
        m22 = 1.0 + 1j * apm
        b1 = -(1.0 + 1j * aqp)
        b2 = -(1.0 + 1j * aqm)
        det = m11 * m22 - m12 * m21
        t1 = np.where(det != 0, (b1 * m22 - m12 * b2) / np.where(det != 0, det, 1.0), np.nan)
        t2 = np.where(det != 0, (m11 * b2 - b1 * m21) / np.where(det != 0, det, 1.0), np.nan)
        t1 = np.where(collapsed, -(1.0 + 1j * aqm) / (1.0 - 1j * aqm), t1)
        t2 = np.where(collapsed, 0.0, t2)

        ratio = np.where(is_real & ~collapsed, np.abs(v_out / v_in), np.nan)
        elastic = collapsed | (np.abs(t2) <= ELASTIC_T2_TOL)
        channel = np.where(elastic, 0, np.where(is_real, 1, 2))
        abs_t1_sq = np.abs(t1) ** 2
        inel = np.where(channel == 1, np.abs(t2) ** 2 * ratio, 0.0)
        defect = np.where(
            channel == 1,
            np.abs(abs_t1_sq + np.abs(t2) ** 2 * ratio - 1.0),
            np.abs(np.abs(t1) - 1.0),
        )

    error = np.full(n, ERR_OK, dtype=object)
    error[~pole_ok] = ERR_POLE
    error[pole_ok & degen] = ERR_DEGENERATE
    error[pole_ok & ~degen & acoeff_bad] = ERR_ACOEFF
    bad = error != ERR_OK
    channel = np.where(bad, -1, channel)
    for arr in (t1, t2, qpd, ratio, abs_t1_sq, inel, defect):
        arr[bad] = np.nan
    return {
        "Kd": Kd,
        "qd": qd,
        "t1": t1,
        "t2": t2,
        "qprime": qpd,
        "qprime_solve": qp_solve,
        "im_qprime": np.where(bad, np.nan, qpd.imag),
        "channel": channel,
        "velocity_ratio": ratio,
        "abs_t1_sq": abs_t1_sq,
        "inelastic_prob": inel,
        "unitarity_defect": defect,
        "error": error,
    }


@dataclass(frozen=True)
class ChannelMap:
    """Per-cell scattering summary over a rectangular (K, q) grid.

    Arrays have shape (len(Kd_values), len(qd_values)), row-major in K.
    `channel` holds int codes: 0 elastic, 1 inelastic, 2 resonance, -1 error.
    """

    Kd_values: np.ndarray
    qd_values: np.ndarray
    im_qprime: np.ndarray
    abs_t1_sq: np.ndarray
    inelastic_prob: np.ndarray
    channel: np.ndarray
    error: np.ndarray

    def channel_name(self, code: int) -> str:
        if code < 0:
            return "error"
        return _CHANNEL_CODES[int(code)].value


def classify_region(
    params: ChainParams,
    Kd_values: Sequence[float],
    qd_values: Sequence[float],
) -> ChannelMap:
    """Classify every cell of a (K, q) grid; failures never abort the sweep."""
    Kd_values = np.asarray(Kd_values, dtype=float)
    qd_values = np.asarray(qd_values, dtype=float)
    KK, QQ = np.meshgrid(Kd_values, qd_values, indexing="ij")
    out = solve_grid(params, KK.ravel(), QQ.ravel())
    shape = KK.shape
    return ChannelMap(
        Kd_values=Kd_values,
        qd_values=qd_values,
        im_qprime=out["im_qprime"].reshape(shape),
        abs_t1_sq=out["abs_t1_sq"].reshape(shape),
        inelastic_prob=out["inelastic_prob"].reshape(shape),
        channel=out["channel"].reshape(shape),
        error=out["error"].reshape(shape),
    )
