import math

import numpy as np
import pytest

from polariton_chain import (
    BlochMomentum,
    ChainParams,
    PairMomentum,
    degenerate_partner_pair,
    degenerate_partner_single,
    effective_mass,
    group_velocity_pair,
    group_velocity_single,
    omega_pair,
    omega_single,
    reduce_zone,
)
from polariton_chain.errors import (
    DegenerateQuadratic,
    PoleAtResonance,
    RequiresNonChiral,
)
from conftest import (
    PI,
    five_point_derivative,
    richardson_second_derivative,
    sample_valid_k,
    sample_valid_pair,
)


# ---------------------------------------------------------------------------
# construction and zone reduction
# ---------------------------------------------------------------------------


def test_params_validation():
    with pytest.raises(ValueError):
        ChainParams(0.0, 0.0, 0.5 * PI)
    with pytest.raises(ValueError):
        ChainParams(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        ChainParams(1.0, 1.0, PI)
    with pytest.raises(ValueError):
        ChainParams(1.0, 1.0, 1e-10)
    with pytest.raises(ValueError):
        ChainParams(-1.0, 1.0, 1.0)
    # gamma_r = 0 with gamma_l > 0 is allowed (mirror symmetry)
    ChainParams(0.0, 1.0, 1.0)


def test_zone_reduction_range_and_identity():
    rng = np.random.default_rng(0)
    x = rng.uniform(-20, 20, 500)
    y = reduce_zone(x)
    assert np.all(y > -PI) and np.all(y <= PI)
    # already-reduced values must be returned unchanged (bit-exact)
    z = rng.uniform(-PI + 1e-12, PI, 500)
    assert np.all(reduce_zone(z) == z)
    assert reduce_zone(PI) == PI
    assert reduce_zone(-PI) == PI
    assert BlochMomentum(3 * PI).kd == pytest.approx(PI)


# ---------------------------------------------------------------------------
# omega_single
# ---------------------------------------------------------------------------


def test_omega_trivial_value(nonchiral_half):
    # both cotangents are -+1 at kd = 0, k0d = pi/2
    assert omega_single(nonchiral_half, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_omega_mirror_symmetry_exact():
    params = ChainParams(1.3, 1.3, 0.37 * PI)
    for kd in np.linspace(-3.0, 3.0, 401):
        assert omega_single(params, kd) == omega_single(params, -kd)


def test_omega_pole_guard(nonchiral_half):
    with pytest.raises(PoleAtResonance):
        omega_single(nonchiral_half, nonchiral_half.k0d + 1e-10)
    with pytest.raises(PoleAtResonance):
        omega_single(nonchiral_half, -nonchiral_half.k0d)


def test_omega_chiral_branch_shape(chiral_09):
    # extrema of a dense omega scan must coincide with sign changes of the
    # analytic group velocity on each branch arc
    k0d = chiral_09.k0d
    for lo, hi in [(-k0d + 0.05, k0d - 0.05)]:
        kd = np.linspace(lo, hi, 20001)
        w = omega_single(chiral_09, kd)
        v = group_velocity_single(chiral_09, kd)
        scan_extrema = np.flatnonzero(np.diff(np.sign(np.diff(w))) != 0)
        v_zero = np.flatnonzero(np.diff(np.sign(v)) != 0)
        assert scan_extrema.size == v_zero.size == 1
        assert abs(kd[scan_extrema[0]] - kd[v_zero[0]]) < 2 * (kd[1] - kd[0])


# ---------------------------------------------------------------------------
# group_velocity_single
# ---------------------------------------------------------------------------


def test_group_velocity_closed_form(nonchiral_half):
    assert group_velocity_single(nonchiral_half, PI / 4) == pytest.approx(
        math.sqrt(2.0), rel=1e-12
    )
    # omega is symmetric in k, stationary at the zone center
    assert group_velocity_single(nonchiral_half, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_group_velocity_nonchiral_appendix_form():
    params = ChainParams(1.7, 1.7, 0.31 * PI)
    g0, k0d = params.gamma_r, params.k0d
    for kd in np.linspace(-2.5, 2.5, 57):
        expected = (
            g0
            * math.sin(k0d)
            * math.sin(kd)
            / (math.cos(kd) - math.cos(k0d)) ** 2
        )
        assert group_velocity_single(params, kd) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("gr,gl,k0f", [(4.0, 1.0, 0.9), (1.0, 1.0, 0.5), (2.5, 1.0, 0.3)])
def test_group_velocity_matches_finite_difference(gr, gl, k0f):
    params = ChainParams(gr, gl, k0f * PI)
    rng = np.random.default_rng(1)
    for kd in sample_valid_k(rng, params, 40, guard=5e-2):
        fd = five_point_derivative(lambda k: omega_single(params, k), kd, 1e-4)
        assert group_velocity_single(params, kd) == pytest.approx(fd, rel=1e-6)


def test_group_velocity_fd_spec_point():
    params = ChainParams(4.0, 1.0, 0.9 * PI)
    fd = five_point_derivative(lambda k: omega_single(params, k), 0.3, 1e-4)
    assert group_velocity_single(params, 0.3) == pytest.approx(fd, rel=1e-6)


# ---------------------------------------------------------------------------
# degenerate partner (single)
# ---------------------------------------------------------------------------


def test_partner_nonchiral_is_minus_k(nonchiral_half):
    for kd in (0.3, -1.2, 2.9):
        partner = degenerate_partner_single(nonchiral_half, kd)
        assert partner.kd == -kd
    assert degenerate_partner_single(nonchiral_half, 0.0) is None
    assert degenerate_partner_single(nonchiral_half, PI) is None


def test_partner_fully_chiral_none():
    params = ChainParams(1.0, 0.0, 0.5 * PI)
    for kd in (-2.0, 0.4, 1.9):
        assert degenerate_partner_single(params, kd) is None


def test_partner_chiral_dense_scan(chiral_09):
    kd = 0.5
    partner = degenerate_partner_single(chiral_09, kd)
    assert partner is not None
    w0 = omega_single(chiral_09, kd)
    # brute-force bisection oracle on the zone
    grid = np.linspace(-PI + 1e-6, PI - 1e-6, 400001)
    ok = np.abs(reduce_zone(grid - chiral_09.k0d)) > 1e-4
    ok &= np.abs(reduce_zone(grid + chiral_09.k0d)) > 1e-4
    ok &= np.abs(grid - kd) > 1e-2
    grid = grid[ok]
    w = omega_single(chiral_09, grid) - w0
    sign_flip = np.flatnonzero(np.sign(w[:-1]) * np.sign(w[1:]) < 0)
    # drop brackets that straddle a pole-guard gap (omega flips sign across
    # the pole as well); genuine roots live inside contiguous grid runs
    spacing = grid[1] - grid[0]
    sign_flip = [i for i in sign_flip if grid[i + 1] - grid[i] < 2 * spacing]
    # refine each bracket and keep the root closest to the reported partner
    best = None
    for i in sign_flip:
        a, b = grid[i], grid[i + 1]
        for _ in range(80):
            m = 0.5 * (a + b)
            if (omega_single(chiral_09, a) - w0) * (omega_single(chiral_09, m) - w0) <= 0:
                b = m
            else:
                a = m
        root = 0.5 * (a + b)
        if best is None or abs(root - partner.kd) < abs(best - partner.kd):
            best = root
    assert best is not None
    assert abs(best - partner.kd) < 1e-8


def test_partner_energy_match_random():
    rng = np.random.default_rng(2)
    for _ in range(25):
        params = ChainParams(rng.uniform(0.3, 4.0), 1.0, rng.uniform(0.1, 0.9) * PI)
        for kd in sample_valid_k(rng, params, 8, guard=5e-2):
            partner = degenerate_partner_single(params, kd)
            if partner is None:
                continue
            w0 = omega_single(params, kd)
            w1 = omega_single(params, partner.kd)
            assert abs(w1 - w0) <= 1e-10 * max(abs(w0), params.gamma_ref)


# ---------------------------------------------------------------------------
# pair quantities
# ---------------------------------------------------------------------------


def test_omega_pair_symmetric_in_q(chiral_09):
    rng = np.random.default_rng(3)
    for Kd, qd in sample_valid_pair(rng, chiral_09, 50):
        assert omega_pair(chiral_09, PairMomentum(Kd, qd)) == pytest.approx(
            omega_pair(chiral_09, PairMomentum(Kd, -qd)), rel=1e-12
        )


def test_omega_pair_K0_doubles_single(nonchiral_half):
    p = PairMomentum(0.0, PI / 4)
    assert omega_pair(nonchiral_half, p) == pytest.approx(
        2.0 * omega_single(nonchiral_half, PI / 4), rel=1e-12
    )


def test_omega_pair_tiny_local_maximum(chiral_09):
    # at Kd = -1 the pair dispersion has a small local maximum near qd = 0
    Kd = -1.0
    qs = np.linspace(-0.4, 0.4, 161)
    w = np.array([omega_pair(chiral_09, PairMomentum(Kd, q)) for q in qs])
    i0 = np.argmin(np.abs(qs))
    imax = int(np.argmax(w))
    assert abs(qs[imax]) < 0.2
    assert w[imax] > w[0] and w[imax] > w[-1]
    assert w[i0] > w[i0 - 40] and w[i0] > w[i0 + 40]


def test_group_velocity_pair_chain_rule(chiral_09):
    p = PairMomentum(0.7, 1.3)
    lhs = group_velocity_pair(chiral_09, p)
    rhs = group_velocity_single(chiral_09, p.k1d) - group_velocity_single(
        chiral_09, p.k2d
    )
    assert lhs == pytest.approx(rhs, rel=1e-12)
    # symmetric point: relative velocity vanishes with q at K = 0
    assert group_velocity_pair(
        ChainParams(1.0, 1.0, 0.5 * PI), PairMomentum(0.0, 0.0)
    ) == pytest.approx(0.0, abs=1e-12)


def test_group_velocity_pair_finite_difference(chiral_09):
    rng = np.random.default_rng(4)
    for Kd, qd in sample_valid_pair(rng, chiral_09, 30, guard=5e-2):
        fd = five_point_derivative(
            lambda q: omega_pair(chiral_09, PairMomentum(Kd, q)), qd, 1e-4
        )
        assert group_velocity_pair(chiral_09, PairMomentum(Kd, qd)) == pytest.approx(
            fd, rel=1e-6, abs=1e-8
        )


# ---------------------------------------------------------------------------
# degenerate partner (pair)
# ---------------------------------------------------------------------------


def test_partner_pair_open_channel(nonchiral_half):
    # four-fold degenerate region: real q' with |q'| != |q|
    qp = degenerate_partner_pair(nonchiral_half, PairMomentum(0.5005, 2.1671))
    assert qp.is_real
    assert abs(qp.re - abs(2.1671)) > 0.1
    w_in = omega_pair(nonchiral_half, PairMomentum(0.5005, 2.1671))
    w_out = omega_pair(nonchiral_half, PairMomentum(0.5005, qp.re))
    assert abs(w_in - w_out) <= 1e-9 * (abs(w_in) + 1.0)


def test_partner_pair_resonance_region(nonchiral_half):
    qp = degenerate_partner_pair(nonchiral_half, PairMomentum(-1.2556, 2.3471))
    assert not qp.is_real
    assert qp.im > 0.1


def test_partner_pair_substitution_oracle():
    rng = np.random.default_rng(5)
    params = ChainParams(2.0, 1.0, 0.7 * PI)
    checked = 0
    for Kd, qd in sample_valid_pair(rng, params, 200, guard=1e-2):
        try:
            qp = degenerate_partner_pair(params, PairMomentum(Kd, qd))
        except DegenerateQuadratic:
            continue
        if not qp.is_real:
            continue
        w_in = omega_pair(params, PairMomentum(Kd, qd))
        w_out = omega_pair(params, PairMomentum(Kd, qp.re))
        assert abs(w_in - w_out) <= 1e-9 * (abs(w_in) + params.gamma_ref)
        checked += 1
    assert checked > 30


def test_partner_pair_involution(nonchiral_half):
    p = PairMomentum(0.5005, 2.1671)
    qp = degenerate_partner_pair(nonchiral_half, p)
    back = degenerate_partner_pair(nonchiral_half, PairMomentum(p.Kd, qp.re))
    assert back.is_real
    assert min(abs(back.re - abs(p.qd)), abs(back.re + abs(p.qd))) < 1e-8


def test_partner_pair_degenerate_quadratic_raises():
    # coinciding roots on the symmetric line cos(qd) = 0 for K = pi - ... setup
    params = ChainParams(1.0, 1.0, 0.3 * PI)
    with pytest.raises(DegenerateQuadratic):
        degenerate_partner_pair(params, PairMomentum(0.5 * PI, 0.5 * PI))


def test_partner_pair_zone_convention(nonchiral_half):
    rng = np.random.default_rng(6)
    for Kd, qd in sample_valid_pair(rng, nonchiral_half, 60, guard=1e-2):
        try:
            qp = degenerate_partner_pair(nonchiral_half, PairMomentum(Kd, qd))
        except DegenerateQuadratic:
            continue
        assert 0.0 <= qp.re <= PI
        assert qp.im >= 0.0


# ---------------------------------------------------------------------------
# effective mass
# ---------------------------------------------------------------------------


def test_effective_mass_values():
    assert effective_mass(ChainParams(1.0, 1.0, 0.5 * PI)) == pytest.approx(2.0)
    assert effective_mass(ChainParams(2.0, 2.0, 0.5 * PI)) == pytest.approx(1.0)
    with pytest.raises(RequiresNonChiral):
        effective_mass(ChainParams(2.0, 1.0, 0.5 * PI))


@pytest.mark.parametrize("k0f", [0.3, 0.5, 0.7])
def test_effective_mass_curvature(k0f):
    # dispersion expands as omega(0) + k^2 / m_e, so the quadratic Taylor
    # coefficient (half the second derivative) equals 1 / m_e
    params = ChainParams(1.0, 1.0, k0f * PI)
    half_fd2 = 0.5 * richardson_second_derivative(
        lambda k: omega_single(params, k), 0.0, 1e-3
    )
    assert half_fd2 == pytest.approx(1.0 / effective_mass(params), rel=1e-4)
