import math

import numpy as np
import pytest

from polariton_chain import ChainParams

PI = math.pi


@pytest.fixture
def nonchiral_half():
    """gamma_0 = 1 at k0d = pi/2."""
    return ChainParams(1.0, 1.0, 0.5 * PI)


@pytest.fixture
def chiral_09():
    """Fig.-2-style chiral chain: ratio 4 at k0d = 0.9 pi."""
    return ChainParams(4.0, 1.0, 0.9 * PI)


def five_point_derivative(f, x, h):
    """O(h^4) central first derivative."""
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def second_derivative(f, x, h):
    """O(h^2) central second derivative."""
    return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)


def richardson_second_derivative(f, x, h):
    """O(h^4) Richardson-extrapolated second derivative."""
    d1 = second_derivative(f, x, h)
    d2 = second_derivative(f, x, 0.5 * h)
    return (4 * d2 - d1) / 3


def sample_valid_k(rng, params, n, guard=1e-3):
    """Random momenta avoiding the dispersion poles by `guard`."""
    out = []
    while len(out) < n:
        kd = rng.uniform(-PI, PI)
        if (
            abs(_zone(kd - params.k0d)) > guard
            and abs(_zone(kd + params.k0d)) > guard
        ):
            out.append(kd)
    return np.array(out)


def _zone(x):
    y = math.fmod(x + PI, 2 * PI)
    if y <= 0:
        y += 2 * PI
    return y - PI


def sample_valid_pair(rng, params, n, guard=1e-3):
    """Random (Kd, qd) pairs whose constituents avoid the poles."""
    out = []
    while len(out) < n:
        Kd = rng.uniform(-PI, PI)
        qd = rng.uniform(-PI, PI)
        ok = True
        for k in (Kd + qd, Kd - qd):
            for pole in (params.k0d, -params.k0d):
                if abs(_zone(k - pole)) <= guard:
                    ok = False
        if ok:
            out.append((Kd, qd))
    return out
