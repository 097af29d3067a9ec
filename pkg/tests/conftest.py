from fractions import Fraction

import pytest

from convlyap.polyalg import Polynomial, parse_system

VDP_TEXT = "x1' = -x2; x2' = -(1-x1^2)*x2 + x1"
CUBIC_TEXT = "x1' = -x1^3"
LINEAR_TEXT = "x1' = -x1 + x2; x2' = -x1 - x2"


@pytest.fixture(scope="session")
def vdp():
    return parse_system(VDP_TEXT)


@pytest.fixture(scope="session")
def cubic():
    return parse_system(CUBIC_TEXT)


@pytest.fixture(scope="session")
def linear():
    return parse_system(LINEAR_TEXT)


@pytest.fixture(scope="session")
def systems(vdp, cubic, linear):
    return {"cubic": cubic, "linear": linear, "vdp": vdp}


def X(i, n):
    return Polynomial.x(i, n)


def T(n):
    return Polynomial.t(n)


def quarter():
    return Fraction(1, 4)
