import math

import numpy as np
import pytest

from wienerdecay.geometry import make_domain


@pytest.fixture(scope="session")
def sector():
    return make_domain("sector", {"omega": math.pi / 2}, 1.0, 2)


@pytest.fixture(scope="session")
def cone2():
    return make_domain("cone_complement", {"k1": 1.0}, 1.0, 2)


@pytest.fixture(scope="session")
def cone3():
    return make_domain("cone_complement", {"k1": 1.0}, 1.0, 3)


@pytest.fixture(scope="session")
def cusp():
    return make_domain("power_cusp", {"k1": 1.0, "s": 2.0}, 1.0, 2)


@pytest.fixture(scope="session")
def annulus2():
    return make_domain("annulus", {}, 4.0, 2)


@pytest.fixture(scope="session")
def annulus3():
    return make_domain("annulus", {}, 4.0, 3)
