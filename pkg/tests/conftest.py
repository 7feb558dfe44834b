import pytest
from hypothesis import HealthCheck, settings

from canforge.arith import PLANE, QQ, Poly

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def plane_poly(text_terms: dict) -> Poly:
    return Poly(PLANE, text_terms, QQ)


@pytest.fixture
def gaussian():
    from canforge.arith import gaussian_field

    return gaussian_field("i")
