import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lgeo.circle import CircleField, nodes
from lgeo.domains import make_ball, make_ellipsoid
from lgeo.rh import RHSymbols

settings.register_profile("lgeo", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("lgeo")

# one line per acceptance criterion, filled by tests/test_acceptance.py
CRITERIA: dict = {}


def record_criterion(number: int, passed: bool, detail: str, label: str = "") -> None:
    CRITERIA[(number, label)] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, label in sorted(CRITERIA):
        passed, detail = CRITERIA[(number, label)]
        name = f"criterion {number}" + (f" [{label}]" if label else "")
        terminalreporter.write_line(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def ball2():
    return make_ball(2)


@pytest.fixture(scope="session")
def ball3():
    return make_ball(3)


@pytest.fixture(scope="session")
def ellipsoid2():
    return make_ellipsoid(2, np.eye(2), 0.2)


@pytest.fixture(scope="session")
def complex_ellipsoid3():
    B = np.array([[1, 0.3j, 0], [0.3j, -0.5, 0.2], [0, 0.2, 0.4]])
    return make_ellipsoid(3, B, 0.3)


def random_symbols(rng, m: int, n_nodes: int = 128, degree: int = 4, s: float = 0.15) -> RHSymbols:
    """Admissible smooth symbols: H near 3I, S a small symmetric trigonometric polynomial."""
    z = nodes(n_nodes)

    def trig():
        return sum((rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))[None]
                   * z[:, None, None] ** k / (abs(k) + 1) ** 2 for k in range(-degree, degree + 1))

    C = trig()
    H = 3.0 * np.eye(m) + 0.3 * (C + np.conj(np.swapaxes(C, 1, 2)))
    D = trig()
    S = s * (D + np.swapaxes(D, 1, 2))
    return RHSymbols(CircleField(H), CircleField(S))


def random_trig_field(rng, shape, n_nodes: int = 128, degree: int = 6) -> CircleField:
    spec = np.zeros((n_nodes,) + tuple(shape), dtype=complex)
    for k in range(-degree, degree + 1):
        spec[k] = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / (1 + abs(k)) ** 2
    return CircleField.from_spectrum(spec)


@pytest.fixture(scope="session")
def ellipsoid_chart(ellipsoid2):
    """Chart along a solved geodesic of the n=2 ellipsoid with its straightening report."""
    from lgeo.canonical import build_chart, verify_straightening
    from lgeo.geodesic import solve_preferred

    p = ellipsoid2.ray_to_boundary(np.array([1.0, 0.3 + 0.2j]))
    g = solve_preferred(ellipsoid2, p, vhat=np.array([0.3 + 0.1j]))
    chart = build_chart(ellipsoid2, g)
    return g, chart, verify_straightening(chart, g.phi)


@pytest.fixture(scope="session")
def complex_chart(complex_ellipsoid3):
    """Chart along a solved geodesic of the n=3 ellipsoid with complex B."""
    from lgeo.canonical import build_chart, verify_straightening
    from lgeo.geodesic import solve_preferred

    p = complex_ellipsoid3.ray_to_boundary(np.array([1.0, 0.3 + 0.2j, -0.2]))
    g = solve_preferred(complex_ellipsoid3, p, vhat=np.array([0.2, 0.1j]))
    chart = build_chart(complex_ellipsoid3, g)
    return g, chart, verify_straightening(chart, g.phi)
