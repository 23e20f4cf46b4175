import numpy as np
import pytest

from nodalpoly.mesh import generate_mesh
from nodalpoly.polytope import NAMED
from nodalpoly.spectral import solve_polytope


@pytest.fixture(scope="session", autouse=True)
def _cache_dir(tmp_path_factory):
    import os

    path = tmp_path_factory.mktemp("nodal-cache")
    old = os.environ.get("NODAL_CACHE_DIR")
    os.environ["NODAL_CACHE_DIR"] = str(path)
    yield path
    if old is None:
        os.environ.pop("NODAL_CACHE_DIR", None)
    else:
        os.environ["NODAL_CACHE_DIR"] = old


@pytest.fixture
def square():
    return NAMED["square"]()


@pytest.fixture
def lshape():
    return NAMED["lshape"]()


@pytest.fixture(scope="session")
def square_mesh():
    return generate_mesh(NAMED["square"](), 0.05)


@pytest.fixture(scope="session")
def lshape_mesh():
    return generate_mesh(NAMED["lshape"](), 0.05)


@pytest.fixture(scope="session")
def square_pairs(_cache_dir):
    return solve_polytope(NAMED["square"](), 0.02, 30, directory=_cache_dir)


@pytest.fixture(scope="session")
def lshape_pairs(_cache_dir):
    return solve_polytope(NAMED["lshape"](), 0.02, 30, directory=_cache_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines.extend(v for k, v in getattr(rep, "user_properties", []) if k == "acceptance")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
