"""Pytest configuration and fixtures."""
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from utils.graph_utils import EdgeData, Graph, PotentialSpec, VertexData, build_graph
from utils.model_utils import CombParams, RectLatticeParams, maryland_comb

settings.register_profile(
    "dualgraph",
    max_examples=200,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("dualgraph")

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def make_star(n: int = 3, length: float = 1.0, constant: float = 0.0, omega: float = 0.0) -> Graph:
    vertices = [VertexData.interior("c", constant)]
    vertices += [VertexData.boundary_vertex(f"b{i}", omega) for i in range(1, n + 1)]
    edges = [EdgeData.make(f"e{i}", "c", f"b{i}", length) for i in range(1, n + 1)]
    return build_graph(vertices, edges)


@pytest.fixture
def star_graph() -> Graph:
    """Equilateral Dirichlet star with a free centre."""
    return make_star()


@pytest.fixture
def path_graph() -> Graph:
    """Boundary - v1 - v2 - boundary with couplings and a piecewise potential."""
    vertices = [
        VertexData.boundary_vertex("b0", 0.0),
        VertexData.interior("v1", 1.0),
        VertexData.interior("v2", -0.5),
        VertexData.boundary_vertex("b3", 0.3),
    ]
    edges = [
        EdgeData.make("left", "b0", "v1", 1.0),
        EdgeData.make(
            "middle", "v1", "v2", 1.5, PotentialSpec.piecewise([0.0, 0.5, 1.5], [2.0, -1.0])
        ),
        EdgeData.make("right", "v2", "b3", 0.8, PotentialSpec.constant(0.8, 0.5)),
    ]
    return build_graph(vertices, edges)


@pytest.fixture
def triangle_graph() -> Graph:
    """Three interior vertices on a cycle, each with a Dirichlet lead."""
    vertices = [VertexData.interior(v, c) for v, c in (("a", 0.3), ("b", -0.2), ("c", 0.0))]
    vertices += [VertexData.boundary_vertex(f"{v}>", 0.0) for v in "abc"]
    edges = [
        EdgeData.make("ab", "a", "b", 1.0),
        EdgeData.make("bc", "b", "c", 1.3, PotentialSpec.piecewise([0.0, 0.4, 1.3], [1.0, -0.5])),
        EdgeData.make("ca", "c", "a", 0.7),
    ]
    edges += [EdgeData.make(f"{v}>", v, f"{v}>", 0.9) for v in "abc"]
    return build_graph(vertices, edges)


@pytest.fixture
def square_lattice() -> RectLatticeParams:
    return RectLatticeParams(1.0, 1.0, 0.0)


@pytest.fixture
def rect_lattice() -> RectLatticeParams:
    return RectLatticeParams(1.0, 0.5, 0.7)


@pytest.fixture
def comb() -> CombParams:
    return CombParams(
        spacing=1.0, teeth=lambda j: 0.8, omega=lambda j: 0.4, coupling=lambda j: 0.2
    )


@pytest.fixture
def maryland() -> CombParams:
    return maryland_comb(1.0)


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def test_data_dir(tmp_path: Path) -> Path:
    """Create a temporary directory for test documents."""
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    return data_dir
