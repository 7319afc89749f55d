"""Tests for per-edge solutions and coupling data."""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from utils.edge_utils import (
    coupling_data,
    decoupled_wronskian,
    edge_basis,
    edge_state,
    energy_window,
    exceptional_points,
    interval_functions,
    interval_transfer,
)
from utils.errors import GraphValidationError
from utils.graph_utils import CouplingKind, EdgeData, PotentialSpec, VertexData, build_graph

energies = st.floats(min_value=-20.0, max_value=120.0, allow_nan=False)


@pytest.mark.parametrize("mu", [4.0, -4.0, 0.0, 1e-7, -1e-7])
def test_interval_functions_closed_forms(mu):
    x = np.array([0.0, 0.3, 1.1])
    c, dc, s, ds = interval_functions(x, mu)
    if mu > 0:
        r = math.sqrt(mu)
        expected_c, expected_s = np.cos(r * x), np.sin(r * x) / r
    elif mu < 0:
        r = math.sqrt(-mu)
        expected_c, expected_s = np.cosh(r * x), np.sinh(r * x) / r
    else:
        expected_c, expected_s = np.ones_like(x), x
    np.testing.assert_allclose(c, expected_c, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(s, expected_s, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(ds, c)
    np.testing.assert_allclose(dc, -mu * s)


def test_series_branch_matches_trig_at_threshold():
    # |mu| x^2 just below and just above the switch
    for x in (0.0099, 0.0101):
        c, _, s, _ = interval_functions(x, 1.0)
        assert float(c) == pytest.approx(math.cos(x), rel=1e-14)
        assert float(s) == pytest.approx(math.sin(x), rel=1e-14)


@given(mu=st.floats(min_value=-10.0, max_value=50.0), x=st.floats(min_value=0.0, max_value=2.0))
def test_interval_transfer_is_unimodular(mu, x):
    t = interval_transfer(x, mu)
    assert np.linalg.det(t) == pytest.approx(1.0, abs=1e-12 * np.abs(t).max() ** 2)


@given(energy=energies)
def test_piecewise_edge_transfer_is_unimodular(path_graph, energy):
    basis = edge_basis(path_graph.edge("middle"), energy)
    scale = np.abs(basis.transfer).max() ** 2
    flip = np.diag([1.0, -1.0])
    assert np.linalg.det(basis.transfer) == pytest.approx(1.0, abs=1e-12 * scale)
    np.testing.assert_allclose(basis.transfer_from("v2") @ flip @ basis.transfer, flip, atol=1e-12 * scale)


def test_edge_state_endpoints(path_graph):
    basis = edge_basis(path_graph.edge("middle"), 7.0)
    np.testing.assert_allclose(edge_state(basis, 0.0), np.eye(2))
    np.testing.assert_allclose(edge_state(basis, 1.5), basis.transfer, atol=1e-12)
    with pytest.raises(GraphValidationError):
        edge_state(basis, 1.6)
    with pytest.raises(GraphValidationError):
        basis.transfer_from("b0")


def test_edge_state_continuous_at_breakpoint(path_graph):
    basis = edge_basis(path_graph.edge("middle"), 3.0)
    np.testing.assert_allclose(edge_state(basis, 0.5 - 1e-10), edge_state(basis, 0.5), atol=1e-8)


def test_constant_potential_shifts_energy():
    flat = EdgeData.make("e", "a", "b", 1.2)
    raised = EdgeData.make("e", "a", "b", 1.2, PotentialSpec.constant(1.2, 3.0))
    np.testing.assert_allclose(edge_basis(raised, 8.0).transfer, edge_basis(flat, 5.0).transfer)


def test_dirichlet_lead_wronskian(star_graph):
    k = math.pi / 2
    data = coupling_data(star_graph.edge("e1"), k * k, CouplingKind.DELTA, "c", star_graph.vertex("b1"))
    assert data.far_is_boundary
    assert data.wronskian == pytest.approx(math.sin(k) / k)
    assert data.wronskian == pytest.approx(-data.v_end)
    assert data.v_at(0.0) == pytest.approx((data.v0, data.dv0))


def test_delta_prime_dirichlet_lead_wronskian(star_graph):
    k = 2.0
    data = coupling_data(
        star_graph.edge("e1"), k * k, CouplingKind.DELTA_PRIME_S, "c", star_graph.vertex("b1")
    )
    assert data.wronskian == pytest.approx(-math.cos(k))
    assert data.wronskian == pytest.approx(data.dv_end)


def test_interior_far_vertex_wronskians(triangle_graph):
    edge = triangle_graph.edge("ab")
    k = 1.7
    delta = coupling_data(edge, k * k, CouplingKind.DELTA, "a", triangle_graph.vertex("b"), "interior")
    assert (delta.v0, delta.dv0) == (0.0, 1.0)
    assert delta.wronskian == pytest.approx(-math.sin(k) / k)
    prime = coupling_data(edge, k * k, CouplingKind.DELTA_PRIME_S, "a", triangle_graph.vertex("b"))
    assert (prime.v0, prime.dv0) == (1.0, 0.0)
    assert prime.wronskian == pytest.approx(-k * math.sin(k))


@given(energy=energies, x=st.floats(min_value=0.0, max_value=1.3))
def test_wronskian_constant_along_edge(triangle_graph, energy, x):
    data = coupling_data(
        triangle_graph.edge("bc"), energy, CouplingKind.DELTA, "b", triangle_graph.vertex("c")
    )
    u, du = data.u_at(x)
    v, dv = data.v_at(x)
    scale = max(1.0, abs(u) + abs(du)) * max(1.0, abs(v) + abs(dv))
    assert u * dv - du * v == pytest.approx(data.wronskian, abs=1e-9 * scale)


def test_coupling_data_rejects_wrong_far_vertex(triangle_graph):
    with pytest.raises(GraphValidationError):
        coupling_data(
            triangle_graph.edge("ab"), 1.0, CouplingKind.DELTA, "a", triangle_graph.vertex("c")
        )
    with pytest.raises(GraphValidationError) as info:
        coupling_data(
            triangle_graph.edge("ab"), 1.0, CouplingKind.DELTA, "a", triangle_graph.vertex("b"), "boundary"
        )
    assert info.value.reason == "far-vertex kind inconsistent with variant"


def test_decoupled_wronskian_none_between_boundaries():
    g = build_graph(
        [VertexData.boundary_vertex("p"), VertexData.boundary_vertex("q")],
        [EdgeData.make("pq", "p", "q", 1.0)],
    )
    assert decoupled_wronskian(g, g.edge("pq"), 2.0, CouplingKind.DELTA) is None
    assert exceptional_points(g, CouplingKind.DELTA, (0.0, 50.0)) == []


def test_exceptional_points_star_delta(star_graph):
    points = exceptional_points(star_graph, CouplingKind.DELTA, (0.5, 100.0))
    energies_found = sorted({round(e, 8) for e, _ in points})
    expected = [(m * math.pi) ** 2 for m in (1, 2, 3)]
    assert energies_found == pytest.approx(expected, abs=1e-7)
    assert len(points) == 9
    assert {eid for _, eid in points} == {"e1", "e2", "e3"}


def test_exceptional_points_star_delta_prime(star_graph):
    points = exceptional_points(star_graph, CouplingKind.DELTA_PRIME_S, (0.5, 70.0))
    energies_found = sorted({round(e, 8) for e, _ in points})
    expected = [((m + 0.5) * math.pi) ** 2 for m in (0, 1, 2)]
    assert energies_found == pytest.approx(expected, abs=1e-7)


def test_exceptional_points_range_checks(star_graph):
    assert exceptional_points(star_graph, CouplingKind.DELTA, (3.0, 3.0)) == []
    with pytest.raises(GraphValidationError):
        exceptional_points(star_graph, CouplingKind.DELTA, (5.0, 1.0))


def test_energy_window():
    assert energy_window(4.0, 0.1) == pytest.approx(0.41)
    assert energy_window(0.0, 0.2) == pytest.approx(0.04)
