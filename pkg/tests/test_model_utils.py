"""Tests for the closed-form lattice and comb rows."""
import math

import numpy as np
import pytest

from utils.dual_utils import assemble_dual
from utils.errors import ExceptionalEnergyError, GraphValidationError, UnsupportedRequestError
from utils.graph_utils import CouplingKind, PotentialSpec
from utils.model_utils import (
    CombParams,
    RectLatticeParams,
    comb_graph,
    comb_row,
    finite_window_matrix,
    literal_phase_report,
    maryland_comb,
    maryland_lengths,
    model_from_preset,
    model_graph,
    plaquette_phase,
    rect_patch_graph,
    rect_row,
    row_scalar,
    site_labels,
    wavenumber,
)


def test_square_lattice_row_values(square_lattice):
    row = rect_row(square_lattice, 0, 0, 1.0)
    for hop in (row.east, row.west, row.north, row.south):
        assert hop == pytest.approx(math.sin(1.0))
    assert row.diagonal == pytest.approx(-2.0 * math.sin(2.0))


def test_square_lattice_row_divided_by_sin_is_laplacian():
    k, alpha = 1.3, 0.8
    row = rect_row(RectLatticeParams(1.0, 1.0, alpha), 2, -1, k)
    assert row.diagonal.real / math.sin(k) == pytest.approx(
        -(4.0 * math.cos(k) + (alpha / k) * math.sin(k))
    )


def test_magnetic_row_phases():
    p = RectLatticeParams(1.0, 1.0, 0.0, flux=math.pi)
    origin = rect_row(p, 0, 0, 1.0)
    for hop in (origin.east, origin.west, origin.north, origin.south):
        assert hop == pytest.approx(math.sin(1.0))
    shifted = rect_row(p, 0, 1, 1.0)
    assert shifted.east / math.sin(1.0) == pytest.approx(-1j)
    assert shifted.west / math.sin(1.0) == pytest.approx(1j)


@pytest.mark.parametrize("gauge", ["circular", "landau"])
def test_plaquette_phase_equals_flux(gauge):
    p = RectLatticeParams(1.0, 1.0, 0.0, flux=1.3, gauge=gauge)
    for n, m in ((0, 0), (2, -3), (-1, 4)):
        assert plaquette_phase(p, n, m) == pytest.approx(1.3)


def test_literal_phase_reading_is_not_hermitian():
    report = literal_phase_report(math.pi, 0, 1)
    assert report["hermiticity_defect"] == pytest.approx(math.sqrt(2.0))
    assert report["plaquette_phase"] == pytest.approx(math.pi)
    assert report["expected_phase"] == pytest.approx(math.pi)
    assert literal_phase_report(4 * math.pi, 0, 1)["hermiticity_defect"] < 1e-12


def test_rect_row_exceptional_and_invalid_k(square_lattice):
    with pytest.raises(ExceptionalEnergyError):
        rect_row(square_lattice, 0, 0, math.pi)
    with pytest.raises(UnsupportedRequestError):
        rect_row(square_lattice, 0, 0, 0.0)
    with pytest.raises(UnsupportedRequestError):
        rect_row(RectLatticeParams(1.0, 1.0, gauge="coulomb"), 0, 0, 1.0)
    for bad in (-1.0, 0.5 + 0.5j, -0.3j):
        with pytest.raises(UnsupportedRequestError):
            rect_row(square_lattice, 0, 0, bad)


def test_wavenumber_branches():
    assert wavenumber(4.0) == 2.0
    assert wavenumber(-4.0) == 2j
    with pytest.raises(ExceptionalEnergyError):
        wavenumber(0.0)


def test_rect_row_below_zero_is_hyperbolic():
    kappa = 0.6
    row = rect_row(RectLatticeParams(1.0, 0.5, 2.0), 0, 0, 1j * kappa)
    s1, s2 = math.sinh(kappa), math.sinh(0.5 * kappa)
    expected = -(2.0 / kappa) * s1 * s2 - 2.0 * math.sinh(1.5 * kappa)
    assert row.diagonal.real == pytest.approx(expected)
    assert row.east == pytest.approx(s2)
    assert row.north == pytest.approx(s1)


def test_comb_row_zero_potential_tooth():
    p = CombParams(spacing=1.0, teeth=lambda j: 1.0)
    k = math.pi / 4
    row = comb_row(p, 0, k)
    assert row.diagonal == pytest.approx(-math.sqrt(2) / 2 - 2 * math.cos(k))
    assert (row.left, row.right) == (1.0, 1.0)


def test_comb_row_neumann_tooth_end():
    k, tooth = 1.2, 0.7
    neumann = CombParams(spacing=1.0, teeth=lambda j: tooth, omega=lambda j: math.pi / 2)
    expected_ratio = -k * math.tan(k * tooth)
    expected = -expected_ratio * math.sin(k) / k - 2 * math.cos(k)
    assert comb_row(neumann, 0, k).diagonal == pytest.approx(expected, rel=1e-9)


def test_maryland_delta_prime_row():
    p = maryland_comb(1.0, CouplingKind.DELTA_PRIME_S)
    row = comb_row(p, 3, 1.0)
    potential = row.diagonal - 2.0 * math.cos(1.0)
    assert potential == pytest.approx(-math.tan(3.0) * math.sin(1.0))
    assert potential == pytest.approx(0.1199, abs=1e-4)


def test_maryland_site_without_tooth(maryland):
    k = 1.1
    assert maryland.teeth(0) == 0.0
    assert comb_row(maryland, 0, k).diagonal == pytest.approx(-2.0 * math.cos(k))
    assert maryland_lengths((-2, 2), 1.0) == {-2: 2.0, -1: 1.0, 0: 0.0, 1: 1.0, 2: 2.0}
    graph = comb_graph(maryland, (-2, 2))
    assert "t0" not in graph.vertices
    assert graph.degree("0") == 2


def test_comb_row_tooth_potential_matches_shifted_energy():
    k = 2.0
    shifted = CombParams(
        spacing=1.0,
        teeth=lambda j: 0.9,
        tooth_potential=lambda j, length: PotentialSpec.constant(length, 1.5),
    )
    reduced_k = math.sqrt(k * k - 1.5)
    ratio = reduced_k / math.tan(reduced_k * 0.9)
    expected = -ratio * math.sin(k) / k - 2.0 * math.cos(k)
    assert comb_row(shifted, 0, k).diagonal == pytest.approx(expected, rel=1e-10)


def _assert_rows_match_generic(model, window, k):
    graph = model_graph(model, window)
    assert graph.interior_ids == site_labels(model, window)
    generic = assemble_dual(graph, (k * k).real, model.kind).dense() * row_scalar(model, k)
    closed = finite_window_matrix(model, window, k).toarray()
    np.testing.assert_allclose(closed, generic, atol=1e-10)


@pytest.mark.parametrize("kind", [CouplingKind.DELTA, CouplingKind.DELTA_PRIME_S])
@pytest.mark.parametrize("flux", [0.0, 0.9])
@pytest.mark.parametrize("k", [1.3, 0.8j])
def test_lattice_rows_match_generic_assembly(rect_lattice, kind, flux, k):
    model = RectLatticeParams(rect_lattice.l1, rect_lattice.l2, rect_lattice.coupling, kind, flux)
    _assert_rows_match_generic(model, ((0, 2), (-1, 1)), k)


def test_site_dependent_coupling_rows_match_generic_assembly():
    model = RectLatticeParams(1.0, 0.5, lambda n, m: 0.3 * n - 0.2 * m)
    _assert_rows_match_generic(model, ((0, 1), (0, 1)), 2.1)


@pytest.mark.parametrize("kind", [CouplingKind.DELTA, CouplingKind.DELTA_PRIME_S])
@pytest.mark.parametrize("k", [1.3, 1.1j])
def test_comb_rows_match_generic_assembly(comb, kind, k):
    model = CombParams(comb.spacing, comb.teeth, comb.omega, comb.coupling, kind)
    _assert_rows_match_generic(model, (-2, 2), k)


def test_maryland_and_potential_comb_rows_match_generic_assembly(maryland):
    _assert_rows_match_generic(maryland, (-3, 3), 1.3)
    _assert_rows_match_generic(maryland, (-3, 3), 0.9j)
    with_potential = CombParams(
        spacing=1.0,
        teeth=lambda j: 0.6 + 0.1 * j,
        coupling=lambda j: 0.4,
        tooth_potential=lambda j, length: PotentialSpec.piecewise(
            [0.0, length / 2, length], [1.0, -0.5]
        ),
    )
    _assert_rows_match_generic(with_potential, (0, 3), 1.3)
    _assert_rows_match_generic(with_potential, (0, 3), 0.7j)


def test_single_site_window_is_the_diagonal(square_lattice):
    matrix = finite_window_matrix(square_lattice, ((0, 0), (0, 0)), 1.0).toarray()
    assert matrix.shape == (1, 1)
    assert matrix[0, 0] == pytest.approx(rect_row(square_lattice, 0, 0, 1.0).diagonal.real)


def test_window_matrix_is_hermitian():
    p = RectLatticeParams(1.0, 0.5, 0.7, flux=2.1)
    m = finite_window_matrix(p, ((0, 3), (0, 3)), 1.7).toarray()
    np.testing.assert_allclose(m, m.conj().T, atol=1e-14)


def test_circular_and_landau_windows_are_gauge_equivalent():
    window = ((0, 4), (0, 4))
    k = 1.7
    circular = finite_window_matrix(RectLatticeParams(1.0, 1.0, flux=0.8), window, k).toarray()
    landau = finite_window_matrix(
        RectLatticeParams(1.0, 1.0, flux=0.8, gauge="landau"), window, k
    ).toarray()
    assert not np.allclose(circular, landau)
    np.testing.assert_allclose(
        np.linalg.eigvalsh(circular), np.linalg.eigvalsh(landau), atol=1e-10
    )


def test_maryland_window_row_without_tooth(maryland):
    k = 0.9
    labels = site_labels(maryland, (-5, 5))
    matrix = finite_window_matrix(maryland, (-5, 5), k).toarray()
    centre = labels.index("0")
    assert matrix[centre, centre] == pytest.approx(-2.0 * math.cos(k))


def test_patch_graph_stubs(square_lattice):
    graph = rect_patch_graph(square_lattice, ((0, 1), (0, 0)))
    assert set(graph.interior_ids) == {"0:0", "1:0"}
    assert {"0:0>W", "0:0>N", "0:0>S", "1:0>E", "1:0>N", "1:0>S"} <= set(graph.boundary_ids)
    assert graph.edge("0:0E").target == "1:0"
    prime = rect_patch_graph(
        RectLatticeParams(1.0, 1.0, kind=CouplingKind.DELTA_PRIME_S), ((0, 0), (0, 0))
    )
    assert prime.vertex("0:0>E").omega == pytest.approx(math.pi / 2)


def test_empty_window_is_rejected(square_lattice):
    with pytest.raises(GraphValidationError):
        finite_window_matrix(square_lattice, ((1, 0), (0, 0)), 1.0)
    with pytest.raises(GraphValidationError):
        comb_graph(CombParams(1.0, lambda j: 1.0), (3, 2))


def test_model_presets():
    square = model_from_preset("square")
    assert isinstance(square, RectLatticeParams)
    assert (square.l1, square.l2, square.flux) == (1.0, 1.0, 0.0)
    magnetic = model_from_preset("magnetic-rect", flux=0.5)
    assert magnetic.flux == 0.5
    maryland = model_from_preset("maryland", kind=CouplingKind.DELTA_PRIME_S)
    assert isinstance(maryland, CombParams)
    assert maryland.kind is CouplingKind.DELTA_PRIME_S
    assert maryland.teeth(-4) == 4.0
    with pytest.raises(UnsupportedRequestError):
        model_from_preset("honeycomb")
