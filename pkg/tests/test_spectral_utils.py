"""Tests for the secular root search and the lattice band tests."""
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from tests.conftest import make_star
from utils.dual_utils import reconstruct, residual_and_norms
from utils.errors import (
    DualGraphError,
    ExceptionalEnergyError,
    GraphValidationError,
    SolverWarning,
    UnsupportedRequestError,
)
from utils.graph_utils import CouplingKind, with_phases
from utils.model_utils import CombParams, comb_graph, harper_matrix, rect_patch_graph
from utils.oracle_utils import compare, matching_spectrum
from utils.spectral_utils import (
    BandQuery,
    ExclusionWindow,
    band_edges_rect,
    band_test_rect,
    flux_fraction,
    harper_reference,
    magnetic_band_spectrum,
    magnetic_bloch_matrix,
    negative_count,
    searchable_segments,
    secular_roots,
    spectrum,
    window_spectrum,
)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
@pytest.mark.parametrize("complex_entries", [False, True])
def test_negative_count_matches_eigenvalues(seed, complex_entries):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(7, 7))
    if complex_entries:
        a = a + 1j * rng.normal(size=(7, 7))
    h = a + a.conj().T
    assert negative_count(h) == int(np.sum(np.linalg.eigvalsh(h) < 0.0))
    assert negative_count(np.zeros((0, 0))) == 0


def test_searchable_segments_merge_and_clip():
    windows = [
        ExclusionWindow(1.5, 1.0, 2.0, "a"),
        ExclusionWindow(2.2, 1.5, 3.0, "b"),
        ExclusionWindow(5.5, 5.0, 6.0, "c"),
        ExclusionWindow(20.0, 19.0, 21.0, "d"),
    ]
    assert searchable_segments((0.0, 10.0), windows) == [(0.0, 1.0), (3.0, 5.0), (6.0, 10.0)]
    assert windows[0].contains(1.0)
    assert not windows[0].contains(2.5)


def test_secular_roots_multiplicity_and_crowding():
    def matrix_fn(e: float) -> np.ndarray:
        return np.diag([e - 2.0, e - 2.0, e - 3.0, e - 3.05])

    with pytest.warns(SolverWarning):
        roots, diagnostics = secular_roots(matrix_fn, [(0.0, 4.3)], 1.0, 1e-12)
    energies = [e for e, _ in roots]
    assert energies == pytest.approx([2.0, 3.0, 3.05], abs=1e-10)
    assert [m for _, m in roots] == [2, 1, 1]
    assert diagnostics["crowded_cells"] == 1


def test_star_delta_spectrum(star_graph):
    result = spectrum(star_graph, CouplingKind.DELTA, (0.0, 24.0))
    expected = [(math.pi / 2) ** 2, (3 * math.pi / 2) ** 2]
    assert [r.energy for r in result.roots] == pytest.approx(expected, abs=1e-9)
    assert [r.multiplicity for r in result.roots] == [1, 1]
    # the doublet at pi^2 sits on the exceptional set
    assert result.in_window(math.pi**2)
    assert {w.edge for w in result.windows} == {"e1", "e2", "e3"}
    assert len(result.segments) == 2


def test_star_delta_spectrum_with_coupling():
    k_ref = brentq(lambda k: math.tan(k) + 3.0 * k, math.pi / 2 + 1e-9, math.pi - 1e-9, xtol=1e-15)
    result = spectrum(make_star(constant=1.0), CouplingKind.DELTA, (0.0, 9.5))
    assert result.roots[0].energy == pytest.approx(k_ref**2, abs=1e-9)


def test_star_delta_prime_spectrum(star_graph):
    result = spectrum(star_graph, CouplingKind.DELTA_PRIME_S, (0.5, 12.0))
    assert [r.energy for r in result.roots] == pytest.approx([math.pi**2], abs=1e-9)
    assert result.in_window((math.pi / 2) ** 2)


@pytest.mark.parametrize("phases", [{}, {"ab": 0.4, "bc": -1.1, "ca": 2.0}])
def test_roots_reconstruct_to_eigenfunctions(triangle_graph, phases):
    g = with_phases(triangle_graph, phases) if phases else triangle_graph
    result = spectrum(g, CouplingKind.DELTA, (0.1, 30.0))
    assert result.roots
    for root in result.roots:
        assert len(root.kernel) == root.multiplicity
        for phi in root.kernel:
            w = reconstruct(g, root.energy, phi, CouplingKind.DELTA)
            report = residual_and_norms(g, w, phi)
            assert report.vertex_residual < 1e-8
            assert report.ratio > 0.0


def test_spectrum_rejects_bad_ranges(star_graph):
    with pytest.raises(GraphValidationError):
        spectrum(star_graph, CouplingKind.DELTA, (5.0, 5.0))
    centre = math.pi**2
    with pytest.raises(DualGraphError):
        spectrum(star_graph, CouplingKind.DELTA, (centre - 1e-5, centre + 1e-5))


def test_window_spectrum_matches_explicit_comb(comb):
    window = (-2, 2)
    from_rows = window_spectrum(comb, window, (0.5, 12.0))
    from_graph = spectrum(comb_graph(comb, window), comb.kind, (0.5, 12.0))
    assert from_rows.roots
    assert from_rows.energies() == pytest.approx(from_graph.energies(), abs=1e-8)
    assert from_rows.roots[0].kernel[0].vertex_ids == ("-2", "-1", "0", "1", "2")


def test_attractive_comb_window_agrees_with_matching_oracle():
    model = CombParams(
        spacing=1.0, teeth=lambda j: 0.8, omega=lambda j: 0.4, coupling=lambda j: -3.0
    )
    window = (-2, 2)
    e_range = (-10.0, 6.0)
    result = window_spectrum(model, window, e_range, grid_step=0.005)
    reference = matching_spectrum(comb_graph(model, window), model.kind, e_range, grid_step=0.005)
    report = compare(result, reference, tol=1e-6)
    assert report.ok, report.as_dict()
    assert min(result.energies()) < -5.5
    assert sum(1 for e in result.energies() if e < 0.0) >= 5


def test_window_spectrum_matches_explicit_lattice(rect_lattice):
    window = ((0, 1), (0, 2))
    from_rows = window_spectrum(rect_lattice, window, (0.0, 15.0))
    from_graph = spectrum(rect_patch_graph(rect_lattice, window), rect_lattice.kind, (1e-6, 15.0))
    assert from_rows.searched == (0.0, 15.0)
    assert from_rows.in_window(0.0)
    assert "k=0" in {w.edge for w in from_rows.windows}
    assert from_rows.energies() == pytest.approx(from_graph.energies(), abs=1e-8)


@pytest.mark.parametrize(
    "flux, expected",
    [(math.pi, (1, 2)), (2 * math.pi / 3, (1, 3)), (0.0, (0, 1)), (-math.pi / 2, (-1, 4))],
)
def test_flux_fraction(flux, expected):
    assert flux_fraction(flux) == expected


def test_flux_fraction_rejects_irrational_flux():
    with pytest.raises(UnsupportedRequestError):
        flux_fraction(math.sqrt(2.0))


def test_square_lattice_without_coupling_is_gapless():
    q = BandQuery(1.0, 1.0, 0.0)
    for energy in np.linspace(0.05, 30.0, 10_000):
        if abs(math.sin(math.sqrt(energy))) < 1e-3:
            continue
        assert band_test_rect(q, float(energy)).in_band


def test_square_lattice_coupling_opens_gap_above_pi():
    q = BandQuery(1.0, 1.0, 2.0)
    assert not band_test_rect(q, (math.pi + 0.01) ** 2).in_band
    assert band_test_rect(q, (math.pi - 0.01) ** 2).in_band


def test_rect_margin_closed_form():
    q = BandQuery(1.0, 0.5, 0.0)
    for k in (0.7, 1.9, 2.6, 4.1):
        expected = 2 * abs(math.sin(k)) + 2 * abs(math.sin(0.5 * k)) - abs(2 * math.sin(1.5 * k))
        assert band_test_rect(q, k * k).margin == pytest.approx(expected)


def test_band_test_rejects_flux_and_zero_energy():
    with pytest.raises(UnsupportedRequestError):
        band_test_rect(BandQuery(1.0, 1.0, 0.0, flux_p=1, flux_q=2), 2.0)
    with pytest.raises(ExceptionalEnergyError):
        band_test_rect(BandQuery(1.0, 1.0, 0.0), 0.0)


def test_band_test_below_zero():
    # no coupling: the operator is non-negative
    for energy in np.linspace(-20.0, -0.01, 200):
        assert not band_test_rect(BandQuery(1.0, 1.0, 0.0), float(energy)).in_band
    assert band_test_rect(BandQuery(1.0, 1.0, -4.0), -1.0).in_band
    kappa = 1.0
    s, c = math.sinh(kappa), math.cosh(kappa)
    expected = 4.0 * s - abs(4.0 * s * s - 4.0 * s * c)
    assert band_test_rect(BandQuery(1.0, 1.0, -4.0), -1.0).margin == pytest.approx(expected)


def test_band_edges_below_zero_for_attractive_coupling():
    q = BandQuery(1.0, 1.0, -4.0)
    edges = band_edges_rect(q, (-12.0, -0.5), step=0.05)
    assert edges
    for energy, tag in edges:
        assert energy < 0.0
        assert band_test_rect(q, energy - 1e-5).in_band != band_test_rect(q, energy + 1e-5).in_band


def test_band_edges_bracket_sign_changes():
    q = BandQuery(1.0, 0.5, 20.0)
    edges = band_edges_rect(q, (10.0, 20.0))
    assert edges
    for energy, tag in edges:
        before = band_test_rect(q, energy - 1e-5).in_band
        after = band_test_rect(q, energy + 1e-5).in_band
        assert before != after
        assert tag == ("enter" if after else "leave")


def test_magnetic_scan_at_zero_flux_matches_closed_form():
    q = BandQuery(1.0, 0.5, 20.0)
    energies = [float(e) for e in np.linspace(10.0, 20.0, 41)]
    closed = [band_test_rect(q, e) for e in energies]
    scanned = magnetic_band_spectrum(BandQuery(1.0, 0.5, 20.0), energies)
    assert [v.in_band for v in scanned] == [v.in_band for v in closed]
    assert [v.margin for v in scanned] == pytest.approx([v.margin for v in closed], abs=1e-10)
    full_turn = magnetic_band_spectrum(BandQuery(1.0, 0.5, 20.0, flux_p=1, flux_q=1), energies)
    assert [v.in_band for v in full_turn] == [v.in_band for v in closed]


def test_magnetic_scan_rejects_large_denominator():
    with pytest.raises(UnsupportedRequestError):
        magnetic_band_spectrum(BandQuery(1.0, 1.0, 0.0, flux_p=1, flux_q=13), [2.0])


@pytest.mark.parametrize("p, flux_q", [(1, 2), (1, 3), (1, 4), (2, 5)])
def test_bloch_matrix_reduces_to_harper(p, flux_q):
    q = BandQuery(1.0, 1.0, 0.0, flux_p=p, flux_q=flux_q)
    bloch = magnetic_bloch_matrix(q, 2.0, 0.3, 1.1)
    reference = harper_reference(q, 2.0, 0.3, 1.1)
    assert reference is not None
    np.testing.assert_allclose(bloch, reference, atol=1e-12)
    np.testing.assert_allclose(bloch, bloch.conj().T, atol=1e-14)


def test_harper_reference_only_for_square_free_lattice():
    assert harper_reference(BandQuery(1.0, 0.5, 0.0, flux_p=1, flux_q=2), 2.0, 0.0, 0.0) is None
    assert harper_reference(BandQuery(1.0, 1.0, 1.0, flux_p=1, flux_q=2), 2.0, 0.0, 0.0) is None


def test_harper_matrix_at_zero_flux_is_cosine_band():
    h = harper_matrix(0, 1, 0.4, 0.9)
    assert h.shape == (1, 1)
    assert h[0, 0] == pytest.approx(2 * math.cos(0.4) + 2 * math.cos(0.9))
