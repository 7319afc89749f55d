"""Secular root search on the dual matrix and band tests for periodic lattices.

Roots of det M(E) are located by counting negative eigenvalues of M(E) (inertia
from an LDL^T factorization) and bisecting on changes of that count. Scans avoid
exclusion windows around exceptional points, where M(E) has poles.
"""
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.optimize import brentq

from config import BAND_DEFAULTS, SOLVER_DEFAULTS
from utils.dual_utils import VertexVector, assemble_dual
from utils.edge_utils import energy_window, exceptional_points
from utils.errors import DualGraphError, GraphValidationError, SolverWarning, UnsupportedRequestError
from utils.graph_utils import CouplingKind, Graph
from utils.logger import app_logger
from utils.model_utils import (
    CombParams,
    CombWindow,
    RectLatticeParams,
    RectWindow,
    finite_window_matrix,
    harper_matrix,
    model_graph,
    rect_row,
    site_labels,
    wavenumber,
)

MatrixFn = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class Root:
    energy: float
    multiplicity: int
    kernel: Tuple[VertexVector, ...]


@dataclass(frozen=True)
class ExclusionWindow:
    center: float
    lower: float
    upper: float
    edge: str

    def contains(self, energy: float) -> bool:
        return self.lower <= energy <= self.upper


@dataclass(frozen=True)
class SpectrumResult:
    """Roots found in ``searched`` together with the windows that were skipped."""

    kind: CouplingKind
    searched: Tuple[float, float]
    roots: Tuple[Root, ...]
    windows: Tuple[ExclusionWindow, ...]
    segments: Tuple[Tuple[float, float], ...]
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def energies(self) -> np.ndarray:
        """Root energies repeated by multiplicity."""
        return np.array([r.energy for r in self.roots for _ in range(r.multiplicity)])

    def in_window(self, energy: float) -> bool:
        return any(w.contains(energy) for w in self.windows)


def negative_count(matrix: np.ndarray) -> int:
    """Number of negative eigenvalues of a Hermitian matrix (Sylvester inertia)."""
    if matrix.shape[0] == 0:
        return 0
    _, d, _ = linalg.ldl(matrix, lower=True, hermitian=True)
    count = 0
    i = 0
    n = d.shape[0]
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            block = d[i : i + 2, i : i + 2]
            count += int(np.sum(np.linalg.eigvalsh(block) < 0.0))
            i += 2
        else:
            count += int(np.real(d[i, i]) < 0.0)
            i += 1
    return count


def _merge_windows(windows: Sequence[ExclusionWindow]) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for w in sorted(windows, key=lambda w: w.lower):
        if merged and w.lower <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], w.upper))
        else:
            merged.append((w.lower, w.upper))
    return merged


def searchable_segments(
    e_range: Tuple[float, float], windows: Sequence[ExclusionWindow]
) -> List[Tuple[float, float]]:
    """Parts of ``e_range`` outside every exclusion window."""
    a, b = e_range
    segments: List[Tuple[float, float]] = []
    cursor = a
    for lo, hi in _merge_windows(windows):
        if hi < a or lo > b:
            continue
        if lo > cursor:
            segments.append((cursor, min(lo, b)))
        cursor = max(cursor, hi)
    if cursor < b:
        segments.append((cursor, b))
    return [(lo, hi) for lo, hi in segments if hi - lo > 1e-14 * max(1.0, abs(hi))]


def exclusion_windows(
    g: Graph, kind: CouplingKind, e_range: Tuple[float, float], excl_window: float
) -> List[ExclusionWindow]:
    """Exclusion windows around the exceptional points near ``e_range``."""
    a, b = e_range
    pad = energy_window(max(abs(a), abs(b)), excl_window) * 2.0 + 1e-9
    windows = []
    for e_star, eid in exceptional_points(g, kind, (a - pad, b + pad)):
        half = energy_window(e_star, excl_window)
        windows.append(ExclusionWindow(e_star, e_star - half, e_star + half, eid))
    return windows


def secular_roots(
    matrix_fn: MatrixFn,
    segments: Sequence[Tuple[float, float]],
    grid_step: float,
    root_tol: float,
    max_steps: int = SOLVER_DEFAULTS["max_bisection_steps"],
) -> Tuple[List[Tuple[float, int]], Dict[str, Any]]:
    """Bisect on inertia changes of ``matrix_fn`` across each pole-free segment.

    Returns:
        ((energy, multiplicity) list sorted by energy, diagnostics)
    """
    roots: List[Tuple[float, int]] = []
    evaluations = 0
    crowded_cells = 0
    for a, b in segments:
        n = max(1, int(math.ceil((b - a) / grid_step)))
        grid = np.linspace(a, b, n + 1)
        counts = [negative_count(matrix_fn(float(e))) for e in grid]
        evaluations += len(grid)
        for i in range(n):
            if counts[i] == counts[i + 1]:
                continue
            found_here = 0
            stack = [(float(grid[i]), float(grid[i + 1]), counts[i], counts[i + 1], 0)]
            while stack:
                lo, hi, n_lo, n_hi, depth = stack.pop()
                if hi - lo <= root_tol * max(1.0, abs(lo)) or depth >= max_steps:
                    roots.append((0.5 * (lo + hi), abs(n_hi - n_lo)))
                    found_here += 1
                    continue
                mid = 0.5 * (lo + hi)
                n_mid = negative_count(matrix_fn(mid))
                evaluations += 1
                if n_mid != n_hi:
                    stack.append((mid, hi, n_mid, n_hi, depth + 1))
                if n_mid != n_lo:
                    stack.append((lo, mid, n_lo, n_mid, depth + 1))
            if found_here > 1:
                crowded_cells += 1

    if crowded_cells:
        suggestion = grid_step / 2.0
        message = (
            f"{crowded_cells} grid cells held more than one root; "
            f"a sign-based scan needs grid_step <= {suggestion:g}"
        )
        app_logger.warning(message)
        warnings.warn(SolverWarning(message, suggestion))
    roots.sort()
    return roots, {"evaluations": evaluations, "crowded_cells": crowded_cells}


def kernel_basis(matrix: np.ndarray, vertex_ids: Tuple[str, ...], multiplicity: int,
                 mult_tol: float, energy: float) -> Tuple[VertexVector, ...]:
    """Eigenvectors of M(E*) for the ``multiplicity`` smallest |eigenvalues|."""
    vals, vecs = np.linalg.eigh(matrix)
    order = np.argsort(np.abs(vals))
    near_zero = int(np.sum(np.abs(vals) < mult_tol * max(1.0, float(np.abs(vals).max()))))
    if near_zero != multiplicity:
        app_logger.warning(
            f"E={energy:.12g}: inertia jump {multiplicity} but {near_zero} eigenvalues "
            f"below mult_tol={mult_tol:g}"
        )
    return tuple(
        VertexVector(vertex_ids, vecs[:, j].copy()).normalized() for j in order[:multiplicity]
    )


def spectrum(
    g: Graph,
    kind: CouplingKind,
    e_range: Tuple[float, float],
    grid_step: float = SOLVER_DEFAULTS["grid_step"],
    excl_window: float = SOLVER_DEFAULTS["excl_window"],
    root_tol: float = SOLVER_DEFAULTS["root_tol"],
    mult_tol: float = SOLVER_DEFAULTS["mult_tol"],
) -> SpectrumResult:
    """Eigenvalues of the graph outside the exclusion windows, with kernel bases.

    Raises:
        GraphValidationError: No interior vertices or an empty range
        DualGraphError: The windows cover the whole range
    """
    a, b = float(e_range[0]), float(e_range[1])
    if not b > a:
        raise GraphValidationError("empty range", f"({a}, {b})")
    if not g.interior_ids:
        raise GraphValidationError("no interior vertices", "nothing to search")

    windows = exclusion_windows(g, kind, (a, b), excl_window)
    segments = searchable_segments((a, b), windows)
    if not segments:
        raise DualGraphError(f"exclusion windows cover the whole range ({a}, {b})")
    app_logger.info(
        f"Spectrum scan on [{a:g}, {b:g}] ({kind.value}): {len(windows)} exclusion windows, "
        f"{len(segments)} segments"
    )

    def matrix_fn(e: float) -> np.ndarray:
        return assemble_dual(g, e, kind).dense()

    found, diagnostics = secular_roots(matrix_fn, segments, grid_step, root_tol)
    roots = []
    for energy, mult in found:
        system = assemble_dual(g, energy, kind)
        kernel = kernel_basis(system.dense(), system.vertex_ids, mult, mult_tol, energy)
        roots.append(Root(energy, mult, kernel))
    diagnostics.update({"grid_step": grid_step, "root_tol": root_tol})
    app_logger.info(f"Found {len(roots)} distinct roots ({sum(r.multiplicity for r in roots)} with multiplicity)")
    return SpectrumResult(kind, (a, b), tuple(roots), tuple(windows), tuple(segments), diagnostics)


def window_spectrum(
    model: Union[RectLatticeParams, CombParams],
    window: Union[RectWindow, CombWindow],
    e_range: Tuple[float, float],
    grid_step: float = SOLVER_DEFAULTS["grid_step"],
    excl_window: float = SOLVER_DEFAULTS["excl_window"],
    root_tol: float = SOLVER_DEFAULTS["root_tol"],
    mult_tol: float = SOLVER_DEFAULTS["mult_tol"],
) -> SpectrumResult:
    """Roots of the finite window matrix of a lattice or comb model.

    The exclusion windows come from the equivalent explicit graph, whose
    spectrum this is, plus one around E = 0 where the closed-form rows degenerate.
    """
    a, b = float(e_range[0]), float(e_range[1])
    if not b > a:
        raise GraphValidationError("empty range", f"({a}, {b})")

    graph = model_graph(model, window)
    windows = exclusion_windows(graph, model.kind, (a, b), excl_window)
    if a <= 0.0 <= b:
        half = energy_window(0.0, excl_window)
        windows.append(ExclusionWindow(0.0, -half, half, "k=0"))
    segments = searchable_segments((a, b), windows)
    if not segments:
        raise DualGraphError(f"exclusion windows cover the whole range ({a}, {b})")
    labels = site_labels(model, window)

    def matrix_fn(e: float) -> np.ndarray:
        return finite_window_matrix(model, window, wavenumber(e)).toarray()

    found, diagnostics = secular_roots(matrix_fn, segments, grid_step, root_tol)
    roots = [
        Root(e, mult, kernel_basis(matrix_fn(e), labels, mult, mult_tol, e)) for e, mult in found
    ]
    diagnostics.update({"grid_step": grid_step, "root_tol": root_tol, "sites": len(labels)})
    return SpectrumResult(model.kind, (a, b), tuple(roots), tuple(windows), tuple(segments), diagnostics)


@dataclass(frozen=True)
class BandQuery:
    """Periodic rectangular lattice with constant coupling and flux 2 pi p / q."""

    l1: float
    l2: float
    coupling: float
    kind: CouplingKind = CouplingKind.DELTA
    flux_p: int = 0
    flux_q: int = 1

    @property
    def flux(self) -> float:
        return 2.0 * math.pi * self.flux_p / self.flux_q


@dataclass(frozen=True)
class BandVerdict:
    energy: float
    in_band: bool
    margin: float


def flux_fraction(flux: float, q_bound: int = BAND_DEFAULTS["q_bound"]) -> Tuple[int, int]:
    """Write ``flux`` as 2 pi p / q with q <= q_bound.

    Raises:
        UnsupportedRequestError: Irrational (or too finely rational) flux
    """
    frac = Fraction(flux / (2.0 * math.pi)).limit_denominator(q_bound)
    if abs(2.0 * math.pi * float(frac) - flux) > 1e-12 * max(1.0, abs(flux)):
        raise UnsupportedRequestError(
            f"flux {flux!r} is not 2*pi*p/q with q <= {q_bound}; irrational flux is not supported"
        )
    return frac.numerator, frac.denominator


def _rect_params(q: BandQuery) -> RectLatticeParams:
    return RectLatticeParams(q.l1, q.l2, q.coupling, q.kind, flux=q.flux, gauge="landau")


def band_test_rect(q: BandQuery, energy: float) -> BandVerdict:
    """Closed-form band test for zero flux: |F(E)| <= 2|sin k l1| + 2|sin k l2|.

    Below zero the sines are hyperbolic (k = i kappa).
    """
    if q.flux_p % q.flux_q != 0:
        raise UnsupportedRequestError("band_test_rect is for zero flux; use magnetic_band_spectrum")
    row = rect_row(_rect_params(q), 0, 0, wavenumber(energy))
    margin = 2.0 * abs(row.east) + 2.0 * abs(row.north) - abs(row.diagonal.real)
    return BandVerdict(float(energy), margin >= 0.0, float(margin))


def band_edges_rect(
    q: BandQuery,
    e_range: Tuple[float, float],
    step: float = BAND_DEFAULTS["e_step"],
    tol: float = BAND_DEFAULTS["edge_tol"],
) -> List[Tuple[float, str]]:
    """Energies where the zero-flux band test changes verdict, tagged enter/leave."""
    a, b = float(e_range[0]), float(e_range[1])
    grid = np.arange(a, b + step / 2, step)
    # k = 0 is outside the closed forms
    grid = grid[np.abs(grid) > 1e-3 * step]
    margins = np.array([band_test_rect(q, float(e)).margin for e in grid])

    def margin(e: float) -> float:
        return band_test_rect(q, e).margin

    edges: List[Tuple[float, str]] = []
    for i in range(len(grid) - 1):
        if grid[i] < 0.0 < grid[i + 1]:
            continue
        if (margins[i] >= 0.0) != (margins[i + 1] >= 0.0):
            e = float(brentq(margin, grid[i], grid[i + 1], xtol=tol))
            edges.append((e, "enter" if margins[i + 1] >= 0.0 else "leave"))
    return edges


def _bloch_stack(q: BandQuery, energy: float, theta1: np.ndarray, theta2: np.ndarray) -> np.ndarray:
    # one q x q block per (theta1, theta2) pair
    size = q.flux_q
    row = rect_row(_rect_params(q), 0, 0, wavenumber(energy))
    # Landau gauge: no phase on the hops out of (0, 0)
    diagonal, s1, s2 = row.diagonal.real, row.north.real, row.east.real
    m = np.arange(size)
    h = np.zeros((len(theta1), size, size), dtype=complex)
    h[:, m, m] = diagonal + 2.0 * s2 * np.cos(theta1[:, None] - q.flux * m[None, :])
    for i in range(size - 1):
        h[:, i, i + 1] += s1
        h[:, i + 1, i] += s1
    # wrap in the m direction; += keeps q = 1 and q = 2 right
    h[:, size - 1, 0] += s1 * np.exp(1j * theta2)
    h[:, 0, size - 1] += s1 * np.exp(-1j * theta2)
    return h


def magnetic_bloch_matrix(q: BandQuery, energy: float, theta1: float, theta2: float) -> np.ndarray:
    """Bloch reduction of the magnetic lattice matrix to a q x q block (Landau gauge)."""
    return _bloch_stack(q, energy, np.array([theta1]), np.array([theta2]))[0]


def magnetic_band_spectrum(
    q: BandQuery,
    energies: Sequence[float],
    bloch_grid: int = BAND_DEFAULTS["bloch_grid"],
    q_bound: int = BAND_DEFAULTS["q_bound"],
) -> List[BandVerdict]:
    """Band verdicts for rational flux from the Bloch eigenvalue ranges.

    E is in the spectrum when 0 lies in the range of some eigenvalue branch over
    the sampled Brillouin zone; the margin is the largest min(max, -min) over branches.
    """
    if q.flux_q > q_bound:
        raise UnsupportedRequestError(f"flux denominator {q.flux_q} exceeds bound {q_bound}")
    if bloch_grid % 2:
        bloch_grid += 1
    thetas = 2.0 * math.pi * np.arange(bloch_grid) / bloch_grid
    t1, t2 = (grid.ravel() for grid in np.meshgrid(thetas, thetas, indexing="ij"))
    verdicts = []
    for energy in energies:
        branches = np.linalg.eigvalsh(_bloch_stack(q, float(energy), t1, t2))
        lo, hi = branches.min(axis=0), branches.max(axis=0)
        margin = float(np.max(np.minimum(hi, -lo)))
        verdicts.append(BandVerdict(float(energy), margin >= 0.0, margin))
    app_logger.debug(f"Magnetic band scan: {len(verdicts)} energies, flux {q.flux_p}/{q.flux_q}")
    return verdicts


def harper_reference(q: BandQuery, energy: float, theta1: float, theta2: float) -> Optional[np.ndarray]:
    """Magnetic Bloch matrix rewritten as a Harper matrix, when l1 == l2 and alpha == 0."""
    if q.l1 != q.l2 or q.coupling != 0.0 or q.kind is not CouplingKind.DELTA:
        return None
    row = rect_row(_rect_params(q), 0, 0, wavenumber(energy))
    scale, shift = row.north.real, row.diagonal.real
    return scale * harper_matrix(q.flux_p, q.flux_q, theta1, theta2) + shift * np.eye(q.flux_q)
