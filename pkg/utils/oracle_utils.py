"""Independent reference spectra and the comparison against the duality solver.

Two references: a finite-element discretization of the graph operator (delta
coupling only) and the matching matrix S(E), whose unknowns are the edge
coefficients themselves and which therefore has no exceptional points.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, sparse
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import LinearOperator, lobpcg, splu

from config import COMPARE_DEFAULTS, FD_DEFAULTS, SOLVER_DEFAULTS
from utils.edge_utils import edge_basis
from utils.errors import GraphValidationError, UnsupportedRequestError
from utils.graph_utils import CouplingKind, Graph
from utils.logger import app_logger
from utils.spectral_utils import SpectrumResult

# Pencils up to this size are solved densely
DENSE_LIMIT = 2500

# Half-width, relative to |E|, of the second pass around a sigma_min minimum
POLISH_RTOL = 1e-7


@dataclass(frozen=True)
class FDConfig:
    mesh: float = FD_DEFAULTS["mesh"]
    n_eigs: int = FD_DEFAULTS["n_eigs"]
    richardson: bool = FD_DEFAULTS["richardson"]


def _mesh_counts(g: Graph, mesh: float, refine: int) -> Dict[str, List[int]]:
    return {
        e.id: [refine * max(1, int(math.ceil((b - a) / mesh))) for a, b, _ in e.potential.intervals()]
        for e in g.edges
    }


def _fd_pencil(g: Graph, counts: Dict[str, List[int]]) -> sparse.csr_matrix:
    """Mass-scaled stiffness matrix of the lumped-mass linear FEM discretization."""
    node: Dict[str, Optional[int]] = {}
    size = 0
    for vid, v in g.vertices.items():
        if v.boundary and math.sin(v.omega) == 0.0:
            node[vid] = None  # Dirichlet: eliminated
        else:
            node[vid] = size
            size += 1

    rows: List[int] = []
    cols: List[int] = []
    vals: List[complex] = []
    mass: Dict[int, float] = {}

    def add(i: Optional[int], j: Optional[int], value: complex) -> None:
        if i is not None and j is not None:
            rows.append(i)
            cols.append(j)
            vals.append(value)

    for e in g.edges:
        cells: List[Tuple[float, float]] = []
        for (a, b, v), n in zip(e.potential.intervals(), counts[e.id]):
            cells.extend(((b - a) / n, v) for _ in range(n))
        total = len(cells)
        interior_nodes = list(range(size, size + total - 1))
        size += total - 1
        chain: List[Optional[int]] = [node[e.source]] + interior_nodes + [node[e.target]]
        for c, (h, v) in enumerate(cells):
            p, q = chain[c], chain[c + 1]
            theta = e.phase * h / e.length
            link = np.exp(1j * theta)
            add(p, p, 1.0 / h + v * h / 2.0)
            add(q, q, 1.0 / h + v * h / 2.0)
            add(p, q, -link / h)
            add(q, p, -np.conj(link) / h)
            for idx in (p, q):
                if idx is not None:
                    mass[idx] = mass.get(idx, 0.0) + h / 2.0

    for vid, v in g.vertices.items():
        idx = node[vid]
        if idx is None:
            continue
        if v.boundary:
            add(idx, idx, -math.cos(v.omega) / math.sin(v.omega))
        else:
            add(idx, idx, v.constant)

    values = np.array(vals, dtype=complex)
    if not g.has_phases:
        values = values.real.copy()
    stiff = sparse.coo_matrix((values, (rows, cols)), shape=(size, size)).tocsr()
    scale = sparse.diags(1.0 / np.sqrt(np.array([mass[i] for i in range(size)])))
    return (scale @ stiff @ scale).tocsr()


def _lowest_eigenvalues(pencil: sparse.csr_matrix, count: int) -> np.ndarray:
    """The ``count`` lowest eigenvalues, repeated ones included.

    Small pencils go to dense ``eigh``; larger ones to block LOBPCG preconditioned by
    a factorization shifted below the Gershgorin bound, which keeps every copy of a
    repeated eigenvalue that fits in the block.
    """
    size = pencil.shape[0]
    count = min(count, size)
    if size <= DENSE_LIMIT or 5 * count >= size:
        return linalg.eigh(pencil.toarray(), eigvals_only=True, subset_by_index=[0, count - 1])

    diag = pencil.diagonal().real
    off = np.asarray(abs(pencil).sum(axis=1)).ravel() - np.abs(diag)
    sigma = float(np.min(diag - off)) - 1.0
    lu = splu((pencil - sigma * sparse.identity(size, format="csr")).tocsc())
    precond = LinearOperator(
        (size, size), matvec=lu.solve, matmat=lu.solve, dtype=pencil.dtype
    )
    rng = np.random.default_rng(0)
    start = rng.standard_normal((size, count))
    if np.iscomplexobj(pencil):
        start = start + 1j * rng.standard_normal((size, count))
    values, vectors = lobpcg(
        pencil,
        start,
        M=precond,
        largest=False,
        tol=FD_DEFAULTS["lobpcg_tol"],
        maxiter=FD_DEFAULTS["lobpcg_maxiter"],
    )
    residual = np.linalg.norm(pencil @ vectors - vectors * values, axis=0)
    if residual.max() > 1e3 * FD_DEFAULTS["lobpcg_tol"]:
        app_logger.warning(f"LOBPCG stopped with residual {residual.max():.3e}")
    return np.sort(np.real(values))


def _cut_at_gap(values: np.ndarray, n: int, rtol: float) -> Optional[int]:
    """Smallest cut k >= n with a relative gap between values[k - 1] and values[k]."""
    for k in range(max(n, 1), len(values)):
        if values[k] - values[k - 1] > rtol * max(1.0, abs(values[k])):
            return k
    return None


def _fd_levels(pencil: sparse.csr_matrix, n_eigs: int) -> np.ndarray:
    """At least ``n_eigs`` lowest eigenvalues, ending at a gap so no cluster is split."""
    size = pencil.shape[0]
    n = min(n_eigs, size)
    count = min(n + FD_DEFAULTS["margin"], size)
    while True:
        values = _lowest_eigenvalues(pencil, count)
        cut = _cut_at_gap(values, n, FD_DEFAULTS["cluster_rtol"])
        if cut is not None:
            return values[:cut]
        if count == size:
            return values
        count = min(2 * count, size)


def fd_spectrum(
    g: Graph, cfg: FDConfig = FDConfig(), kind: CouplingKind = CouplingKind.DELTA
) -> np.ndarray:
    """Lowest eigenvalues of the discretized graph operator, at least ``cfg.n_eigs``.

    The list is extended past ``cfg.n_eigs`` until it ends at a spectral gap, so every
    copy of its largest eigenvalue is present. With ``cfg.richardson`` the mesh is halved
    and (4 l_h/2 - l_h) / 3 returned, the coarse list taken to the same length as the fine one.

    Raises:
        UnsupportedRequestError: delta' coupling or a mesh too coarse for the shortest edge
    """
    if kind is not CouplingKind.DELTA:
        raise UnsupportedRequestError("the finite-difference oracle supports delta coupling only")
    limit = g.summary.min_length / FD_DEFAULTS["min_points_ratio"]
    if not 0.0 < cfg.mesh < limit:
        raise UnsupportedRequestError(f"mesh {cfg.mesh:g} too coarse; need h < {limit:g}")
    if not cfg.richardson:
        return _fd_levels(_fd_pencil(g, _mesh_counts(g, cfg.mesh, 1)), cfg.n_eigs)
    fine = _fd_levels(_fd_pencil(g, _mesh_counts(g, cfg.mesh, 2)), cfg.n_eigs)
    coarse = _lowest_eigenvalues(_fd_pencil(g, _mesh_counts(g, cfg.mesh, 1)), len(fine))
    fine = fine[: len(coarse)]
    # sorted lists pair one-to-one with the least total shift
    shift = float(np.max(np.abs(coarse - fine)))
    app_logger.debug(f"FD oracle: {len(fine)} levels, max |l_h - l_h/2| = {shift:.3e}")
    return np.sort((4.0 * fine - coarse) / 3.0)


def matching_matrix(g: Graph, energy: float, kind: CouplingKind) -> np.ndarray:
    """Square matching matrix in the unknowns (chi(0), chi'(0)) of every edge.

    Rows: one Robin condition per boundary vertex; at an interior vertex of degree d,
    d - 1 continuity rows and one flux row. Each row is scaled to unit max norm.
    """
    col = {e.id: 2 * i for i, e in enumerate(g.edges)}
    size = 2 * len(g.edges)
    ends: Dict[str, List[Tuple[int, np.ndarray, np.ndarray]]] = {vid: [] for vid in g.vertices}
    for e in g.edges:
        t = edge_basis(e, energy).transfer
        back = np.exp(-1j * e.phase)
        ends[e.source].append((col[e.id], np.array([1.0, 0.0], dtype=complex),
                               np.array([0.0, 1.0], dtype=complex)))
        ends[e.target].append((col[e.id], back * t[0, :], -back * t[1, :]))

    def functional(items: Sequence[Tuple[int, np.ndarray]]) -> np.ndarray:
        row = np.zeros(size, dtype=complex)
        for c, coeffs in items:
            row[c : c + 2] += coeffs
        return row

    rows: List[np.ndarray] = []
    for vid, v in g.vertices.items():
        incident = ends[vid]
        if v.boundary:
            c, val, der = incident[0]
            rows.append(functional([(c, math.cos(v.omega) * val + math.sin(v.omega) * der)]))
            continue
        if kind is CouplingKind.DELTA:
            shared = [(c, val) for c, val, _ in incident]
            summed = [(c, der) for c, _, der in incident]
        else:
            shared = [(c, der) for c, _, der in incident]
            summed = [(c, val) for c, val, _ in incident]
        first = shared[0]
        for other in shared[1:]:
            rows.append(functional([first, (other[0], -other[1])]))
        rows.append(functional(summed + [(first[0], -v.constant * first[1])]))

    matrix = np.vstack(rows)
    matrix /= np.abs(matrix).max(axis=1, keepdims=True)
    return matrix if g.has_phases else matrix.real.copy()


@dataclass(frozen=True)
class ReferenceSpectrum:
    """Matching-oracle roots with multiplicities and null-space coefficient vectors."""

    roots: Tuple[Tuple[float, int], ...]
    kernels: Tuple[np.ndarray, ...] = field(repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e for e, mult in self.roots for _ in range(mult)])


def _relative_smin(g: Graph, energy: float, kind: CouplingKind) -> float:
    sv = np.linalg.svd(matching_matrix(g, energy, kind), compute_uv=False)
    return float(sv[-1] / sv[0])


def _det_sign(g: Graph, energy: float, kind: CouplingKind) -> float:
    sign, _ = np.linalg.slogdet(matching_matrix(g, energy, kind))
    return float(np.real(sign))


def _smin_minimum(g: Graph, kind: CouplingKind, lo: float, hi: float) -> Tuple[float, float]:
    # bounded Brent tolerance grows like sqrt(eps) * |E|; polish in a rescaled variable
    coarse = minimize_scalar(
        lambda e: _relative_smin(g, e, kind),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 0.1 * POLISH_RTOL * max(1.0, abs(lo))},
    )
    center = float(coarse.x)
    half = POLISH_RTOL * max(1.0, abs(center))
    fine = minimize_scalar(
        lambda t: _relative_smin(g, center + t * half, kind),
        bounds=(-1.0, 1.0),
        method="bounded",
        options={"xatol": 1e-5},
    )
    if fine.fun <= coarse.fun:
        return center + float(fine.x) * half, float(fine.fun)
    return center, float(coarse.fun)


def matching_spectrum(
    g: Graph,
    kind: CouplingKind,
    e_range: Tuple[float, float],
    grid_step: float = SOLVER_DEFAULTS["grid_step"],
    root_tol: float = SOLVER_DEFAULTS["root_tol"],
    null_tol: float = SOLVER_DEFAULTS["null_tol"],
) -> ReferenceSpectrum:
    """Roots of det S(E) in the closed range, even-order ones included.

    Odd-order roots come from sign changes of det S (real case); every root also
    shows up as a local minimum of sigma_min / sigma_max, refined by two bounded
    Brent passes.
    Multiplicity is the number of relative singular values below ``null_tol``.
    """
    a, b = float(e_range[0]), float(e_range[1])
    if not b > a:
        raise GraphValidationError("empty range", f"({a}, {b})")
    n = max(2, int(math.ceil((b - a) / grid_step)))
    grid = np.linspace(a, b, n + 1)
    smin = np.array([_relative_smin(g, float(e), kind) for e in grid])
    candidates: List[float] = []

    if not g.has_phases:
        signs = np.array([_det_sign(g, float(e), kind) for e in grid])
        for i in range(n):
            if signs[i] * signs[i + 1] < 0.0:
                lo, hi, s_lo = float(grid[i]), float(grid[i + 1]), signs[i]
                while hi - lo > root_tol * max(1.0, abs(lo)):
                    mid = 0.5 * (lo + hi)
                    s_mid = _det_sign(g, mid, kind)
                    if s_mid == 0.0:
                        lo = hi = mid
                        break
                    if s_mid * s_lo < 0.0:
                        hi = mid
                    else:
                        lo, s_lo = mid, s_mid
                candidates.append(0.5 * (lo + hi))

    for i in range(n + 1):
        left = smin[i - 1] if i > 0 else np.inf
        right = smin[i + 1] if i < n else np.inf
        if smin[i] <= left and smin[i] <= right:
            lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, n)])
            energy, value = _smin_minimum(g, kind, lo, hi)
            if value < null_tol:
                candidates.append(energy)

    roots: List[Tuple[float, int]] = []
    kernels: List[np.ndarray] = []
    merge_tol = max(1e3 * root_tol, 10.0 * POLISH_RTOL)
    for energy in sorted(candidates):
        if roots and abs(energy - roots[-1][0]) <= merge_tol * max(1.0, abs(energy)):
            continue
        matrix = matching_matrix(g, energy, kind)
        _, sv, vh = np.linalg.svd(matrix)
        mult = int(np.sum(sv / sv[0] < null_tol))
        if mult == 0:
            continue
        roots.append((energy, mult))
        kernels.append(vh[-mult:].conj().T)
    app_logger.info(f"Matching oracle: {len(roots)} roots in [{a:g}, {b:g}]")
    return ReferenceSpectrum(tuple(roots), tuple(kernels))


@dataclass(frozen=True)
class CompareReport:
    matches: Tuple[Tuple[float, float], ...]
    expected_misses: Tuple[float, ...]
    missing: Tuple[float, ...]
    spurious: Tuple[float, ...]
    tol: float

    @property
    def ok(self) -> bool:
        return not self.missing and not self.spurious

    def as_dict(self) -> Dict[str, object]:
        return {
            "ok": self.ok,
            "tol": self.tol,
            "matches": [list(m) for m in self.matches],
            "expected_misses": list(self.expected_misses),
            "missing": list(self.missing),
            "spurious": list(self.spurious),
        }


def compare(
    duality: SpectrumResult,
    reference: Union[ReferenceSpectrum, Sequence[float], np.ndarray],
    tol: float = COMPARE_DEFAULTS["tol"],
    restrict: Optional[Tuple[float, float]] = None,
) -> CompareReport:
    """Match duality roots (with multiplicity) against a reference list.

    Reference values inside an exclusion window are expected misses; any other
    unmatched reference value is missing and any unmatched duality root spurious.
    Only values inside the searched range (further cut to ``restrict``) take part.
    """
    ref = reference.eigenvalues if isinstance(reference, ReferenceSpectrum) else np.asarray(reference)
    a, b = duality.searched
    if restrict is not None:
        a, b = max(a, restrict[0]), min(b, restrict[1])
    ref_sorted = sorted(float(e) for e in ref if a <= e <= b)
    pool = sorted(float(e) for e in duality.energies() if a - tol <= e <= b + tol)
    used = [False] * len(pool)

    matches: List[Tuple[float, float]] = []
    expected: List[float] = []
    missing: List[float] = []
    for e_ref in ref_sorted:
        best: Optional[int] = None
        for i, e in enumerate(pool):
            if used[i] or abs(e - e_ref) > tol:
                continue
            if best is None or abs(e - e_ref) < abs(pool[best] - e_ref):
                best = i
        if best is not None:
            used[best] = True
            matches.append((pool[best], e_ref))
        elif duality.in_window(e_ref):
            expected.append(e_ref)
        else:
            missing.append(e_ref)
    spurious = [e for i, e in enumerate(pool) if not used[i]]

    report = CompareReport(tuple(matches), tuple(expected), tuple(missing), tuple(spurious), tol)
    if not report.ok:
        app_logger.error(f"Oracle mismatch: missing {missing}, spurious {spurious}")
    else:
        app_logger.info(f"Oracle agrees: {len(matches)} matches, {len(expected)} expected misses")
    return report
