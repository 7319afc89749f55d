"""Dual Jacobi matrix of a quantum graph and reconstruction of edge solutions."""
import cmath
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.integrate import fixed_quad

from utils.edge_utils import (
    CouplingEdgeData,
    EdgeBasis,
    coupling_data,
    decoupled_wronskian,
    edge_basis,
    energy_window,
    interval_transfer,
)
from utils.errors import ExceptionalEnergyError, GraphValidationError
from utils.graph_utils import CouplingKind, Graph
from utils.logger import app_logger

# Singular per-edge reconstruction systems below this relative determinant
SINGULAR_RTOL = 1e-14

# Step of the five-point stencil for psi'', relative to the piece width
STENCIL_STEP = 1e-3


@dataclass(frozen=True)
class VertexVector:
    """Values indexed by interior vertices: psi_j (delta) or psi'_j (delta')."""

    vertex_ids: Tuple[str, ...]
    values: np.ndarray

    def value(self, vid: str) -> complex:
        return complex(self.values[self.vertex_ids.index(vid)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def normalized(self) -> "VertexVector":
        n = self.norm()
        if n == 0.0:
            return self
        return VertexVector(self.vertex_ids, self.values / n)


@dataclass(frozen=True)
class DualSystem:
    """Sparse dual matrix M(E) with its row index (interior vertices in graph order)."""

    energy: float
    kind: CouplingKind
    vertex_ids: Tuple[str, ...]
    matrix: sparse.csr_matrix
    coupling: Mapping[Tuple[str, str], CouplingEdgeData] = field(repr=False)

    @property
    def index(self) -> Dict[str, int]:
        return {vid: i for i, vid in enumerate(self.vertex_ids)}

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _check_window(g: Graph, energy: float, kind: CouplingKind, half_width: float) -> None:
    # W has simple, well separated zeros: a sign change across the window means one inside
    for edge in g.edges:
        lo = _edge_wronskian(g, edge.id, energy - half_width, kind)
        hi = _edge_wronskian(g, edge.id, energy + half_width, kind)
        if lo is not None and hi is not None and lo * hi <= 0.0:
            raise ExceptionalEnergyError(
                energy, edge.id, f"inside exclusion window of half-width {half_width:g}"
            )


def _edge_wronskian(g: Graph, eid: str, energy: float, kind: CouplingKind) -> Optional[float]:
    return decoupled_wronskian(g, g.edge(eid), energy, kind)


def assemble_dual(
    g: Graph, energy: float, kind: CouplingKind, excl_window: Optional[float] = None
) -> DualSystem:
    """Assemble the dual matrix at ``energy``.

    Row j has off-diagonal e^{i phi_jn} / W_jn for every interior neighbour n and
    diagonal -(sum v'(l)/W - alpha_j) for delta or sum v(l)/W + beta_j for delta'.

    Args:
        g: Validated graph without multi-links
        energy: Spectral parameter E
        kind: Coupling kind
        excl_window: Optional exclusion half-width in k units; None only rejects W = 0

    Raises:
        ExceptionalEnergyError: Some edge Wronskian vanishes (or has a zero in the window)
    """
    if g.has_multilinks:
        raise GraphValidationError("multi-link present", "normalize the graph first")
    interior = g.interior_ids
    if not interior:
        raise GraphValidationError("no interior vertices", "the dual matrix is empty")
    if excl_window:
        _check_window(g, energy, kind, energy_window(energy, excl_window))

    index = {vid: i for i, vid in enumerate(interior)}
    complex_entries = g.has_phases
    rows: List[int] = []
    cols: List[int] = []
    data: List[complex] = []
    cache: Dict[Tuple[str, str], CouplingEdgeData] = {}

    for vid in interior:
        i = index[vid]
        acc = 0.0
        for edge in g.incident(vid):
            far = g.vertex(edge.other_end(vid))
            cd = coupling_data(edge, energy, kind, vid, far)
            cache[(edge.id, vid)] = cd
            w = cd.wronskian
            if w == 0.0:
                raise ExceptionalEnergyError(energy, edge.id, "decoupled Wronskian vanishes")
            acc += (cd.dv_end if kind is CouplingKind.DELTA else cd.v_end) / w
            if not far.boundary:
                rows.append(i)
                cols.append(index[far.id])
                data.append(cmath.exp(1j * edge.phase_from(vid)) / w)
        constant = g.vertex(vid).constant
        diag = -(acc - constant) if kind is CouplingKind.DELTA else acc + constant
        rows.append(i)
        cols.append(i)
        data.append(diag)

    values = np.array(data, dtype=complex)
    if not complex_entries:
        values = values.real.copy()
    n = len(interior)
    matrix = sparse.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
    return DualSystem(float(energy), kind, interior, matrix, cache)


@dataclass(frozen=True)
class Wavefunction:
    """Solution on every edge, stored as gauge-frame data chi(0), chi'(0) per edge.

    The physical solution is psi(x) = e^{-i phi x / l} chi(x) in stored coordinates.
    """

    energy: float
    kind: CouplingKind
    coefficients: Mapping[str, np.ndarray]
    bases: Mapping[str, EdgeBasis] = field(repr=False)

    def evaluate(self, edge_id: str, x: float) -> Tuple[complex, complex]:
        """(psi(x), covariant derivative) at stored coordinate ``x``."""
        basis = self.bases[edge_id]
        chi = basis.state_at(x) @ self.coefficients[edge_id]
        gauge = cmath.exp(-1j * basis.edge.phase * x / basis.edge.length)
        return complex(gauge * chi[0]), complex(gauge * chi[1])

    def end_values(self, edge_id: str, vid: str) -> Tuple[complex, complex]:
        """(value, outward derivative) of the solution at endpoint ``vid``."""
        edge = self.bases[edge_id].edge
        if vid == edge.source:
            a, b = self.coefficients[edge_id]
            return complex(a), complex(b)
        if vid == edge.target:
            value, deriv = self.evaluate(edge_id, edge.length)
            return value, -deriv
        raise GraphValidationError("not an endpoint", f"{vid!r} is not on edge {edge_id!r}")


def _end_row(basis: EdgeBasis, at_source: bool, kind: CouplingKind, boundary: bool,
             omega: float) -> np.ndarray:
    t = basis.transfer
    if at_source:
        if boundary:
            return np.array([math.cos(omega), math.sin(omega)])
        return np.array([1.0, 0.0]) if kind is CouplingKind.DELTA else np.array([0.0, 1.0])
    if boundary:
        return math.cos(omega) * t[0, :] - math.sin(omega) * t[1, :]
    return t[0, :].copy() if kind is CouplingKind.DELTA else -t[1, :]


def reconstruct(g: Graph, energy: float, phi: VertexVector, kind: CouplingKind) -> Wavefunction:
    """Rebuild edge solutions from interior vertex data.

    On each edge the two endpoint conditions (prescribed vertex data at interior
    ends, the Robin condition at boundary ends) fix chi(0), chi'(0).
    """
    if tuple(phi.vertex_ids) != g.interior_ids:
        raise GraphValidationError("vertex vector does not match graph", "interior ids differ")
    coefficients: Dict[str, np.ndarray] = {}
    bases: Dict[str, EdgeBasis] = {}
    for edge in g.edges:
        basis = edge_basis(edge, energy)
        src, tgt = g.vertex(edge.source), g.vertex(edge.target)
        a = np.vstack([
            _end_row(basis, True, kind, src.boundary, src.omega),
            _end_row(basis, False, kind, tgt.boundary, tgt.omega),
        ]).astype(complex)
        rhs = np.array([
            0.0 if src.boundary else phi.value(src.id),
            0.0 if tgt.boundary else cmath.exp(1j * edge.phase) * phi.value(tgt.id),
        ], dtype=complex)
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        scale = max(1.0, float(np.abs(a).max()) ** 2)
        if abs(det) <= SINGULAR_RTOL * scale:
            raise ExceptionalEnergyError(energy, edge.id, "endpoint conditions are singular")
        coefficients[edge.id] = np.linalg.solve(a, rhs)
        bases[edge.id] = basis
    return Wavefunction(float(energy), kind, coefficients, bases)


@dataclass(frozen=True)
class NormReport:
    ode_residual: float
    vertex_residual: float
    l2_norm: float
    vertex_norm: float

    @property
    def ratio(self) -> float:
        """||psi||^2 / ||phi||^2 (NaN for a zero vertex vector)."""
        if self.vertex_norm == 0.0:
            return float("nan")
        return self.l2_norm**2 / self.vertex_norm**2

    def as_dict(self) -> Dict[str, float]:
        return {
            "ode_residual": self.ode_residual,
            "vertex_residual": self.vertex_residual,
            "l2_norm": self.l2_norm,
            "vertex_norm": self.vertex_norm,
            "ratio": self.ratio,
        }


def _quad_order(mu: float, width: float) -> int:
    return 16 + int(math.ceil(2.0 * math.sqrt(abs(mu)) * width))


def residual_and_norms(g: Graph, w: Wavefunction, phi: VertexVector) -> NormReport:
    """Residuals of a reconstructed solution and the two norms of the equivalence.

    The ODE residual is the largest |-psi'' + (V - E) psi| at interior sample points of
    every piece, with psi'' differentiated numerically from psi' and V read from the edge
    potential, together with the jump of the propagated solution across breakpoints.
    The vertex residual is the largest violation of continuity, flux or Robin conditions.
    """
    ode_res = 0.0
    l2_sq = 0.0
    for edge in g.edges:
        basis = w.bases[edge.id]
        coeff = w.coefficients[edge.id]
        for i, (a, b, v) in enumerate(edge.potential.intervals()):
            mu = w.energy - v
            h = STENCIL_STEP * (b - a)
            for x in np.linspace(a, b, 7)[1:-1]:
                psi = (basis.state_at(float(x)) @ coeff)[0]
                d1 = [(basis.state_at(float(x + s * h)) @ coeff)[1] for s in (-2, -1, 1, 2)]
                d2 = (d1[0] - 8.0 * d1[1] + 8.0 * d1[2] - d1[3]) / (12.0 * h)
                local = edge.potential.value_at(float(x))
                ode_res = max(ode_res, float(abs(-d2 + (local - w.energy) * psi)))
            if i > 0:
                # left limit of the previous piece against the stored start state
                prev = basis.start_states[i - 1]
                left = interval_transfer(a - float(basis.starts[i - 1]), float(basis.mus[i - 1]))
                jump = np.abs((left @ prev - basis.start_states[i]) @ coeff).max()
                ode_res = max(ode_res, float(jump))

            def density(xs: np.ndarray, basis: EdgeBasis = basis, coeff: np.ndarray = coeff) -> np.ndarray:
                return np.array([abs((basis.state_at(float(x)) @ coeff)[0]) ** 2 for x in xs])

            value, _ = fixed_quad(density, a, b, n=_quad_order(mu, b - a))
            l2_sq += float(value)

    vertex_res = 0.0
    for vid, vdata in g.vertices.items():
        ends = [w.end_values(e.id, vid) for e in g.incident(vid)]
        if vdata.boundary:
            value, deriv = ends[0]
            vertex_res = max(
                vertex_res, abs(math.cos(vdata.omega) * value + math.sin(vdata.omega) * deriv)
            )
            continue
        values = np.array([e[0] for e in ends])
        derivs = np.array([e[1] for e in ends])
        if w.kind is CouplingKind.DELTA:
            shared, summed = values, derivs
        else:
            shared, summed = derivs, values
        vertex_res = max(vertex_res, float(np.abs(shared - shared[0]).max()))
        vertex_res = max(vertex_res, abs(summed.sum() - vdata.constant * shared[0]))

    report = NormReport(ode_res, vertex_res, math.sqrt(l2_sq), phi.norm())
    app_logger.debug(
        f"E={w.energy:.12g}: vertex residual {vertex_res:.3e}, norm ratio {report.ratio:.6g}"
    )
    return report


def wavefunction_samples(
    g: Graph, w: Wavefunction, density: int
) -> List[Tuple[str, float, complex, complex]]:
    """(edge id, x, psi, covariant psi') at ``density`` points per unit length."""
    rows: List[Tuple[str, float, complex, complex]] = []
    for edge in g.edges:
        n = max(2, int(math.ceil(density * edge.length)) + 1)
        for x in np.linspace(0.0, edge.length, n):
            value, deriv = w.evaluate(edge.id, float(x))
            rows.append((edge.id, float(x), value, deriv))
    return rows


def structural_checks(g: Graph, kind: CouplingKind, energies: Sequence[float]) -> Dict[str, float]:
    """Worst-case structural defects over sampled energies.

    Keys: ``det_transfer`` (|det T - 1|), ``wronskian_symmetry`` (|W_jn - W_nj| on
    interior edges) and ``hermiticity`` (max |M - M^H|). Energies hitting an
    exceptional point are skipped.
    """
    det_dev = sym_dev = herm_dev = 0.0
    used = 0
    for energy in energies:
        for edge in g.edges:
            det_dev = max(det_dev, abs(float(np.linalg.det(edge_basis(edge, energy).transfer)) - 1.0))
            src, tgt = g.vertex(edge.source), g.vertex(edge.target)
            if not (src.boundary or tgt.boundary):
                w_st = coupling_data(edge, energy, kind, tgt.id, src).wronskian
                w_ts = coupling_data(edge, energy, kind, src.id, tgt).wronskian
                sym_dev = max(sym_dev, abs(w_st - w_ts))
        try:
            m = assemble_dual(g, energy, kind).dense()
        except ExceptionalEnergyError:
            continue
        herm_dev = max(herm_dev, float(np.abs(m - m.conj().T).max()))
        used += 1
    return {
        "det_transfer": det_dev,
        "wronskian_symmetry": sym_dev,
        "hermiticity": herm_dev,
        "energies_checked": float(used),
    }
