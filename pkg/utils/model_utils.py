"""Closed-form dual rows for rectangular lattices and comb graphs.

Rows are the generic dual rows multiplied by a nonzero scalar (-sin k l1 sin k l2 / k
for delta lattices, -k sin k l1 sin k l2 for delta', -sin kL / k and -k sin kL on the
comb), so they share roots with the generic assembly. Below zero k = i kappa and the
sines turn hyperbolic; E = 0 itself counts as an exceptional energy. Finite windows
replace every dropped hop by a stub that kills the missing neighbour: Dirichlet for
delta, Neumann for delta'.
"""
import cmath
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from config import MODEL_PRESETS
from utils.edge_utils import coupling_data
from utils.errors import ExceptionalEnergyError, GraphValidationError, UnsupportedRequestError
from utils.graph_utils import CouplingKind, EdgeData, Graph, PotentialSpec, VertexData, build_graph
from utils.logger import app_logger

SiteCoupling = Union[float, Callable[[int, int], float]]
RectWindow = Tuple[Tuple[int, int], Tuple[int, int]]
CombWindow = Tuple[int, int]
Wavenumber = Union[float, complex]

# sin k l below this counts as an exceptional energy of the closed forms
EXCEPTIONAL_TOL = 1e-12


@dataclass(frozen=True)
class RectLatticeParams:
    """Rectangular lattice: n runs along edges of length l1, m along edges of length l2.

    ``flux`` is the magnetic flux per plaquette; ``gauge`` is "circular" (symmetric)
    or "landau" (phases on the l1 hops only).
    """

    l1: float
    l2: float
    coupling: SiteCoupling = 0.0
    kind: CouplingKind = CouplingKind.DELTA
    flux: float = 0.0
    gauge: str = "circular"

    def constant_at(self, n: int, m: int) -> float:
        if callable(self.coupling):
            return float(self.coupling(n, m))
        return float(self.coupling)


@dataclass(frozen=True)
class CombParams:
    """Comb: a line of spacing L with a tooth of length teeth(j) at every site j.

    A zero tooth length means no tooth at that site. ``tooth_potential(j, length)``
    is given in coordinates starting at the line vertex j.
    """

    spacing: float
    teeth: Callable[[int], float]
    omega: Callable[[int], float] = lambda j: 0.0
    coupling: Callable[[int], float] = lambda j: 0.0
    kind: CouplingKind = CouplingKind.DELTA
    tooth_potential: Optional[Callable[[int, float], PotentialSpec]] = None


@dataclass(frozen=True)
class RectRow:
    """Row of a lattice matrix: diagonal plus the four hop coefficients with phases."""

    diagonal: complex
    east: complex
    west: complex
    north: complex
    south: complex


@dataclass(frozen=True)
class CombRow:
    diagonal: float
    left: float = 1.0
    right: float = 1.0


def maryland_lengths(window: CombWindow, spacing: float) -> Dict[int, float]:
    """Tooth lengths |j| * spacing over an inclusive window."""
    return {j: abs(j) * spacing for j in range(window[0], window[1] + 1)}


def maryland_comb(spacing: float = 1.0, kind: CouplingKind = CouplingKind.DELTA,
                  omega: float = 0.0, coupling: float = 0.0) -> CombParams:
    return CombParams(
        spacing=spacing,
        teeth=lambda j: abs(j) * spacing,
        omega=lambda j: omega,
        coupling=lambda j: coupling,
        kind=kind,
    )


def _hop_phases(p: RectLatticeParams, n: int, m: int) -> Tuple[float, float, float, float]:
    # (east, west, north, south) angles; every plaquette encloses p.flux
    if p.gauge == "circular":
        return (-p.flux * m / 2.0, p.flux * m / 2.0, p.flux * n / 2.0, -p.flux * n / 2.0)
    if p.gauge == "landau":
        return (-p.flux * m, p.flux * m, 0.0, 0.0)
    raise UnsupportedRequestError(f"unknown gauge {p.gauge!r}")


def wavenumber(energy: float) -> Wavenumber:
    """k with k^2 = E: sqrt(E) above zero, i sqrt(-E) below.

    Raises:
        ExceptionalEnergyError: E = 0, where the closed-form scalars vanish
    """
    if energy > 0.0:
        return math.sqrt(energy)
    if energy < 0.0:
        return 1j * math.sqrt(-energy)
    raise ExceptionalEnergyError(0.0, None, "closed-form rows degenerate at k = 0")


def _branch(k: Wavenumber) -> Tuple[float, float]:
    # (kappa, sign) with k = kappa (sign 1) or k = i kappa (sign -1)
    z = complex(k)
    if z.imag == 0.0 and z.real > 0.0:
        return z.real, 1.0
    if z.real == 0.0 and z.imag > 0.0:
        return z.imag, -1.0
    raise UnsupportedRequestError(f"rows need k > 0 or k = i kappa with kappa > 0, got {k}")


def _sin_like(x: float, sign: float) -> float:
    return math.sin(x) if sign > 0.0 else math.sinh(x)


def _cos_like(x: float, sign: float) -> float:
    return math.cos(x) if sign > 0.0 else math.cosh(x)


def rect_row(p: RectLatticeParams, n: int, m: int, k: Wavenumber) -> RectRow:
    """Row of the lattice matrix at site (n, m).

    ``k`` is sqrt(E) for E > 0 and i sqrt(-E) for E < 0; below zero every sine
    becomes the matching hyperbolic sine and the row stays real.

    Raises:
        ExceptionalEnergyError: sin k l1 or sin k l2 vanishes
    """
    kappa, sign = _branch(k)
    s1, s2 = _sin_like(kappa * p.l1, sign), _sin_like(kappa * p.l2, sign)
    if abs(s1) < EXCEPTIONAL_TOL or abs(s2) < EXCEPTIONAL_TOL:
        energy = sign * kappa * kappa
        raise ExceptionalEnergyError(energy, None, f"sin k l vanishes at site ({n}, {m})")
    constant = p.constant_at(n, m)
    both = _sin_like(kappa * (p.l1 + p.l2), sign)
    if p.kind is CouplingKind.DELTA:
        diagonal = -(constant / kappa) * s1 * s2 - 2.0 * both
    else:
        diagonal = -sign * constant * kappa * s1 * s2 + 2.0 * both
    east, west, north, south = _hop_phases(p, n, m)
    return RectRow(
        diagonal=complex(diagonal),
        east=s2 * cmath.exp(1j * east),
        west=s2 * cmath.exp(1j * west),
        north=s1 * cmath.exp(1j * north),
        south=s1 * cmath.exp(1j * south),
    )


def plaquette_phase(p: RectLatticeParams, n: int, m: int) -> float:
    """Phase collected counter-clockwise around the cell with corner (n, m), mod 2 pi."""
    east, _, _, _ = _hop_phases(p, n, m)
    _, _, north, _ = _hop_phases(p, n + 1, m)
    _, west, _, _ = _hop_phases(p, n + 1, m + 1)
    _, _, _, south = _hop_phases(p, n, m + 1)
    return float(np.mod(east + north + west + south, 2.0 * math.pi))


def literal_phase_report(flux: float, n: int, m: int) -> Dict[str, float]:
    """Check a phase assignment that uses m on the vertical and n on the horizontal hops.

    That reading of the symmetric gauge is not Hermitian for flux outside 4 pi Z;
    the report gives its Hermiticity defect and plaquette phase next to the
    plaquette phase of the gauge actually used.
    """
    def literal(nn: int, mm: int) -> Tuple[float, float, float, float]:
        return (-flux * nn / 2.0, flux * nn / 2.0, flux * mm / 2.0, -flux * mm / 2.0)

    north = literal(n, m)[2]
    south_back = literal(n, m + 1)[3]
    defect = abs(cmath.exp(1j * north) - cmath.exp(-1j * south_back))
    literal_plaquette = float(np.mod(
        literal(n, m)[0] + literal(n + 1, m)[2] + literal(n + 1, m + 1)[1] + literal(n, m + 1)[3],
        2.0 * math.pi,
    ))
    used = plaquette_phase(RectLatticeParams(1.0, 1.0, flux=flux), n, m)
    report = {
        "hermiticity_defect": float(defect),
        "literal_plaquette_phase": literal_plaquette,
        "plaquette_phase": used,
        "expected_phase": float(np.mod(flux, 2.0 * math.pi)),
    }
    if defect > 1e-12:
        app_logger.warning(
            f"Literal phase assignment is not Hermitian at ({n}, {m}): defect {defect:.3e}; "
            f"using the symmetric gauge with plaquette phase {used:.6g}"
        )
    return report


def comb_row(p: CombParams, j: int, k: Wavenumber) -> CombRow:
    """Row of the comb matrix at site j; ``k`` as in :func:`rect_row`.

    Zero-potential teeth above zero use v'/v = k cot(k l - eta) with
    eta = arctan(k tan omega); other teeth go through the edge solver.
    """
    kappa, sign = _branch(k)
    energy = sign * kappa * kappa
    span = _sin_like(kappa * p.spacing, sign) / kappa
    if abs(span * kappa) < EXCEPTIONAL_TOL:
        raise ExceptionalEnergyError(energy, None, "sin kL vanishes")
    tooth = float(p.teeth(j))
    constant = float(p.coupling(j))
    delta = p.kind is CouplingKind.DELTA

    if tooth == 0.0:
        ratio = 0.0
    elif p.tooth_potential is not None or sign < 0.0:
        pot = p.tooth_potential(j, tooth) if p.tooth_potential is not None else None
        edge = EdgeData.make(f"t{j}", str(j), f"t{j}", tooth, pot)
        far = VertexData.boundary_vertex(f"t{j}", p.omega(j))
        cd = coupling_data(edge, energy, p.kind, str(j), far)
        denom = cd.v_end if delta else cd.dv_end
        if abs(denom) < EXCEPTIONAL_TOL:
            raise ExceptionalEnergyError(energy, f"t{j}", "tooth Wronskian vanishes")
        ratio = (cd.dv_end / cd.v_end) if delta else (cd.v_end / cd.dv_end)
    else:
        eta = math.atan(kappa * math.tan(p.omega(j)))
        phase = kappa * tooth - eta
        if delta:
            if abs(math.sin(phase)) < EXCEPTIONAL_TOL:
                raise ExceptionalEnergyError(energy, f"t{j}", "tooth Wronskian vanishes")
            ratio = kappa / math.tan(phase)
        else:
            if abs(math.cos(phase)) < EXCEPTIONAL_TOL:
                raise ExceptionalEnergyError(energy, f"t{j}", "tooth Wronskian vanishes")
            ratio = math.tan(phase) / kappa

    # span = sin(kL) / k is entire in E
    wave = _cos_like(kappa * p.spacing, sign)
    if delta:
        diagonal = -(ratio + constant) * span - 2.0 * wave
    else:
        diagonal = -(ratio + constant) * energy * span + 2.0 * wave
    return CombRow(diagonal=diagonal)


def _rect_sites(window: RectWindow) -> List[Tuple[int, int]]:
    (n0, n1), (m0, m1) = window
    if n1 < n0 or m1 < m0:
        raise GraphValidationError("empty window", f"{window}")
    return [(n, m) for n in range(n0, n1 + 1) for m in range(m0, m1 + 1)]


def _comb_sites(window: CombWindow) -> List[int]:
    if window[1] < window[0]:
        raise GraphValidationError("empty window", f"{window}")
    return list(range(window[0], window[1] + 1))


def site_labels(model: Union[RectLatticeParams, CombParams], window: object) -> Tuple[str, ...]:
    """Vertex ids of the window sites, in matrix order."""
    if isinstance(model, RectLatticeParams):
        return tuple(f"{n}:{m}" for n, m in _rect_sites(window))  # type: ignore[arg-type]
    return tuple(str(j) for j in _comb_sites(window))  # type: ignore[arg-type]


def finite_window_matrix(
    model: Union[RectLatticeParams, CombParams], window: object, k: Wavenumber
) -> sparse.csr_matrix:
    """Truncation of the lattice or comb matrix to a finite window (dropped hops)."""
    rows: List[int] = []
    cols: List[int] = []
    data: List[complex] = []
    if isinstance(model, RectLatticeParams):
        sites = _rect_sites(window)  # type: ignore[arg-type]
        index = {site: i for i, site in enumerate(sites)}
        for (n, m), i in index.items():
            row = rect_row(model, n, m, k)
            rows.append(i)
            cols.append(i)
            data.append(row.diagonal)
            for coeff, site in (
                (row.east, (n + 1, m)),
                (row.west, (n - 1, m)),
                (row.north, (n, m + 1)),
                (row.south, (n, m - 1)),
            ):
                if site in index:
                    rows.append(i)
                    cols.append(index[site])
                    data.append(coeff)
        is_complex = model.flux != 0.0
    else:
        sites_j = _comb_sites(window)  # type: ignore[arg-type]
        index_j = {j: i for i, j in enumerate(sites_j)}
        for j, i in index_j.items():
            crow = comb_row(model, j, k)
            rows.append(i)
            cols.append(i)
            data.append(crow.diagonal)
            for coeff, nb in ((crow.right, j + 1), (crow.left, j - 1)):
                if nb in index_j:
                    rows.append(i)
                    cols.append(index_j[nb])
                    data.append(coeff)
        is_complex = False
    values = np.array(data, dtype=complex)
    if not is_complex:
        values = values.real.copy()
    size = max(rows) + 1
    return sparse.coo_matrix((values, (rows, cols)), shape=(size, size)).tocsr()


def _stub_omega(kind: CouplingKind) -> float:
    return 0.0 if kind is CouplingKind.DELTA else math.pi / 2.0


def rect_patch_graph(p: RectLatticeParams, window: RectWindow) -> Graph:
    """Explicit graph whose spectrum equals that of the truncated lattice matrix."""
    sites = _rect_sites(window)
    present = set(sites)
    omega = _stub_omega(p.kind)
    vertices = [VertexData.interior(f"{n}:{m}", p.constant_at(n, m)) for n, m in sites]
    edges: List[EdgeData] = []
    for n, m in sites:
        east, west, north, south = _hop_phases(p, n, m)
        for step, length, phase, label in (
            ((1, 0), p.l1, east, "E"),
            ((0, 1), p.l2, north, "N"),
        ):
            nb = (n + step[0], m + step[1])
            if nb in present:
                edges.append(EdgeData.make(f"{n}:{m}{label}", f"{n}:{m}", f"{nb[0]}:{nb[1]}", length, phase=phase))
        for step, length, label in (((1, 0), p.l1, "E"), ((-1, 0), p.l1, "W"),
                                    ((0, 1), p.l2, "N"), ((0, -1), p.l2, "S")):
            nb = (n + step[0], m + step[1])
            if nb not in present:
                stub = f"{n}:{m}>{label}"
                vertices.append(VertexData.boundary_vertex(stub, omega))
                edges.append(EdgeData.make(stub, f"{n}:{m}", stub, length))
    return build_graph(vertices, edges)


def comb_graph(p: CombParams, window: CombWindow) -> Graph:
    """Explicit comb segment with end stubs, equivalent to the truncated comb matrix."""
    sites = _comb_sites(window)
    omega_stub = _stub_omega(p.kind)
    vertices = [VertexData.interior(str(j), float(p.coupling(j))) for j in sites]
    edges: List[EdgeData] = []
    for j in sites[:-1]:
        edges.append(EdgeData.make(f"L{j}", str(j), str(j + 1), p.spacing))
    for j, label in ((sites[0], "left"), (sites[-1], "right")):
        stub = f"{label}-stub"
        vertices.append(VertexData.boundary_vertex(stub, omega_stub))
        edges.append(EdgeData.make(stub, str(j), stub, p.spacing))
    for j in sites:
        tooth = float(p.teeth(j))
        if tooth == 0.0:
            continue
        tip = f"t{j}"
        pot = p.tooth_potential(j, tooth) if p.tooth_potential is not None else None
        vertices.append(VertexData.boundary_vertex(tip, float(p.omega(j))))
        edges.append(EdgeData.make(tip, str(j), tip, tooth, pot))
    return build_graph(vertices, edges)


def model_graph(model: Union[RectLatticeParams, CombParams], window: object) -> Graph:
    if isinstance(model, RectLatticeParams):
        return rect_patch_graph(model, window)  # type: ignore[arg-type]
    return comb_graph(model, window)  # type: ignore[arg-type]


def row_scalar(model: Union[RectLatticeParams, CombParams], k: Wavenumber) -> float:
    """Factor relating a generic dual row to the closed-form row."""
    kappa, sign = _branch(k)
    delta = model.kind is CouplingKind.DELTA
    if isinstance(model, RectLatticeParams):
        s = _sin_like(kappa * model.l1, sign) * _sin_like(kappa * model.l2, sign)
        return -s / kappa if delta else -sign * kappa * s
    span = _sin_like(kappa * model.spacing, sign) / kappa
    return -span if delta else -sign * kappa * kappa * span


def harper_matrix(p: int, q: int, theta1: float, theta2: float) -> np.ndarray:
    """q x q Harper Bloch matrix at flux 2 pi p / q."""
    if q < 1:
        raise UnsupportedRequestError(f"flux denominator must be positive, got {q}")
    flux = 2.0 * math.pi * p / q
    h = np.zeros((q, q), dtype=complex)
    for m in range(q):
        h[m, m] += 2.0 * math.cos(theta1 - flux * m)
        if m + 1 < q:
            h[m, m + 1] += 1.0
            h[m + 1, m] += 1.0
        else:
            h[m, 0] += np.exp(1j * theta2)
            h[0, m] += np.exp(-1j * theta2)
    return h


def model_from_preset(
    name: str, kind: Optional[CouplingKind] = None, flux: Optional[float] = None
) -> Union[RectLatticeParams, CombParams]:
    """Build model parameters from a named preset in ``MODEL_PRESETS``."""
    if name not in MODEL_PRESETS:
        raise UnsupportedRequestError(f"unknown model {name!r}; choose from {sorted(MODEL_PRESETS)}")
    preset = MODEL_PRESETS[name]
    chosen = kind if kind is not None else CouplingKind.parse(preset["kind"])
    if preset["family"] == "rect":
        return RectLatticeParams(
            l1=preset["l1"],
            l2=preset["l2"],
            coupling=preset["coupling"],
            kind=chosen,
            flux=preset["flux"] if flux is None else flux,
        )
    spacing, tooth = float(preset["spacing"]), float(preset["tooth"])
    omega, coupling = float(preset["omega"]), float(preset["coupling"])
    if preset["rule"] == "maryland":
        return maryland_comb(spacing, chosen, omega, coupling)
    return CombParams(
        spacing=spacing,
        teeth=lambda j: tooth,
        omega=lambda j: omega,
        coupling=lambda j: coupling,
        kind=chosen,
    )
