"""Per-edge solutions of -f'' + V f = E f and the coupling data built from them."""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from config import EXCEPTIONAL_CONFIG
from utils.errors import GraphValidationError
from utils.graph_utils import CouplingKind, EdgeData, Graph, VertexData
from utils.logger import app_logger

ArrayLike = Union[float, np.ndarray]

# Below |mu| x^2 < SERIES_THRESHOLD the Taylor series replaces sin/sinh
SERIES_THRESHOLD = 1e-4
SERIES_TERMS = 8


def interval_functions(x: ArrayLike, mu: float) -> Tuple[np.ndarray, ...]:
    """Entire functions C, S of mu = E - V and their x-derivatives at ``x``.

    C(0) = 1, C'(0) = 0, S(0) = 0, S'(0) = 1; S' = C and C' = -mu S. Analytic in mu,
    so E crossing V needs no special case.

    Returns:
        (C, C', S, S') as arrays shaped like ``x``.
    """
    x = np.asarray(x, dtype=float)
    z = mu * x * x
    series = np.abs(z) < SERIES_THRESHOLD

    # sum_n (-z)^n / (2n)!  and  x * sum_n (-z)^n / (2n+1)!
    c_ser = np.zeros_like(x)
    s_ser = np.zeros_like(x)
    term_c = np.ones_like(x)
    term_s = np.ones_like(x)
    for n in range(SERIES_TERMS):
        c_ser = c_ser + term_c
        s_ser = s_ser + term_s
        term_c = term_c * (-z) / ((2 * n + 1) * (2 * n + 2))
        term_s = term_s * (-z) / ((2 * n + 2) * (2 * n + 3))
    s_ser = x * s_ser

    if mu > 0:
        r = math.sqrt(mu)
        c_full = np.cos(r * x)
        s_full = np.sin(r * x) / r
    elif mu < 0:
        r = math.sqrt(-mu)
        c_full = np.cosh(r * x)
        s_full = np.sinh(r * x) / r
    else:
        c_full, s_full = c_ser, s_ser

    c = np.where(series, c_ser, c_full)
    s = np.where(series, s_ser, s_full)
    return c, -mu * s, s, c


def interval_transfer(x: float, mu: float) -> np.ndarray:
    """Fundamental matrix [[C, S], [C', S']] of a constant-potential piece."""
    c, dc, s, ds = interval_functions(x, mu)
    return np.array([[float(c), float(s)], [float(dc), float(ds)]])


@dataclass(frozen=True)
class EdgeBasis:
    """Canonical solutions c, s of one edge at a fixed energy.

    ``transfer`` is [[c, s], [c', s']] at x = length, in stored coordinates.
    """

    edge: EdgeData
    energy: float
    starts: np.ndarray
    mus: np.ndarray
    start_states: np.ndarray
    transfer: np.ndarray

    @property
    def c(self) -> float:
        return float(self.transfer[0, 0])

    @property
    def s(self) -> float:
        return float(self.transfer[0, 1])

    @property
    def dc(self) -> float:
        return float(self.transfer[1, 0])

    @property
    def ds(self) -> float:
        return float(self.transfer[1, 1])

    @property
    def reversed_transfer(self) -> np.ndarray:
        """Fundamental matrix seen from the target end: J T^-1 J = [[s', s], [c', c]]."""
        return np.array([[self.ds, self.s], [self.dc, self.c]])

    def transfer_from(self, vid: str) -> np.ndarray:
        """Fundamental matrix with x = 0 at ``vid``."""
        if vid == self.edge.source:
            return self.transfer
        if vid == self.edge.target:
            return self.reversed_transfer
        raise GraphValidationError("not an endpoint", f"{vid!r} is not on edge {self.edge.id!r}")

    def state_at(self, x: float) -> np.ndarray:
        """[[c(x), s(x)], [c'(x), s'(x)]] for 0 <= x <= length."""
        if x < 0.0 or x > self.edge.length * (1 + 1e-14):
            raise GraphValidationError(
                "position outside edge", f"x={x} on {self.edge.id!r} (length {self.edge.length})"
            )
        idx = int(np.searchsorted(self.starts, x, side="right")) - 1
        idx = min(max(idx, 0), len(self.starts) - 1)
        local = interval_transfer(x - float(self.starts[idx]), float(self.mus[idx]))
        return local @ self.start_states[idx]


def edge_basis(edge: EdgeData, energy: float) -> EdgeBasis:
    """Propagate the canonical solutions through every constant piece of ``edge``."""
    pieces = edge.potential.intervals()
    starts = np.array([a for a, _, _ in pieces])
    mus = np.array([energy - v for _, _, v in pieces])
    states = np.empty((len(pieces), 2, 2))
    current = np.eye(2)
    for i, (a, b, _) in enumerate(pieces):
        states[i] = current
        current = interval_transfer(b - a, float(mus[i])) @ current
    return EdgeBasis(edge, float(energy), starts, mus, states, current)


def edge_state(basis: EdgeBasis, x: float) -> np.ndarray:
    """Canonical solutions and derivatives at interior position ``x``."""
    return basis.state_at(x)


def energy_window(energy: float, delta: float) -> float:
    """Half-width in E of a k-window of half-width ``delta`` around ``energy``."""
    return 2.0 * math.sqrt(abs(energy)) * delta + delta * delta


@dataclass(frozen=True)
class CouplingEdgeData:
    """Solutions u, v on an edge n -> j, in coordinates with x = 0 at the far vertex n.

    v satisfies the far-end condition (Dirichlet or Neumann for an interior far
    vertex, Robin for a boundary one); u is the partner with W(u, v) = ``wronskian``.
    """

    edge_id: str
    toward: str
    far: str
    kind: CouplingKind
    far_is_boundary: bool
    basis: EdgeBasis
    u0: float
    du0: float
    v0: float
    dv0: float
    v_end: float
    dv_end: float
    wronskian: float

    def u_at(self, x: float) -> Tuple[float, float]:
        st = self.basis.state_at(x)
        return (
            float(self.u0 * st[0, 0] + self.du0 * st[0, 1]),
            float(self.u0 * st[1, 0] + self.du0 * st[1, 1]),
        )

    def v_at(self, x: float) -> Tuple[float, float]:
        st = self.basis.state_at(x)
        return (
            float(self.v0 * st[0, 0] + self.dv0 * st[0, 1]),
            float(self.v0 * st[1, 0] + self.dv0 * st[1, 1]),
        )


def coupling_data(
    edge: EdgeData,
    energy: float,
    kind: CouplingKind,
    toward: str,
    far: VertexData,
    variant: Optional[str] = None,
) -> CouplingEdgeData:
    """Build the u, v pair used in the dual row of vertex ``toward``.

    Args:
        edge: Edge joining ``far`` and ``toward``
        energy: Spectral parameter E
        kind: Coupling kind of the run
        toward: Vertex whose row is being assembled
        far: Vertex data of the other endpoint
        variant: Optional "interior" or "boundary" assertion about ``far``

    Returns:
        CouplingEdgeData with W = -s(l) (delta, interior), c'(l) (delta', interior),
        -v(l) (delta, boundary) or v'(l) (delta', boundary)
    """
    if far.id != edge.other_end(toward):
        raise GraphValidationError("not an endpoint", f"{far.id!r} is not across {edge.id!r}")
    if variant is not None and variant != ("boundary" if far.boundary else "interior"):
        raise GraphValidationError(
            "far-vertex kind inconsistent with variant", f"{far.id!r} is not {variant}"
        )

    oriented = edge if far.id == edge.source else edge.reversed()
    basis = edge_basis(oriented, energy)
    c, dc, s, ds = basis.c, basis.dc, basis.s, basis.ds

    if kind is CouplingKind.DELTA:
        u0, du0 = -s, c
    else:
        u0, du0 = ds, -dc

    if far.boundary:
        sw, cw = math.sin(far.omega), math.cos(far.omega)
        v0, dv0 = sw, -cw
        v_end, dv_end = sw * c - cw * s, sw * dc - cw * ds
        wronskian = u0 * dv0 - du0 * v0
    elif kind is CouplingKind.DELTA:
        v0, dv0, v_end, dv_end = 0.0, 1.0, s, ds
        wronskian = -s
    else:
        v0, dv0, v_end, dv_end = 1.0, 0.0, c, dc
        wronskian = dc

    return CouplingEdgeData(
        edge_id=edge.id,
        toward=toward,
        far=far.id,
        kind=kind,
        far_is_boundary=far.boundary,
        basis=basis,
        u0=u0,
        du0=du0,
        v0=v0,
        dv0=dv0,
        v_end=v_end,
        dv_end=dv_end,
        wronskian=wronskian,
    )


def decoupled_wronskian(
    g: Graph, edge: EdgeData, energy: float, kind: CouplingKind
) -> Optional[float]:
    """Wronskian whose zeros are the exceptional energies of ``edge``.

    None for an edge joining two boundary vertices (it never enters a dual row).
    """
    src, tgt = g.vertex(edge.source), g.vertex(edge.target)
    if src.boundary and tgt.boundary:
        return None
    if src.boundary:
        return coupling_data(edge, energy, kind, tgt.id, src).wronskian
    return coupling_data(edge, energy, kind, src.id, tgt).wronskian


def exceptional_points(
    g: Graph, kind: CouplingKind, e_range: Tuple[float, float]
) -> List[Tuple[float, str]]:
    """Zeros of each edge's decoupled Wronskian inside the closed range, sorted by E."""
    e_min, e_max = float(e_range[0]), float(e_range[1])
    if e_max < e_min:
        raise GraphValidationError("empty range", f"{e_range}")
    points: List[Tuple[float, str]] = []
    if e_max == e_min:
        return points

    xtol = EXCEPTIONAL_CONFIG["xtol"]
    for edge in g.edges:
        if g.vertex(edge.source).boundary and g.vertex(edge.target).boundary:
            continue

        def wronskian(e: float, edge: EdgeData = edge) -> float:
            value = decoupled_wronskian(g, edge, e, kind)
            assert value is not None
            return value

        step = math.pi**2 / (EXCEPTIONAL_CONFIG["step_divisor"] * edge.length**2)
        n = max(2, int(math.ceil((e_max - e_min) / step)))
        grid = np.linspace(e_min, e_max, n + 1)
        values = np.array([wronskian(float(e)) for e in grid])
        found: List[float] = []
        for i in range(n + 1):
            if values[i] == 0.0:
                found.append(float(grid[i]))
            elif i < n and values[i] * values[i + 1] < 0.0:
                found.append(float(brentq(wronskian, grid[i], grid[i + 1], xtol=xtol)))
        points.extend((e, edge.id) for e in found)
        if found:
            app_logger.debug(f"Edge {edge.id!r}: {len(found)} exceptional points in {e_range}")

    points.sort(key=lambda p: (p[0], p[1]))
    return points
