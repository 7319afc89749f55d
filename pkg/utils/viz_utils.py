"""Plot-ready tables for spectra, bands, wavefunctions and oracle reports."""
from typing import Sequence, Union

import numpy as np
import pandas as pd

from utils.dual_utils import NormReport, Wavefunction, wavefunction_samples
from utils.graph_utils import Graph
from utils.model_utils import (
    CombParams,
    CombWindow,
    RectLatticeParams,
    RectWindow,
    Wavenumber,
    comb_row,
    rect_row,
)
from utils.oracle_utils import CompareReport
from utils.spectral_utils import BandVerdict, SpectrumResult


def spectrum_table(result: SpectrumResult, reports: Sequence[Sequence[NormReport]] = ()) -> pd.DataFrame:
    """One row per root; residual columns come from the first kernel vector's report."""
    rows = []
    for i, root in enumerate(result.roots):
        row = {"energy": root.energy, "multiplicity": root.multiplicity}
        if i < len(reports) and reports[i]:
            first = reports[i][0]
            row.update({
                "vertex_residual": max(r.vertex_residual for r in reports[i]),
                "ode_residual": max(r.ode_residual for r in reports[i]),
                "norm_ratio": first.ratio,
            })
        rows.append(row)
    return pd.DataFrame(rows, columns=["energy", "multiplicity", "vertex_residual", "ode_residual", "norm_ratio"])


def band_table(verdicts: Sequence[BandVerdict]) -> pd.DataFrame:
    return pd.DataFrame(
        [(v.energy, int(v.in_band), v.margin) for v in verdicts],
        columns=["energy", "in_band", "margin"],
    )


def wavefunction_table(g: Graph, w: Wavefunction, density: int) -> pd.DataFrame:
    samples = wavefunction_samples(g, w, density)
    df = pd.DataFrame(samples, columns=["edge", "x", "psi", "dpsi"])
    psi = df.pop("psi").to_numpy(dtype=complex)
    dpsi = df.pop("dpsi").to_numpy(dtype=complex)
    df["re_psi"], df["im_psi"], df["abs_psi"] = psi.real, psi.imag, np.abs(psi)
    df["re_dpsi"], df["im_dpsi"] = dpsi.real, dpsi.imag
    return df


def model_rows_table(
    model: Union[RectLatticeParams, CombParams],
    window: Union[RectWindow, CombWindow],
    k: Wavenumber,
) -> pd.DataFrame:
    """Closed-form row coefficients of every window site at wavenumber k."""
    if isinstance(model, RectLatticeParams):
        (n0, n1), (m0, m1) = window  # type: ignore[misc]
        rows = []
        for n in range(n0, n1 + 1):
            for m in range(m0, m1 + 1):
                r = rect_row(model, n, m, k)
                rows.append((f"{n}:{m}", r.diagonal.real, r.east, r.west, r.north, r.south))
        df = pd.DataFrame(rows, columns=["site", "diagonal", "east", "west", "north", "south"])
        for col in ("east", "west", "north", "south"):
            values = df.pop(col).to_numpy(dtype=complex)
            df[f"{col}_abs"], df[f"{col}_arg"] = np.abs(values), np.angle(values)
        return df
    j0, j1 = window  # type: ignore[misc]
    return pd.DataFrame(
        [(str(j), float(model.teeth(j)), comb_row(model, j, k).diagonal) for j in range(j0, j1 + 1)],
        columns=["site", "tooth", "diagonal"],
    )


def compare_table(report: CompareReport) -> pd.DataFrame:
    rows: list = [("match", d, r) for d, r in report.matches]
    rows += [("expected-miss", np.nan, r) for r in report.expected_misses]
    rows += [("missing", np.nan, r) for r in report.missing]
    rows += [("spurious", d, np.nan) for d in report.spurious]
    return pd.DataFrame(rows, columns=["status", "duality", "reference"])
