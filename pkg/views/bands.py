"""`bands` subcommand: rectangular lattice band tests, optionally with flux."""
import argparse
import math
from dataclasses import replace
from typing import Any, Dict, List

import numpy as np

from config import EXIT_CODES
from utils.data_utils import write_result
from utils.errors import ExceptionalEnergyError, UnsupportedRequestError
from utils.logger import app_logger
from utils.model_utils import RectLatticeParams, literal_phase_report, model_from_preset
from utils.spectral_utils import (
    BandQuery,
    BandVerdict,
    band_edges_rect,
    band_test_rect,
    flux_fraction,
    magnetic_band_spectrum,
    window_spectrum,
)
from utils.viz_utils import band_table


def energy_grid(e_min: float, e_max: float, step: float) -> np.ndarray:
    """Uniform grid over [e_min, e_max] without the point E = 0."""
    grid = np.arange(e_min, e_max + step / 2.0, step)
    return grid[np.abs(grid) > 1e-3 * step]


def show_bands(args: argparse.Namespace) -> int:
    model = model_from_preset(args.model or "square", args.kind)
    if not isinstance(model, RectLatticeParams):
        raise UnsupportedRequestError(f"bands needs a rectangular lattice model, got {args.model!r}")
    if args.coupling is not None:
        model = replace(model, coupling=args.coupling)
    p, q = args.flux if args.flux is not None else flux_fraction(model.flux)
    model = replace(model, flux=2.0 * math.pi * p / q)
    query = BandQuery(model.l1, model.l2, float(model.coupling), model.kind, p, q)
    energies = energy_grid(args.e_min, args.e_max, args.grid_step)

    document: Dict[str, Any] = {
        "model": args.model or "square",
        "l1": model.l1,
        "l2": model.l2,
        "coupling": model.coupling,
        "kind": model.kind.value,
        "flux": [p, q],
    }
    verdicts: List[BandVerdict] = []
    if p % q == 0:
        for energy in energies:
            try:
                verdicts.append(band_test_rect(query, float(energy)))
            except ExceptionalEnergyError:
                app_logger.debug(f"Skipping exceptional grid energy {energy:.12g}")
        document["band_edges"] = [
            {"energy": e, "kind": tag} for e, tag in band_edges_rect(query, (args.e_min, args.e_max))
        ]
    else:
        verdicts = magnetic_band_spectrum(query, energies.tolist(), bloch_grid=args.bloch_grid)
        document["gauge_check"] = literal_phase_report(model.flux, 1, 1)
    document["verdicts"] = [
        {"energy": v.energy, "in_band": v.in_band, "margin": v.margin} for v in verdicts
    ]

    if args.window is not None:
        if len(args.window) != 2 or not all(isinstance(r, tuple) for r in args.window):
            raise UnsupportedRequestError(f"lattice windows are n0:n1,m0:m1, got {args.window!r}")
        result = window_spectrum(
            model, args.window, (args.e_min, args.e_max),
            grid_step=args.grid_step, excl_window=args.excl_window,
        )
        document["window"] = {
            "sites": list(args.window),
            "roots": [{"energy": r.energy, "multiplicity": r.multiplicity} for r in result.roots],
            "unsearched": [[w.lower, w.upper] for w in result.windows],
        }

    header = {"model": document["model"], "flux": f"{p}/{q}", "kind": model.kind.value}
    write_result(args.format, args.output, document, band_table(verdicts), header)
    app_logger.info(f"Bands: {sum(v.in_band for v in verdicts)}/{len(verdicts)} energies in band")
    return EXIT_CODES["ok"]
