"""`comb` subcommand: comb rows and finite-window spectra (constant or Maryland teeth)."""
import argparse
from dataclasses import replace

import pandas as pd

from config import EXIT_CODES, WINDOW_DEFAULTS
from utils.data_utils import write_result
from utils.errors import UnsupportedRequestError
from utils.logger import app_logger
from utils.model_utils import CombParams, maryland_lengths, model_from_preset, wavenumber
from utils.spectral_utils import window_spectrum
from utils.viz_utils import model_rows_table


def show_comb(args: argparse.Namespace) -> int:
    model = model_from_preset(args.model or "maryland", args.kind)
    if not isinstance(model, CombParams):
        raise UnsupportedRequestError(f"comb needs a comb model, got {args.model!r}")
    if args.coupling is not None:
        coupling = float(args.coupling)
        model = replace(model, coupling=lambda j: coupling)
    window = args.window if args.window is not None else WINDOW_DEFAULTS["comb"]
    if len(window) != 2 or not all(isinstance(j, int) for j in window):
        raise UnsupportedRequestError(f"comb windows are j0:j1, got {window!r}")

    result = window_spectrum(
        model, window, (args.e_min, args.e_max),
        grid_step=args.grid_step, excl_window=args.excl_window,
    )
    if args.wavenumber is not None:
        k = args.wavenumber
    else:
        middle = 0.5 * (args.e_min + args.e_max)
        k = wavenumber(middle if middle != 0.0 else args.e_max)
    rows = model_rows_table(model, window, k)

    document = {
        "model": args.model or "maryland",
        "kind": model.kind.value,
        "window": list(window),
        "teeth": {str(j): float(model.teeth(j)) for j in range(window[0], window[1] + 1)},
        "rows": {"k": k, "sites": rows.to_dict(orient="records")},
        "roots": [
            {
                "energy": r.energy,
                "multiplicity": r.multiplicity,
                "kernel": [dict(zip(phi.vertex_ids, phi.values)) for phi in r.kernel],
            }
            for r in result.roots
        ],
        "unsearched": [[w.lower, w.upper] for w in result.windows],
    }
    if (args.model or "maryland") == "maryland":
        document["maryland_lengths"] = {
            str(j): v for j, v in maryland_lengths(window, model.spacing).items()
        }

    if args.wavenumber is not None:
        table = rows
    else:
        table = pd.DataFrame(
            [(r.energy, r.multiplicity) for r in result.roots], columns=["energy", "multiplicity"]
        )
    header = {"model": document["model"], "window": f"{window[0]}:{window[1]}", "k": f"{k:.12g}"}
    write_result(args.format, args.output, document, table, header)
    app_logger.info(f"Comb window {window}: {len(result.roots)} roots")
    return EXIT_CODES["ok"]
