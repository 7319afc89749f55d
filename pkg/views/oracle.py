"""`oracle` subcommand: cross-check the duality solver against duality-free references."""
import argparse
from typing import Any, Dict

import pandas as pd

from config import COMPARE_DEFAULTS, EXIT_CODES
from utils.data_utils import load_graph, write_result
from utils.graph_utils import CouplingKind
from utils.logger import app_logger
from utils.oracle_utils import FDConfig, compare, fd_spectrum, matching_spectrum
from utils.spectral_utils import spectrum
from utils.viz_utils import compare_table


def show_oracle(args: argparse.Namespace) -> int:
    graph, kind = load_graph(args.input)
    kind = args.kind or kind
    e_range = (args.e_min, args.e_max)
    duality = spectrum(graph, kind, e_range, grid_step=args.grid_step, excl_window=args.excl_window)
    reference = matching_spectrum(graph, kind, e_range, grid_step=args.grid_step)
    reports = {"matching": compare(duality, reference, tol=COMPARE_DEFAULTS["tol"])}

    document: Dict[str, Any] = {
        "coupling": kind.value,
        "searched": list(duality.searched),
        "duality": duality.energies(),
        "matching": reference.eigenvalues,
    }
    if kind is CouplingKind.DELTA:
        cfg = FDConfig(mesh=args.mesh, n_eigs=args.n_eigs, richardson=args.richardson)
        fd = fd_spectrum(graph, cfg, kind)
        document["fd"] = fd
        reports["fd"] = compare(
            duality, fd, tol=COMPARE_DEFAULTS["tol"], restrict=(args.e_min, float(fd.max()))
        )
    else:
        app_logger.info("Finite-difference oracle skipped for delta' coupling")

    document["reports"] = {name: r.as_dict() for name, r in reports.items()}
    tables = []
    for name, report in reports.items():
        table = compare_table(report)
        table.insert(0, "oracle", name)
        tables.append(table)
    ok = all(r.ok for r in reports.values())
    header = {"input": args.input, "coupling": kind.value, "ok": ok}
    write_result(args.format, args.output, document, pd.concat(tables, ignore_index=True), header)
    if not ok:
        app_logger.error("Oracle comparison failed")
        return EXIT_CODES["oracle_failure"]
    return EXIT_CODES["ok"]
