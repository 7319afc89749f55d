"""`reconstruct` subcommand: wavefunction table for one root."""
import argparse

from config import EXIT_CODES, OUTPUT_CONFIG
from utils.data_utils import load_graph, write_result
from utils.dual_utils import reconstruct, residual_and_norms
from utils.errors import UnsupportedRequestError
from utils.spectral_utils import spectrum
from utils.viz_utils import wavefunction_table


def show_reconstruct(args: argparse.Namespace) -> int:
    graph, kind = load_graph(args.input)
    kind = args.kind or kind
    result = spectrum(
        graph, kind, (args.e_min, args.e_max), grid_step=args.grid_step, excl_window=args.excl_window
    )
    if not 0 <= args.root_index < len(result.roots):
        raise UnsupportedRequestError(
            f"root index {args.root_index} out of range; {len(result.roots)} roots found"
        )
    root = result.roots[args.root_index]
    phi = root.kernel[0]
    w = reconstruct(graph, root.energy, phi, kind)
    report = residual_and_norms(graph, w, phi)
    table = wavefunction_table(graph, w, OUTPUT_CONFIG["sample_density"])

    document = {
        "energy": root.energy,
        "multiplicity": root.multiplicity,
        "vertex_values": dict(zip(phi.vertex_ids, phi.values)),
        "diagnostics": report.as_dict(),
        "samples": table.to_dict(orient="list"),
    }
    header = {
        "input": args.input,
        "energy": f"{root.energy:.15g}",
        "multiplicity": root.multiplicity,
        "norm_ratio": f"{report.ratio:.12g}",
    }
    write_result(args.format, args.output, document, table, header)
    return EXIT_CODES["ok"]
