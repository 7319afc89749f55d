# app.py
"""Command-line entry point: quantum graph spectra through the dual Jacobi matrix."""
import argparse
import sys
from typing import Callable, Dict, List, Optional, Tuple, Union

from config import BAND_DEFAULTS, EXIT_CODES, FD_DEFAULTS, MODEL_PRESETS, OUTPUT_CONFIG, SOLVER_DEFAULTS
from utils.errors import DualGraphError, ExceptionalEnergyError, GraphValidationError, UnsupportedRequestError
from utils.graph_utils import CouplingKind
from utils.logger import app_logger, set_level
from views.bands import show_bands
from views.comb import show_comb
from views.oracle import show_oracle
from views.reconstruct import show_reconstruct
from views.spectrum import show_spectrum
from views.validate import show_validate

Window = Union[Tuple[int, int], Tuple[Tuple[int, int], Tuple[int, int]]]


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def flux_arg(text: str) -> Tuple[int, int]:
    """Parse ``p/q`` (flux 2 pi p / q)."""
    try:
        p, q = (int(part) for part in text.split("/"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected p/q, got {text!r}") from None
    if q <= 0:
        raise argparse.ArgumentTypeError(f"flux denominator must be positive, got {q}")
    return p, q


def window_arg(text: str) -> Window:
    """Parse ``j0:j1`` (comb) or ``n0:n1,m0:m1`` (lattice)."""

    def span(part: str) -> Tuple[int, int]:
        lo, hi = (int(v) for v in part.split(":"))
        if hi < lo:
            raise ValueError(part)
        return lo, hi

    try:
        parts = [span(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected j0:j1 or n0:n1,m0:m1, got {text!r}") from None
    if len(parts) == 1:
        return parts[0]
    if len(parts) == 2:
        return parts[0], parts[1]
    raise argparse.ArgumentTypeError(f"too many ranges in {text!r}")


def kind_arg(text: str) -> CouplingKind:
    try:
        return CouplingKind.parse(text)
    except UnsupportedRequestError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="graph description document (TOML)")
    common.add_argument("--output", default=None, help="output path (stdout when omitted)")
    common.add_argument(
        "--format", choices=OUTPUT_CONFIG["formats"], default=OUTPUT_CONFIG["default_format"]
    )
    common.add_argument("--e-min", type=float, default=SOLVER_DEFAULTS["e_min"])
    common.add_argument("--e-max", type=float, default=SOLVER_DEFAULTS["e_max"])
    common.add_argument("--grid-step", type=positive_float, default=SOLVER_DEFAULTS["grid_step"])
    common.add_argument(
        "--excl-window", type=positive_float, default=SOLVER_DEFAULTS["excl_window"],
        help="exclusion half-width around exceptional points, in k units",
    )
    common.add_argument("--mesh", type=positive_float, default=FD_DEFAULTS["mesh"])
    common.add_argument("--n-eigs", type=int, default=FD_DEFAULTS["n_eigs"])
    common.add_argument(
        "--richardson", action=argparse.BooleanOptionalAction, default=FD_DEFAULTS["richardson"]
    )
    common.add_argument("--bloch-grid", type=int, default=BAND_DEFAULTS["bloch_grid"])
    common.add_argument("--flux", type=flux_arg, default=None, help="flux 2*pi*p/q as p/q")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--kind", type=kind_arg, default=None, help="coupling override")
    common.add_argument("--model", choices=sorted(MODEL_PRESETS), default=None)
    common.add_argument("--window", type=window_arg, default=None)
    common.add_argument("--coupling", type=float, default=None, help="coupling constant override")
    common.add_argument("--wavenumber", type=positive_float, default=None)
    common.add_argument("--root-index", type=int, default=0)
    common.add_argument("--log-level", default=None)

    parser = argparse.ArgumentParser(
        prog="dualgraph", description="Quantum graph spectra via the dual Jacobi matrix."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "graph checks and assumption summary"),
        ("spectrum", "duality solver with reconstruction residuals"),
        ("bands", "rectangular lattice band tests"),
        ("comb", "comb rows and finite-window spectra"),
        ("oracle", "compare against matching and finite-difference references"),
        ("reconstruct", "wavefunction table for one root"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


PAGES: Dict[str, Callable[[argparse.Namespace], int]] = {
    "validate": show_validate,
    "spectrum": show_spectrum,
    "bands": show_bands,
    "comb": show_comb,
    "oracle": show_oracle,
    "reconstruct": show_reconstruct,
}

NEEDS_INPUT = {"validate", "spectrum", "oracle", "reconstruct"}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    if args.command in NEEDS_INPUT and not args.input:
        app_logger.error(f"{args.command}: --input is required")
        return EXIT_CODES["config_error"]
    if not args.e_max > args.e_min:
        app_logger.error(f"empty energy range ({args.e_min}, {args.e_max})")
        return EXIT_CODES["config_error"]

    try:
        return PAGES[args.command](args)
    except (GraphValidationError, UnsupportedRequestError) as e:
        app_logger.error(f"{args.command}: {e}")
        return EXIT_CODES["config_error"]
    except ExceptionalEnergyError as e:
        app_logger.error(f"{args.command}: {e}")
        return EXIT_CODES["numerical_error"]
    except DualGraphError as e:
        app_logger.error(f"{args.command}: {e}")
        return EXIT_CODES["numerical_error"]


if __name__ == "__main__":
    sys.exit(main())
