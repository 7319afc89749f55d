"""Utility functions for loading graph documents and writing result artifacts."""
import json
import math
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from config import OUTPUT_CONFIG
from utils.errors import GraphValidationError
from utils.graph_utils import CouplingKind, Graph, graph_from_document
from utils.logger import app_logger

# Define data file paths relative to project root
DATA_DIR = Path("data")

PathLike = Union[str, Path]


def load_graph_document(path: PathLike) -> Dict[str, Any]:
    """Read a TOML graph description document.

    Args:
        path: Path to the document

    Returns:
        Dict[str, Any]: Parsed document

    Raises:
        GraphValidationError: The file is missing or is not valid TOML
    """
    path = Path(path)
    try:
        app_logger.info(f"Loading graph document from {path}...")
        with path.open("rb") as handle:
            doc = tomllib.load(handle)
        app_logger.info(
            f"Successfully loaded document with {len(doc.get('vertices', []))} vertices "
            f"and {len(doc.get('edges', []))} edges"
        )
        return doc
    except FileNotFoundError:
        app_logger.error(f"Graph document not found: {path}")
        raise GraphValidationError("cannot read document", str(path)) from None
    except tomllib.TOMLDecodeError as e:
        app_logger.error(f"Error parsing graph document {path}: {str(e)}")
        raise GraphValidationError("malformed document", str(e)) from e


def load_graph(path: PathLike) -> Tuple[Graph, CouplingKind]:
    """Load and validate a graph document (normalization included)."""
    graph, kind = graph_from_document(load_graph_document(path))
    app_logger.info(f"Graph ready: {len(graph.interior_ids)} interior vertices, coupling {kind.value}")
    return graph, kind


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and NaN into JSON values."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isnan(value) else value
    return value


def write_document(payload: Mapping[str, Any], output: Optional[PathLike] = None) -> None:
    """Write a JSON document to ``output`` (stdout when None)."""
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True)
    if output is None:
        sys.stdout.write(text + "\n")
        return
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    Path(output).write_text(text + "\n")
    app_logger.info(f"Wrote document to {output}")


def write_table(
    df: pd.DataFrame,
    output: Optional[PathLike] = None,
    header: Optional[Mapping[str, Any]] = None,
) -> None:
    """Write a delimited table preceded by ``# key: value`` header lines."""
    lines = [f"{OUTPUT_CONFIG['comment']} {k}: {v}" for k, v in (header or {}).items()]
    body = df.to_csv(
        sep=OUTPUT_CONFIG["separator"],
        float_format=OUTPUT_CONFIG["float_format"],
        index=False,
        lineterminator="\n",
    )
    text = "\n".join(lines + [body.rstrip("\n")]) + "\n"
    if output is None:
        sys.stdout.write(text)
        return
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    Path(output).write_text(text)
    app_logger.info(f"Wrote table with {len(df)} rows to {output}")


def read_table(path: PathLike) -> pd.DataFrame:
    """Read a table written by :func:`write_table`, skipping header lines."""
    return pd.read_csv(path, sep=OUTPUT_CONFIG["separator"], comment=OUTPUT_CONFIG["comment"])


def write_result(
    fmt: str,
    output: Optional[PathLike],
    document: Mapping[str, Any],
    table: pd.DataFrame,
    header: Optional[Mapping[str, Any]] = None,
) -> None:
    """Render a workflow result as a JSON document or a delimited table."""
    if fmt not in OUTPUT_CONFIG["formats"]:
        raise GraphValidationError("unknown output format", f"{fmt!r}")
    if fmt == "json":
        write_document(document, output)
    else:
        write_table(table, output, header)
