"""
Chain documents, density specs and report writers.

Chain JSON: {"states": [...], "kernel": [[...], ...], "pi": optional [...]}.
A CSV kernel (header row = state labels) is accepted as well. Reports are
written as sorted JSON or, for tabular artifacts, as CSV with a fixed
column schema.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import polars as pl
from pydantic import BaseModel, ValidationError

from entropic_ricci.core.chain import MarkovChain, builtin, validate_chain
from entropic_ricci.utils.errors import BadSpec, ShapeMismatch

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# fixed CSV column orders per artifact
CHECK_COLUMNS = ["check", "sample_id", "lhs", "rhs", "margin"]
TRAJECTORY_COLUMNS = ["step", "time", "state", "density", "potential", "action"]
TABLE_COLUMNS = ["quantity", "value", "provenance"]


class ChainDocument(BaseModel):
    states: Optional[List[str]] = None
    kernel: List[List[float]]
    pi: Optional[List[float]] = None
    name: str = ""


# ================================================================
# CHAINS
# ================================================================

def to_document(chain: MarkovChain) -> ChainDocument:
    return ChainDocument(
        states=list(chain.states),
        kernel=chain.kernel.tolist(),
        pi=chain.pi.tolist(),
        name=chain.name,
    )


def from_document(doc: ChainDocument) -> MarkovChain:
    n = len(doc.kernel)
    if any(len(row) != n for row in doc.kernel):
        raise ShapeMismatch("kernel rows must all have one entry per state")
    return validate_chain(
        np.array(doc.kernel, dtype=float),
        pi=None if doc.pi is None else np.array(doc.pi, dtype=float),
        states=doc.states,
        name=doc.name,
    )


def _read_csv_kernel(path: Path) -> ChainDocument:
    df = pl.read_csv(path)
    states = [str(c) for c in df.columns]
    kernel = df.select([pl.col(c).cast(pl.Float64) for c in df.columns]).to_numpy()
    return ChainDocument(states=states, kernel=kernel.tolist(), name=path.stem)


def load_chain(path: PathLike) -> MarkovChain:
    path = Path(path)
    if not path.exists():
        raise BadSpec(f"chain file not found: {path}")
    if path.suffix.lower() == ".csv":
        doc = _read_csv_kernel(path)
    else:
        try:
            doc = ChainDocument.model_validate_json(path.read_text())
        except ValidationError as exc:
            raise BadSpec(f"malformed chain document {path}: {exc.error_count()} errors") from exc
        if not doc.name:
            doc = doc.model_copy(update={"name": path.stem})
    logger.debug("loaded %d-state chain from %s", len(doc.kernel), path)
    return from_document(doc)


def chain_from_source(builtin_spec: Optional[str] = None, input_path: Optional[PathLike] = None) -> MarkovChain:
    """Exactly one of a builtin spec string or a chain file."""
    if (builtin_spec is None) == (input_path is None):
        raise BadSpec("give exactly one of a builtin spec or an input file")
    if builtin_spec is not None:
        return builtin(builtin_spec)
    return load_chain(input_path)


def save_chain(chain: MarkovChain, path: PathLike) -> Path:
    return write_json(to_document(chain), path)


# ================================================================
# DENSITIES
# ================================================================

def _density_file(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".csv":
        df = pl.read_csv(path)
        column = "density" if "density" in df.columns else df.columns[-1]
        return df[column].cast(pl.Float64).to_numpy()
    return np.asarray(json.loads(path.read_text()), dtype=float)


def parse_density(chain: MarkovChain, spec: str) -> np.ndarray:
    """`dirac:<state>`, `uniform`, an inline JSON vector or a file path."""
    text = spec.strip()
    if text == "uniform":
        return chain.uniform()
    if text.startswith("dirac:"):
        return chain.dirac(text.split(":", 1)[1].strip())
    if text.startswith("["):
        try:
            values = np.asarray(json.loads(text), dtype=float)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise BadSpec(f"cannot parse density vector '{spec}'") from exc
        return chain.check_density(values)
    path = Path(text)
    if path.exists():
        return chain.check_density(_density_file(path))
    raise BadSpec(f"unrecognised density spec '{spec}'")


# ================================================================
# WRITERS
# ================================================================

def _plain(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, np.ndarray):
        return payload.tolist()
    if isinstance(payload, dict):
        return {str(k): _plain(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_plain(v) for v in payload]
    if isinstance(payload, np.generic):
        return payload.item()
    return payload


def dumps(payload: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation."""
    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(payload: Any, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload))
    return path


def rows_frame(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> pl.DataFrame:
    if not rows:
        return pl.DataFrame({c: [] for c in columns})
    return pl.DataFrame(list(rows), infer_schema_length=None).select(list(columns))


def write_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows_frame(rows, columns).write_csv(path)
    return path


def csv_text(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    return rows_frame(rows, columns).write_csv()
