"""File format handlers for datasets, specs, fit paths and result tables.

``.csv`` datasets: UTF-8, header ``env,y,x1,...,xd``, one row per
observation, floats written with 17 significant digits.

Every file the harness writes carries a metadata block naming the tool,
its version, the seed and the fully resolved run configuration:

* JSON files hold it under a top-level ``"metadata"`` key.
* CSV files start with ``# `` comment lines holding the same object as
  JSON; readers in this module skip them.

There are no timestamps in the metadata, so rerunning with the same
configuration reproduces every file byte for byte.
"""

from __future__ import annotations

import io
import json
import logging
import re
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import pandas as pd

from .. import __version__
from ..errors import CsvFormatError, InputError
from .dataset import EnvDataset, EnvSlice

logger = logging.getLogger(__name__)

METADATA_PREFIX = "# "
FLOAT_FORMAT = "%.17g"
TOOL_NAME = "ipp"


def metadata_block(seed: int | None, config: dict[str, Any] | None = None) -> dict[str, Any]:
    """The metadata object embedded in every output file."""
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "seed": seed,
        "config": config or {},
    }


# ─── JSON ─────────────────────────────────────────────────────────────

def write_json(path: str | Path, payload: dict[str, Any], metadata: dict[str, Any] | None = None) -> Path:
    """Write ``payload`` as indented JSON, with ``metadata`` first when given."""
    path = Path(path)
    document = {"metadata": metadata, **payload} if metadata is not None else dict(payload)
    path.write_text(json.dumps(document, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def read_json(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"No such file: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


# ─── CSV ──────────────────────────────────────────────────────────────

def _metadata_lines(metadata: dict[str, Any] | None) -> str:
    if metadata is None:
        return ""
    return METADATA_PREFIX + json.dumps(metadata, sort_keys=True) + "\n"


def write_table(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: dict[str, Any] | None = None,
) -> Path:
    """Write a tidy CSV table, preceded by the metadata comment block."""
    path = Path(path)
    frame = pd.DataFrame(list(rows), columns=list(columns))
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(_metadata_lines(metadata))
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _split_metadata(text: str) -> tuple[dict[str, Any] | None, int]:
    """Return the metadata object (if any) and the number of comment lines."""
    lines = text.splitlines()
    count = 0
    metadata = None
    while count < len(lines) and lines[count].startswith("#"):
        body = lines[count][1:].strip()
        if metadata is None and body.startswith("{"):
            try:
                metadata = json.loads(body)
            except json.JSONDecodeError:
                logger.debug("Ignoring unparsable metadata line %d", count + 1)
        count += 1
    return metadata, count


def read_table(path: str | Path) -> pd.DataFrame:
    """Read a CSV written by ``write_table``, skipping the metadata block."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    _, skip = _split_metadata(text)
    return pd.read_csv(io.StringIO(text), skiprows=skip)


def read_metadata(path: str | Path) -> dict[str, Any] | None:
    return _split_metadata(Path(path).read_text(encoding="utf-8"))[0]


def save_csv(dataset: EnvDataset, path: str | Path, metadata: dict[str, Any] | None = None) -> Path:
    """Write a dataset as ``env,y,x1,...,xd`` rows, environment by environment."""
    columns = ["env", "y"] + [f"x{j + 1}" for j in range(dataset.d)]
    rows = (
        [env.label, float(y), *map(float, x)]
        for env in dataset
        for x, y in zip(env.X, env.y)
    )
    return write_table(path, columns, rows, metadata)


_RAGGED_PATTERN = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


def _physical_lines(text: str, skip: int) -> tuple[int, list[int]]:
    """Line numbers of the header and of every data row pandas keeps.

    pandas drops blank and whitespace-only lines, so row positions are
    mapped back to the file.
    """
    lines = text.splitlines()
    kept = [number for number, line in enumerate(lines[skip:], start=skip + 1) if line.strip()]
    if not kept:
        return skip + 1, []
    return kept[0], kept[1:]


def load_csv(path: str | Path) -> EnvDataset:
    """Load a multi-environment dataset.

    Rows are grouped by the ``env`` column in order of first appearance.
    Leading ``#`` lines are treated as metadata and skipped.

    Raises:
        InputError: If the file does not exist.
        CsvFormatError: On missing columns, non-numeric or non-finite
            cells, ragged rows, or fewer than two environments. The
            message names the file line and column.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"No such file: {path}")
    text = path.read_text(encoding="utf-8")
    _, skip = _split_metadata(text)
    header_line, row_lines = _physical_lines(text, skip)

    try:
        frame = pd.read_csv(
            io.StringIO(text),
            skiprows=skip,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise CsvFormatError(f"{path} has no header row", line=header_line) from None
    except pd.errors.ParserError as exc:
        match = _RAGGED_PATTERN.search(str(exc))
        if match:
            expected, line, saw = (int(g) for g in match.groups())
            raise CsvFormatError(
                f"ragged row: expected {expected} fields, saw {saw}", line=line
            ) from None
        raise CsvFormatError(f"could not parse {path}: {exc}") from None

    frame.columns = [str(c).strip() for c in frame.columns]
    columns = list(frame.columns)
    if columns[:2] != ["env", "y"]:
        missing = "env" if "env" not in columns[:1] else "y"
        raise CsvFormatError(
            f"header must start with 'env,y', got {','.join(columns[:2])}",
            line=header_line,
            column=missing,
        )
    covariates = columns[2:]
    if not covariates:
        raise CsvFormatError("no covariate columns x1..xd", line=header_line, column="x1")
    for j, name in enumerate(covariates):
        if name != f"x{j + 1}":
            raise CsvFormatError(
                f"expected covariate column 'x{j + 1}', got '{name}'",
                line=header_line,
                column=f"x{j + 1}",
            )
    if frame.empty:
        raise CsvFormatError(f"{path} has no data rows", line=header_line + 1)

    # Short rows come back padded with NaN despite keep_default_na=False.
    padded = frame.isna()
    if padded.to_numpy().any():
        row = int(np.flatnonzero(padded.to_numpy().any(axis=1))[0])
        column = columns[int(np.flatnonzero(padded.iloc[row].to_numpy())[0])]
        raise CsvFormatError(
            f"ragged row: missing value for '{column}'",
            line=row_lines[row],
            column=column,
        )

    numeric = {}
    for column in ["y", *covariates]:
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise CsvFormatError(
                f"non-numeric or non-finite value {frame[column].iloc[row]!r}",
                line=row_lines[row],
                column=column,
            )
        numeric[column] = values

    labels = frame["env"].str.strip().to_numpy()
    order = list(dict.fromkeys(labels))
    if len(order) < 2:
        raise CsvFormatError(f"{path} holds only one environment ({order[0]!r}); at least 2 are needed")

    X_all = np.column_stack([numeric[c] for c in covariates])
    y_all = numeric["y"]
    environments = tuple(
        EnvSlice(label, X_all[labels == label], y_all[labels == label]) for label in order
    )
    logger.debug("Loaded %s: %d environments, d=%d", path, len(environments), len(covariates))
    return EnvDataset(environments)
