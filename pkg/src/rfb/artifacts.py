"""Reading and writing the files the command line tool produces.

Every writer is deterministic: fixed key order, ``repr`` floats, no
timestamps, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .paraunitary import PolyphaseFIR, ThetaVector, synthesize

DB_FLOOR = -120.0
IDEAL_STOP_DB = -60.0


class ArtifactError(OSError):
    """An input file exists but does not hold what was expected."""


def write_json(path: str | Path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: {exc}") from exc


def write_csv(path: str | Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else repr(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_bank(path: str | Path) -> PolyphaseFIR:
    """Polyphase FIR from either a theta file or a taps file."""
    data = read_json(path)
    try:
        if "theta" in data:
            return synthesize(ThetaVector.from_dict(data["theta"]))
        if "taps" in data:
            return PolyphaseFIR.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"{path}: malformed bank file ({exc})") from exc
    raise ArtifactError(f"{path}: neither a theta nor a polyphase FIR file")


def to_db(mag: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.maximum(20 * np.log10(np.abs(mag)), DB_FLOOR)


def write_fir_channels(out_dir: Path, H: PolyphaseFIR, plan) -> list[str]:
    """One CSV per channel with columns tap, row, col, value."""
    names = []
    for n, ch in enumerate(plan.channels):
        block = H.coeffs[:, ch.rows, :]
        rows = [
            (str(t), str(r), str(s), float(block[t, r, s]))
            for t in range(block.shape[0])
            for r in range(block.shape[1])
            for s in range(block.shape[2])
        ]
        name = f"fir_ch{n}.csv"
        write_csv(out_dir / name, ["tap", "row", "col", "value"], rows)
        names.append(name)
    return names
