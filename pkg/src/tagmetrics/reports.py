"""Plot-ready output files: snapshot CSVs, fit reports, manifests.

All writers go through :func:`atomic_write`, which stages content in a
temporary file next to the target and renames it into place, so an
interrupted run never leaves a partial file at the target path.  Floats
are written with 9 significant digits; None becomes an empty cell.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import fields
from pathlib import Path
from typing import IO, Iterator, Sequence

from .analysis import HeapsFit, MetricsSnapshot
from .simulate import SweepResult

SNAPSHOT_COLUMNS = [f.name for f in fields(MetricsSnapshot) if f.name != "users_processed"]
SNAPSHOT_COLUMNS_WITH_USERS = SNAPSHOT_COLUMNS + ["users_processed"]


@contextmanager
def atomic_write(path: str | Path, mode: str = "w") -> Iterator[IO]:
    """Write to ``path`` atomically via a same-directory temp file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, mode, encoding=None if "b" in mode else "utf-8") as handle:
            yield handle
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def write_snapshots_csv(
    snapshots: Sequence[MetricsSnapshot], sink: IO, include_users: bool = False
) -> None:
    """One row per snapshot, columns in declared field order."""
    columns = SNAPSHOT_COLUMNS_WITH_USERS if include_users else SNAPSHOT_COLUMNS
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(columns)
    for snap in snapshots:
        writer.writerow([format_value(getattr(snap, name)) for name in columns])


_INT_FIELDS = {
    "cumulative_questions",
    "cumulative_tag_assignments",
    "distinct_tags",
    "new_questions_this_month",
    "users_processed",
}


def read_snapshots_csv(source: IO) -> list[MetricsSnapshot]:
    """Inverse of :func:`write_snapshots_csv` for either column set."""
    reader = csv.reader(source)
    header = next(reader)
    snapshots = []
    for row in reader:
        kwargs = {}
        for name, cell in zip(header, row):
            if cell == "":
                kwargs[name] = None
            elif name == "month":
                kwargs[name] = cell
            elif name in _INT_FIELDS:
                kwargs[name] = int(cell)
            else:
                kwargs[name] = float(cell)
        if kwargs.get("month") is None:
            kwargs["month"] = ""
        snapshots.append(MetricsSnapshot(**kwargs))
    return snapshots


def write_heaps_csv(fit: HeapsFit, sink: IO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["beta", "k", "head_fraction", "r_squared"])
    writer.writerow(
        [format_value(v) for v in (fit.beta, fit.k, fit.head_fraction, fit.r_squared)]
    )


def write_sweep_csv(result: SweepResult, sink: IO) -> None:
    """One row per grid cell, row-major in p then q."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["p", "q", "mean_tail_slope", "stddev", "replicates"])
    for i, p in enumerate(result.p_values):
        for j, q in enumerate(result.q_values):
            writer.writerow(
                [
                    format_value(float(p)),
                    format_value(float(q)),
                    format_value(float(result.mean_slope[i, j])),
                    format_value(float(result.std_slope[i, j])),
                    result.replicates,
                ]
            )


def write_json(payload: dict, sink: IO) -> None:
    json.dump(payload, sink, indent=2, sort_keys=True)
    sink.write("\n")


def sha256_of_file(path: str | Path, chunk_size: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        while chunk := handle.read(chunk_size):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


def execution_manifest(
    command: str, config: dict, inputs: Sequence[str | Path], outputs: Sequence[str | Path]
) -> dict:
    """Reproducibility record for one run: config, versions, input digests."""
    from . import __version__

    return {
        "command": command,
        "config": config,
        "package_version": __version__,
        "python_version": sys.version.split()[0],
        "input_digests": {str(p): sha256_of_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
