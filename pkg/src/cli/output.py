"""Table rendering and atomic artifact writing for the CLI.

CSV bodies are deterministic; the only time-dependent content is the
`# generated:` comment line. The JSON mirror carries no timestamp at all.
"""

import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import click

from .. import __version__

logger = logging.getLogger(__name__)


@dataclass
class Table:
    """Rows under a fixed column order plus metadata for the header.

    json_columns are carried by the JSON mirror only; the CSV header stays fixed.
    """

    columns: Sequence[str]
    rows: List[Mapping[str, Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    json_columns: Sequence[str] = ()

    def add(self, **values) -> None:
        unknown = set(values) - set(self.columns) - set(self.json_columns)
        if unknown:
            raise ValueError(f"Unknown columns {sorted(unknown)}")
        self.rows.append(values)


def format_value(value: Any) -> str:
    """Cell text: repr for floats (round-trips exactly), empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _json_value(value: Any) -> Any:
    if hasattr(value, "value") and not isinstance(value, (int, float)):
        return value.value
    if isinstance(value, float) and value != value:
        return None
    return value


def render_csv(table: Table, timestamp: Optional[datetime] = None) -> str:
    buffer = io.StringIO()
    buffer.write(f"# balancibility {__version__}\n")
    for key, value in table.metadata.items():
        rendered = value if isinstance(value, str) else json.dumps(value, sort_keys=True, default=str)
        buffer.write(f"# {key}: {rendered}\n")
    stamp = timestamp or datetime.now(timezone.utc)
    buffer.write(f"# generated: {stamp.isoformat(timespec='seconds')}\n")

    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(row.get(column)) for column in table.columns])
    return buffer.getvalue()


def render_json(table: Table) -> str:
    columns = list(table.columns) + list(table.json_columns)
    document = {
        "version": __version__,
        "metadata": table.metadata,
        "columns": columns,
        "rows": [{c: _json_value(row.get(c)) for c in columns} for row in table.rows],
    }
    return json.dumps(document, indent=2, sort_keys=False, default=str) + "\n"


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        return render_json(table)
    if fmt == "csv":
        return render_csv(table)
    raise ValueError(f"Unknown output format '{fmt}'")


def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {path}")


def emit(table: Table, fmt: str, output: Optional[Path]) -> None:
    """Render a table to stdout or, atomically, to a file."""
    text = render(table, fmt)
    if output is None:
        click.echo(text, nl=False)
    else:
        write_atomic(output, text)
        click.echo(f"✓ Wrote {len(table.rows)} rows to {output}", err=True)
