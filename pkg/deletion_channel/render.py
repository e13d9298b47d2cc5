from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Mapping, Optional, Sequence

RESET = "\033[0m"
BOLD = "\033[1m"
GREEN = "\033[32m"
YELLOW = "\033[33m"
CYAN = "\033[36m"
RED = "\033[31m"


def paint(text: str, color: str, enabled: bool) -> str:
    return f"{color}{text}{RESET}" if enabled else text


def format_number(value: Any) -> str:
    """Six decimals for table output; scientific notation for tiny magnitudes."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value != 0.0 and abs(value) < 1e-3:
            return f"{value:.6e}"
        return f"{value:.6f}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_number(v) for v in value) + "]"
    return str(value)


def render_mapping(title: str, data: Mapping[str, Any], color: bool = False) -> str:
    lines = [paint(title, BOLD + CYAN, color)]
    width = max((len(key) for key in data), default=0)
    for key, value in data.items():
        text = format_number(value)
        if isinstance(value, bool):
            text = paint(text, GREEN if value else YELLOW, color)
        lines.append(f"{paint('- ' + key.ljust(width), CYAN, color)} : {text}")
    return "\n".join(lines) + "\n"


def render_table(
    columns: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    highlight: Optional[str] = None,
    color: bool = False,
) -> str:
    """Fixed-width text table; rows whose ``highlight`` column is truthy are painted red."""
    rows = list(rows)
    cells = [[format_number(row.get(col)) for col in columns] for row in rows]
    widths = [max([len(col)] + [len(line[i]) for line in cells]) for i, col in enumerate(columns)]
    header = "  ".join(col.rjust(widths[i]) for i, col in enumerate(columns))
    lines = [paint(header, BOLD, color)]
    for row, line in zip(rows, cells):
        text = "  ".join(cell.rjust(widths[i]) for i, cell in enumerate(line))
        if highlight and row.get(highlight):
            text = paint(text, RED, color)
        lines.append(text)
    return "\n".join(lines) + "\n"


def render_csv(columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    """RFC 4180 style CSV with '\\n' line endings; floats keep full precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(col) is None else _csv_value(row.get(col)) for col in columns])
    return buffer.getvalue()


def _csv_value(value: Any) -> Any:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return value


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _json_safe(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def render_json(payload: Any) -> str:
    return json.dumps(_json_safe(payload), indent=2) + "\n"
