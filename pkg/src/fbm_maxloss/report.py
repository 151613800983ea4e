"""Tabular output: CSV with a commented manifest header, and markdown."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["Table", "format_cell", "read_csv_table"]

_INT = re.compile(r"^-?\d+$")


def format_cell(value, precise: bool) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if not precise:
            return format(value, ".6g")
        text = format(value, ".17g")
        # keep floats distinguishable from integers on re-read
        return text if any(ch in text for ch in ".eni") else text + ".0"
    return str(value)


def _parse_cell(text: str):
    if text == "":
        return None
    if _INT.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class Table:
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    manifest: dict[str, str] = field(default_factory=dict)
    title: str = ""

    def add(self, **values) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append({k: v for k, v in values.items() if v is not None})

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.title:
            buf.write(f"# {self.title}\n")
        for key, value in self.manifest.items():
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_cell(row.get(c), precise=True) for c in self.columns])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = []
        if self.title:
            lines.append(f"### {self.title}\n")
        for key, value in self.manifest.items():
            lines.append(f"<!-- {key}={value} -->")
        if self.manifest:
            lines.append("")
        lines.append("| " + " | ".join(self.columns) + " |")
        lines.append("|" + "|".join("---" for _ in self.columns) + "|")
        for row in self.rows:
            lines.append("| " + " | ".join(format_cell(row.get(c), precise=False) for c in self.columns) + " |")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_markdown() if fmt == "md" else self.to_csv()

    def write(self, path, fmt: str) -> None:
        Path(path).write_text(self.render(fmt), encoding="utf-8")


def read_csv_table(source) -> Table:
    """Parse CSV written by :meth:`Table.to_csv` back into a :class:`Table`."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, (str, Path)) else source.read()
    lines = text.splitlines()
    title, manifest, body = "", {}, []
    for line in lines:
        if line.startswith("#"):
            content = line[1:].strip()
            if "=" in content:
                key, _, value = content.partition("=")
                manifest[key] = value
            elif not title:
                title = content
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [
        {c: v for c, v in zip(columns, map(_parse_cell, rec)) if v is not None}
        for rec in reader
    ]
    return Table(columns=columns, rows=rows, manifest=manifest, title=title)
