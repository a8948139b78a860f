"""Minimal CGATS.17-style text reader/writer.

Only the subset needed here: keyword/value header lines, a BEGIN_DATA_FORMAT /
END_DATA_FORMAT field list and a BEGIN_DATA / END_DATA block. LF line endings.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CgatsDocument:
    preamble: str = "CGATS.17"
    keywords: dict[str, str] = field(default_factory=dict)
    fields: list[str] = field(default_factory=list)
    rows: list[list[str]] = field(default_factory=list)

    def serialize(self) -> str:
        lines = [self.preamble]
        for key, value in self.keywords.items():
            lines.append(f'{key} "{value}"')
        lines.append(f"NUMBER_OF_FIELDS {len(self.fields)}")
        lines.append("BEGIN_DATA_FORMAT")
        lines.append(" ".join(self.fields))
        lines.append("END_DATA_FORMAT")
        lines.append(f"NUMBER_OF_SETS {len(self.rows)}")
        lines.append("BEGIN_DATA")
        for row in self.rows:
            lines.append(" ".join(row))
        lines.append("END_DATA")
        return "\n".join(lines) + "\n"


def parse_cgats(text: str) -> CgatsDocument:
    lines = text.split("\n")
    doc = CgatsDocument(preamble=lines[0].strip() if lines else "")
    i = 1
    # header keywords until NUMBER_OF_FIELDS
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("NUMBER_OF_FIELDS"):
            break
        if " " in line:
            key, _, value = line.partition(" ")
            doc.keywords[key] = value.strip().strip('"')
    # data format block
    while i < len(lines) and lines[i].strip() != "BEGIN_DATA_FORMAT":
        i += 1
    i += 1
    while i < len(lines) and lines[i].strip() != "END_DATA_FORMAT":
        doc.fields.extend(lines[i].split())
        i += 1
    # data block
    while i < len(lines) and lines[i].strip() != "BEGIN_DATA":
        i += 1
    i += 1
    while i < len(lines) and lines[i].strip() != "END_DATA":
        if lines[i].strip():
            doc.rows.append(lines[i].split())
        i += 1
    if not doc.fields:
        raise ValueError("CGATS document has no data format block")
    for row in doc.rows:
        if len(row) != len(doc.fields):
            raise ValueError(f"CGATS row has {len(row)} values, expected {len(doc.fields)}")
    return doc
