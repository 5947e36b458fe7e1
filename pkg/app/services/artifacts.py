"""
On-disk artifacts: CSV tables and the self-describing expansion-table file.

An expansion table is stored as a commented header followed by CSV rows
(k, j, theta, value, flag). The header carries kind, n1, alpha, masks and a
sha256 of the body, so a table computed once can be reused for any order and
a corrupted file is refused on load.
"""
import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import aiofiles
import numpy as np

from app.models.errors import ChecksumError
from app.models.schemas import ExpansionConfig, ExpansionKind
from app.services.expansion import ExpansionTable
from app.services.grids import standard_grid
from app.utils.helpers import format_float

TABLE_TITLE = "# perfect-grid expansion table"
TABLE_COLUMNS = ("k", "j", "theta", "value", "flag")
FLAG_OK = "ok"
FLAG_MASKED = "masked"
FLAG_CLAMPED = "clamped"


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


async def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
        await f.write(text)
    return path


async def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return await write_text(path, csv_text(columns, rows))


def _body_digest(body: str) -> str:
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def table_to_text(table: ExpansionTable) -> str:
    rows = []
    for k in range(1, table.alpha + 1):
        user_masked = table.config.masked(k)
        for j in range(1, table.config.n1 + 1):
            if table.clamp_flags[k - 1, j - 1]:
                flag = FLAG_CLAMPED
            elif table.auto_masked[j - 1] or j in user_masked:
                flag = FLAG_MASKED
            else:
                flag = FLAG_OK
            rows.append((k, j, table.theta1[j - 1], table.D[k - 1, j - 1], flag))
    body = csv_text(TABLE_COLUMNS, rows)
    masks = json.dumps({str(k): v for k, v in table.config.masks.items()}, sort_keys=True)
    header = [
        TABLE_TITLE,
        f"# kind: {table.kind.value}",
        f"# n1: {table.config.n1}",
        f"# alpha: {table.alpha}",
        f"# masks: {masks}",
        f"# sha256: {_body_digest(body)}",
    ]
    return "\n".join(header) + "\n" + body


def table_from_text(text: str) -> ExpansionTable:
    lines = text.splitlines(keepends=True)
    header = {}
    index = 0
    while index < len(lines) and lines[index].startswith("#"):
        key, sep, value = lines[index][1:].partition(":")
        if sep:
            header[key.strip()] = value.strip()
        index += 1
    body = "".join(lines[index:])

    missing = {"kind", "n1", "alpha", "masks", "sha256"} - header.keys()
    if missing:
        raise ChecksumError(f"Table header is missing {sorted(missing)}")
    if _body_digest(body) != header["sha256"]:
        raise ChecksumError("Table body does not match its sha256 header")

    config = ExpansionConfig(
        n1=int(header["n1"]),
        alpha=int(header["alpha"]),
        masks={int(k): v for k, v in json.loads(header["masks"]).items()},
        kind=ExpansionKind(header["kind"]),
    )
    D = np.full((config.alpha, config.n1), np.nan)
    flags = np.zeros((config.alpha, config.n1), dtype=bool)
    reader = csv.DictReader(io.StringIO(body))
    for row in reader:
        k, j = int(row["k"]), int(row["j"])
        D[k - 1, j - 1] = float(row["value"])
        flags[k - 1, j - 1] = row["flag"] == FLAG_CLAMPED
    return ExpansionTable(config, standard_grid(config.n1).points, D, flags.any(axis=0), flags)


async def save_table(path: Path, table: ExpansionTable) -> Path:
    return await write_text(path, table_to_text(table))


async def load_table(path: Path) -> ExpansionTable:
    async with aiofiles.open(path, "r", encoding="utf-8", newline="") as f:
        return table_from_text(await f.read())
