"""Config files and CSV ingestion."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import yaml

from .core import PairedSample
from .metric import Space, discrete, space_from_config


class ParseError(ValueError):
    """Malformed input file; the message names the offending row and column."""


def load_config(path) -> dict:
    """Read a YAML or JSON config file into a dict."""
    text = Path(path).read_text()
    cfg = yaml.safe_load(text) if text.strip() else {}
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: top level of a config must be a mapping")
    return cfg


def _columns(block: dict, axis: str) -> list[str]:
    if "columns" in block:
        cols = block["columns"]
        return [cols] if isinstance(cols, str) else list(cols)
    if "column" in block:
        return [block["column"]]
    raise ValueError(f"space {axis!r} names no input columns")


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, a header row is required") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {lineno} has {len(row)} fields, "
                                 f"header has {len(header)}")
            rows.append(row)
    return header, rows


def _space_for(block: dict, raw_symbols: list[str] | None) -> Space:
    block = dict(block)
    if block.get("kind") == "discrete" and "alphabet" not in block:
        return discrete(sorted(set(raw_symbols)), block.get("beta", 1.0))
    if block.get("kind", "euclidean") in ("euclidean", "hilbert_l2") and "dim" not in block:
        block["dim"] = len(_columns(block, "?"))
    return space_from_config(block)


def _extract(path, header, rows, block: dict, axis: str):
    cols = _columns(block, axis)
    index = []
    for name in cols:
        if name not in header:
            raise ParseError(f"{path}: column {name!r} (space {axis}) not in header {header}")
        index.append(header.index(name))
    kind = block.get("kind", "euclidean")
    if kind == "discrete":
        if len(cols) != 1:
            raise ParseError(f"{path}: discrete space {axis} takes exactly one symbol column")
        j = index[0]
        raw = []
        for lineno, row in enumerate(rows, start=2):
            value = row[j].strip()
            if not value:
                raise ParseError(f"{path}: row {lineno}, column {cols[0]!r}: missing value")
            raw.append(value)
        space = _space_for(block, raw)
        symbols = [_match_symbol(v, space.alphabet) for v in raw]
        try:
            return space.encode(symbols), space
        except ValueError as exc:
            raise ParseError(f"{path}: column {cols[0]!r}: {exc}") from None
    values = []
    for lineno, row in enumerate(rows, start=2):
        vec = []
        for name, j in zip(cols, index):
            cell = row[j].strip()
            if not cell:
                raise ParseError(f"{path}: row {lineno}, column {name!r}: missing value")
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}: row {lineno}, column {name!r}: "
                                 f"cannot parse {cell!r} as a number") from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: row {lineno}, column {name!r}: non-finite value")
            vec.append(v)
        values.append(vec)
    return values, _space_for(block, None)


def _match_symbol(raw: str, alphabet) -> object:
    # config alphabets may hold numbers while CSV cells are strings
    for symbol in alphabet:
        if str(symbol) == raw:
            return symbol
    return raw


def load_sample(path, spaces: dict) -> PairedSample:
    """Read a paired sample from CSV using the ``spaces`` config block."""
    header, rows = read_table(path)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    xs, sx = _extract(path, header, rows, spaces["x"], "x")
    ys, sy = _extract(path, header, rows, spaces["y"], "y")
    return PairedSample(xs, ys, sx, sy)


def dump_json(obj, path=None) -> str:
    """Serialise deterministically (sorted keys, repr floats) and optionally write."""
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def write_column(values, header: str, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([header])
        for v in values:
            writer.writerow([repr(float(v))])
