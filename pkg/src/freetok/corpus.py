"""Corpus ingestion: line streams, JSON field extraction, parallel TSV, lexicons.

Text is handled as UTF-8 with replacement of invalid byte sequences, and lines
are kept raw: no case folding, no normalization, no trimming beyond the line
terminator.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator

from .tokenize import Lexicon

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Raised for malformed corpus or lexicon files."""


def read_lines(path) -> Iterator[str]:
    """Stream the file's lines without their terminators, in file order."""
    with open(path, encoding="utf-8", errors="replace") as fh:
        for raw in fh:
            yield raw[:-1] if raw.endswith("\n") else raw


def extract_json_fields(json_lines: Iterable[str], fields: list[str]) -> Iterator[str]:
    """One output line per requested field present in each JSON object.

    Input is object-per-line JSON with string-valued fields.  Malformed lines
    are skipped and counted (a summary warning is logged at the end); missing
    or non-string fields are skipped silently.  Newlines embedded in a value
    are replaced with spaces so each field stays a single line.
    """
    malformed = 0
    for raw in json_lines:
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError:
            malformed += 1
            continue
        if not isinstance(obj, dict):
            malformed += 1
            continue
        for name in fields:
            value = obj.get(name)
            if isinstance(value, str):
                yield value.replace("\r\n", " ").replace("\n", " ").replace("\r", " ")
    if malformed:
        logger.warning("skipped %d malformed JSON line(s)", malformed)


@dataclass
class ParallelTestSet:
    """Aligned text columns read from a TSV file with a header row."""
    columns: dict[str, list[str]]
    row_count: int

    def column(self, name: str) -> list[str]:
        try:
            return self.columns[name]
        except KeyError:
            available = ", ".join(self.columns)
            raise CorpusError(f"unknown column {name!r}; available: {available}") from None


def read_parallel_test_set(path) -> ParallelTestSet:
    """Load a whole header-row TSV as a ParallelTestSet."""
    lines = list(read_lines(path))
    if not lines:
        raise CorpusError(f"{path}: empty file, expected a TSV header row")
    names = lines[0].split("\t")
    if len(set(names)) != len(names):
        raise CorpusError(f"{path}: duplicate column names in header")
    columns: dict[str, list[str]] = {name: [] for name in names}
    for rowno, row in enumerate(lines[1:], start=2):
        cells = row.split("\t")
        if len(cells) != len(names):
            raise CorpusError(
                f"{path}:{rowno}: expected {len(names)} columns, found {len(cells)}")
        for name, cell in zip(names, cells):
            columns[name].append(cell)
    return ParallelTestSet(columns=columns, row_count=len(lines) - 1)


def read_parallel_tsv(path, column: str) -> list[str]:
    """Return one named column of a parallel TSV test corpus, row order kept."""
    return read_parallel_test_set(path).column(column)


def read_lexicon(path) -> Lexicon:
    """Read a lexicon file: one `token` or `token<TAB>frequency` per line.

    Tokens without a frequency get 1; duplicates keep the maximum frequency;
    lines starting with `#` and blank lines are ignored.
    """
    entries: dict[str, int] = {}
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) > 2:
                raise CorpusError(f"{path}:{lineno}: expected at most 2 fields, found {len(fields)}")
            token = fields[0]
            if not token:
                raise CorpusError(f"{path}:{lineno}: empty token")
            if len(fields) == 1:
                freq = 1
            else:
                try:
                    freq = int(fields[1])
                except ValueError:
                    raise CorpusError(
                        f"{path}:{lineno}: non-numeric frequency {fields[1]!r}") from None
                if freq < 1:
                    raise CorpusError(f"{path}:{lineno}: frequency must be >= 1, got {freq}")
            entries[token] = max(entries.get(token, 0), freq)
    if not entries:
        raise CorpusError(f"{path}: no lexicon entries found")
    return Lexicon(entries)


def strip_spaces(line: str) -> str:
    """Remove every Unicode whitespace character, keeping all others in order."""
    return "".join(c for c in line if not c.isspace())
