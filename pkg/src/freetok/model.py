"""N-gram transition model: counts of n-grams and of the units adjacent to them.

The model is a bidirected weighted graph stored as three map families per
rank n: occurrence counts of each n-gram, counts of units observed right
after it (forward transitions) and right before it (backward transitions).
In ``chars`` mode the adjacent units are single symbols; in ``grams`` mode
they are non-overlapping n-grams of the same rank.
"""
from __future__ import annotations

import gzip
from typing import Iterable

MODES = ("chars", "grams")

FORMAT_MAGIC = "FTOK"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file does not match the expected format."""


class NGramModel:
    """Counts for n-grams of ranks 1..max_n plus their adjacent-unit counts.

    Training is incremental and line-based: transitions never cross line
    boundaries, and no sentinel boundary symbols are introduced.  Counts are
    plain Python ints (arbitrary precision, so no overflow on huge corpora).
    """

    __slots__ = ("mode", "max_n", "gram_counts", "fwd", "bwd", "_totals")

    def __init__(self, max_n: int = 1, mode: str = "chars"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if max_n < 1:
            raise ValueError(f"max_n must be >= 1, got {max_n}")
        self.mode = mode
        self.max_n = max_n
        self.gram_counts: dict[int, dict[str, int]] = {n: {} for n in range(1, max_n + 1)}
        self.fwd: dict[int, dict[str, dict[str, int]]] = {n: {} for n in range(1, max_n + 1)}
        self.bwd: dict[int, dict[str, dict[str, int]]] = {n: {} for n in range(1, max_n + 1)}
        self._totals: dict[int, int] = {}

    def train(self, lines: Iterable[str]) -> "NGramModel":
        """Accumulate counts from lines; may be called repeatedly."""
        ulen_is_n = self.mode == "grams"
        for line in lines:
            length = len(line)
            for n in range(1, self.max_n + 1):
                if length < n:
                    break
                grams = self.gram_counts[n]
                fw = self.fwd[n]
                bw = self.bwd[n]
                ulen = n if ulen_is_n else 1
                for i in range(length - n + 1):
                    g = line[i:i + n]
                    grams[g] = grams.get(g, 0) + 1
                    nxt = i + n
                    if nxt + ulen <= length:
                        u = line[nxt:nxt + ulen]
                        tmap = fw.get(g)
                        if tmap is None:
                            fw[g] = {u: 1}
                        else:
                            tmap[u] = tmap.get(u, 0) + 1
                    if i >= ulen:
                        u = line[i - ulen:i]
                        tmap = bw.get(g)
                        if tmap is None:
                            bw[g] = {u: 1}
                        else:
                            tmap[u] = tmap.get(u, 0) + 1
        self._totals = {}
        return self

    def total_grams(self, n: int) -> int:
        """Sum of all rank-n gram counts (cached until the model changes)."""
        if not 1 <= n <= self.max_n:
            raise ValueError(f"rank {n} outside 1..{self.max_n}")
        total = self._totals.get(n)
        if total is None:
            total = sum(self.gram_counts[n].values())
            self._totals[n] = total
        return total

    def count_params(self) -> int:
        """Total number of stored count entries across all three map families."""
        total = 0
        for n in range(1, self.max_n + 1):
            total += len(self.gram_counts[n])
            total += sum(len(t) for t in self.fwd[n].values())
            total += sum(len(t) for t in self.bwd[n].values())
        return total

    def copy(self) -> "NGramModel":
        out = NGramModel(max_n=self.max_n, mode=self.mode)
        for n in range(1, self.max_n + 1):
            out.gram_counts[n] = dict(self.gram_counts[n])
            out.fwd[n] = {g: dict(t) for g, t in self.fwd[n].items()}
            out.bwd[n] = {g: dict(t) for g, t in self.bwd[n].items()}
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NGramModel):
            return NotImplemented
        return (self.mode == other.mode and self.max_n == other.max_n
                and self.gram_counts == other.gram_counts
                and self.fwd == other.fwd and self.bwd == other.bwd)

    def __repr__(self) -> str:
        return f"NGramModel(mode={self.mode!r}, max_n={self.max_n}, params={self.count_params()})"

    def save(self, path) -> None:
        """Write the model as canonical sorted text (gzip when path ends .gz)."""
        with _open_text(path, "wt") as fh:
            fh.write(f"{FORMAT_MAGIC}\t{FORMAT_VERSION}\t{self.mode}\t{self.max_n}\n")
            for n in range(1, self.max_n + 1):
                for g in sorted(self.gram_counts[n]):
                    fh.write(f"G\t{n}\t{_escape(g)}\t{self.gram_counts[n][g]}\n")
            for kind, family in (("F", self.fwd), ("B", self.bwd)):
                for n in range(1, self.max_n + 1):
                    for g in sorted(family[n]):
                        tmap = family[n][g]
                        for u in sorted(tmap):
                            fh.write(f"{kind}\t{n}\t{_escape(g)}\t{_escape(u)}\t{tmap[u]}\n")


def load(path) -> NGramModel:
    """Read a model written by :meth:`NGramModel.save`; exact inverse."""
    with _open_text(path, "rt") as fh:
        header = fh.readline()
        if not header:
            raise ModelFormatError(f"{path}: empty file, expected {FORMAT_MAGIC} header")
        fields = header.rstrip("\n").split("\t")
        if len(fields) != 4 or fields[0] != FORMAT_MAGIC:
            raise ModelFormatError(f"{path}: not a {FORMAT_MAGIC} model file")
        if fields[1] != str(FORMAT_VERSION):
            raise ModelFormatError(
                f"{path}: expected format version {FORMAT_VERSION}, found {fields[1]}")
        mode, max_n = fields[2], fields[3]
        if mode not in MODES or not max_n.isdigit() or int(max_n) < 1:
            raise ModelFormatError(f"{path}: bad header {header.rstrip()!r}")
        model = NGramModel(max_n=int(max_n), mode=mode)
        for lineno, raw in enumerate(fh, start=2):
            fields = raw.rstrip("\n").split("\t")
            kind = fields[0]
            try:
                if kind == "G" and len(fields) == 4:
                    n, g, count = int(fields[1]), _unescape(fields[2]), int(fields[3])
                    _check_record(model, n, g, count, path, lineno)
                    model.gram_counts[n][g] = count
                elif kind in ("F", "B") and len(fields) == 5:
                    n, g, u = int(fields[1]), _unescape(fields[2]), _unescape(fields[3])
                    count = int(fields[4])
                    _check_record(model, n, g, count, path, lineno)
                    family = model.fwd if kind == "F" else model.bwd
                    family[n].setdefault(g, {})[u] = count
                else:
                    raise ModelFormatError(f"{path}:{lineno}: bad record {raw.rstrip()!r}")
            except ValueError as exc:
                if isinstance(exc, ModelFormatError):
                    raise
                raise ModelFormatError(f"{path}:{lineno}: bad record {raw.rstrip()!r}") from exc
        return model


def merge(a: NGramModel, b: NGramModel) -> NGramModel:
    """Pointwise count addition; training shards then merging == training all."""
    if a.mode != b.mode or a.max_n != b.max_n:
        raise ValueError(
            f"cannot merge models with differing shape: "
            f"({a.mode}, max_n={a.max_n}) vs ({b.mode}, max_n={b.max_n})")
    out = a.copy()
    for n in range(1, a.max_n + 1):
        grams = out.gram_counts[n]
        for g, c in b.gram_counts[n].items():
            grams[g] = grams.get(g, 0) + c
        for src, dst in ((b.fwd[n], out.fwd[n]), (b.bwd[n], out.bwd[n])):
            for g, tmap in src.items():
                d = dst.setdefault(g, {})
                for u, c in tmap.items():
                    d[u] = d.get(u, 0) + c
    return out


def compress(model: NGramModel, threshold: float) -> NGramModel:
    """Prune statistically weak evidence from a model.

    First drops every rank-n gram whose count falls below threshold times the
    maximum gram count of that rank (its transition maps go with it), then for
    each surviving gram drops transitions below threshold times the maximum
    count in that gram's own transition map.  One pass, lossy.  threshold 0
    returns the model unchanged (same object: nothing to prune).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"compression threshold must be in [0, 1], got {threshold}")
    if threshold == 0:
        return model
    out = NGramModel(max_n=model.max_n, mode=model.mode)
    for n in range(1, model.max_n + 1):
        grams = model.gram_counts[n]
        if not grams:
            continue
        gram_cut = threshold * max(grams.values())
        kept = {g: c for g, c in grams.items() if c >= gram_cut}
        out.gram_counts[n] = kept
        for src, dst in ((model.fwd[n], out.fwd[n]), (model.bwd[n], out.bwd[n])):
            for g, tmap in src.items():
                if g not in kept:
                    continue
                trans_cut = threshold * max(tmap.values())
                pruned = {u: c for u, c in tmap.items() if c >= trans_cut}
                if pruned:
                    dst[g] = pruned
    return out


def _check_record(model, n, g, count, path, lineno):
    if not 1 <= n <= model.max_n:
        raise ModelFormatError(f"{path}:{lineno}: rank {n} outside 1..{model.max_n}")
    if not g:
        raise ModelFormatError(f"{path}:{lineno}: empty gram")
    if count < 1:
        raise ModelFormatError(f"{path}:{lineno}: count must be >= 1, got {count}")


def _open_text(path, text_mode):
    if str(path).endswith(".gz"):
        return gzip.open(path, text_mode, encoding="utf-8", newline="\n")
    return open(path, text_mode[0], encoding="utf-8", newline="\n")


def _escape(s: str) -> str:
    return (s.replace("\\", "\\\\").replace("\t", "\\t")
             .replace("\n", "\\n").replace("\r", "\\r"))


_UNESCAPE = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def _unescape(s: str) -> str:
    if "\\" not in s:
        return s
    out = []
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\":
            if i + 1 >= len(s) or s[i + 1] not in _UNESCAPE:
                raise ModelFormatError(f"bad escape in field {s!r}")
            out.append(_UNESCAPE[s[i + 1]])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)
