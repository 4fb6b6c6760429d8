"""Tokenizer scoring (F1, lexicon-discovery precision), grid search, heatmaps.

F1 is computed over non-unique token multisets: every repetition of a token
counts separately.  Grid search sweeps metric pairs, rank sets, model
compression thresholds, and tokenization thresholds, reusing per-line gap
scores across thresholds so the threshold axis is essentially free.
"""
from __future__ import annotations

import csv
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import model as model_mod
from .metrics import MetricKind, gap_contributions
from .tokenize import Token


@dataclass
class EvalResult:
    per_text: list[tuple[float, float, float]]
    mean_f1: float
    expected_tokens: Counter
    actual_tokens: Counter


@dataclass(frozen=True)
class GridRow:
    b_metric: str
    f_metric: str
    n_set: tuple[int, ...]
    compression: float
    threshold: float
    mean_f1: float | None

    @property
    def metric_label(self) -> str:
        return f"{self.b_metric},{self.f_metric}"

    @property
    def n_set_label(self) -> str:
        return "+".join(str(n) for n in self.n_set)


@dataclass
class GridSpec:
    """The hyperparameter grid: metric pairs x rank sets x compressions x thresholds."""
    metric_pairs: list[tuple[str, str]]
    n_sets: list[tuple[int, ...]]
    compressions: list[float]
    thresholds: list[float]

    def __post_init__(self):
        if not self.metric_pairs or not self.n_sets:
            raise ValueError("grid needs at least one metric pair and one n_set")
        for name in ("compressions", "thresholds"):
            values = getattr(self, name)
            if not values:
                raise ValueError(f"grid {name} must be non-empty")
            if sorted(values) != list(values):
                raise ValueError(f"grid {name} must be sorted ascending")
        for b, f in self.metric_pairs:
            if MetricKind.from_mnemonic(b).direction != "backward":
                raise ValueError(f"{b!r} is not a backward mnemonic")
            if MetricKind.from_mnemonic(f).direction != "forward":
                raise ValueError(f"{f!r} is not a forward mnemonic")
        self.n_sets = [tuple(sorted(set(ns))) for ns in self.n_sets]

    @classmethod
    def from_file(cls, path) -> "GridSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), source=str(path))

    @classmethod
    def from_text(cls, text: str, source: str = "<grid>") -> "GridSpec":
        """Parse the flat key=value grid format (see README)."""
        pairs: list[tuple[str, str]] = []
        n_sets: list[tuple[int, ...]] = []
        compressions: list[float] = []
        thresholds: list[float] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not value:
                raise ValueError(f"{source}:{lineno}: expected key=value, got {raw!r}")
            try:
                if key == "metrics":
                    names = [m.strip() for m in value.split(",")]
                    if len(names) != 2:
                        raise ValueError("metrics needs a backward,forward pair")
                    pairs.append(_normalize_pair(names))
                elif key == "n_sets":
                    for item in value.split():
                        n_sets.append(tuple(int(n) for n in item.split("+")))
                elif key == "compressions":
                    compressions.extend(float(v) for v in value.split())
                elif key == "thresholds":
                    thresholds.extend(float(v) for v in value.split())
                else:
                    raise ValueError(f"unknown grid key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{source}:{lineno}: {exc}") from None
        return cls(pairs, n_sets, compressions, thresholds)


def _normalize_pair(names: Sequence[str]) -> tuple[str, str]:
    kinds = {MetricKind.from_mnemonic(m).direction: m for m in names}
    if set(kinds) != {"backward", "forward"}:
        raise ValueError(f"need one backward and one forward mnemonic, got {list(names)}")
    return kinds["backward"], kinds["forward"]


def f1_tokens(expected, actual) -> tuple[float, float, float]:
    """Precision/recall/F1 over token multisets (min-count overlap)."""
    exp = _as_counter(expected)
    act = _as_counter(actual)
    overlap = sum(min(c, act[t]) for t, c in exp.items() if t in act)
    total_actual = sum(act.values())
    total_expected = sum(exp.values())
    precision = overlap / total_actual if total_actual else 0.0
    recall = overlap / total_expected if total_expected else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(texts: Sequence[str], reference, candidate) -> EvalResult:
    """Per-text F1 of candidate vs reference plus corpus-wide token collectors.

    reference and candidate are either objects with a tokenize(line) method or
    pre-tokenized sequences aligned with texts.
    """
    per_text: list[tuple[float, float, float]] = []
    expected_collector: Counter = Counter()
    actual_collector: Counter = Counter()
    for index, text in enumerate(texts):
        expected = Counter(_token_texts(reference, index, text))
        actual = Counter(_token_texts(candidate, index, text))
        per_text.append(f1_tokens(expected, actual))
        expected_collector.update(expected)
        actual_collector.update(actual)
    mean_f1 = sum(r[2] for r in per_text) / len(per_text) if per_text else 0.0
    return EvalResult(per_text, mean_f1, expected_collector, actual_collector)


def lexicon_precision(tokens, lexicon) -> float:
    """Fraction of tokens (with multiplicity) found in the lexicon.

    Lookup is case-insensitive.  Raises on an empty multiset.
    """
    counts = _as_counter(tokens)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("cannot compute lexicon precision of an empty token multiset")
    relevant = sum(c for t, c in counts.items() if lexicon.contains_folded(t))
    return relevant / total


def grid_search(model, texts: Sequence[str], reference, grid: GridSpec, *,
                cumulative_compression: bool = False, threads: int = 1) -> list[GridRow]:
    """Evaluate every grid cell; cells whose ranks exceed the model are missing.

    By default each compression level prunes a fresh copy of the input model;
    cumulative_compression=True re-prunes the previous level's result instead,
    mirroring in-place pipelines.  Rows come back in deterministic order
    (metric pair, compression, n_set, threshold).
    """
    ref_counts = [Counter(_token_texts(reference, i, t)) for i, t in enumerate(texts)]
    rows: list[GridRow] = []
    valid_ranks = sorted({n for ns in grid.n_sets for n in ns if n <= model.max_n})
    for b_name, f_name in grid.metric_pairs:
        kinds = (MetricKind.from_mnemonic(b_name), MetricKind.from_mnemonic(f_name))
        base = model
        for compression in grid.compressions:
            if cumulative_compression:
                base = model_mod.compress(base, compression)
                work = base
            else:
                work = model_mod.compress(model, compression)
            rank_scores = _rank_gap_scores(work, texts, kinds, valid_ranks, threads)
            for n_set in grid.n_sets:
                if any(n > model.max_n for n in n_set):
                    rows.extend(GridRow(b_name, f_name, n_set, compression, th, None)
                                for th in grid.thresholds)
                    continue
                line_scores = []
                for i in range(len(texts)):
                    per_rank = [rank_scores[n][i] for n in n_set]
                    count = len(n_set)
                    line_scores.append([sum(vals) / count for vals in zip(*per_rank)]
                                       if count > 1 else per_rank[0])
                for th in grid.thresholds:
                    f1_sum = 0.0
                    for i, text in enumerate(texts):
                        tokens = _cut_texts(text, line_scores[i], th)
                        f1_sum += f1_tokens(ref_counts[i], Counter(tokens))[2]
                    mean = f1_sum / len(texts) if texts else 0.0
                    rows.append(GridRow(b_name, f_name, n_set, compression, th, mean))
    return rows


def best_row(rows: Iterable[GridRow]) -> GridRow:
    """Row with the highest mean F1; earlier rows win ties, missing rows lose."""
    best = None
    for row in rows:
        if row.mean_f1 is None:
            continue
        if best is None or row.mean_f1 > best.mean_f1:
            best = row
    if best is None:
        raise ValueError("no evaluated rows in grid result")
    return best


def write_grid_csv(rows: Iterable[GridRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "b_metric", "f_metric", "n_set",
                         "compression", "threshold", "mean_f1"])
        for row in rows:
            writer.writerow([row.metric_label, row.b_metric, row.f_metric,
                             row.n_set_label, f"{row.compression:g}",
                             f"{row.threshold:g}",
                             "" if row.mean_f1 is None else f"{row.mean_f1:.6f}"])


def emit_heatmap(rows: Sequence[GridRow], out_dir) -> list[str]:
    """One CSV per (metric pair, compression): n_set rows x threshold columns.

    Cells hold mean F1 with 4 decimal places; missing cells stay empty.
    Returns the written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    groups: dict[tuple[str, str, float], list[GridRow]] = {}
    for row in rows:
        groups.setdefault((row.b_metric, row.f_metric, row.compression), []).append(row)
    paths = []
    for (b_name, f_name, compression), group in groups.items():
        thresholds = sorted({r.threshold for r in group})
        n_sets = []
        for r in group:
            if r.n_set not in n_sets:
                n_sets.append(r.n_set)
        cells = {(r.n_set, r.threshold): r.mean_f1 for r in group}
        path = os.path.join(out_dir, f"heatmap_{b_name}_{f_name}_{compression:g}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_set"] + [f"{t:g}" for t in thresholds])
            for n_set in n_sets:
                label = "+".join(str(n) for n in n_set)
                row_cells = []
                for t in thresholds:
                    value = cells.get((n_set, t))
                    row_cells.append("" if value is None else f"{value:.4f}")
                writer.writerow([label] + row_cells)
        paths.append(path)
    return paths


def _as_counter(tokens) -> Counter:
    if isinstance(tokens, Counter):
        return tokens
    if isinstance(tokens, Mapping):
        return Counter(tokens)
    return Counter(t.text if isinstance(t, Token) else t for t in tokens)


def _token_texts(tokenizer, index: int, text: str) -> list[str]:
    if hasattr(tokenizer, "tokenize"):
        produced = tokenizer.tokenize(text)
    else:
        produced = tokenizer[index]
    return [t.text if isinstance(t, Token) else t for t in produced]


def _cut_texts(line: str, scores: list[float], threshold: float) -> list[str]:
    tokens = []
    start = 0
    for j, s in enumerate(scores):
        if s > threshold:
            tokens.append(line[start:j + 1])
            start = j + 1
    if start < len(line):
        tokens.append(line[start:])
    return tokens


def _rank_gap_scores(work, texts, kinds, ranks, threads) -> dict[int, list[list[float]]]:
    """Per rank, per line: elementwise max of the pair's gap contributions."""
    def one_line(line: str) -> dict[int, list[float]]:
        out = {}
        for n in ranks:
            best: list[float] | None = None
            for kind in kinds:
                contrib = gap_contributions(work, line, kind, n)
                best = contrib if best is None else [
                    a if a >= b else b for a, b in zip(best, contrib)]
            out[n] = best if best is not None else []
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_line = list(pool.map(one_line, texts))
    else:
        per_line = [one_line(t) for t in texts]
    return {n: [per_line[i][n] for i in range(len(texts))] for n in ranks}
