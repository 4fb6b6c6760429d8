"""Tokenizers: statistics-driven, lexicon-greedy, delimiter-based, file-based.

All tokenizers that partition a line keep whitespace runs as tokens of their
own, so tokenizer outputs compare like with like during evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import model as model_mod
from .metrics import MetricKind, boundary_scores

# Delimiter symbols detached as single-character tokens by the reference
# splitter and appended to lexicons with top weight.
DELIMITERS = " \t\n\r'`\"“”+=-_&/|\\*()[]<>#^@~,;:.!?"
_DELIM_SET = frozenset(DELIMITERS)

SORTMODES = ("length", "frequency", "gamma")


@dataclass(frozen=True)
class Token:
    """A token and its character offset in the source line."""
    text: str
    start: int

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text must be non-empty")


@dataclass(frozen=True)
class TokenizerConfig:
    """Hyperparameters of the statistics-driven tokenizer.

    metric is a (backward, forward) pair of kinds; either side may be None to
    score a single direction.  n_set gives the gram ranks whose gap scores are
    averaged; threshold is the normalized score above which a gap becomes a
    token boundary; compression is the model-pruning threshold applied before
    tokenization.
    """
    backward: MetricKind | None
    forward: MetricKind | None
    n_set: tuple[int, ...] = (1,)
    threshold: float = 0.4
    compression: float = 0.0

    def __post_init__(self):
        if self.backward is None and self.forward is None:
            raise ValueError("at least one metric kind is required")
        if self.backward is not None and self.backward.direction != "backward":
            raise ValueError("backward slot holds a forward-direction kind")
        if self.forward is not None and self.forward.direction != "forward":
            raise ValueError("forward slot holds a backward-direction kind")
        if not self.n_set:
            raise ValueError("n_set must be non-empty")
        if any(n < 1 for n in self.n_set):
            raise ValueError(f"ranks must be >= 1, got {self.n_set}")
        object.__setattr__(self, "n_set", tuple(sorted(set(self.n_set))))
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if not 0.0 <= self.compression <= 1.0:
            raise ValueError(f"compression must be in [0, 1], got {self.compression}")

    @classmethod
    def from_mnemonics(cls, metrics: str, n_set: Iterable[int] = (1,),
                       threshold: float = 0.4, compression: float = 0.0) -> "TokenizerConfig":
        """Build a config from a mnemonic string such as 'dvf-,dvf+' or 'f+'."""
        backward = forward = None
        names = [m for m in (s.strip() for s in metrics.split(",")) if m]
        if not 1 <= len(names) <= 2:
            raise ValueError(f"expected one or two metric mnemonics, got {metrics!r}")
        for name in names:
            kind = MetricKind.from_mnemonic(name)
            if kind.direction == "backward":
                if backward is not None:
                    raise ValueError(f"two backward kinds in {metrics!r}")
                backward = kind
            else:
                if forward is not None:
                    raise ValueError(f"two forward kinds in {metrics!r}")
                forward = kind
        return cls(backward, forward, tuple(n_set), threshold, compression)

    @property
    def kinds(self) -> tuple[MetricKind, ...]:
        return tuple(k for k in (self.backward, self.forward) if k is not None)

    @property
    def metrics_label(self) -> str:
        return ",".join(k.mnemonic for k in self.kinds)


class Lexicon:
    """Token -> frequency map with a prefix index for greedy matching."""

    def __init__(self, entries: Mapping[str, int]):
        if not entries:
            raise ValueError("lexicon must not be empty")
        for token, freq in entries.items():
            if not token:
                raise ValueError("lexicon entries must be non-empty")
            if freq < 1:
                raise ValueError(f"lexicon frequency must be >= 1, got {token!r}: {freq}")
        self._entries = dict(entries)
        self._trie = _build_trie(self._entries)
        self._folded_trie: dict | None = None

    @property
    def entries(self) -> dict[str, int]:
        return dict(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, token: str) -> bool:
        return token in self._entries

    def get(self, token: str, default: int | None = None):
        return self._entries.get(token, default)

    def contains_folded(self, token: str) -> bool:
        """Case-insensitive membership via per-character lowercase mapping."""
        return _fold(token) in self._folded_entries()

    @property
    def max_frequency(self) -> int:
        return max(self._entries.values())

    def with_delimiters(self) -> "Lexicon":
        """New lexicon with every delimiter symbol added at top weight."""
        top = self.max_frequency
        merged = dict(self._entries)
        for ch in DELIMITERS:
            merged[ch] = max(merged.get(ch, 0), top)
        return Lexicon(merged)

    def matches_at(self, text: str, i: int, cased: bool = True) -> list[tuple[str, int]]:
        """All (entry, frequency) pairs that prefix text starting at i.

        With cased=False, matching compares lowercased characters and the
        returned entry strings are the folded forms.
        """
        trie = self._trie if cased else self._folded_cache()
        node = trie
        hits: list[tuple[str, int]] = []
        for k in range(i, len(text)):
            ch = text[k] if cased else _fold(text[k])
            node = node.get(ch)
            if node is None:
                break
            terminal = node.get(None)
            if terminal is not None:
                hits.append(terminal)
        return hits

    def save(self, path) -> None:
        """Write entries as `token<TAB>frequency`, sorted by token.

        The line format cannot represent tokens containing tab, newline or
        carriage return (delimiter entries are meant to be re-added by
        with_delimiters after loading); those raise instead of corrupting
        the file.
        """
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for token in sorted(self._entries):
                if any(c in token for c in "\t\n\r"):
                    raise ValueError(
                        f"token {token!r} cannot be written to a lexicon file")
                fh.write(f"{token}\t{self._entries[token]}\n")

    def _folded_entries(self) -> dict[str, int]:
        folded: dict[str, int] = {}
        for token, freq in self._entries.items():
            key = _fold(token)
            folded[key] = max(folded.get(key, 0), freq)
        return folded

    def _folded_cache(self) -> dict:
        if self._folded_trie is None:
            self._folded_trie = _build_trie(self._folded_entries())
        return self._folded_trie


def _fold(text: str) -> str:
    return "".join(c.lower() if len(c.lower()) == 1 else c for c in text)


def _build_trie(entries: Mapping[str, int]) -> dict:
    root: dict = {}
    for token, freq in entries.items():
        node = root
        for ch in token:
            node = node.setdefault(ch, {})
        node[None] = (token, freq)
    return root


def _cut(line: str, gaps: Iterable[int]) -> list[Token]:
    tokens = []
    start = 0
    for j in gaps:
        tokens.append(Token(line[start:j + 1], start))
        start = j + 1
    if start < len(line):
        tokens.append(Token(line[start:], start))
    return tokens


def freedom_tokenize(model: "model_mod.NGramModel", line: str,
                     config: TokenizerConfig) -> list[Token]:
    """Cut the line at every gap whose boundary score exceeds the threshold.

    When config.compression > 0 the model is pruned first (on a copy); for
    per-line calls at the same compression prefer FreedomTokenizer, which
    prunes once.
    """
    if config.compression > 0:
        model = model_mod.compress(model, config.compression)
    if not line:
        return []
    scores = boundary_scores(model, line, config)
    return _cut(line, (j for j, s in enumerate(scores) if s > config.threshold))


def delimiter_tokenize(line: str) -> list[Token]:
    """Rule-based reference splitter: each delimiter symbol is its own token."""
    tokens: list[Token] = []
    start = -1
    for i, ch in enumerate(line):
        if ch in _DELIM_SET:
            if start >= 0:
                tokens.append(Token(line[start:i], start))
                start = -1
            tokens.append(Token(ch, i))
        elif start < 0:
            start = i
    if start >= 0:
        tokens.append(Token(line[start:], start))
    return tokens


def lexicon_tokenize(lexicon: Lexicon, line: str, sortmode: str = "length",
                     cased: bool = True) -> list[Token]:
    """Greedy left-to-right lexicon matching.

    At each position the matching entry with the best sortmode key wins:
    entry length, entry frequency, or gamma = length * ln(1 + frequency).
    Ties prefer the longer entry, then the lexicographically smaller one.
    Unmatched positions fall back to single-character tokens.  cased=False
    matches case-insensitively but emits the original text.
    """
    if sortmode not in SORTMODES:
        raise ValueError(f"sortmode must be one of {SORTMODES}, got {sortmode!r}")
    if sortmode == "length":
        keyfn = lambda entry, freq: float(len(entry))
    elif sortmode == "frequency":
        keyfn = lambda entry, freq: float(freq)
    else:
        keyfn = lambda entry, freq: len(entry) * math.log1p(freq)
    tokens: list[Token] = []
    pos = 0
    while pos < len(line):
        best: tuple[float, int, str] | None = None
        for entry, freq in lexicon.matches_at(line, pos, cased=cased):
            cand = (keyfn(entry, freq), len(entry), entry)
            if best is None or cand[:2] > best[:2] or (cand[:2] == best[:2] and entry < best[2]):
                best = cand
        if best is None:
            tokens.append(Token(line[pos], pos))
            pos += 1
        else:
            size = best[1]
            tokens.append(Token(line[pos:pos + size], pos))
            pos += size
    return tokens


class ReferenceMismatchError(ValueError):
    """A reference tokenization does not cover its source line."""


RECORD_SEPARATOR = "\x1f"


def reference_from_file(path, texts: list[str] | None = None) -> dict[int, list[str]]:
    """Read reference tokenizations: one line per record, tokens 0x1f-joined.

    When texts is given, each record's concatenation is checked against the
    matching line and mismatches are reported with their line index.
    """
    records: dict[int, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for index, raw in enumerate(fh):
            record = raw.rstrip("\n")
            if record == "":
                tokens: list[str] = []
            else:
                tokens = record.split(RECORD_SEPARATOR)
                if any(t == "" for t in tokens):
                    raise ReferenceMismatchError(f"{path}: empty token at line {index}")
            records[index] = tokens
    if texts is not None:
        if len(records) != len(texts):
            raise ReferenceMismatchError(
                f"{path}: {len(records)} records for {len(texts)} texts")
        for index, text in enumerate(texts):
            if "".join(records[index]) != text:
                raise ReferenceMismatchError(f"{path}: coverage mismatch at line {index}")
    return records


class FreedomTokenizer:
    """Statistics-driven tokenizer bound to a model and config.

    Compression is applied once at construction, making per-line calls cheap.
    """

    def __init__(self, model: "model_mod.NGramModel", config: TokenizerConfig):
        if any(n > model.max_n for n in config.n_set):
            raise ValueError(f"n_set {config.n_set} exceeds model max_n {model.max_n}")
        self.config = config
        self.model = model_mod.compress(model, config.compression)
        self._inner = TokenizerConfig(config.backward, config.forward, config.n_set,
                                      config.threshold, 0.0)

    def tokenize(self, line: str) -> list[Token]:
        return freedom_tokenize(self.model, line, self._inner)


class DelimiterTokenizer:
    """Rule-based reference splitter as a tokenizer object."""

    def tokenize(self, line: str) -> list[Token]:
        return delimiter_tokenize(line)


class LexiconTokenizer:
    """Greedy lexicon tokenizer as a tokenizer object."""

    def __init__(self, lexicon: Lexicon, sortmode: str = "length", cased: bool = True):
        if sortmode not in SORTMODES:
            raise ValueError(f"sortmode must be one of {SORTMODES}, got {sortmode!r}")
        self.lexicon = lexicon
        self.sortmode = sortmode
        self.cased = cased

    def tokenize(self, line: str) -> list[Token]:
        return lexicon_tokenize(self.lexicon, line, self.sortmode, self.cased)
