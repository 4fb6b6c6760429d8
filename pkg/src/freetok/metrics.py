"""Per-position metric profiles over a line and their reduction to gap scores.

Three base metrics are computed from the model for every rank-n gram position
of a line: the gram's probability (P), the conditional probability of the
observed adjacent unit (CP), and the transition freedom (TF, the number of
distinct units ever seen adjacent to the gram).  Each can be reshaped by a
transform (first derivative along the traversal direction, deviation from the
line mean, or peak value) and is normalized per line so one threshold scale
serves all metric kinds and corpus sizes.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .model import NGramModel
    from .tokenize import TokenizerConfig

BASES = ("P", "CP", "TF")
TRANSFORMS = ("none", "derivative", "variance", "peak")
DIRECTIONS = ("forward", "backward")

# CLI/config mnemonic stems; suffix "+" selects forward, "-" backward.
_STEMS = {
    "p": ("CP", "none"),
    "dp": ("CP", "derivative"),
    "dvp": ("CP", "variance"),
    "f": ("TF", "none"),
    "df": ("TF", "derivative"),
    "dvf": ("TF", "variance"),
    "peak": ("TF", "peak"),
}
MNEMONICS = tuple(stem + sign for stem in _STEMS for sign in ("-", "+"))


@dataclass(frozen=True)
class MetricKind:
    base: str
    transform: str
    direction: str

    def __post_init__(self):
        if self.base not in BASES:
            raise ValueError(f"base must be one of {BASES}, got {self.base!r}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}, got {self.transform!r}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if self.transform == "peak" and self.base == "P":
            raise ValueError("peak transform is defined for CP and TF only")

    @classmethod
    def from_mnemonic(cls, mnemonic: str) -> "MetricKind":
        """Parse a mnemonic such as 'dvf+' or 'p-'."""
        name = mnemonic.strip()
        if len(name) < 2 or name[-1] not in "+-":
            raise ValueError(f"unknown metric mnemonic {mnemonic!r}; valid: {', '.join(MNEMONICS)}")
        stem = name[:-1]
        if stem not in _STEMS:
            raise ValueError(f"unknown metric mnemonic {mnemonic!r}; valid: {', '.join(MNEMONICS)}")
        base, transform = _STEMS[stem]
        direction = "forward" if name[-1] == "+" else "backward"
        return cls(base, transform, direction)

    @property
    def mnemonic(self) -> str:
        for stem, (base, transform) in _STEMS.items():
            if (base, transform) == (self.base, self.transform):
                return stem + ("+" if self.direction == "forward" else "-")
        raise ValueError(f"no mnemonic covers base {self.base!r}")


@dataclass(frozen=True)
class MetricProfile:
    """Metric values, one per rank-n gram position of a line."""
    values: tuple[float, ...]
    n: int
    kind: MetricKind

    def __len__(self) -> int:
        return len(self.values)


def raw_profile(model: "NGramModel", line: str, n: int, base: str,
                direction: str = "forward") -> MetricProfile:
    """Base metric values per gram position; unknown grams/transitions give 0.

    A line shorter than n yields an empty profile.  In chars mode the adjacent
    unit is one symbol; in grams mode it is the non-overlapping neighbor
    n-gram, so CP looks n characters away instead of one.
    """
    if base not in BASES:
        raise ValueError(f"base must be one of {BASES}, got {base!r}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if not 1 <= n <= model.max_n:
        raise ValueError(f"rank {n} outside model range 1..{model.max_n}")
    kind = MetricKind(base, "none", direction)
    length = len(line)
    if length < n:
        return MetricProfile((), n, kind)
    forward = direction == "forward"
    ulen = n if model.mode == "grams" else 1
    values: list[float] = []
    if base == "TF":
        family = model.fwd[n] if forward else model.bwd[n]
        for i in range(length - n + 1):
            tmap = family.get(line[i:i + n])
            values.append(float(len(tmap)) if tmap else 0.0)
    elif base == "P":
        total = model.total_grams(n)
        grams = model.gram_counts[n]
        for i in range(length - n + 1):
            c = grams.get(line[i:i + n], 0)
            values.append(c / total if total else 0.0)
    else:  # CP
        family = model.fwd[n] if forward else model.bwd[n]
        for i in range(length - n + 1):
            if forward:
                lo = i + n
                unit = line[lo:lo + ulen] if lo + ulen <= length else None
            else:
                unit = line[i - ulen:i] if i >= ulen else None
            if unit is None:
                values.append(0.0)
                continue
            tmap = family.get(line[i:i + n])
            if not tmap:
                values.append(0.0)
                continue
            values.append(tmap.get(unit, 0) / sum(tmap.values()))
    return MetricProfile(tuple(values), n, kind)


def normalize(profile: MetricProfile) -> MetricProfile:
    """Scale values by the maximum absolute value; all-zero/empty unchanged."""
    peak_abs = max((abs(v) for v in profile.values), default=0.0)
    if peak_abs == 0.0:
        return profile
    return replace(profile, values=tuple(v / peak_abs for v in profile.values))


def derivative(profile: MetricProfile) -> MetricProfile:
    """First difference along the kind's traversal direction.

    Forward kinds difference against the previous position (d[0] = 0);
    backward kinds run against reading order (d[last] = 0).
    """
    v = profile.values
    if profile.kind.direction == "forward":
        d = tuple(0.0 if i == 0 else v[i] - v[i - 1] for i in range(len(v)))
    else:
        last = len(v) - 1
        d = tuple(0.0 if i == last else v[i] - v[i + 1] for i in range(len(v)))
    return replace(profile, values=d, kind=replace(profile.kind, transform="derivative"))


def variance(profile: MetricProfile) -> MetricProfile:
    """Pointwise deviation from the profile mean (not statistical variance)."""
    v = profile.values
    if not v:
        return replace(profile, kind=replace(profile.kind, transform="variance"))
    mean = sum(v) / len(v)
    return replace(profile, values=tuple(x - mean for x in v),
                   kind=replace(profile.kind, transform="variance"))


def peak(profile: MetricProfile) -> MetricProfile:
    """Derivative at a position minus the derivative one step onward.

    "Onward" follows the kind's traversal direction, so in both directions the
    interior values equal the negated central second difference
    2*v[i] - v[i-1] - v[i+1]; derivatives beyond the ends count as 0.
    """
    d = derivative(profile).values
    size = len(d)
    if profile.kind.direction == "forward":
        out = tuple(d[i] - (d[i + 1] if i + 1 < size else 0.0) for i in range(size))
    else:
        out = tuple(d[i] - (d[i - 1] if i > 0 else 0.0) for i in range(size))
    return replace(profile, values=out, kind=replace(profile.kind, transform="peak"))


_TRANSFORM_FN = {"derivative": derivative, "variance": variance, "peak": peak}


def transform_profile(profile: MetricProfile, transform: str) -> MetricProfile:
    if transform == "none":
        return profile
    try:
        return _TRANSFORM_FN[transform](profile)
    except KeyError:
        raise ValueError(f"transform must be one of {TRANSFORMS}, got {transform!r}") from None


def gap_contributions(model: "NGramModel", line: str, kind: MetricKind, n: int) -> list[float]:
    """Per-gap values for one (kind, rank): length len(line) - 1.

    Pipeline: raw profile -> normalize -> transform -> re-normalize (when a
    transform applied).  A forward-direction profile contributes to the gap
    after character j from the gram position ending at j; a backward-direction
    profile from the gram position starting at j + 1.  Positions that do not
    exist contribute 0.
    """
    length = len(line)
    if length < 2:
        return []
    prof = normalize(raw_profile(model, line, n, kind.base, kind.direction))
    if kind.transform != "none":
        prof = normalize(transform_profile(prof, kind.transform))
    vals = prof.values
    out = [0.0] * (length - 1)
    if not vals:
        return out
    if kind.direction == "forward":
        for j in range(length - 1):
            p = j - n + 1
            if p >= 0:
                out[j] = vals[p]
    else:
        limit = len(vals)
        for j in range(length - 1):
            p = j + 1
            if p < limit:
                out[j] = vals[p]
    return out


def boundary_scores(model: "NGramModel", line: str, config: "TokenizerConfig") -> list[float]:
    """Score each inter-character gap: max over directions, mean over ranks."""
    length = len(line)
    if length < 2:
        return []
    kinds = config.kinds
    totals = [0.0] * (length - 1)
    for n in config.n_set:
        best: list[float] | None = None
        for kind in kinds:
            contrib = gap_contributions(model, line, kind, n)
            if best is None:
                best = contrib
            else:
                best = [a if a >= b else b for a, b in zip(best, contrib)]
        assert best is not None
        for j, v in enumerate(best):
            totals[j] += v
    ranks = len(config.n_set)
    return [t / ranks for t in totals]
