"""Agglomerative clustering of unigram symbols by transition-vector similarity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Union


@dataclass(frozen=True)
class SymbolVector:
    """A symbol with its rank-1 forward and backward transition counts."""
    symbol: str
    forward: dict[str, int]
    backward: dict[str, int]

    def features(self) -> dict[tuple[str, str], int]:
        """Concatenated feature space: backward features name-spaced apart."""
        feats = {("f", u): c for u, c in self.forward.items()}
        feats.update({("b", u): c for u, c in self.backward.items()})
        return feats


@dataclass(frozen=True)
class Leaf:
    symbol: str


@dataclass(frozen=True)
class Merge:
    left: "Node"
    right: "Node"
    similarity: float


Node = Union[Leaf, Merge]


def leaves(node: Node) -> Iterator[str]:
    if isinstance(node, Leaf):
        yield node.symbol
    else:
        yield from leaves(node.left)
        yield from leaves(node.right)


def merge_count(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + merge_count(node.left) + merge_count(node.right)


def symbol_vectors(model, min_count: int = 2) -> list[SymbolVector]:
    """One vector per unigram with count >= min_count, in symbol order.

    Symbols with neither forward nor backward transitions are dropped (they
    carry no similarity evidence).
    """
    grams = model.gram_counts.get(1, {})
    if not grams:
        raise ValueError("model has no rank-1 grams; train it first")
    vectors = []
    for symbol in sorted(grams):
        if grams[symbol] < min_count:
            continue
        fwd = model.fwd[1].get(symbol, {})
        bwd = model.bwd[1].get(symbol, {})
        if not fwd and not bwd:
            continue
        vectors.append(SymbolVector(symbol, dict(fwd), dict(bwd)))
    return vectors


def cosine(u: SymbolVector, v: SymbolVector) -> float:
    """Cosine similarity over the concatenated count features."""
    fu, fv = u.features(), v.features()
    if not fu or not fv:
        raise ValueError("cosine similarity undefined for a zero vector")
    dot = sum(c * fv[k] for k, c in fu.items() if k in fv)
    norm_u = math.sqrt(sum(c * c for c in fu.values()))
    norm_v = math.sqrt(sum(c * c for c in fv.values()))
    return dot / (norm_u * norm_v)


def jaccard(u: SymbolVector, v: SymbolVector) -> float:
    """Jaccard similarity of the nonzero-feature supports."""
    su, sv = set(u.features()), set(v.features())
    if not su or not sv:
        raise ValueError("jaccard similarity undefined for a zero vector")
    return len(su & sv) / len(su | sv)


_SIMILARITIES = {"cosine": cosine, "jaccard": jaccard}


def agglomerate(vectors: list[SymbolVector],
                similarity: Union[str, Callable[[SymbolVector, SymbolVector], float]] = "jaccard",
                ) -> Node:
    """Average-linkage agglomerative clustering into a full binary tree.

    Repeatedly merges the cluster pair with the highest mean pairwise
    similarity (ties go to the lexicographically smallest leaf pair).  Merge
    similarities are non-increasing toward the root.
    """
    if len(vectors) < 2:
        raise ValueError("agglomerate needs at least 2 vectors")
    if callable(similarity):
        simfn = similarity
    else:
        try:
            simfn = _SIMILARITIES[similarity]
        except KeyError:
            raise ValueError(
                f"similarity must be one of {sorted(_SIMILARITIES)} or a callable") from None

    nodes: dict[int, Node] = {i: Leaf(v.symbol) for i, v in enumerate(vectors)}
    sizes: dict[int, int] = {i: 1 for i in nodes}
    min_leaf: dict[int, str] = {i: v.symbol for i, v in enumerate(vectors)}
    sims: dict[tuple[int, int], float] = {}
    ids = sorted(nodes)
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            sims[(ids[a], ids[b])] = simfn(vectors[ids[a]], vectors[ids[b]])

    next_id = len(vectors)
    active = set(nodes)
    previous = math.inf
    while len(active) > 1:
        best_key = None
        best_sim = -math.inf
        best_tie = None
        for (a, b), s in sims.items():
            tie = tuple(sorted((min_leaf[a], min_leaf[b])))
            if s > best_sim or (s == best_sim and tie < best_tie):
                best_key, best_sim, best_tie = (a, b), s, tie
        assert best_key is not None
        assert best_sim <= previous + 1e-9, "average-linkage similarity increased root-ward"
        previous = best_sim
        a, b = best_key
        if min_leaf[b] < min_leaf[a]:
            a, b = b, a
        merged = Merge(nodes[a], nodes[b], best_sim)
        nodes[next_id] = merged
        sizes[next_id] = sizes[a] + sizes[b]
        min_leaf[next_id] = min(min_leaf[a], min_leaf[b])
        active.discard(a)
        active.discard(b)
        for c in active:
            sa = sims.pop(_key(a, c))
            sb = sims.pop(_key(b, c))
            sims[_key(next_id, c)] = (sizes[a] * sa + sizes[b] * sb) / (sizes[a] + sizes[b])
        sims.pop(_key(a, b), None)
        active.add(next_id)
        next_id += 1
    return nodes[next_id - 1]


def to_newick(root: Node) -> str:
    """Serialize a dendrogram as Newick, merge similarity as node annotation."""
    def render(node: Node) -> str:
        if isinstance(node, Leaf):
            return _escape_label(node.symbol)
        return f"({render(node.left)},{render(node.right)}){node.similarity:g}"
    return render(root) + ";"


def similarity_matrix(vectors: list[SymbolVector],
                      similarity: Union[str, Callable] = "jaccard",
                      ) -> list[tuple[str, str, float]]:
    """All unordered symbol pairs with their similarity, sorted."""
    simfn = _SIMILARITIES[similarity] if not callable(similarity) else similarity
    out = []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            u, v = vectors[i], vectors[j]
            a, b = sorted((u.symbol, v.symbol))
            out.append((a, b, simfn(u, v)))
    out.sort(key=lambda r: (r[0], r[1]))
    return out


_NEWICK_UNSAFE = frozenset("()[]{}':;,=\"")


def _escape_label(symbol: str) -> str:
    if symbol and not any(c in _NEWICK_UNSAFE or c.isspace() for c in symbol):
        return symbol
    return "'" + symbol.replace("'", "''") + "'"


def _key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)
