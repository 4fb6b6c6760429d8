"""Command-line surface: train, compress, tokenize, evaluate, grid, cluster.

Exit discipline: 0 success, 1 I/O or data error, 2 usage error.  Every run is
reproducible from its flags alone; commands that write an output echo the
effective flag set to a `<out>.config` sidecar.
"""
from __future__ import annotations

import argparse
import itertools
import os
import sys
from functools import reduce

from . import cluster as cluster_mod
from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import model as model_mod
from .tokenize import (DelimiterTokenizer, FreedomTokenizer, LexiconTokenizer,
                       RECORD_SEPARATOR, TokenizerConfig, reference_from_file)

try:
    import resource
except ImportError:  # pragma: no cover - non-POSIX platforms
    resource = None


class UsageError(Exception):
    """Bad flag combination or value; maps to exit code 2."""


class MemoryBudgetError(RuntimeError):
    """Training exceeded the configured memory budget."""


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, MemoryBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freetok",
        description="Unsupervised character-level tokenization from n-gram "
                    "transition statistics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an n-gram transition model on corpora")
    p.add_argument("--corpus", action="append", required=True, metavar="PATH",
                   help="training corpus file; repeat for several files")
    p.add_argument("--max-n", type=int, default=1, help="highest n-gram rank (default 1)")
    p.add_argument("--mode", choices=model_mod.MODES, default="chars",
                   help="transition targets: single symbols or same-rank n-grams")
    p.add_argument("--json-fields", default=None, metavar="F1,F2",
                   help="treat corpora as JSON-per-line and extract these fields")
    p.add_argument("--out", required=True, help="model output path (.gz for gzip)")
    p.add_argument("--shards", type=int, default=1,
                   help="train this many shard models and merge them (default 1)")
    p.add_argument("--max-mem-gb", type=float, default=None,
                   help="abort instead of thrashing when peak RSS exceeds this")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compress", help="prune low-evidence grams and transitions")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("tokenize", help="tokenize lines with a trained model")
    _add_tokenizer_flags(p)
    p.add_argument("--input", default="-", help="input file, or - for stdin (default)")
    p.add_argument("--strip-spaces", action="store_true",
                   help="remove all whitespace from each line before tokenizing")
    p.add_argument("--pretty", action="store_true",
                   help="separate tokens with | and show spaces as ␣")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("evaluate", help="score the tokenizer against a reference")
    _add_tokenizer_flags(p)
    _add_eval_flags(p)
    p.add_argument("--lexicon-precision", default=None, metavar="PATH",
                   help="also report lexicon-discovery precision against this lexicon")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="hyperparameter grid search with CSV reports")
    p.add_argument("--model", required=True)
    _add_eval_flags(p)
    p.add_argument("--grid", required=True, metavar="PATH", help="grid config file")
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.add_argument("--split", choices=("half1", "half2"), default=None,
                   help="evaluate on the first or last half of the test rows")
    p.add_argument("--cumulative-compression", action="store_true",
                   help="re-prune the previous compression level instead of a fresh copy")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads for per-line scoring (default: cores)")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("cluster", help="cluster unigram symbols into a dendrogram")
    p.add_argument("--model", required=True)
    p.add_argument("--similarity", choices=("cosine", "jaccard"), default="jaccard")
    p.add_argument("--min-count", type=int, default=2,
                   help="ignore symbols seen fewer times than this (default 2)")
    p.add_argument("--out", required=True, help="Newick output path")
    p.add_argument("--matrix", default=None, metavar="PATH",
                   help="also write the full similarity matrix as TSV")
    p.set_defaults(func=cmd_cluster)

    return parser


def _add_tokenizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--metrics", default="dvf-,dvf+",
                   help="metric mnemonic or backward,forward pair (default dvf-,dvf+)")
    p.add_argument("--n", default="1", metavar="N[+N...]",
                   help="rank set, e.g. 1 or 1+2 (default 1)")
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--compression", type=float, default=0.0,
                   help="model compression threshold applied before tokenizing")


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--test", required=True, help="parallel TSV test corpus with header row")
    p.add_argument("--column", required=True, help="test corpus column to evaluate")
    p.add_argument("--reference", required=True,
                   help="delimiter, lexicon:<path>, or file:<path>")
    p.add_argument("--lexicon-sortmode", choices=("length", "frequency", "gamma"),
                   default="length", help="greedy key for lexicon: references")


def cmd_train(args) -> int:
    if args.max_n < 1:
        raise UsageError(f"--max-n must be >= 1, got {args.max_n}")
    if args.shards < 1:
        raise UsageError(f"--shards must be >= 1, got {args.shards}")
    guard = _MemoryGuard(args.max_mem_gb) if args.max_mem_gb else None
    lines = itertools.chain.from_iterable(
        corpus_mod.read_lines(path) for path in args.corpus)
    if args.json_fields:
        fields = [f for f in (s.strip() for s in args.json_fields.split(",")) if f]
        if not fields:
            raise UsageError("--json-fields must name at least one field")
        lines = corpus_mod.extract_json_fields(lines, fields)
    shards = [model_mod.NGramModel(max_n=args.max_n, mode=args.mode)
              for _ in range(args.shards)]
    trained = _train_streaming(shards, lines, guard)
    model = reduce(model_mod.merge, shards) if len(shards) > 1 else shards[0]
    model.save(args.out)
    _write_sidecar(args.out, args)
    print(f"lines {trained}")
    print(f"params {model.count_params()}")
    return 0


def cmd_compress(args) -> int:
    if not 0.0 <= args.threshold <= 1.0:
        raise UsageError(f"--threshold must be in [0, 1], got {args.threshold}")
    model = model_mod.load(args.model)
    print(f"params before {model.count_params()}")
    compressed = model_mod.compress(model, args.threshold)
    print(f"params after {compressed.count_params()}")
    compressed.save(args.out)
    _write_sidecar(args.out, args)
    return 0


def cmd_tokenize(args) -> int:
    tokenizer = FreedomTokenizer(model_mod.load(args.model), _config_from_flags(args))
    if args.input == "-":
        lines = (raw[:-1] if raw.endswith("\n") else raw for raw in sys.stdin)
    else:
        lines = corpus_mod.read_lines(args.input)
    for line in lines:
        if args.strip_spaces:
            line = corpus_mod.strip_spaces(line)
        tokens = tokenizer.tokenize(line)
        if args.pretty:
            print("|".join(t.text.replace(" ", "␣") for t in tokens))
        else:
            print(RECORD_SEPARATOR.join(t.text for t in tokens))
    return 0


def cmd_evaluate(args) -> int:
    model = model_mod.load(args.model)
    texts = corpus_mod.read_parallel_tsv(args.test, args.column)
    reference = _reference_from_flag(args, texts)
    candidate = FreedomTokenizer(model, _config_from_flags(args))
    result = eval_mod.evaluate(texts, reference, candidate)
    for i, (precision, recall, f1) in enumerate(result.per_text):
        print(f"text {i}\tP={precision:.4f}\tR={recall:.4f}\tF1={f1:.4f}")
    print(f"mean F1 = {result.mean_f1:.4f} ({len(texts)} texts)")
    if args.lexicon_precision:
        lexicon = corpus_mod.read_lexicon(args.lexicon_precision).with_delimiters()
        for label, counts in (("expected", result.expected_tokens),
                              ("actual", result.actual_tokens)):
            total = sum(counts.values())
            if total == 0:
                print(f"{label} tokens: total=0")
                continue
            ratio = eval_mod.lexicon_precision(counts, lexicon)
            relevant = round(ratio * total)
            print(f"{label} tokens: total={total} relevant={relevant} "
                  f"irrelevant={total - relevant} precision={ratio:.4f}")
    return 0


def cmd_grid(args) -> int:
    if args.threads < 1:
        raise UsageError(f"--threads must be >= 1, got {args.threads}")
    model = model_mod.load(args.model)
    texts = corpus_mod.read_parallel_tsv(args.test, args.column)
    if args.split == "half1":
        texts = texts[:len(texts) // 2]
    elif args.split == "half2":
        texts = texts[len(texts) // 2:]
    reference = _reference_from_flag(args, texts)
    try:
        grid = eval_mod.GridSpec.from_file(args.grid)
    except ValueError as exc:
        raise UsageError(f"bad grid file: {exc}") from None
    rows = eval_mod.grid_search(model, texts, reference, grid,
                                cumulative_compression=args.cumulative_compression,
                                threads=args.threads)
    os.makedirs(args.out, exist_ok=True)
    eval_mod.write_grid_csv(rows, os.path.join(args.out, "results.csv"))
    eval_mod.emit_heatmap(rows, args.out)
    best = eval_mod.best_row(rows)
    eval_mod.write_grid_csv([best], os.path.join(args.out, "best.csv"))
    _write_sidecar(os.path.join(args.out, "run"), args)
    print(f"rows {len(rows)}")
    print(f"best metric={best.metric_label} n_set={best.n_set_label} "
          f"compression={best.compression:g} threshold={best.threshold:g} "
          f"mean_f1={best.mean_f1:.4f}")
    return 0


def cmd_cluster(args) -> int:
    model = model_mod.load(args.model)
    vectors = cluster_mod.symbol_vectors(model, min_count=args.min_count)
    if len(vectors) < 2:
        raise ValueError(f"only {len(vectors)} symbol(s) pass --min-count {args.min_count}; "
                         "need at least 2 to cluster")
    root = cluster_mod.agglomerate(vectors, args.similarity)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cluster_mod.to_newick(root) + "\n")
    if args.matrix:
        with open(args.matrix, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("symbol_a\tsymbol_b\tsimilarity\n")
            for a, b, s in cluster_mod.similarity_matrix(vectors, args.similarity):
                fh.write(f"{a}\t{b}\t{s:g}\n")
    _write_sidecar(args.out, args)
    print(f"leaves {len(vectors)}")
    return 0


def _config_from_flags(args) -> TokenizerConfig:
    try:
        n_set = tuple(int(n) for n in args.n.split("+"))
        return TokenizerConfig.from_mnemonics(args.metrics, n_set=n_set,
                                              threshold=args.threshold,
                                              compression=args.compression)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _reference_from_flag(args, texts):
    spec = args.reference
    if spec == "delimiter":
        return DelimiterTokenizer()
    if spec.startswith("lexicon:"):
        lexicon = corpus_mod.read_lexicon(spec[len("lexicon:"):]).with_delimiters()
        return LexiconTokenizer(lexicon, sortmode=args.lexicon_sortmode)
    if spec.startswith("file:"):
        records = reference_from_file(spec[len("file:"):], texts)
        return [records[i] for i in range(len(texts))]
    raise UsageError(f"--reference must be delimiter, lexicon:<path> or file:<path>, "
                     f"got {spec!r}")


def _train_streaming(shards, lines, guard, batch_size: int = 4096) -> int:
    buffers = [[] for _ in shards]
    count = 0
    for line in lines:
        idx = count % len(shards)
        buffers[idx].append(line)
        count += 1
        if len(buffers[idx]) >= batch_size:
            shards[idx].train(buffers[idx])
            buffers[idx].clear()
            if guard:
                guard.check()
    for idx, buffer in enumerate(buffers):
        if buffer:
            shards[idx].train(buffer)
    if guard:
        guard.check()
    return count


class _MemoryGuard:
    def __init__(self, max_gb: float):
        if max_gb <= 0:
            raise UsageError(f"--max-mem-gb must be positive, got {max_gb}")
        self.max_gb = max_gb
        if resource is None:
            print("warning: resource module unavailable, --max-mem-gb ignored",
                  file=sys.stderr)

    def check(self) -> None:
        if resource is None:
            return
        # ru_maxrss is KiB on Linux.
        used_gb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / (1024 ** 2)
        if used_gb > self.max_gb:
            raise MemoryBudgetError(
                f"peak memory {used_gb:.2f} GiB exceeds --max-mem-gb {self.max_gb}; "
                "lower --max-n, use fewer shards, or raise the budget")


def _write_sidecar(out_path, args) -> None:
    skip = {"func"}
    with open(f"{out_path}.config", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"command={args.command}\n")
        for key in sorted(vars(args)):
            if key in skip or key == "command":
                continue
            value = getattr(args, key)
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            fh.write(f"{key}={value}\n")


if __name__ == "__main__":
    sys.exit(main())
