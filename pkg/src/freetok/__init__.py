"""Unsupervised character-level tokenization from n-gram transition statistics."""

from .model import NGramModel, compress, load, merge
from .metrics import (MetricKind, MetricProfile, boundary_scores, derivative,
                      normalize, peak, raw_profile, variance)
from .tokenize import (DelimiterTokenizer, FreedomTokenizer, Lexicon,
                       LexiconTokenizer, Token, TokenizerConfig,
                       delimiter_tokenize, freedom_tokenize, lexicon_tokenize,
                       reference_from_file)
from .corpus import (ParallelTestSet, extract_json_fields, read_lexicon,
                     read_lines, read_parallel_tsv, strip_spaces)
from .evaluation import (EvalResult, GridRow, GridSpec, best_row, emit_heatmap,
                         evaluate, f1_tokens, grid_search, lexicon_precision)
from .cluster import (SymbolVector, agglomerate, cosine, jaccard,
                      symbol_vectors, to_newick)

__version__ = "0.1.0"
