"""Comment extraction, keyword scoring, and the comment feature vector.

Comments (``//``, ``///``, ``/* */``, ``/** */``) are lexed out of the
source while skipping string literals, tokenized on non-alphanumerics,
lowercased and cleaned against a versioned stopword list. Tokens are then
embedded with the deterministic hashing embedder, passed through a stack of
one-dimensional convolutions, and scored with dot-product self-attention;
per-position attention mass drives both the keyword ranking and the
weighted pooling that yields the contract's comment feature vector.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .autodiff import Tensor, concat, data_of, relu, softmax_rows, tsum, zeros
from .errors import EmptyCorpus
from .hashing import embed_tokens

_TOKEN_RE = re.compile(r"[0-9a-z]+")
_MIN_TOKEN_LEN = 2

#: Keyword count rule: one keyword per 25 tokens, between 1 and 20.
KEYWORDS_PER_TOKENS = 25
MAX_KEYWORDS = 20


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("contractlens").joinpath("data/stopwords.txt").read_text()
    else:
        text = Path(path).read_text()
    words = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


_DEFAULT_STOPWORDS: frozenset[str] | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = load_stopwords()
    return _DEFAULT_STOPWORDS


@dataclass
class CommentCorpus:
    contract_name: str
    tokens: list[str]
    raw_comment_spans: list[tuple[int, int]]  # (start, end) source offsets

    def __bool__(self) -> bool:
        return bool(self.tokens)


def comment_spans(source: str) -> list[tuple[int, int]]:
    """Offsets of every comment, delimiters included; string literals skipped."""
    spans = []
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c in "\"'":
            quote = c
            i += 1
            while i < n:
                if source[i] == "\\":
                    i += 2
                    continue
                if source[i] == quote:
                    i += 1
                    break
                i += 1
        elif c == "/" and i + 1 < n and source[i + 1] == "/":
            end = source.find("\n", i)
            end = n if end == -1 else end
            spans.append((i, end))
            i = end
        elif c == "/" and i + 1 < n and source[i + 1] == "*":
            end = source.find("*/", i + 2)
            end = n if end == -1 else end + 2
            spans.append((i, end))
            i = end
        else:
            i += 1
    return spans


def tokenize(text: str, stopwords: frozenset[str]) -> list[str]:
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) >= _MIN_TOKEN_LEN and tok not in stopwords:
            out.append(tok)
    return out


def extract_comments(source_text: str, contract_name: str = "contract.sol",
                     stopwords: frozenset[str] | None = None) -> CommentCorpus:
    """Comment corpus of a source file; comment-free source -> empty corpus."""
    if stopwords is None:
        stopwords = default_stopwords()
    spans = comment_spans(source_text)
    tokens: list[str] = []
    for start, end in spans:
        tokens.extend(tokenize(source_text[start:end], stopwords))
    return CommentCorpus(contract_name=contract_name, tokens=tokens,
                         raw_comment_spans=spans)


@dataclass
class KeywordReport:
    contract_name: str
    ranked: list[tuple[str, float]]  # (token, attention weight), non-increasing
    k: int


def keyword_count(token_count: int) -> int:
    return max(1, min(MAX_KEYWORDS, math.ceil(token_count / KEYWORDS_PER_TOKENS)))


def _conv1d_same(x, layer):
    """1-D convolution over the token axis with zero same-padding.

    x: (T, c_in); layer.w: (kernel, c_in, c_out); layer.b: (c_out,).
    """
    t = data_of(x).shape[0]
    kernel = data_of(layer.w).shape[0]
    pad = kernel // 2
    c_in = data_of(x).shape[1]
    if pad:
        z = zeros((pad, c_in))
        x = concat([z, x, z], axis=0)
    out = None
    for k in range(kernel):
        term = x[k:k + t] @ layer.w[k]
        out = term if out is None else out + term
    return out + layer.b


def _conv_stack(x, params):
    h = x
    for layer in params.convs:
        h = relu(_conv1d_same(h, layer))
    return h


def _attention_weights(h):
    """Per-position attention mass from dot-product self-attention.

    Scores = column sums of the row-softmaxed H H^T / sqrt(d) matrix,
    normalized by T so they sum to one.
    """
    t, d = data_of(h).shape
    scores = softmax_rows((h @ h.T) / math.sqrt(d))
    col_mass = tsum(scores, axis=0)
    return col_mass / float(t)


def comment_forward(tokens: list[str], params, embed_dim: int):
    """Shared forward pass: (per-position weights, conv features, pooled 512)."""
    emb = embed_tokens(tokens, embed_dim)
    if isinstance(params.proj_w, Tensor):
        emb = Tensor(emb)
    h = _conv_stack(emb, params)
    weights = _attention_weights(h)
    pooled = weights @ h
    feature = params.proj_w @ pooled + params.proj_b
    return weights, h, feature


def score_keywords(corpus: CommentCorpus, params, embed_dim: int) -> KeywordReport:
    """Rank tokens by summed attention mass; k scales with corpus length."""
    if not corpus.tokens:
        raise EmptyCorpus(f"no tokens for {corpus.contract_name}")
    weights, _, _ = comment_forward(corpus.tokens, params, embed_dim)
    weights = data_of(weights)
    mass: dict[str, float] = {}
    for tok, w in zip(corpus.tokens, weights):
        mass[tok] = mass.get(tok, 0.0) + float(w)
    ranked = sorted(mass.items(), key=lambda kv: (-kv[1], kv[0]))
    k = keyword_count(len(corpus.tokens))
    return KeywordReport(contract_name=corpus.contract_name, ranked=ranked[:k], k=k)


def comment_features(corpus: CommentCorpus, params, embed_dim: int):
    """Attention-weighted pooled feature vector; empty corpus -> zero vector.

    Returns (vector, no_comments_flag).
    """
    out_dim = data_of(params.proj_b).shape[0]
    if not corpus.tokens:
        return np.zeros(out_dim), True
    _, _, feature = comment_forward(corpus.tokens, params, embed_dim)
    return feature, False


def keyword_frequency_table(reports: list[KeywordReport]) -> str:
    """CSV across reports: token, total attention weight, document count."""
    totals: dict[str, float] = {}
    docs: dict[str, int] = {}
    for report in reports:
        for tok, w in report.ranked:
            totals[tok] = totals.get(tok, 0.0) + w
            docs[tok] = docs.get(tok, 0) + 1
    rows = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    lines = ["token,total_weight,document_count"]
    for tok, total in rows:
        lines.append(f"{tok},{total!r},{docs[tok]}")
    return "\n".join(lines) + "\n"
