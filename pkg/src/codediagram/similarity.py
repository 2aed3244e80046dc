"""Token-set similarity and greedy dedup kernels.

The greedy near-duplicate scan is the one hot loop in corpus curation: it is
quadratic in file count with a token-set intersection inside. Both an @njit
kernel and a pure-numpy twin are provided; CODEDIAGRAM_DISABLE_NUMBA=1 (or an
unavailable numba) selects the fallback. Results are bit-identical.
"""

from __future__ import annotations

import logging
import os
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

try:
    from numba import njit

    _NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay importable
    _NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


_ENV_FLAG = "CODEDIAGRAM_DISABLE_NUMBA"


def numba_enabled() -> bool:
    return _NUMBA_AVAILABLE and os.environ.get(_ENV_FLAG, "") not in ("1", "true", "yes")


def tokenize(text: str) -> list[str]:
    """Whitespace-delimited unigrams."""
    return text.split()


def jaccard_unigram(a: str, b: str) -> float:
    """Jaccard similarity over unigram token sets; two empty sets count as identical."""
    set_a = set(tokenize(a))
    set_b = set(tokenize(b))
    if not set_a and not set_b:
        return 1.0
    return len(set_a & set_b) / len(set_a | set_b)


def encode_token_sets(texts: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Map each text to a sorted array of vocab indices, packed flat with offsets."""
    vocabulary: dict[str, int] = {}
    encoded: list[np.ndarray] = []
    for text in texts:
        indices = {vocabulary.setdefault(token, len(vocabulary)) for token in tokenize(text)}
        encoded.append(np.array(sorted(indices), dtype=np.int64))
    offsets = np.zeros(len(texts) + 1, dtype=np.int64)
    for i, arr in enumerate(encoded):
        offsets[i + 1] = offsets[i] + arr.size
    flat = (
        np.concatenate(encoded) if encoded and offsets[-1] else np.zeros(0, dtype=np.int64)
    )
    return flat, offsets


@njit(cache=True)
def _greedy_dedup_numba(
    tokens: np.ndarray, offsets: np.ndarray, threshold: float
):  # pragma: no cover - exercised via dispatch
    n = offsets.shape[0] - 1
    keep = np.ones(n, dtype=np.bool_)
    matched = np.full(n, -1, dtype=np.int64)
    similarity = np.zeros(n, dtype=np.float64)
    for i in range(n):
        a_lo, a_hi = offsets[i], offsets[i + 1]
        for j in range(i):
            if not keep[j]:
                continue
            b_lo, b_hi = offsets[j], offsets[j + 1]
            # merge walk over two sorted index arrays
            inter = 0
            p, q = a_lo, b_lo
            while p < a_hi and q < b_hi:
                va, vb = tokens[p], tokens[q]
                if va == vb:
                    inter += 1
                    p += 1
                    q += 1
                elif va < vb:
                    p += 1
                else:
                    q += 1
            union = (a_hi - a_lo) + (b_hi - b_lo) - inter
            sim = 1.0 if union == 0 else inter / union
            if sim >= threshold:
                keep[i] = False
                matched[i] = j
                similarity[i] = sim
                break
    return keep, matched, similarity


def _greedy_dedup_numpy(
    tokens: np.ndarray, offsets: np.ndarray, threshold: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = offsets.shape[0] - 1
    keep = np.ones(n, dtype=np.bool_)
    matched = np.full(n, -1, dtype=np.int64)
    similarity = np.zeros(n, dtype=np.float64)
    sets = [tokens[offsets[i] : offsets[i + 1]] for i in range(n)]
    for i in range(n):
        for j in range(i):
            if not keep[j]:
                continue
            inter = np.intersect1d(sets[i], sets[j], assume_unique=True).size
            union = sets[i].size + sets[j].size - inter
            sim = 1.0 if union == 0 else inter / union
            if sim >= threshold:
                keep[i] = False
                matched[i] = j
                similarity[i] = float(sim)
                break
    return keep, matched, similarity


def greedy_dedup_mask(
    texts: Sequence[str], threshold: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Greedy first-kept-wins duplicate mask over texts in the given order.

    Returns (keep, matched_index, similarity); matched_index is -1 for kept rows.
    """
    tokens, offsets = encode_token_sets(texts)
    if numba_enabled():
        return _greedy_dedup_numba(tokens, offsets, float(threshold))
    return _greedy_dedup_numpy(tokens, offsets, float(threshold))
