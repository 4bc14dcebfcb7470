"""Global character alignment between an annotator's rewritten answer and
the original answer.

Annotators are instructed to copy the answer verbatim apart from the
inserted markers, but real model output drifts (typo fixes, dropped
punctuation, partial rewrites). A global alignment maps each character of
the cleaned rewrite back to an original offset so marked spans can be
projected onto the original answer, and its score gates whether the run is
trusted at all.

Scoring is unweighted: match +1, mismatch 0, gap 0, so the optimal score
is the length of the longest common subsequence. The dynamic program runs
row by row on numpy arrays; with zero gap cost each row is the cumulative
maximum of the candidate scores, which keeps the inner loop vectorized.
Memory is quadratic in the text lengths, which is fine at answer scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpanLabel
from .marking import ParsedMarking


@dataclass(frozen=True)
class AlignmentResult:
    """Per-character mapping from the cleaned text onto the original.

    ``mapping[i]`` is the original-answer index aligned with character
    ``i`` of the cleaned text, or None where the character has no
    counterpart. Mapped indices are strictly increasing. ``similarity``
    is matched characters divided by the longer length; it is 1.0 exactly
    when the two texts are equal.
    """

    mapping: tuple[int | None, ...]
    similarity: float


def align(clean: str, original: str) -> AlignmentResult:
    """Globally align ``clean`` against ``original``.

    Ties are broken deterministically, preferring match, then
    substitution, then deleting a character of ``clean``, then skipping a
    character of ``original``. Substituted pairs are kept in the mapping;
    only deletions leave gaps.
    """
    m, n = len(clean), len(original)
    if m == 0 and n == 0:
        return AlignmentResult((), 1.0)
    if m == 0 or n == 0:
        return AlignmentResult((None,) * m, 0.0)

    a = np.fromiter((ord(c) for c in clean), dtype=np.int64, count=m)
    b = np.fromiter((ord(c) for c in original), dtype=np.int64, count=n)

    score = np.zeros((m + 1, n + 1), dtype=np.int32)
    for i in range(1, m + 1):
        candidates = np.maximum(
            score[i - 1, :-1] + (b == a[i - 1]),
            score[i - 1, 1:],
        )
        np.maximum.accumulate(candidates, out=candidates)
        score[i, 1:] = candidates

    mapping: list[int | None] = [None] * m
    i, j = m, n
    while i > 0 and j > 0:
        cur = score[i, j]
        diag = score[i - 1, j - 1]
        if a[i - 1] == b[j - 1] and cur == diag + 1:
            mapping[i - 1] = j - 1
            i -= 1
            j -= 1
        elif a[i - 1] != b[j - 1] and cur == diag:
            mapping[i - 1] = j - 1
            i -= 1
            j -= 1
        elif cur == score[i - 1, j]:
            i -= 1
        else:
            j -= 1

    similarity = float(score[m, n]) / float(max(m, n))
    return AlignmentResult(tuple(mapping), similarity)


def project_spans(parsed: ParsedMarking, alignment: AlignmentResult) -> list[SpanLabel]:
    """Map marked spans from the cleaned text onto original-answer offsets.

    Each span becomes the smallest original range covering its aligned
    characters; spans aligned entirely to gaps are dropped. The result is
    sorted and overlap-free.
    """
    projected: list[SpanLabel] = []
    for span in parsed.marked_spans:
        mapped = [
            alignment.mapping[i]
            for i in range(span.start, span.end)
            if alignment.mapping[i] is not None
        ]
        if not mapped:
            continue
        projected.append(SpanLabel(min(mapped), max(mapped) + 1))

    projected.sort(key=lambda s: (s.start, s.end))
    merged: list[SpanLabel] = []
    for span in projected:
        if merged and span.start < merged[-1].end:
            merged[-1] = SpanLabel(merged[-1].start, max(merged[-1].end, span.end))
        else:
            merged.append(span)
    return merged


def validate_run(alignment: AlignmentResult, min_similarity: float = 0.7) -> bool:
    """Accept a run when its rewrite stayed close enough to the original."""
    return alignment.similarity >= min_similarity
