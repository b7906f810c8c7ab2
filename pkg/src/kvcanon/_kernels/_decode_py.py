"""Pure-Python (numpy) span decode kernel; semantics mirror the compiled twin.

Bit-for-bit agreement with the extension is by construction: identical
selection rules, identical summation order (row cumsums add 0.0 for masked
elements, which is exact), and the final candidate is the unique minimizer of
(-score, start, length), which is iteration-order independent.
"""

from __future__ import annotations

import numpy as np

_NO_ANSWER = (-1, -1, float("-inf"), False)


def decode_best_span(
    start_logits: np.ndarray,
    end_logits: np.ndarray,
    null_score: float,
    n_top: int,
    mass: float,
    cap: int,
    null_offset: float,
) -> tuple[int, int, float, bool]:
    """Best (start, inclusive end, score) under top-N enumeration with
    mass-admissible ends, or a no-answer marker.

    Candidates are the top-N starts crossed with the top-N ends (start <= end,
    end - start <= cap); an end is admissible for a start when it lies in the
    smallest descending-probability prefix of the renormalized end softmax
    over positions >= start reaching ``mass``. Ties break to the earliest
    start, then the shorter span. Returns (start, end_inclusive, score,
    has_answer); has_answer is False when the null score + offset beats the
    best candidate or no candidate is admissible.
    """
    start_logits = np.asarray(start_logits, dtype=np.float64)
    end_logits = np.asarray(end_logits, dtype=np.float64)
    length = start_logits.shape[0]
    if length == 0:
        return _NO_ANSWER
    n = min(n_top, length)

    # stable argsort on the negated logits = (logit desc, index asc)
    start_order = np.argsort(-start_logits, kind="stable")
    end_order = np.argsort(-end_logits, kind="stable")
    top_starts = start_order[:n]
    top_ends = end_order[:n]

    exps = np.exp(end_logits - end_logits.max())
    suffix = np.cumsum(exps[::-1])[::-1]

    sorted_exps = exps[end_order]
    pos_of = np.empty(length, dtype=np.int64)
    pos_of[end_order] = np.arange(length)

    # per-start masked cumsums over the sorted end order; masked entries add 0.0
    masked = sorted_exps[None, :] * (end_order[None, :] >= top_starts[:, None])
    cums = np.cumsum(masked, axis=1)

    ss = top_starts[:, None]
    ee = top_ends[None, :]
    valid = (ee >= ss) & (ee - ss <= cap)
    pos = pos_of[top_ends][None, :].repeat(n, axis=0)
    prev = pos - 1
    cum_before = np.where(prev >= 0, np.take_along_axis(cums, np.maximum(prev, 0), axis=1), 0.0)
    need = mass * suffix[top_starts]
    admissible = valid & (cum_before < need[:, None])
    if not admissible.any():
        return _NO_ANSWER

    si, ei = np.nonzero(admissible)
    starts = top_starts[si]
    ends = top_ends[ei]
    scores = start_logits[starts] + end_logits[ends]
    # unique minimizer of (-score, start, length); lexsort keys are last-primary
    best = np.lexsort((ends - starts, starts, -scores))[0]
    best_score = float(scores[best])
    if null_score + null_offset > best_score:
        return _NO_ANSWER
    return (int(starts[best]), int(ends[best]), best_score, True)
