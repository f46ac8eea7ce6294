"""Final-answer normalization and matching.

Scoring of final answers is deliberately judge-free: answers are compared
under a fixed normalization (casefold, whitespace collapse, terminal
punctuation strip) against the gold answer and its accepted variants.
"""

from __future__ import annotations

import re

_WS = re.compile(r"\s+")
_TERMINAL_PUNCT = ".,;:!?"


def normalize_answer(raw: str) -> str:
    """Normalize an answer string for exact-match comparison.

    Casefolds, collapses internal whitespace to single spaces, strips
    surrounding whitespace and terminal punctuation. Total and idempotent.
    """
    s = _WS.sub(" ", raw.casefold()).strip()
    s = s.rstrip(_TERMINAL_PUNCT).strip()
    return s


def answer_matches(candidate: str, gold_answer: str, accepted_variants: list[str] | None = None) -> bool:
    """True iff the candidate normalizes to the gold answer or any variant."""
    cand = normalize_answer(candidate)
    if cand == normalize_answer(gold_answer):
        return True
    for variant in accepted_variants or []:
        if cand == normalize_answer(variant):
            return True
    return False
