"""Surface-key normalization applied before any inventory lookup or clustering."""

from __future__ import annotations

_FULLWIDTH_TO_ASCII = {chr(c): chr(c - 0xFEE0) for c in range(0xFF01, 0xFF5F)}
_FULLWIDTH_TO_ASCII["　"] = " "  # ideographic space

_TRAILING_DELIMS = set("：:＝=、.。")

_BRACKET_PAIRS = {
    "(": ")",
    "（": "）",
    "[": "]",
    "【": "】",
    "《": "》",
    "〈": "〉",
    "「": "」",
    "『": "』",
    "{": "}",
    "｛": "｝",
    "<": ">",
}


def _one_pass(s: str) -> str:
    s = "".join(_FULLWIDTH_TO_ASCII.get(ch, ch) for ch in s)
    s = "".join(ch.lower() if "A" <= ch <= "Z" else ch for ch in s)
    s = " ".join(s.split())
    while s and s[-1] in _TRAILING_DELIMS:
        s = s[:-1]
    s = s.rstrip()
    if len(s) >= 2 and s[0] in _BRACKET_PAIRS and s[-1] == _BRACKET_PAIRS[s[0]]:
        s = s[1:-1]
    return s


def normalize_key(raw: str) -> str:
    """Canonical text form of a surface key.

    Folds fullwidth ASCII to halfwidth, lowercases Latin letters, collapses
    whitespace runs, strips trailing delimiter characters and surrounding
    bracket pairs. Iterates to a fixpoint, so the function is idempotent and
    never lengthens its input; an empty result is returned as "".
    """
    prev = None
    cur = raw
    while cur != prev:
        prev = cur
        cur = _one_pass(cur)
    return cur
