"""Shared tokenizer: lowercased words for Latin spans, character bigrams for CJK spans."""

from __future__ import annotations

import re

_WORD = re.compile(r"[A-Za-z0-9]+")
_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
)


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    cjk_run: list[str] = []

    def flush_cjk() -> None:
        if not cjk_run:
            return
        if len(cjk_run) == 1:
            tokens.append(cjk_run[0])
        else:
            tokens.extend(cjk_run[i] + cjk_run[i + 1] for i in range(len(cjk_run) - 1))
        cjk_run.clear()

    i = 0
    while i < len(text):
        ch = text[i]
        if _is_cjk(ch):
            cjk_run.append(ch)
            i += 1
            continue
        flush_cjk()
        match = _WORD.match(text, i)
        if match:
            tokens.append(match.group(0).lower())
            i = match.end()
        else:
            i += 1
    flush_cjk()
    return tokens
