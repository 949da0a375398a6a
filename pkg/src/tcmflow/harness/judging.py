"""Automated pairwise judging with positional debiasing."""

from __future__ import annotations

from dataclasses import dataclass

from tcmflow import prompts
from tcmflow.gateway.base import ChatBackend, ChatExchange, chat

DIMENSIONS = ("proactiveness", "accuracy", "practicality", "overall")

_VALID = {"A", "B", "TIE"}


class UnparseableVerdict(RuntimeError):
    pass


@dataclass(frozen=True)
class PairwiseOutcome:
    case_id: str
    verdict: str  # win / loss / tie, from output_a's perspective
    dimension: str


def _ask(first: str, second: str, dimension: str, gateway: ChatBackend) -> str:
    system, user = prompts.judge_prompt(dimension, first, second)
    for attempt in range(2):
        exchange = chat(ChatExchange(system=system, user=user), gateway)
        token = (exchange.response or "").strip().upper().rstrip(".")
        if token in _VALID:
            return token
    raise UnparseableVerdict(f"judge output not in {{A, B, TIE}} after retry: {token!r}")


def pairwise_judge(
    output_a: str,
    output_b: str,
    dimension: str,
    judge_gateway: ChatBackend,
    case_id: str = "",
) -> PairwiseOutcome:
    """Judge both presentation orders; disagreement between orders becomes a tie."""
    if dimension not in DIMENSIONS:
        raise ValueError(f"dimension must be one of {DIMENSIONS}")
    forward = _ask(output_a, output_b, dimension, judge_gateway)
    backward_raw = _ask(output_b, output_a, dimension, judge_gateway)
    backward = {"A": "B", "B": "A", "TIE": "TIE"}[backward_raw]
    agreed = forward if forward == backward else "TIE"
    verdict = {"A": "win", "B": "loss", "TIE": "tie"}[agreed]
    return PairwiseOutcome(case_id=case_id, verdict=verdict, dimension=dimension)
