"""
Extract the proposed rank vector from a free-form LLM reply.
"""
import re

from errors import (
    MissingSolutionLineError,
    NonIntegerRankError,
    RankOutOfBoundsError,
    SolutionArityError,
)
from tensors.network import TNStructure, num_edges

# Tolerates markdown emphasis or code ticks around the line.
SOLUTION_LINE = re.compile(
    r"^[ \t>*`_]*RANKS[ \t]*:[ \t]*\[(?P<body>[^\]\n]*)\][ \t*`_.]*$",
    re.MULTILINE,
)
INTEGER = re.compile(r"[+-]?\d+")


def format_solution(structure: TNStructure) -> str:
    return f"RANKS: {structure}"


def parse_solution(reply: str, order: int, rank_max: int, rank_min: int = 1) -> tuple[TNStructure, str]:
    """
    Parse the last `RANKS: [...]` line of `reply`.

    Returns the structure and the reasoning text that precedes the line. CRLF and CR line
    endings are read as LF.
    """
    reply = (reply or "").replace("\r\n", "\n").replace("\r", "\n")
    matches = list(SOLUTION_LINE.finditer(reply))
    if not matches:
        raise MissingSolutionLineError("Reply has no line of the form 'RANKS: [k_12, k_13, ...]'")
    match = matches[-1]
    body = match.group("body").strip()
    tokens = [t.strip() for t in body.split(",")] if body else []

    expected = num_edges(order)
    if len(tokens) != expected:
        raise SolutionArityError(
            f"Expected {expected} ranks for an order-{order} tensor, got {len(tokens)}"
        )
    ranks = []
    for position, token in enumerate(tokens, start=1):
        if not INTEGER.fullmatch(token):
            raise NonIntegerRankError(f"Rank #{position} is not an integer: {token!r}")
        value = int(token)
        if not rank_min <= value <= rank_max:
            raise RankOutOfBoundsError(
                f"Rank #{position} = {value} is outside [{rank_min}, {rank_max}]"
            )
        ranks.append(value)

    reasoning = reply[:match.start()].strip()
    return TNStructure(order, tuple(ranks)), reasoning
