import numpy as np
import pytest

from errors import (
    MissingSolutionLineError,
    NonIntegerRankError,
    RankOutOfBoundsError,
    SolutionArityError,
    SolutionParseError,
)
from tensors.network import TNStructure, num_edges
from utils.solution_parser import format_solution, parse_solution

PROSE = [
    "Height and width share strong spatial correlations.",
    "The colour channels vary little along either axis.",
    "A moderate rank keeps the parameter count in check.",
    "Trading a little error for compression seems worthwhile here.",
    "",
    "Previous evaluations suggest the last change helped.",
]


class TestParseSolution:
    def test_image_example(self):
        reply = "Width and height are tightly coupled.\nRGB needs little.\nRANKS: [20, 5, 5]"
        structure, reasoning = parse_solution(reply, order=3, rank_max=24)
        assert structure.ranks == (20, 5, 5)
        assert reasoning == "Width and height are tightly coupled.\nRGB needs little."

    def test_last_line_wins(self):
        reply = "First idea:\nRANKS: [1, 1, 1]\nOn reflection:\nRANKS: [2, 3, 1]\n"
        structure, reasoning = parse_solution(reply, 3, 4)
        assert structure.ranks == (2, 3, 1)
        assert "RANKS: [1, 1, 1]" in reasoning

    def test_whitespace_and_markdown(self):
        structure, _ = parse_solution("ok\n  **RANKS :[ 2 ,3,  4 ]**  ", 3, 4)
        assert structure.ranks == (2, 3, 4)

    def test_crlf_line_endings(self):
        reply = "Height and width couple strongly.\r\nRANKS: [20, 5, 5]\r\n"
        structure, reasoning = parse_solution(reply, 3, 32)
        assert structure.ranks == (20, 5, 5)
        assert reasoning == "Height and width couple strongly."

    def test_bare_cr_line_endings(self):
        structure, _ = parse_solution("ok\rRANKS: [2, 3, 4]\r", 3, 4)
        assert structure.ranks == (2, 3, 4)

    def test_missing_line(self):
        with pytest.raises(MissingSolutionLineError):
            parse_solution("I think ranks 2, 3 and 4 would work.", 3, 4)

    def test_wrong_arity(self):
        with pytest.raises(SolutionArityError):
            parse_solution("RANKS: [2, 3]", 3, 4)

    def test_non_integer(self):
        with pytest.raises(NonIntegerRankError):
            parse_solution("RANKS: [2.5, 3, 1]", 3, 4)

    def test_out_of_bounds_is_not_clipped(self):
        with pytest.raises(RankOutOfBoundsError, match="5"):
            parse_solution("RANKS: [5, 1, 1]", 3, 4)

    def test_zero_rank(self):
        with pytest.raises(RankOutOfBoundsError):
            parse_solution("RANKS: [0, 1, 1]", 3, 4)

    def test_empty_reply(self):
        with pytest.raises(MissingSolutionLineError):
            parse_solution("", 3, 4)


class TestParserFuzz:
    def test_random_structures_round_trip(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            order = int(rng.integers(2, 6))
            rank_max = int(rng.integers(1, 30))
            structure = TNStructure(order, tuple(int(r) for r in rng.integers(1, rank_max + 1, size=num_edges(order))))
            before = "\n".join(rng.choice(PROSE, size=int(rng.integers(0, 5))))
            reply = f"{before}\n{format_solution(structure)}" if before else format_solution(structure)
            if rng.random() < 0.5:
                reply += "\n"
            parsed, reasoning = parse_solution(reply, order, rank_max)
            assert parsed == structure
            assert reasoning == before.strip()

    def test_malformed_variants_raise(self):
        rng = np.random.default_rng(7)
        for k in range(20):
            ranks = [int(r) for r in rng.integers(1, 5, size=3)]
            kind = k % 4
            if kind == 0:
                line, error = f"RANKS: [{', '.join(map(str, ranks[:2]))}]", SolutionArityError
            elif kind == 1:
                line, error = f"RANKS: [{', '.join(map(str, ranks + [1]))}]", SolutionArityError
            elif kind == 2:
                line, error = f"RANKS: [{ranks[0]}.5, {ranks[1]}, {ranks[2]}]", NonIntegerRankError
            else:
                line, error = f"RANKS: [{ranks[0] + 4}, {ranks[1]}, {ranks[2]}]", RankOutOfBoundsError
            with pytest.raises(error):
                parse_solution(f"{PROSE[k % len(PROSE)]}\n{line}", 3, 4)
            assert issubclass(error, SolutionParseError)
