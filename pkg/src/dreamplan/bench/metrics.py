"""Aggregate metrics over episode records."""
from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from ..records import RunRecord


class EmptyInput(ValueError):
    pass


class DegenerateGap(ZeroDivisionError):
    pass


def success_rate(records: Sequence[RunRecord]) -> float:
    if not records:
        raise EmptyInput("success_rate of no records")
    return sum(r.reward for r in records) / len(records)


def completion_rate(records: Sequence[RunRecord]) -> float:
    if not records:
        raise EmptyInput("completion_rate of no records")
    return sum(r.milestones_satisfied for r in records) / len(records)


def gamma(sr_reactive: float, sr_tree: float, sr_wd: float) -> float:
    """Share of the reactive-to-tree-search gap closed by the planner, in percent, one decimal.

    Inputs may be fractions or percentages as long as all three agree.
    """
    lo, hi, mid = (Decimal(str(x)) for x in (sr_reactive, sr_tree, sr_wd))
    if hi == lo:
        raise DegenerateGap("tree search and reactive success rates are equal")
    pct = Decimal(100) * (mid - lo) / (hi - lo)
    return float(pct.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)) + 0.0  # no negative zero
