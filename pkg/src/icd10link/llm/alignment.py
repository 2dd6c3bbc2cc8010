from __future__ import annotations

import logging
from collections import defaultdict, deque
from typing import Sequence

from ..corpus import Mention
from ..dictionary import normalize_term
from .parsing import TermPrediction

logger = logging.getLogger(__name__)


def align_predictions(
    mentions: Sequence[Mention], predictions: Sequence[TermPrediction]
) -> dict[int, TermPrediction | None]:
    """Map each mention index to the prediction assigned to it, if any.

    Predictions are consumed in order; each one goes to the earliest still
    unassigned mention with the same normalized surface. Predictions without
    such a mention are discarded.
    """
    free: dict[str, deque[int]] = defaultdict(deque)
    for i, m in enumerate(mentions):
        free[normalize_term(m.surface)].append(i)

    assigned: dict[int, TermPrediction | None] = {i: None for i in range(len(mentions))}
    for pred in predictions:
        slots = free.get(normalize_term(pred.term))
        if slots:
            assigned[slots.popleft()] = pred
        else:
            logger.warning("discarding prediction for %r: no unassigned mention matches", pred.term)
    return assigned
