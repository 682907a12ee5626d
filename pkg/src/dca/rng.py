"""Seeded random streams for the tissue engine.

Every engine owns two independent numpy ``PCG64`` generators obtained from
``SeedSequence(seed).spawn(2)``: stream 0 draws migration thresholds, stream
1 picks antigen recipients. Keeping the streams apart means the recipient
sequence depends only on the seed and the number of antigen events, never on
how many cells happened to migrate.

Draw rules, so other implementations can match them:

* threshold: ``t_min + (t_max - t_min) * gen.random()``
* k distinct recipients out of n: partial Fisher-Yates over ``range(n)``,
  swapping position i with ``gen.integers(i, n)`` for i in ``range(k)``.
"""

from __future__ import annotations

from typing import List

import numpy as np


class EngineRandom:
    def __init__(self, seed: int):
        self.seed = int(seed)
        threshold_seq, fanout_seq = np.random.SeedSequence(self.seed & (2**64 - 1)).spawn(2)
        self._thresholds = np.random.Generator(np.random.PCG64(threshold_seq))
        self._fanout = np.random.Generator(np.random.PCG64(fanout_seq))

    def threshold(self, t_min: float, t_max: float) -> float:
        return t_min + (t_max - t_min) * float(self._thresholds.random())

    def recipients(self, n: int, k: int) -> List[int]:
        if k == 1:
            return [int(self._fanout.integers(0, n))]
        order = list(range(n))
        for i in range(k):
            j = int(self._fanout.integers(i, n))
            order[i], order[j] = order[j], order[i]
        return order[:k]
