"""Seeded random stream shared by every stochastic choice in a game.

The generator is numpy's PCG64 seeded with ``numpy.random.PCG64(seed)``.
Only raw 64-bit outputs are consumed, and a bounded draw in ``[0, n)`` is
``raw % n``.  Both kernels (compiled and pure Python) pull from the same
``BitGenerator`` object so a trace is reproducible from the seed alone.

Draw order for one game:

1. initial history (only when it is not given explicitly): one draw, ``% 2**m``
2. strategy assignment, agent by agent, slot by slot: one draw each,
   ``% 2**P`` (redrawn on collision when strategies must be distinct)
3. per step: one draw for every agent whose maximal utility is shared by
   slots holding two or more different strategies, in agent order
   (``% tied_slots``, picking among tied slots left to right); then one draw
   if the demand is exactly zero (low bit set means minority ``+1``)
"""

from __future__ import annotations

import numpy as np


class GameRNG:
    """Raw-output view of a PCG64 stream."""

    def __init__(self, seed: int | None = 0):
        self.seed = seed
        self.bitgen = np.random.PCG64(seed)

    def raw(self, size: int | None = None):
        if size is None:
            return int(self.bitgen.random_raw())
        return self.bitgen.random_raw(size)

    def below(self, n: int) -> int:
        """One draw in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.raw() % n

    def coin(self) -> int:
        """Fair sign draw, ``+1`` or ``-1``."""
        return 1 if self.raw() & 1 else -1

    @property
    def state(self) -> dict:
        return self.bitgen.state

    @state.setter
    def state(self, value: dict) -> None:
        self.bitgen.state = value
