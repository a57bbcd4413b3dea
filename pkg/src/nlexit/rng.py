"""Per-path counter-based random streams.

Variates for path ``i`` under seed ``s`` come from a Philox generator keyed
by ``(s, i)``.  The time axis is cut into fixed blocks of ``BLOCK`` steps and
block ``b`` uses counter ``(0, b, 0, 0)``, so the normals driving step ``j``
depend only on ``(seed, path_index, j)``.  Chunking, early stopping and thread
count therefore never change a path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLOCK = 1024
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    path_index: int

    def block(self, b: int, width: int) -> np.ndarray:
        """Standard normals for block ``b``: shape ``(BLOCK, width)``."""
        bitgen = np.random.Philox(
            key=[self.seed & _MASK64, self.path_index & _MASK64],
            counter=[0, b, 0, 0],
        )
        return np.random.Generator(bitgen).standard_normal((BLOCK, width))

    def normals(self, start: int, n_steps: int, width: int) -> np.ndarray:
        """Normals for steps ``start .. start+n_steps-1``, shape ``(n_steps, width)``."""
        if n_steps <= 0:
            return np.empty((0, width))
        first, last = start // BLOCK, (start + n_steps - 1) // BLOCK
        blocks = [self.block(b, width) for b in range(first, last + 1)]
        out = blocks[0] if len(blocks) == 1 else np.concatenate(blocks)
        off = start - first * BLOCK
        return out[off:off + n_steps]


def gaussian_steps(seed: int, path_indices, start: int, n_steps: int, width: int) -> np.ndarray:
    """Stack of per-path normals, shape ``(len(path_indices), n_steps, width)``."""
    idx = np.asarray(path_indices, dtype=np.int64)
    out = np.empty((idx.size, n_steps, width))
    for row, i in enumerate(idx):
        out[row] = RngStream(seed, int(i)).normals(start, n_steps, width)
    return out
