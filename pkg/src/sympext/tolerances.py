"""Numeric tolerances used across the package.

All rank decisions are relative singular-value thresholds; horizons in this
artifact stay below 1e4 steps, which leaves ample double-precision headroom
for the defaults below.
"""

from __future__ import annotations

import dataclasses


@dataclasses.dataclass(frozen=True)
class Tolerances:
    pinv: float = 1e-10          # Penrose-identity residual
    rank: float = 1e-9           # relative singular-value cutoff
    herm: float = 1e-10          # Hermitian-defect bound (relative)
    eig: float = 1e-9            # eigen-reconstruction residual
    sym: float = 1e-10           # symplectic/weight identity defect
    res: float = 1e-8            # per-step solution residual
    psd: float = 1e-9            # semidefiniteness slack
    rec: float = 1e-8            # anchor-convergence threshold
    tail: float = 1e-6           # relative square-summability tail
    lim: float = 1e-7            # boundary-form oscillation bound
    lambda_big: float = 10.0     # finite-horizon proxy for lambda_min -> infinity
    growth_ratio: float = 10.0   # Gram eigenvalue growth per horizon doubling
    cond_max: float = 1e6        # condition bound for the normalization point

    def replace(self, **kwargs) -> "Tolerances":
        return dataclasses.replace(self, **kwargs)


DEFAULT = Tolerances()

# Propagation aborts once any entry passes this magnitude.
OVERFLOW_LIMIT = 1e300
