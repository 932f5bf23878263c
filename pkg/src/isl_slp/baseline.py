"""Communication-only reference precoder.

Per subcarrier, the minimum transmit power satisfying the CI constraints is
the Euclidean projection of the origin onto the constraint polyhedron (a
strictly convex QP with a unique minimizer). The result is the comparison
baseline for every radar metric: it spends exactly the power the QoS targets
demand and nothing more, and it is never rescaled to the budget.
"""

from __future__ import annotations

import numpy as np

from .comm import CiConstraintSet
from .subsolver import ProjectionOperator


def min_power_precoder(
    cs: CiConstraintSet, projector: ProjectionOperator | None = None
) -> np.ndarray:
    """Minimum-power CI-feasible waveform, complex (N, n_tx).

    Accepts an existing projector for the same constraint set to reuse its
    precomputed factorizations. Raises InfeasibleError when some subcarrier
    has unsatisfiable constraints.
    """
    proj = projector if projector is not None else ProjectionOperator(cs)
    return proj.project_complex(np.zeros((proj.n, proj.d // 2), dtype=complex))
