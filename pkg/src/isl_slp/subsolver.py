"""Per-symbol convex subproblem: linear objective, CI half-spaces, power ball.

The constraints touch each subcarrier's block separately and the objective
is block-linear, so the problem decomposes: for a fixed power dual mu > 0
each subcarrier solves a small strictly convex QP, handled exactly by
enumerating active sets of its (at most 2K) half-space constraints. The
power budget couples the blocks only through mu, recovered by bisection.

The same projection machinery solves the minimum-power problem (project the
origin onto the constraint polyhedron), which the baseline precoder uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .comm import CiConstraintSet


class SubsolverError(RuntimeError):
    """Numerical failure inside the subproblem solver."""


class InfeasibleError(RuntimeError):
    """The QoS constraints admit no solution (with or without the budget)."""


def _subset_masks(n_rows: int) -> np.ndarray:
    """All active-set masks as a (2^n_rows, n_rows) float array."""
    count = 1 << n_rows
    bits = (np.arange(count)[:, None] >> np.arange(n_rows)[None, :]) & 1
    return bits.astype(float)


class ProjectionOperator:
    """Euclidean projector onto {z : G_n z >= gamma_n} for every subcarrier.

    Works in stacked real coordinates z_n = [Re x_n; Im x_n]. Enumeration of
    active subsets is exact for the few-row systems that arise here; the
    per-subset normal-equation pseudoinverses are precomputed once per
    constraint set, so each projection call is a handful of batched matmuls.
    """

    # Subset chunking keeps peak memory bounded for larger user counts.
    _CHUNK = 512

    def __init__(self, cs: CiConstraintSet, degenerate_tol: float = 1e-12):
        g, gamma = cs.real_form()
        gamma = gamma.copy()
        row_norms = np.linalg.norm(g, axis=2)
        degenerate = row_norms < degenerate_tol
        if degenerate.any():
            bad = degenerate & (gamma > degenerate_tol)
            if bad.any():
                n, i = np.argwhere(bad)[0]
                raise InfeasibleError(
                    f"constraint ({n}, {i}) has a vanishing row but a positive "
                    f"threshold {gamma[n, i]:.3e}: unsatisfiable"
                )
            gamma[degenerate] = 0.0
        self.g = g  # (N, R, D)
        self.gamma = gamma  # (N, R)
        self.n, self.r, self.d = g.shape
        self.gram = np.einsum("nrd,nsd->nrs", g, g)  # (N, R, R)
        self.masks = _subset_masks(self.r)  # (S, R)
        self._pinvs: np.ndarray | None = None  # (S, N, R, R), lazy

    def _ensure_factors(self, lo: int, hi: int) -> np.ndarray:
        """Pseudoinverses of the masked Gram systems for subset chunk [lo, hi)."""
        if self._pinvs is None:
            self._pinvs = np.zeros((self.masks.shape[0], self.n, self.r, self.r))
            self._built = np.zeros(self.masks.shape[0], dtype=bool)
        chunk = slice(lo, hi)
        if not self._built[chunk].all():
            m = self.masks[chunk]  # (C, R)
            mm = m[:, None, :, None] * m[:, None, None, :]  # (C, 1, R, R)
            sys = self.gram[None, :, :, :] * mm + (1.0 - m)[:, None, :, None] * np.eye(self.r)
            self._pinvs[chunk] = np.linalg.pinv(sys)
            self._built[chunk] = True
        return self._pinvs[chunk]

    def project(self, z0: np.ndarray) -> np.ndarray:
        """Project points z0 (N, D) onto the per-subcarrier polyhedra.

        Raises InfeasibleError when some subcarrier admits no valid
        candidate at the loosest tolerance.
        """
        z0 = np.broadcast_to(z0, (self.n, self.d))
        resid = self.gamma - np.einsum("nrd,nd->nr", self.g, z0)  # needed slack lift
        atol = 1e-9 * max(1.0, float(np.abs(z0).max()), float(np.abs(self.gamma).max()))

        best_z = np.empty((self.n, self.d))
        best_dist = np.full(self.n, np.inf)
        found = np.zeros(self.n, dtype=bool)
        n_masks = self.masks.shape[0]
        for lo in range(0, n_masks, self._CHUNK):
            hi = min(lo + self._CHUNK, n_masks)
            pinv = self._ensure_factors(lo, hi)
            m = self.masks[lo:hi]  # (C, R)
            rhs = m[:, None, :] * resid[None, :, :]  # (C, N, R)
            lam = np.einsum("cnrs,cns->cnr", pinv, rhs) * m[:, None, :]
            z = z0[None] + np.einsum("nrd,cnr->cnd", self.g, lam)
            slack = np.einsum("nrd,cnd->cnr", self.g, z) - self.gamma[None]
            valid = (lam >= -atol).all(axis=2) & (slack >= -atol).all(axis=2)
            dist = np.linalg.norm(z - z0[None], axis=2)
            dist = np.where(valid, dist, np.inf)
            idx = np.argmin(dist, axis=0)
            cand_dist = dist[idx, np.arange(self.n)]
            better = cand_dist < best_dist
            best_dist[better] = cand_dist[better]
            best_z[better] = z[idx[better], np.where(better)[0]]
            found |= np.isfinite(cand_dist)
        if not found.all():
            missing = np.where(~found)[0]
            raise InfeasibleError(
                f"no feasible point found for subcarrier(s) {missing[:8].tolist()}"
            )
        return best_z

    def project_complex(self, x0: np.ndarray) -> np.ndarray:
        """Complex-frame wrapper around project; x0 is (N, D/2) or flat."""
        x0 = np.asarray(x0, dtype=complex).reshape(self.n, self.d // 2)
        z0 = np.concatenate([x0.real, x0.imag], axis=1)
        z = self.project(z0)
        return z[:, : self.d // 2] + 1j * z[:, self.d // 2 :]


def complex_to_real_objective(b: np.ndarray, n: int) -> np.ndarray:
    """Real gradient f with f . z = Re{x^H b} under z = [Re x_n; Im x_n]."""
    bn = b.reshape(n, -1)
    return np.concatenate([bn.real, bn.imag], axis=1)


@dataclass(frozen=True)
class SubResult:
    x: np.ndarray  # complex (N, n_tx)
    mu: float
    status: str  # "saturated" or "interior"
    power: float
    n_projections: int


def solve_subproblem(
    b: np.ndarray,
    projector: ProjectionOperator,
    power_budget: float,
    mu0: float | None = None,
    power_rtol: float = 1e-9,
    max_bisect: int = 120,
) -> SubResult:
    """Minimize Re{x^H b} over the CI polyhedra within the power ball.

    For mu > 0 the per-subcarrier minimizer of mu||z||^2 + f.z is the
    projection of -f/(2 mu); transmit power decreases monotonically in mu,
    so the budget-active dual is a one-dimensional bisection. A vanishing b
    makes every feasible point optimal; the minimum-power point is returned.
    Warm starts: pass the previous call's mu as mu0.
    """
    n = projector.n
    f = complex_to_real_objective(np.asarray(b, dtype=complex), n)
    count = 0

    if not np.any(np.abs(f) > 0):
        z = projector.project(np.zeros((n, projector.d)))
        power = float((z * z).sum())
        if power > power_budget * (1 + 1e-8):
            raise InfeasibleError(
                f"minimum feasible power {power:.6g} exceeds budget {power_budget:.6g}"
            )
        x = z[:, : projector.d // 2] + 1j * z[:, projector.d // 2 :]
        return SubResult(x=x, mu=0.0, status="interior", power=power, n_projections=1)

    def solve_at(mu: float) -> tuple[np.ndarray, float]:
        nonlocal count
        z = projector.project(-f / (2.0 * mu))
        count += 1
        return z, float((z * z).sum())

    # Below mu_floor the projection input -f/(2 mu) is so large that slack
    # arithmetic is pure roundoff; stopping there costs at most about
    # mu_floor * P0 in objective, relative error around 1e-6.
    mu_floor = float(np.linalg.norm(f)) / (2.0e6 * math.sqrt(power_budget))

    mu = max(float(mu0) if mu0 and mu0 > 0 else 1.0, mu_floor)
    z, power = solve_at(mu)
    if power > power_budget:
        lo, power_lo = mu, power
        hi = mu
        for _ in range(max_bisect):
            hi *= 2.0
            z, power = solve_at(hi)
            if power <= power_budget:
                break
        else:
            z0 = projector.project(np.zeros((n, projector.d)))
            p_min = float((z0 * z0).sum())
            if p_min > power_budget * (1 + 1e-8):
                raise InfeasibleError(
                    f"minimum feasible power {p_min:.6g} exceeds budget {power_budget:.6g}"
                )
            raise SubsolverError("power stayed above budget at huge mu")
        z_hi, power_hi = z, power
    else:
        hi, z_hi, power_hi = mu, z, power
        lo = mu
        while True:
            lo /= 2.0
            if lo <= mu_floor:
                saturates = False
                if mu_floor < hi:
                    z, power = solve_at(mu_floor)
                    if power > power_budget:
                        lo, power_lo = mu_floor, power
                        saturates = True
                    else:
                        hi, z_hi, power_hi = mu_floor, z, power
                if saturates:
                    break
                # Power never reaches the budget: the polyhedron bounds the
                # objective on its own and the ball constraint is slack.
                x = z_hi[:, : projector.d // 2] + 1j * z_hi[:, projector.d // 2 :]
                return SubResult(
                    x=x, mu=0.0, status="interior", power=power_hi, n_projections=count
                )
            z, power = solve_at(lo)
            if power > power_budget:
                power_lo = power
                break
            hi, z_hi, power_hi = lo, z, power

    # Invariant: power(lo) > budget >= power(hi). Bisect to the budget shell.
    for _ in range(max_bisect):
        if power_hi >= power_budget * (1.0 - power_rtol) or (hi - lo) <= 1e-15 * hi:
            break
        mid = 0.5 * (lo + hi)
        z, power = solve_at(mid)
        if power > power_budget:
            lo, power_lo = mid, power
        else:
            hi, z_hi, power_hi = mid, z, power
    x = z_hi[:, : projector.d // 2] + 1j * z_hi[:, projector.d // 2 :]
    return SubResult(
        x=x, mu=hi, status="saturated", power=power_hi, n_projections=count
    )
