"""Majorization-minimization loop for the quartic sidelobe objective.

Each iteration replaces the quartic ISL by a linear surrogate built at the
current iterate: the convex part is majorized through a largest-eigenvalue
shift (a constant N_t^2 for the big Gram operator, an exact reduced
eigensolve for the iterate-dependent part) and the concave part is
minorized by a tangent line.
Minimizing the surrogate under the original constraints is the convex
subproblem; descent of the true objective is enforced by a backtracking
safeguard along the feasible segment, so the reported trace is monotone by
construction.

Starting points: ``minimum`` (the comm-only point), ``scaled`` (that point
scaled up along itself to the power budget; scaling can only grow the CI
margins since thresholds are nonnegative), and ``fill`` (the comm-only point
plus a per-subcarrier constraint-null-space move that equalizes the beam
amplitudes |a^H x_n| at the largest common level the budget affords;
equalized amplitudes make the variance-form ISL vanish, so this start is
already a fixed point of the map in well-conditioned instances).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .comm import CiConstraintSet, verify_ci_margins
from .config import SystemConfig, validated
from .radar_metrics import beam_spectrum, isl_analytic, steering_vector
from .subsolver import InfeasibleError, ProjectionOperator, solve_subproblem

# Relative-change denominators are floored at this fraction of the squared
# power budget: changes below the float resolution of the quartic at the
# power scale count as converged rather than as 0/0 noise.
DELTA_FLOOR_FRACTION = 1e-12


def lambda_a(n_tx: int) -> float:
    """Largest eigenvalue of the big Gram operator: exactly n_tx^2."""
    return float(n_tx) ** 2


def _b_blocks(c: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Blocks weighted_n * a stacked as an (N, n_tx) array for weights c."""
    return c[:, None] * a[None, :]


def apply_B(v: np.ndarray, c: np.ndarray, x_t: np.ndarray, a: np.ndarray, lam_a: float) -> np.ndarray:
    """Product of the iterate-dependent curvature operator with v.

    The operator is block-diagonal with blocks |c_n|^2 a a^H, minus the
    rank-one lam_a x_t x_t^H; both parts apply in O(N n_tx).
    """
    vn = v.reshape(c.shape[0], -1)
    av = vn @ np.conj(a)  # a^H v_n
    block = _b_blocks((np.abs(c) ** 2) * av, a)
    inner = complex(np.vdot(x_t, v))
    return (block - lam_a * inner * x_t.reshape(block.shape)).reshape(v.shape)


def dense_B(c: np.ndarray, x_t: np.ndarray, a: np.ndarray, lam_a: float) -> np.ndarray:
    """Dense materialization for toy-size checks."""
    n, nt = c.shape[0], a.shape[0]
    big = np.zeros((n * nt, n * nt), dtype=complex)
    aa_h = np.outer(a, np.conj(a))
    for i in range(n):
        big[i * nt : (i + 1) * nt, i * nt : (i + 1) * nt] = (np.abs(c[i]) ** 2) * aa_h
    xt = x_t.reshape(-1)
    big -= lam_a * np.outer(xt, np.conj(xt))
    return big


def lambda_b(
    c: np.ndarray,
    x_t: np.ndarray,
    a: np.ndarray,
    lam_a: float,
) -> tuple[float, bool]:
    """Largest eigenvalue of the curvature operator, computed exactly.

    Each diagonal block |c_n|^2 a a^H is rank one and the subtracted term
    is rank one, so the operator acts nontrivially only on the span of the
    N unit block directions p_n = (e_n kron a)/sqrt(n_tx) plus x_t: an
    (N+1)-dimensional subspace. In the orthonormal basis {p_n, w_hat} the
    operator is diag(n_tx |c_n|^2, 0) minus lam_a times the rank-one outer
    product of x_t's coordinates, and a small dense eigensolve finishes the
    job. The complement contributes the eigenvalue zero whenever it is
    nonempty; the result is floored at zero regardless, which can only
    loosen (never break) the majorization.

    Returns (value, used_fallback); used_fallback is always False and is
    kept so callers can keep counting.
    """
    nt = a.shape[0]
    xt = np.asarray(x_t).reshape(-1)
    xt_norm2 = float(np.vdot(xt, xt).real)
    if xt_norm2 == 0.0:
        return 0.0, False
    d = nt * np.abs(c) ** 2
    beta = c / math.sqrt(nt)  # p_n^H x_t = (a^H x_{t,n}) / sqrt(n_tx)
    w2 = max(xt_norm2 - float(np.sum(np.abs(beta) ** 2)), 0.0)
    coords = np.concatenate([beta, [math.sqrt(w2)]])
    small = np.diag(np.concatenate([d, [0.0]])).astype(complex)
    small -= lam_a * np.outer(coords, np.conj(coords))
    top = float(np.linalg.eigvalsh(small)[-1])
    return max(top, 0.0), False


@dataclass(frozen=True)
class SurrogateState:
    """Per-iteration surrogate ingredients at the expansion point."""

    c: np.ndarray
    alpha: float
    lam_a: float
    lam_b: float
    lam_b_fallback: bool
    slope: float  # tangent-line slope multiplier: 8 (anchored) or 4 (tangent)
    b: np.ndarray  # linear coefficient, flat complex length N*n_tx


def surrogate_b(
    x_t: np.ndarray, a: np.ndarray, slope: str = "anchored"
) -> SurrogateState:
    """Assemble the linear surrogate coefficient at x_t.

    b = (8/N)(B - lambda_b I) x_t - (2 k alpha / N^2) Atilde x_t with the
    curvature operator B above and tangent slope k: the anchored assembly
    uses k = 8, the conservative tangent k = 4. The anchored line touches
    the quartic at x_t but is not a global lower bound of its concave part;
    the tangent one is (first-order tangent of a convex function). Both are
    provided; see the ISL trade-off discussion in the README.
    """
    n = x_t.reshape(-1, a.shape[0]).shape[0]
    nt = a.shape[0]
    lam_a_val = lambda_a(nt)
    xt = x_t.reshape(-1)
    c = beam_spectrum(xt, a)
    alpha = float(np.sum(np.abs(c) ** 2))
    lam_b_val, fb = lambda_b(c, xt, a, lam_a_val)
    k = 8.0 if slope == "anchored" else 4.0
    bx = apply_B(xt, c, xt, a, lam_a_val)
    atilde_x = _b_blocks(c, a).reshape(-1)
    b = (8.0 / n) * (bx - lam_b_val * xt) - (2.0 * k * alpha / n**2) * atilde_x
    return SurrogateState(
        c=c, alpha=alpha, lam_a=lam_a_val, lam_b=lam_b_val,
        lam_b_fallback=fb, slope=k, b=b,
    )


def surrogate_epsilon(state: SurrogateState, x_t: np.ndarray, power_budget: float) -> float:
    """Constant completing the explicit surrogate Re{x^H b} + epsilon.

    Collects every term dropped on the way to the linear objective: the
    power-ball substitutions, the eigenvalue-shift constants, and the
    tangent-line offset (slope - 1) alpha^2.
    """
    n = state.c.shape[0]
    xt = x_t.reshape(-1)
    xt_norm2 = float(np.vdot(xt, xt).real)
    quart = float(np.sum(np.abs(state.c) ** 4))
    xbx = quart - state.lam_a * xt_norm2**2  # x_t^H B x_t, real
    c1 = (
        state.lam_a * power_budget**2
        + (state.lam_a * xt_norm2**2 - quart)
        + 2.0 * state.lam_b * power_budget
        + 2.0 * (state.lam_b * xt_norm2 - xbx)
    )
    return (2.0 / n) * c1 + (2.0 / n**2) * (state.slope - 1.0) * state.alpha**2


def minorizer_value(x: np.ndarray, state: SurrogateState, a: np.ndarray) -> float:
    """Tangent line of the concave part at the expansion point, evaluated at x."""
    # Re{x^H Atilde x_t} with Atilde x_t stacked as c_n a blocks
    re = float(np.vdot(x.reshape(-1), _b_blocks(state.c, a).reshape(-1)).real)
    return state.slope * state.alpha * re - (state.slope - 1.0) * state.alpha**2


@dataclass
class MmTrace:
    """Per-iteration history of one optimization run."""

    iters: list[int] = field(default_factory=list)
    isl: list[float] = field(default_factory=list)
    delta: list[float] = field(default_factory=list)
    status: list[str] = field(default_factory=list)
    millis: list[float] = field(default_factory=list)
    converged: bool = False
    reason: str = ""
    lam_b_fallbacks: int = 0

    def record(self, it: int, isl: float, delta: float, status: str, ms: float) -> None:
        self.iters.append(it)
        self.isl.append(isl)
        self.delta.append(delta)
        self.status.append(status)
        self.millis.append(ms)


@dataclass(frozen=True)
class OptimizeResult:
    x: np.ndarray  # complex (N, n_tx)
    trace: MmTrace
    isl: float
    power: float


def _fill_start(
    projector: ProjectionOperator,
    x_mp: np.ndarray,
    a: np.ndarray,
    power_budget: float,
) -> np.ndarray | None:
    """Equalize the beam amplitudes inside the constraint null spaces.

    Returns None when the equalizer cannot fit under the budget (very high
    load); the caller then falls back to the scaled start.
    """
    n, d = projector.n, projector.d
    nt = d // 2
    g = projector.g
    z_mp = np.concatenate([x_mp.real, x_mp.imag], axis=1)  # (N, D)
    u1 = np.concatenate([a.real, a.imag])
    u2 = np.concatenate([-a.imag, a.real])
    c_mp = beam_spectrum(x_mp, a)
    phase = np.where(np.abs(c_mp) > 0, c_mp / np.maximum(np.abs(c_mp), 1e-300), 1.0)

    # Per-subcarrier null-space bases and the 2 x nullity beam-control maps.
    basis, tmaps = [], []
    for i in range(n):
        _, s, vt = np.linalg.svd(g[i], full_matrices=True)
        rank = int((s > 1e-10 * max(1.0, s[0] if s.size else 0.0)).sum())
        q = vt[rank:].T  # (D, nullity)
        t = np.stack([u1 @ q, u2 @ q])  # (2, nullity)
        basis.append(q)
        tmaps.append(np.linalg.pinv(t))

    def assemble(tau: float) -> np.ndarray:
        z = np.empty_like(z_mp)
        for i in range(n):
            target = tau * phase[i]
            dvec = np.array([target.real - c_mp[i].real, target.imag - c_mp[i].imag])
            w = tmaps[i] @ dvec
            z[i] = z_mp[i] + basis[i] @ w
        return z

    def power_at(tau: float) -> float:
        z = assemble(tau)
        return float((z * z).sum())

    hi = max(1e-6, float(np.abs(c_mp).max()) * 2.0)
    for _ in range(200):
        if power_at(hi) > power_budget:
            break
        hi *= 2.0
    else:
        return None
    lo = 0.0
    if power_at(lo) > power_budget:
        return None
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if power_at(mid) > power_budget:
            hi = mid
        else:
            lo = mid
    z = assemble(lo)
    return z[:, :nt] + 1j * z[:, nt:]


def initial_point(
    cs: CiConstraintSet,
    cfg: SystemConfig,
    a: np.ndarray,
    projector: ProjectionOperator,
) -> np.ndarray:
    """Starting frame per cfg.init_policy; always CI-feasible."""
    from .baseline import min_power_precoder

    x_mp = min_power_precoder(cs, projector)
    p_min = float(np.vdot(x_mp, x_mp).real)
    if p_min > cfg.power_budget * (1 + 1e-8):
        raise InfeasibleError(
            f"minimum feasible power {p_min:.6g} exceeds budget {cfg.power_budget:.6g}"
        )
    if cfg.init_policy == "minimum":
        return x_mp
    if cfg.init_policy == "fill":
        filled = _fill_start(projector, x_mp, a, cfg.power_budget)
        if filled is not None:
            return filled
        # fall through to scaled
    if p_min <= 0.0:
        return x_mp
    return x_mp * np.sqrt(cfg.power_budget / p_min)


def optimize_waveform(
    cs: CiConstraintSet,
    cfg: SystemConfig,
    a: np.ndarray | None = None,
    x_init: np.ndarray | None = None,
    projector: ProjectionOperator | None = None,
) -> OptimizeResult:
    """Run the majorize-minimize loop for one symbol slot.

    Iterates until the relative objective change drops below
    cfg.conv_threshold or cfg.max_iters is reached (the latter is returned
    with trace.reason == "max_iters", not raised). The ISL trace is
    non-increasing by the descent safeguard; every iterate is CI-feasible
    and within the power budget.
    """
    der = validated(cfg)
    if a is None:
        a = steering_vector(der.beam_angle_rad, cfg.n_tx, der.d_over_lambda)
    proj = projector if projector is not None else ProjectionOperator(cs)
    if x_init is None:
        x = initial_point(cs, cfg, a, proj)
    else:
        x = np.asarray(x_init, dtype=complex).reshape(proj.n, -1)

    delta_floor = DELTA_FLOOR_FRACTION * cfg.power_budget**2
    trace = MmTrace()
    xi = isl_analytic(x, a)
    trace.record(0, xi, 1.0, "init", 0.0)
    mu_warm: float | None = None
    final_status = "max_iters"

    for t in range(1, cfg.max_iters + 1):
        tic = time.perf_counter()
        state = surrogate_b(x.reshape(-1), a, slope=cfg.beam_slope)
        if state.lam_b_fallback:
            trace.lam_b_fallbacks += 1
        if np.max(np.abs(state.b)) == 0.0:
            # Degenerate surrogate: every feasible point ties; keep the iterate.
            ms = (time.perf_counter() - tic) * 1e3
            trace.record(t, xi, 0.0, "tie_break", ms)
            trace.converged = True
            final_status = "converged"
            break
        sub = solve_subproblem(state.b, proj, cfg.power_budget, mu0=mu_warm)
        mu_warm = sub.mu if sub.mu > 0 else None
        x_cand = sub.x
        xi_cand = isl_analytic(x_cand, a)
        status = sub.status
        if xi_cand > xi:
            # The linearization overshot; shrink along the feasible segment
            # (both endpoints satisfy the convex constraints).
            step = x_cand - x
            eta, accepted = 1.0, False
            for _ in range(40):
                eta *= 0.5
                x_try = x + eta * step
                xi_try = isl_analytic(x_try, a)
                if xi_try < xi:
                    x_cand, xi_cand = x_try, xi_try
                    status = f"{sub.status}+backtrack"
                    accepted = True
                    break
            if not accepted:
                ms = (time.perf_counter() - tic) * 1e3
                trace.record(t, xi, 0.0, "fixed_point", ms)
                trace.converged = True
                final_status = "converged"
                break
        delta = abs(xi_cand - xi) / max(abs(xi_cand), delta_floor)
        x, xi = x_cand, xi_cand
        ms = (time.perf_counter() - tic) * 1e3
        trace.record(t, xi, delta, status, ms)
        if delta < cfg.conv_threshold:
            trace.converged = True
            final_status = "converged"
            break

    trace.reason = final_status
    power = float(np.vdot(x, x).real)
    report = verify_ci_margins(x, cs)
    if report.n_violations:
        raise RuntimeError(
            f"internal error: optimizer returned {report.n_violations} violated "
            f"constraints (min slack {report.min_slack:.3e})"
        )
    return OptimizeResult(x=x, trace=trace, isl=max(xi, 0.0), power=power)
