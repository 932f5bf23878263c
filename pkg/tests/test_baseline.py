import numpy as np
import pytest

from isl_slp.baseline import min_power_precoder
from isl_slp.comm import CiConstraintSet, build_ci_constraints, generate_psk_symbols, \
    generate_tdl_channel, taps_to_frequency_response
from isl_slp.config import SystemConfig
from isl_slp.subsolver import ProjectionOperator, solve_subproblem


def make_cs(cfg, seed):
    rng = np.random.default_rng(seed)
    ch = generate_tdl_channel(cfg, rng)
    freq = taps_to_frequency_response(ch, cfg.n_subcarriers)
    syms = generate_psk_symbols(cfg, rng)
    return build_ci_constraints(freq, syms[:, :, 0], cfg)


def toy_cfg(**kw):
    base = dict(n_subcarriers=4, n_tx=3, n_users=2, n_symbols=1, cp_len=1,
                n_taps=2, channel_gain_db=12.0)
    base.update(kw)
    return SystemConfig(**base)


def test_single_user_single_row_closed_form():
    # With one active halfspace per subcarrier the minimum-power point has a
    # closed form gamma * conj(r) / ||r||^2.
    rng = np.random.default_rng(0)
    n, n_tx = 6, 4
    rows = rng.standard_normal((n, 1, n_tx)) + 1j * rng.standard_normal((n, 1, n_tx))
    gamma = rng.uniform(0.2, 1.5, (n, 1))
    cs = CiConstraintSet(rows=rows, gamma=gamma)
    x = min_power_precoder(cs)
    expected = gamma * rows[:, 0].conj() / np.sum(np.abs(rows[:, 0]) ** 2, axis=1, keepdims=True)
    np.testing.assert_allclose(x, expected, atol=1e-10)


def test_feasible_with_tight_margins():
    cfg = toy_cfg()
    cs = make_cs(cfg, 1)
    x = min_power_precoder(cs)
    slack = cs.evaluate(x) - cs.gamma
    assert slack.min() > -1e-8
    # minimum-power solutions sit on the boundary: at least one active
    # constraint per subcarrier (otherwise shrinking x_n reduces power)
    assert (np.abs(slack).min(axis=1) < 1e-6).all()


def test_zero_thresholds_give_zero_precoder():
    cfg = toy_cfg()
    cs = make_cs(cfg, 2)
    zeroed = CiConstraintSet(rows=cs.rows, gamma=np.zeros_like(cs.gamma))
    x = min_power_precoder(zeroed)
    np.testing.assert_allclose(x, 0.0, atol=1e-12)


def test_power_lower_bounds_every_feasible_point():
    # Any frame satisfying the same constraints spends at least this power;
    # in particular every optimized waveform does.
    cfg = toy_cfg(channel_gain_db=18.0)
    for seed in range(6):
        cs = make_cs(cfg, 10 + seed)
        proj = ProjectionOperator(cs)
        x_min = min_power_precoder(cs, proj)
        p_min = float(np.sum(np.abs(x_min) ** 2))
        rng = np.random.default_rng(50 + seed)
        for _ in range(10):
            z = proj.project(rng.standard_normal((proj.n, proj.d)))
            assert float((z * z).sum()) >= p_min - 1e-8
        b = rng.standard_normal((cfg.n_subcarriers, cfg.n_tx)) \
            + 1j * rng.standard_normal((cfg.n_subcarriers, cfg.n_tx))
        res = solve_subproblem(b, proj, cfg.power_budget)
        assert res.power >= p_min - 1e-8


def test_never_rescaled_to_budget():
    # The reference spends the minimum feasible power, not the budget.
    cfg = toy_cfg(channel_gain_db=25.0)
    cs = make_cs(cfg, 3)
    x = min_power_precoder(cs)
    p = float(np.sum(np.abs(x) ** 2))
    assert p < 0.5 * cfg.power_budget


def test_projector_reuse_matches_fresh():
    cfg = toy_cfg()
    cs = make_cs(cfg, 4)
    proj = ProjectionOperator(cs)
    np.testing.assert_array_equal(min_power_precoder(cs, proj), min_power_precoder(cs))


def test_determinism():
    cfg = toy_cfg()
    cs = make_cs(cfg, 5)
    np.testing.assert_array_equal(min_power_precoder(cs), min_power_precoder(cs))
