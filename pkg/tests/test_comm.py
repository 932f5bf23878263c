import math

import numpy as np
import pytest

from isl_slp.comm import (
    build_ci_constraints,
    generate_psk_symbols,
    generate_tdl_channel,
    psk_constellation,
    taps_to_frequency_response,
    verify_ci_margins,
)
from isl_slp.config import SystemConfig, db_to_lin, validated

from oracles import ci_feasible_eq3


def small_cfg(**kw):
    defaults = dict(n_subcarriers=8, n_tx=3, n_users=2, n_symbols=3, cp_len=4)
    defaults.update(kw)
    return SystemConfig(**defaults)


def test_channel_shapes_and_determinism():
    cfg = small_cfg()
    ch1 = generate_tdl_channel(cfg, np.random.default_rng(5))
    ch2 = generate_tdl_channel(cfg, np.random.default_rng(5))
    assert ch1.taps.shape == (cfg.n_taps, cfg.n_users, cfg.n_tx)
    np.testing.assert_array_equal(ch1.taps, ch2.taps)


def test_channel_power_normalization_monte_carlo():
    # Mean total tap power per (user, antenna) should equal the linear
    # channel gain; 10^4 draws put the sample mean well within 5%.
    cfg = SystemConfig(channel_gain_db=0.0)
    rng = np.random.default_rng(11)
    total = 0.0
    n_draws = 10_000
    for _ in range(n_draws):
        ch = generate_tdl_channel(cfg, rng)
        total += float(np.mean(np.sum(np.abs(ch.taps) ** 2, axis=0)))
    assert total / n_draws == pytest.approx(1.0, rel=0.05)


def test_channel_gain_scaling():
    cfg0 = small_cfg(channel_gain_db=0.0)
    cfg9 = small_cfg(channel_gain_db=9.0)
    t0 = generate_tdl_channel(cfg0, np.random.default_rng(2)).taps
    t9 = generate_tdl_channel(cfg9, np.random.default_rng(2)).taps
    np.testing.assert_allclose(t9, t0 * math.sqrt(db_to_lin(9.0)), rtol=1e-12)


def test_tap_decay_profile():
    # Expected per-tap power follows the configured dB-per-tap decay.
    cfg = SystemConfig(tap_decay_db=3.0, channel_gain_db=0.0)
    rng = np.random.default_rng(3)
    acc = np.zeros(cfg.n_taps)
    for _ in range(4000):
        ch = generate_tdl_channel(cfg, rng)
        acc += np.mean(np.abs(ch.taps) ** 2, axis=(1, 2))
    acc /= 4000
    ratios = acc[:-1] / acc[1:]
    np.testing.assert_allclose(ratios, db_to_lin(3.0), rtol=0.1)


def test_frequency_response_matches_direct_sum():
    cfg = small_cfg()
    ch = generate_tdl_channel(cfg, np.random.default_rng(7))
    freq = taps_to_frequency_response(ch, cfg.n_subcarriers)
    n = cfg.n_subcarriers
    for nn in range(n):
        for k in range(cfg.n_users):
            direct = sum(
                ch.taps[u, k] * np.exp(-2j * math.pi * nn * u / n)
                for u in range(cfg.n_taps)
            )
            np.testing.assert_allclose(freq[nn, k], direct, atol=1e-12)


def test_frequency_response_rejects_too_many_taps():
    cfg = small_cfg()
    ch = generate_tdl_channel(cfg, np.random.default_rng(7))
    with pytest.raises(ValueError):
        taps_to_frequency_response(ch, 2)


@pytest.mark.parametrize("order", [2, 4, 8, 16])
def test_psk_constellation_grid(order):
    pts = psk_constellation(order)
    assert pts.shape == (order,)
    np.testing.assert_allclose(np.abs(pts), 1.0, atol=1e-12)
    expected = {(2 * m + 1) * math.pi / order for m in range(order)}
    got = {math.atan2(p.imag, p.real) % (2 * math.pi) for p in pts}
    for e in sorted(expected):
        assert any(
            math.isclose(e % (2 * math.pi), g, abs_tol=1e-9) for g in got
        ), f"missing phase {e}"


def test_symbols_shape_and_membership():
    cfg = small_cfg()
    syms = generate_psk_symbols(cfg, np.random.default_rng(0))
    assert syms.shape == (cfg.n_subcarriers, cfg.n_users, cfg.n_symbols)
    pts = psk_constellation(cfg.psk_order)
    dists = np.min(np.abs(syms[..., None] - pts), axis=-1)
    assert dists.max() < 1e-12


def test_symbols_roughly_uniform():
    cfg = SystemConfig(n_subcarriers=64, n_users=4, n_symbols=40)
    syms = generate_psk_symbols(cfg, np.random.default_rng(123))
    pts = psk_constellation(cfg.psk_order)
    counts = np.array([np.sum(np.abs(syms - p) < 1e-9) for p in pts])
    n_total = syms.size
    expected = n_total / cfg.psk_order
    # 5-sigma band for a binomial count
    sigma = math.sqrt(n_total * 0.25 * 0.75)
    assert np.all(np.abs(counts - expected) < 5 * sigma)


def test_constraint_shapes_and_threshold():
    cfg = small_cfg()
    der = validated(cfg)
    ch = generate_tdl_channel(cfg, np.random.default_rng(1))
    freq = taps_to_frequency_response(ch, cfg.n_subcarriers)
    syms = generate_psk_symbols(cfg, np.random.default_rng(2))
    cs = build_ci_constraints(freq, syms[:, :, 0], cfg)
    assert cs.rows.shape == (cfg.n_subcarriers, 2 * cfg.n_users, cfg.n_tx)
    assert cs.gamma.shape == (cfg.n_subcarriers, 2 * cfg.n_users)
    expected = math.sqrt(cfg.noise_power * der.gamma_lin) * math.sin(der.phi)
    np.testing.assert_allclose(cs.gamma, expected)


def test_real_form_agrees_with_complex_rows():
    cfg = small_cfg()
    ch = generate_tdl_channel(cfg, np.random.default_rng(4))
    freq = taps_to_frequency_response(ch, cfg.n_subcarriers)
    syms = generate_psk_symbols(cfg, np.random.default_rng(5))
    cs = build_ci_constraints(freq, syms[:, :, 0], cfg)
    rng = np.random.default_rng(6)
    x = rng.standard_normal((cfg.n_subcarriers, cfg.n_tx)) + 1j * rng.standard_normal(
        (cfg.n_subcarriers, cfg.n_tx)
    )
    g_mat, gamma = cs.real_form()
    z = np.concatenate([x.real, x.imag], axis=1)
    lhs = np.einsum("nrd,nd->nr", g_mat, z)
    np.testing.assert_allclose(lhs, cs.evaluate(x), atol=1e-12)
    np.testing.assert_allclose(gamma, cs.gamma)


@pytest.mark.parametrize("order", [2, 4, 8])
def test_row_form_equivalent_to_rotated_halfplane_form(order):
    # The pair of linear rows per user must carve out exactly the rotated
    # circular-sector region; checked on a large batch of random tuples,
    # skipping points within float dust of the sector boundary.
    cfg = SystemConfig(
        n_subcarriers=4, n_tx=3, n_users=1, psk_order=order,
        n_symbols=1, cp_len=2, n_taps=2,
    )
    der = validated(cfg)
    rng = np.random.default_rng(order)
    n_checked = 0
    for _ in range(40):
        ch = generate_tdl_channel(cfg, rng)
        freq = taps_to_frequency_response(ch, cfg.n_subcarriers)
        syms = generate_psk_symbols(cfg, rng)
        cs = build_ci_constraints(freq, syms[:, :, 0], cfg)
        x = 0.5 * (
            rng.standard_normal((cfg.n_subcarriers, cfg.n_tx, 120))
            + 1j * rng.standard_normal((cfg.n_subcarriers, cfg.n_tx, 120))
        )
        for t in range(x.shape[-1]):
            xt = x[:, :, t]
            slack = cs.evaluate(xt) - cs.gamma
            if np.abs(slack).min() < 1e-9:
                continue
            rows_ok = bool((slack >= 0).all())
            eq3_ok = all(
                ci_feasible_eq3(
                    freq[nn, 0], xt[nn], syms[nn, 0, 0],
                    cfg.noise_power, der.gamma_lin, der.phi,
                )
                for nn in range(cfg.n_subcarriers)
            )
            assert rows_ok == eq3_ok
            n_checked += 1
    assert n_checked * cfg.n_subcarriers >= 10_000


def test_verify_ci_margins_counts_violations():
    cfg = small_cfg()
    ch = generate_tdl_channel(cfg, np.random.default_rng(9))
    freq = taps_to_frequency_response(ch, cfg.n_subcarriers)
    syms = generate_psk_symbols(cfg, np.random.default_rng(10))
    cs = build_ci_constraints(freq, syms[:, :, 0], cfg)
    x = np.zeros((cfg.n_subcarriers, cfg.n_tx), dtype=complex)
    rep = verify_ci_margins(x, cs)
    assert rep.n_violations == cs.gamma.size  # zero signal misses every target
    assert rep.min_slack == pytest.approx(-cs.gamma.max())
    assert rep.slacks.shape == cs.gamma.shape
