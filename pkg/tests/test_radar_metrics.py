import math

import numpy as np
import pytest

from isl_slp.radar_metrics import (
    beam_spectrum,
    circular_autocorrelation,
    emitted_samples,
    isl_analytic,
    isl_time_domain,
    steering_vector,
    structured_quadratics,
)

from oracles import autocorr_direct, idft_direct, isl_direct


def random_frame(rng, n, n_tx):
    return rng.standard_normal((n, n_tx)) + 1j * rng.standard_normal((n, n_tx))


def test_steering_vector_entries_and_norm():
    theta = 0.31
    a = steering_vector(theta, 8)
    for m in range(8):
        assert a[m] == pytest.approx(np.exp(1j * math.pi * m * math.sin(theta)))
    assert np.vdot(a, a).real == pytest.approx(8.0)
    # broadside is the all-ones vector
    np.testing.assert_allclose(steering_vector(0.0, 5), np.ones(5))


def test_emitted_samples_match_direct_idft():
    rng = np.random.default_rng(0)
    a = steering_vector(0.2, 4)
    frame = random_frame(rng, 16, 4)
    c = beam_spectrum(frame, a)
    np.testing.assert_allclose(
        emitted_samples(frame, a), idft_direct(c) * math.sqrt(16), atol=1e-12
    )


def test_autocorrelation_matches_direct_sum():
    rng = np.random.default_rng(1)
    for n in (1, 2, 5, 16):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        np.testing.assert_allclose(
            circular_autocorrelation(x), autocorr_direct(x), atol=1e-10
        )


def test_single_tone_closed_forms():
    # One occupied subcarrier of amplitude c0: |r[m]| = c0^2 at every lag,
    # time-domain ISL (N-1) c0^4, analytic ISL 2 c0^4 (N-1) / N^2.
    n, n_tx, c0 = 8, 3, 1.7
    a = steering_vector(0.4, n_tx)
    frame = np.zeros((n, n_tx), dtype=complex)
    frame[5] = c0 * a / np.vdot(a, a).real  # a^H x_5 = c0
    x = emitted_samples(frame, a)
    r = circular_autocorrelation(x)
    np.testing.assert_allclose(np.abs(r), c0**2, rtol=1e-12)
    assert isl_time_domain(r) == pytest.approx((n - 1) * c0**4, rel=1e-12)
    assert isl_analytic(frame, a) == pytest.approx(
        2.0 * c0**4 * (n - 1) / n**2, rel=1e-12
    )


def test_flat_spectrum_has_zero_isl():
    n, n_tx = 16, 4
    a = steering_vector(-0.1, n_tx)
    rng = np.random.default_rng(2)
    phases = np.exp(1j * rng.uniform(0, 2 * math.pi, n))
    frame = phases[:, None] * a[None, :] / np.vdot(a, a).real
    assert abs(isl_analytic(frame, a)) < 1e-15
    r = circular_autocorrelation(emitted_samples(frame, a))
    assert isl_time_domain(r) < 1e-24


def test_parseval_and_zero_lag_energy():
    rng = np.random.default_rng(3)
    a = steering_vector(0.7, 6)
    for _ in range(25):
        frame = random_frame(rng, 32, 6)
        c = beam_spectrum(frame, a)
        x = emitted_samples(frame, a)
        energy_f = float(np.sum(np.abs(c) ** 2))
        energy_t = float(np.sum(np.abs(x) ** 2))
        assert energy_t == pytest.approx(energy_f, rel=1e-12)
        r = circular_autocorrelation(x)
        assert r[0].real == pytest.approx(energy_t, rel=1e-12)
        assert abs(r[0].imag) < 1e-9 * energy_t


def test_time_and_analytic_isl_agree_up_to_fixed_factor():
    rng = np.random.default_rng(4)
    for n, n_tx in [(4, 2), (8, 3), (64, 8), (17, 5)]:
        a = steering_vector(0.25, n_tx)
        frame = random_frame(rng, n, n_tx)
        r = circular_autocorrelation(emitted_samples(frame, a))
        t = isl_time_domain(r)
        assert isl_analytic(frame, a) == pytest.approx(2.0 * t / n**2, rel=1e-10)
        assert t == pytest.approx(isl_direct(emitted_samples(frame, a)), rel=1e-9)


def test_isl_invariant_to_per_subcarrier_phases():
    # Both ISL routes depend on the beam spectrum only through its magnitudes.
    rng = np.random.default_rng(5)
    a = steering_vector(0.5, 4)
    frame = random_frame(rng, 24, 4)
    phases = np.exp(1j * rng.uniform(0, 2 * math.pi, 24))
    rotated = phases[:, None] * frame
    assert isl_analytic(rotated, a) == pytest.approx(
        isl_analytic(frame, a), rel=1e-12
    )
    t0 = isl_time_domain(circular_autocorrelation(emitted_samples(frame, a)))
    t1 = isl_time_domain(circular_autocorrelation(emitted_samples(rotated, a)))
    assert t1 == pytest.approx(t0, rel=1e-10)


def test_structured_quadratics_feed_the_analytic_isl():
    rng = np.random.default_rng(6)
    a = steering_vector(-0.4, 5)
    frame = random_frame(rng, 12, 5)
    q = structured_quadratics(frame, a)
    np.testing.assert_allclose(q["c"], beam_spectrum(frame, a))
    n = 12
    assert isl_analytic(frame, a) == pytest.approx(
        2.0 * (q["quartic"] / n - (q["alpha"] / n) ** 2), rel=1e-12
    )


def test_flat_input_accepts_vector_form():
    rng = np.random.default_rng(7)
    a = steering_vector(0.3, 3)
    frame = random_frame(rng, 6, 3)
    np.testing.assert_array_equal(
        beam_spectrum(frame.ravel(), a), beam_spectrum(frame, a)
    )
    assert isl_analytic(frame.ravel(), a) == isl_analytic(frame, a)
