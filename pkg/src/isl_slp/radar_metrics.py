"""Steering vectors, emitted samples, circular autocorrelation, and ISL.

The radar-facing quality of a designed frame is the integrated sidelobe
level (ISL) of the circular autocorrelation of the signal emitted toward the
probed direction. Two equivalent routes compute it: the time-domain
definition (sum of squared autocorrelation magnitudes at nonzero lags) and
an analytic variance form of the per-subcarrier beam amplitudes; they differ
by the fixed factor 2/N^2 under the sampling conventions used here, which
the test suite pins down numerically.
"""

from __future__ import annotations

import numpy as np


def steering_vector(theta_rad: float, n_tx: int, d_over_lambda: float = 0.5) -> np.ndarray:
    """Uniform linear array response; entry m is exp(j 2 pi (d/lambda) m sin theta)."""
    m = np.arange(n_tx)
    return np.exp(1j * 2.0 * np.pi * d_over_lambda * m * np.sin(theta_rad))


def beam_spectrum(frame: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Per-subcarrier amplitudes toward the probed direction, a^H x_n.

    frame: (N, n_tx) or flat length N*n_tx.
    """
    xn = frame.reshape(-1, a.shape[0])
    return xn @ np.conj(a)


def emitted_samples(frame: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Baseband time samples x[p] = (1/sqrt(N)) sum_n (a^H x_n) e^{j 2 pi n p / N}."""
    c = beam_spectrum(frame, a)
    n = c.shape[0]
    return np.fft.ifft(c) * np.sqrt(n)


def circular_autocorrelation(x: np.ndarray) -> np.ndarray:
    """Circular lags r[m] = sum_p x[p] conj(x[(p - m) mod N]), m = 0..N-1.

    Computed through the transform identity r = IDFT(|DFT(x)|^2); the direct
    O(N^2) sum is kept in the tests as an oracle.
    """
    spec = np.fft.fft(x)
    return np.fft.ifft(np.abs(spec) ** 2)


def isl_time_domain(r: np.ndarray) -> float:
    """Sum of squared autocorrelation magnitudes over nonzero circular lags."""
    return float(np.sum(np.abs(r[1:]) ** 2))


def isl_analytic(frame: np.ndarray, a: np.ndarray) -> float:
    """Variance-form ISL of the beam spectrum.

    2 * [ (1/N) sum |a^H x_n|^4  -  ( (1/N) sum |a^H x_n|^2 )^2 ].

    Zero exactly when all beam amplitudes share one magnitude. Tiny negative
    values can appear through float cancellation at machine-flat spectra;
    callers that report ISL clamp at zero.
    """
    p = np.abs(beam_spectrum(frame, a)) ** 2
    n = p.shape[0]
    return float(2.0 * (np.mean(p * p) - np.mean(p) ** 2))


def structured_quadratics(frame: np.ndarray, a: np.ndarray) -> dict:
    """Quadratic building blocks evaluated without materializing big operators.

    Returns c (per-subcarrier beam amplitudes a^H x_n), alpha = sum |c|^2
    (the probing energy quadratic form), and quartic = sum |c|^4. The naive
    operator view lives in N^2 Nt^2 dimensions; block structure reduces every
    needed product to these per-subcarrier amplitudes.
    """
    c = beam_spectrum(frame, a)
    p = np.abs(c) ** 2
    return {"c": c, "alpha": float(p.sum()), "quartic": float((p * p).sum())}
