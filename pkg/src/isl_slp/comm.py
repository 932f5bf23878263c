"""Channels, PSK symbols, and constructive-interference constraint sets.

The downlink channel is a tapped delay line per (user, antenna); its DFT
gives per-subcarrier frequency responses. For each subcarrier and user the
known data symbol rotates the channel into two half-plane constraints whose
joint satisfaction keeps the noise-free received point inside the
constructive region at the requested SNR margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, validated


@dataclass(frozen=True)
class TdlChannel:
    """Time-domain taps, shape (n_taps, n_users, n_tx)."""

    taps: np.ndarray

    @property
    def n_taps(self) -> int:
        return self.taps.shape[0]


@dataclass(frozen=True)
class CiConstraintSet:
    """Rotated-channel constraint rows for one symbol slot.

    rows: complex (N, 2K, n_tx); constraint i of subcarrier n reads
        Re{ rows[n, i] @ x_n } >= gamma[n, i].
    gamma: (N, 2K) nonnegative thresholds; the two rows of user k share one
    threshold sigma * sqrt(Gamma_{n,k}) * sin(phi).
    """

    rows: np.ndarray
    gamma: np.ndarray

    @property
    def n_subcarriers(self) -> int:
        return self.rows.shape[0]

    def real_form(self) -> tuple[np.ndarray, np.ndarray]:
        """Constraints as real matrices G with G[n] @ [Re x_n; Im x_n] >= gamma[n]."""
        g = np.concatenate([self.rows.real, -self.rows.imag], axis=2)
        return g, self.gamma

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Left-hand sides Re{rows @ x_n}, shape (N, 2K).

        x may be (N, n_tx) or a flat length N*n_tx vector.
        """
        xn = x.reshape(self.rows.shape[0], -1)
        return np.einsum("nij,nj->ni", self.rows, xn).real


def generate_tdl_channel(cfg: SystemConfig, rng: np.random.Generator) -> TdlChannel:
    """Draw a tapped-delay-line channel for every (user, antenna) pair.

    Taps are i.i.d. circularly-symmetric complex Gaussian with an
    exponentially decaying power-delay profile (cfg.tap_decay_db per tap),
    normalized so the average total tap power per pair is the configured
    large-scale channel gain.
    """
    der = validated(cfg)
    u = np.arange(cfg.n_taps, dtype=float)
    pdp = 10.0 ** (-cfg.tap_decay_db * u / 10.0)
    pdp *= der.channel_gain_lin / pdp.sum()
    scale = np.sqrt(pdp / 2.0)[:, None, None]
    shape = (cfg.n_taps, cfg.n_users, cfg.n_tx)
    taps = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return TdlChannel(taps=taps)


def taps_to_frequency_response(ch: TdlChannel, n_subcarriers: int) -> np.ndarray:
    """Per-subcarrier responses h_{n,k}, shape (N, n_users, n_tx).

    h_{n,k} = sum_u taps[u] * exp(-j 2 pi n u / N), i.e. the N-point DFT of
    the zero-padded tap sequence along delay.
    """
    if ch.n_taps > n_subcarriers:
        raise ValueError("more taps than subcarriers")
    padded = np.zeros((n_subcarriers,) + ch.taps.shape[1:], dtype=complex)
    padded[: ch.n_taps] = ch.taps
    return np.fft.fft(padded, axis=0)


def psk_constellation(order: int) -> np.ndarray:
    """Constellation points exp(j(2m+1)pi/order), m = 0..order-1."""
    m = np.arange(order)
    return np.exp(1j * (2 * m + 1) * np.pi / order)


def generate_psk_symbols(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform i.i.d. PSK symbols, shape (N, n_users, n_symbols)."""
    points = psk_constellation(cfg.psk_order)
    idx = rng.integers(0, cfg.psk_order, size=(cfg.n_subcarriers, cfg.n_users, cfg.n_symbols))
    return points[idx]


def build_ci_constraints(
    freq_ch: np.ndarray, symbols_slot: np.ndarray, cfg: SystemConfig
) -> CiConstraintSet:
    """Constraint rows for one symbol slot.

    freq_ch: (N, K, n_tx); symbols_slot: (N, K) unit-modulus.

    With phi = pi/Omega and the symbol phase removed, the two rows per user
    are h^H e^{-j ang(s)} (sin phi -+ j cos phi); both share the threshold
    sigma sqrt(Gamma) sin phi. Row order per user: (sin phi + j cos phi)
    first, then (sin phi - j cos phi).
    """
    der = validated(cfg)
    n, k, nt = freq_ch.shape
    sphi, cphi = math.sin(der.phi), math.cos(der.phi)
    derot = np.exp(-1j * np.angle(symbols_slot))  # (N, K)
    base = np.conj(freq_ch) * derot[:, :, None]  # h^H e^{-j ang(s)} as row vectors
    rows = np.empty((n, 2 * k, nt), dtype=complex)
    rows[:, 0::2, :] = base * (sphi + 1j * cphi)
    rows[:, 1::2, :] = base * (sphi - 1j * cphi)
    gam_user = math.sqrt(cfg.noise_power * der.gamma_lin) * sphi
    gamma = np.full((n, 2 * k), gam_user)
    return CiConstraintSet(rows=rows, gamma=gamma)


@dataclass(frozen=True)
class MarginReport:
    min_slack: float
    n_violations: int
    slacks: np.ndarray


def verify_ci_margins(
    x: np.ndarray, cs: CiConstraintSet, tol: float = 1e-6
) -> MarginReport:
    """Per-constraint slacks of a candidate waveform; violations below -tol."""
    slacks = cs.evaluate(x) - cs.gamma
    return MarginReport(
        min_slack=float(slacks.min()),
        n_violations=int((slacks < -tol).sum()),
        slacks=slacks,
    )
