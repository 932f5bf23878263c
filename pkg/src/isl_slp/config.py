"""System configuration: every physical and algorithmic scalar in one place.

Configs live in flat ``key = value`` text files. Keys match the
:class:`SystemConfig` field names; dotted keys (``experiment.key = value``)
override per experiment. Thresholds and gains are given in dB in files and
converted to linear internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

C0 = 299792458.0  # vacuum speed of light, m/s


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration input."""


def db_to_lin(db: float) -> float:
    return 10.0 ** (db / 10.0)


def lin_to_db(lin: float) -> float:
    if lin <= 0:
        raise ValueError("dB conversion needs a positive linear value")
    return 10.0 * math.log10(lin)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All tunables of the waveform design problem and its channel.

    Power quantities are linear watts, thresholds and gains dB as suffixed.
    ``init_policy`` selects the optimizer's starting point: ``scaled``
    (minimum-power point scaled up toward the budget along itself),
    ``fill`` (minimum-power point plus a constraint-preserving spectral
    equalization that exhausts the budget), or ``minimum`` (the bare
    minimum-power point). ``beam_slope`` selects the linear coefficient used
    for the concave part of the surrogate: ``anchored`` (the reference
    assembly) or ``tangent`` (the conservative global tangent variant).
    """

    n_subcarriers: int = 64
    n_tx: int = 8
    n_users: int = 3
    psk_order: int = 4
    subcarrier_spacing_hz: float = 1.0e6
    carrier_freq_hz: float = 5.9e9
    power_budget: float = 0.5
    noise_power: float = 0.01  # 10 dBm
    snr_thresholds_db: float = 6.0
    cp_len: int = 16
    n_symbols: int = 50
    conv_threshold: float = 1.0e-5
    max_iters: int = 500
    antenna_spacing_wavelengths: float = 0.5
    rng_seed: int = 0
    # channel model
    n_taps: int = 4
    tap_decay_db: float = 3.0
    channel_gain_db: float = 15.0
    # optimizer policy
    init_policy: str = "scaled"
    beam_slope: str = "anchored"
    # probing direction
    beam_angle_deg: float = 0.0


@dataclass(frozen=True)
class Derived:
    """Read-only quantities derived from a validated config."""

    phi: float
    symbol_duration_s: float
    chip_duration_s: float
    wavelength_m: float
    bin_to_meters: float
    unambiguous_range_m: float
    gamma_lin: float
    channel_gain_lin: float
    d_over_lambda: float
    beam_angle_rad: float


def validate(cfg: SystemConfig) -> list[str]:
    """Return an itemized list of problems; empty means valid."""
    errs = []
    if cfg.n_subcarriers < 1:
        errs.append("n_subcarriers must be positive")
    if cfg.n_tx < 1:
        errs.append("n_tx must be positive")
    if cfg.n_users < 1:
        errs.append("n_users must be positive")
    if cfg.n_users > 6:
        errs.append("n_users > 6 not supported (constraint enumeration grows as 4^K)")
    if cfg.psk_order < 2 or cfg.psk_order % 2 != 0:
        errs.append("psk_order must be even and >= 2")
    if cfg.subcarrier_spacing_hz <= 0:
        errs.append("subcarrier_spacing_hz must be positive")
    if cfg.carrier_freq_hz <= 0:
        errs.append("carrier_freq_hz must be positive")
    if cfg.power_budget <= 0:
        errs.append("power_budget must be positive")
    if cfg.noise_power <= 0:
        errs.append("noise_power must be positive")
    if not math.isfinite(cfg.snr_thresholds_db):
        errs.append("snr_thresholds_db must be finite")
    if cfg.cp_len < 0:
        errs.append("cp_len must be nonnegative")
    if cfg.cp_len > cfg.n_subcarriers:
        errs.append("cp_len must not exceed n_subcarriers")
    if cfg.n_symbols < 1:
        errs.append("n_symbols must be positive")
    if cfg.conv_threshold <= 0:
        errs.append("conv_threshold must be positive")
    if cfg.max_iters < 1:
        errs.append("max_iters must be positive")
    if cfg.antenna_spacing_wavelengths <= 0:
        errs.append("antenna_spacing_wavelengths must be positive")
    if cfg.n_taps < 1:
        errs.append("n_taps must be positive")
    if cfg.n_taps > cfg.cp_len + 1:
        errs.append("n_taps must fit in the cyclic prefix (n_taps <= cp_len + 1)")
    if cfg.init_policy not in ("scaled", "fill", "minimum"):
        errs.append("init_policy must be one of scaled, fill, minimum")
    if cfg.beam_slope not in ("anchored", "tangent"):
        errs.append("beam_slope must be anchored or tangent")
    return errs


def validated(cfg: SystemConfig) -> Derived:
    """Validate and derive the secondary quantities.

    Raises ConfigError listing every problem when the config is invalid.
    Idempotent and side-effect free.
    """
    errs = validate(cfg)
    if errs:
        raise ConfigError("; ".join(errs))
    ts = 1.0 / cfg.subcarrier_spacing_hz
    lam = C0 / cfg.carrier_freq_hz
    return Derived(
        phi=math.pi / cfg.psk_order,
        symbol_duration_s=ts,
        chip_duration_s=ts / cfg.n_subcarriers,
        wavelength_m=lam,
        bin_to_meters=C0 / (2.0 * cfg.n_subcarriers * cfg.subcarrier_spacing_hz),
        unambiguous_range_m=C0 / (2.0 * cfg.subcarrier_spacing_hz),
        gamma_lin=db_to_lin(cfg.snr_thresholds_db),
        channel_gain_lin=db_to_lin(cfg.channel_gain_db),
        d_over_lambda=cfg.antenna_spacing_wavelengths,
        beam_angle_rad=math.radians(cfg.beam_angle_deg),
    )


_FIELD_TYPES = {f.name: f.type for f in fields(SystemConfig)}


def _coerce(key: str, raw: str):
    """Parse a raw config value string by the target field's type."""
    raw = raw.strip()
    ftype = _FIELD_TYPES.get(key)
    if ftype in ("int",):
        try:
            return int(raw)
        except ValueError as e:
            raise ConfigError(f"{key}: expected integer, got {raw!r}") from e
    if ftype in ("float",):
        try:
            return float(raw)
        except ValueError as e:
            raise ConfigError(f"{key}: expected number, got {raw!r}") from e
    if ftype in ("str",):
        return raw
    # Unknown to SystemConfig: leave as a best-effort literal for experiment
    # overrides (int, then float, then comma list, then string).
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    if "," in raw:
        return [_coerce("", part) for part in raw.split(",")]
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    return raw


def parse_config_text(text: str) -> tuple[dict, dict]:
    """Parse flat ``key = value`` text.

    Returns (base, sections) where sections maps an experiment name to its
    dotted-key overrides. Lines starting with # and blank lines are skipped.
    """
    base: dict = {}
    sections: dict[str, dict] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if "." in key:
            section, _, subkey = key.partition(".")
            sections.setdefault(section, {})[subkey] = _coerce(subkey, raw)
        else:
            base[key] = _coerce(key, raw)
    return base, sections


def load_config(path: str) -> tuple[dict, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def build_system_config(base: dict, overrides: dict | None = None) -> SystemConfig:
    """Assemble a SystemConfig from parsed key/value dicts.

    Unknown keys raise ConfigError so typos fail loudly instead of silently
    running defaults.
    """
    merged = dict(base)
    if overrides:
        merged.update(overrides)
    known = set(_FIELD_TYPES)
    unknown = [k for k in merged if k not in known]
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = replace(SystemConfig(), **merged)
    validated(cfg)
    return cfg
