"""Flat key=value scenario configuration with validated defaults."""

from dataclasses import dataclass, replace

from .energy import validate_thresholds


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    gamma_u: float = 0.8
    gamma_l: float = 0.2
    t_sample: float = 0.2
    safeguard_interval: float | None = None  # defaults to 10 * t_sample
    mcst_reset_timer: float = 5.0
    alpha: float = 0.8
    control_latency: float = 0.001
    horizon: float = 1440.0
    mode: str = "gospf"
    ref_bandwidth: float = 1e8
    control_msg_bytes: int = 64
    tcp_burst_frac: float = 0.01
    p_active: float = 1.0
    p_idle: float = 0.8
    p_sleep: float = 0.016
    e_c: float = 0.0
    seed: int | None = None  # reserved; no randomized tie-breaking is used

    @property
    def safeguard(self) -> float:
        return self.safeguard_interval if self.safeguard_interval is not None \
            else 10.0 * self.t_sample

    def validate(self) -> None:
        try:
            validate_thresholds(self.gamma_u, self.gamma_l)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.t_sample <= 0:
            raise ConfigError(f"t_sample must be positive, got {self.t_sample}")
        if self.horizon <= 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.mode not in ("gospf", "baseline"):
            raise ConfigError(f"mode must be gospf or baseline, got {self.mode!r}")
        if not (0 < self.alpha <= 1):
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.control_latency < 0:
            raise ConfigError("control_latency must be >= 0")
        if self.safeguard < 0 or self.mcst_reset_timer < 0:
            raise ConfigError("timers must be >= 0")


_FLOAT_KEYS = {"gamma_u", "gamma_l", "t_sample", "safeguard_interval",
               "mcst_reset_timer", "alpha", "control_latency", "horizon",
               "ref_bandwidth", "tcp_burst_frac", "p_active", "p_idle",
               "p_sleep", "e_c"}
_INT_KEYS = {"control_msg_bytes", "seed"}
_STR_KEYS = {"mode"}


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse `key=value` lines over the defaults (or over `base`)."""
    cfg = base or ScenarioConfig()
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key in _FLOAT_KEYS:
                updates[key] = float(value)
            elif key in _INT_KEYS:
                updates[key] = int(value)
            elif key in _STR_KEYS:
                updates[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from None
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg
