"""Interface operational states, per-interface energy accounting, and thresholds."""

from dataclasses import dataclass
from enum import Enum


class EnergyError(ValueError):
    pass


class NegativeDuration(EnergyError):
    pass


class InvalidTransition(EnergyError):
    pass


class InvalidThresholds(EnergyError):
    pass


class ZeroWindow(EnergyError):
    pass


class ZeroRate(EnergyError):
    pass


class OperationalState(Enum):
    ACTIVE = "active"
    IDLE = "idle"
    SLEEP = "sleep"


class InterfaceRole(Enum):
    """Topology role of an interface as seen by the protocol."""

    MCST_TREE = "mcst_tree"
    MCST_UNCUT = "mcst_uncut"
    MCST_CUT = "mcst_cut"
    MCST_GRAFT = "mcst_graft"


class UtilizationClass(Enum):
    OVERUTILIZED = "overutilized"
    NORMAL = "normal"
    UNDERUTILIZED = "underutilized"


@dataclass
class EnergyAccount:
    """Accumulated state time and energy for one interface.

    Energy is p_active*t_active + p_idle*t_idle + p_sleep*t_sleep plus e_c per
    sleep-to-idle transition; `switch_count` tracks those transitions.
    """

    p_active: float
    p_idle: float
    p_sleep: float
    e_c: float = 0.0
    t_active: float = 0.0
    t_idle: float = 0.0
    t_sleep: float = 0.0
    switch_count: int = 0
    energy_j: float = 0.0
    state: OperationalState = OperationalState.IDLE

    def accrue(self, state: OperationalState, duration: float) -> None:
        """Charge `duration` seconds spent in `state`."""
        if duration < 0:
            raise NegativeDuration(f"duration {duration} < 0")
        if state is OperationalState.ACTIVE:
            self.t_active += duration
            self.energy_j += self.p_active * duration
        elif state is OperationalState.IDLE:
            self.t_idle += duration
            self.energy_j += self.p_idle * duration
        else:
            self.t_sleep += duration
            self.energy_j += self.p_sleep * duration

    def record_wakeup(self) -> None:
        """Sleep-to-idle transition: bump the switch counter and pay e_c."""
        if self.state is not OperationalState.SLEEP:
            raise InvalidTransition(f"wakeup from {self.state.value}, expected sleep")
        self.switch_count += 1
        self.energy_j += self.e_c
        self.state = OperationalState.IDLE

    def enter_sleep(self) -> None:
        self.state = OperationalState.SLEEP

    @property
    def elapsed(self) -> float:
        return self.t_active + self.t_idle + self.t_sleep


def utilization(bits: float, line_rate: float, window: float) -> float:
    """Utilization ratio in [0, 1]: bits handled over line_rate*window."""
    if line_rate <= 0:
        raise ZeroRate(f"line rate {line_rate} <= 0")
    if window <= 0:
        raise ZeroWindow(f"window {window} <= 0")
    return min(1.0, max(0.0, bits / (line_rate * window)))


def classify(u_r: float, gamma_u: float, gamma_l: float) -> UtilizationClass:
    """Overutilized above gamma_u, underutilized below gamma_l, else normal."""
    validate_thresholds(gamma_u, gamma_l)
    return _classify(u_r, gamma_u, gamma_l)


def _classify(u_r: float, gamma_u: float, gamma_l: float) -> UtilizationClass:
    # Hot path: thresholds already validated by the caller.
    if u_r > gamma_u:
        return UtilizationClass.OVERUTILIZED
    if u_r < gamma_l:
        return UtilizationClass.UNDERUTILIZED
    return UtilizationClass.NORMAL


def validate_thresholds(gamma_u: float, gamma_l: float) -> None:
    if not (0.0 <= gamma_l < gamma_u <= 1.0):
        raise InvalidThresholds(
            f"need 0 <= gamma_l < gamma_u <= 1, got gamma_l={gamma_l} gamma_u={gamma_u}")


def total_network_energy(accounts) -> float:
    """Sum of accumulated energy over all interface accounts."""
    return sum(acct.energy_j for acct in accounts)


@dataclass(frozen=True)
class UtilizationSample:
    """Bits handled by one interface during one sampling window."""

    bits: float
    line_rate: float
    window: float

    @property
    def u_r(self) -> float:
        return utilization(self.bits, self.line_rate, self.window)
