"""Deterministic windowed simulation loop binding topology, protocol, traffic,
and energy accounting, plus the GOSPF-vs-baseline comparison report.

Time advances in sampling windows. Within each window: demands are evaluated
and allocated on the routes the nodes currently believe in, energy accrues
for the window, every node runs its periodic check in ascending node-id
order, and the control messages those checks emit are drained in
(arrival, origin, seq, receiver) order. Identical scenarios produce
byte-identical metrics and event logs.
"""

import hashlib
import heapq
import logging
import math
from dataclasses import dataclass, field

from .config import ConfigError, ScenarioConfig
from .energy import (EnergyAccount, OperationalState, UtilizationSample,
                     total_network_energy)
from .graph import (DisconnectedTopology, Topology, bfs_hop_counts,
                    is_connected, shortest_paths, write_topology)
from .protocol import GospfNode, ProtocolHooks, Transmission
from .traffic import TrafficMatrix, allocate, write_traffic

log = logging.getLogger(__name__)

MODE_GOSPF = "gospf"
MODE_BASELINE = "baseline"


class MismatchedScenarios(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    traffic: TrafficMatrix
    config: ScenarioConfig
    link_failures: tuple[tuple[float, int], ...] = ()  # (time, link_id)

    def fingerprint(self) -> str:
        """Scenario identity for compare(); excludes the mode."""
        cfg = self.config
        blob = "\x00".join([
            write_topology(self.topology),
            write_traffic(self.traffic),
            f"{cfg.horizon!r}|{cfg.t_sample!r}|{cfg.gamma_u!r}|{cfg.gamma_l!r}"
            f"|{cfg.safeguard!r}|{cfg.ref_bandwidth!r}|{cfg.tcp_burst_frac!r}",
            repr(sorted(self.link_failures)),
        ])
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class WindowState:
    """Snapshot used by the optimality-gap oracle."""

    active: frozenset[int]
    flows: dict[int, tuple[tuple[int, ...] | None, float]]  # fid -> (path, rate)


@dataclass
class MetricsSeries:
    mode: str
    fingerprint: str
    t_sample: float
    horizon: float
    times: list[float] = field(default_factory=list)
    active_links: list[int] = field(default_factory=list)
    power_w: list[float] = field(default_factory=list)
    throughput_bps: list[float] = field(default_factory=list)
    energy_j: list[float] = field(default_factory=list)  # cumulative
    ctrl_bytes: list[int] = field(default_factory=list)
    dropped_bits: list[float] = field(default_factory=list)
    quiesced: list[bool] = field(default_factory=list)
    offered_bits_total: float = 0.0
    delivered_bits_total: float = 0.0
    dropped_bits_total: float = 0.0
    ctrl_bytes_total: int = 0
    congestion_unresolved: int = 0

    @property
    def total_energy_j(self) -> float:
        return self.energy_j[-1] if self.energy_j else 0.0

    @property
    def avg_active_links(self) -> float:
        return sum(self.active_links) / len(self.active_links) if self.active_links else 0.0

    @property
    def loss_pct(self) -> float:
        if self.offered_bits_total <= 0:
            return 0.0
        return 100.0 * self.dropped_bits_total / self.offered_bits_total

    @property
    def overhead_pct(self) -> float:
        delivered_bytes = self.delivered_bits_total / 8.0
        if delivered_bytes <= 0:
            return 0.0 if self.ctrl_bytes_total == 0 else math.inf
        return 100.0 * self.ctrl_bytes_total / delivered_bytes

    def csv_text(self) -> str:
        lines = ["t,active_links,power_w,throughput_bps,energy_j,ctrl_bytes,dropped_bits"]
        for i in range(len(self.times)):
            lines.append(f"{self.times[i]!r},{self.active_links[i]},{self.power_w[i]!r},"
                         f"{self.throughput_bps[i]!r},{self.energy_j[i]!r},"
                         f"{self.ctrl_bytes[i]},{self.dropped_bits[i]!r}")
        return "\n".join(lines) + "\n"

    def summary_text(self) -> str:
        lines = [
            f"mode={self.mode}",
            f"fingerprint={self.fingerprint}",
            f"windows={len(self.times)}",
            f"t_sample={self.t_sample!r}",
            f"horizon={self.horizon!r}",
            f"total_energy_j={self.total_energy_j!r}",
            f"avg_active_links={self.avg_active_links!r}",
            f"loss_pct={self.loss_pct!r}",
            f"overhead_pct={self.overhead_pct!r}",
            f"congestion_unresolved={self.congestion_unresolved}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class RunResult:
    metrics: MetricsSeries
    events: list[str]
    states: list[WindowState] | None = None
    accounts: dict[tuple[int, int], EnergyAccount] | None = None  # (link, node)


@dataclass
class SavingReport:
    saving_pct: float
    loss_pct_a: float
    loss_pct_b: float
    overhead_pct_a: float
    overhead_pct_b: float
    avg_active_links_a: float
    avg_active_links_b: float

    @property
    def loss_delta_pct(self) -> float:
        return self.loss_pct_a - self.loss_pct_b

    def text(self) -> str:
        lines = [
            f"saving_pct={self.saving_pct!r}",
            f"loss_delta_pct={self.loss_delta_pct!r}",
            f"loss_pct_a={self.loss_pct_a!r}",
            f"loss_pct_b={self.loss_pct_b!r}",
            f"overhead_pct_a={self.overhead_pct_a!r}",
            f"overhead_pct_b={self.overhead_pct_b!r}",
            f"avg_active_links_a={self.avg_active_links_a!r}",
            f"avg_active_links_b={self.avg_active_links_b!r}",
        ]
        return "\n".join(lines) + "\n"


def compare(a: MetricsSeries, b: MetricsSeries) -> SavingReport:
    """Energy saving of run `a` relative to reference run `b` (the baseline)."""
    if a.fingerprint != b.fingerprint:
        raise MismatchedScenarios("metric series come from different scenarios")
    if b.total_energy_j <= 0:
        raise MismatchedScenarios("reference run consumed no energy")
    saving = (1.0 - a.total_energy_j / b.total_energy_j) * 100.0
    return SavingReport(
        saving_pct=saving,
        loss_pct_a=a.loss_pct, loss_pct_b=b.loss_pct,
        overhead_pct_a=a.overhead_pct, overhead_pct_b=b.overhead_pct,
        avg_active_links_a=a.avg_active_links, avg_active_links_b=b.avg_active_links,
    )


class _EngineHooks(ProtocolHooks):
    def __init__(self, engine: "_Run"):
        self.engine = engine

    def record_event(self, t, node, event, link, seq):
        self.engine.record_event(t, node, event, link, seq)

    def interface_woke(self, t, node, link):
        acct = self.engine.accounts[(link, node)]
        acct.record_wakeup()

    def interface_slept(self, t, node, link):
        self.engine.accounts[(link, node)].enter_sleep()


class _Run:
    """State for a single simulation run."""

    def __init__(self, scenario: Scenario, capture_states: bool):
        scenario.config.validate()
        self.scenario = scenario
        self.cfg = scenario.config
        self.topology = scenario.topology
        self.capture_states = capture_states

        for flow in scenario.traffic.flows.values():
            if flow.src not in self.topology.nodes or flow.dst not in self.topology.nodes:
                raise ConfigError(f"flow {flow.flow_id} references unknown node")
        for _t, lid in scenario.link_failures:
            if lid not in self.topology.links:
                raise ConfigError(f"scheduled failure of unknown link {lid}")

        hops = bfs_hop_counts(self.topology, min(self.topology.nodes))
        diameter = max(hops.values()) if hops else 0
        if self.cfg.control_latency * (diameter + 2) > self.cfg.t_sample:
            raise ConfigError(
                "control_latency too large for t_sample: floods must settle "
                "within one sampling window")

        self.events: list[str] = []
        self.accounts: dict[tuple[int, int], EnergyAccount] = {}
        for link in self.topology.links.values():
            for side in link.endpoints():
                self.accounts[(link.link_id, side)] = EnergyAccount(
                    p_active=link.p_active, p_idle=link.p_idle,
                    p_sleep=link.p_sleep, e_c=link.e_c)

        self.nodes: dict[int, GospfNode] = {}
        if self.cfg.mode == MODE_GOSPF:
            hooks = _EngineHooks(self)
            for nid in self.topology.node_ids:
                self.nodes[nid] = GospfNode(
                    nid, self.topology, gamma_u=self.cfg.gamma_u,
                    gamma_l=self.cfg.gamma_l, safeguard_interval=self.cfg.safeguard,
                    mcst_reset_timer=self.cfg.mcst_reset_timer,
                    t_sample=self.cfg.t_sample,
                    ref_bandwidth=self.cfg.ref_bandwidth, hooks=hooks)

        self.failed: set[int] = set()
        self.pending_ctrl_bits: dict[int, float] = {}
        self.msg_queue: list[tuple[float, int, int, int, int]] = []  # heap
        self._queued: dict[int, tuple] = {}
        self._queue_counter = 0
        self._routing_cache: dict[int, tuple[int, object]] = {}
        self._baseline_tables: dict[int, object] = {}
        self.congestion_unresolved = 0

    # -------------------------------------------------------------- plumbing

    def record_event(self, t, node, event, link, seq):
        self.events.append(f"t={t:.6f} node={node} event={event} link={link} seq={seq}")
        if event == "CONGESTION_UNRESOLVED":
            self.congestion_unresolved += 1

    def _enqueue(self, send_time: float, tx: Transmission) -> int:
        """Queue a transmission; returns its size in bytes."""
        arrival = send_time + self.cfg.control_latency
        msg = tx.message
        handle = self._queue_counter
        self._queue_counter += 1
        heapq.heappush(self.msg_queue,
                       (arrival, msg.origin, msg.seq, tx.receiver, handle))
        self._queued[handle] = (tx, )
        self.record_event(send_time, tx.sender, "FLOOD", tx.link_id, msg.seq)
        bits = self.cfg.control_msg_bytes * 8.0
        self.pending_ctrl_bits[tx.link_id] = \
            self.pending_ctrl_bits.get(tx.link_id, 0.0) + bits
        return self.cfg.control_msg_bytes

    def _drain_messages(self) -> int:
        """Deliver every queued message (floods settle within the window)."""
        ctrl_bytes = 0
        while self.msg_queue:
            arrival, _origin, _seq, receiver, handle = heapq.heappop(self.msg_queue)
            (tx, ) = self._queued.pop(handle)
            node = self.nodes[receiver]
            for out in node.handle_message(arrival, tx.message, arrival_link=tx.link_id):
                ctrl_bytes += self._enqueue(arrival, out)
        return ctrl_bytes

    def _ground_truth_active(self) -> frozenset[int]:
        """Links usable for traffic: not failed, no endpoint asleep."""
        active = []
        for link in self.topology.links.values():
            lid = link.link_id
            if lid in self.failed:
                continue
            if self.cfg.mode == MODE_GOSPF:
                a_state = self.nodes[link.a].iface_state[lid]
                b_state = self.nodes[link.b].iface_state[lid]
                if a_state is OperationalState.SLEEP or b_state is OperationalState.SLEEP:
                    continue
            active.append(lid)
        return frozenset(active)

    def _routing_for(self, source: int):
        if self.cfg.mode == MODE_GOSPF:
            node = self.nodes[source]
            cached = self._routing_cache.get(source)
            if cached is not None and cached[0] == node.view_version:
                return cached[1]
            table = node.routing_table()
            self._routing_cache[source] = (node.view_version, table)
            return table
        table = self._baseline_tables.get(source)
        if table is None:
            active = frozenset(self.topology.links) - frozenset(self.failed)
            table = shortest_paths(self.topology, active, source, self.cfg.ref_bandwidth)
            self._baseline_tables[source] = table
        return table

    # ------------------------------------------------------------------ run

    def run(self) -> RunResult:
        cfg = self.cfg
        ts = cfg.t_sample
        n_windows = int(math.floor(cfg.horizon / ts + 1e-9))
        metrics = MetricsSeries(mode=cfg.mode, fingerprint=self.scenario.fingerprint(),
                                t_sample=ts, horizon=cfg.horizon)
        states: list[WindowState] | None = [] if self.capture_states else None

        failures = sorted(self.scenario.link_failures)
        failure_idx = 0
        flows = [self.scenario.traffic.flows[fid]
                 for fid in sorted(self.scenario.traffic.flows)]
        capacities = {lid: link.capacity for lid, link in self.topology.links.items()}
        cumulative_energy = 0.0

        for w in range(n_windows):
            t0 = w * ts
            t1 = t0 + ts
            events_before = len(self.events)
            failed_this_window = False

            # Scheduled link failures take effect at the window start.
            while failure_idx < len(failures) and failures[failure_idx][0] < t1:
                _ft, lid = failures[failure_idx]
                failure_idx += 1
                if lid in self.failed:
                    continue
                self.failed.add(lid)
                failed_this_window = True
                link = self.topology.links[lid]
                if self.cfg.mode == MODE_GOSPF:
                    self.nodes[link.a].notice_link_failure(lid)
                    self.nodes[link.b].notice_link_failure(lid)
                else:
                    for acct_side in link.endpoints():
                        self.accounts[(lid, acct_side)].enter_sleep()
                    self._baseline_tables.clear()

            if self.cfg.mode == MODE_GOSPF:
                for nid in self.topology.node_ids:
                    try:
                        self.nodes[nid].complete_reset_if_due(t0)
                    except DisconnectedTopology as exc:
                        raise DisconnectedTopology(
                            f"window {w}: link failures partitioned the "
                            f"network; no spanning tree survives") from exc

            # Demands and fluid allocation on the currently believed routes.
            rates = {}
            for flow in flows:
                rate = flow.rate_at(t0)
                rate += flow.burst_at(t0, ts, cfg.tcp_burst_frac)
                rates[flow.flow_id] = rate
            usable = self._ground_truth_active()
            flow_paths = []
            for flow in flows:
                rate = rates[flow.flow_id]
                if rate <= 0:
                    continue
                table = self._routing_for(flow.src)
                path = table.paths.get(flow.dst)
                flow_paths.append((flow.flow_id, rate, path))
            alloc = allocate(flow_paths, capacities, usable, ts,
                             self.topology.link_between)

            # Interface bit counters: data plus last window's control traffic.
            link_bits = dict(alloc.link_bits)
            for lid, bits in self.pending_ctrl_bits.items():
                link_bits[lid] = link_bits.get(lid, 0.0) + bits
            self.pending_ctrl_bits = {}

            # Energy for this window under the states in force during it.
            for link in self.topology.links.values():
                lid = link.link_id
                bits = link_bits.get(lid, 0.0)
                t_ac = min(ts, bits / link.capacity)
                for side in link.endpoints():
                    acct = self.accounts[(lid, side)]
                    if acct.state is OperationalState.SLEEP:
                        acct.accrue(OperationalState.SLEEP, ts)
                    else:
                        acct.accrue(OperationalState.ACTIVE, t_ac)
                        acct.accrue(OperationalState.IDLE, ts - t_ac)

            # Periodic checks, then drain the resulting floods.
            ctrl_bytes = 0
            if self.cfg.mode == MODE_GOSPF:
                samples = {
                    lid: UtilizationSample(bits=link_bits.get(lid, 0.0),
                                           line_rate=capacities[lid], window=ts)
                    for lid in self.topology.links}
                for nid in self.topology.node_ids:
                    for tx in self.nodes[nid].sample_tick(t1, samples):
                        ctrl_bytes += self._enqueue(t1, tx)
                ctrl_bytes += self._drain_messages()

            active = self._ground_truth_active()
            surviving = frozenset(self.topology.links) - frozenset(self.failed)
            if is_connected(self.topology, surviving):
                if not is_connected(self.topology, active):
                    raise AssertionError(
                        f"window {w}: active link set no longer spans the network")

            # Wake transition costs charged by the ticks land in this window.
            new_total = total_network_energy(self.accounts.values())
            window_energy = new_total - cumulative_energy
            cumulative_energy = new_total

            metrics.times.append(t0)
            metrics.active_links.append(len(active))
            metrics.power_w.append(window_energy / ts)
            metrics.throughput_bps.append(alloc.delivered_bits / ts)
            metrics.energy_j.append(cumulative_energy)
            metrics.ctrl_bytes.append(ctrl_bytes)
            metrics.dropped_bits.append(alloc.dropped_bits)
            metrics.offered_bits_total += alloc.offered_bits
            metrics.delivered_bits_total += alloc.delivered_bits
            metrics.dropped_bits_total += alloc.dropped_bits
            metrics.ctrl_bytes_total += ctrl_bytes

            resetting = any(n.reset_until is not None for n in self.nodes.values())
            quiet = (len(self.events) == events_before and not failed_this_window
                     and not resetting)
            metrics.quiesced.append(quiet)

            if states is not None:
                snap_flows = {}
                for fid, rate, path in flow_paths:
                    snap_flows[fid] = (path, rates[fid])
                states.append(WindowState(active=active, flows=snap_flows))

        metrics.congestion_unresolved = self.congestion_unresolved
        return RunResult(metrics=metrics, events=self.events, states=states,
                         accounts=self.accounts)


def run(scenario: Scenario, capture_states: bool = False) -> RunResult:
    """Execute one scenario deterministically."""
    return _Run(scenario, capture_states).run()
