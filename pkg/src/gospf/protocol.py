"""The distributed link cut/graft state machine.

Each node owns a link-state view of the topology, the shared spanning tree,
a matrix of switched-off links indexed by hop distance, and safeguard timers
for recently restored links. All inter-node effects travel as flooded
control messages; the node never touches another node's state.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

from .energy import (InterfaceRole, OperationalState, UtilizationClass,
                     UtilizationSample, _classify, validate_thresholds)
from .graph import (RoutingTable, SpanningTree, Topology, bfs_hop_counts,
                    compute_mcst, shortest_paths)

log = logging.getLogger(__name__)

# Timer comparisons tolerate float accumulation in tick arithmetic; the
# safeguard slack is orders of magnitude larger than this.
_EPS = 1e-9


class MessageKind(Enum):
    LSCUP = "LSCUP"
    LSGUP = "LSGUP"
    LSA = "LSA"
    RESET = "RESET"


@dataclass(frozen=True)
class ControlMessage:
    """Flooded protocol message; (origin, seq) identifies it for dedup.

    LSGUP messages carry the absolute safeguard expiry of the restored
    links so that every node in the network records the identical timer.
    """

    kind: MessageKind
    origin: int
    seq: int
    links: tuple[int, ...]
    expiry: float = 0.0

    def key(self) -> tuple[int, int]:
        return (self.origin, self.seq)


@dataclass(frozen=True)
class Transmission:
    """One copy of a message sent over one link."""

    link_id: int
    sender: int
    receiver: int
    message: ControlMessage


class ProtocolHooks:
    """Engine-side callbacks; the default implementation records nothing."""

    def record_event(self, t: float, node: int, event: str, link: int, seq: int) -> None:
        pass

    def interface_woke(self, t: float, node: int, link: int) -> None:
        pass

    def interface_slept(self, t: float, node: int, link: int) -> None:
        pass


class GospfNode:
    """Sequential per-router state machine. The engine delivers ticks and
    messages one at a time; outputs are transmissions to enqueue."""

    def __init__(self, node_id: int, topology: Topology, *, gamma_u: float,
                 gamma_l: float, safeguard_interval: float, mcst_reset_timer: float,
                 t_sample: float = 0.2, ref_bandwidth: float = 1e8,
                 hooks: ProtocolHooks | None = None):
        self.node_id = node_id
        self.topology = topology
        validate_thresholds(gamma_u, gamma_l)
        self.gamma_u = gamma_u
        self.gamma_l = gamma_l
        self.safeguard_interval = safeguard_interval
        self.mcst_reset_timer = mcst_reset_timer
        self.t_sample = t_sample
        self.ref_bandwidth = ref_bandwidth
        self.hooks = hooks or ProtocolHooks()

        self.failed: set[int] = set()
        self.mcst: SpanningTree = compute_mcst(topology)
        self.active_view: set[int] = set(topology.links)
        self._local_links: tuple[int, ...] = topology.incident(node_id)
        self.iface_state: dict[int, OperationalState] = {}
        self.iface_role: dict[int, InterfaceRole] = {}
        for lid in self._local_links:
            self.iface_state[lid] = OperationalState.IDLE
            self.iface_role[lid] = (InterfaceRole.MCST_TREE if lid in self.mcst.edges
                                    else InterfaceRole.MCST_UNCUT)
        self.matrix: dict[int, set[int]] = {}
        self.safeguard: dict[int, float] = {}
        self.seen: set[tuple[int, int]] = set()
        self.scan_floor = 0
        self.reset_until: float | None = None
        self.pending_failures: list[int] = []
        self._seq = 0
        self._hops = bfs_hop_counts(topology, node_id)
        self._routing: RoutingTable | None = None
        self.view_version = 0

    # ------------------------------------------------------------------ util

    def _next_message(self, kind: MessageKind, links: tuple[int, ...],
                      expiry: float = 0.0) -> ControlMessage:
        msg = ControlMessage(kind, self.node_id, self._seq, links, expiry)
        self._seq += 1
        self.seen.add(msg.key())
        return msg

    def _hop_row(self, link_id: int) -> int:
        link = self.topology.links[link_id]
        return min(self._hops.get(link.a, math.inf), self._hops.get(link.b, math.inf))

    def _invalidate_routing(self) -> None:
        self._routing = None
        self.view_version += 1

    def routing_table(self) -> RoutingTable:
        if self._routing is None:
            self._routing = shortest_paths(self.topology, frozenset(self.active_view),
                                           self.node_id, self.ref_bandwidth)
        return self._routing

    def flood(self, message: ControlMessage, arrival_link: int | None = None):
        """Copies of `message` for every awake interface except the arrival one."""
        out = []
        for lid in sorted(self.iface_state):
            if lid == arrival_link or lid in self.failed:
                continue
            if self.iface_state[lid] is OperationalState.SLEEP:
                continue
            peer = self.topology.links[lid].other(self.node_id)
            out.append(Transmission(lid, self.node_id, peer, message))
        return out

    def _sleep_interface(self, now: float, link_id: int) -> None:
        if self.iface_state.get(link_id) in (OperationalState.IDLE, OperationalState.ACTIVE):
            self.iface_state[link_id] = OperationalState.SLEEP
            self.iface_role[link_id] = InterfaceRole.MCST_CUT
            self.hooks.interface_slept(now, self.node_id, link_id)
            self.hooks.record_event(now, self.node_id, "SLEEP", link_id, -1)

    def _wake_interface(self, now: float, link_id: int, role: InterfaceRole) -> None:
        if self.iface_state.get(link_id) is OperationalState.SLEEP:
            self.iface_state[link_id] = OperationalState.IDLE
            self.iface_role[link_id] = role
            self.hooks.interface_woke(now, self.node_id, link_id)
            self.hooks.record_event(now, self.node_id, "WAKE", link_id, -1)

    # ---------------------------------------------------------------- events

    def sample_tick(self, now: float, samples: dict[int, UtilizationSample]):
        """Periodic check: handle failure news, then cut or graft per the
        thresholds. `samples` may cover more links than this node owns.
        Returns transmissions to send."""
        out = []
        while self.pending_failures:
            lid = self.pending_failures.pop(0)
            if lid in self.failed:
                continue
            if lid in self.mcst.edges:
                out.extend(self._start_reset(now, lid))
            else:
                out.extend(self._announce_failure(now, lid))
        if self.reset_until is not None:
            return out

        classes: dict[int, UtilizationClass] = {}
        for lid in self._local_links:
            if lid in self.failed or lid not in samples:
                continue
            if self.iface_state[lid] is OperationalState.SLEEP:
                continue
            s = samples[lid]
            u_r = s.bits / (s.line_rate * s.window)
            classes[lid] = _classify(u_r, self.gamma_u, self.gamma_l)
            if (self.iface_role[lid] is InterfaceRole.MCST_GRAFT
                    and self.safeguard.get(lid, -math.inf) - _EPS <= now):
                self.iface_role[lid] = InterfaceRole.MCST_UNCUT

        over = [l for l, c in classes.items() if c is UtilizationClass.OVERUTILIZED]
        if over:
            out.extend(self._graft_step(now, over[0]))
            return out

        self.scan_floor = 0
        for lid, cls in classes.items():
            if cls is not UtilizationClass.UNDERUTILIZED:
                continue
            if lid in self.mcst.edges:
                continue
            if self.safeguard.get(lid, -math.inf) - _EPS > now:
                continue
            out.extend(self._cut(now, lid))
        return out

    def _cut(self, now: float, link_id: int):
        msg = self._next_message(MessageKind.LSCUP, (link_id,))
        self.hooks.record_event(now, self.node_id, "CUT", link_id, msg.seq)
        self._sleep_interface(now, link_id)
        self._mark_cut(link_id)
        return self.flood(msg)

    def _mark_cut(self, link_id: int) -> None:
        self.active_view.discard(link_id)
        row = self._hop_row(link_id)
        self.matrix.setdefault(row, set()).add(link_id)
        self._invalidate_routing()

    def _graft_step(self, now: float, congested_link: int):
        """Restore the links in the first non-empty matrix row at or past the
        scan floor; escalation advances the floor one row per tick while the
        congestion lasts."""
        row = None
        for r in sorted(self.matrix):
            if r >= self.scan_floor and self.matrix[r]:
                row = r
                break
        if row is None:
            self.hooks.record_event(now, self.node_id, "CONGESTION_UNRESOLVED",
                                    congested_link, -1)
            return []
        links = tuple(sorted(self.matrix[row]))
        # One sampling period of slack keeps the expiry strictly after every
        # remote wake timestamp, so re-cuts are never mistaken for stale cuts.
        expiry = now + self.safeguard_interval + self.t_sample
        msg = self._next_message(MessageKind.LSGUP, links, expiry)
        self.hooks.record_event(now, self.node_id, "GRAFT", congested_link, msg.seq)
        self._apply_graft(now, links, expiry)
        self.scan_floor = row + 1
        return self.flood(msg)

    def _apply_graft(self, now: float, links: tuple[int, ...], expiry: float) -> None:
        for lid in links:
            if lid in self.failed:
                continue
            self.active_view.add(lid)
            for row in self.matrix.values():
                row.discard(lid)
            # Safeguard recorded at every node, not only endpoints: an LSCUP
            # naming a safeguarded link is stale (cut lost the race to this
            # graft) and must be ignored identically everywhere. The carried
            # absolute expiry makes the decision identical at every node.
            self.safeguard[lid] = max(self.safeguard.get(lid, -math.inf), expiry)
            if lid in self.iface_state:
                self._wake_interface(now, lid, InterfaceRole.MCST_GRAFT)
                if (self.iface_role[lid] is not InterfaceRole.MCST_TREE
                        and self.iface_state[lid] is not OperationalState.SLEEP):
                    self.iface_role[lid] = InterfaceRole.MCST_GRAFT
        self._invalidate_routing()

    def handle_message(self, now: float, msg: ControlMessage,
                       arrival_link: int | None = None):
        """Apply a received message and re-flood it. Duplicates are dropped."""
        if msg.key() in self.seen:
            return []
        self.seen.add(msg.key())
        if any(lid not in self.topology.links for lid in msg.links):
            log.warning("node %d: dropping %s naming unknown link(s) %s",
                        self.node_id, msg.kind.value, msg.links)
            return []
        if msg.kind is MessageKind.LSCUP:
            lid = msg.links[0]
            if self.safeguard.get(lid, -math.inf) - _EPS > now:
                pass  # stale cut superseded by a graft; forward but ignore
            else:
                self._sleep_interface(now, lid)
                self._mark_cut(lid)
        elif msg.kind is MessageKind.LSGUP:
            self._apply_graft(now, msg.links, msg.expiry)
        elif msg.kind is MessageKind.LSA:
            self._apply_failure(now, msg.links[0])
        elif msg.kind is MessageKind.RESET:
            self._apply_reset(now, msg.links[0])
        return self.flood(msg, arrival_link)

    # --------------------------------------------------------------- failure

    def notice_link_failure(self, link_id: int) -> None:
        """Link-layer down signal from the engine; acted on at the next tick."""
        if link_id not in self.pending_failures:
            self.pending_failures.append(link_id)

    def _announce_failure(self, now: float, link_id: int):
        msg = self._next_message(MessageKind.LSA, (link_id,))
        self._apply_failure(now, link_id)
        return self.flood(msg)

    def _apply_failure(self, now: float, link_id: int) -> None:
        self.failed.add(link_id)
        self.active_view.discard(link_id)
        if link_id in self.iface_state:
            self._sleep_interface(now, link_id)
        for row in self.matrix.values():
            row.discard(link_id)
        self.safeguard.pop(link_id, None)
        self._hops = bfs_hop_counts(self.topology, self.node_id, frozenset(self.failed))
        self._invalidate_routing()

    def _start_reset(self, now: float, failed_link: int):
        msg = self._next_message(MessageKind.RESET, (failed_link,))
        self.hooks.record_event(now, self.node_id, "RESET", failed_link, msg.seq)
        self._apply_reset(now, failed_link)
        return self.flood(msg)

    def _apply_reset(self, now: float, failed_link: int) -> None:
        """Wake everything except the failed link, forget cut/safeguard state,
        and schedule the tree recomputation."""
        self.failed.add(failed_link)
        for lid in sorted(self.iface_state):
            if lid in self.failed:
                if lid == failed_link:
                    self._sleep_interface(now, lid)
                continue
            role = (InterfaceRole.MCST_TREE
                    if self.iface_role.get(lid) is InterfaceRole.MCST_TREE
                    else InterfaceRole.MCST_UNCUT)
            self._wake_interface(now, lid, role)
        self.matrix.clear()
        self.safeguard.clear()
        self.scan_floor = 0
        self.pending_failures = [l for l in self.pending_failures if l != failed_link]
        self.active_view = set(self.topology.links) - self.failed
        until = now + self.mcst_reset_timer
        self.reset_until = until if self.reset_until is None else max(self.reset_until, until)
        self._hops = bfs_hop_counts(self.topology, self.node_id, frozenset(self.failed))
        self._invalidate_routing()

    def complete_reset_if_due(self, now: float) -> None:
        """After the reset timer elapses, recompute the tree on the surviving
        topology and resume normal operation."""
        if self.reset_until is None or now < self.reset_until - _EPS:
            return
        self.reset_until = None
        self.mcst = compute_mcst(self.topology, exclude=frozenset(self.failed))
        for lid in self.iface_state:
            if lid in self.failed:
                continue
            if lid in self.mcst.edges:
                self.iface_role[lid] = InterfaceRole.MCST_TREE
            elif self.iface_state[lid] is OperationalState.SLEEP:
                self.iface_role[lid] = InterfaceRole.MCST_CUT
            else:
                self.iface_role[lid] = InterfaceRole.MCST_UNCUT
        self._invalidate_routing()
