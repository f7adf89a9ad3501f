import random

import pytest

from gospf.config import ConfigError, ScenarioConfig, parse_config
from gospf.engine import (MetricsSeries, MismatchedScenarios, Scenario,
                          compare, run)
from gospf.graph import compute_mcst
from gospf.traffic import Flow, TrafficMatrix

from conftest import make_topology, random_connected_topology

DEFAULT_POWERS = dict(p_active=1.0, p_idle=0.8, p_sleep=0.016)


def empty_traffic(horizon=60.0):
    return TrafficMatrix([], horizon=horizon)


def constant_flow(fid, src, dst, rate, start=0.0):
    flow = Flow(fid, src, dst, "udp")
    if start > 0:
        flow.add_step(0.0, 0.0)
    flow.add_step(start, rate)
    return flow


def scenario(topo, matrix=None, failures=(), **keys):
    text = "\n".join(f"{k}={v}" for k, v in keys.items())
    cfg = parse_config(text) if text else ScenarioConfig()
    return Scenario(topo, matrix if matrix is not None else
                    empty_traffic(cfg.horizon), cfg, tuple(failures))


# ----------------------------------------------------------- basic running

def test_zero_traffic_cuts_to_tree(garr48):
    result = run(scenario(garr48, horizon=10.0))
    metrics = result.metrics
    assert metrics.active_links[0] == 47
    assert all(n == 47 for n in metrics.active_links)
    assert metrics.loss_pct == 0.0


def test_baseline_keeps_everything_active(garr48):
    result = run(scenario(garr48, horizon=10.0, mode="baseline"))
    metrics = result.metrics
    assert all(n == 78 for n in metrics.active_links)
    assert metrics.avg_active_links == 78.0
    assert result.events == []


def test_runs_are_byte_identical(garr48):
    flow = constant_flow(1, 30, 1, 2e7, start=2.0)
    a = run(scenario(garr48, TrafficMatrix([flow], 20.0), horizon=20.0))
    flow = constant_flow(1, 30, 1, 2e7, start=2.0)
    b = run(scenario(garr48, TrafficMatrix([flow], 20.0), horizon=20.0))
    assert a.events == b.events
    assert a.metrics.csv_text() == b.metrics.csv_text()
    assert a.metrics.summary_text() == b.metrics.summary_text()


def test_gospf_energy_below_baseline():
    rng = random.Random(7)
    topo = random_connected_topology(rng, 8, 5)
    flow = constant_flow(1, 1, 8, 1e6)
    g = run(scenario(topo, TrafficMatrix([flow], 30.0), horizon=30.0))
    b = run(scenario(topo, TrafficMatrix([flow], 30.0), horizon=30.0,
                     mode="baseline"))
    assert g.metrics.congestion_unresolved == 0
    assert g.metrics.total_energy_j < b.metrics.total_energy_j


def test_energy_accrues_linearly_when_idle():
    topo = make_topology([(1, 2)], 1e7, **DEFAULT_POWERS)
    result = run(scenario(topo, horizon=10.0, mode="baseline"))
    # two interfaces idle for 10 s at 0.8 W
    assert result.metrics.total_energy_j == pytest.approx(2 * 0.8 * 10.0)


def test_time_bucket_conservation(garr48):
    flow = constant_flow(1, 30, 1, 2e7)
    res = run(scenario(garr48, TrafficMatrix([flow], 10.0), horizon=10.0))
    assert res.metrics.times[-1] == pytest.approx(10.0 - 0.2)
    for acct in res.accounts.values():
        assert acct.elapsed == pytest.approx(10.0, abs=1e-9)
    total = sum(acct.energy_j for acct in res.accounts.values())
    assert total == pytest.approx(res.metrics.total_energy_j)


def test_gospf_without_cuts_matches_baseline_exactly(garr48):
    # gamma_l=0 disables cutting (utilization is never strictly below zero),
    # so the protocol run must consume exactly the baseline energy.
    flow = constant_flow(1, 30, 1, 2e7)
    g = run(scenario(garr48, TrafficMatrix([flow], 10.0), horizon=10.0,
                     gamma_l=0.0))
    b = run(scenario(garr48, TrafficMatrix([flow], 10.0), horizon=10.0,
                     mode="baseline"))
    assert g.metrics.total_energy_j == b.metrics.total_energy_j
    assert g.events == []


# ------------------------------------------------------------- connectivity

def test_connectivity_held_every_window():
    rng = random.Random(3)
    for seed in range(5):
        topo = random_connected_topology(random.Random(seed), 10, 6)
        nodes = list(topo.nodes)
        flows = []
        for fid in range(1, 4):
            src, dst = rng.sample(nodes, 2)
            flows.append(constant_flow(fid, src, dst, 5e5))
        run(scenario(topo, TrafficMatrix(flows, 20.0), horizon=20.0))
        # run() asserts spanning connectivity internally each window


# ------------------------------------------------------------ link failures

def test_mcst_failure_triggers_reset_and_new_tree(garr48):
    tree = compute_mcst(garr48)
    failed = min(tree.edges)
    res = run(scenario(garr48, horizon=20.0, failures=[(5.0, failed)]))
    events = "\n".join(res.events)
    assert "event=RESET" in events
    new_tree = compute_mcst(garr48, exclude=frozenset({failed}))
    assert len(new_tree.edges) == 47
    assert failed not in new_tree.edges
    # after the reset settles the network is back at 47 active links
    assert res.metrics.active_links[-1] == 47


def test_nontree_failure_does_not_reset(garr48):
    tree = compute_mcst(garr48)
    failed = min(set(garr48.links) - tree.edges)
    res = run(scenario(garr48, horizon=10.0, failures=[(5.0, failed)]))
    assert "event=RESET" not in "\n".join(res.events)


def test_bridge_failure_is_reported_clearly():
    from gospf.graph import DisconnectedTopology

    topo = make_topology([(1, 2), (2, 3), (3, 1), (3, 4)], 1e7)
    with pytest.raises(DisconnectedTopology, match="partitioned"):
        run(scenario(topo, horizon=10.0, failures=[(2.0, 4)]))


# ------------------------------------------------------------------ compare

def series(mode, energies, fp="x", **totals):
    m = MetricsSeries(mode=mode, fingerprint=fp, t_sample=0.2, horizon=1.0)
    m.energy_j = list(energies)
    m.times = [0.2 * i for i in range(len(energies))]
    m.active_links = [1] * len(energies)
    for key, value in totals.items():
        setattr(m, key, value)
    return m


def test_compare_identical_series_zero_saving():
    a = series("gospf", [1.0, 2.0])
    b = series("baseline", [1.0, 2.0])
    assert compare(a, b).saving_pct == 0.0


def test_compare_reported_energy_figures():
    # reference figures: 2035.94 J versus 3121.38 J give 34.8% saving
    a = series("gospf", [2035.94])
    b = series("baseline", [3121.38])
    report = compare(a, b)
    assert report.saving_pct == pytest.approx(34.8, abs=0.05)


def test_compare_all_sleep_closed_form():
    # idle-dominated baseline vs everything asleep: saving = 1 - Ps/Pi
    p_idle, p_sleep = 0.8, 0.016
    hours = 100.0
    a = series("gospf", [2 * p_sleep * hours])
    b = series("baseline", [2 * p_idle * hours])
    assert compare(a, b).saving_pct == pytest.approx((1 - p_sleep / p_idle) * 100)


def test_compare_rejects_mismatched_scenarios():
    a = series("gospf", [1.0], fp="aaa")
    b = series("baseline", [2.0], fp="bbb")
    with pytest.raises(MismatchedScenarios):
        compare(a, b)


def test_fingerprint_ignores_mode(garr48):
    sa = scenario(garr48, horizon=5.0)
    sb = scenario(garr48, horizon=5.0, mode="baseline")
    assert sa.fingerprint() == sb.fingerprint()
    sc = scenario(garr48, horizon=6.0)
    assert sc.fingerprint() != sa.fingerprint()


# ------------------------------------------------------------------- config

def test_config_rejects_swapped_thresholds():
    with pytest.raises(ConfigError):
        parse_config("gamma_u=0.2\ngamma_l=0.8\n")


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("nonsense=1\n")


def test_config_rejects_bad_mode():
    with pytest.raises(ConfigError):
        parse_config("mode=turbo\n")


def test_config_defaults():
    cfg = ScenarioConfig()
    cfg.validate()
    assert cfg.safeguard == pytest.approx(2.0)
    assert cfg.gamma_u == 0.8 and cfg.gamma_l == 0.2


def test_config_safeguard_follows_t_sample():
    cfg = parse_config("t_sample=0.02\n")
    assert cfg.safeguard == pytest.approx(0.2)


def test_config_explicit_safeguard_wins():
    cfg = parse_config("t_sample=0.02\nsafeguard_interval=1.5\n")
    assert cfg.safeguard == 1.5


def test_engine_rejects_unknown_flow_endpoint():
    topo = make_topology([(1, 2)], 1e7)
    flow = constant_flow(1, 1, 9, 1e6)
    with pytest.raises(ConfigError):
        run(scenario(topo, TrafficMatrix([flow], 5.0), horizon=5.0))


def test_engine_rejects_excessive_latency():
    topo = make_topology([(1, 2), (2, 3)], 1e7)
    with pytest.raises(ConfigError):
        run(scenario(topo, horizon=5.0, control_latency=0.15))


# ------------------------------------------------------------------ metrics

def test_metrics_csv_shape(garr48):
    res = run(scenario(garr48, horizon=2.0))
    lines = res.metrics.csv_text().splitlines()
    assert lines[0] == "t,active_links,power_w,throughput_bps,energy_j,ctrl_bytes,dropped_bits"
    assert len(lines) == 1 + len(res.metrics.times)


def test_summary_keys(garr48):
    res = run(scenario(garr48, horizon=2.0))
    text = res.metrics.summary_text()
    for key in ("total_energy_j=", "avg_active_links=", "loss_pct=",
                "overhead_pct=", "fingerprint=", "mode="):
        assert key in text


def test_overhead_counts_control_bytes(garr48):
    res = run(scenario(garr48, TrafficMatrix(
        [constant_flow(1, 30, 1, 2e7)], 10.0), horizon=10.0))
    assert res.metrics.ctrl_bytes_total > 0
    assert res.metrics.overhead_pct > 0
