"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Run with `pytest tests/test_acceptance.py -v -s`."""

import hashlib
import random
import time

import numpy as np
import pytest

from iterflow import demo, dsl, graph, materialize, operators, recompute
from iterflow.engine import EngineOptions, run_iteration
from iterflow.records import RunRecord
from iterflow.workspace import Workspace


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: {status}{suffix}")
    assert ok, f"{name} failed {suffix}"


def random_plan_instance(rng, max_n=8, p_inf=1 / 3, cost_hi=100):
    n = rng.randint(1, max_n)
    order = tuple(f"n{i}" for i in range(n))
    parents = {
        f"n{i}": tuple(f"n{j}" for j in range(i) if rng.random() < 0.35)
        for i in range(n)
    }
    has_child = {o: False for o in order}
    for c in order:
        for p in parents[c]:
            has_child[p] = True
    sinks = frozenset(o for o in order if not has_child[o])
    return recompute.CostAnnotatedDag(
        order=order,
        parents=parents,
        compute_cost={o: rng.randint(0, cost_hi) for o in order},
        load_cost={
            o: (None if rng.random() < p_inf else rng.randint(0, cost_hi))
            for o in order
        },
        size={o: rng.randint(1, 1000) for o in order},
        mandatory=sinks,
    )


# ---------------------------------------------------------------------------
# 1. recomputation optimality


def test_recomputation_optimality():
    rng = random.Random(20240100)
    started = time.monotonic()
    for _ in range(1000):
        dag = random_plan_instance(rng)
        opt = recompute.optimal_plan(dag)
        bf = recompute.brute_force_plan(dag)
        assert opt.objective == bf.objective, (dag, opt, bf)
        assert dict(opt.states) == dict(bf.states)
    elapsed = time.monotonic() - started
    _report(
        "recomputation-optimality",
        elapsed < 60.0,
        f"1000 instances exact, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 2. plan feasibility


def test_plan_feasibility():
    rng = random.Random(20240200)
    violations = 0
    for _ in range(10_000):
        dag = random_plan_instance(rng)
        plan = recompute.optimal_plan(dag)
        try:
            cost = recompute.plan_cost(dag, plan)  # checks every invariant
        except recompute.InfeasiblePlanError:
            violations += 1
            continue
        if cost != plan.objective:
            violations += 1
    _report("plan-feasibility", violations == 0, "10000 instances, 0 violations")


# ---------------------------------------------------------------------------
# 3. materialization rule fidelity


def _collect_trace_records(tmp_path) -> list[RunRecord]:
    records: list[RunRecord] = []

    wf = demo.write_census_fixture(tmp_path / "census_proj")
    ws = Workspace.init(tmp_path / "census_ws")
    opts = EngineOptions(base_dir=wf.parent)
    records.append(run_iteration(ws, wf.read_text(), opts))
    records.append(run_iteration(ws, wf.read_text(), opts))
    edited = wf.read_text().replace('accuracy(pred', 'f1(pred')
    records.append(run_iteration(ws, edited, opts))

    # tight-budget sim run: only some nodes fit
    ws2 = Workspace.init(tmp_path / "tight_ws")
    tight = EngineOptions(sim_clock=True, budget_bytes=250 * 1024)
    for source in demo.trace_sources()[:4]:
        records.append(run_iteration(ws2, source, tight))

    opt_trace = demo.run_trace(tmp_path / "opt_ws", no_reuse=False)
    base_trace = demo.run_trace(tmp_path / "base_ws", no_reuse=True)
    records.extend(opt_trace.records)
    records.extend(base_trace.records)
    return records


def test_materialization_rule_fidelity(tmp_path):
    records = _collect_trace_records(tmp_path)
    checked = 0
    for rec in records:
        budget_total = rec.budget_total_bytes
        remaining = budget_total - rec.budget_start_used_bytes
        order_index = {n: i for i, n in enumerate(rec.topo_order)}
        last_pos = -1
        for event in rec.events:
            assert order_index[event.name] > last_pos  # completion order
            last_pos = order_index[event.name]
            if event.state != "compute":
                continue
            checked += 1
            if rec.options["no_reuse"]:
                assert not event.materialized
                continue
            if event.materialized:
                assert event.benefit_us < 0
                assert event.bytes <= remaining  # fit at decision time
                remaining -= event.bytes
            elif event.skip_reason == "non_negative_benefit":
                assert event.benefit_us >= 0
            elif event.skip_reason == "budget_exceeded":
                assert event.benefit_us < 0
                assert event.bytes > remaining
            else:
                # output was already in the store; no decision to make
                assert event.benefit_us is None
            assert event.budget_remaining_bytes == remaining
            assert 0 <= remaining <= budget_total
        assert budget_total - remaining == rec.budget_used_bytes
    _report(
        "materialization-rule-fidelity",
        checked > 0,
        f"{checked} decisions across {len(records)} iterations",
    )


# ---------------------------------------------------------------------------
# 4. knapsack-oracle gap


def _oracle_instance(rng):
    n = rng.randint(3, 12)
    order = tuple(f"n{i}" for i in range(n))
    parents = {
        f"n{i}": tuple(f"n{j}" for j in range(i) if rng.random() < 0.35)
        for i in range(n)
    }
    has_child = {o: False for o in order}
    for c in order:
        for p in parents[c]:
            has_child[p] = True
    sinks = frozenset(o for o in order if not has_child[o])
    return recompute.CostAnnotatedDag(
        order=order,
        parents=parents,
        compute_cost={o: rng.randint(1, 100) for o in order},
        load_cost={o: rng.randint(1, 30) for o in order},
        size={o: rng.randint(10, 100) for o in order},
        mandatory=sinks,
    )


def test_knapsack_oracle_gap():
    # With storage ample enough that the budget is not the binding
    # constraint, the online rule's 2*load threshold keeps its planned cost
    # within 2x of the exact subset oracle.  (Under scarce storage the rule
    # has no bounded guarantee; the pinned fixture below documents that.)
    rng = random.Random(424242)
    worst = 0.0
    for _ in range(200):
        dag = _oracle_instance(rng)
        budget = sum(dag.size.values())
        online = materialize.simulate_online(dag, budget)
        oracle = materialize.offline_oracle(dag, budget)
        on_cost = materialize.next_iteration_cost(dag, online)
        or_cost = materialize.next_iteration_cost(dag, oracle)
        assert or_cost <= on_cost
        ratio = on_cost / or_cost if or_cost else 1.0
        worst = max(worst, ratio)
        assert ratio <= 2.0, (ratio, dag)

    # pinned adversarial fixture: greedy online wastes the budget on one big
    # node; the oracle's two smaller nodes beat it strictly
    adv = recompute.CostAnnotatedDag(
        order=("r0", "x", "y", "z", "w", "s"),
        parents={
            "r0": (),
            "x": ("r0",),
            "y": ("r0",),
            "z": ("r0",),
            "w": ("r0",),
            "s": ("x", "y", "z", "w"),
        },
        compute_cost={"r0": 100, "x": 10, "y": 40, "z": 40, "w": 1, "s": 1},
        load_cost={n: 5 for n in ("r0", "x", "y", "z", "w", "s")},
        size={"r0": 1000, "x": 100, "y": 60, "z": 60, "w": 30, "s": 500},
        mandatory=frozenset({"s"}),
    )
    online = materialize.simulate_online(adv, 120)
    oracle = materialize.offline_oracle(adv, 120)
    assert online == {"x"}
    assert oracle == {"y", "z"}
    assert materialize.next_iteration_cost(adv, online) == 187
    assert materialize.next_iteration_cost(adv, oracle) == 122
    _report("knapsack-oracle-gap", worst <= 2.0, f"worst ratio {worst:.3f}")


# ---------------------------------------------------------------------------
# 5. cumulative-runtime reproduction on the synthetic trace


def test_cumulative_runtime_reproduction(tmp_path):
    started = time.monotonic()
    optimized = demo.run_trace(tmp_path / "opt", no_reuse=False)
    baseline = demo.run_trace(tmp_path / "base", no_reuse=True)
    optimized_again = demo.run_trace(tmp_path / "opt2", no_reuse=False)
    elapsed = time.monotonic() - started

    assert optimized.per_iteration_us == optimized_again.per_iteration_us  # determinism
    assert len(optimized.records) == 10

    ratio = optimized.cumulative_us / baseline.cumulative_us
    assert ratio <= 0.50, ratio

    full = demo.full_compute_us()
    post_fracs = [
        optimized.per_iteration_us[i] / full
        for i, stage in enumerate(demo.edit_depths(), start=1)
        if stage == "post"
    ]
    assert post_fracs and all(frac <= 0.10 for frac in post_fracs)
    assert elapsed < 5.0
    _report(
        "cumulative-runtime",
        True,
        f"optimized/baseline {ratio:.1%}, post-edit max {max(post_fracs):.1%}, {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# 6. change tracking


def _merkle_oracle(src: str) -> dict[str, str]:
    """Independent Merkle recomputation from the declaration list."""
    ast = dsl.parse(src)
    sigs: dict[str, str] = {}
    for d in ast.decls:
        parts = [
            "@" if isinstance(a, dsl.Ref) else dsl.render_literal(a) for a in d.args
        ]
        parts += [f"{k}={dsl.render_literal(v)}" for k, v in sorted(dict(d.kwargs).items())]
        h = hashlib.sha256()
        h.update(b"iterflow/node/v1")
        h.update(b"\x00" + d.func.encode())
        h.update(b"\x00" + (", ".join(parts)).encode())
        for p in d.parent_names():
            h.update(b"\x00" + bytes.fromhex(sigs[p]))
        sigs[d.name] = h.hexdigest()
    return sigs


def test_change_tracking_correctness(tmp_path):
    source = demo.trace_source()
    edited_counts = {"m2": 1}  # mid-DAG edit
    edited = demo.trace_source(edited_counts)

    before = graph.compile(dsl.parse(source))
    after = graph.compile(dsl.parse(edited))
    assert {n: s.signature for n, s in before.nodes.items()} == _merkle_oracle(source)
    assert {n: s.signature for n, s in after.nodes.items()} == _merkle_oracle(edited)

    anc = graph.ancestors(before.parents_map(), before.topo_order)
    for n in before.topo_order:
        changed = before.nodes[n].signature != after.nodes[n].signature
        affected = n == "m2" or "m2" in anc[n]
        assert changed == affected, n

    # unchanged rerun: no materialized node is ever planned as Compute
    ws = Workspace.init(tmp_path / "ws")
    opts = EngineOptions(sim_clock=True)
    first = run_iteration(ws, source, opts)
    materialized = {e.name for e in first.events if e.materialized}
    assert materialized  # the big sim nodes all qualify
    second = run_iteration(ws, source, opts)
    recomputed = {n for n, s in second.plan.items() if s == "compute"}
    assert not (recomputed & materialized)
    _report("change-tracking", True, f"{len(materialized)} reusable nodes honored")


# ---------------------------------------------------------------------------
# 7. census-mini end to end


def test_census_mini_end_to_end(tmp_path):
    wf = demo.write_census_fixture(tmp_path / "proj")
    opts = EngineOptions(base_dir=wf.parent, seed=0)
    source = wf.read_text()

    rows = demo.census_csv_bytes().decode().strip().splitlines()[1:]
    assert len(rows) == 100
    labels = [int(float(r.rsplit(",", 1)[1])) for r in rows]
    majority = max(sum(labels), len(labels) - sum(labels)) / len(labels)

    digests = []
    for name in ("ws_a", "ws_b"):
        ws = Workspace.init(tmp_path / name)
        rec = run_iteration(ws, source, opts)
        assert rec.metrics["acc"] >= majority
        store = tmp_path / name / "artifacts"
        digests.append(
            (
                {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in store.iterdir()},
                rec.metrics,
            )
        )
    assert digests[0] == digests[1]  # byte-identical artifacts and metrics

    ws = Workspace(tmp_path / "ws_a")
    edited = source.replace(
        'metric acc = accuracy(pred, label="income_gt_50k")',
        'metric acc = f1(pred, label="income_gt_50k")',
    )
    rec2 = run_iteration(ws, edited, opts)
    computes = [n for n, s in rec2.plan.items() if s == "compute"]
    assert computes == ["acc"]
    _report(
        "census-mini",
        True,
        f"acc {digests[0][1]['acc']:.2f} >= baseline {majority:.2f}; metric edit recomputed 1 node",
    )


# ---------------------------------------------------------------------------
# 8. numerics


def test_numerics_gradient_and_flow_duality():
    rng = np.random.default_rng(20240800)
    worst_rel = 0.0
    for _ in range(50):
        n = int(rng.integers(3, 25))
        d = int(rng.integers(1, 8))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        w = rng.normal(size=d)
        b = float(rng.normal())
        reg = float(rng.uniform(0.0, 1.0))
        _, gw, gb = operators.logloss_and_grad(w, b, X, y, reg)
        h = 1e-6
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            lp, _, _ = operators.logloss_and_grad(w + e, b, X, y, reg)
            lm, _, _ = operators.logloss_and_grad(w - e, b, X, y, reg)
            fd = (lp - lm) / (2 * h)
            rel = abs(fd - gw[j]) / max(1.0, abs(gw[j]))
            worst_rel = max(worst_rel, rel)
        lp, _, _ = operators.logloss_and_grad(w, b + h, X, y, reg)
        lm, _, _ = operators.logloss_and_grad(w, b - h, X, y, reg)
        rel = abs((lp - lm) / (2 * h) - gb) / max(1.0, abs(gb))
        worst_rel = max(worst_rel, rel)
    assert worst_rel <= 1e-6

    rng2 = random.Random(20240801)
    checked = 0
    for _ in range(300):
        dag = random_plan_instance(rng2, max_n=10)
        net = recompute.build_network(dag)
        cut = recompute.min_cut(net)
        assert cut.value == recompute.cut_capacity(net, cut.source_side)
        checked += 1
    _report(
        "numerics",
        True,
        f"gradient rel err {worst_rel:.2e}; {checked} flow fixtures dual-checked",
    )
