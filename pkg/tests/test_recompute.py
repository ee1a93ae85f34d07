import random

import pytest

from iterflow.recompute import (
    CostAnnotatedDag,
    ExecutionPlan,
    FlowNetwork,
    InfeasiblePlanError,
    NodeState,
    TooLargeError,
    brute_force_plan,
    build_network,
    cut_capacity,
    format_instance,
    min_cut,
    optimal_plan,
    plan_cost,
)

L, C, P = NodeState.LOAD, NodeState.COMPUTE, NodeState.PRUNE


def make_dag(spec, mandatory):
    """spec: {name: (compute, load_or_None, parents)} in topological order."""
    order = tuple(spec)
    return CostAnnotatedDag(
        order=order,
        parents={n: tuple(v[2]) for n, v in spec.items()},
        compute_cost={n: v[0] for n, v in spec.items()},
        load_cost={n: v[1] for n, v in spec.items()},
        size={n: 1 for n in order},
        mandatory=frozenset(mandatory),
    )


def random_instance(rng, max_n=8, p_inf=1 / 3, cost_hi=100):
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
    return CostAnnotatedDag(
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
# plan_cost


def test_plan_cost_forced_compute():
    dag = make_dag({"a": (7, None, ())}, {"a"})
    assert plan_cost(dag, ExecutionPlan({"a": C}, 0)) == 7


def test_plan_cost_load_cuts_ancestry():
    dag = make_dag({"a": (3, None, ()), "b": (9, 4, ("a",))}, {"b"})
    assert plan_cost(dag, ExecutionPlan({"a": P, "b": L}, 0)) == 4


def test_plan_cost_prune_constraint():
    dag = make_dag({"a": (3, None, ()), "b": (9, 4, ("a",))}, {"b"})
    with pytest.raises(InfeasiblePlanError) as exc:
        plan_cost(dag, ExecutionPlan({"a": P, "b": C}, 0))
    assert exc.value.constraint == "prune-constraint"
    assert exc.value.node == "b"


def test_plan_cost_mandatory_available():
    dag = make_dag({"a": (3, 1, ())}, {"a"})
    with pytest.raises(InfeasiblePlanError) as exc:
        plan_cost(dag, ExecutionPlan({"a": P}, 0))
    assert exc.value.constraint == "availability"


def test_plan_cost_infeasible_load():
    dag = make_dag({"a": (3, None, ())}, set())
    with pytest.raises(InfeasiblePlanError) as exc:
        plan_cost(dag, ExecutionPlan({"a": L}, 0))
    assert exc.value.constraint == "feasible-load"


# ---------------------------------------------------------------------------
# optimal_plan


def test_single_node_cheaper_to_load():
    dag = make_dag({"a": (10, 3, ())}, {"a"})
    plan = optimal_plan(dag)
    assert plan.states["a"] is L
    assert plan.objective == 3


def test_chain_loads_cheap_ancestor():
    dag = make_dag(
        {"a": (10, 2, ()), "b": (10, 100, ("a",)), "c": (1, None, ("b",))}, {"c"}
    )
    plan = optimal_plan(dag)
    assert plan.states == {"a": L, "b": C, "c": C}
    assert plan.objective == 13
    assert brute_force_plan(dag).objective == 13


def test_expensive_load_child_keeps_parent():
    # child with load >> compute is computed from its kept parent
    dag = make_dag(
        {"j": (5, 6, ()), "k": (1, 50, ("j",)), "m": (1, 50, ("j",))}, {"k", "m"}
    )
    plan = optimal_plan(dag)
    assert plan.states == {"j": C, "k": C, "m": C}
    assert plan.objective == 7
    assert brute_force_plan(dag).objective == 7


def test_empty_dag():
    dag = make_dag({}, set())
    assert optimal_plan(dag).objective == 0
    assert brute_force_plan(dag).objective == 0


def test_tie_prefers_load_over_compute():
    dag = make_dag({"a": (5, 5, ())}, {"a"})
    assert optimal_plan(dag).states["a"] is L
    assert brute_force_plan(dag).states["a"] is L


def test_zero_cost_busywork_pruned():
    # free-to-compute node that nothing needs must still be pruned
    dag = make_dag({"a": (0, 0, ()), "b": (4, None, ())}, {"b"})
    plan = optimal_plan(dag)
    assert plan.states["a"] is P
    assert brute_force_plan(dag).states["a"] is P


# ---------------------------------------------------------------------------
# build_network / min_cut


def test_empty_network_zero_cut():
    net = FlowNetwork()
    cut = min_cut(net)
    assert cut.value == 0
    assert net.source in cut.source_side
    assert net.sink not in cut.source_side


def test_single_arc_cut():
    net = FlowNetwork()
    net.add_arc(net.source, net.sink, 5)
    assert min_cut(net).value == 5


def test_diamond_max_flow_20():
    net = FlowNetwork()
    u = net.add_vertex("u")
    v = net.add_vertex("v")
    net.add_arc(net.source, u, 10)
    net.add_arc(net.source, v, 10)
    net.add_arc(u, v, 1)
    net.add_arc(u, net.sink, 10)
    net.add_arc(v, net.sink, 10)
    cut = min_cut(net)
    assert cut.value == 20
    assert cut_capacity(net, cut.source_side) == 20


def test_cut_invariant_under_arc_insertion_order():
    rng = random.Random(7)
    arcs = []
    n_extra = 6
    for u in range(n_extra + 2):
        for v in range(n_extra + 2):
            if u != v and rng.random() < 0.4:
                arcs.append((u, v, rng.randint(1, 20)))
    values = set()
    for _ in range(5):
        rng.shuffle(arcs)
        net = FlowNetwork()
        for _ in range(n_extra):
            net.add_vertex("x")
        for u, v, cap in arcs:
            net.add_arc(u, v, cap)
        values.add(min_cut(net).value)
    assert len(values) == 1


def test_network_shape_and_sentinel():
    dag = make_dag(
        {"a": (7, 3, ()), "b": (2, None, ("a",)), "c": (1, 4, ("a", "b"))}, {"c"}
    )
    net = build_network(dag)
    assert len(net.adj) == 2 * 3 + 2
    assert net.arc_count() <= 2 * 3 + 3 + 3  # profit arcs + closure arcs + edges
    scaled_sum = sum(
        dag.compute_cost[n] * net.scale + dag.load_cost[n] * net.scale
        for n in dag.order
        if dag.load_cost[n] is not None
    )
    assert net.big_m > scaled_sum


def test_network_cut_decodes_to_oracle_objective():
    dag = make_dag({"a": (7, 3, ())}, {"a"})
    plan = optimal_plan(dag)
    assert plan.objective == 3 == brute_force_plan(dag).objective


def test_min_cut_value_equals_recomputed_cut_capacity():
    rng = random.Random(99)
    for _ in range(50):
        dag = random_instance(rng)
        net = build_network(dag)
        cut = min_cut(net)
        assert cut.value == cut_capacity(net, cut.source_side)


# ---------------------------------------------------------------------------
# brute_force_plan


def test_brute_force_too_large():
    spec = {f"n{i}": (1, 1, ()) for i in range(13)}
    with pytest.raises(TooLargeError):
        brute_force_plan(make_dag(spec, {"n0"}))


def test_brute_force_all_forced_compute():
    spec = {
        "a": (5, None, ()),
        "b": (6, None, ("a",)),
        "c": (7, None, ("b",)),
    }
    dag = make_dag(spec, {"a", "b", "c"})
    plan = brute_force_plan(dag)
    assert all(s is C for s in plan.states.values())
    assert plan.objective == 18


# ---------------------------------------------------------------------------
# randomized invariants (acceptance runs these at full scale)


def test_optimal_matches_brute_force_on_random_dags():
    rng = random.Random(2024)
    for _ in range(300):
        dag = random_instance(rng)
        opt = optimal_plan(dag)
        bf = brute_force_plan(dag)
        assert opt.objective == bf.objective
        assert dict(opt.states) == dict(bf.states)


def test_optimal_plans_always_feasible():
    rng = random.Random(55)
    for _ in range(500):
        dag = random_instance(rng)
        plan = optimal_plan(dag)
        assert plan_cost(dag, plan) == plan.objective


def test_monotone_pruning():
    rng = random.Random(77)
    for _ in range(300):
        dag = random_instance(rng)
        plan = optimal_plan(dag)
        anc = dag.ancestors()
        needed: set[str] = set()
        for n in dag.order:
            if plan.states[n] is not P:
                needed |= anc[n]
        for n in dag.order:
            if n not in dag.mandatory and n not in needed:
                assert plan.states[n] is P


def test_format_instance_stable():
    dag = make_dag({"a": (7, None, ()), "b": (2, 9, ("a",))}, {"b"})
    plan = optimal_plan(dag)
    text = format_instance(dag, plan)
    assert text.splitlines() == [
        "a\t7\tinf\t1\t-\tprune",
        "b\t2\t9\t1\tmandatory\tload",
    ]
