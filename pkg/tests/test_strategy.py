"""Transducers, contexts, the choice fold, enumeration, config graphs."""
from itertools import product

import pytest

from uslmc import model
from uslmc.strategy import (
    Context,
    StrategyConfig,
    StrategyTransducer,
    UnboundVariableError,
    advance,
    bind_commit,
    build_config_graph,
    choice_on_track,
    coherent,
    ctx_choice,
    enumerate_strategies,
    strat_choice,
    unbind_commit,
    uniform,
)

A = frozenset(["a"])


def c2_then_c1(m):
    """Two-memory strategy: play c2 first, then always c1."""
    names = [m.choice_names(0, si) for si in range(len(m.states))]
    out_first = tuple(n.index("c2") if "c2" in n else 0 for n in names)
    out_rest = tuple(n.index("c1") for n in names)
    n = len(m.states)
    return StrategyTransducer(m, 2, ((1,) * n, (1,) * n), ((out_first,), (out_rest,)))


class TestStratChoice:
    def test_always_c1_on_m1(self, m1):
        cfg = StrategyConfig(uniform(m1, "c1"))
        assert strat_choice(cfg, "a", "s0") == {"s0"}

    def test_always_c2_on_m2(self, m2):
        cfg = StrategyConfig(uniform(m2, "c2"))
        assert strat_choice(cfg, "a", "s1") == {"s1"}

    def test_two_memory_initial(self, m2):
        cfg = StrategyConfig(c2_then_c1(m2))
        assert strat_choice(cfg, "a", "s0") == {"s1"}  # c2 at s0


class TestAdvance:
    def test_memoryless_unchanged(self, m1):
        mu = {"x": StrategyConfig(uniform(m1, "c1"))}
        assert advance(mu, "s0") == mu

    def test_two_memory_switches(self, m2):
        mu = {"x": StrategyConfig(c2_then_c1(m2))}
        mu2 = advance(mu, "s0")
        assert mu2["x"].memory == 1
        assert strat_choice(mu2["x"], "a", "s0") == {"s0", "s1"}  # now c1

    def test_agrees_with_track_function_oracle(self, m2):
        # three-memory counter: memory cycles 0 -> 1 -> 2 -> 0 on every step;
        # checked on every track of length <= 5
        n = len(m2.states)
        out = tuple((tuple(q % len(m2.choice_names(0, si)) for si in range(n)),) for q in range(3))
        t = StrategyTransducer(m2, 3, tuple(((q + 1) % 3,) * n for q in range(3)), out)

        def all_tracks(prefix, length):
            yield prefix
            if length == 1:
                return
            si = m2.state_index(prefix[-1])
            for ti, nxt in enumerate(m2.states):
                if m2.successor_mask(si) >> ti & 1:
                    yield from all_tracks(prefix + [nxt], length - 1)

        count = 0
        for start in m2.states:
            for track in all_tracks([start], 5):
                mu = {"x": StrategyConfig(t)}
                for s in track[:-1]:
                    mu = advance(mu, s)
                assert strat_choice(mu["x"], "a", track[-1]) == choice_on_track(t, "a", track)
                count += 1
        assert count == 93  # all tracks of length <= 5 in this structure


class TestCoherent:
    def test_c1_coherent_with_c2_then_c1(self, m2):
        assert coherent(uniform(m2, "c1"), c2_then_c1(m2), m2)

    def test_conflicting_memoryless_on_m1(self, m1):
        t1 = uniform(m1, "c1")
        t2 = uniform(m1, "c2")  # c2 at s0, c1 elsewhere
        assert not coherent(t1, t2, m1)  # {s0} vs {s1} at s0

    def test_self_coherent(self, m1, m2):
        for m in (m1, m2):
            t = uniform(m, "c1")
            assert coherent(t, t, m)


class TestCommitments:
    def test_bind_appends(self):
        k = bind_commit((), ["a"], "x1")
        assert k == ((A, "x1"),)
        k = bind_commit(k, ["a"], "x2")
        assert k == ((A, "x1"), (A, "x2"))

    def test_bind_empty_coalition(self):
        k = bind_commit(((A, "x1"),), [], "x2")
        assert k == ((A, "x1"), (frozenset(), "x2"))

    def test_unbind_matching_head(self):
        assert unbind_commit(((A, "x1"),), ["a"], "x1") == ((frozenset(), "x1"),)

    def test_unbind_leaves_other_variables(self):
        k = ((A, "x1"), (A, "x2"))
        assert unbind_commit(k, ["a"], "x1") == ((frozenset(), "x1"), (A, "x2"))

    def test_unbind_empty_commitment(self):
        assert unbind_commit((), ["a"], "x") == ()


class TestCtxChoice:
    def test_empty_commitment_gives_all_states(self, m1):
        chi = Context({"x": StrategyConfig(uniform(m1, "c1"))}, ())
        assert ctx_choice(m1, chi, "s0") == {"s0", "s1", "s2"}

    def test_first_binding_priority_on_m1(self, m1):
        chi = Context(
            {"x1": StrategyConfig(uniform(m1, "c1")), "x2": StrategyConfig(uniform(m1, "c2"))},
            ((A, "x1"), (A, "x2")),
        )
        # c1={s0} conflicts with c2={s1}: the first binding wins
        assert ctx_choice(m1, chi, "s0") == {"s0"}

    def test_compatible_bindings_intersect_on_m2(self, m2):
        chi = Context(
            {"x1": StrategyConfig(uniform(m2, "c1")), "x2": StrategyConfig(uniform(m2, "c2"))},
            ((A, "x1"), (A, "x2")),
        )
        assert ctx_choice(m2, chi, "s0") == {"s1"}  # {s0,s1} & {s1}

    def test_unbound_variable_rejected(self, m1):
        chi = Context({}, ((A, "x"),))
        with pytest.raises(UnboundVariableError):
            ctx_choice(m1, chi, "s0")

    def test_fold_monotone_never_empty_brute_force(self, m1, m2):
        # all commitments of length <= 3 over two coalitions and three
        # variables, with every combination of uniform strategies
        for m in (m1, m2):
            n_choices = max(m.choice_count(0, si) for si in range(len(m.states)))
            strategies = [uniform(m, f"c{i+1}") for i in range(n_choices)]
            entries = [(coal, var) for coal in (frozenset(), A) for var in ("x1", "x2", "x3")]
            assigns = [
                {f"x{i+1}": StrategyConfig(t) for i, t in enumerate(combo)}
                for combo in product(strategies, repeat=3)
            ]
            kappas = [()]
            for _ in range(3):
                kappas += [k + (e,) for k in kappas if len(k) == len(kappas[0]) or True for e in entries]
                kappas = list(dict.fromkeys(kappas))
            for mu in assigns:
                for k in kappas:
                    for s in m.states:
                        cur = ctx_choice(m, Context(mu, k), s)
                        assert cur, "fold must never be empty"
                        for e in entries:
                            ext = ctx_choice(m, Context(mu, k + (e,)), s)
                            assert ext <= cur

    def test_empty_coalition_entries_are_neutral(self, m2):
        mu = {"x1": StrategyConfig(uniform(m2, "c2")), "x9": StrategyConfig(uniform(m2, "c3"))}
        base = ((A, "x1"),)
        extended = base + ((frozenset(), "x9"),)
        for s in m2.states:
            assert ctx_choice(m2, Context(mu, base), s) == ctx_choice(m2, Context(mu, extended), s)

    def test_unbind_removes_agent_contribution(self, m1, m2):
        # after releasing the agent, the fold behaves as if matching entries
        # had empty coalitions
        for m in (m1, m2):
            n_choices = max(m.choice_count(0, si) for si in range(len(m.states)))
            strategies = [uniform(m, f"c{i+1}") for i in range(n_choices)]
            entries = [(coal, var) for coal in (frozenset(), A) for var in ("x1", "x2")]
            kappas = [()]
            for _ in range(3):
                kappas = list(dict.fromkeys(kappas + [k + (e,) for k in kappas for e in entries]))
            for t1 in strategies:
                for t2 in strategies:
                    mu = {"x1": StrategyConfig(t1), "x2": StrategyConfig(t2)}
                    for k in kappas:
                        released = unbind_commit(k, ["a"], "x1")
                        neutral = tuple(
                            (frozenset(), v) if v == "x1" else (c, v) for c, v in k
                        )
                        for s in m.states:
                            assert ctx_choice(m, Context(mu, released), s) == ctx_choice(
                                m, Context(mu, neutral), s
                            )


class TestEnumerate:
    def test_m1_memoryless_count(self, m1):
        assert len(list(enumerate_strategies(m1, 1))) == 2  # 2*1*1

    def test_m2_memoryless_count(self, m2):
        assert len(list(enumerate_strategies(m2, 1))) == 27  # 3*3*3

    def test_single_state_model(self):
        m = model.validate(
            {
                "agents": ["a"],
                "atoms": [],
                "states": ["s"],
                "valuation": {},
                "choices": {"a": {"s": {"c1": ["s"]}}},
            }
        )
        assert len(list(enumerate_strategies(m, 1))) == 1

    def test_bound_two_count_and_uniqueness(self, m1):
        # memory-2 tables: 2^(2*3) updates x (2*1*1)^2 outputs, plus memoryless
        ts = list(enumerate_strategies(m1, 2))
        assert len(ts) == 2 + 64 * 4
        assert len(set(ts)) == len(ts)

    def test_canonical_order_starts_memoryless_first_choices(self, m2):
        first = next(iter(enumerate_strategies(m2, 2)))
        assert first.memory_count == 1
        assert first.output == (((0, 0, 0),),)


class TestConfigGraph:
    def test_m1_always_c1_self_loop(self, m1):
        chi = Context({"x1": StrategyConfig(uniform(m1, "c1"))}, ((A, "x1"),))
        g = build_config_graph(m1, chi, "s0")
        assert g.root == ("s0", (0,))
        assert g.nodes == {("s0", (0,))}
        assert g.live == {("s0", (0,))}
        assert g.edges[g.root] == (("s0", (0,)),)

    def test_m2_always_c1_complete_two_node_graph(self, m2):
        chi = Context({"x1": StrategyConfig(uniform(m2, "c1"))}, ((A, "x1"),))
        g = build_config_graph(m2, chi, "s0")
        states = {s for s, _ in g.nodes}
        assert states == {"s0", "s1"}
        assert sum(len(v) for v in g.edges.values()) == 4
        assert g.live == g.nodes

    def test_empty_commitment_unfolds_successor_graph(self, m1):
        chi = Context({"x1": StrategyConfig(uniform(m1, "c1"))}, ())
        g = build_config_graph(m1, chi, "s1")
        assert {s for s, _ in g.nodes} == {"s0", "s1", "s2"}
        assert g.live == g.nodes

    def test_projection_prefixes_are_tracks_inside_ctx(self, m1, m2):
        # every prefix of a live path is a track and steps lie in the
        # advanced context's choice sets
        for m in (m1, m2):
            strategies = [uniform(m, "c1"), uniform(m, f"c{m.choice_count(0,0)}")]
            chi = Context(
                {"x1": StrategyConfig(strategies[0]), "x2": StrategyConfig(strategies[1])},
                ((A, "x1"), (A, "x2")),
            )
            g = build_config_graph(m, chi, m.states[0])
            if g.root not in g.live:
                continue

            def walk(node, mu, path, depth):
                state, _ = node
                if depth == 6:
                    return
                for nxt in g.live_successors(node):
                    nstate = nxt[0]
                    assert model.is_track(m, path + [nstate])
                    assert nstate in ctx_choice(m, Context(mu, chi.commitment), state)
                    walk(nxt, advance(mu, state), path + [nstate], depth + 1)

            walk(g.root, dict(chi.assignment), [m.states[0]], 0)

    def test_unbound_variable_rejected(self, m1):
        with pytest.raises(UnboundVariableError):
            build_config_graph(m1, Context({}, ((A, "x"),)), "s0")
