"""Acceptance suite: one test per criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every criterion is an
exact boolean or a zero-divergence requirement; criterion 5 additionally
carries a 120 s runtime budget.
"""
import random
import time

import pytest

from uslmc import cli, formula as F, model, pathcheck as PC, strategy
from uslmc.checker import EvalParams, check_sentence, property_suite_prop2
from uslmc.parser import parse_formula, render_formula

from conftest import CORPUS, load_corpus_formula


def _report(n, text):
    print(f"ACCEPTANCE {n}: PASS - {text}")


@pytest.fixture(scope="module")
def models():
    return {
        "m1": model.load_model(CORPUS / "m1.model"),
        "m2": model.load_model(CORPUS / "m2.model"),
    }


def test_criterion_01_one_shot_capability_via_unbinder(models):
    f = load_corpus_formula("psi6.usl")
    assert check_sentence(models["m1"], "s0", f, EvalParams(1)).truth is True
    _report(1, "unbinder form true at m1,s0 with memory bound 1")


def test_criterion_02_sustainable_capability_fails_on_m1(models):
    f = load_corpus_formula("psi8.usl")
    assert check_sentence(models["m1"], "s0", f, EvalParams(1)).truth is False
    assert check_sentence(models["m1"], "s0", f, EvalParams(2)).truth is False
    _report(2, "composition form false at m1,s0 with memory bounds 1 and 2")


def test_criterion_03_sustainable_capability_on_m2_with_witness(models):
    f = load_corpus_formula("psi8.usl")
    v = check_sentence(models["m2"], "s0", f, EvalParams(1))
    assert v.truth is True
    outer = v.witness["x1"]["output"]["0"]["a"]
    assert set(outer.values()) == {"c1"}  # the always-c1 strategy
    _report(3, "composition form true at m2,s0; witness plays c1 everywhere")


def test_criterion_04_sustainable_control(models):
    f = load_corpus_formula("psi9.usl")
    assert check_sentence(models["m2"], "s0", f, EvalParams(1)).truth is True
    for s in models["m1"].states:
        for bound in (1, 2):
            assert check_sentence(models["m1"], s, f, EvalParams(bound)).truth is False
    _report(4, "control form true at m2,s0 and false at every state of m1")


def test_criterion_05_deterministic_models_never_satisfy_control():
    t0 = time.monotonic()
    report = property_suite_prop2(seed=42, trials=100, memory_bounds=(1, 2))
    elapsed = time.monotonic() - t0
    assert report["violations"] == []
    assert report["trials"] == 100
    assert elapsed <= 120.0, f"runtime budget exceeded: {elapsed:.1f}s"
    _report(5, f"100 random deterministic models, 0 violations in {elapsed:.1f}s")


def test_criterion_06_mode_separation(models):
    shape = parse_formula("<<x1>> bind(a,x1) G (<<x2>> bind(a,x2) X p)", "sl")
    sl = check_sentence(models["m1"], "s0", shape, EvalParams(1, "sl_nats")).truth
    usl = check_sentence(models["m1"], "s0", shape, EvalParams(1, "usl")).truth
    assert sl is True and usl is False
    _report(6, "replacement reading true, composition reading false at m1,s0")


def test_criterion_07_embedding_coherence(models, capsys):
    code = cli.main(["translate", str(CORPUS / "psi3.sl")])
    out = capsys.readouterr().out
    assert code == 0
    translated = parse_formula(out)
    hand_written = load_corpus_formula("psi5.usl")
    checked = 0
    for m in models.values():
        for s in m.states:
            for bound in (1, 2):
                a = check_sentence(m, s, translated, EvalParams(bound)).truth
                b = check_sentence(m, s, hand_written, EvalParams(bound)).truth
                assert a == b, f"verdicts diverge at {s} bound {bound}: {a} vs {b}"
                checked += 1
    _report(7, f"translated and hand-written forms agree on {checked} checks")


def test_criterion_08_oracle_equivalence():
    rng = random.Random(2024)
    props = ["a", "b"]

    def random_graph():
        n = rng.randint(1, 5)
        nodes = list(range(n))
        edges = {u: tuple(sorted(rng.sample(nodes, rng.randint(1, min(2, n))))) for u in nodes}
        labels = {u: frozenset(p for p in props if rng.random() < 0.5) for u in nodes}
        return PC.LabeledGraph(0, edges, labels)

    def random_formula(depth):
        if depth == 0 or rng.random() < 0.3:
            return PC.Prop(rng.choice(props)) if rng.random() < 0.85 else PC.Const(rng.random() < 0.5)
        k = rng.randint(0, 3)
        if k == 0:
            return PC.Not(random_formula(depth - 1))
        if k == 1:
            return PC.And(random_formula(depth - 1), random_formula(depth - 1))
        if k == 2:
            return PC.Next(random_formula(depth - 1))
        return PC.Until(random_formula(depth - 1), random_formula(depth - 1))

    instances = 0
    divergences = 0
    while instances < 200:
        g = random_graph()
        f = random_formula(3)
        closure = PC.closure_size(f)
        if closure > 6:
            continue
        instances += 1
        bound = min(len(g.nodes) * 2**closure, 64)
        exhaustive = min(bound, 9)  # walks beyond this are not enumerable
        ok, lasso = PC.universal_check(g, f)
        falsifier = next(
            (l for l in PC.enumerate_lassos(g, exhaustive) if not PC.eval_on_lasso(f, l, g.label)),
            None,
        )
        if ok and falsifier is not None:
            divergences += 1
        if not ok:
            if PC.eval_on_lasso(f, lasso, g.label) or lasso.length() > bound:
                divergences += 1
            elif lasso.length() <= exhaustive and falsifier is None:
                divergences += 1
    assert divergences == 0
    _report(8, f"200 random instances, universal check vs lasso oracle, 0 divergences")


def test_criterion_09_context_rule(models):
    from itertools import product

    m1, m2 = models["m1"], models["m2"]
    A = frozenset(["a"])

    # the first-binding priority example: conflicting c1/c2 at s0 of m1
    chi = strategy.Context(
        {
            "x1": strategy.StrategyConfig(strategy.uniform(m1, "c1")),
            "x2": strategy.StrategyConfig(strategy.uniform(m1, "c2")),
        },
        ((A, "x1"), (A, "x2")),
    )
    assert strategy.ctx_choice(m1, chi, "s0") == {"s0"}

    checked = 0
    for m in (m1, m2):
        n_choices = max(m.choice_count(0, si) for si in range(len(m.states)))
        strategies = [strategy.uniform(m, f"c{i + 1}") for i in range(n_choices)]
        entries = [(coal, var) for coal in (frozenset(), A) for var in ("x1", "x2", "x3")]
        kappas = [()]
        for _ in range(3):
            kappas = list(dict.fromkeys(kappas + [k + (e,) for k in kappas for e in entries]))
        for combo in product(strategies, repeat=3):
            mu = {f"x{i + 1}": strategy.StrategyConfig(t) for i, t in enumerate(combo)}
            for k in kappas:
                for s in m.states:
                    cur = strategy.ctx_choice(m, strategy.Context(mu, k), s)
                    assert cur
                    for e in entries:
                        ext = strategy.ctx_choice(m, strategy.Context(mu, k + (e,)), s)
                        assert ext <= cur
                        checked += 1
    _report(9, f"first-binding priority plus {checked} monotone-shrinking checks")


def test_criterion_10_parser_round_trip_and_gamma():
    from test_parser import random_state

    rng = random.Random(123457)
    for _ in range(1000):
        f = random_state(rng, 8)
        assert parse_formula(render_formula(f)) == f
    for i in range(4):
        g = F.gen_gamma(i)
        reparsed = parse_formula(render_formula(g), "sl")
        assert reparsed == g
        assert F.is_sentence(reparsed)
    _report(10, "1000 round-trips and gamma levels 0..3 re-parse as sentences")
