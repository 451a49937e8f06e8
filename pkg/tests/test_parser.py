"""Concrete syntax: golden parses, sort errors, rendering, round-trips."""
import random

import pytest
from hypothesis import given, settings, strategies as st

from uslmc import formula as F
from uslmc.parser import ParseError, SortError, DialectError, parse_formula, render_formula


A = frozenset(["a"])


class TestGoldenParses:
    def test_sustainable_capability_shape(self):
        f = parse_formula("<<x1>> bind(a,x1) G (<<x2>> bind(a,x2) X p)")
        expect = F.Exists(
            "x1",
            F.Bind(A, "x1", F.always(F.Exists("x2", F.Bind(A, "x2", F.Next(F.Atom("p")))))),
        )
        assert f == expect

    def test_unbinder_shape(self):
        f = parse_formula("<<x1>> bind(a,x1) G (<<x2>> unbind(a,x1) bind(a,x2) X p)")
        expect = F.Exists(
            "x1",
            F.Bind(
                A,
                "x1",
                F.always(
                    F.Exists(
                        "x2",
                        F.Unbind(A, "x1", F.Bind(A, "x2", F.Next(F.Atom("p")))),
                    )
                ),
            ),
        )
        assert f == expect

    def test_quantifier_needs_state_operand(self):
        with pytest.raises(SortError):
            parse_formula("<<x>> X p")

    def test_prefix_chain_right_associative(self):
        f = parse_formula("<<x1>> bind(a,x1) G p")
        assert f == F.Exists("x1", F.Bind(A, "x1", F.always(F.Atom("p"))))

    def test_precedence_until_tighter_than_and(self):
        f = parse_formula("bind(a,x) (p U q & r)")
        assert f.operand == F.path_and(F.Until(F.Atom("p"), F.Atom("q")), F.Atom("r"))

    def test_coalition_forms(self):
        f = parse_formula("bind({a1,a2},x) X p")
        assert f.agents == frozenset(["a1", "a2"])
        g = parse_formula("bind({},x) X p")
        assert g.agents == frozenset()

    def test_comments_ignored(self):
        f = parse_formula("# a comment\np & q\n# another\n")
        assert f == F.And(F.Atom("p"), F.Atom("q"))


class TestDialect:
    def test_sl_rejects_unbind(self):
        with pytest.raises(DialectError):
            parse_formula("<<x>> unbind(a,x) bind(a,x) X p", "sl")

    def test_sl_rejects_coalition_binder(self):
        with pytest.raises(DialectError):
            parse_formula("<<x>> bind({a,b},x) X p", "sl")

    def test_sl_accepts_single_agent(self):
        assert parse_formula("<<x>> bind(a,x) X p", "sl") is not None


class TestErrors:
    @pytest.mark.parametrize(
        "text",
        ["", "p &", "<<x> p", "bind(a x) p", "p q", "((p)", "&", "bind(,x) p"],
    )
    def test_errors_carry_spans(self, text):
        with pytest.raises(ParseError) as e:
            parse_formula(text)
        assert 0 <= e.value.span.start <= e.value.span.end <= max(len(text), 1)


class TestRender:
    def test_golden_sustainable_control(self):
        f = parse_formula(
            "<<x>> bind(a,x) G ((<<x0>> bind(a,x0) X p) & (<<x0>> bind(a,x0) X !p))"
        )
        assert render_formula(f) == (
            "<<x>> bind(a,x) G ((<<x0>> bind(a,x0) X p) & (<<x0>> bind(a,x0) X !p))"
        )

    def test_atom(self):
        assert render_formula(F.Atom("p")) == "p"

    def test_negated_conjunct_needs_no_parens(self):
        assert render_formula(F.And(F.Not(F.Atom("p")), F.Atom("q"))) == "!p & q"

    def test_sugar_recovered(self):
        for text in ["F p", "G p", "p | q", "p -> q", "[[x]] p", "p U (X p)"]:
            assert render_formula(parse_formula(text)) == text


# -- randomized round-trip ----------------------------------------------------

ATOMS = ["p", "q", "r"]
VARS = ["x", "y", "z", "x1"]
AGENTS = ["a", "b"]


def random_state(rng, depth):
    choices = ["atom", "const", "not", "and", "exists", "forall", "bind", "unbind"]
    kind = rng.choice(choices if depth > 0 else ["atom", "const"])
    if kind == "atom":
        return F.Atom(rng.choice(ATOMS))
    if kind == "const":
        return F.Const(rng.random() < 0.5)
    if kind == "not":
        return F.Not(random_state(rng, depth - 1))
    if kind == "and":
        return F.And(random_state(rng, depth - 1), random_state(rng, depth - 1))
    if kind == "exists":
        return F.Exists(rng.choice(VARS), random_state(rng, depth - 1))
    if kind == "forall":
        return F.forall(rng.choice(VARS), random_state(rng, depth - 1))
    coal = frozenset(rng.sample(AGENTS, rng.randint(0, len(AGENTS))))
    ctor = F.Bind if kind == "bind" else F.Unbind
    return ctor(coal, rng.choice(VARS), random_path(rng, depth - 1))


def random_path(rng, depth):
    kind = rng.choice(["state", "not", "and", "next", "until", "ev", "alw"] if depth > 0 else ["state"])
    if kind == "state":
        return random_state(rng, depth)
    if kind == "not":
        return F.path_not(random_path(rng, depth - 1))
    if kind == "and":
        return F.path_and(random_path(rng, depth - 1), random_path(rng, depth - 1))
    if kind == "next":
        return F.Next(random_path(rng, depth - 1))
    if kind == "ev":
        return F.eventually(random_path(rng, depth - 1))
    if kind == "alw":
        return F.always(random_path(rng, depth - 1))
    return F.Until(random_path(rng, depth - 1), random_path(rng, depth - 1))


def roundtrip_cases(n, seed=20240901, depth=8):
    rng = random.Random(seed)
    return [random_state(rng, depth) for _ in range(n)]


@pytest.mark.parametrize("f", roundtrip_cases(150))
def test_roundtrip_random_ast(f):
    assert parse_formula(render_formula(f)) == f


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_roundtrip_hypothesis(seed):
    rng = random.Random(seed)
    f = random_state(rng, rng.randint(0, 8))
    assert parse_formula(render_formula(f)) == f
