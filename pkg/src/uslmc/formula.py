"""Two-sorted formula ASTs and structural operations.

State formulas: atoms, boolean constants/connectives, strategy
quantification, binders and unbinders.  Path formulas: state formulas plus
negation, conjunction, next and until.  Derived connectives (or, implies,
F, G, the universal quantifier) are surface sugar; they normalize into this
core on construction, and the renderer recovers them for display.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union


@dataclass(frozen=True)
class Span:
    """Character offsets (start, end) into a source text."""

    start: int
    end: int


@dataclass(frozen=True)
class _Node:
    # Spans never take part in structural equality or hashing.
    span: Optional[Span] = field(default=None, compare=False, repr=False, kw_only=True)


class StateFormula(_Node):
    """Marker base for state-sorted formulas."""


class PathOnly(_Node):
    """Marker base for strictly path-sorted formulas."""


Formula = Union[StateFormula, PathOnly]
PathFormula = Formula  # every state formula is also a path formula


@dataclass(frozen=True)
class Atom(StateFormula):
    name: str


@dataclass(frozen=True)
class Const(StateFormula):
    value: bool


@dataclass(frozen=True)
class Not(StateFormula):
    operand: StateFormula


@dataclass(frozen=True)
class And(StateFormula):
    left: StateFormula
    right: StateFormula


@dataclass(frozen=True)
class Exists(StateFormula):
    """Existential quantification over strategies: ``<<x>> phi``."""

    var: str
    operand: StateFormula


@dataclass(frozen=True)
class Bind(StateFormula):
    """Commit the coalition to the strategy named by ``var``."""

    agents: frozenset
    var: str
    operand: PathFormula


@dataclass(frozen=True)
class Unbind(StateFormula):
    """Release the coalition from the strategy named by ``var``."""

    agents: frozenset
    var: str
    operand: PathFormula


@dataclass(frozen=True)
class PathNot(PathOnly):
    operand: PathFormula


@dataclass(frozen=True)
class PathAnd(PathOnly):
    left: PathFormula
    right: PathFormula


@dataclass(frozen=True)
class Next(PathOnly):
    operand: PathFormula


@dataclass(frozen=True)
class Until(PathOnly):
    left: PathFormula
    right: PathFormula


def coalition(agents: Iterable[str]) -> frozenset:
    return frozenset(agents)


def is_state(f: Formula) -> bool:
    return isinstance(f, StateFormula)


# -- smart constructors -------------------------------------------------

def path_not(f: PathFormula, span: Optional[Span] = None) -> PathFormula:
    """Negation that stays in the state sort whenever the operand allows."""
    if isinstance(f, StateFormula):
        return Not(f, span=span)
    return PathNot(f, span=span)


def path_and(left: PathFormula, right: PathFormula, span: Optional[Span] = None) -> PathFormula:
    if isinstance(left, StateFormula) and isinstance(right, StateFormula):
        return And(left, right, span=span)
    return PathAnd(left, right, span=span)


def f_or(left: PathFormula, right: PathFormula, span: Optional[Span] = None) -> PathFormula:
    return path_not(path_and(path_not(left), path_not(right)), span=span)


def implies(left: PathFormula, right: PathFormula, span: Optional[Span] = None) -> PathFormula:
    return path_not(path_and(left, path_not(right)), span=span)


def eventually(f: PathFormula, span: Optional[Span] = None) -> PathFormula:
    return Until(Const(True), f, span=span)


def always(f: PathFormula, span: Optional[Span] = None) -> PathFormula:
    return path_not(Until(Const(True), path_not(f)), span=span)


def forall(var: str, f: StateFormula, span: Optional[Span] = None) -> StateFormula:
    return Not(Exists(var, Not(f)), span=span)


# -- traversal -----------------------------------------------------------

def children(f: Formula) -> tuple:
    if isinstance(f, (Atom, Const)):
        return ()
    if isinstance(f, (Not, PathNot, Next)):
        return (f.operand,)
    if isinstance(f, (And, PathAnd, Until)):
        return (f.left, f.right)
    if isinstance(f, Exists):
        return (f.operand,)
    if isinstance(f, (Bind, Unbind)):
        return (f.operand,)
    raise TypeError(f"not a formula: {f!r}")


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def node_count(f: Formula) -> int:
    return sum(1 for _ in walk(f))


def atoms(f: Formula) -> frozenset:
    return frozenset(n.name for n in walk(f) if isinstance(n, Atom))


def coalition_agents(f: Formula) -> frozenset:
    out = set()
    for n in walk(f):
        if isinstance(n, (Bind, Unbind)):
            out |= n.agents
    return frozenset(out)


def variables(f: Formula) -> tuple:
    """Every strategy variable occurring in ``f``, in first-occurrence order."""
    seen: dict = {}

    def visit(node):
        if isinstance(node, Exists):
            seen.setdefault(node.var, None)
        elif isinstance(node, (Bind, Unbind)):
            seen.setdefault(node.var, None)
        for c in children(node):
            visit(c)

    visit(f)
    return tuple(seen)


def quantifier_depth(f: Formula) -> int:
    best = 0
    for c in children(f):
        best = max(best, quantifier_depth(c))
    return best + (1 if isinstance(f, Exists) else 0)


# -- free variables ------------------------------------------------------

def free_vars(f: Formula) -> frozenset:
    """Free strategy variables.

    Binders and unbinders both contribute their variable; quantifiers
    delete theirs.  Unbinding a variable that is never quantified is almost
    always an authoring mistake, so unbinders count as uses here even
    though evaluation tolerates them as no-ops.
    """
    if isinstance(f, (Atom, Const)):
        return frozenset()
    if isinstance(f, Exists):
        return free_vars(f.operand) - {f.var}
    if isinstance(f, (Bind, Unbind)):
        return free_vars(f.operand) | {f.var}
    out: frozenset = frozenset()
    for c in children(f):
        out |= free_vars(c)
    return out


def binding_free_vars(f: Formula) -> frozenset:
    """Free variables counting binder occurrences only.

    This is the notion the evaluator gates on: an unbound unbinder is a
    semantic no-op, while an unbound binder cannot be evaluated.
    """
    if isinstance(f, (Atom, Const)):
        return frozenset()
    if isinstance(f, Exists):
        return binding_free_vars(f.operand) - {f.var}
    if isinstance(f, Bind):
        return binding_free_vars(f.operand) | {f.var}
    if isinstance(f, Unbind):
        return binding_free_vars(f.operand)
    out: frozenset = frozenset()
    for c in children(f):
        out |= binding_free_vars(c)
    return out


def is_sentence(f: Formula) -> bool:
    return not free_vars(f)


# -- dialect -------------------------------------------------------------

class DialectViolation(ValueError):
    def __init__(self, message: str, node: Optional[Formula] = None):
        super().__init__(message)
        self.node = node
        self.span = getattr(node, "span", None)


def check_single_agent_dialect(f: Formula) -> None:
    """Reject unbinders and multi-agent binders (the revocation dialect)."""
    for n in walk(f):
        if isinstance(n, Unbind):
            raise DialectViolation("unbinder is not allowed in the sl dialect", n)
        if isinstance(n, Bind) and len(n.agents) != 1:
            raise DialectViolation(
                f"sl dialect binder must name exactly one agent, got {sorted(n.agents)}", n
            )


def is_single_agent_dialect(f: Formula) -> bool:
    try:
        check_single_agent_dialect(f)
    except DialectViolation:
        return False
    return True


# -- embedding -----------------------------------------------------------

def embed_sl(f: Formula, vocabulary: Optional[Sequence[str]] = None) -> Formula:
    """Rewrite single-agent binders into unbind-all-then-bind form.

    Every binder ``bind(a, x)`` becomes the chain
    ``unbind(a, v1) ... unbind(a, vn) bind(a, x)`` over the vocabulary, in
    vocabulary order.  The default vocabulary is the variables occurring in
    ``f`` in first-occurrence order; unbinding a variable that never occurs
    is a semantic no-op, so nothing larger is needed.
    """
    check_single_agent_dialect(f)
    vocab = tuple(vocabulary) if vocabulary is not None else variables(f)
    missing = [v for v in variables(f) if v not in vocab]
    if missing:
        raise ValueError(f"vocabulary is missing variables: {', '.join(missing)}")

    def go(node):
        if isinstance(node, (Atom, Const)):
            return node
        if isinstance(node, Not):
            return Not(go(node.operand))
        if isinstance(node, PathNot):
            return PathNot(go(node.operand))
        if isinstance(node, And):
            return And(go(node.left), go(node.right))
        if isinstance(node, PathAnd):
            return PathAnd(go(node.left), go(node.right))
        if isinstance(node, Exists):
            return Exists(node.var, go(node.operand))
        if isinstance(node, Next):
            return Next(go(node.operand))
        if isinstance(node, Until):
            return Until(go(node.left), go(node.right))
        if isinstance(node, Bind):
            out: Formula = Bind(node.agents, node.var, go(node.operand))
            for v in reversed(vocab):
                out = Unbind(node.agents, v, out)
            return out
        raise TypeError(f"not a formula: {node!r}")

    return go(f)


# -- substitution --------------------------------------------------------

def substitute_many(host: Formula, pairs: Sequence[tuple]) -> Formula:
    """Simultaneously replace subformula occurrences.

    At each node the first pair whose target equals the node wins and the
    replacement is not re-scanned; otherwise the children are rewritten.
    Occurrences are detected by structural equality.
    """
    table = list(pairs)

    def go(node):
        for target, replacement in table:
            if node == target:
                return replacement
        if isinstance(node, (Atom, Const)):
            return node
        if isinstance(node, Not):
            return Not(go(node.operand))
        if isinstance(node, PathNot):
            return PathNot(go(node.operand))
        if isinstance(node, And):
            return And(go(node.left), go(node.right))
        if isinstance(node, PathAnd):
            return PathAnd(go(node.left), go(node.right))
        if isinstance(node, Exists):
            return Exists(node.var, go(node.operand))
        if isinstance(node, Next):
            return Next(go(node.operand))
        if isinstance(node, Until):
            return Until(go(node.left), go(node.right))
        if isinstance(node, Bind):
            return Bind(node.agents, node.var, go(node.operand))
        if isinstance(node, Unbind):
            return Unbind(node.agents, node.var, go(node.operand))
        raise TypeError(f"not a formula: {node!r}")

    return go(host)


def substitute(host: Formula, target: Formula, replacement: Formula) -> Formula:
    return substitute_many(host, [(target, replacement)])


# -- the iterated-control family ------------------------------------------

def _control_pair(var: str) -> StateFormula:
    # <<v>> bind(a,v) X p  &  <<v>> bind(a,v) X !p
    p = Atom("p")
    a = coalition(["a"])
    return And(
        Exists(var, Bind(a, var, Next(p))),
        Exists(var, Bind(a, var, Next(Not(p)))),
    )


def gen_gamma(i: int) -> StateFormula:
    """Iterated next-step-control formulas, single agent ``a`` over atom ``p``.

    Level 0 asserts a sustainable choice between p and !p at the next step;
    each level re-guards the p / !p occurrences with a fresh variable so
    that the choice must remain available one round longer.
    """
    if i < 0:
        raise ValueError("depth must be >= 0")
    p = Atom("p")
    gamma: StateFormula = Exists("x", Bind(coalition(["a"]), "x", always(_control_pair("x0"))))
    for k in range(i):
        guard = always(_control_pair(f"x{k + 1}"))
        gamma = substitute_many(
            gamma,
            [
                (Not(p), path_and(Not(p), guard)),
                (p, path_and(p, guard)),
            ],
        )
    return gamma
