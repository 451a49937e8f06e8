"""Universal path checking over finite labeled graphs.

Decides whether every infinite path from a graph's root satisfies a
propositional path formula: translate the negation to a Buchi automaton
(tableau construction, then counter-based degeneralization) and search the
product for an accepting cycle with a nested depth-first search.  A dumb
lasso evaluator and a lasso enumerator provide an independent oracle.

Graphs only need ``root``, ``successors(node)``, ``label(node)`` and an
``all_live`` flag; labels are the sets of true placeholder propositions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional


# -- propositional path formulas -------------------------------------------

@dataclass(frozen=True)
class PropPathFormula:
    pass


@dataclass(frozen=True)
class Prop(PropPathFormula):
    name: str


@dataclass(frozen=True)
class Const(PropPathFormula):
    value: bool


@dataclass(frozen=True)
class Not(PropPathFormula):
    operand: PropPathFormula


@dataclass(frozen=True)
class And(PropPathFormula):
    left: PropPathFormula
    right: PropPathFormula


@dataclass(frozen=True)
class Next(PropPathFormula):
    operand: PropPathFormula


@dataclass(frozen=True)
class Until(PropPathFormula):
    left: PropPathFormula
    right: PropPathFormula


def closure_size(f: PropPathFormula) -> int:
    seen = set()

    def visit(g):
        if g in seen:
            return
        seen.add(g)
        if isinstance(g, (Not, Next)):
            visit(g.operand)
        elif isinstance(g, (And, Until)):
            visit(g.left)
            visit(g.right)

    visit(f)
    return len(seen)


# -- negation normal form ----------------------------------------------------

@dataclass(frozen=True)
class _N:
    pass


@dataclass(frozen=True)
class NLit(_N):
    name: str
    positive: bool


@dataclass(frozen=True)
class NConst(_N):
    value: bool


@dataclass(frozen=True)
class NAnd(_N):
    left: _N
    right: _N


@dataclass(frozen=True)
class NOr(_N):
    left: _N
    right: _N


@dataclass(frozen=True)
class NNext(_N):
    operand: _N


@dataclass(frozen=True)
class NUntil(_N):
    left: _N
    right: _N


@dataclass(frozen=True)
class NRelease(_N):
    left: _N
    right: _N


def nnf(f: PropPathFormula, positive: bool = True) -> _N:
    if isinstance(f, Prop):
        return NLit(f.name, positive)
    if isinstance(f, Const):
        return NConst(f.value == positive)
    if isinstance(f, Not):
        return nnf(f.operand, not positive)
    if isinstance(f, And):
        l, r = nnf(f.left, positive), nnf(f.right, positive)
        return NAnd(l, r) if positive else NOr(l, r)
    if isinstance(f, Next):
        return NNext(nnf(f.operand, positive))
    if isinstance(f, Until):
        l, r = nnf(f.left, positive), nnf(f.right, positive)
        return NUntil(l, r) if positive else NRelease(l, r)
    raise TypeError(f"not a propositional path formula: {f!r}")


# -- tableau construction ----------------------------------------------------

class _TNode:
    __slots__ = ("nid", "incoming", "new", "old", "nxt")

    def __init__(self, nid, incoming, new, old, nxt):
        self.nid = nid
        self.incoming = incoming
        self.new = new
        self.old = old
        self.nxt = nxt


def _expand(node, nodes, counter):
    if not node.new:
        for nd in nodes:
            if nd.old == node.old and nd.nxt == node.nxt:
                nd.incoming |= node.incoming
                return nodes
        nodes.append(node)
        counter[0] += 1
        fresh = _TNode(counter[0], {node.nid}, set(node.nxt), set(), set())
        return _expand(fresh, nodes, counter)
    f = node.new.pop()
    if isinstance(f, NConst):
        if not f.value:
            return nodes
        node.old.add(f)
        return _expand(node, nodes, counter)
    if isinstance(f, NLit):
        if NLit(f.name, not f.positive) in node.old:
            return nodes
        node.old.add(f)
        return _expand(node, nodes, counter)
    if isinstance(f, NAnd):
        node.old.add(f)
        for g in (f.left, f.right):
            if g not in node.old:
                node.new.add(g)
        return _expand(node, nodes, counter)
    if isinstance(f, NNext):
        node.old.add(f)
        node.nxt.add(f.operand)
        return _expand(node, nodes, counter)
    if isinstance(f, (NOr, NUntil, NRelease)):
        counter[0] += 1
        n1 = _TNode(counter[0], set(node.incoming), set(node.new), set(node.old), set(node.nxt))
        counter[0] += 1
        n2 = _TNode(counter[0], set(node.incoming), set(node.new), set(node.old), set(node.nxt))
        n1.old.add(f)
        n2.old.add(f)
        if isinstance(f, NOr):
            if f.left not in n1.old:
                n1.new.add(f.left)
            if f.right not in n2.old:
                n2.new.add(f.right)
        elif isinstance(f, NUntil):
            if f.left not in n1.old:
                n1.new.add(f.left)
            n1.nxt.add(f)
            if f.right not in n2.old:
                n2.new.add(f.right)
        else:  # NRelease
            if f.right not in n1.old:
                n1.new.add(f.right)
            n1.nxt.add(f)
            for g in (f.left, f.right):
                if g not in n2.old:
                    n2.new.add(g)
        return _expand(n2, _expand(n1, nodes, counter), counter)
    raise TypeError(f"unexpected formula {f!r}")


@dataclass
class Buchi:
    """Degeneralized automaton with per-state letter guards.

    A run over a word w0 w1 ... is a state sequence q0 q1 ... starting in
    ``initial`` with each wi satisfying ``guards[qi]`` and q(i+1) in
    ``succ[qi]``; it accepts when it visits ``accepting`` infinitely often.
    """

    n_states: int
    initial: tuple
    guards: tuple  # per state: (frozenset positive, frozenset negative)
    succ: tuple  # per state: tuple of successor states
    accepting: frozenset
    true_sinks: frozenset  # accepting states with an unconditional self-loop
    # states one step from a true sink: reaching one on a valid product path
    # closes a counterexample in a graph where every node has successors
    pre_sinks: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self,
            "pre_sinks",
            frozenset(q for q in range(self.n_states) if set(self.succ[q]) & self.true_sinks),
        )

    def guard_ok(self, q: int, letter: frozenset) -> bool:
        pos, neg = self.guards[q]
        return pos <= letter and not neg & letter


def _untils(nf: _N) -> list:
    out = []

    def visit(g):
        if isinstance(g, NUntil):
            out.append(g)
        if isinstance(g, (NAnd, NOr, NUntil, NRelease)):
            visit(g.left)
            visit(g.right)
        elif isinstance(g, NNext):
            visit(g.operand)

    visit(nf)
    seen = []
    for u in out:
        if u not in seen:
            seen.append(u)
    return seen


def buchi_from_nnf(nf: _N) -> Buchi:
    counter = [0]
    init = _TNode(0, {"init"}, {nf}, set(), set())
    nodes = _expand(init, [], counter)

    ids = [nd.nid for nd in nodes]
    index = {nid: i for i, nid in enumerate(ids)}
    untils = _untils(nf)
    k = len(untils)

    guards = []
    for nd in nodes:
        pos = frozenset(l.name for l in nd.old if isinstance(l, NLit) and l.positive)
        neg = frozenset(l.name for l in nd.old if isinstance(l, NLit) and not l.positive)
        guards.append((pos, neg))

    base_succ = [[] for _ in nodes]
    base_init = []
    for j, nd in enumerate(nodes):
        if "init" in nd.incoming:
            base_init.append(j)
        for src in nd.incoming:
            if src == "init":
                continue
            if src in index:
                base_succ[index[src]].append(j)

    # generalized acceptance: per until, nodes with the until discharged
    gen_sets = []
    for u in untils:
        gen_sets.append(frozenset(j for j, nd in enumerate(nodes) if u not in nd.old or u.right in nd.old))

    if k == 0:
        succ = tuple(tuple(sorted(s)) for s in base_succ)
        all_states = frozenset(range(len(nodes)))
        sinks = frozenset(
            j
            for j in range(len(nodes))
            if guards[j] == (frozenset(), frozenset()) and j in base_succ[j]
        )
        return Buchi(len(nodes), tuple(sorted(base_init)), tuple(guards), succ, all_states, sinks)

    # counter-based degeneralization
    n = len(nodes)
    d_guards = []
    d_succ = []
    for q in range(n * k):
        j, c = q % n, q // n
        d_guards.append(guards[j])
        c2 = (c + 1) % k if j in gen_sets[c] else c
        d_succ.append(tuple(sorted(t + n * c2 for t in base_succ[j])))
    accepting = frozenset(j + n * (k - 1) for j in range(n) if j in gen_sets[k - 1])
    initial = tuple(sorted(j for j in base_init))
    sinks = frozenset(
        q
        for q in accepting
        if d_guards[q] == (frozenset(), frozenset()) and q in d_succ[q]
    )
    return Buchi(n * k, initial, tuple(d_guards), tuple(d_succ), accepting, sinks)


_BUCHI_CACHE: dict = {}


def ltl_to_buchi(f: PropPathFormula) -> Buchi:
    """Automaton accepting exactly the infinite label sequences satisfying f."""
    aut = _BUCHI_CACHE.get(f)
    if aut is None:
        aut = buchi_from_nnf(nnf(f))
        _BUCHI_CACHE[f] = aut
    return aut


# -- labeled graphs ----------------------------------------------------------

class LabeledGraph:
    """Materialized graph with a root and per-node truth labels."""

    def __init__(self, root, edges: Mapping, labels: Mapping):
        self.root = root
        self.nodes = frozenset(edges)
        self._edges = {n: tuple(ts) for n, ts in edges.items()}
        self._labels = {n: frozenset(l) for n, l in labels.items()}
        live = set(self.nodes)
        changed = True
        while changed:
            changed = False
            for n in list(live):
                if not any(t in live for t in self._edges[n]):
                    live.discard(n)
                    changed = True
        self.live = frozenset(live)
        self.all_live = self.live == self.nodes

    def successors(self, node) -> tuple:
        return tuple(t for t in self._edges[node] if t in self.live)

    def label(self, node) -> frozenset:
        return self._labels[node]


@dataclass(frozen=True)
class Lasso:
    """Finite stem from the root plus a repeating cycle."""

    stem: tuple
    cycle: tuple

    def length(self) -> int:
        return len(self.stem) + len(self.cycle)

    def position(self, i: int):
        n = len(self.stem)
        if i < n:
            return self.stem[i]
        return self.cycle[(i - n) % len(self.cycle)]


def eval_on_lasso(f: PropPathFormula, lasso: Lasso, labels: Callable) -> bool:
    """Truth of ``f`` on the ultimately periodic word stem . cycle^omega.

    Computed positionwise with a least fixpoint for until, wrapping the
    final position back onto the cycle.
    """
    seq = list(lasso.stem) + list(lasso.cycle)
    n = len(seq)
    loop = len(lasso.stem)

    def succ(i):
        return i + 1 if i + 1 < n else loop

    def values(g) -> list:
        if isinstance(g, Prop):
            return [g.name in labels(node) for node in seq]
        if isinstance(g, Const):
            return [g.value] * n
        if isinstance(g, Not):
            return [not v for v in values(g.operand)]
        if isinstance(g, And):
            lv, rv = values(g.left), values(g.right)
            return [a and b for a, b in zip(lv, rv)]
        if isinstance(g, Next):
            ov = values(g.operand)
            return [ov[succ(i)] for i in range(n)]
        if isinstance(g, Until):
            lv, rv = values(g.left), values(g.right)
            out = [False] * n
            for _ in range(n + 1):
                nxt = [rv[i] or (lv[i] and out[succ(i)]) for i in range(n)]
                if nxt == out:
                    break
                out = nxt
            return out
        raise TypeError(f"not a propositional path formula: {g!r}")

    return values(f)[0]


def _canonical_lasso(stem: tuple, cycle: tuple) -> Lasso:
    # primitive period
    for d in range(1, len(cycle) + 1):
        if len(cycle) % d == 0 and cycle == cycle[:d] * (len(cycle) // d):
            cycle = cycle[:d]
            break
    stem = list(stem)
    cycle = list(cycle)
    while stem and stem[-1] == cycle[-1]:
        cycle = [cycle[-1]] + cycle[:-1]
        stem.pop()
    return Lasso(tuple(stem), tuple(cycle))


def enumerate_lassos(g, max_len: int) -> Iterator[Lasso]:
    """Canonical lassos from the root with |stem| + |cycle| <= max_len."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    seen = set()
    root = g.root
    if root not in getattr(g, "nodes", {root}):
        return

    def walks(path):
        last = path[-1]
        for t in g.successors(last):
            for j, nd in enumerate(path):
                if nd == t:
                    lasso = _canonical_lasso(tuple(path[:j]), tuple(path[j:]))
                    key = (lasso.stem, lasso.cycle)
                    if key not in seen:
                        seen.add(key)
                        yield lasso
            if len(path) < max_len:
                yield from walks(path + [t])

    yield from walks([root])


# -- emptiness ---------------------------------------------------------------

def _product_successors(g, aut: Buchi, state, cache):
    if state in cache:
        return cache[state]
    node, q = state
    out = []
    if aut.guard_ok(q, g.label(node)):
        for node2 in g.successors(node):
            for q2 in aut.succ[q]:
                out.append((node2, q2))
    cache[state] = out
    return out


def _ndfs(g, aut: Buchi) -> Optional[tuple]:
    """Nested DFS for an accepting product cycle.

    Returns a witness hint: ``(seed, parents)`` when a cycle through the
    accepting ``seed`` exists, or the marker ``("sink", state)`` when an
    unconditionally accepting sink is reached in an all-live graph (any
    infinite continuation then closes a counterexample).
    """
    cache: dict = {}
    pre_sinks = aut.pre_sinks if getattr(g, "all_live", False) else frozenset()
    blue, red = set(), set()

    def hits_sink(s) -> bool:
        return s[1] in pre_sinks and aut.guard_ok(s[1], g.label(s[0]))

    roots = [(g.root, q) for q in aut.initial]
    for root in roots:
        if hits_sink(root):
            return ("sink", root)
    for root in roots:
        if root in blue:
            continue
        blue.add(root)
        stack = [(root, None)]
        while stack:
            state, it = stack[-1]
            if it is None:
                # scan all successors for the sink shortcut before descending
                succs = _product_successors(g, aut, state, cache)
                for t in succs:
                    if t not in blue and hits_sink(t):
                        return ("sink", t)
                it = iter(succs)
                stack[-1] = (state, it)
            advanced = False
            for t in it:
                if t not in blue:
                    blue.add(t)
                    stack.append((t, None))
                    advanced = True
                    break
            if advanced:
                continue
            stack.pop()
            if state[1] in aut.accepting:
                # red search: can `state` reach itself?
                frontier = [state]
                while frontier:
                    s2 = frontier.pop()
                    for t2 in _product_successors(g, aut, s2, cache):
                        if t2 == state:
                            return ("cycle", state)
                        if t2 not in red:
                            red.add(t2)
                            frontier.append(t2)
    return None


def _bfs_lasso(g, aut: Buchi) -> Optional[Lasso]:
    """Shortest-stem counterexample lasso over the materialized product."""
    from collections import deque

    parents = {}
    order = []
    queue = deque()
    cache: dict = {}
    for q in aut.initial:
        s = (g.root, q)
        if s not in parents:
            parents[s] = None
            order.append(s)
            queue.append(s)
    while queue:
        s = queue.popleft()
        for t in _product_successors(g, aut, s, cache):
            if t not in parents:
                parents[t] = s
                order.append(t)
                queue.append(t)

    def shortest_cycle(seed):
        back = {seed: None}
        dq = deque([seed])
        while dq:
            s = dq.popleft()
            for t in _product_successors(g, aut, s, cache):
                if t == seed:
                    cyc = []
                    cur = s
                    while cur is not None:
                        cyc.append(cur)
                        cur = back[cur]
                    cyc.reverse()  # [seed, ..., s], with an edge s -> seed
                    return cyc
                if t not in back:
                    back[t] = s
                    dq.append(t)
        return None

    for seed in order:
        if seed[1] not in aut.accepting:
            continue
        cycle = shortest_cycle(seed)
        if cycle is None:
            continue
        stem = []
        cur = parents[seed]
        while cur is not None:
            stem.append(cur)
            cur = parents[cur]
        stem.reverse()
        return Lasso(tuple(n for n, _ in stem), tuple(n for n, _ in cycle))
    return None


def exists_path(g, f: PropPathFormula, want_lasso: bool = True):
    """Does some infinite path from the root satisfy ``f``?"""
    aut = ltl_to_buchi(f)
    hit = _ndfs(g, aut)
    if hit is None:
        return False, None
    if not want_lasso:
        return True, None
    lasso = _bfs_lasso(g, aut)
    if lasso is None:
        # the product is finite, so a non-empty language always has a cycle
        raise AssertionError("accepting run found but no product lasso")
    return True, lasso


def universal_check(g, f: PropPathFormula, want_lasso: bool = True):
    """True iff every infinite path from the root satisfies ``f``.

    On failure also returns a counterexample lasso (shortest stem, then a
    short cycle; minimality is best-effort).  Vacuously true when the root
    reaches no live node.
    """
    found, lasso = exists_path(g, Not(f), want_lasso)
    if not found:
        return True, None
    return False, lasso
