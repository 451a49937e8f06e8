"""Recursive satisfaction evaluation under bounded-memory strategies.

Two modes share one engine.  In ``usl`` mode binders extend the commitment
and hand their path argument to a universal check over the configuration
graph of the extended context.  In ``sl_nats`` mode binders rewrite the
agent's commitment in place (revocation instead of composition) and each
temporal operator re-quantifies over the outcomes of the current context.

The strategy quantifier searches the finite transducer class by lazily
refining partial update/output tables: evaluation runs against a trial
transducer and branches on the first undefined cell it touches.  A verdict
reached under a partial table holds for every completion, so the search
decides exactly the same predicate as streaming the full enumeration, only
without re-checking strategies that differ in cells the verdict never read.
Reported witnesses are completed with the first choice and memory element.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional

from . import formula as F
from . import pathcheck as PC
from .model import Nats, is_deterministic, validate
from .strategy import (
    StrategyTransducer,
    UnboundVariableError,
    bind_commit,
    unbind_commit,
)


class CheckError(ValueError):
    """Input-level failure: bad sentence, vocabulary or mode."""


class NonSentenceError(CheckError):
    pass


class VocabularyError(CheckError):
    pass


class ModeError(CheckError):
    pass


class BudgetExceeded(RuntimeError):
    def __init__(self, message: str, stats: dict):
        super().__init__(message)
        self.stats = dict(stats)


class OracleDivergence(RuntimeError):
    pass


@dataclass
class EvalParams:
    memory_bound: int = 1
    mode: str = "usl"  # or "sl_nats"
    cache: bool = True


@dataclass
class Verdict:
    truth: bool
    witness: Optional[dict]
    stats: dict = field(default_factory=dict)


class UndefinedCell(Exception):
    __slots__ = ("owner", "kind", "q", "ai", "si")

    def __init__(self, owner, kind, q, ai, si):
        super().__init__(kind)
        self.owner = owner
        self.kind = kind
        self.q = q
        self.ai = ai
        self.si = si


class TrialTransducer:
    """Partially defined transducer; querying an open cell aborts the
    evaluation so the quantifier search can branch on it."""

    __slots__ = ("model", "memory_count", "outputs", "updates")

    def __init__(self, model: Nats, memory_count: int, outputs: dict, updates: dict):
        self.model = model
        self.memory_count = memory_count
        self.outputs = outputs
        self.updates = updates

    def update_memory(self, q: int, si: int) -> int:
        if self.memory_count == 1:
            return 0
        v = self.updates.get((q, si))
        if v is None:
            raise UndefinedCell(self, "update", q, None, si)
        return v

    def choice_index(self, q: int, ai: int, si: int) -> int:
        v = self.outputs.get((q, ai, si))
        if v is None:
            if self.model.choice_count(ai, si) == 1:
                return 0
            raise UndefinedCell(self, "output", q, ai, si)
        return v

    def choice_mask(self, q: int, ai: int, si: int) -> int:
        return self.model.choice_mask(ai, si, self.choice_index(q, ai, si))

    def freeze(self) -> StrategyTransducer:
        m = self.model
        n_s, n_a = len(m.states), len(m.agents)
        update = tuple(
            tuple(self.updates.get((q, si), 0) for si in range(n_s))
            for q in range(self.memory_count)
        )
        output = tuple(
            tuple(
                tuple(self.outputs.get((q, ai, si), 0) for si in range(n_s))
                for ai in range(n_a)
            )
            for q in range(self.memory_count)
        )
        return StrategyTransducer(m, self.memory_count, update, output)


class _LazyConfigGraph:
    """Configuration graph expanded on demand during the product search."""

    def __init__(self, model, mu, kappa, si_root, all_live, thetas, label_eval):
        self.m = model
        self.kappa = kappa
        self.var_order = tuple(sorted(mu))
        self.tdcrs = tuple(mu[v][0] for v in self.var_order)
        self.entries = []
        for coal, var in kappa:
            if var not in mu:
                raise UnboundVariableError(var)
            self.entries.append(
                (tuple(model.agent_index(a) for a in sorted(coal)), self.var_order.index(var))
            )
        self.root = (si_root, tuple(mu[v][1] for v in self.var_order))
        self.all_live = all_live
        self.thetas = thetas
        self.label_eval = label_eval
        self._succ: dict = {}
        self._labels: dict = {}

    def successors(self, node):
        cached = self._succ.get(node)
        if cached is not None:
            return cached
        si, mems = node
        acc = self.m.full_mask
        for agent_idxs, vp in self.entries:
            contrib = self.m.full_mask
            tdcr, q = self.tdcrs[vp], mems[vp]
            for ai in agent_idxs:
                contrib &= tdcr.choice_mask(q, ai, si)
            refined = acc & contrib
            if refined:
                acc = refined
        allowed = acc & self.m.successor_mask(si)
        nxt = tuple(
            self.tdcrs[vp].update_memory(mems[vp], si) for vp in range(len(self.var_order))
        )
        out = tuple((ti, nxt) for ti in range(len(self.m.states)) if allowed >> ti & 1)
        self._succ[node] = out
        return out

    def label(self, node):
        cached = self._labels.get(node)
        if cached is not None:
            return cached
        si, mems = node
        mu = {v: (self.tdcrs[i], mems[i]) for i, v in enumerate(self.var_order)}
        names = frozenset(
            f"t{k}"
            for k, theta in enumerate(self.thetas)
            if self.label_eval(theta, si, mu, self.kappa)
        )
        self._labels[node] = names
        return names

    def node_count(self) -> int:
        return len(self._succ)


def _skeleton(psi) -> tuple:
    """Split a path formula into a propositional skeleton plus the maximal
    state subformulas it quantifies over, deduplicated structurally."""
    thetas: list = []
    index: dict = {}

    def go(g):
        if isinstance(g, F.Const):
            return PC.Const(g.value)
        if isinstance(g, F.StateFormula):
            k = index.get(g)
            if k is None:
                k = len(thetas)
                index[g] = k
                thetas.append(g)
            return PC.Prop(f"t{k}")
        if isinstance(g, F.PathNot):
            return PC.Not(go(g.operand))
        if isinstance(g, F.PathAnd):
            return PC.And(go(g.left), go(g.right))
        if isinstance(g, F.Next):
            return PC.Next(go(g.operand))
        if isinstance(g, F.Until):
            return PC.Until(go(g.left), go(g.right))
        raise TypeError(f"not a path formula: {g!r}")

    return go(psi), thetas


class Evaluator:
    def __init__(
        self,
        model: Nats,
        params: EvalParams,
        oracle: bool = False,
        max_strategies: Optional[int] = None,
        max_seconds: Optional[float] = None,
    ):
        self.m = model
        self.params = params
        self.oracle = oracle
        self.memo: Optional[dict] = {} if params.cache else None
        self.stats = {
            "strategies_enumerated": 0,
            "cache_hits": 0,
            "graphs_built": 0,
            "graph_nodes": 0,
        }
        self._alive: list = []  # keeps trial ids unique for the memo
        self.all_live = model.all_choices_live()
        self._max_strategies = max_strategies
        self._deadline = time.monotonic() + max_seconds if max_seconds else None
        self._fv_cache: dict = {}
        self._skel_cache: dict = {}
        self._in_oracle = False

    # -- bookkeeping -----------------------------------------------------

    def _tick(self):
        self.stats["strategies_enumerated"] += 1
        if self._max_strategies is not None and self.stats["strategies_enumerated"] > self._max_strategies:
            raise BudgetExceeded("strategy budget exhausted", self.stats)
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise BudgetExceeded("time budget exhausted", self.stats)

    def _free_vars(self, f) -> frozenset:
        fv = self._fv_cache.get(id(f))
        if fv is None:
            fv = F.free_vars(f)
            self._fv_cache[id(f)] = fv
        return fv

    def _memo_key(self, f, si, mu, kappa):
        relevant = self._free_vars(f) | {v for _, v in kappa}
        mem = tuple(
            (v, id(mu[v][0]), mu[v][1]) for v in sorted(relevant) if v in mu
        )
        return (id(f), self.params.mode, si, mem, kappa)

    # -- entry points ------------------------------------------------------

    def eval_formula(self, f, si, mu, kappa) -> bool:
        if self.params.mode == "sl_nats":
            return self.eval_sl_nats(f, si, mu, kappa)
        return self.eval_state(f, si, mu, kappa)

    # -- compositional semantics ------------------------------------------

    def eval_state(self, f, si, mu, kappa) -> bool:
        if isinstance(f, F.Atom):
            return f.name in self.m.valuation[self.m.states[si]]
        if isinstance(f, F.Const):
            return f.value
        if isinstance(f, F.Not):
            return not self.eval_state(f.operand, si, mu, kappa)
        if isinstance(f, F.And):
            return self.eval_state(f.left, si, mu, kappa) and self.eval_state(
                f.right, si, mu, kappa
            )
        key = None
        if self.memo is not None:
            key = self._memo_key(f, si, mu, kappa)
            hit = self.memo.get(key)
            if hit is not None:
                self.stats["cache_hits"] += 1
                return hit
        if isinstance(f, F.Exists):
            found, _ = self.search_strategy(f.var, f.operand, si, mu, kappa)
            result = found
        elif isinstance(f, F.Bind):
            if f.var not in mu:
                raise UnboundVariableError(f.var)
            result = self.eval_path(f.operand, si, mu, bind_commit(kappa, f.agents, f.var))
        elif isinstance(f, F.Unbind):
            result = self.eval_path(f.operand, si, mu, unbind_commit(kappa, f.agents, f.var))
        else:
            raise TypeError(f"not a state formula: {f!r}")
        if key is not None:
            self.memo[key] = result
        return result

    def eval_path(self, psi, si, mu, kappa) -> bool:
        if isinstance(psi, F.StateFormula) and self.all_live:
            # every root has an outcome, so the universal check collapses
            return self.eval_state(psi, si, mu, kappa)
        cached = self._skel_cache.get(id(psi))
        if cached is None:
            cached = self._skel_cache[id(psi)] = _skeleton(psi)
        skel, thetas = cached
        return self._universal(si, mu, kappa, skel, thetas, self._theta_state)

    def _theta_state(self, theta, si, mu, kappa) -> bool:
        return self.eval_state(theta, si, mu, kappa)

    # -- revocation mode ----------------------------------------------------

    def eval_sl_nats(self, f, si, mu, kappa) -> bool:
        if isinstance(f, F.Atom):
            return f.name in self.m.valuation[self.m.states[si]]
        if isinstance(f, F.Const):
            return f.value
        if isinstance(f, F.Not):
            return not self.eval_sl_nats(f.operand, si, mu, kappa)
        if isinstance(f, F.And):
            return self.eval_sl_nats(f.left, si, mu, kappa) and self.eval_sl_nats(f.right, si, mu, kappa)
        if isinstance(f, F.Unbind):
            raise ModeError("the unbinder is not part of the revocation dialect")
        key = None
        if self.memo is not None:
            key = self._memo_key(f, si, mu, kappa)
            hit = self.memo.get(key)
            if hit is not None:
                self.stats["cache_hits"] += 1
                return hit
        if isinstance(f, F.Exists):
            found, _ = self.search_strategy(f.var, f.operand, si, mu, kappa)
            result = found
        elif isinstance(f, F.Bind):
            if f.var not in mu:
                raise UnboundVariableError(f.var)
            result = self._eval_sl_path(f.operand, si, mu, _rebind(kappa, f.agents, f.var))
        else:
            raise TypeError(f"not a state formula: {f!r}")
        if key is not None:
            self.memo[key] = result
        return result

    def _eval_sl_path(self, psi, si, mu, kappa) -> bool:
        if isinstance(psi, F.StateFormula):
            return self.eval_sl_nats(psi, si, mu, kappa)
        if isinstance(psi, F.PathNot):
            return not self._eval_sl_path(psi.operand, si, mu, kappa)
        if isinstance(psi, F.PathAnd):
            return self._eval_sl_path(psi.left, si, mu, kappa) and self._eval_sl_path(
                psi.right, si, mu, kappa
            )
        if isinstance(psi, F.Next):
            skel, thetas = PC.Next(PC.Prop("t0")), [psi.operand]
            if isinstance(psi.operand, F.Const):
                skel, thetas = PC.Next(PC.Const(psi.operand.value)), []
            return self._universal(si, mu, kappa, skel, thetas, self._theta_sl)
        if isinstance(psi, F.Until):
            thetas = []
            parts = []
            for op in (psi.left, psi.right):
                if isinstance(op, F.Const):
                    parts.append(PC.Const(op.value))
                else:
                    parts.append(PC.Prop(f"t{len(thetas)}"))
                    thetas.append(op)
            return self._universal(si, mu, kappa, PC.Until(*parts), thetas, self._theta_sl)
        raise TypeError(f"not a path formula: {psi!r}")

    def _theta_sl(self, theta, si, mu, kappa) -> bool:
        return self._eval_sl_path(theta, si, mu, kappa)

    # -- universal path checks ----------------------------------------------

    def _universal(self, si, mu, kappa, skel, thetas, label_eval) -> bool:
        graph = _LazyConfigGraph(self.m, mu, kappa, si, self.all_live, thetas, label_eval)
        ok, _ = PC.universal_check(graph, skel, want_lasso=False)
        self.stats["graphs_built"] += 1
        self.stats["graph_nodes"] += graph.node_count()
        if self.oracle and not self._in_oracle:
            self._verify_with_oracle(si, mu, kappa, skel, thetas, label_eval, ok)
        return ok

    def _verify_with_oracle(self, si, mu, kappa, skel, thetas, label_eval, ok) -> None:
        """Re-check one universal verdict against the lasso oracle."""
        self._in_oracle = True
        try:
            frozen_mu = {
                v: (t.freeze(), q) if isinstance(t, TrialTransducer) else (t, q)
                for v, (t, q) in mu.items()
            }
            g2 = _LazyConfigGraph(self.m, frozen_mu, kappa, si, self.all_live, thetas, label_eval)
            ok2, lasso = PC.universal_check(g2, skel, want_lasso=True)
            if ok2 != ok:
                raise OracleDivergence(
                    f"universal check disagrees with its materialized re-run: {ok} vs {ok2}"
                )
            if not ok2:
                if PC.eval_on_lasso(skel, lasso, g2.label):
                    raise OracleDivergence("counterexample lasso does not falsify the formula")
                return
            budget = 2000
            for cand in PC.enumerate_lassos(g2, 8):
                budget -= 1
                if budget <= 0:
                    break
                if not PC.eval_on_lasso(skel, cand, g2.label):
                    raise OracleDivergence("enumerated lasso falsifies a formula judged universal")
        finally:
            self._in_oracle = False

    # -- the strategy quantifier ---------------------------------------------

    def search_strategy(self, var, body, si, mu, kappa):
        """Find a transducer within the memory bound making ``body`` true."""
        eval_fn = self.eval_sl_nats if self.params.mode == "sl_nats" else self.eval_state
        for mc in range(1, self.params.memory_bound + 1):
            trial = self._attempt(mc, var, body, si, mu, kappa, {}, {}, eval_fn)
            if trial is not None:
                return True, trial.freeze()
        return False, None

    def _attempt(self, mc, var, body, si, mu, kappa, outs, upds, eval_fn):
        self._tick()
        trial = TrialTransducer(self.m, mc, dict(outs), dict(upds))
        self._alive.append(trial)
        mu2 = dict(mu)
        mu2[var] = (trial, 0)
        try:
            ok = eval_fn(body, si, mu2, kappa)
        except UndefinedCell as e:
            if e.owner is not trial:
                raise
            if e.kind == "output":
                for v in range(self.m.choice_count(e.ai, e.si)):
                    cells = dict(outs)
                    cells[(e.q, e.ai, e.si)] = v
                    res = self._attempt(mc, var, body, si, mu, kappa, cells, upds, eval_fn)
                    if res is not None:
                        return res
                return None
            for v in range(mc):
                cells = dict(upds)
                cells[(e.q, e.si)] = v
                res = self._attempt(mc, var, body, si, mu, kappa, outs, cells, eval_fn)
                if res is not None:
                    return res
            return None
        return trial if ok else None


def _rebind(kappa, agents: frozenset, var: str):
    """Replace the agent's commitment entries in place; append when absent."""
    out = []
    replaced = False
    for coal, v in kappa:
        if coal == agents:
            out.append((agents, var))
            replaced = True
        else:
            out.append((coal, v))
    if not replaced:
        out.append((agents, var))
    return tuple(out)


def _validate_inputs(m: Nats, state: str, f, params: EvalParams) -> None:
    if not isinstance(f, F.StateFormula):
        raise CheckError("only state formulas can be checked at a state")
    if state not in m.states:
        raise CheckError(f"unknown state {state!r}")
    if params.mode not in ("usl", "sl_nats"):
        raise ModeError(f"unknown mode {params.mode!r}")
    if params.memory_bound < 1:
        raise CheckError("memory bound must be >= 1")
    if params.mode == "sl_nats":
        try:
            F.check_single_agent_dialect(f)
        except F.DialectViolation as e:
            raise ModeError(str(e)) from None
    leftover = F.binding_free_vars(f)
    if leftover:
        raise NonSentenceError(
            f"formula has free strategy variables: {', '.join(sorted(leftover))}"
        )
    bad_atoms = F.atoms(f) - set(m.atoms)
    if bad_atoms:
        raise VocabularyError(f"atoms not declared by the model: {', '.join(sorted(bad_atoms))}")
    bad_agents = F.coalition_agents(f) - set(m.agents)
    if bad_agents:
        raise VocabularyError(f"agents not declared by the model: {', '.join(sorted(bad_agents))}")


def check_sentence(
    m: Nats,
    state: str,
    f,
    params: Optional[EvalParams] = None,
    oracle: bool = False,
    max_strategies: Optional[int] = None,
    max_seconds: Optional[float] = None,
) -> Verdict:
    """Evaluate a sentence at a state from the empty context.

    Witnesses are reported for the outermost chain of existential
    quantifiers whenever the sentence holds.
    """
    params = params or EvalParams()
    _validate_inputs(m, state, f, params)
    ev = Evaluator(m, params, oracle=oracle, max_strategies=max_strategies, max_seconds=max_seconds)
    si = m.state_index(state)

    outer = []
    g = f
    while isinstance(g, F.Exists):
        outer.append(g)
        g = g.operand

    mu: dict = {}
    witnesses: dict = {}
    truth = True
    for q in outer:
        found, tdcr = ev.search_strategy(q.var, q.operand, si, mu, ())
        if not found:
            truth = False
            break
        witnesses[q.var] = tdcr
        mu[q.var] = (tdcr, 0)
    if truth and not outer:
        truth = ev.eval_formula(f, si, {}, ())

    stats = dict(ev.stats)
    if ev.memo is not None:
        stats["cache_entries"] = len(ev.memo)
    witness_out = (
        {v: t.describe() for v, t in witnesses.items()} if truth and witnesses else None
    )
    return Verdict(truth, witness_out, stats)


# -- deterministic-model property suite --------------------------------------

def sustainable_control_formula() -> F.StateFormula:
    """Ability to keep choosing the next truth value of p forever."""
    return F.gen_gamma(0)


def random_deterministic_nats(
    rng: random.Random, max_states: int = 4, max_agents: int = 2
) -> Nats:
    """Random model in which every full choice profile is a singleton.

    Single-agent models draw a family of singleton choices per state;
    two-agent models draw an action grid of pairwise-distinct cells whose
    rows and columns become the two agents' choices.
    """
    n = rng.randint(2, max_states)
    states = [f"s{i}" for i in range(n)]
    valuation = {s: (["p"] if rng.random() < 0.5 else []) for s in states}
    agents = ["a"] if max_agents < 2 or rng.random() < 0.5 else ["a", "b"]
    choices: dict = {a: {} for a in agents}
    if len(agents) == 1:
        for s in states:
            targets = rng.sample(states, rng.randint(1, n))
            choices["a"][s] = {f"c{j + 1}": [t] for j, t in enumerate(targets)}
    else:
        for s in states:
            n1 = rng.randint(1, 2)
            n2 = rng.randint(1, 2)
            while n1 * n2 > n:
                n1, n2 = max(1, n1 - 1), max(1, n2 - 1)
            cells = rng.sample(states, n1 * n2)
            grid = [cells[i * n2 : (i + 1) * n2] for i in range(n1)]
            choices["a"][s] = {f"r{i + 1}": sorted(grid[i]) for i in range(n1)}
            choices["b"][s] = {
                f"k{j + 1}": sorted(grid[i][j] for i in range(n1)) for j in range(n2)
            }
    m = validate(
        {
            "agents": agents,
            "atoms": ["p"],
            "states": states,
            "valuation": valuation,
            "choices": choices,
        }
    )
    if not is_deterministic(m):
        raise AssertionError("generator produced a non-deterministic model")
    return m


def property_suite_prop2(seed: int, trials: int, memory_bounds=(1, 2)) -> dict:
    """Check that no random deterministic model satisfies sustainable control.

    Any satisfying (model, state, bound) instance is reported; the expected
    report is empty.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    phi = sustainable_control_formula()
    violations = []
    checked = 0
    for trial in range(trials):
        m = random_deterministic_nats(rng)
        for state in m.states:
            for bound in memory_bounds:
                checked += 1
                verdict = check_sentence(m, state, phi, EvalParams(memory_bound=bound))
                if verdict.truth:
                    violations.append(
                        {
                            "trial": trial,
                            "state": state,
                            "memory_bound": bound,
                            "model": {
                                "states": list(m.states),
                                "agents": list(m.agents),
                            },
                        }
                    )
    return {
        "seed": seed,
        "trials": trials,
        "states_checked": checked,
        "violations": violations,
    }
