"""Finite-memory strategies and evaluation contexts.

A strategy is a Moore-style transducer: memory states, an update map fed by
the states the play moves through, and an output map naming one choice per
(memory, agent, state).  The memory consumes the departed state, so a
configuration advanced along a track t0..tk holds memory delta*(q0, t0..t(k-1))
and outputs at tk; advancing an assignment one state at a time therefore
realizes the strategy-translation view of a consumed prefix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence, Tuple

from .model import Nats


class UnboundVariableError(KeyError):
    def __init__(self, var: str):
        super().__init__(var)
        self.var = var

    def __str__(self):
        return f"commitment refers to unbound strategy variable {self.var!r}"


@dataclass(frozen=True)
class StrategyTransducer:
    """Total finite-memory strategy over a fixed model.

    ``update[q][state]`` is the next memory element; ``output[q][agent][state]``
    indexes into the model's declared choice family for that (agent, state).
    """

    model: Nats = field(compare=False)
    memory_count: int
    update: tuple  # [q][state_idx] -> q'
    output: tuple  # [q][agent_idx][state_idx] -> choice index

    def update_memory(self, q: int, si: int) -> int:
        return self.update[q][si]

    def choice_index(self, q: int, ai: int, si: int) -> int:
        return self.output[q][ai][si]

    def choice_mask(self, q: int, ai: int, si: int) -> int:
        return self.model.choice_mask(ai, si, self.output[q][ai][si])

    def describe(self) -> dict:
        """Witness-report form, phrased in model identifiers and choice names."""
        m = self.model
        return {
            "memory_count": self.memory_count,
            "initial": 0,
            "update": {
                str(q): {s: self.update[q][si] for si, s in enumerate(m.states)}
                for q in range(self.memory_count)
            },
            "output": {
                str(q): {
                    a: {
                        s: m.choice_names(ai, si)[self.output[q][ai][si]]
                        for si, s in enumerate(m.states)
                    }
                    for ai, a in enumerate(m.agents)
                }
                for q in range(self.memory_count)
            },
        }


def memoryless(m: Nats, table: Mapping[str, Mapping[str, str]]) -> StrategyTransducer:
    """Single-memory transducer from agent -> state -> choice-name."""
    out = []
    for ai, a in enumerate(m.agents):
        row = []
        for si, s in enumerate(m.states):
            names = m.choice_names(ai, si)
            row.append(names.index(table[a][s]))
        out.append(tuple(row))
    return StrategyTransducer(m, 1, ((0,) * len(m.states),), (tuple(out),))


def uniform(m: Nats, choice_name: str) -> StrategyTransducer:
    """Memoryless strategy playing the named choice wherever it exists."""
    return memoryless(
        m,
        {
            a: {
                s: choice_name
                if choice_name in m.choice_names(m.agent_index(a), m.state_index(s))
                else m.choice_names(m.agent_index(a), m.state_index(s))[0]
                for s in m.states
            }
            for a in m.agents
        },
    )


@dataclass(frozen=True)
class StrategyConfig:
    """A strategy advanced past a consumed track prefix."""

    transducer: StrategyTransducer
    memory: int = 0


Assignment = Mapping[str, StrategyConfig]
CommitmentEntry = Tuple[frozenset, str]
Commitment = Tuple[CommitmentEntry, ...]

EMPTY_COMMITMENT: Commitment = ()


@dataclass(frozen=True)
class Context:
    assignment: Mapping
    commitment: Commitment


def strat_choice(cfg: StrategyConfig, agent: str, state: str) -> frozenset:
    m = cfg.transducer.model
    mask = cfg.transducer.choice_mask(cfg.memory, m.agent_index(agent), m.state_index(state))
    return frozenset(m.mask_to_states(mask))


def advance(assignment: Assignment, state: str) -> dict:
    """Feed one departed state into every configuration's memory."""
    out = {}
    for var, cfg in assignment.items():
        si = cfg.transducer.model.state_index(state)
        out[var] = StrategyConfig(cfg.transducer, cfg.transducer.update_memory(cfg.memory, si))
    return out


def choice_on_track(t: StrategyTransducer, agent: str, track: Sequence[str]) -> frozenset:
    """Direct track-function reading of a transducer (test oracle for advance)."""
    m = t.model
    q = 0
    for s in track[:-1]:
        q = t.update_memory(q, m.state_index(s))
    mask = t.choice_mask(q, m.agent_index(agent), m.state_index(track[-1]))
    return frozenset(m.mask_to_states(mask))


def coherent(t1: StrategyTransducer, t2: StrategyTransducer, m: Nats) -> bool:
    """Outputs of the two strategies intersect on every agent and track.

    Explored over the product machine: memory pairs reachable by consuming a
    common track prefix, then checked at every current state.
    """
    n_agents = len(m.agents)
    seen = set()
    frontier = [(0, 0, si) for si in range(len(m.states))]
    while frontier:
        q1, q2, si = frontier.pop()
        if (q1, q2, si) in seen:
            continue
        seen.add((q1, q2, si))
        for ai in range(n_agents):
            if not t1.choice_mask(q1, ai, si) & t2.choice_mask(q2, ai, si):
                return False
        succ = m.successor_mask(si)
        for ti in range(len(m.states)):
            if succ >> ti & 1:
                frontier.append((t1.update_memory(q1, si), t2.update_memory(q2, si), ti))
    return True


def bind_commit(kappa: Commitment, agents: Iterable[str], var: str) -> Commitment:
    return kappa + ((frozenset(agents), var),)


def unbind_commit(kappa: Commitment, agents: Iterable[str], var: str) -> Commitment:
    """Remove the agents from every entry carrying ``var``; order preserved."""
    released = frozenset(agents)
    return tuple(
        (coal - released, v) if v == var else (coal, v) for coal, v in kappa
    )


def _ctx_mask(m: Nats, entries, si: int) -> int:
    """Left-to-right fold with first-binding priority.

    ``entries`` pairs each commitment entry's agent indices with the
    (transducer, memory) realizing its variable.  Conflicting newer entries
    are skipped for this state only, so the result is never empty.
    """
    acc = m.full_mask
    for agent_idxs, tdcr, q in entries:
        contrib = m.full_mask
        for ai in agent_idxs:
            contrib &= tdcr.choice_mask(q, ai, si)
        refined = acc & contrib
        if refined:
            acc = refined
    return acc


def _resolve_entries(m: Nats, assignment: Assignment, kappa: Commitment):
    entries = []
    for coal, var in kappa:
        cfg = assignment.get(var)
        if cfg is None:
            raise UnboundVariableError(var)
        entries.append((tuple(m.agent_index(a) for a in sorted(coal)), cfg.transducer, cfg.memory))
    return entries


def ctx_choice(m: Nats, chi: Context, state: str) -> frozenset:
    """Next states the context admits at ``state``; never empty."""
    entries = _resolve_entries(m, chi.assignment, chi.commitment)
    return frozenset(m.mask_to_states(_ctx_mask(m, entries, m.state_index(state))))


def enumerate_strategies(m: Nats, memory_bound: int) -> Iterator[StrategyTransducer]:
    """All transducers with at most ``memory_bound`` memory elements.

    Canonical order: memory size ascending, then lexicographic over the
    update table, then over the output table.  With one memory element the
    count is the product of the choice-family sizes.
    """
    if memory_bound < 1:
        raise ValueError("memory bound must be >= 1")
    n_states = len(m.states)
    n_agents = len(m.agents)
    for mc in range(1, memory_bound + 1):
        cells = [(q, ai, si) for q in range(mc) for ai in range(n_agents) for si in range(n_states)]
        sizes = [m.choice_count(ai, si) for _, ai, si in cells]
        for upd_flat in product(range(mc), repeat=mc * n_states):
            update = tuple(
                tuple(upd_flat[q * n_states : (q + 1) * n_states]) for q in range(mc)
            )
            for out_flat in product(*(range(k) for k in sizes)):
                output = tuple(
                    tuple(
                        tuple(
                            out_flat[(q * n_agents + ai) * n_states + si]
                            for si in range(n_states)
                        )
                        for ai in range(n_agents)
                    )
                    for q in range(mc)
                )
                yield StrategyTransducer(m, mc, update, output)


# -- configuration graphs ---------------------------------------------------

Node = Tuple[str, tuple]  # (state, memory vector over the variable order)


@dataclass
class ConfigGraph:
    """Finite unfolding of a context from a root state.

    Nodes pair a model state with the advanced memories of every assigned
    variable; the infinite paths from the root that stay inside ``live``
    project exactly onto the context's outcomes.
    """

    var_order: tuple
    root: Node
    nodes: frozenset
    edges: Mapping[Node, tuple]
    live: frozenset

    def live_successors(self, node: Node) -> tuple:
        return tuple(t for t in self.edges[node] if t in self.live)


def build_config_graph(m: Nats, chi: Context, state: str) -> ConfigGraph:
    var_order = tuple(sorted(chi.assignment))
    tdcrs = [chi.assignment[v].transducer for v in var_order]
    entry_plan = []
    for coal, var in chi.commitment:
        if var not in chi.assignment:
            raise UnboundVariableError(var)
        entry_plan.append((tuple(m.agent_index(a) for a in sorted(coal)), var_order.index(var)))

    root: Node = (state, tuple(chi.assignment[v].memory for v in var_order))
    edges = {}
    frontier = [root]
    while frontier:
        node = frontier.pop()
        if node in edges:
            continue
        s, mems = node
        si = m.state_index(s)
        entries = [(idxs, tdcrs[vp], mems[vp]) for idxs, vp in entry_plan]
        allowed = _ctx_mask(m, entries, si) & m.successor_mask(si)
        nxt_mems = tuple(
            tdcrs[vp].update_memory(mems[vp], si) for vp in range(len(var_order))
        )
        targets = tuple((t, nxt_mems) for t in m.mask_to_states(allowed))
        edges[node] = targets
        frontier.extend(targets)

    live = set(edges)
    changed = True
    while changed:
        changed = False
        for node in list(live):
            if not any(t in live for t in edges[node]):
                live.discard(node)
                changed = True
    return ConfigGraph(var_order, root, frozenset(edges), edges, frozenset(live))
