"""Non-deterministic alternating transition systems.

A model gives every agent, at every state, a non-empty family of named
choices; each choice is a non-empty set of admissible next states, and any
two choices of distinct agents must intersect.  State sets are handled as
bitmasks internally; all public surfaces use the declared string names.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence


class ModelValidationError(ValueError):
    """Raised with the full list of violated constraints."""

    def __init__(self, violations: Sequence[str]):
        self.violations = tuple(violations)
        super().__init__("invalid model:\n  " + "\n  ".join(self.violations))


class Nats:
    """Validated model; immutable after construction via :func:`validate`."""

    def __init__(self, agents, states, atoms, valuation, choices, warnings=()):
        self.agents = tuple(agents)
        self.states = tuple(states)
        self.atoms = tuple(atoms)
        self.valuation = {s: frozenset(valuation[s]) for s in self.states}
        # choices[(agent, state)] -> tuple of (name, frozenset of states)
        self.choices = {
            (a, s): tuple((name, frozenset(members)) for name, members in choices[(a, s)])
            for a in self.agents
            for s in self.states
        }
        self.warnings = tuple(warnings)

        self._sidx = {s: i for i, s in enumerate(self.states)}
        self._aidx = {a: i for i, a in enumerate(self.agents)}
        self._full_mask = (1 << len(self.states)) - 1
        self._choice_masks = {}
        for (a, s), fam in self.choices.items():
            key = (self._aidx[a], self._sidx[s])
            self._choice_masks[key] = tuple(self._mask(members) for _, members in fam)
        self._succ_masks = [self._successor_mask(si) for si in range(len(self.states))]

    # -- bitmask helpers --------------------------------------------------

    def _mask(self, states: Iterable[str]) -> int:
        m = 0
        for s in states:
            m |= 1 << self._sidx[s]
        return m

    def mask_to_states(self, mask: int) -> tuple:
        return tuple(s for i, s in enumerate(self.states) if mask >> i & 1)

    def state_index(self, s: str) -> int:
        try:
            return self._sidx[s]
        except KeyError:
            raise KeyError(f"unknown state {s!r}") from None

    def agent_index(self, a: str) -> int:
        try:
            return self._aidx[a]
        except KeyError:
            raise KeyError(f"unknown agent {a!r}") from None

    def choice_names(self, ai: int, si: int) -> tuple:
        return tuple(name for name, _ in self.choices[(self.agents[ai], self.states[si])])

    def choice_mask(self, ai: int, si: int, ci: int) -> int:
        return self._choice_masks[(ai, si)][ci]

    def choice_count(self, ai: int, si: int) -> int:
        return len(self._choice_masks[(ai, si)])

    def _successor_mask(self, si: int) -> int:
        m = self._full_mask
        for ai in range(len(self.agents)):
            union = 0
            for cm in self._choice_masks[(ai, si)]:
                union |= cm
            m &= union
        return m

    def successor_mask(self, si: int) -> int:
        return self._succ_masks[si]

    @property
    def full_mask(self) -> int:
        return self._full_mask

    def all_choices_live(self) -> bool:
        """True when every choice member is an actual successor.

        Single-agent models always qualify; it lets the evaluator skip
        dead-end pruning in configuration graphs.
        """
        for (ai, si), masks in self._choice_masks.items():
            for cm in masks:
                if cm & ~self._succ_masks[si]:
                    return False
        return True

    def __repr__(self):
        return f"Nats(agents={self.agents}, states={self.states}, atoms={self.atoms})"


@dataclass(frozen=True)
class Track:
    """Finite state sequence consistent with the successor relation."""

    states: tuple

    def __post_init__(self):
        if not self.states:
            raise ValueError("a track must be non-empty")

    @property
    def last(self) -> str:
        return self.states[-1]


def make_track(m: Nats, seq: Sequence[str]) -> Track:
    if not is_track(m, seq):
        raise ValueError(f"not a track of the model: {list(seq)}")
    return Track(tuple(seq))


def validate(raw: Mapping) -> Nats:
    """Check a raw model description and intern it.

    Collects every violated constraint instead of stopping at the first;
    unreachable choice members are reported as warnings, not errors.
    """
    violations = []
    if not isinstance(raw, Mapping):
        raise ModelValidationError(["model description must be an object"])

    def str_list(key):
        v = raw.get(key)
        if not isinstance(v, (list, tuple)) or not all(isinstance(x, str) for x in v):
            violations.append(f"'{key}' must be an array of strings")
            return []
        if len(set(v)) != len(v):
            violations.append(f"'{key}' contains duplicates")
        return list(v)

    agents = str_list("agents")
    states = str_list("states")
    atoms = str_list("atoms")
    if not agents:
        violations.append("at least one agent is required")
    if not states:
        violations.append("at least one state is required")
    state_set, atom_set = set(states), set(atoms)

    valuation = {s: [] for s in states}
    raw_val = raw.get("valuation", {})
    if not isinstance(raw_val, Mapping):
        violations.append("'valuation' must be an object mapping states to atom arrays")
        raw_val = {}
    for s, props in raw_val.items():
        if s not in state_set:
            violations.append(f"valuation mentions unknown state '{s}'")
            continue
        if not isinstance(props, (list, tuple)):
            violations.append(f"valuation of '{s}' must be an array of atoms")
            continue
        for p in props:
            if p not in atom_set:
                violations.append(f"unknown atom '{p}' in valuation of '{s}'")
        valuation[s] = [p for p in props if p in atom_set]

    choices = {}
    raw_choices = raw.get("choices", {})
    if not isinstance(raw_choices, Mapping):
        violations.append("'choices' must be an object: agent -> state -> name -> states")
        raw_choices = {}
    for a in raw_choices:
        if a not in set(agents):
            violations.append(f"choices mention unknown agent '{a}'")
    for a in agents:
        per_agent = raw_choices.get(a, {})
        if not isinstance(per_agent, Mapping):
            violations.append(f"choices of agent '{a}' must be an object")
            per_agent = {}
        for s in per_agent:
            if s not in state_set:
                violations.append(f"choices of agent '{a}' mention unknown state '{s}'")
        for s in states:
            fam = per_agent.get(s, {})
            if not isinstance(fam, Mapping):
                violations.append(f"choice family at ({a},{s}) must be an object")
                fam = {}
            entries = []
            for name, members in fam.items():
                if not isinstance(members, (list, tuple)):
                    violations.append(f"choice ({a},{s},{name}) must be an array of states")
                    continue
                unknown = [t for t in members if t not in state_set]
                for t in unknown:
                    violations.append(f"unknown state '{t}' in choice ({a},{s},{name})")
                kept = [t for t in members if t in state_set]
                if not members:
                    violations.append(f"empty choice set at ({a},{s},{name})")
                    continue
                entries.append((name, kept))
            if not entries:
                violations.append(f"empty choice family at ({a},{s})")
            else:
                choices[(a, s)] = entries

    # pairwise coherence between distinct agents
    for s in states:
        for i, a1 in enumerate(agents):
            for a2 in agents[i + 1 :]:
                for n1, c1 in choices.get((a1, s), ()):
                    for n2, c2 in choices.get((a2, s), ()):
                        if not set(c1) & set(c2):
                            violations.append(
                                f"coherence violation at {s}: "
                                f"({a1},{n1})={sorted(set(c1))} and ({a2},{n2})={sorted(set(c2))} are disjoint"
                            )

    if violations:
        raise ModelValidationError(sorted(set(violations)))

    m = Nats(agents, states, atoms, valuation, choices)
    warnings = []
    for a in agents:
        ai = m.agent_index(a)
        for s in states:
            si = m.state_index(s)
            succ = m.successor_mask(si)
            for name, members in m.choices[(a, s)]:
                dead = [t for t in sorted(members) if not (1 << m.state_index(t)) & succ]
                for t in dead:
                    warnings.append(
                        f"choice ({a},{s},{name}) offers '{t}', which no full profile realizes"
                    )
    m.warnings = tuple(sorted(set(warnings)))
    return m


def loads(text: str) -> Nats:
    return validate(json.loads(text))


def load_model(path) -> Nats:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def to_raw(m: Nats) -> dict:
    return {
        "agents": list(m.agents),
        "atoms": list(m.atoms),
        "states": list(m.states),
        "valuation": {s: sorted(m.valuation[s]) for s in m.states},
        "choices": {
            a: {s: {name: sorted(members) for name, members in m.choices[(a, s)]} for s in m.states}
            for a in m.agents
        },
    }


def dump_model(m: Nats) -> str:
    return json.dumps(to_raw(m), indent=2) + "\n"


def successors(m: Nats, s: str) -> frozenset:
    """States reachable in one step: members of some choice of every agent."""
    return frozenset(m.mask_to_states(m.successor_mask(m.state_index(s))))


def is_deterministic(m: Nats) -> bool:
    """True iff every full profile of one choice per agent intersects in
    exactly one state; empty intersections also count as non-deterministic."""
    for si in range(len(m.states)):
        families = [m._choice_masks[(ai, si)] for ai in range(len(m.agents))]
        for profile in product(*families):
            inter = m.full_mask
            for cm in profile:
                inter &= cm
            if inter == 0 or inter & (inter - 1):
                return False
    return True


def is_track(m: Nats, seq: Sequence[str]) -> bool:
    if not seq:
        raise ValueError("a track must be non-empty")
    idx = [m.state_index(s) for s in seq]
    return all(
        m.successor_mask(cur) >> nxt & 1 for cur, nxt in zip(idx, idx[1:])
    )


# -- conversion from action-based game structures --------------------------

def convert_cgs(raw: Mapping) -> dict:
    """Convert an action-based concurrent game structure to a raw model.

    Input keys: ``agents``, ``states``, ``atoms``, ``valuation``,
    ``actions`` (agent -> state -> array of action names) and
    ``transitions`` (state -> array of {"profile": {agent: action},
    "next": state}).  The transition function must be deterministic and
    total over action profiles.  Each action of an agent becomes the choice
    collecting every outcome the other agents can steer to under it.
    """
    agents = list(raw.get("agents", []))
    states = list(raw.get("states", []))
    actions = raw.get("actions", {})
    transitions = raw.get("transitions", {})
    problems = []

    delta = {s: {} for s in states}
    for s in states:
        for entry in transitions.get(s, []):
            profile = entry.get("profile", {})
            key = tuple(profile.get(a) for a in agents)
            if None in key:
                problems.append(f"transition at {s} misses an action for some agent")
                continue
            if key in delta[s]:
                problems.append(f"duplicate profile {key} at {s}")
            delta[s][key] = entry.get("next")

    for s in states:
        avail = [actions.get(a, {}).get(s, []) for a in agents]
        for key in product(*avail):
            if key not in delta[s]:
                problems.append(f"transition function not total at {s}: missing profile {key}")
        for key, nxt in delta[s].items():
            if nxt not in states:
                problems.append(f"transition at {s} targets unknown state {nxt!r}")
    if problems:
        raise ModelValidationError(sorted(set(problems)))

    choices = {}
    for a in agents:
        choices[a] = {}
        for s in states:
            fam = {}
            for act in actions.get(a, {}).get(s, []):
                outcomes = sorted(
                    {nxt for key, nxt in delta[s].items() if key[agents.index(a)] == act}
                )
                fam[act] = outcomes
            choices[a][s] = fam

    return {
        "agents": agents,
        "atoms": list(raw.get("atoms", [])),
        "states": states,
        "valuation": {s: sorted(raw.get("valuation", {}).get(s, [])) for s in states},
        "choices": choices,
    }
