"""Exhaustive verification via final sets, and impossibility witnesses.

A protocol is self-stabilizing exactly when every *final* configuration
(member of a closed, mutually reachable set, i.e. a bottom strongly connected
component of the transition relation) is safe.  This module enumerates the
full configuration space, computes the bottom SCCs, checks a safe predicate
plus output constancy on them, and searches subgraph/supergraph pairs for
witnesses that a degree-claiming protocol cannot be self-stabilizing.

Configurations are packed into integers by mixed radix: agent 0 is the least
significant digit, each digit being the protocol's per-agent state index.
The packing is stable across runs (documented canonical field orders live on
the protocol classes).
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DomainViolation, NoSafeConfigOnSuper, TooLarge
from .graph import Graph
from .neighbor import bits
from .oracles import check_spec

DEFAULT_BUDGET = 10_000_000
BUDGET_ENV = "POPLAB_BUDGET"


def configured_budget(budget: int | None = None) -> int:
    """Explicit argument, else the POPLAB_BUDGET environment variable, else default."""
    if budget is not None:
        return budget
    env = os.environ.get(BUDGET_ENV)
    return int(env) if env else DEFAULT_BUDGET


@dataclass
class TransitionGraph:
    """Complete successor relation over the packed configuration space."""

    protocol: object
    graph: Graph
    params: object
    agent_state_count: int
    config_count: int
    directed_pairs: tuple[tuple[int, int], ...]
    successors: list[np.ndarray]  # one array of length config_count per directed pair

    def decode(self, key: int) -> tuple:
        q = self.agent_state_count
        states = []
        for _ in range(self.graph.n):
            key, digit = divmod(key, q)
            states.append(self.protocol.state_from_index(digit, self.params))
        return tuple(states)

    def encode(self, states) -> int:
        q = self.agent_state_count
        key = 0
        for s in reversed(states):
            key = key * q + self.protocol.state_to_index(s, self.params)
        return key

    def successor(self, key: int, pair_index: int) -> int:
        return int(self.successors[pair_index][key])

    def outputs_of(self, key: int) -> tuple:
        return tuple(self.protocol.output(s) for s in self.decode(key))


def _pair_tables(protocol, params, q: int):
    """Tabulate the two-agent transition on state indices: (q0,q1) -> (q0',q1')."""
    states = [protocol.state_from_index(i, params) for i in range(q)]
    step = getattr(protocol, "step_fast", protocol.step)
    t0 = np.empty((q, q), dtype=np.int64)
    t1 = np.empty((q, q), dtype=np.int64)
    to_index = protocol.state_to_index
    for i, s0 in enumerate(states):
        row0 = t0[i]
        row1 = t1[i]
        for j, s1 in enumerate(states):
            r0, r1 = step(s0, s1, params)
            row0[j] = to_index(r0, params)
            row1[j] = to_index(r1, params)
    return t0, t1


def build_transition_graph(protocol, g: Graph, params, budget: int | None = None) -> TransitionGraph:
    """Enumerate every configuration's successor under every directed pair.

    Raises TooLarge when the configuration count q^n exceeds the budget.
    """
    protocol.validate_params(params)
    if g.n != params.n:
        raise DomainViolation(f"graph has {g.n} agents but params expect {params.n}")
    q = protocol.state_count(params)
    count = q**g.n
    limit = configured_budget(budget)
    if count > limit:
        raise TooLarge(count, limit)

    t0, t1 = _pair_tables(protocol, params, q)
    keys = np.arange(count, dtype=np.int64)
    successors = []
    for u, v in g.directed_pairs:
        pu = q**u
        pv = q**v
        du = (keys // pu) % q
        dv = (keys // pv) % q
        succ = keys + (t0[du, dv] - du) * pu + (t1[du, dv] - dv) * pv
        successors.append(succ.astype(np.int32 if count < 2**31 else np.int64))
    return TransitionGraph(
        protocol=protocol,
        graph=g,
        params=params,
        agent_state_count=q,
        config_count=count,
        directed_pairs=g.directed_pairs,
        successors=successors,
    )


def final_sets(tg: TransitionGraph) -> list[frozenset[int]]:
    """Bottom strongly connected components: closed and mutually reachable.

    Returned sets are pairwise disjoint, each closed under every directed
    pair (exactly the configurations some schedule can trap the system in).
    """
    count = tg.config_count
    index_dtype = tg.successors[0].dtype
    rows = np.tile(np.arange(count, dtype=index_dtype), len(tg.successors))
    cols = np.concatenate(tg.successors)
    matrix = sparse.csr_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(count, count)
    )
    n_comp, labels = csgraph.connected_components(matrix, directed=True, connection="strong")
    del matrix

    has_out = np.zeros(n_comp, dtype=bool)
    crossing = labels[rows] != labels[cols]
    has_out[labels[rows[crossing]]] = True
    del rows, cols, crossing

    members = np.flatnonzero(~has_out[labels])
    if members.size == 0:
        return []
    member_labels = labels[members]
    order = np.argsort(member_labels, kind="stable")
    members = members[order]
    member_labels = member_labels[order]
    boundaries = np.flatnonzero(np.diff(member_labels)) + 1
    return [frozenset(int(k) for k in chunk) for chunk in np.split(members, boundaries)]


class Witness(NamedTuple):
    """Replayable evidence against self-stabilization.

    kind is "output_change" (replaying ``pairs`` from ``start`` changes agent
    ``agent``'s output from ``before`` to ``after``) or "frozen_output" (no
    reachable interaction sequence ever changes any output, and agent
    ``agent``'s output ``before`` == ``after`` violates the specification) or
    "unsafe_final" (a final configuration fails the safe predicate with
    constant outputs).
    """

    kind: str
    start: tuple
    pairs: tuple[tuple[int, int], ...]
    agent: int | None
    before: object
    after: object

    def to_json(self, protocol) -> dict:
        return {
            "kind": self.kind,
            "start": [protocol.to_json(s) for s in self.start],
            "pairs": [[u, v] for u, v in self.pairs],
            "agent": self.agent,
            "before": _json_output(self.before),
            "after": _json_output(self.after),
        }


def _json_output(value):
    if isinstance(value, tuple):
        return [_json_output(x) for x in value]
    if isinstance(value, (frozenset, set)):
        return sorted(value)
    return value


def replay_witness(protocol, witness: Witness, params) -> tuple:
    """Re-simulate the witness sequence; returns the configuration it ends in."""
    states = list(witness.start)
    for u, v in witness.pairs:
        s0, s1 = protocol.step(states[u], states[v], params)
        states[u] = s0
        states[v] = s1
    return tuple(states)


def _path_to_output_change(tg: TransitionGraph, start_key: int, base_outputs: tuple):
    """BFS over the transition relation for the nearest output change."""
    parent: dict[int, tuple[int, int]] = {start_key: (-1, -1)}
    queue = deque([start_key])
    while queue:
        key = queue.popleft()
        for e in range(len(tg.successors)):
            nxt = tg.successor(key, e)
            if nxt in parent:
                continue
            parent[nxt] = (key, e)
            outs = tg.outputs_of(nxt)
            if outs != base_outputs:
                pairs = []
                cursor = nxt
                while parent[cursor][0] != -1:
                    prev, edge = parent[cursor]
                    pairs.append(tg.directed_pairs[edge])
                    cursor = prev
                pairs.reverse()
                agent = next(i for i in range(len(outs)) if outs[i] != base_outputs[i])
                return tuple(pairs), agent, base_outputs[agent], outs[agent]
            queue.append(nxt)
    return None


def verify_self_stabilizing(
    protocol,
    g: Graph,
    params,
    safe_predicate: Callable,
    budget: int | None = None,
):
    """True iff every final configuration is safe with constant outputs.

    Within a closed mutually-reachable set, constant outputs are equivalent
    to clause (ii) of safety (no execution from any member ever changes an
    output), so together with the per-configuration safe predicate this is
    exactly the final-set criterion.  Returns True or a Witness.
    """
    tg = build_transition_graph(protocol, g, params, budget)
    return verify_transition_graph(tg, safe_predicate)


def verify_transition_graph(tg: TransitionGraph, safe_predicate: Callable):
    """Final-set criterion on a prebuilt transition graph: True or a Witness."""
    for fset in sorted(final_sets(tg), key=min):
        ref_key = min(fset)
        ref_outputs = tg.outputs_of(ref_key)
        for key in fset:
            if tg.outputs_of(key) != ref_outputs:
                found = _path_to_output_change(tg, ref_key, ref_outputs)
                pairs, agent, before, after = found
                return Witness(
                    kind="output_change",
                    start=tg.decode(ref_key),
                    pairs=pairs,
                    agent=agent,
                    before=before,
                    after=after,
                )
        for key in fset:
            states = tg.decode(key)
            if not safe_predicate(states):
                return Witness(
                    kind="unsafe_final",
                    start=states,
                    pairs=(),
                    agent=None,
                    before=ref_outputs,
                    after=ref_outputs,
                )
    return True


def impossibility_witness(
    protocol,
    g_sub: Graph,
    g_super: Graph,
    params,
    budget: int | None = None,
):
    """Witness that a degree-claiming protocol cannot serve two pair counts.

    Finds a configuration that is final and degree-correct on ``g_super``
    (raising NoSafeConfigOnSuper when none exists), then breadth-first
    explores ``g_sub``'s interactions from it.  Any reachable output change
    contradicts safety on the supergraph (the same sequence is schedulable
    there); if no outputs ever change, some agent is stuck claiming its
    supergraph degree, which is wrong on the subgraph.  Either way the
    protocol fails on one of the two populations.

    ``protocol.output`` is read as the agent's claimed degree.
    """
    if g_sub.n != g_super.n:
        raise ValueError("both populations must share the agent set")
    sub_edges = set(g_sub.edges)
    super_edges = set(g_super.edges)
    if not sub_edges < super_edges:
        raise ValueError("g_sub's edges must be strictly contained in g_super's")

    tg = build_transition_graph(protocol, g_super, params, budget)
    limit = configured_budget(budget)

    start_key = None
    base_outputs = None
    for fset in sorted(final_sets(tg), key=min):
        ref_key = min(fset)
        ref_outputs = tg.outputs_of(ref_key)
        if not check_spec("degree", list(ref_outputs), g_super):
            continue
        if all(tg.outputs_of(k) == ref_outputs for k in fset):
            start_key = ref_key
            base_outputs = ref_outputs
            break
    if start_key is None:
        raise NoSafeConfigOnSuper(
            "no final configuration with constant, degree-correct outputs on the supergraph"
        )

    # Explore the subgraph's reachable space from the supergraph-safe start.
    q = tg.agent_state_count
    t0, t1 = _pair_tables(protocol, params, q)
    sub_pairs = tuple((u, v) for u in range(g_sub.n) for v in g_sub.adjacency[u])
    powers = [q**u for u in range(g_sub.n)]

    parent: dict[int, tuple[int, int]] = {start_key: (-1, -1)}
    queue = deque([start_key])
    while queue:
        key = queue.popleft()
        for e, (u, v) in enumerate(sub_pairs):
            du = (key // powers[u]) % q
            dv = (key // powers[v]) % q
            nxt = key + (int(t0[du, dv]) - du) * powers[u] + (int(t1[du, dv]) - dv) * powers[v]
            if nxt in parent:
                continue
            if len(parent) >= limit:
                raise TooLarge(len(parent) + 1, limit)
            parent[nxt] = (key, e)
            outs = tg.outputs_of(nxt)
            if outs != base_outputs:
                pairs = []
                cursor = nxt
                while parent[cursor][0] != -1:
                    prev, edge = parent[cursor]
                    pairs.append(sub_pairs[edge])
                    cursor = prev
                pairs.reverse()
                agent = next(i for i in range(len(outs)) if outs[i] != base_outputs[i])
                return Witness(
                    kind="output_change",
                    start=tg.decode(start_key),
                    pairs=tuple(pairs),
                    agent=agent,
                    before=base_outputs[agent],
                    after=outs[agent],
                )
            queue.append(nxt)

    # No output ever changes on the subgraph; some degree claim is frozen wrong.
    agent = next(v for v in range(g_sub.n) if base_outputs[v] != g_sub.degree(v))
    return Witness(
        kind="frozen_output",
        start=tg.decode(start_key),
        pairs=(),
        agent=agent,
        before=base_outputs[agent],
        after=base_outputs[agent],
    )


# ---------------------------------------------------------------------------
# Strawman protocols: deliberately broken degree-claimers used to exercise
# the verifier and the impossibility search.
# ---------------------------------------------------------------------------


class GreedyDegreeState(NamedTuple):
    label: int
    seen: int  # bitmask of partner labels accumulated so far


class GreedyDegreeProtocol:
    """Monotone neighbor-label accumulation with fixed labels.

    Each agent keeps a permanent label and grows a set of partner labels;
    its degree claim is the set size.  Works only if labels happen to be a
    2-hop coloring and, crucially, bakes the pair count into its fixed point,
    which is what the impossibility search exploits.
    """

    name = "greedydegree"

    @staticmethod
    def validate_params(params) -> None:
        if params.n < 2:
            raise DomainViolation("need n >= 2")

    @staticmethod
    def state_count(params) -> int:
        return params.n * (1 << params.n)

    @staticmethod
    def state_to_index(s: GreedyDegreeState, params) -> int:
        return (s.label << params.n) | s.seen

    @staticmethod
    def state_from_index(i: int, params) -> GreedyDegreeState:
        return GreedyDegreeState(label=i >> params.n, seen=i & ((1 << params.n) - 1))

    @staticmethod
    def random_state(rng, params) -> GreedyDegreeState:
        return GreedyDegreeState(
            label=int(rng.integers(0, params.n)),
            seen=int(rng.integers(0, 1 << params.n)),
        )

    @staticmethod
    def validate_state(s: GreedyDegreeState, params) -> None:
        if not (0 <= s.label < params.n and 0 <= s.seen < (1 << params.n)):
            raise DomainViolation(f"bad strawman state {s}")

    @staticmethod
    def step(s0: GreedyDegreeState, s1: GreedyDegreeState, params):
        return (
            GreedyDegreeState(s0.label, s0.seen | (1 << s1.label)),
            GreedyDegreeState(s1.label, s1.seen | (1 << s0.label)),
        )

    step_fast = step

    @staticmethod
    def output(s: GreedyDegreeState) -> int:
        return s.seen.bit_count()

    @staticmethod
    def to_json(s: GreedyDegreeState) -> dict:
        return {"label": s.label, "seen": sorted(bits(s.seen))}


class FixedOutputProtocol:
    """Interaction-blind strawman: states never change, output = state.

    Degree-correct final configurations exist whenever the needed claims fit
    in 0..n, but no interaction can ever repair them on a different graph.
    """

    name = "fixedoutput"

    @staticmethod
    def validate_params(params) -> None:
        if params.n < 2:
            raise DomainViolation("need n >= 2")

    @staticmethod
    def state_count(params) -> int:
        return params.n + 1  # a degree claim in 0..n

    @staticmethod
    def state_to_index(s: int, params) -> int:
        return s

    @staticmethod
    def state_from_index(i: int, params) -> int:
        return i

    @staticmethod
    def random_state(rng, params) -> int:
        return int(rng.integers(0, params.n + 1))

    @staticmethod
    def validate_state(s: int, params) -> None:
        if not 0 <= s <= params.n:
            raise DomainViolation(f"bad fixed-output state {s}")

    @staticmethod
    def step(s0: int, s1: int, params):
        return (s0, s1)

    step_fast = step

    @staticmethod
    def output(s: int) -> int:
        return s

    @staticmethod
    def to_json(s: int) -> dict:
        return {"claim": s}


GREEDY_DEGREE = GreedyDegreeProtocol()
FIXED_OUTPUT = FixedOutputProtocol()
