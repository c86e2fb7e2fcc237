"""Execution engine: uniformly random scheduler, trials, token tracking.

A configuration is a plain tuple of per-agent states (agent id = index).
One step = one interaction: a directed pair (initiator, responder) drawn
uniformly from the 2m directed pairs of the population.  Runs are fully
determined by (protocol, graph, initial configuration, params, seed); trial
seeds are split from a master seed with a documented mixing function so
sweeps stay reproducible and embarrassingly parallel.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainViolation, NotAnEdge
from .graph import Graph

DEFAULT_CLOSURE_WINDOW = 100_000
_BLOCK = 8192


@dataclass(frozen=True)
class ProtocolParams:
    """Knowledge sets and timer ceilings.

    ``n`` is the exact agent count (always required), ``m_known`` the exact
    unordered-pair count when given.  ``tmax`` paces token recoloring;
    ``pmax`` and ``emax`` pace the degree-sum audit and error propagation of
    the neighbor protocol and are required whenever ``m_known`` is present.
    """

    n: int
    m_known: int | None = None
    tmax: int = 1
    pmax: int | None = None
    emax: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise DomainViolation(f"need n >= 2, got {self.n}")
        if self.tmax < 1:
            raise DomainViolation(f"need tmax >= 1, got {self.tmax}")
        if self.m_known is not None:
            if self.m_known < 1:
                raise DomainViolation(f"need m >= 1, got {self.m_known}")
            if self.pmax is None or self.pmax < 1 or self.emax is None or self.emax < 1:
                raise DomainViolation("pmax >= 1 and emax >= 1 are required when m is known")

    def to_json_fields(self) -> dict:
        return {"tmax": self.tmax, "pmax": self.pmax, "emax": self.emax}


def default_params(
    g: Graph,
    know_m: bool = False,
    tmax: int | None = None,
    pmax: int | None = None,
    emax: int | None = None,
) -> ProtocolParams:
    """Default timer ceilings for a population.

    tmax = 4mn when m is known, else 2n^3 (an upper bound of the same order,
    since mn <= n^3/2); pmax = 8mnd*ceil(log2 n); emax = 4n^2.  Small
    constants keep desk-scale convergence quick while preserving the orders
    the protocols need.  Every ceiling can be overridden per run.
    """
    n, m, d = g.n, g.m, g.diameter
    if tmax is None:
        tmax = 4 * m * n if know_m else 2 * n**3
    if know_m:
        if pmax is None:
            pmax = 8 * m * n * d * max(1, math.ceil(math.log2(n)))
        if emax is None:
            emax = 4 * n * n
        return ProtocolParams(n=n, m_known=m, tmax=tmax, pmax=pmax, emax=emax)
    return ProtocolParams(n=n, tmax=tmax)


def mix_seed(master_seed: int, index: int) -> int:
    """Split one 64-bit stream per trial: seed i = SeedSequence((master, i)).

    numpy's SeedSequence hashes the entropy tuple, so nearby masters/indices
    produce statistically independent streams.
    """
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class InteractionTrace:
    """The ordered directed pairs a run scheduled, plus the seed that drew them."""

    pairs: tuple[tuple[int, int], ...]
    seed: int

    def validate(self, g: Graph) -> None:
        for u, v in self.pairs:
            if not g.has_edge(u, v):
                raise NotAnEdge(f"({u},{v}) recorded in trace but absent from graph")


@dataclass
class RunResult:
    """Outcome of one seeded trial.

    ``steps_to_safe`` is None when the safe predicate never held within
    ``max_steps``; ``closure_ok`` is defined only once safety was reached and
    reports whether the closure window saw zero output changes.
    """

    protocol: str
    n: int
    m: int
    d: int
    seed: int
    tmax: int
    pmax: int | None
    emax: int | None
    steps_to_safe: int | None
    closure_ok: bool | None
    final_states: tuple = field(repr=False, compare=False, default=())
    trace: InteractionTrace | None = field(repr=False, compare=False, default=None)

    RECORD_FIELDS = (
        "protocol", "n", "m", "d", "seed",
        "tmax", "pmax", "emax", "steps_to_safe", "closure_ok",
    )

    def to_record(self) -> dict:
        return {name: getattr(self, name) for name in self.RECORD_FIELDS}


def draw_pair(g: Graph, rng: np.random.Generator) -> tuple[int, int]:
    """One scheduler draw: each of the 2m directed pairs has probability 1/(2m)."""
    pairs = g.directed_pairs
    return pairs[int(rng.integers(0, len(pairs)))]


def apply_interaction(protocol, g: Graph, c: Sequence, pair: tuple[int, int], params) -> tuple:
    """Apply one interaction to a configuration; only the two endpoints change."""
    u, v = pair
    if not g.has_edge(u, v):
        raise NotAnEdge(f"({u},{v}) is not a directed edge")
    s0, s1 = protocol.step(c[u], c[v], params)
    out = list(c)
    out[u] = s0
    out[v] = s1
    return tuple(out)


def sample_uniform_config(protocol, params, seed) -> tuple:
    """Independent uniform draw over the full declared per-agent state domain.

    This is the harness proxy for an arbitrary (adversarial) starting
    configuration.  ``seed`` may be an int or a ready numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return tuple(protocol.random_state(rng, params) for _ in range(params.n))


def run_until(
    protocol,
    g: Graph,
    c0: Sequence,
    params,
    seed: int,
    max_steps: int,
    safe_predicate: Callable,
    *,
    closure_window: int = DEFAULT_CLOSURE_WINDOW,
    record_trace: bool = False,
) -> RunResult:
    """Run under the uniformly random scheduler until the predicate holds.

    After the predicate first holds the run continues for ``closure_window``
    extra steps, recording whether any agent output changed.  Non-convergence
    within ``max_steps`` is data (steps_to_safe=None), not an error.

    A predicate may carry a ``signature`` attribute mapping a state to the
    projection it actually reads; the engine then re-evaluates it only when
    a step changed some signature, which is sound because the predicate is a
    function of the per-agent signatures alone.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    protocol.validate_params(params)
    if len(c0) != g.n or g.n != params.n:
        raise DomainViolation(f"configuration/graph/params sizes disagree: {len(c0)}, {g.n}, {params.n}")
    for s in c0:
        protocol.validate_state(s, params)

    rng = np.random.default_rng(seed)
    pairs = g.directed_pairs
    npairs = len(pairs)
    step = getattr(protocol, "step_fast", protocol.step)
    sig = getattr(safe_predicate, "signature", None)
    states = list(c0)
    trace = [] if record_trace else None

    steps = 0
    steps_to_safe = 0 if safe_predicate(states) else None
    while steps_to_safe is None and steps < max_steps:
        block = rng.integers(0, npairs, size=min(_BLOCK, max_steps - steps)).tolist()
        for idx in block:
            u, v = pairs[idx]
            s0 = states[u]
            s1 = states[v]
            t0, t1 = step(s0, s1, params)
            states[u] = t0
            states[v] = t1
            steps += 1
            if trace is not None:
                trace.append((u, v))
            if sig is None or sig(t0) != sig(s0) or sig(t1) != sig(s1):
                if safe_predicate(states):
                    steps_to_safe = steps
                    break

    closure_ok = None
    if steps_to_safe is not None and closure_window > 0:
        closure_ok = True
        outputs = [protocol.output(s) for s in states]
        done = 0
        while done < closure_window and closure_ok:
            block = rng.integers(0, npairs, size=min(_BLOCK, closure_window - done)).tolist()
            for idx in block:
                u, v = pairs[idx]
                t0, t1 = step(states[u], states[v], params)
                states[u] = t0
                states[v] = t1
                done += 1
                if trace is not None:
                    trace.append((u, v))
                if protocol.output(t0) != outputs[u] or protocol.output(t1) != outputs[v]:
                    closure_ok = False
                    break
    elif steps_to_safe is not None:
        closure_ok = True

    return RunResult(
        protocol=protocol.name,
        n=g.n,
        m=g.m,
        d=g.diameter,
        seed=seed,
        tmax=params.tmax,
        pmax=params.pmax,
        emax=params.emax,
        steps_to_safe=steps_to_safe,
        closure_ok=closure_ok,
        final_states=tuple(states),
        trace=InteractionTrace(tuple(trace), seed) if trace is not None else None,
    )


def run_trial(
    protocol,
    g: Graph,
    params,
    trial_seed: int,
    *,
    max_steps: int,
    safe_predicate: Callable,
    closure_window: int = DEFAULT_CLOSURE_WINDOW,
    record_trace: bool = False,
) -> RunResult:
    """One fully seeded trial: uniform start, then run_until.

    The initial configuration and the scheduler use independent streams
    mixed from ``trial_seed`` (indices 0 and 1); the result records
    ``trial_seed`` itself, so a record is reproducible from its seed alone.
    """
    c0 = sample_uniform_config(protocol, params, mix_seed(trial_seed, 0))
    res = run_until(
        protocol, g, c0, params, mix_seed(trial_seed, 1), max_steps, safe_predicate,
        closure_window=closure_window, record_trace=record_trace,
    )
    return dataclasses.replace(res, seed=trial_seed)


class TokenTracker:
    """Positions of the n virtual tokens (token w starts on agent w).

    The two participants of every interaction exchange their tokens, so
    ``position`` stays a permutation of 0..n-1.
    """

    def __init__(self, n: int):
        self.n = n
        self.position = list(range(n))  # token id -> hosting agent
        self._token_at = list(range(n))  # agent -> hosted token id

    def apply(self, pair: tuple[int, int]) -> None:
        u, v = pair
        a = self._token_at[u]
        b = self._token_at[v]
        self._token_at[u] = b
        self._token_at[v] = a
        self.position[a] = v
        self.position[b] = u

    def replay(self, pairs) -> "TokenTracker":
        for pair in pairs:
            self.apply(pair)
        return self


def token_position(n: int, pairs, w: int) -> int:
    """Host of token w after replaying the given interaction prefix."""
    return TokenTracker(n).replay(pairs).position[w]
