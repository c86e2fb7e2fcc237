"""Self-stabilizing ranking protocol (exact agent count known).

Every agent stores a label ``idA`` (its output) and hosts exactly one token,
described by ``idT``/``colorT``/``timerT``.  Tokens are swapped on every
interaction, so each token performs a random walk over the population.  Two
mechanisms drive the system to distinct labels 0..n-1:

* token collisions: when the two swapped tokens carry the same label, the
  responder's token advances to the next label mod n, so token labels
  eventually become a permutation;
* color auditing: the token whose label matches an agent's label acts as that
  label's auditor.  An agent synchronizes its color with the auditor token,
  and the pair flips color together whenever the token's timer runs out.  An
  agent that meets its auditor while holding the *wrong* non-white color has
  proof that some other agent shares its label, so it moves on to the next
  label (turning white until it can resynchronize).

``timerT`` only paces the recoloring: the protocol is also correct with a
tiny ``tmax``, just slower, which the model checker exploits.
"""

from __future__ import annotations

from typing import NamedTuple

from .errors import DomainViolation

WHITE, RED, BLUE = 0, 1, 2
COLOR_NAMES = {WHITE: "white", RED: "red", BLUE: "blue"}
COLOR_CODES = {name: code for code, name in COLOR_NAMES.items()}


class RankState(NamedTuple):
    idA: int     # agent label, the protocol output
    idT: int     # label of the token this agent currently hosts
    colorA: int  # agent color: WHITE, RED or BLUE
    colorT: int  # token color: RED or BLUE
    timerT: int  # token recoloring timer, 0..tmax


def validate_state(s: RankState, params) -> None:
    n, tmax = params.n, params.tmax
    if not (0 <= s.idA < n and 0 <= s.idT < n):
        raise DomainViolation(f"label out of range in {s}")
    if s.colorA not in (WHITE, RED, BLUE):
        raise DomainViolation(f"bad agent color in {s}")
    if s.colorT not in (RED, BLUE):
        raise DomainViolation(f"bad token color in {s}")
    if not (0 <= s.timerT <= tmax):
        raise DomainViolation(f"token timer out of 0..{tmax} in {s}")


def _step(a0: RankState, a1: RankState, params) -> tuple[RankState, RankState]:
    """Unchecked interaction body; a0 initiates, a1 responds."""
    n = params.n
    tmax = params.tmax

    # Swap the token triples: the random walk itself.
    idT0, cT0, tT0 = a1.idT, a1.colorT, a1.timerT
    idT1, cT1, tT1 = a0.idT, a0.colorT, a0.timerT

    # Token collision: the responder's token moves on to the next label.
    if idT0 == idT1:
        idT1 += 1
        if idT1 == n:
            idT1 = 0

    # Timers tick down on every move, stopping at zero.
    if tT0 > 0:
        tT0 -= 1
    if tT1 > 0:
        tT1 -= 1

    idA0, cA0 = a0.idA, a0.colorA
    if idA0 == idT0:
        if cA0 == WHITE:
            cA0 = cT0
        if cA0 != cT0:
            # Stale color: some other agent owns this label.  Move on, white.
            idA0 += 1
            if idA0 == n:
                idA0 = 0
            cA0 = WHITE
        elif tT0 == 0:
            # Periodic recoloring: agent and auditor token flip together.
            tT0 = tmax
            cA0 = cT0 = BLUE if cA0 == RED else RED

    idA1, cA1 = a1.idA, a1.colorA
    if idA1 == idT1:
        if cA1 == WHITE:
            cA1 = cT1
        if cA1 != cT1:
            idA1 += 1
            if idA1 == n:
                idA1 = 0
            cA1 = WHITE
        elif tT1 == 0:
            tT1 = tmax
            cA1 = cT1 = BLUE if cA1 == RED else RED

    return (
        RankState(idA0, idT0, cA0, cT0, tT0),
        RankState(idA1, idT1, cA1, cT1, tT1),
    )


def step(a0: RankState, a1: RankState, params) -> tuple[RankState, RankState]:
    """One interaction (initiator a0, responder a1), with domain checks."""
    validate_state(a0, params)
    validate_state(a1, params)
    return _step(a0, a1, params)


def output(s: RankState) -> int:
    """The agent's rank claim: its label."""
    return s.idA


def leader_output(s: RankState) -> str:
    """Leader-election view of a ranking: label 0 leads, everyone else follows."""
    return "L" if s.idA == 0 else "F"


def to_json(s: RankState) -> dict:
    return {
        "idA": s.idA,
        "idT": s.idT,
        "colorA": COLOR_NAMES[s.colorA],
        "colorT": COLOR_NAMES[s.colorT],
        "timerT": s.timerT,
    }


def from_json(obj: dict) -> RankState:
    return RankState(
        idA=int(obj["idA"]),
        idT=int(obj["idT"]),
        colorA=COLOR_CODES[obj["colorA"]],
        colorT=COLOR_CODES[obj["colorT"]],
        timerT=int(obj["timerT"]),
    )


class RankingProtocol:
    """Ranking protocol wrapped in the generic protocol interface.

    Per-agent states are indexed in the mixed-radix order
    (idA, idT, colorA, colorT, timerT), idA most significant; the same
    canonical order is used by the verifier's configuration packing.
    """

    name = "ranking"

    @staticmethod
    def validate_params(params) -> None:
        if params.n < 2 or params.tmax < 1:
            raise DomainViolation(f"need n >= 2 and tmax >= 1, got {params}")

    @staticmethod
    def state_count(params) -> int:
        return params.n * params.n * 3 * 2 * (params.tmax + 1)

    @staticmethod
    def state_to_index(s: RankState, params) -> int:
        i = s.idA
        i = i * params.n + s.idT
        i = i * 3 + s.colorA
        i = i * 2 + (s.colorT - RED)
        return i * (params.tmax + 1) + s.timerT

    @staticmethod
    def state_from_index(i: int, params) -> RankState:
        i, timerT = divmod(i, params.tmax + 1)
        i, colorT = divmod(i, 2)
        i, colorA = divmod(i, 3)
        idA, idT = divmod(i, params.n)
        return RankState(idA, idT, colorA, colorT + RED, timerT)

    @staticmethod
    def random_state(rng, params) -> RankState:
        return RankState(
            idA=int(rng.integers(0, params.n)),
            idT=int(rng.integers(0, params.n)),
            colorA=int(rng.integers(0, 3)),
            colorT=RED + int(rng.integers(0, 2)),
            timerT=int(rng.integers(0, params.tmax + 1)),
        )

    validate_state = staticmethod(validate_state)
    step = staticmethod(step)
    step_fast = staticmethod(_step)
    output = staticmethod(output)
    to_json = staticmethod(to_json)
    from_json = staticmethod(from_json)


RANKING = RankingProtocol()
