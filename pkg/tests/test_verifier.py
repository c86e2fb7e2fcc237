import json

import pytest

from poplab.engine import ProtocolParams, default_params
from poplab.errors import DomainViolation, NoSafeConfigOnSuper, TooLarge
from poplab.graph import generate_graph
from poplab.neighbor import NEIGHBOR
from poplab.oracles import SafeLevel, check_spec, classify_rank_config
from poplab.ranking import RANKING
from poplab.verifier import (
    FIXED_OUTPUT,
    GREEDY_DEGREE,
    GreedyDegreeState,
    Witness,
    build_transition_graph,
    configured_budget,
    final_sets,
    impossibility_witness,
    replay_witness,
    verify_self_stabilizing,
    verify_transition_graph,
)


def rank_safe(params):
    return lambda states: classify_rank_config(states, params) is SafeLevel.RANKED


def degree_safe(protocol, g):
    return lambda states: check_spec("degree", [protocol.output(s) for s in states], g)


# --- transition graphs -------------------------------------------------------


def test_configuration_space_arithmetic():
    k2 = generate_graph("complete", 2)
    params2 = ProtocolParams(n=2, tmax=1)
    tg = build_transition_graph(RANKING, k2, params2)
    assert tg.agent_state_count == 48
    assert tg.config_count == 48**2 == 2304
    assert len(tg.successors) == 2
    assert all(len(s) == 2304 for s in tg.successors)

    params3 = ProtocolParams(n=3, tmax=1)
    assert RANKING.state_count(params3) == 108
    assert 108**3 == 1_259_712


def test_encode_decode_roundtrip():
    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=1)
    tg = build_transition_graph(RANKING, g, params)
    for key in (0, 1, 47, 48, 2303, 1234):
        states = tg.decode(key)
        assert tg.encode(states) == key


def test_successors_match_scalar_step():
    import random

    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=1)
    tg = build_transition_graph(RANKING, g, params)
    rng = random.Random(0)
    for _ in range(200):
        key = rng.randrange(tg.config_count)
        e = rng.randrange(len(tg.directed_pairs))
        u, v = tg.directed_pairs[e]
        states = list(tg.decode(key))
        states[u], states[v] = RANKING.step(states[u], states[v], params)
        assert tg.encode(states) == tg.successor(key, e)


def test_neighbor_state_space_exceeds_budget():
    g = generate_graph("complete", 2)
    params = default_params(g, know_m=True)
    with pytest.raises(TooLarge):
        build_transition_graph(NEIGHBOR, g, params)


def test_budget_override():
    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=1)
    with pytest.raises(TooLarge):
        build_transition_graph(RANKING, g, params, budget=1000)
    assert configured_budget(123) == 123


def test_budget_env_variable(monkeypatch):
    monkeypatch.setenv("POPLAB_BUDGET", "5")
    assert configured_budget() == 5
    g = generate_graph("complete", 2)
    with pytest.raises(TooLarge):
        build_transition_graph(RANKING, g, ProtocolParams(n=2, tmax=1))


def test_graph_params_mismatch():
    g = generate_graph("complete", 3)
    with pytest.raises(DomainViolation):
        build_transition_graph(RANKING, g, ProtocolParams(n=2, tmax=1))


# --- final sets ---------------------------------------------------------------


def test_final_sets_disjoint_and_closed():
    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=1)
    tg = build_transition_graph(RANKING, g, params)
    fsets = final_sets(tg)
    assert fsets
    seen = set()
    for fset in fsets:
        assert not (fset & seen)
        seen |= fset
        for key in fset:
            for e in range(len(tg.successors)):
                assert tg.successor(key, e) in fset


def test_ranking_final_sets_are_ranked_k2():
    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=1)
    tg = build_transition_graph(RANKING, g, params)
    for fset in final_sets(tg):
        for key in fset:
            assert classify_rank_config(tg.decode(key), params) is SafeLevel.RANKED


def test_greedy_degree_final_sets_are_absorbing_singletons():
    g = generate_graph("path", 3)
    params = ProtocolParams(n=3, tmax=1)
    tg = build_transition_graph(GREEDY_DEGREE, g, params)
    fsets = final_sets(tg)
    assert fsets
    for fset in fsets:
        assert len(fset) == 1
        key = next(iter(fset))
        assert all(tg.successor(key, e) == key for e in range(len(tg.successors)))


# --- verification -------------------------------------------------------------


def test_ranking_self_stabilizing_k2():
    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=1)
    assert verify_self_stabilizing(RANKING, g, params, rank_safe(params)) is True


@pytest.mark.parametrize("kind", ["complete", "path"])
@pytest.mark.parametrize("tmax", [2])
def test_ranking_self_stabilizing_n3_full_enumeration(kind, tmax):
    # tmax=1 for these graphs is exercised by the acceptance suite; together
    # they cover every connected population with n <= 3 and tmax <= 2.
    g = generate_graph(kind, 3)
    params = ProtocolParams(n=3, tmax=tmax)
    assert verify_self_stabilizing(RANKING, g, params, rank_safe(params)) is True


def test_ranking_self_stabilizing_k2_tmax2():
    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=2)
    assert verify_self_stabilizing(RANKING, g, params, rank_safe(params)) is True


def test_greedy_degree_fails_verification_with_witness():
    g = generate_graph("path", 3)
    params = ProtocolParams(n=3, tmax=1)
    verdict = verify_self_stabilizing(GREEDY_DEGREE, g, params, degree_safe(GREEDY_DEGREE, g))
    assert isinstance(verdict, Witness)
    assert verdict.kind == "unsafe_final"
    outputs = [GREEDY_DEGREE.output(s) for s in verdict.start]
    assert not check_spec("degree", outputs, g)


class OscillatorProtocol:
    """Deliberately unstable toy: both parties toggle a bit; output = bit."""

    name = "oscillator"

    @staticmethod
    def validate_params(params):
        pass

    @staticmethod
    def validate_state(s, params):
        if s not in (0, 1):
            raise DomainViolation(str(s))

    @staticmethod
    def state_count(params):
        return 2

    @staticmethod
    def state_to_index(s, params):
        return s

    @staticmethod
    def state_from_index(i, params):
        return i

    @staticmethod
    def random_state(rng, params):
        return int(rng.integers(0, 2))

    @staticmethod
    def step(s0, s1, params):
        return (1 - s0, 1 - s1)

    step_fast = step

    @staticmethod
    def output(s):
        return s

    @staticmethod
    def to_json(s):
        return {"bit": s}


def test_output_change_witness_is_replayable():
    g = generate_graph("complete", 2)
    params = ProtocolParams(n=2, tmax=1)
    verdict = verify_self_stabilizing(OscillatorProtocol(), g, params, lambda states: True)
    assert isinstance(verdict, Witness)
    assert verdict.kind == "output_change"
    assert verdict.pairs
    end = replay_witness(OscillatorProtocol(), verdict, params)
    assert OscillatorProtocol.output(end[verdict.agent]) == verdict.after
    assert OscillatorProtocol.output(verdict.start[verdict.agent]) == verdict.before
    assert verdict.before != verdict.after


# --- impossibility search ------------------------------------------------------


def test_impossibility_witness_greedy_degree():
    p3 = generate_graph("path", 3)
    k3 = generate_graph("complete", 3)
    params = ProtocolParams(n=3, tmax=1)
    witness = impossibility_witness(GREEDY_DEGREE, p3, k3, params)
    assert isinstance(witness, Witness)
    # The start is final and degree-correct on the supergraph...
    start_outputs = [GREEDY_DEGREE.output(s) for s in witness.start]
    assert check_spec("degree", start_outputs, k3)
    # ...but on the subgraph the endpoint claims are frozen wrong.
    assert witness.kind == "frozen_output"
    assert not witness.pairs
    assert start_outputs[witness.agent] != p3.degree(witness.agent)
    assert witness.before == witness.after == start_outputs[witness.agent]
    # Replay is a no-op that reproduces the recorded outputs bit-exactly.
    end = replay_witness(GREEDY_DEGREE, witness, params)
    assert [GREEDY_DEGREE.output(s) for s in end] == start_outputs


def test_impossibility_witness_fixed_output():
    p3 = generate_graph("path", 3)
    k3 = generate_graph("complete", 3)
    params = ProtocolParams(n=3, tmax=1)
    witness = impossibility_witness(FIXED_OUTPUT, p3, k3, params)
    assert witness is not None
    assert witness.kind == "frozen_output"


class AllZeroProtocol(OscillatorProtocol):
    name = "allzero"

    @staticmethod
    def step(s0, s1, params):
        return (s0, s1)

    step_fast = step

    @staticmethod
    def output(s):
        return 0


def test_impossibility_no_safe_config_on_super():
    p3 = generate_graph("path", 3)
    k3 = generate_graph("complete", 3)
    params = ProtocolParams(n=3, tmax=1)
    with pytest.raises(NoSafeConfigOnSuper):
        impossibility_witness(AllZeroProtocol(), p3, k3, params)


def test_impossibility_requires_strict_subgraph():
    p3 = generate_graph("path", 3)
    k3 = generate_graph("complete", 3)
    params = ProtocolParams(n=3, tmax=1)
    with pytest.raises(ValueError):
        impossibility_witness(GREEDY_DEGREE, p3, p3, params)
    with pytest.raises(ValueError):
        impossibility_witness(GREEDY_DEGREE, k3, p3, params)


def test_witness_json_shape():
    p3 = generate_graph("path", 3)
    k3 = generate_graph("complete", 3)
    params = ProtocolParams(n=3, tmax=1)
    witness = impossibility_witness(GREEDY_DEGREE, p3, k3, params)
    obj = witness.to_json(GREEDY_DEGREE)
    blob = json.dumps(obj)  # must be serializable
    assert set(obj) == {"kind", "start", "pairs", "agent", "before", "after"}
    assert isinstance(obj["start"], list) and len(obj["start"]) == 3
    assert obj["agent"] == witness.agent
    assert "seen" in obj["start"][0]
    assert json.loads(blob) == obj
