"""Watch the ranking protocol self-stabilize on a few populations.

Each trial starts from a configuration drawn uniformly over the full state
domain (the stand-in for an adversarial start), runs under the uniformly
random scheduler until every agent holds a distinct label with its color
audit settled, then keeps running to confirm no output ever changes again.
"""

import poplab as pl
from poplab.engine import default_params, mix_seed, run_trial
from poplab.oracles import rank_safe_predicate

MASTER_SEED = 7

for graph_index, spec in enumerate([("complete", 5, None), ("path", 6, None),
                                    ("random_connected", 7, 12)]):
    kind, n, m = spec
    g = pl.generate_graph(kind, n, m, seed=MASTER_SEED)
    params = default_params(g)
    pred = rank_safe_predicate(params)
    label = f"{kind}:{n}" + (f",{m}" if m else "")
    print(f"\n== {label}  (n={g.n}, m={g.m}, diameter={g.diameter}, tmax={params.tmax})")

    steps = []
    for trial in range(10):
        res = run_trial(pl.RANKING, g, params,
                        mix_seed(MASTER_SEED, graph_index * 100 + trial),
                        max_steps=10**8, safe_predicate=pred, closure_window=20_000)
        steps.append(res.steps_to_safe)
        assert res.closure_ok, "outputs changed after the safe set was reached!"
    print(f"   steps to a ranked configuration over 10 trials: "
          f"min={min(steps)} median={sorted(steps)[5]} max={max(steps)}")

    res = run_trial(pl.RANKING, g, params, mix_seed(MASTER_SEED, 99 + graph_index),
                    max_steps=10**8, safe_predicate=pred, closure_window=0)
    ranks = {s.idA: agent for agent, s in enumerate(res.final_states)}
    print(f"   one converged labeling: " +
          ", ".join(f"rank {r} -> agent {ranks[r]}" for r in sorted(ranks)))
    print(f"   leader (rank 0) is agent {ranks[0]}")
