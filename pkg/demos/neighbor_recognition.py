"""Neighbor recognition end to end, including recovery from planted lies.

First half: converge from a uniformly random configuration and compare every
agent's claimed neighbor labels against the true adjacency.  Second half:
plant a fake label (one that belongs to no actual neighbor) in a settled
configuration and watch the degree-sum audit detect it, flood the error
signal, wipe the neighbor sets, and rebuild them correctly.
"""

import numpy as np

import poplab as pl
from poplab.engine import default_params, mix_seed, run_trial
from poplab.neighbor import NEIGHBOR, bits, mask_of
from poplab.oracles import neighbor_safe, neighbor_safe_predicate

g = pl.generate_graph("path", 5)
params = default_params(g, know_m=True)
pred = neighbor_safe_predicate(g, params)
print(f"population: path of {g.n} agents, m={g.m}, tmax={params.tmax}, "
      f"pmax={params.pmax}, emax={params.emax}")

res = run_trial(NEIGHBOR, g, params, mix_seed(13, 0),
                max_steps=10**8, safe_predicate=pred, closure_window=50_000)
print(f"\nconverged after {res.steps_to_safe} interactions "
      f"(clean closure: {res.closure_ok})")
labels = [s.rank.idA for s in res.final_states]
for v, s in enumerate(res.final_states):
    claimed = sorted(bits(s.neighbors))
    actual = sorted(labels[u] for u in g.adjacency[v])
    mark = "ok" if claimed == actual else "WRONG"
    print(f"  agent {v}: label {labels[v]}, claims neighbors {claimed} "
          f"(truth {actual}) [{mark}]")

# Now plant a lie: give agent 0 the label of the far endpoint as a neighbor.
states = list(res.final_states)
fake = labels[g.n - 1]
states[0] = states[0]._replace(neighbors=states[0].neighbors | (1 << fake))
print(f"\nplanting fake neighbor label {fake} on agent 0 "
      f"(its true neighbor labels: {sorted(labels[u] for u in g.adjacency[0])})")
assert not neighbor_safe(states, g, params)

rng = np.random.default_rng(13)
pairs = g.directed_pairs
steps = 0
emitted_at = None
while not pred(states):
    u, v = pairs[int(rng.integers(0, len(pairs)))]
    states[u], states[v] = NEIGHBOR.step(states[u], states[v], params)
    steps += 1
    if emitted_at is None and max(s.resetE for s in states) == params.emax:
        emitted_at = steps
print(f"audit raised the error signal after {emitted_at} interactions")
print(f"neighbor sets correct again after {steps} interactions")
for v, s in enumerate(states):
    print(f"  agent {v}: claims {sorted(bits(s.neighbors))}")
