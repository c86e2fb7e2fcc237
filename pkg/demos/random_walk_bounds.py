"""Token random-walk quantities versus their worst-case yardsticks.

Tokens hop only when the scheduler picks their hosting edge, so a single
token is a lazy walk that moves with probability deg/m per step.  The exact
solvers pin hitting and meeting times to 1e-9; Monte Carlo covers the cover
time.  Three facts worth seeing with numbers:

  * hitting a node v from u never costs more than m*n*d(u,v) in expectation,
  * the expected return time to any node is exactly n, on any population,
  * two tokens meet within 2*m*n^2*d in expectation, and a token sees the
    whole population within 2*m*n^2.
"""

import poplab as pl
from poplab.oracles import empirical_cover_time, exact_hitting_time, exact_meeting_time

populations = [
    ("complete:6", pl.generate_graph("complete", 6)),
    ("cycle:7", pl.generate_graph("cycle", 7)),
    ("star:7", pl.generate_graph("star", 7)),
    ("random:7,10", pl.generate_graph("random_connected", 7, 10, seed=4)),
]

for name, g in populations:
    n, m, d = g.n, g.m, g.diameter
    dist = g.metrics.distances
    worst_ratio = 0.0
    for u in range(n):
        h = pl.hitting_times_to(g, u)
        for v in range(n):
            if u != v:
                worst_ratio = max(worst_ratio, h[v] / (m * n * dist[v, u]))
    returns = [exact_hitting_time(g, z, z) for z in range(n)]
    meet = max(exact_meeting_time(g, u, v) for u in range(n) for v in range(u + 1, n))
    cover = empirical_cover_time(g, 0, trials=600, seed=0)
    print(f"\n== {name} (n={n}, m={m}, d={d})")
    print(f"   hitting:  worst H(u,v) / (m*n*d(u,v)) = {worst_ratio:.3f}  (< 1 always)")
    print(f"   returns:  H(z,z) = {min(returns):.9f}..{max(returns):.9f}  (= n = {n})")
    print(f"   meeting:  worst pair {meet:.1f} vs bound 2mn^2*d = {2 * m * n * n * d}")
    print(f"   cover:    mean {cover.mean:.1f} +/- {cover.stderr:.1f} "
          f"vs bound 2mn^2 = {2 * m * n * n}")
