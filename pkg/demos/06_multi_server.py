"""
Several HARQ servers sharing the retransmission channel
=======================================================

Split the retransmission share into subblocks, one per server, and check
that the optimal multi-server ladder stays stable in simulation.
"""

from harqiso import queueing, sim
from harqiso.wer import GeometricSeries

k0 = 0.95
for a in (1, 2, 4):
    d = queueing.optimal_design(k0, a)
    # the simulator wants the ladder per subblock, so the ratio is h*^(1/a)
    ladder = GeometricSeries(d.p_minus1_aggregate, d.h_star ** (1 / a))
    alg = "A" if a == 1 else "B"
    m = sim.run(sim.SimConfig(ladder, 100_000, algorithm=alg, servers=a, seed=a))
    print(f"a={a}  P0*={d.p0_star_aggregate:.4f}  throughput={m.throughput:.4f}"
          f"  mean queue={m.mean_queue_len:.1f}  arrivals per server={m.per_server_arrivals}")
