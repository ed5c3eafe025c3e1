"""
Queue stability and the throughput-optimal ladder
=================================================

Check whether a ladder keeps the retransmission queue stationary, then
find the ladder shape that carries the most load for a given budget.
"""

from harqiso import queueing
from harqiso.wer import GeometricSeries

# stable when the summed ladder stays below the number of servers
for p in (0.40, 0.50, 0.55):
    rep = queueing.stability_check(GeometricSeries(p, 0.5, 1.0))
    print(f"P_-1={p:.2f}  sum={rep.stability_sum:.3f}  mu={rep.mu:.3f}  stable={rep.stable}")

# a ratio of ratios below one shortens the ladder and frees budget
rep = queueing.stability_check(GeometricSeries(0.5, 0.5, 0.8))
print(f"with g=0.8 the sum drops to {rep.stability_sum:.4f}")

# optimal h and the stable base-code error rate as servers are added
for a in (1, 2, 4, 10, 1000):
    d = queueing.optimal_design(0.95, a)
    print(f"a={a:5d}  h*={d.h_star:.4f}  P0*={d.p0_star_aggregate:.4f}")

# plain ARQ for comparison, and the CRC length behind a target undetected rate
print(f"plain ARQ at P0=0.25: {queueing.classical_arq_throughput(0.25):.2f}")
print(f"CRC bits for 1e-6 over 3 servers: {queueing.crc_overhead(1e-6, 3)}")
