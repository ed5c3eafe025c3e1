"""
Simulating the single-server protocol
=====================================

Run the slotted simulator on both sides of the stability boundary and
compare with the queueing predictions.
"""

from harqiso import queueing, sim
from harqiso.wer import GeometricSeries

for p in (0.45, 0.55):
    series = GeometricSeries(p, 0.5, 1.0)
    rep = queueing.stability_check(series)
    m = sim.run(sim.SimConfig(series, slots=100_000, seed=1))
    print(f"P_-1={p}: predicted stable={rep.stable}, mu={rep.mu:.3f}")
    print(f"  throughput={m.throughput:.4f}  service rate={m.service_rate_empirical:.4f}"
          f"  mean queue={m.mean_queue_len:.1f}  final queue={m.final_queue_len}")

# a delay budget: 99.9% of packets arrive within t_eps0 slots
m = sim.run(sim.SimConfig(GeometricSeries(0.45, 0.5, 1.0), 100_000, seed=2, eps0=1e-3, dk=8))
print(f"t_eps0={m.t_eps0}  mean delay={m.mean_delay:.3f}  undetected={m.undetected_errors}")

# the first few slots of a trace
m = sim.run(sim.SimConfig(GeometricSeries(0.6, 0.5, 1.0), 10, seed=3, trace_slots=5))
for row in m.trace:
    print(row)
