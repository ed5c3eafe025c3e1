"""
WER ladders for a rate-compatible code family
=============================================

Build the error ladder of a family three ways: from the exponent bound,
from the (h, g) model, and from a measured table.
"""

from harqiso import wer
from harqiso.exponent import ChannelParams
from harqiso.wer import AnalyticSeries, CodeFamilyGeometry, GeometricSeries, TableSeries

# 2048 info bits plus a 16-bit CRC, base code of 6192 symbols, 142 more per step
geo = CodeFamilyGeometry(k_info=2048, dk=16, n_base=6192, dn=142)
channel = ChannelParams.from_db(-5.7)
analytic = AnalyticSeries(geo, channel)
print("analytic ladder:", [f"{v:.3g}" for v in analytic.values(-1, 5)])

# the first three rungs give the ratio h and the ratio of ratios g
h, g = wer.estimate_ratios(*analytic.values(-1, 2))
print(f"fitted h = {h:.4f}, g = {g:.4f}")

# the (h, g) model regenerates the whole ladder from three numbers
model = GeometricSeries(analytic.p(-1), h, g)
print("model ladder:   ", [f"{v:.3g}" for v in model.values(-1, 5)])

# a measured table; past its end the tail continues geometrically
table = TableSeries([0.5, 0.25, 0.1, 0.032])
print(f"table total = {table.total():.5f}, next rung = {table.p(3):.5f}")

# chance that a packet fails again given it already failed one rung lower
for i in range(3):
    print(f"P(fail at {i} | failed at {i - 1}) = {wer.conditional_fail(model, i):.4f}")
