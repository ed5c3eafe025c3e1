"""
Choosing the retransmission block size
======================================

Scale the parity block by r and trade queue load against the error-floor
tail, then map the best r back to a block length.
"""

import numpy as np

from harqiso import blocksize
from harqiso.blocksize import OptimizerInputs
from harqiso.wer import GeometricSeries

series = GeometricSeries(0.5, 0.5, 0.8)

# theta collects the ladder mass below the 1% level
inputs = blocksize.inputs_from_series(series, dn_bas=142)
print(f"P0={inputs.p0_hat:.3f} h={inputs.h_hat:.3f} g={inputs.g_hat:.3f} theta={inputs.theta:.2e}")

# the objective at a few scales
for r in (0.25, 0.5, 1.0, 2.0, 4.0):
    print(f"r={r:4.2f}  objective={blocksize.objective(r, inputs):.5f}")

# coarse grid plus golden-section refinement
res = blocksize.optimize_r(OptimizerInputs(0.25, 0.5, 0.8, theta=0.02, dn_bas=142))
print(f"r*={res.r_star:.4f}  block={res.dn_star}  at bound={res.at_bound}")

curve = np.array(res.curve)
k = int(np.argmin(curve[:, 2]))
print(f"grid minimum near r={curve[k, 0]:.2f}")
