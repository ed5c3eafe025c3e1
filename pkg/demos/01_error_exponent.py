"""
Random coding exponent of the AWGN channel
==========================================

Trace the exponent curve at one SNR, read off its landmarks and turn it
into a word error bound for a few block lengths.
"""

import numpy as np

from harqiso import exponent
from harqiso.exponent import ChannelParams

# a channel given in dB; a_linear is the signal-to-noise ratio
channel = ChannelParams.from_db(-4.64)
print(f"A = {channel.a_linear:.4f}")

# cutoff rate, critical rate and capacity, all in nats
lm = exponent.landmarks(channel)
print(f"R0 = {lm.r0:.5f}  Rcrit = {lm.r_crit:.5f}  C = {lm.capacity:.5f}")

# the curve is parametric in rho
for rho in (0.0, 0.25, 0.5, 1.0):
    pt = exponent.esp_point(rho, channel)
    print(f"rho={rho:4.2f}  R={pt.r_nat:.5f}  E_sp={pt.e_sp:.5f}")

# below Rcrit the exponent is a straight line, above it comes from inverting R(rho)
rates = np.linspace(0.01, 0.99 * lm.capacity, 6)
for r in rates:
    print(f"R={r:.4f}  E(R)={exponent.error_exponent(r, channel):.6f}")

# a rate-1/3 binary code becomes ln2/3 nats per symbol
r_code = exponent.binary_to_nats(1 / 3)
for n in (1024, 6144, 20000):
    print(f"N={n:6d}  bound={exponent.wer_bound(n, r_code, channel):.3e}")
