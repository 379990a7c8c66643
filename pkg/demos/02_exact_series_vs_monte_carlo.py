"""The exact eigenseries for a fixed tube against the particle-free
Monte Carlo with Brownian-bridge crossing corrections."""

import math

import numpy as np

from frontier_lab import Constant, Curve, fixed_tube_probability, \
    single_particle_tube_weights
from frontier_lab.stochastic_kernels import derive_key

t = 1.0
exact = fixed_tube_probability(0.0, t, -1.0, 1.0)
print(f"P(|path| < 1 up to t={t:g}) by eigenseries: {exact:.6f}")

floor = Curve([Constant(-1.0)])
width = Curve([Constant(2.0)])
n = 100_000
keys = derive_key(12, np.arange(n, dtype=np.uint64))
_, w = single_particle_tube_weights(floor, width, keys, 0.0, t, dt=0.01, x0=0.0)
mc = w.mean()
se = w.std(ddof=1) / math.sqrt(n)
print(f"bridge-corrected Monte Carlo ({n} paths, dt=0.01): {mc:.6f} +- {se:.6f}")
print(f"z-score {(mc - exact) / se:+.2f}")
print("\nhalf-window symmetry of the killed kernel:")
print(f"  end in (-1,0): {fixed_tube_probability(0.0, t, -1.0, 0.0):.6f}"
      f"  (exactly half of {exact:.6f})")
