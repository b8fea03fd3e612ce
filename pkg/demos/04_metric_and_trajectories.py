"""The flat metric |S_{f^n}|^(1/2)/d^n |dz| converging to sqrt(2)|g||dz|.

On the circle |z| = 3 the length in the n-th metric approaches the d_o
length. A horizontal trajectory of -2 g^2 dz^2 for z^2 is a circle around
the origin, and tracing one shows how flat the picture becomes.
"""

import numpy as np

from schwz import Poly, Polyline, QDSampler, cylinder_circumference, do_curve_length, qd_curve_length, trace_trajectory

f = Poly([-6, 0, 1])
circle = Polyline(3 * np.exp(2j * np.pi * np.arange(512) / 512))
do = do_curve_length(f, circle)
print(f"d_o length of |z| = 3: {do:.10f}")
for n in (2, 4, 6, 8, 10, 12):
    dn = qd_curve_length(QDSampler.iterate(f, n), circle)
    print(f"  n = {n:2d}: d_n length {dn:.10f}, gap {abs(dn - do):.2e}")

sq = Poly([0, 0, 1])
path = trace_trajectory(QDSampler.limit(sq), 2.0, 0.05, 252)
r = np.abs(path.vertices)
print(f"\ntrajectory from z = 2 for z^2: radius stays in [{r.min():.8f}, {r.max():.8f}]")

# near a critical point of order k of f^n the limit metric opens into a cylinder
print("cylinder circumference, z^2 at 0:", cylinder_circumference(2, 2, 0))
