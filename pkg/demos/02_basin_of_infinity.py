"""Convergence to -2 g^2 on the basin of infinity of z^2 - 6.

The Julia set of z^2 - 6 is a Cantor set on [-3, 3]. Points off the real
segment escape, and the normalized Schwarzian settles at the rate 1/4.
The fixed point z = 3 lies on the Julia set, so it has no limit; the
library reports that as a domain error instead of a number.
"""

from schwz import DomainError, Poly, green_eval, schwarzian_iterate_normalized, schwarzian_limit

f = Poly([-6, 0, 1])
for z in (2 + 1j, -4, 0.5j, 3):
    ev = green_eval(f, z)
    print(f"\nz = {z}: G = {ev.green:.6f}, escaped = {ev.escaped}")
    try:
        limit = schwarzian_limit(f, z, require_escape=True)
    except DomainError as exc:
        print("  no limit:", exc)
        continue
    for n in (2, 4, 8, 12, 16):
        e = abs(schwarzian_iterate_normalized(f, n, z).value - limit)
        print(f"  n = {n:2d}  |S_n/4^n + 2g^2| = {e:.3e}")
