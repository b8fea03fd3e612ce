"""Level sets of the Green function and the annuli they bound.

For z^2 - 6 the critical point 0 sits at height G0 = G(0). Above G0 the
level set is one curve around the Julia set; below it the curve splits in
two, then four, and so on. The d_o circumferences of all components at a
level always add up to sqrt(2) pi, and f carries a component at level l
onto one at level 2l, multiplying its circumference by 2 / d_A.
"""

import math

from schwz import Poly, Region, annulus_height, critical_levels, level_components

f = Poly([-6, 0, 1])
G0 = critical_levels(f)[0].green_level
box = Region(-5, 5, -5, 5, 320, 320)
print(f"G0 = {G0:.12f}; sqrt(2) pi = {math.sqrt(2) * math.pi:.9f}\n")
for frac in (1.4, 0.7, 0.35, 0.2):
    level = frac * G0
    comps = level_components(f, level, box)
    total = sum(c.circumference_do for c in comps)
    sizes = ", ".join(f"{c.circumference_do:.6f}" for c in comps)
    print(f"level {frac:4.2f} G0: {len(comps)} component(s), local degree {comps[0].local_degree}")
    print(f"    circumferences {sizes}")
    print(f"    total {total:.9f}, annulus height {annulus_height(f, level):.6f}")
