"""The power map z^d, where every quantity has a closed form.

S_{f^n}(z) / d^(2n) = (1 - d^(2n)) / (2 d^(2n) z^2), and the limit is
-2 g(z)^2 with g = 1/(2z). The derivative of the n-th iterate has size
|z|^(d^n), far outside double range for n around 12, yet the normalized
sum stays accurate because orbit derivatives are carried in scaled form.
"""

from schwz import Poly, schwarzian_iterate_normalized, schwarzian_limit

f = Poly([0, 0, 1])
z = 1.7 + 0.4j
limit = schwarzian_limit(f, z)
print(f"z = {z}, limit -2 g^2 = {limit:.12f}")
print(" n  S_n/4^n                                 closed form error   e_(n+1)/e_n")
prev = None
for n in range(1, 13):
    s = schwarzian_iterate_normalized(f, n, z).value
    exact = (1 - 4.0**n) / (2 * 4.0**n * z * z)
    e = abs(s - limit)
    ratio = "" if prev is None else f"{e / prev:.6f}"
    print(f"{n:2d}  {s:.15f}  {abs(s - exact):.1e}           {ratio}")
    prev = e

# far beyond any overflow of (f^n)'
print("n = 400:", schwarzian_iterate_normalized(f, 400, z).value)
