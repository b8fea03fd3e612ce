"""When do two polynomials have Schwarzians related by an affine change?

S_g = (S_f o A) a^2 exactly when A carries the critical points of g onto
those of f with multiplicities. The test recovers A from the critical
multisets alone.
"""

from schwz import AffineMap, Poly, apply_affine, iterate_equivalent, schwarzian_equivalent

f = Poly([1, 2 - 1j, 0.5, -1, 1])
A = AffineMap(1.3 - 0.4j, 0.25 + 2j)
B = AffineMap(-2, 7)
g = apply_affine(f, A, B)
r = schwarzian_equivalent(g, f)
print(f"g = B o f o A: equivalent={r.equivalent}, witness a={r.witness.a:.12f}, b={r.witness.b:.12f}")
print(f"   true A:                      a={A.a:.12f}, b={A.b:.12f}")

print("z^3 vs z^3 - 3z:", schwarzian_equivalent(Poly([0, 0, 0, 1]), Poly([0, -3, 0, 1])).equivalent)

# equivalence of f and g does not pass to iterates unless g is a conjugate
sq, shifted = Poly([0, 0, 1]), Poly([0.5, 0, 1])
print("z^2 vs z^2 + 0.5, n=1:", schwarzian_equivalent(sq, shifted).equivalent)
print("z^2 vs z^2 + 0.5, n=2:", iterate_equivalent(sq, shifted, 2).equivalent)
T = AffineMap(1, 1)
conj = apply_affine(Poly([-6, 0, 1]), T, T.inverse())
print("z^2 - 6 vs its conjugate by z + 1, n=3:", iterate_equivalent(Poly([-6, 0, 1]), conj, 3).equivalent)
