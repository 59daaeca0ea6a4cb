"""Groups, characters, and dual maps.

Builds Z3 x Z2 and Z4 x Z3 x Z2, evaluates characters, checks orthogonality
numerically, and walks through the dual map and coset decomposition of the
homomorphism (a, b, c) -> (a + 2c, b).
"""

import numpy as np

from abelianbp import (
    CharIndex,
    GroupSpec,
    HomSpec,
    char_eval,
    coset_table_for_hom,
    dual_image,
    dual_map,
    group_inv,
    group_op,
    hom_eval,
    hom_kernel,
)
from abelianbp.characters import tables_for

G = GroupSpec((3, 2))
print(f"group {G}: order {G.order}, elements in canonical order (first coordinate fastest):")
print(" ", [g.residues for g in G.elements()])

a, b = G.element((1, 1)), G.element((2, 1))
print(f"\n{a} * {b} = {group_op(a, b)},   {a}^-1 = {group_inv(a)}")

chi = CharIndex(G, (1, 0))
print(f"\n{chi} evaluated along Z3 x {{0}}:",
      [np.round(char_eval(chi, G.element((x, 0))), 4) for x in range(3)])

chars = tables_for(G).chars
gram = chars.conj().T @ chars
print("character orthogonality max deviation:",
      float(np.max(np.abs(gram - G.order * np.eye(G.order)))))

print("\n--- dual side of a homomorphism ---")
G1, G2 = GroupSpec((4, 3, 2)), GroupSpec((4, 3))
phi = HomSpec(G1, G2, ((1, 0, 2), (0, 1, 0)))       # (a,b,c) -> (a+2c, b)
print("phi(2,0,1) =", hom_eval(phi, G1.element((2, 0, 1))))
print("kernel:", [k.residues for k in hom_kernel(phi)])

for (r, s) in [(1, 0), (2, 1), (3, 2)]:
    pulled = dual_map(phi, CharIndex(G2, (r, s)))
    print(f"dual map of xi_{(r, s)} -> chi_{pulled.residues}")

img = dual_image(phi)
print(f"dual image: {img.size} of {G1.order} characters (those trivial on the kernel)")
ct = coset_table_for_hom(phi)
print("coset representatives:", [G1.from_index(i).residues for i in ct.reps])
