"""Decoding a small group code on a Tanner tree.

Parity constraints over an abelian group compose from the primitives: each
edge coefficient is an automorphism relabel, the constraint itself a check
factor, and repeated symbols equality factors.  Here a height-two tree over
Z4 ties four observed symbols through two twisted parity checks

    2-torsion twist:  x1 + 3*x2 + p1 = 0     (coefficient 3 is a unit of Z4)
    plain parity:     x3 + x4 + p2 = 0
    top constraint:   p1 + p2 = root

and the exact root posterior quantifies how much the checks sharpen one
symbol's channel.
"""

import numpy as np

from abelianbp import EigenList, GroupSpec, HomSpec, holevo_info
from abelianbp.trees import FactorGraphSpec, FactorNode, leaf, root_metrics, run_mp

G = GroupSpec((4,))
rng = np.random.default_rng(2)


def noisy_channel():
    v = rng.gamma(2.0, size=4)
    return EigenList(G, v * 4 / v.sum())


obs = [noisy_channel() for _ in range(4)]
print("observed symbol channels on Z4:")
for i, lam in enumerate(obs):
    print(f"  x{i + 1}: lam = {np.round(lam.values, 3)}  "
          f"I = {holevo_info(lam):.4f} bits")

unit3 = HomSpec(G, G, ((3,),))        # multiplication by the unit 3

spec = FactorGraphSpec(
    variables={**{f"x{i}": G for i in range(1, 5)},
               "x2t": G, "p1": G, "p2": G, "root": G},
    factors={
        **{f"obs{i}": leaf(f"x{i}", obs[i - 1]) for i in range(1, 5)},
        "twist": FactorNode("automorphism", ("x2", "x2t"), hom=unit3),
        "chk1": FactorNode("check", ("x1", "x2t", "p1")),
        "chk2": FactorNode("check", ("x3", "x4", "p2")),
        "top": FactorNode("check", ("p1", "p2", "root")),
    },
    root="root",
)

msg = run_mp(spec)
metrics = root_metrics(spec)
print(f"\nroot posterior: {len(msg)} heralded branches after merging")
print(f"  herald-averaged I = {metrics['avg_holevo']:.4f} bits, "
      f"PGM error = {metrics['avg_pgm_error']:.4f}")

n = 1500
errs = np.empty(n)
for i in range(n):
    from abelianbp import avg_pgm_error
    errs[i] = avg_pgm_error(run_mp(spec, mode="sampled", seed=i))
print(f"  sampled check over {n} seeds: PGM error = {errs.mean():.4f} "
      f"(+- {errs.std() / np.sqrt(n):.4f})")
