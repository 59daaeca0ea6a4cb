"""Finite abelian groups as products of cyclic factors, and their homomorphisms.

A group is an ordered list of moduli ``(n_0, ..., n_{k-1})`` with ``n_j >= 2``;
the empty list is the trivial group.  Elements are residue vectors.  Moduli are
kept exactly as supplied (no canonicalization): two groups are equal iff their
moduli lists are equal.

Every element has a canonical linear index in ``range(order)`` given by the
mixed-radix expansion with the *first* coordinate fastest:

    index = a_0 + n_0 * (a_1 + n_1 * (a_2 + ...))

All enumeration throughout the package follows this order.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

from .errors import NumericalError, ValidationError

#: Largest group order for which kernel/image enumeration is attempted.
ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class GroupSpec:
    """A finite abelian group Z_{n_0} x ... x Z_{n_{k-1}}."""

    moduli: tuple[int, ...]

    def __post_init__(self):
        mods = tuple(int(n) for n in self.moduli)
        object.__setattr__(self, "moduli", mods)
        for n in mods:
            if n < 2:
                raise ValidationError(f"modulus {n} < 2 (drop trivial factors instead)")

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @property
    def is_trivial(self) -> bool:
        return not self.moduli

    def identity(self) -> GroupElement:
        return GroupElement(self, (0,) * self.rank)

    def element(self, residues) -> GroupElement:
        return GroupElement(self, tuple(int(r) for r in residues))

    def from_index(self, index: int) -> GroupElement:
        if not 0 <= index < self.order:
            raise ValidationError(f"index {index} out of range for order {self.order}")
        res = []
        for n in self.moduli:
            res.append(index % n)
            index //= n
        return GroupElement(self, tuple(res))

    def index_of(self, residues) -> int:
        idx, stride = 0, 1
        for r, n in zip(residues, self.moduli):
            idx += (r % n) * stride
            stride *= n
        return idx

    def elements(self):
        """All elements in canonical index order."""
        return (self.from_index(i) for i in range(self.order))

    def exponent(self) -> int:
        return math.lcm(*self.moduli) if self.moduli else 1

    def __str__(self):
        return "x".join(f"Z{n}" for n in self.moduli) if self.moduli else "Z1"


@dataclass(frozen=True)
class GroupElement:
    group: GroupSpec
    residues: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(a) for a in self.residues)
        object.__setattr__(self, "residues", res)
        if len(res) != self.group.rank:
            raise ValidationError(
                f"element length {len(res)} != group rank {self.group.rank}"
            )
        for a, n in zip(res, self.group.moduli):
            if not 0 <= a < n:
                raise ValidationError(f"residue {a} out of range for modulus {n}")

    @property
    def index(self) -> int:
        return self.group.index_of(self.residues)

    def is_identity(self) -> bool:
        return all(a == 0 for a in self.residues)

    def __str__(self):
        return "(" + ",".join(map(str, self.residues)) + ")"


def _require_same_group(g1: GroupElement, g2: GroupElement):
    if g1.group.moduli != g2.group.moduli:
        raise ValidationError(f"group mismatch: {g1.group} vs {g2.group}")


def group_op(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """Componentwise sum mod the moduli."""
    _require_same_group(g1, g2)
    res = tuple((a + b) % n for a, b, n in zip(g1.residues, g2.residues, g1.group.moduli))
    return GroupElement(g1.group, res)


def group_inv(g: GroupElement) -> GroupElement:
    res = tuple((-a) % n for a, n in zip(g.residues, g.group.moduli))
    return GroupElement(g.group, res)


def element_order(g: GroupElement) -> int:
    if not g.group.moduli:
        return 1
    return math.lcm(*(n // math.gcd(a, n) for a, n in zip(g.residues, g.group.moduli)))


# ---------------------------------------------------------------------------
# homomorphisms


@dataclass(frozen=True)
class HomSpec:
    """Integer-matrix homomorphism between two groups.

    ``matrix[i][j]`` is the i-th target coordinate of the image of the j-th
    source generator.  Well-definedness on the quotient requires
    ``n_j * matrix[i][j] == 0 (mod m_i)`` for every entry; `hom_validate`
    checks this.
    """

    source: GroupSpec
    target: GroupSpec
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.matrix) != self.target.rank:
            raise ValidationError(
                f"matrix has {len(self.matrix)} rows, target rank is {self.target.rank}"
            )
        mat = tuple(tuple(int(x) % m for x in row)
                    for row, m in zip(self.matrix, self.target.moduli))
        for row in mat:
            if len(row) != self.source.rank:
                raise ValidationError(
                    f"matrix row length {len(row)} != source rank {self.source.rank}"
                )
        object.__setattr__(self, "matrix", mat)


def hom_validate(H: HomSpec) -> None:
    """Raise ValidationError at the first entry where n_j*M[i][j] != 0 mod m_i."""
    for i, m in enumerate(H.target.moduli):
        for j, n in enumerate(H.source.moduli):
            if (n * H.matrix[i][j]) % m != 0:
                raise ValidationError(
                    f"not a homomorphism: n_{j}*M[{i}][{j}] = "
                    f"{n}*{H.matrix[i][j]} != 0 (mod {m})"
                )


def is_valid_hom(H: HomSpec) -> bool:
    try:
        hom_validate(H)
    except ValidationError:
        return False
    return True


def hom_eval(H: HomSpec, g: GroupElement) -> GroupElement:
    if g.group.moduli != H.source.moduli:
        raise ValidationError("element does not belong to the source group")
    res = tuple(
        sum(H.matrix[i][j] * a for j, a in enumerate(g.residues)) % m
        for i, m in enumerate(H.target.moduli)
    )
    return GroupElement(H.target, res)


def _check_enumeration_cap(H: HomSpec, cap: int):
    if H.source.order > cap:
        raise ValidationError(
            f"source order {H.source.order} exceeds enumeration cap {cap}"
        )


def hom_kernel(H: HomSpec, cap: int = ENUMERATION_CAP) -> tuple[GroupElement, ...]:
    """Kernel by exhaustive enumeration, in canonical index order."""
    _check_enumeration_cap(H, cap)
    hom_validate(H)
    ker = []
    image = set()
    for g in H.source.elements():
        h = hom_eval(H, g)
        image.add(h.index)
        if h.is_identity():
            ker.append(g)
    if len(ker) * len(image) != H.source.order:  # pragma: no cover - structural identity
        raise NumericalError("|G| != |ker|*|Im| during enumeration")
    return tuple(ker)


def hom_image(H: HomSpec, cap: int = ENUMERATION_CAP) -> tuple[GroupElement, ...]:
    """Image subgroup as a tuple of target elements, sorted by canonical index."""
    _check_enumeration_cap(H, cap)
    hom_validate(H)
    seen = {}
    for g in H.source.elements():
        h = hom_eval(H, g)
        seen.setdefault(h.index, h)
    return tuple(seen[i] for i in sorted(seen))


def is_surjective(H: HomSpec) -> bool:
    return len(hom_image(H)) == H.target.order


def is_automorphism(H: HomSpec) -> bool:
    if H.source.moduli != H.target.moduli:
        return False
    if not is_valid_hom(H):
        return False
    return len(hom_image(H)) == H.source.order


def invert_automorphism(H: HomSpec) -> HomSpec:
    """Inverse map, recovered from generator images after table inversion."""
    if not is_automorphism(H):
        raise ValidationError("not an automorphism; cannot invert")
    G = H.source
    table = {hom_eval(H, g).index: g for g in G.elements()}
    cols = []
    for j in range(G.rank):
        gen = G.element(tuple(1 if t == j else 0 for t in range(G.rank)))
        cols.append(table[gen.index].residues)
    matrix = tuple(tuple(cols[j][i] for j in range(G.rank)) for i in range(G.rank))
    return HomSpec(G, G, matrix)


def identity_hom(G: GroupSpec) -> HomSpec:
    mat = tuple(tuple(1 if i == j else 0 for j in range(G.rank)) for i in range(G.rank))
    return HomSpec(G, G, mat)


def inversion_automorphism(G: GroupSpec) -> HomSpec:
    """g -> g^{-1}; an automorphism of every abelian group."""
    mat = tuple(tuple((n - 1) if i == j else 0 for j in range(G.rank))
                for i, n in enumerate(G.moduli))
    return HomSpec(G, G, mat)


def compose_homs(outer: HomSpec, inner: HomSpec) -> HomSpec:
    """outer o inner; valid whenever both factors are valid."""
    if inner.target.moduli != outer.source.moduli:
        raise ValidationError("hom composition: inner target != outer source")
    rows = []
    for i, m in enumerate(outer.target.moduli):
        rows.append(tuple(
            sum(outer.matrix[i][k] * inner.matrix[k][j] for k in range(inner.target.rank)) % m
            for j in range(inner.source.rank)
        ))
    return HomSpec(inner.source, outer.target, tuple(rows))


# ---------------------------------------------------------------------------
# product structure


def direct_product(G1: GroupSpec, G2: GroupSpec) -> GroupSpec:
    return GroupSpec(G1.moduli + G2.moduli)


def join_element(g1: GroupElement, g2: GroupElement) -> GroupElement:
    return GroupElement(direct_product(g1.group, g2.group), g1.residues + g2.residues)


def split_element(g: GroupElement, keep: int) -> tuple[GroupElement, GroupElement]:
    """Split into the first `keep` coordinates and the rest."""
    if not 0 <= keep <= g.group.rank:
        raise ValidationError(f"split point {keep} out of range")
    G1 = GroupSpec(g.group.moduli[:keep])
    G2 = GroupSpec(g.group.moduli[keep:])
    return GroupElement(G1, g.residues[:keep]), GroupElement(G2, g.residues[keep:])


def permute_coordinates(G: GroupSpec, perm) -> HomSpec:
    """Coordinate-permutation automorphism: output coordinate i = input coordinate perm[i]."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(G.rank)):
        raise ValidationError(f"{perm} is not a permutation of range({G.rank})")
    target = GroupSpec(tuple(G.moduli[p] for p in perm))
    mat = tuple(tuple(1 if j == perm[i] else 0 for j in range(G.rank))
                for i in range(target.rank))
    return HomSpec(G, target, mat)


def projection_hom(G: GroupSpec, coords) -> HomSpec:
    """Projection onto the listed coordinates (in the listed order)."""
    coords = tuple(int(c) for c in coords)
    target = GroupSpec(tuple(G.moduli[c] for c in coords))
    mat = tuple(tuple(1 if j == c else 0 for j in range(G.rank)) for c in coords)
    return HomSpec(G, target, mat)


# ---------------------------------------------------------------------------
# image restriction: rewrite an arbitrary hom as a surjection onto its image


def _abstract_basis(elems, op, ident):
    """Basis of a finite abelian group given by an element list and operation.

    ``elems`` are hashable, orderable ids; ``op(a, b)`` returns an id; ``ident``
    is the identity id.  Returns ``[(generator, order), ...]`` such that the
    group is the inner direct sum of the cyclic subgroups they generate.
    """
    if len(elems) == 1:
        return []

    def order_of(a):
        k, cur = 1, a
        while cur != ident:
            cur = op(cur, a)
            k += 1
        return k

    x = max(sorted(elems), key=order_of)
    nx = order_of(x)
    cyc = set()
    cur = ident
    for _ in range(nx):
        cyc.add(cur)
        cur = op(cur, x)
    if nx == len(elems):
        return [(x, nx)]
    # quotient by <x>: canonical representative = smallest id in the coset
    rep = {m: min(op(m, h) for h in cyc) for m in elems}
    qelems = sorted(set(rep.values()))
    qop = lambda a, b: rep[op(a, b)]
    out = [(x, nx)]
    for qgen, qorder in _abstract_basis(qelems, qop, rep[ident]):
        # any maximal-order x admits an order-preserving lift in each coset
        for h in cyc:
            cand = op(qgen, h)
            if order_of(cand) == qorder:
                out.append((cand, qorder))
                break
        else:  # pragma: no cover - excluded by the basis theorem
            raise NumericalError("no order-preserving coset lift found")
    return out


def subgroup_decomposition(members, group: GroupSpec):
    """Cyclic decomposition of a subgroup given as its full element list.

    Returns ``(basis_elements, orders)``; the subgroup is the inner direct sum
    of the cyclic groups generated by the basis elements.
    """
    idx_of = {m.index: m for m in members}
    op = lambda a, b: group_op(idx_of[a], idx_of[b]).index
    basis = _abstract_basis(sorted(idx_of), op, group.identity().index)
    return [idx_of[b] for b, _ in basis], [o for _, o in basis]


@functools.lru_cache(maxsize=None)
def surjection_onto_image(H: HomSpec) -> tuple[HomSpec, HomSpec]:
    """Rewrite H: G1 -> G2 as a surjection onto its image.

    Returns ``(surj, embed)`` where ``surj: G1 -> I`` is surjective onto a
    group ``I`` isomorphic to Im(H) and ``embed: I -> G2`` realizes the
    inclusion, with ``H == embed o surj``.  If H is already surjective it is
    returned unchanged together with the identity embedding.
    """
    hom_validate(H)
    img = hom_image(H)
    if len(img) == H.target.order:
        return H, identity_hom(H.target)

    # Coordinate-wise decomposition whenever the image is the product of its
    # projections; this keeps the restricted coordinates recognizable.
    projs = [sorted({el.residues[i] for el in img}) for i in range(H.target.rank)]
    sizes = [len(p) for p in projs]
    if math.prod(sizes) == len(img) and all(
        projs[i] == [k * (m // sizes[i]) for k in range(sizes[i])]
        for i, m in enumerate(H.target.moduli)
    ):
        kept = [i for i, d in enumerate(sizes) if d >= 2]
        new_group = GroupSpec(tuple(sizes[i] for i in kept))
        step = {i: H.target.moduli[i] // sizes[i] for i in kept}
        surj = HomSpec(H.source, new_group, tuple(
            tuple(H.matrix[i][j] // step[i] for j in range(H.source.rank)) for i in kept
        ))
        embed = HomSpec(new_group, H.target, tuple(
            tuple(step[i] if (i in kept and kept.index(i) == jj) else 0
                  for jj in range(len(kept)))
            for i in range(H.target.rank)
        ))
    else:
        basis, orders = subgroup_decomposition(list(img), H.target)
        new_group = GroupSpec(tuple(orders))
        # discrete-log table over the basis
        table = {}
        for combo in itertools.product(*(range(o) for o in orders)):
            el = H.target.identity()
            for b, k in zip(basis, combo):
                for _ in range(k):
                    el = group_op(el, b)
            table.setdefault(el.index, combo)
        if len(table) != len(img):  # pragma: no cover - defensive
            raise NumericalError("cyclic decomposition is not a direct sum")
        cols = []
        for j in range(H.source.rank):
            gen = H.source.element(tuple(1 if t == j else 0 for t in range(H.source.rank)))
            cols.append(table[hom_eval(H, gen).index])
        surj = HomSpec(H.source, new_group,
                       tuple(tuple(cols[j][i] for j in range(H.source.rank))
                             for i in range(new_group.rank)))
        embed = HomSpec(new_group, H.target,
                        tuple(tuple(basis[j].residues[i] for j in range(len(basis)))
                              for i in range(H.target.rank)))
    hom_validate(surj)
    hom_validate(embed)
    for g in H.source.elements():
        if hom_eval(embed, hom_eval(surj, g)).index != hom_eval(H, g).index:
            raise NumericalError("image factorization failed")  # pragma: no cover
    return surj, embed
