"""Tree factor graphs and exact root-directed quantum message passing.

A graph is bipartite between variables (each carrying a group alphabet) and
factors.  Supported factor kinds:

``leaf``
    Degree one; carries an incoming channel message for its variable.
``equality``
    All incident variables share one group; the message toward any edge is
    the equality-combination of the others.
``check``
    Parity constraint ``h = g1 g2 ... gd`` with the *last* edge playing h;
    toward h the inputs fold through the check rule, toward an input the
    constraint is rewritten with inverses (an automorphism relabel).
``hom``
    Edges ``(in, out)`` with a surjective homomorphism; toward `out` the
    message pushes through the coset rule, toward `in` it lifts back.
``marginalize``
    Edges ``(in, out)``; the input group is an explicit product whose first
    block is the output group.
``automorphism``
    Edges ``(in, out)`` on one group; relabeling in both directions.

Exact mode keeps full heralded mixtures (with duplicate merging and an
optional branch cap); sampled mode collapses every message to a single
sampled herald trajectory, so averaging repeated runs reproduces the exact
metrics.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .eigenlists import EigenList, useless_list
from .errors import ValidationError
from .factors import (
    apply_automorphism_m,
    check_combine_m,
    equality_combine_m,
    hom_push_m,
    lift_along_hom_m,
    marginalize_split_m,
)
from .groups import (
    GroupSpec,
    HomSpec,
    invert_automorphism,
    inversion_automorphism,
    is_automorphism,
    is_surjective,
    projection_hom,
)
from .messages import (
    DEFAULT_MERGE_TOL,
    HeraldedMessage,
    avg_holevo,
    avg_pgm_error,
    merge_duplicates,
    prune,
    pure,
    sample,
)

FACTOR_KINDS = ("leaf", "equality", "check", "hom", "marginalize", "automorphism")

DEFAULT_BRANCH_CAP = 100_000
DEFAULT_GUARD_PRUNE = 1e-12


@dataclass(frozen=True)
class FactorNode:
    kind: str
    edges: tuple[str, ...]
    message: HeraldedMessage | None = None
    hom: HomSpec | None = None
    keep: int | None = None


@dataclass
class FactorGraphSpec:
    variables: dict[str, GroupSpec]
    factors: dict[str, FactorNode]
    root: str


def leaf(var: str, message) -> FactorNode:
    if isinstance(message, EigenList):
        message = pure(message)
    return FactorNode("leaf", (var,), message=message)


def validate_tree(spec: FactorGraphSpec) -> None:
    """Check bipartite consistency, connectivity, acyclicity, and signatures."""
    if spec.root not in spec.variables:
        raise ValidationError(f"root variable {spec.root!r} is not declared")
    incident: dict[str, list[str]] = {v: [] for v in spec.variables}
    edge_count = 0
    for fid, f in spec.factors.items():
        if f.kind not in FACTOR_KINDS:
            raise ValidationError(f"factor {fid!r}: unknown kind {f.kind!r}")
        if len(set(f.edges)) != len(f.edges):
            raise ValidationError(f"factor {fid!r} repeats a variable (cycle)")
        for v in f.edges:
            if v not in spec.variables:
                raise ValidationError(f"factor {fid!r} references unknown variable {v!r}")
            incident[v].append(fid)
            edge_count += 1
        _validate_signature(spec, fid, f)
    n_nodes = len(spec.variables) + len(spec.factors)
    if edge_count != n_nodes - 1:
        raise ValidationError(
            f"not a tree: {edge_count} edges for {n_nodes} nodes (cycle or disconnect)"
        )
    # connectivity by BFS over the bipartite graph
    seen = {("v", spec.root)}
    queue = deque([("v", spec.root)])
    while queue:
        kind, node = queue.popleft()
        neighbors = (
            [("f", fid) for fid in incident[node]] if kind == "v"
            else [("v", v) for v in spec.factors[node].edges]
        )
        for nb in neighbors:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    if len(seen) != n_nodes:
        raise ValidationError("graph is disconnected from the root")


def _validate_signature(spec: FactorGraphSpec, fid: str, f: FactorNode) -> None:
    groups = [spec.variables[v] for v in f.edges]
    if f.kind == "leaf":
        if len(f.edges) != 1 or f.message is None:
            raise ValidationError(f"leaf {fid!r} needs exactly one edge and a message")
        if f.message.group.moduli != groups[0].moduli:
            raise ValidationError(f"leaf {fid!r}: message group != variable alphabet")
    elif f.kind in ("equality", "check"):
        if len(f.edges) < 2:
            raise ValidationError(f"{f.kind} factor {fid!r} needs at least two edges")
        if any(g.moduli != groups[0].moduli for g in groups):
            raise ValidationError(
                f"{f.kind} factor {fid!r} joins different alphabets "
                f"({', '.join(str(g) for g in groups)})"
            )
    elif f.kind == "hom":
        if len(f.edges) != 2 or f.hom is None:
            raise ValidationError(f"hom factor {fid!r} needs edges (in, out) and a hom")
        if f.hom.source.moduli != groups[0].moduli or f.hom.target.moduli != groups[1].moduli:
            raise ValidationError(f"hom factor {fid!r}: hom signature != edge alphabets")
        if not is_surjective(f.hom):
            raise ValidationError(
                f"hom factor {fid!r} is not surjective; restrict to its image first"
            )
    elif f.kind == "marginalize":
        if len(f.edges) != 2 or f.keep is None:
            raise ValidationError(f"marginalize factor {fid!r} needs edges (in, out) and keep")
        gin, gout = groups
        if gin.moduli[: f.keep] != gout.moduli:
            raise ValidationError(
                f"marginalize factor {fid!r}: kept block {gin.moduli[:f.keep]} != "
                f"output alphabet {gout.moduli}"
            )
    elif f.kind == "automorphism":
        if len(f.edges) != 2 or f.hom is None:
            raise ValidationError(f"automorphism factor {fid!r} needs edges (in, out) and a map")
        if groups[0].moduli != groups[1].moduli:
            raise ValidationError(f"automorphism factor {fid!r}: edge alphabets differ")
        if not is_automorphism(f.hom):
            raise ValidationError(f"automorphism factor {fid!r}: map is not an automorphism")


class _Engine:
    def __init__(self, spec, mode, rng, merge_tol, prune_eps, branch_cap):
        self.spec = spec
        self.mode = mode
        self.rng = rng
        self.merge_tol = merge_tol
        self.prune_eps = prune_eps
        self.branch_cap = branch_cap
        self.incident = {v: [] for v in spec.variables}
        for fid, f in spec.factors.items():
            for v in f.edges:
                self.incident[v].append(fid)

    def _guard(self, msg: HeraldedMessage) -> HeraldedMessage:
        if self.mode == "sampled":
            lam, labels = sample(msg, self.rng)
            return pure(lam, labels)
        if self.prune_eps > 0:
            msg = prune(msg, self.prune_eps)
        if len(msg) > self.branch_cap:
            warnings.warn(
                f"branch count {len(msg)} exceeds cap {self.branch_cap}; "
                f"pruning at {DEFAULT_GUARD_PRUNE}",
                RuntimeWarning,
            )
            msg = prune(msg, DEFAULT_GUARD_PRUNE)
        return msg

    def variable_message(self, v: str, toward: str | None) -> HeraldedMessage:
        msgs = [
            self.factor_message(fid, v)
            for fid in self.incident[v]
            if fid != toward
        ]
        if not msgs:
            return pure(useless_list(self.spec.variables[v]))
        acc = msgs[0]
        for m in msgs[1:]:
            acc = self._guard(equality_combine_m(acc, m, self.merge_tol))
        return acc

    def factor_message(self, fid: str, toward: str) -> HeraldedMessage:
        f = self.spec.factors[fid]
        if f.kind == "leaf":
            return self._guard(merge_duplicates(f.message, self.merge_tol))
        if f.kind == "equality":
            msgs = [self.variable_message(v, fid) for v in f.edges if v != toward]
            acc = msgs[0]
            for m in msgs[1:]:
                acc = self._guard(equality_combine_m(acc, m, self.merge_tol))
            return acc
        if f.kind == "check":
            inputs, out = f.edges[:-1], f.edges[-1]
            G = self.spec.variables[out]
            inv = inversion_automorphism(G)
            if toward == out:
                msgs = [self.variable_message(v, fid) for v in inputs]
            else:
                msgs = [self.variable_message(out, fid)]
                for v in inputs:
                    if v == toward:
                        continue
                    m = self.variable_message(v, fid)
                    msgs.append(apply_automorphism_m(m, inv, self.merge_tol))
            acc = msgs[0]
            for m in msgs[1:]:
                acc = self._guard(check_combine_m(acc, m, self.merge_tol))
            return acc
        if f.kind == "hom":
            vin, vout = f.edges
            if toward == vout:
                return self._guard(hom_push_m(self.variable_message(vin, fid), f.hom,
                                              self.merge_tol))
            return self._guard(lift_along_hom_m(self.variable_message(vout, fid), f.hom,
                                                self.merge_tol))
        if f.kind == "marginalize":
            vin, vout = f.edges
            if toward == vout:
                return self._guard(marginalize_split_m(self.variable_message(vin, fid),
                                                       f.keep, self.merge_tol))
            gin = self.spec.variables[vin]
            proj = projection_hom(gin, range(f.keep))
            return self._guard(lift_along_hom_m(self.variable_message(vout, fid), proj,
                                                self.merge_tol))
        if f.kind == "automorphism":
            vin, vout = f.edges
            if toward == vout:
                return self._guard(apply_automorphism_m(self.variable_message(vin, fid),
                                                        f.hom, self.merge_tol))
            return self._guard(apply_automorphism_m(self.variable_message(vout, fid),
                                                    invert_automorphism(f.hom),
                                                    self.merge_tol))
        raise ValidationError(f"unknown factor kind {f.kind!r}")  # pragma: no cover


def run_mp(spec: FactorGraphSpec, mode: str = "exact", seed: int | None = None,
           merge_tol: float = DEFAULT_MERGE_TOL, prune_eps: float = 0.0,
           branch_cap: int = DEFAULT_BRANCH_CAP) -> HeraldedMessage:
    """Root-directed message passing; returns the posterior at the root variable.

    ``exact`` mode keeps the full heralded mixture; ``sampled`` mode draws one
    herald per rule application (seed required) and returns a single-branch
    message whose distribution over repeated seeds is the exact mixture.
    """
    if mode not in ("exact", "sampled"):
        raise ValidationError(f"unknown mode {mode!r}")
    if mode == "sampled" and seed is None:
        raise ValidationError("sampled mode requires a seed")
    validate_tree(spec)
    rng = np.random.default_rng(seed)
    engine = _Engine(spec, mode, rng, merge_tol, prune_eps, branch_cap)
    return engine.variable_message(spec.root, None)


def root_metrics(spec: FactorGraphSpec, mode: str = "exact", seed: int | None = None,
                 **kwargs) -> dict:
    msg = run_mp(spec, mode=mode, seed=seed, **kwargs)
    return {"avg_holevo": avg_holevo(msg), "avg_pgm_error": avg_pgm_error(msg)}
