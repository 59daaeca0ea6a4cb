"""Turbo coupling and Monte-Carlo density evolution.

Density evolution tracks a population of extrinsic eigen lists on the symbol
group.  One update draws i.i.d. a priori lists for every symbol of a decoding
window from the current population, runs the sampled forward-backward
recursion of one constituent on that window, and records the center symbol's
extrinsic list; the posterior error is the PGM error of
``extrinsic * systematic * a priori`` at the center.  Under the
random-interleaver ensemble the exchange between constituents is exactly this
population resampling, so no permutation is materialized.

The window recursion is the trellis calculus specialized to sampled
mode and vectorized across the population: every message is a single eigen
list, so a population is a dense array and each section update is a handful
of table-driven gathers.  All reductions use `numpy.einsum` without BLAS so
results are bit-identical regardless of thread count.

Extrinsic convention: the trellis-side message at the center omits both
symbol-side leaves (channel observation and a priori) of the center symbol;
since marginalization commutes with symbol-side equality combination, the
posterior formula above reproduces the full branch marginal exactly while
keeping the constituent exchange free of double counting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .characters import dual_map_table, tables_for
from .eigenlists import EigenList, holevo_info, useless_list
from .errors import ValidationError
from .factors import equality_fold, lift_along_hom
from .groups import GroupSpec
from .trellis import (
    TrellisSpec,
    next_state_hom,
    symbol_projection,
    validate_trellis,
)


def channel_family(q: int, lam0: float) -> EigenList:
    """One-parameter family [lam0, (q-lam0)/(q-1), ...] on Z_q.

    lam0 = q is the useless channel, lam0 = 1 the perfect one; values below 1
    would push the tail entries past 1 and are rejected.
    """
    if q < 2:
        raise ValidationError("channel family needs q >= 2")
    if not 1.0 <= lam0 <= q:
        raise ValidationError(f"family parameter {lam0} outside [1, {q}]")
    rest = (q - lam0) / (q - 1)
    return EigenList(GroupSpec((q,)), [lam0] + [rest] * (q - 1))


def holevo_threshold(q: int, rate) -> float:
    """The lam0 where the family's Holevo information meets rate * log2(q).

    The information is strictly decreasing in lam0 on [1, q], so plain
    bisection resolves the crossing.
    """
    rate = float(Fraction(rate) if isinstance(rate, str) else rate)
    if not 0.0 < rate < 1.0:
        raise ValidationError("rate must lie in (0, 1)")
    target = rate * math.log2(q)
    lo, hi = 1.0, float(q)
    for _ in range(64):
        mid = (lo + hi) / 2
        if holevo_info(channel_family(q, mid)) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    return (lo + hi) / 2


@dataclass(frozen=True)
class TurboSpec:
    """Two constituent encoders coupled through the shared symbol sequence.

    ``systematic_mult`` counts channel uses of the systematic symbol (copies
    are equality-combined); ``parity_mults[c]`` likewise for constituent c's
    parity streams.  Rate bookkeeping: one information symbol per
    ``systematic_mult + sum_c parity_mults[c] * len(outputs_c)`` channel uses.
    """

    constituents: tuple[TrellisSpec, TrellisSpec]
    systematic_mult: int = 1
    parity_mults: tuple[int, int] = (1, 1)
    target_rate: Fraction | None = None

    def __post_init__(self):
        c1, c2 = self.constituents
        if c1.symbol_group.moduli != c2.symbol_group.moduli:
            raise ValidationError("constituents must share the symbol group")
        validate_trellis(c1)
        validate_trellis(c2)
        if self.systematic_mult < 0 or any(p < 0 for p in self.parity_mults):
            raise ValidationError("stream multiplicities must be nonnegative")
        if self.systematic_mult == 0 and all(
            p * len(c.outputs) == 0
            for p, c in zip(self.parity_mults, self.constituents)
        ):
            raise ValidationError("turbo spec carries no informative stream")

    @property
    def symbol_group(self) -> GroupSpec:
        return self.constituents[0].symbol_group

    @property
    def rate(self) -> Fraction:
        uses = self.systematic_mult + sum(
            p * len(c.outputs) for p, c in zip(self.parity_mults, self.constituents)
        )
        return Fraction(1, uses)


def standard_turbo(q: int = 3, p=(1, 0, 1), qpoly=(1, 1, 1),
                   systematic_mult: int = 1) -> TurboSpec:
    """Two identical transfer-function constituents over Z_q."""
    from .trellis import transfer_function_trellis

    c = transfer_function_trellis(list(p), list(qpoly), q)
    return TurboSpec((c, c), systematic_mult=systematic_mult)


@dataclass(frozen=True)
class DEConfig:
    """Density-evolution experiment parameters.

    The window recursion always samples herald values (the exact mixture
    would grow super-exponentially and adds nothing to a Monte-Carlo
    population); pruning therefore never applies inside windows.  Runs are
    deterministic given `master_seed` and independent of thread count.
    """

    population: int = 2000
    max_iterations: int = 100
    window: int = 41
    err_threshold: float = 1e-3
    stall_rel: float = 1e-3
    stall_window: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.population < 1:
            raise ValidationError("population must be positive")
        if self.window % 2 == 0 or self.window < 1:
            raise ValidationError("window length must be odd (center symbol)")
        if not 0.0 < self.err_threshold < 1.0:
            raise ValidationError("error threshold must lie in (0, 1)")


class _WindowEngine:
    """Population-vectorized sampled forward-backward on one constituent.

    States, branches, and symbol messages are dense float arrays with one row
    per population sample; herald sampling consumes one uniform per sample per
    marginalization, in a fixed order (a priori draws, forward sweep, backward
    sweep, center extrinsic).
    """

    def __init__(self, trellis: TrellisSpec, lam_ch: EigenList,
                 systematic_mult: int, parity_mult: int):
        validate_trellis(trellis)
        if lam_ch.group.moduli != trellis.output_group.moduli:
            raise ValidationError("channel eigen list is not on the output group")
        if trellis.output_group.moduli != trellis.symbol_group.moduli:
            raise ValidationError(
                "window engine expects parity symbols on the symbol alphabet"
            )
        G = trellis.symbol_group
        self.q = G.order
        self.m = trellis.memory
        self.ns = self.q ** self.m
        self.nb = self.q ** (self.m + 1)
        tb = tables_for(trellis.branch_group)
        tq = tables_for(G)
        self.sub_q = tq.sub

        def fold_copies(lam, k):
            return equality_fold([lam] * k) if k >= 1 else None

        parity_obs = fold_copies(lam_ch, parity_mult)
        self.parity_matrix = None
        if parity_obs is not None and trellis.outputs:
            lifts = [lift_along_hom(parity_obs, L) for L in trellis.outputs]
            branch_obs = equality_fold(lifts)
            gathered = branch_obs.values[tb.sub]       # [c, c'] = P[c - c']
            self.parity_matrix = np.ascontiguousarray(gathered.T)   # [c', c]

        sysfold = fold_copies(lam_ch, systematic_mult)
        self.sys_matrix = None
        if sysfold is not None:
            self.sys_matrix = np.ascontiguousarray(sysfold.values[self.sub_q].T)

        pull_sym = dual_map_table(symbol_projection(trellis))
        self.sub_sym = tb.sub[:, pull_sym]             # (nb, q)
        self.next_idx = dual_map_table(next_state_hom(trellis))   # (ns,)
        self.sub_next = tb.sub[:, self.next_idx]       # (nb, ns)
        self.phi = dual_map_table(trellis.section_automorphism)   # (nb,)

    # -- batched primitives ------------------------------------------------

    def boundary(self, n: int) -> np.ndarray:
        state = np.zeros((n, self.ns))
        state[:, 0] = self.ns
        return state

    def _sample_rows(self, p: np.ndarray, rng) -> np.ndarray:
        p = np.clip(p, 0.0, None)
        cs = np.cumsum(p, axis=1)
        u = rng.random(p.shape[0]) * cs[:, -1]
        idx = (cs < u[:, None]).sum(axis=1)
        return np.minimum(idx, p.shape[1] - 1)

    def _adjoin(self, state: np.ndarray) -> np.ndarray:
        branch = np.zeros((state.shape[0], self.nb))
        branch.reshape(-1, self.ns, self.q)[:, :, 0] = self.q * state
        return branch

    def _combine_parity(self, branch: np.ndarray) -> np.ndarray:
        if self.parity_matrix is None:
            return branch
        return np.einsum("sp,pc->sc", branch, self.parity_matrix) / self.nb

    def _combine_symbol(self, branch: np.ndarray, sym: np.ndarray) -> np.ndarray:
        return np.einsum("scj,sj->sc", branch[:, self.sub_sym], sym) / self.q

    def _combine_backward(self, branch: np.ndarray, bwd: np.ndarray) -> np.ndarray:
        return np.einsum("scj,sj->sc", branch[:, self.sub_next], bwd) / self.ns

    def symbol_messages(self, apriori: np.ndarray) -> np.ndarray:
        """sysfold * apriori over a trailing-q-axis array."""
        if self.sys_matrix is None:
            return apriori
        return np.einsum("...p,pc->...c", apriori, self.sys_matrix) / self.q

    def forward(self, state, sym, rng):
        branch = self._combine_symbol(self._combine_parity(self._adjoin(state)), sym)
        branch = branch[:, self.phi]
        arr = branch.reshape(-1, self.q, self.ns)      # [sample, herald, next state]
        p = arr.sum(axis=2) / self.nb
        idx = self._sample_rows(p, rng)
        sel = np.take_along_axis(arr, idx[:, None, None], axis=1)[:, 0, :]
        psel = np.take_along_axis(p, idx[:, None], axis=1)[:, 0]
        return sel / (self.q * psel[:, None])

    def backward(self, state, sym, rng):
        branch = np.zeros((state.shape[0], self.nb))
        branch[:, self.next_idx] = self.q * state
        branch = self._combine_symbol(self._combine_parity(branch), sym)
        arr = branch.reshape(-1, self.ns, self.q)      # [sample, prev state, herald]
        p = arr.sum(axis=1) / self.nb
        idx = self._sample_rows(p, rng)
        sel = np.take_along_axis(arr, idx[:, None, None], axis=2)[:, :, 0]
        psel = np.take_along_axis(p, idx[:, None], axis=1)[:, 0]
        return sel / (self.q * psel[:, None])

    def extrinsic(self, fwd, bwd, rng):
        branch = self._combine_parity(self._adjoin(fwd))
        branch = self._combine_backward(branch, bwd)
        arr = branch.reshape(-1, self.ns, self.q)      # [sample, herald, symbol]
        p = arr.sum(axis=2) / self.nb
        idx = self._sample_rows(p, rng)
        sel = np.take_along_axis(arr, idx[:, None, None], axis=1)[:, 0, :]
        psel = np.take_along_axis(p, idx[:, None], axis=1)[:, 0]
        return sel / (self.ns * psel[:, None])

    def posterior(self, ext, apriori):
        tmp = self.symbol_messages(ext)
        post = np.einsum("scj,sj->sc", tmp[:, self.sub_q], apriori) / self.q
        return np.clip(post, 0.0, None)

    def pgm_errors(self, lists: np.ndarray) -> np.ndarray:
        return 1.0 - (np.sqrt(np.clip(lists, 0.0, None)).sum(axis=1) / self.q) ** 2


def _engines(spec: TurboSpec, lam_ch: EigenList):
    return [
        _WindowEngine(c, lam_ch, spec.systematic_mult, p)
        for c, p in zip(spec.constituents, spec.parity_mults)
    ]


def de_iteration(spec: TurboSpec, population: np.ndarray, lam_ch: EigenList,
                 rng, window: int = 41, constituent: int = 0,
                 engine: _WindowEngine | None = None):
    """One constituent update of the extrinsic population.

    Returns ``(new_population, posterior_error)``.  ``population`` is an
    array of eigen lists on the symbol group, one per row; the new population
    holds the sampled center extrinsics of that many window decodes.
    """
    if population.ndim != 2 or population.shape[0] < 1:
        raise ValidationError("population must be a nonempty 2-d array")
    if engine is None:
        engine = _engines(spec, lam_ch)[constituent]
    n = population.shape[0]
    center = window // 2
    apr_idx = rng.integers(0, population.shape[0], size=(n, window))
    apr = population[apr_idx]                          # (n, window, q)
    sym = engine.symbol_messages(apr)
    fwd = engine.boundary(n)
    for t in range(center):
        fwd = engine.forward(fwd, sym[:, t], rng)
    bwd = engine.boundary(n)
    for t in range(window - 1, center, -1):
        bwd = engine.backward(bwd, sym[:, t], rng)
    ext = engine.extrinsic(fwd, bwd, rng)
    post = engine.posterior(ext, apr[:, center])
    err = float(engine.pgm_errors(post).mean())
    return ext, err


@dataclass
class DEResult:
    converged: bool
    trajectory: list[float] = field(default_factory=list)
    stalled: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trajectory)


def de_run(spec: TurboSpec, config: DEConfig, channel, seed: int | None = None) -> DEResult:
    """Iterate density evolution until convergence, stall, or the cap.

    ``channel`` is a family parameter lam0 or an eigen list on the symbol
    group.  Deterministic given the seed (default: the config's master seed);
    per-iteration generators derive from (seed, iteration).
    """
    if isinstance(channel, EigenList):
        lam_ch = channel
    else:
        lam_ch = channel_family(spec.symbol_group.order, float(channel))
    seed = config.master_seed if seed is None else seed
    engines = _engines(spec, lam_ch)
    pop = np.tile(useless_list(spec.symbol_group).values, (config.population, 1))
    result = DEResult(converged=False)
    for it in range(config.max_iterations):
        rng = np.random.default_rng(np.random.SeedSequence((seed, it)))
        engine = engines[it % 2]
        pop, err = de_iteration(spec, pop, lam_ch, rng, window=config.window,
                                engine=engine)
        result.trajectory.append(err)
        if err < config.err_threshold:
            result.converged = True
            return result
        if it + 1 >= 2 * config.stall_window:
            hist = result.trajectory
            prev = min(hist[: -config.stall_window])
            recent = min(hist[-config.stall_window:])
            if recent > prev * (1.0 - config.stall_rel):
                result.stalled = True
                return result
    return result


def threshold_bisect(spec: TurboSpec, config: DEConfig, resolution: float = 0.01,
                     trials: int = 3) -> dict:
    """Bisect the family parameter for the largest converging channel.

    Each probe is decided by the majority of `trials` independently seeded
    runs, suppressing Monte-Carlo flips near the threshold.
    """
    q = spec.symbol_group.order
    lo, hi = 1.0, float(q)
    probes = []

    def probe(lam0, k):
        wins = 0
        for trial in range(trials):
            seed_val = int(np.random.SeedSequence(
                (config.master_seed, k, trial)).generate_state(1)[0])
            res = de_run(spec, config, lam0, seed=seed_val)
            wins += int(res.converged)
        ok = wins * 2 > trials
        probes.append({"lambda0": lam0, "converged": ok,
                       "wins": wins, "trials": trials})
        return ok

    k = 0
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if probe(mid, k):
            lo = mid
        else:
            hi = mid
        k += 1
    return {"lambda_de": (lo + hi) / 2, "lo": lo, "hi": hi, "probes": probes}


def heatmap(spec: TurboSpec, config: DEConfig, resolution: float = 0.05,
            lambda0_range=None, ray_only: bool = False, trials: int = 1) -> list[dict]:
    """DE success frequency over the ternary eigen-list simplex.

    Emits rows (lambda0, lambda1, lambda2, success_freq) for the grid with
    barycentric step `resolution`; ``ray_only`` restricts to the symmetric ray
    lambda1 == lambda2, ``lambda0_range`` clips the first coordinate.
    """
    G = spec.symbol_group
    q = G.order
    if q != 3:
        raise ValidationError("the simplex heatmap is defined for q = 3")
    lo0, hi0 = lambda0_range if lambda0_range is not None else (0.0, float(q))
    rows = []
    n_steps = int(round(q / resolution))
    point_id = 0
    for i in range(n_steps + 1):
        lam0 = i * resolution
        if lam0 < lo0 - 1e-12 or lam0 > hi0 + 1e-12:
            continue
        if ray_only:
            lam1_values = [(q - lam0) / 2]
        else:
            lam1_values = [j * resolution for j in range(n_steps + 1 - i)]
        for lam1 in lam1_values:
            lam2 = q - lam0 - lam1
            if lam2 < -1e-9:
                continue
            lam = EigenList(G, [lam0, lam1, max(lam2, 0.0)])
            wins = 0
            for trial in range(trials):
                seed_val = int(np.random.SeedSequence(
                    (config.master_seed, 7_000_000 + point_id, trial)
                ).generate_state(1)[0])
                wins += int(de_run(spec, config, lam, seed=seed_val).converged)
            rows.append({"lambda0": lam0, "lambda1": lam1, "lambda2": max(lam2, 0.0),
                         "success_freq": wins / trials})
            point_id += 1
    return rows
