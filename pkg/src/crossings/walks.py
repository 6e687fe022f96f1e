"""Random-walk trajectories and their crossing structure.

The scalar API (:func:`simulate_walk`, :func:`extract_crossings`) mirrors the
definitions directly: crossing times of level 0 are the steps where the walk
changes sign class, with 0 belonging to the nonnegative class everywhere
(``S_{k-1} < 0 <= S_k`` or ``S_{k-1} >= 0 > S_k``); the overshoot is the
position at the crossing, the undershoot the position one step before.

The batch engines at the bottom run many independent walkers to their first
entrance into a target set, in geometrically growing column blocks with the
active set compacted after every block.  They are the hot loop behind the
statistical verification suites: lattice walks run in exact integer span
units, all reductions are vectorized, and identical (law, starts, seed)
reproduce identical output bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .laws import IncrementLaw

__all__ = [
    "CrossingTrace",
    "TargetSet",
    "EntranceEvent",
    "simulate_walk",
    "simulate_walk_array",
    "extract_crossings",
    "upcrossing_subchain",
    "downcrossing_subchain",
    "count_level_crossings",
    "entrance_sampler",
    "extract_entrance_events",
    "first_entrance_halfline",
    "first_entrance_target",
    "crossing_count_batch",
    "overshoot_average_on_path",
    "quadrant_entrance_scan",
    "split_streams",
    "dump_trajectory",
    "trace_to_csv",
]


def split_streams(seed, n: int) -> list[np.random.Generator]:
    """Independent child streams k = 0..n-1 of a master seed.

    Split rule (stable across runs and worker counts): child k is
    ``PCG64(SeedSequence(seed, spawn_key=(k,)))``.
    """
    return [np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))
            for k in range(n)]


# ---------------------------------------------------------------------------
# target sets

@dataclass(frozen=True)
class TargetSet:
    """A Borel target set with a total, deterministic membership predicate.

    ``contains`` accepts an array of points of shape (..., d) (just (...,) for
    d = 1) and returns a boolean array of shape (...).  ``kind`` tags the
    shapes the engines can fast-path ("halfline+", "halfline-", "orthant+",
    "orthant-"); anything else goes through the generic predicate route.
    ``interior_nonempty`` is a user assertion, not verified.
    """

    label: str
    contains: Callable[[np.ndarray], np.ndarray]
    kind: str = "generic"
    interior_nonempty: bool = True

    def __contains__(self, x) -> bool:
        return bool(self.contains(np.asarray(x, dtype=float)))

    def complement(self) -> "TargetSet":
        swap = {"halfline+": "halfline-", "halfline-": "halfline+",
                "orthant+": "orthant+c", "orthant-": "orthant-c"}
        fn = self.contains
        return TargetSet(label=f"complement({self.label})",
                         contains=lambda x: ~fn(x),
                         kind=swap.get(self.kind, "generic"),
                         interior_nonempty=True)

    @staticmethod
    def half_line(nonneg: bool = True) -> "TargetSet":
        if nonneg:
            return TargetSet("[0,inf)", lambda x: np.asarray(x) >= 0, "halfline+")
        return TargetSet("(-inf,0)", lambda x: np.asarray(x) < 0, "halfline-")

    @staticmethod
    def orthant(positive: bool = True) -> "TargetSet":
        """Closed nonnegative orthant [0,inf)^d, or the open negative one."""
        if positive:
            return TargetSet("[0,inf)^d",
                             lambda x: np.all(np.asarray(x) >= 0, axis=-1), "orthant+")
        return TargetSet("(-inf,0)^d",
                         lambda x: np.all(np.asarray(x) < 0, axis=-1), "orthant-")

    @staticmethod
    def window(points: Iterable) -> "TargetSet":
        """Finite set of points (scalars for d = 1, tuples for d > 1)."""
        pts = np.asarray(list(points), dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        d = pts.shape[1]

        def contains(x):
            x = np.asarray(x, dtype=float)
            xd = x[..., None] if d == 1 else x
            hit = np.zeros(xd.shape[:-1], dtype=bool)
            for p in pts:
                hit |= np.all(xd == p, axis=-1)
            return hit

        return TargetSet(f"window({pts.shape[0]} pts)", contains, "window")

    @staticmethod
    def box_union(boxes: Sequence[tuple], d: int = 1) -> "TargetSet":
        """Union of closed boxes [lo, hi] (per-axis pairs; scalars for d = 1)."""
        norm = [(np.broadcast_to(np.asarray(lo, dtype=float), (d,)),
                 np.broadcast_to(np.asarray(hi, dtype=float), (d,)))
                for lo, hi in boxes]

        def contains(x):
            x = np.asarray(x, dtype=float)
            xd = x[..., None] if d == 1 else x
            hit = np.zeros(xd.shape[:-1], dtype=bool)
            for lo, hi in norm:
                hit |= np.all((xd >= lo) & (xd <= hi), axis=-1)
            return hit

        return TargetSet(f"boxes({len(norm)})", contains, "boxes")

    @staticmethod
    def from_predicate(fn: Callable, label: str = "predicate",
                       interior_nonempty: bool = True) -> "TargetSet":
        vec = np.vectorize(fn, otypes=[bool])

        def contains(x):
            x = np.asarray(x)
            if x.ndim >= 2:  # (..., d): apply on the last axis
                flat = x.reshape(-1, x.shape[-1])
                return np.array([bool(fn(p)) for p in flat]).reshape(x.shape[:-1])
            return vec(x)

        return TargetSet(label, contains, "generic", interior_nonempty)


@dataclass(frozen=True)
class EntranceEvent:
    """First entrance of a walk into a set A from its complement."""

    entry_index: int          # T: the step at which S_{T-1} in A^c, S_T in A
    entry_point: np.ndarray | float | None
    pre_exit_point: np.ndarray | float | None
    censored: bool            # horizon hit first: the cemetery outcome


# ---------------------------------------------------------------------------
# scalar trajectory API

def simulate_walk(law: IncrementLaw, start, n_steps: int,
                  rng: np.random.Generator, chunk: int = 1 << 14) -> Iterator:
    """Lazily yield S_0, S_1, ..., S_{n_steps}.

    Identical (law, start, seed) produce identical output.  For lattice laws
    the start must lie on the state-space lattice.
    """
    if law.is_lattice:
        law.require_lattice_point(start)
    if law.d == 1:
        pos = float(np.asarray(start, dtype=float))
        yield pos
        done = 0
        while done < n_steps:
            k = min(chunk, n_steps - done)
            inc = law.sample(rng, k)
            for v in np.cumsum(inc):
                yield pos + float(v)
            pos += float(np.sum(inc))
            done += k
    else:
        pos = np.asarray(start, dtype=float).copy()
        yield pos.copy()
        done = 0
        while done < n_steps:
            k = min(chunk, n_steps - done)
            inc = law.sample(rng, k)
            block = pos + np.cumsum(inc, axis=0)
            for row in block:
                yield row.copy()
            pos = block[-1]
            done += k


def simulate_walk_array(law, start, n_steps, rng) -> np.ndarray:
    """Materialized trajectory, for fixtures and dumps only."""
    if law.is_lattice:
        law.require_lattice_point(start)
    inc = law.sample(rng, n_steps)
    if law.d == 1:
        out = np.empty(n_steps + 1)
        out[0] = start
        np.cumsum(inc, out=out[1:])
        out[1:] += out[0]
    else:
        out = np.empty((n_steps + 1, law.d))
        out[0] = start
        out[1:] = np.asarray(start, dtype=float) + np.cumsum(inc, axis=0)
    return out


@dataclass(frozen=True)
class CrossingTrace:
    """Crossing times, overshoots and undershoots of a 1-d path.

    ``crossing_times[k]`` is the (1-based) step of the k-th sign-class change;
    ``overshoots[k] = S_{T_k}``, ``undershoots[k] = S_{T_k - 1}``.
    ``start_sign`` is 1 iff S_0 < 0.
    """

    crossing_times: np.ndarray   # int64, strictly increasing
    overshoots: np.ndarray
    undershoots: np.ndarray
    n_steps: int
    start_sign: int

    def L(self, n: int) -> int:
        """Number of crossings up to time n."""
        return int(np.searchsorted(self.crossing_times, n, side="right"))


def extract_crossings(path, level: float = 0.0) -> CrossingTrace:
    """Crossing structure of a finite 1-d path around ``level`` (default 0)."""
    path = np.asarray(path, dtype=float)
    if path.ndim != 1:
        raise ValueError("crossing extraction requires a one-dimensional path")
    cls = path >= level
    change = cls[1:] != cls[:-1]
    times = np.nonzero(change)[0] + 1
    return CrossingTrace(
        crossing_times=times.astype(np.int64),
        overshoots=path[times],
        undershoots=path[times - 1],
        n_steps=len(path) - 1,
        start_sign=int(path[0] < level),
    )


def upcrossing_subchain(trace: CrossingTrace) -> tuple[np.ndarray, np.ndarray]:
    """Overshoots and undershoots at up-crossings: indices 2n - 1(S_0 < 0)."""
    first = 0 if trace.start_sign else 1  # 0-based offset of the first up-crossing
    return trace.overshoots[first::2], trace.undershoots[first::2]


def downcrossing_subchain(trace: CrossingTrace) -> np.ndarray:
    """Overshoots at down-crossings: indices 2n - 1(S_0 >= 0)."""
    first = 1 if trace.start_sign else 0
    return trace.overshoots[first::2]


def count_level_crossings(path, levels) -> dict:
    """Per-level (up, down) crossing counts of a 1-d path.

    up(a)   = #{i < n : S_i < a <= S_{i+1}}
    down(a) = #{i < n : S_i >= a > S_{i+1}}
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 1:
        raise ValueError("level crossing counts require a one-dimensional path")
    prev, cur = path[:-1], path[1:]
    out = {}
    for a in np.atleast_1d(np.asarray(levels, dtype=float)):
        up = int(np.sum((prev < a) & (cur >= a)))
        down = int(np.sum((prev >= a) & (cur < a)))
        out[float(a)] = (up, down)
    return out


def extract_entrance_events(path, target: TargetSet):
    """All entrance events of a materialized path into ``target``.

    Returns (times, entry_points, pre_exit_points); the k-th pre-exit state
    precedes the k-th entry state by exactly one step of the path.
    """
    path = np.asarray(path, dtype=float)
    in_a = target.contains(path)
    hit = ~in_a[:-1] & in_a[1:]
    times = np.nonzero(hit)[0] + 1
    return times.astype(np.int64), path[times], path[times - 1]


# ---------------------------------------------------------------------------
# batch first-entrance engines

@dataclass
class EntranceBatch:
    """Result of running a batch of walkers to their first entrance."""

    entry: np.ndarray          # real units; nan rows where censored
    pre_entry: np.ndarray
    steps: np.ndarray          # entrance time T; horizon where censored
    censored: np.ndarray
    up_counts: np.ndarray | None = None     # (n, n_levels)
    down_counts: np.ndarray | None = None
    occupancy: np.ndarray | None = None     # (n, n_window_points)

    @property
    def censor_rate(self) -> float:
        return float(self.censored.mean()) if len(self.censored) else 0.0


def _draw_units(law, rng, shape, dtype=np.int64):
    """Increment draws: integer span units for lattice laws, float64 otherwise."""
    if not law.is_lattice:
        return law.sample(rng, shape)
    vals = law.points_int.astype(dtype)
    m = len(vals)
    if np.all(law.probs == 1.0 / m):
        return vals[rng.integers(0, m, shape, dtype=np.uint8 if m < 256 else np.int64)]
    u = rng.random(shape)
    cum = law._cumprobs
    if m == 2:
        return np.where(u < cum[0], vals[0], vals[1])
    if m == 3:
        return np.where(u < cum[0], vals[0], np.where(u < cum[1], vals[1], vals[2]))
    return vals[np.searchsorted(cum, u, side="right")]


def _lattice_pos_dtype(law, horizon: int, starts_units) -> type:
    """int32 positions when the worst-case range stays far inside the type."""
    vmax = int(np.max(np.abs(law.points_int)))
    smax = int(np.max(np.abs(starts_units))) if np.size(starts_units) else 0
    return np.int32 if smax + vmax * (horizon + 2) < 2**30 else np.int64


def first_entrance_halfline(law, starts, into_nonneg: bool, horizon: int,
                            rng: np.random.Generator, *,
                            levels=None, occupancy_points=None,
                            count_start_occupancy: bool = True,
                            block0: int = 32, area_cap: int = 1 << 24,
                            col_cap: int = 1 << 20) -> EntranceBatch:
    """Run 1-d walkers to their first entrance into [0,inf) or (-inf,0).

    With ``levels`` given, also counts up/down-crossings of each level over
    the window [0, T] of pairs (i.e. pairs (S_i, S_{i+1}) with i < T); with
    ``occupancy_points`` given, counts visits to each point over states
    S_k, k < T (including S_0 unless ``count_start_occupancy`` is False).
    Walkers that exhaust ``horizon`` are censored; their entry is nan and
    their partial counts remain in place for the caller to mask.
    """
    if law.d != 1:
        raise ValueError("halfline entrance engine is one-dimensional")
    starts = np.atleast_1d(np.asarray(starts, dtype=float))
    n = starts.shape[0]
    lattice = law.is_lattice
    if lattice:
        unit = law.h
        pos = law.require_lattice_point(starts)
        if levels is not None:
            levels_u = law.require_lattice_point(np.asarray(levels, dtype=float))
        if occupancy_points is not None:
            occ_pts = law.require_lattice_point(np.asarray(occupancy_points, dtype=float))
    else:
        unit = 1.0
        pos = starts.copy()
        if levels is not None:
            levels_u = np.asarray(levels, dtype=float)
        if occupancy_points is not None:
            occ_pts = np.asarray(occupancy_points, dtype=float)

    entry = np.full(n, np.nan)
    pre_entry = np.full(n, np.nan)
    steps = np.full(n, horizon, dtype=np.int64)
    censored = np.ones(n, dtype=bool)
    updiff = dndiff = occ = None
    lev_order = occ_order = None
    if levels is not None:
        lev_order = np.argsort(levels_u, kind="stable")
        lev_sorted = np.asarray(levels_u)[lev_order]
        # crossing events are sparse: accumulate range increments per walker
        # in a difference array over the sorted levels, integrate at the end
        updiff = np.zeros((n, len(lev_sorted) + 1), dtype=np.int64)
        dndiff = np.zeros((n, len(lev_sorted) + 1), dtype=np.int64)
    if occupancy_points is not None:
        occ_order = np.argsort(occ_pts, kind="stable")
        occ_sorted = np.asarray(occ_pts)[occ_order]
        occ_lo, occ_hi = occ_sorted[0], occ_sorted[-1]
        occ = np.zeros((n, len(occ_sorted)), dtype=np.int64)
        if count_start_occupancy:
            idx = np.searchsorted(occ_sorted, pos)
            ok = (idx < len(occ_sorted))
            ok[ok] &= occ_sorted[idx[ok]] == pos[ok]
            np.add.at(occ, (np.nonzero(ok)[0], idx[ok]), 1)

    if lattice:
        pos = pos.astype(_lattice_pos_dtype(law, horizon, pos))
    active = np.arange(n)
    elapsed = 0
    block = block0
    while active.size and elapsed < horizon:
        cols = min(block, horizon - elapsed, col_cap,
                   max(1, area_cap // active.size))
        inc = _draw_units(law, rng, (active.size, cols), dtype=pos.dtype)
        # positions buffer with the current state prepended: pair p is
        # (X[:, p], X[:, p+1]); all windows below are views, no copies
        X = np.empty((active.size, cols + 1), dtype=pos.dtype)
        X[:, 0] = pos
        np.cumsum(inc, axis=1, out=X[:, 1:])
        X[:, 1:] += pos[:, None]
        C = X >= 0
        HIT = (~C[:, :-1] & C[:, 1:]) if into_nonneg else (C[:, :-1] & ~C[:, 1:])
        found = HIT.any(axis=1)
        j = HIT.argmax(axis=1)
        rows = np.nonzero(found)[0]
        jf = j[rows]

        if updiff is not None or occ is not None:
            # pair p is kept while p < thr: all pairs for walkers still running,
            # pairs up to and including the entry pair for finished ones
            thr = np.full(active.size, cols, dtype=np.int64)
            thr[rows] = jf + 1
        if updiff is not None:
            # R[:, p] = number of levels <= X[:, p]; pair p crosses up the
            # levels with sorted index in [R_prev, R_cur), down the reverse
            R = np.zeros(X.shape, dtype=np.uint8)
            for a in lev_sorted:
                R += X >= a
            RP, RC = R[:, :-1], R[:, 1:]
            ri, ci = np.nonzero(RP != RC)
            keep = ci < thr[ri]
            ri, ci = ri[keep], ci[keep]
            a_lo, a_hi = RP[ri, ci], RC[ri, ci]
            gr = active[ri]
            upev = a_hi > a_lo
            if upev.any():
                np.add.at(updiff, (gr[upev], a_lo[upev]), 1)
                np.add.at(updiff, (gr[upev], a_hi[upev]), -1)
            dnev = ~upev
            if dnev.any():
                np.add.at(dndiff, (gr[dnev], a_hi[dnev]), 1)
                np.add.at(dndiff, (gr[dnev], a_lo[dnev]), -1)
        if occ is not None:
            states = X[:, 1:]
            IN = (states >= occ_lo) & (states <= occ_hi)
            ri, ci = np.nonzero(IN)
            # states count while their column < entry column (state col jf is S_T)
            thr_s = np.full(active.size, cols, dtype=np.int64)
            thr_s[rows] = jf
            keep = ci < thr_s[ri]
            ri, ci = ri[keep], ci[keep]
            vals = states[ri, ci]
            idx = np.searchsorted(occ_sorted, vals)
            ok = occ_sorted[np.minimum(idx, len(occ_sorted) - 1)] == vals
            np.add.at(occ, (active[ri[ok]], idx[ok]), 1)

        if rows.size:
            fa = active[rows]
            entry[fa] = X[rows, jf + 1] * unit
            pre_entry[fa] = X[rows, jf] * unit
            steps[fa] = elapsed + jf + 1
            censored[fa] = False

        surv = ~found
        active = active[surv]
        pos = X[surv, -1]
        elapsed += cols
        block = min(block * 2, col_cap)

    up = down = None
    if updiff is not None:
        inv = np.empty_like(lev_order)
        inv[lev_order] = np.arange(len(lev_order))
        up = np.cumsum(updiff, axis=1)[:, :-1][:, inv]
        down = np.cumsum(dndiff, axis=1)[:, :-1][:, inv]
    if occ is not None:
        inv = np.empty_like(occ_order)
        inv[occ_order] = np.arange(len(occ_order))
        occ = occ[:, inv]
    return EntranceBatch(entry=entry, pre_entry=pre_entry, steps=steps,
                         censored=censored, up_counts=up, down_counts=down,
                         occupancy=occ)


def first_entrance_target(law, target: TargetSet, starts, horizon: int,
                          rng: np.random.Generator, *, block0: int = 32,
                          area_cap: int = 1 << 22,
                          col_cap: int = 1 << 18) -> EntranceBatch:
    """Generic-target batch first-entrance (any d, any TargetSet).

    Works in real units through the target's membership predicate; lattice
    starts are validated against the span.
    """
    if law.d == 1 and target.kind in ("halfline+", "halfline-"):
        return first_entrance_halfline(law, starts, target.kind == "halfline+",
                                       horizon, rng, block0=block0,
                                       area_cap=area_cap, col_cap=col_cap)
    starts = np.asarray(starts, dtype=float)
    if law.d == 1:
        starts = np.atleast_1d(starts)
        n = starts.shape[0]
    else:
        starts = starts.reshape(-1, law.d)
        n = starts.shape[0]
    if law.is_lattice:
        law.require_lattice_point(starts)

    entry = np.full((n, law.d) if law.d > 1 else n, np.nan)
    pre_entry = np.full_like(entry, np.nan)
    steps = np.full(n, horizon, dtype=np.int64)
    censored = np.ones(n, dtype=bool)

    active = np.arange(n)
    pos = starts.copy()
    pc = target.contains(pos)
    elapsed = 0
    block = block0
    while active.size and elapsed < horizon:
        cols = min(block, horizon - elapsed, col_cap,
                   max(1, area_cap // active.size))
        inc = law.sample(rng, (active.size, cols))
        POS = np.cumsum(inc, axis=1)
        if law.d == 1:
            POS += pos[:, None]
            C = target.contains(POS)
        else:
            POS += pos[:, None, :]
            C = target.contains(POS)
        PREV_C = np.concatenate([pc[:, None], C[:, :-1]], axis=1)
        HIT = ~PREV_C & C
        found = HIT.any(axis=1)
        j = HIT.argmax(axis=1)
        if found.any():
            fa = active[found]
            rows = np.nonzero(found)[0]
            jf = j[found]
            entry[fa] = POS[rows, jf]
            jprev = np.maximum(jf - 1, 0)
            prev_vals = POS[rows, jprev]
            first_step = jf == 0
            if law.d == 1:
                prev_vals = np.where(first_step, pos[rows], prev_vals)
            else:
                prev_vals = np.where(first_step[:, None], pos[rows], prev_vals)
            pre_entry[fa] = prev_vals
            steps[fa] = elapsed + jf + 1
            censored[fa] = False
        keep = ~found
        active = active[keep]
        pos = POS[keep, -1]
        pc = C[keep, -1]
        elapsed += cols
        block = min(block * 2, col_cap)

    return EntranceBatch(entry=entry, pre_entry=pre_entry, steps=steps,
                         censored=censored)


def entrance_sampler(law, target: TargetSet, start, max_steps: int,
                     rng: np.random.Generator) -> EntranceEvent:
    """First entrance event of one walk into ``target`` (censored at horizon)."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    batch = first_entrance_target(law, target, np.asarray([start], dtype=float),
                                  max_steps, rng)
    if batch.censored[0]:
        return EntranceEvent(entry_index=max_steps, entry_point=None,
                             pre_exit_point=None, censored=True)
    entry = batch.entry[0]
    pre = batch.pre_entry[0]
    if law.d == 1:
        entry, pre = float(entry), float(pre)
    return EntranceEvent(entry_index=int(batch.steps[0]), entry_point=entry,
                         pre_exit_point=pre, censored=False)


def crossing_count_batch(law, start, n_steps: int, n_replicas: int,
                         rng: np.random.Generator,
                         area_cap: int = 1 << 24) -> np.ndarray:
    """Zero-level crossing counts L_n for independent replicas (d = 1)."""
    if law.d != 1:
        raise ValueError("crossing counts are one-dimensional")
    lattice = law.is_lattice
    if lattice:
        u0 = int(np.atleast_1d(law.require_lattice_point(start))[0])
        pos = np.full(n_replicas, u0, dtype=_lattice_pos_dtype(law, n_steps, [u0]))
    else:
        pos = np.full(n_replicas, float(start))
    counts = np.zeros(n_replicas, dtype=np.int64)
    done = 0
    while done < n_steps:
        cols = min(max(1, area_cap // n_replicas), n_steps - done)
        inc = _draw_units(law, rng, (n_replicas, cols), dtype=pos.dtype)
        X = np.empty((n_replicas, cols + 1), dtype=pos.dtype)
        X[:, 0] = pos
        np.cumsum(inc, axis=1, out=X[:, 1:])
        X[:, 1:] += pos[:, None]
        C = X >= 0
        counts += (C[:, 1:] != C[:, :-1]).sum(axis=1)
        pos = X[:, -1]
        done += cols
    return counts


def overshoot_average_on_path(law, start, n_crossings: int,
                              rng: np.random.Generator,
                              chunk: int = 1 << 22,
                              max_steps: int | None = None):
    """Average |overshoot| over the first ``n_crossings`` crossings of one path.

    Returns (average, n_crossings_seen, steps_used).  Runs one long walk in
    chunks; stops exactly at the requested crossing count.
    """
    if law.d != 1:
        raise ValueError("overshoots are one-dimensional")
    lattice = law.is_lattice
    unit = law.h if lattice else 1.0
    pos = (int(np.atleast_1d(law.require_lattice_point(start))[0]) if lattice
           else float(start))
    pc = pos >= 0
    total = 0.0
    count = 0
    steps = 0
    while count < n_crossings:
        if max_steps is not None and steps >= max_steps:
            break
        inc = _draw_units(law, rng, chunk)
        POS = np.cumsum(inc)
        POS += pos
        C = POS >= 0
        PREV = np.concatenate([[pc], C[:-1]])
        cross = C != PREV
        vals = POS[cross]
        need = n_crossings - count
        if len(vals) >= need:
            take = vals[:need]
            total += np.abs(take).sum() * unit
            count += need
            idx = np.nonzero(cross)[0][need - 1]
            steps += idx + 1
            break
        total += np.abs(vals).sum() * unit
        count += len(vals)
        pos = POS[-1]
        pc = C[-1]
        steps += chunk
    avg = total / count if count else np.nan
    return avg, count, steps


def quadrant_entrance_scan(law, start, n_entrances: int, windows,
                           rng: np.random.Generator, max_steps: int,
                           chunk: int = 1 << 22, collect_entries: int = 0):
    """Scan one long d-dim walk for entrances into the closed positive orthant.

    Counts entrance positions falling in each of the given window sets.
    Returns a dict with per-window counts, total entrances, steps used, a
    truncation flag (step budget exhausted before ``n_entrances``), and
    optionally the first ``collect_entries`` entry points.
    """
    if not law.is_lattice:
        raise ValueError("orthant entrance scan expects a lattice law")
    pos = law.require_lattice_point(np.asarray(start, dtype=float))
    in_a = bool(np.all(pos >= 0))
    counts = np.zeros(len(windows), dtype=np.int64)
    entries_kept = []
    total_entr = 0
    steps = 0
    while total_entr < n_entrances and steps < max_steps:
        cols = min(chunk, max_steps - steps)
        d = _draw_units(law, rng, cols)
        POS = np.cumsum(d, axis=0)
        POS += pos
        C = np.all(POS >= 0, axis=1)
        PREV = np.concatenate([[in_a], C[:-1]])
        hit = ~PREV & C
        k = int(hit.sum())
        if total_entr + k > n_entrances:
            # trim the block at the exact requested entrance count
            stop = np.nonzero(hit)[0][n_entrances - total_entr - 1]
            POS = POS[:stop + 1]
            hit = hit[:stop + 1]
            k = n_entrances - total_entr
            cols = stop + 1
        if k:
            E = POS[hit]
            real = E * np.asarray(law.space.h)
            for wi, w in enumerate(windows):
                counts[wi] += int(w.contains(real).sum())
            if collect_entries and len(entries_kept) < collect_entries:
                entries_kept.extend(map(tuple, real[:collect_entries - len(entries_kept)]))
        total_entr += k
        pos = POS[-1].copy()
        in_a = bool(C[-1])
        steps += cols
    return {
        "window_counts": counts,
        "entrances": total_entr,
        "steps": steps,
        "truncated": total_entr < n_entrances,
        "entries": entries_kept,
    }


# ---------------------------------------------------------------------------
# dumps

def dump_trajectory(path, base: str, law_label: str, seed, n_steps: int) -> None:
    """Binary dump: little-endian float64 stream plus a text sidecar header."""
    arr = np.asarray(path, dtype="<f8")
    arr.tofile(base + ".f64")
    with open(base + ".header.txt", "w") as fh:
        fh.write(f"law: {law_label}\nseed: {seed}\nn: {n_steps}\n"
                 f"values: {arr.size}\nformat: little-endian float64\n")


def trace_to_csv(trace: CrossingTrace, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("index,time,overshoot,undershoot\n")
        for i, (t, o, u) in enumerate(
                zip(trace.crossing_times, trace.overshoots, trace.undershoots), 1):
            fh.write(f"{i},{t},{o!r},{u!r}\n")
