"""Entrance and exit chains sampled from an arbitrary one-step Markov sampler.

Wraps any time-homogeneous one-step sampler into the chain of its entrance
positions into a target set A (values in A) and the chain of exit positions
from the complement (values in A^c, one step before each entrance).  Both are
Markov chains; the exit kernel conditions the first step on landing in A,
realized here by rejection with a configurable budget.

The cemetery value ``DAGGER`` is an explicit absorbing terminal: a step that
exhausts the horizon returns it, and every subsequent step of a run stays
there.  A rejection budget exhausted while conditioning is a different
failure (the state appears to have no one-step path into A) and raises
:class:`RejectionBudgetError` instead.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .laws import IncrementLaw
from .walks import TargetSet, first_entrance_halfline

__all__ = [
    "DAGGER",
    "RejectionBudgetError",
    "MarkovSampler",
    "FiniteChainSampler",
    "RandomWalkSampler",
    "SampledSubchain",
    "entrance_step",
    "exit_step",
    "run_subchain",
    "entrance_exit_sequences",
    "transition_counts",
]


class _Cemetery:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "†"


DAGGER = _Cemetery()


class RejectionBudgetError(RuntimeError):
    """Conditioning on a one-step entry into A failed within the draw budget."""


class MarkovSampler:
    """One-step sampler interface: ``step(state, rng) -> state``.

    Implementations must be time-homogeneous.  ``kernel`` exposes the exact
    transition matrix when one exists (finite chains).
    """

    kernel = None

    def step(self, state, rng: np.random.Generator):
        raise NotImplementedError


class FiniteChainSampler(MarkovSampler):
    """Sampler over states 0..n-1 from a row-stochastic matrix."""

    def __init__(self, P):
        P = np.asarray(P, dtype=float)
        self.kernel = P
        self.n = P.shape[0]
        self._cumrows = [row.cumsum().tolist() for row in P]
        for row in self._cumrows:
            row[-1] = 1.0

    def step(self, state, rng):
        return bisect_right(self._cumrows[state], rng.random())

    def path(self, x0: int, n_steps: int, rng) -> np.ndarray:
        """Trajectory of n_steps+1 states (tight loop on pregenerated draws)."""
        out = np.empty(n_steps + 1, dtype=np.int64)
        out[0] = x0
        cum = self._cumrows
        s = int(x0)
        u = rng.random(n_steps).tolist()
        for i in range(n_steps):
            s = bisect_right(cum[s], u[i])
            out[i + 1] = s
        return out


class RandomWalkSampler(MarkovSampler):
    """Random-walk one-step sampler: state + one increment draw."""

    def __init__(self, law: IncrementLaw):
        self.law = law

    def step(self, state, rng):
        if self.law.d == 1:
            return float(state) + float(self.law.sample(rng, 1)[0])
        return np.asarray(state, dtype=float) + self.law.sample(rng, 1)[0]


def _as_target(target, sampler) -> TargetSet:
    if isinstance(target, TargetSet):
        return target
    # a set/list of state indices over a finite chain
    members = frozenset(int(s) for s in target)

    def contains(x):
        arr = np.asarray(x)
        if arr.ndim == 0:
            return np.bool_(int(arr) in members)
        return np.isin(arr.astype(np.int64), list(members))

    return TargetSet(label=f"states{sorted(members)}", contains=contains,
                     kind="stateset")


@dataclass
class SampledSubchain:
    """Configuration of an entrance or exit chain over a sampler.

    ``horizon`` bounds the underlying steps spent searching for the next
    event (the cemetery is returned past it); ``rejection_budget`` bounds the
    conditioning draws of the exit kernel.  Censoring statistics accumulate
    in ``censor_count`` / ``event_count``.
    """

    sampler: MarkovSampler
    target: object
    mode: str = "entrance"
    horizon: int = 10**6
    rejection_budget: int = 10**6
    censor_count: int = 0
    event_count: int = 0

    def __post_init__(self):
        if self.mode not in ("entrance", "exit"):
            raise ValueError(f"mode must be 'entrance' or 'exit', got {self.mode!r}")
        self._target = _as_target(self.target, self.sampler)

    def _in_a(self, x) -> bool:
        return bool(self._target.contains(np.asarray(x)))


def _walk_fast_path(sub: SampledSubchain):
    s = sub.sampler
    return (isinstance(s, RandomWalkSampler) and s.law.d == 1
            and sub._target.kind in ("halfline+", "halfline-"))


def _scalar_first_entrance(sub: SampledSubchain, start, rng):
    """(pre_entry, entry) of the underlying chain from ``start``, or cemetery."""
    if _walk_fast_path(sub):
        law = sub.sampler.law
        batch = first_entrance_halfline(
            law, np.asarray([start], dtype=float),
            sub._target.kind == "halfline+", sub.horizon, rng)
        if batch.censored[0]:
            return DAGGER, DAGGER
        return float(batch.pre_entry[0]), float(batch.entry[0])
    prev = start
    prev_in = sub._in_a(prev)
    for _ in range(sub.horizon):
        nxt = sub.sampler.step(prev, rng)
        nxt_in = sub._in_a(nxt)
        if not prev_in and nxt_in:
            return prev, nxt
        prev, prev_in = nxt, nxt_in
    return DAGGER, DAGGER


def entrance_step(sub: SampledSubchain, x, rng) -> object:
    """One step of the entrance chain from x in A (or the cemetery)."""
    if x is DAGGER:
        return DAGGER
    if not sub._in_a(x):
        raise ValueError(f"entrance-chain state {x!r} is not in {sub._target.label}")
    _, entry = _scalar_first_entrance(sub, x, rng)
    sub.event_count += 1
    if entry is DAGGER:
        sub.censor_count += 1
    return entry


def exit_step(sub: SampledSubchain, x, rng) -> object:
    """One step of the exit chain from x in A^c (or the cemetery).

    Realizes the conditioning on a one-step entry by rejection: redraw the
    first step from x until it lands in A, then continue to the position one
    step before the next entrance.
    """
    if x is DAGGER:
        return DAGGER
    if sub._in_a(x):
        raise ValueError(f"exit-chain state {x!r} is not in the complement of "
                         f"{sub._target.label}")
    z = None
    for _ in range(sub.rejection_budget):
        cand = sub.sampler.step(x, rng)
        if sub._in_a(cand):
            z = cand
            break
    if z is None:
        raise RejectionBudgetError(
            f"no one-step entry into {sub._target.label} from {x!r} within "
            f"{sub.rejection_budget} draws; state appears to lie outside the exit set")
    pre, _ = _scalar_first_entrance(sub, z, rng)
    sub.event_count += 1
    if pre is DAGGER:
        sub.censor_count += 1
    return pre


def run_subchain(sub: SampledSubchain, x0, n: int, rng) -> tuple[list, int]:
    """n sampled-subchain states from x0; returns (states, censor_count).

    The cemetery is absorbing: once censored, all remaining entries are it.
    """
    stepper = entrance_step if sub.mode == "entrance" else exit_step
    out = []
    x = x0
    censored = 0
    for _ in range(n):
        x = stepper(sub, x, rng)
        if x is DAGGER:
            censored += 1
        out.append(x)
    return out, censored


# ---------------------------------------------------------------------------
# empirical kernels from a single underlying trajectory (finite chains)

def entrance_exit_sequences(states: np.ndarray, in_a: np.ndarray):
    """Entrance and exit state sequences of a finite-chain path.

    ``in_a`` is a boolean membership table over state indices.  The k-th exit
    state precedes the k-th entrance state by exactly one step of the path.
    """
    flags = in_a[states]
    hit = ~flags[:-1] & flags[1:]
    t = np.nonzero(hit)[0] + 1
    return states[t], states[t - 1]


def transition_counts(seq: np.ndarray, n_states: int) -> np.ndarray:
    """Transition count matrix of a state sequence."""
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    if len(seq) >= 2:
        np.add.at(counts, (seq[:-1], seq[1:]), 1)
    return counts
