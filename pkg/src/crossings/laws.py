"""Increment distributions for random walks and the group they live on.

An :class:`IncrementLaw` describes the step distribution X of a random walk
S_n = S_0 + X_1 + ... + X_n in R^d, together with its state space: the
minimal closed subgroup of (R^d, +) containing the support of X.  Per axis
this is either a lattice h*Z (span h > 0) or all of R (span 0).  The Haar
measure on the state space is normalized to assign mass prod(h_i) to each
lattice point (Lebesgue on continuous axes), so the unit cell has mass one.

Lattice laws are built from exact rational support tables; spans and moments
are computed exactly and then stored as floats for simulation.  Continuous
laws carry analytic density/CDF/tail evaluators plus the integrated tails
    int_0^x P(X > t) dt   and   int_{-inf}^x P(X <= t) dt,
which downstream code uses for exact target CDFs of stationary overshoot
measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

__all__ = [
    "IncrementLaw",
    "StateSpace",
    "make_lattice_law",
    "make_continuous_law",
    "law_from_spec",
    "tail_gt",
    "cdf_le",
]


def _as_fraction(x) -> Fraction:
    """Parse an exact rational from int/str/Fraction/float input."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        # floats are dyadic rationals; taken exactly
        return Fraction(float(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def _gcd_fractions(values: Sequence[Fraction]) -> Fraction:
    """gcd of rationals: gcd of numerators over a common denominator."""
    nonzero = [v for v in values if v != 0]
    if not nonzero:
        return Fraction(0)
    den = 1
    for v in nonzero:
        den = den * v.denominator // math.gcd(den, v.denominator)
    g = 0
    for v in nonzero:
        g = math.gcd(g, abs(int(v * den)))
    return Fraction(g, den)


@dataclass(frozen=True)
class StateSpace:
    """State space of a walk: per-axis span and the Haar normalization."""

    d: int
    h: tuple[float, ...]  # per-axis span; 0 means the axis is continuous
    haar_unit: float      # mass assigned to one lattice point (prod of spans)

    @property
    def is_lattice(self) -> bool:
        return all(hi > 0 for hi in self.h)


@dataclass(frozen=True)
class IncrementLaw:
    """Distribution of one step X of a random walk.

    Exactly one of the two shapes is populated:

    * ``kind == "lattice"``: finite support table.  ``points`` holds the
      support in real units, ``points_int`` the same in units of the span,
      ``probs`` the probabilities.
    * ``kind == "continuous"``: analytic evaluators (d = 1 only).

    ``variance`` is the per-axis second central moment; ``abs_first_moment``
    is E|X| (d = 1 only).
    """

    d: int
    kind: str  # "lattice" | "continuous"
    space: StateSpace
    mean: tuple[float, ...]
    variance: tuple[float, ...]
    abs_first_moment: float | None
    label: str

    # lattice shape
    points: np.ndarray | None = None       # (m,) or (m, d) float64
    points_int: np.ndarray | None = None   # same in units of span, int64
    probs: np.ndarray | None = None        # (m,) float64
    entries_exact: tuple = ()              # ((Fraction coords...), Fraction p)

    # continuous shape (d = 1): vectorized callables of float arrays
    density: Callable | None = None
    cdf: Callable | None = None            # P(X <= x)
    tail: Callable | None = None           # P(X > x)
    integrated_tail: Callable | None = None    # int_0^x P(X > t) dt, x >= 0
    integrated_lower: Callable | None = None   # int_{-inf}^x P(X <= t) dt, x <= 0
    _sampler: Callable | None = field(default=None, repr=False)

    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice"

    @property
    def h(self) -> float:
        """Span of the first axis (the only axis when d = 1)."""
        return self.space.h[0]

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Draw increments; shape (size,) for d=1 else (size, d)."""
        if self.is_lattice:
            idx = np.searchsorted(self._cumprobs, rng.random(size), side="right")
            return self.points[idx]
        return self._sampler(rng, size)

    def sample_int(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Lattice draws in integer span units (int64)."""
        if not self.is_lattice:
            raise ValueError("integer sampling requires a lattice law")
        idx = np.searchsorted(self._cumprobs, rng.random(size), side="right")
        return self.points_int[idx]

    @property
    def _cumprobs(self) -> np.ndarray:
        cp = np.cumsum(self.probs)
        cp[-1] = 1.0
        return cp

    def require_lattice_point(self, x) -> np.ndarray:
        """Validate that x lies on the state-space lattice; return int units."""
        x = np.asarray(x, dtype=float)
        h = np.asarray(self.space.h)
        units = x / h
        rounded = np.rint(units)
        if not np.allclose(units, rounded, atol=1e-9, rtol=0.0):
            raise ValueError(f"point {x} is not on the lattice with span {tuple(h)}")
        return rounded.astype(np.int64)


def make_lattice_law(entries, label: str | None = None) -> IncrementLaw:
    """Build a lattice increment law from an exact support table.

    Parameters
    ----------
    entries : sequence of (point, probability)
        ``point`` is a number (d = 1) or a tuple of numbers; probabilities may
        be given as ints, floats, Fractions or rational strings like "2/3".

    The per-axis span is the gcd of the support coordinates (the subgroup of
    (R, +) generated by them), computed exactly.  Probabilities must be
    nonnegative and sum to 1 within 1e-12; at least two distinct support
    points are required (a single atom makes the walk degenerate).
    """
    if not entries:
        raise ValueError("empty support table")
    parsed: dict[tuple[Fraction, ...], Fraction] = {}
    d = None
    for point, prob in entries:
        coords = point if isinstance(point, (tuple, list, np.ndarray)) else (point,)
        coords = tuple(_as_fraction(c) for c in coords)
        if d is None:
            d = len(coords)
        elif len(coords) != d:
            raise ValueError("support points have inconsistent dimensions")
        p = _as_fraction(prob)
        if p < 0:
            raise ValueError(f"negative probability {prob!r}")
        parsed[coords] = parsed.get(coords, Fraction(0)) + p

    total = sum(parsed.values())
    if abs(float(total) - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {float(total)}, not 1")
    support = [(c, p) for c, p in parsed.items() if p > 0]
    if len(support) < 2:
        raise ValueError("degenerate law: support has a single atom")

    h_exact = []
    for axis in range(d):
        g = _gcd_fractions([c[axis] for c, _ in support])
        if g == 0:
            raise ValueError(f"axis {axis} is degenerate (all support coordinates 0)")
        h_exact.append(g)

    mean = [sum(p * c[axis] for c, p in support) for axis in range(d)]
    var = [sum(p * c[axis] ** 2 for c, p in support) - mean[axis] ** 2
           for axis in range(d)]
    abs_moment = sum(p * abs(c[0]) for c, p in support) if d == 1 else None

    order = sorted(range(len(support)), key=lambda i: support[i][0])
    support = [support[i] for i in order]
    pts = np.array([[float(c[axis]) for axis in range(d)] for c, _ in support])
    pts_int = np.array([[int(c[axis] / h_exact[axis]) for axis in range(d)]
                        for c, _ in support], dtype=np.int64)
    probs = np.array([float(p) for _, p in support])
    if d == 1:
        pts = pts[:, 0]
        pts_int = pts_int[:, 0]

    h = tuple(float(g) for g in h_exact)
    space = StateSpace(d=d, h=h, haar_unit=float(np.prod(h)))
    if label is None:
        if d == 1:
            label = "lattice{" + ", ".join(
                f"({c[0]}, {p})" for c, p in support) + "}"
        else:
            label = f"lattice(d={d}, {len(support)} atoms)"
    return IncrementLaw(
        d=d, kind="lattice", space=space,
        mean=tuple(float(m) for m in mean),
        variance=tuple(float(v) for v in var),
        abs_first_moment=float(abs_moment) if abs_moment is not None else None,
        label=label,
        points=pts, points_int=pts_int, probs=probs,
        entries_exact=tuple((c, p) for c, p in support),
    )


def _phi(u):
    return np.exp(-0.5 * np.asarray(u, dtype=float) ** 2) / math.sqrt(2 * math.pi)


def make_continuous_law(name: str, **params) -> IncrementLaw:
    """Build a continuous increment law: gaussian(sigma), laplace(b), uniform(a, b).

    All evaluators are exact closed forms; the span is 0 (state space R).
    """
    name = name.lower()
    if name == "gaussian":
        sigma = float(params.get("sigma", 1.0))
        if sigma <= 0:
            raise ValueError(f"gaussian scale must be positive, got {sigma}")
        mean, var = 0.0, sigma**2
        abs_m = sigma * math.sqrt(2 / math.pi)
        density = lambda x: _phi(np.asarray(x) / sigma) / sigma
        cdf = lambda x: ndtr(np.asarray(x, dtype=float) / sigma)
        tail = lambda x: ndtr(-np.asarray(x, dtype=float) / sigma)

        def integrated_tail(x):
            u = np.asarray(x, dtype=float) / sigma
            return sigma * (u * ndtr(-u) - _phi(u) + _phi(0.0))

        def integrated_lower(x):
            u = np.asarray(x, dtype=float) / sigma
            return sigma * (u * ndtr(u) + _phi(u))

        sampler = lambda rng, size: rng.normal(0.0, sigma, size)
        label = f"gaussian({sigma:g})"
    elif name == "laplace":
        b = float(params.get("b", params.get("scale", 1.0)))
        if b <= 0:
            raise ValueError(f"laplace scale must be positive, got {b}")
        mean, var = 0.0, 2 * b**2
        abs_m = b
        density = lambda x: np.exp(-np.abs(np.asarray(x, dtype=float)) / b) / (2 * b)

        def cdf(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, 0.5 * np.exp(x / b), 1 - 0.5 * np.exp(-x / b))

        def tail(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, 1 - 0.5 * np.exp(x / b), 0.5 * np.exp(-x / b))

        def integrated_tail(x):
            x = np.asarray(x, dtype=float)
            return (b / 2) * (1 - np.exp(-np.maximum(x, 0.0) / b))

        def integrated_lower(x):
            x = np.asarray(x, dtype=float)
            return (b / 2) * np.exp(np.minimum(x, 0.0) / b)

        sampler = lambda rng, size: rng.laplace(0.0, b, size)
        label = f"laplace({b:g})"
    elif name == "uniform":
        a, bb = float(params["a"]), float(params["b"])
        if not a < bb:
            raise ValueError(f"uniform endpoints must satisfy a < b, got ({a}, {bb})")
        width = bb - a
        mean = (a + bb) / 2
        var = width**2 / 12
        if a < 0 < bb:
            abs_m = (a * a + bb * bb) / (2 * width)
        else:
            abs_m = abs(mean)
        density = lambda x: np.where(
            (np.asarray(x, dtype=float) >= a) & (np.asarray(x, dtype=float) <= bb),
            1.0 / width, 0.0)
        cdf = lambda x: np.clip((np.asarray(x, dtype=float) - a) / width, 0.0, 1.0)
        tail = lambda x: np.clip((bb - np.asarray(x, dtype=float)) / width, 0.0, 1.0)

        def integrated_tail(x):
            # int_0^x P(X > t) dt for x >= 0 (piecewise linear tail)
            x = np.asarray(x, dtype=float)
            lo = np.clip(x, 0.0, max(a, 0.0))           # tail == 1 below a
            mid = np.clip(x, max(a, 0.0), bb) - max(a, 0.0)
            base = max(a, 0.0)
            t0 = (bb - base) / width
            out = lo + t0 * mid - mid**2 / (2 * width)
            return np.where(x <= 0, 0.0, out)

        def integrated_lower(x):
            # int_{-inf}^x P(X <= t) dt for x <= 0
            x = np.asarray(x, dtype=float)
            hi = min(bb, 0.0)
            xm = np.clip(x, a, hi)
            c0 = (xm - a) ** 2 / (2 * width)
            above = np.clip(x, hi, 0.0) - hi
            chi = (hi - a) / width
            return np.where(x <= a, 0.0, c0) + above * chi

        sampler = lambda rng, size: rng.uniform(a, bb, size)
        label = f"uniform({a:g}, {bb:g})"
    else:
        raise ValueError(f"unknown continuous family {name!r}")

    space = StateSpace(d=1, h=(0.0,), haar_unit=1.0)
    return IncrementLaw(
        d=1, kind="continuous", space=space,
        mean=(mean,), variance=(var,), abs_first_moment=abs_m, label=label,
        density=density, cdf=cdf, tail=tail,
        integrated_tail=integrated_tail, integrated_lower=integrated_lower,
        _sampler=sampler,
    )


def tail_gt(law: IncrementLaw, x) -> float:
    """P(X > x); for d > 1 the inequality is strict in every coordinate."""
    if law.is_lattice:
        pts = np.atleast_2d(law.points if law.d > 1 else law.points[:, None])
        xv = np.atleast_1d(np.asarray(x, dtype=float))
        mask = np.all(pts > xv[None, :], axis=1)
        return float(law.probs[mask].sum())
    return float(law.tail(x))


def cdf_le(law: IncrementLaw, x) -> float:
    """P(X <= x), coordinate-wise <= for d > 1."""
    if law.is_lattice:
        pts = np.atleast_2d(law.points if law.d > 1 else law.points[:, None])
        xv = np.atleast_1d(np.asarray(x, dtype=float))
        mask = np.all(pts <= xv[None, :], axis=1)
        return float(law.probs[mask].sum())
    return float(law.cdf(x))


def law_from_spec(spec: dict) -> IncrementLaw:
    """Build a law from a config table.

    Accepted shapes::

        { kind = "lattice", entries = [[-1, "2/3"], [2, "1/3"]] }
        { kind = "gaussian", sigma = 1.0 }
        { kind = "laplace", b = 1.0 }
        { kind = "uniform", a = -1.0, b = 1.0 }
    """
    if "kind" not in spec:
        raise KeyError("law.kind")
    kind = spec["kind"]
    if kind == "lattice":
        if "entries" not in spec:
            raise KeyError("law.entries")
        return make_lattice_law([(tuple(e[0]) if isinstance(e[0], list) else e[0], e[1])
                                 for e in spec["entries"]])
    if kind in ("gaussian", "laplace", "uniform"):
        params = {k: v for k, v in spec.items() if k != "kind"}
        return make_continuous_law(kind, **params)
    raise ValueError(f"unknown law kind {kind!r}")


def rademacher() -> IncrementLaw:
    """The +/-1 symmetric step law."""
    return make_lattice_law([(-1, Fraction(1, 2)), (1, Fraction(1, 2))],
                            label="rademacher")


def simple_walk_2d() -> IncrementLaw:
    """Uniform steps on the four unit neighbours in Z^2."""
    q = Fraction(1, 4)
    return make_lattice_law(
        [((1, 0), q), ((-1, 0), q), ((0, 1), q), ((0, -1), q)],
        label="simple2d")
