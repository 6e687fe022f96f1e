"""Closed-form invariant measures of walk entrance/exit chains.

For a one-dimensional mean-zero walk the stationary overshoot measure has
density P(X > x) above zero and P(X <= x) below, with respect to the Haar
measure of the state space.  The orthant variants use coordinate-wise tails:
``1 - P(X <= x)`` on the nonnegative orthant and ``1 - P(X > x)`` on the open
negative one.  For a general target set A the entrance measure weights a
point x in A by the probability that one step backward lands in A^c, and the
exit measure weights x in A^c by the one-step probability into A.

Lattice measures are finite weight tables (exact sums); continuous measures
carry density and unnormalized-cumulative evaluators built from the law's
closed-form tails, so normalization, moments and sampling are exact.
Orthant measures in d >= 2 have infinite total mass: they are flagged as
such, support only windowed weights and ratio queries, and refuse
normalization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .laws import IncrementLaw, cdf_le, tail_gt
from .walks import TargetSet

__all__ = [
    "LatticeMeasure",
    "DensityMeasure",
    "pi_measure",
    "pi_plus",
    "pi_minus",
    "lambda_entrance",
    "lambda_exit",
    "moments",
    "normalized_sampler",
    "measure_to_csv",
]

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class LatticeMeasure:
    """Weight table on a finite window of lattice points.

    ``weights[i]`` is the measure of the point (density times the Haar mass
    of one point).  ``total_mass`` is the full-space total: it equals
    ``weights.sum()`` for finite measures and ``inf`` for windowed views of
    infinite measures.
    """

    points_int: np.ndarray      # (m,) or (m, d) int64, in span units
    h: tuple[float, ...]
    weights: np.ndarray
    total_mass: float
    label: str = ""

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise ValueError("negative weights")
        if math.isfinite(self.total_mass):
            if abs(self.weights.sum() - self.total_mass) > 1e-9 * max(1.0, self.total_mass):
                raise ValueError("total_mass does not match the window sum")

    @property
    def d(self) -> int:
        return 1 if self.points_int.ndim == 1 else self.points_int.shape[1]

    @property
    def points(self) -> np.ndarray:
        """Window points in real units."""
        if self.points_int.ndim == 1:
            return self.points_int * self.h[0]
        return self.points_int * np.asarray(self.h)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.total_mass)

    def weight_at(self, point) -> float:
        p = self.points
        if self.points_int.ndim == 1:
            hit = np.nonzero(p == float(point))[0]
        else:
            hit = np.nonzero(np.all(p == np.asarray(point, dtype=float), axis=1))[0]
        return float(self.weights[hit[0]]) if hit.size else 0.0

    def normalized_weights(self) -> np.ndarray:
        if not self.is_finite:
            raise ValueError("cannot normalize an infinite-mass measure")
        return self.weights / self.total_mass

    def restrict(self, mask) -> "LatticeMeasure":
        return LatticeMeasure(points_int=self.points_int[mask], h=self.h,
                              weights=self.weights[mask], total_mass=np.inf
                              if not self.is_finite else float(self.weights[mask].sum()),
                              label=self.label)


@dataclass(frozen=True)
class DensityMeasure:
    """One-dimensional measure with a density against Lebesgue.

    ``cumulative`` is the unnormalized mass of (-inf, x]; it is exact
    (closed form) for the stationary overshoot measures.
    """

    density: Callable
    support: tuple[float, float]
    total_mass: float
    cumulative: Callable | None = None
    label: str = ""

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.total_mass)

    def normalized_cdf(self, x):
        if not self.is_finite:
            raise ValueError("cannot normalize an infinite-mass measure")
        if self.cumulative is None:
            raise ValueError("no cumulative evaluator available")
        return np.clip(self.cumulative(x) / self.total_mass, 0.0, 1.0)


def _upper_cutoff(law: IncrementLaw) -> float:
    """A point beyond which the upper tail is numerically zero."""
    if law.is_lattice:
        return float(np.max(law.points))
    sigma = math.sqrt(law.variance[0])
    return 60.0 * max(sigma, 1.0) + 60.0 * abs(law.mean[0])


def _plus_total(law) -> float:
    """E[X^+] = total mass of the nonnegative-side stationary measure."""
    if law.is_lattice:
        return float(sum(float(p) * max(float(c[0]), 0.0)
                         for c, p in law.entries_exact))
    return float(law.integrated_tail(_upper_cutoff(law)))


def _minus_total(law) -> float:
    """E[X^-] = total mass of the negative-side stationary measure."""
    if law.is_lattice:
        return float(sum(float(p) * max(-float(c[0]), 0.0)
                         for c, p in law.entries_exact))
    return float(law.integrated_lower(0.0))


def _require_d1(law, what):
    if law.d != 1:
        raise ValueError(f"{what} is defined here for d = 1 only")


def pi_plus(law: IncrementLaw, window=None) -> "LatticeMeasure | DensityMeasure":
    """Stationary overshoot measure on the nonnegative orthant.

    Density ``1 - P(X <= x)`` (coordinate-wise <=) against Haar measure.  In
    d = 1 the support is finite for lattice laws and the total mass is
    E[X^+]; in d >= 2 a window of per-axis (lo, hi) bounds is required and
    the measure is flagged infinite.
    """
    if law.d == 1:
        if law.is_lattice:
            kmax = int(np.max(law.points_int))
            ks = np.arange(0, max(kmax, 0), dtype=np.int64)
            h = law.h
            w = np.array([h * tail_gt(law, k * h) for k in ks])
            return LatticeMeasure(points_int=ks, h=(h,), weights=w,
                                  total_mass=_plus_total(law),
                                  label=f"pi_plus[{law.label}]")
        return DensityMeasure(
            density=lambda x: np.where(np.asarray(x, dtype=float) >= 0,
                                       law.tail(x), 0.0),
            support=(0.0, _upper_cutoff(law)),
            total_mass=_plus_total(law),
            cumulative=lambda x: law.integrated_tail(np.maximum(x, 0.0)),
            label=f"pi_plus[{law.label}]")
    if window is None:
        raise ValueError("d >= 2 orthant measures need an explicit window")
    if not law.is_lattice:
        raise ValueError("d >= 2 measures are implemented for lattice laws")
    pts = _grid(law, window, lambda x: np.all(x >= 0, axis=-1))
    haar = law.space.haar_unit
    w = np.array([haar * (1.0 - cdf_le(law, x)) for x in pts * np.asarray(law.space.h)])
    return LatticeMeasure(points_int=pts, h=law.space.h, weights=w,
                          total_mass=np.inf, label=f"pi_plus[{law.label}]")


def pi_minus(law: IncrementLaw, window=None) -> "LatticeMeasure | DensityMeasure":
    """Stationary overshoot measure on the negative orthant.

    Density ``1 - P(X > x)`` (strict coordinate-wise >); in d = 1 this is
    P(X <= x) with total mass E[X^-].
    """
    if law.d == 1:
        if law.is_lattice:
            kmin = int(np.min(law.points_int))
            ks = np.arange(min(kmin, 0), 0, dtype=np.int64)
            h = law.h
            w = np.array([h * cdf_le(law, k * h) for k in ks])
            return LatticeMeasure(points_int=ks, h=(h,), weights=w,
                                  total_mass=_minus_total(law),
                                  label=f"pi_minus[{law.label}]")
        return DensityMeasure(
            density=lambda x: np.where(np.asarray(x, dtype=float) < 0,
                                       law.cdf(x), 0.0),
            support=(-_upper_cutoff(law), 0.0),
            total_mass=_minus_total(law),
            cumulative=lambda x: law.integrated_lower(np.minimum(x, 0.0)),
            label=f"pi_minus[{law.label}]")
    if window is None:
        raise ValueError("d >= 2 orthant measures need an explicit window")
    if not law.is_lattice:
        raise ValueError("d >= 2 measures are implemented for lattice laws")
    pts = _grid(law, window, lambda x: np.all(x < 0, axis=-1))
    haar = law.space.haar_unit
    w = np.array([haar * (1.0 - tail_gt(law, x)) for x in pts * np.asarray(law.space.h)])
    return LatticeMeasure(points_int=pts, h=law.space.h, weights=w,
                          total_mass=np.inf, label=f"pi_minus[{law.label}]")


def pi_measure(law: IncrementLaw) -> "LatticeMeasure | DensityMeasure":
    """Two-sided stationary overshoot measure; total mass E|X|."""
    _require_d1(law, "the two-sided overshoot measure")
    total = _plus_total(law) + _minus_total(law)
    if law.is_lattice:
        mm = pi_minus(law)
        mp = pi_plus(law)
        return LatticeMeasure(
            points_int=np.concatenate([mm.points_int, mp.points_int]),
            h=(law.h,),
            weights=np.concatenate([mm.weights, mp.weights]),
            total_mass=total, label=f"pi[{law.label}]")
    minus_total = _minus_total(law)

    def density(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, law.tail(x), law.cdf(x))

    def cumulative(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, law.integrated_lower(np.minimum(x, 0.0)),
                        minus_total + law.integrated_tail(np.maximum(x, 0.0)))

    hi = _upper_cutoff(law)
    return DensityMeasure(density=density, support=(-hi, hi), total_mass=total,
                          cumulative=cumulative, label=f"pi[{law.label}]")


def _grid(law, window, keep) -> np.ndarray:
    """Integer lattice points of a per-axis (lo, hi) window, filtered."""
    h = np.asarray(law.space.h)
    axes = []
    window = np.asarray(window, dtype=float)
    if law.d == 1 and window.ndim == 1:
        window = window[None, :]
    for ax in range(law.d):
        lo, hi = window[ax]
        axes.append(np.arange(math.ceil(lo / h[ax] - 1e-9),
                              math.floor(hi / h[ax] + 1e-9) + 1, dtype=np.int64))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    real = pts * h
    mask = keep(real) if law.d > 1 else keep(real[:, 0])
    pts = pts[mask]
    return pts[:, 0] if law.d == 1 else pts


def lambda_entrance(law: IncrementLaw, A: TargetSet, window) -> LatticeMeasure:
    """Entrance measure on A: weight(x) = P(x - X in A^c) * Haar mass.

    Lattice laws only (exact sums over the support table).  For the
    continuous case use :func:`lambda_entrance_density`.
    """
    if not law.is_lattice:
        raise ValueError("lattice law required; see lambda_entrance_density")
    pts = _grid(law, window, A.contains)
    h = np.asarray(law.space.h)
    haar = law.space.haar_unit
    comp = A.complement()
    w = np.empty(len(pts))
    for i, p in enumerate(np.atleast_1d(pts)):
        x = p * h if law.d > 1 else float(p * h[0])
        shifted = x - law.points
        w[i] = haar * float(law.probs[comp.contains(shifted)].sum())
    return LatticeMeasure(points_int=pts, h=law.space.h, weights=w,
                          total_mass=np.inf, label=f"entrance[{A.label}]")


def lambda_exit(law: IncrementLaw, A: TargetSet, window) -> LatticeMeasure:
    """Exit measure on A^c: weight(x) = P(x + X in A) * Haar mass."""
    if not law.is_lattice:
        raise ValueError("lattice law required; see lambda_exit_density")
    comp = A.complement()
    pts = _grid(law, window, comp.contains)
    h = np.asarray(law.space.h)
    haar = law.space.haar_unit
    w = np.empty(len(pts))
    for i, p in enumerate(np.atleast_1d(pts)):
        x = p * h if law.d > 1 else float(p * h[0])
        shifted = x + law.points
        w[i] = haar * float(law.probs[A.contains(shifted)].sum())
    return LatticeMeasure(points_int=pts, h=law.space.h, weights=w,
                          total_mass=np.inf, label=f"exit[{A.label}]")


def lambda_entrance_density(law: IncrementLaw, A: TargetSet,
                            window: tuple[float, float]) -> DensityMeasure:
    """Continuous-law entrance density on A over a bounded window.

    For half-line and box-union targets the one-step probability is an exact
    sum of CDF differences; generic predicates fall back to adaptive
    quadrature at absolute tolerance 1e-10.
    """
    _require_d1(law, "the continuous entrance density")
    comp = A.complement()

    def dens_point(x):
        if not bool(A.contains(np.asarray(x, dtype=float))):
            return 0.0
        val, _ = quad(lambda u: law.density(u) * float(comp.contains(np.asarray(x - u))),
                      x - _upper_cutoff(law), x + _upper_cutoff(law),
                      epsabs=QUAD_TOL, limit=400)
        return val

    if A.kind == "halfline+":
        def density(x):
            x = np.asarray(x, dtype=float)
            return np.where(x >= 0, law.tail(x), 0.0)
    elif A.kind == "halfline-":
        def density(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, law.cdf(x), 0.0)
    else:
        density = np.vectorize(dens_point, otypes=[float])
    return DensityMeasure(density=density, support=tuple(window),
                          total_mass=np.inf, label=f"entrance[{A.label}]")


def moments(measure, k: int) -> float:
    """k-th absolute moment of the (unnormalized) measure about 0 (d = 1)."""
    if isinstance(measure, LatticeMeasure):
        if measure.d != 1:
            raise ValueError("moments implemented for d = 1")
        if not measure.is_finite:
            raise ValueError("absolute moment of an infinite-mass measure")
        return float(np.sum(np.abs(measure.points) ** k * measure.weights))
    if not measure.is_finite:
        raise ValueError("absolute moment of an infinite-mass measure")
    lo, hi = measure.support
    val, err = quad(lambda x: abs(x) ** k * float(measure.density(x)), lo, hi,
                    epsabs=QUAD_TOL, limit=400, points=[0.0] if lo < 0 < hi else None)
    return float(val)


def normalized_sampler(measure, rng: np.random.Generator, size=None):
    """Sample from the measure normalized to a probability.

    Lattice: cumulative-weight inversion.  Continuous: vectorized bisection
    on the exact unnormalized cumulative.
    """
    if isinstance(measure, LatticeMeasure):
        probs = measure.normalized_weights()
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(size), side="right")
        return measure.points[idx]
    if not measure.is_finite or measure.cumulative is None:
        raise ValueError("sampling needs a finite measure with a cumulative")
    u = rng.random(size) * measure.total_mass
    lo = np.full_like(u, measure.support[0], dtype=float)
    hi = np.full_like(u, measure.support[1], dtype=float)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = measure.cumulative(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def measure_to_csv(measure: LatticeMeasure, base: str, law_label: str = "",
                   window=None) -> None:
    """CSV of (point, weight) plus a JSON sidecar header."""
    with open(base + ".csv", "w") as fh:
        fh.write("point,weight\n")
        for p, w in zip(np.atleast_1d(measure.points), measure.weights):
            ptxt = (";".join(repr(float(v)) for v in np.atleast_1d(p)))
            fh.write(f"{ptxt},{w!r}\n")
    header = {
        "law": law_label or measure.label,
        "window": window if window is None else np.asarray(window).tolist(),
        "total_mass": "inf" if not measure.is_finite else measure.total_mass,
        "points": int(len(measure.weights)),
    }
    with open(base + ".json", "w") as fh:
        json.dump(header, fh, indent=2)
