"""Continuum reference solutions for convergence certification.

Two references are provided:

* the flat case (identity scale, Lebesgue speed): the diffusion is
  reflected Brownian motion with generator ``(1/2) d^2/dx^2`` and Neumann
  boundary, so the resolvent has the closed cosine expansion

      G_lam u = sum_k  u_k e_k / (lam + k^2 pi^2 / 2),

  with ``e_0 = 1`` and ``e_k = sqrt(2) cos(k pi x)``;

* the general case: a fine-grid oracle, i.e. this package's own trace
  construction at a much higher resolution, with a self-consistency gap
  (doubling the oracle resolution) reported so that oracle error can be
  compared against the errors it is used to measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convergence import (
    PiecewiseConstantFunction,
    extend,
    l2_distance_pc,
    project,
)
from .errors import DomainError, ValidationError
from .linalg import solve_shifted
from .trace_chain import (
    build_partition,
    build_trace_chain,
    dirichlet_energy,
    generator_matrix,
)

__all__ = [
    "CosineSeries",
    "RbmResolvent",
    "rbm_resolvent",
    "FineGridReference",
    "fine_grid_reference",
    "self_consistency_gap",
    "make_reference",
]


class CosineSeries:
    """Finite Neumann cosine expansion with closed-form integrals.

    Coefficients are against the orthonormal basis ``e_0 = 1``,
    ``e_k = sqrt(2) cos(k pi x)`` on [0, 1] with Lebesgue measure.
    """

    label = "cosine_series"

    def __init__(self, coefficients):
        coef = np.array(coefficients, dtype=float)
        coef.setflags(write=False)
        self.coefficients = coef
        self._plain = None  # plain-cosine coefficients of the square, cached

    @property
    def modes(self):
        return self.coefficients.size - 1

    def value(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        ks = np.arange(1, self.coefficients.size)
        out = np.full(arr.shape, self.coefficients[0])
        if ks.size:
            out = out + (np.cos(np.outer(arr, ks) * math.pi)
                         * (math.sqrt(2.0) * self.coefficients[1:])).sum(axis=1)
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out[0])
        return out

    __call__ = value

    @staticmethod
    def _cos_integral(q, a, b):
        if q == 0:
            return b - a
        w = q * math.pi
        return (math.sin(w * b) - math.sin(w * a)) / w

    def integral(self, a, b):
        total = self.coefficients[0] * (b - a)
        for k in range(1, self.coefficients.size):
            total += math.sqrt(2.0) * self.coefficients[k] * self._cos_integral(k, a, b)
        return float(total)

    def _square_plain_coefficients(self):
        # The square of a cosine polynomial is a cosine polynomial of twice
        # the order: cos(j) cos(k) = (cos(j+k) + cos(|j-k|)) / 2.
        if self._plain is None:
            plain = self.coefficients.copy()
            plain[1:] *= math.sqrt(2.0)
            sq = np.zeros(2 * (plain.size - 1) + 1)
            for j in range(plain.size):
                for k in range(plain.size):
                    prod = 0.5 * plain[j] * plain[k]
                    sq[j + k] += prod
                    sq[abs(j - k)] += prod
            self._plain = sq
        return self._plain

    def square_integral(self, a, b):
        sq = self._square_plain_coefficients()
        return float(sum(c * self._cos_integral(q, a, b)
                         for q, c in enumerate(sq) if c != 0.0))

    def energy(self):
        """Dirichlet energy ``(1/2) ∫ (d/dx)^2``: sum_k c_k^2 k^2 pi^2 / 2."""
        ks = np.arange(self.coefficients.size)
        return float(np.sum(self.coefficients ** 2 * ks ** 2) * math.pi ** 2 / 2.0)


class RbmResolvent(CosineSeries):
    """Truncated resolvent of reflected Brownian motion applied to data u."""

    def __init__(self, coefficients, lam, tail_l2_bound, data_label):
        super().__init__(coefficients)
        self.lam = float(lam)
        self.tail_l2_bound = float(tail_l2_bound)
        self.label = f"rbm_resolvent({data_label}, lam={lam:g})"


def rbm_resolvent(lam, u, modes=64):
    """Closed-form flat-case resolvent applied to ``u``.

    ``u`` must expose ``cos_inner`` (every test-function kind here does).
    The truncation tail is bounded in L2 by Bessel:
    ``sqrt(||u||^2 - sum u_k^2) / (lam + (modes+1)^2 pi^2 / 2)``; the bound
    is zero whenever u is itself a finite cosine polynomial.
    """
    if lam <= 0.0:
        raise DomainError("the resolvent parameter must be positive")
    if int(modes) != modes or modes < 0:
        raise DomainError("modes must be a nonnegative integer")
    modes = int(modes)
    data = np.empty(modes + 1)
    for k in range(modes + 1):
        inner = u.cos_inner(k)
        data[k] = inner if k == 0 else math.sqrt(2.0) * inner
    eigen = 0.5 * (np.arange(modes + 1) * math.pi) ** 2
    coef = data / (lam + eigen)
    norm_sq = u.square_integral(0.0, 1.0)
    remainder = max(norm_sq - float(np.sum(data ** 2)), 0.0)
    tail = math.sqrt(remainder) / (lam + 0.5 * ((modes + 1) * math.pi) ** 2)
    return RbmResolvent(coef, lam, tail, getattr(u, "label", "u"))


@dataclass(frozen=True)
class FineGridReference:
    """Chain resolvent at a reference resolution, used as a continuum stand-in.

    The reference is piecewise constant on its own (much finer) uniform
    partition, so distances against coarser piecewise-constant functions
    are exact.  ``self_consistency_gap`` reports how much the reference
    moves when its resolution doubles.
    """

    scale: object
    speed: object
    lam: float
    u: object
    n_ref: int
    chain: object
    solution: np.ndarray
    piecewise_constant: PiecewiseConstantFunction

    @property
    def label(self):
        return f"fine_grid(n_ref={self.n_ref})"

    def value(self, x):
        return self.piecewise_constant.value(x)

    def energy(self):
        return dirichlet_energy(self.chain, self.solution)


def fine_grid_reference(scale, speed, lam, u, n_ref):
    """Solve the trace-chain resolvent on a uniform ``n_ref`` grid."""
    if lam <= 0.0:
        raise DomainError("the resolvent parameter must be positive")
    part = build_partition("uniform", n=n_ref)
    chain = build_trace_chain(part, scale, speed)
    g = solve_shifted(generator_matrix(chain), lam, project(part, speed, u))
    return FineGridReference(
        scale=scale, speed=speed, lam=float(lam), u=u, n_ref=int(n_ref),
        chain=chain, solution=g, piecewise_constant=extend(part, g),
    )


def self_consistency_gap(reference, factor=2):
    """Exact L2(m) gap between the oracle and a ``factor`` times finer one.

    The reported errors of a convergence sweep are only meaningful down to
    this gap; callers should check the smallest error stays above it.
    """
    finer = fine_grid_reference(reference.scale, reference.speed,
                                reference.lam, reference.u,
                                factor * reference.n_ref)
    gap = l2_distance_pc(reference.speed, reference.piecewise_constant,
                         finer.piecewise_constant)
    return gap, finer


def _is_lebesgue(speed):
    return (speed.atom_weights.size == 0
            and np.allclose(speed.densities, 1.0)
            and speed.breakpoints[0] == 0.0 and speed.breakpoints[-1] == 1.0)


def make_reference(kind, scale, speed, lam, u, modes=64, n_ref=4096):
    """Build the reference named by ``kind`` for the scenario (scale, speed).

    ``closed_form`` demands the flat scenario (identity scale, Lebesgue
    speed); anything else must use the fine-grid oracle.
    """
    if kind == "closed_form":
        if scale.kind != "identity" or not _is_lebesgue(speed):
            raise ValidationError(
                "closed_form reference exists only for the identity scale "
                "with Lebesgue speed; use a fine_grid reference instead"
            )
        return rbm_resolvent(lam, u, modes=modes)
    if kind == "fine_grid":
        return fine_grid_reference(scale, speed, lam, u, n_ref)
    raise ValidationError(f"unknown reference kind {kind!r}")
