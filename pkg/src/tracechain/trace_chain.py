"""Trace chains: partition, cell masses, conductances, rates, discrete form.

Given a partition ``0 = a_1 < ... < a_{n+1} = 1`` the chain lives on the
first ``n`` points.  Cell masses are ``m([a_i, a_{i+1}))`` for ``i < n``
and ``m([a_n, 1])`` for the last state, so the grid masses always sum to
the full measure of [0, 1].  Neighbouring states x, y are coupled by the
conductance ``1 / (2 |s(x) - s(y)|)``; each state holds for an exponential
time with rate (sum of incident conductances) / (its mass) and then jumps
to a neighbour with probability proportional to the conductance.

Note that the right endpoint 1 is never a chain state: the chain reflects
at the last grid point ``a_n``, and harmonic extensions are constant on
``[a_n, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCellError,
    DomainError,
    ScaleDegeneracyError,
    ValidationError,
)
from .linalg import TridiagonalOperator
from .scale_speed import DEFAULT_REMOVALS, build_fat_cantor_scale

__all__ = [
    "Partition",
    "ChainSpec",
    "build_partition",
    "cell_masses",
    "build_trace_chain",
    "dirichlet_energy",
    "interpolation_energy",
    "harmonic_extension",
    "hitting_prob_right",
    "generator_matrix",
]


def _readonly(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Partition:
    """Sorted partition points of [0, 1], endpoints included."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(self.points))
        pts = self.points
        if pts.ndim != 1 or pts.size < 2:
            raise ValidationError("a partition needs at least two points")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise ValidationError("partition must start at 0 and end at 1")
        if np.any(np.diff(pts) <= 0.0):
            raise ValidationError("partition points must be strictly increasing")

    @property
    def n_states(self):
        """Number of chain states (= number of cells); excludes the point 1."""
        return self.points.size - 1

    @property
    def states(self):
        return self.points[:-1]

    @property
    def mesh(self):
        return float(np.max(np.diff(self.points)))

    def is_refinement_of(self, coarser):
        """True when every point of ``coarser`` appears in this partition."""
        return bool(np.isin(coarser.points, self.points).all())


def build_partition(kind="uniform", n=None, points=None, depth=None,
                    removals=DEFAULT_REMOVALS):
    """Build a partition of [0, 1].

    kind = "uniform"        : n equal cells (n >= 2).
    kind = "explicit"       : validated user-supplied point list.
    kind = "svc_endpoints"  : all endpoints of the depth-``depth`` remaining
                              intervals of the fat-Cantor construction, where
                              the fat-Cantor scale evaluates exactly.
    """
    if kind == "uniform":
        if n is None or int(n) != n or n < 2:
            raise ValidationError("uniform partition needs an integer n >= 2")
        return Partition(np.linspace(0.0, 1.0, int(n) + 1))
    if kind == "explicit":
        if points is None:
            raise ValidationError("explicit partition needs a point list")
        return Partition(np.asarray(points, dtype=float))
    if kind == "svc_endpoints":
        if depth is None:
            raise ValidationError("svc_endpoints partition needs a depth")
        return Partition(build_fat_cantor_scale(depth, removals).knots_x)
    raise ValidationError(f"unknown partition kind {kind!r}")


@dataclass(frozen=True)
class ChainSpec:
    """The trace chain of (scale, speed) on a partition; immutable."""

    partition: Partition
    grid: np.ndarray            # state positions, the partition minus the point 1
    scale_values: np.ndarray    # s at all partition points
    masses: np.ndarray          # per-state speed-measure mass
    conductances: np.ndarray    # between consecutive states, length n-1
    rates: np.ndarray           # exponential holding rates
    jump_right: np.ndarray      # probability of jumping right at each state

    def __post_init__(self):
        for name in ("grid", "scale_values", "masses", "conductances",
                     "rates", "jump_right"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def n_states(self):
        return self.grid.size

    @property
    def total_mass(self):
        return float(np.sum(self.masses))

    @property
    def stationary_weights(self):
        """Normalised stationary law (the chain is reversible w.r.t. masses)."""
        return self.masses / self.total_mass

    def to_dict(self):
        """JSON-ready description (grid, masses, conductances, rates, jumps)."""
        return {
            "n_states": int(self.n_states),
            "partition": self.partition.points.tolist(),
            "grid": self.grid.tolist(),
            "scale_values": self.scale_values.tolist(),
            "masses": self.masses.tolist(),
            "conductances": self.conductances.tolist(),
            "rates": self.rates.tolist(),
            "jump_right": self.jump_right.tolist(),
            "jump_left": (1.0 - self.jump_right).tolist(),
            "total_mass": self.total_mass,
        }


def cell_masses(partition, speed):
    """Per-state masses: half-open cells, except the last cell closed at 1."""
    pts = partition.points
    n = partition.n_states
    masses = np.empty(n)
    for i in range(n - 1):
        masses[i] = speed.mass(pts[i], pts[i + 1])
    masses[n - 1] = speed.mass(pts[n - 1], pts[n], include_right=True)
    return masses


def build_trace_chain(partition, scale, speed):
    """Build the trace chain of the diffusion (scale, speed) on a partition.

    Raises :class:`DegenerateCellError` when a cell has zero speed-measure
    mass (the trace is undefined there) and :class:`ScaleDegeneracyError`
    when two neighbouring states share a scale value (impossible for a
    valid scale, but checked).
    """
    n = partition.n_states
    if n < 2:
        raise ValidationError("a chain needs at least two states")
    pts = partition.points
    svals = scale.value(pts)

    masses = cell_masses(partition, speed)
    for i in range(n):
        if masses[i] <= 0.0:
            right = "]" if i == n - 1 else ")"
            raise DegenerateCellError(
                f"cell {i} = [{pts[i]:.17g}, {pts[i + 1]:.17g}{right} carries "
                "zero speed-measure mass"
            )

    ds = np.diff(svals[:n])
    bad = np.nonzero(ds <= 0.0)[0]
    if bad.size:
        i = int(bad[0])
        raise ScaleDegeneracyError(
            f"scale does not separate states {i} and {i + 1}"
        )
    conduct = 1.0 / (2.0 * ds)

    incident = np.zeros(n)
    incident[:-1] += conduct
    incident[1:] += conduct
    rates = incident / masses

    jump_right = np.zeros(n)
    jump_right[0] = 1.0
    jump_right[1:-1] = conduct[1:] / (conduct[:-1] + conduct[1:])

    return ChainSpec(
        partition=partition,
        grid=pts[:n],
        scale_values=svals,
        masses=masses,
        conductances=conduct,
        rates=rates,
        jump_right=jump_right,
    )


def dirichlet_energy(chain, phi, psi=None):
    """Discrete Dirichlet form of the chain.

    ``dirichlet_energy(chain, phi)`` is the quadratic form
    ``sum_i c_i (phi_{i+1} - phi_i)^2``, equal to the half-sum over ordered
    state pairs weighted by the conductances; passing ``psi`` evaluates the
    bilinear form.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (chain.n_states,):
        raise ValidationError("grid function length must match the chain")
    dphi = np.diff(phi)
    if psi is None:
        return float(np.sum(chain.conductances * dphi * dphi))
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (chain.n_states,):
        raise ValidationError("grid function length must match the chain")
    return float(np.sum(chain.conductances * dphi * np.diff(psi)))


def interpolation_energy(partition, scale, values):
    """Energy of the linear-in-s interpolant through all partition points.

    ``values`` holds one entry per partition point (n + 1 of them).  Unlike
    the chain form, the last cell contributes, so for ``u = s`` restricted
    to the points this telescopes to exactly ``(s(1) - s(0)) / 2``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (partition.points.size,):
        raise ValidationError("need one value per partition point")
    ds = np.diff(scale.value(partition.points))
    dv = np.diff(values)
    return float(0.5 * np.sum(dv * dv / ds))


def harmonic_extension(chain, scale, phi, x):
    """Evaluate the energy-minimising extension of grid values at ``x``.

    Linear in s between bracketing grid states, constant (= last grid
    value) on ``[a_n, 1]``; agrees with ``phi`` at the states.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (chain.n_states,):
        raise ValidationError("grid function length must match the chain")
    arr = np.asarray(x, dtype=float)
    if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
        raise DomainError("x must lie in [0, 1]")

    grid = chain.grid
    svals = chain.scale_values[: chain.n_states]
    idx = np.clip(np.searchsorted(grid, arr, side="right") - 1, 0, chain.n_states - 1)
    last = idx >= chain.n_states - 1
    lo = np.where(last, chain.n_states - 2, idx)
    s_x = scale.value(arr)
    slope_num = phi[lo + 1] - phi[lo]
    slope_den = svals[lo + 1] - svals[lo]
    interp = phi[lo] + slope_num * (s_x - svals[lo]) / slope_den
    out = np.where(last, phi[chain.n_states - 1], interp)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def hitting_prob_right(scale, a, b, x):
    """P_x[hit b before a] = (s(x) - s(a)) / (s(b) - s(a)) for a < x < b."""
    if not (a < x < b):
        raise DomainError("need a < x < b")
    sa, sb, sx = scale.value(a), scale.value(b), scale.value(x)
    return (sx - sa) / (sb - sa)


def generator_matrix(chain):
    """Generator L as a tridiagonal operator symmetric w.r.t. the masses.

    Off-diagonals are conductance / mass, the diagonal is minus the holding
    rate, so rows sum to zero and ``m_i L(i, j) = m_j L(j, i)`` (both sides
    equal the conductance of the edge).
    """
    sup = chain.conductances / chain.masses[:-1]
    sub = chain.conductances / chain.masses[1:]
    return TridiagonalOperator(
        sub=sub, diag=-chain.rates, sup=sup, weights=chain.masses
    )
