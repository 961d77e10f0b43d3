"""Grid/continuum transfer operators and convergence certificates.

Three transfer maps connect grid functions with functions on [0, 1]:

* ``extend``   : piecewise-constant extension (last cell closed at 1);
* ``project``  : speed-measure cell averages;
* ``restrict`` : pointwise restriction to the grid states.

``project`` is a left inverse of ``extend``, the two are adjoint between
the grid inner product and L2(m), and ``extend`` is an isometry; all three
identities are exact up to round-off because every integral involved is
closed-form.  On top of these the module computes the convergence metrics
that certify the chain resolvents against a continuum reference: the
L2(m) error of the extended chain resolvent, and the form-norm (energy
plus mass) error against the reference restricted to the grid.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import CheckFailed, DegenerateCellError, DomainError, ValidationError
from .linalg import solve_shifted
from .scale_speed import PiecewiseLinearFunction, SAdaptedFunction, continuous_energy
from .trace_chain import (
    build_partition,
    build_trace_chain,
    cell_masses,
    dirichlet_energy,
    generator_matrix,
    interpolation_energy,
)

__all__ = [
    "PiecewiseConstantFunction",
    "extend",
    "project",
    "restrict",
    "grid_inner",
    "grid_norm",
    "IdentityCheckReport",
    "adjoint_identities_check",
    "l2_distance_pc",
    "l2_error",
    "ConvergenceRecord",
    "ConvergenceReport",
    "convergence_sweep",
    "resolvent_convergence",
    "corollary_energy_convergence",
    "EnergyBoundRow",
    "EnergyBoundReport",
    "energy_upper_bound_check",
]


@dataclass(frozen=True)
class PiecewiseConstantFunction:
    """One value per partition cell; right continuous, last cell closed."""

    partition: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.partition.n_states,):
            raise ValidationError("need one value per partition cell")

    def value(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
            raise DomainError("x must lie in [0, 1]")
        idx = np.searchsorted(self.partition.points, arr, side="right") - 1
        idx = np.clip(idx, 0, self.partition.n_states - 1)
        out = self.values[idx]
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out)
        return out

    __call__ = value

    def _overlaps(self, a, b):
        pts = self.partition.points
        lo = np.maximum(pts[:-1], a)
        hi = np.minimum(pts[1:], b)
        return np.clip(hi - lo, 0.0, None)

    def integral(self, a, b):
        return float(np.sum(self.values * self._overlaps(a, b)))

    def square_integral(self, a, b):
        return float(np.sum(self.values ** 2 * self._overlaps(a, b)))

    def l2_norm(self, speed):
        masses = cell_masses(self.partition, speed)
        return float(np.sqrt(np.sum(masses * self.values ** 2)))


def extend(partition, v):
    """Piecewise-constant extension of grid values to [0, 1].

    By the last-cell mass convention this is an exact isometry:
    ``||extend(v)||_{L2(m)} == ||v||_{m_n}``.
    """
    return PiecewiseConstantFunction(partition, np.asarray(v, dtype=float))


def project(partition, speed, u):
    """Speed-measure cell averages of ``u`` (exact, no quadrature)."""
    pts = partition.points
    n = partition.n_states
    masses = cell_masses(partition, speed)
    out = np.empty(n)
    for i in range(n):
        if masses[i] <= 0.0:
            raise DegenerateCellError(f"cell {i} has zero mass, average undefined")
        out[i] = speed.integrate(u, pts[i], pts[i + 1],
                                 include_right=(i == n - 1)) / masses[i]
    return out


def restrict(partition, u):
    """Pointwise values of ``u`` at the grid states."""
    return np.asarray(u.value(partition.states), dtype=float)


def grid_inner(masses, v, w):
    """Mass-weighted inner product of two grid functions."""
    return float(np.sum(np.asarray(masses) * np.asarray(v) * np.asarray(w)))


def grid_norm(masses, v):
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(np.sum(np.asarray(masses) * v * v)))


# ---------------------------------------------------------------------------
# Exact identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityCheckReport:
    """Largest absolute deviations seen over randomized trials."""

    adjoint: float
    left_inverse: float
    isometry: float
    trials: int

    @property
    def max_deviation(self):
        return max(self.adjoint, self.left_inverse, self.isometry)


def _random_pwl(rng):
    xs = np.unique(np.concatenate(([0.0, 1.0], rng.uniform(0.0, 1.0, 4))))
    ys = rng.normal(0.0, 1.0, xs.size)
    return PiecewiseLinearFunction(np.column_stack((xs, ys)))


def adjoint_identities_check(partition, speed, trials=100, seed=0):
    """Verify the exact transfer identities on randomized inputs.

    Over ``trials`` random (f, v) pairs checks
    ``<project f, v>_n == <f, extend v>_{L2(m)}``,
    ``project(extend(v)) == v`` and ``||extend v||_{L2(m)} == ||v||_n``,
    returning the worst absolute deviations (round-off sized whenever the
    partition and measure are healthy).
    """
    rng = np.random.default_rng(seed)
    masses = cell_masses(partition, speed)
    pts = partition.points
    n = partition.n_states
    worst_adj = worst_inv = worst_iso = 0.0
    for _ in range(trials):
        f = _random_pwl(rng)
        v = rng.normal(0.0, 1.0, n)

        pf = project(partition, speed, f)
        lhs = grid_inner(masses, pf, v)
        rhs = 0.0
        for i in range(n):
            rhs += v[i] * speed.integrate(f, pts[i], pts[i + 1],
                                          include_right=(i == n - 1))
        worst_adj = max(worst_adj, abs(lhs - rhs))

        back = project(partition, speed, extend(partition, v))
        worst_inv = max(worst_inv, float(np.max(np.abs(back - v))))

        ext_norm = extend(partition, v).l2_norm(speed)
        worst_iso = max(worst_iso, abs(ext_norm - grid_norm(masses, v)))
    return IdentityCheckReport(worst_adj, worst_inv, worst_iso, trials)


# ---------------------------------------------------------------------------
# L2(m) distances
# ---------------------------------------------------------------------------

def l2_distance_pc(speed, first, second):
    """Exact L2(m) distance of two piecewise-constant functions.

    Both are constant on every cell of the merged partition, so the
    squared distance is a finite sum of cell masses; no quadrature enters.
    """
    pts = np.unique(np.concatenate((first.partition.points,
                                    second.partition.points)))
    total = 0.0
    for j in range(pts.size - 1):
        lo, hi = float(pts[j]), float(pts[j + 1])
        diff = first.value(lo) - second.value(lo)
        mass = speed.mass(lo, hi, include_right=(j == pts.size - 2))
        total += diff * diff * mass
    return float(np.sqrt(total))


def l2_error(speed, approx, reference):
    """Exact ``||approx - reference||_{L2(m)}`` for a piecewise-constant approx.

    A piecewise-constant reference goes through the merged-partition sum;
    anything exposing closed-form ``integral`` / ``square_integral``
    (cosine series, test functions) is expanded cellwise.
    """
    ref_pc = getattr(reference, "piecewise_constant", None)
    if ref_pc is not None:
        return l2_distance_pc(speed, approx, ref_pc)
    if isinstance(reference, PiecewiseConstantFunction):
        return l2_distance_pc(speed, approx, reference)
    pts = approx.partition.points
    n = approx.partition.n_states
    total = 0.0
    for i in range(n):
        lo, hi = float(pts[i]), float(pts[i + 1])
        last = i == n - 1
        v = float(approx.values[i])
        cell_mass = speed.mass(lo, hi, include_right=last)
        cross = speed.integrate(reference, lo, hi, include_right=last)
        square = speed.integrate_sq(reference, lo, hi, include_right=last)
        total += v * v * cell_mass - 2.0 * v * cross + square
    return float(np.sqrt(max(total, 0.0)))


# ---------------------------------------------------------------------------
# Convergence sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    err_l2: float
    err_e1: float
    energy_chain: float
    energy_reference: float
    wall_time: float


@dataclass(frozen=True)
class ConvergenceReport:
    label: str
    lam: float
    reference_label: str
    records: tuple

    def __post_init__(self):
        ns = [r.n for r in self.records]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValidationError("resolutions must be strictly increasing")

    @property
    def err_l2(self):
        return np.array([r.err_l2 for r in self.records])

    @property
    def err_e1(self):
        return np.array([r.err_e1 for r in self.records])


def convergence_sweep(scale, speed, u, lam, resolutions, reference):
    """Solve the chain resolvent at each resolution and measure both errors.

    For each ``n``: build the uniform-``n`` trace chain, apply its resolvent
    to the projected data, then record

    * ``err_l2``: L2(m) distance of the extended solution from the
      reference solution;
    * ``err_e1``: form norm (energy + mass) of the difference between the
      reference restricted to the grid and the chain solution.

    The reference must expose ``value`` (for the restriction) and either a
    piecewise-constant representation or closed-form integrals (for the
    exact L2 distance).
    """
    if lam <= 0.0:
        raise DomainError("the resolvent parameter must be positive")
    records = []
    for n in resolutions:
        t0 = time.perf_counter()
        part = build_partition("uniform", n=n)
        chain = build_trace_chain(part, scale, speed)
        pn = project(part, speed, u)
        g = solve_shifted(generator_matrix(chain), lam, pn)

        err_l2 = l2_error(speed, extend(part, g), reference)
        ref_on_grid = np.asarray(reference.value(chain.grid), dtype=float)
        d = ref_on_grid - g
        err_e1 = float(np.sqrt(dirichlet_energy(chain, d)
                               + grid_norm(chain.masses, d) ** 2))
        energy_chain = dirichlet_energy(chain, g)
        energy_reference = float(reference.energy()) if hasattr(reference, "energy") else float("nan")
        records.append(ConvergenceRecord(
            n=int(n), err_l2=err_l2, err_e1=err_e1, energy_chain=energy_chain,
            energy_reference=energy_reference,
            wall_time=time.perf_counter() - t0,
        ))
    return ConvergenceReport(
        label=getattr(u, "label", "u"),
        lam=float(lam),
        reference_label=getattr(reference, "label", type(reference).__name__),
        records=tuple(records),
    )


def resolvent_convergence(scale, speed, u, lam, resolutions, reference):
    """Convergence of the extended chain resolvents in L2(m).

    The ``err_l2`` column of the report is the certified metric; it must
    trend to zero as the mesh refines for the approximation to be sound.
    """
    return convergence_sweep(scale, speed, u, lam, resolutions, reference)


def corollary_energy_convergence(scale, speed, u, lam, resolutions, reference):
    """Convergence in the chain form norm (the ``err_e1`` column)."""
    return convergence_sweep(scale, speed, u, lam, resolutions, reference)


# ---------------------------------------------------------------------------
# Energy upper bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBoundRow:
    n_states: int
    chain_energy: float
    interpolation_energy: float
    projection_energy: float


@dataclass(frozen=True)
class EnergyBoundReport:
    label: str
    continuum_energy: float
    rows: tuple


def energy_upper_bound_check(scale, speed, u, partitions, tol=1e-12):
    """Certify the discrete-energy upper bounds for an s-adapted function.

    For every partition the chain energy of the grid restriction and the
    energy of the linear-in-s interpolant through all partition points must
    not exceed the continuous energy, and both must be nondecreasing along
    nested refinements (consecutive partitions that refine each other).
    The chain form ignores the last cell (the point 1 is not a state), so
    only the all-points interpolant attains equality for u = s; the
    projection energy is reported for reference but not asserted, since
    cell averaging is not an energy contraction in general.

    Raises :class:`CheckFailed` on any violation; returns the report.
    """
    if not isinstance(u, SAdaptedFunction):
        raise DomainError("the energy bound check applies to s-adapted functions")
    cont = continuous_energy(scale, u)
    slack = tol * max(1.0, abs(cont))
    rows = []
    prev_part = None
    prev_row = None
    for part in partitions:
        chain = build_trace_chain(part, scale, speed)
        r_n = restrict(part, u)
        e_chain = dirichlet_energy(chain, r_n)
        e_interp = interpolation_energy(part, scale, u.value(part.points))
        e_proj = dirichlet_energy(chain, project(part, speed, u))
        if e_chain > cont + slack:
            raise CheckFailed(
                f"chain energy {e_chain} exceeds continuum energy {cont} "
                f"on {part.n_states} states"
            )
        if e_interp > cont + slack:
            raise CheckFailed(
                f"interpolation energy {e_interp} exceeds continuum energy "
                f"{cont} on {part.n_states} states"
            )
        row = EnergyBoundRow(part.n_states, e_chain, e_interp, e_proj)
        if prev_part is not None and part.is_refinement_of(prev_part):
            if row.chain_energy < prev_row.chain_energy - slack:
                raise CheckFailed("chain energy decreased under refinement")
            if row.interpolation_energy < prev_row.interpolation_energy - slack:
                raise CheckFailed("interpolation energy decreased under refinement")
        rows.append(row)
        prev_part, prev_row = part, row
    return EnergyBoundReport(label=getattr(u, "label", "u"),
                             continuum_energy=cont, rows=tuple(rows))
