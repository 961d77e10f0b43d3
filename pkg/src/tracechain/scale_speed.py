"""Scale functions, speed measures and closed-form test functions on [0, 1].

A reflected one-dimensional diffusion on the unit interval is determined by
a scale function ``s`` (continuous, strictly increasing, normalised to
``s(0) = 0``) and a speed measure ``m`` (a finite measure with full
support).  Every representation in this module is piecewise linear or
piecewise constant, so all downstream constructions (cell masses,
conductances, energies, cell averages) evaluate in closed form with no
quadrature error.

The singular example is the fat-Cantor scale ``s(x) = Leb([0, x] \\ C)``
for a Smith-Volterra-Cantor set ``C`` of positive measure, represented by
a depth-limited interval ledger: exact at every ledger endpoint,
proportional fill in between.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedEnergyClass, ValidationError

__all__ = [
    "ScaleFunction",
    "SpeedMeasure",
    "TestFunction",
    "CosineMode",
    "PolynomialFunction",
    "IndicatorFunction",
    "PiecewiseLinearFunction",
    "SAdaptedFunction",
    "scale_eval",
    "measure_interval",
    "build_fat_cantor_scale",
    "continuous_energy",
    "DEFAULT_REMOVALS",
]

#: Classical middle-4^(-k) removal schedule.  A single entry because the
#: schedule continues geometrically with ratio 1/4 past the end of the list.
DEFAULT_REMOVALS = (0.25,)


def _readonly(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_unit_interval(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _maybe_scalar(result, template):
    if np.isscalar(template) or np.ndim(template) == 0:
        return float(result)
    return result


# ---------------------------------------------------------------------------
# Scale functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleFunction:
    """Strictly increasing continuous map of [0, 1] with ``s(0) = 0``.

    Every supported kind is stored as a piecewise-linear backbone
    ``(knots_x, knots_s)``; evaluation is linear interpolation, which is
    exact for the piecewise-linear kinds and is the documented
    proportional-fill approximation for ``fat_cantor`` (exact at every
    knot, off by at most ``fill_error`` inside unresolved intervals).
    """

    kind: str
    knots_x: np.ndarray
    knots_s: np.ndarray
    depth: int = 0
    removals: tuple = ()
    fill_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "knots_x", _readonly(self.knots_x))
        object.__setattr__(self, "knots_s", _readonly(self.knots_s))
        kx, ks = self.knots_x, self.knots_s
        if kx.ndim != 1 or kx.shape != ks.shape or kx.size < 2:
            raise ValidationError("scale knots must be 1-d arrays of equal length >= 2")
        if kx[0] != 0.0 or kx[-1] != 1.0:
            raise ValidationError("scale must be defined on exactly [0, 1]")
        if ks[0] != 0.0:
            raise ValidationError("normalisation requires s(0) = 0")
        if np.any(np.diff(kx) <= 0.0) or np.any(np.diff(ks) <= 0.0):
            raise ValidationError("scale knots must be strictly increasing in x and s")

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls):
        return cls("identity", [0.0, 1.0], [0.0, 1.0])

    @classmethod
    def piecewise_linear(cls, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError("expected a sequence of (x, s(x)) pairs")
        return cls("piecewise_linear", pts[:, 0], pts[:, 1])

    @classmethod
    def tabulated(cls, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError("expected a sequence of (x, s(x)) pairs")
        return cls("tabulated", pts[:, 0], pts[:, 1])

    # -- evaluation --------------------------------------------------------

    def value(self, x):
        """Evaluate s at ``x`` (scalar or array) in [0, 1]."""
        arr = _check_unit_interval(x)
        return _maybe_scalar(np.interp(arr, self.knots_x, self.knots_s), x)

    __call__ = value

    def inverse(self, y):
        """Evaluate the inverse map on [0, s(1)] (exact for the backbone)."""
        arr = np.asarray(y, dtype=float)
        if arr.size and (np.min(arr) < 0.0 or np.max(arr) > self.range_length):
            raise DomainError("value outside the range of the scale")
        return _maybe_scalar(np.interp(arr, self.knots_s, self.knots_x), y)

    @property
    def range_length(self):
        """Total scale length s(1) - s(0)."""
        return float(self.knots_s[-1])


def scale_eval(scale, x):
    """Evaluate a :class:`ScaleFunction` at ``x`` in [0, 1]."""
    return scale.value(x)


def _removal_length(removals, k):
    # Round k (1-based) removes this much from each remaining interval;
    # past the end of the list the schedule continues with ratio 1/4.
    if k <= len(removals):
        return float(removals[k - 1])
    return float(removals[-1]) * 0.25 ** (k - len(removals))


def _limit_set_measure(removals):
    # Total removed mass: sum_k 2^(k-1) rho_k over the full (extended)
    # schedule.  The geometric tail with ratio 1/4 sums to 2^(K-1) rho_K.
    removed = sum(2.0 ** (k - 1) * rho for k, rho in enumerate(removals, start=1))
    removed += 2.0 ** (len(removals) - 1) * removals[-1]
    return 1.0 - removed


def build_fat_cantor_scale(depth, removals=DEFAULT_REMOVALS):
    """Depth-limited fat-Cantor (Smith-Volterra-Cantor) scale function.

    Round ``k`` removes an open interval of length ``removals[k-1]`` from
    the middle of each remaining interval; past the end of the list the
    schedule continues geometrically with ratio 1/4.  The default
    ``(0.25,)`` is therefore the classical middle-``4**-k`` construction
    whose limit set C keeps Lebesgue measure 1/2.

    The returned scale represents ``s(x) = Leb([0, x] \\ C)``:

    * exact at every endpoint of a depth-``depth`` remaining interval
      (each such interval carries limit mass ``residual / 2**depth``,
      which is ``2**-(depth+1)`` for the default schedule);
    * proportional fill inside unresolved intervals, which keeps the
      function strictly increasing and bounds the error by the
      per-interval limit mass (``fill_error`` on the result).

    Parameters
    ----------
    depth : int
        Number of removal rounds resolved into the knot ledger, >= 1.
    removals : sequence of float
        Per-round removed lengths; validated to fit and to leave a limit
        set of positive measure (otherwise the scale would degenerate to
        the identity or fail monotonicity).
    """
    if int(depth) != depth or depth < 1:
        raise ValidationError("depth must be a positive integer")
    depth = int(depth)
    removals = tuple(float(r) for r in removals)
    if not removals or any(r <= 0.0 for r in removals):
        raise ValidationError("removal lengths must be positive")
    residual = _limit_set_measure(removals)
    if residual <= 0.0:
        raise ValidationError(
            "removal schedule leaves a limit set of nonpositive measure; "
            "a fat Cantor scale needs residual mass > 0"
        )

    intervals = [(0.0, 1.0)]
    for k in range(1, depth + 1):
        rho = _removal_length(removals, k)
        nxt = []
        for lo, hi in intervals:
            width = hi - lo
            if rho >= width:
                raise ValidationError(
                    f"round {k} removes {rho} from an interval of width {width}"
                )
            half = (width - rho) / 2.0
            nxt.append((lo, lo + half))
            nxt.append((hi - half, hi))
        intervals = nxt

    # The unresolved tail must keep fitting as well.
    width = intervals[0][1] - intervals[0][0]
    k = depth + 1
    while True:
        rho = _removal_length(removals, k)
        if rho < 1e-300:
            break
        if rho >= width:
            raise ValidationError(f"removal schedule stops fitting at round {k}")
        width = (width - rho) / 2.0
        k += 1

    mass = residual / 2.0 ** depth
    ends = np.array(intervals, dtype=float).reshape(-1)
    idx = np.arange(len(intervals), dtype=float)
    knots_s = np.empty_like(ends)
    # Leb(C ∩ [0, left_i]) = i * mass and Leb(C ∩ [0, right_i]) = (i+1) * mass.
    knots_s[0::2] = ends[0::2] - idx * mass
    knots_s[1::2] = ends[1::2] - (idx + 1.0) * mass
    return ScaleFunction(
        "fat_cantor", ends, knots_s, depth=depth, removals=removals, fill_error=mass
    )


# ---------------------------------------------------------------------------
# Speed measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpeedMeasure:
    """Finite measure on [0, 1]: piecewise-constant density plus atoms.

    ``densities[j]`` applies on ``[breakpoints[j], breakpoints[j+1])``.
    Interval masses, integrals of test functions and integrals of their
    squares are all closed-form, which is what makes the downstream cell
    masses and projection averages exact.
    """

    breakpoints: np.ndarray
    densities: np.ndarray
    atom_positions: np.ndarray
    atom_weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _readonly(self.breakpoints))
        object.__setattr__(self, "densities", _readonly(self.densities))
        object.__setattr__(self, "atom_positions", _readonly(self.atom_positions))
        object.__setattr__(self, "atom_weights", _readonly(self.atom_weights))
        bp, dens = self.breakpoints, self.densities
        if bp.ndim != 1 or bp.size < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValidationError("density breakpoints must run from 0 to 1")
        if np.any(np.diff(bp) <= 0.0):
            raise ValidationError("density breakpoints must be strictly increasing")
        if dens.shape != (bp.size - 1,):
            raise ValidationError("need one density value per breakpoint cell")
        if np.any(dens < 0.0):
            raise ValidationError("density values must be nonnegative")
        pos, wts = self.atom_positions, self.atom_weights
        if pos.shape != wts.shape or pos.ndim != 1:
            raise ValidationError("atom positions and weights must align")
        if pos.size:
            if np.min(pos) < 0.0 or np.max(pos) > 1.0:
                raise ValidationError("atoms must lie in [0, 1]")
            if np.any(np.diff(pos) <= 0.0):
                raise ValidationError("atom positions must be strictly increasing")
            if np.any(wts <= 0.0):
                raise ValidationError("atom weights must be positive")
        total = self.mass(0.0, 1.0, include_right=True)
        if not (0.0 < total < math.inf):
            raise ValidationError("total mass must be positive and finite")

    @classmethod
    def lebesgue(cls):
        return cls.piecewise([0.0, 1.0], [1.0])

    @classmethod
    def piecewise(cls, breakpoints, values, atoms=()):
        """Build from density breakpoints/values and an (x, weight) atom list."""
        atoms = sorted((float(x), float(w)) for x, w in atoms)
        pos = [x for x, _ in atoms]
        wts = [w for _, w in atoms]
        return cls(np.asarray(breakpoints, float), np.asarray(values, float),
                   np.asarray(pos, float), np.asarray(wts, float))

    @property
    def total_mass(self):
        return self.mass(0.0, 1.0, include_right=True)

    # -- interval masses ---------------------------------------------------

    def _atom_slice(self, a, b, include_right):
        left = np.searchsorted(self.atom_positions, a, side="left")
        right = np.searchsorted(self.atom_positions, b,
                                side="right" if include_right else "left")
        return slice(left, max(left, right))

    def mass(self, a, b, include_right=False):
        """m([a, b)) by default, m([a, b]) with ``include_right``."""
        if a > b:
            raise DomainError("interval endpoints must satisfy a <= b")
        _check_unit_interval([a, b], "interval")
        lo = np.maximum(self.breakpoints[:-1], a)
        hi = np.minimum(self.breakpoints[1:], b)
        total = float(np.sum(self.densities * np.clip(hi - lo, 0.0, None)))
        total += float(np.sum(self.atom_weights[self._atom_slice(a, b, include_right)]))
        return total

    # -- closed-form integration against test functions ---------------------

    def integrate(self, u, a, b, include_right=False):
        """Exact ``∫_[a,b) u dm`` for any function exposing ``integral``."""
        if a > b:
            raise DomainError("interval endpoints must satisfy a <= b")
        total = 0.0
        for j in range(self.densities.size):
            lo = max(float(self.breakpoints[j]), a)
            hi = min(float(self.breakpoints[j + 1]), b)
            if hi > lo and self.densities[j] != 0.0:
                total += float(self.densities[j]) * u.integral(lo, hi)
        sl = self._atom_slice(a, b, include_right)
        for pos, wt in zip(self.atom_positions[sl], self.atom_weights[sl]):
            total += wt * float(u.value(pos))
        return total

    def integrate_sq(self, u, a, b, include_right=False):
        """Exact ``∫_[a,b) u^2 dm``."""
        if a > b:
            raise DomainError("interval endpoints must satisfy a <= b")
        total = 0.0
        for j in range(self.densities.size):
            lo = max(float(self.breakpoints[j]), a)
            hi = min(float(self.breakpoints[j + 1]), b)
            if hi > lo and self.densities[j] != 0.0:
                total += float(self.densities[j]) * u.square_integral(lo, hi)
        sl = self._atom_slice(a, b, include_right)
        for pos, wt in zip(self.atom_positions[sl], self.atom_weights[sl]):
            total += wt * float(u.value(pos)) ** 2
        return total


def measure_interval(measure, a, b, include_right=False):
    """Mass of [a, b) (or [a, b] with ``include_right``) under ``measure``."""
    return measure.mass(a, b, include_right=include_right)


# ---------------------------------------------------------------------------
# Test functions with closed-form integrals
# ---------------------------------------------------------------------------

class TestFunction:
    """Function on [0, 1] with exact interval integrals of u and u**2.

    Subclasses additionally expose ``cos_inner(k) = ∫ u(x) cos(k π x) dx``
    so that Neumann cosine expansions are quadrature-free.
    """

    label = "u"

    def value(self, x):
        raise NotImplementedError

    def integral(self, a, b):
        raise NotImplementedError

    def square_integral(self, a, b):
        raise NotImplementedError

    def cos_inner(self, k):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)


class CosineMode(TestFunction):
    """u(x) = cos(k pi x) for an integer mode k >= 0."""

    def __init__(self, mode):
        if int(mode) != mode or mode < 0:
            raise ValidationError("cosine mode must be a nonnegative integer")
        self.mode = int(mode)
        self.label = f"cosine_{self.mode}"

    def value(self, x):
        arr = np.asarray(x, dtype=float)
        return _maybe_scalar(np.cos(self.mode * math.pi * arr), x)

    def integral(self, a, b):
        if self.mode == 0:
            return b - a
        w = self.mode * math.pi
        return (math.sin(w * b) - math.sin(w * a)) / w

    def square_integral(self, a, b):
        if self.mode == 0:
            return b - a
        w = self.mode * math.pi
        return 0.5 * (b - a) + (math.sin(2 * w * b) - math.sin(2 * w * a)) / (4 * w)

    def derivative_square_integral(self, a, b):
        # ∫ (k pi)^2 sin^2(k pi x) dx
        if self.mode == 0:
            return 0.0
        w = self.mode * math.pi
        return w * w * (0.5 * (b - a) - (math.sin(2 * w * b) - math.sin(2 * w * a)) / (4 * w))

    def cos_inner(self, k):
        if k == self.mode:
            return 1.0 if k == 0 else 0.5
        return 0.0


class PolynomialFunction(TestFunction):
    """Polynomial with coefficients in increasing degree order."""

    def __init__(self, coefficients):
        self.poly = np.polynomial.Polynomial(np.asarray(coefficients, dtype=float))
        self.label = f"poly_deg{self.poly.degree()}"

    def value(self, x):
        arr = np.asarray(x, dtype=float)
        return _maybe_scalar(self.poly(arr), x)

    def integral(self, a, b):
        anti = self.poly.integ()
        return float(anti(b) - anti(a))

    def square_integral(self, a, b):
        anti = (self.poly * self.poly).integ()
        return float(anti(b) - anti(a))

    def derivative_square_integral(self, a, b):
        d = self.poly.deriv()
        anti = (d * d).integ()
        return float(anti(b) - anti(a))

    def cos_inner(self, k):
        coef = self.poly.coef
        if k == 0:
            return self.integral(0.0, 1.0)
        w = k * math.pi
        cosk = -1.0 if k % 2 else 1.0
        # C_n = ∫ x^n cos(wx) dx and S_n = ∫ x^n sin(wx) dx on [0, 1];
        # sin(k pi) = 0 collapses the boundary terms, and C_0 = 0.
        c_prev, s_prev = 0.0, (1.0 - cosk) / w
        total = 0.0
        for n in range(1, coef.size):
            c_n = -(n / w) * s_prev
            s_n = (-cosk + n * c_prev) / w
            total += coef[n] * c_n
            c_prev, s_prev = c_n, s_n
        return total


class IndicatorFunction(TestFunction):
    """Indicator of the half-open interval [a, b)."""

    def __init__(self, a, b):
        if not (0.0 <= a < b <= 1.0):
            raise ValidationError("indicator needs 0 <= a < b <= 1")
        self.a = float(a)
        self.b = float(b)
        self.label = f"indicator_{self.a:g}_{self.b:g}"

    def value(self, x):
        arr = np.asarray(x, dtype=float)
        return _maybe_scalar(((arr >= self.a) & (arr < self.b)).astype(float), x)

    def _overlap(self, a, b):
        return max(0.0, min(b, self.b) - max(a, self.a))

    def integral(self, a, b):
        return self._overlap(a, b)

    square_integral = integral

    def cos_inner(self, k):
        if k == 0:
            return self.b - self.a
        w = k * math.pi
        return (math.sin(w * self.b) - math.sin(w * self.a)) / w


class PiecewiseLinearFunction(TestFunction):
    """Piecewise-linear interpolation of a (x, y) table, constant outside it.

    The table is normalised at construction to span [0, 1] by padding with
    flat end segments, so interval integrals never need extension logic.
    """

    def __init__(self, points, label=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValidationError("expected at least two (x, y) pairs")
        xs, ys = pts[:, 0], pts[:, 1]
        if np.any(np.diff(xs) <= 0.0):
            raise ValidationError("piecewise-linear breakpoints must increase")
        if xs[0] < 0.0 or xs[-1] > 1.0:
            raise ValidationError("piecewise-linear table must lie inside [0, 1]")
        if xs[0] > 0.0:
            xs = np.concatenate(([0.0], xs))
            ys = np.concatenate(([ys[0]], ys))
        if xs[-1] < 1.0:
            xs = np.concatenate((xs, [1.0]))
            ys = np.concatenate((ys, [ys[-1]]))
        self.xs = _readonly(xs)
        self.ys = _readonly(ys)
        self.label = label or f"pwl_{self.xs.size}pts"

    def value(self, x):
        arr = _np_interp_checked(x, self.xs, self.ys)
        return _maybe_scalar(arr, x)

    def _segments(self, a, b):
        # Yield (lo, hi, y_lo, y_hi) pieces of the table clipped to [a, b].
        for j in range(self.xs.size - 1):
            lo = max(float(self.xs[j]), a)
            hi = min(float(self.xs[j + 1]), b)
            if hi > lo:
                y_lo = float(np.interp(lo, self.xs, self.ys))
                y_hi = float(np.interp(hi, self.xs, self.ys))
                yield lo, hi, y_lo, y_hi

    def integral(self, a, b):
        return sum(0.5 * (ylo + yhi) * (hi - lo) for lo, hi, ylo, yhi in self._segments(a, b))

    def square_integral(self, a, b):
        return sum((ylo * ylo + ylo * yhi + yhi * yhi) / 3.0 * (hi - lo)
                   for lo, hi, ylo, yhi in self._segments(a, b))

    def cos_inner(self, k):
        if k == 0:
            return self.integral(0.0, 1.0)
        w = k * math.pi
        total = 0.0
        for lo, hi, ylo, yhi in self._segments(0.0, 1.0):
            slope = (yhi - ylo) / (hi - lo)
            total += (yhi * math.sin(w * hi) - ylo * math.sin(w * lo)) / w
            total += slope * (math.cos(w * hi) - math.cos(w * lo)) / (w * w)
        return total


def _np_interp_checked(x, xs, ys):
    return np.interp(np.asarray(x, dtype=float), xs, ys)


class SAdaptedFunction(TestFunction):
    """u = g ∘ s for a piecewise-linear g given in scale coordinates.

    ``g_points`` is a table of (y, g(y)) pairs with y in scale coordinates;
    g extends constantly outside its table.  The composition is itself
    piecewise linear in x (every scale here has a piecewise-linear
    backbone), so evaluation and integration delegate to that composition.
    """

    def __init__(self, g_points, scale, label=None):
        pts = np.asarray(g_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValidationError("expected at least two (y, g(y)) pairs")
        if np.any(np.diff(pts[:, 0]) <= 0.0):
            raise ValidationError("g breakpoints must be strictly increasing")
        self.g_knots_s = _readonly(pts[:, 0])
        self.g_values = _readonly(pts[:, 1])
        self.scale = scale
        s1 = scale.range_length
        inner = pts[(pts[:, 0] > 0.0) & (pts[:, 0] < s1), 0]
        xs = np.unique(np.concatenate((scale.knots_x, scale.inverse(inner))))
        vals = np.interp(scale.value(xs), self.g_knots_s, self.g_values)
        self.composed = PiecewiseLinearFunction(np.column_stack((xs, vals)))
        self.label = label or f"s_adapted_{pts.shape[0]}pts"

    @classmethod
    def scale_itself(cls, scale):
        """The test function u = s (g is the identity on the scale range)."""
        s1 = scale.range_length
        return cls([(0.0, 0.0), (s1, s1)], scale, label="s_adapted_identity")

    def value(self, x):
        return self.composed.value(x)

    def integral(self, a, b):
        return self.composed.integral(a, b)

    def square_integral(self, a, b):
        return self.composed.square_integral(a, b)

    def cos_inner(self, k):
        return self.composed.cos_inner(k)


# ---------------------------------------------------------------------------
# Continuous Dirichlet energy
# ---------------------------------------------------------------------------

def continuous_energy(scale, u):
    """Closed-form ``(1/2) ∫ (du/ds)^2 ds`` over [0, 1].

    Supported classes:

    * ``u`` s-adapted (u = g ∘ s with g piecewise linear): any scale.
      The pushforward of ds under s is Lebesgue measure on [0, s(1)], so
      the energy is ``(1/2) ∫_0^{s(1)} g'(y)^2 dy``.
    * scale of kind identity / piecewise_linear / tabulated: ``u`` may be a
      cosine mode, polynomial or piecewise-linear table, with
      ``du/ds = u'(x) / s'(x)`` cellwise.

    Anything else raises :class:`UnsupportedEnergyClass`; in particular a
    smooth ``u`` against the fat-Cantor scale is rejected rather than
    silently evaluated on the depth-limited fill (the limit energy is not
    finite there).
    """
    if isinstance(u, SAdaptedFunction):
        if u.scale is not scale:
            raise UnsupportedEnergyClass(
                "s-adapted function was built against a different scale"
            )
        s1 = scale.range_length
        total = 0.0
        ys, gs = u.g_knots_s, u.g_values
        for j in range(ys.size - 1):
            lo = max(float(ys[j]), 0.0)
            hi = min(float(ys[j + 1]), s1)
            if hi > lo:
                slope = (gs[j + 1] - gs[j]) / (ys[j + 1] - ys[j])
                total += slope * slope * (hi - lo)
        return 0.5 * total

    if scale.kind == "fat_cantor":
        raise UnsupportedEnergyClass(
            "only s-adapted functions have a computable energy against a "
            "singular (fat_cantor) scale"
        )

    if isinstance(u, PiecewiseLinearFunction):
        xs = np.unique(np.concatenate((scale.knots_x, u.xs)))
        svals = scale.value(xs)
        uvals = u.value(xs)
        du = np.diff(uvals)
        ds = np.diff(svals)
        return float(0.5 * np.sum(du * du / ds))

    if isinstance(u, (CosineMode, PolynomialFunction)):
        total = 0.0
        kx, ks = scale.knots_x, scale.knots_s
        for j in range(kx.size - 1):
            sprime = (ks[j + 1] - ks[j]) / (kx[j + 1] - kx[j])
            total += u.derivative_square_integral(float(kx[j]), float(kx[j + 1])) / sprime
        return 0.5 * total

    raise UnsupportedEnergyClass(
        f"no closed-form energy for {type(u).__name__} against scale kind "
        f"{scale.kind!r}"
    )
