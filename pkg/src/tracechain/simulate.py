"""Exact event-driven simulation of trace chains and path statistics.

Randomness comes from numpy's Philox bit generator, a counter-based
64-bit generator: stream ``r`` of a run is keyed by
``SeedSequence(entropy=seed, spawn_key=(r,))``, so replicas are
independent, reproducible bit for bit, and safe to generate in parallel
in any order.

Single paths are simulated event by event and stored explicitly
(:class:`PathSample`).  The ensemble helpers advance many replicas in
lockstep with vectorised draws instead, which keeps large Monte Carlo
checks fast; they are deterministic in ``(seed, replicas)`` but follow a
different draw order than per-path simulation, which is documented
behaviour rather than a bug.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .trace_chain import generator_matrix

__all__ = [
    "MonteCarloEstimate",
    "PathSample",
    "simulate_path",
    "sample_at_times",
    "first_hitting_time",
    "occupation_fraction",
    "holding_times_by_state",
    "jump_direction_counts",
    "ensemble_states_at",
    "HittingSample",
    "ensemble_hitting",
    "ensemble_occupation",
    "dynkin_martingale_residual",
    "path_to_csv",
]


def _rng(seed, stream=0):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    replicas: int


@dataclass(frozen=True)
class PathSample:
    """A realised trajectory: right-continuous step path on [0, horizon].

    ``times`` are the jump epochs (strictly increasing, in (0, horizon])
    and ``states[k]`` is the state entered at ``times[k]``; the chain sits
    in ``initial_state`` before the first jump.
    """

    chain: object
    seed: int
    stream: int
    initial_state: int
    horizon: float
    times: np.ndarray
    states: np.ndarray

    @property
    def n_events(self):
        return self.times.size

    def state_at(self, t):
        return sample_at_times(self, t)


def _resolve_initial(chain, init, rng):
    if isinstance(init, str):
        if init != "stationary":
            raise ValidationError(f"unknown initial condition {init!r}")
        return int(rng.choice(chain.n_states, p=chain.stationary_weights))
    state = int(init)
    if not 0 <= state < chain.n_states:
        raise DomainError("initial state outside the state range")
    return state


def simulate_path(chain, init, horizon, seed, stream=0):
    """Simulate one trajectory; identical inputs reproduce it bit for bit.

    Holding times are exponential with the current state's rate; the next
    state follows the chain's jump probabilities.  ``init`` is a state
    index or ``"stationary"`` (the mass-weighted law, which is invariant
    because the chain is reversible with respect to the masses).
    """
    if horizon <= 0.0:
        raise DomainError("horizon must be positive")
    rng = _rng(seed, stream)
    state = _resolve_initial(chain, init, rng)
    initial = state

    rates = chain.rates
    p_right = chain.jump_right
    times = []
    states = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / rates[state])
        if t > horizon:
            break
        state = state + 1 if rng.random() < p_right[state] else state - 1
        times.append(t)
        states.append(state)
    return PathSample(
        chain=chain, seed=int(seed), stream=int(stream), initial_state=initial,
        horizon=float(horizon),
        times=np.asarray(times, dtype=float),
        states=np.asarray(states, dtype=np.int64),
    )


def sample_at_times(path, t):
    """Right-continuous evaluation of the step path at times in [0, horizon]."""
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    if arr.size and (np.min(arr) < 0.0 or np.max(arr) > path.horizon):
        raise DomainError("query times must lie in [0, horizon]")
    full = np.concatenate(([path.initial_state], path.states))
    idx = np.searchsorted(path.times, arr, side="right")
    out = full[idx]
    if np.isscalar(t) or np.ndim(t) == 0:
        return int(out[0])
    return out


def first_hitting_time(path, targets):
    """First entry time into the target set, or None if not hit by horizon.

    Starting inside the target returns 0.0 (documented convention; the
    infimum over strictly positive times differs only on a null set).
    """
    targets = np.unique(np.asarray(targets, dtype=int))
    if targets.size == 0:
        raise DomainError("target set must be nonempty")
    if np.isin(path.initial_state, targets):
        return 0.0
    hits = np.nonzero(np.isin(path.states, targets))[0]
    if hits.size == 0:
        return None
    return float(path.times[hits[0]])


def occupation_fraction(path, subset):
    """Fraction of [0, horizon] spent in the state subset, exactly."""
    subset = np.asarray(subset, dtype=int)
    starts = np.concatenate(([0.0], path.times))
    ends = np.concatenate((path.times, [path.horizon]))
    held = np.concatenate(([path.initial_state], path.states))
    inside = np.isin(held, subset)
    return float(np.sum((ends - starts)[inside]) / path.horizon)


def holding_times_by_state(path):
    """Completed holding durations per state (the censored tail is dropped)."""
    if path.n_events == 0:
        return {s: np.empty(0) for s in range(path.chain.n_states)}
    starts = np.concatenate(([0.0], path.times[:-1]))
    durations = path.times - starts
    held = np.concatenate(([path.initial_state], path.states[:-1]))
    return {s: durations[held == s] for s in range(path.chain.n_states)}


def jump_direction_counts(path):
    """(left, right) jump counts per state, as an (n, 2) integer array."""
    n = path.chain.n_states
    counts = np.zeros((n, 2), dtype=np.int64)
    if path.n_events == 0:
        return counts
    origin = np.concatenate(([path.initial_state], path.states[:-1]))
    went_right = path.states > origin
    np.add.at(counts, (origin, went_right.astype(int)), 1)
    return counts


# ---------------------------------------------------------------------------
# Lockstep ensembles
# ---------------------------------------------------------------------------

def _ensemble_initial(chain, init, replicas, rng):
    if isinstance(init, str):
        if init != "stationary":
            raise ValidationError(f"unknown initial condition {init!r}")
        return rng.choice(chain.n_states, size=replicas, p=chain.stationary_weights)
    state = int(init)
    if not 0 <= state < chain.n_states:
        raise DomainError("initial state outside the state range")
    return np.full(replicas, state, dtype=np.int64)


def ensemble_states_at(chain, t, replicas, seed, init="stationary"):
    """States of independent replicas at a fixed time (vectorised draws)."""
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    rng = _rng(seed)
    state = _ensemble_initial(chain, init, replicas, rng)
    now = np.zeros(replicas)
    active = np.ones(replicas, dtype=bool)
    rates = chain.rates
    p_right = chain.jump_right
    while active.any():
        dt = rng.exponential(1.0, replicas) / rates[state]
        u = rng.random(replicas)
        nxt_time = now + dt
        jump = active & (nxt_time <= t)
        nxt_state = np.where(u < p_right[state], state + 1, state - 1)
        state = np.where(jump, nxt_state, state)
        now = np.where(jump, nxt_time, now)
        active = jump
    return state


@dataclass(frozen=True)
class HittingSample:
    """First-hitting outcomes of an ensemble; nan marks 'not hit by horizon'."""

    times: np.ndarray
    horizon: float

    @property
    def probability(self):
        hit = ~np.isnan(self.times)
        p = float(np.mean(hit))
        n = hit.size
        return MonteCarloEstimate(p, float(np.sqrt(p * (1.0 - p) / n)), n)

    @property
    def hit_times(self):
        return self.times[~np.isnan(self.times)]


def ensemble_hitting(chain, targets, horizon, replicas, seed, init="stationary"):
    """First hitting times of a state subset over independent replicas.

    Replicas stop once they hit (or once their clock passes the horizon),
    so the cost is proportional to the events actually needed.
    """
    targets = np.unique(np.asarray(targets, dtype=int))
    if targets.size == 0:
        raise DomainError("target set must be nonempty")
    if horizon <= 0.0:
        raise DomainError("horizon must be positive")
    in_target = np.zeros(chain.n_states, dtype=bool)
    in_target[targets] = True

    rng = _rng(seed)
    state = _ensemble_initial(chain, init, replicas, rng)
    times = np.where(in_target[state], 0.0, np.nan)
    now = np.zeros(replicas)
    alive = np.isnan(times)
    rates = chain.rates
    p_right = chain.jump_right
    while alive.any():
        dt = rng.exponential(1.0, replicas) / rates[state]
        u = rng.random(replicas)
        nxt_time = now + dt
        advance = alive & (nxt_time <= horizon)
        nxt_state = np.where(u < p_right[state], state + 1, state - 1)
        hit_now = advance & in_target[np.clip(nxt_state, 0, chain.n_states - 1)]
        times = np.where(hit_now, nxt_time, times)
        state = np.where(advance, nxt_state, state)
        now = np.where(advance, nxt_time, now)
        alive = advance & ~hit_now
    return HittingSample(times=times, horizon=float(horizon))


def ensemble_occupation(chain, subset, horizon, replicas, seed, init="stationary"):
    """Per-replica occupation fractions of a state subset on [0, horizon]."""
    if horizon <= 0.0:
        raise DomainError("horizon must be positive")
    subset = np.asarray(subset, dtype=int)
    inside = np.zeros(chain.n_states, dtype=bool)
    inside[subset] = True

    rng = _rng(seed)
    state = _ensemble_initial(chain, init, replicas, rng)
    now = np.zeros(replicas)
    acc = np.zeros(replicas)
    active = np.ones(replicas, dtype=bool)
    rates = chain.rates
    p_right = chain.jump_right
    while active.any():
        dt = rng.exponential(1.0, replicas) / rates[state]
        u = rng.random(replicas)
        nxt_time = now + dt
        held = np.minimum(nxt_time, horizon) - now
        acc += np.where(active & inside[state], held, 0.0)
        jump = active & (nxt_time <= horizon)
        nxt_state = np.where(u < p_right[state], state + 1, state - 1)
        state = np.where(jump, nxt_state, state)
        now = np.where(jump, nxt_time, now)
        active = jump
    return acc / horizon


def dynkin_martingale_residual(chain, f, t, replicas, seed, init="stationary"):
    """Monte Carlo mean of ``f(X_t) - f(X_0) - ∫_0^t (Lf)(X_s) ds``.

    The compensator integral is accumulated exactly along the step path,
    so the only error is statistical: the residual is a mean-zero
    martingale increment whatever the initial law.
    """
    if replicas < 1:
        raise DomainError("need at least one replica")
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    f = np.asarray(f, dtype=float)
    if f.shape != (chain.n_states,):
        raise ValidationError("grid function length must match the chain")
    lf = generator_matrix(chain).matvec(f)

    rng = _rng(seed)
    state = _ensemble_initial(chain, init, replicas, rng)
    start_state = state.copy()
    now = np.zeros(replicas)
    integral = np.zeros(replicas)
    active = np.ones(replicas, dtype=bool)
    rates = chain.rates
    p_right = chain.jump_right
    while active.any():
        dt = rng.exponential(1.0, replicas) / rates[state]
        u = rng.random(replicas)
        nxt_time = now + dt
        held = np.minimum(nxt_time, t) - now
        integral += np.where(active, lf[state] * held, 0.0)
        jump = active & (nxt_time <= t)
        nxt_state = np.where(u < p_right[state], state + 1, state - 1)
        state = np.where(jump, nxt_state, state)
        now = np.where(jump, nxt_time, now)
        active = jump
    residual = f[state] - f[start_state] - integral
    est = float(np.mean(residual))
    if replicas > 1:
        se = float(np.std(residual, ddof=1) / np.sqrt(replicas))
    else:
        se = float("nan")
    return MonteCarloEstimate(est, se, int(replicas))


def path_to_csv(path, stream):
    """Write a path as CSV rows (time, state_index, state_position).

    The first row is the initial condition at time 0; floats use 17
    significant digits so that files round trip exactly.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["time", "state_index", "state_position"])
    grid = path.chain.grid
    writer.writerow(["0", str(path.initial_state), f"{grid[path.initial_state]:.17g}"])
    for t, s in zip(path.times, path.states):
        writer.writerow([f"{t:.17g}", str(int(s)), f"{grid[s]:.17g}"])
