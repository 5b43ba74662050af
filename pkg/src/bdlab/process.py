"""Rate models and exact simulation of the birth-death chain and its reference walk.

The chain xi lives on the nonnegative integers, starts at 0, jumps up at
rate lambda(x) and down at rate mu(x).  The reference walk zeta is the
symmetric continuous-time random walk on all integers with total jump
rate 1 and fair coin signs; it is the base measure for the
change-of-measure estimators in weights.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

__all__ = [
    "RateModel",
    "Trajectory",
    "RngStream",
    "birth_rate",
    "death_rate",
    "total_rate",
    "simulate_xi",
    "simulate_zeta",
    "in_path_space",
]

# draws fetched from the generator per block; amortizes numpy call overhead
_BLOCK = 128


@dataclass(frozen=True)
class RateModel:
    """Birth-death jump rates.

    kind="canonical": lambda(x) = P * max(x, 1)**l, mu(x) = Q * x.  This
    keeps lambda(0) > 0 and mu(0) = 0 while matching the asymptotic
    regime lambda(x)/x**l -> P, mu(x)/x -> Q.

    kind="table": explicit per-state (lambda, mu) entries starting at
    state 0.  Lookups past the end of the table raise instead of
    extrapolating.  Tables with mu(0) > 0 are accepted so that
    constant-rate reference models can be used with the path
    functionals, but such models cannot be simulated (see simulate_xi).
    """

    kind: str
    P: float = 1.0
    Q: float = 1.0
    l: float = 0.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == "canonical":
            if not (self.P > 0 and math.isfinite(self.P)):
                raise PreconditionError(f"P must be positive, got {self.P}")
            if not (self.Q > 0 and math.isfinite(self.Q)):
                raise PreconditionError(f"Q must be positive, got {self.Q}")
            if not (0.0 <= self.l < 1.0):
                raise PreconditionError(f"l must lie in [0, 1), got {self.l}")
            if self.table is not None:
                raise PreconditionError("canonical models carry no table")
        elif self.kind == "table":
            if not self.table:
                raise PreconditionError("table models need at least one entry")
            for x, (lam, mu) in enumerate(self.table):
                if not (lam > 0 and math.isfinite(lam)):
                    raise PreconditionError(f"lambda({x}) must be positive, got {lam}")
                if not (mu >= 0 and math.isfinite(mu)):
                    raise PreconditionError(f"mu({x}) must be nonnegative, got {mu}")
                if x >= 1 and mu == 0:
                    raise PreconditionError(f"mu({x}) must be positive for x >= 1")
        else:
            raise PreconditionError(f"unknown model kind {self.kind!r}")

    @property
    def exact_law_available(self) -> bool:
        """True iff lambda is constant P and mu(x) = Q*x exactly.

        Only the canonical family with l = 0 qualifies; a finite table
        cannot certify the law for all states.
        """
        return self.kind == "canonical" and self.l == 0.0


def birth_rate(model: RateModel, x: int) -> float:
    """Up-jump rate lambda(x)."""
    if x < 0:
        raise PreconditionError(f"state must be nonnegative, got {x}")
    if model.kind == "canonical":
        if model.l == 0.0:
            return model.P
        return model.P * max(x, 1) ** model.l
    if x >= len(model.table):
        raise PreconditionError(
            f"state {x} outside rate table (size {len(model.table)})"
        )
    return model.table[x][0]


def death_rate(model: RateModel, x: int) -> float:
    """Down-jump rate mu(x); mu(0) = 0 for canonical models."""
    if x < 0:
        raise PreconditionError(f"state must be nonnegative, got {x}")
    if model.kind == "canonical":
        return model.Q * x
    if x >= len(model.table):
        raise PreconditionError(
            f"state {x} outside rate table (size {len(model.table)})"
        )
    return model.table[x][1]


def total_rate(model: RateModel, x: int) -> float:
    """Combined jump rate eta(x) = lambda(x) + mu(x)."""
    return birth_rate(model, x) + death_rate(model, x)


@dataclass(frozen=True)
class Trajectory:
    """A finite-jump cadlag path on [0, horizon].

    Only jump times and signs are stored; the visited states are derived
    as prefix sums from initial_state.  Times are strictly increasing
    and strictly inside (0, horizon).
    """

    horizon: float
    jump_times: tuple[float, ...]
    jump_signs: tuple[int, ...]
    initial_state: int = 0

    def __post_init__(self) -> None:
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise PreconditionError(f"horizon must be positive, got {self.horizon}")
        if len(self.jump_times) != len(self.jump_signs):
            raise PreconditionError("jump_times and jump_signs lengths differ")
        prev = 0.0
        for t in self.jump_times:
            if not (prev < t < self.horizon):
                raise PreconditionError(
                    f"jump times must be strictly increasing in (0, horizon); got {t}"
                )
            prev = t
        for s in self.jump_signs:
            if s != 1 and s != -1:
                raise PreconditionError(f"jump signs must be +1 or -1, got {s}")

    def states(self) -> tuple[int, ...]:
        """State sequence s_0, s_1, ..., s_N (before/after each jump)."""
        out = [self.initial_state]
        x = self.initial_state
        for s in self.jump_signs:
            x += s
            out.append(x)
        return tuple(out)

    def final_state(self) -> int:
        x = self.initial_state
        for s in self.jump_signs:
            x += s
        return x


@dataclass(frozen=True)
class RngStream:
    """A named substream of the package's random source.

    The substream for (seed, replica_index) is PCG64 keyed by numpy's
    SeedSequence entropy mix of the pair.  The mix is a fixed, documented
    function: identical pairs reproduce identical draws bit for bit, and
    distinct replica indices give statistically independent streams.
    """

    seed: int
    replica_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64):
            raise PreconditionError(f"seed must be a 64-bit integer, got {self.seed}")
        if self.replica_index < 0:
            raise PreconditionError(
                f"replica_index must be nonnegative, got {self.replica_index}"
            )

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, self.replica_index)))
        )


class _BlockDraws:
    """Sequential exponential/uniform draws fetched in blocks."""

    __slots__ = ("_gen", "_exp", "_uni", "_ei", "_ui")

    def __init__(self, gen: np.random.Generator):
        self._gen = gen
        self._exp: list[float] = []
        self._uni: list[float] = []
        self._ei = 0
        self._ui = 0

    def exponential(self) -> float:
        if self._ei >= len(self._exp):
            self._exp = self._gen.standard_exponential(_BLOCK).tolist()
            self._ei = 0
        v = self._exp[self._ei]
        self._ei += 1
        return v

    def uniform(self) -> float:
        if self._ui >= len(self._uni):
            self._uni = self._gen.random(_BLOCK).tolist()
            self._ui = 0
        v = self._uni[self._ui]
        self._ui += 1
        return v


def _advance(draws: _BlockDraws, t: float, rate: float, horizon: float) -> float:
    """Next jump epoch after t for an exponential(rate) holding time.

    Zero draws and increments that would not move t forward in floating
    point are rejected and redrawn, so jump times stay strictly
    increasing.  Returns a value > t (possibly beyond horizon, which the
    caller treats as "no further jump").
    """
    while True:
        dt = draws.exponential()
        if dt == 0.0:
            continue
        t_next = t + dt / rate
        if t_next > t:
            return t_next


def simulate_xi(model: RateModel, T: float, stream: RngStream) -> Trajectory:
    """Exact simulation of the birth-death chain from state 0 on [0, T].

    At state x the holding time is exponential with rate eta(x) and the
    jump is up with probability lambda(x)/eta(x).  At x = 0 that
    probability is 1 (mu(0) = 0), so the walk can never leave the
    nonnegative integers.
    """
    if not (T > 0 and math.isfinite(T)):
        raise PreconditionError(f"T must be positive, got {T}")
    if death_rate(model, 0) != 0.0:
        raise PreconditionError(
            "simulation requires mu(0) = 0; this table model has mu(0) = "
            f"{death_rate(model, 0)}"
        )
    draws = _BlockDraws(stream.generator())
    t = 0.0
    x = 0
    times: list[float] = []
    signs: list[int] = []
    while True:
        lam = birth_rate(model, x)
        eta = lam + death_rate(model, x)
        t = _advance(draws, t, eta, T)
        if t >= T:
            break
        # u < lam/eta is exact at x=0: lam/eta == 1.0 and u < 1 always
        if draws.uniform() < lam / eta:
            x += 1
            signs.append(1)
        else:
            x -= 1
            signs.append(-1)
        times.append(t)
    return Trajectory(horizon=T, jump_times=tuple(times), jump_signs=tuple(signs))


def simulate_zeta(T: float, stream: RngStream) -> Trajectory:
    """Reference walk on [0, T]: unit-rate jump epochs, fair +-1 signs."""
    if not (T > 0 and math.isfinite(T)):
        raise PreconditionError(f"T must be positive, got {T}")
    draws = _BlockDraws(stream.generator())
    t = 0.0
    times: list[float] = []
    signs: list[int] = []
    while True:
        t = _advance(draws, t, 1.0, T)
        if t >= T:
            break
        signs.append(1 if draws.uniform() < 0.5 else -1)
        times.append(t)
    return Trajectory(horizon=T, jump_times=tuple(times), jump_signs=tuple(signs))


def in_path_space(traj: Trajectory) -> bool:
    """True iff the path starts at 0 and never goes negative."""
    if traj.initial_state != 0:
        return False
    x = 0
    for s in traj.jump_signs:
        x += s
        if x < 0:
            return False
    return True
