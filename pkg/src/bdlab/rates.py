"""Scaling regimes, the large-deviation rate functionals, and the exact terminal law.

Three closed scaling families are supported, classified by the limit of
ln(phi(T))/T: polynomial growth (limit 0, the subexponential regime),
pure exponential (limit k), and super-exponential (limit infinity).  The
normalizing function for log-probabilities is T*phi(T) in the
subexponential regime and phi(T)*ln(phi(T)) otherwise.

For the constant-birth / linear-death model the terminal state at time T
is exactly Poisson with mean a(T) = (P/Q)*(1 - exp(-Q*T)); that law is
the oracle behind every exact check in the harness.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import PreconditionError
from .paths import (
    PiecewiseFunction,
    integral,
    jordan_decompose,
    left_limit_at_one,
)

__all__ = [
    "ScalingFamily",
    "phi",
    "log_phi",
    "normalizer",
    "rate_sub",
    "rate_exp",
    "rate_super",
    "level_crossing_rate",
    "poisson_mean",
    "poisson_exact_log_pmf",
    "poisson_exact_log_tail",
    "marginal_log_prob",
    "marginal_normalized_log_prob",
    "tilted_poisson_argmax",
]


@dataclass(frozen=True)
class ScalingFamily:
    """A parametric scaling function phi(T) with a decidable regime.

    poly(alpha):       phi(T) = T**alpha          -> regime SUB
    exponential(k):    phi(T) = exp(k*T)          -> regime EXP
    superexp(k, beta): phi(T) = exp(k*T**beta)    -> regime SUPER
    """

    family: str
    alpha: float | None = None
    k: float | None = None
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.family == "poly":
            if self.alpha is None or not self.alpha > 0:
                raise PreconditionError("poly needs alpha > 0")
            if self.k is not None or self.beta is not None:
                raise PreconditionError("poly takes only alpha")
        elif self.family == "exponential":
            if self.k is None or not self.k > 0:
                raise PreconditionError("exponential needs k > 0")
            if self.alpha is not None or self.beta is not None:
                raise PreconditionError("exponential takes only k")
        elif self.family == "superexp":
            if self.k is None or not self.k > 0:
                raise PreconditionError("superexp needs k > 0")
            if self.beta is None or not self.beta > 1:
                raise PreconditionError("superexp needs beta > 1")
            if self.alpha is not None:
                raise PreconditionError("superexp takes k and beta only")
        else:
            raise PreconditionError(f"unknown scaling family {self.family!r}")

    @classmethod
    def poly(cls, alpha: float) -> "ScalingFamily":
        return cls(family="poly", alpha=alpha)

    @classmethod
    def exponential(cls, k: float) -> "ScalingFamily":
        return cls(family="exponential", k=k)

    @classmethod
    def superexp(cls, k: float, beta: float) -> "ScalingFamily":
        return cls(family="superexp", k=k, beta=beta)

    @property
    def regime(self) -> str:
        """SUB, EXP or SUPER according to the limit of ln(phi(T))/T."""
        return {"poly": "SUB", "exponential": "EXP", "superexp": "SUPER"}[self.family]


def _check_T(T: float) -> None:
    if not (T > 0 and math.isfinite(T)):
        raise PreconditionError(f"T must be positive, got {T}")


def log_phi(family: ScalingFamily, T: float) -> float:
    """ln(phi(T)), computed without forming phi (safe for huge scalings)."""
    _check_T(T)
    if family.family == "poly":
        return family.alpha * math.log(T)
    if family.family == "exponential":
        return family.k * T
    return family.k * T**family.beta


def phi(family: ScalingFamily, T: float) -> float:
    """The scaling function phi(T); inf when it exceeds float range."""
    _check_T(T)
    if family.family == "poly":
        return T**family.alpha
    try:
        return math.exp(log_phi(family, T))
    except OverflowError:
        return float("inf")


def normalizer(family: ScalingFamily, T: float) -> float:
    """psi(T): T*phi(T) in SUB, phi(T)*ln(phi(T)) in EXP/SUPER.

    The EXP/SUPER form needs ln(phi) > 0; phi(T) <= 1 there would make
    the normalizer nonpositive and is rejected.
    """
    p = phi(family, T)
    if family.regime == "SUB":
        return T * p
    if p <= 1.0:
        raise PreconditionError(
            f"normalizer needs phi(T) > 1 in the {family.regime} regime, got {p}"
        )
    return p * log_phi(family, T)


def _check_nonnegative(f: PiecewiseFunction) -> None:
    if min(f.values) < 0:
        raise PreconditionError("profile must be nonnegative")


def rate_sub(f: PiecewiseFunction, Q: float, check_domain: bool = True) -> float:
    """Subexponential-regime rate: Q * integral of f.

    The formula is stated for profiles with f(0) = 0 and f > 0 on
    (0, 1]; when check_domain is set, profiles outside that class get a
    warning but the value is still returned (the formula extends
    naturally and the scans compare against it on step profiles).
    """
    if not Q > 0:
        raise PreconditionError(f"Q must be positive, got {Q}")
    _check_nonnegative(f)
    if check_domain and not _in_sub_domain(f):
        warnings.warn(
            "profile leaves the nominal domain (f(0) = 0 and f > 0 on (0, 1]); "
            "value returned anyway",
            stacklevel=2,
        )
    return Q * integral(f)


def _in_sub_domain(f: PiecewiseFunction) -> bool:
    # f(0) = 0 and f(t) > 0 for t > 0.  A step function with a
    # positive-length first segment at value 0 already violates the
    # second clause, so only the all-positive-after-0 shape passes.
    if f.values[0] != 0.0:
        return False
    if f.mode == "linear":
        return all(v > 0 for v in f.values[1:])
    return False


def rate_exp(f: PiecewiseFunction, Q: float, k: float, l: float) -> float:
    """Exponential-regime rate: (Q/k) * integral(f) + (1 - l) * plus-part end value."""
    if not Q > 0:
        raise PreconditionError(f"Q must be positive, got {Q}")
    if not k > 0:
        raise PreconditionError(f"k must be positive, got {k}")
    if not 0.0 <= l < 1.0:
        raise PreconditionError(f"l must lie in [0, 1), got {l}")
    _check_nonnegative(f)
    plus_end = left_limit_at_one(jordan_decompose(f).plus)
    return (Q / k) * integral(f) + (1.0 - l) * plus_end


def rate_super(f: PiecewiseFunction, l: float) -> float:
    """Super-exponential-regime rate: (1 - l) * plus-part end value."""
    if not 0.0 <= l < 1.0:
        raise PreconditionError(f"l must lie in [0, 1), got {l}")
    _check_nonnegative(f)
    return (1.0 - l) * left_limit_at_one(jordan_decompose(f).plus)


def level_crossing_rate(a: float, l: float) -> float:
    """Decay rate of the level-a crossing probability: (1 - l) * a."""
    if not a > 0:
        raise PreconditionError(f"a must be positive, got {a}")
    if not 0.0 <= l < 1.0:
        raise PreconditionError(f"l must lie in [0, 1), got {l}")
    return (1.0 - l) * a


# ---------------------------------------------------------------------------
# exact terminal law of the constant-birth / linear-death model


def _check_exact_law_params(P: float, Q: float, T: float) -> None:
    if not P > 0:
        raise PreconditionError(f"P must be positive, got {P}")
    if not Q > 0:
        raise PreconditionError(f"Q must be positive, got {Q}")
    _check_T(T)


def poisson_mean(P: float, Q: float, T: float) -> float:
    """a(T) = (P/Q) * (1 - exp(-Q*T)), the exact terminal mean."""
    _check_exact_law_params(P, Q, T)
    return (P / Q) * -math.expm1(-Q * T)


def poisson_exact_log_pmf(P: float, Q: float, T: float, x: int) -> float:
    """ln P(state at T equals x) for the constant-birth / linear-death chain.

    Factorials go through lgamma; nothing here is a truncation or an
    asymptotic expansion.
    """
    if x < 0 or x != int(x):
        raise PreconditionError(f"x must be a nonnegative integer, got {x}")
    a = poisson_mean(P, Q, T)
    return x * math.log(a) - a - math.lgamma(x + 1.0)


def _log_sum_exp(terms: list[float]) -> float:
    m = max(terms)
    if m == float("-inf"):
        return m
    return m + math.log(math.fsum(math.exp(t - m) for t in terms))


def poisson_exact_log_tail(P: float, Q: float, T: float, lo: int) -> float:
    """ln P(state at T >= lo), summed to full double precision.

    Terms past the pmf mode decay at least geometrically; accumulation
    stops once a term sits 60 e-folds below the running peak, which
    bounds the discarded mass far beyond double resolution.
    """
    if lo < 0:
        raise PreconditionError(f"lo must be nonnegative, got {lo}")
    a = poisson_mean(P, Q, T)
    terms: list[float] = []
    peak = float("-inf")
    x = lo
    while True:
        lp = poisson_exact_log_pmf(P, Q, T, x)
        terms.append(lp)
        if lp > peak:
            peak = lp
        if x > a and lp < peak - 60.0:
            break
        x += 1
    return _log_sum_exp(terms)


def marginal_log_prob(
    P: float,
    Q: float,
    family: ScalingFamily,
    T: float,
    a: float,
    eps: float,
) -> float:
    """ln P(state at T in [(a-eps)*phi, (a+eps)*phi]), exact.

    The window is the closed integer range [ceil((a-eps)*phi),
    floor((a+eps)*phi)]; its probability is an exact log-sum-exp of pmf
    terms.  An empty integer window gives -inf.
    """
    if not a > 0:
        raise PreconditionError(f"a must be positive, got {a}")
    if not eps > 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    if a - eps < 0:
        raise PreconditionError(f"window needs a - eps >= 0, got {a - eps}")
    p = phi(family, T)
    if p <= 1.0:
        raise PreconditionError(f"needs phi(T) > 1, got {p}")
    if not math.isfinite(p):
        raise PreconditionError("phi(T) too large for an integer window")
    _check_exact_law_params(P, Q, T)
    lo = math.ceil((a - eps) * p)
    hi = math.floor((a + eps) * p)
    if lo > hi:
        return float("-inf")
    terms = [poisson_exact_log_pmf(P, Q, T, x) for x in range(lo, hi + 1)]
    return _log_sum_exp(terms)


def marginal_normalized_log_prob(
    P: float,
    Q: float,
    family: ScalingFamily,
    T: float,
    a: float,
    eps: float,
) -> float:
    """marginal_log_prob divided by phi(T)*ln(phi(T))."""
    raw = marginal_log_prob(P, Q, family, T, a, eps)
    psi = phi(family, T) * log_phi(family, T)
    if raw == float("-inf"):
        return raw
    return raw / psi


def tilted_poisson_argmax(C: float, T: float, family: ScalingFamily) -> int:
    """Argmax over 0 <= j <= floor(C*phi(T)) of the tilted Poisson weights.

    The weights are g_j = phi**j * exp(-T/2) * (T/2)**j / j!.  For
    T > 2*C consecutive ratios stay above 1 on the whole range, so the
    maximum sits at the right edge floor(C*phi(T)); the scan is still
    performed directly (in log space) rather than assumed.
    """
    if not C > 0:
        raise PreconditionError(f"C must be positive, got {C}")
    _check_T(T)
    if not T > 2 * C:
        raise PreconditionError(f"needs T > 2C, got T = {T}, C = {C}")
    p = phi(family, T)
    if not math.isfinite(p):
        raise PreconditionError("phi(T) too large to scan")
    j_max = math.floor(C * p)
    lgp = log_phi(family, T)
    lhalf = math.log(T / 2.0)
    best = float("-inf")
    arg = 0
    for j in range(j_max + 1):
        g = j * lgp - T / 2.0 + j * lhalf - math.lgamma(j + 1.0)
        if g > best:
            best = g
            arg = j
    return arg
