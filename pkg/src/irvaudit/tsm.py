"""ALPHA test supermartingales for sampling without replacement.

Each requirement gets a base TSM testing the null "assorter population
mean <= 1/2" against draws x_1, x_2, ... taken without replacement from a
population of B cards with values in {0, 1/2, 1}. Before consuming x_t
(1-indexed), the conditional null mean is

    mu_t = (B/2 - S_{t-1}) / (B - (t-1)),      S_{t-1} = x_1 + ... + x_{t-1}

and the update multiplies the running product by

    m_t = x_t * eta_t / mu_t + (1 - x_t) * (1 - eta_t) / (1 - mu_t)

with the truncated-shrinkage estimate

    eta_t = clamp( (d * eta0 + S_{t-1}) / (d + t - 1),
                   lower = mu_t + c / sqrt(d + t - 1),
                   upper = 1 - EPS_CAP ),        c = (eta0 - 1/2) / 2.

E[m_t] = 1 exactly when the remaining mean equals mu_t, so M_t is a
nonnegative supermartingale under the null and 1/M_t is a valid p-value
(Ville's inequality). Accumulation is in log domain with a saturation cap
at log(1e300). Boundary exits: mu_t <= 0 proves the mean exceeds 1/2
(requirement false, value +inf); mu_t >= 1 proves it cannot (requirement
true, value 0). Updates are a single scalar code path so that replaying a
recorded history is bit-identical to having ingested it live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

from .contest import Contest
from .requirements import Requirement, assort, mean_assorter

EPS_CAP = 1e-6
LOG_SATURATION = 300.0 * math.log(10.0)

ACTIVE = "active"
PROVEN_TRUE = "proven_true"
PROVEN_FALSE = "proven_false"

_LOG = math.log
_SQRT = math.sqrt


class BaseTsm:
    """Scalar ALPHA supermartingale state for one requirement.

    Attributes
    ----------
    t : draws consumed so far.
    s_prev : running sum of consumed assorter values.
    log_m : log of the running product (meaningful while status is active).
    prev_log_m : log_m before the most recent update, used for one-step
        ratios by intersection weighting.
    status : "active", "proven_true" (value 0), or "proven_false" (+inf).
    """

    __slots__ = ("eta0", "d", "total", "c", "t", "s_prev", "log_m", "prev_log_m", "status")

    def __init__(self, eta0: float, d: float, total: int) -> None:
        if not 0.5 < eta0 < 1.0:
            raise ValueError("eta0 must lie in (1/2, 1)")
        if d <= 0:
            raise ValueError("d must be positive")
        if total < 1:
            raise ValueError("population must hold at least one card")
        self.eta0 = eta0
        self.d = d
        self.total = total
        self.c = (eta0 - 0.5) / 2.0
        self.t = 0
        self.s_prev = 0.0
        self.log_m = 0.0
        self.prev_log_m = 0.0
        self.status = ACTIVE

    def update(self, x: float) -> None:
        """Consume one draw. Raises on terminal state or exhausted population."""
        if self.status != ACTIVE:
            raise ValueError(f"cannot update a {self.status} supermartingale")
        t = self.t
        if t >= self.total:
            raise ValueError("population exhausted")
        mu = (self.total * 0.5 - self.s_prev) / (self.total - t)
        if mu <= 0.0:
            self.prev_log_m = self.log_m
            self.status = PROVEN_FALSE
            return
        if mu >= 1.0:
            self.prev_log_m = self.log_m
            self.status = PROVEN_TRUE
            return
        dt = self.d + t
        eta = (self.d * self.eta0 + self.s_prev) / dt
        lo = mu + self.c / _SQRT(dt)
        if eta < lo:
            eta = lo
        if eta > 1.0 - EPS_CAP:
            eta = 1.0 - EPS_CAP
        m = x * eta / mu + (1.0 - x) * (1.0 - eta) / (1.0 - mu)
        log_m = self.log_m + _LOG(m)
        self.prev_log_m = self.log_m
        self.log_m = log_m if log_m < LOG_SATURATION else LOG_SATURATION
        self.s_prev += x
        self.t = t + 1

    @property
    def value(self) -> float:
        if self.status == PROVEN_FALSE:
            return math.inf
        if self.status == PROVEN_TRUE:
            return 0.0
        return math.exp(self.log_m)

    @property
    def prev_value(self) -> float:
        return math.exp(self.prev_log_m)

    def replay(self, values: Iterable[float]) -> None:
        """Feed recorded assorter values; stops consuming once terminal."""
        update = self.update
        for x in values:
            if self.status != ACTIVE:
                break
            update(x)


@dataclass(frozen=True)
class Eta0Policy:
    """How the tuning value eta0 is chosen per requirement.

    mode "fixed_051" pins eta0 = 0.51. Mode "lrm" maps the reported
    last-round diluted margin to clamp(1/2 + margin/2, 0.51, 0.99). Mode
    "am" uses the requirement's assorter mean over reported ballots,
    clamped the same way; it needs ``cvrs``.
    """

    mode: str = "fixed_051"
    last_round_margin: float | None = None
    cvrs: Contest | None = None

    MODES = ("fixed_051", "lrm", "am")

    def __post_init__(self) -> None:
        if self.mode not in self.MODES:
            raise ValueError(f"unknown eta0 mode {self.mode!r}")
        if self.mode == "lrm" and self.last_round_margin is None:
            raise ValueError("lrm mode needs the reported last-round margin")
        if self.mode == "am" and self.cvrs is None:
            raise ValueError("am mode needs reported ballots")

    def resolve(self, req: Requirement) -> float:
        if self.mode == "fixed_051":
            return 0.51
        if self.mode == "lrm":
            return _clamp(0.5 + self.last_round_margin / 2.0)
        return _clamp(float(mean_assorter(req, self.cvrs)))


def _clamp(value: float) -> float:
    return min(0.99, max(0.51, value))


def make_eta0_resolver(policy: Eta0Policy) -> Callable[[Requirement], float]:
    """Memoized per-requirement eta0 lookup (am mode scans the CVRs once per key)."""
    cache: dict[Requirement, float] = {}

    def resolve(req: Requirement) -> float:
        got = cache.get(req)
        if got is None:
            got = cache[req] = policy.resolve(req)
        return got

    return resolve


def assorter_value_fn(req: Requirement) -> Callable[[tuple[int, ...]], float]:
    """Per-requirement assorter with memoization keyed on the ranking tuple."""
    cache: dict[tuple[int, ...], float] = {}

    def value(ranking: tuple[int, ...]) -> float:
        got = cache.get(ranking)
        if got is None:
            got = cache[ranking] = assort(req, ranking)
        return got

    return value
