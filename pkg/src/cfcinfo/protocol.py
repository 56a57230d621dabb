"""Post-selected single-device communication: statistics, decoding and trial counts.

Alice counts the post-selected photons that arrive at D1 with H polarization.
Bit 0 (Bob's arm open, weakly rotated) makes that count more likely than
bit 1 (Bob's arm blocked).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from scipy.stats import binom

from .cfc import ViolationReport, free_fisher
from .errors import ConfigurationError, DomainError, UndecidableChannelError

SCHEMA_VERSION = 1
POSTSELECT = ("D1", "D2")

# Rational approximation of the inverse normal CDF (P. J. Acklam), central and tail pieces.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _horner(coeffs, x):
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _lower_quantile(p: float) -> float:
    # p in (0, 0.5]
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = _horner(_C, q) / (_horner(_D, q) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = _horner(_A, r) * q / (_horner(_B, r) * r + 1.0)
    # One Newton step on the erfc-based CDF.
    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    return x - err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)


def inverse_normal_cdf(p: float) -> float:
    """Standard normal quantile."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    return _lower_quantile(p) if p < 0.5 else -_lower_quantile(1.0 - p)


@dataclass(frozen=True)
class BitChannel:
    p0: float
    p1: float
    t1: float
    r1: float
    theta_w: float
    dist0: dict
    dist1: dict


@dataclass(frozen=True)
class ProtocolDesign:
    n_gamma: int
    q_prime: int
    epsilon: float
    success: float


def bit_probabilities(r1: float, t1: float, theta_w: float) -> BitChannel:
    """Post-selected outcome probabilities for both bit values (inner splitters balanced)."""
    if abs(r1 * r1 + t1 * t1 - 1.0) > 1e-12:
        raise DomainError(f"r1^2 + t1^2 must be 1 (r1={r1}, t1={t1})")
    if not abs(theta_w) < 1.0:
        raise DomainError(f"|theta_w| must be < 1, got {theta_w}")
    r2, t2, th2 = r1 * r1, t1 * t1, theta_w * theta_w
    half_cos = 0.5 * math.sqrt(1.0 - th2)
    d1 = 3.0 * r2 + 1.0
    dist1 = {("D1", "H"): r2 * t2 / d1, ("D2", "H"): (r2 + 1.0) ** 2 / d1,
             ("D1", "V"): 0.0, ("D2", "V"): 0.0}
    norm0 = 1.0 / (4.0 - 2.0 * t2 * (1.0 + 2.0 * half_cos))
    dist0 = {("D1", "H"): norm0 * r2 * t2 * (1.0 + 2.0 * half_cos) ** 2,
             ("D1", "V"): norm0 * r2 * t2 * th2,
             ("D2", "H"): norm0 * (1.0 + r2 - 2.0 * t2 * half_cos) ** 2,
             ("D2", "V"): norm0 * t2 * t2 * th2}
    return BitChannel(dist0[("D1", "H")], dist1[("D1", "H")], t1, r1, theta_w, dist0, dist1)


def fisher_bits(t1: float, theta_w: float) -> tuple[float, float]:
    """(F for bit 0, F for bit 1), leading order in t1.

    Bit 1 carries no information since everything that met the rotator is absorbed.
    """
    if not abs(theta_w) < 1.0:
        raise DomainError(f"|theta_w| must be < 1, got {theta_w}")
    return t1 * t1 / (1.0 - theta_w * theta_w), 0.0


def _check_channel(ch: BitChannel):
    if ch.p0 == ch.p1:
        raise UndecidableChannelError("P0 == P1: the bits cannot be told apart")
    if not 0.0 <= ch.p1 < ch.p0 <= 1.0:
        raise DomainError(f"need 0 <= P1 < P0 <= 1, got P0={ch.p0}, P1={ch.p1}")


def decode_threshold(n_gamma: int, channel: BitChannel) -> int:
    """Largest count still decoded as bit 1 (likelihood-ratio threshold, floored)."""
    _check_channel(channel)
    if n_gamma < 0:
        raise DomainError("n_gamma must be >= 0")
    p0, p1 = channel.p0, channel.p1
    # Noiseless extremes: any click rules out bit 1, or only a full count fits bit 0.
    if p1 == 0.0:
        return 0
    if p0 == 1.0:
        return max(0, n_gamma - 1)
    num = n_gamma * math.log((1.0 - p1) / (1.0 - p0))
    den = math.log(p0 / p1) - math.log((1.0 - p0) / (1.0 - p1))
    ratio = num / den
    # At an exact likelihood tie rounding noise must not push the floor down.
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-9 * max(1.0, abs(ratio)):
        return int(nearest)
    return int(math.floor(ratio))


def decode_bit(q: int, q_prime: int) -> int:
    """Bit read from a D1-H count: 1 up to and including the threshold, 0 above."""
    return 1 if q <= q_prime else 0


def success_probability(n_gamma: int, channel: BitChannel, q_prime: int | None = None) -> float:
    """Probability of reading the right bit when both bits are equally likely."""
    if q_prime is None:
        q_prime = decode_threshold(n_gamma, channel)
    ok1 = binom.cdf(q_prime, n_gamma, channel.p1)
    ok0 = binom.sf(q_prime, n_gamma, channel.p0)
    return float(0.5 * ok1 + 0.5 * ok0)


def trial_bound(epsilon: float, channel: BitChannel) -> float:
    """Normal-approximation photon count (continuous) for error rate ``epsilon``."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if channel.p0 == channel.p1:
        raise UndecidableChannelError("P0 == P1: no finite photon number suffices")
    z = inverse_normal_cdf(epsilon)
    spread = math.sqrt(channel.p0 * (1 - channel.p0)) + math.sqrt(channel.p1 * (1 - channel.p1))
    return (z * spread / (channel.p0 - channel.p1)) ** 2


def min_trials(epsilon: float, channel: BitChannel) -> int:
    return int(math.ceil(trial_bound(epsilon, channel)))


def min_trials_small_t(epsilon: float, t1: float) -> float:
    """Leading small-t1 behaviour of the trial bound, ``4 z^2 / t1^2``."""
    if t1 <= 0:
        raise DomainError("t1 must be > 0")
    return 4.0 * inverse_normal_cdf(epsilon) ** 2 / (t1 * t1)


def protocol_violation(epsilon: float, t1: float, theta_w: float) -> ViolationReport:
    """Violation strength accumulated over the photons needed to send one bit 0."""
    if not 0.0 < t1 < 1.0:
        raise DomainError(f"t1 must lie in (0, 1), got {t1}")
    ch = bit_probabilities(math.sqrt(1.0 - t1 * t1), t1, theta_w)
    n_gamma = min_trials(epsilon, ch)
    f0, _ = fisher_bits(t1, theta_w)
    f_free = free_fisher(theta_w)
    small_t = min_trials_small_t(epsilon, t1) * f0 / f_free if epsilon != 0.5 else 0.0
    return ViolationReport("type1", n_gamma * f0 / f_free, n_gamma * f0, f_free,
                           {"epsilon": epsilon, "t1": t1, "theta_w": theta_w},
                           {"n_gamma": n_gamma, "D_small_t": small_t})


def design(epsilon: float, t1: float, theta_w: float) -> ProtocolDesign:
    ch = bit_probabilities(math.sqrt(1.0 - t1 * t1), t1, theta_w)
    n = min_trials(epsilon, ch)
    return ProtocolDesign(n, decode_threshold(n, ch), epsilon, success_probability(n, ch))


def report(epsilon: float, t1: float, theta_w: float) -> dict:
    """Flat summary used by the command line."""
    if not 0.0 < t1 < 1.0:
        raise ConfigurationError(f"t1 must lie in (0, 1), got {t1}")
    ch = bit_probabilities(math.sqrt(1.0 - t1 * t1), t1, theta_w)
    d = design(epsilon, t1, theta_w)
    v = protocol_violation(epsilon, t1, theta_w)
    return {"schema_version": SCHEMA_VERSION, "epsilon": epsilon, "t1": t1, "theta_w": theta_w,
            "P0": ch.p0, "P1": ch.p1, "q_prime": d.q_prime, "n_gamma": d.n_gamma,
            "success": d.success, "D": v.value, "D_small_t": v.extra["D_small_t"]}


def design_json(d: ProtocolDesign) -> str:
    return json.dumps(asdict(d), sort_keys=True)
