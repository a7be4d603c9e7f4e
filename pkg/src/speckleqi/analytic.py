"""Closed-form receiver performance under Rayleigh fading.

Three receivers are covered:

- CI: classical illumination, coherent-state transmitter with heterodyne
  detection, matched filtering, and square-law envelope detection. Its
  envelope statistic is exponential under both hypotheses, giving the ROC
  P_D = P_F^(1/(1+x)) with x = M*kappa_bar*N_S/N_B.
- QI-OPA: entangled transmitter with an optical parametric amplifier
  receiver. The uniformly distributed return phase wipes out its
  phase-sensitive cross-correlation signature, so only its SNR is exposed.
- QI-SFG: entangled transmitter with a sum-frequency-generation receiver.
  Under fading it reduces target detection to discriminating two thermal
  photon-count distributions with means N0 (absent) and N1 (present), decided
  by an integer photon-count threshold.

All probability products are evaluated in log space so thresholds in the
hundreds and false-alarm probabilities near 1e-15 stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .params import SystemParams, derived_x


class DegenerateDiscrimination(ValueError):
    """The two hypotheses have identical statistics (N1 <= N0); only the priors decide."""


class AsymptoticsInvalid(ValueError):
    """An asymptotic formula was requested outside its validity region."""


class RocInterpolation(Enum):
    CONTINUOUS = "continuous"
    RANDOMIZED_SEGMENTS = "randomized_segments"


@dataclass(frozen=True)
class RocCurve:
    """Ordered operating points (P_F, P_D), sorted by strictly increasing P_F.

    points: array of shape (n, 2).
    interpolation: CONTINUOUS for densely sampled smooth curves,
        RANDOMIZED_SEGMENTS when stored points are the deterministic-test
        vertices and intermediate points are realized by randomizing between
        neighbors (linear interpolation).
    thresholds: optional per-point decision thresholds (np.inf for the
        never-declare endpoint, -1 for always-declare).
    """

    points: np.ndarray
    interpolation: RocInterpolation
    thresholds: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        if self.thresholds is not None:
            object.__setattr__(self, "thresholds", np.asarray(self.thresholds, dtype=float))

    @property
    def p_false_alarm(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def p_detect(self) -> np.ndarray:
        return self.points[:, 1]

    def detection_probability(self, p_f) -> np.ndarray:
        """P_D at the given false-alarm probabilities, interpolating linearly.

        Linear interpolation is exact for RANDOMIZED_SEGMENTS (it realizes the
        randomized test between neighboring vertices) and a sampling
        approximation for CONTINUOUS curves.
        """
        return np.interp(np.asarray(p_f, dtype=float), self.p_false_alarm, self.p_detect)

    def validate(self, atol: float = 1e-12) -> None:
        pf, pd = self.p_false_alarm, self.p_detect
        if np.any(pf < -atol) or np.any(pf > 1 + atol) or np.any(pd < -atol) or np.any(pd > 1 + atol):
            raise ValueError("operating points must lie in [0,1]^2")
        if np.any(np.diff(pf) <= 0):
            raise ValueError("P_F must be strictly increasing")
        if np.any(np.diff(pd) < -atol):
            raise ValueError("P_D must be nondecreasing")
        if pf[0] > 1e-10 or pd[0] > 1e-10 or pf[-1] < 1 - 1e-12 or pd[-1] < 1 - 1e-12:
            raise ValueError("curve must contain or limit to (0,0) and (1,1)")
        if self.interpolation is RocInterpolation.RANDOMIZED_SEGMENTS:
            slopes = np.diff(pd) / np.diff(pf)
            if np.any(np.diff(slopes) > atol + 1e-9 * np.abs(slopes[:-1])):
                raise ValueError("randomized envelope must be concave")


@dataclass(frozen=True)
class BayesResult:
    """Minimum-error-probability operating point for given priors.

    threshold is receiver dependent: the integer photon-count threshold for
    SFG (None when discrimination is degenerate), the optimal false-alarm
    probability for CI.
    """

    threshold: float
    p_false_alarm: float
    p_detect: float
    p_error: float


@dataclass(frozen=True)
class OpaConfig:
    """OPA receiver gain setting G = 1 + gain_minus_one.

    in_window records whether the gain sits well inside its design window
    max(N_S/N_B, N_S/(kappa_bar*N_B^2)) << G-1 << 1, with "<<" read as a
    factor-of-10 separation (evaluated at kappa = kappa_bar). The flag is
    informational and never gates computation.
    """

    gain_minus_one: float
    in_window: bool = None

    def __post_init__(self):
        if not self.gain_minus_one > 0:
            raise ValueError("gain_minus_one must be > 0")


# =============================================================================
# SFG receiver
# =============================================================================

def sfg_mean_counts(params: SystemParams) -> tuple[float, float]:
    """Mean total photon counts (N0, N1) of the SFG receiver under h=0 / h=1.

    N0 = -N_S*ln(epsilon)/2 is the count from the unconverted-signal taps;
    N1 = (1-epsilon)*M*kappa_bar*N_S/N_B is the fading-averaged converted
    signal, which is thermal (Bose-Einstein) because the Rayleigh-fading
    mixture of coherent states is a thermal state.
    """
    n0 = -params.N_S * math.log(params.epsilon) / 2.0
    n1 = (1.0 - params.epsilon) * derived_x(params)
    return n0, n1


def _log_weight(log_pi: float, mean: float, n: int) -> float:
    # log[ pi * mean^n / (mean+1)^(n+1) ], with 0^0 = 1
    if mean == 0.0:
        return log_pi if n == 0 else -math.inf
    return log_pi + n * math.log(mean) - (n + 1) * math.log(mean + 1.0)


def sfg_threshold(n0: float, n1: float, pi0: float) -> int:
    """Integer photon-count threshold n_t of the minimum-error SFG test.

    Declare "present" iff the count exceeds n_t; n_t is the unique integer
    where the weighted Bose-Einstein likelihoods cross, a tie deciding
    "absent". Returns -1 in the always-declare corner (possible only for
    strongly skewed priors). Raises DegenerateDiscrimination when n1 <= n0.
    """
    if not 0.0 < pi0 < 1.0:
        raise ValueError("pi0 must lie in (0, 1)")
    if n1 <= n0:
        raise DegenerateDiscrimination(f"N1 = {n1} must exceed N0 = {n0}")
    log_pi0, log_pi1 = math.log(pi0), math.log1p(-pi0)

    def margin(n: int) -> float:
        return _log_weight(log_pi0, n0, n) - _log_weight(log_pi1, n1, n)

    if margin(0) < 0.0:
        return -1
    if n0 == 0.0:
        return 0
    # margin(n) is affine and strictly decreasing in n; solve then repair
    # any floating-point off-by-one against the exact inequalities.
    slope = math.log(n0) - math.log(n1) + math.log(n1 + 1.0) - math.log(n0 + 1.0)
    cand = max(0, math.floor(-margin(0) / slope + 1e-12))
    while margin(cand + 1) >= 0.0:
        cand += 1
    while cand > 0 and margin(cand) < 0.0:
        cand -= 1
    return cand


def _log_tail(mean: float, n_t: int) -> float:
    # log P(count > n_t) = (n_t+1) * log(mean/(mean+1))
    if mean == 0.0:
        return 0.0 if n_t < 0 else -math.inf
    return (n_t + 1) * (math.log(mean) - math.log(mean + 1.0))


def sfg_roc(params: SystemParams, p_f_floor: float = 1e-15) -> RocCurve:
    """SFG receiver ROC: deterministic-threshold vertices joined by randomized tests.

    Vertices sit at integer thresholds n_t = 0, 1, ..., n_max with n_max the
    first threshold pushing P_F below p_f_floor; the endpoints (0,0)
    (never declare) and (1,1) (always declare) are included explicitly.
    """
    n0, n1 = sfg_mean_counts(params)
    if n1 <= n0:
        pts = [(0.0, 0.0), (1.0, 1.0)]
        th = [np.inf, -1.0]
        return RocCurve(np.array(pts), RocInterpolation.RANDOMIZED_SEGMENTS, np.array(th))
    log_floor = math.log(p_f_floor)
    n_max = 0
    while _log_tail(n0, n_max) >= log_floor:
        n_max += 1
    points = [(0.0, 0.0)]
    thresholds = [np.inf]
    for n_t in range(n_max, -1, -1):
        points.append((math.exp(_log_tail(n0, n_t)), math.exp(_log_tail(n1, n_t))))
        thresholds.append(float(n_t))
    points.append((1.0, 1.0))
    thresholds.append(-1.0)
    return RocCurve(np.array(points), RocInterpolation.RANDOMIZED_SEGMENTS,
                    np.array(thresholds))


def sfg_bayes(params: SystemParams) -> BayesResult:
    """Minimum error probability of the SFG threshold test for the stored priors."""
    n0, n1 = sfg_mean_counts(params)
    pi0, pi1 = params.pi0, params.pi1
    try:
        n_t = sfg_threshold(n0, n1, pi0)
    except DegenerateDiscrimination:
        return BayesResult(threshold=None, p_false_alarm=None, p_detect=None,
                           p_error=min(pi0, pi1))
    except ValueError:
        # degenerate priors: the fixed decision pi0 >= pi1 ? absent : present
        return BayesResult(threshold=None, p_false_alarm=None, p_detect=None,
                           p_error=min(pi0, pi1))
    p_f = math.exp(_log_tail(n0, n_t))
    p_d = math.exp(_log_tail(n1, n_t))
    return BayesResult(threshold=n_t, p_false_alarm=p_f, p_detect=p_d,
                       p_error=pi0 * p_f + pi1 * (1.0 - p_d))


def sfg_bayes_limit(params: SystemParams) -> float:
    """Vanishing-brightness limit of the SFG error probability, pi1/(1 + x)."""
    return params.pi1 / (1.0 + derived_x(params))


def threshold_test_error(n0: float, n1: float, pi0: float) -> float:
    """Minimum error of the photon-count threshold test between two
    Bose-Einstein count distributions with means n0 < n1."""
    n_t = sfg_threshold(n0, n1, pi0)
    p_f = math.exp(_log_tail(n0, n_t))
    p_d = math.exp(_log_tail(n1, n_t))
    return pi0 * p_f + (1.0 - pi0) * (1.0 - p_d)


# =============================================================================
# CI receiver
# =============================================================================

def ci_roc(params: SystemParams, n_points: int = 200, p_f_min: float = 1e-12) -> RocCurve:
    """Heterodyne-plus-envelope-detection ROC, P_D = P_F^(1/(1+x)).

    Sampled on a log-spaced grid plus the exact (0, 0) endpoint."""
    x = derived_x(params)
    p_f = np.logspace(math.log10(p_f_min), 0.0, n_points)
    p_f[-1] = 1.0
    p_d = p_f ** (1.0 / (1.0 + x))
    points = np.vstack([[0.0, 0.0], np.column_stack([p_f, p_d])])
    return RocCurve(points, RocInterpolation.CONTINUOUS)


def ci_detection_probability(params: SystemParams, p_f: float) -> float:
    """Exact CI ROC value at one false-alarm probability."""
    return p_f ** (1.0 / (1.0 + derived_x(params)))


def ci_bayes(params: SystemParams) -> BayesResult:
    """Minimum error probability of the CI receiver; threshold holds the optimal P_F.

    The objective pi0*P_F + pi1*(1 - P_F^(1/(1+x))) is convex in P_F; its
    stationary point P_F* = [pi1/(pi0*(1+x))]^((1+x)/x), clamped to [0, 1],
    is the exact minimizer.
    """
    x = derived_x(params)
    pi0, pi1 = params.pi0, params.pi1
    if pi1 == 0.0:
        return BayesResult(threshold=0.0, p_false_alarm=0.0, p_detect=0.0, p_error=0.0)
    if pi0 == 0.0:
        return BayesResult(threshold=1.0, p_false_alarm=1.0, p_detect=1.0, p_error=0.0)
    if x == 0.0:
        p_f = 0.0 if pi0 >= pi1 else 1.0
        return BayesResult(threshold=p_f, p_false_alarm=p_f, p_detect=p_f,
                           p_error=min(pi0, pi1))
    log_pf = (1.0 + x) / x * (math.log(pi1) - math.log(pi0) - math.log1p(x))
    p_f = math.exp(min(log_pf, 0.0))
    p_d = p_f ** (1.0 / (1.0 + x))
    return BayesResult(threshold=p_f, p_false_alarm=p_f, p_detect=p_d,
                       p_error=pi0 * p_f + pi1 * (1.0 - p_d))


def ci_bayes_asymptotic(params: SystemParams) -> float:
    """Leading large-x term of the CI error probability, pi1*ln(x)/x."""
    x = derived_x(params)
    if x <= 1.0:
        raise AsymptoticsInvalid(f"requires x > 1, got x = {x}")
    return params.pi1 * math.log(x) / x


def ci_snr(params: SystemParams) -> float:
    """Deflection SNR of the CI envelope statistic: y/(1+y)^2 with y = x/2."""
    y = derived_x(params) / 2.0
    return y / (1.0 + y) ** 2


# =============================================================================
# OPA receiver
# =============================================================================

def opa_snr_fading(params: SystemParams, opa: OpaConfig) -> float:
    """OPA receiver SNR against a Rayleigh-fading return.

    The random phase destroys the cross-correlation mean signature and the
    fading randomizes the remaining intensity signature, leaving
    M*(G-1)*(kappa_bar*N_S)^2/N_B / (1 + sqrt(1 + 2x))^2.
    """
    x = derived_x(params)
    num = params.M * opa.gain_minus_one * (params.kappa_bar * params.N_S) ** 2 / params.N_B
    return num / (1.0 + math.sqrt(1.0 + 2.0 * x)) ** 2


def opa_snr_known(params: SystemParams, kappa: float) -> float:
    """OPA receiver SNR for a known return (kappa known, phase zero): M*kappa*N_S/N_B."""
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    return params.M * kappa * params.N_S / params.N_B


def opa_default_gain(params: SystemParams) -> OpaConfig:
    """Design-point OPA gain G - 1 = sqrt(N_S)/N_B, with its window flag."""
    g1 = math.sqrt(params.N_S) / params.N_B
    lower = max(params.N_S / params.N_B,
                params.N_S / (params.kappa_bar * params.N_B ** 2))
    in_window = (g1 >= 10.0 * lower) and (g1 <= 0.1)
    return OpaConfig(gain_minus_one=g1, in_window=in_window)
