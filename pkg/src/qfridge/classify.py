"""Three-way classification of qubit channels by their limit under repetition.

Repeated application of a non-unitary channel converges (up to unitary
equivalence) either to a single point of the Bloch ball or to a diameter:

* all axes contract and the channel is unital -> the center (depolarizing
  class; entropy strictly increases for every non-maximal state),
* one axis is uncontracted -> a diameter (dephasing class; entropy is
  non-decreasing),
* the shift is nonzero -> an off-center fixed point (non-unital class;
  entropy can decrease).

Axes with lam = -1 count as uncontracted: such a channel is a contraction
composed with a half-turn, and the classification is taken up to that
unitary dressing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import (
    BlochVector,
    CanonicalForm,
    ChannelError,
    SuperOp,
    canonical_form,
    channel_distance,
    fixed_point,
    is_unital,
    power,
    replacement_channel,
)

CLASS_TOL = 1e-8

DEPOLARIZING_CLASS = "depolarizing"
DEPHASING_CLASS = "dephasing"
NON_UNITAL_CLASS = "non_unital"

STRICTLY_INCREASING = "strictly_increasing"
NON_DECREASING = "non_decreasing"
CAN_DECREASE = "can_decrease"


class ClassificationError(ChannelError):
    """Channel outside the scope of the classification (e.g. unitary)."""


@dataclass(frozen=True)
class LimitSet:
    """Limit of repeated application: a point or a diameter."""

    kind: str  # "point" | "diameter"
    point: BlochVector | None = None
    axis: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "diameter":
            axis = np.array(self.axis, dtype=float)
            if abs(np.linalg.norm(axis) - 1) > 1e-9:
                raise ChannelError("diameter axis must be unit norm")
            axis.setflags(write=False)
            object.__setattr__(self, "axis", axis)


@dataclass(frozen=True)
class ChannelClass:
    kind: str  # one of the *_CLASS constants
    axis: np.ndarray | None = None
    fixed_point: BlochVector | None = None


@dataclass(frozen=True)
class RelaxationReport:
    """Minimal step count bringing C^T within `target` of the replacement
    channel at the fixed point (diamond-distance upper estimate)."""

    steps: int
    achieved_distance: float
    target: float

    def __post_init__(self):
        if not self.achieved_distance < self.target:
            raise ChannelError("relaxation report does not meet its target")


def limit_set(f: CanonicalForm, tol: float = CLASS_TOL) -> LimitSet:
    """Limit of repeated application, from the canonical form."""
    uncontracted = [i for i in range(3) if abs(f.lam[i]) >= 1 - tol]
    unital = bool(np.linalg.norm(f.t) <= tol)
    if len(uncontracted) == 3 and unital:
        raise ClassificationError("unitary channel: no noise to classify")
    if not unital:
        return LimitSet(kind="point", point=fixed_point(f, tol=tol))
    if not uncontracted:
        return LimitSet(kind="point", point=BlochVector(np.zeros(3)))
    if len(uncontracted) == 1:
        axis = f.post_rot @ np.eye(3)[uncontracted[0]]
        return LimitSet(kind="diameter", axis=axis / np.linalg.norm(axis))
    raise ClassificationError(
        "ambiguous: two uncontracted axes in a non-unitary channel (CP violation?)"
    )


def classify(c: SuperOp, tol: float = CLASS_TOL) -> ChannelClass:
    """Class of a non-unitary channel: center / diameter / off-center point."""
    f = canonical_form(c)
    limit = limit_set(f, tol=tol)
    if limit.kind == "diameter":
        return ChannelClass(kind=DEPHASING_CLASS, axis=limit.axis)
    if is_unital(c, tol=tol):
        return ChannelClass(kind=DEPOLARIZING_CLASS)
    return ChannelClass(kind=NON_UNITAL_CLASS, fixed_point=limit.point)


def relaxation_time(
    c: SuperOp,
    target: float,
    max_steps: int = 1 << 22,
    distance_kwargs: dict | None = None,
) -> RelaxationReport:
    """Minimal T with dist(C^T, C_P) below `target`, by doubling then bisection.

    Uses the upper endpoint of the diamond-distance sandwich; strictly
    contractive channels approach the replacement channel geometrically, so
    the predicate is monotone in T for the search's purposes.
    """
    if target <= 0:
        raise ChannelError("relaxation target must be positive")
    f = canonical_form(c)
    if np.max(np.abs(f.lam)) >= 1 - CLASS_TOL:
        raise ClassificationError("not contractive: channel has an uncontracted axis")
    cp = replacement_channel(fixed_point(f))
    kwargs = distance_kwargs or {}

    def dist(t: int) -> float:
        return channel_distance(power(c, t), cp, **kwargs).upper

    hi = 1
    d_hi = dist(hi)
    while d_hi >= target:
        hi *= 2
        if hi > max_steps:
            raise ChannelError(f"relaxation target {target} not reached in {max_steps} steps")
        d_hi = dist(hi)
    lo = hi // 2  # dist(lo) >= target (or lo == 0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        d_mid = dist(mid)
        if d_mid < target:
            hi, d_hi = mid, d_mid
        else:
            lo = mid
    return RelaxationReport(steps=hi, achieved_distance=d_hi, target=target)


def _binary_entropy(x: float) -> float:
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def _bloch_entropy(w: np.ndarray) -> float:
    return _binary_entropy(0.5 * (1 + min(np.linalg.norm(w), 1.0)))


def entropy_behavior(c: SuperOp, samples: int = 200, seed: int = 0) -> str:
    """Empirical entropy response over random single-qubit states."""
    if samples < 1:
        raise ChannelError("entropy_behavior needs at least one sample")
    rng = np.random.default_rng(seed)
    # deterministic probes along the canonical axes catch invariant diameters
    # that random sampling misses with probability one
    f = canonical_form(c)
    probes = [sign * 0.5 * f.pre_rot[i] for i in range(3) for sign in (1, -1)]
    for _ in range(samples):
        w = rng.normal(size=3)
        w *= rng.random() ** (1 / 3) / np.linalg.norm(w)
        probes.append(w)
    any_decrease = False
    all_gain = True
    for w in probes:
        before = _bloch_entropy(w)
        after = _bloch_entropy(c.apply_bloch(w))
        if after < before - 1e-9:
            any_decrease = True
        if before < 1 - 1e-12 and after - before <= 1e-9:
            all_gain = False
    # the maximally mixed state is the decisive witness for non-unital maps
    if _bloch_entropy(c.apply_bloch(np.zeros(3))) < 1 - 1e-9:
        any_decrease = True
    if any_decrease:
        return CAN_DECREASE
    if all_gain:
        return STRICTLY_INCREASING
    return NON_DECREASING


def classification_report(c: SuperOp, tol: float = CLASS_TOL) -> dict:
    """JSON-ready report used by the command line front end."""
    from .channels import choi_positive, cp_check, pauli_probs

    f = canonical_form(c)
    cp = bool(cp_check(f) and choi_positive(c))
    try:
        verdict = classify(c, tol=tol)
    except ClassificationError:
        if cp:
            raise
        # non-CP input can fall outside the taxonomy; report the verdict anyway
        verdict = ChannelClass(kind=None)
    report = {
        "class": verdict.kind,
        "lambda": [float(x) for x in f.lam],
        "t": [float(x) for x in f.t],
        "unital": is_unital(c, tol=tol),
        "cp": cp,
    }
    if verdict.axis is not None:
        report["axis"] = [float(x) for x in verdict.axis]
    if verdict.fixed_point is not None:
        report["fixed_point"] = [float(x) for x in verdict.fixed_point.w]
    if report["unital"] and cp:
        probs = pauli_probs(f)
        report["pauli_probs"] = [probs.p_x, probs.p_y, probs.p_z]
    return report
