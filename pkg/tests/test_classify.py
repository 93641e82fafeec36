"""Channel taxonomy: limit sets, class labels, relaxation times, entropy behavior."""

import numpy as np
import pytest

from qfridge.channels import (
    BlochVector,
    amplitude_damping_kraus,
    canonical_form,
    dephasing_kraus,
    depolarizing_kraus,
    kraus_to_superop,
    pauli_channel_kraus,
    power,
    thermal_kraus,
    unitary_kraus,
)
from qfridge.classify import (
    CAN_DECREASE,
    DEPHASING_CLASS,
    DEPOLARIZING_CLASS,
    NON_DECREASING,
    NON_UNITAL_CLASS,
    STRICTLY_INCREASING,
    ClassificationError,
    classification_report,
    classify,
    entropy_behavior,
    limit_set,
    relaxation_time,
)


def random_unitary(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_named_channel_classes():
    assert classify(kraus_to_superop(depolarizing_kraus(0.1))).kind == DEPOLARIZING_CLASS
    assert classify(kraus_to_superop(dephasing_kraus(0.1))).kind == DEPHASING_CLASS
    assert classify(kraus_to_superop(amplitude_damping_kraus(0.1))).kind == NON_UNITAL_CLASS


def test_dephasing_axis_is_z():
    verdict = classify(kraus_to_superop(dephasing_kraus(0.2)))
    assert np.allclose(np.abs(verdict.axis), [0, 0, 1], atol=1e-10)


def test_unitary_channel_rejected():
    u = unitary_kraus(np.array([[1, 0], [0, 1j]]))
    with pytest.raises(ClassificationError):
        classify(kraus_to_superop(u))


def test_limit_set_kinds():
    assert limit_set(canonical_form(kraus_to_superop(depolarizing_kraus(0.1)))).kind == "point"
    lim = limit_set(canonical_form(kraus_to_superop(dephasing_kraus(0.1))))
    assert lim.kind == "diameter"
    fp = limit_set(canonical_form(kraus_to_superop(amplitude_damping_kraus(0.1)))).point
    assert np.allclose(fp.w, [0, 0, 1], atol=1e-12)


def test_classify_invariant_under_unitary_dressing():
    """Class labels survive pre/post rotation; the reported geometry rotates."""
    rng = np.random.default_rng(21)
    base = {
        DEPOLARIZING_CLASS: kraus_to_superop(depolarizing_kraus(0.1)),
        DEPHASING_CLASS: kraus_to_superop(dephasing_kraus(0.1)),
        NON_UNITAL_CLASS: kraus_to_superop(amplitude_damping_kraus(0.1)),
    }
    for _ in range(30):
        u = kraus_to_superop(unitary_kraus(random_unitary(rng)))
        v = kraus_to_superop(unitary_kraus(random_unitary(rng)))
        for kind, c in base.items():
            assert classify(u.compose(c).compose(v)).kind == kind


def test_non_unital_iteration_converges_to_fixed_point():
    rng = np.random.default_rng(22)
    c = kraus_to_superop(thermal_kraus(0.25, 0.08))
    verdict = classify(c)
    target = verdict.fixed_point.w
    for _ in range(20):
        w = rng.normal(size=3)
        w *= rng.random() ** (1 / 3) / np.linalg.norm(w)
        for _ in range(200):
            w = c.apply_bloch(w)
        assert np.linalg.norm(w - target) < 1e-6


def test_dephasing_diameter_points_are_fixed():
    c = kraus_to_superop(dephasing_kraus(0.15))
    axis = classify(c).axis
    for s in np.linspace(-1, 1, 9):
        assert np.linalg.norm(c.apply_bloch(s * axis) - s * axis) < 1e-10


def test_relaxation_time_minimality():
    from qfridge.channels import channel_distance, fixed_point, replacement_channel

    c = kraus_to_superop(amplitude_damping_kraus(0.3))
    rep = relaxation_time(c, 1e-3, distance_kwargs={"restarts": 8})
    cp = replacement_channel(fixed_point(canonical_form(c)))
    assert rep.achieved_distance < 1e-3
    below = channel_distance(power(c, rep.steps - 1), cp, restarts=8).upper
    assert below >= 1e-3


def test_relaxation_time_rejects_uncontractive():
    with pytest.raises(ClassificationError):
        relaxation_time(kraus_to_superop(dephasing_kraus(0.1)), 1e-3)


def test_entropy_behavior_taxonomy():
    assert entropy_behavior(kraus_to_superop(depolarizing_kraus(0.1))) == STRICTLY_INCREASING
    assert entropy_behavior(kraus_to_superop(dephasing_kraus(0.1))) == NON_DECREASING
    assert entropy_behavior(kraus_to_superop(amplitude_damping_kraus(0.1))) == CAN_DECREASE


def test_classification_report_contents():
    rep = classification_report(kraus_to_superop(amplitude_damping_kraus(0.1)))
    assert rep["class"] == NON_UNITAL_CLASS
    assert rep["cp"] and not rep["unital"]
    assert np.allclose(rep["fixed_point"], [0, 0, 1], atol=1e-10)
    rep = classification_report(kraus_to_superop(pauli_channel_kraus(0.05, 0.0, 0.1)))
    assert rep["unital"]
    assert np.allclose(sorted(rep["pauli_probs"]), [0.0, 0.05, 0.1], atol=1e-10)


def test_report_on_non_cp_channel():
    from qfridge.channels import SuperOp

    ptm = np.diag([1.0, 1.0, 0.9, 1.0])  # transpose-like, not CP
    rep = classification_report(SuperOp(ptm))
    assert rep["cp"] is False
