"""Density-matrix simulator: gates, noise, partial trace, entropies, distances."""

import numpy as np
import pytest

from qfridge.channels import (
    dephasing_kraus,
    depolarizing_kraus,
    kraus_to_superop,
)
from qfridge.densim import (
    DATA,
    NAMED_GATES,
    REFERENCE,
    GateLayer,
    NoiseLayer,
    QRegister,
    SimulationError,
    apply_single_qubit_superop,
    apply_unitary,
    conditional_entropy,
    dephase_all,
    distance,
    epr_fidelity,
    epr_register,
    information,
    layer_from_dict,
    partial_trace,
    relative_entropy,
    step,
    von_neumann_entropy,
)

ZERO = np.diag([1.0, 0.0]).astype(complex)
ONE = np.diag([0.0, 1.0]).astype(complex)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def test_register_validation():
    with pytest.raises(SimulationError):
        QRegister(np.eye(2), [DATA])  # trace 2
    with pytest.raises(SimulationError):
        QRegister(np.eye(4) / 4, [DATA])  # dimension mismatch
    with pytest.raises(SimulationError):
        QRegister(np.diag([1.5, -0.5]).astype(complex), [DATA])  # negative eigenvalue


def test_register_cap():
    with pytest.raises(SimulationError):
        QRegister(np.eye(2**13) / 2**13, [DATA] * 13)


def test_apply_unitary_agrees_with_dense_kron():
    """Targeted application must match the full kron-built unitary."""
    rng = np.random.default_rng(31)
    n = 4
    rho = random_state(rng, n)
    cnot = NAMED_GATES["CNOT"]
    # act on qubits (2, 0): compare against an explicitly permuted dense matrix
    got = apply_unitary(rho, cnot, [2, 0], n)
    big = np.zeros((16, 16), dtype=complex)
    for x in range(16):
        bits = [(x >> (n - 1 - q)) & 1 for q in range(n)]
        control, target = bits[2], bits[0]
        bits[0] = target ^ control
        y = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        big[y, x] = 1.0
    assert np.allclose(got, big @ rho @ big.conj().T, atol=1e-12)


def test_single_qubit_superop_matches_global_action():
    rng = np.random.default_rng(32)
    n = 3
    rho = random_state(rng, n)
    c = kraus_to_superop(dephasing_kraus(0.2))
    k = dephasing_kraus(0.2)
    got = apply_single_qubit_superop(rho, c.natural(), 1, n)
    want = np.zeros_like(rho)
    for op in k.ops:
        big = np.kron(np.kron(np.eye(2), op), np.eye(2))
        want += big @ rho @ big.conj().T
    assert np.allclose(got, want, atol=1e-12)


def test_partial_trace_product_state():
    rho = np.kron(np.kron(ZERO, ONE), (ZERO + ONE) / 2)
    assert np.allclose(partial_trace(rho, [1], 3), ONE, atol=1e-12)
    # order of `keep` controls output qubit order
    pair = partial_trace(rho, [1, 0], 3)
    assert np.allclose(pair, np.kron(ONE, ZERO), atol=1e-12)


def test_partial_trace_entangled():
    reg = epr_register()
    for q in (0, 1):
        assert np.allclose(partial_trace(reg.rho, [q], 2), np.eye(2) / 2, atol=1e-12)


def test_gate_layer_validation():
    h = NAMED_GATES["H"]
    with pytest.raises(SimulationError):
        GateLayer([(h, (0,)), (h, (0,))])  # overlapping targets
    with pytest.raises(SimulationError):
        GateLayer([(np.eye(2) * 2, (0,))])  # not unitary
    with pytest.raises(SimulationError):
        GateLayer([(NAMED_GATES["TOFFOLI"], (0, 1, 2))], max_arity=2)


def test_step_noise_skips_reference():
    reg = epr_register()
    noise = NoiseLayer(kraus_to_superop(depolarizing_kraus(0.3)))
    out = step(reg, GateLayer([]), noise)
    # reference marginal untouched
    assert np.allclose(partial_trace(out.rho, [0], 2), np.eye(2) / 2, atol=1e-12)
    # system marginal still maximally mixed, but correlations decayed
    assert von_neumann_entropy(out) > von_neumann_entropy(reg) + 0.1


def test_entropy_values():
    reg = QRegister.from_product([ZERO, np.eye(2) / 2], [DATA, DATA])
    assert abs(von_neumann_entropy(reg) - 1.0) < 1e-12
    assert abs(von_neumann_entropy(reg, [0])) < 1e-12
    assert abs(von_neumann_entropy(reg, [1]) - 1.0) < 1e-12


def test_conditional_entropy_negative_for_epr():
    reg = epr_register()
    assert conditional_entropy(reg, [1], [0]) < -0.999


def test_information_pure_state():
    rng = np.random.default_rng(33)
    reg = QRegister(random_state(rng, 3), [DATA] * 3)
    assert abs(information(reg) - 3.0) < 1e-9


def test_dephase_all_kills_system_coherence():
    plus = np.full((2, 2), 0.5, dtype=complex)
    reg = QRegister.from_product([plus, plus], [DATA, DATA])
    out = dephase_all(reg)
    assert np.allclose(out.rho, np.eye(4) / 4, atol=1e-12)


def test_dephase_all_spares_reference():
    reg = epr_register()
    out = dephase_all(reg)
    # Bell diagonal part survives: classical correlation remains
    assert abs(out.rho[0, 0] - 0.5) < 1e-12 and abs(out.rho[0, 3]) < 1e-12


def test_distance_norms():
    assert abs(distance(ZERO, ONE, "one") - 2.0) < 1e-12
    assert abs(distance(ZERO, ONE, "two") - np.sqrt(2)) < 1e-12
    with pytest.raises(SimulationError):
        distance(ZERO, ONE, "three")


def test_relative_entropy_properties():
    rng = np.random.default_rng(34)
    assert relative_entropy(ZERO, ONE) == float("inf")
    assert relative_entropy(ZERO, ZERO) == 0.0
    # classical cross-check on commuting states
    a = np.diag([0.3, 0.7]).astype(complex)
    b = np.diag([0.6, 0.4]).astype(complex)
    want = 0.3 * np.log2(0.3 / 0.6) + 0.7 * np.log2(0.7 / 0.4)
    assert abs(relative_entropy(a, b) - want) < 1e-12
    # nonnegativity on random full-rank pairs
    for _ in range(50):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a = g @ g.conj().T
        a /= np.trace(a).real
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = g @ g.conj().T
        b /= np.trace(b).real
        assert relative_entropy(a, b) >= -1e-10


def test_epr_fidelity_perfect_and_decoded():
    reg = epr_register()
    assert abs(epr_fidelity(reg, [], 1, 0) - 1.0) < 1e-12
    # X on the system qubit drops overlap with |Phi+> to zero
    flipped = step(reg, GateLayer([(NAMED_GATES["X"], (1,))]), None)
    assert epr_fidelity(flipped, [], 1, 0) < 1e-12
    # an X-decoder restores it
    decode = [GateLayer([(NAMED_GATES["X"], (1,))])]
    assert abs(epr_fidelity(flipped, decode, 1, 0) - 1.0) < 1e-12


def test_layer_from_dict_named_and_explicit():
    doc = {"gates": [{"u": "H", "targets": [0]}, {"u": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]], "targets": [1]}]}
    layer = layer_from_dict(doc)
    assert len(layer.gates) == 2
    with pytest.raises(SimulationError):
        layer_from_dict({"gates": [{"u": "NOPE", "targets": [0]}]})
