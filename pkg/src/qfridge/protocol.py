"""Three-component computation loop for non-unital noise: a repetition-code
memory, a storage house where qubits relax toward the channel's fixed point,
and a refrigerator that condenses the relaxed qubits into reset ancillas.

Each cycle the memory runs one coherent syndrome-and-correct pass consuming
two fresh ancillas.  In the refrigerated run those ancillas are fridge
outputs (two cooling blocks of R storage qubits each); the dirty syndrome
qubits and the fridge waste go back to the storage house.  A stale baseline
reuses the previous cycle's syndrome garbage as ancillas without any cooling,
under an identical layer schedule.

Two simulation modes:

* ``exact`` -- data and the cycle's drawn storage qubits evolve in one joint
  density matrix (3 + 2R qubits), keeping reset/waste/data correlations;
  factorization happens only when qubits return to storage.
* ``factorized`` -- every qubit crossing a component boundary is reduced to
  its single-qubit marginal immediately, as the weak-correlation argument
  licenses.  Layer and noise counts match the exact mode step for step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import SuperOp, bloch_to_density, canonical_form, fixed_point, power
from .classify import NON_UNITAL_CLASS, classify, relaxation_time
from .densim import (
    NAMED_GATES,
    SimulationError,
    apply_single_qubit_superop,
    apply_unitary,
    partial_trace,
)
from .experiments import TraceRecord
from .fridge import FridgeSpec, build_cooling_circuit, choose_R

MODE_EXACT = "exact"
MODE_FACTORIZED = "factorized"

POLICY_REFRIGERATED = "refrigerated"
POLICY_STALE = "stale"

FRAME_BIT_FLIP = "z"
FRAME_PHASE_FLIP = "x"

_ZERO = np.diag([1.0, 0.0]).astype(complex)


@dataclass(frozen=True)
class ProtocolConfig:
    """Resource counts and error budgets for a protocol run."""

    n_prime: int = 5  # computation-component qubits: 3 data + 2 ancilla slots
    d_prime: int = 50  # cycles
    r_block: int | None = None  # block size; sized from (q, eps2) when omitted
    eps0: float = 0.1
    eps1: float = 0.1
    eps2: float = 0.2
    storage_T: int | None = None  # computed from eps1 when omitted
    correction_interval: int = 1
    mode: str = MODE_FACTORIZED

    def throughput_bound(self, r: int) -> int:
        return self.n_prime * r * self.d_prime

    def dwell_target(self, r: int) -> float:
        return self.eps1 / (self.n_prime * self.d_prime * r)


@dataclass(frozen=True)
class ProtocolResult:
    refrigerated: tuple
    stale: tuple
    margin: float  # final-cycle fidelity advantage of the refrigerated run
    storage_T: int
    throughput: int
    throughput_bound: int
    fridge: FridgeSpec
    code_frame: str
    mode: str


class _Storage:
    """FIFO of single-qubit states relaxing toward the fixed point.

    Prefilled with an unbounded supply of fixed-point states; recycled
    entries only requalify after dwelling storage_T noise layers.  Every
    dequeue (prefilled or recycled) counts toward the throughput ledger.
    """

    def __init__(self, p_state, nat_layer, storage_T, dwell_target):
        self.p_state = p_state
        self.nat_layer = nat_layer
        self.storage_T = storage_T
        self.dwell_target = dwell_target
        self.entries = []  # (state, age in layers), oldest first
        self.drawn = 0

    def tick(self, layers: int) -> None:
        relax = np.linalg.matrix_power(self.nat_layer, layers)
        self.entries = [
            ((relax @ state.reshape(4)).reshape(2, 2), age + layers)
            for state, age in self.entries
        ]

    def enqueue(self, state: np.ndarray) -> None:
        self.entries.append((np.asarray(state, dtype=complex), 0))

    def dequeue(self) -> np.ndarray:
        self.drawn += 1
        if self.entries and self.entries[0][1] >= self.storage_T:
            state, _ = self.entries.pop(0)
        else:
            state = self.p_state
        gap = float(np.sum(np.abs(np.linalg.eigvalsh(state - self.p_state))))
        if gap >= self.dwell_target:
            raise SimulationError(
                f"dequeued qubit is {gap} from the fixed point, target {self.dwell_target}"
            )
        return state


def _code_frame(channel: SuperOp) -> str:
    """Pick the repetition-code basis matching the dominant error axis."""
    lam = np.abs(canonical_form(channel).lam)
    p_x = (1 + lam[0] - lam[1] - lam[2]) / 4
    p_y = (1 - lam[0] + lam[1] - lam[2]) / 4
    p_z = (1 - lam[0] - lam[1] + lam[2]) / 4
    return FRAME_PHASE_FLIP if p_z > max(p_x, p_y) else FRAME_BIT_FLIP


def _h_layer():
    h = NAMED_GATES["H"]
    return [(h, (0,)), (h, (1,)), (h, (2,))]


def _encode_layers(frame: str) -> list:
    cnot = NAMED_GATES["CNOT"]
    layers = [[(cnot, (0, 1))], [(cnot, (0, 2))]]
    if frame == FRAME_PHASE_FLIP:
        layers.append(_h_layer())
    return layers


def _ideal_decode_layers(frame: str) -> list:
    cnot, toff = NAMED_GATES["CNOT"], NAMED_GATES["TOFFOLI"]
    layers = []
    if frame == FRAME_PHASE_FLIP:
        layers.append(_h_layer())
    layers += [[(cnot, (0, 1))], [(cnot, (0, 2))], [(toff, (1, 2, 0))]]
    return layers


def _correction_layers(frame: str, a0: int, a1: int) -> list:
    cnot, toff, swap = NAMED_GATES["CNOT"], NAMED_GATES["TOFFOLI"], NAMED_GATES["SWAP"]
    layers = []
    if frame == FRAME_PHASE_FLIP:
        layers.append(_h_layer())
    layers += [
        [(cnot, (0, 1))],
        [(cnot, (0, 2))],
        [(toff, (1, 2, 0))],
        [(swap, (1, a0)), (swap, (2, a1))],
        [(cnot, (0, 1))],
        [(cnot, (0, 2))],
    ]
    if frame == FRAME_PHASE_FLIP:
        layers.append(_h_layer())
    return layers


def _apply_layers(rho, layers, n, nat=None):
    """Apply gate layers; with `nat` given, one noise pass on all qubits
    follows each layer."""
    for gates in layers:
        for u, targets in gates:
            rho = apply_unitary(rho, u, targets, n)
        if nat is not None:
            for q in range(n):
                rho = apply_single_qubit_superop(rho, nat, q, n)
    return rho


def _noise_only(rho, n, nat, repeats):
    for _ in range(repeats):
        for q in range(n):
            rho = apply_single_qubit_superop(rho, nat, q, n)
    return rho


def _renorm(rho):
    """Scrub the multiplicative trace drift that compounds through the
    per-cycle tensor products."""
    return rho / np.trace(rho).real


def _logical_fidelity(rho3, frame, logical_ket) -> float:
    rho3 = _apply_layers(rho3, _ideal_decode_layers(frame), 3)
    one = partial_trace(rho3, [0], 3)
    return float((logical_ket.conj() @ one @ logical_ket).real)


def _record(cycle, rho3, frame, logical_ket) -> TraceRecord:
    eigs = np.clip(np.linalg.eigvalsh(rho3).real, 0, None)
    eigs = eigs[eigs > 1e-12]
    entropy = float(-np.sum(eigs * np.log2(eigs)))
    return TraceRecord(
        step=cycle,
        entropy_bits=entropy,
        information_bits=3 - entropy,
        logical_fidelity=_logical_fidelity(rho3, frame, logical_ket),
    )


def run_refrigerator_protocol(
    cfg: ProtocolConfig,
    channel: SuperOp,
    logical_ket=None,
    seed: int = 0,
) -> ProtocolResult:
    """Run the refrigerated-memory loop and its stale-ancilla baseline.

    Asserts the refrigerated run's final logical fidelity is at least the
    baseline's and that storage throughput stays within n' R D'.  The seed is
    accepted for interface uniformity; the evolution itself is deterministic.
    """
    verdict = classify(channel)
    if verdict.kind != NON_UNITAL_CLASS:
        raise SimulationError("refrigerator protocol needs a non-unital channel")
    if cfg.mode not in (MODE_EXACT, MODE_FACTORIZED):
        raise SimulationError(f"unknown simulation mode {cfg.mode!r}")

    if logical_ket is None:
        # |1> opposes the (rotated) noise fixed point, so it is the state the
        # noise actively attacks; |+> would be invariant under logical X and
        # mask ancilla quality entirely
        logical_ket = np.array([0, 1], dtype=complex)
    logical_ket = np.asarray(logical_ket, dtype=complex)
    logical_ket = logical_ket / np.linalg.norm(logical_ket)

    w = fixed_point(canonical_form(channel)).w
    purity = float(np.linalg.norm(w))
    q_bias = max(0.0, (1 - purity) / 2)
    r = cfg.r_block if cfg.r_block is not None else choose_R(q_bias, cfg.eps2)
    if cfg.mode == MODE_EXACT and 3 + 2 * r > 8:
        raise SimulationError("exact mode overflows the 8-qubit cap")
    rho_p = bloch_to_density(w)
    eigvals, eigvecs = np.linalg.eigh(rho_p)
    pre_rot = eigvecs[:, ::-1].conj().T  # rotate the fixed point onto |0>
    spec = build_cooling_circuit(q_bias, r, pre_rotation=pre_rot)
    frame = _code_frame(channel)

    if cfg.storage_T is not None:
        storage_t = cfg.storage_T
    else:
        storage_t = relaxation_time(
            channel, cfg.dwell_target(r), distance_kwargs={"restarts": 16}
        ).steps

    refrig, thru = _run_policy(
        cfg, channel, spec, frame, logical_ket, rho_p, storage_t, POLICY_REFRIGERATED
    )
    stale, _ = _run_policy(
        cfg, channel, spec, frame, logical_ket, rho_p, storage_t, POLICY_STALE
    )
    if thru > cfg.throughput_bound(r):
        raise SimulationError(
            f"storage throughput {thru} exceeds bound {cfg.throughput_bound(r)}"
        )
    margin = refrig[-1].logical_fidelity - stale[-1].logical_fidelity
    if margin < -1e-12:
        raise SimulationError(
            f"refrigerated run lost to the stale baseline by {-margin}"
        )
    return ProtocolResult(
        refrigerated=tuple(refrig),
        stale=tuple(stale),
        margin=float(margin),
        storage_T=storage_t,
        throughput=thru,
        throughput_bound=cfg.throughput_bound(r),
        fridge=spec,
        code_frame=frame,
        mode=cfg.mode,
    )


def _run_policy(cfg, channel, spec, frame, logical_ket, rho_p, storage_t, policy):
    nat = channel.natural()
    r = spec.r_block
    exact_joint = cfg.mode == MODE_EXACT and policy == POLICY_REFRIGERATED
    correction = _correction_layers(frame, a0=3, a1=3 + r if exact_joint else 4)
    storage = _Storage(rho_p, nat, storage_t, cfg.dwell_target(r))

    # encode the logical input; no noise during preparation
    ket = np.kron(logical_ket, np.array([1, 0], dtype=complex))
    ket = np.kron(ket, np.array([1, 0], dtype=complex))
    rho = np.outer(ket, ket.conj())
    rho = _apply_layers(rho, _encode_layers(frame), 3)

    stale_ancillas = [_ZERO, _ZERO]  # first cycle runs on fresh |0> qubits
    records = []
    for cycle in range(1, cfg.d_prime + 1):
        if cfg.correction_interval > 1 and cycle % cfg.correction_interval != 0:
            rho = _noise_only(rho, 3, nat, 1)
            rho = _renorm(rho)
            records.append(_record(cycle, rho, frame, logical_ket))
            storage.tick(1)
            continue
        if policy == POLICY_REFRIGERATED:
            drawn = [spec.pre_rotation @ storage.dequeue() @ spec.pre_rotation.conj().T
                     for _ in range(2 * r)]
            if cfg.mode == MODE_EXACT:
                rho = _cycle_exact(rho, drawn, spec, correction, nat, r)
                block_marginals = [partial_trace(rho, [3 + i], 3 + 2 * r) for i in range(2 * r)]
                for m in block_marginals:
                    storage.enqueue(m)
                rho = partial_trace(rho, [0, 1, 2], 3 + 2 * r)
            else:
                rho, returned = _cycle_factorized(rho, drawn, spec, correction, nat, r)
                for m in returned:
                    storage.enqueue(m)
        else:
            rho, stale_ancillas = _cycle_stale(rho, stale_ancillas, correction, nat)
        rho = _renorm(rho)
        storage.tick(1)
        records.append(_record(cycle, rho, frame, logical_ket))
    return records, storage.drawn


def _cycle_exact(rho3, drawn, spec, correction, nat, r):
    # all of one cycle's gates sit between two noise applications: the noise
    # model is per time step, with arbitrary unitaries allowed in between
    n = 3 + 2 * r
    rho = rho3
    for state in drawn:
        rho = np.kron(rho, state)
    stage_layers = [
        [(stage, tuple(range(3, 3 + r))), (stage, tuple(range(3 + r, 3 + 2 * r)))]
        for stage in spec.stages
    ]
    rho = _apply_layers(rho, stage_layers, n)
    rho = _apply_layers(rho, correction, n)
    return _noise_only(rho, n, nat, 1)


def _cycle_factorized(rho3, drawn, spec, correction, nat, r):
    # fridge blocks run in their own registers, gates noiseless within the
    # cycle; every qubit then takes the cycle's single noise application
    resets, wastes = [], []
    for b in range(2):
        block = np.array([[1.0]], dtype=complex)
        for state in drawn[b * r:(b + 1) * r]:
            block = np.kron(block, state)
        stage_layers = [[(stage, tuple(range(r)))] for stage in spec.stages]
        block = _apply_layers(block, stage_layers, r)
        resets.append(partial_trace(block, [0], r))
        wastes.extend(partial_trace(block, [i], r) for i in range(1, r))
    # correction with the two resets injected as product ancillas
    rho = np.kron(np.kron(rho3, resets[0]), resets[1])
    rho = _apply_layers(rho, correction, 5)
    rho = _noise_only(rho, 5, nat, 1)
    garbage = [_renorm(partial_trace(rho, [3], 5)), _renorm(partial_trace(rho, [4], 5))]
    rho = partial_trace(rho, [0, 1, 2], 5)
    wastes = [_noise_only(w, 1, nat, 1) for w in wastes]
    return rho, garbage + wastes


def _cycle_stale(rho3, ancillas, correction, nat):
    # identical cycle schedule, but the ancillas are last cycle's garbage
    rho = np.kron(np.kron(rho3, ancillas[0]), ancillas[1])
    rho = _apply_layers(rho, correction, 5)
    rho = _noise_only(rho, 5, nat, 1)
    garbage = [_renorm(partial_trace(rho, [3], 5)), _renorm(partial_trace(rho, [4], 5))]
    rho = partial_trace(rho, [0, 1, 2], 5)
    return rho, garbage
