"""Exact density-matrix simulation of small registers.

Circuits follow a strict alternation: a layer of perfect gates, then one
application of a single-qubit noise channel to every non-reference qubit.
Reference qubits are exempt from noise; they model a perfect bystander system
used to witness entanglement.

Registers are capped at 12 qubits (dense 4096x4096 complex matrices).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channels import SuperOp

MAX_QUBITS = 12
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-9
EIG_CLAMP = 1e-12

DATA = "data"
ANCILLA = "ancilla"
REFERENCE = "reference"

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
_TOFFOLI = np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]]

NAMED_GATES = {
    "H": _H,
    "X": _X,
    "Z": _Z,
    "CNOT": _CNOT,
    "SWAP": _SWAP,
    "TOFFOLI": _TOFFOLI,
}


class SimulationError(ValueError):
    """Invalid register, layer, or state encountered during simulation."""


@dataclass(frozen=True)
class GateLayer:
    """Parallel unitaries on pairwise-disjoint targets."""

    gates: tuple

    def __init__(self, gates: Sequence, max_arity: int | None = None):
        parsed = []
        seen = set()
        for u, targets in gates:
            u = np.asarray(u, dtype=complex)
            targets = tuple(int(q) for q in targets)
            dim = 2 ** len(targets)
            if u.shape != (dim, dim):
                raise SimulationError(
                    f"gate on {len(targets)} qubits must be {dim}x{dim}, got {u.shape}"
                )
            if not np.allclose(u @ u.conj().T, np.eye(dim), atol=TRACE_ATOL):
                raise SimulationError("gate matrix is not unitary")
            if max_arity is not None and len(targets) > max_arity:
                raise SimulationError(f"gate arity {len(targets)} exceeds {max_arity}")
            if seen & set(targets):
                raise SimulationError("overlapping gate targets in one layer")
            seen |= set(targets)
            parsed.append((u, targets))
        object.__setattr__(self, "gates", tuple(parsed))


@dataclass(frozen=True)
class NoiseLayer:
    """The same single-qubit channel applied to every non-reference qubit."""

    channel: SuperOp

    def natural(self) -> np.ndarray:
        return self.channel.natural()


@dataclass(frozen=True)
class QRegister:
    """n-qubit density matrix with per-qubit roles."""

    rho: np.ndarray
    roles: tuple

    def __init__(self, rho: np.ndarray, roles: Sequence[str]):
        rho = np.asarray(rho, dtype=complex)
        n = len(roles)
        if n > MAX_QUBITS:
            raise SimulationError(f"register of {n} qubits exceeds cap {MAX_QUBITS}")
        if rho.shape != (2**n, 2**n):
            raise SimulationError("density matrix dimension does not match roles")
        if abs(np.trace(rho).real - 1) > TRACE_ATOL or abs(np.trace(rho).imag) > TRACE_ATOL:
            raise SimulationError(f"trace {np.trace(rho)} != 1")
        if not np.allclose(rho, rho.conj().T, atol=TRACE_ATOL):
            raise SimulationError("density matrix is not Hermitian")
        min_eig = float(np.linalg.eigvalsh(rho)[0])
        if min_eig < -PSD_ATOL:
            raise SimulationError(f"density matrix has eigenvalue {min_eig} < -{PSD_ATOL}")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "roles", tuple(roles))

    @property
    def n_qubits(self) -> int:
        return len(self.roles)

    @property
    def system_qubits(self) -> tuple:
        return tuple(i for i, r in enumerate(self.roles) if r != REFERENCE)

    @classmethod
    def from_kets(cls, kets: Sequence[np.ndarray], roles: Sequence[str] | None = None):
        state = np.array([1.0], dtype=complex)
        for ket in kets:
            ket = np.asarray(ket, dtype=complex)
            state = np.kron(state, ket / np.linalg.norm(ket))
        rho = np.outer(state, state.conj())
        return cls(rho, roles or [DATA] * len(kets))

    @classmethod
    def from_product(cls, states: Sequence[np.ndarray], roles: Sequence[str] | None = None):
        """Product of single-qubit density matrices."""
        rho = np.array([[1.0]], dtype=complex)
        for s in states:
            rho = np.kron(rho, np.asarray(s, dtype=complex))
        return cls(rho, roles or [DATA] * len(states))


def epr_register(extra_system: int = 0) -> QRegister:
    """Reference qubit 0 maximally entangled with system qubit 1, plus
    optional extra system qubits in |0>."""
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    rho = np.outer(phi, phi.conj())
    roles = [REFERENCE, DATA]
    for _ in range(extra_system):
        zero = np.zeros((2, 2), dtype=complex)
        zero[0, 0] = 1.0
        rho = np.kron(rho, zero)
        roles.append(DATA)
    return QRegister(rho, roles)


# ---------------------------------------------------------------------------
# low-level matrix updates (also used by the channel-distance estimator)
# ---------------------------------------------------------------------------


def apply_unitary(rho: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """rho -> U rho U^dag with U acting on the given qubits."""
    k = len(targets)
    tensor = rho.reshape((2,) * (2 * n))
    u_t = u.reshape((2,) * (2 * k))
    # ket side
    tensor = np.tensordot(u_t, tensor, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot moved the gate's output axes to the front; restore axis order
    dest = list(targets)
    src = list(range(k))
    remaining = [ax for ax in range(2 * n) if ax not in dest]
    perm = [0] * (2 * n)
    for s, d in zip(src, dest):
        perm[d] = s
    for s, d in zip(range(k, 2 * n), remaining):
        perm[d] = s
    tensor = tensor.transpose(perm)
    # bra side
    bra_targets = [n + q for q in targets]
    tensor = np.tensordot(np.conj(u_t), tensor, axes=(list(range(k, 2 * k)), bra_targets))
    dest = bra_targets
    perm = [0] * (2 * n)
    for s, d in zip(range(k), dest):
        perm[d] = s
    remaining = [ax for ax in range(2 * n) if ax not in dest]
    for s, d in zip(range(k, 2 * n), remaining):
        perm[d] = s
    tensor = tensor.transpose(perm)
    return tensor.reshape(2**n, 2**n)


def apply_single_qubit_superop(rho: np.ndarray, nat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a channel (natural 4x4 rep, row-major vec) to one qubit."""
    tensor = rho.reshape((2,) * (2 * n))
    tensor = np.moveaxis(tensor, (qubit, n + qubit), (0, 1))
    shape = tensor.shape
    flat = tensor.reshape(4, -1)
    flat = nat @ flat
    tensor = flat.reshape(shape)
    tensor = np.moveaxis(tensor, (0, 1), (qubit, n + qubit))
    return tensor.reshape(2**n, 2**n)


def partial_trace(rho: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced density matrix on `keep`, in the listed qubit order."""
    keep = list(keep)
    tensor = rho.reshape((2,) * (2 * n))
    traced = [q for q in range(n) if q not in keep]
    for q in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=q, axis2=q + tensor.ndim // 2)
    # axes now correspond to sorted(keep); reorder to the requested order
    current = sorted(keep)
    m = len(keep)
    perm = [current.index(q) for q in keep]
    tensor = tensor.transpose(perm + [m + p for p in perm])
    return tensor.reshape(2**m, 2**m)


# ---------------------------------------------------------------------------
# register operations
# ---------------------------------------------------------------------------


def step(reg: QRegister, layer: GateLayer, noise: NoiseLayer | None) -> QRegister:
    """One time step: perfect gates, then noise on every non-reference qubit."""
    n = reg.n_qubits
    rho = reg.rho
    for u, targets in layer.gates:
        if any(q >= n for q in targets):
            raise SimulationError("gate target outside register")
        rho = apply_unitary(rho, u, targets, n)
    if noise is not None:
        nat = noise.natural()
        for q in reg.system_qubits:
            rho = apply_single_qubit_superop(rho, nat, q, n)
    return QRegister(rho, reg.roles)


def _entropy_of_eigs(eigs: np.ndarray) -> float:
    eigs = np.clip(eigs.real, 0.0, None)
    eigs = eigs[eigs > EIG_CLAMP]
    return float(-np.sum(eigs * np.log2(eigs)))


def von_neumann_entropy(reg: QRegister, subset: Sequence[int] | None = None) -> float:
    """Entropy in bits of the reduced state on `subset` (default: everything)."""
    if subset is None:
        sub = reg.rho
    else:
        if len(subset) == 0:
            raise SimulationError("entropy of an empty subset")
        sub = partial_trace(reg.rho, subset, reg.n_qubits)
    eigs = np.linalg.eigvalsh(sub)
    if eigs[0] < -PSD_ATOL:
        raise SimulationError(f"reduced state has eigenvalue {eigs[0]}")
    return _entropy_of_eigs(eigs)


def conditional_entropy(reg: QRegister, a: Sequence[int], b: Sequence[int]) -> float:
    """S(A|B) = S(AB) - S(B) in bits."""
    if set(a) & set(b):
        raise SimulationError("conditional entropy subsets overlap")
    return von_neumann_entropy(reg, list(a) + list(b)) - von_neumann_entropy(reg, b)


def information(reg: QRegister) -> float:
    """n - S(rho) over the non-reference qubits."""
    sys = reg.system_qubits
    return len(sys) - von_neumann_entropy(reg, sys)


def dephase_all(reg: QRegister) -> QRegister:
    """Zero every element whose bra/ket indices differ on a non-reference qubit."""
    n = reg.n_qubits
    mask_bits = 0
    for q in reg.system_qubits:
        mask_bits |= 1 << (n - 1 - q)
    idx = np.arange(2**n)
    keep = ((idx[:, None] ^ idx[None, :]) & mask_bits) == 0
    return QRegister(np.where(keep, reg.rho, 0.0), reg.roles)


def distance(a: np.ndarray, b: np.ndarray, norm: str = "two") -> float:
    """Schatten 1-norm or Frobenius (2-)norm of a - b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise SimulationError("distance between different dimensions")
    diff = a - b
    if norm == "one":
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))
    if norm == "two":
        return float(np.linalg.norm(diff))
    raise SimulationError(f"unknown norm {norm!r}")


def relative_entropy(a: np.ndarray, b: np.ndarray) -> float:
    """S(a||b) in bits; +inf when supp(a) escapes supp(b)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    mu, va = np.linalg.eigh(a)
    nu, vb = np.linalg.eigh(b)
    mu = np.clip(mu, 0.0, None)
    nu = np.clip(nu, 0.0, None)
    kernel = vb[:, nu <= EIG_CLAMP]
    if kernel.size and np.trace(kernel.conj().T @ a @ kernel).real > 1e-10:
        return float("inf")
    term_a = float(np.sum(mu[mu > EIG_CLAMP] * np.log2(mu[mu > EIG_CLAMP])))
    overlap = np.abs(vb.conj().T @ va) ** 2  # overlap[j, i] = |<w_j|v_i>|^2
    log_nu = np.where(nu > EIG_CLAMP, np.log2(np.where(nu > EIG_CLAMP, nu, 1.0)), 0.0)
    term_b = float(np.einsum("j,ji,i->", log_nu, overlap, mu).real)
    return max(term_a - term_b, 0.0)


def epr_fidelity(
    reg: QRegister,
    decoder: Iterable[GateLayer],
    system_qubit: int,
    reference_qubit: int,
) -> float:
    """Apply decoder layers (noiselessly), reduce to (system, reference), and
    return the overlap with the |Phi+> Bell state."""
    if reg.roles[reference_qubit] != REFERENCE:
        raise SimulationError("reference_qubit is not flagged as reference")
    n = reg.n_qubits
    rho = reg.rho
    for layer in decoder:
        for u, targets in layer.gates:
            rho = apply_unitary(rho, u, targets, n)
    pair = partial_trace(rho, [system_qubit, reference_qubit], n)
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    return float((phi.conj() @ pair @ phi).real)


# ---------------------------------------------------------------------------
# circuit file format
# ---------------------------------------------------------------------------


def layer_from_dict(doc: dict, max_arity: int | None = None) -> GateLayer:
    gates = []
    for g in doc.get("gates", []):
        u = g["u"]
        if isinstance(u, str):
            try:
                u = NAMED_GATES[u]
            except KeyError:
                raise SimulationError(f"unknown named gate {u!r}") from None
        else:
            u = np.array(
                [[complex(e[0], e[1]) for e in row] for row in u]
            )
        gates.append((u, g["targets"]))
    return GateLayer(gates, max_arity=max_arity)


def load_circuit(path, max_arity: int | None = None) -> list:
    with open(path) as fh:
        layers = json.load(fh)
    return [layer_from_dict(doc, max_arity=max_arity) for doc in layers]
