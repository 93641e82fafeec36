"""Single-qubit channel algebra.

A channel is held in one of three interchangeable forms:

* :class:`KrausSet` -- a list of 2x2 complex Kraus operators,
* :class:`SuperOp` -- the 4x4 real Pauli transfer matrix (PTM) acting on
  (I, X, Y, Z) coefficient vectors,
* :class:`CanonicalForm` -- the rotation-sandwiched normal form
  ``C = U . C' . V`` where ``C'`` shifts the Bloch vector by ``t`` and
  rescales the axes by ``lam = (lx, ly, lz)``.

All objects are immutable values; every operation returns a new object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, PAULI_X, PAULI_Y, PAULI_Z)


class ChannelError(ValueError):
    """Invalid channel data or an operation outside its domain."""


class NonContractiveAxisError(ChannelError):
    """A fixed point was requested along an axis the channel does not contract."""


class EstimationError(RuntimeError):
    """A numerical estimator failed to stabilize within its iteration budget."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KrausSet:
    """Trace-preserving set of 2x2 Kraus operators."""

    ops: tuple

    def __init__(self, ops: Sequence[np.ndarray]):
        mats = tuple(np.asarray(op, dtype=complex) for op in ops)
        if not mats or any(m.shape != (2, 2) for m in mats):
            raise ChannelError("Kraus operators must be 2x2 matrices")
        total = sum(m.conj().T @ m for m in mats)
        if not np.allclose(total, I2, atol=ATOL):
            raise ChannelError("Kraus set is not trace preserving")
        object.__setattr__(self, "ops", mats)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.ops)


@dataclass(frozen=True)
class SuperOp:
    """Qubit channel as a 4x4 real Pauli transfer matrix."""

    ptm: np.ndarray

    def __init__(self, ptm: np.ndarray):
        ptm = np.array(ptm, dtype=float)
        if ptm.shape != (4, 4):
            raise ChannelError("PTM must be 4x4")
        if not np.allclose(ptm[0], [1.0, 0.0, 0.0, 0.0], atol=ATOL):
            raise ChannelError("PTM first row must be (1, 0, 0, 0): not trace preserving")
        ptm.setflags(write=False)
        object.__setattr__(self, "ptm", ptm)

    @property
    def shift(self) -> np.ndarray:
        """Bloch translation t."""
        return self.ptm[1:, 0]

    @property
    def linear(self) -> np.ndarray:
        """3x3 Bloch linear block."""
        return self.ptm[1:, 1:]

    def apply_bloch(self, w: np.ndarray) -> np.ndarray:
        return self.shift + self.linear @ np.asarray(w, dtype=float)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Apply the channel to a 2x2 matrix (by linearity, any matrix)."""
        rho = np.asarray(rho, dtype=complex)
        coeffs = np.array([np.trace(p @ rho) for p in PAULIS])
        out = self.ptm.astype(complex) @ coeffs
        return 0.5 * sum(c * p for c, p in zip(out, PAULIS))

    def compose(self, other: "SuperOp") -> "SuperOp":
        """self after other: (self . other)(rho) = self(other(rho))."""
        return SuperOp(self.ptm @ other.ptm)

    def natural(self) -> np.ndarray:
        """4x4 superoperator on row-major-flattened 2x2 matrices."""
        cols = []
        for j in range(2):
            for jp in range(2):
                basis = np.zeros((2, 2), dtype=complex)
                basis[j, jp] = 1.0
                cols.append(self.apply(basis).reshape(4))
        return np.stack(cols, axis=1)


@dataclass(frozen=True)
class CanonicalForm:
    """Rotation-sandwiched normal form of a qubit channel.

    ``t`` and ``lam`` live in the canonical frame; the channel acts as
    ``w -> post_rot @ (t + lam * (pre_rot @ w))``.  ``lam`` entries may be
    negative: improper rotation factors from the SVD are repaired by folding
    an axis sign into ``lam`` so that both rotations stay proper.
    """

    t: np.ndarray
    lam: np.ndarray
    pre_rot: np.ndarray
    post_rot: np.ndarray

    def __post_init__(self):
        for name in ("t", "lam", "pre_rot", "post_rot"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_superop(self) -> SuperOp:
        ptm = np.zeros((4, 4))
        ptm[0, 0] = 1.0
        ptm[1:, 0] = self.post_rot @ self.t
        ptm[1:, 1:] = self.post_rot @ np.diag(self.lam) @ self.pre_rot
        return SuperOp(ptm)


@dataclass(frozen=True)
class BlochVector:
    """Point inside the closed Bloch ball."""

    w: np.ndarray

    def __init__(self, w: Sequence[float]):
        w = np.array(w, dtype=float)
        if w.shape != (3,):
            raise ChannelError("Bloch vector must have 3 components")
        if np.linalg.norm(w) > 1 + 1e-12:
            raise ChannelError(f"Bloch vector has norm {np.linalg.norm(w)} > 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def density(self) -> np.ndarray:
        return 0.5 * (I2 + self.w[0] * PAULI_X + self.w[1] * PAULI_Y + self.w[2] * PAULI_Z)


@dataclass(frozen=True)
class PauliChannelParams:
    """Probabilities of X, Y and Z errors for a unital channel."""

    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self):
        for p in (self.p_x, self.p_y, self.p_z):
            if p < -1e-12:
                raise ChannelError(f"negative Pauli probability {p}")
        if self.p_x + self.p_y + self.p_z > 1 + 1e-12:
            raise ChannelError("Pauli probabilities sum past 1")


class ChannelDistance(NamedTuple):
    """Sandwich estimate of the diamond distance between two channels."""

    lower: float
    upper: float


# ---------------------------------------------------------------------------
# Bloch helpers
# ---------------------------------------------------------------------------


def bloch_to_density(w: Sequence[float]) -> np.ndarray:
    return BlochVector(w).density()


def density_to_bloch(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(p @ rho).real for p in PAULIS[1:]])


# ---------------------------------------------------------------------------
# named channels
# ---------------------------------------------------------------------------


def identity_channel() -> KrausSet:
    return KrausSet([I2])


def dephasing_kraus(p: float) -> KrausSet:
    """rho -> (1-p) rho + p Z rho Z."""
    return KrausSet([np.sqrt(1 - p) * I2, np.sqrt(p) * PAULI_Z])


def depolarizing_kraus(p: float) -> KrausSet:
    """rho -> (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)."""
    return KrausSet(
        [np.sqrt(1 - p) * I2]
        + [np.sqrt(p / 3) * s for s in (PAULI_X, PAULI_Y, PAULI_Z)]
    )


def amplitude_damping_kraus(p: float) -> KrausSet:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)
    return KrausSet([k0, k1])


def thermal_kraus(gamma: float, excited: float) -> KrausSet:
    """Generalized damping toward diag(1 - excited, excited).

    ``gamma`` is the per-step relaxation strength; ``excited`` is the excited
    population of the fixed point (0 recovers plain amplitude damping).
    """
    s = excited
    k0 = np.sqrt(1 - s) * np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.sqrt(1 - s) * np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    k2 = np.sqrt(s) * np.array([[np.sqrt(1 - gamma), 0], [0, 1]], dtype=complex)
    k3 = np.sqrt(s) * np.array([[0, 0], [np.sqrt(gamma), 0]], dtype=complex)
    return KrausSet([k0, k1, k2, k3])


def pauli_channel_kraus(p_x: float, p_y: float, p_z: float) -> KrausSet:
    p0 = 1 - p_x - p_y - p_z
    probs = (p0, p_x, p_y, p_z)
    if any(p < -1e-12 for p in probs):
        raise ChannelError("Pauli probabilities out of range")
    return KrausSet([np.sqrt(max(p, 0.0)) * s for p, s in zip(probs, PAULIS)])


def unitary_kraus(u: np.ndarray) -> KrausSet:
    return KrausSet([np.asarray(u, dtype=complex)])


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------


def kraus_to_superop(k: KrausSet) -> SuperOp:
    """PTM entry (i, j) = (1/2) tr[sigma_i sum_A A sigma_j A^dag]."""
    ptm = np.zeros((4, 4))
    for j, sj in enumerate(PAULIS):
        out = sum(a @ sj @ a.conj().T for a in k.ops)
        for i, si in enumerate(PAULIS):
            ptm[i, j] = 0.5 * np.trace(si @ out).real
    return SuperOp(ptm)


def canonical_form(c: SuperOp) -> CanonicalForm:
    """Factor the Bloch block by a real SVD into proper rotations.

    Improper factors get one axis sign folded into ``lam``, so the returned
    ``pre_rot``/``post_rot`` are always rotations while ``lam`` may carry
    negative entries.
    """
    u, sv, vt = np.linalg.svd(c.linear)
    lam = sv.copy()
    if np.linalg.det(u) < 0:
        u = u.copy()
        u[:, 2] *= -1
        lam[2] *= -1
    if np.linalg.det(vt) < 0:
        vt = vt.copy()
        vt[2, :] *= -1
        lam[2] *= -1
    t_canonical = u.T @ c.shift
    return CanonicalForm(t=t_canonical, lam=lam, pre_rot=vt, post_rot=u)


def is_unital(c: SuperOp, tol: float = ATOL) -> bool:
    """True iff the Bloch shift vanishes, i.e. C(I) = I."""
    return bool(np.linalg.norm(c.shift) <= tol)


def pauli_probs(f: CanonicalForm, tol: float = ATOL) -> PauliChannelParams:
    """Error probabilities of the Pauli channel matching a unital form."""
    if np.linalg.norm(f.t) > tol:
        raise ChannelError("pauli_probs requires a unital channel")
    lx, ly, lz = f.lam
    return PauliChannelParams(
        p_x=(1 + lx - ly - lz) / 4,
        p_y=(1 - lx + ly - lz) / 4,
        p_z=(1 - lx - ly + lz) / 4,
    )


def cp_check(f: CanonicalForm, tol: float = ATOL) -> bool:
    """Complete-positivity verdict for a canonical form.

    Unital case: the four mixture weights (1 +- lx +- ly +- lz)/4 with an even
    number of minus signs must all be nonnegative, which is equivalent to the
    |l_i +- l_j| <= |1 +- l_k| inequality family.  Non-unital forms fall back
    to the Choi eigenvalue oracle.
    """
    if np.linalg.norm(f.t) > tol:
        return choi_positive(f.to_superop(), tol=tol)
    lx, ly, lz = f.lam
    weights = (
        1 + lx + ly + lz,
        1 + lx - ly - lz,
        1 - lx + ly - lz,
        1 - lx - ly + lz,
    )
    return all(w / 4 >= -tol for w in weights)


def choi_matrix(c: SuperOp) -> np.ndarray:
    """Normalized Choi state (C x id)(|Phi+><Phi+|), trace 1."""
    j = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            basis = np.zeros((2, 2), dtype=complex)
            basis[a, b] = 1.0
            j += 0.5 * np.kron(c.apply(basis), basis)
    return j


def choi_positive(c: SuperOp, tol: float = ATOL) -> bool:
    """True iff the Choi matrix has minimum eigenvalue >= -tol."""
    eigs = np.linalg.eigvalsh(choi_matrix(c))
    return bool(eigs[0] >= -tol)


def fixed_point(f: CanonicalForm, tol: float = 1e-8) -> BlochVector:
    """Unique fixed point, solving (I - M) w = t in the world frame.

    For an axis-aligned channel this reduces to the per-axis closed form
    t_i / (1 - lam_i).  Unital channels return the center.  An uncontracted
    direction carrying a shift component has no fixed point and raises.
    """
    shift = f.post_rot @ f.t
    if np.linalg.norm(shift) <= ATOL:
        return BlochVector(np.zeros(3))
    a = np.eye(3) - f.post_rot @ np.diag(f.lam) @ f.pre_rot
    u, s, vt = np.linalg.svd(a)
    small = s < tol
    if small.any():
        coeffs = u.T @ shift
        if np.linalg.norm(coeffs[small]) > ATOL:
            raise NonContractiveAxisError(
                "shift component along a non-contractive direction: no fixed point"
            )
        w = vt.T @ np.where(small, 0.0, coeffs / np.where(small, 1.0, s))
    else:
        w = np.linalg.solve(a, shift)
    return BlochVector(w)


def power(c: SuperOp, k: int) -> SuperOp:
    """k-fold composition; power(c, 0) is the identity channel."""
    if k < 0:
        raise ChannelError("power requires k >= 0")
    return SuperOp(np.linalg.matrix_power(c.ptm, k))


def replacement_channel(p: BlochVector) -> SuperOp:
    """Channel that discards its input and outputs the state at p."""
    ptm = np.zeros((4, 4))
    ptm[0, 0] = 1.0
    ptm[1:, 0] = p.w
    return SuperOp(ptm)


# ---------------------------------------------------------------------------
# diamond distance sandwich
# ---------------------------------------------------------------------------


def _apply_system_superop(nat: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply a single-qubit superop (natural rep) to the first qubit of a
    two-qubit matrix."""
    t = rho.reshape(2, 2, 2, 2)  # ket0, ket1, bra0, bra1
    t = t.transpose(0, 2, 1, 3).reshape(4, 4)  # (ket0 bra0), (ket1 bra1)
    t = nat @ t
    t = t.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    return t


def _trace_norm(m: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def channel_distance(
    a: SuperOp,
    b: SuperOp,
    restarts: int = 64,
    max_iter: int = 500,
    tol: float = 1e-12,
    seed: int = 0,
) -> ChannelDistance:
    """Sandwich estimate of the diamond distance between two channels.

    The lower endpoint is the trace norm of the normalized Choi difference
    (the value of the defining maximization at the maximally entangled
    input).  The upper endpoint refines that maximization over pure inputs on
    system plus one ancilla qubit by alternating ascent with random restarts:
    for a fixed input the optimal observable is the sign of the output
    difference, and for a fixed observable the optimal input is the top
    eigenvector of the pulled-back observable.  Both steps are monotone, so
    every restart converges; the best stabilized value is reported.
    """
    delta_nat = a.natural() - b.natural()
    delta_adj = delta_nat.conj().T
    lower = _trace_norm(choi_matrix(a) - choi_matrix(b))

    rng = np.random.default_rng(seed)
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    starts = [phi]
    for _ in range(restarts):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        starts.append(v / np.linalg.norm(v))

    best = 0.0
    any_converged = False
    for psi in starts:
        val = 0.0
        for _ in range(max_iter):
            out = _apply_system_superop(delta_nat, np.outer(psi, psi.conj()))
            out = 0.5 * (out + out.conj().T)
            eigvals, eigvecs = np.linalg.eigh(out)
            new_val = float(np.sum(np.abs(eigvals)))
            witness = (eigvecs * np.sign(eigvals)) @ eigvecs.conj().T
            pulled = _apply_system_superop(delta_adj, witness)
            pulled = 0.5 * (pulled + pulled.conj().T)
            pvals, pvecs = np.linalg.eigh(pulled)
            psi = pvecs[:, -1]
            if abs(new_val - val) < tol:
                any_converged = True
                val = new_val
                break
            val = new_val
        best = max(best, val)
    if not any_converged:
        raise EstimationError("diamond distance refinement did not stabilize")
    return ChannelDistance(lower=lower, upper=max(best, lower))


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def _complex_matrix_from_json(rows) -> np.ndarray:
    return np.array(
        [[complex(entry[0], entry[1]) for entry in row] for row in rows]
    )


def channel_from_dict(doc: dict) -> SuperOp:
    """Parse {"kraus": [...]} (complex entries as [re, im]) or {"ptm": 4x4}."""
    if "kraus" in doc:
        ops = [_complex_matrix_from_json(m) for m in doc["kraus"]]
        return kraus_to_superop(KrausSet(ops))
    if "ptm" in doc:
        return SuperOp(np.array(doc["ptm"], dtype=float))
    raise ChannelError("channel document needs a 'kraus' or 'ptm' key")


def load_channel(path) -> SuperOp:
    with open(path) as fh:
        return channel_from_dict(json.load(fh))


def kraus_to_dict(k: KrausSet) -> dict:
    return {
        "kraus": [
            [[[z.real, z.imag] for z in row] for row in op] for op in k.ops
        ]
    }
