"""Dense state-vector simulation of shallow R_Y / CNOT circuits.

Qubit 0 is the most significant bit of the basis index, so the amplitude of
``|q0 q1 ... q(n-1)>`` sits at index ``sum(q_i << (n - 1 - i))``.  States are
immutable: every operation returns a fresh :class:`StateVector`.
"""

from __future__ import annotations

import contextlib
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    CapacityError,
    DegenerateStateError,
    DestructiveCancellationError,
    InvalidGateError,
    InvalidQubitError,
    NumericError,
    ShapeError,
)

DEFAULT_MAX_QUBITS = 24
CANCELLATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True).ravel()
        dim = amps.size
        if dim == 0 or dim & (dim - 1):
            raise ShapeError(f"state length {dim} is not a power of two")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def _owned(cls, amps: np.ndarray) -> "StateVector":
        # Wraps a freshly computed buffer without copying it.
        obj = object.__new__(cls)
        amps = amps.reshape(-1)
        amps.flags.writeable = False
        object.__setattr__(obj, "amplitudes", amps)
        return obj

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        """The all-zero computational basis state |0...0>."""
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


@dataclass(frozen=True)
class GateOp:
    """One gate of a circuit.

    ``role`` is a free-form tag ("feature", "path", "entangler") used only by
    the operation counters.
    """

    kind: str
    target: int
    control: Optional[int] = None
    angle: float = 0.0
    role: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("RY", "CNOT"):
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CNOT":
            if self.control is None:
                raise InvalidGateError("CNOT requires a control qubit")
            if self.control == self.target:
                raise InvalidGateError("CNOT control and target must differ")

    @classmethod
    def ry(cls, target, angle, role=None):
        return cls("RY", int(target), None, float(angle), role)

    @classmethod
    def cnot(cls, control, target, role=None):
        return cls("CNOT", int(target), int(control), 0.0, role)

    def inverse(self) -> "GateOp":
        if self.kind == "RY":
            return GateOp("RY", self.target, None, -self.angle, self.role)
        return self


@dataclass(frozen=True)
class PauliZ:
    qubit: int


@dataclass(frozen=True, eq=False)
class Diagonal:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).ravel())


Observable = Union[PauliZ, Diagonal]


# -- instrumentation ---------------------------------------------------------


@dataclass
class OpCounter:
    """Tally of gate applications and expectation evaluations.

    ``events`` keeps the order of operations: ``("gate", kind, role)``,
    ``("expectation",)`` and ``("mark", label)`` tuples.
    """

    gates: Counter = field(default_factory=Counter)
    expectations: int = 0
    events: list = field(default_factory=list)

    def count(self, kind: str, role: Optional[str] = None) -> int:
        if role is None:
            return sum(v for (k, _), v in self.gates.items() if k == kind)
        return self.gates[(kind, role)]


_counters: list = []
_suspended = 0


@contextlib.contextmanager
def count_operations():
    """Record every gate and expectation executed inside the block."""
    counter = OpCounter()
    _counters.append(counter)
    try:
        yield counter
    finally:
        _counters.remove(counter)


@contextlib.contextmanager
def _suspend_counting():
    global _suspended
    _suspended += 1
    try:
        yield
    finally:
        _suspended -= 1


def _record_gate(kind, role):
    if _suspended:
        return
    for c in _counters:
        c.gates[(kind, role)] += 1
        c.events.append(("gate", kind, role))


def _record_expectation():
    if _suspended:
        return
    for c in _counters:
        c.expectations += 1
        c.events.append(("expectation",))


def mark(label: str) -> None:
    """Drop a named marker into the event log of every active counter."""
    for c in _counters:
        c.events.append(("mark", label))


# -- gates -------------------------------------------------------------------


def _check_qubit(state: StateVector, qubit: int) -> int:
    q = int(qubit)
    if not 0 <= q < state.n_qubits:
        raise InvalidQubitError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")
    return q


def _ry_kernel(amps: np.ndarray, n: int, q: int, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    view = amps.reshape(1 << q, 2, 1 << (n - q - 1))
    out = np.empty_like(view)
    a0, a1 = view[:, 0, :], view[:, 1, :]
    np.multiply(a0, c, out=out[:, 0, :])
    out[:, 0, :] -= s * a1
    np.multiply(a0, s, out=out[:, 1, :])
    out[:, 1, :] += c * a1
    return out.reshape(-1)


def _cnot_kernel(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    out = amps.reshape((2,) * n).copy()
    sel = [slice(None)] * n
    sel[control] = 1
    sub = out[tuple(sel)]
    axis = target if target < control else target - 1
    sub[...] = np.flip(sub, axis=axis).copy()
    return out.reshape(-1)


def apply_ry(state: StateVector, qubit: int, angle: float, role: Optional[str] = None) -> StateVector:
    """Apply R_Y(angle) = [[cos a/2, -sin a/2], [sin a/2, cos a/2]] on ``qubit``."""
    q = _check_qubit(state, qubit)
    out = _ry_kernel(state.amplitudes, state.n_qubits, q, float(angle))
    _record_gate("RY", role)
    return StateVector._owned(out)


def apply_cnot(state: StateVector, control: int, target: int, role: Optional[str] = None) -> StateVector:
    if int(control) == int(target):
        raise InvalidGateError("CNOT control and target must differ")
    c = _check_qubit(state, control)
    t = _check_qubit(state, target)
    out = _cnot_kernel(state.amplitudes, state.n_qubits, c, t)
    _record_gate("CNOT", role)
    return StateVector._owned(out)


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    if op.kind == "RY":
        return apply_ry(state, op.target, op.angle, role=op.role)
    return apply_cnot(state, op.control, op.target, role=op.role)


def apply_circuit(state: StateVector, ops: Iterable[GateOp]) -> StateVector:
    for op in ops:
        state = apply_gate(state, op)
    return state


def tensor(a: StateVector, b: StateVector, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """Kronecker product; ``a`` occupies the leading (most significant) qubits."""
    n = a.n_qubits + b.n_qubits
    if n > max_qubits:
        raise CapacityError(f"{n} qubits exceeds capacity of {max_qubits}")
    return StateVector._owned(np.kron(a.amplitudes, b.amplitudes))


def normalize(state: StateVector) -> StateVector:
    norm = state.norm()
    if not np.isfinite(norm) or norm == 0.0:
        raise DegenerateStateError("cannot normalize a zero or non-finite state")
    return StateVector._owned(state.amplitudes / norm)


def expectation(state: StateVector, obs: Observable) -> float:
    """Exact <psi|O|psi> for a diagonal observable."""
    probs = np.abs(state.amplitudes) ** 2
    if isinstance(obs, PauliZ):
        q = _check_qubit(state, obs.qubit)
        n = state.n_qubits
        p = probs.reshape(1 << q, 2, 1 << (n - q - 1)).sum(axis=(0, 2))
        value = float(p[0] - p[1])
    elif isinstance(obs, Diagonal):
        if obs.values.size != state.dim:
            raise ShapeError(f"observable length {obs.values.size} != state dimension {state.dim}")
        value = float(probs @ obs.values)
    else:
        raise TypeError(f"unsupported observable {obs!r}")
    _record_expectation()
    return value


def z_expectations(state: StateVector) -> np.ndarray:
    """<Z_m> for every qubit m, one expectation evaluation per qubit."""
    return np.array([expectation(state, PauliZ(m)) for m in range(state.n_qubits)])


def apply_weighted_sum(
    state: StateVector,
    terms: Sequence[tuple],
    return_norm: bool = False,
):
    """Apply ``sum_i w_i U_i`` to ``state`` and renormalize.

    ``terms`` is a sequence of ``(weight, circuit)`` pairs.  A sum of unitaries
    is not unitary, so the result is rescaled to unit norm; the norm before
    rescaling is returned as well when ``return_norm`` is set.

    The branches are alternatives over the same circuit slots, so the
    operation counters see each slot once (the per-(kind, role) maximum over
    branches), not once per branch.
    """
    if not terms:
        raise ValueError("weighted sum needs at least one term")
    acc = np.zeros(state.dim, dtype=np.complex128)
    slots: Counter = Counter()
    for weight, circuit in terms:
        w = complex(weight)
        if not np.isfinite(w):
            raise NumericError(f"non-finite weight {weight!r}")
        circuit = list(circuit)
        with _suspend_counting():
            out = apply_circuit(state, circuit)
        acc += w * out.amplitudes
        del out
        branch = Counter((op.kind, op.role) for op in circuit)
        for key, v in branch.items():
            slots[key] = max(slots[key], v)
    for (kind, role), v in sorted(slots.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        for _ in range(v):
            _record_gate(kind, role)
    norm = float(np.linalg.norm(acc))
    if not np.isfinite(norm):
        raise NumericError("weighted sum produced a non-finite state")
    if norm < CANCELLATION_TOL:
        raise DestructiveCancellationError(f"weighted sum cancelled to norm {norm:.3e}")
    acc /= norm
    result = StateVector._owned(acc)
    return (result, norm) if return_norm else result


def dump_state(state: StateVector, path) -> None:
    """Write ``index real imag`` rows, one per amplitude."""
    amps = state.amplitudes
    rows = np.column_stack([np.arange(amps.size), amps.real, amps.imag])
    np.savetxt(path, rows, fmt=["%d", "%.17g", "%.17g"])


def load_state(path) -> StateVector:
    rows = np.loadtxt(path, ndmin=2)
    order = np.argsort(rows[:, 0])
    return StateVector(rows[order, 1] + 1j * rows[order, 2])
