"""
Exact state vectors for 1-3 qubit pure states

Qubit 0 is the leftmost (most significant) tensor factor and belongs to
Alice, qubit 1 to Bob, qubit 2 (when present) to Eve's ancilla. Every
operation returns a new register; nothing here owns a random source.
"""
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import (
    DimensionMismatchError,
    DuplicateQubitError,
    RegisterError,
    RegisterIndexError,
)

# Algebraic identities
ATOL = 1e-12
# State-equality assertions
STATE_ATOL = 1e-10

MAX_QUBITS = 3
SQRT1_2 = 1.0 / np.sqrt(2.0)


class Basis(str, Enum):
    """Single-qubit measurement basis; outcome 0 is the first listed vector"""
    Z = "Z"
    X = "X"
    Y = "Y"

    @property
    def vectors(self) -> Tuple[np.ndarray, np.ndarray]:
        return _BASIS_VECTORS[self]


_BASIS_VECTORS = {
    Basis.Z: (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    Basis.X: (np.array([1, 1], dtype=complex) * SQRT1_2, np.array([1, -1], dtype=complex) * SQRT1_2),
    Basis.Y: (np.array([1, 1j], dtype=complex) * SQRT1_2, np.array([1, -1j], dtype=complex) * SQRT1_2),
}

# Rows are the conjugated basis vectors: rotates the basis onto |0>, |1>
_BASIS_BRAS = {basis: np.conj(np.vstack(vectors)) for basis, vectors in _BASIS_VECTORS.items()}


class BellLabel(str, Enum):
    """The four Bell states; value order follows the 2-bit code 00, 01, 10, 11"""
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"

    @property
    def letter_bit(self) -> int:
        """0 for Phi, 1 for Psi (the Z-basis parity)"""
        return 1 if self.value.startswith("Psi") else 0

    @property
    def sign_bit(self) -> int:
        """0 for +, 1 for - (the X-basis parity)"""
        return 1 if self.value.endswith("-") else 0

    @property
    def symbol(self) -> str:
        return ("Ψ" if self.letter_bit else "Φ") + self.value[-1]

    @property
    def code(self) -> str:
        """Two-bit code: letter bit then sign bit"""
        return f"{self.letter_bit}{self.sign_bit}"

    @classmethod
    def from_code(cls, code: str) -> "BellLabel":
        """Inverse of `code`; ValueError for anything but 00, 01, 10, 11"""
        for label in cls:
            if label.code == code:
                return label
        raise ValueError(f"invalid Bell code {code!r}")


class GhzLabel(str, Enum):
    """The eight GHZ states (|abc> +/- |a'b'c'>)/sqrt(2)"""
    P_PLUS = "P+"
    P_MINUS = "P-"
    Q_PLUS = "Q+"
    Q_MINUS = "Q-"
    R_PLUS = "R+"
    R_MINUS = "R-"
    S_PLUS = "S+"
    S_MINUS = "S-"

    @property
    def letter(self) -> str:
        return self.value[0]

    @property
    def sign_bit(self) -> int:
        return 1 if self.value.endswith("-") else 0


# First basis index of each GHZ pair; the partner is its bitwise complement
_GHZ_SUPPORT = {"P": 0b000, "Q": 0b001, "R": 0b010, "S": 0b011}


@dataclass(frozen=True, eq=False)
class QubitRegister:
    """Normalized amplitude vector of 1-3 qubits, computational-basis ordered"""
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size not in (2, 4, 8):
            raise RegisterError(f"register must hold 1-{MAX_QUBITS} qubits, got {amps.size} amplitudes")
        if not np.all(np.isfinite(amps)):
            raise RegisterError("register amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ATOL:
            raise RegisterError(f"register is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        """1, 2 or 3"""
        return int(self.amplitudes.size).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def __repr__(self) -> str:
        return f"QubitRegister({render(self)})"


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """2x2 unitary acting on a single tensor factor"""
    matrix: np.ndarray
    name: str = "U"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise DimensionMismatchError(f"local unitary must be 2x2, got {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(2), rtol=0.0, atol=ATOL):
            raise RegisterError(f"{self.name} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


SIGMA_0 = LocalUnitary(np.eye(2), name="sigma0")
SIGMA_1 = LocalUnitary(np.diag([1.0, -1.0]), name="sigma1")


@dataclass(frozen=True)
class OutcomeDistribution:
    """Joint Born-rule distribution keyed by outcome bitstring (listed qubit order)"""
    entries: Dict[str, float]

    def __getitem__(self, outcome: str) -> float:
        return self.entries[outcome]

    def __iter__(self):
        return iter(self.entries)

    def items(self):
        return self.entries.items()

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def support(self, tol: float = ATOL) -> set:
        """Outcomes with non-negligible probability"""
        return {outcome for outcome, p in self.entries.items() if p > tol}

    def probability(self, predicate) -> float:
        return float(sum(p for outcome, p in self.entries.items() if predicate(outcome)))


def from_amplitudes(amplitudes: Sequence[complex], normalize: bool = False) -> QubitRegister:
    """Register from raw amplitudes; normalize=True rescales instead of refusing"""
    amps = np.asarray(amplitudes, dtype=complex)
    if normalize:
        amps = amps / np.linalg.norm(amps)
    return QubitRegister(amps)


def basis_state(bits: str) -> QubitRegister:
    """Computational basis ket, e.g. basis_state("01")"""
    if not 1 <= len(bits) <= MAX_QUBITS or set(bits) - {"0", "1"}:
        raise RegisterError(f"invalid basis ket {bits!r}")
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return QubitRegister(amps)


def basis_ket(basis: Basis, bit: int) -> QubitRegister:
    """Single-qubit eigenstate |0>, |1>, |+>, |->, |+y> or |-y>"""
    return QubitRegister(basis.vectors[bit])


def product_state(*factors: QubitRegister) -> QubitRegister:
    """Tensor product, first factor most significant"""
    amps = np.array([1.0], dtype=complex)
    for factor in factors:
        amps = np.kron(amps, factor.amplitudes)
    return QubitRegister(amps)


def make_bell(label: BellLabel) -> QubitRegister:
    """Two-qubit Bell state, qubit 0 first.

    Args:
        label: Phi+, Phi-, Psi+ or Psi-

    Returns:
        Normalized 4-amplitude register; letter picks the |00>,|11> or |01>,|10> support, sign the relative phase
    """
    label = BellLabel(label)
    amps = np.zeros(4, dtype=complex)
    sign = -1.0 if label.sign_bit else 1.0
    if label.letter_bit == 0:
        amps[0b00], amps[0b11] = SQRT1_2, sign * SQRT1_2
    else:
        amps[0b01], amps[0b10] = SQRT1_2, sign * SQRT1_2
    return QubitRegister(amps)


def make_ghz(label: GhzLabel) -> QubitRegister:
    """Three-qubit GHZ-family state (P, Q, R or S with a sign).

    Args:
        label: GHZ label, e.g. GhzLabel.R_PLUS

    Returns:
        Normalized 8-amplitude register on (Alice, Bob, Eve)
    """
    label = GhzLabel(label)
    first = _GHZ_SUPPORT[label.letter]
    amps = np.zeros(8, dtype=complex)
    amps[first] = SQRT1_2
    amps[first ^ 0b111] = -SQRT1_2 if label.sign_bit else SQRT1_2
    return QubitRegister(amps)


def append_qubit(reg: QubitRegister, bit: int = 0) -> QubitRegister:
    """Adjoin a fresh |bit> as the new last tensor factor"""
    if reg.n_qubits >= MAX_QUBITS:
        raise RegisterError(f"cannot exceed {MAX_QUBITS} qubits")
    return product_state(reg, basis_ket(Basis.Z, bit))


def _check_index(reg: QubitRegister, qubit: int):
    """Raises RegisterIndexError for a qubit outside the register"""
    if not 0 <= qubit < reg.n_qubits:
        raise RegisterIndexError(f"qubit {qubit} out of range for {reg.n_qubits}-qubit register")


def apply_local(reg: QubitRegister, qubit: int, u: LocalUnitary) -> QubitRegister:
    """Apply a single-qubit unitary to one qubit, identity elsewhere.

    Args:
        reg: register of 1-3 qubits
        qubit: index of the qubit acted on
        u: any 2x2 unitary, e.g. SIGMA_0 or SIGMA_1 (sigma_z)

    Returns:
        New register; the input is left untouched

    Raises:
        RegisterIndexError: qubit is not in the register
    """
    _check_index(reg, qubit)
    out = np.tensordot(u.matrix, reg.tensor(), axes=([1], [qubit]))
    return QubitRegister(np.moveaxis(out, 0, qubit).reshape(-1))


def apply_permutation(reg: QubitRegister, mapping: Dict[int, int]) -> QubitRegister:
    """Apply a basis-state permutation |i> -> |mapping[i]> (classical reversible gates)"""
    amps = np.zeros_like(reg.amplitudes)
    for source, target in mapping.items():
        amps[target] = reg.amplitudes[source]
    return QubitRegister(amps)


def outcome_distribution(
    reg: QubitRegister,
    measured_qubits: Iterable[Tuple[int, Basis]]
) -> OutcomeDistribution:
    """Exhaustive joint distribution for measuring the listed qubits in the listed bases.

    Args:
        reg: register to measure, not modified
        measured_qubits: (qubit, basis) pairs; the outcome string lists bits in this order

    Returns:
        Probability of every outcome string, summing to 1

    Raises:
        DuplicateQubitError: a qubit is listed twice
        RegisterIndexError: a qubit is not in the register
    """
    measured = [(int(q), Basis(b)) for q, b in measured_qubits]
    indices = [q for q, _ in measured]
    if len(set(indices)) != len(indices):
        raise DuplicateQubitError(f"duplicate qubit in {indices}")
    for q in indices:
        _check_index(reg, q)

    psi = reg.tensor()
    for q, basis in measured:
        psi = np.moveaxis(np.tensordot(_BASIS_BRAS[basis], psi, axes=([1], [q])), 0, q)

    probs = np.abs(psi) ** 2
    unmeasured = tuple(i for i in range(reg.n_qubits) if i not in indices)
    marginal = probs.sum(axis=unmeasured) if unmeasured else probs
    ascending = sorted(indices)
    marginal = np.transpose(marginal, [ascending.index(q) for q in indices])

    entries = {}
    for outcome in itertools.product((0, 1), repeat=len(indices)):
        entries["".join(map(str, outcome))] = float(marginal[outcome]) if outcome else float(marginal)
    return OutcomeDistribution(entries)


def project(reg: QubitRegister, qubit: int, basis: Basis, bit: int) -> Tuple[float, Optional[QubitRegister]]:
    """Probability of `bit` and the renormalized post-measurement state (None if impossible)"""
    _check_index(reg, qubit)
    ket = Basis(basis).vectors[bit]
    reduced = np.tensordot(np.conj(ket), reg.tensor(), axes=([0], [qubit]))
    prob = float(np.vdot(reduced, reduced).real)
    if prob <= ATOL * ATOL:
        return 0.0, None
    post = np.moveaxis(np.multiply.outer(ket, reduced), 0, qubit).reshape(-1)
    return prob, QubitRegister(post / np.sqrt(prob))


def measure(reg: QubitRegister, qubit: int, basis: Basis, sample: float) -> Tuple[int, QubitRegister]:
    """Projective measurement; outcome 0 iff sample < P(0).

    Args:
        reg: register to measure
        qubit: measured qubit
        basis: Z, X or Y
        sample: uniform draw in [0, 1)

    Returns:
        (outcome, post-measurement register)
    """
    p0, post0 = project(reg, qubit, basis, 0)
    if sample < p0 and post0 is not None:
        return 0, post0
    p1, post1 = project(reg, qubit, basis, 1)
    if post1 is None:
        return 0, post0
    return 1, post1


def overlap_magnitude(a: QubitRegister, b: QubitRegister) -> float:
    """|<a|b>|, clamped to 1; registers must have the same size"""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(f"cannot compare {a.n_qubits}- and {b.n_qubits}-qubit registers")
    return min(1.0, float(abs(np.vdot(a.amplitudes, b.amplitudes))))


def same_state(a: QubitRegister, b: QubitRegister, tol: float = STATE_ATOL) -> bool:
    """Equal up to global phase"""
    return abs(overlap_magnitude(a, b) - 1.0) <= tol


def _format_amplitude(amp: complex) -> str:
    re, im = amp.real, amp.imag
    if abs(im) < 1e-15:
        return f"{re:.12g}"
    if abs(re) < 1e-15:
        return f"{im:.12g}i"
    return f"({re:.12g}{im:+.12g}i)"


def render(reg: QubitRegister) -> str:
    """Debug text form: nonzero kets with 12 significant digits"""
    terms: List[str] = []
    for index, amp in enumerate(reg.amplitudes):
        if abs(amp) > ATOL:
            ket = format(index, f"0{reg.n_qubits}b")
            terms.append(f"{_format_amplitude(amp)}|{ket}>")
    return " + ".join(terms)
