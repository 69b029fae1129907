"""Quantum states and channels: Kraus/unitary/Choi representations, the
input-transposed Choi matrix, one-sided (semicausal) compositions and
Haar-random sampling.

The Choi matrix convention used throughout is

    M = sum_ij (|i><j|)^T tensor Ch(|i><j|),

with the input factor first, so that trace-preservation reads
``Tr_out M = I`` and the channel action is ``Ch(rho) = Tr_in[M (rho tensor I)]``.
Complete positivity is equivalent to positivity of the partial transpose of
M on its input factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import (
    ComplexMatrix,
    _as_array,
    embed_operator,
    identity,
    is_hermitian,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    swap_operator,
)
from .pauli import pauli_basis
from .rng import generator

TRACE_ATOL = 1e-10
STATE_EIG_ATOL = 1e-10
CHANNEL_ATOL = 1e-9
KRAUS_KEEP_EPS = 1e-12


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix: Hermitian, unit trace, positive semidefinite."""

    mat: ComplexMatrix

    def __post_init__(self):
        a = self.mat.data
        if not is_hermitian(a):
            raise ValueError("state is not Hermitian")
        tr = np.trace(a).real
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"state trace {tr} != 1")
        w = np.linalg.eigvalsh(a)
        if w.min() < -STATE_EIG_ATOL:
            raise ValueError(f"state has negative eigenvalue {w.min():.3e}")

    @property
    def dim(self) -> int:
        return self.mat.dim

    @classmethod
    def of(cls, data, factors: Sequence[int] | None = None) -> "QuantumState":
        return cls(ComplexMatrix(data, factors))

    @classmethod
    def from_ket(cls, amplitudes, factors: Sequence[int] | None = None) -> "QuantumState":
        v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(ComplexMatrix(np.outer(v, v.conj()), factors))

    @classmethod
    def maximally_mixed(cls, dim: int, factors: Sequence[int] | None = None) -> "QuantumState":
        return cls(ComplexMatrix(np.eye(dim) / dim, factors))


def marginal(state: QuantumState, keep) -> QuantumState:
    return QuantumState(partial_trace(state.mat, keep))


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------

def _kraus_to_choi(kraus: Sequence[np.ndarray], dim_in: int, dim_out: int) -> ComplexMatrix:
    ks = np.asarray(kraus, dtype=np.complex128)
    m = np.einsum("kai,kbj->jaib", ks, ks.conj()).reshape(dim_in * dim_out, dim_in * dim_out)
    return ComplexMatrix(m, (dim_in, dim_out))


def _choi_to_kraus(choi: ComplexMatrix) -> tuple[np.ndarray, ...]:
    dim_in, dim_out = choi.factors
    standard = input_transpose(choi).data
    w, v = np.linalg.eigh(standard)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > KRAUS_KEEP_EPS:
            ops.append(np.sqrt(lam) * vec.reshape(dim_in, dim_out).T)
    return tuple(ops)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map stored as Kraus operators, a unitary, or a Choi matrix."""

    rep: str
    dim_in: int
    dim_out: int
    payload: tuple

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "QuantumChannel":
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in kraus)
        if not ops:
            raise ValueError("need at least one Kraus operator")
        dim_out, dim_in = ops[0].shape
        if any(k.shape != (dim_out, dim_in) for k in ops):
            raise ValueError("Kraus operators must share one shape")
        total = sum(k.conj().T @ k for k in ops)
        if np.abs(total - np.eye(dim_in)).max() > CHANNEL_ATOL:
            raise ValueError("Kraus operators are not trace preserving")
        return cls("kraus", dim_in, dim_out, ops)

    @classmethod
    def from_unitary(cls, u) -> "QuantumChannel":
        a = _as_array(u)
        d = a.shape[0]
        if np.abs(a.conj().T @ a - np.eye(d)).max() > CHANNEL_ATOL:
            raise ValueError("matrix is not unitary")
        return cls("unitary", d, d, (a,))

    @classmethod
    def from_choi(cls, choi: ComplexMatrix) -> "QuantumChannel":
        if choi.nfactors != 2:
            raise ValueError("a Choi matrix needs exactly two factors (in, out)")
        dim_in, dim_out = choi.factors
        tr_out = partial_trace(choi, {0}).data
        if np.abs(tr_out - np.eye(dim_in)).max() > CHANNEL_ATOL:
            raise ValueError("Choi matrix is not trace preserving (Tr_out != I)")
        if not is_hermitian(choi.data):
            raise ValueError("Choi matrix is not Hermitian")
        return cls("choi", dim_in, dim_out, (choi,))

    @classmethod
    def identity(cls, dim: int = 2) -> "QuantumChannel":
        return cls.from_unitary(np.eye(dim))

    @cached_property
    def kraus_operators(self) -> tuple[np.ndarray, ...]:
        if self.rep == "kraus":
            return self.payload
        if self.rep == "unitary":
            return (self.payload[0],)
        return _choi_to_kraus(self.payload[0])

    @cached_property
    def choi(self) -> ComplexMatrix:
        if self.rep == "choi":
            return self.payload[0]
        return _kraus_to_choi(self.kraus_operators, self.dim_in, self.dim_out)

    def apply_matrix(self, a: np.ndarray) -> np.ndarray:
        """Linear action on an arbitrary operator (not only states)."""
        return sum(k @ a @ k.conj().T for k in self.kraus_operators)

    def __repr__(self) -> str:
        return f"QuantumChannel(rep={self.rep!r}, dim_in={self.dim_in}, dim_out={self.dim_out})"


def apply(ch: QuantumChannel, state: QuantumState) -> QuantumState:
    if state.dim != ch.dim_in:
        raise ValueError(f"state dim {state.dim} != channel input dim {ch.dim_in}")
    out = ch.apply_matrix(state.mat.data)
    return QuantumState(ComplexMatrix(out))


def choi_of(ch: QuantumChannel) -> ComplexMatrix:
    """Input-transposed Choi matrix with Tr_out = I, factors (dim_in, dim_out)."""
    return ch.choi


def choi_pauli_form(ch: QuantumChannel) -> ComplexMatrix:
    """Same matrix computed as 2**-n sum_i sigma_i tensor Ch(sigma_i)."""
    if ch.dim_in != ch.dim_out:
        raise ValueError("Pauli form needs equal input and output dimensions")
    n = (ch.dim_in).bit_length() - 1
    if 2**n != ch.dim_in:
        raise ValueError("Pauli form needs a power-of-two dimension")
    basis = pauli_basis(n)
    acc = sum(np.kron(sigma, ch.apply_matrix(sigma)) for sigma in basis)
    return ComplexMatrix(acc / ch.dim_in, (ch.dim_in, ch.dim_out))


def input_transpose(m: ComplexMatrix) -> ComplexMatrix:
    """Partial transpose on the first (input) factor; involutive."""
    if m.nfactors != 2:
        raise ValueError(f"need exactly two factors, got {m.factors}")
    d1, d2 = m.factors
    t = m.data.reshape(d1, d2, d1, d2).transpose(2, 1, 0, 3)
    return ComplexMatrix(t.reshape(m.dim, m.dim), m.factors)


class CpCheck(NamedTuple):
    ok: bool
    min_eig: float


def is_cp(choi: ComplexMatrix, eps: float = 1e-8) -> CpCheck:
    """Complete positivity of the map behind an input-transposed Choi matrix."""
    a = choi.data
    if not is_hermitian(a):
        raise ValueError("Choi matrix is not Hermitian")
    w = np.linalg.eigvalsh(input_transpose(choi).data)
    return CpCheck(bool(w.min() >= -eps), float(w.min()))


# ---------------------------------------------------------------------------
# Compositions
# ---------------------------------------------------------------------------

def semicausal(
    n_ac: QuantumChannel, m_bc: QuantumChannel, rho_c: QuantumState
) -> QuantumChannel:
    """Bipartite channel Tr_C [ M_BC ( N_AC (rho_AB tensor rho_C) ) ].

    By construction the second party cannot signal the first: the first
    party's output marginal depends only on its own input.
    """
    dim_c = rho_c.dim
    if n_ac.dim_in != n_ac.dim_out or m_bc.dim_in != m_bc.dim_out:
        raise ValueError("component channels must preserve dimension")
    if n_ac.dim_in % dim_c or m_bc.dim_in % dim_c:
        raise ValueError("component dimensions are not divisible by the ancilla dimension")
    dim_a = n_ac.dim_in // dim_c
    dim_b = m_bc.dim_in // dim_c
    factors = (dim_a, dim_b, dim_c)

    n_ops = [
        embed_operator(ComplexMatrix(k, (dim_a, dim_c)), factors, (0, 2)).data
        for k in n_ac.kraus_operators
    ]
    m_ops = [
        embed_operator(ComplexMatrix(k, (dim_b, dim_c)), factors, (1, 2)).data
        for k in m_bc.kraus_operators
    ]

    w, v = np.linalg.eigh(rho_c.mat.data)
    eye_ab = np.eye(dim_a * dim_b)
    kraus = []
    for p, phi in zip(w, v.T):
        if p <= KRAUS_KEEP_EPS:
            continue
        inject = np.kron(eye_ab, phi.reshape(dim_c, 1)) * np.sqrt(p)
        for m_op in m_ops:
            for n_op in n_ops:
                stage = m_op @ n_op @ inject
                for e in range(dim_c):
                    bra = np.zeros((1, dim_c))
                    bra[0, e] = 1.0
                    kraus.append(np.kron(eye_ab, bra) @ stage)
    return QuantumChannel.from_kraus(kraus)


def effective_channel(
    ch: QuantumChannel,
    dims: tuple[int, int],
    pin: int,
    pin_state: QuantumState,
    keep: int,
) -> QuantumChannel:
    """One-sided reduction of a bipartite channel.

    The input factor ``pin`` is fixed to ``pin_state``; everything except
    output factor ``keep`` is traced out.  Returns the induced channel from
    the free input factor to the kept output factor.
    """
    da, db = dims
    if ch.dim_in != da * db or ch.dim_out != da * db:
        raise ValueError("channel dimensions do not match the factor split")
    if pin_state.dim != dims[pin]:
        raise ValueError("pinned state dimension mismatch")
    free = 1 - pin
    d_free = dims[free]
    d_keep = dims[keep]
    blocks = np.zeros((d_free, d_free, d_keep, d_keep), dtype=np.complex128)
    for i in range(d_free):
        for j in range(d_free):
            unit = np.zeros((d_free, d_free), dtype=np.complex128)
            unit[i, j] = 1.0
            parts = [None, None]
            parts[free] = unit
            parts[pin] = pin_state.mat.data
            x = np.kron(parts[0], parts[1])
            y = ComplexMatrix(ch.apply_matrix(x), dims)
            blocks[i, j] = partial_trace(y, {keep}).data
    m = np.einsum("ijab->jaib", blocks).reshape(d_free * d_keep, d_free * d_keep)
    return QuantumChannel.from_choi(ComplexMatrix(m, (d_free, d_keep)))


def partial_swap(theta: float) -> QuantumChannel:
    """Two-qubit unitary exp(i theta S) = cos(theta) I + i sin(theta) S."""
    s = swap_operator(2).data
    u = np.cos(theta) * np.eye(4) + 1j * np.sin(theta) * s
    return QuantumChannel.from_unitary(u)


def swap_channel(d: int = 2) -> QuantumChannel:
    return QuantumChannel.from_unitary(swap_operator(d).data)


def measure_prepare_z() -> QuantumChannel:
    """Measure one qubit in the computational basis, prepare the outcome."""
    zero = np.diag([1.0, 0.0]).astype(np.complex128)
    one = np.diag([0.0, 1.0]).astype(np.complex128)
    return QuantumChannel.from_kraus([zero, one])


# ---------------------------------------------------------------------------
# Random sampling
# ---------------------------------------------------------------------------

def haar_unitary(d: int, seed_or_rng) -> ComplexMatrix:
    """Haar-distributed d x d unitary, deterministic for a given seed.

    Ginibre matrix + QR, with the R diagonal's phases absorbed so the
    distribution is exactly Haar.
    """
    rng = generator(seed_or_rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return ComplexMatrix(q * phases)


def random_pure_state(dim: int, seed_or_rng, factors=None) -> QuantumState:
    rng = generator(seed_or_rng)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return QuantumState.from_ket(v, factors)


def random_state(dim: int, seed_or_rng, rank: int | None = None, factors=None) -> QuantumState:
    """Random density matrix from a Ginibre factor of the given rank."""
    rng = generator(seed_or_rng)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return QuantumState.of(rho / np.trace(rho).real, factors)


def random_channel(dim: int, seed_or_rng, kraus_count: int | None = None) -> QuantumChannel:
    """Random CPTP map: Ginibre Kraus operators renormalized to trace preservation."""
    rng = generator(seed_or_rng)
    k = dim * dim if kraus_count is None else kraus_count
    ops = [
        (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        for _ in range(k)
    ]
    total = sum(op.conj().T @ op for op in ops)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    return QuantumChannel.from_kraus([op @ inv_sqrt for op in ops])


def random_semicausal(
    dim_a: int, dim_b: int, dim_c: int, seed_or_rng
) -> QuantumChannel:
    """Random one-way-signalling bipartite channel with Haar unitary components."""
    rng = generator(seed_or_rng)
    n_ac = QuantumChannel.from_unitary(haar_unitary(dim_a * dim_c, rng).data)
    m_bc = QuantumChannel.from_unitary(haar_unitary(dim_b * dim_c, rng).data)
    rho_c = random_pure_state(dim_c, rng)
    return semicausal(n_ac, m_bc, rho_c)


# ---------------------------------------------------------------------------
# Named channels and serialization
# ---------------------------------------------------------------------------

def channel_from_id(name: str) -> QuantumChannel:
    """Resolve a channel id: identity, measure_prepare_z, partial_swap:<theta>, swap."""
    if name == "identity":
        return QuantumChannel.identity(2)
    if name == "measure_prepare_z":
        return measure_prepare_z()
    if name == "swap":
        return swap_channel(2)
    if name.startswith("partial_swap:"):
        try:
            theta = float(name.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad partial_swap angle in {name!r}") from exc
        return partial_swap(theta)
    raise ValueError(f"unknown channel id {name!r}")


def channel_to_json(ch: QuantumChannel) -> dict:
    if ch.rep == "kraus":
        mats = [matrix_to_json(ComplexMatrix(k)) for k in ch.payload]
    elif ch.rep == "unitary":
        mats = [matrix_to_json(ComplexMatrix(ch.payload[0]))]
    else:
        mats = [matrix_to_json(ch.payload[0])]
    return {"rep": ch.rep, "dim_in": ch.dim_in, "dim_out": ch.dim_out, "matrices": mats}


def channel_from_json(obj: dict) -> QuantumChannel:
    try:
        rep = obj["rep"]
        mats = [matrix_from_json(m) for m in obj["matrices"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed channel JSON: {exc}") from exc
    if rep == "kraus":
        return QuantumChannel.from_kraus([m.data for m in mats])
    if rep == "unitary":
        return QuantumChannel.from_unitary(mats[0].data)
    if rep == "choi":
        m = mats[0]
        if m.nfactors != 2:
            m = m.with_factors((int(obj["dim_in"]), int(obj["dim_out"])))
        return QuantumChannel.from_choi(m)
    raise ValueError(f"unknown channel rep {rep!r}")
