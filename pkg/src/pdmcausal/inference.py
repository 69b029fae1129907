"""Choi-matrix extraction from two-slot PDMs and causal-structure classification.

Vectorizing the anticommutator closed form turns Choi extraction into the
linear system  J vec(M) = vec(R)  with  J = (rho tensor I + I tensor rho^T)/2
and rho the first-slot marginal padded with the output identity.  When the
marginal is full rank the solution is unique; otherwise the pseudo-inverse
gives the minimum-norm member of an affine solution family and a small
splitting solver picks the family member whose input-transposed matrix is
least negative.

Classification compares the negativity of the PDM with the positivity of
the forward and time-reversed extracted matrices:

    no negativity                -> compatible with a common cause only;
    forward PSD, reverse not     -> first slot causes the second;
    reverse PSD, forward not     -> second slot causes the first;
    both PSD                     -> either direction;
    neither PSD                  -> causation plus initial correlations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .channels import QuantumState, input_transpose
from .linalg import ComplexMatrix, NumericalInconsistencyError, max_abs_diff
from .pdm import PDM, marginal_state, negativity, reduce, time_reverse

RESIDUAL_LIMIT = 1e-6


class CausalStructure(IntEnum):
    A_TO_B = 1
    B_TO_A = 2
    COMMON_CAUSE = 3
    A_TO_B_WITH_COMMON_CAUSE = 4
    B_TO_A_WITH_COMMON_CAUSE = 5


_MIRROR = {1: 2, 2: 1, 3: 3, 4: 5, 5: 4}


@dataclass(frozen=True)
class Thresholds:
    eps_neg: float = 1e-8
    eps_pos: float = 1e-8
    rank_tol: float = 1e-9
    product_tol: float = 1e-9

    def to_json(self) -> dict:
        return {
            "eps_neg": self.eps_neg,
            "eps_pos": self.eps_pos,
            "rank_tol": self.rank_tol,
            "product_tol": self.product_tol,
        }


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    """Extracted Choi matrix with input factor first.

    ``residual`` is the 2-norm defect of the linear system; ``unique`` is
    whether the marginal was full rank; ``min_eig_transposed`` the smallest
    eigenvalue of the input-transposed matrix (the CP witness).  The SDP
    path also fills ``objective`` (trace of the negative part attained),
    ``iterations`` and ``converged``.
    """

    choi: ComplexMatrix
    residual: float
    unique: bool
    min_eig_transposed: float
    objective: float | None = None
    iterations: int | None = None
    converged: bool | None = None


def jordan_product_matrix(first_marginal, out_dim: int) -> ComplexMatrix:
    """Matrix of X -> (rho X + X rho)/2 on row-major vectorized operators.

    ``rho`` is the first-slot marginal padded with the identity on the
    output slot.  Hermitian PSD; its eigenvalues are the pairwise means of
    rho's eigenvalues.
    """
    marg = first_marginal.mat if isinstance(first_marginal, QuantumState) else first_marginal
    rho = np.kron(marg.data if isinstance(marg, ComplexMatrix) else marg, np.eye(out_dim))
    d = rho.shape[0]
    eye = np.eye(d)
    j = 0.5 * (np.kron(rho, eye) + np.kron(eye, rho.T))
    return ComplexMatrix(j, (d, d))


def _two_slot_dims(pdm: PDM) -> tuple[int, int]:
    if len(pdm.slots) != 2:
        raise ValueError("extraction is defined for exactly two slots")
    return 2 ** pdm.slots[0].qubits, 2 ** pdm.slots[1].qubits


def extract_choi(
    pdm: PDM, thresholds: Thresholds = Thresholds(), rcond: float = 1e-10
) -> ExtractionResult:
    """Solve J vec(M) = vec(R) for the forward Choi matrix.

    Raises NumericalInconsistencyError when no member of the closed-form
    family reproduces the PDM (residual above the limit).
    """
    din, dout = _two_slot_dims(pdm)
    marg = marginal_state(pdm, 0)
    jmat = jordan_product_matrix(marg, dout).data
    rvec = pdm.mat.data.reshape(-1)
    mvec = np.linalg.pinv(jmat, rcond=rcond) @ rvec
    residual = float(np.linalg.norm(jmat @ mvec - rvec))
    if residual > RESIDUAL_LIMIT:
        raise NumericalInconsistencyError(
            f"PDM is inconsistent with the anticommutator family (residual {residual:.3e})"
        )
    m = mvec.reshape(din * dout, din * dout)
    m = 0.5 * (m + m.conj().T)
    choi = ComplexMatrix(m, (din, dout))
    unique = bool(np.linalg.eigvalsh(marg.mat.data).min() > thresholds.rank_tol)
    min_eig = float(np.linalg.eigvalsh(input_transpose(choi).data).min())
    return ExtractionResult(choi, residual, unique, min_eig)


def extract_reverse_choi(
    pdm: PDM, thresholds: Thresholds = Thresholds(), rcond: float = 1e-10
) -> ExtractionResult:
    """Extraction applied to the time-reversed PDM.

    The returned matrix has the later slot as its input factor; conjugate
    with the swap to express it in the original slot order.
    """
    return extract_choi(time_reverse(pdm), thresholds, rcond)


# ---------------------------------------------------------------------------
# Least-negative completion (small dense SDP via operator splitting)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _hermitian_basis(dim: int) -> np.ndarray:
    """Orthonormal basis of Hermitian dim x dim matrices (Frobenius inner product)."""
    elems = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=np.complex128)
        e[i, i] = 1.0
        elems.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=np.complex128)
            e[i, j] = inv_sqrt2
            e[j, i] = inv_sqrt2
            elems.append(e)
            e = np.zeros((dim, dim), dtype=np.complex128)
            e[i, j] = 1j * inv_sqrt2
            e[j, i] = -1j * inv_sqrt2
            elems.append(e)
    basis = np.array(elems)
    basis.setflags(write=False)
    return basis


def _to_coords(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.einsum("kij,ij->k", basis.conj(), x).real


def _from_coords(c: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.tensordot(c, basis, axes=([0], [0]))


def _input_transpose_raw(x: np.ndarray, din: int, dout: int) -> np.ndarray:
    d = din * dout
    return x.reshape(din, dout, din, dout).transpose(2, 1, 0, 3).reshape(d, d)


def _neg_part_trace(x: np.ndarray) -> float:
    w = np.linalg.eigvalsh(x)
    return float(-w[w < 0].sum() + 0.0)


def _prox_neg_part(x: np.ndarray, t: float, din: int, dout: int) -> np.ndarray:
    """Prox of t * trace-of-negative-part composed with the input transpose."""
    xt = _input_transpose_raw(x, din, dout)
    w, v = np.linalg.eigh(xt)
    shifted = np.where(w > 0, w, np.where(w < -t, w + t, 0.0))
    yt = (v * shifted) @ v.conj().T
    return _input_transpose_raw(yt, din, dout)


def sdp_least_negative(
    pdm: PDM,
    direction: str = "forward",
    thresholds: Thresholds = Thresholds(),
    step: float = 1.0,
    max_iterations: int = 50_000,
    objective_tol: float = 1e-6,
) -> ExtractionResult:
    """Least-negative member of the affine Choi solution family.

    Minimizes the trace of the negative part of the input-transposed matrix
    over Hermitian, trace-preserving solutions of J vec(N) = vec(R), by
    Douglas-Rachford splitting: alternate exact projection onto the affine
    set (precomputed pseudo-inverse of the stacked constraints) with the
    eigenvalue-clipping prox of the objective.
    """
    if direction == "reverse":
        pdm = time_reverse(pdm)
    elif direction != "forward":
        raise ValueError("direction must be 'forward' or 'reverse'")
    din, dout = _two_slot_dims(pdm)
    d = din * dout
    marg = marginal_state(pdm, 0)
    jmat = jordan_product_matrix(marg, dout).data

    basis = _hermitian_basis(d)
    basis_in = _hermitian_basis(din)
    n_coord = d * d
    # constraint map in real Hermitian coordinates, one column per basis element
    cols_j = np.empty((n_coord, n_coord))
    cols_t = np.empty((din * din, n_coord))
    for k in range(n_coord):
        e = basis[k]
        cols_j[:, k] = _to_coords((jmat @ e.reshape(-1)).reshape(d, d), basis)
        tr_out = np.trace(e.reshape(din, dout, din, dout), axis1=1, axis2=3)
        cols_t[:, k] = _to_coords(tr_out, basis_in)
    cmat = np.vstack([cols_j, cols_t])
    b = np.concatenate(
        [_to_coords(pdm.mat.data, basis), _to_coords(np.eye(din), basis_in)]
    )
    cpinv = np.linalg.pinv(cmat, rcond=1e-12)

    def project(x: np.ndarray) -> np.ndarray:
        return x - cpinv @ (cmat @ x - b)

    x0 = project(np.zeros(n_coord))
    floor = float(np.linalg.norm(cmat @ x0 - b))
    if floor > RESIDUAL_LIMIT:
        raise NumericalInconsistencyError(
            f"no Hermitian trace-preserving solution reproduces the PDM (floor {floor:.3e})"
        )

    z = x0.copy()
    y_prev = None
    obj_prev = np.inf
    best_obj = np.inf
    best = x0
    converged = False
    iterations = 0
    stall = 0
    for iterations in range(1, max_iterations + 1):
        y = project(z)
        ymat = _from_coords(y, basis)
        obj = _neg_part_trace(_input_transpose_raw(ymat, din, dout))
        if obj < best_obj:
            best_obj = obj
            best = y
        stalled = (
            y_prev is not None
            and np.linalg.norm(y - y_prev) <= 1e-10 * max(1.0, np.linalg.norm(y))
            and abs(obj - obj_prev) <= objective_tol
        )
        if stalled:
            stall += 1
            if stall >= 5:
                converged = True
                break
        else:
            stall = 0
        y_prev = y
        obj_prev = obj
        w = _prox_neg_part(_from_coords(2.0 * y - z, basis), step, din, dout)
        z = z + _to_coords(w, basis) - y

    n_best = _from_coords(project(best), basis)
    n_best = 0.5 * (n_best + n_best.conj().T)
    choi = ComplexMatrix(n_best, (din, dout))
    residual = float(np.linalg.norm(jmat @ n_best.reshape(-1) - pdm.mat.data.reshape(-1)))
    unique = bool(np.linalg.eigvalsh(marg.mat.data).min() > thresholds.rank_tol)
    min_eig = float(np.linalg.eigvalsh(input_transpose(choi).data).min())
    objective = _neg_part_trace(_input_transpose_raw(n_best, din, dout))
    return ExtractionResult(
        choi, residual, unique, min_eig, objective, iterations, converged
    )


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CausalVerdict:
    """Compatibility subset of the five causal structures plus the evidence."""

    compatible: frozenset
    f: float
    min_eig_forward: float
    min_eig_reverse: float
    unique_forward: bool
    unique_reverse: bool
    correlated: bool
    thresholds: Thresholds

    @property
    def compatible_reversed(self) -> frozenset:
        """Verdict for the same data with the two slots relabeled."""
        return frozenset(CausalStructure(_MIRROR[int(c)]) for c in self.compatible)

    def to_json(self) -> dict:
        return {
            "compatible": sorted(int(c) for c in self.compatible),
            "f": self.f,
            "min_eig_forward": self.min_eig_forward,
            "min_eig_reverse": self.min_eig_reverse,
            "unique_forward": self.unique_forward,
            "unique_reverse": self.unique_reverse,
            "correlated": self.correlated,
            "compatible_reversed": sorted(int(c) for c in self.compatible_reversed),
            "thresholds": self.thresholds.to_json(),
        }


def _evidence(pdm: PDM, direction: str, thresholds: Thresholds) -> ExtractionResult:
    base = extract_choi(pdm) if direction == "forward" else extract_reverse_choi(pdm)
    if base.unique:
        return base
    return sdp_least_negative(pdm, direction, thresholds)


def classify(pdm: PDM, thresholds: Thresholds = Thresholds()) -> CausalVerdict:
    """Run the three-step compatibility protocol on a two-slot PDM.

    Negativity below eps_neg keeps only the common-cause structure; with
    negativity, the signs of the extracted forward/reverse matrices decide
    between directed causation and a mixed structure.  Rank-deficient
    marginals fall back to the least-negative completion.
    """
    if len(pdm.slots) != 2:
        raise ValueError("classification is defined for exactly two slots")
    f = negativity(pdm)
    r_a = reduce(pdm, [0])
    r_b = reduce(pdm, [1])
    product = np.kron(r_a.mat.data, r_b.mat.data)
    correlated = bool(max_abs_diff(pdm.mat.data, product) > thresholds.product_tol)

    fwd = _evidence(pdm, "forward", thresholds)
    rev = _evidence(pdm, "reverse", thresholds)

    if not correlated:
        compatible = frozenset(CausalStructure)
    elif f <= thresholds.eps_neg:
        compatible = frozenset({CausalStructure.COMMON_CAUSE})
    else:
        fwd_ok = fwd.min_eig_transposed >= -thresholds.eps_pos
        rev_ok = rev.min_eig_transposed >= -thresholds.eps_pos
        if fwd_ok and not rev_ok:
            compatible = frozenset({CausalStructure.A_TO_B})
        elif rev_ok and not fwd_ok:
            compatible = frozenset({CausalStructure.B_TO_A})
        elif fwd_ok and rev_ok:
            compatible = frozenset({CausalStructure.A_TO_B, CausalStructure.B_TO_A})
        else:
            compatible = frozenset(
                {
                    CausalStructure.A_TO_B_WITH_COMMON_CAUSE,
                    CausalStructure.B_TO_A_WITH_COMMON_CAUSE,
                }
            )
    return CausalVerdict(
        compatible=compatible,
        f=f,
        min_eig_forward=fwd.min_eig_transposed,
        min_eig_reverse=rev.min_eig_transposed,
        unique_forward=fwd.unique,
        unique_reverse=rev.unique,
        correlated=correlated,
        thresholds=thresholds,
    )
