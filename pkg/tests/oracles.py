"""Independent brute-force oracles shared by the test modules."""

import numpy as np

from pdmcausal.channels import input_transpose
from pdmcausal.inference import extract_choi
from pdmcausal.linalg import ComplexMatrix
from pdmcausal.pdm import marginal_state


def grid_oracle_objective(pdm, points=9):
    """Brute-force the free block of a rank-one-marginal extraction family.

    For a single-qubit first slot of rank one, the feasible completions are
    exactly  base + |k><k| tensor [[a, b], [conj(b), 1-a]]  with the kernel
    vector k; sweep (a, Re b, Im b) on a coarse grid and return the best
    trace-of-negative-part of the input-transposed candidate.
    """
    marg = marginal_state(pdm, 0).mat.data
    w, v = np.linalg.eigh(marg)
    assert w[0] < 1e-9, "grid oracle expects a rank-deficient first marginal"
    kernel = v[:, 0]
    base = extract_choi(pdm).choi.data
    proj = np.outer(kernel, kernel.conj())
    best = np.inf
    for a in np.linspace(-0.5, 1.5, points):
        for br in np.linspace(-1, 1, points):
            for bi in np.linspace(-1, 1, points):
                block = np.array([[a, br + 1j * bi], [br - 1j * bi, 1 - a]])
                member = base + np.kron(proj, block)
                mt = input_transpose(ComplexMatrix(member, (2, 2))).data
                eigs = np.linalg.eigvalsh(mt)
                best = min(best, -eigs[eigs < 0].sum())
    return best
