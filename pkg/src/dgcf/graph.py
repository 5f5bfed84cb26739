"""Bipartite user-item graph operators.

Node index layout is fixed everywhere in this package: users occupy rows
0..m-1, items occupy rows m..m+n-1 of every (m+n)-sized vector or matrix.

Sparse matrices are scipy CSR arrays (float64). All values are treated as
immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class InteractionMatrix:
    """Binary user-item interaction matrix R in row-compressed form.

    Stored values are all 1.0; absent entries mean no interaction.
    """

    m: int
    n: int
    rows: sp.csr_array  # shape (m, n)

    @property
    def nnz(self) -> int:
        return int(self.rows.nnz)

    def user_items(self, u: int) -> np.ndarray:
        """Ascending item indices user u interacted with."""
        r = self.rows
        return r.indices[r.indptr[u]:r.indptr[u + 1]]

    def user_degrees(self) -> np.ndarray:
        return np.diff(self.rows.indptr)

    @staticmethod
    def from_pairs(m: int, n: int, pairs) -> "InteractionMatrix":
        """Build from (user_index, item_index) pairs; duplicates collapse to one."""
        pairs = list(pairs)
        if pairs:
            arr = np.asarray(pairs, dtype=np.int64)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError("pairs must be (user, item) tuples")
            if (arr < 0).any() or (arr[:, 0] >= m).any() or (arr[:, 1] >= n).any():
                raise ValueError("interaction index out of range")
            arr = np.unique(arr, axis=0)
            us, its = arr[:, 0], arr[:, 1]
        else:
            us = np.zeros(0, dtype=np.int64)
            its = np.zeros(0, dtype=np.int64)
        data = np.ones(len(us), dtype=np.float64)
        mat = sp.csr_array((data, (us, its)), shape=(m, n))
        mat.sum_duplicates()
        mat.sort_indices()
        mat.data[:] = 1.0
        return InteractionMatrix(m=m, n=n, rows=mat)


def build_adjacency(R: InteractionMatrix) -> sp.csr_array:
    """Adjacency of the bipartite graph: R in the upper-right block, R^T in
    the lower-left, zero diagonal blocks. Shape (m+n, m+n), symmetric."""
    A = sp.block_array([[None, R.rows], [R.rows.T, None]], format="csr")
    A.sum_duplicates()
    A.sort_indices()
    return A


def degree_vector(A: sp.csr_array) -> np.ndarray:
    """Row sums of a square sparse matrix, as a dense float64 vector."""
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"expected square matrix, got {A.shape}")
    return np.asarray(A.sum(axis=1), dtype=np.float64).ravel()


def normalize_laplacian(A: sp.csr_array, d: np.ndarray) -> sp.csr_array:
    """Symmetric degree normalization S with S_ij = a_ij / sqrt(d_i * d_j).

    Rows and columns of isolated nodes (d_i = 0) stay all-zero: 1/sqrt(0)
    is mapped to 0 instead of inf. The scale factors are multiplied together
    before touching a_ij, so symmetry of A is preserved exactly.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (A.shape[0],):
        raise ValueError("degree vector length does not match matrix")
    inv_sqrt = np.zeros_like(d)
    nz = d > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
    row_of = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    data = A.data * (inv_sqrt[row_of] * inv_sqrt[A.indices])
    return sp.csr_array((data, A.indices.copy(), A.indptr.copy()), shape=A.shape)


def spmm(S: sp.csr_array, E: np.ndarray) -> np.ndarray:
    """Sparse x dense product in float64; the kernel behind every propagation step."""
    E = np.asarray(E, dtype=np.float64)
    if S.shape[1] != E.shape[0]:
        raise ValueError(f"dimension mismatch: {S.shape} @ {E.shape}")
    return S @ E
