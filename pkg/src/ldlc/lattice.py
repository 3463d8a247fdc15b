"""Latin-square low-density lattice codes.

A code is a sparse nonsingular n x n matrix H with constant row and column
weight d whose nonzero magnitudes in every row and column form the same
multiset {h_1 >= ... >= h_d > 0}, globally rescaled so |det H| = 1.  The
lattice is {x : H x = b, b integer}; encoding solves H x = b and integer
recovery rounds H x to the nearest integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

#: |det H| must equal 1 within this relative tolerance after normalization.
DET_TOL = 1e-6
#: Residual bound enforced on encode solves.
ENCODE_RESIDUAL_TOL = 1e-8


class LatticeError(Exception):
    """Generation or validation failure."""


@dataclass(frozen=True, eq=False)
class LdlcCode:
    """Immutable Latin-square LDLC description.

    coeffs holds the unscaled magnitudes h_1 >= ... >= h_d; the stored
    parity matrix is already multiplied by norm_scale = |det H0|^(-1/n)
    (H0 being the unscaled draw) so its determinant has magnitude one.
    """

    n: int
    d: int
    coeffs: tuple[float, ...]
    seed: int
    norm_scale: float
    parity: sp.csr_matrix
    # Per-edge coefficient labels aligned with parity.data: the rank (1-based)
    # of the entry magnitude within its row, largest first, column order
    # breaking ties.  Used for per-label message statistics.
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_lu", None)
        object.__setattr__(self, "_csc", None)

    def __getstate__(self):
        # The LU factorization and graph caches are not picklable; rebuild
        # lazily on the other side.
        state = dict(self.__dict__)
        for key in ("_lu", "_csc", "_bp_graph"):
            state.pop(key, None)
        return state

    def __setstate__(self, state):
        for key, value in state.items():
            object.__setattr__(self, key, value)
        object.__setattr__(self, "_lu", None)
        object.__setattr__(self, "_csc", None)

    def factorization(self):
        """Cached sparse LU of H."""
        if self._lu is None:
            object.__setattr__(self, "_lu", spla.splu(self.parity.tocsc()))
        return self._lu

    def csc(self) -> sp.csc_matrix:
        if self._csc is None:
            object.__setattr__(self, "_csc", self.parity.tocsc())
        return self._csc

    def row_entries(self, i: int):
        """(columns, values, labels) of row i in label order."""
        sl = slice(self.parity.indptr[i], self.parity.indptr[i + 1])
        return self.parity.indices[sl], self.parity.data[sl], self.labels[sl]


def _draw_disjoint_permutations(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """d permutations of range(n) with no shared (row, column) position.

    Each permutation is rejection-sampled against the ones already accepted,
    with a budget of 10*d draws per permutation.
    """
    perms = np.empty((d, n), dtype=np.int64)
    budget = 10 * d
    for k in range(d):
        for _ in range(budget):
            p = rng.permutation(n)
            if k == 0 or not (perms[:k] == p).any():
                perms[k] = p
                break
        else:
            raise LatticeError(
                f"could not draw {d} disjoint permutations of size {n} "
                f"within {budget} attempts per permutation"
            )
    return perms


def _log_abs_det(H: sp.csr_matrix) -> float:
    """log|det H| via sparse LU; raises LatticeError if numerically singular."""
    try:
        lu = spla.splu(H.tocsc(), permc_spec="COLAMD")
    except RuntimeError as exc:  # pragma: no cover - scipy signals singularity
        raise LatticeError(f"singular parity matrix: {exc}") from None
    diag = np.abs(lu.U.diagonal())
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise LatticeError("singular parity matrix (zero pivot)")
    return float(np.sum(np.log(diag)))


def latin_coeffs(d: int) -> tuple[float, ...]:
    """Standard magnitude sequence: h_1 = 1, h_i = 1/sqrt(d) for i >= 2."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return (1.0,) + (1.0 / math.sqrt(d),) * (d - 1)


def generate(n: int, d: int, seed: int) -> LdlcCode:
    """Draw a Latin-square LDLC with h_1 = 1, h_i = 1/sqrt(d) (i >= 2).

    Overlays d support-disjoint random permutation matrices scaled by the
    magnitudes, flips each entry's sign with probability 1/2, and rescales by
    |det|^(-1/n) so the determinant has magnitude one.  Deterministic given
    seed.  A numerically singular draw is retried on the next seed substream,
    up to 10 substreams.
    """
    if not (1 <= d <= n):
        raise ValueError(f"need 1 <= d <= n, got d={d}, n={n}")
    coeffs = latin_coeffs(d)
    for rep in range(10):
        rng = np.random.default_rng((int(seed), rep))
        perms = _draw_disjoint_permutations(n, d, rng)
        rows = np.repeat(np.arange(n), d)
        cols = perms.T.reshape(-1)
        mags = np.tile(np.asarray(coeffs), n)
        signs = rng.choice((-1.0, 1.0), size=n * d)
        H0 = sp.coo_matrix((mags * signs, (rows, cols)), shape=(n, n)).tocsr()
        try:
            logdet = _log_abs_det(H0)
        except LatticeError:
            continue
        scale = math.exp(-logdet / n)
        H = (H0 * scale).tocsr()
        H.sort_indices()
        return LdlcCode(
            n=n,
            d=d,
            coeffs=coeffs,
            seed=int(seed),
            norm_scale=scale,
            parity=H,
            labels=_label_edges(H),
        )
    raise LatticeError(f"10 consecutive singular draws for n={n}, d={d}, seed={seed}")


def _label_edges(H: sp.csr_matrix) -> np.ndarray:
    """Rank each row's entries by magnitude (largest first, column order on
    ties) and return the 1-based ranks aligned with H.data."""
    n = H.shape[0]
    labels = np.empty(H.nnz, dtype=np.int64)
    for i in range(n):
        lo, hi = H.indptr[i], H.indptr[i + 1]
        mags = np.abs(H.data[lo:hi])
        order = np.argsort(-mags, kind="stable")
        labels[lo + order] = np.arange(1, hi - lo + 1)
    return labels


def encode(code: LdlcCode, b) -> np.ndarray:
    """Lattice point for integer vector b: solves H x = b (H inverse is never
    formed).  Raises LatticeError if the solve residual exceeds 1e-8."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (code.n,):
        raise ValueError(f"b must have shape ({code.n},), got {b.shape}")
    x = code.factorization().solve(b)
    residual = np.max(np.abs(code.parity @ x - b)) if code.n else 0.0
    if not np.isfinite(residual) or residual > ENCODE_RESIDUAL_TOL:
        raise LatticeError(f"encode residual {residual:.3e} exceeds {ENCODE_RESIDUAL_TOL}")
    return x


def integer_estimate(code: LdlcCode, x_tilde) -> np.ndarray:
    """Nearest integer vector round(H x~), halves rounding to even."""
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x_tilde.shape != (code.n,):
        raise ValueError(f"x_tilde must have shape ({code.n},), got {x_tilde.shape}")
    return np.rint(code.parity @ x_tilde).astype(np.int64)


def save_matrix(code: LdlcCode, path) -> None:
    """Write the text format: header `n d seed norm_scale`, then one
    `row col value` triplet per line in row-major order (%.17g values)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{code.n} {code.d} {code.seed} {code.norm_scale:.17g}\n")
        coo = code.parity.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for r, c, val in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {val:.17g}\n")


def load_matrix(path) -> LdlcCode:
    """Read the text format and validate every structural invariant:
    row/column weight d, a single magnitude multiset across all rows and
    columns, and |det H| = 1 within 1e-6."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise LatticeError(f"malformed header: {header!r}")
        n, d, seed = int(header[0]), int(header[1]), int(header[2])
        norm_scale = float(header[3])
        rows, cols, vals = [], [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise LatticeError(f"malformed triplet at line {lineno}: {line!r}")
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            vals.append(float(parts[2]))
    if len(vals) != n * d:
        raise LatticeError(f"expected {n * d} triplets, found {len(vals)}")
    H = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    H.sort_indices()
    if H.nnz != n * d:
        raise LatticeError("duplicate or colliding triplets")
    coeffs = tuple(sorted(np.abs(H.data[H.indptr[0]:H.indptr[1]]) / norm_scale, reverse=True))
    _validate_structure(H, n, d, coeffs, norm_scale)
    return LdlcCode(
        n=n,
        d=d,
        coeffs=coeffs,
        seed=seed,
        norm_scale=norm_scale,
        parity=H,
        labels=_label_edges(H),
    )


def _validate_structure(H: sp.csr_matrix, n: int, d: int,
                        coeffs: Sequence[float], norm_scale: float) -> None:
    ref = np.sort(np.asarray(coeffs))
    if len(ref) != d or np.any(ref <= 0):
        raise LatticeError(f"bad magnitude multiset {coeffs}")
    for axis, M in (("row", H), ("column", H.tocsc())):
        counts = np.diff(M.indptr)
        if np.any(counts != d):
            k = int(np.argmax(counts != d))
            raise LatticeError(f"{axis} {k} has weight {counts[k]}, expected {d}")
        for i in range(n):
            mags = np.sort(np.abs(M.data[M.indptr[i]:M.indptr[i + 1]])) / norm_scale
            if np.max(np.abs(mags - ref)) > 1e-6 * np.max(ref):
                raise LatticeError(f"{axis} {i} magnitude multiset {mags} != {ref}")
    logdet = _log_abs_det(H)
    if abs(math.exp(logdet) - 1.0) > DET_TOL:
        raise LatticeError(f"|det H| = {math.exp(logdet):.8f} differs from 1 beyond {DET_TOL}")
