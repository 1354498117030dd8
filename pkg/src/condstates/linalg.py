"""Dense complex-matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Tensor factors
are described by a tuple of dimensions (``dims``); factor 0 is the leftmost
slot of the Kronecker product, storage is row-major.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np
import numpy.typing as npt

from condstates.errors import MalformedInputError, NotHermitianError, NotPSDError, ShapeError
from condstates.tolerances import get_tolerances

Matrix = npt.NDArray[np.complex128]
Dims = tuple[int, ...]


def as_matrix(m: npt.ArrayLike, *, square: bool = True) -> Matrix:
    """Validate and convert to a 2-d complex array (finite entries only)."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {arr.shape}")
    if arr.size == 0:
        raise ShapeError("empty matrix")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("matrix contains NaN or Inf entries")
    return arr


def check_dims(m: Matrix, dims: Sequence[int]) -> Dims:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ShapeError(f"factor dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != m.shape[0]:
        raise ShapeError(f"factor dimensions {dims} do not multiply to matrix dim {m.shape[0]}")
    return dims


def _check_factors(indices: Iterable[int], n: int) -> list[int]:
    out = []
    for i in indices:
        if not 0 <= i < n:
            raise ShapeError(f"factor index {i} out of range for {n} factors")
        out.append(int(i))
    return out


def kron(m: npt.ArrayLike, n: npt.ArrayLike) -> Matrix:
    """Kronecker product with factor order ``(m, n)``."""
    return np.kron(as_matrix(m), as_matrix(n))


def partial_trace(m: npt.ArrayLike, dims: Sequence[int], traced: Iterable[int]) -> Matrix:
    """Trace out the factors in ``traced``; remaining factors keep their order.

    Tracing every factor returns a 1x1 matrix holding the full trace.
    """
    m = as_matrix(m)
    dims = check_dims(m, dims)
    n = len(dims)
    traced_set = set(_check_factors(traced, n))
    keep = [i for i in range(n) if i not in traced_set]
    t = m.reshape(dims + dims)
    rows = list(range(n))
    cols = [i if i in traced_set else n + i for i in range(n)]
    out = np.einsum(t, rows + cols, keep + [n + i for i in keep])
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return out.reshape(d, d)


def partial_transpose(m: npt.ArrayLike, dims: Sequence[int], factor: int | Iterable[int]) -> Matrix:
    """Transpose the row/column indices of the given factor(s) only."""
    m = as_matrix(m)
    dims = check_dims(m, dims)
    n = len(dims)
    factors = _check_factors([factor] if isinstance(factor, (int, np.integer)) else factor, n)
    axes = list(range(2 * n))
    for k in factors:
        axes[k], axes[n + k] = axes[n + k], axes[k]
    return m.reshape(dims + dims).transpose(axes).reshape(m.shape)


def permute(m: npt.ArrayLike, dims: Sequence[int], order: Sequence[int]) -> Matrix:
    """Reorder tensor factors: output factor ``j`` is input factor ``order[j]``."""
    m = as_matrix(m)
    dims = check_dims(m, dims)
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ShapeError(f"{order} is not a permutation of {n} factors")
    axes = order + [n + i for i in order]
    return m.reshape(dims + dims).transpose(axes).reshape(m.shape)


def hermiticity_residual(m: npt.ArrayLike) -> float:
    m = as_matrix(m)
    return float(np.max(np.abs(m - m.conj().T)))


def herm_eig(m: npt.ArrayLike, *, tol: float | None = None) -> tuple[npt.NDArray[np.float64], Matrix]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises :class:`NotHermitianError` when ``max|m - m^dagger|`` exceeds ``tol``.
    """
    m = as_matrix(m)
    tol = get_tolerances().herm if tol is None else tol
    res = hermiticity_residual(m)
    if res > tol:
        raise NotHermitianError(res, tol)
    # LAPACK zheevd on the exactly symmetrized matrix
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w, v


def _from_spectrum(w: npt.NDArray[np.float64], v: Matrix) -> Matrix:
    return (v * w) @ v.conj().T


def psd_sqrt(m: npt.ArrayLike, *, tol: float | None = None) -> Matrix:
    """Principal square root of a PSD matrix.

    Eigenvalues slightly below zero (within the relative PSD tolerance) are
    clamped to zero; anything more negative raises :class:`NotPSDError`.
    """
    tols = get_tolerances()
    w, v = herm_eig(m)
    scale = float(np.max(np.abs(w)))
    threshold = tols.psd_threshold(scale) if tol is None else tol
    if w[0] < -threshold:
        raise NotPSDError(float(w[0]), threshold)
    return _from_spectrum(np.sqrt(np.clip(w, 0.0, None)), v)


def _support_cutoff(w: npt.NDArray[np.float64], cutoff: float | None) -> float:
    if cutoff is not None:
        return cutoff
    lam_max = float(w[-1]) if w.size else 0.0
    return get_tolerances().support * max(lam_max, 0.0)


def psd_inv_sqrt_on_support(m: npt.ArrayLike, cutoff: float | None = None) -> Matrix:
    """``m^{-1/2}`` restricted to the support of ``m``.

    Eigenvalues above ``cutoff`` (default ``1e-9 * lambda_max``) map to
    ``lambda^{-1/2}``, the rest to zero.
    """
    w, v = herm_eig(m)
    c = _support_cutoff(w, cutoff)
    on = w > c
    if not np.any(on):
        return np.zeros_like(v)
    f = np.zeros_like(w)
    f[on] = 1.0 / np.sqrt(w[on])
    return _from_spectrum(f, v)


def psd_pinv(m: npt.ArrayLike, cutoff: float | None = None) -> Matrix:
    """Moore-Penrose inverse of a PSD matrix restricted to its support."""
    w, v = herm_eig(m)
    c = _support_cutoff(w, cutoff)
    on = w > c
    f = np.zeros_like(w)
    f[on] = 1.0 / w[on]
    return _from_spectrum(f, v)


def support_projector(m: npt.ArrayLike, cutoff: float | None = None) -> Matrix:
    w, v = herm_eig(m)
    c = _support_cutoff(w, cutoff)
    sel = v[:, w > c]
    return sel @ sel.conj().T


def min_eigenvalue(m: npt.ArrayLike) -> float:
    """Smallest eigenvalue of the Hermitian part of ``m``."""
    m = as_matrix(m)
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])


def matrix_to_json(m: npt.ArrayLike) -> list[list[list[float]]]:
    """Row-major nested lists, each entry ``[re, im]``."""
    arr = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def matrix_from_json(data: object, *, square: bool = True) -> Matrix:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise MalformedInputError("matrix must be a non-empty list of rows")
    width = len(data[0])
    rows = []
    for row in data:
        if len(row) != width:
            raise MalformedInputError("matrix rows have unequal lengths")
        out = []
        for entry in row:
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                out.append(complex(entry))
            elif (
                isinstance(entry, list)
                and len(entry) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                out.append(complex(entry[0], entry[1]))
            else:
                raise MalformedInputError(f"matrix entry {entry!r} is not [re, im]")
        rows.append(out)
    try:
        return as_matrix(rows, square=square)
    except ShapeError as exc:
        raise MalformedInputError(str(exc)) from exc


def vector_from_json(data: object) -> npt.NDArray[np.complex128]:
    """A ket given as a list of ``[re, im]`` entries (bare reals accepted)."""
    if not isinstance(data, list) or not data:
        raise MalformedInputError("vector must be a non-empty list")
    return matrix_from_json([data], square=False)[0]
