"""Spatially weighted sparse coding against an exemplar dictionary.

Per query patch, a weight vector ``w`` grows with the distance between
the query location and each atom's location, so distant atoms pay a
higher sparsity (or ridge) price.  Two routes produce codes:

* an iterative proximal-gradient solver for
  ``0.5 ||x - D a||^2 + 0.5 lambda2 ||diag(w) a||^2 + lambda1 ||diag(w) a||_1``,
* closed-form shrinkage coders built on the dictionary pseudo-inverse
  ``Omega = (D^T D)^-1 D^T``:

  - ``saco1``: soft-threshold ``Omega x`` per-coordinate by ``lambda1 * w_i``;
    exactly optimal for the proxy objective
    ``0.5 ||Omega x - a||^2 + lambda1 ||diag(w) a||_1``.
  - ``saco2``: ridge pre-solve ``u = (D^T D + lambda2 diag(w)^2)^-1 D^T x``
    followed by a uniform soft-threshold at ``lambda1``.

With an orthonormal dictionary the proxy objective coincides with the
reconstruction objective, so ``saco1`` and the iterative solver agree.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data import Dictionary
from .errors import InvalidConfigError, InvalidInputError, LinearSolveError

CONDITION_WARN_THRESHOLD = 1e8

WEIGHT_KERNELS = ("linear", "one-minus-gaussian")


@dataclass(frozen=True)
class SpatialWeightConfig:
    """Distance-to-weight kernel for query/atom location pairs."""

    kernel: str = "linear"
    epsilon: float = 0.1
    scale: float = 0.5

    def __post_init__(self):
        if self.kernel not in WEIGHT_KERNELS:
            raise InvalidConfigError(f"unknown weight kernel '{self.kernel}'")
        if self.scale <= 0:
            raise InvalidConfigError(f"weight scale must be > 0, got {self.scale}")
        if self.epsilon < 0:
            raise InvalidConfigError(f"weight epsilon must be >= 0, got {self.epsilon}")


def spatial_weights(query_coord, dictionary: Dictionary, config: SpatialWeightConfig) -> np.ndarray:
    """Per-atom weights from the query's distance to each atom location."""
    q = np.asarray(query_coord, dtype=np.float64)
    if q.shape != (2,):
        raise InvalidInputError(f"query coord must have shape (2,), got {q.shape}")
    d = np.linalg.norm(dictionary.atom_coords - q, axis=1)
    if config.kernel == "linear":
        return config.epsilon + d / config.scale
    return config.epsilon + 1.0 - np.exp(-(d * d) / (2.0 * config.scale * config.scale))


def soft_threshold(u, thresh):
    """Elementwise shrinkage: sign(u) * max(0, |u| - thresh)."""
    return np.sign(u) * np.maximum(0.0, np.abs(u) - thresh)


@dataclass
class Coder:
    """A dictionary with its pseudo-inverse and coding hyperparameters."""

    dictionary: Dictionary
    omega: np.ndarray
    lambda1: float
    lambda2: float
    sigma_lower: float
    condition: float

    @classmethod
    def build(cls, dictionary: Dictionary, lambda1: float, lambda2: float = 0.0) -> "Coder":
        """Factor D once and derive Omega via QR (no explicit inverse).

        Requires at least as many feature dimensions as atoms; warns
        when cond(D^T D) exceeds 1e8 and fails on rank deficiency.
        """
        if lambda1 < 0 or lambda2 < 0:
            raise InvalidInputError(f"lambda1/lambda2 must be >= 0, got {lambda1}, {lambda2}")
        D = dictionary.matrix
        p, m = D.shape
        if p < m:
            raise InvalidInputError(
                f"dictionary must be under-complete: feature dim {p} < {m} atoms"
            )
        svals = scipy.linalg.svdvals(D)
        if svals[-1] <= 0 or not np.isfinite(svals[-1]):
            raise LinearSolveError(
                f"rank-deficient dictionary, condition estimate inf (singular values "
                f"{svals[0]:.3e}..{svals[-1]:.3e})"
            )
        condition = float((svals[0] / svals[-1]) ** 2)
        if condition > CONDITION_WARN_THRESHOLD:
            warnings.warn(
                f"ill-conditioned dictionary: cond(D^T D) ~= {condition:.3e}",
                RuntimeWarning,
                stacklevel=2,
            )
        q, r = np.linalg.qr(D, mode="reduced")
        omega = scipy.linalg.solve_triangular(r, q.T)
        # Smallest singular value of Omega as an operator on R^p: zero
        # whenever p > m (the residual space has a null direction), else
        # the smallest of the m singular values.
        sigma_lower = 0.0 if p > m else float(scipy.linalg.svdvals(omega)[-1])
        return cls(dictionary, omega, float(lambda1), float(lambda2), sigma_lower, condition)


def _check_query(x, dictionary):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dictionary.feature_dim,):
        raise InvalidInputError(
            f"query dim {x.shape} does not match feature dim ({dictionary.feature_dim},)"
        )
    return x


def _check_weights(w, n_atoms):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n_atoms,):
        raise InvalidInputError(f"weight dim {w.shape} does not match {n_atoms} atoms")
    if np.any(w < 0):
        raise InvalidInputError("negative spatial weight")
    return w


def saco1(x, coder: Coder, w) -> np.ndarray:
    """Per-coordinate shrinkage of Omega x with thresholds lambda1 * w."""
    x = _check_query(x, coder.dictionary)
    w = _check_weights(w, coder.dictionary.n_atoms)
    u = coder.omega @ x
    return soft_threshold(u, coder.lambda1 * w)


def saco2(x, dictionary: Dictionary, w, lambda1: float, lambda2: float) -> np.ndarray:
    """Weighted ridge pre-solve, then a uniform shrinkage at lambda1."""
    x = _check_query(x, dictionary)
    w = _check_weights(w, dictionary.n_atoms)
    if lambda1 < 0 or lambda2 < 0:
        raise InvalidInputError(f"lambda1/lambda2 must be >= 0, got {lambda1}, {lambda2}")
    A = dictionary.gram() + lambda2 * np.diag(w * w)
    rhs = dictionary.matrix.T @ x
    try:
        u = scipy.linalg.solve(A, rhs, assume_a="pos")
    except scipy.linalg.LinAlgError as exc:
        raise LinearSolveError(
            f"ridge system singular, condition estimate {np.linalg.cond(A):.3e}"
        ) from exc
    if not np.all(np.isfinite(u)):
        raise LinearSolveError(
            f"ridge solve produced non-finite values, condition estimate {np.linalg.cond(A):.3e}"
        )
    return soft_threshold(u, lambda1)


def bound_check(x, a, coder: Coder):
    """Return (||Omega(x - Da)||, sigma_lower(Omega) * ||x - Da||).

    The first never falls below the second: for a square dictionary the
    smallest singular value of Omega is a genuine lower bound on its
    gain, and for p > m the factor is zero because residuals orthogonal
    to the atom span are annihilated by Omega.
    """
    x = _check_query(x, coder.dictionary)
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (coder.dictionary.n_atoms,):
        raise InvalidInputError(f"code dim {a.shape} does not match atom count")
    r = x - coder.dictionary.matrix @ a
    lhs = float(np.linalg.norm(coder.omega @ r))
    rhs = float(coder.sigma_lower * np.linalg.norm(r))
    return lhs, rhs


@dataclass
class CodeResult:
    """Iterative solver output with convergence diagnostics."""

    coeffs: np.ndarray
    converged: bool
    iterations: int
    kkt_residual: float
    objective: float
    objective_history: list[float] | None = None


def _weighted_objective(x, D, a, w, lambda1, lambda2) -> float:
    r = x - D @ a
    wa = w * a
    return float(
        0.5 * r @ r + 0.5 * lambda2 * (wa @ wa) + lambda1 * np.abs(wa).sum()
    )


def _kkt_residual(x, D, a, w, lambda1, lambda2) -> float:
    """Infinity norm of the optimality-condition violation."""
    grad = D.T @ (D @ a - x) + lambda2 * (w * w) * a
    thresh = lambda1 * w
    on = a != 0
    res_on = np.abs(grad[on] + thresh[on] * np.sign(a[on]))
    res_off = np.maximum(0.0, np.abs(grad[~on]) - thresh[~on])
    pieces = np.concatenate([res_on, res_off])
    return float(pieces.max()) if pieces.size else 0.0


def _ista(x, dictionary, w, lambda1, lambda2, tol, max_iter, track_objective) -> CodeResult:
    x = _check_query(x, dictionary)
    w = _check_weights(w, dictionary.n_atoms)
    if lambda1 < 0 or lambda2 < 0:
        raise InvalidInputError(f"lambda1/lambda2 must be >= 0, got {lambda1}, {lambda2}")
    if tol <= 0 or max_iter < 1:
        raise InvalidInputError(f"bad solver settings tol={tol}, max_iter={max_iter}")
    D = dictionary.matrix
    m = dictionary.n_atoms
    quad = dictionary.gram() + (lambda2 * np.diag(w * w) if lambda2 > 0 else 0.0)
    quad = np.asarray(quad)
    lip = float(np.linalg.eigvalsh(quad)[-1])
    a = np.zeros(m)
    dtx = D.T @ x
    if lip <= 0:
        # all-zero dictionary: nothing to fit, a = 0 is optimal
        return CodeResult(a, True, 0, _kkt_residual(x, D, a, w, lambda1, lambda2),
                          _weighted_objective(x, D, a, w, lambda1, lambda2),
                          [0.0] if track_objective else None)
    step = 1.0 / lip
    thresh = step * lambda1 * w
    history = [_weighted_objective(x, D, a, w, lambda1, lambda2)] if track_objective else None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = quad @ a - dtx
        a_next = soft_threshold(a - step * grad, thresh)
        delta = float(np.max(np.abs(a_next - a))) if m else 0.0
        a = a_next
        if track_objective:
            history.append(_weighted_objective(x, D, a, w, lambda1, lambda2))
        if delta < tol:
            converged = True
            break
    return CodeResult(
        coeffs=a,
        converged=converged,
        iterations=it,
        kkt_residual=_kkt_residual(x, D, a, w, lambda1, lambda2),
        objective=_weighted_objective(x, D, a, w, lambda1, lambda2),
        objective_history=history,
    )


def solve_weighted_l1(x, dictionary, w, lambda1, tol=1e-6, max_iter=1000,
                      track_objective=False) -> CodeResult:
    """Proximal gradient for 0.5||x - Da||^2 + lambda1 ||diag(w) a||_1.

    Step size 1/sigma_max(D^T D); each iteration soft-thresholds the
    gradient step coordinatewise at lambda1 * w_i * step.
    """
    return _ista(x, dictionary, w, lambda1, 0.0, tol, max_iter, track_objective)


def solve_weighted_l2_l1(x, dictionary, w, lambda1, lambda2, tol=1e-6, max_iter=1000,
                         track_objective=False) -> CodeResult:
    """Adds 0.5 * lambda2 ||diag(w) a||^2 to the smooth part.

    With lambda2 = 0 this is exactly ``solve_weighted_l1``.
    """
    return _ista(x, dictionary, w, lambda1, lambda2, tol, max_iter, track_objective)


def grid_weights(dictionary: Dictionary, config: SpatialWeightConfig, n_rows: int, n_cols: int) -> np.ndarray:
    """Spatial weights for every cell center of an (n_rows, n_cols) grid.

    Cell (r, c) maps to the normalized coordinate
    ((c + 0.5)/n_cols, (r + 0.5)/n_rows).
    """
    if n_rows < 1 or n_cols < 1:
        raise InvalidInputError(f"grid must be non-empty, got {n_rows}x{n_cols}")
    out = np.empty((n_rows, n_cols, dictionary.n_atoms))
    for r in range(n_rows):
        for c in range(n_cols):
            out[r, c] = spatial_weights(
                ((c + 0.5) / n_cols, (r + 0.5) / n_rows), dictionary, config
            )
    return out


def dense_saco1(feature_map, coder: Coder, weight_field) -> np.ndarray:
    """saco1 applied to every cell of an (H, W, p) feature map.

    ``weight_field`` is an (H, W, m) array of per-cell atom weights
    (see ``grid_weights``).  Each cell's code equals ``saco1`` on that
    cell's feature vector exactly: the per-cell correlation with Omega
    and the shrinkage use the same arithmetic as the per-patch path.
    """
    fmap = np.asarray(feature_map, dtype=np.float64)
    if fmap.ndim != 3:
        raise InvalidInputError(f"feature map must be (H, W, p), got {fmap.shape}")
    h, wid, p = fmap.shape
    m = coder.dictionary.n_atoms
    if p != coder.dictionary.feature_dim:
        raise InvalidInputError(
            f"feature map depth {p} does not match feature dim {coder.dictionary.feature_dim}"
        )
    wf = np.asarray(weight_field, dtype=np.float64)
    if wf.shape != (h, wid, m):
        raise InvalidInputError(f"weight field {wf.shape} does not match ({h}, {wid}, {m})")
    if np.any(wf < 0):
        raise InvalidInputError("negative spatial weight")
    u = np.empty((h, wid, m))
    for r in range(h):
        for c in range(wid):
            u[r, c] = coder.omega @ fmap[r, c]
    return soft_threshold(u, coder.lambda1 * wf)
