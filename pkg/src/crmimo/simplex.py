"""Phase-1 simplex feasibility test for A x <= b, x >= 0.

Dense tableau with artificial variables for rows whose slack cannot
start basic, Bland's rule throughout (no cycling), no Big-M constants.
Only feasibility is decided; any basic feasible point is acceptable.
The systems solved here are small (tens of rows and columns).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FeasibilityResult", "SimplexError", "find_feasible", "PIVOT_TOL", "FEAS_TOL"]

PIVOT_TOL = 1e-12
FEAS_TOL = 1e-9


class SimplexError(RuntimeError):
    """Raised when the pivot loop exceeds its iteration budget."""


@dataclass(frozen=True)
class FeasibilityResult:
    """Verdict of the phase-1 solve.

    Attributes:
        feasible: whether A x <= b, x >= 0 admits a solution.
        x: the returned point; a feasible point when feasible, otherwise
            the phase-1 optimum (the point of minimum total violation).
        residual: optimal phase-1 objective (total remaining violation).
        row_violation: per-row max(A x - b, 0) at the returned point.
    """

    feasible: bool
    x: np.ndarray
    residual: float
    row_violation: np.ndarray


def find_feasible(a, b, max_iter=None) -> FeasibilityResult:
    """Decide feasibility of A x <= b with x >= 0.

    Args:
        a: (m, n) constraint matrix.
        b: (m,) right hand side, any signs.
        max_iter: pivot budget, default 50 * (m + n + 1).

    Returns:
        FeasibilityResult; feasible iff the phase-1 optimum is below
        FEAS_TOL.

    Raises:
        SimplexError: if the pivot budget is exhausted (should not
            happen with Bland's rule on well-posed input).
        ValueError: on shape mismatch or non-finite input.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("constraints must be finite")
    m, n = a.shape
    if max_iter is None:
        max_iter = 50 * (m + n + 1)

    # rows with b < 0 are flipped so every right hand side is nonnegative;
    # their slack then enters with -1 and an artificial variable starts basic
    flip = b < 0
    sign = np.where(flip, -1.0, 1.0)
    art_rows = np.flatnonzero(flip)
    n_art = art_rows.size

    # tableau columns: x (n) | slacks (m) | artificials (n_art) | rhs
    width = n + m + n_art + 1
    tab = np.zeros((m + 1, width))
    tab[:m, :n] = a * sign[:, None]
    tab[:m, n:n + m] = np.diag(sign)
    for j, i in enumerate(art_rows):
        tab[i, n + m + j] = 1.0
    tab[:m, -1] = b * sign

    basis = np.empty(m, dtype=int)
    basis[~flip] = n + np.flatnonzero(~flip)
    basis[flip] = n + m + np.arange(n_art)

    # objective: minimize the sum of artificials; expressed in reduced form
    # by subtracting every artificial row from the cost row
    tab[m, :] = 0.0
    tab[m, n + m:n + m + n_art] = 1.0
    for i in art_rows:
        tab[m, :] -= tab[i, :]

    for _ in range(max_iter):
        costs = tab[m, :width - 1]
        negative = np.flatnonzero(costs < -PIVOT_TOL)
        if negative.size == 0:
            break
        col = negative[0]  # Bland: lowest index
        ratios = np.full(m, np.inf)
        positive = tab[:m, col] > PIVOT_TOL
        ratios[positive] = tab[:m, -1][positive] / tab[:m, col][positive]
        best = ratios.min()
        if not np.isfinite(best):
            # cost column unbounded below cannot happen in phase 1
            raise SimplexError("phase-1 objective unbounded, input is malformed")
        candidates = np.flatnonzero(ratios <= best + PIVOT_TOL)
        row = candidates[np.argmin(basis[candidates])]  # Bland: lowest basis index
        piv = tab[row, col]
        tab[row, :] /= piv
        other = np.arange(m + 1) != row
        tab[other, :] -= np.outer(tab[other, col], tab[row, :])
        basis[row] = col
    else:
        raise SimplexError(f"no convergence within {max_iter} pivots")

    residual = -tab[m, -1]  # objective value (cost row holds its negative)
    x = np.zeros(n)
    in_x = basis < n
    x[basis[in_x]] = tab[:m, -1][in_x]
    np.clip(x, 0.0, None, out=x)
    violation = np.maximum(a @ x - b, 0.0)
    return FeasibilityResult(
        feasible=bool(residual <= FEAS_TOL),
        x=x,
        residual=float(max(residual, 0.0)),
        row_violation=violation,
    )
