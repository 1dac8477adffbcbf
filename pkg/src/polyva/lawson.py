"""Lawson's iteratively reweighted least squares on a fixed V+A basis.

Each step multiplies the weights by the absolute residuals and renormalises,
which pushes the least-squares fit toward the discrete minimax fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arnoldi import Approximant, ArnoldiBasis, _values, lstsq_qr


@dataclass
class LawsonState:
    w: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    history: list[float] = field(default_factory=list)
    weights: list[np.ndarray] = field(default_factory=list, repr=False)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.history) - 1


def weighted_solve(Q: np.ndarray, f: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``argmin || W^(1/2) (Q d - f) ||``; rows with zero weight are dropped."""
    keep = w > 0
    s = np.sqrt(w[keep])
    return lstsq_qr(Q[keep] * s[:, None], f[keep] * s)


def lawson_refine(basis: ArnoldiBasis, values, iterations: int = 10,
                  domain: dict | None = None) -> tuple[Approximant, LawsonState]:
    """Run ``iterations`` Lawson updates starting from the plain least-squares fit."""
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    f = _values(values, basis.M)
    Q = basis.Q
    w = np.full(basis.M, 1.0 / basis.M)
    d = basis.solve(f)
    r = f - Q @ d
    state = LawsonState(w.copy(), d.copy(), [float(np.max(np.abs(r)))], [w.copy()])
    for _ in range(iterations):
        wr = w * np.abs(r)
        total = wr.sum()
        if total == 0.0:
            state.converged = True
            break
        w = wr / total
        d = weighted_solve(Q, f, w)
        r = f - Q @ d
        state.history.append(float(np.max(np.abs(r))))
        state.weights.append(w.copy())
    state.w, state.d = w, d
    return basis.approximant(d, domain), state
