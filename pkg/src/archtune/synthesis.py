"""Gain synthesis for a fixed architecture: LQR recursions and Kalman filtering.

All recursions follow the standard discrete-time forms.  Feedback gains use
the convention u = -K x, so riccati_step returns the positive gain
K = (B'PB + R)^{-1} B'PA.  Empty architectures degenerate cleanly: with no
actuators the gain has zero rows and the state penalty propagates open loop;
with no sensors the filter gain has zero columns and the covariance grows by
A E A' + W.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._lin import check_psd, check_symmetric, symmetrize

__all__ = [
    "Diverged",
    "DIVERGED",
    "GainSchedule",
    "riccati_step",
    "lqr_backward",
    "solve_dare",
    "kalman_step",
    "kalman_forward",
    "estimator_update",
]

DARE_TOL = 1e-10
DARE_MAX_ITER = 10_000
DARE_GUARD = 1e12


class Diverged:
    """Sentinel for a Riccati iteration that left the convergent regime.

    Consumers treat it as an infinite-cost architecture: it signals that the
    candidate actuator set cannot stabilize the plant (or that the stabilizing
    solution is beyond the overflow guard, which is the same thing for
    selection purposes).
    """

    _singleton = None

    def __new__(cls):
        if cls._singleton is None:
            cls._singleton = super().__new__(cls)
        return cls._singleton

    def __repr__(self) -> str:
        return "Diverged"


DIVERGED = Diverged()


@dataclass
class GainSchedule:
    """Time-indexed gains and value/covariance matrices over one horizon.

    K[tau], P[tau] come from the backward LQR recursion (K has length horizon,
    P has horizon+1 with P[horizon] the terminal weight).  L[tau], E[tau] come
    from the forward Kalman recursion (L has length horizon, E has horizon+1
    with E[0] the prior covariance).  Parts not synthesized are None.
    """

    horizon: int
    K: list | None = None
    P: list | None = None
    L: list | None = None
    E: list | None = None

    def validate(self) -> None:
        """Length and PSD checks; raises ValueError on violation."""
        T = self.horizon
        for name, seq, want in (("K", self.K, T), ("P", self.P, T + 1),
                                ("L", self.L, T), ("E", self.E, T + 1)):
            if seq is not None and len(seq) != want:
                raise ValueError(f"{name} must have length {want}, got {len(seq)}")
        for name, seq in (("P", self.P), ("E", self.E)):
            if seq is not None:
                for tau, M in enumerate(seq):
                    check_psd(M, f"{name}[{tau}]")


# ---------------------------------------------------------------- LQR side


def riccati_step(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
                 P_next: np.ndarray, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """One backward Riccati step; returns (K, P) for u = -K x.

    K = (B'P⁺B + R)^{-1} B'P⁺A and
    P = A'P⁺A - A'P⁺B (B'P⁺B + R)^{-1} B'P⁺A + Q, symmetrized.
    A (0-column) B yields a (0, n) gain and the open-loop update A'P⁺A + Q.
    """
    if check:
        check_psd(Q, "Q")
        check_symmetric(R, "R")
        check_psd(P_next, "P_next")
    n = A.shape[0]
    if B.shape[1] == 0:
        K = np.zeros((0, n))
        P = symmetrize(A.T @ P_next @ A + Q)
        return K, P
    PB = P_next @ B
    S = B.T @ PB + R
    G = PB.T @ A                      # B'P⁺A
    K = np.linalg.solve(S, G)
    P = symmetrize(A.T @ P_next @ A - G.T @ K + Q)
    return K, P


def lqr_backward(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
                 Q_T: np.ndarray, T: int) -> GainSchedule:
    """Finite-horizon LQR: gains K[0..T-1] and value matrices P[0..T].

    P[T] = Q_T; each earlier P comes from riccati_step.  The pair (K, P)
    prices a horizon-T quadratic rollout from any initial state as x'P[0]x.
    """
    if T < 1:
        raise ValueError("horizon must be >= 1")
    check_psd(Q, "Q")
    check_symmetric(R, "R")
    check_psd(Q_T, "Q_T")
    P = np.asarray(Q_T, dtype=float)
    Ps = [P]
    Ks: list[np.ndarray] = []
    for _ in range(T):
        K, P = riccati_step(A, B, Q, R, P, check=False)
        Ks.append(K)
        Ps.append(P)
    Ks.reverse()
    Ps.reverse()
    return GainSchedule(horizon=T, K=Ks, P=Ps)


def _dare_fixed_point(A, B, Q, R, tol, max_iter, guard):
    """Value iteration from P = Q.  Returns (last P, converged flag)."""
    P = np.asarray(Q, dtype=float)
    for _ in range(max_iter):
        _, P_next = riccati_step(A, B, Q, R, P, check=False)
        if np.linalg.norm(P_next, "fro") > guard:
            return P, False
        if np.linalg.norm(P_next - P, "fro") < tol:
            return P_next, True
        P = P_next
    return P, False


def solve_dare(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
               tol: float = DARE_TOL, max_iter: int = DARE_MAX_ITER,
               guard: float = DARE_GUARD, method: str = "auto"):
    """Stabilizing solution of the discrete algebraic Riccati equation, or DIVERGED.

    method "iterative" runs value iteration from P = Q until the Frobenius
    step drops below tol, declaring DIVERGED past the overflow guard or
    max_iter.  method "direct" calls the scipy dense solver and applies the
    same guard to the result.  The default "auto" tries the direct route
    (validating its residual) and falls back to the iteration, which keeps
    the sentinel semantics while being fast on large stabilizable systems.
    """
    check_psd(Q, "Q")
    check_symmetric(R, "R")
    if method not in ("auto", "direct", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    if method != "iterative" and B.shape[1] > 0:
        try:
            P = symmetrize(scipy.linalg.solve_discrete_are(A, B, Q, R))
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
            if method == "direct":
                raise
            P = None
        if P is not None and np.all(np.isfinite(P)):
            if np.linalg.norm(P, "fro") > guard:
                return DIVERGED
            _, P_mapped = riccati_step(A, B, Q, R, P, check=False)
            # near-unstabilizable instances legitimately carry residuals of
            # ~1e-5 relative at huge norm; only reject clearly broken output
            res = np.linalg.norm(P_mapped - P, "fro") / (1.0 + np.linalg.norm(P, "fro"))
            if res < 1e-4:
                return P
            if method == "direct":
                raise np.linalg.LinAlgError("direct DARE solution failed residual check")
        elif method == "direct":
            return DIVERGED
    P, converged = _dare_fixed_point(A, B, Q, R, tol, max_iter, guard)
    return P if converged else DIVERGED


# ------------------------------------------------------------- Kalman side


def kalman_step(A: np.ndarray, C: np.ndarray, W: np.ndarray, V: np.ndarray,
                E: np.ndarray, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """One forward Kalman step; returns (L, E_next).

    L = E C' (C E C' + V)^{-1} and
    E_next = A E A' - A E C' (C E C' + V)^{-1} C E A' + W, symmetrized.
    With no sensors the gain has zero columns and E_next = A E A' + W.
    A singular innovation covariance (possible only when V is singular)
    surfaces as a solver error.
    """
    if check:
        check_psd(W, "W")
        check_symmetric(V, "V")
        check_psd(E, "E")
    n = A.shape[0]
    if C.shape[0] == 0:
        L = np.zeros((n, 0))
        E_next = symmetrize(A @ E @ A.T + W)
        return L, E_next
    M = E @ C.T
    S = C @ M + V
    L = np.linalg.solve(S, M.T).T     # E C' S^{-1}, S symmetric
    E_next = symmetrize(A @ (E - L @ M.T) @ A.T + W)
    return L, E_next


def kalman_forward(A: np.ndarray, C: np.ndarray, W: np.ndarray, V: np.ndarray,
                   E_0: np.ndarray, T: int) -> GainSchedule:
    """Forward error-covariance recursion: gains L[0..T-1], covariances E[0..T]."""
    if T < 1:
        raise ValueError("horizon must be >= 1")
    check_psd(W, "W")
    check_symmetric(V, "V")
    check_psd(E_0, "E_0")
    E = np.asarray(E_0, dtype=float)
    Es = [E]
    Ls: list[np.ndarray] = []
    for _ in range(T):
        L, E = kalman_step(A, C, W, V, E, check=False)
        Ls.append(L)
        Es.append(E)
    return GainSchedule(horizon=T, L=Ls, E=Es)


def estimator_update(system, arch, K_0: np.ndarray, L_0: np.ndarray,
                     x_hat: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Propagate the state estimate one step under u = -K_0 x_hat.

    x_hat(t+1) = A (I - L_0 C) x_hat + A L_0 y + B u with B, C induced by
    the active architecture.
    """
    from .network import build_input_matrix, build_output_matrix

    B = build_input_matrix(system, arch)
    C = build_output_matrix(system, arch)
    y = np.asarray(y, dtype=float)
    if y.shape != (C.shape[0],):
        raise ValueError(f"y must have length {C.shape[0]}, got shape {y.shape}")
    u = -K_0 @ x_hat
    A = system.A
    return A @ (x_hat - L_0 @ (C @ x_hat)) + A @ (L_0 @ y) + B @ u
