"""Combinatorial search: greedy selection/rejection, swapping, and the
state-feedback actuator selector.

The swapping optimizer alternates a forced-selection subsequence (grow the
architecture, bounds shifted up by the per-subsequence budget) and a
forced-rejection subsequence (shrink back within the base bounds).  Choice
lists follow a two-priority scheme: kinds violating a bound come first and
exclusively; only when no bound is violated are ordinary moves and the
explicit no-update choice offered.  All tie-breaks are deterministic:
lowest pool index, actuators before sensors, no-update wins exact ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._lin import check_psd
from .costs import (CostParameters, LedgerEntry, active_input_cost,
                    running_cost, switching_cost)
from .network import (ArchitectureConstraints, ArchitectureSet, LinearNetworkSystem,
                      build_input_matrix, build_output_matrix, satisfies_constraints)
from .synthesis import (Diverged, GainSchedule, kalman_forward, lqr_backward,
                        solve_dare)

__all__ = [
    "Choice",
    "NO_UPDATE",
    "ForcedConstraints",
    "apply_choice",
    "change_count",
    "greedy_select",
    "greedy_reject",
    "selection_choices",
    "rejection_choices",
    "greedy_swap",
    "IdentificationResult",
    "least_squares_identify",
    "greedy_actuator_state_feedback",
]

CHOICE_KINDS = ("add_actuator", "remove_actuator", "add_sensor", "remove_sensor", "no_update")


@dataclass(frozen=True)
class Choice:
    """One candidate architecture modification (or the explicit no-update)."""

    kind: str
    index: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in CHOICE_KINDS:
            raise ValueError(f"unknown choice kind {self.kind!r}")
        if (self.kind == "no_update") != (self.index is None):
            raise ValueError("no_update carries no index; modifications require one")


NO_UPDATE = Choice("no_update")


def apply_choice(arch: ArchitectureSet, choice: Choice) -> ArchitectureSet:
    """Return the architecture with the choice applied (no_update is identity)."""
    if choice.kind == "no_update":
        return arch
    acts, sens = list(arch.actuators), list(arch.sensors)
    if choice.kind == "add_actuator":
        acts.append(choice.index)
    elif choice.kind == "remove_actuator":
        acts.remove(choice.index)
    elif choice.kind == "add_sensor":
        sens.append(choice.index)
    elif choice.kind == "remove_sensor":
        sens.remove(choice.index)
    return ArchitectureSet(actuators=acts, sensors=sens)


@dataclass(frozen=True)
class ForcedConstraints:
    """Cardinality bounds active during one subsequence.

    Selection mode shifts all four base bounds up by the subsequence budget
    so the optimizer is forced to grow past feasibility before pruning;
    rejection mode uses the base bounds unchanged.
    """

    mode: str
    base: ArchitectureConstraints
    shift: int

    def __post_init__(self) -> None:
        if self.mode not in ("selection", "rejection"):
            raise ValueError(f"mode must be selection or rejection, got {self.mode!r}")
        if self.shift < 0:
            raise ValueError("shift must be >= 0")

    @property
    def offset(self) -> int:
        return self.shift if self.mode == "selection" else 0

    @property
    def act_min(self) -> int:
        return self.base.act_min + self.offset

    @property
    def act_max(self) -> int:
        return self.base.act_max + self.offset

    @property
    def sen_min(self) -> int:
        return self.base.sen_min + self.offset

    @property
    def sen_max(self) -> int:
        return self.base.sen_max + self.offset

    def satisfies(self, arch: ArchitectureSet) -> bool:
        return (self.act_min <= len(arch.actuators) <= self.act_max
                and self.sen_min <= len(arch.sensors) <= self.sen_max)


def change_count(s1, s2) -> int:
    """Swap distance between index sets: max of the two difference cardinalities."""
    a, b = set(s1), set(s2)
    return max(len(a - b), len(b - a))


def greedy_select(choice_pool: Sequence, metric: Callable, L_max: int):
    """Grow a set from empty, adding the argmin element until |S| = L_max.

    metric maps a tuple of selected elements (in pool order) to an extended
    real; +inf marks forbidden sets.  Ties keep the earliest pool element.
    """
    if L_max > len(choice_pool):
        raise ValueError(f"L_max={L_max} exceeds pool size {len(choice_pool)}")
    selected: list = []
    while len(selected) < L_max:
        best_item, best_cost = None, math.inf
        for item in choice_pool:
            if item in selected:
                continue
            cand = tuple(x for x in choice_pool if x in selected or x == item)
            cost = metric(cand)
            if best_item is None or cost < best_cost:
                best_item, best_cost = item, cost
        selected.append(best_item)
    return tuple(x for x in choice_pool if x in selected)


def greedy_reject(choice_pool: Sequence, metric: Callable, L_max: int):
    """Shrink from the full pool, removing the argmin element until |S| = L_max."""
    if L_max > len(choice_pool):
        raise ValueError(f"L_max={L_max} exceeds pool size {len(choice_pool)}")
    selected = list(choice_pool)
    while len(selected) > L_max:
        best_item, best_cost = None, math.inf
        for item in selected:
            cand = tuple(x for x in selected if x != item)
            cost = metric(cand)
            if best_item is None or cost < best_cost:
                best_item, best_cost = item, cost
        selected.remove(best_item)
    return tuple(selected)


def selection_choices(arch: ArchitectureSet, constraints: ArchitectureConstraints,
                      num_actuators: int, num_sensors: int,
                      n_prime: int | None = None) -> list[Choice]:
    """Candidate additions for one forced-selection iteration.

    High priority: any kind below its shifted minimum returns additions for
    the deficient kinds only.  Otherwise additions are offered for kinds
    below their shifted maxima, plus no-update iff the shifted bounds hold.
    The list may be empty when a deficient kind has no inactive elements left.
    """
    if n_prime is None:
        n_prime = constraints.max_per_subsequence
    fc = ForcedConstraints("selection", constraints, n_prime)
    inactive_act = [i for i in range(num_actuators) if i not in set(arch.actuators)]
    inactive_sen = [j for j in range(num_sensors) if j not in set(arch.sensors)]
    nA, nS = len(arch.actuators), len(arch.sensors)
    choices: list[Choice] = []
    act_deficient = nA < fc.act_min
    sen_deficient = nS < fc.sen_min
    if act_deficient or sen_deficient:
        if act_deficient:
            choices += [Choice("add_actuator", i) for i in inactive_act]
        if sen_deficient:
            choices += [Choice("add_sensor", j) for j in inactive_sen]
        return choices
    if nA < fc.act_max:
        choices += [Choice("add_actuator", i) for i in inactive_act]
    if nS < fc.sen_max:
        choices += [Choice("add_sensor", j) for j in inactive_sen]
    if fc.satisfies(arch):
        choices.append(NO_UPDATE)
    return choices


def rejection_choices(arch: ArchitectureSet, constraints: ArchitectureConstraints,
                      num_actuators: int, num_sensors: int,
                      n_prime: int | None = None) -> list[Choice]:
    """Candidate removals for one forced-rejection iteration (unshifted bounds).

    High priority: any kind above its maximum returns removals for the
    violating kinds only.  Otherwise removals are offered for kinds above
    their minima, plus no-update iff the base bounds hold.
    """
    fc = ForcedConstraints("rejection", constraints, 0)
    nA, nS = len(arch.actuators), len(arch.sensors)
    choices: list[Choice] = []
    act_over = nA > fc.act_max
    sen_over = nS > fc.sen_max
    if act_over or sen_over:
        if act_over:
            choices += [Choice("remove_actuator", i) for i in arch.actuators]
        if sen_over:
            choices += [Choice("remove_sensor", j) for j in arch.sensors]
        return choices
    if nA > fc.act_min:
        choices += [Choice("remove_actuator", i) for i in arch.actuators]
    if nS > fc.sen_min:
        choices += [Choice("remove_sensor", j) for j in arch.sensors]
    if fc.satisfies(arch):
        choices.append(NO_UPDATE)
    return choices


def _swap_metric_factory(system, arch_init, x_hat, E_t, params):
    """Metric closure for greedy_swap with per-kind gain caches.

    The LQR schedule depends only on the actuator set and the Kalman
    schedule only on the sensor set, so each is cached for the duration of
    one swap call; full evaluations are memoized per architecture.

    The predicted cost is computed in its completion-of-squares form
    J = x_hat' P_0 x_hat + sum tr(P_{tau+1} W)
        + sum tr(K_tau' S_tau K_tau Sig_tau),  S_tau = B' P_{tau+1} B + R,
    where Sig_tau is the error covariance injected over the horizon only
    (Sig_0 = 0, stepped by the closed estimator loop).  This is
    algebraically identical to pricing the augmented closed loop from the
    doubled estimate, and splits the work into a per-actuator-set part, a
    per-sensor-set part, and a cheap cross term per evaluation.
    """
    A = system.A
    W = system.W
    T = params.horizon
    lqr_cache: dict[tuple, tuple] = {}
    kal_cache: dict[tuple, tuple] = {}
    full_cache: dict[tuple, tuple] = {}

    def evaluate(arch: ArchitectureSet):
        key = (arch.actuators, arch.sensors)
        hit = full_cache.get(key)
        if hit is not None:
            return hit
        lqr_part = lqr_cache.get(arch.actuators)
        if lqr_part is None:
            B = build_input_matrix(system, arch)
            R1a = active_input_cost(params, arch)
            sched = lqr_backward(A, B, params.state_cost, R1a,
                                 params.terminal_cost, T)
            S_seq = []
            const = 0.0
            for tau in range(T):
                P_next = sched.P[tau + 1]
                S_seq.append(R1a + B.T @ P_next @ B)
                const += float(np.sum(P_next * W))
            lqr_part = (sched.K, sched.P, S_seq, const)
            lqr_cache[arch.actuators] = lqr_part
        kal_part = kal_cache.get(arch.sensors)
        if kal_part is None:
            C = build_output_matrix(system, arch)
            V = system.v_var * np.eye(C.shape[0])
            sched = kalman_forward(A, C, system.W, V, E_t, T)
            # Horizon-injected error covariance: Sig_0 = 0, then the closed
            # estimator loop e+ = (A - A L C) e + w - A L v.
            sig_seq = [np.zeros((A.shape[0], A.shape[0]))]
            for tau in range(T - 1):
                AL = A @ sched.L[tau]
                Acl = A - AL @ C
                sig = Acl @ sig_seq[tau] @ Acl.T + system.W
                if system.v_var:
                    sig = sig + system.v_var * (AL @ AL.T)
                sig_seq.append(sig)
            kal_part = (sched.L, sched.E, sig_seq)
            kal_cache[arch.sensors] = kal_part
        K_seq, P_seq, S_seq, const = lqr_part
        L_seq, E_seq, sig_seq = kal_part
        cross = 0.0
        for tau in range(T):
            K = K_seq[tau]
            cross += float(np.sum((K @ sig_seq[tau] @ K.T) * S_seq[tau]))
        predicted = float(x_hat @ P_seq[0] @ x_hat) + const + cross
        gains = GainSchedule(horizon=T, K=K_seq, P=P_seq, L=L_seq, E=E_seq)
        run = running_cost(arch, params)
        switch = switching_cost(arch, arch_init, params)
        total = predicted + run + switch
        entry = LedgerEntry(predicted=predicted, running=run, switching=switch,
                            total_estimated=total)
        result = (total, entry, gains)
        full_cache[key] = result
        return result

    return evaluate


def _pick_choice(evaluate, arch: ArchitectureSet, choices: list[Choice]):
    """Argmin over a choice list; first minimizer wins except that an exact
    cost tie involving no-update resolves to no-update."""
    best = None
    for ch in choices:
        cand = apply_choice(arch, ch)
        total, entry, gains = evaluate(cand)
        if best is None or total < best[1]:
            best = (ch, total, cand, entry, gains)
        elif total == best[1] and ch.kind == "no_update":
            best = (ch, total, cand, entry, gains)
    return best


def greedy_swap(system: LinearNetworkSystem, arch_init: ArchitectureSet,
                x_hat: np.ndarray, E_t: np.ndarray, params: CostParameters,
                constraints: ArchitectureConstraints):
    """Architecture optimization by alternating forced selection and rejection.

    The metric is the total estimated cost (predicted + running + switching)
    with switching measured against arch_init, the architecture committed at
    the previous time step.  Each selection subsequence accepts at most
    2 N' changes (change_count against the subsequence entry), then a
    rejection subsequence prunes back within the base bounds.  The outer
    loop ends when a full pass makes no net change or the total change
    budget 2 N is reached (max_changes None = unbounded).  Returns
    (architecture, its ledger entry, its gain schedule).
    """
    M, Lp = system.num_actuators, system.num_sensors
    if constraints.act_max > M or constraints.sen_max > Lp:
        raise ValueError("cardinality bounds exceed pool sizes")
    if not satisfies_constraints(arch_init, constraints):
        raise ValueError("arch_init violates the base constraints")
    x_hat = np.asarray(x_hat, dtype=float)
    E_t = np.asarray(E_t, dtype=float)
    check_psd(E_t, "E_t")
    n_prime = constraints.max_per_subsequence
    N = constraints.max_changes
    evaluate = _swap_metric_factory(system, arch_init, x_hat, E_t, params)

    current = arch_init
    n_count = 0
    while N is None or n_count < 2 * N:
        pass_ref = current
        n_sel = 0
        while n_sel < 2 * n_prime:
            choices = selection_choices(current, constraints, M, Lp, n_prime)
            if not choices:
                break
            ch, _, cand, _, _ = _pick_choice(evaluate, current, choices)
            current = cand                      # applied before the no-update break
            if ch.kind == "no_update":
                break
            n_sel = (change_count(pass_ref.actuators, current.actuators)
                     + change_count(pass_ref.sensors, current.sensors))
        rej_ref = current
        n_rej = 0
        while n_rej < 2 * n_prime:
            choices = rejection_choices(current, constraints, M, Lp, n_prime)
            if not choices:
                break
            ch, _, cand, _, _ = _pick_choice(evaluate, current, choices)
            if ch.kind == "no_update":          # checked before applying
                break
            current = cand
            n_rej = (change_count(rej_ref.actuators, current.actuators)
                     + change_count(rej_ref.sensors, current.sensors))
        if (change_count(pass_ref.actuators, current.actuators)
                + change_count(pass_ref.sensors, current.sensors)) == 0:
            break
        n_count = (change_count(arch_init.actuators, current.actuators)
                   + change_count(arch_init.sensors, current.sensors))
    if not satisfies_constraints(current, constraints):
        raise AssertionError("swap returned an infeasible architecture")
    total, entry, gains = evaluate(current)
    return current, entry, gains


@dataclass(frozen=True)
class IdentificationResult:
    """Least-squares dynamics estimate with its regressor rank report."""

    A_hat: np.ndarray
    rank: int
    rank_deficient: bool


def least_squares_identify(x_hist, u_hist, input_matrices_hist) -> IdentificationResult:
    """Estimate the dynamics matrix from recorded transitions.

    Solves min_A sum_tau ||x(tau+1) - A x(tau) - B_tau u(tau)||^2 by
    least squares on the state regressor; the input contribution is moved
    to the residual target.  A rank-deficient regressor still returns the
    minimum-norm solution, flagged.
    """
    x_hist = [np.asarray(x, dtype=float) for x in x_hist]
    T = len(x_hist) - 1
    n = x_hist[0].shape[0]
    if T < n:
        raise ValueError(f"need at least n={n} transitions, got {T}")
    if len(u_hist) < T or len(input_matrices_hist) < T:
        raise ValueError("u_hist and input_matrices_hist must cover every transition")
    X = np.stack(x_hist[:T])
    Y = np.stack([x_hist[t + 1] - input_matrices_hist[t] @ np.asarray(u_hist[t], dtype=float)
                  for t in range(T)])
    sol, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    return IdentificationResult(A_hat=sol.T, rank=int(rank), rank_deficient=rank < n)


def greedy_actuator_state_feedback(system: LinearNetworkSystem, x_t: np.ndarray,
                                   Q: np.ndarray, R: np.ndarray, cardinality: int,
                                   A_hat: np.ndarray | None = None,
                                   dare_cache: dict | None = None):
    """Greedy actuator selection for state feedback; returns (arch, K, u = K x).

    Grows the actuator set one element at a time, scoring each candidate set
    by x' P x with P its infinite-horizon cost matrix (Diverged counts as
    +inf).  Ties keep the lowest index; when every candidate diverges the
    lowest index is taken anyway (the set may become stabilizable later).
    The returned gain is K = -(R + B'PB)^{-1} B'PA, i.e. u = K x directly;
    it is zero if even the final set has no finite solution.  R is the
    pool-sized input cost (M x M) or a scalar rate; dare_cache (optional)
    memoizes P across calls keyed by the actuator set.
    """
    M = system.num_actuators
    if cardinality > M:
        raise ValueError(f"cardinality {cardinality} exceeds pool size {M}")
    A = system.A if A_hat is None else np.asarray(A_hat, dtype=float)
    x_t = np.asarray(x_t, dtype=float)
    R = np.asarray(R, dtype=float)
    if R.ndim == 0:
        R = float(R) * np.eye(M)
    cache = dare_cache if dare_cache is not None else {}

    def solve_for(indices: tuple[int, ...]):
        hit = cache.get(indices)
        if hit is None:
            B = system.actuator_pool[:, list(indices)]
            Rblk = R[np.ix_(list(indices), list(indices))]
            hit = solve_dare(A, B, Q, Rblk)
            cache[indices] = hit
        return hit

    selected: list[int] = []
    while len(selected) < cardinality:
        best_i, best_cost = None, math.inf
        for s in range(M):
            if s in selected:
                continue
            P = solve_for(tuple(sorted(selected + [s])))
            cost = math.inf if isinstance(P, Diverged) else float(x_t @ P @ x_t)
            if cost < best_cost:
                best_i, best_cost = s, cost
        if best_i is None:                      # every candidate diverged
            best_i = min(s for s in range(M) if s not in selected)
        selected.append(best_i)

    arch = ArchitectureSet(actuators=selected, sensors=())
    indices = arch.actuators
    P = solve_for(indices)
    n = system.n
    B = system.actuator_pool[:, list(indices)]
    if isinstance(P, Diverged):
        K = np.zeros((len(indices), n))
    else:
        Rblk = R[np.ix_(list(indices), list(indices))]
        K = -np.linalg.solve(Rblk + B.T @ P @ B, B.T @ P @ A)
    return arch, K, K @ x_t
