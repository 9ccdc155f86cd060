"""Moreau-Yosida regularized bi-level hyperparameter solver (MY-HPO).

The bi-level problem is rewritten as a constrained split

    min_{w, lam}  L_T(w, lam) + L_V(G(lam))    s.t.  w = G(lam) = lam * phi1 + phi0

and attacked with four block updates per outer iteration:

1. descend (or minimize) the training loss in an auxiliary iterate ``v``
   and refresh the affine best response by mean-splitting ``v``;
2. descend (or minimize) the augmented training objective

       L_T(w, lam) + u.(w - G(lam)) + (rho/2) ||w - G(lam)||^2

   in ``w``, reusing the step-1 training gradient so the iteration cost
   stays at two d-dimensional gradients;
3. descend (or minimize) the augmented validation objective

       L_V(G(t)) + u.(w - G(t)) + (rho/2) ||w - G(t)||^2

   in the scalar ``t = lam``;
4. accumulate the remaining constraint violation into the consensus dual:
   ``u += rho * (w - G(lam_new))``.

The quadratic coupling turns steps 2-3 into gradient steps on
Moreau-Yosida envelopes of the two losses, which tolerates larger step
sizes than plain alternating descent on ill-conditioned problems. The
step order (v, w, lam, u) is fixed: swapping steps 2 and 3 changes the
stationary points.

Progress is measured by two residuals,

    r = w - G(lam_new)                (consensus violation)
    s = rho * (lam_new - lam_old) * phi1   (drift of the coupled variable)

and a run stops once ``max(||r||, ||s||) < eps_tol``. At a fixed point
both vanish and the iterate satisfies the stationarity system checked by
``check_stationarity`` (with dual ``u = 0``).

Variants
--------
- ``simplified_constant``: one fixed-step gradient update per block.
- ``simplified_backtracking``: same directions; each block halves its own
  step until its merit function strictly decreases (factor 0.5, capped by
  ``max_halvings``; a block that never decreases is skipped for that
  iteration). Merit re-evaluations are loss evaluations and are tracked in
  ``loss_eval_count``, never in the gradient ledger.
- ``full``: exact block minimization. Least-squares subproblems are
  closed-form linear solves; logistic ones use damped gradient descent;
  the scalar lam subproblem uses safeguarded Newton with a bisection
  bracket and a plain gradient fallback. The gradient ledger counts every
  d-dimensional derivative evaluation (gradients and Newton curvature
  forms); direct linear solves evaluate no gradients and add nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .model import (
    LEAST_SQUARES,
    _exp,
    BestResponse,
    Dataset,
    LossSpec,
    NonFiniteIterate,
    SplitDegenerate,
    best_response,
    grad_lambda_val,
    grad_w_train,
    grad_w_val,
    split_best_response,
    train_loss,
    val_loss,
)
from .trace import RunTrace, TraceRow

VARIANTS = ("simplified_constant", "simplified_backtracking", "full")

SIMPLIFIED_STEP_COST = 2  # training gradient + validation gradient


class InnerSolveFailed(RuntimeError):
    """An inner minimization exhausted its iteration cap above tolerance."""


@dataclass
class MyhpoConfig:
    rho: float = 1.0
    alpha: float = 0.05
    beta: float = 0.1
    delta: float = 0.5
    variant: str = "simplified_constant"
    max_iters: int = 1000
    eps_tol: float = 1e-10
    max_halvings: int = 30
    inner_tol: float = 1e-8
    inner_max_iters: int = 500
    fresh_w_gradient: bool = False  # ablation: re-evaluate the training gradient at w

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if min(self.alpha, self.beta, self.delta) <= 0:
            raise ValueError("step sizes must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.eps_tol <= 0:
            raise ValueError("eps_tol must be positive")
        if self.max_halvings < 1:
            raise ValueError("max_halvings must be at least 1")


@dataclass
class BlockOutcome:
    """Result of one backtracked block update."""

    step: float | None  # accepted step size, None if the block stalled or was a no-op
    merit_before: float
    merit_after: float
    evals: int
    stalled: bool


@dataclass
class MyhpoState:
    v: np.ndarray
    w: np.ndarray
    lam: float
    u: np.ndarray
    br: BestResponse | None = None
    iter: int = 0
    grad_count: int = 0
    loss_eval_count: int = 0
    stall_count: int = 0
    last_backtrack: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def initial(cls, d: int, lam0: float = -1.0) -> "MyhpoState":
        return cls(v=np.zeros(d), w=np.zeros(d), lam=lam0, u=np.zeros(d))


@dataclass
class Residuals:
    r: np.ndarray
    s: np.ndarray
    r_norm: float = field(init=False)
    s_norm: float = field(init=False)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.s = np.asarray(self.s, dtype=float)
        self.r_norm = float(np.linalg.norm(self.r))
        self.s_norm = float(np.linalg.norm(self.s))


def residuals(state_new: MyhpoState, lambda_old: float, rho: float) -> Residuals:
    """Consensus residual r and drift residual s after one iteration."""
    gw = best_response(state_new.br, state_new.lam)
    r = state_new.w - gw
    s = rho * (state_new.lam - lambda_old) * state_new.br.phi1
    return Residuals(r=r, s=s)


def _require_finite(state: MyhpoState):
    if not (
        math.isfinite(state.lam)
        and np.all(np.isfinite(state.v))
        and np.all(np.isfinite(state.w))
        and np.all(np.isfinite(state.u))
    ):
        raise NonFiniteIterate(f"non-finite iterate at iteration {state.iter}")


def _lam_direction(
    spec: LossSpec,
    br: BestResponse,
    lam: float,
    w_new: np.ndarray,
    u: np.ndarray,
    rho: float,
    val: Dataset,
) -> float:
    """Derivative in lam of the augmented validation objective at ``lam``.

    Costs one d-dimensional validation gradient (inside grad_lambda_val).
    """
    slack = w_new - best_response(br, lam)
    return (
        grad_lambda_val(spec, br, lam, val)
        - float(u @ br.phi1)
        - rho * float(br.phi1 @ slack)
    )


def my_step_simplified(
    state: MyhpoState,
    spec: LossSpec,
    train: Dataset,
    val: Dataset,
    cfg: MyhpoConfig,
) -> tuple[MyhpoState, Residuals]:
    """One constant-step iteration of the four block updates."""
    lam = state.lam
    g_t = grad_w_train(spec, state.v, lam, train)
    v_new = state.v - cfg.alpha * g_t
    br = split_best_response(v_new, lam)
    gw_old = best_response(br, lam)

    grads = SIMPLIFIED_STEP_COST
    g_for_w = g_t
    if cfg.fresh_w_gradient:
        g_for_w = grad_w_train(spec, state.w, lam, train)
        grads += 1
    w_new = state.w - cfg.beta * (g_for_w + state.u + cfg.rho * (state.w - gw_old))

    lam_new = lam - cfg.delta * _lam_direction(spec, br, lam, w_new, state.u, cfg.rho, val)
    u_new = state.u + cfg.rho * (w_new - best_response(br, lam_new))

    new = MyhpoState(
        v=v_new,
        w=w_new,
        lam=lam_new,
        u=u_new,
        br=br,
        iter=state.iter + 1,
        grad_count=state.grad_count + grads,
        loss_eval_count=state.loss_eval_count,
        stall_count=state.stall_count,
    )
    _require_finite(new)
    return new, residuals(new, lam, cfg.rho)


def _backtrack(x0, direction, step0: float, merit, max_halvings: int):
    """Halve the step until ``merit(x0 - t * direction)`` strictly decreases.

    A zero direction is already stationary for the block and returns
    immediately without evaluating the merit. If no halving produces a
    decrease the block stalls and ``x0`` is kept.
    """
    if not np.any(direction):
        return x0, BlockOutcome(step=None, merit_before=math.nan, merit_after=math.nan,
                                evals=0, stalled=False)
    m0 = merit(x0)
    evals = 1
    t = step0
    for _ in range(max_halvings + 1):
        cand = x0 - t * direction
        mc = merit(cand)
        evals += 1
        if mc < m0:
            return cand, BlockOutcome(step=t, merit_before=m0, merit_after=mc,
                                      evals=evals, stalled=False)
        t *= 0.5
    return x0, BlockOutcome(step=None, merit_before=m0, merit_after=m0,
                            evals=evals, stalled=True)


def my_step_backtracking(
    state: MyhpoState,
    spec: LossSpec,
    train: Dataset,
    val: Dataset,
    cfg: MyhpoConfig,
) -> tuple[MyhpoState, Residuals]:
    """Simplified step where each block backtracks on its own merit function.

    Merit functions are block-coordinate: the v block uses the training
    loss, the w block the augmented training objective, the lam block the
    augmented validation objective. Gradient reuse and the gradient ledger
    are identical to the constant-step variant.
    """
    lam = state.lam
    g_t = grad_w_train(spec, state.v, lam, train)
    v_new, out_v = _backtrack(
        state.v, g_t, cfg.alpha,
        lambda x: train_loss(spec, x, lam, train),
        cfg.max_halvings,
    )
    br = split_best_response(v_new, lam)
    gw_old = best_response(br, lam)

    grads = SIMPLIFIED_STEP_COST
    g_for_w = g_t
    if cfg.fresh_w_gradient:
        g_for_w = grad_w_train(spec, state.w, lam, train)
        grads += 1

    def w_merit(x):
        slack = x - gw_old
        return (
            train_loss(spec, x, lam, train)
            + float(state.u @ slack)
            + 0.5 * cfg.rho * float(slack @ slack)
        )

    w_dir = g_for_w + state.u + cfg.rho * (state.w - gw_old)
    w_new, out_w = _backtrack(state.w, w_dir, cfg.beta, w_merit, cfg.max_halvings)

    def lam_merit(t):
        gw = best_response(br, t)
        slack = w_new - gw
        return (
            val_loss(spec, gw, val)
            + float(state.u @ slack)
            + 0.5 * cfg.rho * float(slack @ slack)
        )

    lam_dir = _lam_direction(spec, br, lam, w_new, state.u, cfg.rho, val)
    lam_new, out_l = _backtrack(lam, lam_dir, cfg.delta, lam_merit, cfg.max_halvings)
    lam_new = float(lam_new)

    u_new = state.u + cfg.rho * (w_new - best_response(br, lam_new))

    outcomes = (out_v, out_w, out_l)
    new = MyhpoState(
        v=v_new,
        w=w_new,
        lam=lam_new,
        u=u_new,
        br=br,
        iter=state.iter + 1,
        grad_count=state.grad_count + grads,
        loss_eval_count=state.loss_eval_count + sum(o.evals for o in outcomes),
        stall_count=state.stall_count + sum(o.stalled for o in outcomes),
        last_backtrack=outcomes,
    )
    _require_finite(new)
    return new, residuals(new, lam, cfg.rho)


class _Ledger:
    """Counts d-dimensional derivative evaluations against an optional cap."""

    def __init__(self, cap: int | None = None):
        self.spent = 0
        self.cap = cap

    def spend(self, units: int = 1):
        self.spent += units

    @property
    def exhausted(self) -> bool:
        return self.cap is not None and self.spent >= self.cap


def _solver_cache(spec: LossSpec, train: Dataset, val: Dataset) -> dict:
    """Data-dependent quantities shared by every full-variant iteration."""
    gram = train.X.T @ train.X / train.n
    cache = {
        "gram": gram,
        "xty": train.X.T @ train.y / train.n,
        # largest eigenvalue of the fit Hessian bound, for damped steps
        "fit_lip": float(np.linalg.eigvalsh(gram)[-1]),
    }
    if spec.kind != LEAST_SQUARES:
        cache["fit_lip"] /= 4.0  # logistic curvature is at most 1/4
    return cache


def _minimize_train(spec, lam, train, x0, cfg, ledger, cache, rho=0.0, shift=None):
    """Minimize L_T(x, lam) [+ u.x + (rho/2)||x - target||^2] over x.

    ``shift`` bundles the augmentation as (u, target); least squares is a
    single linear solve, logistic runs damped gradient descent from x0.
    Returns (x, truncated_by_budget).
    """
    exp_lam = _exp(lam)
    if spec.kind == LEAST_SQUARES:
        a = cache["gram"] + (2.0 * exp_lam + rho) * np.eye(train.d)
        b = cache["xty"].copy()
        if shift is not None:
            u, target = shift
            b += rho * target - u
        return np.linalg.solve(a, b), False

    lip = cache["fit_lip"] + 2.0 * exp_lam + rho
    x = np.asarray(x0, dtype=float)
    for _ in range(cfg.inner_max_iters):
        if ledger.exhausted:
            return x, True
        g = grad_w_train(spec, x, lam, train)
        if shift is not None:
            u, target = shift
            g = g + u + rho * (x - target)
        ledger.spend(1)
        if float(np.linalg.norm(g)) <= cfg.inner_tol:
            return x, False
        x = x - g / lip
    raise InnerSolveFailed(
        f"gradient norm above {cfg.inner_tol:g} after {cfg.inner_max_iters} inner iterations"
    )


def _lam_curvature(spec, br, lam, rho, val) -> float:
    """Second derivative in lam of the augmented validation objective."""
    xphi = val.X @ br.phi1
    if spec.kind == LEAST_SQUARES:
        curv = float(xphi @ xphi) / val.n
    else:
        z = val.y * (val.X @ best_response(br, lam))
        sig = expit(z)
        curv = float((sig * (1.0 - sig)) @ (xphi * xphi)) / val.n
    return curv + rho * float(br.phi1 @ br.phi1)


def _minimize_lambda(spec, br, w_new, u, lam0, rho, val, cfg, ledger):
    """Scalar subproblem solve: safeguarded Newton on the lam derivative.

    Keeps a sign bracket for bisection whenever Newton proposes a point
    outside it; falls back to 50 plain gradient steps at delta if Newton
    stalls. Returns (lam, truncated_by_budget).
    """
    lam = float(lam0)
    lo, hi = -math.inf, math.inf
    for _ in range(50):
        if ledger.exhausted:
            return lam, True
        g = _lam_direction(spec, br, lam, w_new, u, rho, val)
        ledger.spend(1)
        if abs(g) <= cfg.inner_tol:
            return lam, False
        if g > 0:
            hi = lam
        else:
            lo = lam
        if ledger.exhausted:
            return lam, True
        curv = _lam_curvature(spec, br, lam, rho, val)
        ledger.spend(1)
        cand = lam - g / curv if curv > 1e-300 else math.nan
        if not math.isfinite(cand) or not (lo < cand < hi):
            if math.isfinite(lo) and math.isfinite(hi):
                cand = 0.5 * (lo + hi)
            else:
                break
        lam = cand
    for _ in range(50):
        if ledger.exhausted:
            return lam, True
        g = _lam_direction(spec, br, lam, w_new, u, rho, val)
        ledger.spend(1)
        if abs(g) <= cfg.inner_tol:
            return lam, False
        lam -= cfg.delta * g
    raise InnerSolveFailed(f"lam derivative above {cfg.inner_tol:g} after Newton and fallback")


def my_step_full(
    state: MyhpoState,
    spec: LossSpec,
    train: Dataset,
    val: Dataset,
    cfg: MyhpoConfig,
    grad_cap: int | None = None,
    _cache: dict | None = None,
) -> tuple[MyhpoState, Residuals, bool]:
    """One exact-minimization iteration.

    ``grad_cap`` bounds the ledger units this step may spend; inner solves
    stop early once it is hit and the returned flag reports the truncation
    so the outer loop can stop. All four blocks always execute, so a
    truncated step still leaves a consistent state.
    """
    lam = state.lam
    cache = _cache if _cache is not None else _solver_cache(spec, train, val)
    ledger = _Ledger(grad_cap)

    v_new, trunc1 = _minimize_train(spec, lam, train, state.v, cfg, ledger, cache)
    br = split_best_response(v_new, lam)
    gw_old = best_response(br, lam)

    w_new, trunc2 = _minimize_train(
        spec, lam, train, state.w, cfg, ledger, cache,
        rho=cfg.rho, shift=(state.u, gw_old),
    )
    lam_new, trunc3 = _minimize_lambda(spec, br, w_new, state.u, lam, cfg.rho, val, cfg, ledger)
    u_new = state.u + cfg.rho * (w_new - best_response(br, lam_new))

    new = MyhpoState(
        v=v_new,
        w=w_new,
        lam=lam_new,
        u=u_new,
        br=br,
        iter=state.iter + 1,
        grad_count=state.grad_count + ledger.spent,
        loss_eval_count=state.loss_eval_count,
        stall_count=state.stall_count,
    )
    _require_finite(new)
    return new, residuals(new, lam, cfg.rho), (trunc1 or trunc2 or trunc3)


def myhpo_run(
    init: MyhpoState,
    spec: LossSpec,
    train: Dataset,
    val: Dataset,
    cfg: MyhpoConfig,
    budget: int,
    test: Dataset | None = None,
    label: str | None = None,
    meta: dict | None = None,
    seed: int = 0,
) -> RunTrace:
    """Run the configured variant under a gradient budget.

    The solver itself is deterministic; ``seed`` only tags the trace header
    so runs on seeded data can be grouped downstream.

    Stops when the budget or ``cfg.max_iters`` is exhausted or the
    convergence error ``max(||r||, ||s||)`` falls below ``cfg.eps_tol``.
    Non-finite iterates mark the trace diverged; a degenerate split or a
    failed inner solve stops the run with the reason in the trace note.
    Losses are reported at the consensus iterate ``w``.
    """
    if budget < 2:
        raise ValueError("budget must be at least 2")
    solver = {
        "simplified_constant": "myhpo_c",
        "simplified_backtracking": "myhpo_bt",
        "full": "myhpo_full",
    }[cfg.variant]
    full_meta = {
        "rho": cfg.rho,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "delta": cfg.delta,
        "variant": cfg.variant,
        "max_iters": cfg.max_iters,
        "eps_tol": cfg.eps_tol,
        "max_halvings": cfg.max_halvings,
        "inner_tol": cfg.inner_tol,
        "inner_max_iters": cfg.inner_max_iters,
        "fresh_w_gradient": cfg.fresh_w_gradient,
        "budget": budget,
        "lambda0": init.lam,
    }
    full_meta.update(meta or {})
    trace = RunTrace(solver=solver, label=label or solver, seed=seed, meta=full_meta)

    full = cfg.variant == "full"
    cache = _solver_cache(spec, train, val) if full else None
    step_cost = SIMPLIFIED_STEP_COST + (1 if cfg.fresh_w_gradient else 0)
    state = init
    # blowup is detected via isfinite checks, so numpy overflow noise is expected
    with np.errstate(over="ignore", invalid="ignore"):
        while state.iter < cfg.max_iters:
            truncated = False
            try:
                if full:
                    if state.grad_count >= budget:
                        break
                    state, res, truncated = my_step_full(
                        state, spec, train, val, cfg,
                        grad_cap=budget - state.grad_count, _cache=cache,
                    )
                else:
                    if state.grad_count + step_cost > budget:
                        break
                    if cfg.variant == "simplified_backtracking":
                        state, res = my_step_backtracking(state, spec, train, val, cfg)
                    else:
                        state, res = my_step_simplified(state, spec, train, val, cfg)
            except NonFiniteIterate:
                trace.diverged = True
                break
            except (SplitDegenerate, InnerSolveFailed) as exc:
                trace.note = f"{type(exc).__name__}: {exc}"
                break
            row = TraceRow(
                iter=state.iter,
                n_grad=state.grad_count,
                lam=state.lam,
                train_loss=train_loss(spec, state.w, state.lam, train),
                val_loss=val_loss(spec, state.w, val),
                test_loss=None if test is None else val_loss(spec, state.w, test),
                r_norm=res.r_norm,
                s_norm=res.s_norm,
                u_norm=float(np.linalg.norm(state.u)),
                loss_eval_count=state.loss_eval_count,
            )
            if not (math.isfinite(row.train_loss) and math.isfinite(row.val_loss)):
                trace.diverged = True
                break
            trace.append(row)
            if max(res.r_norm, res.s_norm) < cfg.eps_tol:
                break
            if truncated:
                break
    return trace


@dataclass
class StationarityReport:
    """Residual magnitudes of the stationarity system at an iterate.

    ``train_grad_norm``    ||grad_w L_T(w, lam) + u||
    ``lam_grad_abs``       |phi1 . grad_w L_V(G(lam)) - u . phi1|
    ``consensus_gap``      ||w - G(lam)||
    ``hypernet_grad_norm`` ||(lam * g, g)|| with g = grad_w L_T(G(lam), lam)
    """

    train_grad_norm: float
    lam_grad_abs: float
    consensus_gap: float
    hypernet_grad_norm: float
    u_norm: float
    ok: bool


def check_stationarity(
    spec: LossSpec,
    w: np.ndarray,
    lam: float,
    u: np.ndarray,
    br: BestResponse,
    train: Dataset,
    val: Dataset,
    tol: float,
) -> StationarityReport:
    """Evaluate the four stationarity residuals plus ||u|| at an iterate."""
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    gw = best_response(br, lam)
    e_train = float(np.linalg.norm(grad_w_train(spec, w, lam, train) + u))
    e_lam = abs(
        grad_lambda_val(spec, br, lam, val) - float(u @ br.phi1)
    )
    e_gap = float(np.linalg.norm(w - gw))
    g_at_gw = grad_w_train(spec, gw, lam, train)
    e_phi = float(np.linalg.norm(np.concatenate([lam * g_at_gw, g_at_gw])))
    u_norm = float(np.linalg.norm(u))
    ok = max(e_train, e_lam, e_gap, e_phi, u_norm) <= tol
    return StationarityReport(
        train_grad_norm=e_train,
        lam_grad_abs=e_lam,
        consensus_gap=e_gap,
        hypernet_grad_norm=e_phi,
        u_norm=u_norm,
        ok=ok,
    )
