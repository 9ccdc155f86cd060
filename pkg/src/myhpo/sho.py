"""Alternating-gradient baseline with stochastic hyperparameter perturbation (SHO).

One outer iteration perturbs the hyperparameter with Gaussian noise,
descends the training loss through the hypernetwork parameters at the
perturbed value, then descends the validation loss through the
hyperparameter at the unperturbed value::

    lam_hat = lam + sigma * z,   z ~ N(0, 1)
    g       = grad_w L_T(G(lam_hat), lam_hat)
    phi1   -= alpha * lam_hat * g        # chain rule: d G / d phi1 = lam_hat * I
    phi0   -= alpha * g                  #             d G / d phi0 = I
    lam    -= beta * phi1 . grad_w L_V(G(lam))

The two block updates run in sequence (the lam update sees the fresh phi),
and each iteration costs exactly two d-dimensional gradient evaluations,
so ``grad_count == 2 * iter`` always holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BestResponse,
    Dataset,
    LossSpec,
    NonFiniteIterate,
    best_response,
    grad_lambda_val,
    grad_w_train,
    train_loss,
    val_loss,
)
from .rng import PRNG_ID, RandomStream
from .trace import RunTrace, TraceRow


@dataclass
class ShoConfig:
    """Step sizes and perturbation scale for the alternating-gradient loop.

    ``alpha`` and ``beta`` of zero are accepted so degenerate no-op runs can
    be used as diagnostics.
    """

    alpha: float = 0.01
    beta: float = 0.01
    sigma: float = 1e-4
    max_iters: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("step sizes must be nonnegative")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class ShoState:
    br: BestResponse
    lam: float
    iter: int = 0
    grad_count: int = 0

    @classmethod
    def initial(cls, d: int, lam0: float = -1.0) -> "ShoState":
        return cls(br=BestResponse(np.zeros(d), np.zeros(d)), lam=lam0)


def _require_finite(state: ShoState):
    if not (
        math.isfinite(state.lam)
        and np.all(np.isfinite(state.br.phi1))
        and np.all(np.isfinite(state.br.phi0))
    ):
        raise NonFiniteIterate(f"non-finite iterate at iteration {state.iter}")


def sho_step(
    state: ShoState,
    spec: LossSpec,
    train: Dataset,
    val: Dataset,
    cfg: ShoConfig,
    rng: RandomStream,
) -> ShoState:
    """One alternating-gradient iteration; raises NonFiniteIterate on blowup."""
    lam_hat = state.lam + cfg.sigma * rng.normal()
    g = grad_w_train(spec, best_response(state.br, lam_hat), lam_hat, train)
    br_new = BestResponse(
        phi1=state.br.phi1 - cfg.alpha * lam_hat * g,
        phi0=state.br.phi0 - cfg.alpha * g,
    )
    lam_new = state.lam - cfg.beta * grad_lambda_val(spec, br_new, state.lam, val)
    new = ShoState(
        br=br_new,
        lam=lam_new,
        iter=state.iter + 1,
        grad_count=state.grad_count + 2,
    )
    _require_finite(new)
    return new


def sho_run(
    init: ShoState,
    spec: LossSpec,
    train: Dataset,
    val: Dataset,
    cfg: ShoConfig,
    budget: int,
    test: Dataset | None = None,
    label: str = "sho",
    meta: dict | None = None,
) -> RunTrace:
    """Iterate ``sho_step`` under a gradient budget and record a trace.

    Stops when another iteration would exceed ``budget`` gradient
    evaluations or ``cfg.max_iters`` is reached. A non-finite iterate or
    loss marks the trace diverged and keeps the rows recorded so far.
    """
    if budget < 2:
        raise ValueError("budget must be at least 2")
    full_meta = {
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "sigma": cfg.sigma,
        "max_iters": cfg.max_iters,
        "budget": budget,
        "lambda0": init.lam,
    }
    full_meta.update(meta or {})
    trace = RunTrace(solver="sho", label=label, seed=cfg.seed, meta=full_meta, prng=PRNG_ID)
    rng = RandomStream(cfg.seed)
    state = init
    # blowup is detected via isfinite checks, so numpy overflow noise is expected
    with np.errstate(over="ignore", invalid="ignore"):
        while state.grad_count + 2 <= budget and state.iter < cfg.max_iters:
            try:
                state = sho_step(state, spec, train, val, cfg, rng)
            except NonFiniteIterate:
                trace.diverged = True
                break
            w = best_response(state.br, state.lam)
            row = TraceRow(
                iter=state.iter,
                n_grad=state.grad_count,
                lam=state.lam,
                train_loss=train_loss(spec, w, state.lam, train),
                val_loss=val_loss(spec, w, val),
                test_loss=None if test is None else val_loss(spec, w, test),
            )
            if not (math.isfinite(row.train_loss) and math.isfinite(row.val_loss)):
                trace.diverged = True
                break
            trace.append(row)
    return trace
