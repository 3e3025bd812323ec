"""Adam optimizer with bias correction, kept functional for testability."""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch


@dataclass
class OptimizerState:
    """First/second moment estimates plus hyperparameters.

    m and v mirror the parameter structure (list of dicts of arrays);
    step counts completed updates.
    """

    step: int
    learning_rate: float
    beta1: float
    beta2: float
    epsilon: float
    m: list
    v: list


def init_optimizer_state(params, learning_rate=1e-4, beta1=0.9, beta2=0.999,
                         epsilon=1e-8):
    zeros = lambda: [{k: np.zeros_like(v) for k, v in p.items()} for p in params]
    return OptimizerState(
        step=0,
        learning_rate=float(learning_rate),
        beta1=float(beta1),
        beta2=float(beta2),
        epsilon=float(epsilon),
        m=zeros(),
        v=zeros(),
    )


def adam_step(params, grads, state):
    """One bias-corrected update; returns (new_params, new_state).

    theta -= lr * mhat / (sqrt(vhat) + eps), with mhat/vhat the
    bias-corrected moment estimates. Inputs are not modified.
    """
    if len(grads) != len(params):
        raise ShapeMismatch(f"{len(grads)} gradient entries for {len(params)} parameters")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if set(p) != set(g):
            raise ShapeMismatch("gradient structure does not match parameters")
        np_, nm, nv = {}, {}, {}
        for k in p:
            if p[k].shape != g[k].shape:
                raise ShapeMismatch(
                    f"gradient shape {g[k].shape} does not match parameter {p[k].shape}"
                )
            gk = g[k].astype(p[k].dtype, copy=False)
            nm[k] = b1 * m[k] + (1.0 - b1) * gk
            nv[k] = b2 * v[k] + (1.0 - b2) * gk * gk
            mhat = nm[k] / c1
            vhat = nv[k] / c2
            np_[k] = p[k] - state.learning_rate * mhat / (np.sqrt(vhat) + state.epsilon)
        new_params.append(np_)
        new_m.append(nm)
        new_v.append(nv)
    new_state = OptimizerState(
        step=t,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
        m=new_m,
        v=new_v,
    )
    return new_params, new_state
