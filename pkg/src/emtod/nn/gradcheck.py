from __future__ import annotations

from collections.abc import Callable, Iterable

import numpy as np

from .core import ParamStore, in_any_namespace


class DeterminismError(RuntimeError):
    pass


def grad_check(
    loss_fn: Callable[[], float],
    params: ParamStore,
    eps: float = 1e-5,
    exclude: Iterable[str] = (),
    return_details: bool = False,
):
    """Compare analytic gradients with central differences.

    ``loss_fn`` runs forward and backward: it returns the scalar loss and
    accumulates gradients into ``params``. Gradients are zeroed before each
    call. Returns the worst ``|a - n| / max(|a|, |n|, 1e-8)`` over every entry
    of every parameter not under an excluded namespace.
    """
    if params.dtype != np.float64:
        raise TypeError("grad_check needs a float64 ParamStore")
    exclude = tuple(exclude)

    params.zero_grad()
    base = loss_fn()
    analytic = {n: params.grads[n].copy() for n in params.names()}
    params.zero_grad()
    again = loss_fn()
    if base != again:
        raise DeterminismError(f"loss changed between identical evaluations: {base!r} vs {again!r}")

    worst = 0.0
    details: dict[str, float] = {}
    for name in params.names():
        if in_any_namespace(name, exclude):
            continue
        p = params.params[name]
        flat = p.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        name_worst = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            params.zero_grad()
            f_plus = loss_fn()
            flat[i] = orig - eps
            params.zero_grad()
            f_minus = loss_fn()
            flat[i] = orig
            num = (f_plus - f_minus) / (2.0 * eps)
            a = a_flat[i]
            rel = abs(a - num) / max(abs(a), abs(num), 1e-8)
            name_worst = max(name_worst, rel)
        details[name] = name_worst
        worst = max(worst, name_worst)
    params.zero_grad()
    if return_details:
        return worst, details
    return worst
