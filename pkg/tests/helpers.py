"""Shared test oracles: finite-difference gradient checking."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from wflab.autodiff import Tensor, backward


def finite_diff_check(
    build_loss: Callable[[], Tensor],
    leaves: Sequence[Tensor],
    rel_tol: float = 1e-4,
    step: float = 1e-5,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
    abs_floor: float = 1e-8,
) -> float:
    """Compare analytic gradients against central finite differences.

    build_loss must rebuild the graph from the leaves' current data on every
    call. Returns the worst relative error seen; asserts it is under rel_tol.
    A coordinate passes if |analytic - numeric| <= rel_tol * max(|a|, |n|) + abs_floor.
    """
    loss = build_loss()
    backward(loss)
    analytic = [leaf.grad.copy() if leaf.grad is not None else np.zeros_like(leaf.data) for leaf in leaves]
    for leaf in leaves:
        leaf.grad = None

    worst = 0.0
    rng = rng or np.random.default_rng(0)
    for leaf, grad in zip(leaves, analytic):
        flat = leaf.data.reshape(-1)
        n = flat.size
        if max_coords is not None and n > max_coords:
            coords = rng.choice(n, size=max_coords, replace=False)
        else:
            coords = np.arange(n)
        for c in coords:
            original = flat[c]
            flat[c] = original + step
            up = float(build_loss().data)
            flat[c] = original - step
            down = float(build_loss().data)
            flat[c] = original
            numeric = (up - down) / (2.0 * step)
            a = grad.reshape(-1)[c]
            err = abs(a - numeric)
            bound = rel_tol * max(abs(a), abs(numeric)) + abs_floor
            assert err <= bound, (
                f"gradient mismatch at coord {c}: analytic {a!r} vs numeric {numeric!r} "
                f"(err {err:.3e}, bound {bound:.3e})"
            )
            denom = max(abs(a), abs(numeric), 1e-12)
            worst = max(worst, err / denom)
    return worst
