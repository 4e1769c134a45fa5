"""Pure-numpy chain backend, vectorized across a block of chains.

Each chain owns a counter-based bit generator and consumes its noise stream in
the fixed layout (one perturbation vector up front, then per step one
perturbation vector followed by one diffusion vector), so results are
bit-identical to the compiled per-chain kernel for pow-free potentials and
independent of how chains are grouped into blocks.
"""

from __future__ import annotations

import math

import numpy as np

LMC, PLMC, SLMC, LMC_MATCHED = 0, 1, 2, 3

NORM_LIMIT_SQ = 1.0e24  # divergence guard: squared norm above (1e12)^2


def run_block(grad_fn, variant: int, eta: float, mu: float, K: int,
              x0: np.ndarray, dyn_bitgens, record_every: int):
    """Advance a block of chains K steps; returns (finals, records, abort).

    ``abort[i]`` is the first step at which chain i left the finite ball, or
    -1.  ``records`` is None unless ``record_every > 0``.
    """
    B, d = x0.shape
    gens = [np.random.Generator(bg) for bg in dyn_bitgens]
    y = np.array(x0, dtype=np.float64, copy=True)
    use_omega = variant != LMC
    perturb = variant in (PLMC, SLMC)
    c = math.sqrt(2.0 * eta)
    abort = np.full(B, -1, dtype=np.int64)

    records = None
    if record_every > 0:
        records = np.empty((B, K // record_every + 1, d), dtype=np.float64)
        records[:, 0, :] = y

    omega = None
    if use_omega:
        omega = np.stack([g.standard_normal(d) for g in gens])

    per = 2 * d if use_omega else d
    window = max(8, 512 // d)
    done = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while done < K:
            w = min(window, K - done)
            noise = np.empty((B, w, per), dtype=np.float64)
            for i, g in enumerate(gens):
                noise[i] = g.standard_normal(w * per).reshape(w, per)
            for t in range(w):
                k = done + t
                q = y + mu * omega if perturb else y
                grad = grad_fn(q)
                step_noise = noise[:, t, :]
                if use_omega:
                    omega = step_noise[:, :d]
                    xi = step_noise[:, d:]
                else:
                    xi = step_noise
                base = q if variant == SLMC else y
                y = (base - eta * grad) + c * xi
                bad = (~np.isfinite(y).all(axis=1)
                       | (np.einsum("ij,ij->i", y, y) > NORM_LIMIT_SQ))
                if bad.any():
                    newly = bad & (abort < 0)
                    abort[newly] = k
                if records is not None and (k + 1) % record_every == 0:
                    records[:, (k + 1) // record_every, :] = y
            done += w
    return y, records, abort
