"""Pure numpy implementations of the hot kernels.

Signatures mirror the compiled ``_core`` module exactly; ``uwsi.kernels``
picks one of the two at import time.
"""

from __future__ import annotations

import numpy as np


def tv_convolve(x, taps, stride, out):
    """``out[n] = sum_m taps[m, n // stride] * x[n - m]`` with zero history."""
    T = x.shape[0]
    M = taps.shape[0]
    out[:] = 0
    cols = np.arange(T) // stride
    for m in range(min(M, T)):
        row = taps[m]
        if not row.any():
            continue
        out[m:] += row[cols[m:]] * x[: T - m]
    return out


def ls_run(xp, yp, off, M, L, n0, n1, stride, P, h, tr, out, denom_tol, cond_limit):
    """Slide the least-squares window from position ``n0 - 1`` up to ``n1 - 1``.

    ``P`` is the inverse Gram matrix of the window ending at ``n0 - 1``, ``h``
    its solution and ``tr[0]`` the Gram trace; all three are updated in
    place. Each step adds the entering row ``u`` and removes the leaving row
    ``v`` with two Sherman-Morrison updates. Positions with
    ``n % stride == 0`` copy ``h`` into ``out[n // stride]``.

    Stops before touching the state when a step would be numerically unsafe
    (vanishing downdate denominator, or ``trace(G) * trace(P)`` above
    ``cond_limit``); returns how many positions were completed.
    """
    for k, n in enumerate(range(n0, n1)):
        u = np.conj(xp[off + n - M + 1 : off + n + 1][::-1])
        v = np.conj(xp[off + n - L - M + 1 : off + n - L + 1][::-1])
        w = P @ u
        z = P @ v
        alpha = 1.0 + np.vdot(u, w).real
        zp = z - w * (np.vdot(w, v) / alpha)
        beta = 1.0 - np.vdot(v, zp).real
        if not beta > denom_tol:
            return k
        tr_p = np.trace(P).real - np.vdot(w, w).real / alpha + np.vdot(zp, zp).real / beta
        tr_g = tr[0] + np.vdot(u, u).real - np.vdot(v, v).real
        if not (tr_p > 0 and tr_g * tr_p <= cond_limit):
            return k
        h += w * ((yp[off + n] - np.vdot(u, h)) / alpha)
        h += zp * ((np.vdot(v, h) - yp[off + n - L]) / beta)
        P -= np.outer(w / alpha, np.conj(w))
        P += np.outer(zp / beta, np.conj(zp))
        tr[0] = tr_g
        if n % stride == 0:
            out[n // stride] = h
    return n1 - n0
