"""Sliding-window least-squares SCIR estimation in the time domain.

For every geotime ``n`` the window ``y[n], ..., y[n-L_win+1]`` is regressed on
the transmit matrix ``X[n][r, c] = x[n - r - c]`` and the normal equations are
solved for the ``M`` taps.

Solving every window from scratch costs ``O(M^3)``. Instead the inverse Gram
matrix and the solution are carried from one window to the next with two
Sherman-Morrison updates (one row enters the window, one leaves), which is
``O(M^2)``. The
recursion restarts from a direct Cholesky solve at every multiple of
``anchor_interval`` and whenever a step fails its safety checks, so

* the result at position ``n`` depends only on ``n`` (stride-``s`` tracks are
  the stride-1 track subsampled, bit for bit);
* segments between anchors are independent and may run in parallel.

Windows whose Gram condition number exceeds ``cond_limit`` are flagged
invalid and solved with a rank-revealing least-squares routine instead.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from numpy.lib.stride_tricks import sliding_window_view

from . import fileio, kernels
from .errors import InvalidArgument, LengthMismatch
from .signal import ComplexArray, SampleBuffer

COND_LIMIT = 1e12
# bound on trace(G) * trace(P) above which the O(M^2) recursion is not trusted
RECURSION_LIMIT = 1e8
DENOM_TOL = 1e-10
DEFAULT_ANCHOR_INTERVAL = 2048

PRESETS = {
    "paper": {"channel_len": 256, "window_len": 512},
    "short-window": {"channel_len": 90, "window_len": 180},
}


@dataclass(frozen=True)
class TdEstimate:
    """``taps[m, j]`` is the delay-``m`` estimate for geotime ``j * stride``.

    ``valid[j]`` is False where the window's Gram matrix was singular to
    working precision. Columns before ``full_support_from`` (in geotime
    samples) use windows that reach back before the start of the signal.
    """

    taps: ComplexArray
    window_len: int
    stride: int
    valid: np.ndarray
    full_support_from: int

    @property
    def channel_len(self) -> int:
        return self.taps.shape[0]

    @property
    def geotime_stride(self) -> int:
        return self.stride

    @property
    def first_full_column(self) -> int:
        return -(-self.full_support_from // self.stride)

    def export(self, stem: str | os.PathLike) -> list[Path]:
        paths = fileio.write_matrix(
            stem, self.taps, kind="td_estimate", M=self.channel_len, L_win=self.window_len,
            stride=self.stride, full_support_from=self.full_support_from,
            invalid_columns=[int(j) for j in np.flatnonzero(~self.valid)],
        )
        return paths

    @classmethod
    def load(cls, stem: str | os.PathLike) -> TdEstimate:
        taps, meta = fileio.read_matrix(stem)
        valid = np.ones(taps.shape[1], dtype=bool)
        valid[np.asarray(meta.get("invalid_columns", []), dtype=int)] = False
        return cls(taps, int(meta["L_win"]), int(meta["stride"]), valid, int(meta["full_support_from"]))


def _check_sizes(L_win: int, M: int) -> None:
    if M < 1:
        raise InvalidArgument(f"channel length M must be positive, got {M}")
    if L_win < M:
        raise InvalidArgument(f"window length L_win={L_win} must be at least the channel length M={M}")


def build_design_matrix(x: SampleBuffer | np.ndarray, n: int, L_win: int, M: int) -> ComplexArray:
    """``X[r, c] = x[n - r - c]``, zero for negative indices."""
    _check_sizes(L_win, M)
    if n < 0:
        raise InvalidArgument(f"geotime index must be nonnegative, got {n}")
    xs = x.samples if isinstance(x, SampleBuffer) else np.asarray(x, dtype=np.complex128)
    idx = n - np.arange(L_win)[:, None] - np.arange(M)[None, :]
    ok = (idx >= 0) & (idx < xs.size)
    out = np.zeros((L_win, M), dtype=np.complex128)
    out[ok] = xs[idx[ok]]
    return out


def solve_ls_oracle(design: np.ndarray, y: np.ndarray) -> ComplexArray:
    """Least squares through the full SVD pseudo-inverse; a check on the main solver."""
    design = np.asarray(design, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if design.ndim != 2 or design.shape[0] < design.shape[1]:
        raise InvalidArgument("design must be L_win x M with L_win >= M")
    if y.shape != (design.shape[0],):
        raise LengthMismatch("observation vector", design.shape[0], y.shape[0] if y.ndim else 0)
    U, s, Vh = np.linalg.svd(design, full_matrices=True)
    tol = s.max(initial=0.0) * max(design.shape) * np.finfo(float).eps
    inv_s = np.where(s > tol, 1.0 / np.where(s > tol, s, 1.0), 0.0)
    k = s.size
    return Vh.conj().T @ (inv_s * (U[:, :k].conj().T @ y))


def solve_ls(design: np.ndarray, y: np.ndarray, ridge: float = 0.0,
             cond_limit: float = COND_LIMIT) -> tuple[ComplexArray, bool]:
    """Normal-equation solve of one window; returns ``(h, well_conditioned)``."""
    G = design.conj().T @ design
    if ridge:
        G = G + ridge * np.eye(G.shape[0])
    rhs = design.conj().T @ y
    P = _inverse_if_conditioned(G, cond_limit)
    if P is None:
        return _rank_revealing(design, y, ridge), False
    return P @ rhs, True


def _inverse_if_conditioned(G: np.ndarray, cond_limit: float) -> np.ndarray | None:
    """Hermitian inverse of ``G``, or None when ``G`` is singular to ``cond_limit``."""
    try:
        c = sla.cho_factor(G, lower=False, check_finite=False)
    except sla.LinAlgError:
        return None
    P = sla.cho_solve(c, np.eye(G.shape[0], dtype=G.dtype), check_finite=False)
    P = 0.5 * (P + P.conj().T)
    # trace(G) * trace(P) bounds the 2-norm condition number from above
    if np.trace(G).real * np.trace(P).real > cond_limit:
        ev = np.linalg.eigvalsh(G)
        if ev[0] <= 0 or ev[-1] / ev[0] > cond_limit:
            return None
    return P


def _gram(X: np.ndarray) -> np.ndarray:
    """``X^H X`` through a Hermitian rank-k update (half the flops of a product)."""
    G = sla.blas.zherk(1.0, np.asfortranarray(X), trans=2, lower=0)
    upper = np.triu(G)
    return upper + np.triu(upper, 1).conj().T


def _rank_revealing(design: np.ndarray, y: np.ndarray, ridge: float) -> ComplexArray:
    if not ridge:
        # identically zero columns (taps older than the signal) get zero weight
        # in the minimum-norm solution; dropping them keeps the solve small
        cols = np.flatnonzero(np.any(design != 0, axis=0))
        rows = np.flatnonzero(np.any(design != 0, axis=1) | (y != 0))
        h = np.zeros(design.shape[1], dtype=np.complex128)
        if cols.size:
            sub = design[np.ix_(rows, cols)]
            h[cols], *_ = sla.lstsq(sub, y[rows], lapack_driver="gelsy", check_finite=False)
        return h
    if ridge:
        M = design.shape[1]
        design = np.vstack([design, np.sqrt(ridge) * np.eye(M)])
        y = np.concatenate([y, np.zeros(M, dtype=y.dtype)])
    h, *_ = sla.lstsq(design, y, lapack_driver="gelsy", check_finite=False)
    return h


class _Track:
    """Shared padded inputs for one estimation run."""

    def __init__(self, x: np.ndarray, y: np.ndarray, M: int, L: int, stride: int,
                 ridge: float, cond_limit: float, impl):
        self.M, self.L, self.stride = M, L, stride
        self.ridge, self.cond_limit, self.impl = ridge, cond_limit, impl
        self.T = x.size
        self.off = L + M
        self.xp = np.concatenate([np.zeros(self.off, np.complex128), x])
        self.yp = np.concatenate([np.zeros(self.off, np.complex128), y])
        # rows of x_vec(t) = [x[t], x[t-1], ..., x[t-M+1]] for padded t
        self.xrows = sliding_window_view(self.xp, M)[:, ::-1]
        ncols = -(-self.T // stride)
        self.out = np.zeros((ncols, M), dtype=np.complex128)
        self.valid = np.ones(ncols, dtype=bool)

    def design(self, n: int) -> np.ndarray:
        # row r is x_vec(n - r); x_vec(t) starts at padded index off + t - M + 1
        start = self.off + n - self.M + 1
        return self.xrows[start - self.L + 1 : start + 1][::-1]

    def window(self, n: int) -> np.ndarray:
        return self.yp[self.off + n - self.L + 1 : self.off + n + 1][::-1]

    def direct(self, n: int):
        """Solve window ``n`` from scratch; returns the recursion state or None."""
        X = np.ascontiguousarray(self.design(n))
        yv = self.window(n)
        P = None
        if self.ridge or n >= self.M - 1:
            # before that, taps older than the signal leave all-zero columns
            G = _gram(X)
            if self.ridge:
                G += self.ridge * np.eye(self.M)
            b = X.conj().T @ yv
            P = _inverse_if_conditioned(G, self.cond_limit)
        if P is None:
            h = _rank_revealing(X, yv, self.ridge)
            state = None
        else:
            P = np.asfortranarray(P)
            h = P @ b
            tr = np.array([np.trace(G).real])
            if tr[0] * np.trace(P).real <= RECURSION_LIMIT:
                state = (P, h.copy(), tr)
            else:
                state = None
        if n % self.stride == 0:
            self.out[n // self.stride] = h
            self.valid[n // self.stride] = state is not None
        return state

    def segment(self, start: int, stop: int) -> None:
        """Fill every requested column in ``[start, stop)``, anchoring at ``start``."""
        s = self.stride
        last = ((stop - 1) // s) * s
        if last < start:
            return
        state = self.direct(start)
        n = start + 1
        while n <= last:
            if state is None:
                state = self.direct(n)
                n += 1
                continue
            P, h, tr = state
            done = self.impl.ls_run(self.xp, self.yp, self.off, self.M, self.L, n, last + 1, s,
                                    P, h, tr, self.out, DENOM_TOL, min(self.cond_limit, RECURSION_LIMIT))
            n += done
            if n <= last:
                state = self.direct(n)
                n += 1


def estimate_td(received: SampleBuffer, x: SampleBuffer, M: int, L_win: int | None = None,
                stride: int = 1, *, ridge: float = 0.0, anchor_interval: int = DEFAULT_ANCHOR_INTERVAL,
                cond_limit: float = COND_LIMIT, threads: int | None = None,
                backend: str | None = None) -> TdEstimate:
    """Per-sample (or every ``stride`` samples) LS track of the first ``M`` taps.

    ``L_win`` defaults to ``2 * M``.
    """
    if L_win is None:
        L_win = 2 * M
    _check_sizes(L_win, M)
    if stride < 1:
        raise InvalidArgument(f"stride must be positive, got {stride}")
    if anchor_interval < 1:
        raise InvalidArgument("anchor_interval must be positive")
    if ridge < 0:
        raise InvalidArgument("ridge must be nonnegative")
    if len(received) != len(x):
        raise LengthMismatch("received and transmitted buffers differ in length", len(x), len(received))
    if len(x) == 0:
        raise InvalidArgument("empty input")
    impl = kernels.backend(backend) if backend else kernels._impl
    track = _Track(x.samples, received.samples, M, L_win, stride, ridge, cond_limit, impl)
    segments = [(a, min(a + anchor_interval, track.T)) for a in range(0, track.T, anchor_interval)]
    workers = threads or kernels.thread_count()
    if workers <= 1:
        for a, b in segments:
            track.segment(a, b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda ab: track.segment(*ab), segments))
    taps = track.out.T  # (M, ncols) view, column-major
    return TdEstimate(taps, L_win, stride, track.valid, full_support_from=L_win + M - 2)
