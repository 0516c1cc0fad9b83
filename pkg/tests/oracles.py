"""Slow, obviously-correct reference implementations used only by tests."""

from __future__ import annotations

import numpy as np


def naive_dft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    K = x.size
    out = np.zeros(K, dtype=np.complex128)
    for k in range(K):
        for m in range(K):
            out[k] += x[m] * np.exp(-2j * np.pi * k * m / K)
    return out


def naive_idft(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    K = X.size
    out = np.zeros(K, dtype=np.complex128)
    for m in range(K):
        for k in range(K):
            out[m] += X[k] * np.exp(2j * np.pi * k * m / K)
    return out / K


def double_loop_convolve(x, taps) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    out = np.zeros(x.size, dtype=np.complex128)
    for n in range(x.size):
        for m in range(len(taps)):
            if n - m >= 0:
                out[n] += taps[m] * x[n - m]
    return out


def double_loop_tv_convolve(x, taps, stride=1) -> np.ndarray:
    """``out[n] = sum_m taps[m, n // stride] * x[n - m]``."""
    x = np.asarray(x, dtype=np.complex128)
    M = taps.shape[0]
    out = np.zeros(x.size, dtype=np.complex128)
    for n in range(x.size):
        col = n // stride
        for m in range(M):
            if n - m >= 0:
                out[n] += taps[m, col] * x[n - m]
    return out


def design_matrix_loop(x, n, L_win, M) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    X = np.zeros((L_win, M), dtype=np.complex128)
    for r in range(L_win):
        for c in range(M):
            i = n - r - c
            if 0 <= i < x.size:
                X[r, c] = x[i]
    return X


def rel_err(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(a - b) / scale)
