"""Brute-force reference implementations written straight from the
definitions. Nothing here imports ``reyesi``; the library is checked
against these, never the other way round."""

import itertools
import math

import numpy as np


def closure(x):
    x = np.asarray(x, dtype=float)
    return x / x.sum(axis=-1, keepdims=True)


def inner_double_sum(x, y):
    """(1/2D) sum_i sum_j ln(x_i/x_j) ln(y_i/y_j), by explicit loops."""
    D = len(x)
    total = 0.0
    for i in range(D):
        for j in range(D):
            total += math.log(x[i] / x[j]) * math.log(y[i] / y[j])
    return total / (2 * D)


def geometric_mean_center(X):
    """z_i = C(x_i / g) with g the part-wise geometric mean."""
    X = closure(X)
    g = np.exp(np.log(X).mean(axis=0))
    return closure(X / g)


def reyes_i_naive(X, W):
    """n/S0 * sum_ij w_ij <z_i, z_j>_a / sum_k ||z_k||_a^2, from scratch."""
    W = np.asarray(W, dtype=float)
    Z = geometric_mean_center(X)
    n = len(Z)
    num = sum(W[i, j] * inner_double_sum(Z[i], Z[j]) for i in range(n) for j in range(n) if W[i, j])
    den = sum(inner_double_sum(z, z) for z in Z)
    return n / W.sum() * num / den


def reyes_i_dense(X, W):
    """tr(U'WU)/tr(U'U) with U the centered clr coordinates (same inner
    products as any ilr basis)."""
    L = np.log(closure(X))
    C = L - L.mean(axis=1, keepdims=True)
    U = C - C.mean(axis=0)
    W = np.asarray(W, dtype=float)
    return len(U) / W.sum() * np.trace(U.T @ W @ U) / np.trace(U.T @ U)


def moran_naive(x, W):
    x = np.asarray(x, dtype=float)
    W = np.asarray(W, dtype=float)
    z = x - x.mean()
    n = len(x)
    return n / W.sum() * sum(W[i, j] * z[i] * z[j] for i in range(n) for j in range(n)) / (z @ z)


def grid_dense(rows, cols, criterion):
    """Binary contiguity by looping over cell pairs."""
    n = rows * cols
    W = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            dr = abs(a // cols - b // cols)
            dc = abs(a % cols - b % cols)
            if criterion == "rook" and dr + dc == 1:
                W[a, b] = 1
            if criterion == "queen" and max(dr, dc) == 1:
                W[a, b] = 1
    return W


def row_standardize_dense(W):
    return W / W.sum(axis=1, keepdims=True)


def exact_values_naive(X, W):
    """I for every relabeling, recomputing centering and transforms each time."""
    X = np.asarray(X)
    return np.array([reyes_i_naive(X[list(p)], W) for p in itertools.permutations(range(len(X)))])


def nearest_rank(values, q):
    v = sorted(values)
    k = max(1, math.ceil(q * len(v) - 1e-9))
    return v[min(k, len(v)) - 1]
