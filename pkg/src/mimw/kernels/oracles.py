"""Float64 reference implementations for the shipped kernels."""

from __future__ import annotations

import numpy as np


def _f64(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


def oracle_gemm(a, b) -> np.ndarray:
    return _f64(a) @ _f64(b)


def oracle_layernorm(x, w, b, eps: float = 1e-5) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise normalization over the last axis; returns (y, mean, rstd)."""
    x = _f64(x)
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    y = (x - mean) * rstd * _f64(w) + _f64(b)
    return y, mean, rstd


def oracle_multi_device_gemm(a_shards, b_shards) -> np.ndarray:
    """``a_shards[d]`` holds device d's K-slice of A (M, K/D) and
    ``b_shards[d]`` the matching rows of B; the result uses the gathered
    operands."""
    a = np.concatenate(list(_f64(a_shards)), axis=1)
    b = np.concatenate(list(_f64(b_shards)), axis=0)
    return oracle_gemm(a, b)


def window_mask(seq: int, w: int) -> np.ndarray:
    """mask[i, j] is True when j lies in [max(0, i - w + 1), i]."""
    i = np.arange(seq)[:, None]
    j = np.arange(seq)[None, :]
    return (j <= i) & (j >= i - w + 1)


def oracle_simplicial_attention(q, k1, v1, k2, v2, w1: int, w2: int, scale: float):
    """Dense 2-simplicial attention.

    For query i the logits are ``s[j, k] = scale * sum_d q[i,d] k1[j,d] k2[k,d]``
    over j in the K1 window and k in the K2 window; a softmax over all (j, k)
    pairs weights ``v1[j] * v2[k]``. Returns (o, lse) with lse of shape (seq, 1).
    """
    q, k1, v1, k2, v2 = (_f64(t) for t in (q, k1, v1, k2, v2))
    seq, d = q.shape
    m1 = window_mask(seq, w1)
    m2 = window_mask(seq, w2)
    o = np.zeros((seq, d))
    lse = np.zeros((seq, 1))
    for i in range(seq):
        s = np.einsum("d,jd,kd->jk", q[i] * scale, k1, k2)
        valid = m1[i][:, None] & m2[i][None, :]
        s = np.where(valid, s, -np.inf)
        top = s.max()
        p = np.exp(s - top)
        z = p.sum()
        o[i] = np.einsum("jk,jd,kd->d", p / z, v1, v2)
        lse[i, 0] = top + np.log(z)
    return o, lse


def oracle_attention(q, k, v, w: int, scale: float):
    """Sliding-window causal softmax attention; returns (o, lse)."""
    q, k, v = _f64(q), _f64(k), _f64(v)
    s = (q * scale) @ k.T
    s = np.where(window_mask(q.shape[0], w), s, -np.inf)
    top = s.max(axis=1, keepdims=True)
    p = np.exp(s - top)
    z = p.sum(axis=1, keepdims=True)
    return (p / z) @ v, top + np.log(z)
