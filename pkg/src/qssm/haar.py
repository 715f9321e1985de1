"""Haar moment identities and their Monte-Carlo estimates."""
from __future__ import annotations

import numpy as np

from .circuit import haar_unitaries
from .errors import ArgumentError


def _tr(m):
    return np.trace(m)


def first_moment(a, b) -> complex:
    """E tr[U^dag A U B] = tr A tr B / d."""
    return _tr(a) * _tr(b) / a.shape[0]


def chain_moment(a, b, c, d) -> complex:
    """E tr[U^dag A U B U^dag C U D]."""
    n = a.shape[0]
    return ((_tr(a) * _tr(c) * _tr(b @ d) + _tr(a @ c) * _tr(b) * _tr(d)) / (n**2 - 1)
            - (_tr(a @ c) * _tr(b @ d) + _tr(a) * _tr(b) * _tr(c) * _tr(d)) / (n * (n**2 - 1)))


def product_moment(a, b, c, d) -> complex:
    """E tr[U A U^dag B] tr[U C U^dag D]."""
    n = a.shape[0]
    return ((_tr(a) * _tr(b) * _tr(c) * _tr(d) + _tr(a @ c) * _tr(b @ d)) / (n**2 - 1)
            - (_tr(a @ c) * _tr(b) * _tr(d) + _tr(a) * _tr(c) * _tr(b @ d)) / (n * (n**2 - 1)))


def estimate_moments(a, b, c, d, samples: int, rng, batch: int = 20000) -> dict:
    """Sample means of the three traced polynomials over Haar unitaries."""
    dim = a.shape[0]
    if any(m.shape != (dim, dim) for m in (b, c, d)):
        raise ArgumentError("all operators must share one square shape")
    sums = {"first": 0j, "chain": 0j, "product": 0j}
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        u = haar_unitaries(dim, m, rng)
        ud = np.conj(np.swapaxes(u, 1, 2))
        uau = ud @ a @ u
        ucu = ud @ c @ u
        sums["first"] += np.einsum("sii->", uau @ b)
        sums["chain"] += np.einsum("sii->", uau @ b @ ucu @ d)
        x = np.einsum("sii->s", u @ a @ ud @ b)
        y = np.einsum("sii->s", u @ c @ ud @ d)
        sums["product"] += np.sum(x * y)
        done += m
    return {k: v / samples for k, v in sums.items()}


def closed_forms(a, b, c, d) -> dict:
    return {"first": first_moment(a, b), "chain": chain_moment(a, b, c, d), "product": product_moment(a, b, c, d)}


def moment_operators(dim: int, rng) -> tuple:
    """Four random positive operators; positive traces keep relative errors meaningful."""
    ops = []
    for _ in range(4):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        ops.append(g @ g.conj().T / dim)
    return tuple(ops)
