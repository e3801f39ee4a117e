"""Exact matrix permanents."""

from __future__ import annotations

import numpy as np


def permanent(matrix: np.ndarray) -> complex:
    """Permanent of a square matrix by Ryser's formula with Gray-code ordering.

    Cost is O(2**n * n); intended for the small photon numbers used here
    (n <= 12 or so).
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n == 1:
        return complex(m[0, 0])
    if n == 2:
        return complex(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0])

    # per(A) = sum over nonempty column subsets S of (-1)**(n - |S|) * prod_i sum_{j in S} A[i, j]
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    gray_prev = 0
    size = 0
    for k in range(1, 2**n):
        gray = k ^ (k >> 1)
        changed = gray ^ gray_prev
        col = changed.bit_length() - 1
        if gray & changed:
            row_sums += m[:, col]
            size += 1
        else:
            row_sums -= m[:, col]
            size -= 1
        gray_prev = gray
        term = np.prod(row_sums)
        total += term if (n - size) % 2 == 0 else -term
    return complex(total)
