"""Independent numerical references shared by the test modules."""
from __future__ import annotations

import numpy as np

from twophoton.propagators import integrand_factors


def box_quadrature_I(which, x, y, z, es, half_width=60.0, h=0.2, eta=0.7):
    """Brute-force triple integral of I4/I6/I8 over a truncated box.

    Every omega pole lies below the real axis, so the omega line is moved up
    by ``eta``; on that line the ``i delta`` of I4 can be dropped exactly.  The
    remaining integrand is smooth on the real (k, q) plane and the trapezoid
    rule converges geometrically in ``h``.  Only the ``1/(omega - k - q)``
    factor couples k and q, so the sum costs one matrix product per omega node.
    """
    s = np.arange(-half_width, half_width + h / 2, h)
    u = s + 1j * eta
    a_k = (np.exp(1j * s * x) * h)[:, None] * np.ones((1, len(s)), complex)
    b_q = (np.exp(1j * s * y) * h)[:, None] * np.ones((1, len(s)), complex)
    w_u = np.exp(1j * u * z) * h
    kk, uu = s[:, None], u[None, :]
    coupled = None
    for f in integrand_factors(which, es):
        ak, aq, aw = f.a
        if ak and aq:
            coupled = f
        elif ak:
            a_k = a_k * (ak * kk + aw * uu + f.b) ** (-f.power)
        elif aq:
            b_q = b_q * (aq * kk + aw * uu + f.b) ** (-f.power)
        else:
            w_u = w_u * (aw * u + f.b) ** (-f.power)
    if coupled is None:
        return complex(np.sum(w_u * a_k.sum(0) * b_q.sum(0)))
    ak, aq, aw = coupled.a
    total = 0j
    for j in range(len(s)):
        c = (ak * s[:, None] + aq * s[None, :] + aw * u[j] + coupled.b) ** (-coupled.power)
        total += w_u[j] * (a_k[:, j] @ c @ b_q[:, j])
    return complex(total)


def trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w
