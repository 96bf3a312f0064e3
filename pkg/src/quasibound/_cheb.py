"""Chebyshev-series kernels on plain lists of mpfr.

A series ``c`` represents ``sum(c[k] * T_k(x))`` on [-1, 1].  Every routine
computes at the caller's gmpy2 precision; none of them trims coefficients.
"""

from __future__ import annotations

from gmpy2 import mpfr


def clenshaw(c, x):
    if not c:
        return mpfr(0)
    x2 = 2 * x
    b1 = mpfr(0)
    b2 = mpfr(0)
    for k in range(len(c) - 1, 0, -1):
        b1, b2 = x2 * b1 - b2 + c[k], b1
    return c[0] + x * b1 - b2


def abs_sum(c):
    total = mpfr(0)
    for v in c:
        total += abs(v)
    return total


def endpoint_values(c):
    """Values at s = -1 and s = +1."""
    left = mpfr(0)
    right = mpfr(0)
    for k, v in enumerate(c):
        right += v
        if k & 1:
            left -= v
        else:
            left += v
    return left, right


def mul_x(c):
    n = len(c)
    out = [mpfr(0)] * (n + 1)
    if n == 0:
        return out[:0]
    out[1] = out[1] + c[0]
    for k in range(1, n):
        h = c[k] / 2
        out[k + 1] += h
        out[k - 1] += h
    return out


def mono_to_cheb(m):
    if not m:
        return [mpfr(0)]
    r = [mpfr(m[-1])]
    for k in range(len(m) - 2, -1, -1):
        r = mul_x(r)
        r[0] += m[k]
    return r


def cheb_to_mono(c):
    n = len(c) - 1
    if n <= 0:
        return [mpfr(c[0]) if c else mpfr(0)]
    zero = mpfr(0)
    b1 = [zero] * (n + 1)
    b2 = [zero] * (n + 1)
    for k in range(n, 0, -1):
        new = [-v for v in b2]
        for i in range(n - k + 1):
            new[i + 1] += 2 * b1[i]
        new[0] += c[k]
        b2, b1 = b1, new
    res = [-v for v in b2]
    for i in range(n):
        res[i + 1] += b1[i]
    res[0] += c[0]
    return res


def derivative(c):
    n = len(c) - 1
    if n <= 0:
        return [mpfr(0)]
    d = [mpfr(0)] * (n + 1)
    for k in range(n, 0, -1):
        d[k - 1] = d[k + 1] + 2 * k * c[k] if k + 1 <= n else 2 * k * c[k]
    d[0] = d[0] / 2
    return d[:n]


def multiply(a, b):
    if not a or not b:
        return [mpfr(0)]
    out = [mpfr(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if not ai:
            continue
        h = ai / 2
        for j, bj in enumerate(b):
            p = h * bj
            out[i + j] += p
            out[abs(i - j)] += p
    return out


def add(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for k, v in enumerate(b):
        out[k] = out[k] + v
    return out


def scale(c, s):
    return [s * v for v in c]


def restrict(c, alpha, beta):
    """Coefficients in s of ``P(alpha + beta*s)``.

    Vector Clenshaw recurrence; each state is itself a Chebyshev series in s.
    """
    n = len(c) - 1
    if n <= 0:
        return [mpfr(c[0]) if c else mpfr(0)]
    alpha2 = 2 * alpha
    beta2 = 2 * beta
    zero = mpfr(0)
    b1 = []
    b2 = []
    for k in range(n, 0, -1):
        m = len(b1)
        new = [zero] * (m + 1)
        for i in range(m):
            v = b1[i]
            new[i] += alpha2 * v
            if i == 0:
                new[1] += beta2 * v
            else:
                h = beta * v
                new[i + 1] += h
                new[i - 1] += h
        for i in range(len(b2)):
            new[i] -= b2[i]
        new[0] += c[k]
        b2, b1 = b1, new
    m = len(b1)
    res = [zero] * (m + 1)
    for i in range(m):
        v = b1[i]
        res[i] += alpha * v
        if i == 0:
            res[1] += beta * v
        else:
            h = beta * v / 2
            res[i + 1] += h
            res[i - 1] += h
    for i in range(len(b2)):
        res[i] -= b2[i]
    res[0] += c[0]
    return res


def restrict_to(c, a, b):
    return restrict(c, (a + b) / 2, (b - a) / 2)
