"""Independent reference computations used only by the tests.

Nothing here imports the package's numerical internals, so agreement with
the package is a genuine cross-check.
"""
import numpy as np
from scipy.integrate import solve_ivp


def fornberg(x0, x, m=2):
    """Finite-difference weights at x0 for derivatives 0..m on nodes x."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def apply_H_fd(r, f, width=2):
    """(f'' + 5f'/r + 2Q f) at interior nodes via (2*width+1)-point stencils."""
    out = np.full_like(f, np.nan)
    q = (1 + r * r / 24.0) ** -2
    for i in range(width, len(r) - width):
        sl = slice(i - width, i + width + 1)
        w = fornberg(r[i], r[sl], 2)
        d1, d2 = w[:, 1] @ f[sl], w[:, 2] @ f[sl]
        out[i] = d2 + 5.0 * d1 / r[i] + 2.0 * q[i] * f[i]
    return out


def Q_ref(r):
    return 1.0 / (1.0 + r * r / 24.0) ** 2


def LambdaQ_ref(r):
    # 2Q + r Q', differentiated by hand
    return 2.0 * Q_ref(r) + r * (-2.0) * (1 + r * r / 24.0) ** -3 * (r / 12.0)


def shoot_mu1(R, lo=-1.0, hi=-1e-6, n_iter=80):
    """Lowest Dirichlet eigenvalue of -(d2 + 5/r d + 2Q) on B_R by shooting.

    Counts the zeros of the regular solution of u'' + 5u'/r + (2Q + mu) u = 0
    and bisects in mu on the sign of u(R).
    """
    def u_at_R(mu):
        r0 = 1e-4
        # regular series u = 1 - (2 + mu) r^2 / 12
        a = (2.0 + mu) / 12.0
        y0 = [1 - a * r0**2, -2 * a * r0]
        rhs = lambda r, y: [y[1], -5 * y[1] / r - (2 * Q_ref(r) + mu) * y[0]]
        sol = solve_ivp(rhs, (r0, R), y0, rtol=1e-11, atol=1e-14, method="DOP853")
        return sol.y[0, -1]
    f_lo, f_hi = u_at_R(lo), u_at_R(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise RuntimeError("bracket does not straddle the first eigenvalue")
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        fm = u_at_R(mid)
        if np.sign(fm) == np.sign(f_lo):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
