"""Time-a maps of a flat bump vector field and their jets.

The field is X(u) = exp(16/3 - 1/(u-1/8) - 1/(7/8-u)) on (1/8, 7/8), zero
elsewhere; its maximum is 1 at u = 1/2.  phi_a(u0 + e) is computed by a
Taylor method in time whose coefficients are themselves jets in e, so the
displacement phi_a - Id keeps full relative precision even when a is far
below the working precision.
"""
from functools import lru_cache

import mpmath
from mpmath import mp, mpf

from .errors import IntegrationFailure
from .series import Series

LO = mpf(1) / 8
HI = mpf(7) / 8
MAX_TERMS = 40
MAX_STEPS = 10000
SCALAR_TERMS = 90


class FlowSpec:
    """The canonical bump field; kept as a type so manifests can name it."""

    name = "bump-1/8-7/8"

    def field_series(self, U):
        """X as a series in the local variable of U."""
        u0 = U.c[0]
        if not (LO < u0 < HI):
            return Series.constant(mpf(0), U.order)
        g = mpf(16) / 3 - (U - LO).recip() - (HI - U).recip()
        return g.exp()

    def field(self, u):
        return self.field_series(Series([mpf(u)])).c[0]

    def descriptor(self):
        return {"vector_field": self.name}


CANONICAL = FlowSpec()


def _norm(s):
    return max(abs(x) for x in s.c)


def flow_jet(u0, a, order):
    """Return (Phi, D): jets in e of phi_a(u0+e) and of phi_a(u0+e) - (u0+e).

    For flow times above 2^(-prec/3) the value comes from a scalar Taylor
    integration and the e-jet from the identity phi_a' = X(phi_a)/X; below
    that, a Taylor method with jet-valued coefficients keeps the tiny
    displacement at full relative precision.
    """
    u0 = mpf(u0)
    a = mpf(a)
    zero = Series.constant(mpf(0), order)
    if a == 0 or not (LO < u0 < HI):
        return Series.variable(u0, order), zero
    if abs(a) >= mpf(2) ** (-mp.prec // 3):
        v = _scalar_flow(u0, a)
        Phi = _identity_jet(u0, v, order)
        D = Phi - Series.variable(u0, order)
        return Phi, D
    return _jet_flow(u0, a, order)


def _identity_jet(u0, v, order):
    """Jet of phi_a at u0 from phi_a(u0) = v using phi_a'(u) = X(phi_a(u))/X(u)."""
    c = [v]
    XU = CANONICAL.field_series(Series.variable(u0, order))
    for j in range(1, order + 1):
        P = Series(c + [mpf(0)] * (j - len(c)))
        # P has order j-1; X(P)/X(u) to order j-1 gives Phi' up to e^(j-1)
        ratio = CANONICAL.field_series(P) / XU.truncate(j - 1)
        c.append(ratio.c[j - 1] / j)
    return Series(c)


def _scalar_flow(u0, a):
    tol = mpf(2) ** (-mp.prec + 4)
    y = u0
    remaining = a
    steps = 0
    while remaining != 0:
        steps += 1
        if steps > MAX_STEPS:
            raise IntegrationFailure("flow integrator step cap reached")
        ys = _scalar_coefficients(y, abs(remaining), tol)
        K = len(ys) - 1
        scale = max(abs(ys[j]) * abs(remaining) ** j for j in range(1, K + 1))
        h = abs(remaining)
        for j in (K - 1, K):
            if ys[j] != 0 and scale != 0:
                h = min(h, (tol * scale / abs(ys[j])) ** (mpf(1) / j))
        if h < abs(remaining):
            h = h / 2
            if remaining < 0:
                h = -h
        else:
            h = remaining
        acc = mpf(0)
        for j in range(K, 0, -1):
            acc = (acc + ys[j]) * h
        y = y + acc
        remaining -= h
        if abs(remaining) <= tol * abs(a):
            remaining = 0
    return y


def _scalar_coefficients(y0, tau, tol):
    w1, w2 = y0 - LO, HI - y0
    if w1 <= 0 or w2 <= 0:
        raise IntegrationFailure("flow left the support of the field")
    Y = [y0]
    R1, R2 = [1 / w1], [1 / w2]
    G = [mpf(16) / 3 - R1[0] - R2[0]]
    E = [mpmath.exp(G[0])]
    Y.append(E[0])
    scale = abs(Y[1]) * tau
    small_run = 0
    for j in range(1, SCALAR_TERMS):
        s1 = mpmath.fsum(Y[i] * R1[j - i] for i in range(1, j + 1))
        s2 = mpmath.fsum(Y[i] * R2[j - i] for i in range(1, j + 1))
        R1.append(-R1[0] * s1)
        R2.append(R2[0] * s2)
        G.append(-R1[j] - R2[j])
        E.append(mpmath.fsum(i * G[i] * E[j - i] for i in range(1, j + 1)) / j)
        Y.append(E[j] / (j + 1))
        term = abs(Y[j + 1]) * tau ** (j + 1)
        scale = max(scale, term)
        if term <= tol * scale:
            small_run += 1
            if small_run >= 2:
                break
        else:
            small_run = 0
    return Y


def _jet_flow(u0, a, order):
    zero = Series.constant(mpf(0), order)
    tol = mpf(2) ** (-mp.prec + 4)
    Y0 = Series.variable(u0, order)
    D = zero
    remaining = a
    steps = 0
    while remaining != 0:
        steps += 1
        if steps > MAX_STEPS:
            raise IntegrationFailure("flow integrator step cap reached")
        Ys = _time_coefficients(Y0, abs(remaining), tol)
        h = _step_size(Ys, abs(remaining), tol)
        if h >= abs(remaining):
            h = remaining
        elif remaining < 0:
            h = -h
        Dstep = zero
        hp = mpf(1)
        for j in range(1, len(Ys)):
            hp *= h
            Dstep = Dstep + Ys[j] * hp
        D = D + Dstep
        Y0 = Y0 + Dstep
        remaining = remaining - h
        if abs(remaining) <= tol * abs(a):
            remaining = 0
    return Y0, D


def _time_coefficients(Y0, tau, tol):
    """Taylor coefficients Y_j (jets in e) of y(s) with y' = X(y), y(0) = Y0."""
    W1_0 = Y0 - LO
    W2_0 = HI - Y0
    if W1_0.c[0] <= 0 or W2_0.c[0] <= 0:
        raise IntegrationFailure("flow left the support of the field")
    Y = [Y0]
    R1 = [W1_0.recip()]
    R2 = [W2_0.recip()]
    G = [mpf(16) / 3 - R1[0] - R2[0]]
    E = [G[0].exp()]
    Y.append(E[0])
    big = [_norm(Y[1]) * tau]
    small_run = 0
    for j in range(1, MAX_TERMS):
        # coefficient j of w1 = y - 1/8 is Y_j, of w2 is -Y_j
        s1 = Y[1] * R1[j - 1]
        s2 = Y[1] * R2[j - 1]
        for i in range(2, j + 1):
            s1 = s1 + Y[i] * R1[j - i]
            s2 = s2 + Y[i] * R2[j - i]
        R1.append(-(R1[0] * s1))
        R2.append(R2[0] * s2)
        G.append(-R1[j] - R2[j])
        s = G[1] * E[j - 1]
        for i in range(2, j + 1):
            s = s + (G[i] * i) * E[j - i]
        E.append(s / j)
        Y.append(E[j] / (j + 1))
        term = _norm(Y[j + 1]) * tau ** (j + 1)
        scale = max(big)
        big.append(term)
        if term <= tol * scale or scale == 0:
            small_run += 1
            if small_run >= 2:
                break
        else:
            small_run = 0
    return Y


def _step_size(Ys, tau, tol):
    K = len(Ys) - 1
    scale = max(_norm(Ys[j]) * tau ** j for j in range(1, K + 1))
    if scale == 0:
        return tau
    h = tau
    for j in (K - 1, K):
        nj = _norm(Ys[j])
        if nj == 0:
            continue
        # keep the tail terms below tol relative to the dominant term
        hj = (tol * scale / nj) ** (mpf(1) / j)
        h = min(h, hj)
    if h >= tau:
        return tau
    return h / 2


def phi(u, a):
    """Scalar value phi_a(u)."""
    Phi, _ = flow_jet(u, a, 0)
    return Phi.c[0]


@lru_cache(maxsize=32)
def _argmax_derivative(k, prec):
    """Grid point in [1/8,7/8] maximising |X^(k+1)| (used to record I-hat)."""
    best, arg = mpf(-1), mpf(1) / 2
    n = 256
    for i in range(1, n):
        u = LO + (HI - LO) * i / n
        d = abs(CANONICAL.field_series(Series.variable(u, k + 1)).derivatives()[k + 1])
        if d > best:
            best, arg = d, u
    return arg


def argmax_field_derivative(k):
    return _argmax_derivative(k, mp.prec)


def field_sup(order, samples=2048):
    """Sampled sup of |X^(i)| for i = 0..order (used in flow bound checks)."""
    out = [mpf(0)] * (order + 1)
    for i in range(1, samples):
        u = LO + (HI - LO) * mpf(i) / samples
        d = CANONICAL.field_series(Series.variable(u, order)).derivatives()
        for j in range(order + 1):
            out[j] = max(out[j], abs(d[j]))
    return out


__all__ = ["FlowSpec", "CANONICAL", "flow_jet", "phi", "argmax_field_derivative", "field_sup"]
