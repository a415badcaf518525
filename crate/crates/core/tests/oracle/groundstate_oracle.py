"""Independent reference values for the radial ground state.

Solves -Q'' - (N-1)/r Q' + Q = r^{-b} Q^{1+2 beta^2} by shooting with an
adaptive DOP853 integrator (rtol/atol 1e-12) and bisection on Q(0).
Integrals are carried as extra ODE components so no post-hoc quadrature
is involved. Output is frozen into tests/groundstate_oracle.rs.
"""
import math
import sys

from scipy.integrate import quad, solve_ivp
from scipy.special import kv


def sphere_area(n):
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def shoot(s, n, b, r_end=40.0, moments=(2.0,), want_dense=False):
    beta2 = (2.0 - b) / n
    q = 2.0 + 2.0 * beta2
    r0 = 1e-6
    c1 = -1.0 / ((2.0 - b) * (n - b))
    c2 = 1.0 / (2.0 * n)
    A = c1 * s ** (q - 1.0)
    B = c2 * s
    Q0 = s + A * r0 ** (2.0 - b) + B * r0 * r0
    dQ0 = A * (2.0 - b) * r0 ** (1.0 - b) + 2.0 * B * r0
    # integrals over [0, r0] from the leading term
    i_l2 = s * s * r0 ** n / n
    i_nl = s ** q * r0 ** (n - b) / (n - b)
    i_grad = 0.0
    i_mom = [s * s * r0 ** (n + p) / (n + p) for p in moments]

    def rhs(r, y):
        Q, dQ = y[0], y[1]
        Qp = max(Q, 0.0)
        d2 = -(n - 1.0) / r * dQ + Q - r ** (-b) * Qp ** (q - 1.0)
        w = r ** (n - 1.0)
        out = [dQ, d2, w * Q * Q, w * dQ * dQ, w * r ** (-b) * Qp ** q]
        out += [w * r ** p * Q * Q for p in moments]
        return out

    def ev_neg(r, y):
        return y[0]
    ev_neg.terminal = True
    ev_neg.direction = -1

    def ev_up(r, y):
        return y[1]
    ev_up.terminal = True
    ev_up.direction = 1

    y0 = [Q0, dQ0, i_l2, i_grad, i_nl] + i_mom
    sol = solve_ivp(rhs, (r0, r_end), y0, method="DOP853", rtol=1e-12,
                    atol=1e-14, events=[ev_neg, ev_up], dense_output=want_dense)
    if sol.t_events[0].size:
        return "over", sol
    if sol.t_events[1].size:
        return "under", sol
    return "decayed", sol


def solve(n, b):
    lo, hi = 0.1, 0.1
    while shoot(hi, n, b)[0] != "over":
        hi *= 1.5
    lo = hi / 1.5
    while shoot(lo, n, b)[0] != "under":
        lo /= 1.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if shoot(mid, n, b)[0] == "over":
            hi = mid
        else:
            lo = mid
    # integrals from the lower trajectory, truncated where the two
    # bracketing trajectories separate
    _, s_lo = shoot(lo, n, b, want_dense=True)
    _, s_hi = shoot(hi, n, b, want_dense=True)
    r_end = min(s_lo.t[-1], s_hi.t[-1])
    rc = r_end
    rr = 0.5
    while rr < r_end:
        ql = s_lo.sol(rr)[0]
        qh = s_hi.sol(rr)[0]
        if abs(ql - qh) > 1e-7 * abs(ql):
            rc = rr
            break
        rr += 0.01
    y = s_lo.sol(rc)
    area = sphere_area(n)
    # beyond rc the nonlinear term is negligible and Q follows the decaying
    # solution r^{1-N/2} K_{N/2-1}(r) of the linear equation
    nu = n / 2.0 - 1.0
    amp = y[0] / (rc ** (1.0 - n / 2.0) * kv(nu, rc))
    beta2 = (2.0 - b) / n
    qexp = 2.0 + 2.0 * beta2

    def tq(r):
        return amp * r ** (1.0 - n / 2.0) * kv(nu, r)

    def tdq(r, h=1e-5):
        return (tq(r + h) - tq(r - h)) / (2 * h)

    def tail(f):
        return quad(lambda r: r ** (n - 1.0) * f(r), rc, 60.0, epsabs=0, epsrel=1e-12, limit=200)[0]

    l2 = y[2] + tail(lambda r: tq(r) ** 2)
    grad = y[3] + tail(lambda r: tdq(r) ** 2)
    nl = y[4] + tail(lambda r: r ** (-b) * tq(r) ** qexp)
    m2 = y[5] + tail(lambda r: r ** 2 * tq(r) ** 2)
    return dict(s=0.5 * (lo + hi), l2=area * l2, grad=area * grad,
                nl=area * nl, m2=area * m2, rc=rc)


if __name__ == "__main__":
    cases = [(1, 0.5), (2, 0.5), (3, 1.0)]
    for n, b in cases:
        d = solve(n, b)
        beta2 = (2.0 - b) / n
        astar = d["l2"] ** beta2
        print(f"N={n} b={b}: s={d['s']:.15e} l2={d['l2']:.15e} grad={d['grad']:.15e} "
              f"nl={d['nl']:.15e} m2={d['m2']:.15e} astar={astar:.15e} rc={d['rc']:.2f}")
        print(f"   checks: grad*beta2/l2-1={d['grad']*beta2/d['l2']-1:.2e} "
              f"nl/(1+beta2)/grad-1={d['nl']/(1+beta2)/d['grad']-1:.2e}")
