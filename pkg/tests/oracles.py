"""Independent oracles used to pin expected values.

Everything here deliberately avoids the library's own code paths: plain
finite differences of plain evaluations, and a brute-force recovery that
parametrizes the full unconstrained tensor with symmetry and trace conditions
appended as extra equations.  Expected values asserted in the tests were
computed with these oracles (or by hand) before being frozen.
"""

import numpy as np

from dualgeo.jets import eval_value

FD_H = 1e-5       # first differences
FD_H2 = 1e-4      # stencils dividing by h^2


def fd_gradient(expr, x, h=FD_H):
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = np.zeros(n)
    for i in range(n):
        up, dn = x.copy(), x.copy()
        up[i] += h
        dn[i] -= h
        out[i] = (eval_value(expr, up) - eval_value(expr, dn)) / (2 * h)
    return out


def fd_hessian(expr, x, h=FD_H2):
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = np.zeros((n, n))
    f0 = eval_value(expr, x)
    for i in range(n):
        for j in range(n):
            if i == j:
                up, dn = x.copy(), x.copy()
                up[i] += h
                dn[i] -= h
                out[i, i] = (eval_value(expr, up) - 2 * f0 + eval_value(expr, dn)) / h**2
            else:
                pp, pm, mp, mm = x.copy(), x.copy(), x.copy(), x.copy()
                pp[[i, j]] += h
                pm[i] += h
                pm[j] -= h
                mp[i] -= h
                mp[j] += h
                mm[[i, j]] -= h
                out[i, j] = (eval_value(expr, pp) - eval_value(expr, pm)
                             - eval_value(expr, mp) + eval_value(expr, mm)) / (4 * h**2)
    return out


def fd_christoffel(metric, x, h=1e-6):
    """Christoffel symbols from centered differences of metric values only."""
    x = np.asarray(x, dtype=float)
    n = metric.n
    dg = np.zeros((n, n, n))
    for a in range(n):
        up, dn = x.copy(), x.copy()
        up[a] += h
        dn[a] -= h
        dg[a] = (metric.value(up) - metric.value(dn)) / (2 * h)
    ginv = np.linalg.inv(metric.value(x))
    out = np.zeros((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                out[k, i, j] = 0.5 * sum(
                    ginv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                    for l in range(n))
    return out


def fd_ricci(metric, x, h=1e-4):
    """Ricci from centered differences of the (analytic) Christoffel symbols."""
    x = np.asarray(x, dtype=float)
    n = metric.n
    gamma = metric.christoffel(x)
    dgamma = np.zeros((n, n, n, n))
    for a in range(n):
        up, dn = x.copy(), x.copy()
        up[a] += h
        dn[a] -= h
        dgamma[a] = (metric.christoffel(up) - metric.christoffel(dn)) / (2 * h)
    ric = np.zeros((n, n))
    for k in range(n):
        for j in range(n):
            val = 0.0
            for i in range(n):
                val += dgamma[i, i, j, k] - dgamma[j, i, i, k]
                for m in range(n):
                    val += gamma[i, i, m] * gamma[m, j, k] - gamma[i, j, m] * gamma[m, i, k]
            ric[k, j] = val
    return ric


def brute_force_structure_tensor(metric, family, x):
    """Recover T[k,i,j] with no basis reduction: all n^3 components unknown,
    pair symmetry and g-tracelessness appended as equations of the stacked
    least-squares system."""
    x = np.asarray(x, dtype=float)
    n = metric.n
    ginv = np.linalg.inv(metric.value(x))
    gamma = metric.christoffel(x)
    rows, rhs = [], []

    def col(k, i, j):
        return (k * n + i) * n + j

    for V in family.potentials:
        jet = V.jet2(x)
        hess_cov = jet.hess - np.einsum("kij,k->ij", gamma, jet.grad)
        lap = float(np.einsum("ij,ij->", ginv, hess_cov))
        target = hess_cov - metric.value(x) * lap / n
        for i in range(n):
            for j in range(n):
                row = np.zeros(n**3)
                for k in range(n):
                    row[col(k, i, j)] = jet.grad[k]
                rows.append(row)
                rhs.append(target[i, j])
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                row = np.zeros(n**3)
                row[col(k, i, j)] = 1.0
                row[col(k, j, i)] = -1.0
                rows.append(row)
                rhs.append(0.0)
        row = np.zeros(n**3)
        for i in range(n):
            for j in range(n):
                row[col(k, i, j)] = ginv[i, j]
        rows.append(row)
        rhs.append(0.0)
    A = np.array(rows)
    b = np.array(rhs)
    c, _, _, _ = np.linalg.lstsq(A, b, rcond=1e-10)
    residual = float(np.max(np.abs(A @ c - b)))
    return c.reshape(n, n, n), residual


def brute_force_s(metric, family, x):
    """Per-point linear solve of Laplacian(V) = s(dV) over the family."""
    x = np.asarray(x, dtype=float)
    n = metric.n
    ginv = np.linalg.inv(metric.value(x))
    gamma = metric.christoffel(x)
    rows, rhs = [], []
    for V in family.potentials:
        jet = V.jet2(x)
        hess_cov = jet.hess - np.einsum("kij,k->ij", gamma, jet.grad)
        rows.append(jet.grad)
        rhs.append(float(np.einsum("ij,ij->", ginv, hess_cov)))
    A, b = np.array(rows), np.array(rhs)
    s, _, _, _ = np.linalg.lstsq(A, b, rcond=1e-10)
    return s, float(np.max(np.abs(A @ s - b)))
