"""Truncated-Taylor (jet) arithmetic and expression evaluation.

:class:`Jet2` carries (value, gradient, Hessian) and :class:`Jet3` adds the
third-derivative array.  Arithmetic propagates the Leibniz and chain rules, so
evaluating a parsed expression on seeded jets yields derivatives exact to
roundoff.  Hessians are exactly symmetric by construction: every second-order
term is assembled from symmetric building blocks (``u (x) v + v (x) u`` and
scalar multiples of symmetric matrices), which commutativity of IEEE addition
and multiplication keeps bitwise symmetric.

Central finite differences are kept alongside as the independent cross-check
(and as the fallback third-derivative path).  First-difference stencils use
the usual optimal step ``cbrt(eps) * (1 + |x_i|)``; stencils that divide by
h^2 (direct Hessian entries) use the fourth-root step instead, since at
cbrt(eps) their roundoff term eps/h^2 alone already exceeds 1e-6 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expressions import (
    Add, Call, Const, Div, EvalDomainError, Expression, Mul, Neg, Num, Pow,
    Sub, Var, to_source,
)

FD_STEP_SCALE = float(np.cbrt(np.finfo(float).eps))        # ~6.06e-6
FD_STEP_SCALE_2ND = float(np.finfo(float).eps ** 0.25)     # ~1.22e-4


class _DomainViolation(Exception):
    """Internal: raised by jet/scalar primitives, annotated by the evaluator."""


def _symouter(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.outer(u, v) + np.outer(v, u)


def _sym3(h: np.ndarray, u: np.ndarray) -> np.ndarray:
    # h symmetric: h_ij u_k + h_jk u_i + h_ki u_j
    a = h[:, :, None] * u[None, None, :]
    return a + np.transpose(a, (2, 0, 1)) + np.transpose(a, (1, 2, 0))


@dataclass
class Jet2:
    """Value, gradient and Hessian of a scalar at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @staticmethod
    def constant(v: float, n: int) -> "Jet2":
        return Jet2(float(v), np.zeros(n), np.zeros((n, n)))

    @staticmethod
    def variable(v: float, index: int, n: int) -> "Jet2":
        g = np.zeros(n)
        g[index] = 1.0
        return Jet2(float(v), g, np.zeros((n, n)))

    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(float(other), self.grad.shape[0])

    def __add__(self, other):
        o = self._coerce(other)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        return Jet2(
            self.value * o.value,
            self.grad * o.value + self.value * o.grad,
            self.hess * o.value + _symouter(self.grad, o.grad) + self.value * o.hess,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def _reciprocal(self) -> "Jet2":
        if self.value == 0.0:
            raise _DomainViolation("division by zero")
        return self._compose(1.0 / self.value, -1.0 / self.value**2, 2.0 / self.value**3)

    def _compose(self, f0: float, f1: float, f2: float) -> "Jet2":
        """Chain rule through a scalar function with derivatives f0, f1, f2."""
        return Jet2(f0, f1 * self.grad,
                    f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def _int_pow(self, k: int) -> "Jet2":
        if k == 0:
            return Jet2.constant(1.0, self.grad.shape[0])
        if k < 0:
            return self._int_pow(-k)._reciprocal()
        result = self
        for _ in range(k - 1):
            result = result * self
        return result

    def __pow__(self, other):
        if isinstance(other, Jet2):
            if np.any(other.grad) or np.any(other.hess):
                return _jet_exp(_jet_log(self) * other)
            other = other.value
        e = float(other)
        if e.is_integer():
            return self._int_pow(int(e))
        if self.value <= 0.0:
            raise _DomainViolation("real exponent needs a positive base")
        u = self.value
        return self._compose(u**e, e * u ** (e - 1.0), e * (e - 1.0) * u ** (e - 2.0))

    def __rpow__(self, other):
        return self._coerce(other).__pow__(self)


def _jet_sqrt(x: Jet2) -> Jet2:
    if x.value <= 0.0:
        raise _DomainViolation("sqrt of a non-positive value")
    r = math.sqrt(x.value)
    return x._compose(r, 0.5 / r, -0.25 / (r * x.value))


def _jet_exp(x: Jet2) -> Jet2:
    e = math.exp(x.value)
    return x._compose(e, e, e)


def _jet_log(x: Jet2) -> Jet2:
    if x.value <= 0.0:
        raise _DomainViolation("log of a non-positive value")
    return x._compose(math.log(x.value), 1.0 / x.value, -1.0 / x.value**2)


def _jet_sin(x: Jet2) -> Jet2:
    return x._compose(math.sin(x.value), math.cos(x.value), -math.sin(x.value))


def _jet_cos(x: Jet2) -> Jet2:
    return x._compose(math.cos(x.value), -math.sin(x.value), -math.cos(x.value))


def _jet_tan(x: Jet2) -> Jet2:
    c = math.cos(x.value)
    if c == 0.0:
        raise _DomainViolation("tan at a pole")
    t = math.tan(x.value)
    sec2 = 1.0 + t * t
    return x._compose(t, sec2, 2.0 * t * sec2)


@dataclass
class Jet3:
    """Jet2 plus the symmetric third-derivative array."""

    value: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray

    @staticmethod
    def constant(v: float, n: int) -> "Jet3":
        return Jet3(float(v), np.zeros(n), np.zeros((n, n)), np.zeros((n, n, n)))

    @staticmethod
    def variable(v: float, index: int, n: int) -> "Jet3":
        g = np.zeros(n)
        g[index] = 1.0
        return Jet3(float(v), g, np.zeros((n, n)), np.zeros((n, n, n)))

    def _coerce(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            return other
        return Jet3.constant(float(other), self.grad.shape[0])

    def __add__(self, other):
        o = self._coerce(other)
        return Jet3(self.value + o.value, self.grad + o.grad,
                    self.hess + o.hess, self.third + o.third)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(-self.value, -self.grad, -self.hess, -self.third)

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet3(self.value - o.value, self.grad - o.grad,
                    self.hess - o.hess, self.third - o.third)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        third = (self.third * o.value + _sym3(self.hess, o.grad)
                 + _sym3(o.hess, self.grad) + self.value * o.third)
        return Jet3(
            self.value * o.value,
            self.grad * o.value + self.value * o.grad,
            self.hess * o.value + _symouter(self.grad, o.grad) + self.value * o.hess,
            third,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def _compose(self, f0: float, f1: float, f2: float, f3: float) -> "Jet3":
        g, h = self.grad, self.hess
        third = (f1 * self.third + f2 * _sym3(h, g)
                 + f3 * g[:, None, None] * g[None, :, None] * g[None, None, :])
        return Jet3(f0, f1 * g, f1 * h + f2 * np.outer(g, g), third)

    def _reciprocal(self) -> "Jet3":
        if self.value == 0.0:
            raise _DomainViolation("division by zero")
        u = self.value
        return self._compose(1.0 / u, -1.0 / u**2, 2.0 / u**3, -6.0 / u**4)

    def _int_pow(self, k: int) -> "Jet3":
        if k == 0:
            return Jet3.constant(1.0, self.grad.shape[0])
        if k < 0:
            return self._int_pow(-k)._reciprocal()
        result = self
        for _ in range(k - 1):
            result = result * self
        return result

    def __pow__(self, other):
        if isinstance(other, Jet3):
            if np.any(other.grad) or np.any(other.hess) or np.any(other.third):
                return _jet3_exp(_jet3_log(self) * other)
            other = other.value
        e = float(other)
        if e.is_integer():
            return self._int_pow(int(e))
        if self.value <= 0.0:
            raise _DomainViolation("real exponent needs a positive base")
        u = self.value
        return self._compose(u**e, e * u ** (e - 1.0),
                             e * (e - 1.0) * u ** (e - 2.0),
                             e * (e - 1.0) * (e - 2.0) * u ** (e - 3.0))

    def __rpow__(self, other):
        return self._coerce(other).__pow__(self)


def _jet3_sqrt(x: Jet3) -> Jet3:
    if x.value <= 0.0:
        raise _DomainViolation("sqrt of a non-positive value")
    u = x.value
    r = math.sqrt(u)
    return x._compose(r, 0.5 / r, -0.25 / (r * u), 0.375 / (r * u * u))


def _jet3_exp(x: Jet3) -> Jet3:
    e = math.exp(x.value)
    return x._compose(e, e, e, e)


def _jet3_log(x: Jet3) -> Jet3:
    if x.value <= 0.0:
        raise _DomainViolation("log of a non-positive value")
    u = x.value
    return x._compose(math.log(u), 1.0 / u, -1.0 / u**2, 2.0 / u**3)


def _jet3_sin(x: Jet3) -> Jet3:
    s, c = math.sin(x.value), math.cos(x.value)
    return x._compose(s, c, -s, -c)


def _jet3_cos(x: Jet3) -> Jet3:
    s, c = math.sin(x.value), math.cos(x.value)
    return x._compose(c, -s, -c, s)


def _jet3_tan(x: Jet3) -> Jet3:
    c = math.cos(x.value)
    if c == 0.0:
        raise _DomainViolation("tan at a pole")
    t = math.tan(x.value)
    sec2 = 1.0 + t * t
    return x._compose(t, sec2, 2.0 * t * sec2, sec2 * (4.0 * t * t + 2.0 * sec2))


_JET2_FUNCS = {"sqrt": _jet_sqrt, "sin": _jet_sin, "cos": _jet_cos,
               "tan": _jet_tan, "exp": _jet_exp, "log": _jet_log}
_JET3_FUNCS = {"sqrt": _jet3_sqrt, "sin": _jet3_sin, "cos": _jet3_cos,
               "tan": _jet3_tan, "exp": _jet3_exp, "log": _jet3_log}


def _float_call(func: str, v: float) -> float:
    if func == "sqrt":
        if v <= 0.0:
            raise _DomainViolation("sqrt of a non-positive value")
        return math.sqrt(v)
    if func == "log":
        if v <= 0.0:
            raise _DomainViolation("log of a non-positive value")
        return math.log(v)
    if func == "tan" and math.cos(v) == 0.0:
        raise _DomainViolation("tan at a pole")
    return getattr(math, func)(v)


def _float_pow(base: float, e: float) -> float:
    if e.is_integer():
        if base == 0.0 and e < 0:
            raise _DomainViolation("division by zero")
        return base ** int(e)
    if base <= 0.0:
        raise _DomainViolation("real exponent needs a positive base")
    return base**e


# --- Generic evaluator ------------------------------------------------------


def _eval(node: Expression, env, funcs, mode: str):
    """Walk the tree with scalars of the given mode ('float'|'jet2'|'jet3')."""
    try:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            return env[node.index]
        if isinstance(node, Neg):
            return -_eval(node.arg, env, funcs, mode)
        if isinstance(node, Add):
            return _eval(node.lhs, env, funcs, mode) + _eval(node.rhs, env, funcs, mode)
        if isinstance(node, Sub):
            return _eval(node.lhs, env, funcs, mode) - _eval(node.rhs, env, funcs, mode)
        if isinstance(node, Mul):
            return _eval(node.lhs, env, funcs, mode) * _eval(node.rhs, env, funcs, mode)
        if isinstance(node, Div):
            lhs = _eval(node.lhs, env, funcs, mode)
            rhs = _eval(node.rhs, env, funcs, mode)
            if isinstance(rhs, float) and rhs == 0.0:
                raise _DomainViolation("division by zero")
            return lhs / rhs
        if isinstance(node, Pow):
            base = _eval(node.base, env, funcs, mode)
            expo = _eval(node.exponent, env, funcs, mode)
            if isinstance(base, float) and isinstance(expo, float):
                return _float_pow(base, expo)
            if isinstance(base, float):
                base = expo._coerce(base)
            return base**expo
        if isinstance(node, Call):
            arg = _eval(node.arg, env, funcs, mode)
            if isinstance(arg, float):
                return _float_call(node.func, arg)
            return funcs[node.func](arg)
    except _DomainViolation as exc:
        raise EvalDomainError(str(exc), to_source(node)) from None
    raise TypeError(f"not an expression node: {node!r}")


def eval_value(expr: Expression, point) -> float:
    """Plain float evaluation."""
    env = [float(v) for v in point]
    result = _eval(expr, env, None, "float")
    return float(result)


def eval_jet2(expr: Expression, point) -> Jet2:
    """Value, gradient, Hessian at a point, exact to roundoff."""
    pt = np.asarray(point, dtype=float)
    n = pt.shape[0]
    env = [Jet2.variable(pt[i], i, n) for i in range(n)]
    result = _eval(expr, env, _JET2_FUNCS, "jet2")
    if isinstance(result, float):
        return Jet2.constant(result, n)
    return result


def eval_jet3(expr: Expression, point) -> Jet3:
    """Derivatives through order three via third-order jets."""
    pt = np.asarray(point, dtype=float)
    n = pt.shape[0]
    env = [Jet3.variable(pt[i], i, n) for i in range(n)]
    result = _eval(expr, env, _JET3_FUNCS, "jet3")
    if isinstance(result, float):
        return Jet3.constant(result, n)
    return result


def eval_order3(expr: Expression, point) -> np.ndarray:
    """Third-derivative array, canonicalized to exact index symmetry."""
    third = eval_jet3(expr, point).third
    n = third.shape[0]
    out = np.empty_like(third)
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                v = third[i, j, k]
                out[i, j, k] = out[i, k, j] = out[j, i, k] = v
                out[j, k, i] = out[k, i, j] = out[k, j, i] = v
    return out


# --- Finite-difference oracles ----------------------------------------------


def fd_step(x: float) -> float:
    return FD_STEP_SCALE * (1.0 + abs(x))


def fd_step_2nd(x: float) -> float:
    return FD_STEP_SCALE_2ND * (1.0 + abs(x))


def fd_gradient(expr: Expression, point) -> np.ndarray:
    pt = np.asarray(point, dtype=float)
    n = pt.shape[0]
    grad = np.zeros(n)
    for i in range(n):
        h = fd_step(pt[i])
        up, dn = pt.copy(), pt.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (eval_value(expr, up) - eval_value(expr, dn)) / (2.0 * h)
    return grad


def fd_hessian(expr: Expression, point) -> np.ndarray:
    pt = np.asarray(point, dtype=float)
    n = pt.shape[0]
    hess = np.zeros((n, n))
    f0 = eval_value(expr, pt)
    for i in range(n):
        hi = fd_step_2nd(pt[i])
        for j in range(i, n):
            if i == j:
                up, dn = pt.copy(), pt.copy()
                up[i] += hi
                dn[i] -= hi
                hess[i, i] = (eval_value(expr, up) - 2.0 * f0 + eval_value(expr, dn)) / hi**2
            else:
                hj = fd_step_2nd(pt[j])
                pp, pm, mp, mm = pt.copy(), pt.copy(), pt.copy(), pt.copy()
                pp[[i, j]] += [hi, hj]
                pm[i] += hi
                pm[j] -= hj
                mp[i] -= hi
                mp[j] += hj
                mm[[i, j]] -= [hi, hj]
                val = (eval_value(expr, pp) - eval_value(expr, pm)
                       - eval_value(expr, mp) + eval_value(expr, mm)) / (4.0 * hi * hj)
                hess[i, j] = hess[j, i] = val
    return hess


def fd_order3(expr: Expression, point) -> np.ndarray:
    """Central differences of the exact Hessian; fallback for eval_order3."""
    pt = np.asarray(point, dtype=float)
    n = pt.shape[0]
    third = np.zeros((n, n, n))
    for a in range(n):
        h = fd_step(pt[a])
        up, dn = pt.copy(), pt.copy()
        up[a] += h
        dn[a] -= h
        third[a] = (eval_jet2(expr, up).hess - eval_jet2(expr, dn).hess) / (2.0 * h)
    # symmetrize: derivative index commutes with Hessian indices analytically
    return (third + np.transpose(third, (1, 2, 0)) + np.transpose(third, (2, 0, 1))) / 3.0
