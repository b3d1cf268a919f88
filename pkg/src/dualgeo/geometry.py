"""Metric-dependent calculus on a coordinate chart.

The chart is fixed; everything is a dense numpy computation at a point.
Christoffel symbols are stored as ``Gamma[k, i, j]`` = Gamma^k_{ij}, curvature
as ``R[l, k, i, j]`` = R^l_{kij} (so ``Ric_{kj} = R[i, k, i, j]``), and
covariant derivatives prepend the derivative index.  Curvature is assembled
from analytic second derivatives of the metric components (jet arithmetic);
finite differences of the Christoffel symbols stay available in the test suite
as the independent oracle.

Everything is observably pure in (field, point), so grid sweeps may run in
parallel workers as long as reductions keep a fixed order.  The only internal
state is a most-recent-point memo on Metric (constant metrics cache
everything); it swaps an immutable tuple atomically, so concurrent readers
see either the old or the new entry, never a mix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expressions import Expression, is_constant, parse
from .jets import Jet2, Jet3, eval_jet2, eval_jet3, eval_value


class GeometryError(ValueError):
    pass


class SingularMetricError(GeometryError):
    pass


@dataclass(frozen=True)
class ScalarField:
    """Expression-backed scalar field on an n-dimensional chart."""

    expr: Expression
    n: int

    @staticmethod
    def from_source(source: str, n: int, constants=None) -> "ScalarField":
        return ScalarField(parse(source, n, constants=constants), n)

    def value(self, x) -> float:
        return eval_value(self.expr, x)

    def jet2(self, x) -> Jet2:
        return eval_jet2(self.expr, x)

    def jet3(self, x) -> Jet3:
        return eval_jet3(self.expr, x)

    def gradient(self, x) -> np.ndarray:
        return self.jet2(x).grad


@dataclass(frozen=True)
class TensorValue:
    """Dense components at a point plus explicit slot variances.

    ``variance`` holds one entry per slot, "up" (contravariant) or "down"
    (covariant), in storage order.  Contractions in this package name slots
    through these records rather than by implicit position.
    """

    components: np.ndarray
    variance: tuple[str, ...]

    def __post_init__(self):
        if self.components.ndim != len(self.variance):
            raise GeometryError(
                f"variance {self.variance} does not match array of rank "
                f"{self.components.ndim}")
        for v in self.variance:
            if v not in ("up", "down"):
                raise GeometryError(f"bad variance entry {v!r}")

    @property
    def rank(self) -> int:
        return self.components.ndim


class Metric:
    """Symmetric (0,2) expression field with inverse and curvature helpers."""

    def __init__(self, comps: Sequence[Sequence[Expression]],
                 condition_bound: float = 1e8):
        n = len(comps)
        if any(len(row) != n for row in comps):
            raise GeometryError("metric component matrix must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if comps[i][j] != comps[j][i]:
                    raise GeometryError(
                        f"metric components ({i + 1},{j + 1}) and ({j + 1},{i + 1}) "
                        "are not structurally symmetric")
        self.n = n
        self.comps = [[comps[i][j] for j in range(n)] for i in range(n)]
        self.condition_bound = condition_bound
        self._constant = all(is_constant(comps[i][j]) for i in range(n) for j in range(n))
        self._cache: dict = {}
        if self._constant:
            # every derived pointwise quantity is position-independent
            x0 = np.zeros(n)
            self._cache["jets"] = self._eval_jets(x0)
            self._cache["inverse"] = self._checked_inverse(x0)
            self._cache["christoffel"] = self._christoffel_uncached(x0)
            self._cache["christoffel_jacobian"] = self._christoffel_jacobian_uncached(x0)

    @staticmethod
    def from_sources(rows: Sequence[Sequence[str]], constants=None,
                     condition_bound: float = 1e8) -> "Metric":
        n = len(rows)
        comps = [[parse(rows[i][j], n, constants=constants) for j in range(n)]
                 for i in range(n)]
        return Metric(comps, condition_bound)

    # --- pointwise evaluation ------------------------------------------------

    def _eval_jets(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(g, dg, d2g) with dg[a,i,j] = d_a g_ij and d2g[a,b,i,j]."""
        n = self.n
        g = np.zeros((n, n))
        dg = np.zeros((n, n, n))
        d2g = np.zeros((n, n, n, n))
        seen: dict = {}  # equal component trees are evaluated once
        for i in range(n):
            for j in range(i, n):
                comp = self.comps[i][j]
                jet = seen.get(comp)
                if jet is None:
                    jet = eval_jet2(comp, x)
                    seen[comp] = jet
                g[i, j] = g[j, i] = jet.value
                dg[:, i, j] = dg[:, j, i] = jet.grad
                d2g[:, :, i, j] = d2g[:, :, j, i] = jet.hess
        return g, dg, d2g

    def jets(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._constant:
            return self._cache["jets"]
        # memoize the most recent point: one integrator step touches the same
        # point through value/inverse/christoffel several times
        key = np.asarray(x, dtype=float).tobytes()
        hit = self._cache.get("last_jets")
        if hit is not None and hit[0] == key:
            return hit[1]
        result = self._eval_jets(x)
        self._cache["last_jets"] = (key, result)
        return result

    def value(self, x) -> np.ndarray:
        return self.jets(x)[0]

    def _checked_inverse(self, x) -> np.ndarray:
        g = self.value(x)
        cond = np.linalg.cond(g)
        if not np.isfinite(cond) or cond > self.condition_bound:
            raise SingularMetricError(
                f"metric condition number {cond:.3e} exceeds bound "
                f"{self.condition_bound:.1e} at {np.asarray(x)}")
        return np.linalg.inv(g)

    def inverse(self, x) -> np.ndarray:
        if self._constant:
            return self._cache["inverse"]
        key = np.asarray(x, dtype=float).tobytes()
        hit = self._cache.get("last_inverse")
        if hit is not None and hit[0] == key:
            return hit[1]
        result = self._checked_inverse(x)
        self._cache["last_inverse"] = (key, result)
        return result

    def sqrt_det(self, x) -> float:
        det = np.linalg.det(self.value(x))
        if det <= 0.0:
            raise SingularMetricError(f"non-positive metric determinant at {np.asarray(x)}")
        return float(np.sqrt(det))

    # --- connection and curvature -------------------------------------------

    def _christoffel_uncached(self, x) -> np.ndarray:
        g, dg, _ = self.jets(x)
        ginv = self.inverse(x)
        bracket = (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg)
                   - np.einsum("lij->lij", dg))
        return 0.5 * np.einsum("kl,lij->kij", ginv, bracket)

    def christoffel(self, x) -> np.ndarray:
        """Gamma[k,i,j] = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)."""
        if self._constant:
            return self._cache["christoffel"]
        return self._christoffel_uncached(x)

    def _christoffel_jacobian_uncached(self, x) -> np.ndarray:
        g, dg, d2g = self.jets(x)
        ginv = self.inverse(x)
        dginv = -np.einsum("ip,apq,qj->aij", ginv, dg, ginv)
        bracket = (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
        dbracket = (np.einsum("aijl->alij", d2g) + np.einsum("ajil->alij", d2g)
                    - np.einsum("alij->alij", d2g))
        return 0.5 * (np.einsum("akl,lij->akij", dginv, bracket)
                      + np.einsum("kl,alij->akij", ginv, dbracket))

    def christoffel_jacobian(self, x) -> np.ndarray:
        """dGamma[a,k,i,j] = d_a Gamma^k_{ij}, from analytic d2g."""
        if self._constant:
            return self._cache["christoffel_jacobian"]
        return self._christoffel_jacobian_uncached(x)

    def riemann(self, x) -> np.ndarray:
        """R[l,k,i,j] = d_i Gamma^l_{jk} - d_j Gamma^l_{ik} + Gamma^l_{im}Gamma^m_{jk} - Gamma^l_{jm}Gamma^m_{ik}."""
        gamma = self.christoffel(x)
        dgamma = self.christoffel_jacobian(x)
        return (np.einsum("iljk->lkij", dgamma) - np.einsum("jlik->lkij", dgamma)
                + np.einsum("lim,mjk->lkij", gamma, gamma)
                - np.einsum("ljm,mik->lkij", gamma, gamma))

    def riemann_covariant(self, x) -> np.ndarray:
        return np.einsum("pl,lkij->pkij", self.value(x), self.riemann(x))

    def ricci(self, x) -> np.ndarray:
        return np.einsum("ikij->kj", self.riemann(x))

    def scalar_curvature(self, x) -> float:
        return float(np.einsum("ij,ij->", self.inverse(x), self.ricci(x)))


def grid_points(box: Sequence[tuple[float, float]], per_axis: int = 5,
                margin: float = 0.0) -> list[np.ndarray]:
    """Uniform sample grid inside a box, shrunk by an absolute margin per axis."""
    axes = [np.linspace(lo + margin, hi - margin, per_axis) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    return [flat[i] for i in range(flat.shape[0])]


# --- scalar-field calculus ---------------------------------------------------


def hessian(g: Metric, V: ScalarField, x) -> np.ndarray:
    """(nabla^2 V)_{ij} = d_i d_j V - Gamma^k_{ij} d_k V."""
    jet = V.jet2(x)
    gamma = g.christoffel(x)
    return jet.hess - np.einsum("kij,k->ij", gamma, jet.grad)


def laplacian(g: Metric, V: ScalarField, x) -> float:
    return float(np.einsum("ij,ij->", g.inverse(x), hessian(g, V, x)))


def laplacian_divergence_form(g: Metric, V: ScalarField, x) -> float:
    """Independent Laplace-Beltrami path: (1/sqrt|g|) d_i (sqrt|g| g^{ij} d_j V)."""
    gmat, dg, _ = g.jets(x)
    ginv = g.inverse(x)
    jet = V.jet2(x)
    sqrtdet = g.sqrt_det(x)
    dginv = -np.einsum("ip,apq,qj->aij", ginv, dg, ginv)
    # d_a sqrt(det g) = 1/2 sqrt(det g) tr(g^{-1} d_a g)
    dsqrt = 0.5 * sqrtdet * np.einsum("ij,aji->a", ginv, dg)
    flux_div = (np.einsum("i,ij,j->", dsqrt, ginv, jet.grad)
                + sqrtdet * np.einsum("iij,j->", dginv, jet.grad)
                + sqrtdet * np.einsum("ij,ij->", ginv, jet.hess))
    return float(flux_div / sqrtdet)


def sharp(g: Metric, x, t: TensorValue, slot: int) -> TensorValue:
    """Raise the given covariant slot with g^{-1}."""
    if not 0 <= slot < t.rank:
        raise GeometryError(f"slot {slot} out of range for rank {t.rank}")
    if t.variance[slot] != "down":
        raise GeometryError(f"slot {slot} is already contravariant")
    ginv = g.inverse(x)
    comps = np.tensordot(ginv, t.components, axes=([1], [slot]))
    comps = np.moveaxis(comps, 0, slot)
    variance = tuple("up" if k == slot else v for k, v in enumerate(t.variance))
    return TensorValue(comps, variance)


def flat(g: Metric, x, t: TensorValue, slot: int) -> TensorValue:
    """Lower the given contravariant slot with g."""
    if not 0 <= slot < t.rank:
        raise GeometryError(f"slot {slot} out of range for rank {t.rank}")
    if t.variance[slot] != "up":
        raise GeometryError(f"slot {slot} is already covariant")
    gmat = g.value(x)
    comps = np.tensordot(gmat, t.components, axes=([1], [slot]))
    comps = np.moveaxis(comps, 0, slot)
    variance = tuple("down" if k == slot else v for k, v in enumerate(t.variance))
    return TensorValue(comps, variance)


@dataclass(frozen=True)
class TensorField:
    """Expression-backed tensor field: an object array of expressions."""

    comps: np.ndarray  # dtype=object array of Expression
    variance: tuple[str, ...]
    n: int

    @staticmethod
    def from_sources(rows, variance: tuple[str, ...], n: int, constants=None) -> "TensorField":
        shape = np.shape(rows)
        arr = np.empty(shape, dtype=object)
        for idx in np.ndindex(shape):
            src = rows
            for k in idx:
                src = src[k]
            arr[idx] = parse(src, n, constants=constants)
        return TensorField(arr, variance, n)

    def value(self, x) -> TensorValue:
        out = np.zeros(self.comps.shape)
        for idx in np.ndindex(self.comps.shape):
            out[idx] = eval_value(self.comps[idx], x)
        return TensorValue(out, self.variance)

    def jets(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(values, partials) with partials[a, ...] = d_a components."""
        vals = np.zeros(self.comps.shape)
        partials = np.zeros((self.n,) + self.comps.shape)
        for idx in np.ndindex(self.comps.shape):
            jet = eval_jet2(self.comps[idx], x)
            vals[idx] = jet.value
            partials[(slice(None),) + idx] = jet.grad
        return vals, partials


def covariant_derivative(connection, fld: TensorField, x) -> TensorValue:
    """Gamma-corrected derivative; the new covariant slot comes first.

    ``connection`` is anything with a ``coefficients(x) -> Gamma[k,i,j]``
    method (an AffineConnection) or a Metric, whose Levi-Civita coefficients
    are used.
    """
    gamma = (connection.christoffel(x) if isinstance(connection, Metric)
             else connection.coefficients(x))
    vals, partials = fld.jets(x)
    out = partials.copy()
    rank = len(fld.variance)
    for slot, var in enumerate(fld.variance):
        # contract Gamma with the tensor on this slot
        moved = np.moveaxis(vals, slot, 0)
        if var == "up":
            corr = np.einsum("kam,m...->ak...", gamma, moved)
        else:
            corr = -np.einsum("mak,m...->ak...", gamma, moved)
        corr = np.moveaxis(corr, 1, slot + 1)
        out += corr
    return TensorValue(out, ("down",) + fld.variance)
