"""Input distributions: density, analytic density gradient, and sampling.

An :class:`InputPrior` couples the nominal input distribution with the
box on which the search operates.  Gaussian, uniform-on-box, and products
of one-dimensional marginals (normal, lognormal, uniform, each optionally
rescaled onto the unit interval) are supported.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .optimize import BoxBounds

__all__ = ["InputPrior", "NormalMarginal", "LognormalMarginal",
           "UniformMarginal", "RescaledMarginal"]

_SQRT2PI = math.sqrt(2.0 * math.pi)


class NormalMarginal:
    """One-dimensional normal distribution."""

    def __init__(self, mean, std):
        if std <= 0:
            raise ValueError("std must be positive")
        self.m = float(mean)
        self.s = float(std)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.m) / self.s
        return np.exp(-0.5 * z * z) / (self.s * _SQRT2PI)

    def pdf_grad(self, x):
        z = (np.asarray(x, dtype=float) - self.m) / self.s
        return -z / self.s * self.pdf(x)

    def sample(self, n, rng):
        return self.m + self.s * rng.standard_normal(n)

    def mean(self):
        return self.m

    def std(self):
        return self.s


class LognormalMarginal:
    """Lognormal with parameters of the underlying normal (log scale)."""

    def __init__(self, log_mean, log_std):
        if log_std <= 0:
            raise ValueError("log_std must be positive")
        self.lm = float(log_mean)
        self.ls = float(log_std)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=float)
        pos = x > 0
        z = (np.log(x[pos]) - self.lm) / self.ls
        out[pos] = np.exp(-0.5 * z * z) / (x[pos] * self.ls * _SQRT2PI)
        return out

    def pdf_grad(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=float)
        pos = x > 0
        z = (np.log(x[pos]) - self.lm) / self.ls
        out[pos] = -self.pdf(x)[pos] / x[pos] * (1.0 + z / self.ls)
        return out

    def sample(self, n, rng):
        return np.exp(self.lm + self.ls * rng.standard_normal(n))

    def mean(self):
        return math.exp(self.lm + 0.5 * self.ls ** 2)

    def std(self):
        v = (math.exp(self.ls ** 2) - 1.0) * math.exp(2 * self.lm + self.ls ** 2)
        return math.sqrt(v)


class UniformMarginal:
    """Uniform on [lo, hi]."""

    def __init__(self, lo, hi):
        if not lo < hi:
            raise ValueError("lo must be below hi")
        self.lo = float(lo)
        self.hi = float(hi)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return inside / (self.hi - self.lo)

    def pdf_grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=n)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def std(self):
        return (self.hi - self.lo) / math.sqrt(12.0)


class RescaledMarginal:
    """A marginal expressed in coordinates u = (x - lo) / (hi - lo).

    The density picks up the Jacobian factor (hi - lo), so a physical
    distribution can be carried into unit-cube search coordinates.
    """

    def __init__(self, base, lo, hi):
        if not lo < hi:
            raise ValueError("lo must be below hi")
        self.base = base
        self.lo = float(lo)
        self.w = float(hi - lo)

    def _phys(self, u):
        return self.lo + self.w * np.asarray(u, dtype=float)

    def pdf(self, u):
        return self.base.pdf(self._phys(u)) * self.w

    def pdf_grad(self, u):
        return self.base.pdf_grad(self._phys(u)) * self.w ** 2

    def sample(self, n, rng):
        return (self.base.sample(n, rng) - self.lo) / self.w

    def mean(self):
        return (self.base.mean() - self.lo) / self.w

    def std(self):
        return self.base.std() / self.w


@dataclass(frozen=True)
class InputPrior:
    """Nominal input distribution p_x together with the search box.

    Exactly one of two representations is active: a joint Gaussian
    (``gaussian_mean`` and ``gaussian_cov`` set) or a product of 1-D
    marginals (``marginals`` set).
    """

    bounds: BoxBounds
    gaussian_mean: np.ndarray = None
    gaussian_cov: np.ndarray = None
    marginals: tuple = None

    def __post_init__(self):
        if (self.marginals is None) == (self.gaussian_mean is None):
            raise ValueError("specify either a Gaussian or marginals")
        if self.gaussian_mean is not None:
            m = np.atleast_1d(np.asarray(self.gaussian_mean, dtype=float))
            C = np.asarray(self.gaussian_cov, dtype=float)
            if C.ndim == 1:
                C = np.diag(C)
            if C.shape != (m.size, m.size):
                raise ValueError("covariance shape mismatch")
            object.__setattr__(self, "gaussian_mean", m)
            object.__setattr__(self, "gaussian_cov", C)
            L = np.linalg.cholesky(C)
            object.__setattr__(self, "_chol", L)
            logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
            lognorm = -0.5 * (m.size * math.log(2 * math.pi) + logdet)
            object.__setattr__(self, "_lognorm", lognorm)
            if m.size != self.bounds.dim:
                raise ValueError("bounds dimension mismatch")
        else:
            if len(self.marginals) != self.bounds.dim:
                raise ValueError("bounds dimension mismatch")
            object.__setattr__(self, "marginals", tuple(self.marginals))

    # -- constructors -----------------------------------------------------

    @classmethod
    def gaussian(cls, mean, cov, bounds):
        return cls(bounds=bounds, gaussian_mean=mean, gaussian_cov=cov)

    @classmethod
    def uniform(cls, lo, hi):
        bounds = BoxBounds(lo, hi)
        margs = tuple(UniformMarginal(lo_j, hi_j)
                      for lo_j, hi_j in zip(bounds.lo, bounds.hi))
        return cls(bounds=bounds, marginals=margs)

    @classmethod
    def product(cls, marginals, bounds):
        return cls(bounds=bounds, marginals=tuple(marginals))

    # -- queries -----------------------------------------------------------

    @property
    def dim(self):
        return self.bounds.dim

    @property
    def is_gaussian(self):
        return self.gaussian_mean is not None

    def pdf(self, x):
        """Density at one point (d,) or a batch (m, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if self.is_gaussian:
            Z = solve_triangular(self._chol, (X - self.gaussian_mean).T,
                                 lower=True)
            out = np.exp(self._lognorm - 0.5 * np.sum(Z * Z, axis=0))
        else:
            out = np.ones(X.shape[0])
            for j, marg in enumerate(self.marginals):
                out *= marg.pdf(X[:, j])
        return float(out[0]) if single else out

    def pdf_grad(self, x):
        """Analytic gradient of the density at one point (d,)."""
        x = np.asarray(x, dtype=float).ravel()
        if self.is_gaussian:
            p = self.pdf(x)
            s = cho_solve((self._chol, True), x - self.gaussian_mean)
            return -p * s
        vals = np.array([m.pdf(np.array([x[j]]))[0]
                         for j, m in enumerate(self.marginals)])
        grads = np.array([m.pdf_grad(np.array([x[j]]))[0]
                          for j, m in enumerate(self.marginals)])
        out = np.empty(self.dim)
        for j in range(self.dim):
            rest = np.prod(np.delete(vals, j))
            out[j] = grads[j] * rest
        return out

    def sample(self, n, rng):
        """Draw n samples, shape (n, d)."""
        if self.is_gaussian:
            z = rng.standard_normal((n, self.dim))
            return self.gaussian_mean + z @ self._chol.T
        out = np.empty((n, self.dim))
        for j, marg in enumerate(self.marginals):
            out[:, j] = marg.sample(n, rng)
        return out

    def std(self):
        """Per-dimension standard deviation."""
        if self.is_gaussian:
            return np.sqrt(np.diag(self.gaussian_cov))
        return np.array([m.std() for m in self.marginals])

    def mean(self):
        if self.is_gaussian:
            return self.gaussian_mean.copy()
        return np.array([m.mean() for m in self.marginals])
