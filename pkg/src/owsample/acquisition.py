"""Acquisition functions with analytic values and gradients.

Six criteria, all maximized:

* US           posterior variance.
* US_LW_RAW    variance times the raw likelihood ratio.
* US_LW        variance times the Gaussian-mixture weight.
* IVR          integrated variance reduction from a noiseless ghost
               observation, in the closed form
               a(x) * s2(x) = khat(x,x) + u^T (khatXX u - 2 khat(X,x)),
               u = K^{-1} k(X,x).
* IVR_IW       the same integral weighted by the input density (exact
               single Gaussian when the prior is Gaussian, otherwise a
               mixture surrogate of the prior).
* IVR_LW       the integral weighted by the likelihood-ratio mixture.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import gp, weights as lw

__all__ = ["AcquisitionKind", "AcquisitionContext", "acq_value", "acq_grad",
           "acq_value_and_grad", "acq_value_batch"]

# Points with variance this far below the signal variance are treated as
# already observed: their acquisition value and gradient are zero.
VARIANCE_GUARD = 1e-14


class AcquisitionKind(enum.Enum):
    US = "US"
    US_LW_RAW = "US_LW_RAW"
    US_LW = "US_LW"
    IVR = "IVR"
    IVR_IW = "IVR_IW"
    IVR_LW = "IVR_LW"

    @classmethod
    def from_name(cls, name):
        try:
            return cls[str(name).replace("-", "_").upper()]
        except KeyError:
            raise ValueError(f"unknown acquisition kind: {name!r}") from None


@dataclass
class AcquisitionContext:
    """Everything an acquisition evaluation needs besides the query point."""

    model: gp.GPModel
    prior: object = None
    weight_gmm: object = None
    prior_gmm: object = None
    outdens: object = None
    _state: dict = field(default_factory=dict, repr=False)

    @classmethod
    def for_kind(cls, kind, model, prior=None, weight_gmm=None,
                 prior_gmm=None, outdens=None):
        """Build a context and validate the components the kind requires."""
        ctx = cls(model=model, prior=prior, weight_gmm=weight_gmm,
                  prior_gmm=prior_gmm, outdens=outdens)
        ctx.validate(kind)
        return ctx

    def validate(self, kind):
        if kind in (AcquisitionKind.US_LW_RAW,):
            if self.outdens is None or self.prior is None:
                raise ValueError(f"{kind.value} requires prior and outdens")
        if kind in (AcquisitionKind.US_LW, AcquisitionKind.IVR_LW):
            if self.weight_gmm is None:
                raise ValueError(f"{kind.value} requires weight_gmm")
        if kind is AcquisitionKind.IVR_IW:
            gaussian = self.prior is not None and self.prior.is_gaussian
            if not gaussian and self.prior_gmm is None:
                raise ValueError(
                    "IVR_IW requires a Gaussian prior or prior_gmm")


class _IvrEngine:
    """Shared assembly for the IVR family.

    components: None for the unweighted integral, otherwise a list of
    (alpha, _GaussComponent) pairs.
    """

    def __init__(self, model, components):
        self.model = model
        self.components = components
        hyper = model.hyper
        X = model.data.inputs
        if components is None:
            self.khatXX = gp.khat_matrix(X, X, hyper)
            self.k_self_const = gp.khat_self(hyper)
        else:
            self.khatXX = sum(a * c.value_matrix(X, X)
                              for a, c in components)
        self._inv_theta = 1.0 / hyper.lengthscales
        self._guard = VARIANCE_GUARD * hyper.signal_variance

    def value(self, x):
        return self.value_and_grad(x, with_grad=False)[0]

    def value_batch(self, Xq):
        model = self.model
        X = model.data.inputs
        Xq = np.atleast_2d(Xq)
        kmat = gp.kernel_matrix(X, Xq, model.hyper)
        U = cho_solve((model.chol_factor, True), kmat, check_finite=False)
        s2 = np.maximum(model.hyper.signal_variance
                        - np.einsum("ij,ij->j", kmat, U), 0.0)
        if self.components is None:
            k_self = np.full(Xq.shape[0], self.k_self_const)
            kXq = gp.khat_matrix(X, Xq, model.hyper)
        else:
            k_self = np.zeros(Xq.shape[0])
            kXq = np.zeros((model.n, Xq.shape[0]))
            for a, c in self.components:
                k_self += a * c.value_self(Xq)
                kXq += a * c.value_matrix(X, Xq)
        S = (k_self + np.einsum("ij,ij->j", U, self.khatXX @ U)
             - 2.0 * np.einsum("ij,ij->j", U, kXq))
        S = np.maximum(S, 0.0)
        guard = s2 > self._guard
        out = np.zeros(Xq.shape[0])
        np.divide(S, s2, out=out, where=guard)
        return out

    def value_and_grad(self, x, with_grad=True):
        model = self.model
        X = model.data.inputs
        hyper = model.hyper
        d = x.size

        diff = x[None, :] - X
        kv = hyper.signal_variance * np.exp(
            -0.5 * np.sum(diff * diff * self._inv_theta[None, :], axis=1))
        # One triangular solve covers k(X,x) and its Jacobian columns.
        J = -kv[:, None] * diff * self._inv_theta[None, :]
        sol = cho_solve((model.chol_factor, True), np.hstack([kv[:, None], J]),
                        check_finite=False)
        u, Ju = sol[:, 0], sol[:, 1:]
        s2 = hyper.signal_variance - float(kv @ u)
        if s2 <= self._guard:
            return 0.0, np.zeros(d)

        if self.components is None:
            k_self = self.k_self_const
            dk_self = 0.0
            kXx = gp.khat_matrix(X, x.reshape(1, -1), hyper).ravel()
            G = kXx[:, None] * (-0.5 * diff * self._inv_theta[None, :])
        else:
            k_self = 0.0
            dk_self = np.zeros(d)
            kXx = np.zeros(model.n)
            G = np.zeros_like(X)
            for a, c in self.components:
                v_self = float(c.value_self(x.reshape(1, -1))[0])
                k_self += a * v_self
                vals = c.value_vec(X, x)
                kXx += a * vals
                if with_grad:
                    dk_self += -a * v_self * (c.A_inv @ (x - c.omega))
                    # Gradient w.r.t. x of khat_i(X_j, x); the closed form
                    # is symmetric so the arguments swap roles.
                    m = 0.5 * (X + x[None, :]) - c.omega[None, :]
                    G += a * vals[:, None] * (
                        -0.5 * diff * self._inv_theta[None, :]
                        - 0.5 * (m @ c.A_inv))

        Ku = self.khatXX @ u
        S = k_self + float(u @ Ku) - 2.0 * float(u @ kXx)
        S = max(S, 0.0)
        val = S / s2
        if not with_grad:
            return val, None
        dS = dk_self + 2.0 * (Ju.T @ Ku) - 2.0 * (Ju.T @ kXx + G.T @ u)
        ds2 = -2.0 * (J.T @ u)
        grad = (dS - val * ds2) / s2
        return val, grad


def _ivr_components(kind, ctx):
    hyper = ctx.model.hyper
    if kind is AcquisitionKind.IVR:
        return None
    if kind is AcquisitionKind.IVR_IW:
        if ctx.prior is not None and ctx.prior.is_gaussian:
            comp = gp._GaussComponent(hyper, ctx.prior.gaussian_mean,
                                      ctx.prior.gaussian_cov)
            return [(1.0, comp)]
        gmm = ctx.prior_gmm
    else:
        gmm = ctx.weight_gmm
    return [(float(a), gp._GaussComponent(hyper, mu, S))
            for a, mu, S in zip(gmm.weights, gmm.means, gmm.covariances)]


def _engine(kind, ctx):
    eng = ctx._state.get(kind)
    if eng is None:
        ctx.validate(kind)
        eng = _IvrEngine(ctx.model, _ivr_components(kind, ctx))
        ctx._state[kind] = eng
    return eng


def _us_value_grad(ctx, x, with_grad):
    if not with_grad:
        return gp.posterior_var(ctx.model, x), None
    return gp.posterior_var_and_grad(ctx.model, x)


def acq_value_and_grad(kind, ctx, x):
    """Acquisition value and analytic gradient at one point."""
    x = np.asarray(x, dtype=float).ravel()
    model = ctx.model
    guard = VARIANCE_GUARD * model.hyper.signal_variance

    if kind is AcquisitionKind.US:
        s2, g = _us_value_grad(ctx, x, True)
        if s2 <= guard:
            return 0.0, np.zeros_like(x)
        return s2, g

    if kind is AcquisitionKind.US_LW_RAW:
        s2, g = _us_value_grad(ctx, x, True)
        if s2 <= guard:
            return 0.0, np.zeros_like(x)
        w = float(lw.likelihood_ratio(x, ctx.prior, model, ctx.outdens))
        dw = lw.likelihood_ratio_grad(x, ctx.prior, model, ctx.outdens)
        return s2 * w, w * g + s2 * dw

    if kind is AcquisitionKind.US_LW:
        s2, g = _us_value_grad(ctx, x, True)
        if s2 <= guard:
            return 0.0, np.zeros_like(x)
        w = float(lw.gmm_eval(ctx.weight_gmm, x))
        dw = lw.gmm_eval_grad(ctx.weight_gmm, x)
        return s2 * w, w * g + s2 * dw

    if kind in (AcquisitionKind.IVR, AcquisitionKind.IVR_IW,
                AcquisitionKind.IVR_LW):
        return _engine(kind, ctx).value_and_grad(x)

    raise ValueError(f"unknown acquisition kind: {kind!r}")


def acq_value(kind, ctx, x):
    """Acquisition value at one point."""
    x = np.asarray(x, dtype=float).ravel()
    model = ctx.model
    guard = VARIANCE_GUARD * model.hyper.signal_variance
    if kind is AcquisitionKind.US:
        s2 = gp.posterior_var(model, x)
        return 0.0 if s2 <= guard else s2
    if kind is AcquisitionKind.US_LW_RAW:
        s2 = gp.posterior_var(model, x)
        if s2 <= guard:
            return 0.0
        return s2 * float(lw.likelihood_ratio(x, ctx.prior, model,
                                              ctx.outdens))
    if kind is AcquisitionKind.US_LW:
        s2 = gp.posterior_var(model, x)
        if s2 <= guard:
            return 0.0
        return s2 * float(lw.gmm_eval(ctx.weight_gmm, x))
    return _engine(kind, ctx).value(x)


def acq_grad(kind, ctx, x):
    """Acquisition gradient at one point."""
    return acq_value_and_grad(kind, ctx, x)[1]


def acq_value_batch(kind, ctx, X):
    """Acquisition values at a batch of points, shape (m,)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    model = ctx.model
    guard = VARIANCE_GUARD * model.hyper.signal_variance
    if kind in (AcquisitionKind.US, AcquisitionKind.US_LW_RAW,
                AcquisitionKind.US_LW):
        s2 = gp.posterior_var(model, X)
        s2 = np.where(s2 <= guard, 0.0, s2)
        if kind is AcquisitionKind.US:
            return s2
        if kind is AcquisitionKind.US_LW_RAW:
            w = lw.likelihood_ratio(X, ctx.prior, model, ctx.outdens)
        else:
            w = lw.gmm_eval(ctx.weight_gmm, X)
        return s2 * w
    return _engine(kind, ctx).value_batch(X)
