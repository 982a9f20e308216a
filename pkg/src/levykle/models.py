"""Registry of square-integrable Levy process models.

A model packages everything the samplers and oracles need: the generating
triple (a, sigma^2, nu) under an explicit cutoff convention, the Levy density
pi, the tail integral g(x) = int_x^inf pi(s) ds with its inverse, the
characteristic exponent Psi under the convention E[exp(izX_t)] = exp(-t Psi(z)),
the variance rate alpha = Psi''(0), and the jump mean m = int x nu(dx).

Two cutoff conventions are supported. Under h0 the compensator is omitted and
the per-unit-time mean is a + m; under h1 small jumps are fully compensated
and the mean is the drift coordinate itself. Centering a model rewrites the
drift so the mean rate vanishes; for finite-variation models the centered h0
drift is a = -m.

Processes with two-sided jumps are represented by ``SplitModel``: the
difference of two independent positive-jump parts plus an optional Brownian
component, with the removed mean rate stored for deterministic re-centering.

Integrability of the jump measure (square integrability of large jumps, and
finite variation of small jumps under h0) is checked numerically when a model
is built; a model failing the check is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .special import (
    QuadratureError,
    default_e1_inverse,
    exp_integral_e1,
    invert_monotone,
    quad,
)

__all__ = [
    "CUTOFF_H0",
    "CUTOFF_H1",
    "ModelConditionError",
    "GeneratingTriple",
    "TailIntegral",
    "LevyModel",
    "SplitModel",
    "make_brownian",
    "make_gamma",
    "make_cp_exponential",
    "make_variance_gamma",
    "from_density",
    "center",
    "psi_second_derivative",
    "as_split",
    "model_from_config",
]

CUTOFF_H0 = "h0"
CUTOFF_H1 = "h1"

# Numeric windows for the registration-time integrability checks.
_SMALL_JUMP_WINDOW = (1e-10, 1.0)
_LARGE_JUMP_WINDOW = (1.0, 1e6)
_CONDITION_RTOL = 1e-8
_CONDITION_BOUND = 1e12


class ModelConditionError(ValueError):
    """A candidate model failed a numeric integrability check at registration."""


def _check_conditions(density: Callable, cutoff: str, side: str) -> None:
    # Condition A: large jumps square integrable (membership in the
    # square-integrable classes). Condition B, h0 only: small jumps of
    # finite variation.
    try:
        big = quad(lambda x: x * x * density(x), *_LARGE_JUMP_WINDOW, rtol=_CONDITION_RTOL)
    except QuadratureError as exc:
        raise ModelConditionError(f"{side}: large-jump second moment did not converge") from exc
    if not math.isfinite(big) or big > _CONDITION_BOUND:
        raise ModelConditionError(f"{side}: large-jump second moment too large ({big!r})")
    if cutoff == CUTOFF_H0:
        try:
            small = quad(lambda x: x * density(x), *_SMALL_JUMP_WINDOW, rtol=_CONDITION_RTOL)
        except QuadratureError as exc:
            raise ModelConditionError(f"{side}: small-jump first moment did not converge") from exc
        if not math.isfinite(small) or small > _CONDITION_BOUND:
            raise ModelConditionError(f"{side}: small jumps not of finite variation ({small!r})")


@dataclass(frozen=True)
class GeneratingTriple:
    """Drift, Gaussian variance rate, and jump density under a stated cutoff.

    ``levy_density`` is the density of the jump measure on its support (one
    side at a time here; two-sided processes are built from two one-sided
    parts). ``cutoff`` records whether the drift coordinate is stated with
    small jumps uncompensated (``h0``) or fully compensated (``h1``).
    """

    a: float
    sigma2: float
    levy_density: Callable | None
    cutoff: str

    def __post_init__(self):
        if self.cutoff not in (CUTOFF_H0, CUTOFF_H1):
            raise ValueError(f"cutoff must be 'h0' or 'h1', got {self.cutoff!r}")
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be nonnegative")


@dataclass(frozen=True, eq=False)
class TailIntegral:
    """Tail integral g of a one-sided Levy density, with inverse g^{-1}.

    ``inverse_integral`` maps Y to int_0^{min(Y, g0)} g^{-1}(s) ds, the radial
    primitive used by series centering; it tends to the jump mean as Y grows.
    ``cutoff_scale`` is the scale c in the truncation rule "stop once the
    arrival level exceeds cutoff * T * c", set for gamma-type tails whose
    g^{-1} decays like the documented reference table.
    """

    density: Callable
    g: Callable
    g_inv: Callable
    g0: float
    inverse_integral: Callable[[float], float]
    cutoff_scale: float | None = None


@dataclass(frozen=True, eq=False)
class LevyModel:
    """A named Levy process: triple, tails, exponent, and moment data.

    ``psi`` follows E[exp(izX_t)] = exp(-t psi(z)), so psi(0) = 0,
    psi(-z) = conj(psi(z)) for real z, and alpha = psi''(0) is the variance
    rate Var(X_t) = alpha * t once the model is centered.
    """

    name: str
    triple: GeneratingTriple
    alpha: float
    jump_mean: float
    psi: Callable
    tail_pos: TailIntegral | None = None
    tail_neg: TailIntegral | None = None

    @property
    def g0_pos(self) -> float:
        return self.tail_pos.g0 if self.tail_pos is not None else 0.0

    @property
    def g0_neg(self) -> float:
        return self.tail_neg.g0 if self.tail_neg is not None else 0.0

    @property
    def mean_rate(self) -> float:
        """E[X_1]: drift plus jump mean under h0, the drift alone under h1."""
        if self.triple.cutoff == CUTOFF_H0:
            return self.triple.a + self.jump_mean
        return self.triple.a

    @property
    def is_centered(self) -> bool:
        return abs(self.mean_rate) <= 1e-12 * max(1.0, abs(self.jump_mean))


def center(model: LevyModel) -> LevyModel:
    """Remove the mean rate so the returned model satisfies psi'(0) = 0.

    For finite-variation models under h0 the new drift is a = -m. Models that
    are already centered are returned unchanged.
    """
    mu = model.mean_rate
    if not math.isfinite(mu):
        raise ValueError(f"model {model.name!r} has non-finite mean rate")
    if mu == 0.0:
        return model
    old_psi = model.psi

    def centered_psi(z, _psi=old_psi, _mu=mu):
        return _psi(z) + 1j * np.asarray(z) * _mu

    return replace(
        model,
        name=f"centered({model.name})",
        triple=replace(model.triple, a=model.triple.a - mu),
        psi=centered_psi,
    )


def psi_second_derivative(model, h: float = 1e-4) -> float:
    """alpha = psi''(0) by central differences with one Richardson step.

    Works for both :class:`LevyModel` and :class:`SplitModel`; serves as a
    cross-check against the stored ``alpha``. A non-finite result signals a
    model whose large jumps are not square integrable.
    """
    psi = model.psi

    def second(step: float) -> float:
        # psi(0) = 0, so the centered second difference needs two evaluations.
        return float((psi(step) + psi(-step)).real) / (step * step)

    coarse = second(h)
    fine = second(h / 2.0)
    val = (4.0 * fine - coarse) / 3.0
    if not math.isfinite(val):
        raise ModelConditionError("psi''(0) is not finite; model violates square integrability")
    return val


def make_brownian(sigma2: float) -> LevyModel:
    """Brownian motion with variance rate sigma2: no jumps, psi(z) = sigma2 z^2 / 2."""
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")

    def psi(z, _s=float(sigma2)):
        return 0.5 * _s * np.asarray(z) ** 2

    triple = GeneratingTriple(a=0.0, sigma2=float(sigma2), levy_density=None, cutoff=CUTOFF_H0)
    return LevyModel(
        name=f"brownian(sigma2={sigma2:g})",
        triple=triple,
        alpha=float(sigma2),
        jump_mean=0.0,
        psi=psi,
    )


def make_gamma(c: float, rho: float, e1_inverse=None) -> LevyModel:
    """Gamma subordinator with Levy density pi(x) = c exp(-rho x) / x on (0, inf).

    The tail integral is g(x) = c E1(rho x) with inverse driven by the shared
    E1 lookup table (or a caller-supplied one); g(0) = inf, the jump mean is
    m = c / rho, the uncentered exponent is psi(z) = c log(1 - iz/rho), and
    alpha = c / rho^2.
    """
    if c <= 0.0 or rho <= 0.0:
        raise ValueError("c and rho must be positive")
    c, rho = float(c), float(rho)
    table = e1_inverse if e1_inverse is not None else default_e1_inverse()

    def density(x, _c=c, _r=rho):
        return _c * np.exp(-_r * np.asarray(x)) / np.asarray(x)

    def g(x, _c=c, _r=rho):
        return _c * exp_integral_e1(_r * np.asarray(x))

    def g_inv(y, _c=c, _r=rho, _t=table):
        return _t(np.asarray(y) / _c) / _r

    lo_cut = c * table.domain_lo

    def inverse_integral(Y, _c=c, _r=rho, _gi=g_inv, _lo=lo_cut):
        if Y <= _lo:
            return 0.0
        return (_c / _r) * math.exp(-_r * float(_gi(Y)))

    _check_conditions(density, CUTOFF_H0, "gamma")

    def psi(z, _c=c, _r=rho):
        return _c * np.log(1.0 - 1j * np.asarray(z) / _r)

    triple = GeneratingTriple(a=0.0, sigma2=0.0, levy_density=density, cutoff=CUTOFF_H0)
    tail = TailIntegral(
        density=density,
        g=g,
        g_inv=g_inv,
        g0=math.inf,
        inverse_integral=inverse_integral,
        cutoff_scale=c,
    )
    return LevyModel(
        name=f"gamma(c={c:g},rho={rho:g})",
        triple=triple,
        alpha=c / rho**2,
        jump_mean=c / rho,
        psi=psi,
        tail_pos=tail,
    )


def make_cp_exponential(rate: float, rho: float) -> LevyModel:
    """Compound Poisson subordinator: intensity ``rate``, Exp(rho) jump sizes.

    pi(x) = rate * rho * exp(-rho x), so g(x) = rate * exp(-rho x) is finite
    at zero (finite activity) and inverts in closed form. The jump mean is
    rate / rho and alpha = 2 * rate / rho^2.
    """
    if rate <= 0.0 or rho <= 0.0:
        raise ValueError("rate and rho must be positive")
    rate, rho = float(rate), float(rho)

    def density(x, _r=rate, _p=rho):
        return _r * _p * np.exp(-_p * np.asarray(x))

    def g(x, _r=rate, _p=rho):
        return _r * np.exp(-_p * np.asarray(x))

    def g_inv(y, _r=rate, _p=rho):
        y = np.asarray(y, dtype=float)
        out = np.log(_r / np.minimum(np.maximum(y, 1e-300), _r)) / _p
        return out if out.ndim else float(out)

    def inverse_integral(Y, _r=rate, _p=rho):
        Yc = min(float(Y), _r)
        if Yc <= 0.0:
            return 0.0
        return (Yc / _p) * (1.0 + math.log(_r / Yc))

    _check_conditions(density, CUTOFF_H0, "cp_exponential")

    def psi(z, _r=rate, _p=rho):
        z = np.asarray(z)
        return -1j * _r * z / (_p - 1j * z)

    triple = GeneratingTriple(a=0.0, sigma2=0.0, levy_density=density, cutoff=CUTOFF_H0)
    tail = TailIntegral(
        density=density,
        g=g,
        g_inv=g_inv,
        g0=rate,
        inverse_integral=inverse_integral,
    )
    return LevyModel(
        name=f"cp_exponential(rate={rate:g},rho={rho:g})",
        triple=triple,
        alpha=2.0 * rate / rho**2,
        jump_mean=rate / rho,
        psi=psi,
        tail_pos=tail,
    )


def from_density(
    name: str,
    density: Callable,
    *,
    cutoff: str = CUTOFF_H0,
    psi: Callable | None = None,
    g0: float | None = None,
    jump_bracket: tuple[float, float] = (1e-12, 1e4),
) -> LevyModel:
    """Register a positive-jump model from its Levy density alone.

    The tail integral is computed by quadrature and its inverse by bracketed
    root finding; closed-form factories should be preferred when available.
    Densities positive only on a sub-interval are tolerated through the same
    clamping convention the lookup tables use (queries beyond the tail range
    return boundary values).
    """
    _check_conditions(density, cutoff, name)
    jump_mean = quad(lambda x: x * density(x), 0.0, math.inf, rtol=1e-10)
    alpha = quad(lambda x: x * x * density(x), 0.0, math.inf, rtol=1e-10)

    tail_above_one = quad(density, 1.0, math.inf, rtol=1e-10)

    def _g_scalar(v, _d=density, _t=tail_above_one):
        # Split at 1 so near-singular densities integrate cleanly.
        if v >= 1.0:
            return quad(_d, v, math.inf, rtol=1e-9)
        return quad(_d, v, 1.0, rtol=1e-9) + _t

    def g(x, _f=_g_scalar):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([_f(float(v)) for v in xs])
        return out if np.asarray(x).ndim else float(out[0])

    if g0 is None:
        try:
            g0_val = quad(density, 0.0, math.inf, rtol=1e-8)
        except QuadratureError:
            g0_val = math.inf
        if g0_val > _CONDITION_BOUND:
            g0_val = math.inf
    else:
        g0_val = float(g0)

    def g_inv(y, _g=g, _b=jump_bracket, _g0=g0_val):
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(ys)
        hi_val = float(_g(_b[0]))
        lo_val = float(_g(_b[1]))
        for i, v in enumerate(ys):
            if v >= _g0:
                out[i] = 0.0
            elif v > hi_val:
                out[i] = _b[0]
            elif v < lo_val:
                out[i] = _b[1]
            else:
                out[i] = invert_monotone(_g, v, _b, rtol=1e-10)
        return out if np.asarray(y).ndim else float(out[0])

    def inverse_integral(Y, _gi=g_inv, _g0=g0_val):
        Yc = min(float(Y), _g0)
        if Yc <= 0.0:
            return 0.0
        return quad(lambda s: float(_gi(s)), 0.0, Yc, rtol=1e-8)

    if psi is None:
        def _psi_scalar(z, _d=density):
            zc = complex(z)
            return -quad(lambda x: (np.exp(1j * zc * x) - 1.0) * _d(x), 0.0, math.inf, rtol=1e-9)

        def psi(z, _f=_psi_scalar):
            zs = np.asarray(z)
            if zs.ndim == 0:
                return _f(complex(zs))
            return np.array([_f(complex(v)) for v in zs.ravel()]).reshape(zs.shape)

    triple = GeneratingTriple(a=0.0, sigma2=0.0, levy_density=density, cutoff=cutoff)
    tail = TailIntegral(
        density=density,
        g=g,
        g_inv=g_inv,
        g0=g0_val,
        inverse_integral=inverse_integral,
    )
    return LevyModel(
        name=name,
        triple=triple,
        alpha=float(alpha),
        jump_mean=float(jump_mean),
        psi=psi,
        tail_pos=tail,
    )


@dataclass(frozen=True, eq=False)
class SplitModel:
    """Difference of two independent positive-jump parts plus a Gaussian part.

    ``pos`` and ``neg`` are uncentered subordinator-type models; the sampler
    centers each part on the fly. ``mean_rate`` is the deterministic
    i psi'(0) of the composite, re-added per unit time when paths are
    reconstructed. ``psi`` is the exponent of the centered composite;
    ``psi_uncentered`` keeps the raw combination for reference.
    """

    name: str
    pos: LevyModel | None
    neg: LevyModel | None
    gaussian_sigma2: float = 0.0

    @property
    def mean_rate(self) -> float:
        mu = 0.0
        if self.pos is not None:
            mu += self.pos.mean_rate
        if self.neg is not None:
            mu -= self.neg.mean_rate
        return mu

    @property
    def alpha(self) -> float:
        a = self.gaussian_sigma2
        if self.pos is not None:
            a += self.pos.alpha
        if self.neg is not None:
            a += self.neg.alpha
        return a

    def psi_uncentered(self, z):
        z = np.asarray(z)
        val = 0.5 * self.gaussian_sigma2 * z**2 + 0j
        if self.pos is not None:
            val = val + self.pos.psi(z)
        if self.neg is not None:
            val = val + self.neg.psi(-z)
        return val

    def psi(self, z):
        """Characteristic exponent of the centered composite (psi'(0) = 0)."""
        return self.psi_uncentered(z) + 1j * np.asarray(z) * self.mean_rate

    def centered_parts(self) -> tuple[LevyModel | None, LevyModel | None]:
        pos = center(self.pos) if self.pos is not None else None
        neg = center(self.neg) if self.neg is not None else None
        return pos, neg


def make_variance_gamma(
    c_pos: float = 1.0,
    rho_pos: float = 1.0,
    c_neg: float = 1.0,
    rho_neg: float = 2.0,
) -> SplitModel:
    """Variance gamma process as the difference of two gamma subordinators.

    With the reference parameters (1, 1, 1, 2) the uncentered exponent is
    psi(z) = log(1 - iz) + log(1 + iz/2), the mean rate is 1/2, and
    alpha = 1.25.
    """
    if min(c_pos, rho_pos, c_neg, rho_neg) <= 0.0:
        raise ValueError("all variance gamma parameters must be positive")
    return SplitModel(
        name=f"variance_gamma({c_pos:g},{rho_pos:g},{c_neg:g},{rho_neg:g})",
        pos=make_gamma(c_pos, rho_pos),
        neg=make_gamma(c_neg, rho_neg),
        gaussian_sigma2=0.0,
    )


def as_split(model: LevyModel) -> SplitModel:
    """View a one-sided (or jump-free) model as a composite for the samplers."""
    has_jumps = model.tail_pos is not None
    return SplitModel(
        name=model.name,
        pos=model if has_jumps else None,
        neg=None,
        gaussian_sigma2=model.triple.sigma2,
    )


def model_from_config(cfg: dict) -> SplitModel:
    """Build the composite model described by a configuration mapping.

    Recognized values of ``cfg["model"]``: ``brownian`` (``sigma2``),
    ``gamma`` (``c``, ``rho``), ``cp_exponential`` (``rate``, ``rho``) and
    ``variance_gamma`` (``c_pos``, ``rho_pos``, ``c_neg``, ``rho_neg``).
    """
    kind = cfg.get("model")
    if kind == "brownian":
        return as_split(make_brownian(float(cfg.get("sigma2", 1.0))))
    if kind == "gamma":
        return as_split(make_gamma(float(cfg.get("c", 1.0)), float(cfg.get("rho", 1.0))))
    if kind == "cp_exponential":
        return as_split(make_cp_exponential(float(cfg.get("rate", 1.0)), float(cfg.get("rho", 1.0))))
    if kind == "variance_gamma":
        return make_variance_gamma(
            float(cfg.get("c_pos", 1.0)),
            float(cfg.get("rho_pos", 1.0)),
            float(cfg.get("c_neg", 1.0)),
            float(cfg.get("rho_neg", 2.0)),
        )
    raise ValueError(f"unknown model kind {kind!r}")
