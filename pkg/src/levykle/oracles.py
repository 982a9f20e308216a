"""Independent oracles used to validate the samplers.

Every check here deliberately avoids the shot-noise code path where possible
so that failures localize: characteristic exponents of coefficient vectors
are obtained by adaptive quadrature of the model's closed-form exponent,
subordinator marginals come from the direct series representation, and
finite-activity coefficients are integrated piecewise-exactly from the jump
times of a simulated path using antiderivatives written out locally. The
only ingredient shared with the samplers is the tail inverse g^{-1}, which
is pinned separately by roundtrip tests.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
import scipy.stats

from .basis import KleBasis
from .models import LevyModel, SplitModel, center
from .shotnoise import ArrivalStream, ShotConfig, TruncationCapError, gamma_stop_level
from .special import quad

__all__ = [
    "KsResult",
    "coeff_char_exponent",
    "empirical_cf",
    "direct_series_subordinator",
    "brute_force_coeffs",
    "ks_two_sample",
    "mixed_fourth_cumulant",
]


def _centered_psi(model):
    """The centered characteristic exponent of a model or composite."""
    if isinstance(model, SplitModel):
        return model.psi
    if model.is_centered:
        return model.psi
    return center(model).psi


def coeff_char_exponent(model, basis: KleBasis, z, rtol: float = 1e-10) -> complex:
    """Characteristic exponent of the coefficient vector at the point z.

    Quadrature of psi(<z, u(t)>) over [0, T], where u(t) is the integrated
    basis vector and psi the centered exponent of the model. The coefficient
    vector's distribution satisfies E[exp(i<z, Z>)] = exp(-value).
    """
    zz = np.asarray(z, dtype=float)
    if zz.shape != (basis.d,):
        raise ValueError(f"z must have shape ({basis.d},)")
    psi = _centered_psi(model)

    def integrand(t):
        return psi(float(zz @ basis.u_vector(t)))

    return complex(quad(integrand, 0.0, basis.T, rtol=rtol))


def empirical_cf(samples, z) -> complex:
    """(1/N) sum_n exp(i <z, Z_n>) over a set of coefficient samples.

    ``samples`` may be an (N, d) array or an iterable of coefficient-sample
    objects. The standard error of each component is at most 1/sqrt(N).
    """
    if isinstance(samples, np.ndarray):
        Z = samples
    else:
        Z = np.stack([np.asarray(getattr(s, "z", s), dtype=float) for s in samples])
    if Z.ndim != 2 or Z.shape[0] < 1:
        raise ValueError("need at least one sample")
    zz = np.asarray(z, dtype=float)
    return complex(np.exp(1j * (Z @ zz)).mean())


def direct_series_subordinator(
    model: LevyModel,
    T: float,
    t,
    stream: ArrivalStream,
    cfg: ShotConfig | None = None,
):
    """Sample the uncentered subordinator X_t directly from an arrival stream.

    Evaluates sum_i g_inv(Gamma_i / T) 1(T U_i < t) with the same truncation
    level the coefficient samplers use, making it a distributional oracle for
    the expansion at matching parameters. ``t`` may be a scalar or an array.
    The stream must extend beyond the truncation level.
    """
    if model.tail_pos is None:
        raise ValueError("direct series requires a positive-jump model")
    if cfg is None:
        cfg = ShotConfig(seed=0)
    stop = gamma_stop_level(model.tail_pos, T, cfg)
    gammas = stream.gammas
    n = int(np.searchsorted(gammas, stop, side="left"))
    if n >= len(gammas):
        raise TruncationCapError(len(gammas), float(gammas[-1]), stop)
    sizes = np.atleast_1d(np.asarray(model.tail_pos.g_inv(gammas[:n] / T), dtype=float))
    times = T * stream.uniforms[:n]
    tt = np.asarray(t, dtype=float)
    flat = np.atleast_1d(tt)
    vals = np.array([float(sizes[times < ti].sum()) for ti in flat])
    if tt.ndim == 0:
        return float(vals[0])
    return vals.reshape(tt.shape)


def brute_force_coeffs(model: LevyModel, basis: KleBasis, stream: ArrivalStream, grid_n: int = 0) -> np.ndarray:
    """Coefficients of a centered finite-activity path by direct integration.

    Builds the jump times and sizes of one path of the subordinator from the
    stream, centers the path by its mean rate m t, and integrates it against
    each basis function: exactly per piece when ``grid_n`` is 0 (the path is
    constant between jumps, so antiderivatives of sin suffice), or by
    trapezoidal quadrature on a ``grid_n``-point grid otherwise.
    """
    tail = model.tail_pos
    if tail is None or not math.isfinite(tail.g0):
        raise ValueError("brute-force integration requires a finite-activity positive-jump model")
    T = basis.T
    stop = T * tail.g0
    gammas = stream.gammas
    n = int(np.searchsorted(gammas, stop, side="left"))
    if n >= len(gammas):
        raise TruncationCapError(len(gammas), float(gammas[-1]), stop)
    sizes = np.atleast_1d(np.asarray(tail.g_inv(gammas[:n] / T), dtype=float))
    times = T * stream.uniforms[:n]
    m = model.jump_mean
    omega = math.pi * (np.arange(1, basis.d + 1) - 0.5) / T
    root = math.sqrt(2.0 / T)
    if grid_n > 0:
        tg = np.linspace(0.0, T, grid_n)
        path = (sizes[None, :] * (times[None, :] <= tg[:, None])).sum(axis=1) - m * tg
        emat = root * np.sin(np.outer(tg, omega))
        return np.trapezoid(path[:, None] * emat, tg, axis=0)
    # One jump of size x at time s contributes x * int_s^T e_k dt; the
    # centering -m t contributes -m int_0^T t e_k(t) dt. Both integrals come
    # from the antiderivatives of sin and t sin.
    cos_T = np.cos(omega * T)
    sin_T = np.sin(omega * T)
    jump_term = np.zeros(basis.d)
    if n:
        jump_term = root / omega * ((np.cos(np.outer(times, omega)) - cos_T[None, :]) * sizes[:, None]).sum(axis=0)
    ramp = root * (sin_T / omega**2 - T * cos_T / omega)
    return jump_term - m * ramp


class KsResult(NamedTuple):
    statistic: float
    pvalue: float


def ks_two_sample(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov statistic with asymptotic p-value."""
    aa = np.asarray(a, dtype=float).ravel()
    bb = np.asarray(b, dtype=float).ravel()
    if len(aa) < 100 or len(bb) < 100:
        raise ValueError("ks_two_sample needs at least 100 points per sample")
    res = scipy.stats.ks_2samp(aa, bb, method="asymp")
    return KsResult(statistic=float(res.statistic), pvalue=float(res.pvalue))


def _density_parts(model):
    parts = []
    if isinstance(model, SplitModel):
        if model.pos is not None and model.pos.tail_pos is not None:
            parts.append(model.pos.tail_pos.density)
        if model.neg is not None and model.neg.tail_pos is not None:
            parts.append(model.neg.tail_pos.density)
    else:
        if model.tail_pos is not None:
            parts.append(model.tail_pos.density)
        if model.tail_neg is not None:
            parts.append(model.tail_neg.density)
    return parts


def mixed_fourth_cumulant(model, basis: KleBasis, j: int, k: int, rtol: float = 1e-8) -> float:
    """Mixed fourth cumulant int_0^T int f_j(x,t)^2 f_k(x,t)^2 pi(x) dx dt.

    Equals Cov(Z_j^2, Z_k^2) for a centered pure-jump model, so a strictly
    positive value certifies dependence of the (uncorrelated) coefficients.
    Evaluated by nested quadrature; jumps on either side contribute through
    the even powers, so sign-reflected parts simply add. Returns 0 for a
    jump-free model.
    """
    if j == k:
        raise ValueError("mixed cumulant requires two distinct indices")
    densities = _density_parts(model)
    if not densities:
        return 0.0
    T = basis.T
    wj = math.pi * (j - 0.5) / T
    wk = math.pi * (k - 0.5) / T
    cj = math.sqrt(2.0 * T) / (math.pi * (j - 0.5))
    ck = math.sqrt(2.0 * T) / (math.pi * (k - 0.5))

    def inner(t):
        fj = cj * math.cos(wj * t)
        fk = ck * math.cos(wk * t)
        total = 0.0
        for dens in densities:
            total += quad(lambda x: (x * fj) ** 2 * (x * fk) ** 2 * dens(x), 0.0, math.inf, rtol=0.1 * rtol)
        return total

    return quad(inner, 0.0, T, rtol=rtol)
