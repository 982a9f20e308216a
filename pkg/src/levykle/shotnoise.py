"""Shot-noise sampling of the expansion coefficient vector.

A realization of the d coefficients of a centered positive-jump model is
assembled from a unit-rate Poisson arrival stream Gamma_1 < Gamma_2 < ... and
independent uniforms U_i:

    Z = a_vec + sum_i f(g_inv(Gamma_i / T), T U_i),

summing while Gamma_i stays below the truncation level. For finite-activity
models the natural level is T g(0) and the series is exact; for gamma-type
tails the level is gamma_cutoff * T * c (the documented default 45.47 keeps
discarded jump sizes near 1e-20); otherwise a configurable absolute jump
floor determines the level through g. The h1 route replaces the drift vector
by the deterministic centering C evaluated at the same truncation level, so
both routes agree path by path on finite-activity models.

Two-sided processes sample the positive and negative parts on independent
substreams and subtract, then add an independent Gaussian vector for any
Brownian component.

Reproducibility: every (sample_index, part) pair receives its own generator,
derived as PCG64(SeedSequence(seed, spawn_key=(sample_index, part))) with the
exponential and uniform streams split one level further. Draw sizes grow in
fixed blocks so a longer stream always extends a shorter one element for
element, which makes coefficient vectors bitwise reproducible under dimension
growth and under any partitioning of samples across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

import numpy as np

from .basis import KleBasis
from .models import CUTOFF_H0, LevyModel, SplitModel, TailIntegral, center
from .special import quad

__all__ = [
    "PART_POS",
    "PART_NEG",
    "PART_GAUSS",
    "TruncationCapError",
    "ShotConfig",
    "ArrivalStream",
    "PartRecord",
    "ShotRecord",
    "CoefficientSample",
    "derive_rng",
    "arrival_stream",
    "shot_sum",
    "gamma_stop_level",
    "centering_vector",
    "sample_coeffs_finite_variation",
    "sample_coeffs_centered",
    "sample_coeffs",
    "sample_coeffs_batch",
    "extend_dimension",
    "write_coefficients_csv",
]

PART_POS = 0
PART_NEG = 1
PART_GAUSS = 2

_FIRST_BLOCK = 128


class TruncationCapError(RuntimeError):
    """The arrival stream hit the safety cap before the truncation level.

    Carries partial diagnostics: terms drawn, last arrival level reached, and
    the level that was requested.
    """

    def __init__(self, n_drawn: int, gamma_reached: float, gamma_stop: float):
        super().__init__(
            f"truncation level {gamma_stop:g} not reached after {n_drawn} terms "
            f"(last arrival {gamma_reached:g})"
        )
        self.n_drawn = n_drawn
        self.gamma_reached = gamma_reached
        self.gamma_stop = gamma_stop


@dataclass(frozen=True)
class ShotConfig:
    """Sampling configuration.

    ``gamma_cutoff`` scales the truncation level for gamma-type tails
    (stop once Gamma_i / (T c) exceeds it); ``jump_floor`` is the generic
    alternative, an absolute jump size below which the series is cut.
    ``max_terms`` caps the stream length; ``centering_quadrature_rtol`` is
    used when a tail has no closed-form radial primitive.
    """

    seed: int
    gamma_cutoff: float = 45.47
    max_terms: int = 1_000_000
    centering_quadrature_rtol: float = 1e-10
    jump_floor: float | None = None

    def __post_init__(self):
        if not self.gamma_cutoff > 0.0:
            raise ValueError("gamma_cutoff must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


@dataclass(frozen=True, eq=False)
class ArrivalStream:
    """A reproducible Poisson arrival stream with matched uniforms."""

    increments: np.ndarray
    gammas: np.ndarray
    uniforms: np.ndarray

    def __post_init__(self):
        if not (len(self.increments) == len(self.gammas) == len(self.uniforms)):
            raise ValueError("stream components must have equal length")
        if self.gammas.size and not np.all(np.diff(self.gammas) > 0.0):
            raise ValueError("arrival levels must be strictly increasing")
        if self.uniforms.size and (self.uniforms.min() < 0.0 or self.uniforms.max() > 1.0):
            raise ValueError("uniforms must lie in [0, 1]")


def derive_rng(seed, *labels) -> np.random.Generator:
    """Independent generator for the given seed and integer label path."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    if labels:
        ss = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(labels))
    return np.random.Generator(np.random.PCG64(ss))


def _stream_rngs(seed) -> tuple[np.random.Generator, np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    exp_ss, uni_ss = ss.spawn(2)
    return (
        np.random.Generator(np.random.PCG64(exp_ss)),
        np.random.Generator(np.random.PCG64(uni_ss)),
    )


def arrival_stream(seed, cap: int) -> ArrivalStream:
    """Draw ``cap`` arrivals Gamma_1 < ... < Gamma_cap with matched uniforms.

    ``seed`` may be an integer or a ``numpy.random.SeedSequence`` (the
    samplers use per-(sample, part) sequences). Same seed, same stream,
    bitwise.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    exp_rng, uni_rng = _stream_rngs(seed)
    increments = exp_rng.standard_exponential(int(cap))
    return ArrivalStream(
        increments=increments,
        gammas=np.cumsum(increments),
        uniforms=uni_rng.random(int(cap)),
    )


def _draw_until(seed, gamma_stop: float, max_terms: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrivals below ``gamma_stop`` plus matched uniforms, grown in blocks.

    Blocks double so the exponential stream is consumed in a reproducible
    prefix-stable order; uniforms are drawn in a single call once the
    retained count is known.
    """
    exp_rng, uni_rng = _stream_rngs(seed)
    blocks: list[np.ndarray] = []
    block = _FIRST_BLOCK
    n_drawn = 0
    while True:
        blocks.append(exp_rng.standard_exponential(block))
        n_drawn += block
        increments = np.concatenate(blocks) if len(blocks) > 1 else blocks[0]
        gammas = np.cumsum(increments)
        if gammas[-1] > gamma_stop:
            break
        if n_drawn >= max_terms:
            raise TruncationCapError(n_drawn, float(gammas[-1]), gamma_stop)
        block *= 2
    n = int(np.searchsorted(gammas, gamma_stop, side="left"))
    if n > max_terms:
        raise TruncationCapError(n, float(gammas[min(n, len(gammas)) - 1]), gamma_stop)
    return gammas[:n], uni_rng.random(n)


def shot_sum(basis: KleBasis, jump_sizes: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """sum_i f(x_i, T u_i) for jump sizes x_i placed at times T u_i.

    Componentwise (sqrt(2T)/pi) sum_i x_i cos(pi (k-1/2) u_i) / (k-1/2);
    linear in the jump sizes. Summation uses a fixed per-column reduction so
    the first columns do not depend on how many columns are requested.
    """
    if len(jump_sizes) == 0:
        return np.zeros(basis.d)
    x = np.asarray(jump_sizes, dtype=float)
    u = np.asarray(uniforms, dtype=float)
    cosmat = np.cos(np.pi * np.outer(u, basis.k_half))
    comp = (cosmat * x[:, None]).sum(axis=0)
    return math.sqrt(2.0 * basis.T) / math.pi * comp / basis.k_half


def gamma_stop_level(tail: TailIntegral, T: float, cfg: ShotConfig) -> float:
    """Arrival level at which the series for one jump part is truncated."""
    if math.isfinite(tail.g0):
        return T * tail.g0
    if tail.cutoff_scale is not None:
        return cfg.gamma_cutoff * T * tail.cutoff_scale
    if cfg.jump_floor is not None and cfg.jump_floor > 0.0:
        return T * float(tail.g(cfg.jump_floor))
    raise ValueError(
        "infinite-activity tail without cutoff scale: configure jump_floor"
    )


def centering_vector(tail: TailIntegral, basis: KleBasis, level: float, cfg: ShotConfig) -> np.ndarray:
    """Deterministic series centering C at arrival level ``level``.

    Componentwise sqrt(2T) (-1)^{k+1} / (pi^2 (k-1/2)^2) times the radial
    integral of the jump sizes up to the level, int_0^level g_inv(r/T) dr
    restricted to r < T g(0). Uses the tail's closed-form primitive when
    present, quadrature at the configured tolerance otherwise.
    """
    if level <= 0.0:
        return np.zeros(basis.d)
    y_top = min(level / basis.T, tail.g0)
    if tail.inverse_integral is not None:
        radial = basis.T * tail.inverse_integral(y_top)
    else:
        radial = basis.T * quad(
            lambda s: float(tail.g_inv(s)), 0.0, y_top, rtol=cfg.centering_quadrature_rtol
        )
    return (
        math.sqrt(2.0 * basis.T)
        * basis.signs
        / (math.pi**2 * basis.k_half**2)
        * radial
    )


@dataclass(frozen=True, eq=False)
class PartRecord:
    """Retained stream of one jump part: arrivals, uniforms, jump sizes, drift."""

    gammas: np.ndarray
    uniforms: np.ndarray
    jump_sizes: np.ndarray
    drift_a: float

    @property
    def n_terms(self) -> int:
        return len(self.gammas)


@dataclass(frozen=True, eq=False)
class ShotRecord:
    """Everything needed to recompute a coefficient vector at any dimension."""

    T: float
    alpha: float
    seed: int
    sample_index: int
    sigma2: float
    pos: PartRecord | None
    neg: PartRecord | None


@dataclass(frozen=True, eq=False)
class CoefficientSample:
    """One realization of the coefficient vector Z with its provenance."""

    z: np.ndarray
    d: int
    n_terms_pos: int
    n_terms_neg: int
    seed: int
    sample_index: int = 0
    shot_record: ShotRecord | None = None

    def __post_init__(self):
        if len(self.z) != self.d:
            raise ValueError("coefficient vector length must equal d")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("coefficients must be finite")


def _part_from_stream(
    tail: TailIntegral,
    T: float,
    drift_a: float,
    gamma_stop: float,
    cfg: ShotConfig,
    seed_seq,
    stream: ArrivalStream | None,
) -> PartRecord:
    if stream is not None:
        gammas = stream.gammas
        n = int(np.searchsorted(gammas, gamma_stop, side="left"))
        if n >= len(gammas):
            raise TruncationCapError(len(gammas), float(gammas[-1]), gamma_stop)
        gammas = gammas[:n]
        uniforms = stream.uniforms[:n]
    else:
        gammas, uniforms = _draw_until(seed_seq, gamma_stop, cfg.max_terms)
    jump_sizes = np.atleast_1d(np.asarray(tail.g_inv(gammas / T), dtype=float)) if gammas.size else np.empty(0)
    return PartRecord(gammas=gammas, uniforms=uniforms, jump_sizes=jump_sizes, drift_a=drift_a)


def _assemble(basis: KleBasis, record: ShotRecord) -> np.ndarray:
    # Shared by fresh sampling and dimension extension so both produce
    # bitwise-identical floating point operations.
    z = np.zeros(basis.d)
    if record.pos is not None:
        z = z + (basis.drift_vector(record.pos.drift_a) + shot_sum(basis, record.pos.jump_sizes, record.pos.uniforms))
    if record.neg is not None:
        z = z - (basis.drift_vector(record.neg.drift_a) + shot_sum(basis, record.neg.jump_sizes, record.neg.uniforms))
    if record.sigma2 > 0.0:
        scale = np.sqrt(basis.gaussian_coefficient_variances(record.sigma2))
        gauss = derive_rng(record.seed, record.sample_index, PART_GAUSS).standard_normal(basis.d)
        z = z + scale * gauss
    return z


def _require_centered_h0(model: LevyModel, op: str) -> None:
    if model.triple.cutoff != CUTOFF_H0:
        raise ValueError(f"{op} expects an h0-convention model")
    if not model.is_centered:
        raise ValueError(
            f"{op} expects a centered model (mean rate {model.mean_rate:g}); apply center() first"
        )


def _part_seed(cfg: ShotConfig, sample_index: int, part: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(cfg.seed), spawn_key=(int(sample_index), part))


def sample_coeffs_finite_variation(
    model: LevyModel,
    basis: KleBasis,
    cfg: ShotConfig,
    sample_index: int = 0,
    stream: ArrivalStream | None = None,
    keep_record: bool = False,
) -> CoefficientSample:
    """Sample Z for a centered finite-variation positive-jump model (h0 route).

    Returns the drift vector of a = -m plus the shot-noise jump sum; the
    series stops at the model's natural or configured truncation level. Pass
    ``stream`` to reuse an explicit arrival stream (it must extend beyond the
    truncation level).
    """
    _require_centered_h0(model, "sample_coeffs_finite_variation")
    if model.tail_pos is None:
        z = basis.drift_vector(model.triple.a)
        return CoefficientSample(
            z=z, d=basis.d, n_terms_pos=0, n_terms_neg=0,
            seed=cfg.seed, sample_index=sample_index,
        )
    stop = gamma_stop_level(model.tail_pos, basis.T, cfg)
    part = _part_from_stream(
        model.tail_pos, basis.T, model.triple.a, stop, cfg,
        _part_seed(cfg, sample_index, PART_POS), stream,
    )
    record = ShotRecord(
        T=basis.T, alpha=basis.alpha, seed=cfg.seed, sample_index=sample_index,
        sigma2=0.0, pos=part, neg=None,
    )
    z = _assemble(basis, record)
    return CoefficientSample(
        z=z, d=basis.d, n_terms_pos=part.n_terms, n_terms_neg=0,
        seed=cfg.seed, sample_index=sample_index,
        shot_record=record if keep_record else None,
    )


def sample_coeffs_centered(
    model: LevyModel,
    basis: KleBasis,
    cfg: ShotConfig,
    sample_index: int = 0,
    stream: ArrivalStream | None = None,
    keep_record: bool = False,
) -> CoefficientSample:
    """Sample Z for a centered positive-jump model via the h1 route.

    The jump sum is compensated by the deterministic centering C evaluated at
    the truncation level instead of a drift vector; on finite-activity models
    this agrees with the h0 route term for term on the same stream.
    """
    if not model.is_centered:
        raise ValueError(
            f"sample_coeffs_centered expects a centered model (mean rate {model.mean_rate:g})"
        )
    if model.tail_pos is None:
        raise ValueError("sample_coeffs_centered needs a jump part")
    stop = gamma_stop_level(model.tail_pos, basis.T, cfg)
    part = _part_from_stream(
        model.tail_pos, basis.T, 0.0, stop, cfg,
        _part_seed(cfg, sample_index, PART_POS), stream,
    )
    z = shot_sum(basis, part.jump_sizes, part.uniforms) - centering_vector(
        model.tail_pos, basis, stop, cfg
    )
    return CoefficientSample(
        z=z, d=basis.d, n_terms_pos=part.n_terms, n_terms_neg=0,
        seed=cfg.seed, sample_index=sample_index,
        shot_record=ShotRecord(
            T=basis.T, alpha=basis.alpha, seed=cfg.seed, sample_index=sample_index,
            sigma2=0.0, pos=part, neg=None,
        ) if keep_record else None,
    )


def sample_coeffs(
    model: SplitModel,
    basis: KleBasis,
    cfg: ShotConfig,
    sample_index: int = 0,
    keep_record: bool = False,
) -> CoefficientSample:
    """Sample Z for a composite model: Z_pos - Z_neg + Gaussian part.

    Parts are centered internally and sampled on independent substreams
    derived from ``(cfg.seed, sample_index, part)``; the Gaussian vector uses
    the variances that make a jump-free model reproduce E[Z_k^2] = lambda_k.
    """
    pos_part = neg_part = None
    if model.pos is not None:
        pos_c = center(model.pos)
        stop = gamma_stop_level(pos_c.tail_pos, basis.T, cfg)
        pos_part = _part_from_stream(
            pos_c.tail_pos, basis.T, pos_c.triple.a, stop, cfg,
            _part_seed(cfg, sample_index, PART_POS), None,
        )
    if model.neg is not None:
        neg_c = center(model.neg)
        stop = gamma_stop_level(neg_c.tail_pos, basis.T, cfg)
        neg_part = _part_from_stream(
            neg_c.tail_pos, basis.T, neg_c.triple.a, stop, cfg,
            _part_seed(cfg, sample_index, PART_NEG), None,
        )
    record = ShotRecord(
        T=basis.T, alpha=basis.alpha, seed=cfg.seed, sample_index=sample_index,
        sigma2=float(model.gaussian_sigma2), pos=pos_part, neg=neg_part,
    )
    z = _assemble(basis, record)
    return CoefficientSample(
        z=z,
        d=basis.d,
        n_terms_pos=pos_part.n_terms if pos_part is not None else 0,
        n_terms_neg=neg_part.n_terms if neg_part is not None else 0,
        seed=cfg.seed,
        sample_index=sample_index,
        shot_record=record if keep_record else None,
    )


def sample_coeffs_batch(
    model: SplitModel,
    basis: KleBasis,
    cfg: ShotConfig,
    n_samples: int,
    start_index: int = 0,
    chunk: int = 512,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample ``n_samples`` coefficient vectors with consecutive sample indices.

    Returns ``(Z, n_pos, n_neg)`` where Z has shape (n_samples, d). Row i is
    bitwise identical to ``sample_coeffs(..., sample_index=start_index + i)``:
    the only difference is that jump-size inversion is vectorized across
    ``chunk`` samples at a time, which is an elementwise-identical operation.
    """
    parts = []
    if model.pos is not None:
        c = center(model.pos)
        parts.append((PART_POS, +1.0, c.tail_pos, gamma_stop_level(c.tail_pos, basis.T, cfg),
                      basis.drift_vector(c.triple.a)))
    if model.neg is not None:
        c = center(model.neg)
        parts.append((PART_NEG, -1.0, c.tail_pos, gamma_stop_level(c.tail_pos, basis.T, cfg),
                      basis.drift_vector(c.triple.a)))
    sigma2 = float(model.gaussian_sigma2)
    gauss_scale = np.sqrt(basis.gaussian_coefficient_variances(sigma2)) if sigma2 > 0.0 else None

    Z = np.zeros((n_samples, basis.d))
    n_pos = np.zeros(n_samples, dtype=np.int64)
    n_neg = np.zeros(n_samples, dtype=np.int64)
    for lo in range(0, n_samples, chunk):
        hi = min(lo + chunk, n_samples)
        idx = range(start_index + lo, start_index + hi)
        for part, sign, tail, stop, drift in parts:
            gam_list, uni_list = [], []
            for i in idx:
                g, u = _draw_until(_part_seed(cfg, i, part), stop, cfg.max_terms)
                gam_list.append(g)
                uni_list.append(u)
            counts = np.array([len(g) for g in gam_list])
            sizes_flat = (
                np.atleast_1d(np.asarray(tail.g_inv(np.concatenate(gam_list) / basis.T), dtype=float))
                if counts.sum() else np.empty(0)
            )
            offsets = np.concatenate(([0], np.cumsum(counts)))
            for j, i in enumerate(idx):
                x = sizes_flat[offsets[j]:offsets[j + 1]]
                Z[lo + j] += sign * (drift + shot_sum(basis, x, uni_list[j]))
                if part == PART_POS:
                    n_pos[lo + j] = counts[j]
                else:
                    n_neg[lo + j] = counts[j]
        if gauss_scale is not None:
            for j, i in enumerate(idx):
                gauss = derive_rng(cfg.seed, i, PART_GAUSS).standard_normal(basis.d)
                Z[lo + j] += gauss_scale * gauss
    return Z, n_pos, n_neg


def extend_dimension(coeffs: CoefficientSample, new_d: int, shot_record: ShotRecord | None = None) -> CoefficientSample:
    """Recompute the sample at a larger dimension from its retained streams.

    The first ``coeffs.d`` coordinates are reproduced bitwise (verified); the
    new coordinates use the same jump realizations and the same Gaussian
    stream, so the result equals a fresh run at ``new_d`` with the same seed.
    """
    record = shot_record if shot_record is not None else coeffs.shot_record
    if record is None:
        raise ValueError("extend_dimension requires the sample's shot_record")
    if new_d < coeffs.d:
        raise ValueError("new_d must be at least the current dimension")
    if new_d == coeffs.d:
        return coeffs
    wide = KleBasis(T=record.T, d=new_d, alpha=record.alpha)
    z = _assemble(wide, record)
    if not np.array_equal(z[: coeffs.d], coeffs.z):
        raise ValueError("shot_record is inconsistent with the sample it claims to extend")
    return CoefficientSample(
        z=z,
        d=new_d,
        n_terms_pos=coeffs.n_terms_pos,
        n_terms_neg=coeffs.n_terms_neg,
        seed=coeffs.seed,
        sample_index=coeffs.sample_index,
        shot_record=record,
    )


def write_coefficients_csv(samples: Iterable[CoefficientSample], fh: IO[str]) -> None:
    """Dump samples as CSV rows ``sample_id,k,z_k,n_terms_pos,n_terms_neg,seed``.

    Floats use the shortest round-trip representation so files are
    bit-reproducible and parse back exactly.
    """
    fh.write("sample_id,k,z_k,n_terms_pos,n_terms_neg,seed\n")
    for s in samples:
        for k in range(s.d):
            fh.write(
                f"{s.sample_index},{k + 1},{float(s.z[k])!r},{s.n_terms_pos},{s.n_terms_neg},{s.seed}\n"
            )
