"""Spectral sampling of Q-Wiener increments on (0, L), Q = Lambda^{-s}.

Increments are expanded in the orthonormal Dirichlet sine basis; the
coefficient of mode j over a step of length tau is Normal with standard
deviation sqrt(tau) * (j pi / L)^{-s}. s = 0 is space-time white noise.

Randomness is counter based: a Philox generator keyed by
(master_seed, context) feeds an inverse-CDF transform, so any draw is a
pure function of the key and its position in the stream. Tapes sampled
at the finest dyadic resolution can be coarsened by exact summation,
which is what couples resolutions in strong-error studies.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import CapacityError, InvalidArgumentError

SAMPLER_IDENTITY = "philox4x64-10/inverse-cdf"

# largest K * finest_steps worth of tape held in memory at once
MAX_TAPE_FLOATS = 2**26


def stream_context(stream_id, sample_index):
    """Pack a stream id and a sample index into one 64-bit key word."""
    if not (0 <= stream_id < 2**32 and 0 <= sample_index < 2**32):
        raise InvalidArgumentError("stream_id and sample_index must fit in 32 bits")
    return (int(stream_id) << 32) | int(sample_index)


class RngStream:
    """Deterministic normal stream: Philox counter + inverse CDF.

    Draw n at a time or all at once; the sequence is identical either way
    (raw 64-bit words map one-to-one to normals).
    """

    def __init__(self, master_seed, context=0):
        key = np.array([int(master_seed), int(context)], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def normals(self, n):
        raw = self._bitgen.random_raw(int(n)) >> np.uint64(11)
        return ndtri((raw.astype(np.float64) + 0.5) * 2.0**-53)


@dataclass(frozen=True)
class NoiseModel:
    s: float
    K: int
    L: float
    gamma_report: float


def reporting_gamma(s):
    """Quarter-grid regularity label: largest multiple of 0.25 <= s + 1/2, capped at 2.

    A label for expected convergence rates, not an assertion about Q."""
    return min(2.0, math.floor((s + 0.5) / 0.25) * 0.25)


def make_noise_model(s, K, L=1.0):
    if s < 0:
        raise InvalidArgumentError(f"spectral decay s must be >= 0, got {s}")
    K = int(K)
    if K < 1:
        raise InvalidArgumentError(f"truncation level K must be >= 1, got {K}")
    if not L > 0:
        raise InvalidArgumentError(f"domain length must be positive, got {L}")
    return NoiseModel(s=float(s), K=K, L=float(L), gamma_report=reporting_gamma(s))


def coefficient_scales(model):
    """Per-mode standard deviation factors (j pi / L)^{-s}, shape (K,)."""
    j = np.arange(1, model.K + 1, dtype=float)
    return (j * np.pi / model.L) ** (-model.s)


@dataclass(frozen=True)
class SpectralIncrement:
    tau: float
    coeffs: np.ndarray


def sample_increment(model, tau, rng_stream):
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be positive, got {tau}")
    xi = rng_stream.normals(model.K)
    coeffs = np.sqrt(tau) * coefficient_scales(model) * xi
    return SpectralIncrement(tau=float(tau), coeffs=coeffs)


@dataclass(frozen=True)
class PathTape:
    """All increments of one driving path at the finest dyadic resolution."""

    master_seed: int
    level: int
    tau: float
    coeffs: np.ndarray = field(repr=False)  # (finest_steps, K)

    @property
    def finest_steps(self):
        return self.coeffs.shape[0]

    @property
    def increments(self):
        return [SpectralIncrement(self.tau, row) for row in self.coeffs]


def sample_tape_coeffs(model, master_seed, T, finest_steps, context=0):
    """The (finest_steps, K) coefficient array of a tape, no wrapper."""
    steps = int(finest_steps)
    if steps < 1 or steps & (steps - 1):
        raise InvalidArgumentError(
            f"finest_steps must be a power of two, got {finest_steps}"
        )
    if steps * model.K > MAX_TAPE_FLOATS:
        raise CapacityError(
            f"tape of {steps} x {model.K} coefficients exceeds the memory budget"
        )
    tau = T / steps
    xi = RngStream(master_seed, context).normals(steps * model.K)
    return np.sqrt(tau) * coefficient_scales(model)[None, :] * xi.reshape(steps, model.K)


def make_path(model, master_seed, T, finest_steps, context=0):
    coeffs = sample_tape_coeffs(model, master_seed, T, finest_steps, context)
    steps = coeffs.shape[0]
    return PathTape(master_seed=int(master_seed), level=steps.bit_length() - 1,
                    tau=T / steps, coeffs=coeffs)


def coarsen_coeffs(coeffs, factor):
    """Sum groups of `factor` consecutive fine increments, bit exactly."""
    f = int(factor)
    steps = coeffs.shape[0]
    if f < 1 or f & (f - 1):
        raise InvalidArgumentError(f"factor must be a power of two, got {factor}")
    if steps % f:
        raise InvalidArgumentError(f"factor {factor} does not divide {steps} steps")
    if f == 1:
        return coeffs
    return coeffs.reshape(steps // f, f, *coeffs.shape[1:]).sum(axis=1)


def coarsen(tape, factor):
    """Coarse increments of the same path; children sum exactly to parents."""
    cc = coarsen_coeffs(tape.coeffs, factor)
    tau_c = tape.tau * int(factor)
    return [SpectralIncrement(tau_c, row) for row in cc]


def increment_load(mesh, inc):
    """FEM load vector of one increment against the interior hat functions.

    Uses exact closed-form sine-hat integrals so the loads add no
    quadrature error to measured convergence rates. The caller is
    responsible for mesh and noise model sharing the same L.
    """
    from .fem1d import sine_load_matrix

    coeffs = np.asarray(inc.coeffs, dtype=float)
    return sine_load_matrix(mesh, coeffs.shape[0]) @ coeffs
