"""
Clothoid geometry: generalized Fresnel integrals and poses along
linear-curvature segments
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad_vec
from scipy.special import factorial

from config import (
    FRESNEL_EPSABS, FRESNEL_SERIES_B, FRESNEL_SERIES_TERMS, FRESNEL_SMALL_A
)
from exceptions import InvalidArgument, OutOfRange

logger = logging.getLogger(__name__)

_DOMAIN_SLACK = 1e-12
_SERIES_K = np.arange(FRESNEL_SERIES_TERMS)
_SERIES_FACT = factorial(_SERIES_K, exact=False)


def normalize_angle(psi: Union[float, ArrayLike]) -> Union[float, NDArray]:
    """
    Wrap an angle (or array of angles) into (-pi, pi].

    Idempotent: values already in range come back unchanged, bit for bit.
    """
    if np.ndim(psi) == 0:
        value = math.remainder(float(psi), 2 * math.pi)
        return math.pi if value == -math.pi else value
    wrapped = np.array([math.remainder(p, 2 * math.pi) for p in np.ravel(psi)], dtype=float)
    wrapped[wrapped == -math.pi] = math.pi
    return wrapped.reshape(np.shape(psi))


@dataclass(frozen=True)
class Pose2D:
    """Rear-axle center position and heading; heading kept in (-pi, pi]."""
    x: float
    y: float
    psi: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.psi)):
            raise InvalidArgument(f"pose must be finite, got ({self.x}, {self.y}, {self.psi})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "psi", normalize_angle(self.psi))

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.psi)


@dataclass(frozen=True)
class ClothoidSegment:
    """One arc whose curvature is kappa_hat + sharpness * s for s in [0, length]."""
    start: Pose2D
    kappa_hat: float
    sharpness: float
    length: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.kappa_hat, self.sharpness, self.length)):
            raise InvalidArgument("segment parameters must be finite")
        if self.length < 0:
            raise InvalidArgument(f"segment length must be >= 0, got {self.length}")

    def curvature(self, s):
        return self.kappa_hat + self.sharpness * np.asarray(s, dtype=float)

    def heading(self, s):
        """Unwrapped heading psi_hat + kappa_hat*s + sharpness*s**2/2."""
        s = np.asarray(s, dtype=float)
        return self.start.psi + self.kappa_hat * s + 0.5 * self.sharpness * s * s

    @property
    def end(self) -> Pose2D:
        return pose_at(self, self.length)


def _check_finite(*arrays: NDArray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("Fresnel arguments must be finite")


def _moments_small_a(a: NDArray, b: NDArray, c: NDArray) -> NDArray:
    """
    Closed form for |a| below the quadrature threshold.

    Uses exp(i a s^2 / 2) ~ 1 + i a s^2 / 2, so the integral is
    exp(ic) * (J0(b) + i a/2 * J2(b)) with J_n(b) = int_0^1 s^n exp(ibs) ds.
    """
    j0 = np.empty(b.shape, dtype=complex)
    j2 = np.empty(b.shape, dtype=complex)

    big = np.abs(b) >= FRESNEL_SERIES_B
    if np.any(big):
        ib = 1j * b[big]
        e = np.exp(ib)
        j0_big = (e - 1.0) / ib
        j1_big = (e - j0_big) / ib
        j0[big] = j0_big
        j2[big] = (e - 2.0 * j1_big) / ib

    small = ~big
    if np.any(small):
        powers = (1j * b[small, None]) ** _SERIES_K / _SERIES_FACT
        j0[small] = np.sum(powers / (_SERIES_K + 1.0), axis=-1)
        j2[small] = np.sum(powers / (_SERIES_K + 3.0), axis=-1)

    return np.exp(1j * c) * (j0 + 0.5j * a * j2)


def _quadrature(a: NDArray, b: NDArray, c: NDArray) -> Tuple[NDArray, NDArray]:
    n = a.size

    def integrand(sigma: float) -> NDArray:
        phase = 0.5 * a * sigma * sigma + b * sigma + c
        return np.concatenate((np.cos(phase), np.sin(phase)))

    values, _ = quad_vec(
        integrand, 0.0, 1.0,
        epsabs=FRESNEL_EPSABS, epsrel=0.0, norm="max", quadrature="gk21",
    )
    return values[:n], values[n:]


def fresnel_cs_batch(a: ArrayLike, b: ArrayLike, c: ArrayLike) -> Tuple[NDArray, NDArray]:
    """
    Evaluate C(a,b,c) = int_0^1 cos(a s^2/2 + b s + c) ds and the matching
    sine integral for broadcast arrays of arguments.

    All quadrature-bound entries share one adaptive Gauss-Kronrod run with a
    max-norm error target of 1e-12.

    Args:
        a: quadratic coefficient
        b: linear coefficient
        c: phase offset

    Returns:
        (C, S) arrays with the broadcast shape of the inputs
    """
    a, b, c = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(c, dtype=float)
    )
    _check_finite(a, b, c)
    shape = a.shape
    a, b, c = a.ravel(), b.ravel(), c.ravel()

    cos_part = np.empty(a.size)
    sin_part = np.empty(a.size)

    near_zero = np.abs(a) < FRESNEL_SMALL_A
    if np.any(near_zero):
        z = _moments_small_a(a[near_zero], b[near_zero], c[near_zero])
        cos_part[near_zero] = z.real
        sin_part[near_zero] = z.imag

    rest = ~near_zero
    if np.any(rest):
        cos_part[rest], sin_part[rest] = _quadrature(a[rest], b[rest], c[rest])

    np.clip(cos_part, -1.0, 1.0, out=cos_part)
    np.clip(sin_part, -1.0, 1.0, out=sin_part)
    return cos_part.reshape(shape), sin_part.reshape(shape)


def fresnel_cs(a: float, b: float, c: float) -> Tuple[float, float]:
    """Both Fresnel integrals for one argument triple."""
    cos_part, sin_part = fresnel_cs_batch(a, b, c)
    return float(cos_part), float(sin_part)


def fresnel_c(a: float, b: float, c: float) -> float:
    return fresnel_cs(a, b, c)[0]


def fresnel_s(a: float, b: float, c: float) -> float:
    return fresnel_cs(a, b, c)[1]


def _checked_arclength(seg: ClothoidSegment, s: ArrayLike) -> NDArray:
    s = np.asarray(s, dtype=float)
    slack = _DOMAIN_SLACK * max(1.0, seg.length)
    if np.any(~np.isfinite(s)) or np.any(s < -slack) or np.any(s > seg.length + slack):
        raise OutOfRange(f"arclength outside [0, {seg.length}]")
    return np.clip(s, 0.0, seg.length)


def poses_at(seg: ClothoidSegment, s: ArrayLike) -> Tuple[NDArray, NDArray, NDArray]:
    """
    Vectorized pose evaluation.

    Returns:
        x, y and the unwrapped heading at every arclength in `s`
    """
    s = _checked_arclength(seg, s)
    cos_part, sin_part = fresnel_cs_batch(
        seg.sharpness * s * s, seg.kappa_hat * s, seg.start.psi
    )
    x = seg.start.x + s * cos_part
    y = seg.start.y + s * sin_part
    return x, y, seg.heading(s)


def pose_at(seg: ClothoidSegment, s: float) -> Pose2D:
    """Pose at arclength `s` from the segment start."""
    x, y, psi = poses_at(seg, s)
    return Pose2D(float(x), float(y), float(psi))
