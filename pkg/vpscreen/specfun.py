"""
Special functions of the analytic Coulomb-Dirac Green function: complex log-gamma, Whittaker M and W with complex first
index and modified spherical Bessel functions.

Whittaker functions are evaluated with `mpmath`, whose floating point type has an unbounded exponent. They are given in
log-scaled form (log-magnitude plus phase packed in a complex logarithm) so that products such as M(2dx1) W(2dx2) are
formed without overflow.
"""

import cmath
import math
import numpy as np
from typing import NamedTuple, Tuple, Union
from mpmath import mp, whitm, whitw, log as mplog, mpc, mpf
from scipy.special import loggamma, ive, kve


mp.dps = 30

Number = Union[float, complex]

# Largest real part of a logarithm that still exponentiates to a finite double
_LOG_MAX = 709.0


class WhittakerParams(NamedTuple):
    k: complex
    mu: complex
    z: float

    def validate(self):
        if not self.z > 0.0:
            raise ValueError(f"Whittaker argument must be positive, got z = {self.z}")

        mu = complex(self.mu)
        if mu.real < 0.0 or (mu.real == 0.0 and mu.imag != 0.0):
            raise ValueError(f"Second index must have positive real part or be real and non-negative, got {mu}")

        return self


def log_gamma(z: Number) -> complex:
    """
    Principal branch of log Gamma(z).
    :param z: The argument, not a non-positive integer
    """

    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise ValueError(f"Gamma has a pole at z = {z.real:g}")

    return complex(loggamma(z))


def _to_complex(x) -> complex:
    return complex(float(x.real), float(x.imag))


def _params(p: WhittakerParams):
    p.validate()
    k, mu = complex(p.k), complex(p.mu)

    return mpc(k.real, k.imag), mpc(mu.real, mu.imag), mpf(p.z)


def log_whittaker_m(p: WhittakerParams) -> complex:
    """
    Logarithm of the Whittaker function M_{k, mu}(z), regular at the origin.
    """

    k, mu, z = _params(p)

    return _to_complex(mplog(whitm(k, mu, z)))


def log_whittaker_w(p: WhittakerParams) -> complex:
    """
    Logarithm of the Whittaker function W_{k, mu}(z), decaying at infinity.
    """

    k, mu, z = _params(p)

    return _to_complex(mplog(whitw(k, mu, z)))


def _exp_checked(value: complex, name: str, p: WhittakerParams) -> complex:
    if value.real > _LOG_MAX:
        raise OverflowError(f"{name} overflows at {p}, use the log-scaled form")

    return cmath.exp(value)


def whittaker_m(p: WhittakerParams) -> complex:
    return _exp_checked(log_whittaker_m(p), "M", p)


def whittaker_w(p: WhittakerParams) -> complex:
    return _exp_checked(log_whittaker_w(p), "W", p)


def bessel_ikl(l: int, z: Union[float, np.ndarray], scaled: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Modified spherical Bessel functions i_l(z) and k_l(z), with k_0(z) = (pi / 2) exp(-z) / z.
    :param l: The order
    :param z: The argument(s)
    :param scaled: Whether to return (i_l exp(-z), k_l exp(z)) instead, which are finite for all z > 0
    """

    if l < 0:
        raise ValueError(f"Order must be non-negative, got {l}")

    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise ValueError("Argument of the modified spherical Bessel functions must be positive")

    prefactor = np.sqrt(0.5 * np.pi / z)
    i_scaled = prefactor * ive(l + 0.5, z)
    k_scaled = prefactor * kve(l + 0.5, z)

    if scaled:
        return i_scaled, k_scaled

    with np.errstate(over="ignore"):
        i_l = i_scaled * np.exp(z)
        k_l = k_scaled * np.exp(-z)

    if not np.all(np.isfinite(i_l)):
        raise OverflowError(f"i_{l} overflows, use the scaled form")

    return i_l, k_l
