"""Finite cosine polynomials, the spectral smoothness functional, Fejer
kernels, and Fourier coefficients of exponentiated series.

Every function handled by the construction is a finite cosine polynomial
``f(lam) = a0 + sum_k a_k cos(k lam)`` on [-pi, pi]; only integrals of
``exp(f)`` are numerical.  Quadrature uses a uniform periodic grid and the
FFT, which is spectrally accurate for these entire integrands.

All values and tables here are immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, RankNotFoundError

TWO_PI = 2.0 * np.pi

#: orders n with |lam| below this use the series limit of the Fejer kernel
FEJER_GUARD = 1e-8

#: safety factor: rank certification requires deviations <= eps * (1 - margin)
RANK_MARGIN = 0.1


@dataclass(frozen=True, eq=False)
class CosineSeries:
    """a0 + sum_{k=1..K} coeffs[k-1] * cos(k lam); trailing zeros trimmed."""

    a0: float
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        nz = np.nonzero(arr)[0]
        arr = arr[: nz[-1] + 1] if nz.size else np.zeros(0)
        arr.setflags(write=False)
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def value_at_zero(self) -> float:
        return self.a0 + float(np.sum(self.coeffs))


ZERO_SERIES = CosineSeries(0.0)


def add(f: CosineSeries, g: CosineSeries) -> CosineSeries:
    k = max(f.degree, g.degree)
    c = np.zeros(k)
    c[: f.degree] += f.coeffs
    c[: g.degree] += g.coeffs
    return CosineSeries(f.a0 + g.a0, c)


def negate(f: CosineSeries) -> CosineSeries:
    return CosineSeries(-f.a0, -f.coeffs)


def evaluate(f: CosineSeries, lam) -> np.ndarray | float:
    """Exact pointwise evaluation (dense in the series degree)."""
    lam_arr = np.asarray(lam, dtype=float)
    out = np.full(lam_arr.shape, f.a0)
    if f.degree:
        k = np.arange(1, f.degree + 1)
        out = out + np.cos(np.multiply.outer(lam_arr, k)) @ f.coeffs
    return float(out) if np.isscalar(lam) else out


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic quadrature grid lam_j = -pi + 2 pi j / size."""

    size: int = 2 ** 18

    def __post_init__(self):
        s = self.size
        if s < 4 or s & (s - 1):
            raise ConfigurationError(f"grid size must be a power of two >= 4, got {s}")

    def nodes(self) -> np.ndarray:
        return -np.pi + TWO_PI * np.arange(self.size) / self.size


def eval_on_grid(f: CosineSeries, grid: GridSpec) -> np.ndarray:
    """Values of f at the grid nodes, computed exactly via one inverse FFT."""
    m = grid.size
    if 2 * f.degree >= m:
        raise ConfigurationError(
            f"grid size {m} cannot represent a series of degree {f.degree}"
        )
    spec = np.zeros(m // 2 + 1)
    spec[0] = f.a0 * m
    if f.degree:
        k = np.arange(1, f.degree + 1)
        # node offset -pi folds in as a (-1)^k twist of the coefficients
        spec[1 : f.degree + 1] = (-1.0) ** k * f.coeffs * (m / 2.0)
    return np.fft.irfft(spec, m)


def psi(f: CosineSeries) -> float:
    """Smoothness functional sum_k k * a_k**2 over the finite support."""
    if not f.degree:
        return 0.0
    k = np.arange(1, f.degree + 1)
    return float(np.sum(k * f.coeffs ** 2))


def psi_subadditive_check(f: CosineSeries, g: CosineSeries, tol: float = 1e-12) -> bool:
    """Verify sqrt(psi(f+g)) <= sqrt(psi(f)) + sqrt(psi(g)) + tol."""
    return np.sqrt(psi(add(f, g))) <= np.sqrt(psi(f)) + np.sqrt(psi(g)) + tol


def fejer_kernel(n: int, lam) -> np.ndarray | float:
    """Fejer kernel of order n; continuous across lam = 0.

    Within FEJER_GUARD of zero the value is the series limit with its
    quadratic correction n * (1 - (n^2 - 1) lam^2 / 12).
    """
    if n < 1:
        raise ConfigurationError(f"Fejer order must be >= 1, got {n}")
    lam_arr = np.asarray(lam, dtype=float)
    half = lam_arr / 2.0
    s2 = np.sin(half) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        bulk = np.sin(n * half) ** 2 / (n * s2)
    near = n * (1.0 - (n * n - 1.0) * lam_arr ** 2 / 12.0)
    out = np.where(np.abs(lam_arr) < FEJER_GUARD, near, bulk)
    return float(out) if np.isscalar(lam) else out


@dataclass(frozen=True, eq=False)
class AutocovarianceTable:
    """Fourier coefficients r[k] of a spectral density, k = 0..kmax."""

    r: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.r, dtype=float).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise ConfigurationError("autocovariance table must be a nonempty vector")
        if arr[0] <= 0.0:
            raise ConfigurationError(f"r[0] must be positive, got {arr[0]:g}")
        if np.max(np.abs(arr)) > arr[0] * (1.0 + 1e-10):
            raise ConfigurationError("autocovariances must satisfy |r[k]| <= r[0]")
        arr.setflags(write=False)
        object.__setattr__(self, "r", arr)

    @property
    def kmax(self) -> int:
        return len(self.r) - 1


class ExpFejerTable:
    """All Fejer means of exp(f) up to order grid.size // 4, from one FFT.

    The mean of order n equals sum_{|k|<n} (1 - |k|/n) r[k] with r[k] the
    Fourier coefficients of exp(f); cumulative sums make every order O(1).
    """

    def __init__(self, f: CosineSeries, grid: GridSpec):
        self.f = f
        self.grid = grid
        self.n_cap = grid.size // 4
        vals = np.exp(eval_on_grid(f, grid))
        spec = np.fft.rfft(vals)
        k = np.arange(len(spec))
        self._r = ((-1.0) ** k) * spec.real / grid.size
        r = self._r[: self.n_cap]
        kk = np.arange(len(r))
        self._cum0 = np.cumsum(r)
        self._cum1 = np.cumsum(kk * r)

    def autocov(self, kmax: int) -> AutocovarianceTable:
        if 4 * kmax > self.grid.size:
            raise ConfigurationError(
                f"grid size {self.grid.size} < 4 * kmax = {4 * kmax}"
            )
        return AutocovarianceTable(self._r[: kmax + 1])

    def integrals_up_to(self, n: int) -> np.ndarray:
        """Fejer means of orders 1..n as a vector."""
        if n < 1 or n > self.n_cap:
            raise ConfigurationError(
                f"Fejer order must lie in 1..{self.n_cap} for grid "
                f"{self.grid.size}, got {n}"
            )
        orders = np.arange(1.0, n + 1.0)
        return (2.0 * self._cum0[:n] - self._r[0]) - 2.0 * self._cum1[:n] / orders

    def integral(self, n: int) -> float:
        return float(self.integrals_up_to(n)[-1])

    def rank(self, eps: float, n_max: int) -> int:
        """Smallest N with |exp(f(0)) - mean(n)| <= eps*(1-margin) for all
        n in N..n_max; raises RankNotFoundError when no such N exists."""
        if eps <= 0.0:
            raise ConfigurationError(f"rank tolerance must be positive, got {eps}")
        n_scan = min(n_max, self.n_cap)
        target = float(np.exp(self.f.value_at_zero()))
        dev = np.abs(target - self.integrals_up_to(n_scan))
        bad = np.nonzero(dev > eps * (1.0 - RANK_MARGIN))[0]
        if bad.size == 0:
            return 1
        rank = int(bad[-1]) + 2  # index i holds order i+1
        if rank > n_scan:
            raise RankNotFoundError(
                f"no Fejer order <= {n_scan} certifies accuracy {eps:g} "
                f"(raise the scan cap or the grid size)"
            )
        return rank


def autocov_of_exp(f: CosineSeries, grid: GridSpec, kmax: int) -> AutocovarianceTable:
    """Autocovariance table of the spectral density exp(f)."""
    return ExpFejerTable(f, grid).autocov(kmax)


def fejer_integral_exp(f: CosineSeries, n: int, grid: GridSpec) -> float:
    """Fejer-weighted integral of exp(f), via the autocovariance identity."""
    if 4 * n > grid.size:
        raise ConfigurationError(f"grid size {grid.size} < 4 * n = {4 * n}")
    return ExpFejerTable(f, grid).integral(n)


def fejer_integral_exp_direct(f: CosineSeries, n: int, grid: GridSpec) -> float:
    """Same integral by direct quadrature of F_n * exp(f); the oracle path."""
    if 4 * n > grid.size:
        raise ConfigurationError(f"grid size {grid.size} < 4 * n = {4 * n}")
    lam = grid.nodes()
    return float(np.mean(fejer_kernel(n, lam) * np.exp(eval_on_grid(f, grid))))


def fejer_rank(f: CosineSeries, eps: float, grid: GridSpec, n_max: int) -> int:
    """Smallest order from which all Fejer means of exp(f) stay within eps of
    exp(f(0)), certified by scanning up to n_max."""
    if n_max > grid.size // 4:
        raise ConfigurationError(
            f"scan horizon {n_max} exceeds grid validity {grid.size // 4}"
        )
    return ExpFejerTable(f, grid).rank(eps, n_max)
