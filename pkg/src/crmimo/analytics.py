"""Closed-form serving-probability machinery.

Under equal per-SU power p_eq, the SINR of an MEB stream is well
modeled by an inverse-gamma law (moment-matched after replacing the
principal channel gain by its mean), the SINR of a ZF stream by a
generalized-F law (ratio of two moment-matched gammas), and the
aggregate interference at a receiving PU by a gamma law with shape
k_su.  From those, q_k gives the probability that all k_su SUs reach
rate r0 while every receiving PU stays below the cap i0, and
optimize_equal_power finds the best p_eq inside the feasible bracket.

The mean principal Wishart eigenvalue E[sigma2_k1] that the models
need is estimated once per (m_u, m_b) by Monte Carlo and cached, with
precomputed values shipped in data/wishart_means.txt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .beamforming import MEB, ZFB
from .network import NetworkConfig
from .specfun import regularized_incomplete_beta, regularized_lower_gamma

__all__ = [
    "GammaParams",
    "InverseGammaParams",
    "GenFParams",
    "MebSinrInputs",
    "MebSinrModel",
    "ZfbSinrModel",
    "EqualPowerOptimum",
    "WISHART_SAMPLES",
    "expected_max_eig",
    "load_wishart_cache",
    "save_wishart_cache",
    "meb_sinr_params",
    "meb_sinr_cdf",
    "meb_interference_cdf",
    "zfb_sinr_params",
    "zfb_sinr_cdf",
    "zfb_interference_cdf",
    "q_k",
    "equal_power_bounds",
    "optimize_equal_power",
]


@dataclass(frozen=True)
class GammaParams:
    """Gamma distribution with density x^(shape-1) e^(-x/scale)."""

    shape: float
    scale: float

    def __post_init__(self):
        for name in ("shape", "scale"):
            val = getattr(self, name)
            if not math.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be finite and positive, got {val!r}")

    def cdf(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        return regularized_lower_gamma(self.shape, x / self.scale)


@dataclass(frozen=True)
class InverseGammaParams:
    """Inverse-gamma distribution; theta is the reciprocal of the scale.

    If X ~ Gamma(shape, theta) then 1/X has this law, so
    Pr(1/X <= s) = 1 - P(shape, 1/(s theta)).
    """

    shape: float
    theta: float

    def __post_init__(self):
        for name in ("shape", "theta"):
            val = getattr(self, name)
            if not math.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be finite and positive, got {val!r}")

    def cdf(self, s: float) -> float:
        if s <= 0.0:
            return 0.0
        return 1.0 - regularized_lower_gamma(self.shape, 1.0 / (s * self.theta))


@dataclass(frozen=True)
class GenFParams:
    """Generalized F law of a ratio of independent gammas.

    If W ~ Gamma(k_n, theta_n) and D ~ Gamma(k_d, theta_d) then W/D has
    CDF I_{lam s / (1 + lam s)}(k_n, k_d) with lam = theta_d/theta_n.
    """

    k_n: float
    k_d: float
    lam: float

    def __post_init__(self):
        for name in ("k_n", "k_d", "lam"):
            val = getattr(self, name)
            if not math.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be finite and positive, got {val!r}")
        if self.k_n < 1.0:
            raise ValueError(f"k_n must be at least 1, got {self.k_n!r}")

    def cdf(self, s: float) -> float:
        if s <= 0.0:
            return 0.0
        if math.isinf(s):
            return 1.0
        z = self.lam * s
        return regularized_incomplete_beta(z / (1.0 + z), self.k_n, self.k_d)


@dataclass(frozen=True)
class MebSinrInputs:
    """Moment aggregates behind the MEB SINR model.

    The reciprocal SINR is c + x where x collects the PU and
    inter-stream terms with mean a and second moment b; x alone is
    matched by Gamma(k_z, theta_z) and the full denominator c + x by
    Gamma(k_prime, theta_prime), whose reciprocal is the SINR model.
    Identities k_prime*theta_prime = c + a and
    k_prime*theta_prime^2 = b hold by construction.
    """

    a: float
    b: float
    c: float
    k_z: float
    theta_z: float
    k_prime: float
    theta_prime: float


@dataclass(frozen=True)
class MebSinrModel:
    """MEB SINR distribution: inverse gamma, or a point mass when the
    denominator is deterministic (k_su = 1 with no transmitting PU)."""

    params: InverseGammaParams | None
    inputs: MebSinrInputs
    point_mass: float | None = None


@dataclass(frozen=True)
class ZfbSinrModel:
    """ZFB SINR distribution: generalized F, or a plain gamma when no
    transmitting PU randomizes the denominator."""

    genf: GenFParams | None
    gamma: GammaParams | None = None


WISHART_SAMPLES = 100_000

_cache: dict[tuple[int, int], tuple[float, float, int]] | None = None


def _wishart_seed(m_u: int, m_b: int) -> int:
    return m_u * 1_000_003 + m_b


def _simulate_max_eig(m_u: int, m_b: int, n_samples: int = WISHART_SAMPLES):
    """Mean largest eigenvalue of H H^H, H of shape (m_u, m_b) with unit
    per-entry variance, by batched Monte Carlo.  Deterministic per shape."""
    rng = np.random.default_rng(_wishart_seed(m_u, m_b))
    batch = 2000 if m_b <= 256 else 400
    total = total_sq = 0.0
    done = 0
    while done < n_samples:
        size = min(batch, n_samples - done)
        h = (rng.standard_normal((size, m_u, m_b))
             + 1j * rng.standard_normal((size, m_u, m_b))) / np.sqrt(2.0)
        top = np.linalg.eigvalsh(h @ h.conj().transpose(0, 2, 1))[:, -1]
        total += top.sum()
        total_sq += (top ** 2).sum()
        done += size
    mean = total / n_samples
    stderr = math.sqrt(max(total_sq / n_samples - mean ** 2, 0.0) / n_samples)
    return mean, stderr, n_samples


def load_wishart_cache(path_or_file) -> dict:
    """Parse cache lines `m_u m_b mean stderr n_samples` into a dict."""
    if hasattr(path_or_file, "read"):
        lines = path_or_file.read().splitlines()
    else:
        with open(path_or_file) as fh:
            lines = fh.read().splitlines()
    cache = {}
    for line in lines:
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        m_u, m_b, mean, stderr, n = body.split()
        cache[(int(m_u), int(m_b))] = (float(mean), float(stderr), int(n))
    return cache


def save_wishart_cache(path, cache: dict):
    """Write the cache in the same text format load_wishart_cache reads."""
    with open(path, "w") as fh:
        fh.write("# m_u m_b mean stderr n_samples\n")
        for (m_u, m_b), (mean, stderr, n) in sorted(cache.items()):
            fh.write(f"{m_u} {m_b} {mean:.6f} {stderr:.6f} {n}\n")


def _get_cache() -> dict:
    # initialized once on first use; see the concurrency note in the
    # module docstring of montecarlo (init completes before trials fan out)
    global _cache
    if _cache is None:
        ref = resources.files("crmimo").joinpath("data/wishart_means.txt")
        with ref.open() as fh:
            _cache = load_wishart_cache(fh)
    return _cache


def expected_max_eig(m_u: int, m_b: int, sigma2_h: float = 1.0) -> float:
    """Mean principal eigenvalue E[sigma2_k1] of an m_u x m_b channel.

    Exact for m_u = 1 (chi-square mean sigma2_h * m_b); otherwise a
    cached 10^5-sample Monte Carlo estimate, scaled linearly by
    sigma2_h.  Uncached shapes are simulated on first request.
    """
    if not 1 <= m_u <= m_b:
        raise ValueError(f"need 1 <= m_u <= m_b, got m_u={m_u}, m_b={m_b}")
    if sigma2_h <= 0 or not math.isfinite(sigma2_h):
        raise ValueError(f"sigma2_h must be finite and positive, got {sigma2_h!r}")
    if m_u == 1:
        return sigma2_h * m_b
    cache = _get_cache()
    key = (int(m_u), int(m_b))
    if key not in cache:
        cache[key] = _simulate_max_eig(*key)
    return sigma2_h * cache[key][0]


def meb_sinr_params(config: NetworkConfig, p_eq: float) -> MebSinrModel:
    """Moment-matched MEB SINR model at equal power p_eq.

    With e = E[sigma2_k1], the reciprocal SINR aggregates are
    a = l_tx p_p sigma2_h/(p_eq e) + (k_su - 1)/m_b,
    b = l_tx p_p^2 sigma2_h^2/(p_eq e)^2 + (k_su - 1)/m_b^2,
    c = sigma2_w/(p_eq e), giving the inverse-gamma shape
    (c + a)^2/b and reciprocal scale b/(c + a).
    """
    if not (p_eq > 0.0) or not math.isfinite(p_eq):
        raise ValueError(f"p_eq must be positive and finite, got {p_eq!r}")
    e = expected_max_eig(config.m_u, config.m_b, config.sigma2_h)
    pu = config.l_tx * config.p_p * config.sigma2_h / (p_eq * e)
    pu2 = config.l_tx * (config.p_p * config.sigma2_h / (p_eq * e)) ** 2
    a = pu + (config.k_su - 1) / config.m_b
    b = pu2 + (config.k_su - 1) / config.m_b ** 2
    c = config.sigma2_w / (p_eq * e)
    if b == 0.0:
        inputs = MebSinrInputs(a=a, b=b, c=c, k_z=0.0, theta_z=0.0,
                               k_prime=0.0, theta_prime=0.0)
        return MebSinrModel(params=None, inputs=inputs, point_mass=1.0 / c)
    k_prime = (c + a) ** 2 / b
    theta_prime = b / (c + a)
    k_z = a ** 2 / b
    theta_z = b / a
    inputs = MebSinrInputs(a=a, b=b, c=c, k_z=k_z, theta_z=theta_z,
                           k_prime=k_prime, theta_prime=theta_prime)
    return MebSinrModel(params=InverseGammaParams(shape=k_prime, theta=theta_prime),
                        inputs=inputs)


def meb_sinr_cdf(model, s: float) -> float:
    """Pr(MEB SINR <= s); accepts a MebSinrModel or InverseGammaParams."""
    if not (s > 0.0):
        raise ValueError(f"s must be positive, got {s!r}")
    if isinstance(model, InverseGammaParams):
        return model.cdf(s)
    if model.point_mass is not None:
        return 1.0 if s >= model.point_mass else 0.0
    return model.params.cdf(s)


def meb_interference_cdf(config: NetworkConfig, p_eq: float, x: float) -> float:
    """Pr(interference at a receiving PU <= x) under MEB at power p_eq."""
    if not (p_eq > 0.0) or not math.isfinite(p_eq):
        raise ValueError(f"p_eq must be positive and finite, got {p_eq!r}")
    if not (x >= 0.0):
        raise ValueError(f"x must be nonnegative, got {x!r}")
    return GammaParams(shape=float(config.k_su), scale=p_eq * config.sigma2_h).cdf(x)


def zfb_sinr_params(config: NetworkConfig, p_eq: float) -> ZfbSinrModel:
    """Moment-matched ZFB SINR model at equal power p_eq.

    The numerator gain concentrates on a gamma with shape
    k_n = m_b - k_su - l_tx + 1 (the ZF null-space dimension) and the
    denominator noise-plus-PU power on a gamma with shape k_d; their
    ratio is generalized F.  Without transmitting PUs the denominator
    is the constant sigma2_w and the SINR is the plain scaled gamma.
    """
    if not (p_eq > 0.0) or not math.isfinite(p_eq):
        raise ValueError(f"p_eq must be positive and finite, got {p_eq!r}")
    k_n = config.m_b - config.k_su - config.l_tx + 1
    if k_n < 1:
        raise ValueError(
            f"need m_b >= k_su + l_tx for the ZFB SINR model, got "
            f"m_b={config.m_b}, k_su={config.k_su}, l_tx={config.l_tx}"
        )
    e = expected_max_eig(config.m_u, config.m_b, config.sigma2_h)
    theta_n = p_eq * e / config.m_b
    if config.l_tx == 0:
        return ZfbSinrModel(genf=None,
                            gamma=GammaParams(shape=float(k_n), scale=theta_n / config.sigma2_w))
    pu_mean = config.l_tx * config.p_p * config.sigma2_h
    pu_var = config.l_tx * (config.p_p * config.sigma2_h) ** 2
    k_d = (config.sigma2_w + pu_mean) ** 2 / pu_var
    lam = pu_mean * config.m_b / (p_eq * e * (config.sigma2_w + pu_mean))
    return ZfbSinrModel(genf=GenFParams(k_n=float(k_n), k_d=k_d, lam=lam))


def zfb_sinr_cdf(model, s: float) -> float:
    """Pr(ZFB SINR <= s); accepts a ZfbSinrModel or GenFParams."""
    if not (s >= 0.0):
        raise ValueError(f"s must be nonnegative, got {s!r}")
    if isinstance(model, GenFParams):
        return model.cdf(s)
    if model.genf is not None:
        return model.genf.cdf(s)
    return model.gamma.cdf(s)


def zfb_interference_cdf(config: NetworkConfig, p_eq: float, x: float) -> float:
    """Pr(interference at a receiving PU <= x) under ZFB at power p_eq.

    ZF nulls the estimated PU channels, so only the CSI error leaks:
    the gamma scale uses sigma2_delta, and with perfect CSI the
    interference is identically zero (unit step at 0).
    """
    if not (p_eq > 0.0) or not math.isfinite(p_eq):
        raise ValueError(f"p_eq must be positive and finite, got {p_eq!r}")
    if not (x >= 0.0):
        raise ValueError(f"x must be nonnegative, got {x!r}")
    if config.sigma2_delta == 0.0:
        return 1.0
    return GammaParams(shape=float(config.k_su), scale=p_eq * config.sigma2_delta).cdf(x)


def q_k(scheme: str, config: NetworkConfig, p_eq: float) -> float:
    """Probability of serving all k_su SUs at equal power p_eq.

    [1 - sinr_cdf(2^r0 - 1)]^k_su * [interference_cdf(i0)]^l_rx with the
    scheme's distributions.
    """
    thr = 2.0 ** config.r0 - 1.0
    if scheme == MEB:
        exceed = 1.0 - meb_sinr_cdf(meb_sinr_params(config, p_eq), thr)
        comply = meb_interference_cdf(config, p_eq, config.i0)
    elif scheme == ZFB:
        exceed = 1.0 - zfb_sinr_cdf(zfb_sinr_params(config, p_eq), thr)
        comply = zfb_interference_cdf(config, p_eq, config.i0)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    exceed = min(max(exceed, 0.0), 1.0)
    comply = min(max(comply, 0.0), 1.0)
    return exceed ** config.k_su * comply ** config.l_rx


def equal_power_bounds(config: NetworkConfig) -> tuple[float, float]:
    """Bracket [p_min, p_max] for the equal-power search.

    p_max = p0/k_su splits the budget evenly; p_min is the power that
    meets the rate threshold over noise alone at the mean principal
    gain.  p_min may exceed p_max on infeasible configs; the optimizer
    handles that case.
    """
    p_max = config.p0 / config.k_su
    e = expected_max_eig(config.m_u, config.m_b, config.sigma2_h)
    p_min = config.sigma2_w * (2.0 ** config.r0 - 1.0) / e
    return p_min, p_max


@dataclass(frozen=True)
class EqualPowerOptimum:
    """Result of the equal-power search; range_feasible is False when
    p_min exceeded p_max and the value is the p_max endpoint."""

    p_eq: float
    q: float
    range_feasible: bool


_GRID_POINTS = 256
_GOLDEN_ITERS = 100
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_equal_power(scheme: str, config: NetworkConfig) -> EqualPowerOptimum:
    """Maximize q_k over the equal-power bracket, deterministically.

    A 256-point log-spaced grid scan guards against local maxima, then
    golden-section refines around the best grid cell.  Exact ties keep
    the lowest power (the grid argmax takes the first maximum and
    refinement must strictly improve to replace it).
    """
    p_min, p_max = equal_power_bounds(config)
    if p_min > p_max:
        return EqualPowerOptimum(p_eq=p_max, q=q_k(scheme, config, p_max),
                                 range_feasible=False)

    lo, hi = math.log10(p_min), math.log10(p_max)
    grid = np.logspace(lo, hi, _GRID_POINTS)
    values = np.array([q_k(scheme, config, p) for p in grid])
    best = int(np.argmax(values))
    best_p, best_q = float(grid[best]), float(values[best])

    a = math.log10(grid[max(best - 1, 0)])
    b = math.log10(grid[min(best + 1, _GRID_POINTS - 1)])
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = q_k(scheme, config, 10.0 ** x1)
    f2 = q_k(scheme, config, 10.0 ** x2)
    for _ in range(_GOLDEN_ITERS):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = q_k(scheme, config, 10.0 ** x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = q_k(scheme, config, 10.0 ** x1)
        if b - a < 1e-12:
            break
    refined = 10.0 ** ((a + b) / 2.0)
    refined_q = q_k(scheme, config, refined)
    if refined_q > best_q:
        best_p, best_q = refined, refined_q
    return EqualPowerOptimum(p_eq=best_p, q=best_q, range_feasible=True)
