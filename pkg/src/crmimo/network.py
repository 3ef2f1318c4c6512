"""Network model for an underlay cognitive-radio downlink.

A secondary base station (SBS) with m_b antennas serves k_su secondary
users (SUs, m_u antennas each) on the same band as l_tx transmitting and
l_rx receiving single-antenna primary users (PUs).  Channels are flat
Rayleigh fading.  The SBS knows the SU channels exactly but only noisy
estimates of the PU channels; all interference and SINR evaluators come
in a true and an estimated flavor.

Complex Gaussian convention: CN(0, s2) means total variance s2, i.e.
each real part has variance s2/2.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NetworkConfig",
    "ChannelRealization",
    "LinkMetrics",
    "db_to_linear",
    "linear_to_db",
    "generate_channels",
    "true_interference_to_pu",
    "estimated_interference_to_pu",
    "interference_from_pu",
    "inter_stream_interference",
    "true_sinr",
    "estimated_sinr",
    "evaluate_links",
]

_DB_KEYS = {"p0_db": "p0", "i0_db": "i0", "pp_db": "p_p"}


def db_to_linear(x_db):
    """Convert a dB power value to linear scale."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a linear power value to dB."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class NetworkConfig:
    """Static scenario parameters, all powers in linear scale.

    Attributes:
        m_b: SBS antenna count.
        m_u: antennas per SU.
        k_su: number of SUs served simultaneously.
        l_tx: number of transmitting PUs (interfere with SUs).
        l_rx: number of receiving PUs (protected by the cap i0).
        sigma2_h: per-element channel variance, all links.
        sigma2_delta: CSI error variance of the PU channel estimates.
        sigma2_w: receiver noise power.
        p_p: PU transmit power.
        p0: SBS total transmit power budget.
        i0: maximum allowed interference at each receiving PU.
        r0: minimum rate per SU in bps/Hz.
    """

    m_b: int = 64
    m_u: int = 4
    k_su: int = 10
    l_tx: int = 1
    l_rx: int = 1
    sigma2_h: float = 1.0
    sigma2_delta: float = 0.01
    sigma2_w: float = 1.0
    p_p: float = 1.0
    p0: float = 10.0
    i0: float = 10.0 ** -0.3
    r0: float = 1.0

    def __post_init__(self):
        for name in ("m_b", "m_u", "k_su", "l_tx", "l_rx"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or isinstance(val, bool):
                raise ValueError(f"{name} must be an integer, got {val!r}")
        if self.m_b < 1 or self.m_u < 1 or self.k_su < 1:
            raise ValueError("m_b, m_u and k_su must be positive")
        if self.l_tx < 0 or self.l_rx < 0:
            raise ValueError("l_tx and l_rx must be nonnegative")
        for name in ("sigma2_h", "sigma2_w", "p0", "i0", "r0"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be finite and positive, got {val!r}")
        for name in ("sigma2_delta", "p_p"):
            val = getattr(self, name)
            if not np.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {val!r}")
        if self.sigma2_delta > self.sigma2_h:
            raise ValueError(
                "sigma2_delta must not exceed sigma2_h "
                "(the estimate carries the remaining variance)"
            )

    @property
    def l_pu(self):
        """Total number of PUs."""
        return self.l_tx + self.l_rx

    def replace(self, **updates) -> "NetworkConfig":
        """Return a copy with the given fields replaced."""
        return dataclasses.replace(self, **updates)

    def to_file(self, path):
        """Write the config as flat key = value lines (linear units)."""
        with open(path, "w") as fh:
            fh.write("# network config, powers in linear scale\n")
            for f in dataclasses.fields(self):
                fh.write(f"{f.name} = {getattr(self, f.name)!r}\n")

    @classmethod
    def from_file(cls, path) -> "NetworkConfig":
        """Read a flat key = value config file.

        Power fields also accept dB forms p0_db, i0_db, pp_db with
        linear = 10^(dB/10).  Giving both forms of one field is an error.
        """
        with open(path) as fh:
            return cls.from_items(_parse_kv_lines(fh))

    @classmethod
    def from_items(cls, items: dict) -> "NetworkConfig":
        """Build a config from a {key: string value} mapping."""
        field_map = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in items.items():
            if key in _DB_KEYS:
                target = _DB_KEYS[key]
                value = float(db_to_linear(float(raw)))
            elif key in field_map:
                target = key
                if field_map[key].type == "int":
                    value = int(raw)
                else:
                    value = float(raw)
            else:
                raise ValueError(f"unknown config key {key!r}")
            if target in kwargs:
                raise ValueError(f"config sets {target!r} twice (dB and linear forms?)")
            kwargs[target] = value
        return cls(**kwargs)


def _parse_kv_lines(lines) -> dict:
    items = {}
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"line {lineno}: expected key = value, got {line.strip()!r}")
        key, _, val = body.partition("=")
        key, val = key.strip(), val.strip()
        if key in items:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        items[key] = val
    return items


@dataclass(frozen=True)
class ChannelRealization:
    """One fading realization; all arrays are read-only.

    Attributes:
        h_su: (k_su, m_u, m_b) true SBS-to-SU channels.
        h_pu_sbs: (l_pu, m_b) true PU-to-SBS channels.
        h_pu_su: (l_pu, k_su, m_u) true PU-to-SU channels.
        hhat_pu_sbs: (l_pu, m_b) estimated PU-to-SBS channels.
        hhat_pu_su: (l_pu, k_su, m_u) estimated PU-to-SU channels.
        pu_tx: indices of transmitting PUs (first l_tx).
        pu_rx: indices of receiving PUs (the rest).
    """

    h_su: np.ndarray
    h_pu_sbs: np.ndarray
    h_pu_su: np.ndarray
    hhat_pu_sbs: np.ndarray
    hhat_pu_su: np.ndarray
    pu_tx: np.ndarray
    pu_rx: np.ndarray

    @property
    def k_su(self):
        return self.h_su.shape[0]

    @property
    def m_u(self):
        return self.h_su.shape[1]

    @property
    def m_b(self):
        return self.h_su.shape[2]


@dataclass(frozen=True)
class LinkMetrics:
    """All interference and SINR figures for one (beams, powers) choice.

    int_from_pu_est and the SINR denominators follow the SBS view: the
    PU-to-SU term uses estimated channels plus the sigma2_delta floor in
    the *_est fields and true channels in the *_true fields.
    int_inter_stream is the exact inter-stream term (SU channels are
    known exactly, so it has no estimated counterpart).
    """

    sinr_true: np.ndarray
    sinr_est: np.ndarray
    int_to_pu_true: np.ndarray
    int_to_pu_est: np.ndarray
    int_from_pu_est: np.ndarray
    int_inter_stream: np.ndarray


def _cgauss(rng, shape, var):
    scale = np.sqrt(var / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * scale


def generate_channels(config: NetworkConfig, seed) -> ChannelRealization:
    """Draw one i.i.d. Rayleigh realization, deterministic in (config, seed).

    Estimates and errors are independent: hhat ~ CN(0, sigma2_h -
    sigma2_delta) and delta ~ CN(0, sigma2_delta), with the true channel
    h = hhat + delta.  This gives h the full variance sigma2_h, keeps
    h - hhat = delta exactly, and makes the error orthogonal to the
    estimate as an estimation model requires.

    Args:
        config: scenario parameters.
        seed: anything np.random.default_rng accepts (int, SeedSequence).

    Returns:
        ChannelRealization with read-only arrays.
    """
    rng = np.random.default_rng(seed)
    k, mu, mb, l = config.k_su, config.m_u, config.m_b, config.l_pu
    s2hat = config.sigma2_h - config.sigma2_delta

    h_su = _cgauss(rng, (k, mu, mb), config.sigma2_h)
    hhat_pu_sbs = _cgauss(rng, (l, mb), s2hat)
    delta_pu_sbs = _cgauss(rng, (l, mb), config.sigma2_delta)
    hhat_pu_su = _cgauss(rng, (l, k, mu), s2hat)
    delta_pu_su = _cgauss(rng, (l, k, mu), config.sigma2_delta)

    arrays = dict(
        h_su=h_su,
        h_pu_sbs=hhat_pu_sbs + delta_pu_sbs,
        h_pu_su=hhat_pu_su + delta_pu_su,
        hhat_pu_sbs=hhat_pu_sbs,
        hhat_pu_su=hhat_pu_su,
        pu_tx=np.arange(config.l_tx),
        pu_rx=np.arange(config.l_tx, l),
    )
    for a in arrays.values():
        a.setflags(write=False)
    return ChannelRealization(**arrays)


def _check_beams(real: ChannelRealization, v, u=None, p=None):
    k, mu, mb = real.k_su, real.m_u, real.m_b
    v = np.asarray(v)
    if v.shape != (k, mb):
        raise ValueError(f"v must have shape {(k, mb)}, got {v.shape}")
    out = [v]
    if u is not None:
        u = np.asarray(u)
        if u.shape != (k, mu):
            raise ValueError(f"u must have shape {(k, mu)}, got {u.shape}")
        out.append(u)
    if p is not None:
        p = np.asarray(p, dtype=float)
        if p.shape != (k,):
            raise ValueError(f"p must have shape {(k,)}, got {p.shape}")
        out.append(p)
    return out


def true_interference_to_pu(real: ChannelRealization, v, p) -> np.ndarray:
    """Interference sum_k p_k |v_k^H h_l0|^2 at each receiving PU."""
    v, p = _check_beams(real, v, p=p)
    h_rx = real.h_pu_sbs[real.pu_rx]
    cross = np.abs(v.conj() @ h_rx.T) ** 2
    return cross.T @ p


def estimated_interference_to_pu(real: ChannelRealization, v, p, config: NetworkConfig) -> np.ndarray:
    """SBS-side interference estimate sum_k p_k (|v_k^H hhat_l0|^2 + sigma2_delta)."""
    v, p = _check_beams(real, v, p=p)
    hhat_rx = real.hhat_pu_sbs[real.pu_rx]
    cross = np.abs(v.conj() @ hhat_rx.T) ** 2 + config.sigma2_delta
    return cross.T @ p


def _interference_from_pu(real, u, config, use_estimates):
    if use_estimates:
        ch = real.hhat_pu_su[real.pu_tx]
        floor = config.sigma2_delta
    else:
        ch = real.h_pu_su[real.pu_tx]
        floor = 0.0
    cross = np.abs(np.einsum("ku,lku->lk", u.conj(), ch)) ** 2
    return config.p_p * (cross + floor).sum(axis=0)


def interference_from_pu(real: ChannelRealization, u, config: NetworkConfig, use_estimates: bool) -> np.ndarray:
    """PU-to-SU interference power per SU after receive beamforming.

    The estimated flavor is sum_l p_p (|u_k^H hhat_lk|^2 + sigma2_delta),
    the true flavor sum_l p_p |u_k^H h_lk|^2, over transmitting PUs.
    """
    u = np.asarray(u)
    if u.shape != (real.k_su, real.m_u):
        raise ValueError(f"u must have shape {(real.k_su, real.m_u)}, got {u.shape}")
    return _interference_from_pu(real, u, config, use_estimates)


def inter_stream_interference(real: ChannelRealization, v, u, p) -> np.ndarray:
    """Per-SU interference from the other SUs' streams, sum_{j!=k} p_j |u_k^H H_k v_j|^2."""
    v, u, p = _check_beams(real, v, u, p)
    eff = np.einsum("ku,kub,jb->kj", u.conj(), real.h_su, v)
    cross = np.abs(eff) ** 2
    own = np.diagonal(cross).copy()
    return cross @ p - own * p


def _sinr(real, v, u, p, config, use_estimates):
    v, u, p = _check_beams(real, v, u, p)
    eff = np.einsum("ku,kub,jb->kj", u.conj(), real.h_su, v)
    cross = np.abs(eff) ** 2
    own = np.diagonal(cross).copy()
    inter = cross @ p - own * p
    pu = _interference_from_pu(real, u, config, use_estimates)
    return (p * own) / (config.sigma2_w + pu + inter)


def true_sinr(real: ChannelRealization, v, u, p, config: NetworkConfig) -> np.ndarray:
    """Per-SU SINR with true PU channels in the denominator."""
    return _sinr(real, v, u, p, config, use_estimates=False)


def estimated_sinr(real: ChannelRealization, v, u, p, config: NetworkConfig) -> np.ndarray:
    """Per-SU SINR as the SBS estimates it (hhat plus the error floor)."""
    return _sinr(real, v, u, p, config, use_estimates=True)


def evaluate_links(real: ChannelRealization, v, u, p, config: NetworkConfig) -> LinkMetrics:
    """Compute every link metric once for a given beam/power choice."""
    v, u, p = _check_beams(real, v, u, p)
    eff = np.einsum("ku,kub,jb->kj", u.conj(), real.h_su, v)
    cross = np.abs(eff) ** 2
    own = np.diagonal(cross).copy()
    inter = cross @ p - own * p
    pu_true = _interference_from_pu(real, u, config, use_estimates=False)
    pu_est = _interference_from_pu(real, u, config, use_estimates=True)
    sig = p * own
    return LinkMetrics(
        sinr_true=sig / (config.sigma2_w + pu_true + inter),
        sinr_est=sig / (config.sigma2_w + pu_est + inter),
        int_to_pu_true=true_interference_to_pu(real, v, p),
        int_to_pu_est=estimated_interference_to_pu(real, v, p, config),
        int_from_pu_est=pu_est,
        int_inter_stream=inter,
    )
