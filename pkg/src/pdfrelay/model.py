"""Problem instances: channels, power budgets, the line-network ensemble, file I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InstanceParseError, InvalidConfigError

__all__ = [
    "RelayChannel",
    "LineNetworkConfig",
    "line_network_sample",
    "complex_gaussian",
    "gram_matrices",
    "joint_channel",
    "save_instance",
    "load_instance",
    "channel_to_dict",
    "channel_from_dict",
]

FORMAT_NAME = "pdfrelay-instance"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class RelayChannel:
    """Gaussian MIMO relay channel with unit-covariance noise at relay and destination.

    Attributes
    ----------
    H_RS : (N_R, N_S) source -> relay
    H_DS : (N_D, N_S) source -> destination
    H_DR : (N_D, N_R) relay -> destination
    P_S, P_R : source and relay power budgets
    """

    H_RS: np.ndarray
    H_DS: np.ndarray
    H_DR: np.ndarray
    P_S: float
    P_R: float

    def __post_init__(self):
        mats = {}
        for name in ("H_RS", "H_DS", "H_DR"):
            m = np.array(getattr(self, name), dtype=complex)
            if m.ndim != 2:
                raise InvalidConfigError(f"{name} must be 2-D, got shape {m.shape}")
            if not np.all(np.isfinite(m)):
                raise InvalidConfigError(f"{name} has non-finite entries")
            m.setflags(write=False)
            mats[name] = m
            object.__setattr__(self, name, m)
        n_r, n_s = mats["H_RS"].shape
        if mats["H_DS"].shape[1] != n_s:
            raise InvalidConfigError("H_DS and H_RS disagree on N_S")
        if mats["H_DR"].shape != (mats["H_DS"].shape[0], n_r):
            raise InvalidConfigError("H_DR shape must be (N_D, N_R)")
        for name in ("P_S", "P_R"):
            p = float(getattr(self, name))
            if not (np.isfinite(p) and p > 0):
                raise InvalidConfigError(f"{name} must be positive and finite, got {p}")
            object.__setattr__(self, name, p)

    @property
    def n_s(self):
        return self.H_RS.shape[1]

    @property
    def n_r(self):
        return self.H_RS.shape[0]

    @property
    def n_d(self):
        return self.H_DS.shape[0]

    def same_as(self, other):
        """Bitwise equality of all fields."""
        return (
            self.P_S == other.P_S
            and self.P_R == other.P_R
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("H_RS", "H_DS", "H_DR")
            )
        )


@dataclass(frozen=True)
class LineNetworkConfig:
    """Relay placed on the line between source and destination.

    ``d`` is the source-relay distance (source-destination distance is 1).
    """

    d: float
    gamma: float = 4.0
    n_s: int = 2
    n_r: int = 2
    n_d: int = 2
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.d < 1.0):
            raise InvalidConfigError(f"d must lie in (0, 1), got {self.d}")
        if not self.gamma > 0:
            raise InvalidConfigError(f"gamma must be positive, got {self.gamma}")
        for k in ("n_s", "n_r", "n_d"):
            if int(getattr(self, k)) < 1:
                raise InvalidConfigError(f"{k} must be a positive integer")
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidConfigError("seed must be an unsigned 64-bit integer")


def complex_gaussian(rng, shape):
    """Unit-variance circularly symmetric complex Gaussian entries.

    Box-Muller on two uniforms from ``rng.random()``; the pair gives the real
    and imaginary parts, each with variance 1/2. ``rng`` is a
    ``numpy.random.Generator``; only its uniform stream is consumed, so the
    draws are reproducible across platforms.
    """
    count = int(np.prod(shape))
    u = rng.random((count, 2))
    radius = np.sqrt(-np.log1p(-u[:, 0]))  # sqrt(-2 ln(1-u1)) / sqrt(2)
    angle = 2.0 * np.pi * u[:, 1]
    return (radius * np.cos(angle) + 1j * radius * np.sin(angle)).reshape(shape)


def line_network_sample(cfg: LineNetworkConfig, P_S, P_R):
    """Draw one line-network channel, deterministic in ``cfg.seed``.

    Draw order is H_RS, H_DS, H_DR from a PCG64 stream seeded with
    ``cfg.seed``. Each ``H_AB`` is scaled by ``d_AB ** (-gamma / 2)``.
    """
    rng = np.random.Generator(np.random.PCG64(int(cfg.seed)))
    h_rs = complex_gaussian(rng, (cfg.n_r, cfg.n_s))
    h_ds = complex_gaussian(rng, (cfg.n_d, cfg.n_s))
    h_dr = complex_gaussian(rng, (cfg.n_d, cfg.n_r))
    half = -cfg.gamma / 2.0
    return RelayChannel(
        H_RS=cfg.d**half * h_rs,
        H_DS=h_ds,
        H_DR=(1.0 - cfg.d) ** half * h_dr,
        P_S=P_S,
        P_R=P_R,
    )


def gram_matrices(ch: RelayChannel):
    """``(G_DS, G_RS) = (H_DS^H H_DS, H_RS^H H_RS)``."""
    g_ds = ch.H_DS.conj().T @ ch.H_DS
    g_rs = ch.H_RS.conj().T @ ch.H_RS
    return 0.5 * (g_ds + g_ds.conj().T), 0.5 * (g_rs + g_rs.conj().T)


def joint_channel(ch: RelayChannel):
    """``[H_DS, H_DR]``: columns ``:N_S`` are the source block, the rest the relay block."""
    return np.hstack([ch.H_DS, ch.H_DR])


# -- serialization -----------------------------------------------------------


def _encode(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _decode(obj, name, shape):
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceParseError(f"field {name!r}: entries must be [re, im] number pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InstanceParseError(f"field {name!r}: expected rows of [re, im] pairs, got array of shape {arr.shape}")
    if arr.shape[:2] != shape:
        raise InstanceParseError(
            f"field {name!r}: shape {arr.shape[:2]} does not match header dimensions {shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def channel_to_dict(ch: RelayChannel):
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "N_S": ch.n_s,
        "N_R": ch.n_r,
        "N_D": ch.n_d,
        "P_S": ch.P_S,
        "P_R": ch.P_R,
        "H_RS": _encode(ch.H_RS),
        "H_DS": _encode(ch.H_DS),
        "H_DR": _encode(ch.H_DR),
    }


def channel_from_dict(doc):
    if not isinstance(doc, dict):
        raise InstanceParseError("instance document must be a JSON object")
    if doc.get("format", FORMAT_NAME) != FORMAT_NAME:
        raise InstanceParseError(f"field 'format': expected {FORMAT_NAME!r}")
    dims = {}
    for key in ("N_S", "N_R", "N_D"):
        val = doc.get(key)
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise InstanceParseError(f"field {key!r}: expected a positive integer, got {val!r}")
        dims[key] = val
    powers = {}
    for key in ("P_S", "P_R"):
        val = doc.get(key)
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise InstanceParseError(f"field {key!r}: expected a number, got {val!r}")
        powers[key] = float(val)
    shapes = {
        "H_RS": (dims["N_R"], dims["N_S"]),
        "H_DS": (dims["N_D"], dims["N_S"]),
        "H_DR": (dims["N_D"], dims["N_R"]),
    }
    mats = {}
    for key, shape in shapes.items():
        if key not in doc:
            raise InstanceParseError(f"missing field {key!r}")
        mats[key] = _decode(doc[key], key, shape)
    try:
        return RelayChannel(**mats, **powers)
    except InvalidConfigError as exc:
        raise InstanceParseError(str(exc)) from exc


def save_instance(ch: RelayChannel, path):
    """Write ``ch`` as JSON; floats use ``repr`` so the round trip is exact."""
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=1) + "\n")


def load_instance(path):
    """Read an instance file written by :func:`save_instance`."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return channel_from_dict(doc)
    except InstanceParseError as exc:
        raise InstanceParseError(f"{path}: {exc}") from exc
