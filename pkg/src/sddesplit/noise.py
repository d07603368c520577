"""Reproducible Brownian increment lattices.

Every stochastic quantity in this package is derived from a fine lattice
of Gaussian increments for two independent Brownian motions B1 and B2.
Increments, not path values, are the stored primitive: coarser meshes are
obtained by summing blocks of fine increments, and correlated drivers are
obtained by a Cholesky-style linear transform.  Each (master seed,
trajectory index, channel) triple addresses its own counter-based
generator stream, so ensembles may be generated in any order, or in
parallel, with bit-identical results.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_UINT64_MAX = 2**64 - 1
_DUMP_MAGIC = b"BLAT"  # lattice dump header tag
_DUMP_VERSION = 1


class Channel(enum.Enum):
    """Identifies one of the two independent driving Brownian motions."""

    B1 = 0
    B2 = 1


@dataclass(frozen=True)
class StreamKey:
    """Addresses one reproducible Gaussian increment stream.

    Parameters
    ----------
    master_seed : int
        Unsigned 64-bit seed shared by a whole experiment.
    trajectory_index : int
        Non-negative index of the trajectory within the ensemble.
    channel : Channel
        Which of the two independent Brownian motions the stream feeds.
    """

    master_seed: int
    trajectory_index: int
    channel: Channel

    def __post_init__(self):
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed <= _UINT64_MAX:
            raise ParameterError("master_seed must be an unsigned 64-bit integer")
        if not isinstance(self.trajectory_index, int) or not 0 <= self.trajectory_index < 2**63:
            raise ParameterError("trajectory_index must be a non-negative integer below 2**63")
        if not isinstance(self.channel, Channel):
            raise ParameterError("channel must be a Channel member")

    def generator(self) -> np.random.Generator:
        """Return a counter-based generator owned by this key alone."""
        # Philox keys are 128 bits: seed in the high word, trajectory and
        # channel packed into the low word.  Distinct keys give
        # statistically independent streams.
        low = (self.trajectory_index << 1) | self.channel.value
        key = np.array([self.master_seed, low], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _frozen(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BrownianLattice:
    """Increments of the two independent Brownian motions on a uniform mesh.

    ``dB1[i]`` and ``dB2[i]`` are the increments over
    ``[i * dt_fine, (i + 1) * dt_fine]``.  Arrays are read-only.
    """

    dt_fine: float
    n_steps: int
    dB1: np.ndarray
    dB2: np.ndarray

    def __post_init__(self):
        if self.dt_fine <= 0.0:
            raise ParameterError("dt_fine must be positive")
        if self.n_steps < 1:
            raise ParameterError("n_steps must be at least 1")
        object.__setattr__(self, "dB1", _frozen(self.dB1))
        object.__setattr__(self, "dB2", _frozen(self.dB2))
        if self.dB1.shape != (self.n_steps,) or self.dB2.shape != (self.n_steps,):
            raise ParameterError("increment arrays must have shape (n_steps,)")

    @property
    def span(self) -> float:
        """Total time covered by the lattice."""
        return self.n_steps * self.dt_fine


@dataclass(frozen=True)
class CorrelatedIncrements:
    """Increments of the correlated driver pair (W1, W2) on one mesh."""

    dt_fine: float
    n_steps: int
    rho: float
    dW1: np.ndarray
    dW2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dW1", _frozen(self.dW1))
        object.__setattr__(self, "dW2", _frozen(self.dW2))


def channel_increments(key: StreamKey, n_steps: int, dt_fine: float) -> np.ndarray:
    """Draw the increment sequence addressed by ``key``.

    Returns ``n_steps`` independent N(0, dt_fine) samples.  Identical keys
    reproduce identical sequences bit for bit.
    """
    if n_steps < 1:
        raise ParameterError("n_steps must be at least 1")
    if dt_fine <= 0.0:
        raise ParameterError("dt_fine must be positive")
    rng = key.generator()
    return rng.standard_normal(n_steps) * np.sqrt(dt_fine)


def generate_lattice(master_seed: int, trajectory_index: int, n_steps: int,
                     dt_fine: float) -> BrownianLattice:
    """Generate the fine lattice for one trajectory.

    Parameters
    ----------
    master_seed : int
        Experiment-wide unsigned 64-bit seed.
    trajectory_index : int
        Index of the trajectory; distinct indices give independent paths.
    n_steps : int
        Number of fine increments.
    dt_fine : float
        Fine mesh width.
    """
    dB1 = channel_increments(StreamKey(master_seed, trajectory_index, Channel.B1),
                             n_steps, dt_fine)
    dB2 = channel_increments(StreamKey(master_seed, trajectory_index, Channel.B2),
                             n_steps, dt_fine)
    return BrownianLattice(dt_fine=dt_fine, n_steps=n_steps, dB1=dB1, dB2=dB2)


def correlate(lattice: BrownianLattice, rho: float) -> CorrelatedIncrements:
    """Build correlated driver increments from independent ones.

    The pair ``(W1, W2)`` has per-step covariance ``rho * dt_fine`` and is
    obtained by the lower-triangular transform

        dW1 = sqrt(1 - rho**2) * dB1 + rho * dB2
        dW2 = dB2

    which leaves each marginal an N(0, dt_fine) increment sequence.
    """
    if not -1.0 < rho < 1.0:
        raise ParameterError("rho must lie in the open interval (-1, 1)")
    dW1 = np.sqrt(1.0 - rho * rho) * lattice.dB1 + rho * lattice.dB2
    return CorrelatedIncrements(dt_fine=lattice.dt_fine, n_steps=lattice.n_steps,
                                rho=rho, dW1=dW1, dW2=lattice.dB2)


def coarsen(lattice: BrownianLattice, factor: int) -> BrownianLattice:
    """Sum blocks of ``factor`` fine increments into a coarser lattice.

    ``factor`` must divide ``lattice.n_steps`` exactly; the result covers
    the same time span on a mesh of width ``factor * dt_fine``.
    """
    if not isinstance(factor, int) or factor < 1:
        raise ParameterError("coarsening factor must be a positive integer")
    if lattice.n_steps % factor != 0:
        raise ParameterError(
            f"coarsening factor {factor} does not divide n_steps={lattice.n_steps}")
    if factor == 1:
        return lattice
    n_coarse = lattice.n_steps // factor
    dB1 = lattice.dB1.reshape(n_coarse, factor).sum(axis=1)
    dB2 = lattice.dB2.reshape(n_coarse, factor).sum(axis=1)
    return BrownianLattice(dt_fine=lattice.dt_fine * factor, n_steps=n_coarse,
                           dB1=dB1, dB2=dB2)


def dump_lattice(lattice: BrownianLattice, path, *, seed: int = 0) -> None:
    """Write a lattice to ``path`` as little-endian binary.

    Layout: magic, format version, seed and n_steps as unsigned 64-bit
    fields, dt_fine as a 64-bit float, then the dB1 array followed by the
    dB2 array as raw 64-bit floats.  Intended for debugging dumps; nothing
    else in the package reads this format.
    """
    header = _DUMP_MAGIC + struct.pack("<IQQd", _DUMP_VERSION, seed,
                                       lattice.n_steps, lattice.dt_fine)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(lattice.dB1.astype("<f8").tobytes())
        fh.write(lattice.dB2.astype("<f8").tobytes())


def load_lattice(path) -> tuple[BrownianLattice, int]:
    """Read a lattice written by :func:`dump_lattice`.

    Returns the lattice and the seed recorded in the header.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _DUMP_MAGIC:
            raise ParameterError(f"not a lattice dump: bad magic {magic!r}")
        version, seed, n_steps, dt_fine = struct.unpack("<IQQd", fh.read(28))
        if version != _DUMP_VERSION:
            raise ParameterError(f"unsupported lattice dump version {version}")
        body = np.frombuffer(fh.read(), dtype="<f8")
    if body.size != 2 * n_steps:
        raise ParameterError("lattice dump truncated")
    lattice = BrownianLattice(dt_fine=dt_fine, n_steps=int(n_steps),
                              dB1=body[:n_steps], dB2=body[n_steps:])
    return lattice, seed
