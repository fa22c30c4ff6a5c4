"""
Free-space spherical-wave line-of-sight channels between the user array,
every surface layer and the base-station array.

Every link entry is lambda / (4 pi d) * exp(-j 2 pi d / lambda). Elements
are isotropic and the penetration loss is *not* included here (it is
applied per layer inside the cascade).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SingularityError
from .geometry import SurfaceGeometry

SPEED_OF_LIGHT = 299_792_458.0


def wavelength(frequency: float) -> float:
    if not frequency > 0:
        raise ValueError("frequency must be positive")
    return SPEED_OF_LIGHT / frequency


def los_entry(tx, rx, lam: float) -> complex:
    d = float(np.linalg.norm(np.asarray(rx, float) - np.asarray(tx, float)))
    if d == 0.0:
        raise SingularityError("transmitter and receiver coincide")
    return lam / (4 * np.pi * d) * np.exp(-2j * np.pi * d / lam)


def los_matrix(tx: np.ndarray, rx: np.ndarray, lam: float) -> np.ndarray:
    """(len(rx), len(tx)) matrix of LoS gains; entry [i, j] is tx j -> rx i."""
    tx = np.atleast_2d(np.asarray(tx, float))
    rx = np.atleast_2d(np.asarray(rx, float))
    d = np.sqrt(((rx[:, None, :] - tx[None, :, :]) ** 2).sum(axis=-1))
    if np.any(d == 0.0):
        i, j = np.argwhere(d == 0.0)[0]
        raise SingularityError(f"rx {i} coincides with tx {j}")
    return lam / (4 * np.pi * d) * np.exp(-2j * np.pi * d / lam)


def ula_positions(count: int, center, spacing: float, axis=(1.0, 0.0, 0.0)) -> np.ndarray:
    """Uniform linear array of ``count`` antennas centered at ``center``."""
    offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
    return np.asarray(center, float)[None, :] + offsets[:, None] * np.asarray(axis, float)[None, :]


@dataclass(frozen=True)
class ChannelSet:
    """h[0] is N x K (user -> layer 1), h[l] is N x N (layer l -> layer l+1), g is N x M."""

    h: tuple
    g: np.ndarray

    @property
    def layers(self) -> int:
        return len(self.h)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def k(self) -> int:
        return self.h[0].shape[1]

    @property
    def m(self) -> int:
        return self.g.shape[1]


def synthesize(user_pos, geom: SurfaceGeometry | np.ndarray, bs_pos, lam: float) -> ChannelSet:
    """Build all per-hop channel matrices from endpoint positions.

    ``geom`` is either a SurfaceGeometry or a raw (L, N, 3) position array.
    """
    pos = geom.positions if isinstance(geom, SurfaceGeometry) else np.asarray(geom, float)
    user_pos = np.atleast_2d(np.asarray(user_pos, float))
    bs_pos = np.atleast_2d(np.asarray(bs_pos, float))
    if len(user_pos) == 0 or len(bs_pos) == 0 or pos.shape[0] == 0 or pos.shape[1] == 0:
        raise ValueError("all endpoint sets must be nonempty")
    h = [los_matrix(user_pos, pos[0], lam)]
    for layer in range(1, pos.shape[0]):
        h.append(los_matrix(pos[layer - 1], pos[layer], lam))
    g = los_matrix(bs_pos, pos[-1], lam)
    return ChannelSet(tuple(h), g)


def write_matrix(matrix: np.ndarray, path) -> None:
    """Text dump: header "rows cols", then one "re im" pair per entry, row-major."""
    matrix = np.atleast_2d(matrix)
    with open(path, "w") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for value in matrix.ravel():
            fh.write(f"{value.real:.17g} {value.imag:.17g}\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        rows, cols = (int(t) for t in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (rows * cols, 2):
        raise ValueError(f"{path}: expected {rows * cols} entries, found {data.shape[0]}")
    return (data[:, 0] + 1j * data[:, 1]).reshape(rows, cols)


def write_channels(channels: ChannelSet, directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for layer, h in enumerate(channels.h, start=1):
        path = directory / f"h{layer}.txt"
        write_matrix(h, path)
        written.append(path)
    path = directory / "g.txt"
    write_matrix(channels.g, path)
    written.append(path)
    return written
