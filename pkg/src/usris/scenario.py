"""Physical scenario: surface stack, end-point arrays and AO settings."""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace

import numpy as np

from .beamforming import BeamformingSolution, CascadeContext, ao_solve
from .channel import ChannelSet, synthesize
from .geometry import FLAT, FoldConfiguration, SurfaceGeometry, SurfaceSpec, apply_fold


@dataclass(frozen=True)
class AOParams:
    tol: float = 1e-8
    max_iters: int = 200
    # reduced budget used for every candidate inside the topology search
    search_tol: float = 1e-6
    search_max_iters: int = 60


class Scenario:
    """Evaluates AO solutions for (topology, fold) pairs on fixed physics.

    Channel sets are cached per fold configuration; the cache is safe to
    share between worker threads.
    """

    def __init__(self, spec: SurfaceSpec, user_positions, bs_positions, wavelength: float,
                 alpha: float, noise_power: float, p_max: float, ao: AOParams = AOParams()):
        self.spec = spec
        self.user_positions = np.atleast_2d(np.asarray(user_positions, float))
        self.bs_positions = np.atleast_2d(np.asarray(bs_positions, float))
        self.wavelength = float(wavelength)
        self.alpha = float(alpha)
        self.noise_power = float(noise_power)
        self.p_max = float(p_max)
        self.ao = ao
        self._channels = {}
        self._lock = threading.Lock()

    def with_power(self, p_max: float) -> "Scenario":
        other = Scenario(self.spec, self.user_positions, self.bs_positions, self.wavelength,
                         self.alpha, self.noise_power, p_max, self.ao)
        other._channels = self._channels  # channels do not depend on power
        return other

    def with_ao(self, **changes) -> "Scenario":
        other = self.with_power(self.p_max)
        other.ao = replace(self.ao, **changes)
        return other

    @property
    def n_grid(self) -> int:
        return self.spec.n_grid

    @property
    def layers(self) -> int:
        return self.spec.layers

    def geometry(self, fold: FoldConfiguration = FLAT) -> SurfaceGeometry:
        return apply_fold(self.spec, fold)

    def channels(self, fold: FoldConfiguration = FLAT) -> ChannelSet:
        key = fold.as_tuple()
        with self._lock:
            cached = self._channels.get(key)
        if cached is None:
            cached = synthesize(self.user_positions, self.geometry(fold), self.bs_positions, self.wavelength)
            with self._lock:
                cached = self._channels.setdefault(key, cached)
        return cached

    def context(self, z, fold: FoldConfiguration = FLAT) -> CascadeContext:
        z = np.asarray(getattr(z, "z", z), dtype=float)
        return CascadeContext(self.channels(fold), z, self.alpha)

    def solve(self, z, fold: FoldConfiguration = FLAT, precise: bool = True, **kw) -> BeamformingSolution:
        if precise:
            tol, iters = self.ao.tol, self.ao.max_iters
        else:
            tol, iters = self.ao.search_tol, self.ao.search_max_iters
        return ao_solve(self.context(z, fold), self.noise_power, self.p_max, tol=tol, max_iters=iters, **kw)
