"""
Layer layouts and fold geometry of a multilayer transmissive surface.

Coordinates are in meters. The user array sits at ``origin`` and the
layers are stacked along +y (boresight, towards the base station). Inside
a layer, columns run along x and rows along z. Each layer folds about a
vertical hinge (parallel to z) through its horizontal center.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FoldConstraintError

LEFT, HINGE, RIGHT = -1, 0, 1
_HALF_NAMES = {LEFT: "left", HINGE: "hinge", RIGHT: "right"}

# slack when comparing angles that went through arithmetic
_ANGLE_ATOL = 1e-12


@dataclass(frozen=True)
class SurfaceSpec:
    """Grid layout of an ``layers``-deep stack of ``rows x cols`` locations.

    ``first_layer_offset`` defaults to ``layer_spacing`` (layer 1 sits one
    spacing in front of the user array).
    """

    layers: int
    rows: int
    cols: int
    element_pitch: float
    layer_spacing: float
    first_layer_offset: float | None = None
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.layers < 1 or self.rows < 1:
            raise ValueError("need at least one layer and one row")
        if self.cols < 2:
            raise ValueError("cols must be >= 2 so both halves are nonempty")
        if not self.element_pitch > 0 or not self.layer_spacing > 0:
            raise ValueError("element_pitch and layer_spacing must be positive")
        if self.first_layer_offset is None:
            object.__setattr__(self, "first_layer_offset", float(self.layer_spacing))
        elif not self.first_layer_offset > 0:
            raise ValueError("first_layer_offset must be positive")

    @property
    def n_grid(self) -> int:
        return self.rows * self.cols

    @property
    def width(self) -> float:
        return flat_width(self)

    def layer_distance(self, layer: int) -> float:
        """Boresight distance of 0-based ``layer`` from the user array."""
        return self.first_layer_offset + layer * self.layer_spacing


@dataclass(frozen=True)
class FoldConfiguration:
    phi_left: float = 0.0
    phi_right: float = 0.0

    def as_tuple(self) -> tuple[float, float]:
        return (self.phi_left, self.phi_right)


FLAT = FoldConfiguration(0.0, 0.0)


@dataclass(frozen=True)
class AngleSet:
    m: int
    phi_max: float
    angles: tuple[float, ...]

    def __contains__(self, phi) -> bool:
        return self.index(phi) is not None

    def index(self, phi):
        for j, a in enumerate(self.angles):
            if abs(a - phi) <= _ANGLE_ATOL:
                return j
        return None

    def configurations(self) -> list[FoldConfiguration]:
        """Every point of the two-angle search space, left angle major."""
        return [FoldConfiguration(a, b) for a in self.angles for b in self.angles]


@dataclass(frozen=True)
class SurfaceGeometry:
    """Element positions after folding.

    positions: (L, N, 3) array; n indexes the grid row-major (n = row*cols + col).
    half: (N,) array of LEFT / HINGE / RIGHT labels shared by all layers.
    """

    spec: SurfaceSpec
    fold: FoldConfiguration
    positions: np.ndarray = field(repr=False)
    half: np.ndarray = field(repr=False)


def max_fold_angle(layer_spacing: float, width: float) -> float:
    """Largest tilt of a half-layer that keeps it clear of its neighbor layers."""
    if not layer_spacing > 0 or not width > 0:
        raise ValueError("layer spacing and layer width must be positive")
    return math.atan(2.0 * layer_spacing / width)


def build_angle_set(m: int, phi_max: float) -> AngleSet:
    if m < 1:
        raise ValueError("angle set needs m >= 1")
    if not phi_max > 0:
        raise ValueError("phi_max must be positive")
    if m == 1:
        return AngleSet(1, phi_max, (0.0,))
    angles = [-phi_max + 2.0 * j * phi_max / (m - 1) for j in range(m)]
    # pin the grid to exact symmetry; float rounding otherwise leaves e.g. 1e-17 at the center
    for j in range(m // 2):
        angles[m - 1 - j] = -angles[j]
    if m % 2:
        angles[m // 2] = 0.0
    return AngleSet(m, phi_max, tuple(angles))


def flat_width(spec: SurfaceSpec) -> float:
    return spec.cols * spec.element_pitch


def angle_set_for(spec: SurfaceSpec, m: int) -> AngleSet:
    return build_angle_set(m, max_fold_angle(spec.layer_spacing, flat_width(spec)))


def half_labels(cols: int, rows: int = 1) -> np.ndarray:
    center = (cols - 1) / 2.0
    col_half = np.where(np.arange(cols) < center, LEFT, np.where(np.arange(cols) > center, RIGHT, HINGE))
    return np.tile(col_half, rows)


def flat_layout(spec: SurfaceSpec) -> np.ndarray:
    """(L, N, 3) positions of the unfolded stack."""
    rr, cc = np.divmod(np.arange(spec.n_grid), spec.cols)
    x = (cc - (spec.cols - 1) / 2.0) * spec.element_pitch
    z = (rr - (spec.rows - 1) / 2.0) * spec.element_pitch
    ox, oy, oz = spec.origin
    pos = np.empty((spec.layers, spec.n_grid, 3))
    for layer in range(spec.layers):
        pos[layer, :, 0] = ox + x
        pos[layer, :, 1] = oy + spec.layer_distance(layer)
        pos[layer, :, 2] = oz + z
    return pos


def check_fold(spec: SurfaceSpec, fold: FoldConfiguration, angles: AngleSet | None = None):
    phi_max = max_fold_angle(spec.layer_spacing, flat_width(spec))
    for name, phi in (("phi_left", fold.phi_left), ("phi_right", fold.phi_right)):
        if not math.isfinite(phi) or abs(phi) > phi_max + _ANGLE_ATOL:
            raise FoldConstraintError(f"{name}={phi!r} exceeds phi_max={phi_max!r}")
        if angles is not None and phi not in angles:
            raise FoldConstraintError(f"{name}={phi!r} is not in the feasible angle set {angles.angles}")


def apply_fold(spec: SurfaceSpec, fold: FoldConfiguration, angles: AngleSet | None = None) -> SurfaceGeometry:
    """Rotate each half-layer rigidly about its hinge, always starting from flat.

    A positive angle moves the outer edge of the half towards the base
    station (+y). The same two angles apply to every layer.
    """
    check_fold(spec, fold, angles)
    pos = flat_layout(spec)
    half = half_labels(spec.cols, spec.rows)
    hinge_x = spec.origin[0]
    for label, phi in ((LEFT, fold.phi_left), (RIGHT, fold.phi_right)):
        if phi == 0.0:
            continue
        sel = half == label
        offset = pos[:, sel, 0] - hinge_x
        pos[:, sel, 0] = hinge_x + offset * math.cos(phi)
        pos[:, sel, 1] += np.abs(offset) * math.sin(phi)
    return SurfaceGeometry(spec, fold, pos, half)


def write_geometry_csv(geom: SurfaceGeometry, path) -> None:
    cols = geom.spec.cols
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["layer", "row", "col", "half", "x", "y", "z"])
        for layer in range(geom.positions.shape[0]):
            for n in range(geom.positions.shape[1]):
                row, col = divmod(n, cols)
                x, y, z = geom.positions[layer, n]
                writer.writerow([layer + 1, row, col, _HALF_NAMES[int(geom.half[n])],
                                 f"{x:.9g}", f"{y:.9g}", f"{z:.9g}"])
