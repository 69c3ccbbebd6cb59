"""Station geometry, array response, propagation delays and search grids.

Positions are 2-D coordinates in kilometres. The conversion to metres
happens once, inside :func:`propagation_delays`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, InvalidArgument

SPEED_OF_LIGHT = 3e8
CARRIER_WAVELENGTH = 0.3  # 1 GHz carrier
SAMPLING_PERIOD = 1e-5  # 100 kHz complex baseband, critically sampled


def as_position(p):
    """Coerce ``p`` to a finite float array of shape (2,)."""
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise InvalidArgument(f"position must have 2 coordinates, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidArgument(f"position has non-finite coordinates: {p}")
    return p


def as_points(points):
    """Coerce to an (G, 2) float array; a single position becomes G = 1."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    if points.ndim != 2 or points.shape[1] != 2:
        raise InvalidArgument(f"points must have shape (G, 2), got {points.shape}")
    if not np.all(np.isfinite(points)):
        raise InvalidArgument("points contain non-finite coordinates")
    return points


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StationGeometry:
    """One base station carrying an M-element uniform linear array.

    ``array_axis`` is the unit vector along which the elements are laid out;
    broadside is perpendicular to it.
    """

    location: np.ndarray
    array_axis: np.ndarray
    num_elements: int = 4
    element_spacing: float = CARRIER_WAVELENGTH / 2
    carrier_wavelength: float = CARRIER_WAVELENGTH

    def __post_init__(self):
        object.__setattr__(self, "location", _frozen(as_position(self.location)))
        axis = np.asarray(self.array_axis, dtype=float)
        if axis.shape != (2,) or abs(np.hypot(*axis) - 1.0) > 1e-12:
            raise InvalidArgument(f"array_axis must be a unit 2-vector, got {axis}")
        object.__setattr__(self, "array_axis", _frozen(axis))
        if int(self.num_elements) != self.num_elements or self.num_elements < 1:
            raise InvalidArgument(f"num_elements must be a positive integer, got {self.num_elements}")
        object.__setattr__(self, "num_elements", int(self.num_elements))
        if not self.carrier_wavelength > 0:
            raise InvalidArgument("carrier_wavelength must be positive")
        if not 0 < self.element_spacing <= self.carrier_wavelength / 2 * (1 + 1e-12):
            raise InvalidArgument(
                "element_spacing must lie in (0, wavelength/2] to avoid spatial aliasing"
            )

    @classmethod
    def facing(cls, location, target=(0.0, 0.0), **kwargs):
        """Station whose broadside points at ``target`` (the scene origin by default).

        The array axis is the station-to-target direction rotated by +90 degrees.
        """
        location = as_position(location)
        d = as_position(target) - location
        norm = np.hypot(*d)
        if norm == 0:
            raise DegenerateGeometry("station located at its own broadside target")
        d = d / norm
        return cls(location, np.array([-d[1], d[0]]), **kwargs)


@dataclass(frozen=True)
class Scene:
    stations: tuple
    propagation_speed: float = SPEED_OF_LIGHT
    sampling_period: float = SAMPLING_PERIOD

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        if len(self.stations) < 1:
            raise InvalidArgument("a scene needs at least one station")
        if not self.propagation_speed > 0 or not self.sampling_period > 0:
            raise InvalidArgument("propagation_speed and sampling_period must be positive")

    @property
    def num_stations(self):
        return len(self.stations)

    @property
    def locations(self):
        return np.array([g.location for g in self.stations])

    def translated(self, offset):
        """Rigidly shift every station; array orientations are unchanged."""
        offset = as_position(offset)
        stations = [
            StationGeometry(g.location + offset, g.array_axis, g.num_elements,
                            g.element_spacing, g.carrier_wavelength)
            for g in self.stations
        ]
        return Scene(stations, self.propagation_speed, self.sampling_period)


def square_scene(half_side_km=2.5, num_elements=4, **kwargs):
    """Four stations on the corners of a square centred at the origin, facing inward."""
    h = half_side_km
    corners = [(h, h), (-h, h), (-h, -h), (h, -h)]
    return Scene([StationGeometry.facing(c, num_elements=num_elements) for c in corners], **kwargs)


def _unit_directions(g, points):
    diff = points - g.location
    dist = np.hypot(diff[:, 0], diff[:, 1])
    if np.any(dist == 0):
        bad = points[np.argmax(dist == 0)]
        raise DegenerateGeometry(f"position {tuple(bad)} coincides with a station")
    return diff / dist[:, None]


def steering_vectors(g, points):
    """Far-field array response for many positions, shape (G, M).

    ``a_m = M**-0.5 * exp(-2j*pi*m*(d/lambda)*sin(theta))`` for m = 0..M-1,
    where ``sin(theta)`` is the projection of the unit direction from the
    station to the position onto the array axis.
    """
    points = as_points(points)
    sin_theta = _unit_directions(g, points) @ g.array_axis
    m = np.arange(g.num_elements)
    phase = -2j * np.pi * (g.element_spacing / g.carrier_wavelength) * np.outer(sin_theta, m)
    return np.exp(phase) / np.sqrt(g.num_elements)


def steering_vector(g, p):
    return steering_vectors(g, as_position(p)[None, :])[0]


def propagation_delays(g, points, propagation_speed=SPEED_OF_LIGHT):
    """Delay in seconds from each position (km) to the station."""
    points = as_points(points)
    diff = points - g.location
    return np.hypot(diff[:, 0], diff[:, 1]) * 1000.0 / propagation_speed


def propagation_delay(g, p, propagation_speed=SPEED_OF_LIGHT):
    return float(propagation_delays(g, as_position(p)[None, :], propagation_speed)[0])


def _check_index(scene, i):
    if not (isinstance(i, (int, np.integer)) and 0 <= i < scene.num_stations):
        raise InvalidArgument(f"station index {i} out of range for {scene.num_stations} stations")


def delay_differences(scene, i, j, points):
    """``tau_i(p) - tau_j(p)`` for each position, in seconds (0-based indices)."""
    _check_index(scene, i)
    _check_index(scene, j)
    c = scene.propagation_speed
    ti = propagation_delays(scene.stations[i], points, c)
    if i == j:
        return np.zeros_like(ti)
    return ti - propagation_delays(scene.stations[j], points, c)


def delay_difference(scene, i, j, p):
    return float(delay_differences(scene, i, j, as_position(p)[None, :])[0])


@dataclass(frozen=True)
class SearchGrid:
    """Rectangular grid of candidate positions, endpoints inclusive.

    With ``nx == 1`` (or ``ny == 1``) the single coordinate is ``x_min``.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        for v in (self.x_min, self.x_max, self.y_min, self.y_max):
            if not np.isfinite(v):
                raise InvalidArgument("grid bounds must be finite")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidArgument("grid bounds must satisfy min < max")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise InvalidArgument("nx and ny must be positive integers")

    @property
    def xs(self):
        return np.linspace(self.x_min, self.x_max, int(self.nx))

    @property
    def ys(self):
        return np.linspace(self.y_min, self.y_max, int(self.ny))

    @property
    def spacing(self):
        dx = (self.x_max - self.x_min) / (self.nx - 1) if self.nx > 1 else 0.0
        dy = (self.y_max - self.y_min) / (self.ny - 1) if self.ny > 1 else 0.0
        return dx, dy

    @property
    def size(self):
        return int(self.nx) * int(self.ny)


def grid_points(grid):
    """All grid positions as a (ny*nx, 2) array, row-major (x varies fastest)."""
    X, Y = np.meshgrid(grid.xs, grid.ys)
    return np.column_stack([X.ravel(), Y.ravel()])
