"""Array manifolds: element layouts, wavenumber vectors, steering vectors.

Conventions: theta is the polar angle measured from +z, phi the azimuth
measured from +x. Steering vectors are unit norm, with each element
contributing a phase of minus the projection of its coordinate onto the
wavenumber vector.
"""

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0
"""Vacuum speed of light in m/s."""

_PLANE_AXES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna array layout.

    Attributes:
        elements: 3xN element coordinates in meters (one column per element).
        wavelength: carrier wavelength in meters.
    """

    elements: np.ndarray
    wavelength: float

    def __post_init__(self):
        elements = np.ascontiguousarray(self.elements, dtype=np.float64)
        if elements.ndim != 2 or elements.shape[0] != 3 or elements.shape[1] < 1:
            raise ValueError("elements must be a 3xN matrix with N >= 1")
        if not np.all(np.isfinite(elements)):
            raise ValueError("element coordinates must be finite")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength!r}")
        object.__setattr__(self, "elements", elements)

    @property
    def n_elements(self) -> int:
        return self.elements.shape[1]


@dataclass(frozen=True)
class SteeringBundle:
    """Steering vector of an array together with its analytic angle partials.

    Attributes:
        a: unit-norm complex array response, shape (N,).
        da_dtheta: elementwise partial of ``a`` w.r.t. the polar angle.
        da_dphi: elementwise partial of ``a`` w.r.t. the azimuth angle.
    """

    a: np.ndarray
    da_dtheta: np.ndarray
    da_dphi: np.ndarray


def make_ura(
    rows: int,
    cols: int,
    wavelength: float,
    spacing: float | None = None,
    plane: str = "xz",
    center: np.ndarray | tuple = (0.0, 0.0, 0.0),
) -> ArrayGeometry:
    """Build a uniform rectangular array on a coordinate plane.

    Args:
        rows: grid size along the first plane axis (>= 1).
        cols: grid size along the second plane axis (>= 1).
        wavelength: carrier wavelength in meters.
        spacing: element pitch in meters; defaults to half a wavelength.
        plane: one of "xy", "xz", "yz".
        center: centroid of the grid.

    Returns:
        ArrayGeometry with rows*cols elements, centroid at ``center``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if spacing is None:
        spacing = wavelength / 2.0
    if not spacing > 0:
        raise ValueError(f"element spacing must be positive, got {spacing!r}")
    try:
        ax0, ax1 = _PLANE_AXES[plane]
    except KeyError:
        raise ValueError(f"plane must be one of {sorted(_PLANE_AXES)}, got {plane!r}")

    i = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    j = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    gi, gj = np.meshgrid(i, j, indexing="ij")
    elements = np.zeros((3, rows * cols))
    elements[ax0] = gi.ravel()
    elements[ax1] = gj.ravel()
    elements += np.asarray(center, dtype=float).reshape(3, 1)
    return ArrayGeometry(elements=elements, wavelength=wavelength)


def wavenumber(theta: float, phi: float, wavelength: float) -> np.ndarray:
    """Wavenumber vector (rad/m) of a plane wave from direction (theta, phi)."""
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength!r}")
    k0 = 2.0 * np.pi / wavelength
    st = np.sin(theta)
    return k0 * np.array([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta)])


def _wavenumber_partials(theta: float, phi: float, wavelength: float):
    """Partials of the wavenumber vector w.r.t. theta and phi."""
    k0 = 2.0 * np.pi / wavelength
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    dk_dtheta = k0 * np.array([cp * ct, sp * ct, -st])
    dk_dphi = k0 * np.array([-sp * st, cp * st, 0.0])
    return dk_dtheta, dk_dphi


def steering(geom: ArrayGeometry, theta: float, phi: float) -> SteeringBundle:
    """Array response vector and its exact angle partials.

    The response is ``exp(-j * elements^T k) / sqrt(N)`` so that its 2-norm
    is exactly 1; the partials follow by differentiating the phase.
    """
    n = geom.n_elements
    k = wavenumber(theta, phi, geom.wavelength)
    dk_dtheta, dk_dphi = _wavenumber_partials(theta, phi, geom.wavelength)
    phase = geom.elements.T @ k
    a = np.exp(-1j * phase) / np.sqrt(n)
    da_dtheta = -1j * (geom.elements.T @ dk_dtheta) * a
    da_dphi = -1j * (geom.elements.T @ dk_dphi) * a
    return SteeringBundle(a=a, da_dtheta=da_dtheta, da_dphi=da_dphi)
