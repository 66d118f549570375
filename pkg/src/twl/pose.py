"""Device pose, derived channel geometry, and the location-to-channel Jacobian.

The anchor sits at the origin of the global frame with zero orientation. A
terminal pose is a position plus two rotation angles: first about the global
z-axis (zeta0), then about the rotated x-axis (chi0). The rotation matrix
maps terminal-local coordinates to global coordinates.

Channel parameters are ordered (theta1, phi1, theta2, phi2, tau) where pair 1
belongs to the device initiating an exchange and pair 2 to the responder. By
default the initiator is the anchor, so pair 1 holds the anchor-frame angles
of the link and pair 2 the terminal-local angles.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import SPEED_OF_LIGHT


class DegenerateGeometryError(ValueError):
    """Pose at an angle-coordinate singularity (link along a frame z-axis)."""


@dataclass(frozen=True)
class Pose:
    """Terminal position (meters, global frame) and orientation angles (rad)."""

    position: np.ndarray
    zeta0: float = 0.0
    chi0: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(p)):
            raise ValueError("position must be finite")
        if np.linalg.norm(p) == 0.0:
            raise ValueError("position must not coincide with the anchor")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class ChannelGeometry:
    """Channel parameters of one link: angles, delay, gain, phase, clock bias.

    Angles are in radians, tau and bias in seconds, beta is the dimensionless
    path-gain amplitude. theta in [0, pi], phi in (-pi, pi].
    """

    theta1: float
    phi1: float
    theta2: float
    phi2: float
    tau: float
    beta: float
    psi: float = 0.0
    bias: float = 0.0


@dataclass(frozen=True)
class LocationJacobian:
    """Partials of channel parameters w.r.t. location parameters.

    Rows are ordered (zeta0, chi0, px, py, pz); the ``angles`` block has one
    column per link angle (theta1, phi1, theta2, phi2) and ``delay`` holds the
    tau column. The orientation rows of ``delay`` and of the pair-1 angle
    columns are exactly zero.
    """

    angles: np.ndarray  # (5, 4)
    delay: np.ndarray  # (5,)

    @property
    def full(self) -> np.ndarray:
        """5x5 matrix [angles | delay]."""
        return np.hstack([self.angles, self.delay[:, None]])


def rotation_matrix(zeta0: float, chi0: float) -> np.ndarray:
    """Local-to-global rotation: z-rotation by zeta0 then x'-rotation by chi0."""
    cz, sz = np.cos(zeta0), np.sin(zeta0)
    cx, sx = np.cos(chi0), np.sin(chi0)
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    return rz @ rx


def _rotation_partials(zeta0: float, chi0: float):
    """Partials of rotation_matrix w.r.t. zeta0 and chi0."""
    cz, sz = np.cos(zeta0), np.sin(zeta0)
    cx, sx = np.cos(chi0), np.sin(chi0)
    drz = np.array([[-sz, -cz, 0.0], [cz, -sz, 0.0], [0.0, 0.0, 0.0]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    drx = np.array([[0.0, 0.0, 0.0], [0.0, -sx, -cx], [0.0, cx, -sx]])
    return drz @ rx, rz @ drx


def _spherical_batch(v: np.ndarray, sin_floor: float = 1e-12):
    """Polar/azimuth angles of unit vectors, batched over the leading axis.

    Returns (theta, phi, sin_theta). Raises on polar singularities.
    """
    vz = np.clip(v[..., 2], -1.0, 1.0)
    theta = np.arccos(vz)
    sin_theta = np.sqrt(np.maximum(1.0 - vz * vz, 0.0))
    if np.any(sin_theta < sin_floor):
        raise DegenerateGeometryError(
            "link direction aligned with a frame z-axis; azimuth undefined"
        )
    phi = np.arctan2(v[..., 1], v[..., 0])
    return theta, phi, sin_theta


def _link_angles_batch(positions: np.ndarray, rot: np.ndarray):
    """Anchor-frame and terminal-local link angles for a batch of positions.

    Args:
        positions: (n, 3) terminal positions.
        rot: 3x3 local-to-global rotation of the terminal.

    Returns:
        dict with r, u (unit anchor->terminal), q (unit terminal->anchor in
        the local frame), theta1/phi1/sin1, theta2/phi2/sin2.
    """
    r = np.linalg.norm(positions, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("position must not coincide with the anchor")
    u = positions / r[..., None]
    theta1, phi1, sin1 = _spherical_batch(u)
    q = -(u @ rot)  # rows are rot^T @ (-u)
    theta2, phi2, sin2 = _spherical_batch(q)
    return {
        "r": r, "u": u, "q": q,
        "theta1": theta1, "phi1": phi1, "sin1": sin1,
        "theta2": theta2, "phi2": phi2, "sin2": sin2,
    }


def channel_geometry(
    ue: Pose,
    wavelength: float,
    c: float = SPEED_OF_LIGHT,
    bias: float = 0.0,
    psi: float = 0.0,
    initiator: str = "bs",
) -> ChannelGeometry:
    """Channel parameters implied by a terminal pose.

    Pair-1 angles are the anchor-frame direction of the terminal, pair-2 the
    terminal-local direction back to the anchor; ``initiator="ue"`` swaps the
    pairs. tau is range over c and beta the free-space amplitude
    wavelength / (4 pi range).
    """
    if initiator not in ("bs", "ue"):
        raise ValueError(f"initiator must be 'bs' or 'ue', got {initiator!r}")
    rot = rotation_matrix(ue.zeta0, ue.chi0)
    g = _link_angles_batch(ue.position[None, :], rot)
    pairs = (g["theta1"][0], g["phi1"][0], g["theta2"][0], g["phi2"][0])
    if initiator == "ue":
        pairs = pairs[2:] + pairs[:2]
    r = g["r"][0]
    return ChannelGeometry(
        theta1=pairs[0], phi1=pairs[1], theta2=pairs[2], phi2=pairs[3],
        tau=r / c, beta=wavelength / (4.0 * np.pi * r), psi=psi, bias=bias,
    )


def _jacobian_batch(positions: np.ndarray, zeta0: float, chi0: float,
                    c: float = SPEED_OF_LIGHT) -> np.ndarray:
    """Location-to-channel Jacobians for a batch of positions, shape (n, 5, 5).

    Rows (zeta0, chi0, px, py, pz); columns (theta1, phi1, theta2, phi2, tau).
    All partials are exact derivatives of the channel-geometry map.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    rot = rotation_matrix(zeta0, chi0)
    drot_dz, drot_dx = _rotation_partials(zeta0, chi0)
    g = _link_angles_batch(positions, rot)
    r, u, q = g["r"], g["u"], g["q"]
    sin1, sin2 = g["sin1"], g["sin2"]
    n = positions.shape[0]

    jac = np.zeros((n, 5, 5))

    # Anchor-side angles depend on position only.
    ez = np.array([0.0, 0.0, 1.0])
    jac[:, 2:, 0] = (u * u[:, 2:3] - ez) / (r * sin1)[:, None]
    jac[:, 2:, 1] = np.stack([-u[:, 1], u[:, 0], np.zeros(n)], axis=-1) / (
        r * sin1**2
    )[:, None]

    # Terminal-local angles: q = rot^T @ (-u).
    rx, ry, rz = rot[:, 0], rot[:, 1], rot[:, 2]
    # d(theta2)/dp = (rz + u * q_z) / (r * sin2)
    jac[:, 2:, 2] = (rz[None, :] + u * q[:, 2:3]) / (r * sin2)[:, None]
    # d(phi2)/dp = (q_y * rx - q_x * ry) / (r * sin2^2)
    jac[:, 2:, 3] = (q[:, 1:2] * rx[None, :] - q[:, 0:1] * ry[None, :]) / (
        r * sin2**2
    )[:, None]

    # Orientation partials enter through the rotation only.
    for row, drot in ((0, drot_dz), (1, drot_dx)):
        dq = -(u @ drot)  # rows are drot^T @ (-u)
        jac[:, row, 2] = -dq[:, 2] / sin2
        jac[:, row, 3] = (q[:, 0] * dq[:, 1] - q[:, 1] * dq[:, 0]) / sin2**2

    # Delay column: tau = r / c.
    jac[:, 2:, 4] = u / c
    return jac


def location_jacobian(
    ue: Pose, c: float = SPEED_OF_LIGHT, initiator: str = "bs"
) -> LocationJacobian:
    """Exact Jacobian of the channel-geometry map at a pose.

    ``initiator="ue"`` reorders the angle columns so pair 1 is the
    terminal-local pair; the delay column is role-independent.
    """
    if initiator not in ("bs", "ue"):
        raise ValueError(f"initiator must be 'bs' or 'ue', got {initiator!r}")
    jac = _jacobian_batch(ue.position[None, :], ue.zeta0, ue.chi0, c)[0]
    angles = jac[:, :4]
    if initiator == "ue":
        angles = angles[:, [2, 3, 0, 1]]
    return LocationJacobian(angles=angles, delay=jac[:, 4].copy())
