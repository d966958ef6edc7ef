"""
Magnetostatic field of uniformly magnetized rectangular prisms

Each face carries a surface charge sigma = M (m . n). A charged rectangle has
a closed-form field: the normal component sums arctan(u v / (w R)) over the
four corners and the in-plane components sum -ln(v + R) and -ln(u + R), where
(u, v, w) is the field point relative to the corner and R its distance.
Lengths are in um, magnetization in A/m and fields in G.
"""
import logging
from typing import Iterable, Tuple

import numpy as np

from sicmag.core.exceptions import DomainError, InvalidInputError
from sicmag.schemas.magnet import FlakeGeometry
from sicmag.schemas.sensor import FieldVector

logger = logging.getLogger(__name__)

# B[G] = 1e4 * mu0 * H[A/m] and H = sigma/(4 pi) * kernel, so B[G] = 1e-3 * sigma * kernel
_GAUSS_PER_CHARGE = 1e-3
ON_SURFACE_FLAG = "on_surface"
_REL_SURFACE_TOL = 1e-12


def _log_v_plus_r(v: float, rho2: float, r: float) -> float:
    """ln(v + R) with R = sqrt(rho2 + v^2), stable for v < 0"""
    if v >= 0:
        return np.log(v + r)
    return np.log(rho2) - np.log(r - v)


def _rectangle_kernel(
    point: np.ndarray,
    normal_axis: int,
    plane_coordinate: float,
    lower: np.ndarray,
    upper: np.ndarray,
    floor: float,
) -> np.ndarray:
    """
    Geometric factor of a unit-charge rectangle: H = sigma/(4 pi) * kernel

    The rectangle lies in the plane x[normal_axis] = plane_coordinate and spans
    [lower, upper] along the two remaining axes. A field point in the plane of
    the rectangle gets zero normal contribution, the mean of the two one-sided
    limits.
    """
    i, j = [axis for axis in range(3) if axis != normal_axis]
    w = point[normal_axis] - plane_coordinate
    kernel = np.zeros(3)
    corners = (
        (point[i] - lower[i], point[j] - lower[j], 1.0),
        (point[i] - lower[i], point[j] - upper[j], -1.0),
        (point[i] - upper[i], point[j] - lower[j], -1.0),
        (point[i] - upper[i], point[j] - upper[j], 1.0),
    )
    floor2 = floor * floor
    for u, v, sign in corners:
        r = np.sqrt(u * u + v * v + w * w)
        if w != 0.0 and r > 0:
            kernel[normal_axis] += sign * np.arctan(u * v / (w * r))
        r = max(r, floor)
        kernel[i] -= sign * _log_v_plus_r(v, max(u * u + w * w, floor2), r)
        kernel[j] -= sign * _log_v_plus_r(u, max(v * v + w * w, floor2), r)
    return kernel


class StrayFieldService:
    """Prism stray fields and the reference fields used to check them"""

    @staticmethod
    def _faces(geometry: FlakeGeometry) -> Iterable[Tuple[int, float, float, np.ndarray, np.ndarray]]:
        center = np.asarray(geometry.center_um, dtype=float)
        half = np.asarray(geometry.half_extents_um, dtype=float)
        direction = np.asarray(geometry.direction, dtype=float)
        for axis in range(3):
            if direction[axis] == 0.0:
                continue
            for outward in (1.0, -1.0):
                yield axis, outward * direction[axis], center[axis] + outward * half[axis], center - half, center + half

    @classmethod
    def stray_field(cls, geometry: FlakeGeometry, M: float, point) -> FieldVector:
        """
        Exact field of a uniformly magnetized prism outside its volume

        Args:
            geometry: Prism geometry and magnetization direction
            M: Signed magnetization along geometry.direction, A/m
            point: Field point in um

        Returns:
            FieldVector in G; flagged "on_surface" for points on a face or edge

        Raises:
            DomainError: If the point lies strictly inside the prism
        """
        point = np.asarray(point, dtype=float)
        if point.shape != (3,) or not np.all(np.isfinite(point)):
            raise InvalidInputError(f"field point must be a finite 3-vector, got {point!r}")
        if geometry.contains(point):
            raise DomainError(f"point {point.tolist()} um lies inside the prism")

        scale = float(max(geometry.half_extents_um))
        offset = np.abs(point - np.asarray(geometry.center_um))
        half = np.asarray(geometry.half_extents_um)
        flags: Tuple[str, ...] = ()
        if np.all(offset <= half * (1 + _REL_SURFACE_TOL)):
            flags = (ON_SURFACE_FLAG,)
            logger.debug(f"Stray field evaluated on the prism surface at {point.tolist()} um")

        if M == 0.0:
            return FieldVector(flags=flags)

        floor = _REL_SURFACE_TOL * scale
        field = np.zeros(3)
        for axis, projection, plane, lower, upper in cls._faces(geometry):
            sigma = M * projection
            field += sigma * _rectangle_kernel(point, axis, plane, lower, upper, floor)
        return FieldVector.from_array(_GAUSS_PER_CHARGE * field, flags=flags)

    @classmethod
    def stray_field_multi(cls, prisms: Iterable[Tuple[FlakeGeometry, float]], point) -> FieldVector:
        """Superposed field of several uniformly magnetized prisms (domains)"""
        total = FieldVector()
        for geometry, M in prisms:
            total = total + cls.stray_field(geometry, M, point)
        return total

    @staticmethod
    def dipole_field(moment_direction, M: float, volume_um3: float, center_um, point) -> FieldVector:
        """
        Point-dipole field of moment M * volume along moment_direction, in G
        """
        d = np.asarray(moment_direction, dtype=float)
        d = d / np.linalg.norm(d)
        r = np.asarray(point, dtype=float) - np.asarray(center_um, dtype=float)
        distance = float(np.linalg.norm(r))
        if distance == 0:
            raise DomainError("dipole field is singular at the dipole position")
        r_hat = r / distance
        field = _GAUSS_PER_CHARGE * M * volume_um3 / distance ** 3 * (3.0 * np.dot(d, r_hat) * r_hat - d)
        return FieldVector.from_array(field)

    @classmethod
    def surface_charge_quadrature(cls, geometry: FlakeGeometry, M: float, point, panels: int = 200) -> FieldVector:
        """
        Midpoint-rule integration of the surface-charge field with
        panels x panels cells per face
        """
        if panels < 1:
            raise InvalidInputError("panels must be positive")
        point = np.asarray(point, dtype=float)
        field = np.zeros(3)
        for axis, projection, plane, lower, upper in cls._faces(geometry):
            i, j = [a for a in range(3) if a != axis]
            edges_i = np.linspace(lower[i], upper[i], panels + 1)
            edges_j = np.linspace(lower[j], upper[j], panels + 1)
            mid_i = 0.5 * (edges_i[1:] + edges_i[:-1])
            mid_j = 0.5 * (edges_j[1:] + edges_j[:-1])
            area = (edges_i[1] - edges_i[0]) * (edges_j[1] - edges_j[0])
            gi, gj = np.meshgrid(mid_i, mid_j, indexing='ij')
            sources = np.zeros(gi.shape + (3,))
            sources[..., axis] = plane
            sources[..., i] = gi
            sources[..., j] = gj
            r = point - sources
            distance3 = np.linalg.norm(r, axis=-1) ** 3
            field += M * projection * area * np.sum(r / distance3[..., None], axis=(0, 1))
        return FieldVector.from_array(_GAUSS_PER_CHARGE * field)
