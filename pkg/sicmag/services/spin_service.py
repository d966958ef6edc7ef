"""
PL6 spin-1 energy-level model
"""
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import constants
from scipy.linalg import eigh

from sicmag.core.exceptions import DegenerateRegimeError, InvalidInputError, ModelRangeError
from sicmag.schemas.sensor import FieldVector, SensorSpinModel

logger = logging.getLogger(__name__)

# Spin-1 operators in the basis {|+1>, |0>, |-1>}
_SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / np.sqrt(2)
_SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / np.sqrt(2)
_SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
_IDENTITY = np.eye(3, dtype=complex)
_MS0 = 1


class FieldExtraction(NamedTuple):
    """
    Field inverted from an ODMR doublet

    crossed is set when the lower line sits beyond the m_s=0/m_s=-1 level
    crossing (B > D/gamma), where both lines move up with field.
    """
    B: float
    D_center: float
    crossed: bool = False


class SpinModelService:
    """Hamiltonian construction, transitions and field inversion"""

    @staticmethod
    def gamma_from_g(g: float = 2.0023) -> float:
        """
        Gyromagnetic ratio g*mu_B/h in MHz/G
        """
        mu_b_hz_per_t = constants.physical_constants['Bohr magneton in Hz/T'][0]
        return g * mu_b_hz_per_t * 1e-6 * 1e-4

    @classmethod
    def zfs_at(cls, model: SensorSpinModel, T: float) -> float:
        """
        Zero-field splitting D(T) = D0 + dD_dT * (T - T_ref)

        Args:
            model: Sensor model
            T: Temperature in K

        Returns:
            D(T) in MHz

        Raises:
            InvalidInputError: If T is not positive
            ModelRangeError: If D(T) is not positive
        """
        if not T > 0:
            raise InvalidInputError(f"temperature must be positive, got {T}")
        D = model.D0 + model.dD_dT * (T - model.T_ref)
        if D <= 0:
            raise ModelRangeError(f"D({T} K) = {D} MHz is not positive")
        return D

    @classmethod
    def hamiltonian(cls, model: SensorSpinModel, B: FieldVector, T: float) -> np.ndarray:
        """
        H = D(T)(Sz^2 - 2/3) + E(Sx^2 - Sy^2) + gamma B.S in MHz
        """
        D = cls.zfs_at(model, T)
        zfs = D * (_SZ @ _SZ - (2.0 / 3.0) * _IDENTITY)
        strain = model.E * (_SX @ _SX - _SY @ _SY)
        zeeman = model.gamma * (B.Bx * _SX + B.By * _SY + B.Bz * _SZ)
        return zfs + strain + zeeman

    @classmethod
    def eigensystem(cls, model: SensorSpinModel, B: FieldVector, T: float) -> Tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and matching eigenvector columns"""
        return eigh(cls.hamiltonian(model, B, T))

    @classmethod
    def transition_frequencies(cls, model: SensorSpinModel, B: FieldVector, T: float) -> Tuple[float, float]:
        """
        Transitions out of the dominantly m_s=0 eigenstate

        Args:
            model: Sensor model
            B: Field in G
            T: Temperature in K

        Returns:
            (f_minus, f_plus) in MHz, ascending

        Raises:
            DegenerateRegimeError: If no eigenstate carries m_s=0 weight >= 0.5
        """
        energies, vectors = cls.eigensystem(model, B, T)
        weights = np.abs(vectors[_MS0, :]) ** 2
        k0 = int(np.argmax(weights))
        if weights[k0] < 0.5:
            raise DegenerateRegimeError(
                f"m_s=0 character is ambiguous (max weight {weights[k0]:.3f}) at B={B.as_array()} G"
            )
        others = [k for k in range(3) if k != k0]
        f_minus, f_plus = sorted(abs(energies[k] - energies[k0]) for k in others)
        return float(f_minus), float(f_plus)

    @classmethod
    def field_from_splitting(
        cls,
        model: SensorSpinModel,
        f_minus: float,
        f_plus: float,
        T: Optional[float] = None,
    ) -> FieldExtraction:
        """
        Axial field magnitude from an ODMR doublet

        Below the level crossing B = (f_plus - f_minus) / (2 gamma) and the
        center is D. Above it the lower line is gamma*B - D, so the roles swap;
        the reading whose D lies closer to D(T) (or D0 without T) is returned.

        Args:
            model: Sensor model
            f_minus: Lower line in MHz
            f_plus: Upper line in MHz
            T: Optional temperature for the D(T) reference

        Returns:
            FieldExtraction

        Raises:
            InvalidInputError: If f_plus < f_minus
        """
        if f_plus < f_minus:
            raise InvalidInputError(f"negative splitting: f_plus={f_plus} < f_minus={f_minus}")
        D_ref = cls.zfs_at(model, T) if T is not None else model.D0

        normal = FieldExtraction(
            B=(f_plus - f_minus) / (2.0 * model.gamma),
            D_center=0.5 * (f_plus + f_minus),
        )
        crossed = FieldExtraction(
            B=(f_plus + f_minus) / (2.0 * model.gamma),
            D_center=0.5 * (f_plus - f_minus),
            crossed=True,
        )
        if abs(crossed.D_center - D_ref) < abs(normal.D_center - D_ref):
            logger.debug(f"Doublet ({f_minus}, {f_plus}) MHz read beyond the level crossing")
            return crossed
        return normal

    @classmethod
    def field_from_branch(cls, model: SensorSpinModel, f: float, T: float) -> float:
        """
        Axial field from a single line using D(T): |f - D(T)| / gamma

        Only valid below the level crossing for the lower line.
        """
        return abs(f - cls.zfs_at(model, T)) / model.gamma
