"""Physical constants and unit conventions.

All circuit energies elsewhere in the package are stored as frequencies,
E/h in GHz.  SI constants only enter the coherence module, where rates are
assembled in rad/s and reported in ms.
"""

from __future__ import annotations

from dataclasses import dataclass

GHZ_TO_RAD_PER_S = 2.0e9 * 3.141592653589793  # angular frequency of a 1 GHz tone

H_PLANCK = 6.62607015e-34                    # J s
HBAR = H_PLANCK / (2 * 3.141592653589793)    # J s, derived so h = 2 pi hbar exactly
K_B = 1.380649e-23             # J / K
E_CHARGE = 1.602176634e-19     # C

#: aluminum superconducting gap, expressed as an equivalent temperature (K)
ALUMINUM_GAP_K = 2.1


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants plus the configurable environment parameters.

    ``delta_gap`` is the superconducting gap in joules (default aluminum,
    roughly 180 ueV) and ``temperature`` the bath temperature in kelvin.
    The default 16 mK is the calibration point for which the thermal
    plasmon occupation at 0.8 GHz is about 0.1.
    """

    h: float = H_PLANCK
    hbar: float = HBAR
    k_B: float = K_B
    e: float = E_CHARGE
    delta_gap: float = ALUMINUM_GAP_K * K_B
    temperature: float = 0.016
    x_qp: float = 3.3e-6

    def __post_init__(self) -> None:
        for name in ("h", "hbar", "k_B", "e", "delta_gap", "temperature"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def R_K(self) -> float:
        """Resistance quantum h/e^2, consistent with h and e by construction."""
        return self.h / self.e**2

    @property
    def phi0(self) -> float:
        """Reduced magnetic flux quantum hbar/2e."""
        return self.hbar / (2 * self.e)


DEFAULT_CONSTANTS = PhysicalConstants()
