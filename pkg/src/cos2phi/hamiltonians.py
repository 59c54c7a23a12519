"""Hamiltonian assembly: toy model, full three-mode circuit, disorder,
effective two-mode reduction, and parity-sector forms.

The full circuit Hamiltonian, in the operator form used for numerics and
with disorder-dressed coefficients (tildes), reads

    H = sqrt(8 eL~ eC~) a^a + sqrt(16 x eC eL~) b^b
        + 2 eC~ (N - Ng - eta)^2
        - 2 eJ cos(vphi) cos(phi_zpf (a + a^)/2 + phi_ext/2)
        + H'_J + H'_C + H'_L

with the asymmetry terms

    H'_J = 2 eJ dJ  sin(vphi) sin(phi_zpf (a + a^)/2 + phi_ext/2)
    H'_C = -8 eC~ dC  n (N - Ng - eta)
    H'_L = + eL~ dL  (phi - phi_ext) theta

where eL~ = eL/(1 - dL^2) and eC~ = eC/(1 - dC^2).  The element pairing
conventions implied by these signs (which junction or superinductance is
"left") are fixed once here and reused by the coherence module:

    junction i = +/-:        eps_J,i = (1 +/- dJ) eJ,   phase  phi/2 +/- vphi
    junction i = +/-:        eps_C,i = eC/(1 +/- dC),   charge n +/- (N-Ng-eta)/2
    superinductance i = +/-: eps_L,i = eL/(1 +/- dL),   flux   (phi-phi_ext)/2 -/+ theta
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import (
    BasisTruncation,
    BiasPoint,
    CircuitParams,
    HermitianOperator,
    Primitives,
    build_primitives,
    displaced_cosine,
    displaced_sine,
)

__all__ = [
    "ToyParams",
    "toy_hamiltonian",
    "full_hamiltonian",
    "disorder_perturbation",
    "EffectiveParams",
    "effective_params",
    "effective_hamiltonian",
    "parity_sector_hamiltonians",
    "NormalModeReport",
    "UnsupportedBiasError",
    "cos2phi_default_truncation",
]


class UnsupportedBiasError(ValueError):
    """Operation defined only at a particular bias point."""


# production defaults for the three-mode basis
def cos2phi_default_truncation() -> BasisTruncation:
    return BasisTruncation(N0=7, p0=7, q0=30)


# ---------------------------------------------------------------------------
# toy model: 4 E_C (N - N_g)^2 - E_J cos 2vphi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToyParams:
    """Single-mode model of a pure pair-tunneling element with shunt."""

    E_J: float
    E_C: float
    N_g: float = 0.0
    N0_toy: int = 40

    def __post_init__(self) -> None:
        if self.E_J < 0:
            raise ValueError("E_J must be nonnegative")
        if self.E_C <= 0:
            raise ValueError("E_C must be positive")
        if self.N0_toy < 2:
            raise ValueError("N0_toy must be at least 2")


def toy_hamiltonian(tp: ToyParams) -> HermitianOperator:
    """Charge-basis matrix: diagonal 4 E_C (N - Ng)^2, hopping -E_J/2 at |dN|=2.

    Only pairs of Cooper pairs tunnel, so the +/-1 off-diagonals are exactly
    zero and the even/odd charge sectors decouple at every offset charge.
    """
    n = 2 * tp.N0_toy + 1
    Nv = np.arange(-tp.N0_toy, tp.N0_toy + 1).astype(float)
    diag = 4.0 * tp.E_C * (Nv - tp.N_g) ** 2
    hop = np.full(n - 2, -0.5 * tp.E_J)
    H = sp.diags([hop, diag, hop], [-2, 0, 2]).tocsr()
    fp = f"toy:{tp.N0_toy}"
    return HermitianOperator(H, fp)


# ---------------------------------------------------------------------------
# full three-mode circuit
# ---------------------------------------------------------------------------

def _josephson_block(prim: Primitives, phi_ext: float) -> np.ndarray:
    return displaced_cosine(prim.phi_zpf, phi_ext, prim.trunc.p0)


def full_hamiltonian(
    params: CircuitParams,
    bias: BiasPoint,
    trunc: BasisTruncation | None = None,
    primitives: Primitives | None = None,
) -> HermitianOperator:
    """Assemble the complete (possibly disordered) circuit Hamiltonian.

    Disorder enters both through the dressed quadratic coefficients (handled
    inside ``build_primitives``) and through the explicit asymmetry terms.
    Passing ``primitives`` skips rebuilding the operator toolbox.
    """
    if trunc is None:
        trunc = cos2phi_default_truncation()
    if trunc.N0 < 7 or trunc.p0 < 7 or trunc.q0 < 30:
        warnings.warn(
            f"truncation {trunc.as_tuple()} is below the recommended "
            "(7, 7, 30); check convergence before trusting low-energy "
            "differences",
            stacklevel=2,
        )
    prim = primitives if primitives is not None else build_primitives(trunc, params)

    eC = params.eps_C_dressed
    eJ = params.eps_J
    Ng = bias.N_g

    cos_b, _ = _hop_blocks(trunc)
    charge = prim.N - Ng * prim.identity - prim.eta
    H = (
        prim.omega_a * prim.num_a
        + prim.omega_b * prim.num_b
        + 2.0 * eC * (charge @ charge).hermitize()
        - 2.0 * eJ
        * prim.wrap_hermitian(
            prim.kron3(
                cos_b,
                _josephson_block(prim, bias.phi_ext),
                sp.identity(trunc.q0 + 1),
            )
        )
    )

    for kind in ("J", "C", "L"):
        Hp, _ = disorder_perturbation(kind, params, bias, trunc, primitives=prim)
        H = H + Hp
    if params.delta_A != 0.0:
        for kind in ("J", "C"):
            Hp, _ = _area_component(kind, params, bias, prim)
            H = H + Hp
    return H.hermitize() if not isinstance(H, HermitianOperator) else H


def _hop_blocks(trunc: BasisTruncation) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    nN = 2 * trunc.N0 + 1
    hop = sp.diags([np.ones(nN - 1)], [1], shape=(nN, nN)).tocsr()
    cos_b = 0.5 * (hop + hop.T)
    sin_b = (hop - hop.T) * (1.0 / 2.0j)
    return cos_b.tocsr(), sin_b.tocsr()


def disorder_perturbation(
    kind: str,
    params: CircuitParams,
    bias: BiasPoint,
    trunc: BasisTruncation | None = None,
    primitives: Primitives | None = None,
) -> tuple[HermitianOperator, dict]:
    """Asymmetry term H' for one disorder kind, with its coefficient dressing.

    Returns ``(H', metadata)`` where the metadata records the analytic
    dressings the base Hamiltonian must carry alongside H'.  For ``kind
    "A"`` the returned operator is the sum of the correlated junction-energy
    and junction-capacitance terms at delta = delta_A.
    """
    if kind not in ("J", "C", "L", "A"):
        raise ValueError(f"unknown disorder kind {kind!r}")
    if trunc is None:
        trunc = cos2phi_default_truncation()
    prim = primitives if primitives is not None else build_primitives(trunc, params)

    if kind == "A":
        if params.delta_A >= 1.0:
            raise ValueError("delta_A must be below 1")
        hj, mj = _area_component("J", params, bias, prim)
        hc, mc = _area_component("C", params, bias, prim)
        meta = {"kind": "A", "delta": params.delta_A, "dressing": mc["dressing"]}
        return (hj + hc).hermitize(), meta

    delta = {"J": params.delta_J, "C": params.delta_C, "L": params.delta_L}[kind]
    return _perturbation_term(kind, delta, params, bias, prim)


def _area_component(
    kind: str, params: CircuitParams, bias: BiasPoint, prim: Primitives
) -> tuple[HermitianOperator, dict]:
    return _perturbation_term(kind, params.delta_A, params, bias, prim)


def _perturbation_term(
    kind: str,
    delta: float,
    params: CircuitParams,
    bias: BiasPoint,
    prim: Primitives,
) -> tuple[HermitianOperator, dict]:
    if not (0.0 <= delta < 1.0):
        raise ValueError("disorder parameter must lie in [0, 1)")
    trunc = prim.trunc
    zero = 0.0 * prim.identity
    meta: dict = {"kind": kind, "delta": delta, "dressing": {}}

    if delta == 0.0:
        return zero.hermitize(), meta

    if kind == "J":
        _, sin_b = _hop_blocks(trunc)
        sin_d = displaced_sine(prim.phi_zpf, bias.phi_ext, trunc.p0)
        Hp = (2.0 * params.eps_J * delta) * prim.wrap_hermitian(
            prim.kron3(sin_b, sin_d, sp.identity(trunc.q0 + 1))
        )
        return Hp, meta

    if kind == "C":
        eC_d = params.eps_C / (1.0 - delta**2)
        meta["dressing"]["eps_C"] = eC_d
        charge = prim.N - bias.N_g * prim.identity - prim.eta
        cross = (prim.n @ charge + charge @ prim.n) * 0.5
        Hp = (-8.0 * eC_d * delta) * cross.hermitize()
        return Hp, meta

    # kind == "L"
    eL_d = params.eps_L / (1.0 - delta**2)
    meta["dressing"]["eps_L"] = eL_d
    Hp = (eL_d * delta) * (prim.dphi @ prim.theta).hermitize()
    return Hp, meta


# ---------------------------------------------------------------------------
# effective two-mode model along the tunneling path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveParams:
    """Fourier coefficients (GHz) and kinetic prefactor of the reduced model.

    ``c[k]`` multiplies cos(k vphi); odd coefficients vanish identically at
    half flux.  ``kinetic_prefactor`` multiplies 4 eps_C (N - Ng - eta)^2.
    """

    z: float
    c1: float
    c2: float
    c3: float
    c4: float
    kinetic_prefactor: float
    phi_ext_folded: float
    order: str = "leading"

    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.c1, self.c2, self.c3, self.c4)


def effective_params(
    params: CircuitParams, bias: BiasPoint, order: str = "leading"
) -> EffectiveParams:
    """Printed closed-form coefficients of the reduced one-dimensional model."""
    if order not in ("leading", "extended"):
        raise ValueError("order must be 'leading' or 'extended'")
    z = params.z
    eL, eJ = params.eps_L, params.eps_J
    f = np.pi - bias.phi_ext_folded
    if order == "leading":
        return EffectiveParams(
            z=z,
            c1=-(16.0 / (3 * np.pi)) * eL * f,
            c2=-eJ * (1.0 - 1.25 * z),
            c3=0.0,
            c4=0.0,
            kinetic_prefactor=1.0 / (4.0 * (1.0 - z)),
            phi_ext_folded=bias.phi_ext_folded,
            order=order,
        )
    return EffectiveParams(
        z=z,
        c1=-eL * (16.0 / (3 * np.pi) - 56.0 * z / (9 * np.pi)) * f,
        c2=-eJ * (1.0 - 1.25 * z + (81.0 - 2 * np.pi**2 - 6 * f**2) * z**2 / 48.0),
        c3=+eL * (16.0 / (45 * np.pi) - 88.0 * z / (75 * np.pi)) * f,
        c4=-eL * (1.0 / 12.0 - 17.0 * z / 72.0),
        kinetic_prefactor=0.5 / (1.0 + (1.0 + z) ** -2),
        phi_ext_folded=bias.phi_ext_folded,
        order=order,
    )


def effective_hamiltonian(
    params: CircuitParams,
    bias: BiasPoint,
    order: str = "leading",
    N0: int = 7,
    q0: int = 30,
) -> tuple[HermitianOperator, EffectiveParams]:
    """Two-mode Hamiltonian of the path-reduced model.

    Compact charge basis for the junction-difference mode, oscillator basis
    for the imbalance mode.  Only the symmetric circuit is reducible this
    way, so all disorder parameters must be zero.
    """
    if params.z >= 0.3:
        raise ValueError("effective model requires eps_L/eps_J < 0.3")
    if any(
        getattr(params, d) != 0.0
        for d in ("delta_J", "delta_C", "delta_A", "delta_L")
    ):
        raise ValueError("effective model is defined for the symmetric circuit")
    ep = effective_params(params, bias, order)
    eL, eC, x = params.eps_L, params.eps_C, params.x

    nN = 2 * N0 + 1
    nb = q0 + 1
    Nv = np.arange(-N0, N0 + 1).astype(float)
    fp = f"effective:{order}:{N0}:{q0}:{eL:.12e}:{eC:.12e}:{x:.12e}"

    hop = sp.diags([np.ones(nN - 1)], [1], shape=(nN, nN)).tocsr()
    v = np.sqrt(np.arange(1, nb))
    b = sp.diags([v], [1], shape=(nb, nb)).tocsr()
    bdag = b.T.tocsr()
    Ib, IN = sp.identity(nb), sp.identity(nN)

    omega_b = np.sqrt(16.0 * x * eC * eL)
    eta_zpf = 0.5 * (eL / (x * eC)) ** 0.25
    eta1 = 1j * eta_zpf * (bdag - b)

    charge = sp.kron(sp.diags(Nv - bias.N_g), Ib) - sp.kron(IN, eta1)
    H = sp.kron(IN, omega_b * sp.diags(np.arange(nb).astype(float))).tocsr()
    H = H + 4.0 * eC * ep.kinetic_prefactor * (charge @ charge)
    # the theta^2 + x eta^2 quadratic sector is already the omega_b ladder
    for k, ck in enumerate(ep.coefficients(), start=1):
        if ck == 0.0:
            continue
        hk = sp.diags([np.ones(nN - k)], [k], shape=(nN, nN)).tocsr()
        H = H + ck * sp.kron(0.5 * (hk + hk.T), Ib)
    return HermitianOperator(H.tocsr(), fp), ep


# ---------------------------------------------------------------------------
# parity sectors at half flux
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalModeReport:
    """Scalar summary of the quadratic normal modes at half flux."""

    plasmon_freq: float
    self_resonance: float
    quartic_coefficient: float


def parity_sector_hamiltonians(
    params: CircuitParams,
    bias: BiasPoint,
    N0_sector: int = 10,
    q0: int = 30,
) -> tuple[HermitianOperator, HermitianOperator, NormalModeReport]:
    """Even and odd Cooper-pair-parity blocks of the reduced model.

    Valid only at half flux, where the single-pair harmonic vanishes and the
    doubled charge variable with sector offsets k+- in {0, 1} captures both
    parity manifolds exactly.
    """
    if abs((bias.phi_ext % (2 * np.pi)) - np.pi) > 1e-12:
        raise UnsupportedBiasError(
            "parity sector factorization is defined at phi_ext = pi"
        )
    z = params.z
    eL, eC, eJ, x = params.eps_L, params.eps_C, params.eps_J, params.x
    kappa = 1.0 / (4.0 * (1.0 - z))
    cJ = eJ * (1.0 - 1.25 * z)

    nN = 2 * N0_sector + 1
    nb = q0 + 1
    Ntil = np.arange(-N0_sector, N0_sector + 1).astype(float)
    v = np.sqrt(np.arange(1, nb))
    b = sp.diags([v], [1], shape=(nb, nb)).tocsr()
    bdag = b.T.tocsr()
    Ib, IN = sp.identity(nb), sp.identity(nN)
    omega_b = np.sqrt(16.0 * x * eC * eL)
    eta_zpf = 0.5 * (eL / (x * eC)) ** 0.25
    eta1 = 1j * eta_zpf * (bdag - b)
    hop = sp.diags([np.ones(nN - 1)], [1], shape=(nN, nN)).tocsr()
    cos_til = 0.5 * (hop + hop.T)

    out = []
    for k_pm in (0.0, 1.0):
        fp = f"sector:{k_pm:.0f}:{N0_sector}:{q0}:{eL:.12e}:{eC:.12e}:{eJ:.12e}:{x:.12e}"
        charge = sp.kron(sp.diags(2.0 * Ntil + k_pm - bias.N_g), Ib) - sp.kron(IN, eta1)
        H = sp.kron(IN, omega_b * sp.diags(np.arange(nb).astype(float))).tocsr()
        H = H + 4.0 * eC * kappa * (charge @ charge)
        H = H - cJ * sp.kron(cos_til, Ib)
        out.append(HermitianOperator(H.tocsr(), fp))

    report = NormalModeReport(
        plasmon_freq=np.sqrt(16.0 * x * eL * eC),
        self_resonance=np.sqrt(8.0 * eJ * eC),
        quartic_coefficient=-eJ / 24.0,
    )
    return out[0], out[1], report
