"""Golden-rule relaxation and pure-dephasing budgets.

Relaxation through a channel with coupling operator O and bath spectral
density S follows

    1/T1 = (1/hbar^2) |<0+| O |0->|^2 [S(dw) + S(-dw)]

evaluated at the qubit splitting dw, summed incoherently over the two
junctions or superinductances where the channel has two elements.  The
element decompositions use the pairing conventions fixed in
``hamiltonians`` (which arm is "left").  All four dephasing channels use
the closed-form bounds with frequency-dependent quality factors; energies
arrive as GHz and leave as rates in 1/s, reported as times in ms.

A channel whose normalized coupling amplitude falls below 1e-10, or whose
rate falls below 1e-12 per ms, reports the sentinel ``inf`` (numerical
infinity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kv

from .analysis import (
    FLUXON_MINUS,
    FLUXON_PLUS,
    LabeledSolution,
    LabelingError,
    charge_dispersion,
    dispersive_shift,
)
from .constants import GHZ_TO_RAD_PER_S, PhysicalConstants, DEFAULT_CONSTANTS
from .hamiltonians import UnsupportedBiasError
from .model import (
    BasisTruncation,
    BiasPoint,
    CircuitParams,
    Primitives,
    displaced_cosine,
    displaced_sine,
)

__all__ = [
    "NoiseChannel",
    "CoherenceReport",
    "q_cap",
    "q_ind",
    "t1_channel",
    "tphi_charge",
    "tphi_flux",
    "tphi_shot",
    "tphi_critical_current",
    "full_report",
    "DerivativeError",
    "Q_CAP_NOMINAL",
    "Q_IND_NOMINAL",
    "FLUX_NOISE_SQRT_A",
    "CRITICAL_CURRENT_SQRT_A",
]

Q_CAP_NOMINAL = 1e6
Q_IND_NOMINAL = 500e6
Q_CAP_REF_HZ = 6e9
Q_IND_REF_HZ = 0.5e9
FLUX_NOISE_SQRT_A = 2 * np.pi * 3e-6     # sqrt(A_phi_ext), radians
CRITICAL_CURRENT_SQRT_A = 5e-7           # sqrt(A_epsJ) / eps_J

ME_FLOOR = 1e-10        # normalized coupling amplitude below this -> inf
RATE_FLOOR = 1e-9       # 1/s, i.e. 1e-12 per ms


class DerivativeError(RuntimeError):
    """Finite-difference derivative failed to converge across step halvings."""


@dataclass(frozen=True)
class NoiseChannel:
    """Configuration record for one noise channel."""

    kind: str
    amplitude: float
    reference_freq: float = 0.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ValueError("channel amplitude must be nonnegative")
        if self.kind in ("capacitive", "inductive") and self.reference_freq <= 0:
            raise ValueError("quality-factor channels need a reference frequency")


def default_channels() -> dict[str, NoiseChannel]:
    return {
        "capacitive": NoiseChannel("capacitive", Q_CAP_NOMINAL, Q_CAP_REF_HZ),
        "inductive": NoiseChannel("inductive", Q_IND_NOMINAL, Q_IND_REF_HZ),
        "purcell": NoiseChannel("purcell", Q_CAP_NOMINAL, Q_CAP_REF_HZ),
        "quasiparticle": NoiseChannel(
            "quasiparticle", 1.0, extras={"x_qp": DEFAULT_CONSTANTS.x_qp}
        ),
        "charge": NoiseChannel("charge", 1e-4),
        "flux": NoiseChannel("flux", FLUX_NOISE_SQRT_A),
        "shot": NoiseChannel("shot", Q_CAP_NOMINAL, Q_CAP_REF_HZ),
        "critical_current": NoiseChannel("critical_current", CRITICAL_CURRENT_SQRT_A),
    }


# ---------------------------------------------------------------------------
# frequency-dependent quality factors
# ---------------------------------------------------------------------------

def q_cap(omega: float, nominal: float = Q_CAP_NOMINAL) -> float:
    """Dielectric quality factor Q (2 pi 6 GHz / |omega|)^0.7."""
    if omega == 0:
        raise ValueError("q_cap undefined at zero frequency")
    return nominal * (2 * np.pi * Q_CAP_REF_HZ / abs(omega)) ** 0.7


def q_ind(
    omega: float,
    temperature: float,
    nominal: float = Q_IND_NOMINAL,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Inductive quality factor with the Bessel frequency dependence.

    Referenced so the nominal value corresponds to a 0.5 GHz measurement:
    Q(omega) = Q0 K0(x_ref) sinh(x_ref) / (K0(x) sinh(x)) with
    x = hbar |omega| / 2 kB T.
    """
    if omega == 0:
        raise ValueError("q_ind undefined at zero frequency")
    if temperature <= 0:
        raise ValueError("q_ind needs a positive temperature")
    x_ref = constants.h * Q_IND_REF_HZ / (2 * constants.k_B * temperature)
    x = constants.hbar * abs(omega) / (2 * constants.k_B * temperature)
    return nominal * (kv(0, x_ref) * np.sinh(x_ref)) / (kv(0, x) * np.sinh(x))


def _coth(x: float) -> float:
    return 1.0 / math.tanh(x)


# ---------------------------------------------------------------------------
# element decompositions (pairings fixed in the hamiltonians module)
# ---------------------------------------------------------------------------

def _inductive_elements(params: CircuitParams, prim: Primitives):
    for s in (+1.0, -1.0):
        eps_L_i = params.eps_L / (1.0 + s * params.delta_L)
        op = (0.5 * prim.dphi - s * prim.theta).hermitize()
        yield eps_L_i, op


def _capacitive_elements(params: CircuitParams, prim: Primitives):
    dC = params.delta_C_eff
    half_charge = 0.5 * (prim.N - prim.eta)
    for s in (+1.0, -1.0):
        eps_C_i = params.eps_C / (1.0 + s * dC)
        op = (prim.n + s * half_charge).hermitize()
        yield eps_C_i, op


def _quasiparticle_elements(params: CircuitParams, bias: BiasPoint, prim: Primitives):
    """Junction operators sin(phi_i / 2) on the half-integer charge lattice.

    Half-angle functions of the compact phase shift the island charge by
    half a Cooper pair, which maps integer-charge states onto the
    interleaved half-integer lattice.  The operators are built honestly on
    the doubled lattice together with the embedding of physical states into
    its integer sublattice; matrix elements between physical states then
    vanish by charge-parity structure rather than by fiat.
    """
    import scipy.sparse as sp

    t = prim.trunc
    nN = 2 * t.N0 + 1
    next_ = 2 * nN - 1  # half-integer lattice covering the same charge range
    embed_rows = np.arange(0, next_, 2)
    E = sp.csr_matrix(
        (np.ones(nN), (embed_rows, np.arange(nN))), shape=(next_, nN)
    )
    shift = sp.diags([np.ones(next_ - 1)], [1], shape=(next_, next_)).tocsr()
    cos_half = 0.5 * (shift + shift.T)
    sin_half = (shift - shift.T) * (1.0 / 2.0j)

    sin_quarter = displaced_sine(prim.phi_zpf / 2.0, bias.phi_ext / 2.0, t.p0)
    cos_quarter = displaced_cosine(prim.phi_zpf / 2.0, bias.phi_ext / 2.0, t.p0)
    Ib = sp.identity(t.q0 + 1)

    def k3(cb, ab):
        return sp.kron(sp.kron(sp.csr_matrix(cb), sp.csr_matrix(ab), format="csr"),
                       Ib, format="csr")

    embed_full = sp.kron(E, sp.identity((t.p0 + 1) * (t.q0 + 1)), format="csr")
    for s in (+1.0, -1.0):
        eps_J_i = (1.0 + s * params.delta_J_eff) * params.eps_J
        op = k3(cos_half, sin_quarter) + s * k3(sin_half, cos_quarter)
        yield eps_J_i, op, embed_full


def _qubit_pair(ls: LabeledSolution) -> tuple[np.ndarray, np.ndarray, float]:
    try:
        i0 = ls.find(0, FLUXON_PLUS)
        i1 = ls.find(0, FLUXON_MINUS)
    except LabelingError:
        i0, i1 = 0, 1  # away from half flux the lowest doublet is the qubit
    dE = abs(ls.energies[i1] - ls.energies[i0])
    return ls.solution.vectors[:, i0], ls.solution.vectors[:, i1], dE


def _normalized_amp(op_matrix, v0, v1) -> tuple[float, float]:
    """(raw |<1|O|0>|^2, normalized amplitude) for the sentinel check."""
    Ov0 = op_matrix @ v0
    me2 = abs(np.vdot(v1, Ov0)) ** 2
    denom = float(np.real(np.vdot(Ov0, Ov0)))
    norm_amp = math.sqrt(me2 / denom) if denom > 0 else 0.0
    return me2, norm_amp


def t1_channel(
    kind: str,
    ls: LabeledSolution,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    channel: NoiseChannel | None = None,
) -> float:
    """Relaxation time (ms) of the qubit doublet through one loss channel.

    Returns ``inf`` when the coupling matrix element is numerically absent.
    """
    if kind not in ("capacitive", "inductive", "purcell", "quasiparticle"):
        raise ValueError(f"unknown T1 channel {kind!r}")
    temperature = constants.temperature
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    params, prim = ls.params, ls.primitives
    if channel is None:
        channel = default_channels()[kind]
    v0, v1, dE = _qubit_pair(ls)
    omega = dE * GHZ_TO_RAD_PER_S
    if omega == 0:
        raise ValueError("degenerate qubit pair: relaxation rate undefined")
    x_th = constants.hbar * omega / (2 * constants.k_B * temperature)
    coth = _coth(x_th)

    rate = 0.0
    if kind == "inductive":
        for eps_L_i, op in _inductive_elements(params, prim):
            me2, amp = _normalized_amp(op.matrix, v0, v1)
            if amp < ME_FLOOR:
                continue
            rate += 2.0 * (eps_L_i * GHZ_TO_RAD_PER_S) * me2 * coth / q_ind(
                omega, temperature, channel.amplitude, constants
            )
    elif kind == "capacitive":
        for eps_C_i, op in _capacitive_elements(params, prim):
            me2, amp = _normalized_amp(op.matrix, v0, v1)
            if amp < ME_FLOOR:
                continue
            rate += 2.0 * (8.0 * eps_C_i * GHZ_TO_RAD_PER_S) * me2 * coth / q_cap(
                omega, channel.amplitude
            )
    elif kind == "purcell":
        me2, amp = _normalized_amp(prim.eta.matrix, v0, v1)
        if amp >= ME_FLOOR:
            shunt_energy = 8.0 * params.x * params.eps_C  # (2e)^2 / C_shunt, GHz
            rate = 2.0 * (shunt_energy * GHZ_TO_RAD_PER_S) * me2 * coth / q_cap(
                omega, channel.amplitude
            )
    else:  # quasiparticle
        x_qp = channel.extras.get("x_qp", constants.x_qp)
        for eps_J_i, op, embed in _quasiparticle_elements(params, ls.bias, prim):
            w0 = embed @ v0
            w1 = embed @ v1
            me2, amp = _normalized_amp(op, w0, w1)
            if amp < ME_FLOOR:
                continue
            re_y = _re_y_qp(eps_J_i, omega, temperature, x_qp, constants)
            s_sum = 2.0 * constants.hbar * omega * re_y * coth
            rate += me2 * s_sum / constants.e**2  # (2 phi0)^2 / hbar^2 = 1/e^2

    if rate < RATE_FLOOR:
        return math.inf
    return 1e3 / rate


def _re_y_qp(
    eps_J_GHz: float,
    omega: float,
    temperature: float,
    x_qp: float,
    constants: PhysicalConstants,
) -> float:
    """Dissipative junction admittance from thermal-equilibrium tunneling."""
    eps_J = eps_J_GHz * 1e9 * constants.h  # J
    delta = constants.delta_gap
    hw = constants.hbar * abs(omega)
    x = hw / (2 * constants.k_B * temperature)
    return (
        math.sqrt(2.0 / math.pi)
        * (8.0 * eps_J / (constants.R_K * delta))
        * (2.0 * delta / hw) ** 1.5
        * x_qp
        * math.sqrt(x)
        * kv(0, x)
        * math.sinh(x)
    )


# ---------------------------------------------------------------------------
# pure dephasing
# ---------------------------------------------------------------------------

def tphi_charge(eps_GHz: float) -> float:
    """Slow-charge-noise bound: rate = [pi / (2e)^2] eps / hbar, e = Euler.

    The offset charge is taken frozen within a run and random between runs,
    so no spectral amplitude enters.
    """
    if eps_GHz < 0:
        raise ValueError("dispersion must be nonnegative")
    rate = (math.pi / (2.0 * math.e) ** 2) * eps_GHz * GHZ_TO_RAD_PER_S
    if rate < RATE_FLOOR:
        return math.inf
    return 1e3 / rate


def _splitting(params, bias, trunc, dense_threshold=None, seed=7, cache=None) -> float:
    from .analysis import _solve

    ls = _solve(params, bias, trunc, 2, dense_threshold, seed, cache)
    return float(ls.energies[1] - ls.energies[0])


def tphi_flux(
    params: CircuitParams,
    bias: BiasPoint,
    trunc: BasisTruncation | None = None,
    sqrt_A: float = FLUX_NOISE_SQRT_A,
    h0: float = 1e-2,
    max_halvings: int = 14,
    rel_tol: float = 0.01,
    dense_threshold: int | None = None,
    cache=None,
) -> float:
    """Second-order flux dephasing at the half-flux sweet spot (ms).

    The curvature of the splitting is extracted by central differences with
    step halving until two successive estimates agree to ``rel_tol``.  The
    crossover step below which the sweet-spot quadratic dominates scales
    with the splitting itself, so small-splitting circuits need many
    halvings; the cap raises ``DerivativeError`` rather than returning an
    unconverged number.
    """
    if abs((bias.phi_ext % (2 * np.pi)) - np.pi) > 1e-9:
        raise UnsupportedBiasError("flux dephasing bound applies at phi_ext = pi")
    d0 = _splitting(params, bias, trunc, dense_threshold, cache=cache)
    h = h0
    prev = None
    for _ in range(max_halvings):
        dp = _splitting(params, BiasPoint(bias.phi_ext + h, bias.N_g), trunc,
                        dense_threshold, cache=cache)
        dm = _splitting(params, BiasPoint(bias.phi_ext - h, bias.N_g), trunc,
                        dense_threshold, cache=cache)
        curv = (dp - 2.0 * d0 + dm) / h**2
        if prev is not None and abs(curv - prev) <= rel_tol * abs(curv):
            rate = sqrt_A**2 * abs(curv) * GHZ_TO_RAD_PER_S
            return math.inf if rate < RATE_FLOOR else 1e3 / rate
        prev = curv
        h *= 0.5
    raise DerivativeError(
        f"flux curvature did not converge to {rel_tol:.0%} within "
        f"{max_halvings} halvings from h0 = {h0}"
    )


def tphi_shot(
    chi_GHz: float,
    omega_p_GHz: float,
    temperature: float | None = None,
    q_cap_nominal: float = Q_CAP_NOMINAL,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Thermal-photon dephasing through the plasmon mode (ms)."""
    if omega_p_GHz <= 0:
        raise ValueError("plasmon frequency must be positive")
    T = constants.temperature if temperature is None else temperature
    omega_p = omega_p_GHz * GHZ_TO_RAD_PER_S
    chi = chi_GHz * GHZ_TO_RAD_PER_S
    try:
        n_th = 1.0 / math.expm1(constants.hbar * omega_p / (constants.k_B * T))
    except OverflowError:
        n_th = 0.0
    kappa = omega_p / q_cap(omega_p, q_cap_nominal)
    rate = n_th * kappa * chi**2 / (chi**2 + kappa**2)
    if rate < RATE_FLOOR:
        return math.inf
    return 1e3 / rate


def tphi_critical_current(
    params: CircuitParams,
    bias: BiasPoint,
    trunc: BasisTruncation | None = None,
    sqrt_A_rel: float = CRITICAL_CURRENT_SQRT_A,
    rel_step: float = 1e-3,
    max_halvings: int = 8,
    rel_tol: float = 0.01,
    dense_threshold: int | None = None,
    cache=None,
) -> float:
    """Junction-energy-fluctuation dephasing (ms).

    Both junctions scale together; the bound uses |d(dE)/d ln eps_J| with a
    relative spectral amplitude, so only the logarithmic derivative enters.
    """
    if sqrt_A_rel == 0:
        return math.inf
    s = rel_step
    prev = None
    for _ in range(max_halvings):
        dp = _splitting(params.replace(eps_J=params.eps_J * (1 + s)), bias, trunc,
                        dense_threshold, cache=cache)
        dm = _splitting(params.replace(eps_J=params.eps_J * (1 - s)), bias, trunc,
                        dense_threshold, cache=cache)
        deriv = (dp - dm) / (2.0 * s)  # eps_J d(dE)/d eps_J, GHz
        if prev is not None and abs(deriv - prev) <= rel_tol * abs(deriv):
            rate = sqrt_A_rel * abs(deriv) * GHZ_TO_RAD_PER_S
            return math.inf if rate < RATE_FLOOR else 1e3 / rate
        prev = deriv
        s *= 0.5
    raise DerivativeError(
        f"eps_J derivative did not converge to {rel_tol:.0%} within "
        f"{max_halvings} halvings from relative step {rel_step}"
    )


# ---------------------------------------------------------------------------
# combined report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoherenceReport:
    """Per-channel lifetimes (ms, inf = numerical infinity) and totals."""

    t1: dict
    tphi: dict
    t1_total: float
    tphi_total: float
    t2: float
    inputs: dict

    def as_dict(self) -> dict:
        def clean(d):
            return {k: ("inf" if math.isinf(v) else v) for k, v in d.items()}

        return {
            "t1_ms": clean(self.t1),
            "tphi_ms": clean(self.tphi),
            "t1_total_ms": "inf" if math.isinf(self.t1_total) else self.t1_total,
            "tphi_total_ms": "inf" if math.isinf(self.tphi_total) else self.tphi_total,
            "t2_ms": "inf" if math.isinf(self.t2) else self.t2,
            "inputs": self.inputs,
        }


def _combine(times: dict) -> float:
    total_rate = sum(0.0 if math.isinf(t) else 1.0 / t for t in times.values())
    return math.inf if total_rate == 0.0 else 1.0 / total_rate


def full_report(
    params: CircuitParams,
    bias: BiasPoint,
    trunc: BasisTruncation | None = None,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    channels: dict[str, NoiseChannel] | None = None,
    ng_grid=None,
    dense_threshold: int | None = None,
    dispersion_trunc: BasisTruncation | None = None,
    cache=None,
) -> CoherenceReport:
    """All-channel coherence budget at one operating point.

    ``dispersion_trunc`` optionally enlarges the basis for the charge
    dispersion only, where truncation artifacts dominate first.
    """
    if channels is None:
        channels = default_channels()
    from .analysis import _solve

    ls = _solve(params, bias, trunc, 6, dense_threshold, 7, cache)

    t1: dict[str, float] = {}
    for kind in ("capacitive", "inductive", "purcell", "quasiparticle"):
        if kind in channels:
            t1[kind] = t1_channel(kind, ls, constants, channels[kind])

    tphi: dict[str, float] = {}
    if "charge" in channels:
        from .analysis import _dispersion_trunc_for
        from .hamiltonians import cos2phi_default_truncation

        d_tr = dispersion_trunc
        if d_tr is None:
            # dispersions shrink exponentially with asymmetry and fall below
            # the truncation artifact of the working basis; take the larger
            # of the requested basis and the escalation schedule
            base = trunc if trunc is not None else cos2phi_default_truncation()
            sched = _dispersion_trunc_for(params.delta_L)
            d_tr = BasisTruncation(
                max(base.N0, sched.N0), max(base.p0, sched.p0),
                max(base.q0, sched.q0),
            )
        _, eps, _ = charge_dispersion(
            params, bias.phi_ext, d_tr, ng_grid=ng_grid,
            dense_threshold=dense_threshold, cache=cache,
        )
        tphi["charge"] = tphi_charge(eps)
    if "flux" in channels:
        tphi["flux"] = tphi_flux(
            params, bias, trunc,
            sqrt_A=channels["flux"].amplitude,
            dense_threshold=dense_threshold,
            cache=cache,
        )
    if "shot" in channels:
        chi = dispersive_shift(ls)
        i0, i1 = ls.find(0, FLUXON_PLUS), ls.find(1, FLUXON_PLUS)
        omega_p = float(ls.energies[i1] - ls.energies[i0])
        tphi["shot"] = tphi_shot(
            chi, omega_p, constants.temperature, channels["shot"].amplitude, constants
        )
    if "critical_current" in channels:
        tphi["critical_current"] = tphi_critical_current(
            params, bias, trunc,
            sqrt_A_rel=channels["critical_current"].amplitude,
            dense_threshold=dense_threshold,
            cache=cache,
        )

    t1_total = _combine(t1)
    tphi_total = _combine(tphi)
    rate2 = (0.0 if math.isinf(t1_total) else 0.5 / t1_total) + (
        0.0 if math.isinf(tphi_total) else 1.0 / tphi_total
    )
    t2 = math.inf if rate2 == 0.0 else 1.0 / rate2
    return CoherenceReport(
        t1=t1,
        tphi=tphi,
        t1_total=t1_total,
        tphi_total=tphi_total,
        t2=t2,
        inputs={
            "params": {
                "eps_J": params.eps_J, "eps_C": params.eps_C,
                "eps_L": params.eps_L, "x": params.x,
                "delta_J": params.delta_J, "delta_C": params.delta_C,
                "delta_A": params.delta_A, "delta_L": params.delta_L,
            },
            "bias": {"phi_ext": bias.phi_ext, "N_g": bias.N_g},
            "trunc": (trunc.as_tuple() if trunc is not None else None),
            "temperature_K": constants.temperature,
        },
    )
