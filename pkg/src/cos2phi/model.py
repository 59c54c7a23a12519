"""Domain types and the primitive operator algebra.

The circuit has one compact junction-difference mode (charge basis, Cooper
pair number ``N``), one loop-sum phase mode ``phi`` (oscillator ``a``), and
one inductance-imbalance mode ``theta`` (oscillator ``b``).  Everything a
Hamiltonian needs is built here as sparse matrices on the tensor product
basis ``|N p q>`` with ``|N| <= N0``, ``p <= p0``, ``q <= q0``.

Zero point amplitudes follow from the quadratic sector,

    phi_zpf = (8 eps_C / eps_L)**0.25        loop-sum mode
    eta_zpf = 0.5 (eps_L / (x eps_C))**0.25  imbalance charge

with disorder-dressed coefficients substituted where applicable.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.special import eval_genlaguerre, gammaln

__all__ = [
    "CircuitParams",
    "BiasPoint",
    "BasisTruncation",
    "Operator",
    "HermitianOperator",
    "Primitives",
    "build_primitives",
    "displaced_cosine",
    "displaced_sine",
    "displaced_trig_quadrature",
    "DimensionCapError",
    "BasisMismatchError",
]

HERMITICITY_RTOL = 1e-12
#: hard cap on tensor product dimension; beyond this a solve is not desk scale
DEFAULT_DIM_CAP = 400_000


class DimensionCapError(RuntimeError):
    """Tensor-product dimension exceeds the configured resource cap."""


class BasisMismatchError(ValueError):
    """Arithmetic between operators built on different bases."""


@dataclass(frozen=True)
class CircuitParams:
    """Circuit energy scales (GHz, meaning E/h) and disorder parameters.

    ``x`` is the junction-to-shunt capacitance ratio.  Each ``delta`` is a
    dimensionless asymmetry in [0, 1).  Area disorder ``delta_A`` implies
    correlated junction-energy and junction-capacitance asymmetry (the two
    junction areas are (1 +/- delta_A) times nominal, keeping the product
    of tunneling and charging energy fixed per junction), so it may not be
    combined with an independent ``delta_J`` or ``delta_C``.
    """

    eps_J: float
    eps_C: float
    eps_L: float
    x: float
    delta_J: float = 0.0
    delta_C: float = 0.0
    delta_A: float = 0.0
    delta_L: float = 0.0

    def __post_init__(self) -> None:
        for name in ("eps_J", "eps_C", "eps_L", "x"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("delta_J", "delta_C", "delta_A", "delta_L"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.delta_A != 0.0 and (self.delta_J != 0.0 or self.delta_C != 0.0):
            raise ValueError(
                "delta_A encodes correlated junction disorder; "
                "set either delta_A or (delta_J, delta_C), not both"
            )
        if self.z >= 0.3:
            warnings.warn(
                f"eps_L/eps_J = {self.z:.3f} >= 0.3: the semiclassical "
                "reduction degrades as the inductive energy approaches the "
                "junction energy",
                stacklevel=2,
            )

    @property
    def z(self) -> float:
        """Inductive-to-junction energy ratio."""
        return self.eps_L / self.eps_J

    @property
    def delta_J_eff(self) -> float:
        """Junction-energy asymmetry, whether direct or via area disorder."""
        return self.delta_A if self.delta_A != 0.0 else self.delta_J

    @property
    def delta_C_eff(self) -> float:
        """Junction-capacitance asymmetry, whether direct or via area disorder."""
        return self.delta_A if self.delta_A != 0.0 else self.delta_C

    @property
    def eps_L_dressed(self) -> float:
        """eps_L / (1 - delta_L^2); the quadratic inductive coefficient."""
        return self.eps_L / (1.0 - self.delta_L**2)

    @property
    def eps_C_dressed(self) -> float:
        """eps_C / (1 - delta_C^2); the junction charging coefficient."""
        d = self.delta_C_eff
        return self.eps_C / (1.0 - d**2)

    def replace(self, **kw) -> "CircuitParams":
        from dataclasses import replace as _replace

        return _replace(self, **kw)


@dataclass(frozen=True)
class BiasPoint:
    """External flux (radians) and offset charge (Cooper pairs)."""

    phi_ext: float = np.pi
    N_g: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.phi_ext) or not np.isfinite(self.N_g):
            raise ValueError("bias values must be finite")

    @property
    def phi_ext_folded(self) -> float:
        """|phi_ext - 4 pi round(phi_ext / 4 pi)|: flux folded into [0, 2 pi]."""
        p = self.phi_ext
        return abs(p - 4 * np.pi * np.round(p / (4 * np.pi)))

    def reduced(self) -> "BiasPoint":
        """Canonical representative with N_g mod 1 and phi_ext mod 4 pi.

        Offered explicitly; no operation applies this reduction silently.
        """
        return BiasPoint(self.phi_ext % (4 * np.pi), self.N_g % 1.0)


@dataclass(frozen=True)
class BasisTruncation:
    """Charge half-width N0 and Fock cutoffs p0 (phi mode), q0 (theta mode)."""

    N0: int = 7
    p0: int = 7
    q0: int = 30

    def __post_init__(self) -> None:
        if self.N0 < 1 or self.p0 < 0 or self.q0 < 0:
            raise ValueError("require N0 >= 1, p0 >= 0, q0 >= 0")

    @property
    def dim(self) -> int:
        return (2 * self.N0 + 1) * (self.p0 + 1) * (self.q0 + 1)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.N0, self.p0, self.q0)


def _fingerprint(trunc: BasisTruncation, scales: Iterable[float]) -> str:
    """Hash of the truncation plus the mode scales that define the basis.

    Two operators interoperate only if both the truncation and the
    oscillator frequencies / zero point amplitudes match, since disorder
    dressing re-adapts the basis.
    """
    payload = ",".join([repr(trunc.as_tuple())] + [f"{s:.15e}" for s in scales])
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class Operator:
    """Sparse matrix on a fingerprinted basis.  Not necessarily Hermitian."""

    __slots__ = ("matrix", "dim", "fingerprint")

    def __init__(self, matrix: sp.spmatrix, fingerprint: str):
        self.matrix = matrix.tocsr()
        self.dim = matrix.shape[0]
        self.fingerprint = fingerprint

    def _check(self, other: "Operator") -> None:
        if self.fingerprint != other.fingerprint:
            raise BasisMismatchError(
                "operators built on different bases cannot be combined"
            )

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix + other.matrix, self.fingerprint)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix - other.matrix, self.fingerprint)

    def __mul__(self, c: complex) -> "Operator":
        return Operator(self.matrix * c, self.fingerprint)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix @ other.matrix, self.fingerprint)

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T.tocsr(), self.fingerprint)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def expectation(self, vec: np.ndarray) -> complex:
        return complex(np.vdot(vec, self.matrix @ vec))

    def matrix_element(self, bra: np.ndarray, ket: np.ndarray) -> complex:
        return complex(np.vdot(bra, self.matrix @ ket))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermitize(self) -> "HermitianOperator":
        return HermitianOperator(self.matrix, self.fingerprint)


class HermitianOperator(Operator):
    """Operator validated against the hermiticity tolerance at construction."""

    def __init__(self, matrix: sp.spmatrix, fingerprint: str):
        super().__init__(matrix, fingerprint)
        dev = sp.csr_matrix(self.matrix - self.matrix.conj().T)
        scale = max(np.abs(self.matrix.data).max() if self.matrix.nnz else 0.0, 1e-300)
        if dev.nnz and np.abs(dev.data).max() > HERMITICITY_RTOL * scale:
            raise ValueError(
                "matrix fails hermiticity tolerance: "
                f"max|H - H^| = {np.abs(dev.data).max():.3e} vs scale {scale:.3e}"
            )

    def __add__(self, other: Operator) -> Operator:
        out = super().__add__(other)
        return out.hermitize() if isinstance(other, HermitianOperator) else out

    def __sub__(self, other: Operator) -> Operator:
        out = super().__sub__(other)
        return out.hermitize() if isinstance(other, HermitianOperator) else out

    def __mul__(self, c: complex) -> Operator:
        out = super().__mul__(c)
        return out.hermitize() if np.isreal(c) else out

    __rmul__ = __mul__

    def is_numerically_real(self) -> bool:
        return bool(np.abs(self.matrix.data.imag).max() == 0.0) if self.matrix.nnz else True


# ---------------------------------------------------------------------------
# displaced cosine / sine on a Fock space
# ---------------------------------------------------------------------------

def _displacement_amplitudes(lam: float, p0: int) -> np.ndarray:
    """|<m| D(i lam) |n>| amplitudes via the associated Laguerre closed form.

    Returns the real array A[m, n] = exp(-lam^2/2) sqrt(n!/m!) lam^(m-n)
    L_n^{(m-n)}(lam^2) for m >= n, symmetrized.  Log-gamma handles the
    factorial ratio so p0 up to a few hundred stays stable.
    """
    d = p0 + 1
    A = np.zeros((d, d))
    lam2 = lam * lam
    for m in range(d):
        for n in range(m + 1):
            k = m - n
            ln_amp = 0.5 * (gammaln(n + 1) - gammaln(m + 1)) - 0.5 * lam2
            lag = eval_genlaguerre(n, k, lam2)
            val = np.exp(ln_amp) * lam**k * lag
            A[m, n] = val
            A[n, m] = val
    return A


def displaced_cosine(phi_zpf: float, offset: float, p0: int) -> np.ndarray:
    """Exact matrix of cos(phi_zpf (a + a^)/2 + offset/2) on p0+1 Fock states.

    Built from the closed-form displacement matrix elements; the phase of
    each (m, n) element is cos(offset/2 + (m-n) pi/2), which keeps the
    matrix real symmetric.
    """
    if phi_zpf < 0:
        raise ValueError("phi_zpf must be nonnegative")
    lam = 0.5 * phi_zpf
    A = _displacement_amplitudes(lam, p0)
    m = np.arange(p0 + 1)
    phase = np.cos(0.5 * offset + 0.5 * np.pi * np.abs(m[:, None] - m[None, :]))
    return A * phase


def displaced_sine(phi_zpf: float, offset: float, p0: int) -> np.ndarray:
    """Exact matrix of sin(phi_zpf (a + a^)/2 + offset/2); real symmetric."""
    if phi_zpf < 0:
        raise ValueError("phi_zpf must be nonnegative")
    lam = 0.5 * phi_zpf
    A = _displacement_amplitudes(lam, p0)
    m = np.arange(p0 + 1)
    phase = np.sin(0.5 * offset + 0.5 * np.pi * np.abs(m[:, None] - m[None, :]))
    return A * phase


def displaced_trig_quadrature(
    phi_zpf: float, offset: float, p0: int, kind: str = "cos", pad: int = 0
) -> np.ndarray:
    """Independent construction: diagonalize the quadrature, apply the trig map.

    X = phi_zpf (a + a^)/2 is real symmetric tridiagonal; with X = V D V^T the
    operator is V f(D + offset/2) V^T.  Serves as the oracle for the closed
    form above.  Rows near the truncation edge are contaminated; ``pad``
    enlarges the working space before restricting to (p0+1) rows so the
    oracle is clean over the whole requested block.
    """
    d = p0 + 1 + pad
    off = 0.5 * phi_zpf * np.sqrt(np.arange(1, d))
    X = np.diag(off, 1) + np.diag(off, -1)
    evals, V = np.linalg.eigh(X)
    f = np.cos if kind == "cos" else np.sin
    full = (V * f(evals + 0.5 * offset)) @ V.T
    return full[: p0 + 1, : p0 + 1]


# ---------------------------------------------------------------------------
# primitive operator set on the full tensor product space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Primitives:
    """Operator toolbox on the |N p q> basis for one (params, truncation).

    Mode conventions (dressed coefficients where disorder applies):
      phi   = phi_ext + phi_zpf (a + a^)   loop-sum phase; ``dphi`` is the
                                           dynamical part phi - phi_ext
      n     = i n_zpf (a^ - a)             its conjugate charge
      theta = theta_zpf (b + b^)
      eta   = i eta_zpf (b^ - b)
    """

    trunc: BasisTruncation
    fingerprint: str
    omega_a: float
    omega_b: float
    phi_zpf: float
    theta_zpf: float
    eta_zpf: float
    identity: HermitianOperator
    N: HermitianOperator
    cos_phi_hop: HermitianOperator
    sin_phi_hop: HermitianOperator
    a: Operator
    adag: Operator
    b: Operator
    bdag: Operator
    num_a: HermitianOperator
    num_b: HermitianOperator
    n: HermitianOperator
    dphi: HermitianOperator
    theta: HermitianOperator
    eta: HermitianOperator
    parity: HermitianOperator

    def wrap(self, matrix: sp.spmatrix) -> Operator:
        return Operator(matrix, self.fingerprint)

    def wrap_hermitian(self, matrix: sp.spmatrix) -> HermitianOperator:
        return HermitianOperator(matrix, self.fingerprint)

    def embed_charge(self, block: np.ndarray | sp.spmatrix) -> sp.csr_matrix:
        na, nb = self.trunc.p0 + 1, self.trunc.q0 + 1
        return sp.kron(
            sp.kron(sp.csr_matrix(block), sp.identity(na), format="csr"),
            sp.identity(nb),
            format="csr",
        )

    def embed_a(self, block: np.ndarray | sp.spmatrix) -> sp.csr_matrix:
        nN, nb = 2 * self.trunc.N0 + 1, self.trunc.q0 + 1
        return sp.kron(
            sp.kron(sp.identity(nN), sp.csr_matrix(block), format="csr"),
            sp.identity(nb),
            format="csr",
        )

    def embed_b(self, block: np.ndarray | sp.spmatrix) -> sp.csr_matrix:
        nN, na = 2 * self.trunc.N0 + 1, self.trunc.p0 + 1
        return sp.kron(
            sp.identity(nN * na), sp.csr_matrix(block), format="csr"
        )

    def kron3(
        self,
        cb: np.ndarray | sp.spmatrix,
        ab: np.ndarray | sp.spmatrix,
        bb: np.ndarray | sp.spmatrix,
    ) -> sp.csr_matrix:
        return sp.kron(
            sp.kron(sp.csr_matrix(cb), sp.csr_matrix(ab), format="csr"),
            sp.csr_matrix(bb),
            format="csr",
        )


def _ladder(dim: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    v = np.sqrt(np.arange(1, dim))
    low = sp.diags([v], [1], shape=(dim, dim)).tocsr()
    return low, low.T.tocsr()


def build_primitives(
    trunc: BasisTruncation,
    params: CircuitParams,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> Primitives:
    """Assemble the primitive operator set on the tensor product basis.

    Oscillator frequencies and zero point amplitudes use the disorder
    dressed coefficients of ``params`` so that the basis stays adapted to
    the quadratic sector for any asymmetry.
    """
    if trunc.dim > dim_cap:
        raise DimensionCapError(
            f"dim = {trunc.dim} exceeds the cap {dim_cap}; raise dim_cap "
            "explicitly if this size is intended"
        )
    eL = params.eps_L_dressed
    eC = params.eps_C_dressed
    x_eC = params.x * params.eps_C  # shunt scale, never dressed

    omega_a = np.sqrt(8.0 * eL * eC)
    omega_b = np.sqrt(16.0 * x_eC * eL)
    phi_zpf = (8.0 * eC / eL) ** 0.25
    theta_zpf = (x_eC / eL) ** 0.25
    eta_zpf = 0.5 * (eL / x_eC) ** 0.25

    fp = _fingerprint(trunc, (omega_a, omega_b, phi_zpf, theta_zpf, eta_zpf))

    nN = 2 * trunc.N0 + 1
    na, nb = trunc.p0 + 1, trunc.q0 + 1
    Nvals = np.arange(-trunc.N0, trunc.N0 + 1).astype(float)

    hop = sp.diags([np.ones(nN - 1)], [1], shape=(nN, nN)).tocsr()
    cos_hop = 0.5 * (hop + hop.T)
    sin_hop = (hop - hop.T) * (1.0 / (2.0j))

    a1, adag1 = _ladder(na)
    b1, bdag1 = _ladder(nb)

    def k3(cb, ab, bb):
        return sp.kron(sp.kron(sp.csr_matrix(cb), sp.csr_matrix(ab), format="csr"),
                       sp.csr_matrix(bb), format="csr")

    IN, Ia, Ib = sp.identity(nN), sp.identity(na), sp.identity(nb)
    eye = k3(IN, Ia, Ib)

    Nmat = k3(sp.diags(Nvals), Ia, Ib)
    cosp = k3(cos_hop, Ia, Ib)
    sinp = k3(sin_hop, Ia, Ib)
    a_full = k3(IN, a1, Ib)
    adag_full = k3(IN, adag1, Ib)
    b_full = k3(IN, Ia, b1)
    bdag_full = k3(IN, Ia, bdag1)
    num_a = k3(IN, sp.diags(np.arange(na).astype(float)), Ib)
    num_b = k3(IN, Ia, sp.diags(np.arange(nb).astype(float)))

    n_zpf = 1.0 / (2.0 * phi_zpf)
    n_full = 1j * n_zpf * (adag_full - a_full)
    dphi = phi_zpf * (a_full + adag_full)
    theta = theta_zpf * (b_full + bdag_full)
    eta = 1j * eta_zpf * (bdag_full - b_full)

    # combined Cooper-pair parity: (-1)^N on the charge index times the
    # Fock parity of the loop-sum mode; this is the symmetry the junction
    # term preserves at half flux
    parity = k3(
        sp.diags((-1.0) ** np.arange(-trunc.N0, trunc.N0 + 1)),
        sp.diags((-1.0) ** np.arange(na)),
        Ib,
    )

    return Primitives(
        trunc=trunc,
        fingerprint=fp,
        omega_a=omega_a,
        omega_b=omega_b,
        phi_zpf=phi_zpf,
        theta_zpf=theta_zpf,
        eta_zpf=eta_zpf,
        identity=HermitianOperator(eye, fp),
        N=HermitianOperator(Nmat, fp),
        cos_phi_hop=HermitianOperator(cosp, fp),
        sin_phi_hop=HermitianOperator(sinp, fp),
        a=Operator(a_full, fp),
        adag=Operator(adag_full, fp),
        b=Operator(b_full, fp),
        bdag=Operator(bdag_full, fp),
        num_a=HermitianOperator(num_a, fp),
        num_b=HermitianOperator(num_b, fp),
        n=HermitianOperator(n_full, fp),
        dphi=HermitianOperator(dphi, fp),
        theta=HermitianOperator(theta, fp),
        eta=HermitianOperator(eta, fp),
        parity=HermitianOperator(parity, fp),
    )
