import numpy as np
import pytest
from hypothesis import given, strategies as st

from cos2phi.constants import PhysicalConstants
from cos2phi.model import (
    BasisMismatchError,
    BasisTruncation,
    BiasPoint,
    CircuitParams,
    DimensionCapError,
    HermitianOperator,
    build_primitives,
    displaced_cosine,
    displaced_sine,
    displaced_trig_quadrature,
)
import scipy.sparse as sp


def test_constants_consistency():
    c = PhysicalConstants()
    assert c.R_K == pytest.approx(c.h / c.e**2, rel=1e-15)
    assert c.temperature == pytest.approx(0.016)
    # aluminum gap default around 180 ueV
    assert c.delta_gap / 1.602176634e-19 == pytest.approx(181e-6, rel=0.02)


class TestCircuitParams:
    def test_positivity(self):
        with pytest.raises(ValueError):
            CircuitParams(eps_J=-1.0, eps_C=2.0, eps_L=1.0, x=0.02)
        with pytest.raises(ValueError):
            CircuitParams(eps_J=15.0, eps_C=2.0, eps_L=1.0, x=0.0)

    def test_delta_ranges(self):
        with pytest.raises(ValueError):
            CircuitParams(15.0, 2.0, 1.0, 0.02, delta_L=1.0)
        with pytest.raises(ValueError):
            CircuitParams(15.0, 2.0, 1.0, 0.02, delta_J=-0.1)

    def test_area_disorder_exclusive(self):
        with pytest.raises(ValueError):
            CircuitParams(15.0, 2.0, 1.0, 0.02, delta_A=0.2, delta_J=0.1)
        p = CircuitParams(15.0, 2.0, 1.0, 0.02, delta_A=0.2)
        assert p.delta_J_eff == 0.2 and p.delta_C_eff == 0.2

    def test_z_warning(self):
        with pytest.warns(UserWarning, match="semiclassical"):
            CircuitParams(eps_J=3.0, eps_C=2.0, eps_L=1.0, x=0.02)

    def test_dressings(self):
        p = CircuitParams(15.0, 2.0, 1.0, 0.02, delta_L=0.6, delta_C=0.3)
        assert p.eps_L_dressed == pytest.approx(1.0 / (1 - 0.36))
        assert p.eps_C_dressed == pytest.approx(2.0 / (1 - 0.09))


class TestBiasPoint:
    def test_finite(self):
        with pytest.raises(ValueError):
            BiasPoint(np.inf, 0.0)

    def test_folding(self):
        assert BiasPoint(np.pi).phi_ext_folded == pytest.approx(np.pi)
        assert BiasPoint(3.5 * np.pi).phi_ext_folded == pytest.approx(0.5 * np.pi)
        assert BiasPoint(-0.3).phi_ext_folded == pytest.approx(0.3)

    def test_reduction_explicit_not_silent(self):
        b = BiasPoint(5 * np.pi, 1.25)
        assert b.phi_ext == pytest.approx(5 * np.pi)  # untouched
        r = b.reduced()
        assert r.phi_ext == pytest.approx(np.pi)
        assert r.N_g == pytest.approx(0.25)


class TestBasisTruncation:
    def test_dim(self):
        assert BasisTruncation(7, 7, 30).dim == 15 * 8 * 31

    def test_validation(self):
        with pytest.raises(ValueError):
            BasisTruncation(0, 5, 5)


class TestOperatorAlgebra:
    def test_fingerprint_mismatch_rejected(self, canonical):
        p1 = build_primitives(BasisTruncation(2, 2, 2), canonical)
        p2 = build_primitives(BasisTruncation(2, 2, 3), canonical)
        with pytest.raises(BasisMismatchError):
            p1.N + p2.N

    def test_dressing_changes_fingerprint(self, canonical):
        tr = BasisTruncation(2, 2, 2)
        p1 = build_primitives(tr, canonical)
        p2 = build_primitives(tr, canonical.replace(delta_L=0.5))
        assert p1.fingerprint != p2.fingerprint

    def test_hermiticity_enforced(self):
        bad = sp.csr_matrix(np.array([[0.0, 1.0], [0.5, 0.0]]))
        with pytest.raises(ValueError, match="hermiticity"):
            HermitianOperator(bad, "fp")

    def test_dimension_cap(self, canonical):
        with pytest.raises(DimensionCapError):
            build_primitives(BasisTruncation(60, 60, 60), canonical)


class TestPrimitives:
    def test_charge_number_minimal(self, canonical):
        prim = build_primitives(BasisTruncation(1, 0, 0), canonical)
        assert np.allclose(prim.N.toarray(), np.diag([-1.0, 0.0, 1.0]))

    def test_cos_hop_minimal(self, canonical):
        prim = build_primitives(BasisTruncation(1, 0, 0), canonical)
        m = prim.cos_phi_hop.toarray()
        assert np.count_nonzero(m) == 4
        assert np.allclose(m[m != 0], 0.5)

    def test_ladder_commutator(self, canonical):
        p0 = 6
        prim = build_primitives(BasisTruncation(1, p0, 0), canonical)
        comm = (prim.a @ prim.adag - prim.adag @ prim.a).toarray()
        eye = prim.identity.toarray()
        # deviation confined to the truncation corner p = p0
        diff = comm - eye
        nb = 1  # q0 = 0
        corner = [(n * (p0 + 1) + p0) * nb for n in range(3)]
        mask = np.ones_like(diff, dtype=bool)
        for c in corner:
            mask[c, c] = False
        assert np.abs(diff[mask]).max() < 1e-14
        for c in corner:
            assert diff[c, c] == pytest.approx(-(p0 + 1))

    def test_zpf_values_reference_point(self, canonical):
        prim = build_primitives(BasisTruncation(2, 2, 2), canonical)
        assert prim.phi_zpf == pytest.approx(2.0, rel=1e-12)
        assert prim.eta_zpf == pytest.approx(0.5 * (1 / 0.04) ** 0.25, rel=1e-12)
        assert prim.eta_zpf == pytest.approx(1.118, rel=1e-3)
        assert prim.omega_b == pytest.approx(0.8, rel=1e-12)

    def test_eta_theta_conjugate(self, canonical):
        nb = 9
        prim = build_primitives(BasisTruncation(1, 0, nb - 1), canonical)
        comm = (prim.theta @ prim.eta - prim.eta @ prim.theta).toarray()
        # [theta, eta] = i on each charge block, up to the truncation corner
        block = comm[:nb, :nb]
        inner = block[:-1, :-1]
        assert np.abs(inner - 1j * np.eye(nb - 1)).max() < 1e-12

    def test_all_primitives_hermitian(self, canonical):
        prim = build_primitives(BasisTruncation(2, 3, 4), canonical)
        for op in (prim.N, prim.cos_phi_hop, prim.sin_phi_hop, prim.n,
                   prim.dphi, prim.theta, prim.eta, prim.parity):
            m = op.toarray()
            assert np.abs(m - m.conj().T).max() <= 1e-12 * max(np.abs(m).max(), 1e-300)


class TestDisplacedCosine:
    def test_zero_zpf_constant(self):
        for off in (0.0, 1.3, np.pi):
            m = displaced_cosine(0.0, off, 5)
            assert np.allclose(m, np.cos(off / 2) * np.eye(6))

    def test_vacuum_element(self):
        lam = 0.7 / 2
        m = displaced_cosine(0.7, 0.0, 8)
        assert m[0, 0] == pytest.approx(np.exp(-lam**2 / 2), rel=1e-12)

    def test_offset_two_pi_negates(self):
        m0 = displaced_cosine(1.1, 0.0, 10)
        m2 = displaced_cosine(1.1, 2 * np.pi, 10)
        assert np.abs(m0 + m2).max() < 1e-12

    def test_dual_construction_interior(self):
        # closed form vs padded quadrature oracle; the last 10% of rows are
        # excluded per the stated tolerance region, though the padded oracle
        # agrees everywhere
        p0 = 60
        keep = int(0.9 * (p0 + 1))
        for zpf, off in ((3.0, 0.0), (2.0, np.pi), (1.0, 0.4)):
            a = displaced_cosine(zpf, off, p0)[:keep, :keep]
            b = displaced_trig_quadrature(zpf, off, p0, "cos", pad=60)[:keep, :keep]
            assert np.abs(a - b).max() < 1e-9
            a = displaced_sine(zpf, off, p0)[:keep, :keep]
            b = displaced_trig_quadrature(zpf, off, p0, "sin", pad=60)[:keep, :keep]
            assert np.abs(a - b).max() < 1e-9

    @given(
        zpf=st.floats(0.05, 3.0),
        off=st.floats(-2 * np.pi, 2 * np.pi),
        p0=st.integers(2, 40),
    )
    def test_dual_construction_property(self, zpf, off, p0):
        keep = max(1, int(0.9 * (p0 + 1)))
        a = displaced_cosine(zpf, off, p0)[:keep, :keep]
        b = displaced_trig_quadrature(zpf, off, p0, "cos", pad=60)[:keep, :keep]
        assert np.abs(a - b).max() < 1e-9

    def test_sine_parity_odd_at_zero_offset(self):
        # sin of the pure quadrature anticommutes with Fock parity
        p0 = 12
        m = displaced_sine(1.3, 0.0, p0)
        par = np.diag((-1.0) ** np.arange(p0 + 1))
        assert np.abs(par @ m @ par + m).max() < 1e-12

    def test_negative_zpf_rejected(self):
        with pytest.raises(ValueError):
            displaced_cosine(-0.1, 0.0, 4)
