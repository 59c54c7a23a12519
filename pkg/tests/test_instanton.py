import numpy as np
import pytest

from cos2phi.hamiltonians import effective_params
from cos2phi.instanton import (
    find_minima,
    mass_matrix,
    path_approx,
    potential,
    potential_gradient,
    potential_hessian,
    reduce_to_effective,
    solve_instanton,
)
from cos2phi.model import BiasPoint, CircuitParams


class TestPotential:
    def test_saddle_plugin(self, canonical, half_flux):
        # at the junction-difference origin with the loop phase at bias,
        # both quadratic terms vanish and the junction term hits cos(pi/2)
        assert potential(canonical, half_flux, (0.0, np.pi, 0.0)) == pytest.approx(0.0)

    def test_reflection_symmetry(self, canonical):
        rng = np.random.default_rng(3)
        for _ in range(20):
            bias = BiasPoint(rng.uniform(0, 4 * np.pi), rng.uniform(0, 1))
            q = rng.uniform(-3, 3, size=3)
            u1 = potential(canonical, bias, q)
            u2 = potential(canonical, bias, (-q[0], q[1], -q[2]))
            assert u1 == pytest.approx(u2, rel=1e-12, abs=1e-12)

    def test_gradient_matches_finite_difference(self, canonical):
        bias = BiasPoint(0.93 * np.pi, 0.0)
        p = canonical.replace(delta_L=0.2, delta_J=0.1)
        q = np.array([0.3, 2.0, -0.4])
        g = potential_gradient(p, bias, q)
        h = 1e-6
        for i in range(3):
            dq = np.zeros(3)
            dq[i] = h
            fd = (potential(p, bias, q + dq) - potential(p, bias, q - dq)) / (2 * h)
            assert g[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)

    def test_hessian_matches_finite_difference(self, canonical):
        bias = BiasPoint(np.pi, 0.0)
        p = canonical.replace(delta_L=0.3)
        q = np.array([0.2, 1.5, 0.1])
        H = potential_hessian(p, bias, q)
        h = 1e-5
        for i in range(3):
            dq = np.zeros(3)
            dq[i] = h
            gfd = (
                potential_gradient(p, bias, q + dq)
                - potential_gradient(p, bias, q - dq)
            ) / (2 * h)
            assert np.allclose(H[:, i], gfd, rtol=1e-5, atol=1e-6)


class TestMassMatrix:
    def test_symmetric_limit(self, canonical):
        M = mass_matrix(canonical)
        eC, x = canonical.eps_C, canonical.x
        expect = np.array(
            [
                [1 / (4 * eC) + 1 / (8 * x * eC), 0, 1 / (8 * x * eC)],
                [0, 1 / (16 * eC), 0],
                [1 / (8 * x * eC), 0, 1 / (8 * x * eC)],
            ]
        )
        assert np.allclose(M, expect, rtol=1e-12)

    def test_positive_definite_with_disorder(self, canonical):
        M = mass_matrix(canonical.replace(delta_C=0.5))
        assert np.all(np.linalg.eigvalsh(M) > 0)


class TestMinima:
    def test_half_flux_minima(self, canonical, half_flux):
        m1, m2 = find_minima(canonical, half_flux)
        z = canonical.z
        assert m1[0] == pytest.approx(0.0, abs=1e-8)
        assert m1[1] == pytest.approx(np.pi * z / (1 + z), abs=5e-4)
        assert m2[0] == pytest.approx(np.pi, abs=1e-8)
        assert m2[1] == pytest.approx(np.pi * (2 + z) / (1 + z), abs=5e-4)
        assert abs(m1[2]) < 1e-10 and abs(m2[2]) < 1e-10
        u1 = potential(canonical, half_flux, m1)
        u2 = potential(canonical, half_flux, m2)
        assert abs(u1 - u2) < 1e-9
        # well depth is the junction scale up to the inductive displacement
        assert abs(u1 + 2 * canonical.eps_J) < 4 * canonical.eps_L

    def test_detuning_splits_ridges_linearly(self, canonical):
        diffs = []
        for dphi in (0.05, 0.1):
            m1, m2 = find_minima(canonical, BiasPoint(np.pi - dphi, 0.0))
            u1 = potential(canonical, BiasPoint(np.pi - dphi, 0.0), m1)
            u2 = potential(canonical, BiasPoint(np.pi - dphi, 0.0), m2)
            diffs.append(u2 - u1)
        slope = diffs[1] / 0.1
        assert diffs[1] == pytest.approx(2 * diffs[0], rel=1e-3)
        # exact envelope result: the ridge energies split at eps_L pi/(1+z)
        # per radian; the single-harmonic coefficient overestimates this by
        # the neglected higher odd harmonics (~15%)
        z = canonical.z
        assert slope == pytest.approx(np.pi * canonical.eps_L / (1 + z), rel=1e-3)
        c1_slope = (32.0 / (3 * np.pi)) * canonical.eps_L
        assert slope == pytest.approx(c1_slope, rel=0.16)


class TestPathApprox:
    def test_plugins(self, canonical, half_flux):
        z = canonical.z
        assert path_approx(0.0, half_flux, z) == pytest.approx(np.pi * z / (1 + z))
        assert path_approx(np.pi, half_flux, z) == pytest.approx(
            np.pi * (2 + z) / (1 + z)
        )

    def test_periodicity(self, half_flux):
        z = 1 / 15
        v = np.linspace(-np.pi, np.pi, 41)
        assert np.allclose(
            path_approx(v, half_flux, z), path_approx(v + 2 * np.pi, half_flux, z)
        )


@pytest.fixture(scope="module")
def quick_path(canonical, half_flux):
    return solve_instanton(canonical, half_flux, n_beads=129, max_outer=40)


class TestSolveInstanton:

    def test_endpoints_match_minima(self, quick_path, canonical, half_flux):
        m1, m2 = find_minima(canonical, half_flux)
        eps_b = quick_path.endpoint_offset
        assert np.linalg.norm(quick_path.coords[0] - m1) <= eps_b * 1.001
        assert np.linalg.norm(quick_path.coords[-1] - m2) <= eps_b * 1.001

    def test_monotone_time_and_continuity(self, quick_path):
        tau = quick_path.tau
        assert np.all(np.diff(tau) > 0)
        steps = np.linalg.norm(np.diff(quick_path.coords, axis=0), axis=1)
        # beads are equidistributed in the mass metric, so coordinate steps
        # stay bounded by a few mesh units
        assert steps.max() < 0.35

    def test_residual_diagnostics_reported(self, quick_path):
        r = quick_path.residual
        assert {"eom_interior_max", "energy_span", "action_grad_norm", "horizon"} <= set(r)
        # quick relaxation: stationarity is loose but finite and the
        # reconstructed horizon is meaningful
        assert r["action_grad_norm"] < 0.2
        assert np.isfinite(r["eom_interior_max"])
        assert 5.0 < r["horizon"] < 50.0

    def test_reversal_symmetry(self, quick_path, canonical, half_flux):
        # the action functional is parameterization-reversal invariant, so
        # the reversed bead chain carries the same action
        from cos2phi.instanton import _action_and_grad, mass_matrix

        M = mass_matrix(canonical)
        full = quick_path.coords
        qa, qb = full[0], full[-1]
        U0 = min(
            potential(canonical, half_flux, find_minima(canonical, half_flux)[0]),
            potential(canonical, half_flux, find_minima(canonical, half_flux)[1]),
        )
        a_fwd, _ = _action_and_grad(full[1:-1].ravel(), qa, qb, M, U0, canonical, half_flux)
        a_rev, _ = _action_and_grad(
            full[1:-1][::-1].ravel(), qb, qa, M, U0, canonical, half_flux
        )
        assert a_fwd == pytest.approx(a_rev, rel=1e-12)

    def test_z_guard(self, half_flux):
        with pytest.warns(UserWarning):
            bad = CircuitParams(eps_J=2.0, eps_C=2.0, eps_L=1.0, x=0.02)
        with pytest.raises(ValueError):
            solve_instanton(bad, half_flux, n_beads=16, max_outer=2)


class TestReduction:
    def test_odd_harmonics_vanish_at_half_flux(self, canonical, half_flux):
        ep = reduce_to_effective(canonical, half_flux, "approx")
        assert abs(ep.c1) <= 1e-10
        assert abs(ep.c3) <= 1e-10

    def test_c2_c4_match_printed_expansion(self, canonical, half_flux):
        ep = reduce_to_effective(canonical, half_flux, "approx")
        printed = effective_params(canonical, half_flux, "extended")
        assert ep.c2 == pytest.approx(printed.c2, rel=5e-3)
        assert ep.c4 == pytest.approx(printed.c4, rel=5e-2)

    def test_harmonic_decay_in_z(self, half_flux):
        for z in (0.03, 0.08, 0.12, 0.2):
            p = CircuitParams(eps_J=1.0 / z, eps_C=2.0, eps_L=1.0, x=0.02)
            ep = reduce_to_effective(p, half_flux, "approx")
            assert abs(ep.c4 / ep.c2) <= 3 * z

    def test_off_bias_single_harmonic(self, canonical):
        bias = BiasPoint(0.9 * np.pi, 0.0)
        ep = reduce_to_effective(canonical, bias, "approx")
        printed = effective_params(canonical, bias, "extended")
        assert ep.c1 == pytest.approx(printed.c1, rel=1e-2)
        assert ep.c3 == pytest.approx(printed.c3, rel=5e-2)


def test_path_csv_dump(canonical, half_flux, tmp_path):
    import io

    from cos2phi.instanton import write_path_csv

    path = solve_instanton(canonical, half_flux, n_beads=33, max_outer=3)
    buf = io.StringIO()
    write_path_csv(path, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "tau,vphi,phi,theta"
    assert len(lines) == len(path.samples) + 1
    first = [float(x) for x in lines[1].split(",")]
    assert first[0] == 0.0
    assert abs(first[1] - path.coords[0, 0]) < 1e-15
