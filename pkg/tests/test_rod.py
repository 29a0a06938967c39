import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from hexrod.geom3 import Pose, hat, rotation_defect
from hexrod.rod import (CrossSection, IntegrationFailure, IntegratorConfig,
                        Material, RodParams, RodState, distributed_load,
                        integrate_rod, rod_ode_rhs, shear_modulus,
                        stiffness_matrices, strains_from_wrench)

RNG = np.random.default_rng(20240902)

# Ti6Al-4V rod used throughout: 4 mm diameter, 530 mm, pre-curved at 0.3005 m
TI_E = 110.3e9
TI_NU = 0.31
TI_RHO = 4428.8
DIAMETER = 0.004
LENGTH = 0.53
CURVE_RADIUS = 0.3005


def titanium_rod(u_star=(0.0, 0.0, 0.0), gravity=(0.0, 0.0, 0.0)) -> RodParams:
    return RodParams(
        length=LENGTH,
        section=CrossSection(DIAMETER),
        material=Material(TI_E, TI_NU, TI_RHO),
        u_star=np.asarray(u_star, dtype=float),
        gravity=np.asarray(gravity, dtype=float),
    )


def curved_rod(gravity=(0.0, 0.0, 0.0)) -> RodParams:
    return titanium_rod(u_star=(1.0 / CURVE_RADIUS, 0.0, 0.0), gravity=gravity)


def wrench_from_strains(rotation, v, u, params):
    # forward constitutive law, the independent counterpart of
    # strains_from_wrench
    kse = np.diag(stiffness_matrices(params).shear_extension)
    kbt = np.diag(stiffness_matrices(params).bending_torsion)
    n = rotation @ (kse * (v - params.v_star))
    m = rotation @ (kbt * (u - params.u_star))
    return n, m


class TestShearModulus:
    def test_constructed_exact_case(self):
        assert shear_modulus(Material(2.6, 0.3, 1.0)) == pytest.approx(1.0, abs=1e-15)

    def test_titanium(self):
        # hand evaluation: 110.3e9 / (2 * 1.31)
        assert shear_modulus(Material(TI_E, TI_NU, TI_RHO)) == pytest.approx(
            110.3e9 / 2.62, rel=1e-14)
        assert shear_modulus(Material(TI_E, TI_NU, TI_RHO)) == pytest.approx(
            4.2099e10, rel=1e-4)

    def test_zero_poisson(self):
        assert shear_modulus(Material(7.0, 0.0, 1.0)) == pytest.approx(3.5, rel=1e-15)


class TestSection:
    def test_circular_formulas(self):
        sec = CrossSection(DIAMETER)
        assert sec.area == pytest.approx(math.pi * DIAMETER ** 2 / 4.0, rel=1e-15)
        assert sec.area == pytest.approx(1.25664e-5, rel=1e-5)
        assert sec.second_moment == pytest.approx(1.25664e-11, rel=1e-5)
        assert sec.polar_moment == 2.0 * sec.second_moment

    def test_stiffness_products(self):
        stiff = stiffness_matrices(titanium_rod())
        ea = stiff.shear_extension[2, 2]
        ei = stiff.bending_torsion[0, 0]
        assert ea == pytest.approx(1.3861e6, rel=1e-4)
        assert ei == pytest.approx(1.3861, rel=1e-4)
        ga = stiff.shear_extension[0, 0]
        assert ga == pytest.approx(shear_modulus(Material(TI_E, TI_NU, TI_RHO))
                                   * CrossSection(DIAMETER).area, rel=1e-14)

    def test_diameter_scaling_law(self):
        base = stiffness_matrices(titanium_rod())
        doubled = stiffness_matrices(RodParams(
            length=LENGTH, section=CrossSection(2 * DIAMETER),
            material=Material(TI_E, TI_NU, TI_RHO)))
        np.testing.assert_allclose(np.diag(doubled.shear_extension),
                                   4.0 * np.diag(base.shear_extension), rtol=1e-13)
        np.testing.assert_allclose(np.diag(doubled.bending_torsion),
                                   16.0 * np.diag(base.bending_torsion), rtol=1e-13)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            CrossSection(0.0)
        with pytest.raises(ValueError):
            Material(-1.0, 0.3, 1.0)
        with pytest.raises(ValueError):
            Material(1.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            RodParams(length=0.0, section=CrossSection(0.004),
                      material=Material(1.0, 0.3, 1.0))


class TestConstitutive:
    def test_unloaded_returns_reference_strains(self):
        params = curved_rod()
        v, u = strains_from_wrench(np.eye(3), np.zeros(3), np.zeros(3), params)
        assert np.array_equal(v, params.v_star)
        assert np.array_equal(u, params.u_star)

    def test_forward_inverse_roundtrip_strain_side(self):
        # strain -> wrench -> strain on the titanium rod
        from hexrod.geom3 import rpy_to_rotation
        params = curved_rod()
        for _ in range(200):
            rotation = rpy_to_rotation(*RNG.uniform(-math.pi, math.pi, 3))
            v = params.v_star + RNG.normal(size=3) * 0.05
            u = params.u_star + RNG.normal(size=3) * 2.0
            n, m = wrench_from_strains(rotation, v, u, params)
            v2, u2 = strains_from_wrench(rotation, n, m, params)
            np.testing.assert_allclose(v2, v, rtol=0, atol=1e-12)
            np.testing.assert_allclose(u2, u, rtol=0, atol=1e-12)

    def test_wrench_roundtrip_unit_scale_rods(self):
        # wrench -> strain -> wrench; unit-scale sections keep the identity
        # exact to 1e-12 (roundoff scales with the stiffness diagonal)
        from hexrod.geom3 import rpy_to_rotation
        for _ in range(1000):
            params = RodParams(
                length=1.0,
                section=CrossSection(RNG.uniform(0.05, 0.3)),
                material=Material(RNG.uniform(1.0, 100.0), RNG.uniform(0.0, 0.45),
                                  1.0),
                u_star=RNG.normal(size=3),
                v_star=np.array([0.0, 0.0, 1.0]))
            rotation = rpy_to_rotation(*RNG.uniform(-math.pi, math.pi, 3))
            n = RNG.normal(size=3)
            m = RNG.normal(size=3)
            v, u = strains_from_wrench(rotation, n, m, params)
            n2, m2 = wrench_from_strains(rotation, v, u, params)
            np.testing.assert_allclose(n2, n, rtol=0, atol=1e-12)
            np.testing.assert_allclose(m2, m, rtol=0, atol=1e-12)

    def test_axial_extension_one_percent(self):
        params = titanium_rod()
        ea = stiffness_matrices(params).shear_extension[2, 2]
        v, u = strains_from_wrench(np.eye(3), np.array([0.0, 0.0, ea * 0.01]),
                                   np.zeros(3), params)
        np.testing.assert_allclose(v, [0.0, 0.0, 1.01], rtol=0, atol=1e-12)
        np.testing.assert_allclose(u, np.zeros(3), atol=1e-15)


class TestDistributedLoad:
    def test_zero_gravity(self):
        assert np.array_equal(distributed_load(titanium_rod()), np.zeros(3))

    def test_titanium_under_gravity(self):
        # hand product: 4428.8 * pi*(0.004)^2/4 * 9.81 = 0.545965 N/m
        load = distributed_load(titanium_rod(gravity=(0.0, 0.0, -9.81)))
        np.testing.assert_allclose(load, [0.0, 0.0, -0.545965], rtol=0, atol=1e-6)

    def test_density_scaling(self):
        single = distributed_load(RodParams(
            length=LENGTH, section=CrossSection(DIAMETER),
            material=Material(TI_E, TI_NU, TI_RHO), gravity=(0.0, 0.0, -9.81)))
        double = distributed_load(RodParams(
            length=LENGTH, section=CrossSection(DIAMETER),
            material=Material(TI_E, TI_NU, 2 * TI_RHO), gravity=(0.0, 0.0, -9.81)))
        np.testing.assert_allclose(double, 2.0 * single, rtol=1e-15)


class TestOdeRhs:
    def _state(self, params, n=None, m=None):
        return RodState(0.0, Pose.identity(),
                        np.zeros(3) if n is None else np.asarray(n, dtype=float),
                        np.zeros(3) if m is None else np.asarray(m, dtype=float))

    def test_straight_unloaded(self):
        params = titanium_rod()
        dp, d_rot, dn, dm = rod_ode_rhs(self._state(params), params)
        np.testing.assert_allclose(dp, [0.0, 0.0, 1.0], atol=1e-15)
        assert np.array_equal(d_rot, np.zeros((3, 3)))
        assert np.array_equal(dn, np.zeros(3))
        np.testing.assert_allclose(dm, np.zeros(3), atol=1e-15)

    def test_precurved_unloaded_rotation_rate(self):
        params = curved_rod()
        _, d_rot, _, _ = rod_ode_rhs(self._state(params), params)
        np.testing.assert_allclose(
            d_rot, hat(np.array([1.0 / CURVE_RADIUS, 0.0, 0.0])), atol=1e-15)

    def test_no_gravity_means_constant_force(self):
        params = curved_rod()
        state = self._state(params, n=RNG.normal(size=3), m=RNG.normal(size=3))
        _, _, dn, _ = rod_ode_rhs(state, params)
        assert np.array_equal(dn, np.zeros(3))


def arc_tip_oracle(length, radius):
    # constant-curvature arc about local +x starting upright: the centerline
    # sweeps toward local -y while rising
    angle = length / radius
    return np.array([0.0, -radius * (1.0 - math.cos(angle)),
                     radius * math.sin(angle)])


class TestIntegrateRod:
    def test_straight_rod_tip(self):
        tip, samples = integrate_rod(Pose.identity(), np.zeros(3), np.zeros(3),
                                     titanium_rod())
        assert np.abs(tip.pose.position - [0.0, 0.0, LENGTH]).max() <= 1e-10
        assert np.linalg.norm(tip.pose.rotation - np.eye(3)) <= 1e-10
        assert len(samples) == 50
        assert samples[0].s == 0.0 and samples[-1].s == LENGTH

    def test_arc_oracle(self):
        tip, _ = integrate_rod(Pose.identity(), np.zeros(3), np.zeros(3),
                               curved_rod(), n_samples=0)
        expected = arc_tip_oracle(LENGTH, CURVE_RADIUS)
        assert np.abs(tip.pose.position - expected).max() <= 1e-9

    def test_cantilever_small_deflection(self):
        # straight cantilever along z with transverse tip load F; the base
        # wrench follows from rigid statics: n0 = F, m0 = (tip - base) x F
        params = titanium_rod()
        ei = stiffness_matrices(params).bending_torsion[0, 0]
        force = 0.01 * ei / LENGTH ** 2      # F L^2 / (EI) = 0.01
        n0 = np.array([force, 0.0, 0.0])
        m0 = np.cross(np.array([0.0, 0.0, LENGTH]), n0)
        tip, _ = integrate_rod(Pose.identity(), n0, m0, params, n_samples=0)
        euler_bernoulli = force * LENGTH ** 3 / (3.0 * ei)
        assert tip.pose.position[0] == pytest.approx(euler_bernoulli, rel=0.01)

    def test_force_conservation_without_load(self):
        tip, samples = integrate_rod(Pose.identity(), np.array([0.5, -0.2, 1.0]),
                                     np.array([0.05, 0.0, -0.02]), curved_rod())
        for state in samples:
            np.testing.assert_allclose(state.internal_force, [0.5, -0.2, 1.0],
                                       rtol=0, atol=1e-12)

    def test_force_balance_with_gravity(self):
        params = curved_rod(gravity=(0.0, 0.0, -9.81))
        base_n = np.array([0.1, 0.0, 0.4])
        tip, _ = integrate_rod(Pose.identity(), base_n, np.zeros(3), params,
                               n_samples=0)
        expected_drop = distributed_load(params) * LENGTH
        np.testing.assert_allclose(base_n - tip.internal_force, expected_drop,
                                   rtol=0, atol=1e-9)

    def test_moment_consistency_along_rod(self):
        # d/ds (m + p x n) = -p x f, finite-differenced on the samples
        params = curved_rod(gravity=(0.0, 0.0, -9.81))
        _, samples = integrate_rod(Pose.identity(), np.array([0.2, 0.1, 0.5]),
                                   np.array([0.0, 0.03, 0.01]), params,
                                   n_samples=201)
        f = distributed_load(params)
        quantity = np.array([s.internal_moment
                             + np.cross(s.pose.position, s.internal_force)
                             for s in samples])
        arc = np.array([s.s for s in samples])
        h = arc[1] - arc[0]
        for k in range(1, len(samples) - 1):
            derivative = (quantity[k + 1] - quantity[k - 1]) / (2.0 * h)
            expected = -np.cross(samples[k].pose.position, f)
            np.testing.assert_allclose(derivative, expected, rtol=0, atol=5e-5)

    def test_rotation_drift_bound(self):
        params = curved_rod(gravity=(0.0, 0.0, -9.81))
        tip, samples = integrate_rod(Pose.identity(), np.array([1.0, 2.0, -3.0]),
                                     np.array([0.1, -0.05, 0.02]), params)
        assert rotation_defect(tip.pose.rotation) <= 1e-8
        for state in samples:
            assert rotation_defect(state.pose.rotation) <= 1e-8

    def test_convergence_order_at_least_four(self):
        # fixed-step runs via first_step = max_step on the arc problem
        params = curved_rod()
        errors = []
        for divisions in (32, 64):
            step = LENGTH / divisions
            cfg = IntegratorConfig(rtol=1e-2, atol=1e-2, max_step=step,
                                   first_step=step)
            tip, _ = integrate_rod(Pose.identity(), np.zeros(3), np.zeros(3),
                                   params, cfg, n_samples=0)
            errors.append(np.abs(tip.pose.position
                                 - arc_tip_oracle(LENGTH, CURVE_RADIUS)).max())
        assert errors[0] / errors[1] >= 16.0

    def test_matches_scipy_reference(self):
        # independent route: scipy RK45 on the public rod_ode_rhs
        params = curved_rod(gravity=(0.0, 0.0, -9.81))
        n0 = np.array([0.3, -0.1, 0.6])
        m0 = np.array([0.02, 0.05, -0.01])

        def flat_rhs(s, y):
            state = RodState(s, Pose(y[3:12].reshape(3, 3), y[0:3]),
                             y[12:15], y[15:18])
            dp, d_rot, dn, dm = rod_ode_rhs(state, params)
            return np.concatenate([dp, d_rot.reshape(9), dn, dm])

        y0 = np.concatenate([np.zeros(3), np.eye(3).reshape(9), n0, m0])
        reference = solve_ivp(flat_rhs, (0.0, LENGTH), y0, method="RK45",
                              rtol=1e-11, atol=1e-13).y[:, -1]
        tip, _ = integrate_rod(Pose.identity(), n0, m0, params, n_samples=0)
        np.testing.assert_allclose(tip.pose.position, reference[0:3], atol=1e-8)
        np.testing.assert_allclose(tip.pose.rotation, reference[3:12].reshape(3, 3),
                                   atol=1e-8)
        np.testing.assert_allclose(tip.internal_moment, reference[15:18], atol=1e-8)

    def test_sample_count_does_not_change_tip(self):
        params = curved_rod(gravity=(0.0, 0.0, -9.81))
        tips = []
        for n_samples in (0, 7, 50, 111):
            tip, _ = integrate_rod(Pose.identity(), np.array([0.1, 0.2, 0.3]),
                                   np.zeros(3), params, n_samples=n_samples)
            tips.append(tip.pose.position)
        for position in tips[1:]:
            assert np.array_equal(position, tips[0])

    def test_step_underflow_raises(self):
        cfg = IntegratorConfig(rtol=1e-200, atol=1e-300)
        with pytest.raises(IntegrationFailure, match="underflow"):
            integrate_rod(Pose.identity(), np.zeros(3), np.zeros(3),
                          curved_rod(), cfg, n_samples=0)

    def test_non_finite_state_raises(self):
        with pytest.raises(IntegrationFailure, match="non-finite"):
            integrate_rod(Pose.identity(), np.array([np.nan, 0.0, 0.0]),
                          np.zeros(3), curved_rod(), n_samples=0)

    def test_orthonormality_drift_rejected_at_loose_tolerance(self):
        # many turns at a sloppy tolerance accumulate rotation drift past 1e-8
        tight_coil = RodParams(
            length=LENGTH, section=CrossSection(DIAMETER),
            material=Material(TI_E, TI_NU, TI_RHO),
            u_star=np.array([1.0 / 0.002, 0.0, 0.0]))
        cfg = IntegratorConfig(rtol=1e-4, atol=1e-4)
        with pytest.raises(IntegrationFailure, match="drift"):
            integrate_rod(Pose.identity(), np.zeros(3), np.zeros(3),
                          tight_coil, cfg, n_samples=0)

    def test_invalid_tolerances_rejected(self):
        with pytest.raises(ValueError):
            IntegratorConfig(rtol=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(atol=-1.0)
