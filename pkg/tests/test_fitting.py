import numpy as np
import pytest

from lrxxz.evolution import correlator_exact_trace, time_grid
from lrxxz.fitting import (
    PARAM_NAMES,
    PhaseDiagramGrid,
    _canonical,
    classify,
    fit_boundary,
    fit_late_time,
    fit_short_time,
    fit_spatial_powerlaw,
    late_time_model,
    ridge_position,
)
from lrxxz.hamiltonian import ChainSpec, build_couplings

TRUE = dict(a=0.4, tau=0.7, beta_osc=3.0, phi1=0.5, b=0.3, gamma=0.75, c=0.5, eta=0.6, omega=2.2, phi2=1.3)
TIMES = time_grid(10.0, 0.05)


def synthetic(params=TRUE, scale=1.0):
    t = np.where(TIMES > 0, TIMES, 1.0)  # t = 0 lies outside every fit window
    return scale * late_time_model(t, *params.values())


class TestLateTime:
    def test_round_trip(self):
        fit = fit_late_time(TIMES, synthetic(), (1, 8))
        assert fit.converged
        for name in PARAM_NAMES:
            assert getattr(fit, name) == pytest.approx(TRUE[name], rel=1e-6)
        assert fit.residual_rms < 1e-10

    def test_noisy_recovery(self):
        rng = np.random.default_rng(0)
        y = synthetic() * (1 + 0.005 * rng.standard_normal(TIMES.size))
        assert fit_late_time(TIMES, y, (1, 8)).gamma == pytest.approx(0.75, rel=0.05)

    def test_pure_power_law(self):
        t = np.where(TIMES > 0, TIMES, 1.0)
        fit = fit_late_time(TIMES, 0.9 * t**-0.8)
        assert fit.gamma == pytest.approx(0.8, abs=1e-3)
        assert fit.b == pytest.approx(0.9, rel=1e-3)

    def test_scale_equivariance(self):
        base = fit_late_time(TIMES, synthetic(), (1, 8))
        scaled = fit_late_time(TIMES, synthetic(scale=2.5), (1, 8))
        assert scaled.a == pytest.approx(2.5 * base.a, rel=1e-6)
        assert scaled.b == pytest.approx(2.5 * base.b, rel=1e-6)
        for name in ("tau", "beta_osc", "phi1", "gamma", "c", "eta", "omega", "phi2"):
            assert getattr(scaled, name) == pytest.approx(getattr(base, name), rel=1e-6)

    @pytest.mark.parametrize("window", [(1.2, 8.0), (1.0, 6.4), (1.0, 9.6)])
    def test_window_robustness(self, window):
        assert fit_late_time(TIMES, synthetic(), window).gamma == pytest.approx(0.75, rel=0.02)

    def test_default_window(self):
        fit = fit_late_time(TIMES, synthetic())
        assert fit.fit_window == (1.0, 8.0)
        assert fit.n_points == np.count_nonzero((TIMES >= 1) & (TIMES <= 8 + 1e-9))

    @pytest.mark.parametrize("window", [(0.5, 5.0), (2.0, 11.0), (4.0, 3.0)])
    def test_bad_window(self, window):
        with pytest.raises(ValueError):
            fit_late_time(TIMES, synthetic(), window)

    def test_report_and_dict(self):
        fit = fit_late_time(TIMES, synthetic(), (1, 8))
        text = fit.report()
        for name in PARAM_NAMES + ("residual_rms", "fit_window"):
            assert name in text
        d = fit.to_dict()
        assert d["gamma"] == fit.gamma and d["fit_window"] == [1.0, 8.0]
        assert np.allclose(fit(TIMES[20:]), synthetic()[20:], atol=1e-10)

    def test_canonical_form_preserves_model(self):
        t = np.linspace(1, 5, 30)
        raw = np.array([-0.4, 0.7, -3.0, 0.5, 0.3, 0.75, -0.5, 0.6, -2.2, 1.3])
        canon = _canonical(raw)
        assert canon[0] >= 0 and canon[2] >= 0 and canon[6] >= 0 and canon[8] >= 0
        assert 0 <= canon[3] < 2 * np.pi and 0 <= canon[9] < 2 * np.pi
        assert np.allclose(late_time_model(t, *raw), late_time_model(t, *canon), atol=1e-14)


class TestShortTime:
    def test_exact_quadratic(self):
        t = np.linspace(0, 0.1, 11)
        assert fit_short_time(t, 1 - 3.7 * t**2).kappa == pytest.approx(3.7, rel=1e-12)

    def test_exact_trace_against_couplings(self):
        spec = ChainSpec(L=9, delta=1.0, alpha=2.0)
        t = np.linspace(0, 0.1, 11)
        fit = fit_short_time(t, correlator_exact_trace(spec, t).autocorrelator, table=build_couplings(spec))
        assert fit.kappa == pytest.approx(fit.reference, rel=0.05)

    def test_kappa_follows_kac_normalised_couplings(self):
        # independent double-loop oracle: 4 sum_i |i-c|^(-2 alpha) / kac^2 rises with alpha at L=9,
        # because the Kac factor grows faster than the long-range tail as alpha drops
        oracle = {1.0: 2.6900724477479714, 2.0: 4.540711336729488, 3.0: 6.114804543626275}
        t = np.linspace(0, 0.1, 11)
        for alpha, ref in oracle.items():
            c0 = correlator_exact_trace(ChainSpec(L=9, delta=1.0, alpha=alpha), t).autocorrelator
            assert fit_short_time(t, c0).kappa == pytest.approx(ref, rel=0.05)

    def test_needs_points(self):
        with pytest.raises(ValueError):
            fit_short_time([0.0, 0.5], [1.0, 0.9])


class TestSpatialPowerLaw:
    def test_exact(self):
        j = np.arange(-5, 6)
        profile = np.ones(j.size)
        profile[j != 0] = np.abs(j[j != 0]).astype(float) ** -3.0
        fit = fit_spatial_powerlaw(j, profile)
        assert fit.exponent == pytest.approx(3.0, abs=1e-6)
        assert fit.n_used == 5 and fit.n_excluded == 0

    def test_drops_non_positive(self):
        j = np.arange(0, 6)
        profile = np.array([1.0, 1.0, 2.0**-2, -1e-9, 4.0**-2, 5.0**-2])
        fit = fit_spatial_powerlaw(j, profile)
        assert fit.n_excluded == 1 and fit.exponent == pytest.approx(2.0, abs=1e-9)


class TestClassification:
    @pytest.mark.parametrize(
        "gamma,label",
        [(0.3, "subdiffusive"), (0.46, "diffusive"), (0.5, "diffusive"), (0.55, "diffusive"),
         (0.7, "superdiffusive"), (0.95, "ballistic"), (1.2, "ballistic"), (np.nan, "undetermined")],
    )
    def test_bands(self, gamma, label):
        assert classify(gamma) == label

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            PhaseDiagramGrid([1.0, 0.5], [2.0], [[0.5], [0.6]])
        with pytest.raises(ValueError):
            PhaseDiagramGrid([0.5], [2.0, 3.0], [[0.5]])
        g = PhaseDiagramGrid([0.5, 1.0], [2.0, 3.0], [[0.5, 0.95], [0.7, 0.2]])
        assert g.classification.tolist() == [["diffusive", "ballistic"], ["superdiffusive", "subdiffusive"]]


class TestBoundary:
    def test_ridge_refinement(self):
        alphas = np.linspace(1.5, 3.25, 8)
        row = 1 - (alphas - 2.1) ** 2
        assert ridge_position(alphas, row) == pytest.approx(2.1, abs=1e-12)
        assert ridge_position(alphas, alphas) is None

    def test_synthetic_boundary(self):
        deltas = np.array([0.5, 0.75, 1.0, 1.25])
        alphas = np.arange(1.5, 3.26, 0.25)
        ridge = 2 - np.log(deltas)
        gamma = 1 - 0.3 * (alphas[None, :] - ridge[:, None]) ** 2
        fit = fit_boundary(PhaseDiagramGrid(deltas, alphas, gamma))
        assert fit.intercept == pytest.approx(2.0, abs=0.25)
        assert fit.alpha_star[1.0] == pytest.approx(2.0, abs=0.25)
        assert fit.alpha_star[0.5] == pytest.approx(2 + np.log(2), abs=0.25)
        assert not fit.excluded

    def test_edge_maximum_excluded(self):
        g = PhaseDiagramGrid([0.5, 1.0], [1.5, 2.0, 2.5], [[0.5, 0.6, 0.9], [0.6, 0.9, 0.7]])
        fit = fit_boundary(g)
        assert fit.excluded == [0.5]
        assert list(fit.alpha_star) == [1.0]
        g = PhaseDiagramGrid([0.5], [1.5, 2.0, 2.5], [[0.5, 0.6, 0.9]])
        with pytest.raises(ValueError):
            fit_boundary(g)
