import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrxxz.hamiltonian import ChainSpec, sector_basis
from lrxxz.spectral import (
    BD_REFERENCES,
    DEFAULT_MID_COUNT,
    BDReference,
    bd_reference,
    bootstrap_kl,
    collapse_degeneracies,
    diagnose_realization,
    ee_distribution,
    entanglement_entropy,
    kl_binned,
    kl_gaussian,
    level_spacing_ratio,
    realization_spec,
    select_mid_spectrum,
    spacing_ratios,
    spectral_diagnostics,
)

REF12 = BD_REFERENCES[12]


class TestLevelStatistics:
    def test_equal_spacing(self):
        assert level_spacing_ratio(np.arange(200.0)) == pytest.approx(1.0)

    def test_poisson(self):
        rng = np.random.default_rng(0)
        levels = np.cumsum(rng.exponential(size=100_000))
        assert level_spacing_ratio(levels) == pytest.approx(0.386, abs=0.01)

    def test_goe(self):
        rng = np.random.default_rng(1)
        H = rng.normal(size=(1500, 1500))
        assert level_spacing_ratio(np.linalg.eigvalsh(H + H.T)) == pytest.approx(0.53, abs=0.02)

    def test_ratios_in_unit_interval(self):
        rng = np.random.default_rng(2)
        r = spacing_ratios(rng.normal(size=500), fraction=1.0)
        assert np.all((r >= 0) & (r <= 1))

    def test_degeneracies_collapsed(self):
        e = np.array([0.0, 1.0, 1.0, 1.0 + 1e-15, 2.0, 3.0])
        assert collapse_degeneracies(e).tolist() == [0.0, 1.0, 2.0, 3.0]

    def test_needs_three_levels(self):
        with pytest.raises(ValueError):
            level_spacing_ratio([0.0, 1.0, 1.0])

    def test_fraction_stability_chaotic_chain(self):
        spec = ChainSpec(L=12, delta=1.0, alpha=2.5, disorder_amplitude=0.1, rng_seed=4)
        E, _, _ = diagnose_realization(realization_spec(spec, 0), count=10)
        assert abs(level_spacing_ratio(E, 0.5) - level_spacing_ratio(E, 0.7)) < 0.01


class TestMidSpectrum:
    def test_all_states(self):
        assert select_mid_spectrum(np.arange(10.0), 10).tolist() == list(range(10))

    def test_gaussian_dos_centre(self):
        rng = np.random.default_rng(3)
        e = rng.normal(2.0, 1.0, 4000)
        idx = select_mid_spectrum(e, 100)
        width = np.ptp(e) / math.ceil(math.sqrt(e.size))
        assert idx.size == 100 and np.unique(idx).size == 100
        assert abs(e[idx].mean() - 2.0) < width

    def test_too_many(self):
        with pytest.raises(ValueError):
            select_mid_spectrum(np.arange(5.0), 6)

    def test_default_counts(self):
        assert DEFAULT_MID_COUNT == {12: 100, 14: 300}


class TestEntanglement:
    def test_product_state(self):
        basis = sector_basis(4, 0)
        v = (basis == 0b0101).astype(complex)
        assert entanglement_entropy(v, basis, 4, 2) == pytest.approx(0.0, abs=1e-12)

    def test_singlet_across_cut(self):
        basis = sector_basis(2, 0)  # [0b01, 0b10]
        v = np.array([1, -1]) / np.sqrt(2)
        assert entanglement_entropy(v, basis, 2, 1) == pytest.approx(np.log(2))

    def test_random_sector_vector_near_reference(self):
        rng = np.random.default_rng(5)
        basis = sector_basis(12, 0)
        hits = 0
        for _ in range(20):
            v = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
            s = entanglement_entropy(v / np.linalg.norm(v), basis, 12, 6)
            assert 0 <= s <= 6 * np.log(2)
            hits += abs(s - REF12.mu_bd) < 5 * REF12.sigma_bd
        assert hits >= 18

    def test_cut_symmetry_for_parity_eigenstates(self):
        # clean chains are reflection symmetric, so nondegenerate eigenstates have definite parity
        from lrxxz.hamiltonian import build_sector_matrix

        H, basis = build_sector_matrix(ChainSpec(L=10, delta=0.8, alpha=1.7), 0)
        E, V = np.linalg.eigh(H)
        gaps = np.diff(E)
        nondeg = [k for k in range(1, E.size - 1) if min(gaps[k - 1], gaps[k]) > 1e-8][:10]
        for k in nondeg:
            for cut in (3, 4):
                assert entanglement_entropy(V[:, k], basis, 10, cut) == pytest.approx(
                    entanglement_entropy(V[:, k], basis, 10, 10 - cut), abs=1e-10
                )

    def test_mirror_image(self):
        rng = np.random.default_rng(6)
        L = 10
        basis = sector_basis(L, 2)
        v = rng.normal(size=basis.size)
        v /= np.linalg.norm(v)
        mirrored = np.array([int(format(x, f"0{L}b")[::-1], 2) for x in basis])
        for cut in (3, 4):
            assert entanglement_entropy(v, basis, L, cut) == pytest.approx(
                entanglement_entropy(v, mirrored, L, L - cut), abs=1e-10
            )

    def test_rejects_bad_input(self):
        basis = sector_basis(4, 0)
        with pytest.raises(ValueError):
            entanglement_entropy(np.ones(basis.size), basis, 4, 2)
        with pytest.raises(ValueError):
            entanglement_entropy(np.eye(basis.size)[0], basis, 4, 4)


class TestKL:
    def test_identical(self):
        assert kl_gaussian(REF12.mu_bd, REF12.sigma_bd, REF12) == pytest.approx(0.0, abs=1e-15)

    def test_shifted_mean(self):
        assert kl_gaussian(REF12.mu_bd + REF12.sigma_bd, REF12.sigma_bd, REF12) == pytest.approx(0.5)

    def test_doubled_width(self):
        assert kl_gaussian(REF12.mu_bd, 2 * REF12.sigma_bd, REF12) == pytest.approx(1.5 - np.log(2))

    @given(st.floats(3.0, 4.0), st.floats(1e-3, 1.0))
    def test_non_negative(self, mu, sigma):
        assert kl_gaussian(mu, sigma, REF12) >= -1e-12

    def test_binned_identical(self):
        x = np.random.default_rng(7).normal(size=5000)
        assert kl_binned(x, x) == pytest.approx(0.0, abs=1e-12)

    def test_binned_against_closed_form(self):
        rng = np.random.default_rng(8)
        p, q = rng.normal(0, 1, 10_000), rng.normal(1.5, 1.3, 10_000)
        exact = kl_gaussian(0.0, 1.0, BDReference(1.5, 1.3))
        assert kl_binned(p, q, 50) == pytest.approx(exact, rel=0.1)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.floats(-2, 2), st.floats(0.2, 3))
    def test_binned_non_negative(self, seed, shift, width):
        rng = np.random.default_rng(seed)
        assert kl_binned(rng.normal(size=300), rng.normal(shift, width, 300)) >= -1e-12

    def test_reference_lookup(self):
        assert bd_reference(14) == BDReference(4.2652, 0.0103)
        with pytest.raises(KeyError, match="mu_bd"):
            bd_reference(10)
        with pytest.raises(ValueError):
            BDReference(3.0, 0.0)

    def test_bootstrap_deterministic(self):
        ee = np.random.default_rng(9).normal(3.5, 0.03, size=(10, 20))
        a = bootstrap_kl(ee, REF12, n_boot=50, seed=1)
        assert a.shape == (50,) and np.array_equal(a, bootstrap_kl(ee, REF12, n_boot=50, seed=1))
        assert np.all(a >= 0)


class TestDistribution:
    def test_deterministic_and_bookkeeping(self):
        spec = ChainSpec(L=10, delta=1.0, alpha=2.0, rng_seed=3)
        a = ee_distribution(spec, count=30, n_disorder=2)
        b = ee_distribution(spec, count=30, n_disorder=2)
        assert np.array_equal(a[2], b[2])
        assert a[2].size == 60 and a[3]["ee_by_realization"].shape == (2, 30)

    def test_realization_seeds_differ(self):
        spec = ChainSpec(L=10, delta=1.0, alpha=2.0, disorder_amplitude=0.1, rng_seed=3)
        seeds = {realization_spec(spec, k).rng_seed for k in range(5)}
        assert len(seeds) == 5

    def test_requires_half_filling_chain(self):
        with pytest.raises(ValueError):
            diagnose_realization(ChainSpec(L=9, delta=1.0, alpha=2.0), 10)
        with pytest.raises(ValueError):
            diagnose_realization(ChainSpec(L=16, delta=1.0, alpha=2.0), 10)

    def test_diagnostics_invariants(self):
        spec = ChainSpec(L=12, delta=1.0, alpha=2.5, disorder_amplitude=0.1, rng_seed=0)
        d = spectral_diagnostics(spec, count=100, n_disorder=2)
        assert 0 <= d.r_mean <= 1 and d.d_kl >= 0
        assert np.all((d.ee_samples >= 0) & (d.ee_samples <= 6 * np.log(2)))
        assert d.ee_samples.size == 200 and d.eigenvalues.size == 924

    def test_short_range_limit_diverges_further(self):
        # nearly nearest-neighbour (integrable) chain sits further from the random-state reference
        base = ChainSpec(L=12, delta=1.0, alpha=3.0, disorder_amplitude=0.1, rng_seed=0)
        near = spectral_diagnostics(base, count=100, n_disorder=3)
        far = spectral_diagnostics(base.replace(alpha=20.0), count=100, n_disorder=3)
        assert far.d_kl > near.d_kl
