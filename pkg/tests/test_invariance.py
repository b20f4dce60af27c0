"""Exact pushforward verification, cross-checked against a brute-force oracle.

The oracle below enumerates every occupancy window and every coin assignment
explicitly and never shares code with the production automaton.
"""

from __future__ import annotations

import io
import itertools

import numpy as np
import pytest

from tasep import (
    MarkovMatrix,
    build_invariant_matrix,
    cylinder_measure,
    markov_identity_check,
    one_step_cylinder_pushforward,
    parry_matrix,
    verify_invariance,
)
from tasep.invariance import write_pushforward_csv
from tasep.measures import TransitionStructure


def _post_letter(window, k, coins):
    stays = window[k] == 1 and (window[k + 1] == 1 or coins[k] == 0)
    arrives = window[k - 1] == 1 and window[k] == 0 and coins[k - 1] == 1
    return 1 if (stays or arrives) else 0


def pushforward_oracle(measure_fn, word, p):
    """Sum over all length-(n+2) windows and all coins of the window particles."""
    n = len(word)
    target = tuple(int(ch) for ch in word)
    total = 0.0
    for window in itertools.product((0, 1), repeat=n + 2):
        mu = measure_fn("".join(map(str, window)))
        if mu == 0.0:
            continue
        # the last window site's coin cannot influence sites 1..n
        coin_sites = [k for k in range(n + 1) if window[k] == 1]
        for bits in itertools.product((0, 1), repeat=len(coin_sites)):
            coins = [0] * (n + 2)
            prob = 1.0
            for site, bit in zip(coin_sites, bits):
                coins[site] = bit
                prob *= p if bit else 1.0 - p
            post = tuple(_post_letter(window, k, coins) for k in range(1, n + 1))
            if post == target:
                total += mu * prob
    return total


def all_words(max_len):
    for n in range(1, max_len + 1):
        for bits in itertools.product("01", repeat=n):
            yield "".join(bits)


MATRICES = [
    (build_invariant_matrix(0.2, 0.3), 0.3),
    (build_invariant_matrix(0.5, 0.5), 0.5),
    (build_invariant_matrix(0.8, 0.7), 0.7),
    (build_invariant_matrix(0.25, 1.0), 1.0),
    (build_invariant_matrix(0.75, 1.0), 1.0),
    (MarkovMatrix.bernoulli(0.5), 0.5),
    (MarkovMatrix.from_rows([[0.7, 0.3], [0.6, 0.4]]), 0.45),  # off the manifold
]


class TestPushforwardAgainstOracle:
    @pytest.mark.parametrize("case", range(len(MATRICES)))
    def test_matches_bruteforce(self, case):
        m, p = MATRICES[case]
        ev = lambda w: cylinder_measure(m, w)
        for word in all_words(4):
            fast = one_step_cylinder_pushforward(m, word, p)
            slow = pushforward_oracle(ev, word, p)
            assert fast == pytest.approx(slow, abs=1e-14)

    def test_single_site_identity(self):
        # mu'([1]) = p1 (p11 + (1-p) p10 + p p10) = p1 for every stochastic matrix
        for m, p in MATRICES:
            p1 = m.stationary[1]
            assert one_step_cylinder_pushforward(m, "1", p) == pytest.approx(p1, abs=1e-14)

    def test_invariant_point_word_10(self):
        m = build_invariant_matrix(0.5, 0.5)
        mu = cylinder_measure(m, "10")
        assert mu == pytest.approx(0.2928932188134524, abs=1e-12)
        assert one_step_cylinder_pushforward(m, "10", 0.5) == pytest.approx(mu, abs=1e-12)

    def test_product_measure_is_not_stationary(self):
        m = MarkovMatrix.bernoulli(0.5)
        pushed = one_step_cylinder_pushforward(m, "11", 0.5)
        assert pushed == pytest.approx(15 / 64, abs=1e-15)
        assert cylinder_measure(m, "11") == pytest.approx(1 / 4, abs=1e-15)

    def test_mass_conservation(self):
        for m, p in MATRICES:
            for n in range(1, 7):
                total = sum(
                    one_step_cylinder_pushforward(m, "".join(bits), p)
                    for bits in itertools.product("01", repeat=n)
                )
                assert total == pytest.approx(1.0, abs=1e-12)

    def test_refinement_consistency(self):
        m, p = build_invariant_matrix(0.4, 0.6), 0.6
        mm = MarkovMatrix.from_rows([[0.55, 0.45], [0.25, 0.75]])
        for mat, prob in ((m, p), (mm, 0.35)):
            for word in all_words(5):
                parent = one_step_cylinder_pushforward(mat, word, prob)
                split = sum(
                    one_step_cylinder_pushforward(mat, word + b, prob) for b in "01"
                )
                assert split == pytest.approx(parent, abs=1e-12)

    def test_translation_covariance(self):
        # extending the base on the left and marginalizing changes nothing
        m, p = build_invariant_matrix(0.6, 0.45), 0.45
        for word in all_words(4):
            left = sum(one_step_cylinder_pushforward(m, b + word, p) for b in "01")
            assert left == pytest.approx(one_step_cylinder_pushforward(m, word, p), abs=1e-12)


class TestVerifyInvariance:
    def test_invariant_family_is_stationary(self):
        for rho in (0.2, 0.5, 0.8):
            for p in (0.3, 0.7):
                report = verify_invariance(build_invariant_matrix(rho, p), p, 6, tol=1e-10)
                assert report.stationary, (rho, p)

    def test_deterministic_families_at_tight_tolerance(self):
        cases = [
            MarkovMatrix.from_rows([[2 / 3, 1 / 3], [1.0, 0.0]]),
            parry_matrix(TransitionStructure.no_adjacent_ones()),
            build_invariant_matrix(0.6, 1.0),
            build_invariant_matrix(0.75, 1.0),
        ]
        for m in cases:
            report = verify_invariance(m, 1.0, 6, tol=1e-12)
            assert report.stationary

    def test_perturbation_off_the_manifold_is_caught(self):
        m = build_invariant_matrix(0.5, 0.5)
        perturbed = MarkovMatrix(m.p00, m.p01, m.p10 - 0.01, m.p11 + 0.01)
        report = verify_invariance(perturbed, 0.5, 4, tol=1e-10)
        assert not report.stationary
        assert report.max_abs_error > 1e-4

    def test_report_shape_and_csv(self):
        report = verify_invariance(build_invariant_matrix(0.5, 0.5), 0.5, 3)
        assert len(report.rows) == 2 + 4 + 8
        buf = io.StringIO()
        write_pushforward_csv(report, buf)
        text = buf.getvalue()
        assert text.startswith("cylinder,mu,mu_pushed,abs_err")
        assert "verdict=stationary" in text

    def test_length_guard(self):
        with pytest.raises(ValueError):
            verify_invariance(build_invariant_matrix(0.5, 0.5), 0.5, 13)

    def test_verdict_matches_the_algebraic_identity_on_a_grid(self):
        # both directions of the stationarity criterion at p = 0.5
        p = 0.5
        grid = np.linspace(0.05, 0.95, 20)
        for q01 in grid:
            for q10 in grid:
                m = MarkovMatrix.from_rows([[1 - q01, q01], [q10, 1 - q10]])
                resid = abs(m.p00 * m.p11 - (1 - p) * m.p10 * m.p01)
                verdict = verify_invariance(m, p, 4, tol=1e-9).stationary
                assert verdict == (resid <= 1e-9), (q01, q10, resid)

    def test_on_manifold_points_verify(self):
        # the forward direction on exactly constructed members
        for rho in np.linspace(0.1, 0.9, 9):
            m = build_invariant_matrix(rho, 0.5)
            assert verify_invariance(m, 0.5, 4, tol=1e-9).stationary


class TestMarkovIdentity:
    def test_markov_measures_pass(self):
        report = markov_identity_check(build_invariant_matrix(0.3, 0.8))
        assert report.max_abs_residual <= 1e-12
        assert report.is_markov

    def test_bernoulli_product_passes(self):
        report = markov_identity_check(MarkovMatrix.bernoulli(0.3))
        assert report.max_abs_residual <= 1e-15

    def test_mixture_fails(self):
        def mixture(word):
            def bern(theta):
                out = 1.0
                for ch in word:
                    out *= theta if ch == "1" else 1 - theta
                return out

            return 0.5 * bern(0.2) + 0.5 * bern(0.8)

        assert mixture("1") * mixture("111") == pytest.approx(0.13)
        assert mixture("11") * mixture("11") == pytest.approx(0.1156)
        report = markov_identity_check(mixture)
        assert not report.is_markov
        assert report.max_abs_residual >= 0.13 - 0.1156 - 1e-12
