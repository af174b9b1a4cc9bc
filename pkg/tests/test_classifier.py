import numpy as np
import pytest
from numpy.testing import assert_allclose

from hclab import (
    aq_operator,
    chain_decomposition,
    classify,
    enumerate_triples,
    from_matrix,
    polynomial_machinery,
    projection_product,
    recurrence_residual,
    relation_detect,
    shift_plus_rank_one,
    shift_rank_one_reconstruct,
    structure_extract,
    weighted_shift,
)
from hclab.errors import (
    DegenerateTriples,
    NoRelationFound,
    NotSingleTriple,
    PreconditionViolated,
)
from hclab.spectral import TripleRecord

from conftest import random_unitary, random_weights

PQ_P = np.array([[0.5, -0.5], [-0.5, 0.5]])
PQ_Q = np.array([[1.0, 0.0], [0.0, 0.0]])


class TestRelationDetect:
    def test_aq_recovers_q_relation(self, cfg):
        # I - (1 + 1/q) T_1 + (1/q) T_2 = 0, normalized: (1, -3, 2)/sqrt(14)
        t = aq_operator(0.5, 5.0, 48)
        cert = relation_detect(t, cfg)
        assert cert.degenerate and (cert.n, cert.m) == (1, 1)
        assert_allclose(cert.three_term, np.array([1.0, -3.0, 2.0]) / np.sqrt(14),
                        atol=1e-6)
        assert cert.operator_residual <= 1e-10

    def test_isometry_second_difference(self, cfg):
        t = weighted_shift([1.0] * 31, 32)
        cert = relation_detect(t, cfg)
        assert_allclose(cert.three_term, np.array([1.0, -2.0, 1.0]) / np.sqrt(6),
                        atol=1e-12)
        assert cert.operator_residual <= 1e-14

    def test_generic_rank_one_has_no_relation(self, rng, cfg):
        t = shift_plus_rank_one(random_weights(rng, 31), 0.3 + 0.4j, 2, 32)
        with pytest.raises(NoRelationFound):
            relation_detect(t, cfg)

    def test_hardy_satisfies_relation(self, cfg):
        # constant weights collapse the grams to scalar + rank-one, which
        # does satisfy a three-term relation: (|a|^2, -(1+|a|^2), 1)
        a = 0.5
        t = shift_plus_rank_one([a] * 23, 1.0, 0, 24)
        cert = relation_detect(t, cfg)
        expect = np.array([a * a, -(1 + a * a), 1.0])
        expect /= np.linalg.norm(expect)
        assert_allclose(cert.three_term, expect, atol=1e-10)

    def test_coefficient_conventions(self, cfg):
        cert = relation_detect(aq_operator(0.5, 5.0, 32), cfg)
        coeffs = np.asarray(cert.coefficients)
        assert np.linalg.norm(coeffs) == pytest.approx(1.0)
        sig = np.abs(coeffs) > 1e-8
        assert coeffs[np.argmax(sig)] > 0

    def test_recurrence_residual_helper(self):
        tau = np.array([2.0 ** (-2 * k) for k in range(7)])
        # tau_k satisfies tau_{k+1} = tau_k / 4: (1, -4, 0, 0) on (k, k+1, ..)
        res = recurrence_residual((1.0, -4.0, 0.0, 0.0), 1, 1, tau)
        assert res <= 1e-15

    def test_dirichlet_type_shift(self, cfg):
        # weights sqrt((k+2)/(k+1)) satisfy I - 2 T_1 + T_2 = 0 exactly but
        # are not an isometry: the null space is one-dimensional here, so
        # the canonical answer arrives without any degenerate tie-breaking
        n = 32
        w = np.sqrt((np.arange(n - 1) + 2) / (np.arange(n - 1) + 1))
        t = weighted_shift(w, n)
        cert = relation_detect(t, cfg)
        assert_allclose(cert.three_term, np.array([1.0, -2.0, 1.0]) / np.sqrt(6),
                        atol=1e-12)
        # and as a centered weighted shift it lands in the first verdict
        assert classify(t, cfg).verdict == "centered_weighted_shift"


class TestPolynomialMachinery:
    @pytest.fixture
    def aq_setup(self, cfg):
        t = aq_operator(0.5, 5.0, 32)
        chain = chain_decomposition(t, cfg)
        st = structure_extract(t, chain, cfg)
        triples = enumerate_triples(t, chain, st, cfg)
        return t, chain, st, triples

    def test_equal_triples_degenerate(self, aq_setup, cfg):
        _, _, st, triples = aq_setup
        with pytest.raises(DegenerateTriples):
            polynomial_machinery(triples[0], triples[0], st, cfg)

    def test_distinct_gammas_give_nonzero_constant_term(self, aq_setup, cfg):
        _, _, st, triples = aq_setup
        by_gamma = {}
        for tr in triples:
            by_gamma.setdefault(tr.gamma_char, tr)
        keys = sorted(by_gamma)
        c_vals = st.C_values
        pick = None
        for i in keys:
            for j in keys:
                if i < j and abs(c_vals[i] - c_vals[j]) > 1e-6:
                    pick = (by_gamma[i], by_gamma[j])
                    break
            if pick:
                break
        assert pick is not None
        data = polynomial_machinery(pick[0], pick[1], st, cfg)
        expect_const = c_vals[pick[1].gamma_char] - c_vals[pick[0].gamma_char]
        assert data.p[0] == pytest.approx(expect_const, rel=1e-6)
        assert abs(data.p[0]) > 1e-8

    def test_annihilates_tau_and_beta(self, aq_setup, cfg):
        _, _, st, triples = aq_setup
        t1 = triples[0]
        t2 = next(tr for tr in triples if tr.gamma_char != t1.gamma_char)
        data = polynomial_machinery(t1, t2, st, cfg)
        assert data.tau_residual <= 1e-8
        assert data.beta_residual <= 1e-8

    def test_same_gamma_dim2_shape(self, cfg):
        # two triples sharing gamma (the dim M_E = 2 situation) force a
        # vanishing constant term while P itself survives
        lam_vals = np.array([
            [2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625],
        ])
        from hclab.spectral import Character, JointSpectrum, StructureData

        tau = np.array([1.0, 1.25, 2.125, 4.0625, 8.03125, 16.015625, 32.0078125])
        beta = np.concatenate([[0.0], lam_vals[0] - lam_vals[1]])
        me = JointSpectrum(characters=[
            Character(values=lam_vals[0], frame=np.eye(2)[:, :1], multiplicity=1),
            Character(values=lam_vals[1], frame=np.eye(2)[:, 1:], multiplicity=1),
        ], dim=2)
        comp = JointSpectrum(characters=[
            Character(values=(tau[1:] + 0.3 * beta[1:]), frame=np.eye(1), multiplicity=1),
        ], dim=1)
        st = StructureData(
            tau=tau, beta=beta, beta_normalized=beta, A=np.eye(2), C=np.eye(1),
            A_values={0: 1.0, 1: 0.0}, C_values={0: 0.3},
            me_spectrum=me, compressed_spectrum=comp,
            lambda_index=0, mu_index=1, no_nonzero_beta=False,
        )
        t1 = TripleRecord(lambda_char=0, gamma_char=0, m=1, match_residual=0.0)
        t2 = TripleRecord(lambda_char=1, gamma_char=0, m=2, match_residual=0.0)
        data = polynomial_machinery(t1, t2, st, cfg)
        assert np.max(np.abs(data.p)) > 1e-10
        assert abs(data.p[0]) <= 1e-12


class TestShiftRankOneReconstruct:
    def test_recovers_constructor_data(self, rng, cfg):
        n, N = 2, 32
        w = random_weights(rng, N - 1)
        a = 0.3 + 0.4j
        t = shift_plus_rank_one(w, a, n, N)
        chain = chain_decomposition(t, cfg)
        st = structure_extract(t, chain, cfg)
        triples = enumerate_triples(t, chain, st, cfg)
        cert = shift_rank_one_reconstruct(t, chain, st, triples, cfg)
        assert cert.n == n
        assert abs(cert.a) == pytest.approx(abs(a), abs=1e-10)
        assert_allclose(np.abs(cert.weights), np.abs(w)[: len(cert.weights)], atol=1e-10)
        assert cert.reconstruction_residual <= 1e-8
        assert cert.joint_eigenvector_residual <= 1e-8

    def test_hardy_recovers_corner_form(self, cfg):
        t = shift_plus_rank_one([0.5] * 23, 1.0, 0, 24)
        chain = chain_decomposition(t, cfg)
        st = structure_extract(t, chain, cfg)
        triples = enumerate_triples(t, chain, st, cfg)
        cert = shift_rank_one_reconstruct(t, chain, st, triples, cfg)
        assert cert.n == 0
        assert abs(cert.a) == pytest.approx(1.0, abs=1e-10)
        assert_allclose(np.abs(cert.weights), 0.5, atol=1e-10)

    def test_requires_single_triple(self, cfg):
        t = aq_operator(0.5, 5.0, 32)
        chain = chain_decomposition(t, cfg)
        st = structure_extract(t, chain, cfg)
        triples = enumerate_triples(t, chain, st, cfg)
        with pytest.raises((NotSingleTriple, PreconditionViolated)):
            shift_rank_one_reconstruct(t, chain, st, triples, cfg)


class TestClassify:
    def test_weighted_shift(self, rng, cfg):
        rep = classify(weighted_shift(random_weights(rng, 31), 32), cfg)
        assert rep.verdict == "centered_weighted_shift"
        assert rep.dim_M_E == 1 and rep.condition_II_ok

    def test_generic_rank_one(self, rng, cfg):
        rep = classify(shift_plus_rank_one(random_weights(rng, 31), 0.3 + 0.4j, 2, 32), cfg)
        assert rep.verdict == "shift_plus_rank_one"
        assert rep.reconstruction.n == 2
        assert rep.relation is None

    def test_aq(self, cfg):
        rep = classify(aq_operator(0.5, 5.0, 48), cfg)
        assert rep.verdict == "four_term_relation"
        assert rep.dim_M_E >= 3
        assert abs(rep.relation.coefficients[0]) > 1e-5
        assert rep.closed_range_flag

    def test_hardy_both(self, cfg):
        rep = classify(shift_plus_rank_one([0.5] * 23, 1.0, 0, 24), cfg)
        assert rep.verdict == "both"
        assert rep.reconstruction is not None and rep.relation is not None

    def test_zero_coefficient_degenerates_to_shift(self, rng, cfg):
        # a = 0 collapses the moduli subspace back to the kernel line, so
        # the verdict lands upstream of the reconstruction branch
        t = shift_plus_rank_one(random_weights(rng, 31), 0.0, 2, 32)
        rep = classify(t, cfg)
        assert rep.verdict == "centered_weighted_shift"
        assert rep.dim_M_E == 1

    def test_rejects_non_half_centered(self, cfg):
        with pytest.raises(PreconditionViolated):
            classify(from_matrix([[1.0, 1.0], [0.0, 1.0]]), cfg)

    def test_rejects_wrong_kernel_dimension(self, rng, cfg):
        # invertible operator: the kernel of T* is zero-dimensional
        t = from_matrix(np.diag(rng.uniform(1, 2, 16)))
        with pytest.raises(PreconditionViolated):
            classify(t, cfg)

    def test_rejects_non_injective(self, cfg):
        with pytest.raises(PreconditionViolated):
            classify(projection_product(PQ_P, PQ_Q), cfg)


class TestCertificateInvariants:
    def test_recurrences_for_accepted_relations(self, cfg):
        for t in [aq_operator(0.5, 5.0, 48), shift_plus_rank_one([0.5] * 23, 1.0, 0, 24)]:
            rep = classify(t, cfg)
            assert rep.relation is not None
            assert rep.relation.tau_residual <= 1e-8
            assert rep.relation.beta_residual <= 1e-8

    def test_relation_restricted_to_layers(self, cfg):
        # an accepted relation also annihilates each chain layer
        t = aq_operator(0.5, 5.0, 32)
        rep = classify(t, cfg)
        a, b, c, d = rep.relation.coefficients
        n, m = rep.relation.n, rep.relation.m
        chain = chain_decomposition(t, cfg)
        from hclab import gram_power

        combo = (a * np.eye(t.dim) + b * gram_power(t, n) + c * gram_power(t, m)
                 + d * gram_power(t, n + m))
        for v in chain.V:
            if v.dim == 0:
                continue
            assert np.linalg.norm(combo @ v.frame) <= 1e-8

    def test_closed_range_under_relation(self, cfg):
        t = aq_operator(0.5, 5.0, 48)
        rep = classify(t, cfg)
        assert rep.dim_M_E >= 3
        assert rep.closed_range_flag
        from hclab import gram_power

        g1 = gram_power(t, 1)
        w = t.window(1)
        smin = np.linalg.svd(g1[:w, :w], compute_uv=False)[-1]
        assert smin > cfg.rank_tol

    def test_reconstruction_roundtrip_seeded(self, cfg):
        for seed in range(3):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(0, 4))
            w = random_weights(rng, 27)
            a = complex(rng.uniform(0.2, 0.8), rng.uniform(-0.5, 0.5))
            t = shift_plus_rank_one(w, a, n, 28)
            rep = classify(t, cfg)
            assert rep.reconstruction is not None, (seed, n, rep.verdict)
            cert = rep.reconstruction
            assert cert.n == n
            assert abs(cert.a) == pytest.approx(abs(a), abs=1e-8)
            assert_allclose(np.abs(cert.weights), np.abs(w)[: len(cert.weights)],
                            atol=1e-8)


class TestSeedStability:
    def test_verdicts_do_not_depend_on_the_seed(self, rng):
        t = shift_plus_rank_one(random_weights(rng, 23), 0.3 + 0.4j, 2, 24)
        verdicts = set()
        for seed in (1, 7, 1234):
            from hclab import ToleranceConfig

            rep = classify(t, ToleranceConfig(seed=seed))
            verdicts.add((rep.verdict, rep.triple_count, rep.reconstruction.n))
        assert len(verdicts) == 1


class TestUnitaryStability:
    @pytest.mark.parametrize("family", ["shift", "rank_one", "hardy", "aq"])
    def test_verdicts_stable(self, family, cfg):
        rng = np.random.default_rng(42)
        n = 24
        model = {
            "shift": lambda: weighted_shift(random_weights(rng, n - 1), n),
            "rank_one": lambda: shift_plus_rank_one(random_weights(rng, n - 1),
                                                    0.3 + 0.4j, 2, n),
            "hardy": lambda: shift_plus_rank_one([0.5] * (n - 1), 1.0, 0, n),
            "aq": lambda: aq_operator(0.5, 5.0, n),
        }[family]()
        base = classify(model, cfg)
        for _ in range(3):
            u = random_unitary(rng, n)
            rot = classify(model.conjugated(u), cfg)
            assert rot.verdict == base.verdict
            if base.relation is not None:
                assert_allclose(rot.relation.coefficients, base.relation.coefficients,
                                atol=1e-7)
            if base.reconstruction is not None:
                assert rot.reconstruction.n == base.reconstruction.n
                assert abs(rot.reconstruction.a) == pytest.approx(
                    abs(base.reconstruction.a), abs=1e-8)
