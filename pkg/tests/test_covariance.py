import numpy as np
import pytest

from scendi.covariance import blocks, covariance_matrix, gamma_star, schur_decompose
from scendi.errors import ValidationError
from scendi.kernels import FeatureMatrix, KernelConfig, cosine_features, rff_features
from scendi.spectral import eigh, range_projector

from conftest import random_embeddings


def dense_blocks_oracle(fi, ft):
    n = fi.shape[0]
    return fi.T @ fi / n, fi.T @ ft / n, ft.T @ ft / n


def objective(fi, ft, g):
    n = fi.shape[0]
    return np.linalg.norm(fi.T - g @ ft.T) ** 2 / n


def constant_text_fixture(n=5, d=8):
    """n orthonormal image rows; every text row is one unit vector
    orthogonal to all of them."""
    phi_i = FeatureMatrix(entries=np.eye(n, d))
    text = np.zeros((n, d))
    text[:, n] = 1.0
    phi_t = FeatureMatrix(entries=text)
    return phi_i, phi_t


def uncorrelated_fixture(m=6, d=12, seed=5):
    """Each image row appears with its negation under the same text, so
    every cross-covariance contribution cancels: C_IT = 0 exactly."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((m, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    t = rng.standard_normal((m, d))
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    img = np.vstack([x, -x])
    txt = np.vstack([t, t])
    return FeatureMatrix(entries=img), FeatureMatrix(entries=txt)


class TestBlocks:
    def test_single_shared_row(self):
        u = np.zeros((1, 4))
        u[0, 1] = 1.0
        phi = FeatureMatrix(entries=u)
        b = blocks(phi, phi)
        expected = np.outer(u[0], u[0])
        for block in (b.c_ii, b.c_it, b.c_tt):
            assert np.allclose(block, expected, atol=1e-15)

    def test_orthonormal_rows_unit_trace(self):
        phi_i = FeatureMatrix(entries=np.eye(2, 5))
        text = np.zeros((2, 5))
        text[:, 3] = 1.0
        b = blocks(phi_i, FeatureMatrix(entries=text))
        assert np.trace(b.c_ii) == pytest.approx(1.0, abs=1e-12)

    def test_matches_dense_oracle(self, rng):
        fi = cosine_features(random_embeddings(rng, 6, 4))
        ft = cosine_features(random_embeddings(rng, 6, 4))
        b = blocks(fi, ft)
        oii, oit, ott = dense_blocks_oracle(fi.entries, ft.entries)
        assert np.allclose(b.c_ii, oii, atol=1e-12)
        assert np.allclose(b.c_it, oit, atol=1e-12)
        assert np.allclose(b.c_tt, ott, atol=1e-12)

    def test_mismatched_rows_rejected(self, rng):
        fi = cosine_features(random_embeddings(rng, 5, 4))
        ft = cosine_features(random_embeddings(rng, 6, 4))
        with pytest.raises(ValidationError, match="pairing"):
            blocks(fi, ft)

    def test_mismatched_dims_rejected(self, rng):
        fi = cosine_features(random_embeddings(rng, 5, 4))
        ft = cosine_features(random_embeddings(rng, 5, 6))
        with pytest.raises(ValidationError, match="pairing"):
            blocks(fi, ft)

    def test_joint_matrix_psd(self, rng):
        fi = cosine_features(random_embeddings(rng, 10, 4))
        ft = cosine_features(random_embeddings(rng, 10, 4))
        joint_vals = np.linalg.eigvalsh(blocks(fi, ft).joint())
        assert joint_vals.min() >= -1e-9


class TestGammaStar:
    def test_self_regression_acts_as_identity_on_range(self, rng):
        phi = cosine_features(random_embeddings(rng, 8, 4))
        g = gamma_star(blocks(phi, phi))
        mapped = phi.entries @ g.T
        assert np.allclose(mapped, phi.entries, atol=1e-8)

    def test_zero_cross_covariance_gives_zero(self):
        fi, ft = uncorrelated_fixture()
        g = gamma_star(blocks(fi, ft))
        assert np.allclose(g, 0.0, atol=1e-12)

    def test_first_order_optimality_against_perturbations(self, rng):
        fi = cosine_features(random_embeddings(rng, 10, 5))
        ft = cosine_features(random_embeddings(rng, 10, 5))
        g = gamma_star(blocks(fi, ft))
        base = objective(fi.entries, ft.entries, g)
        for _ in range(100):
            delta = rng.standard_normal(g.shape)
            delta *= 1e-3 / np.linalg.norm(delta)
            assert base <= objective(fi.entries, ft.entries, g + delta) + 1e-15

    def test_matches_numpy_pinv_oracle(self, rng):
        fi = cosine_features(random_embeddings(rng, 12, 5))
        ft = cosine_features(random_embeddings(rng, 12, 5))
        b = blocks(fi, ft)
        oracle = b.c_it @ np.linalg.pinv(b.c_tt, hermitian=True)
        assert np.allclose(gamma_star(b), oracle, atol=1e-8)


class TestSchurDecompose:
    def test_fully_text_explained(self):
        n, d = 4, 9
        phi_i = FeatureMatrix(entries=np.eye(n, d))
        text = np.zeros((n, d))
        for j in range(n):
            text[j, n + j] = 1.0
        decomp = schur_decompose(blocks(phi_i, FeatureMatrix(entries=text)))
        assert decomp.trace_i == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(decomp.lambda_t, covariance_matrix(phi_i), atol=1e-12)

    def test_constant_text_trace_split(self):
        phi_i, phi_t = constant_text_fixture(n=5)
        decomp = schur_decompose(blocks(phi_i, phi_t))
        # (n-1)/n of the image mass is unexplained by a constant prompt
        assert decomp.trace_i == pytest.approx(0.8, abs=1e-12)
        assert decomp.trace_t == pytest.approx(0.2, abs=1e-12)

    def test_constant_text_dense_oracle(self):
        phi_i, phi_t = constant_text_fixture(n=5)
        b = blocks(phi_i, phi_t)
        lam_t_oracle = b.c_it @ np.linalg.pinv(b.c_tt, hermitian=True) @ b.c_it.T
        decomp = schur_decompose(b)
        assert np.allclose(decomp.lambda_t, lam_t_oracle, atol=1e-10)
        assert np.allclose(decomp.lambda_i, b.c_ii - lam_t_oracle, atol=1e-10)

    def test_uncorrelated_modalities(self):
        fi, ft = uncorrelated_fixture()
        decomp = schur_decompose(blocks(fi, ft))
        assert np.allclose(decomp.lambda_i, covariance_matrix(fi), atol=1e-12)
        assert decomp.trace_i == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("kernel", ["cosine", "gaussian"])
    def test_decomposition_identity_random(self, rng, kernel):
        for _ in range(10):
            n = int(rng.integers(5, 40))
            e_i = random_embeddings(rng, n, 6)
            e_t = random_embeddings(rng, n, 6)
            if kernel == "cosine":
                fi, ft = cosine_features(e_i), cosine_features(e_t)
            else:
                cfg = KernelConfig(kind="gaussian", sigma=2.0, rff_dim=16,
                                   seed=int(rng.integers(1000)))
                fi, ft = rff_features(e_i, cfg), rff_features(e_t, cfg)
            b = blocks(fi, ft)
            decomp = schur_decompose(b)
            assert np.linalg.norm(decomp.lambda_i + decomp.lambda_t - b.c_ii) <= 1e-8
            assert decomp.trace_i + decomp.trace_t == pytest.approx(1.0, abs=1e-8)
            # PSD up to sign noise, checked pre-clamp
            assert eigh(decomp.lambda_i).values.min() >= -1e-9
            assert eigh(decomp.lambda_t).values.min() >= -1e-9

    def test_residual_decorrelation(self, rng):
        fi = cosine_features(random_embeddings(rng, 15, 6))
        ft = cosine_features(random_embeddings(rng, 15, 6))
        b = blocks(fi, ft)
        decomp = schur_decompose(b)
        residual = fi.entries - ft.entries @ decomp.gamma_star.T
        cross = residual.T @ ft.entries / fi.n
        proj = range_projector(b.c_tt)
        assert np.linalg.norm(cross @ proj) <= 1e-8

    def test_residual_covariance_equals_lambda_i(self, rng):
        fi = cosine_features(random_embeddings(rng, 20, 5))
        ft = cosine_features(random_embeddings(rng, 20, 5))
        decomp = schur_decompose(blocks(fi, ft))
        residual = fi.entries - ft.entries @ decomp.gamma_star.T
        assert np.linalg.norm(residual.T @ residual / fi.n - decomp.lambda_i) <= 1e-8

    def test_feature_route_matches_block_formula(self, rng):
        # the implementation projects features; the literal
        # C_IT pinv(C_TT) C_IT^T block formula is the oracle
        fi = cosine_features(random_embeddings(rng, 18, 6))
        ft = cosine_features(random_embeddings(rng, 18, 6))
        b = blocks(fi, ft)
        decomp = schur_decompose(b)
        pinv = np.linalg.pinv(b.c_tt, hermitian=True)
        lam_t_oracle = b.c_it @ pinv @ b.c_it.T
        assert np.linalg.norm(decomp.lambda_t - lam_t_oracle) <= 1e-8
        assert np.linalg.norm(decomp.lambda_i - (b.c_ii - lam_t_oracle)) <= 1e-8
        assert np.linalg.norm(decomp.gamma_star - b.c_it @ pinv) <= 1e-8

    def test_duplicated_prompts_rank_deficient_c_tt(self, rng):
        # repeated text rows make C_TT rank deficient; pseudoinverse route
        e_i = random_embeddings(rng, 12, 6)
        e_t = np.tile(random_embeddings(rng, 3, 6), (4, 1))
        fi, ft = cosine_features(e_i), cosine_features(e_t)
        b = blocks(fi, ft)
        decomp = schur_decompose(b)
        assert np.linalg.norm(decomp.lambda_i + decomp.lambda_t - b.c_ii) <= 1e-8
        assert decomp.trace_i + decomp.trace_t == pytest.approx(1.0, abs=1e-8)
