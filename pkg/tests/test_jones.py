import cmath
import math

import numpy as np
import pytest

from twinellip.jones import (
    TwinPhotonField,
    TwinPhotonJonesMatrix,
    analyzer_pair,
    apply_twin_matrix,
    compose,
    jones_identity,
    polarizer_matrix,
    sample_matrix,
)
from twinellip.rates import SampleParams, beam_splitter_field


def test_polarizer_horizontal():
    np.testing.assert_allclose(polarizer_matrix(0.0), [[1, 0], [0, 0]], atol=1e-15)


def test_polarizer_vertical():
    np.testing.assert_allclose(
        polarizer_matrix(math.pi / 2), [[0, 0], [0, 1]], atol=1e-15
    )


def test_polarizer_diagonal():
    np.testing.assert_allclose(
        polarizer_matrix(math.pi / 4), 0.5 * np.ones((2, 2)), atol=1e-15
    )


def test_polarizer_projector_properties():
    # idempotent, symmetric, rank 1 on a dense angle grid
    for theta in np.linspace(-math.pi, math.pi, 181):
        p = polarizer_matrix(theta)
        np.testing.assert_allclose(p @ p, p, atol=1e-12)
        np.testing.assert_allclose(p, p.T, atol=1e-12)
        eigvals = np.sort(np.linalg.eigvalsh(p))
        np.testing.assert_allclose(eigvals, [0.0, 1.0], atol=1e-12)


def test_polarizer_pi_periodic():
    for theta in np.linspace(0.0, math.pi, 101):
        np.testing.assert_allclose(
            polarizer_matrix(theta + math.pi), polarizer_matrix(theta), atol=1e-12
        )


def test_polarizer_rejects_nonfinite():
    with pytest.raises(ValueError):
        polarizer_matrix(math.nan)


def test_sample_matrix_mirror_is_identity():
    np.testing.assert_allclose(
        sample_matrix(SampleParams(1.0, 1.0)), np.eye(2), atol=1e-15
    )


def test_sample_matrix_real_coefficients():
    sample = SampleParams(0.5, 1.0)
    np.testing.assert_allclose(
        sample_matrix(sample), np.diag([0.5, 1.0]), atol=1e-15
    )
    assert math.isclose(sample.tan_psi, 0.5)
    assert sample.delta == 0.0


def test_sample_matrix_from_angles():
    sample = SampleParams.from_psi_delta(math.radians(30.0), math.radians(60.0))
    m = sample_matrix(sample)
    assert abs(m[0, 0] - 0.57735026919 * cmath.exp(1j * math.pi / 3)) < 1e-10
    assert m[1, 1] == 1.0
    assert m[0, 1] == m[1, 0] == 0.0


def test_apply_identity_is_noop():
    field = beam_splitter_field()
    out = apply_twin_matrix(TwinPhotonJonesMatrix.identity(), field)
    np.testing.assert_allclose(out.beam1, field.beam1)
    np.testing.assert_allclose(out.beam2, field.beam2)


def test_apply_sample_stage_scales_columns():
    # sample in beam 1 scales the signal column by r1 and the idler column by
    # r2; beam 2 is untouched
    sample = SampleParams.from_psi_delta(math.radians(25.0), math.radians(-40.0))
    stage = TwinPhotonJonesMatrix.diagonal(sample_matrix(sample), jones_identity())
    field = beam_splitter_field()
    out = apply_twin_matrix(stage, field)
    expected_beam1 = field.beam1 * np.array([sample.r1, sample.r2])[None, :]
    np.testing.assert_allclose(out.beam1, expected_beam1, atol=1e-15)
    np.testing.assert_allclose(out.beam2, field.beam2, atol=1e-15)


def test_apply_analyzers_after_sample_gives_projected_amplitudes():
    # the full element chain puts each beam's field along the analyzer axis
    # with the signal/idler scalar amplitudes of the coincidence formalism
    sample = SampleParams.from_psi_delta(math.radians(30.0), math.radians(60.0))
    theta1, theta2 = 0.7, 1.1
    stage = TwinPhotonJonesMatrix.diagonal(sample_matrix(sample), jones_identity())
    field = apply_twin_matrix(stage, beam_splitter_field())
    field = apply_twin_matrix(analyzer_pair(theta1, theta2), field)

    u1 = np.array([math.cos(theta1), math.sin(theta1)])
    u2 = np.array([math.cos(theta2), math.sin(theta2)])
    coeff1 = np.array(
        [-1j * sample.r1 * math.cos(theta1), 1j * sample.r2 * math.sin(theta1)]
    )
    coeff2 = np.array([math.cos(theta2), math.sin(theta2)])
    np.testing.assert_allclose(field.beam1, np.outer(u1, coeff1), atol=1e-12)
    np.testing.assert_allclose(field.beam2, np.outer(u2, coeff2), atol=1e-12)


def test_apply_is_linear(rng):
    def random_field():
        return TwinPhotonField(
            rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)),
            rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)),
        )

    def random_matrix():
        blocks = [
            rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)
        ]
        return TwinPhotonJonesMatrix(*blocks)

    for _ in range(20):
        m = random_matrix()
        f, g = random_field(), random_field()
        alpha = complex(rng.normal(), rng.normal())
        beta = complex(rng.normal(), rng.normal())
        combo = TwinPhotonField(
            alpha * f.beam1 + beta * g.beam1, alpha * f.beam2 + beta * g.beam2
        )
        left = apply_twin_matrix(m, combo)
        mf, mg = apply_twin_matrix(m, f), apply_twin_matrix(m, g)
        np.testing.assert_allclose(
            left.beam1, alpha * mf.beam1 + beta * mg.beam1, atol=1e-12
        )
        np.testing.assert_allclose(
            left.beam2, alpha * mf.beam2 + beta * mg.beam2, atol=1e-12
        )


def test_compose_identity_neutral(rng):
    blocks = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    m = TwinPhotonJonesMatrix(*blocks)
    ident = TwinPhotonJonesMatrix.identity()
    for combo in (compose(ident, m), compose(m, ident)):
        np.testing.assert_allclose(combo.t11, m.t11, atol=1e-14)
        np.testing.assert_allclose(combo.t12, m.t12, atol=1e-14)
        np.testing.assert_allclose(combo.t21, m.t21, atol=1e-14)
        np.testing.assert_allclose(combo.t22, m.t22, atol=1e-14)


def test_compose_matches_sequential_application(rng):
    sample = SampleParams.from_psi_delta(math.radians(35.0), math.radians(20.0))
    sample_stage = TwinPhotonJonesMatrix.diagonal(sample_matrix(sample), jones_identity())
    analyzers = analyzer_pair(0.3, 1.2)
    field = beam_splitter_field()
    sequential = apply_twin_matrix(analyzers, apply_twin_matrix(sample_stage, field))
    composed = apply_twin_matrix(compose(analyzers, sample_stage), field)
    np.testing.assert_allclose(sequential.beam1, composed.beam1, atol=1e-13)
    np.testing.assert_allclose(sequential.beam2, composed.beam2, atol=1e-13)


def test_compose_associative(rng):
    def random_matrix():
        blocks = [
            rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)
        ]
        return TwinPhotonJonesMatrix(*blocks)

    for _ in range(30):
        a, b, c = random_matrix(), random_matrix(), random_matrix()
        left = compose(compose(a, b), c)
        right = compose(a, compose(b, c))
        for name in ("t11", "t12", "t21", "t22"):
            np.testing.assert_allclose(
                getattr(left, name), getattr(right, name), atol=1e-12
            )


def test_compose_preserves_block_diagonal(rng):
    def random_diag():
        return TwinPhotonJonesMatrix.diagonal(
            rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)),
            rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)),
        )

    combo = compose(random_diag(), random_diag())
    assert not combo.mixes_beams


def test_twin_matrix_validation():
    with pytest.raises(ValueError):
        TwinPhotonJonesMatrix(np.eye(3), np.eye(2), np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        TwinPhotonField(np.full((2, 2), np.inf), np.eye(2))
