import numpy as np
import pytest

import ptychokit as pk
from ptychokit import DimensionError, GeometryError
from ptychokit.optics import _round_half_up


def _rng(seed=0):
    return np.random.default_rng(seed)


def _random_complex(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


# ---------------------------------------------------------------- geometry

def test_build_camera_array_spacing_rule():
    g = pk.build_camera_array(64, 3, 15, 0.65)
    # spacing round(15 * 0.35) = 5, so the 3x3 lattice spans 2*5 + 15 = 25 px
    assert _round_half_up(15 * 0.35) == 5
    rows = sorted({c[0] for c in g.centers})
    assert rows == [27.0, 32.0, 37.0]
    assert g.camera_count == 9


def test_single_camera_centered_at_dc():
    g = pk.build_camera_array(64, 1, 15, 0.65)
    assert g.camera_count == 1
    assert tuple(g.centers[0]) == (32.0, 32.0)


def test_oversized_array_rejected_with_minimum():
    with pytest.raises(GeometryError) as exc:
        pk.build_camera_array(32, 9, 15, 0.65)
    assert "55" in str(exc.value)  # 8 * 5 + 15


def test_pupil_disc_small_diameter_plus_shape():
    g = pk.build_camera_array(16, 1, 2, 0.0)
    mask = pk.pupil_mask(g, 0)
    # radius-1 disc around DC keeps the center and its 4 axis neighbors
    assert mask.sum() == 5
    assert mask[8, 8] == 1 and mask[7, 8] == 1 and mask[8, 7] == 1


def test_pupil_disc_matches_bruteforce_count():
    g = pk.build_camera_array(64, 3, 15, 0.65)
    for cam in range(g.camera_count):
        cr, cc = g.centers[cam]
        count = 0
        for r in range(64):
            for c in range(64):
                if (r - cr) ** 2 + (c - cc) ** 2 <= (15 / 2) ** 2:
                    count += 1
        assert pk.pupil_mask(g, cam).sum() == count


def test_zero_overlap_pupils_disjoint():
    # odd diameter keeps the tangent point off the integer grid; with an
    # even diameter the closed-disc rule shares boundary pixels there
    g = pk.build_camera_array(64, 2, 7, 0.0)
    overlap = pk.pupil_mask(g, 0) * pk.pupil_mask(g, 1)
    assert overlap.sum() == 0


def test_pupil_index_out_of_range():
    g = pk.build_camera_array(32, 2, 7, 0.5)
    with pytest.raises(IndexError):
        pk.pupil_mask(g, 4)


# ---------------------------------------------------------------- sampling

def test_full_sampling_keeps_everything():
    m = pk.sampling_mask(10, 1.0, 123)
    assert np.array_equal(m.kept, np.arange(100))


def test_sampling_exact_count_and_determinism():
    m1 = pk.sampling_mask(10, 0.1, 5)
    m2 = pk.sampling_mask(10, 0.1, 5)
    assert len(m1.kept) == 10
    assert np.array_equal(m1.kept, m2.kept)
    assert len(np.unique(m1.kept)) == 10
    assert m1.kept.max() < 100


def test_sampling_different_seeds_differ():
    m1 = pk.sampling_mask(10, 0.1, 42)
    m2 = pk.sampling_mask(10, 0.1, 43)
    assert not np.array_equal(m1.kept, m2.kept)


def test_sampling_fraction_out_of_range():
    with pytest.raises(ValueError):
        pk.sampling_mask(10, 0.0, 1)
    with pytest.raises(ValueError):
        pk.sampling_mask(10, 1.5, 1)


def test_sampling_count_rounds_half_up():
    # 0.125 * 36 = 4.5 rounds to 5
    assert len(pk.sampling_mask(6, 0.125, 0).kept) == 5


# ---------------------------------------------------------------- operators

def test_identity_configuration_is_identity():
    g = pk.full_field_geometry(16)
    mask = pk.sampling_mask(16, 1.0, 0)
    x = _random_complex(_rng(1), 16)
    assert np.max(np.abs(pk.forward_linear(x, g, 0, mask) - x)) < 1e-12
    assert np.max(np.abs(pk.adjoint_linear(x, g, 0, mask) - x)) < 1e-12


def test_zero_image_maps_to_zero_every_camera():
    g = pk.build_camera_array(16, 2, 7, 0.65)
    mask = pk.sampling_mask(16, 0.5, 3)
    z = np.zeros((16, 16), dtype=np.complex128)
    for cam in range(g.camera_count):
        assert np.all(pk.forward_linear(z, g, cam, mask) == 0)
        assert np.all(pk.adjoint_linear(z, g, cam, mask) == 0)


def test_adjoint_identity_random_instances():
    rng = _rng(99)
    for trial in range(10):
        g = pk.build_camera_array(32, int(rng.integers(1, 4)), 9, 0.5)
        cam = int(rng.integers(g.camera_count))
        mask = pk.sampling_mask(32, float(rng.uniform(0.05, 1.0)), trial)
        x = _random_complex(rng, 32)
        u = _random_complex(rng, 32)
        lhs = np.vdot(u, pk.forward_linear(x, g, cam, mask))
        rhs = np.vdot(pk.adjoint_linear(u, g, cam, mask), x)
        assert abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(u)) < 1e-10


def test_forward_is_linear():
    g = pk.build_camera_array(16, 2, 7, 0.65)
    mask = pk.sampling_mask(16, 0.4, 8)
    rng = _rng(5)
    x, y = _random_complex(rng, 16), _random_complex(rng, 16)
    a, b = 0.7 - 1.1j, 2.2 + 0.3j
    lhs = pk.forward_linear(a * x + b * y, g, 0, mask)
    rhs = a * pk.forward_linear(x, g, 0, mask) + b * pk.forward_linear(y, g, 0, mask)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_forward_contracts_energy():
    g = pk.build_camera_array(16, 3, 5, 0.3)
    mask = pk.sampling_mask(16, 0.7, 2)
    x = _random_complex(_rng(6), 16)
    for cam in range(g.camera_count):
        assert np.linalg.norm(pk.forward_linear(x, g, cam, mask)) <= np.linalg.norm(x) + 1e-12


def test_aa_is_self_adjoint():
    g = pk.build_camera_array(16, 2, 7, 0.65)
    mask = pk.sampling_mask(16, 0.5, 77)
    rng = _rng(10)
    x, y = _random_complex(rng, 16), _random_complex(rng, 16)

    def normal_op(v):
        return pk.adjoint_linear(pk.forward_linear(v, g, 1, mask), g, 1, mask)

    lhs = np.vdot(y, normal_op(x))
    rhs = np.vdot(normal_op(y), x)
    assert abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)) < 1e-10


def test_forward_shape_mismatch_rejected():
    g = pk.build_camera_array(16, 1, 7, 0.0)
    mask = pk.sampling_mask(16, 1.0, 0)
    with pytest.raises(DimensionError):
        pk.forward_linear(np.zeros((8, 8)), g, 0, mask)


# ---------------------------------------------------------------- measure

def _measured_instance(noise_std=0.0, fraction=0.5, seed=0):
    g = pk.build_camera_array(16, 2, 7, 0.65)
    masks = [pk.sampling_mask(16, fraction, 100 + c) for c in range(g.camera_count)]
    scene = _rng(seed).uniform(0.0, 1.0, size=(16, 16))
    return scene, g, masks, pk.measure(scene, g, masks, noise_std, 31 + seed)


def test_measure_noiseless_matches_forward_magnitude():
    scene, g, masks, m = _measured_instance(0.0)
    for cam in range(g.camera_count):
        expected = np.abs(pk.forward_linear(scene.astype(np.complex128), g, cam, masks[cam]))
        assert np.max(np.abs(m.magnitudes[cam] - expected)) < 1e-14


def test_measure_is_deterministic():
    _, _, _, m1 = _measured_instance(0.05, seed=3)
    _, _, _, m2 = _measured_instance(0.05, seed=3)
    assert np.array_equal(m1.magnitudes, m2.magnitudes)


def test_measure_nonnegative_and_zero_off_mask():
    _, g, masks, m = _measured_instance(0.2)
    assert m.magnitudes.min() >= 0.0
    for cam in range(g.camera_count):
        off = ~masks[cam].grid
        assert np.all(m.magnitudes[cam][off] == 0.0)


def test_measure_noise_stream_mean():
    # per-camera noise comes from splitmix64 streams; check the empirical
    # mean of the injected noise against theory at std 0.01
    g = pk.full_field_geometry(32)
    mask = pk.sampling_mask(32, 1.0, 0)
    scene = np.full((32, 32), 0.5)
    clean = pk.measure(scene, g, [mask], 0.0, 11)
    noisy = pk.measure(scene, g, [mask], 0.01, 11)
    diff = (noisy.magnitudes - clean.magnitudes).ravel()
    assert abs(diff.mean()) < 4 * 0.01 / np.sqrt(diff.size)


def test_measure_rejects_unnormalized_scene():
    g = pk.full_field_geometry(16)
    mask = pk.sampling_mask(16, 1.0, 0)
    with pytest.raises(ValueError):
        pk.measure(np.full((16, 16), 1.5), g, [mask], 0.0, 0)


# ------------------------------------------------------------- gradient

def test_gradient_zero_at_consistent_point():
    scene, g, masks, m = _measured_instance(0.0, fraction=1.0)
    grad = pk.residual_gradient(scene.astype(np.complex128), m)
    assert np.max(np.abs(grad)) < 1e-8


def test_gradient_matches_finite_differences():
    scene, g, masks, m = _measured_instance(0.0)
    rng = _rng(21)
    x0 = _random_complex(rng, 16)
    loss0, grad = pk.measurement_loss_and_gradient(x0, m)
    direction = _random_complex(rng, 16)
    h = 1e-6
    fd = (pk.measurement_loss(x0 + h * direction, m)
          - pk.measurement_loss(x0 - h * direction, m)) / (2 * h)
    analytic = 2.0 * np.real(np.vdot(grad, direction))
    assert abs(fd - analytic) / abs(fd) < 1e-4


def test_gradient_zero_measurements_collapses_to_normal_operator():
    g = pk.build_camera_array(16, 2, 7, 0.65)
    masks = [pk.sampling_mask(16, 0.6, 40 + c) for c in range(g.camera_count)]
    zero_scene = np.zeros((16, 16))
    m = pk.measure(zero_scene, g, masks, 0.0, 0)
    delta = np.zeros((16, 16), dtype=np.complex128)
    delta[4, 9] = 1.0
    grad = pk.residual_gradient(delta, m)
    expected = np.zeros_like(delta)
    for cam in range(g.camera_count):
        expected += pk.adjoint_linear(
            pk.forward_linear(delta, g, cam, masks[cam]), g, cam, masks[cam]
        )
    assert np.max(np.abs(grad - expected)) < 1e-12


def test_subsampling_pct_accounting():
    _, g, masks, m = _measured_instance(0.0, fraction=0.25)
    kept = sum(len(mk.kept) for mk in masks)
    assert m.subsampling_pct() == pytest.approx(100.0 * kept / (256 * 4))
