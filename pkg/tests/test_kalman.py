import numpy as np
import pytest

from mcvt.core import BBox
from mcvt.edge.kalman import BoxKalman, bbox_to_state, state_to_bbox


def test_state_round_trip():
    b = BBox(10, 20, 30, 40)
    assert state_to_bbox(np.concatenate([bbox_to_state(b), np.zeros(4)])) == b


def test_zero_velocity_prediction_is_stationary():
    kf = BoxKalman()
    mean, cov = kf.initiate(BBox(100, 100, 20, 40))
    mean, _ = kf.predict(mean, cov)
    assert state_to_bbox(mean) == BBox(100, 100, 20, 40)


def test_constant_velocity_propagation():
    kf = BoxKalman()
    mean, cov = kf.initiate(BBox(90, 100, 20, 40))  # cx = 100
    mean[4] = 2.0  # px/frame along cx
    mean, _ = kf.predict(mean, cov)
    assert mean[0] == pytest.approx(102.0)
    mean, _ = kf.predict(mean, cov)
    assert mean[0] == pytest.approx(104.0)


def test_predict_inflates_covariance():
    kf = BoxKalman()
    mean, cov = kf.initiate(BBox(100, 100, 20, 40))
    _, cov2 = kf.predict(mean, cov)
    assert np.trace(cov2) > np.trace(cov)


def test_zero_innovation_keeps_position():
    kf = BoxKalman()
    mean, cov = kf.initiate(BBox(100, 100, 20, 40))
    mean, cov = kf.predict(mean, cov)
    predicted = state_to_bbox(mean)
    new_mean, new_cov = kf.update(mean, cov, predicted)
    assert np.allclose(new_mean[:4], mean[:4])
    assert np.trace(new_cov) < np.trace(cov)


def test_tiny_measurement_noise_trusts_observation():
    kf = BoxKalman()
    mean, cov = kf.initiate(BBox(100, 100, 20, 40))
    mean, cov = kf.predict(mean, cov)
    obs = BBox(130, 90, 22, 44)
    new_mean, _ = kf.update(mean, cov, obs, meas_scale=1e-12)
    assert np.allclose(new_mean[:4], bbox_to_state(obs), atol=1e-3)


def test_huge_measurement_noise_trusts_prediction():
    kf = BoxKalman()
    mean, cov = kf.initiate(BBox(100, 100, 20, 40))
    mean, cov = kf.predict(mean, cov)
    new_mean, _ = kf.update(mean, cov, BBox(400, 300, 22, 44), meas_scale=1e12)
    assert np.allclose(new_mean[:4], mean[:4], atol=1e-3)


def test_update_keeps_covariance_symmetric_psd():
    kf = BoxKalman()
    mean, cov = kf.initiate(BBox(100, 100, 20, 40))
    for i in range(50):
        mean, cov = kf.predict(mean, cov)
        mean, cov = kf.update(mean, cov, BBox(100 + 3 * i, 100, 20, 40))
    assert np.allclose(cov, cov.T)
    assert np.all(np.linalg.eigvalsh(cov) > -1e-9)
