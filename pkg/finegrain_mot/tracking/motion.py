"""Constant-velocity Kalman filter over (cx, cy, aspect, height) box state.

The parameterisation and the height-proportional noise follow the SORT/BYTE
family of trackers, so the predicted box used for fine-grained weighting is
produced exactly as the coarse baseline produces it.
"""

import collections
import math

import numpy as np
import scipy.linalg

from finegrain_mot.tracking import geometry


# mean: 8-vector (cx, cy, aspect, height, vcx, vcy, vaspect, vheight).
KalmanState = collections.namedtuple('KalmanState', ['mean', 'covariance'])

MotionConfig = collections.namedtuple('MotionConfig', [
    'position_weight',
    'velocity_weight',
    'init_position_factor',
    'init_velocity_factor',
    'aspect_std',
    'aspect_velocity_std',
    'measurement_aspect_std',
    'process_scale',
])
MotionConfig.__new__.__defaults__ = (
    1. / 20, 1. / 160, 2.0, 10.0, 1e-2, 1e-5, 1e-1, 1.0)

MIN_ASPECT = 1e-3
MAX_ASPECT = 1e3
MIN_HEIGHT = 1.0

_NDIM = 4
_MOTION_MAT = np.eye(2 * _NDIM)
for _i in range(_NDIM):
    _MOTION_MAT[_i, _NDIM + _i] = 1.0
_UPDATE_MAT = np.eye(_NDIM, 2 * _NDIM)


def box_to_measurement(box):
    w, h = geometry.width(box), geometry.height(box)
    c = geometry.center(box)
    return np.array([c.x, c.y, w / h, h], dtype=np.float64)


def state_to_box(state):
    cx, cy, aspect, h = state.mean[:4]
    w = aspect * h
    return geometry.Box(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


def _symmetrize(covariance):
    return (covariance + covariance.T) / 2.0


def _clamp(mean):
    mean = mean.copy()
    mean[2] = min(max(mean[2], MIN_ASPECT), MAX_ASPECT)
    mean[3] = max(mean[3], MIN_HEIGHT)
    return mean


def _check_measurement(measurement):
    if not geometry.is_valid(measurement):
        raise ValueError('Invalid measurement box: %s' % (measurement,))
    if geometry.is_degenerate(measurement):
        raise ValueError('Degenerate measurement box: %s' % (measurement,))


def kf_init(measurement, cfg=MotionConfig()):
    """Creates a track state from an unassociated measurement.

    Velocities start at zero; their uncertainty is large relative to the
    position uncertainty.
    """
    _check_measurement(measurement)
    z = box_to_measurement(measurement)
    mean = np.r_[z, np.zeros(_NDIM)]
    h = z[3]
    std = [
        cfg.init_position_factor * cfg.position_weight * h,
        cfg.init_position_factor * cfg.position_weight * h,
        cfg.aspect_std,
        cfg.init_position_factor * cfg.position_weight * h,
        cfg.init_velocity_factor * cfg.velocity_weight * h,
        cfg.init_velocity_factor * cfg.velocity_weight * h,
        cfg.aspect_velocity_std,
        cfg.init_velocity_factor * cfg.velocity_weight * h,
    ]
    return KalmanState(mean, np.diag(np.square(std)))


def _process_noise(mean, cfg):
    h = mean[3]
    std_pos = [cfg.position_weight * h, cfg.position_weight * h,
               cfg.aspect_std, cfg.position_weight * h]
    std_vel = [cfg.velocity_weight * h, cfg.velocity_weight * h,
               cfg.aspect_velocity_std, cfg.velocity_weight * h]
    return cfg.process_scale * np.diag(np.square(np.r_[std_pos, std_vel]))


def _predict_once(state, cfg):
    motion_cov = _process_noise(state.mean, cfg)
    mean = _clamp(np.dot(_MOTION_MAT, state.mean))
    covariance = np.linalg.multi_dot(
        (_MOTION_MAT, state.covariance, _MOTION_MAT.T)) + motion_cov
    return KalmanState(mean, _symmetrize(covariance))


def kf_predict(state, dt=1, cfg=MotionConfig()):
    """Advances the state by `dt` whole frames.

    A multi-frame prediction is exactly `dt` single-frame predictions, so
    predict(dt=2) and two predict(dt=1) calls agree.
    """
    if dt < 1 or int(dt) != dt:
        raise ValueError('dt must be a positive whole number of frames, got %s' % dt)
    for _ in range(int(dt)):
        state = _predict_once(state, cfg)
    return state


def project(state, cfg=MotionConfig()):
    h = state.mean[3]
    std = [cfg.position_weight * h, cfg.position_weight * h,
           cfg.measurement_aspect_std, cfg.position_weight * h]
    innovation_cov = np.diag(np.square(std))
    mean = np.dot(_UPDATE_MAT, state.mean)
    covariance = np.linalg.multi_dot(
        (_UPDATE_MAT, state.covariance, _UPDATE_MAT.T))
    return mean, covariance + innovation_cov, innovation_cov


def kf_update(state, measurement, cfg=MotionConfig()):
    """Kalman correction with a box measurement (Joseph form)."""
    _check_measurement(measurement)
    z = box_to_measurement(measurement)
    if not all(math.isfinite(v) for v in z):
        raise ValueError('Non-finite measurement: %s' % (measurement,))
    projected_mean, projected_cov, innovation_cov = project(state, cfg)
    chol_factor, lower = scipy.linalg.cho_factor(
        projected_cov, lower=True, check_finite=False)
    kalman_gain = scipy.linalg.cho_solve(
        (chol_factor, lower), np.dot(state.covariance, _UPDATE_MAT.T).T,
        check_finite=False).T
    innovation = z - projected_mean
    mean = _clamp(state.mean + np.dot(kalman_gain, innovation))
    i_kh = np.eye(2 * _NDIM) - np.dot(kalman_gain, _UPDATE_MAT)
    covariance = (np.linalg.multi_dot((i_kh, state.covariance, i_kh.T)) +
                  np.linalg.multi_dot((kalman_gain, innovation_cov, kalman_gain.T)))
    return KalmanState(mean, _symmetrize(covariance))
