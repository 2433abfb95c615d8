import unittest

import numpy as np

from finegrain_mot.tracking import geometry
from finegrain_mot.tracking import motion


class MotionTest(unittest.TestCase):

    def setUp(self):
        self.box = geometry.Box(100, 50, 140, 130)

    def test_init_round_trip(self):
        state = motion.kf_init(self.box)
        out = motion.state_to_box(state)
        for a, b in zip(out, self.box):
            self.assertAlmostEqual(a, b)
        np.testing.assert_array_equal(state.mean[4:], np.zeros(4))

    def test_predict_without_velocity_keeps_box(self):
        state = motion.kf_predict(motion.kf_init(self.box))
        for a, b in zip(motion.state_to_box(state), self.box):
            self.assertAlmostEqual(a, b)

    def test_multi_step_predict_composes(self):
        state = motion.kf_init(self.box)
        state = motion.kf_update(motion.kf_predict(state),
                                 geometry.Box(104, 52, 144, 132))
        two = motion.kf_predict(state, dt=2)
        one_one = motion.kf_predict(motion.kf_predict(state))
        np.testing.assert_allclose(two.mean, one_one.mean)
        np.testing.assert_allclose(two.covariance, one_one.covariance)

    def test_constant_velocity_is_learned(self):
        state = motion.kf_init(self.box)
        for k in range(1, 30):
            box = geometry.Box(100 + 5 * k, 50, 140 + 5 * k, 130)
            state = motion.kf_update(motion.kf_predict(state), box)
        predicted = motion.state_to_box(motion.kf_predict(state))
        self.assertAlmostEqual(predicted.x1, 100 + 5 * 30, delta=2.0)
        self.assertAlmostEqual(state.mean[4], 5.0, delta=0.5)

    def test_covariance_stays_symmetric_positive(self):
        state = motion.kf_init(self.box)
        for k in range(10):
            state = motion.kf_update(motion.kf_predict(state), self.box)
        np.testing.assert_allclose(state.covariance, state.covariance.T)
        self.assertTrue(np.all(np.linalg.eigvalsh(state.covariance) > 0))

    def test_invalid_measurements(self):
        state = motion.kf_init(self.box)
        with self.assertRaises(ValueError):
            motion.kf_update(state, geometry.Box(10, 10, 10, 20))
        with self.assertRaises(ValueError):
            motion.kf_init(geometry.Box(0, 0, float('inf'), 5))
        with self.assertRaises(ValueError):
            motion.kf_predict(state, dt=0)


if __name__ == '__main__':
    unittest.main()
