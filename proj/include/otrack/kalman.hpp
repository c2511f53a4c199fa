// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "otrack/geometry.hpp"

namespace otrack {

using KalmanVector = Eigen::Matrix<double, 8, 1>;
using KalmanCovariance = Eigen::Matrix<double, 8, 8>;

/// Constant-velocity state over (cx, cy, w, h) and their per-frame rates.
struct KalmanState {
    KalmanVector mean = KalmanVector::Zero();
    KalmanCovariance covariance = KalmanCovariance::Identity();

    BBox box() const;
};

/// Noise standard deviations are these weights times the object height.
struct KalmanParams {
    double std_weight_position = 1.0 / 20.0;
    double std_weight_velocity = 1.0 / 160.0;
    double std_weight_measurement = 1.0 / 20.0;
    double init_position_factor = 2.0;
    double init_velocity_factor = 10.0;
    double min_size = 1.0;
};

class KalmanBoxFilter {
public:
    explicit KalmanBoxFilter(KalmanParams params = {}) : params_(params) {}

    KalmanState init(const BBox& box) const;
    /// Advances one frame. The covariance grows by the process noise.
    KalmanState predict(const KalmanState& state) const;
    /// Posterior given a box measurement. `noise_scale` multiplies the
    /// measurement standard deviation; 0 trusts the measurement exactly.
    KalmanState update(const KalmanState& state, const BBox& measurement, double noise_scale = 1.0) const;

    const KalmanParams& params() const { return params_; }

private:
    KalmanParams params_;
};

}  // namespace otrack
