// SPDX-License-Identifier: Apache-2.0
#include "otrack/kalman.hpp"

#include <algorithm>
#include <stdexcept>

namespace otrack {

namespace {

using Measurement = Eigen::Matrix<double, 4, 1>;
using ObservationMatrix = Eigen::Matrix<double, 4, 8>;

ObservationMatrix observation() {
    ObservationMatrix h = ObservationMatrix::Zero();
    h.leftCols<4>().setIdentity();
    return h;
}

void symmetrize(KalmanCovariance& p) {
    p = 0.5 * (p + p.transpose());
}

}  // namespace

BBox KalmanState::box() const {
    return BBox::from_center({mean(0), mean(1)}, mean(2), mean(3));
}

KalmanState KalmanBoxFilter::init(const BBox& box) const {
    if (!box.valid() || area(box) <= 0.0) {
        throw std::invalid_argument("KalmanBoxFilter::init: box must have positive area");
    }
    KalmanState s;
    const Point2 c = box.center();
    s.mean << c.x, c.y, box.width(), box.height(), 0.0, 0.0, 0.0, 0.0;
    const double h = box.height();
    const double sp = params_.init_position_factor * params_.std_weight_position * h;
    const double sv = params_.init_velocity_factor * params_.std_weight_velocity * h;
    KalmanVector var;
    var << sp, sp, sp, sp, sv, sv, sv, sv;
    s.covariance = var.cwiseAbs2().asDiagonal();
    return s;
}

KalmanState KalmanBoxFilter::predict(const KalmanState& state) const {
    KalmanCovariance f = KalmanCovariance::Identity();
    f.topRightCorner<4, 4>().setIdentity();

    const double h = state.mean(3);
    const double sp = params_.std_weight_position * h;
    const double sv = params_.std_weight_velocity * h;
    KalmanVector q;
    q << sp, sp, sp, sp, sv, sv, sv, sv;

    KalmanState out;
    out.mean = f * state.mean;
    out.mean(2) = std::max(out.mean(2), params_.min_size);
    out.mean(3) = std::max(out.mean(3), params_.min_size);
    out.covariance = f * state.covariance * f.transpose();
    out.covariance.diagonal() += q.cwiseAbs2();
    symmetrize(out.covariance);
    return out;
}

KalmanState KalmanBoxFilter::update(const KalmanState& state, const BBox& measurement, double noise_scale) const {
    const ObservationMatrix hm = observation();
    const Point2 c = measurement.center();
    Measurement z;
    z << c.x, c.y, measurement.width(), measurement.height();

    const double sr = noise_scale * params_.std_weight_measurement * state.mean(3);
    const Eigen::Matrix4d r = Eigen::Vector4d::Constant(sr * sr).asDiagonal();
    const Eigen::Matrix4d s = hm * state.covariance * hm.transpose() + r;
    // K = P H^T S^-1, solved as S K^T = H P.
    const Eigen::Matrix<double, 8, 4> gain = s.ldlt().solve(hm * state.covariance).transpose();

    KalmanState out;
    out.mean = state.mean + gain * (z - hm * state.mean);
    out.mean(2) = std::max(out.mean(2), params_.min_size);
    out.mean(3) = std::max(out.mean(3), params_.min_size);
    // Joseph form keeps the covariance PSD for any gain.
    const KalmanCovariance ikh = KalmanCovariance::Identity() - gain * hm;
    out.covariance = ikh * state.covariance * ikh.transpose() + gain * r * gain.transpose();
    symmetrize(out.covariance);
    return out;
}

}  // namespace otrack
