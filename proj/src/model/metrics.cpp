#include "gsformer/metrics.hpp"

#include <Eigen/Dense>
#include <string>

#include "gsformer/errors.hpp"

namespace gsf {

namespace {

std::size_t frame_count(std::span<const double> pred, std::span<const double> gt, std::size_t joints) {
    if (joints == 0) throw dimension_error("pose metrics need J >= 1");
    if (pred.size() != gt.size()) {
        throw dimension_error("pose metrics: prediction has " + std::to_string(pred.size()) +
                              " values, ground truth " + std::to_string(gt.size()));
    }
    if (pred.size() % (joints * 3) != 0) throw dimension_error("pose metrics: size is not a multiple of 3J");
    return pred.size() / (joints * 3);
}

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

double frame_error(const Points& a, const Points& b) { return (a - b).rowwise().norm().sum(); }

}  // namespace

double mpjpe(std::span<const double> pred, std::span<const double> gt, std::size_t joints) {
    const auto n = frame_count(pred, gt, joints);
    if (n == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); i += 3) {
        const double dx = pred[i] - gt[i];
        const double dy = pred[i + 1] - gt[i + 1];
        const double dz = pred[i + 2] - gt[i + 2];
        total += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return total / static_cast<double>(n * joints);
}

ProcrustesResult p_mpjpe(std::span<const double> pred, std::span<const double> gt, std::size_t joints) {
    const auto n = frame_count(pred, gt, joints);
    ProcrustesResult result;
    if (n == 0) return result;
    const auto j = static_cast<Eigen::Index>(joints);
    double total = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
        const Eigen::Map<const Points> x(pred.data() + f * joints * 3, j, 3);
        const Eigen::Map<const Points> y(gt.data() + f * joints * 3, j, 3);
        const Eigen::RowVector3d mu_x = x.colwise().mean();
        const Eigen::RowVector3d mu_y = y.colwise().mean();
        const Points xc = x.rowwise() - mu_x;
        const Points yc = y.rowwise() - mu_y;
        const double norm_x = xc.squaredNorm();
        if (norm_x < 1e-20 || yc.squaredNorm() < 1e-20) {
            result.degenerate = true;
            total += frame_error(x, y);
            continue;
        }
        // Rotation R maximizing tr(R^T Y^T X) with x aligned as x R^T.
        const Eigen::Matrix3d h = yc.transpose() * xc;
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
        if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1.0;
        const Eigen::Matrix3d r = svd.matrixU() * d * svd.matrixV().transpose();
        const double s = (svd.singularValues().asDiagonal() * d).trace() / norm_x;
        const Points aligned = ((s * xc) * r.transpose()).rowwise() + mu_y;
        total += frame_error(aligned, y);
    }
    result.value = total / static_cast<double>(n * joints);
    return result;
}

}  // namespace gsf
