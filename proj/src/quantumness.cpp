#include <cmath>
#include <random>

#include <fmt/format.h>

#include "scarcat/errors.hpp"
#include "scarcat/observables.hpp"

namespace scarcat {

namespace {

Eigen::Vector3d random_unit(std::mt19937_64 &rng) {
    std::normal_distribution<double> gauss;
    Eigen::Vector3d v;
    do {
        v = {gauss(rng), gauss(rng), gauss(rng)};
    } while (v.norm() < 1e-8);
    return v.normalized();
}

void check_covariance(const CovarianceMatrix &k) {
    const Eigen::Index n = k.entries.rows();
    if (n == 0 || n != k.entries.cols() || n % 3 != 0 || n / 3 != k.region.size())
        throw InvalidArgument("covariance matrix does not match its region");
}

std::vector<Eigen::Vector3d> split_blocks(const Eigen::VectorXd &v) {
    std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(v.size() / 3));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = v.segment<3>(static_cast<Eigen::Index>(3 * j));
    return out;
}

} // namespace

namespace {

// Fixed-point sweep w = K v followed by block normalization, from the given start.
QuantumnessResult sweep(const Eigen::MatrixXd &K, Eigen::VectorXd v, std::mt19937_64 &rng,
                        const QuantumnessOptions &opt) {
    const Eigen::Index sites = K.rows() / 3;
    QuantumnessResult r;
    double value = 0.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const Eigen::VectorXd w = K * v;
        double next_value = 0.0, change = 0.0;
        Eigen::VectorXd next(v.size());
        for (Eigen::Index j = 0; j < sites; ++j) {
            const Eigen::Vector3d wj = w.segment<3>(3 * j);
            const double n = wj.norm();
            const Eigen::Vector3d b = n < 1e-14 ? random_unit(rng) : Eigen::Vector3d(wj / n);
            next_value += n;
            change = std::max(change, (b - v.segment<3>(3 * j)).norm());
            next.segment<3>(3 * j) = b;
        }
        next_value /= static_cast<double>(sites);
        const double value_change = std::abs(next_value - value);
        v = next;
        value = next_value;
        r.iterations = it;
        if (change < opt.tolerance && value_change < opt.tolerance) {
            r.converged = true;
            break;
        }
    }
    r.value = value;
    r.directions = split_blocks(v);
    r.variance_value = v.dot(K * v) / static_cast<double>(sites);
    return r;
}

} // namespace

QuantumnessResult quantumness_iterative(const CovarianceMatrix &k, const QuantumnessOptions &opt) {
    check_covariance(k);
    if (opt.starts < 1) throw InvalidArgument("at least one start required");
    const Eigen::MatrixXd &K = k.entries;
    const Eigen::Index sites = K.rows() / 3;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> perturb(-1e-3, 1e-3);

    // Start 0 is the perturbed x field; later starts are uniform y and z fields, then random fields.
    // The sweep only finds a local maximum, so the best fixed point over all starts is kept.
    QuantumnessResult best;
    for (int s = 0; s < opt.starts; ++s) {
        Eigen::VectorXd v(K.rows());
        for (Eigen::Index j = 0; j < sites; ++j) {
            Eigen::Vector3d b;
            if (s == 0)
                b = Eigen::Vector3d(1.0 + perturb(rng), perturb(rng), perturb(rng)).normalized();
            else if (s < 3)
                b = Eigen::Vector3d::Unit(s);
            else
                b = random_unit(rng);
            v.segment<3>(3 * j) = b;
        }
        auto r = sweep(K, v, rng, opt);
        if (s == 0 || r.value > best.value + 1e-9) {
            r.iterations += best.iterations;
            best = std::move(r);
        } else {
            best.iterations += r.iterations;
        }
    }
    return best;
}

QuantumnessResult quantumness_dense(const CovarianceMatrix &k, int starts, std::uint64_t seed) {
    check_covariance(k);
    const Eigen::MatrixXd &K = k.entries;
    const Eigen::Index sites = K.rows() / 3;
    if (sites > 8) throw InvalidArgument(fmt::format("dense quantumness oracle limited to 8 sites, got {}", sites));
    if (starts < 1) throw InvalidArgument("at least one start required");
    std::mt19937_64 rng(seed);

    auto normalize = [&](Eigen::VectorXd &v) {
        for (Eigen::Index j = 0; j < sites; ++j) v.segment<3>(3 * j).normalize();
    };
    auto project = [&](const Eigen::VectorXd &v, Eigen::VectorXd g) {
        for (Eigen::Index j = 0; j < sites; ++j) {
            const Eigen::Vector3d vj = v.segment<3>(3 * j);
            g.segment<3>(3 * j) -= vj.dot(g.segment<3>(3 * j)) * vj;
        }
        return g;
    };

    QuantumnessResult best;
    best.value = -1.0;
    const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd v(K.rows());
        for (Eigen::Index j = 0; j < sites; ++j) {
            // The first three starts are uniform fields along x, y and z.
            Eigen::Vector3d b = s < 3 ? Eigen::Vector3d::Unit(s) : random_unit(rng);
            v.segment<3>(3 * j) = b;
        }
        double f = v.dot(K * v);
        double step = 1.0 / scale;
        int it = 0;
        for (; it < 20000; ++it) {
            const Eigen::VectorXd g = project(v, 2.0 * (K * v));
            const double gnorm2 = g.squaredNorm();
            if (gnorm2 < 1e-26 * scale * scale) break;
            // Armijo backtracking along the projected gradient with normalization as retraction.
            step = std::min(step * 2.0, 10.0 / scale);
            for (;;) {
                Eigen::VectorXd trial = v + step * g;
                normalize(trial);
                const double ft = trial.dot(K * trial);
                if (ft >= f + 1e-4 * step * gnorm2 || step < 1e-14) {
                    if (ft >= f) {
                        v = trial;
                        f = ft;
                    }
                    break;
                }
                step *= 0.5;
            }
            if (step < 1e-14) break;
        }
        const double value = f / static_cast<double>(sites);
        if (value > best.value) {
            best.value = value;
            best.variance_value = value;
            best.directions = split_blocks(v);
            best.iterations = it;
            best.converged = true;
        }
    }
    return best;
}

} // namespace scarcat
