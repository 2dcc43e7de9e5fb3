#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace insider {

// Monomials of total degree <= d in n variables.
class PolynomialBasis {
public:
    PolynomialBasis(std::size_t n_features, std::size_t degree) : n_(n_features) {
        if (degree < 1) throw ConfigError("regression basis degree must be at least 1");
        std::vector<unsigned> e(n_, 0);
        enumerate(e, 0, degree);
    }

    std::size_t size() const { return exps_.size(); }
    std::size_t features() const { return n_; }
    const std::vector<std::vector<unsigned>>& exponents() const { return exps_; }

private:
    void enumerate(std::vector<unsigned>& e, std::size_t pos, std::size_t left) {
        if (pos == n_) {
            exps_.push_back(e);
            return;
        }
        for (std::size_t d = 0; d <= left; ++d) {
            e[pos] = static_cast<unsigned>(d);
            enumerate(e, pos + 1, left - d);
        }
        e[pos] = 0;
    }

    std::size_t n_;
    std::vector<std::vector<unsigned>> exps_;
};

// Least-squares projection onto span{phi(z)} (and K phi(z) when a kernel is
// given) for one cross-section of paths. Features are standardized and
// columns scaled to unit norm before a complete orthogonal decomposition,
// so collinear columns are tolerated.
class CrossSectionRegression {
public:
    CrossSectionRegression(const double* features, std::size_t n, const PolynomialBasis& basis,
                           const double* kernel = nullptr) {
        const std::size_t nf = basis.features();
        const std::size_t m = basis.size() * (kernel ? 2 : 1);
        if (n < m)
            throw SolverError("regression needs at least " + std::to_string(m) + " paths for " +
                              std::to_string(m) + " basis functions (have " + std::to_string(n) +
                              "); increase n_paths or lower basis_degree");
        std::vector<double> z(n * nf);
        for (std::size_t f = 0; f < nf; ++f) {
            double mean = 0.0;
            for (std::size_t p = 0; p < n; ++p) mean += features[p * nf + f];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                const double d = features[p * nf + f] - mean;
                var += d * d;
            }
            const double sd = std::sqrt(var / static_cast<double>(n));
            const bool flat = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
            for (std::size_t p = 0; p < n; ++p) z[p * nf + f] = flat ? 0.0 : (features[p * nf + f] - mean) / sd;
        }
        A_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        const auto& ex = basis.exponents();
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t b = 0; b < ex.size(); ++b) {
                double v = 1.0;
                for (std::size_t f = 0; f < nf; ++f)
                    for (unsigned e = 0; e < ex[b][f]; ++e) v *= z[p * nf + f];
                A_(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)) = v;
                if (kernel)
                    A_(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b + ex.size())) = v * kernel[p];
            }
        for (Eigen::Index c = 0; c < A_.cols(); ++c) {
            const double norm = A_.col(c).norm();
            if (norm > 0.0) A_.col(c) /= norm;
        }
        cod_.setThreshold(1e-11);
        cod_.compute(A_);
    }

    // fitted[p] = projection of y onto the basis, evaluated on path p.
    void fit(const double* y, double* fitted) const {
        const Eigen::Map<const Eigen::VectorXd> rhs(y, A_.rows());
        const Eigen::VectorXd coef = cod_.solve(rhs);
        Eigen::Map<Eigen::VectorXd>(fitted, A_.rows()) = A_ * coef;
    }

    std::size_t rank() const { return static_cast<std::size_t>(cod_.rank()); }

private:
    Eigen::MatrixXd A_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
};

}  // namespace insider
