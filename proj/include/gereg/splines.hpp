#pragma once

// Clamped cubic B-spline bases with equidistant interior knots.
//
// The raw covariate domain [a, b] is mapped affinely onto [0, 1] and the
// knot vector lives on that unit scale. Evaluation takes raw covariate
// values; derivatives are with respect to the raw covariate.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gereg {

/// Affine map from a raw covariate interval onto [0, 1].
struct CovariateMap {
    double lo = 0.0;
    double hi = 1.0;

    CovariateMap() = default;
    CovariateMap(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("CovariateMap: domain must be a non-degenerate finite interval");
    }

    double to_unit(double x) const noexcept { return (x - lo) / (hi - lo); }
    double from_unit(double u) const noexcept { return lo + u * (hi - lo); }
    /// du/dx
    double slope() const noexcept { return 1.0 / (hi - lo); }

    friend bool operator==(const CovariateMap&, const CovariateMap&) = default;
};

class SplineBasis {
public:
    static constexpr int kDegree = 3;

    /// Nonzero basis values on one knot span: entries for basis indices
    /// first .. first + 3.
    struct Local {
        std::size_t first = 0;
        std::array<double, kDegree + 1> values{};
    };

    static SplineBasis make(std::size_t num_basis, double a, double b) {
        if (num_basis < kDegree + 1)
            throw std::invalid_argument("make_basis: a cubic basis needs at least 4 functions, got " +
                                        std::to_string(num_basis));
        return SplineBasis(num_basis, CovariateMap(a, b));
    }

    std::size_t size() const noexcept { return num_basis_; }
    int degree() const noexcept { return kDegree; }
    double lower() const noexcept { return map_.lo; }
    double upper() const noexcept { return map_.hi; }
    const CovariateMap& map() const noexcept { return map_; }
    /// Knot vector on the unit scale, length size() + degree() + 1.
    const std::vector<double>& knots() const noexcept { return knots_; }

    bool contains(double x) const noexcept {
        const double u = map_.to_unit(x);
        return u >= -kEdgeTol && u <= 1.0 + kEdgeTol;
    }

    Local eval_local(double x) const {
        const double u = unit(x);
        const std::size_t span = find_span(u);
        Local out;
        out.first = span - kDegree;
        basis_funs<kDegree>(span, u, out.values);
        return out;
    }

    Local eval_deriv_local(double x) const {
        const double u = unit(x);
        const std::size_t span = find_span(u);
        // quadratic pieces N_{span-2..span, 2}
        std::array<double, kDegree> lower{};
        basis_funs<kDegree - 1>(span, u, lower);
        Local out;
        out.first = span - kDegree;
        for (int r = 0; r <= kDegree; ++r) {
            const std::size_t i = out.first + static_cast<std::size_t>(r);
            double d = 0.0;
            // N_{i,2} is nonzero only for i >= span - 2, i.e. r >= 1
            if (r >= 1) {
                const double den = knots_[i + kDegree] - knots_[i];
                if (den > 0.0) d += lower[r - 1] / den;
            }
            if (r <= kDegree - 1) {
                const double den = knots_[i + kDegree + 1] - knots_[i + 1];
                if (den > 0.0) d -= lower[r] / den;
            }
            out.values[r] = kDegree * d * map_.slope();
        }
        return out;
    }

    std::vector<double> eval(double x) const { return expand(eval_local(x)); }
    std::vector<double> eval_deriv(double x) const { return expand(eval_deriv_local(x)); }

private:
    static constexpr double kEdgeTol = 1e-12;

    SplineBasis(std::size_t k, CovariateMap map) : num_basis_(k), map_(map) {
        const std::size_t segments = k - kDegree;
        knots_.reserve(k + kDegree + 1);
        for (int i = 0; i < kDegree; ++i) knots_.push_back(0.0);
        for (std::size_t j = 0; j <= segments; ++j)
            knots_.push_back(static_cast<double>(j) / static_cast<double>(segments));
        for (int i = 0; i < kDegree; ++i) knots_.push_back(1.0);
    }

    double unit(double x) const {
        const double u = map_.to_unit(x);
        if (!(u >= -kEdgeTol && u <= 1.0 + kEdgeTol))
            throw std::out_of_range("spline basis: x = " + std::to_string(x) + " outside domain [" +
                                    std::to_string(map_.lo) + ", " + std::to_string(map_.hi) + "]");
        return std::clamp(u, 0.0, 1.0);
    }

    // Index i with knots[i] <= u < knots[i+1]; the right end belongs to the
    // last nonempty span.
    std::size_t find_span(double u) const {
        const std::size_t last = num_basis_ - 1;
        if (u >= knots_[last + 1]) return last;
        auto it = std::upper_bound(knots_.begin() + kDegree, knots_.begin() + last + 1, u);
        return static_cast<std::size_t>(it - knots_.begin()) - 1;
    }

    // Cox-de Boor triangle for the p+1 nonzero functions of degree p on span.
    template <int P, std::size_t N>
    void basis_funs(std::size_t span, double u, std::array<double, N>& out) const {
        static_assert(N == P + 1);
        std::array<double, P + 1> left{}, right{};
        out[0] = 1.0;
        for (int j = 1; j <= P; ++j) {
            left[j] = u - knots_[span + 1 - j];
            right[j] = knots_[span + j] - u;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double tmp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            out[j] = saved;
        }
    }

    std::vector<double> expand(const Local& local) const {
        std::vector<double> full(num_basis_, 0.0);
        for (int r = 0; r <= kDegree; ++r) full[local.first + r] = local.values[r];
        return full;
    }

    std::size_t num_basis_;
    CovariateMap map_;
    std::vector<double> knots_;
};

inline SplineBasis make_basis(std::size_t num_basis, double a, double b) {
    return SplineBasis::make(num_basis, a, b);
}

inline std::vector<double> eval_basis(const SplineBasis& basis, double x) { return basis.eval(x); }

inline std::vector<double> eval_basis_deriv(const SplineBasis& basis, double x) {
    return basis.eval_deriv(x);
}

inline Eigen::MatrixXd design_matrix(const SplineBasis& basis, std::span<const double> xs) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()),
                                              static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto local = basis.eval_local(xs[i]);
        for (int r = 0; r <= SplineBasis::kDegree; ++r)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(local.first + r)) = local.values[r];
    }
    return m;
}

}  // namespace gereg
