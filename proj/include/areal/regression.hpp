#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "areal/errors.hpp"

namespace areal {

/// One source-level observation: area, auxiliary counts and the observed count.
struct DesignRow {
    double area = 0.0;
    std::vector<double> x;
    std::int64_t y = 0;
};

/// Source-level design for the identity-link Poisson regression. `scale` is the
/// intensity growth factor k: the working design vectors are k*(area, x) and
/// counts are drawn with mean k*lambda.
struct Design {
    std::vector<DesignRow> rows;
    double scale = 1.0;

    std::size_t p() const { return rows.empty() ? 0 : rows.front().x.size(); }
    std::size_t dim() const { return p() + 1; }

    void validate() const {
        if (rows.empty()) throw NotIdentifiable("design has no rows");
        if (!(scale > 0.0)) throw NotIdentifiable("scale must be positive");
        const std::size_t px = rows.front().x.size();
        for (const DesignRow& r : rows) {
            if (r.x.size() != px) throw NotIdentifiable("ragged auxiliary dimensions");
            if (!(r.area > 0.0)) throw NotIdentifiable("row area must be positive");
            for (double v : r.x)
                if (v < 0.0) throw NotIdentifiable("auxiliary counts must be nonnegative");
            if (r.y < 0) throw NotIdentifiable("counts must be nonnegative");
        }
    }

    /// Scaled design matrix, one row per observation: k * (area_i, x_i).
    Eigen::MatrixXd matrix() const {
        Eigen::MatrixXd z(rows.size(), dim());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            z(static_cast<Eigen::Index>(i), 0) = scale * rows[i].area;
            for (std::size_t j = 0; j < p(); ++j)
                z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
                    scale * rows[i].x[j];
        }
        return z;
    }

    Eigen::VectorXd counts() const {
        Eigen::VectorXd y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            y(static_cast<Eigen::Index>(i)) = static_cast<double>(rows[i].y);
        return y;
    }
};

namespace detail {

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> from_eigen(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

// Log likelihood that tolerates mean 0 on rows with y = 0 (their probability
// mass is 1 there, contributing 0). Returns -inf when infeasible.
inline double loglik_relaxed(const Eigen::VectorXd& mean, const Eigen::VectorXd& y) {
    double l = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double m = mean(i);
        if (m < 0.0) return -std::numeric_limits<double>::infinity();
        if (y(i) > 0.0) {
            if (m <= 0.0) return -std::numeric_limits<double>::infinity();
            l += y(i) * std::log(m) - m - std::lgamma(y(i) + 1.0);
        } else {
            l -= m;
        }
    }
    return l;
}

inline Eigen::VectorXd score_relaxed(const Eigen::MatrixXd& z, const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& y) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(z.cols());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double w = y(i) > 0.0 ? y(i) / mean(i) - 1.0 : -1.0;
        s += w * z.row(i).transpose();
    }
    return s;
}

// Expected information with means floored away from zero so boundary faces do
// not produce infinite weights; only used to shape the ascent direction.
inline Eigen::MatrixXd fisher_clamped(const Eigen::MatrixXd& z, const Eigen::VectorXd& mean) {
    const double floor_m = std::max(1e-12, 1e-12 * mean.maxCoeff());
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(z.cols(), z.cols());
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        f += z.row(i).transpose() * z.row(i) / std::max(mean(i), floor_m);
    return f;
}

// Lawson-Hanson nonnegative least squares, used only to start the ascent.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index m = a.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    std::vector<bool> passive(static_cast<std::size_t>(m), false);
    for (int outer = 0; outer < 4 * static_cast<int>(m) + 8; ++outer) {
        Eigen::VectorXd w = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_w = 1e-10 * std::max(1.0, b.norm());
        for (Eigen::Index j = 0; j < m; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < 4 * static_cast<int>(m) + 8; ++inner) {
            std::vector<Eigen::Index> pidx;
            for (Eigen::Index j = 0; j < m; ++j)
                if (passive[static_cast<std::size_t>(j)]) pidx.push_back(j);
            Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(pidx.size()));
            for (std::size_t c = 0; c < pidx.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(pidx[c]);
            Eigen::VectorXd sp = ap.colPivHouseholderQr().solve(b);
            if ((sp.array() > 0.0).all()) {
                x.setZero();
                for (std::size_t c = 0; c < pidx.size(); ++c) x(pidx[c]) = sp(static_cast<Eigen::Index>(c));
                break;
            }
            double alpha = 1.0;
            for (std::size_t c = 0; c < pidx.size(); ++c) {
                const double xc = x(pidx[c]);
                const double sc = sp(static_cast<Eigen::Index>(c));
                if (sc <= 0.0 && xc - sc > 0.0) alpha = std::min(alpha, xc / (xc - sc));
            }
            for (std::size_t c = 0; c < pidx.size(); ++c) {
                const double sc = sp(static_cast<Eigen::Index>(c));
                double nx = x(pidx[c]) + alpha * (sc - x(pidx[c]));
                if (nx < 1e-14) {
                    nx = 0.0;
                    passive[static_cast<std::size_t>(pidx[c])] = false;
                }
                x(pidx[c]) = nx;
            }
        }
    }
    return x;
}

} // namespace detail

/// Log likelihood including the ln(y!) constant. Requires every fitted mean to
/// be strictly positive.
inline double log_likelihood(const Design& design, const std::vector<double>& gamma) {
    design.validate();
    if (gamma.size() != design.dim()) throw NotIdentifiable("gamma has wrong dimension");
    const Eigen::MatrixXd z = design.matrix();
    const Eigen::VectorXd y = design.counts();
    const Eigen::VectorXd mean = z * detail::to_eigen(gamma);
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        if (!(mean(i) > 0.0))
            throw NonpositiveMean("gamma'Z <= 0 on row " + std::to_string(i));
    double l = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        l += y(i) * std::log(mean(i)) - mean(i) - std::lgamma(y(i) + 1.0);
    return l;
}

/// Analytic gradient of the log likelihood.
inline std::vector<double> score(const Design& design, const std::vector<double>& gamma) {
    design.validate();
    if (gamma.size() != design.dim()) throw NotIdentifiable("gamma has wrong dimension");
    const Eigen::MatrixXd z = design.matrix();
    const Eigen::VectorXd y = design.counts();
    const Eigen::VectorXd mean = z * detail::to_eigen(gamma);
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        if (!(mean(i) > 0.0))
            throw NonpositiveMean("gamma'Z <= 0 on row " + std::to_string(i));
    Eigen::VectorXd s = Eigen::VectorXd::Zero(z.cols());
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        s += (y(i) / mean(i) - 1.0) * z.row(i).transpose();
    return detail::from_eigen(s);
}

/// Expected information matrix sum_i Z_i Z_i' / (gamma'Z_i). Equals the
/// covariance of the score under the model.
inline Eigen::MatrixXd fisher_info(const Design& design, const std::vector<double>& gamma) {
    design.validate();
    if (gamma.size() != design.dim()) throw NotIdentifiable("gamma has wrong dimension");
    const Eigen::MatrixXd z = design.matrix();
    const Eigen::VectorXd mean = z * detail::to_eigen(gamma);
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        if (!(mean(i) > 0.0))
            throw NonpositiveMean("gamma'Z <= 0 on row " + std::to_string(i));
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(z.cols(), z.cols());
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        f += z.row(i).transpose() * z.row(i) / mean(i);
    return f;
}

struct FitResult {
    std::vector<double> gamma_hat;
    double loglik = 0.0;
    double score_norm = 0.0; // sup norm of the projected (KKT) score at gamma_hat
    Eigen::MatrixXd fisher;  // at gamma_hat; zero matrix for the degenerate all-zero fit
    int iterations = 0;
    bool converged = false;
    bool boundary = false; // some coordinate pinned at zero (a flagged success)
    double scale = 1.0;
    std::vector<double> loglik_trace; // accepted iterates, nondecreasing
};

/// Maximum likelihood fit by Fisher scoring with step halving, restricted to
/// the closed feasible region {gamma >= 0}. The likelihood is concave there, so
/// a point meeting the KKT conditions is the MLE; optima on a face (some
/// coordinate exactly zero) are reported as boundary fits, not errors.
///
/// The design columns are equilibrated internally (each scaled to unit sup
/// norm) and both the convergence test and the reported score_norm use that
/// unitless scaling; the raw score threshold would otherwise depend on the
/// measurement units of the auxiliaries.
inline FitResult fit(const Design& design, std::optional<std::vector<double>> init = std::nullopt,
                     double tol = 1e-10, int max_iter = 100) {
    design.validate();
    const Eigen::MatrixXd z_raw = design.matrix();
    const Eigen::VectorXd y = design.counts();
    const Eigen::Index n = z_raw.rows();
    const Eigen::Index m = z_raw.cols();

    if (n < m) throw NotIdentifiable("need at least p+1 rows");
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z_raw);
        if (qr.rank() < m) throw NotIdentifiable("design matrix is rank deficient");
    }

    FitResult result;
    result.scale = design.scale;

    // Degenerate data: all counts zero puts the optimum at the origin.
    if (y.sum() == 0.0) {
        result.gamma_hat.assign(static_cast<std::size_t>(m), 0.0);
        result.loglik = 0.0;
        result.score_norm = 0.0;
        result.fisher = Eigen::MatrixXd::Zero(m, m);
        result.converged = true;
        result.boundary = true;
        result.loglik_trace.push_back(0.0);
        return result;
    }

    // column equilibration: z = z_raw * D^-1, gamma works in D * gamma_raw
    Eigen::VectorXd col_scale(m);
    for (Eigen::Index j = 0; j < m; ++j)
        col_scale(j) = std::max(z_raw.col(j).cwiseAbs().maxCoeff(), 1e-300);
    const Eigen::MatrixXd z = z_raw * col_scale.cwiseInverse().asDiagonal();

    Eigen::VectorXd gamma;
    if (init) {
        if (init->size() != static_cast<std::size_t>(m))
            throw NotIdentifiable("init has wrong dimension");
        gamma = col_scale.asDiagonal() * detail::to_eigen(*init).cwiseMax(0.0);
    } else {
        gamma = detail::nnls(z, y);
    }
    // push strictly inside: every mean at least 1e-8 * mean(y), achievable by
    // raising alpha since areas are positive
    const double mean_floor = 1e-8 * y.mean();
    {
        Eigen::VectorXd mean = z * gamma;
        double bump = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (mean(i) < mean_floor) bump = std::max(bump, (mean_floor - mean(i)) / z(i, 0));
        gamma(0) += bump;
    }

    double l = detail::loglik_relaxed(z * gamma, y);
    result.loglik_trace.push_back(l);

    auto kkt_residual = [&](const Eigen::VectorXd& g, const Eigen::VectorXd& s) {
        double r = 0.0;
        for (Eigen::Index j = 0; j < m; ++j)
            r = std::max(r, g(j) > 0.0 ? std::abs(s(j)) : std::max(s(j), 0.0));
        return r;
    };

    auto newton_direction = [&](const Eigen::VectorXd& mean, const Eigen::VectorXd& s,
                                const std::vector<Eigen::Index>& free) {
        const Eigen::MatrixXd f = detail::fisher_clamped(z, mean);
        Eigen::MatrixXd ff(static_cast<Eigen::Index>(free.size()),
                           static_cast<Eigen::Index>(free.size()));
        Eigen::VectorXd sf(static_cast<Eigen::Index>(free.size()));
        for (std::size_t a = 0; a < free.size(); ++a) {
            sf(static_cast<Eigen::Index>(a)) = s(free[a]);
            for (std::size_t c = 0; c < free.size(); ++c)
                ff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = f(free[a], free[c]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(ff);
        if (ldlt.info() != Eigen::Success) {
            ff += 1e-12 * ff.trace() * Eigen::MatrixXd::Identity(ff.rows(), ff.cols());
            ldlt.compute(ff);
            if (ldlt.info() != Eigen::Success)
                throw NotIdentifiable("information matrix is singular");
        }
        const Eigen::VectorXd df = ldlt.solve(sf);
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(m);
        for (std::size_t a = 0; a < free.size(); ++a)
            dir(free[a]) = df(static_cast<Eigen::Index>(a));
        return dir;
    };

    int it = 0;
    bool converged = false;
    for (; it < max_iter; ++it) {
        const Eigen::VectorXd mean = z * gamma;
        const Eigen::VectorXd s = detail::score_relaxed(z, mean, y);
        const double threshold = tol * (1.0 + std::abs(l));
        if (kkt_residual(gamma, s) <= threshold) {
            converged = true;
            break;
        }

        // free set: off the boundary, or pinned with an inward-pointing score
        std::vector<Eigen::Index> free;
        for (Eigen::Index j = 0; j < m; ++j)
            if (gamma(j) > 0.0 || s(j) > threshold) free.push_back(j);
        if (free.empty()) {
            converged = true;
            break;
        }
        const Eigen::VectorXd dir = newton_direction(mean, s, free);

        // ratio test against the nonnegative orthant; an exact hit pins the coordinate
        double t = 1.0;
        Eigen::Index pin = -1;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (dir(j) < 0.0 && gamma(j) + t * dir(j) < 0.0) {
                const double tj = gamma(j) / -dir(j);
                if (tj < t) {
                    t = tj;
                    pin = j;
                }
            }
        }

        // step halving: keep the iterate feasible and the likelihood ascending
        // up to evaluation noise
        double l_new = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd cand;
        int halvings = 0;
        for (; halvings < 60; ++halvings) {
            cand = gamma + t * dir;
            if (halvings == 0 && pin >= 0) cand(pin) = 0.0;
            cand = cand.cwiseMax(0.0);
            l_new = detail::loglik_relaxed(z * cand, y);
            if (l_new >= l - 1e-9 * (1.0 + std::abs(l))) break;
            t *= 0.5;
            pin = -1;
        }
        if (halvings == 60) break; // no ascent possible at machine precision
        gamma = cand;
        l = l_new;
        result.loglik_trace.push_back(l);
    }

    // polish: a couple of extra interior steps sharpen the score toward zero,
    // which the region-level mass identity sum(y) = gamma'Z_total relies on
    if (converged) {
        for (int extra = 0; extra < 2; ++extra) {
            const Eigen::VectorXd mean = z * gamma;
            const Eigen::VectorXd s = detail::score_relaxed(z, mean, y);
            if (kkt_residual(gamma, s) <= 0.0) break;
            std::vector<Eigen::Index> free;
            for (Eigen::Index j = 0; j < m; ++j)
                if (gamma(j) > 0.0) free.push_back(j);
            if (free.empty()) break;
            Eigen::VectorXd dir;
            try {
                dir = newton_direction(mean, s, free);
            } catch (const NotIdentifiable&) {
                break;
            }
            Eigen::VectorXd cand = gamma + dir;
            if ((cand.array() < 0.0).any()) break;
            const double l_new = detail::loglik_relaxed(z * cand, y);
            if (!(l_new >= l - 1e-9 * (1.0 + std::abs(l)))) break;
            const double res_old = kkt_residual(gamma, s);
            const double res_new =
                kkt_residual(cand, detail::score_relaxed(z, z * cand, y));
            if (res_new >= res_old) break;
            gamma = cand;
            l = l_new;
        }
    }

    const Eigen::VectorXd mean = z * gamma;
    const Eigen::VectorXd s = detail::score_relaxed(z, mean, y);
    const Eigen::VectorXd gamma_raw = col_scale.cwiseInverse().asDiagonal() * gamma;
    result.gamma_hat = detail::from_eigen(gamma_raw);
    result.loglik = detail::loglik_relaxed(mean, y);
    result.score_norm = kkt_residual(gamma, s);
    result.fisher = detail::fisher_clamped(z_raw, z_raw * gamma_raw);
    result.iterations = it;
    result.converged = converged;
    result.boundary = (gamma.array() == 0.0).any();
    return result;
}

/// Standardized estimator F(gamma_true)^{1/2} (gamma_hat - gamma_true) using
/// the symmetric matrix square root. Under the model this is asymptotically
/// standard normal in every component.
inline std::vector<double> standardized_estimator(const Design& design, const FitResult& fit_result,
                                                  const std::vector<double>& gamma_true) {
    if (!fit_result.converged) throw UnconvergedFit("cannot standardize an unconverged fit");
    if (gamma_true.size() != fit_result.gamma_hat.size())
        throw NotIdentifiable("gamma_true has wrong dimension");
    const Eigen::MatrixXd f = fisher_info(design, gamma_true);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
    if (es.info() != Eigen::Success) throw SingularInformation("eigendecomposition failed");
    const double eig_floor = 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
    if (es.eigenvalues().minCoeff() <= eig_floor)
        throw SingularInformation("information matrix is numerically singular");
    const Eigen::MatrixXd sqrt_f = es.operatorSqrt();
    const Eigen::VectorXd diff =
        detail::to_eigen(fit_result.gamma_hat) - detail::to_eigen(gamma_true);
    return detail::from_eigen(sqrt_f * diff);
}

} // namespace areal
