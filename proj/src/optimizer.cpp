#include "idfs/optimizer.hpp"

#include "idfs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace idfs {

namespace {

constexpr double kMuMax = 1e10;

Matrix symmetrize(const Matrix& m) { return (m + m.transpose()) * 0.5; }

double relative_change(double previous, double current) {
    return std::abs(previous - current) / std::max(std::abs(previous), 1e-12);
}

double simplex_residual(const Vector& x) {
    const double neg = x.size() > 0 ? std::max(0.0, -x.minCoeff()) : 0.0;
    return std::max(std::abs(x.sum() - 1.0), neg);
}

Matrix identity_embedding(Eigen::Index d, Eigen::Index c) { return Matrix::Identity(d, c); }

}  // namespace

Matrix compute_h(const Mask& present) {
    const Eigen::Index n = present.size();
    const Eigen::Index m = present.count();
    if (m == 0) throw Error(ErrorCode::NoObservedSamples, "indicator has no present samples");
    Matrix h = Matrix::Identity(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (present(j)) h.col(j).array() -= 1.0 / static_cast<double>(m);
    }
    return h;
}

Matrix center_present(const Matrix& x, const Mask& present) {
    const Eigen::Index m = present.count();
    if (m == 0) throw Error(ErrorCode::NoObservedSamples, "indicator has no present samples");
    Vector mean = Vector::Zero(x.rows());
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        if (present(i)) mean += x.col(i);
    }
    mean /= static_cast<double>(m);
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        if (present(i)) out.col(i) = x.col(i) - mean;
    }
    return out;
}

CenteredView center_view(const ChannelView& view, const Matrix& labels, bool ignore_indicator) {
    if (labels.cols() != view.n_samples()) {
        throw Error(ErrorCode::ShapeMismatch, "labels and view disagree on sample count");
    }
    const Mask present = ignore_indicator ? Mask::Constant(view.n_samples(), true)
                                          : view.present();
    return {center_present(view.features(), present), center_present(labels, present),
            present.count()};
}

double view_cost(const CenteredView& cv, const Matrix& r, const Matrix& w, const Vector& theta,
                 double lambda) {
    const Matrix residual = w.transpose() * (theta.asDiagonal() * cv.xc) - cv.yc;
    return residual.squaredNorm() + lambda * theta.dot(r * theta);
}

namespace {

std::vector<CenteredView> center_all(const MultiChannelDataset& ds, bool ignore_indicator) {
    std::vector<CenteredView> out;
    out.reserve(ds.n_channels());
    for (const auto& v : ds.views()) out.push_back(center_view(v, ds.labels(), ignore_indicator));
    return out;
}

Vector u_values(const std::vector<CenteredView>& cvs, const std::vector<RedundancyMatrix>& r,
                const ModelState& state, double lambda) {
    Vector u(static_cast<Eigen::Index>(cvs.size()));
    for (std::size_t v = 0; v < cvs.size(); ++v) {
        u(static_cast<Eigen::Index>(v)) =
            view_cost(cvs[v], r[v].r, state.w[v], state.theta[v], lambda);
    }
    return u;
}

double weighted_sum(const Vector& alpha, const Vector& u, double gamma) {
    double total = 0.0;
    for (Eigen::Index v = 0; v < u.size(); ++v) total += std::pow(alpha(v), gamma) * u(v);
    return total;
}

}  // namespace

Vector compute_u_values(const MultiChannelDataset& ds, const std::vector<RedundancyMatrix>& r,
                        const ModelState& state, const Hyperparams& hp) {
    if (r.size() != ds.n_channels() || state.w.size() != ds.n_channels() ||
        state.theta.size() != ds.n_channels()) {
        throw Error(ErrorCode::ShapeMismatch, "state does not match dataset channel count");
    }
    return u_values(center_all(ds, hp.ignore_indicator), r, state, hp.lambda);
}

double objective(const MultiChannelDataset& ds, const std::vector<RedundancyMatrix>& r,
                 const ModelState& state, const Hyperparams& hp) {
    return weighted_sum(state.alpha, compute_u_values(ds, r, state, hp), hp.gamma);
}

WSubproblem build_w_subproblem(const CenteredView& cv, const Vector& theta, double weight) {
    const Matrix tx = theta.asDiagonal() * cv.xc;
    return {symmetrize(weight * (tx * tx.transpose())), weight * (tx * cv.yc.transpose())};
}

WSubproblem build_w_subproblem(const ChannelView& view, const Matrix& labels,
                               const Vector& theta, double alpha_v, double gamma) {
    return build_w_subproblem(center_view(view, labels), theta, std::pow(alpha_v, gamma));
}

double w_objective(const WSubproblem& p, const Matrix& w) {
    return (w.transpose() * p.c_mat * w).trace() - 2.0 * (w.transpose() * p.d_mat).trace();
}

namespace {

GpiResult gpi_from(const WSubproblem& p, const Matrix& c_hat, const Matrix& w0, double tol,
                   int max_iter) {
    GpiResult res{w0, 0, false};
    double best = w_objective(p, w0);
    double previous = best;
    Matrix w = w0;
    for (int it = 1; it <= max_iter; ++it) {
        const Matrix m = 2.0 * (c_hat * w + p.d_mat);
        w = polar_factor(m);
        const double current = w_objective(p, w);
        res.iterations = it;
        if (current < best) {
            best = current;
            res.w = w;
        }
        if (std::abs(previous - current) <= tol * std::max(std::abs(previous), 1e-300)) {
            res.converged = true;
            break;
        }
        previous = current;
    }
    return res;
}

}  // namespace

Matrix polar_factor(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix u = svd.matrixU();
    Matrix v = svd.matrixV();
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        Eigen::Index idx = 0;
        u.col(k).cwiseAbs().maxCoeff(&idx);
        if (u(idx, k) < 0.0) {
            u.col(k) = -u.col(k);
            v.col(k) = -v.col(k);
        }
    }
    return u * v.transpose();
}

GpiResult solve_w_gpi(const WSubproblem& p, const Matrix& w0, double tol, int max_iter,
                      int restarts, std::uint64_t seed) {
    const Eigen::Index d = p.c_mat.rows();
    const Eigen::Index c = p.d_mat.cols();
    if (d < c) {
        throw Error(ErrorCode::EmptyStiefel, "W-step needs at least as many features as classes",
                    "d=" + std::to_string(d) + ", c=" + std::to_string(c));
    }
    if (w0.rows() != d || w0.cols() != c || p.c_mat.cols() != d || p.d_mat.rows() != d) {
        throw Error(ErrorCode::ShapeMismatch, "W-subproblem shapes are inconsistent");
    }

    // Flip to a maximisation with a PSD quadratic: max Tr(W^T (eta I - C) W + 2 W^T D).
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(p.c_mat, Eigen::EigenvaluesOnly);
    const double eta = (1.0 + 1e-6) * std::max(eig.eigenvalues().maxCoeff(), 0.0);
    Matrix c_hat = -p.c_mat;
    c_hat.diagonal().array() += eta;

    GpiResult res = gpi_from(p, c_hat, w0, tol, max_iter);
    if (restarts <= 0) return res;

    // The problem has several basins; extra starts only ever replace a strictly better result.
    double best = w_objective(p, res.w);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 0; r < restarts; ++r) {
        Matrix start(d, c);
        if (r == 0 && p.d_mat.norm() > 0.0) {
            start = polar_factor(p.d_mat);
        } else {
            for (Eigen::Index j = 0; j < c; ++j)
                for (Eigen::Index i = 0; i < d; ++i) start(i, j) = normal(rng);
            start = polar_factor(start);
        }
        GpiResult candidate = gpi_from(p, c_hat, start, tol, max_iter);
        const double value = w_objective(p, candidate.w);
        if (value < best) {
            best = value;
            candidate.iterations += res.iterations;
            res = std::move(candidate);
        } else {
            res.iterations += candidate.iterations;
        }
    }
    return res;
}

SimplexQP build_theta_subproblem(const CenteredView& cv, const Matrix& w, const Matrix& r,
                                 double weight, double lambda) {
    const Matrix o = cv.xc * cv.xc.transpose();
    const Matrix xy = cv.xc * cv.yc.transpose();
    Matrix q = weight * (lambda * r + o.cwiseProduct(w * w.transpose()));
    Vector g = 2.0 * weight * xy.cwiseProduct(w).rowwise().sum();
    return {symmetrize(q), std::move(g)};
}

SimplexQP build_theta_subproblem(const ChannelView& view, const Matrix& labels, const Matrix& w,
                                 const Matrix& r, double alpha_v, double gamma, double lambda) {
    return build_theta_subproblem(center_view(view, labels), w, r, std::pow(alpha_v, gamma),
                                  lambda);
}

double qp_objective(const SimplexQP& qp, const Vector& theta) {
    return theta.dot(qp.q_mat * theta) - theta.dot(qp.g_vec);
}

Vector project_simplex(const Vector& y) {
    const Eigen::Index d = y.size();
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "cannot project an empty vector");
    std::vector<double> sorted(y.data(), y.data() + d);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double tau = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        cumulative += sorted[static_cast<std::size_t>(k)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) tau = candidate;
    }
    Vector x = (y.array() - tau).max(0.0).matrix();
    // One renormalisation pass removes the residual rounding in the sum.
    const double s = x.sum();
    if (s > 0.0) x /= s;
    return x;
}

AlmResult solve_theta_alm(const SimplexQP& qp, const Vector& theta0, const Hyperparams& hp) {
    const Eigen::Index d = qp.g_vec.size();
    if (theta0.size() != d || qp.q_mat.rows() != d || qp.q_mat.cols() != d) {
        throw Error(ErrorCode::ShapeMismatch, "simplex QP shapes are inconsistent");
    }
    const Vector ones = Vector::Ones(d);
    const Matrix ones_outer = Matrix::Ones(d, d);

    Vector theta = theta0;
    Vector u = theta0.cwiseMax(0.0);
    Vector lambda_mult = Vector::Zero(d);
    double nu = 0.0;
    double mu = hp.alm_mu0;

    AlmResult res;
    for (int it = 1; it <= hp.alm_max_iter; ++it) {
        Matrix system = 2.0 * qp.q_mat + mu * ones_outer;
        system.diagonal().array() += mu;
        const Vector rhs = qp.g_vec - nu * ones + mu * ones + mu * u - lambda_mult;
        theta = system.ldlt().solve(rhs);
        const Vector u_prev = u;
        u = (theta + lambda_mult / mu).cwiseMax(0.0);

        const double sum_residual = theta.sum() - 1.0;
        const Vector split_residual = theta - u;
        nu += mu * sum_residual;
        lambda_mult += mu * split_residual;
        res.iterations = it;

        const double primal =
            std::max(std::abs(sum_residual), split_residual.lpNorm<Eigen::Infinity>());
        const double dual = mu * (u - u_prev).lpNorm<Eigen::Infinity>();
        if (primal < hp.alm_tol && dual < hp.alm_tol) {
            res.converged = true;
            break;
        }
        // Residual balancing: raise the penalty only while feasibility lags optimality.
        if (primal > 10.0 * dual) mu = std::min(hp.alm_rho * mu, kMuMax);
    }

    res.theta = project_simplex(theta);
    if (simplex_residual(theta0) <= 1e-8 && qp_objective(qp, res.theta) > qp_objective(qp, theta0)) {
        res.theta = theta0;
    }
    return res;
}

AlphaResult update_alpha(const Vector& u_values, double gamma) {
    if (!(gamma > 1.0)) throw Error(ErrorCode::InvalidHyperparams, "gamma must satisfy gamma > 1");
    const Eigen::Index ch = u_values.size();
    if (ch == 0) throw Error(ErrorCode::InvalidArgument, "no channel costs");
    if ((u_values.array() < 0.0).any() || !u_values.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "channel costs must be finite and nonnegative");
    }

    AlphaResult res;
    const Eigen::Index zeros = (u_values.array() == 0.0).count();
    if (zeros > 0) {
        res.degenerate = true;
        res.alpha = (u_values.array() == 0.0).cast<double>().matrix() / static_cast<double>(zeros);
        return res;
    }
    // alpha_v ~ U_v^(1/(1-gamma)), evaluated in log space.
    const double exponent = 1.0 / (1.0 - gamma);
    const Vector logs = exponent * u_values.array().log().matrix();
    const Vector scaled = (logs.array() - logs.maxCoeff()).exp().matrix();
    res.alpha = scaled / scaled.sum();
    return res;
}

Vector recover_bias(const ChannelView& view, const Matrix& labels, const Matrix& w,
                    const Vector& theta, bool ignore_indicator) {
    const Mask present = ignore_indicator ? Mask::Constant(view.n_samples(), true)
                                          : view.present();
    const Eigen::Index m = present.count();
    if (m == 0) throw Error(ErrorCode::NoObservedSamples, "bias needs a present sample");
    const Matrix residual = labels - w.transpose() * (theta.asDiagonal() * view.features());
    Vector b = Vector::Zero(labels.rows());
    for (Eigen::Index i = 0; i < present.size(); ++i) {
        if (present(i)) b += residual.col(i);
    }
    return b / static_cast<double>(m);
}

ModelState fit(const MultiChannelDataset& ds, const Hyperparams& hp, const TraceSink& trace) {
    hp.validate();
    const std::size_t ch = ds.n_channels();
    const Eigen::Index c = ds.n_classes();
    for (const auto& v : ds.views()) {
        if (v.n_features() < c) {
            throw Error(ErrorCode::EmptyStiefel, "every view needs at least c features",
                        "channel " + std::to_string(v.channel_index()));
        }
    }

    const auto r = redundancy_matrices(ds, !hp.ignore_indicator);
    const auto cvs = center_all(ds, hp.ignore_indicator);

    ModelState state;
    state.alpha = Vector::Constant(static_cast<Eigen::Index>(ch), 1.0 / static_cast<double>(ch));
    for (const auto& v : ds.views()) {
        const Eigen::Index d = v.n_features();
        state.w.push_back(identity_embedding(d, c));
        state.theta.push_back(Vector::Constant(d, 1.0 / static_cast<double>(d)));
    }

    auto current_objective = [&] { return weighted_sum(state.alpha, u_values(cvs, r, state, hp.lambda), hp.gamma); };

    double previous = current_objective();
    if (trace) {
        SweepTrace t;
        t.objective = previous;
        trace(t);
    }

    for (int sweep = 1; sweep <= hp.outer_max_iter; ++sweep) {
        const Vector weights = state.alpha.array().pow(hp.gamma).matrix();

        parallel_for(ch, [&](std::size_t v) {
            const auto p = build_w_subproblem(cvs[v], state.theta[v], weights(static_cast<Eigen::Index>(v)));
            state.w[v] = solve_w_gpi(p, state.w[v], hp.gpi_tol, hp.gpi_max_iter, hp.gpi_restarts,
                                     hp.rng_seed + v).w;
        });
        const double after_w = trace ? current_objective() : 0.0;

        parallel_for(ch, [&](std::size_t v) {
            const auto qp = build_theta_subproblem(cvs[v], state.w[v], r[v].r,
                                                   weights(static_cast<Eigen::Index>(v)), hp.lambda);
            state.theta[v] = solve_theta_alm(qp, state.theta[v], hp).theta;
        });
        const Vector u = u_values(cvs, r, state, hp.lambda);
        const double after_theta = weighted_sum(state.alpha, u, hp.gamma);

        if (!hp.freeze_alpha) state.alpha = update_alpha(u, hp.gamma).alpha;
        const double current = weighted_sum(state.alpha, u, hp.gamma);

        state.objective_history.push_back(current);
        state.iterations_run = sweep;

        if (trace) {
            SweepTrace t;
            t.iteration = sweep;
            t.objective = current;
            t.delta_w = after_w - previous;
            t.delta_theta = after_theta - after_w;
            t.delta_alpha = current - after_theta;
            for (std::size_t v = 0; v < ch; ++v) {
                const Matrix gram = state.w[v].transpose() * state.w[v];
                t.orthogonality_residual = std::max(
                    t.orthogonality_residual, (gram - Matrix::Identity(c, c)).norm());
                t.theta_simplex_residual =
                    std::max(t.theta_simplex_residual, simplex_residual(state.theta[v]));
            }
            t.alpha_simplex_residual = simplex_residual(state.alpha);
            trace(t);
        }

        const bool done = relative_change(previous, current) < hp.outer_tol;
        previous = current;
        if (done) {
            state.converged = true;
            break;
        }
    }

    for (std::size_t v = 0; v < ch; ++v) {
        state.bias.push_back(recover_bias(ds.view(v), ds.labels(), state.w[v], state.theta[v],
                                          hp.ignore_indicator));
    }
    return state;
}

}  // namespace idfs
