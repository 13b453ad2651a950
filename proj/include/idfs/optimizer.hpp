#pragma once

#include "idfs/core.hpp"
#include "idfs/redundancy.hpp"

#include <functional>

namespace idfs {

/// Quadratic trace problem min Tr(W^T C W - 2 W^T D) over W^T W = I.
struct WSubproblem {
    Matrix c_mat;  // d x d, symmetric PSD
    Matrix d_mat;  // d x c
};

/// min theta^T Q theta - theta^T g over the probability simplex.
struct SimplexQP {
    Matrix q_mat;
    Vector g_vec;
};

/// A view's data with the missing-sample indicator and bias elimination already applied:
/// xc = X S H and yc = Y S H. Present columns are centered over the present samples,
/// absent columns are exactly zero.
struct CenteredView {
    Matrix xc;
    Matrix yc;
    Eigen::Index n_present = 0;
};

/// H = I_n - 1 s^T / m, where s is the presence indicator and m = s^T s.
/// With this H, S H is the centering projector on the present samples, so
/// ||A S H||_F^2 = min_b ||(A + b 1^T) S||_F^2.
Matrix compute_h(const Mask& present);

CenteredView center_view(const ChannelView& view, const Matrix& labels,
                         bool ignore_indicator = false);

/// Mask-free core of center_view: absent columns of `x` are never read.
Matrix center_present(const Matrix& x, const Mask& present);

/// Residual cost ||W^T Theta Xc - Yc||_F^2 + lambda theta^T R theta of one view.
double view_cost(const CenteredView& cv, const Matrix& r, const Matrix& w, const Vector& theta,
                 double lambda);

/// Per-channel bracketed costs U^(v).
Vector compute_u_values(const MultiChannelDataset& ds, const std::vector<RedundancyMatrix>& r,
                        const ModelState& state, const Hyperparams& hp);

/// sum_v alpha_v^gamma U^(v).
double objective(const MultiChannelDataset& ds, const std::vector<RedundancyMatrix>& r,
                 const ModelState& state, const Hyperparams& hp);

WSubproblem build_w_subproblem(const CenteredView& cv, const Vector& theta, double weight);
WSubproblem build_w_subproblem(const ChannelView& view, const Matrix& labels,
                               const Vector& theta, double alpha_v, double gamma);

/// Tr(W^T C W - 2 W^T D).
double w_objective(const WSubproblem& p, const Matrix& w);

struct GpiResult {
    Matrix w;
    int iterations = 0;
    bool converged = false;
};

/// U V^T from the thin SVD of m, with each left singular vector's largest entry made positive.
Matrix polar_factor(const Matrix& m);

/// Generalized power iteration from w0, plus `restarts` extra starts (the polar factor of D,
/// then seeded random points on the Stiefel manifold); the best result wins. The returned W
/// never has a larger subproblem objective than w0 and is orthonormal to round-off.
GpiResult solve_w_gpi(const WSubproblem& p, const Matrix& w0, double tol, int max_iter,
                      int restarts = 0, std::uint64_t seed = 0);

SimplexQP build_theta_subproblem(const CenteredView& cv, const Matrix& w, const Matrix& r,
                                 double weight, double lambda);
SimplexQP build_theta_subproblem(const ChannelView& view, const Matrix& labels, const Matrix& w,
                                 const Matrix& r, double alpha_v, double gamma, double lambda);

double qp_objective(const SimplexQP& qp, const Vector& theta);

struct AlmResult {
    Vector theta;
    int iterations = 0;
    bool converged = false;
};

/// Augmented Lagrangian with the split theta = u, u >= 0. The final iterate is projected
/// onto the simplex; theta0 is returned instead if the projection did not improve on it.
AlmResult solve_theta_alm(const SimplexQP& qp, const Vector& theta0, const Hyperparams& hp);

/// Euclidean projection onto {x : x >= 0, sum x = 1}.
Vector project_simplex(const Vector& y);

struct AlphaResult {
    Vector alpha;
    bool degenerate = false;  // at least one U was zero
};

/// alpha_v proportional to U_v^(1/(1-gamma)). Zero-cost channels share all the mass.
AlphaResult update_alpha(const Vector& u_values, double gamma);

/// b = (Y - W^T Theta X) s / m.
Vector recover_bias(const ChannelView& view, const Matrix& labels, const Matrix& w,
                    const Vector& theta, bool ignore_indicator = false);

struct SweepTrace {
    int iteration = 0;
    double objective = 0.0;
    double delta_w = 0.0;      // objective change caused by the W block
    double delta_theta = 0.0;
    double delta_alpha = 0.0;
    double orthogonality_residual = 0.0;  // max_v ||W^T W - I||_F
    double theta_simplex_residual = 0.0;
    double alpha_simplex_residual = 0.0;
};

using TraceSink = std::function<void(const SweepTrace&)>;

/// Alternating W / theta / alpha minimisation. A non-empty trace sink receives one record
/// per sweep (plus iteration 0 for the initial point).
ModelState fit(const MultiChannelDataset& ds, const Hyperparams& hp, const TraceSink& trace = {});

}  // namespace idfs
