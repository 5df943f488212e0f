#include "cyclecert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "cyclecert/errors.hpp"

namespace cyclecert {

namespace {

constexpr double kInterior = 1.0 - 1e-9;
constexpr double kWidthShrink = 1.0 - 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

double cycle_zmax(const FlowParam& fp, const Eigen::VectorXd& z) {
    double best = 0.0;
    for (int e : fp.cycle_edges) best = std::max(best, std::abs(z[e]));
    return best;
}

Eigen::VectorXd newton_step(const FlowParam& fp, const Eigen::VectorXd& lambda, const Eigen::VectorXd& g) {
    const Eigen::MatrixXd jac = g_jacobian(fp, lambda);
    Eigen::VectorXd step = jac.ldlt().solve(-g);
    if (!step.allFinite()) step = jac.fullPivLu().solve(-g);
    return step;
}

struct NewtonOutcome {
    Eigen::VectorXd lambda;
    double residual = kInf;
    bool converged = false;
    bool feasible = false;
};

NewtonOutcome damped_newton(const FlowParam& fp, Eigen::VectorXd lambda, int max_iter = 100) {
    NewtonOutcome out;
    out.lambda = lambda;
    if (cycle_zmax(fp, fp.z(lambda)) > kInterior) return out;
    out.feasible = true;

    Eigen::VectorXd g = eval_g(fp, lambda);
    double r = g.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < max_iter && r > 1e-13; ++it) {
        const Eigen::VectorXd step = newton_step(fp, lambda, g);
        if (!step.allFinite()) break;
        bool accepted = false;
        double alpha = 1.0;
        for (int h = 0; h < 40; ++h, alpha *= 0.5) {
            const Eigen::VectorXd cand = lambda + alpha * step;
            if (cycle_zmax(fp, fp.z(cand)) > kInterior) continue;
            const Eigen::VectorXd gc = eval_g(fp, cand);
            const double rc = gc.lpNorm<Eigen::Infinity>();
            if (rc < (1.0 - 1e-4 * alpha) * r) {
                lambda = cand;
                g = gc;
                r = rc;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    out.lambda = lambda;
    out.residual = r;
    out.converged = r <= 1e-10;
    return out;
}

Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const Box& box) {
    return x.cwiseMax(box.lo).cwiseMin(box.hi);
}

// Newton restricted to the box by projection; returns the best iterate.
Eigen::VectorXd projected_newton(const FlowParam& fp, const Box& box, Eigen::VectorXd lambda, double tol,
                                 double& residual) {
    lambda = clamp_to(lambda, box);
    Eigen::VectorXd g = eval_g(fp, lambda);
    double r = g.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 100 && r > tol; ++it) {
        Eigen::VectorXd step;
        try {
            step = newton_step(fp, lambda, g);
        } catch (const DomainError&) {
            break;
        }
        if (!step.allFinite()) break;
        bool accepted = false;
        double alpha = 1.0;
        for (int h = 0; h < 40; ++h, alpha *= 0.5) {
            const Eigen::VectorXd cand = clamp_to(lambda + alpha * step, box);
            const Eigen::VectorXd gc = eval_g(fp, cand);
            const double rc = gc.lpNorm<Eigen::Infinity>();
            if (rc < r) {
                lambda = cand;
                g = gc;
                r = rc;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    residual = r;
    return lambda;
}

// g_i is nondecreasing in lambda_i and changes sign on [lo_i, hi_i] when the faces pass.
double bisect_coordinate(const FlowParam& fp, const Box& box, Eigen::VectorXd& lambda, int i) {
    double a = box.lo[i], b = box.hi[i];
    for (int it = 0; it < 200 && b - a > 4 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(a)); ++it) {
        lambda[i] = 0.5 * (a + b);
        const double gi = eval_g(fp, lambda)[i];
        if (gi == 0.0) return lambda[i];
        if (gi < 0.0) a = lambda[i];
        else b = lambda[i];
    }
    lambda[i] = 0.5 * (a + b);
    return lambda[i];
}

}  // namespace

double FaceValues::margin() const {
    double m = kInf;
    for (Eigen::Index i = 0; i < lower.size(); ++i) m = std::min({m, -lower[i], upper[i]});
    return lower.size() ? m : 0.0;
}

// ---------------------------------------------------------------------------
// Center, widths, box
// ---------------------------------------------------------------------------

CenterResult find_center(const FlowParam& fp) {
    const int q = fp.q();
    CenterResult res;
    res.lambda = Eigen::VectorXd::Zero(q);
    if (q == 0) {
        res.converged = true;
        return res;
    }

    const NewtonOutcome direct = damped_newton(fp, Eigen::VectorXd::Zero(q));
    if (direct.converged) return {direct.lambda, direct.residual, true};
    res.residual = direct.residual;
    if (direct.feasible) res.lambda = direct.lambda;

    // Continuation in the load scale: solve for s * z0 with s growing to 1.
    const double zmax0 = cycle_zmax(fp, fp.z0);
    double s = std::min(0.5, 0.5 / zmax0);
    FlowParam scaled = fp;
    scaled.z0 = s * fp.z0;
    NewtonOutcome cur = damped_newton(scaled, Eigen::VectorXd::Zero(q));
    if (!cur.converged) return res;

    double ds = 0.25;
    while (s < 1.0) {
        const double s2 = std::min(1.0, s * (1.0 + ds));
        scaled.z0 = s2 * fp.z0;
        bool advanced = false;
        for (const Eigen::VectorXd& guess : {Eigen::VectorXd(cur.lambda * (s2 / s)), cur.lambda}) {
            NewtonOutcome next = damped_newton(scaled, guess);
            if (next.converged) {
                cur = std::move(next);
                advanced = true;
                break;
            }
        }
        if (advanced) {
            s = s2;
            ds = std::min(1.0, ds * 1.5);
        } else {
            ds *= 0.5;
            if (ds < 1e-6) break;
        }
    }
    if (s >= 1.0) return {cur.lambda, cur.residual, true};
    spdlog::debug("center continuation stalled at load scale {:.6f}", s);
    return res;
}

std::optional<Eigen::VectorXd> box_widths(const FlowParam& fp, const Eigen::VectorXd& center, BoxPolicy policy) {
    const int q = fp.q();
    const Eigen::VectorXd zc = fp.z(center);
    Eigen::VectorXd slack = Eigen::VectorXd::Zero(fp.m());
    for (int e : fp.cycle_edges) {
        slack[e] = std::min(1.0 - zc[e], 1.0 + zc[e]);
        if (!(slack[e] > 0.0)) return std::nullopt;
    }

    Eigen::VectorXd w(q);
    switch (policy) {
        case BoxPolicy::SlackShare:
            for (int k = 0; k < q; ++k) {
                double wk = kInf;
                for (Eigen::SparseMatrix<double>::InnerIterator it(fp.h, k); it; ++it) {
                    const int e = static_cast<int>(it.row());
                    wk = std::min(wk, slack[e] / (it.value() * fp.cycle_count[e]));
                }
                w[k] = wk * kWidthShrink;
            }
            return w;
        case BoxPolicy::Dominance: {
            const Eigen::MatrixXd jac = g_jacobian(fp, center);
            const Eigen::MatrixXd comparison = Eigen::MatrixXd(2.0 * jac.diagonal().asDiagonal()) - jac;
            const auto lu = comparison.fullPivLu();
            if (!lu.isInvertible()) return std::nullopt;
            w = lu.solve(Eigen::VectorXd::Ones(q));
            if (!w.allFinite() || (w.array() <= 0.0).any()) return std::nullopt;
            const Eigen::VectorXd load = fp.h * w;
            double r = kInf;
            for (int e : fp.cycle_edges) {
                if (load[e] > 0.0) r = std::min(r, slack[e] / load[e]);
            }
            if (!std::isfinite(r)) return std::nullopt;
            return Eigen::VectorXd(w * (r * kWidthShrink));
        }
        case BoxPolicy::Auto:
            break;
    }
    throw ValidationError("box_widths needs a concrete policy");
}

Box build_box(const FlowParam& fp, const Eigen::VectorXd& center, const Eigen::VectorXd& widths, double scale) {
    Box box;
    box.center = center;
    if (cycle_zmax(fp, fp.z(center)) >= 1.0) {
        box.lo = box.hi = center;
        box.degenerate = true;
        return box;
    }
    box.scale = scale;
    box.lo = center - scale * widths;
    box.hi = center + scale * widths;
    return box;
}

bool box_feasible(const FlowParam& fp, const Box& box) {
    if ((box.lo.array() > box.hi.array()).any()) return false;
    const Eigen::VectorXd zh = fp.z(box.hi), zl = fp.z(box.lo);
    for (int e : fp.cycle_edges) {
        if (zh[e] > 1.0 || zl[e] < -1.0) return false;
    }
    return true;
}

FaceValues check_faces(const FlowParam& fp, const Box& box) {
    const int q = fp.q();
    FaceValues faces;
    faces.lower.resize(q);
    faces.upper.resize(q);
    for (int i = 0; i < q; ++i) {
        Eigen::VectorXd corner = box.hi;
        corner[i] = box.lo[i];
        faces.lower[i] = eval_g(fp, corner)[i];
        corner = box.lo;
        corner[i] = box.hi[i];
        faces.upper[i] = eval_g(fp, corner)[i];
    }
    return faces;
}

bool spot_check_monotone(const FlowParam& fp, const Box& box) {
    const Eigen::VectorXd g0 = eval_g(fp, box.center);
    for (int k = 0; k < fp.q(); ++k) {
        const double h = 1e-6 * (box.hi[k] - box.center[k]);
        if (!(h > 0.0)) continue;
        Eigen::VectorXd probe = box.center;
        probe[k] += h;
        if (((eval_g(fp, probe) - g0).array() < -1e-12).any()) return false;
    }
    return true;
}

Eigen::VectorXd locate_root(const FlowParam& fp, const Box& box, double tol) {
    double r = kInf;
    Eigen::VectorXd lambda = projected_newton(fp, box, box.center, tol, r);
    if (r <= tol) return lambda;

    Eigen::VectorXd best = lambda;
    double best_r = r;
    for (int sweep = 0; sweep < 500; ++sweep) {
        for (int i = 0; i < fp.q(); ++i) bisect_coordinate(fp, box, lambda, i);
        r = eval_g(fp, lambda).lpNorm<Eigen::Infinity>();
        if (r < best_r) {
            best = lambda;
            best_r = r;
        }
        if (r <= 1e-6) break;
    }
    lambda = projected_newton(fp, box, best, tol, r);
    if (r < best_r) best = lambda;
    return best;
}

std::vector<double> scale_sequence(const std::vector<double>& grid, int count) {
    std::vector<double> seq;
    for (double t : grid) {
        if (static_cast<int>(seq.size()) >= count) return seq;
        seq.push_back(t);
    }
    double t = seq.empty() ? 1.0 : *std::min_element(seq.begin(), seq.end()) * 0.5;
    if (seq.empty()) {
        seq.push_back(1.0);
        t = 0.5;
    }
    while (static_cast<int>(seq.size()) < count) {
        seq.push_back(t);
        t *= 0.5;
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Certifier
// ---------------------------------------------------------------------------

namespace {

CertifyOptions validated(CertifyOptions opts) {
    for (double t : opts.scale_grid) {
        if (!(t > 0.0 && t <= 1.0)) throw ValidationError("box scale grid entries must lie in (0, 1]");
    }
    if (opts.max_evaluations < 1) throw ValidationError("max_evaluations must be positive");
    return opts;
}

}  // namespace

Certifier::Certifier(const Network& net, CertifyOptions opts)
    : net_(net),
      opts_(validated(std::move(opts))),
      inc_(build_incidence(net_)),
      decomp_(find_bridges(inc_)),
      basis_(select_cycle_basis(decomp_, inc_, opts_.basis_search)),
      oriented_(reorient(inc_, basis_)),
      solver_(oriented_),
      lambda2_(algebraic_connectivity(inc_)) {}

FlowParam Certifier::flow(const Eigen::VectorXd& p) const {
    return particular_flow(oriented_, basis_, solver_, p);
}

Certificate Certifier::certify(const Eigen::VectorXd& p) const {
    Certificate cert;
    cert.provenance.basis_search = opts_.basis_search;
    cert.provenance.roots = basis_.roots;
    cert.provenance.reoriented_edges = basis_.reoriented_edges;
    cert.provenance.box_policy = opts_.box_policy;

    const FlowParam fp = flow(p);
    const int q = fp.q();
    cert.diagnostics.z_inf = fp.m() ? fp.z0.lpNorm<Eigen::Infinity>() : 0.0;
    cert.diagnostics.lambda2 = lambda2_;
    cert.box.lo = cert.box.hi = cert.box.center = Eigen::VectorXd::Zero(q);

    // Bridges carry their flow regardless of lambda.
    double bridge_max = 0.0;
    for (std::size_t i = 0; i < fp.bridge_edges.size(); ++i) {
        const double zb = std::abs(fp.bridge_flows[static_cast<Eigen::Index>(i)]);
        if (zb > bridge_max) {
            bridge_max = zb;
            if (zb > 1.0) cert.offending_edge = fp.bridge_edges[i];
        }
    }
    if (bridge_max > 1.0) {
        cert.reason = Reason::BridgeOverload;
        cert.margin = 1.0 - bridge_max;
        return cert;
    }

    auto finish = [&](Certificate& c) {
        c.verdict = Verdict::Certified;
        c.diagnostics.upper_slack = Eigen::VectorXd::Ones(fp.m()) - fp.z(c.box.hi);
        c.diagnostics.lower_slack = Eigen::VectorXd::Ones(fp.m()) + fp.z(c.box.lo);
        if (!opts_.recover_solution) return;
        c.lambda_star = q ? locate_root(fp, c.box) : Eigen::VectorXd();
        try {
            c.theta = recover_theta(fp, basis_, oriented_, p, *c.lambda_star, opts_.recovery);
        } catch (const Error& e) {
            c.recovery_error = e.what();
            spdlog::warn("certified box but angle recovery failed: {}", e.what());
        }
    };

    if (q == 0) {
        cert.margin = 1.0 - bridge_max;
        cert.box.scale = 1.0;
        finish(cert);
        return cert;
    }

    const CenterResult center = find_center(fp);
    cert.diagnostics.center_residual = center.residual;
    cert.box.center = cert.box.lo = cert.box.hi = center.lambda;

    std::vector<BoxPolicy> policies;
    if (opts_.box_policy == BoxPolicy::Auto) policies = {BoxPolicy::Dominance, BoxPolicy::SlackShare};
    else policies = {opts_.box_policy};

    const std::vector<double> scales = scale_sequence(opts_.scale_grid, opts_.max_evaluations);
    bool have_widths = false;
    double best = -kInf;
    for (BoxPolicy policy : policies) {
        const auto widths = box_widths(fp, center.lambda, policy);
        if (!widths) {
            spdlog::debug("box policy {} has no valid widths", to_string(policy));
            continue;
        }
        have_widths = true;
        for (double t : scales) {
            Box box = build_box(fp, center.lambda, *widths, t);
            if (!box_feasible(fp, box)) continue;
            ++cert.provenance.evaluations;
            FaceValues faces = check_faces(fp, box);
            const double margin = faces.margin();
            spdlog::trace("policy {} t={:.3e} face margin {:.3e}", to_string(policy), t, margin);
            if (margin >= 0.0 || margin > best) {
                best = margin;
                cert.box = std::move(box);
                cert.faces = std::move(faces);
                cert.margin = margin;
                cert.provenance.box_policy = policy;
            }
            if (margin >= 0.0) {
                cert.diagnostics.monotone_check = spot_check_monotone(fp, cert.box);
                if (!cert.diagnostics.monotone_check) spdlog::warn("finite-difference monotonicity check failed");
                finish(cert);
                return cert;
            }
        }
    }

    if (!have_widths) {
        cert.reason = Reason::DegenerateBox;
        cert.box.degenerate = true;
        cert.margin = 1.0 - cycle_zmax(fp, fp.z(center.lambda));
        return cert;
    }
    cert.reason = Reason::FaceCondition;
    return cert;
}

Certificate certify(const Network& net, const CertifyOptions& opts) {
    return Certifier(net, opts).certify();
}

std::string to_string(Verdict v) {
    return v == Verdict::Certified ? "Certified" : "Inconclusive";
}

std::string to_string(Reason r) {
    switch (r) {
        case Reason::None: return "none";
        case Reason::BridgeOverload: return "bridge overload";
        case Reason::FaceCondition: return "face condition";
        case Reason::DegenerateBox: return "degenerate box";
    }
    return "unknown";
}

std::string to_string(BoxPolicy p) {
    switch (p) {
        case BoxPolicy::SlackShare: return "slack-share";
        case BoxPolicy::Dominance: return "dominance";
        case BoxPolicy::Auto: return "auto";
    }
    return "unknown";
}

std::string to_string(BasisSearch s) {
    switch (s) {
        case BasisSearch::None: return "none";
        case BasisSearch::Roots: return "roots";
        case BasisSearch::Coupling: return "coupling";
    }
    return "unknown";
}

}  // namespace cyclecert
