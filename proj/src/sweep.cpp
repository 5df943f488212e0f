#include "cyclecert/sweep.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include <spdlog/spdlog.h>

#include "cyclecert/errors.hpp"

namespace cyclecert {

namespace {

class Sampler {
  public:
    explicit Sampler(const Certifier& certifier) : certifier_(certifier) {}

    const SweepSample& at(double y) {
        auto it = cache_.find(y);
        if (it != cache_.end()) return it->second;

        const Eigen::VectorXd p = y * certifier_.network().injection;
        SweepSample s;
        s.y = y;
        const Certificate cert = certifier_.certify(p);
        s.verdict = cert.verdict;
        s.reason = cert.reason;
        s.theta_validated = cert.theta.has_value();
        s.nr_success = nr_solve(certifier_.incidence(), p).success;
        if (s.verdict == Verdict::Certified && !s.theta_validated && !s.nr_success) ++violations_;
        return cache_.emplace(y, s).first->second;
    }

    std::vector<SweepSample> trace() const {
        std::vector<SweepSample> out;
        for (const auto& [y, s] : cache_) out.push_back(s);
        return out;
    }

    int violations() const { return violations_; }

  private:
    const Certifier& certifier_;
    std::map<double, SweepSample> cache_;
    int violations_ = 0;
};

using Predicate = std::function<bool(const SweepSample&)>;

double margin(Sampler& sampler, const Predicate& ok, const SweepOptions& opts) {
    const int points = std::max(1, opts.coarse_points);
    double lo = 0.0, hi = opts.y_max;
    bool failed = false;
    for (int k = 1; k <= points; ++k) {
        const double y = opts.y_max * k / points;
        if (!ok(sampler.at(y))) {
            hi = y;
            failed = true;
            break;
        }
        lo = y;
    }
    if (!failed) return opts.y_max;

    while (hi > lo * (1.0 + opts.tol)) {
        if (lo == 0.0 && hi < opts.y_max * 1e-9) return 0.0;
        const double mid = 0.5 * (lo + hi);
        if (ok(sampler.at(mid))) lo = mid;
        else hi = mid;
    }
    return lo;
}

void flag_non_monotone(const std::vector<SweepSample>& trace, const Predicate& ok, const std::string& label,
                       std::vector<std::string>& warnings) {
    bool seen_failure = false;
    double first_failure = 0.0;
    for (const auto& s : trace) {
        if (!ok(s)) {
            if (!seen_failure) first_failure = s.y;
            seen_failure = true;
        } else if (seen_failure) {
            warnings.push_back(label + " is not monotone in y: fails at " + std::to_string(first_failure) +
                               " but passes at " + std::to_string(s.y));
            spdlog::warn("{}", warnings.back());
            return;
        }
    }
}

}  // namespace

SweepResult stress_sweep(const Certifier& certifier, const SweepOptions& opts) {
    if (!(opts.y_max > 0.0)) throw ValidationError("y_max must be positive");
    if (!(opts.tol > 0.0)) throw ValidationError("sweep tolerance must be positive");
    if (certifier.network().injection.lpNorm<Eigen::Infinity>() == 0.0) {
        throw ValidationError("nominal injections are zero; stress margins are undefined");
    }

    const Predicate certified = [](const SweepSample& s) { return s.verdict == Verdict::Certified; };
    const Predicate nr_ok = [](const SweepSample& s) { return s.nr_success; };

    Sampler sampler(certifier);
    SweepResult res;
    res.tolerance = opts.tol;
    res.y_max = opts.y_max;
    res.y_cert = margin(sampler, certified, opts);
    res.y_nr = margin(sampler, nr_ok, opts);
    res.trace = sampler.trace();
    res.sufficiency_violations = sampler.violations();

    flag_non_monotone(res.trace, certified, "certificate verdict", res.warnings);
    flag_non_monotone(res.trace, nr_ok, "NR convergence", res.warnings);
    if (res.sufficiency_violations > 0) {
        res.warnings.push_back(std::to_string(res.sufficiency_violations) +
                               " certified samples without a validated solution");
    }
    if (res.y_nr > 0.0) {
        res.eta = res.y_cert / res.y_nr;
    } else {
        res.warnings.push_back("NR fails at every sampled load; eta reported as 0");
    }
    return res;
}

SweepResult stress_sweep(const Network& net, CertifyOptions copts, const SweepOptions& opts) {
    copts.recover_solution = true;
    return stress_sweep(Certifier(net, std::move(copts)), opts);
}

}  // namespace cyclecert
