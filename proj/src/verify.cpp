#include "efenav/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "efenav/efe.hpp"
#include "efenav/rng.hpp"
#include "efenav/system.hpp"

namespace efenav {

namespace {

constexpr int kDimX = 4;

bool wants(const VerifyOptions& opt, const char* name) {
    if (opt.transforms.empty()) return true;
    return std::find(opt.transforms.begin(), opt.transforms.end(), std::string(name)) !=
           opt.transforms.end();
}

// Entropy of the stacked (x, y) Gaussian minus the marginal state entropy.
double conditional_entropy_by_difference(const JointApprox& j) {
    const int dx = j.dim_x();
    const int dy = j.dim_y();
    Eigen::MatrixXd full(dx + dy, dx + dy);
    full.topLeftCorner(dx, dx) = j.state.cov;
    full.topRightCorner(dx, dy) = j.gamma;
    full.bottomLeftCorner(dy, dx) = j.gamma.transpose();
    full.bottomRightCorner(dy, dy) = j.sigma;
    Eigen::VectorXd mean(dx + dy);
    mean.head(dx) = j.state.mean;
    mean.tail(dy) = j.mu;
    const double h_joint = gaussian_entropy(Gaussian{mean, symmetrize(full)});
    const double h_marg = gaussian_entropy(j.state);
    return h_joint - h_marg;
}

struct SuiteAccum {
    double worst = -1.0;
    int index = -1;
    Eigen::VectorXd mean;

    void offer(double dev, int i, const Eigen::VectorXd& m) {
        if (dev > worst) {
            worst = dev;
            index = i;
            mean = m;
        }
    }
};

IdentityReport finish(const std::string& name, const SuiteAccum& acc, double tol) {
    IdentityReport r;
    r.name = name;
    r.worst_dev = acc.worst;
    r.tol = tol;
    r.pass = acc.worst < tol;
    r.worst_index = acc.index;
    r.worst_mean = acc.mean;
    return r;
}

}  // namespace

std::vector<Gaussian> verify_ensemble(std::uint64_t seed, int n) {
    std::vector<Gaussian> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd m(kDimX);
        std::uint64_t rejects = 0;
        for (;;) {
            const std::uint64_t k =
                rng::key(seed, static_cast<std::uint64_t>(i), rejects, DrawKind::Ensemble);
            for (int d = 0; d < kDimX; ++d) m(d) = -2.0 + 4.0 * rng::uniform01(k, d);
            if (std::hypot(m(0), m(1)) > 0.15) break;
            ++rejects;
            if (rejects > 1000) throw std::runtime_error("ensemble rejection stuck");
        }
        const std::uint64_t kc =
            rng::key(seed, static_cast<std::uint64_t>(i), rejects, DrawKind::Ensemble);
        Eigen::MatrixXd root(kDimX, kDimX);
        for (int r = 0; r < kDimX; ++r)
            for (int c = 0; c < kDimX; ++c)
                root(r, c) = rng::normal(kc, 8 + 2 * (kDimX * r + c));
        Eigen::MatrixXd cov = symmetrize(root * root.transpose());
        const double target = 4.0 * rng::uniform01(kc, 60);
        cov *= target / cov.trace();
        out.push_back(Gaussian{m, cov});
    }
    return out;
}

std::vector<IdentityReport> run_identity_suites(const VerifyOptions& opt) {
    const SensorStation station{Eigen::Vector2d::Zero()};
    const MeasurementModel model = make_range_bearing_model(station, 1e-3, 1e-3);

    MeasurementModel reference = model;
    if (opt.corrupt_r) reference.R += 0.01 * Eigen::MatrixXd::Identity(2, 2);

    const TransformKind t1 = TransformKind::taylor1();
    const TransformKind t2 = TransformKind::taylor2();
    const TransformKind ut = TransformKind::unscented(UnscentedParams::defaults(kDimX));

    const bool do_t1 = wants(opt, "t1");
    const bool do_t2 = wants(opt, "t2");
    const bool do_ut = wants(opt, "ut");

    const std::vector<Gaussian> ensemble = verify_ensemble(opt.seed, opt.ensemble_size);

    SuiteAccum a_t1, a_t2, a_ut, l_t1, l_t2, l_ut;
    double t2_sum = 0.0, t2_sumsq = 0.0;

    for (int i = 0; i < static_cast<int>(ensemble.size()); ++i) {
        const Gaussian& belief = ensemble[static_cast<std::size_t>(i)];
        if (do_t1) {
            const JointApprox j = apply_transform(t1, model, belief);
            const double generic = ambiguity_generic(j);
            const double closed = ambiguity_closed_form(t1, reference, belief);
            a_t1.offer(std::abs(generic - closed), i, belief.mean);
            l_t1.offer(std::abs(generic - conditional_entropy_by_difference(j)), i, belief.mean);
        }
        if (do_t2) {
            const JointApprox j = apply_transform(t2, model, belief);
            const double generic = ambiguity_generic(j);
            const double closed = ambiguity_closed_form(t2, reference, belief);
            a_t2.offer(std::abs(generic - closed), i, belief.mean);
            l_t2.offer(std::abs(generic - conditional_entropy_by_difference(j)), i, belief.mean);
            t2_sum += generic;
            t2_sumsq += generic * generic;
        }
        if (do_ut) {
            const JointApprox j = apply_transform(ut, model, belief);
            const double generic = ambiguity_generic(j);
            const double closed = ambiguity_closed_form(ut, reference, belief);
            a_ut.offer(std::abs(generic - closed), i, belief.mean);
            l_ut.offer(std::abs(generic - conditional_entropy_by_difference(j)), i, belief.mean);
        }
    }

    std::vector<IdentityReport> reports;
    if (do_t1) reports.push_back(finish("taylor1 ambiguity matches sensor-noise constant", a_t1, 1e-9));
    if (do_t2) {
        reports.push_back(finish("taylor2 ambiguity matches corrected closed form", a_t2, 1e-8));
        const double n = static_cast<double>(ensemble.size());
        const double var = std::max(0.0, t2_sumsq / n - (t2_sum / n) * (t2_sum / n));
        IdentityReport spread;
        spread.name = "taylor2 ambiguity varies across beliefs (std > 0.01)";
        spread.worst_dev = std::sqrt(var);
        spread.tol = 0.01;
        spread.pass = spread.worst_dev > spread.tol;
        reports.push_back(spread);
    }
    if (do_ut) reports.push_back(finish("unscented ambiguity matches sensor-noise constant", a_ut, 1e-8));
    if (do_t1) reports.push_back(finish("taylor1 ambiguity equals joint-minus-marginal entropy", l_t1, 1e-10));
    if (do_t2) reports.push_back(finish("taylor2 ambiguity equals joint-minus-marginal entropy", l_t2, 1e-10));
    if (do_ut) reports.push_back(finish("unscented ambiguity equals joint-minus-marginal entropy", l_ut, 1e-10));
    return reports;
}

}  // namespace efenav
