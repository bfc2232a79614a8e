#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "efenav/gaussian.hpp"
#include "efenav/transforms.hpp"

namespace efenav {

// One analytic-identity check evaluated over a randomized belief ensemble.
struct IdentityReport {
    std::string name;
    double worst_dev = 0.0;
    double tol = 0.0;
    bool pass = false;
    // Ensemble index and belief mean of the worst offender, for diagnostics.
    int worst_index = -1;
    Eigen::VectorXd worst_mean;
};

struct VerifyOptions {
    // Empty = all suites; otherwise restrict to these transform names
    // ("t1", "t2", "ut").
    std::vector<std::string> transforms;
    std::uint64_t seed = 0;
    int ensemble_size = 200;
    // Negative control: perturb R inside the closed forms so every identity
    // that depends on it must fail.
    bool corrupt_r = false;
};

// Deterministic ensemble of beliefs used by every suite: means uniform in
// [-2,2]^4 at least 0.15 m from the station, covariances random PSD with
// trace <= 4.
std::vector<Gaussian> verify_ensemble(std::uint64_t seed, int n);

// Runs the requested identity suites against the planar range-bearing sensor
// and returns one report per identity, in a fixed order.
std::vector<IdentityReport> run_identity_suites(const VerifyOptions& opt);

}  // namespace efenav
