#ifndef BALSPLIT_MODELS_HPP
#define BALSPLIT_MODELS_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "balsplit/flux_models.hpp"
#include "balsplit/source.hpp"

namespace balsplit {

/// A hyperbolic model together with its source.
struct ModelBundle {
    std::string id;
    std::shared_ptr<const SystemModel> model;
    std::shared_ptr<const SourceOp> source;
};

struct RadiatingGasParams {
    double a = 1.0;
    double b = 1.0;
    GasParams gas;
};

struct RosenauParams {
    double mu = 1.0;
    double lambda = 1.0;
    double m = 1.0;
    double s = 1.0;
    double eps = 1.0;
    GasParams gas;
};

/// Euler flow with energy source b (-theta^4 + sqrt(a) Q_a * theta^4), Q_a = exp(-sqrt(a)|x|)/2.
ModelBundle radiating_gas(const RadiatingGasParams& p);
/// Euler flow with relaxation sources on velocity and temperature.
ModelBundle rosenau(const RosenauParams& p);
/// Burgers flux with G(u) = -u + Q * u, Q = exp(-|x|)/2.
ModelBundle scalar_rosenau(double half_width = 2.0);
/// model with the local source a(x) u + b(x).
ModelBundle local_source(std::shared_ptr<const SystemModel> model, StepFunction a, PCFn b);
/// Augmented model and source for G(t, u) = m(t) G_base(u).
ModelBundle nonautonomous(const ModelBundle& base, NonautonomousSource::Modulation mod, double l1_bound = 1.0);

/// Lipschitz constant of a map on a box, from sampled Jacobian norms with a 2% margin.
double sampled_lipschitz(const std::function<Matrix(const State&)>& jacobian, const Box& box, int per_axis = 9);

/// Largest measured ratios against the declared source constants on random data in Omega.
struct SourceProbe {
    double lipschitz_ratio = 0.0;  ///< max |G(u) - G(w)|_1 / (L1 |u - w|_1)
    double tv_ratio = 0.0;         ///< max TV(G(u)) / (L2 TV(u) + L3)
    int samples = 0;
};
SourceProbe probe_source(const SystemModel& model, const SourceOp& src, int samples, std::uint64_t seed);

/// Named numeric parameters for registry construction.
using ParamMap = std::map<std::string, double>;

struct ModelInfo {
    std::string id;
    std::string summary;
    std::vector<std::string> params;
};
const std::vector<ModelInfo>& registered_models();
/// Builds a registered model; unknown ids or parameters raise ConfigError with a suggestion.
ModelBundle make_model(const std::string& id, const ParamMap& params = {});

/// Closest candidate by edit distance, or empty when nothing is close.
std::string closest_match(const std::string& word, const std::vector<std::string>& candidates);

}  // namespace balsplit

#endif
