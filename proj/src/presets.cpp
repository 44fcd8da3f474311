#include "balsplit/presets.hpp"

#include <algorithm>
#include <stdexcept>

namespace balsplit {

PCFn riemann_datum(const State& ul, const State& ur, double x0, double a, double b) {
    if (!(a < x0 && x0 < b)) throw std::invalid_argument("riemann datum needs a < x0 < b");
    if (ul.size() != ur.size()) throw std::invalid_argument("riemann states of different dimension");
    State z = State::Zero(ul.size());
    return PCFn({a, x0, b}, {z, ul, ur, z});
}

PCFn bump_datum(const State& v, double a, double b) { return PCFn::box(a, b, v); }

PCFn random_datum(std::mt19937_64& rng, const RandomDatumSpec& spec) {
    if (spec.jumps < 2) throw std::invalid_argument("random datum needs at least two jumps");
    if (!(spec.lo < spec.hi)) throw std::invalid_argument("random datum needs lo < hi");
    std::uniform_real_distribution<double> pos(spec.lo, spec.hi);
    std::uniform_real_distribution<double> val(-spec.amplitude, spec.amplitude);
    std::vector<double> br(static_cast<std::size_t>(spec.jumps));
    for (auto& x : br) x = pos(rng);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    std::vector<State> vals;
    vals.push_back(State::Zero(spec.dim));
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        State v(spec.dim);
        for (int c = 0; c < spec.dim; ++c) v[c] = val(rng);
        vals.push_back(v);
    }
    vals.push_back(State::Zero(spec.dim));
    return PCFn(std::move(br), std::move(vals));
}

PCFn random_datum(std::uint64_t seed, const RandomDatumSpec& spec) {
    std::mt19937_64 rng(seed);
    return random_datum(rng, spec);
}

}  // namespace balsplit
