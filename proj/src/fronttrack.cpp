#include "balsplit/fronttrack.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "balsplit/errors.hpp"

namespace balsplit {

const char* to_string(FrontKind k) {
    switch (k) {
        case FrontKind::Shock: return "shock";
        case FrontKind::Contact: return "contact";
        case FrontKind::Rarefaction: return "rarefaction";
        case FrontKind::NonPhysical: return "non-physical";
    }
    return "?";
}

FrontState::FrontState(std::shared_ptr<const SystemModel> model, FrontTrackingParams params, int dim)
    : model_(std::move(model)), params_(params), dim_(dim) {
    if (!model_) throw std::invalid_argument("front tracking needs a model");
    if (!(params_.eps > 0.0)) throw std::invalid_argument("front tracking eps must be positive");
    if (dim_ != model_->dim()) throw std::invalid_argument("state dimension does not match the model");
}

int FrontState::new_node(const Outgoing& o, double x, double t) {
    int id;
    if (!free_.empty()) {
        id = free_.back();
        free_.pop_back();
    } else {
        id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
    }
    Node& n = nodes_[static_cast<std::size_t>(id)];
    n.x_ref = x;
    n.t_ref = t;
    n.speed = o.speed;
    n.strength = o.strength;
    n.family = o.family;
    n.kind = o.kind;
    n.left = o.left;
    n.right = o.right;
    n.prev = n.next = -1;
    n.alive = true;
    ++n.gen;
    ++alive_;
    return id;
}

void FrontState::kill(int id, double t) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (params_.record_segments && t > n.t_ref)
        closed_.push_back({n.t_ref, t, n.x_ref, n.speed, n.family, n.kind, n.left, n.right});
    n.alive = false;
    free_.push_back(id);
    --alive_;
}

void FrontState::schedule(int a, int b) {
    if (a < 0 || b < 0) return;
    const Node& A = nodes_[static_cast<std::size_t>(a)];
    const Node& B = nodes_[static_cast<std::size_t>(b)];
    if (!(A.speed > B.speed)) return;
    double gap = std::max(0.0, pos(B, time_) - pos(A, time_));
    double tc = time_ + gap / (A.speed - B.speed);
    queue_.push({tc, pos(A, tc), seq_++, a, b, A.gen, B.gen});
}

void FrontState::append_wave(std::vector<Outgoing>& out, int j, double sigma, const State& ul,
                             const State& ur) const {
    const SystemModel& m = *model_;
    if (m.genuinely_nonlinear(j) && sigma > 0.0) {
        int pieces = std::max(1, static_cast<int>(std::ceil(sigma / params_.eps - 1e-9)));
        State prev = ul;
        for (int k = 1; k <= pieces; ++k) {
            State next = (k == pieces) ? ur : m.lax_curve(j, sigma * k / pieces, ul);
            out.push_back({m.rarefaction_speed(j, prev, next), sigma / pieces, j, FrontKind::Rarefaction, prev, next});
            prev = next;
        }
    } else {
        FrontKind kind = m.genuinely_nonlinear(j) ? FrontKind::Shock : FrontKind::Contact;
        out.push_back({m.shock_speed(j, ul, ur), sigma, j, kind, ul, ur});
    }
}

State FrontState::append_fan(std::vector<Outgoing>& out, const State& ul, const State& ur) const {
    const int n = dim_;
    if (ul == ur) return State::Zero(n);
    RiemannSolution sol = solve_riemann(*model_, ul, ur);
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (std::abs(sol.sigma[i]) > params_.strength_floor) keep.push_back(i);
    if (keep.empty()) {
        Eigen::Index imax = 0;
        sol.sigma.cwiseAbs().maxCoeff(&imax);
        keep.push_back(static_cast<int>(imax));
    }
    State cur = ul;
    for (std::size_t q = 0; q < keep.size(); ++q) {
        int i = keep[q];
        State right = (q + 1 == keep.size()) ? ur : sol.states[static_cast<std::size_t>(i + 1)];
        append_wave(out, i, sol.sigma[i], cur, right);
        cur = right;
    }
    return sol.sigma;
}

std::vector<FrontState::Outgoing> FrontState::simplified(const Node& A, const Node& B, const State& ul,
                                                         const State& ur) const {
    const SystemModel& m = *model_;
    std::vector<Outgoing> out;
    State mid = ul;
    auto wave = [&](int j, double sigma) {
        if (std::abs(sigma) <= params_.strength_floor) return;
        State next = m.lax_curve(j, sigma, mid);
        append_wave(out, j, sigma, mid, next);
        mid = next;
    };
    if (A.family == kNonPhysical) {
        wave(B.family, B.strength);
    } else if (B.family == kNonPhysical) {
        wave(A.family, A.strength);
    } else if (A.family > B.family) {
        wave(B.family, B.strength);
        wave(A.family, A.strength);
    } else {
        wave(A.family, A.strength + B.strength);
    }
    double gap = (ur - mid).norm();
    if (gap >= params_.nonphysical_floor() || (out.empty() && gap > 0.0)) {
        out.push_back({m.lambda_hat(), gap, kNonPhysical, FrontKind::NonPhysical, mid, ur});
    } else if (!out.empty()) {
        out.back().right = ur;
    }
    return out;
}

void FrontState::splice(int before, int after, const std::vector<Outgoing>& out, double x, double t) {
    int prev = before;
    for (const auto& o : out) {
        int id = new_node(o, x, t);
        Node& n = nodes_[static_cast<std::size_t>(id)];
        n.prev = prev;
        if (prev >= 0)
            nodes_[static_cast<std::size_t>(prev)].next = id;
        else
            head_ = id;
        prev = id;
    }
    if (prev >= 0) nodes_[static_cast<std::size_t>(prev)].next = after;
    if (after >= 0)
        nodes_[static_cast<std::size_t>(after)].prev = prev;
    else
        tail_ = prev;
    if (prev < 0) head_ = after;
}

void FrontState::collide(const Event& ev) {
    const Node A = nodes_[static_cast<std::size_t>(ev.a)];
    const Node B = nodes_[static_cast<std::size_t>(ev.b)];
    const double t = ev.t;
    double x = 0.5 * (pos(A, t) + pos(B, t));
    const int before = A.prev, after = B.next;
    if (before >= 0) x = std::max(x, pos(nodes_[static_cast<std::size_t>(before)], t));
    if (after >= 0) x = std::min(x, pos(nodes_[static_cast<std::size_t>(after)], t));

    const State& ul = A.left;
    const State& ur = B.right;
    const bool physical = A.family != kNonPhysical && B.family != kNonPhysical;
    const bool accurate = physical && (dim_ == 1 || A.family < B.family ||
                                       std::abs(A.strength * B.strength) >= params_.threshold());
    std::vector<Outgoing> out;
    if (accurate)
        append_fan(out, ul, ur);
    else
        out = simplified(A, B, ul, ur);
    for (std::size_t k = 1; k < out.size(); ++k) out[k].speed = std::max(out[k].speed, out[k - 1].speed);

    kill(ev.a, t);
    kill(ev.b, t);
    double before_strength = std::abs(A.strength) + std::abs(B.strength);
    double after_strength = 0.0;
    for (const auto& o : out) after_strength += std::abs(o.strength);
    total_strength_ += after_strength - before_strength;

    splice(before, after, out, x, t);
    ++interactions_;
    if (accurate) ++accurate_;
    if (params_.record_events)
        events_.push_back({t, x, A.family, B.family, A.strength, B.strength, accurate, static_cast<int>(out.size())});
    if (interactions_ > params_.max_interactions)
        throw DomainError(fmt::format("front tracking exceeded {} interactions at t = {}", params_.max_interactions, t));
    if (total_strength_ > params_.max_total_strength)
        throw DomainError(fmt::format("total front strength {:.6g} exceeds the domain bound {:.6g} at t = {}",
                                      total_strength_, params_.max_total_strength, t));

    int first = before >= 0 ? nodes_[static_cast<std::size_t>(before)].next : head_;
    int last = after >= 0 ? nodes_[static_cast<std::size_t>(after)].prev : tail_;
    if (out.empty()) {
        schedule(before, after);
        return;
    }
    schedule(before, first);
    for (int id = first; id != last; id = nodes_[static_cast<std::size_t>(id)].next)
        schedule(id, nodes_[static_cast<std::size_t>(id)].next);
    schedule(last, after);
}

void FrontState::initialize(const PCFn& u) {
    if (u.dim() != dim_) throw std::invalid_argument("initial datum has the wrong dimension");
    nodes_.clear();
    free_.clear();
    head_ = tail_ = -1;
    alive_ = 0;
    queue_ = {};
    initial_waves_.clear();
    events_.clear();
    closed_.clear();
    total_strength_ = 0.0;

    auto br = u.breakpoints();
    auto vals = u.values();
    const double floor = params_.initial_floor();
    State cur = vals[0];
    for (std::size_t k = 0; k < br.size(); ++k) {
        const bool last = k + 1 == br.size();
        if ((vals[k + 1] - cur).norm() < floor && !(last && vals[k + 1] != cur)) continue;
        std::vector<Outgoing> out;
        State sigma = append_fan(out, cur, vals[k + 1]);
        cur = vals[k + 1];
        initial_waves_.push_back({br[k], sigma});
        for (const auto& o : out) total_strength_ += std::abs(o.strength);
        splice(tail_, -1, out, br[k], time_);
    }
    for (int id = head_; id >= 0; id = nodes_[static_cast<std::size_t>(id)].next)
        schedule(id, nodes_[static_cast<std::size_t>(id)].next);
    if (total_strength_ > params_.max_total_strength)
        throw DomainError(fmt::format("initial total strength {:.6g} exceeds the domain bound {:.6g}",
                                      total_strength_, params_.max_total_strength));
}

void FrontState::advance(double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument(fmt::format("cannot evolve by dt = {}", dt));
    const double t_end = time_ + dt;
    while (!queue_.empty() && queue_.top().t <= t_end) {
        Event ev = queue_.top();
        queue_.pop();
        const Node& A = nodes_[static_cast<std::size_t>(ev.a)];
        const Node& B = nodes_[static_cast<std::size_t>(ev.b)];
        if (!A.alive || !B.alive || A.gen != ev.ga || B.gen != ev.gb || A.next != ev.b) continue;
        time_ = std::max(time_, ev.t);
        collide(ev);
    }
    time_ = t_end;
}

std::vector<WaveFront> FrontState::fronts() const {
    std::vector<WaveFront> out;
    out.reserve(alive_);
    double last = -std::numeric_limits<double>::infinity();
    for (int id = head_; id >= 0; id = nodes_[static_cast<std::size_t>(id)].next) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        double x = std::max(last, pos(n, time_));
        last = x;
        out.push_back({x, n.speed, n.family, n.strength, n.kind, n.left, n.right});
    }
    return out;
}

std::vector<FrontSegment> FrontState::segments() const {
    std::vector<FrontSegment> out = closed_;
    for (int id = head_; id >= 0; id = nodes_[static_cast<std::size_t>(id)].next) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (time_ > n.t_ref) out.push_back({n.t_ref, time_, n.x_ref, n.speed, n.family, n.kind, n.left, n.right});
    }
    return out;
}

PCFn FrontState::snapshot() const {
    if (head_ < 0) return PCFn(dim_);
    std::vector<double> br;
    std::vector<State> vals;
    br.reserve(alive_);
    vals.reserve(alive_ + 1);
    vals.push_back(State::Zero(dim_));
    double last = -std::numeric_limits<double>::infinity();
    for (int id = head_; id >= 0; id = nodes_[static_cast<std::size_t>(id)].next) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        double x = std::max(last, pos(n, time_));
        last = x;
        br.push_back(x);
        vals.push_back(n.right);
    }
    return PCFn(std::move(br), std::move(vals));
}

FrontState init_fronts(std::shared_ptr<const SystemModel> model, const PCFn& u, const FrontTrackingParams& params) {
    FrontState s(model, params, u.dim());
    s.initialize(u);
    return s;
}

FrontState evolve(FrontState state, double t) {
    state.advance(t);
    return state;
}

PCFn snapshot(const FrontState& state) { return state.snapshot(); }

PCFn semigroup(std::shared_ptr<const SystemModel> model, const PCFn& u, double t, const FrontTrackingParams& params) {
    FrontState s = init_fronts(std::move(model), u, params);
    s.advance(t);
    return s.snapshot();
}

}  // namespace balsplit
