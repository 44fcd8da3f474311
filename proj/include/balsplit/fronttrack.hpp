#ifndef BALSPLIT_FRONTTRACK_HPP
#define BALSPLIT_FRONTTRACK_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <queue>
#include <vector>

#include "balsplit/pcfn.hpp"
#include "balsplit/system.hpp"

namespace balsplit {

enum class FrontKind { Shock, Contact, Rarefaction, NonPhysical };

inline constexpr int kNonPhysical = -1;

const char* to_string(FrontKind k);

struct WaveFront {
    double position;
    double speed;
    int family;  ///< 0..n-1, or kNonPhysical
    double strength;
    FrontKind kind;
    State left;
    State right;
};

struct FrontTrackingParams {
    /// Maximal strength of a rarefaction piece.
    double eps = 1e-3;
    /// Collisions with |sigma sigma'| below this use the simplified solver; negative means eps^2.
    double rho_thresh = -1.0;
    /// Waves weaker than this are not turned into fronts.
    double strength_floor = 1e-14;
    /// Simplified-solver mismatches below this are absorbed instead of becoming
    /// non-physical fronts; negative means 1e-4 * threshold().
    double np_floor = -1.0;
    /// Initial jumps smaller than this are snapped to the running state; negative means nonphysical_floor().
    double data_floor = -1.0;
    std::size_t max_interactions = 20'000'000;
    /// Blow-up guard on the total front strength.
    double max_total_strength = std::numeric_limits<double>::infinity();
    bool record_events = false;
    bool record_segments = false;

    double threshold() const { return rho_thresh < 0.0 ? eps * eps : rho_thresh; }
    double nonphysical_floor() const {
        return np_floor < 0.0 ? std::max(strength_floor, 1e-4 * threshold()) : np_floor;
    }
    double initial_floor() const { return data_floor < 0.0 ? nonphysical_floor() : data_floor; }
};

struct CollisionEvent {
    double time;
    double position;
    int family_left;
    int family_right;
    double strength_left;
    double strength_right;
    bool accurate;
    int outgoing;
};

/// Straight piece of a front's trajectory in the (t, x) plane.
struct FrontSegment {
    double t0;
    double t1;
    double x0;  ///< position at t0
    double speed;
    int family;
    FrontKind kind;
    State left;
    State right;
};

/**
 * @brief Mutable wave-front tracking state with a lazily invalidated collision queue.
 *
 * Copies are independent.
 */
class FrontState {
public:
    FrontState(std::shared_ptr<const SystemModel> model, FrontTrackingParams params, int dim);

    const SystemModel& model() const { return *model_; }
    std::shared_ptr<const SystemModel> model_ptr() const { return model_; }
    const FrontTrackingParams& params() const { return params_; }
    double time() const { return time_; }
    int dim() const { return dim_; }
    std::size_t size() const { return alive_; }
    std::size_t interactions() const { return interactions_; }
    std::size_t accurate_solves() const { return accurate_; }
    double total_strength() const { return total_strength_; }

    /// Fronts in left-to-right order with positions at time().
    std::vector<WaveFront> fronts() const;
    /// Strengths of the Riemann fans created at initialization.
    const std::vector<JumpWaves>& initial_waves() const { return initial_waves_; }
    const std::vector<CollisionEvent>& events() const { return events_; }
    /// Closed trajectory pieces, plus the live ones truncated at time().
    std::vector<FrontSegment> segments() const;

    /// Resolve every jump of u by its Riemann fan; u must be zero-tailed.
    void initialize(const PCFn& u);
    void advance(double dt);
    PCFn snapshot() const;

private:
    struct Node {
        double x_ref;
        double t_ref;
        double speed;
        double strength;
        int family;
        FrontKind kind;
        State left;
        State right;
        int prev = -1;
        int next = -1;
        std::uint32_t gen = 0;
        bool alive = false;
    };
    struct Event {
        double t;
        double x;
        std::uint64_t seq;
        int a;
        int b;
        std::uint32_t ga;
        std::uint32_t gb;
        bool operator>(const Event& o) const {
            if (t != o.t) return t > o.t;
            if (x != o.x) return x > o.x;
            return seq > o.seq;
        }
    };
    struct Outgoing {
        double speed;
        double strength;
        int family;
        FrontKind kind;
        State left;
        State right;
    };

    double pos(const Node& n, double t) const { return n.x_ref + n.speed * (t - n.t_ref); }
    int new_node(const Outgoing& o, double x, double t);
    void kill(int id, double t);
    void schedule(int a, int b);
    void collide(const Event& ev);
    State append_fan(std::vector<Outgoing>& out, const State& ul, const State& ur) const;
    void append_wave(std::vector<Outgoing>& out, int family, double sigma, const State& ul,
                     const State& ur) const;
    std::vector<Outgoing> simplified(const Node& A, const Node& B, const State& ul, const State& ur) const;
    void splice(int before, int after, const std::vector<Outgoing>& out, double x, double t);

    std::shared_ptr<const SystemModel> model_;
    FrontTrackingParams params_;
    int dim_;
    double time_ = 0.0;
    std::vector<Node> nodes_;
    std::vector<int> free_;
    int head_ = -1;
    int tail_ = -1;
    std::size_t alive_ = 0;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
    std::uint64_t seq_ = 0;
    std::size_t interactions_ = 0;
    std::size_t accurate_ = 0;
    double total_strength_ = 0.0;
    std::vector<JumpWaves> initial_waves_;
    std::vector<CollisionEvent> events_;
    std::vector<FrontSegment> closed_;
};

FrontState init_fronts(std::shared_ptr<const SystemModel> model, const PCFn& u,
                       const FrontTrackingParams& params);
FrontState evolve(FrontState state, double t);
PCFn snapshot(const FrontState& state);

/// snapshot(evolve(init_fronts(u), t)).
PCFn semigroup(std::shared_ptr<const SystemModel> model, const PCFn& u, double t,
               const FrontTrackingParams& params);

}  // namespace balsplit

#endif
