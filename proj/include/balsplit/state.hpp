#ifndef BALSPLIT_STATE_HPP
#define BALSPLIT_STATE_HPP

#include <Eigen/Dense>

namespace balsplit {

/// Upper bound on the number of conserved components (Euler plus a clock).
inline constexpr int kMaxDim = 4;

/// A point of state space, stored as a deviation from the model base state.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline State zero_state(int n) { return State::Zero(n); }

/// Axis-aligned box in deviation coordinates.
struct Box {
    State lo;
    State hi;

    static Box centered(int n, double half_width) {
        return Box{State::Constant(n, -half_width), State::Constant(n, half_width)};
    }
    bool contains(const State& u, double slack = 0.0) const {
        for (int i = 0; i < u.size(); ++i)
            if (u[i] < lo[i] - slack || u[i] > hi[i] + slack) return false;
        return true;
    }
};

}  // namespace balsplit

#endif
