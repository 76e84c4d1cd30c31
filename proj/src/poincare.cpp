#include "hamlearn/systems.hpp"

namespace hamlearn {

std::vector<SectionPoint> poincare_section(const Trajectory& traj, std::size_t coordinate_index,
                                           double crossing_value, CrossingDirection direction) {
  if (traj.states.empty()) return {};
  require(traj.states.front().dof() == 2,
          "poincare_section: requires a two-degree-of-freedom trajectory");
  require(coordinate_index < 2, "poincare_section: coordinate index must be 0 or 1");
  const std::size_t other = 1 - coordinate_index;

  std::vector<SectionPoint> points;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const PhaseState& s0 = traj.states[i];
    const PhaseState& s1 = traj.states[i + 1];
    const double a = s0.q()[coordinate_index] - crossing_value;
    const double b = s1.q()[coordinate_index] - crossing_value;
    const bool up = a < 0.0 && b >= 0.0;
    const bool down = a > 0.0 && b <= 0.0;
    const bool take = (direction == CrossingDirection::Increasing && up) ||
                      (direction == CrossingDirection::Decreasing && down) ||
                      (direction == CrossingDirection::Both && (up || down));
    if (!take) continue;
    const double f = a / (a - b);
    points.push_back({traj.time(i) + f * traj.dt_sample,
                      s0.q()[other] + f * (s1.q()[other] - s0.q()[other]),
                      s0.p()[other] + f * (s1.p()[other] - s0.p()[other])});
  }
  return points;
}

}  // namespace hamlearn
