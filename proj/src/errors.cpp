#include "floquet/errors.hpp"

namespace floquet {

IntegrationFailure::IntegrationFailure(const std::string& what, double time)
    : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

TrajectoryEscape::TrajectoryEscape(const std::string& what, double time)
    : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

CrossingSequence::CrossingSequence(const std::string& what, long revolution)
    : Error(what + " (revolution " + std::to_string(revolution) + ")"),
      revolution_(revolution) {}

}  // namespace floquet
