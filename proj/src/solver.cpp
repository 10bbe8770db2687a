#include "floodopt/solver.hpp"

namespace floodopt {

std::vector<std::string> SolverConfig::validate() const {
  auto out = physics.validate();
  if (!(max_dt > 0)) out.push_back("solver.max_dt: must be > 0");
  if (order != 1 && order != 2) out.push_back("solver.order: must be 1 or 2");
  if (threads < 1) out.push_back("solver.threads: must be >= 1");
  return out;
}

template class Simulator<double>;
template class Simulator<float>;

}  // namespace floodopt
