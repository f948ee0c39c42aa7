#include "twophase/trajectory.hpp"

#include <ostream>

#include "twophase/format.hpp"

namespace twophase {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kTheory:
      return "theory";
    case Provenance::kMonteCarloMean:
      return "montecarlo-mean";
    case Provenance::kMonteCarloReplica:
      return "montecarlo-replica";
  }
  return "unknown";
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records) {
  out << "cycle,loss_mean,loss_se,provenance,R,B,D,S,eta,nu,seed\n";
  for (const auto& rec : records) {
    const auto& c = rec.config;
    for (std::size_t i = 0; i < rec.losses.size(); ++i) {
      out << i << ',' << format_double(rec.losses[i]) << ',';
      if (i < rec.standard_errors.size()) out << format_double(rec.standard_errors[i]);
      out << ',' << to_string(rec.provenance) << ',' << c.workers << ',' << c.batch << ','
          << c.dimension << ',' << c.sync_period << ',' << format_double(c.eta) << ','
          << format_double(c.nu) << ',' << c.seed << '\n';
    }
  }
}

}  // namespace twophase
