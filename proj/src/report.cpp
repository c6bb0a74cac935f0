#include "safa/report.hpp"

#include <cinttypes>
#include <cstdio>

namespace safa {

void write_round_csv_header(std::ostream& os, const std::string& config_hash) {
    os << "# " << kRoundCsvSchema << " config=" << config_hash << "\n";
    os << "round,protocol,round_length,t_dist,loss,accuracy,eur,m_sync,"
          "picked,undrafted,crashed,deprecated,version_variance,futility\n";
}

void write_round_csv_row(std::ostream& os, const RoundReport& r) {
    char buf[512];
    // %.17g round-trips doubles exactly; the determinism golden files rely on it
    std::snprintf(buf, sizeof(buf),
                  "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d,%d,%.17g,%.17g\n",
                  r.round, r.protocol.c_str(), r.round_length, r.t_dist, r.loss, r.accuracy,
                  r.eur, r.m_sync, r.picked, r.undrafted, r.crashed, r.deprecated,
                  r.version_variance, r.futility);
    os << buf;
}

}  // namespace safa
