#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace safa {

// One row per federated round; the CSV contract for every protocol.
struct RoundReport {
    int round = 0;
    std::string protocol;
    double round_length = 0.0;
    double t_dist = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
    double eur = 0.0;
    int m_sync = 0;
    int picked = 0;
    int undrafted = 0;
    int crashed = 0;
    int deprecated = 0;
    double version_variance = 0.0;
    double futility = 0.0;  // this round's wasted/attempted epochs
};

inline constexpr const char* kRoundCsvSchema = "safa-round-csv-v1";

void write_round_csv_header(std::ostream& os, const std::string& config_hash);
void write_round_csv_row(std::ostream& os, const RoundReport& r);

}  // namespace safa
