#pragma once

#include <set>
#include <vector>

namespace safa {

// |P - P n K| / m
double eur_empirical(const std::set<int>& picked, const std::set<int>& crashed, int m);

// 1-R when C >= 1-R, else C
double eur_theoretical(double C, double R);

// mean m_sync / m over rounds
double sync_ratio(const std::vector<int>& per_round_m_sync, int m, int rounds);

// population variance (divide by count); 0 for a single element
double population_variance(const std::vector<int>& values);

// mean over rounds of the population variance of trainer versions
double version_variance(const std::vector<std::vector<int>>& per_round_versions, int rounds);

// total wasted / total attempted local epochs
double futility(double epochs_wasted, double epochs_attempted);

}  // namespace safa
