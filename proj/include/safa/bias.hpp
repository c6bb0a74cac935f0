#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace safa {

enum class BiasCase { Case1, Case2, Case3 };

std::string to_string(BiasCase c);

struct BiasParams {
    double C = 0.5;        // selection fraction
    double R = 0.3;        // background crash ratio
    double cr_A = 0.3;     // crash probability of the fastest client
    double cr_B = 0.3;     // crash probability of the slowest client
    int max_round = 50;

    void validate() const;
};

// Per-round trace of the two tracked clients' aggregation probabilities.
// Index 0 is round 1. bias[r] = p_a[r] / p_b[r]; +inf when p_b is zero,
// which happens in rounds where the slow client cannot contribute yet.
struct BiasTrace {
    std::vector<double> p_d_a, p_s_a, p_a;
    std::vector<double> p_d_b, p_s_b, p_b;
    std::vector<double> bias;
    std::vector<double> se_a, se_b;  // Monte-Carlo standard errors; empty for analytic traces

    size_t rounds() const { return p_a.size(); }
};

// Case1 iff C >= 1-R; Case3 iff C < (1-C)(1-R); Case2 otherwise.
BiasCase classify_bias_case(double C, double R);

// (1 - cr_A) / (1 - cr_B); constant in the round index.
double bias_fedavg(double cr_A, double cr_B);

// Case-dependent recurrence trace. Round 1 is the fresh-start round where
// nobody holds a bypass entry and everyone is on the compensation list; the
// slow client therefore starts at P_D = 0 in cases 2 and 3 (it is the last
// arrival and the quota closes before it), the fast client at 1 - cr_A.
// Any probability escaping [0,1] raises AnalyticInconsistency.
BiasTrace bias_safa_recurrence(const BiasParams& params);

// Printed closed form for sigma = 1 - P_D: (2cr - (cr-1)^(k+1) - 3)/(cr - 2).
// Kept verbatim for comparison against the recurrence; see
// closed_form_discrepancy for how far apart the two actually are.
double bias_sigma_closed_form(double cr, int k);

// max_k |closed_form(cr,k) - recurrence sigma(k)| over k = 1..max_round
double closed_form_discrepancy(double cr, int max_round, double p_d_round1);

struct MonteCarloConfig {
    int trials = 100000;
    int background_clients = 100;  // plus the two tracked clients
    uint64_t seed = 1;
};

// Simulates the abstract selection game: client A always fastest, B always
// slowest, a background population crashing at ratio R, CFCFM selection with
// quota ceil(C*m). Estimates the same per-round probabilities as the
// recurrence, with standard errors.
BiasTrace bias_monte_carlo(const BiasParams& params, const MonteCarloConfig& mc);

}  // namespace safa
