#include "safa/bias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "safa/errors.hpp"
#include "safa/rng.hpp"

namespace safa {

std::string to_string(BiasCase c) {
    switch (c) {
        case BiasCase::Case1: return "case1";
        case BiasCase::Case2: return "case2";
        case BiasCase::Case3: return "case3";
    }
    return "?";
}

void BiasParams::validate() const {
    if (C <= 0.0 || C > 1.0) throw ConfigError("bias: C must be in (0,1]");
    if (R < 0.0 || R >= 1.0) throw ConfigError("bias: R must be in [0,1)");
    if (cr_A < 0.0 || cr_A >= 1.0) throw ConfigError("bias: cr_A must be in [0,1)");
    if (cr_B < 0.0 || cr_B >= 1.0) throw ConfigError("bias: cr_B must be in [0,1)");
    if (max_round < 1) throw ConfigError("bias: max_round must be >= 1");
}

BiasCase classify_bias_case(double C, double R) {
    if (C >= 1.0 - R) return BiasCase::Case1;
    if (C < (1.0 - C) * (1.0 - R)) return BiasCase::Case3;
    return BiasCase::Case2;
}

double bias_fedavg(double cr_A, double cr_B) {
    if (cr_B >= 1.0) throw ConfigError("bias_fedavg: cr_B must be < 1");
    return (1.0 - cr_A) / (1.0 - cr_B);
}

namespace {

void check_prob(double v, int round, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw AnalyticInconsistency(std::string(name) + " = " + std::to_string(v) +
                                    " outside [0,1] at round " + std::to_string(round));
}

double ratio(double a, double b) {
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    return a / b;
}

}  // namespace

BiasTrace bias_safa_recurrence(const BiasParams& params) {
    params.validate();
    const BiasCase bc = classify_bias_case(params.C, params.R);
    const double crA = params.cr_A, crB = params.cr_B;
    BiasTrace tr;

    // Round 1: no bypass entries exist and the compensation list is empty,
    // so selection is pure first-come-first-merge. A commits first and is
    // always picked; B commits last and is picked only when the quota
    // covers every arrival (case 1).
    double pda, pdb;
    switch (bc) {
        case BiasCase::Case1:
            pda = 1.0 - crA;
            pdb = 1.0 - crB;
            break;
        case BiasCase::Case2:
            pda = 1.0 - crA;
            pdb = 0.0;
            break;
        case BiasCase::Case3:
            pda = 1.0 - crA;
            pdb = 0.0;
            break;
    }
    tr.p_d_a.push_back(pda);
    tr.p_s_a.push_back(0.0);
    tr.p_d_b.push_back(pdb);
    tr.p_s_b.push_back(0.0);

    for (int r = 2; r <= params.max_round; ++r) {
        double sigA = 1.0 - tr.p_d_a.back();
        double sigB = 1.0 - tr.p_d_b.back();
        double pd_a, ps_a, pd_b, ps_b;
        switch (bc) {
            case BiasCase::Case1:
                pd_a = 1.0 - crA;
                ps_a = 0.0;
                pd_b = 1.0 - crB;
                ps_b = 0.0;
                break;
            case BiasCase::Case2:
                pd_a = 1.0 - crA;
                ps_a = 0.0;
                pd_b = (1.0 - crB) * sigB;
                ps_b = crB * (sigB - crB);
                break;
            case BiasCase::Case3:
                pd_a = (1.0 - crA) * sigA;
                ps_a = crA * (sigA - crA);
                pd_b = 0.0;
                ps_b = 1.0 - crB;
                break;
        }
        check_prob(pd_a, r, "P_D(A)");
        check_prob(ps_a, r, "P_S(A)");
        check_prob(pd_b, r, "P_D(B)");
        check_prob(ps_b, r, "P_S(B)");
        tr.p_d_a.push_back(pd_a);
        tr.p_s_a.push_back(ps_a);
        tr.p_d_b.push_back(pd_b);
        tr.p_s_b.push_back(ps_b);
    }

    for (size_t i = 0; i < tr.p_d_a.size(); ++i) {
        double pa = tr.p_d_a[i] + tr.p_s_a[i];
        double pb = tr.p_d_b[i] + tr.p_s_b[i];
        check_prob(pa, static_cast<int>(i) + 1, "P(A)");
        check_prob(pb, static_cast<int>(i) + 1, "P(B)");
        tr.p_a.push_back(pa);
        tr.p_b.push_back(pb);
        tr.bias.push_back(ratio(pa, pb));
    }
    return tr;
}

double bias_sigma_closed_form(double cr, int k) {
    if (k < 1) throw ConfigError("bias_sigma_closed_form: k must be >= 1");
    return (2.0 * cr - std::pow(cr - 1.0, k + 1) - 3.0) / (cr - 2.0);
}

double closed_form_discrepancy(double cr, int max_round, double p_d_round1) {
    double pd = p_d_round1;
    double worst = 0.0;
    for (int k = 1; k <= max_round; ++k) {
        double sigma = 1.0 - pd;
        worst = std::max(worst, std::abs(bias_sigma_closed_form(cr, k) - sigma));
        pd = (1.0 - cr) * sigma;
    }
    return worst;
}

BiasTrace bias_monte_carlo(const BiasParams& params, const MonteCarloConfig& mc) {
    params.validate();
    if (mc.trials < 1) throw ConfigError("bias_monte_carlo: trials must be >= 1");
    if (mc.background_clients < 0) throw ConfigError("bias_monte_carlo: negative population");

    const int m = mc.background_clients + 2;
    const int quota = static_cast<int>(std::ceil(params.C * m));
    const int R = params.max_round;
    const int kA = 0, kB = m - 1;  // arrival order: A, background..., B

    // per-round event counters
    std::vector<long long> cnt_d_a(R, 0), cnt_s_a(R, 0), cnt_d_b(R, 0), cnt_s_b(R, 0);

    std::vector<char> picked_last(m), picked_now(m), undrafted_last(m), undrafted_now(m);
    std::vector<char> committed(m);

    for (int trial = 0; trial < mc.trials; ++trial) {
        Rng rng(derive_seed(mc.seed, "bias-mc", static_cast<uint64_t>(trial)));
        std::fill(picked_last.begin(), picked_last.end(), 0);
        std::fill(undrafted_last.begin(), undrafted_last.end(), 0);

        for (int r = 0; r < R; ++r) {
            std::fill(picked_now.begin(), picked_now.end(), 0);
            std::fill(undrafted_now.begin(), undrafted_now.end(), 0);
            for (int k = 0; k < m; ++k) {
                double cr = k == kA ? params.cr_A : (k == kB ? params.cr_B : params.R);
                committed[k] = rng.uniform() >= cr;
            }

            // CFCFM over the fixed arrival order; compensation first
            int picked = 0;
            for (int k = 0; k < m && picked < quota; ++k)
                if (committed[k] && !picked_last[k]) {
                    picked_now[k] = 1;
                    ++picked;
                }
            for (int k = 0; k < m && picked < quota; ++k)
                if (committed[k] && !picked_now[k]) {
                    picked_now[k] = 1;
                    ++picked;
                }
            for (int k = 0; k < m; ++k)
                if (committed[k] && !picked_now[k]) undrafted_now[k] = 1;

            // a fresh pick enters the cache directly; an undrafted entry from
            // last round survives this round's pre-aggregation unless a fresh
            // pick replaced it
            if (picked_now[kA]) ++cnt_d_a[r];
            else if (undrafted_last[kA]) ++cnt_s_a[r];
            if (picked_now[kB]) ++cnt_d_b[r];
            else if (undrafted_last[kB]) ++cnt_s_b[r];

            picked_last.swap(picked_now);
            undrafted_last.swap(undrafted_now);
        }
    }

    BiasTrace tr;
    const double n = static_cast<double>(mc.trials);
    for (int r = 0; r < R; ++r) {
        double pda = cnt_d_a[r] / n, psa = cnt_s_a[r] / n;
        double pdb = cnt_d_b[r] / n, psb = cnt_s_b[r] / n;
        double pa = pda + psa, pb = pdb + psb;
        tr.p_d_a.push_back(pda);
        tr.p_s_a.push_back(psa);
        tr.p_a.push_back(pa);
        tr.p_d_b.push_back(pdb);
        tr.p_s_b.push_back(psb);
        tr.p_b.push_back(pb);
        tr.bias.push_back(ratio(pa, pb));
        tr.se_a.push_back(std::sqrt(std::max(pa * (1.0 - pa), 0.0) / n));
        tr.se_b.push_back(std::sqrt(std::max(pb * (1.0 - pb), 0.0) / n));
    }
    return tr;
}

}  // namespace safa
