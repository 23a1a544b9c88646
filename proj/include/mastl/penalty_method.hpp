#pragma once

#include <string>
#include <vector>

#include <mastl/bcgd.hpp>
#include <mastl/penalty.hpp>

namespace mastl {

enum class PmTermination {
    penalty_threshold,        // R < eps_infeas
    true_robustness_positive, // exact robustness above the margin
    max_outer_iters           // non-convergence; best iterate returned
};

const char* to_string(PmTermination t);

struct PmConfig {
    enum class Mode { penalty_threshold, true_robustness_positive };

    double lambda0 = 1.0;
    double eta_lambda = 5.0;
    int max_outer = 12;
    double eps_infeas = 5e-4;
    double eps0 = 1e-2;
    double eta_eps = 0.5;
    double eps_floor = 1e-3; // inner tolerance never drops below this
    Mode mode = Mode::true_robustness_positive;
    double robustness_margin = 1e-4;
    bool warm_start = false;
    BcgdConfig inner;

    void validate() const;

    double lambda_at(int k) const;
    // eps0 * eta_eps^k, and the inner tolerance actually used.
    double eps_at(int k) const;
    double inner_tolerance(int k) const;
};

struct PmOuterRecord {
    int k = 0;
    double lambda = 0.0;
    double eps = 0.0;
    double inner_tolerance = 0.0;
    double eps_infeas = 0.0;
    int inner_iterations = 0;
    BcgdTermination inner_termination = BcgdTermination::max_iters;
    double grad_norm = 0.0;
    double F = 0.0;
    double L = 0.0;
    double R = 0.0;
    double rho_smooth = 0.0;
    double rho = 0.0;
    double wall_seconds = 0.0;
};

struct SolveReport {
    ControlSequence u;
    Trajectory x;
    double rho = 0.0;        // exact
    double rho_smooth = 0.0;
    double R = 0.0;
    double cost = 0.0;
    std::vector<double> clique_rho;
    std::vector<double> clique_rho_smooth;
    std::vector<PmOuterRecord> outer;
    std::vector<BcgdTrace> inner_traces;
    PmTermination termination = PmTermination::max_outer_iters;
    bool feasible = false;               // exact rho > 0
    bool returned_initial_guess = false; // stopped before any inner solve
    int best_outer = -1;                 // outer record of the reported iterate, -1 for the initial guess
    double final_eps_infeas = 0.0;
    double wall_seconds = 0.0;
};

// Per-agent initialization from each agent's individual tasks, or zero.
ControlSequence warm_start(const Problem& problem, double lambda, const BcgdConfig& inner);

SolveReport pm_solve(const Problem& problem, const PmConfig& cfg);
SolveReport pm_solve(const Problem& problem, const PmConfig& cfg, const ControlSequence& u0);

// Fills the robustness and cost fields of a report for inputs u.
SolveReport evaluate_solution(const Problem& problem, const ControlSequence& u);

} // namespace mastl
