#pragma once

#include "safempc/cost_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace safempc {

struct MppiParams {
  int num_samples = 1024;
  std::vector<double> noise_std{0.5};  // one entry per control channel
  double temperature = 1.0;            // beta; weights are exp(-(C - Cmin) / beta)
  int horizon = 20;
  std::uint64_t seed = 0;
  bool parallel = true;  // evaluate sample rollouts with the OpenMP kernel

  void validate(int control_dim) const;
};

// Normalised exponential weights with the min-cost shift. Non-finite costs get
// weight 0; requires at least one finite cost.
std::vector<double> softmax_weights(std::span<const double> costs, double beta);

// Sample rollout costs. `samples` holds one flattened control_dim x horizon
// sequence per column. Non-finite rollouts score +inf.
void evaluate_rollout_costs_serial(const StateVec& x0, const Eigen::MatrixXd& samples,
                                   const HorizonProblem& problem, std::span<double> costs);
void evaluate_rollout_costs_parallel(const StateVec& x0, const Eigen::MatrixXd& samples,
                                     const HorizonProblem& problem, std::span<double> costs);

struct MppiResult {
  ControlVec u_nominal;
  ControlSequence sequence;
  double solve_time = 0.0;
};

// One MPPI update around `nominal`, deterministic in params.seed.
MppiResult mppi_plan(const StateVec& x_t, const ControlSequence& nominal, const MppiParams& params,
                     const HorizonProblem& problem);

// Receding-horizon wrapper: shifts its own output as the next nominal and
// derives a fresh seed per call from params.seed.
class MppiPlanner {
 public:
  MppiPlanner(HorizonProblem problem, MppiParams params);

  MppiResult plan(const StateVec& x_t);

  ControlSequence nominal() const;

 private:
  HorizonProblem problem_;
  MppiParams params_;
  ControlSequence previous_;
  std::uint64_t calls_ = 0;
};

}  // namespace safempc
