#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amanda/metrics.hpp"
#include "amanda/model.hpp"

namespace amanda {

/// Global L2 norm over every gradient; scales all by max_norm / norm when it
/// exceeds max_norm. Returns the norm before clipping. Non-finite gradients
/// raise NonFiniteError naming the parameter.
double clip_gradients(ModelParams<float>& params, double max_norm);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

/// Bias-corrected Adam over the gradients held in `params`.
void adam_step(ModelParams<float>& params, AdamState& state, double lr);

/// Mean loss on one sample without dropout (sanity checks and tests).
double sample_loss(const Model& model, const SampleInput& in);

/// Accumulates the summed loss gradient of `inputs` into the parameters and
/// returns the summed loss. Dropout is applied when `dropout` is given.
double accumulate_batch(Model& model, const std::vector<SampleInput>& inputs, Dropout* dropout);

/// Predictions for every sample, merged per id by highest joint probability,
/// scored against each id's references.
EvalReport evaluate(const Model& model, const std::vector<Sample>& samples, std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  EvalReport dev;
};

struct TrainOptions {
  std::optional<std::string> checkpoint_dir;  // best-dev checkpoints are written here
  std::size_t threads = 1;                    // evaluation fan-out only
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<bool(const EpochRecord&)> stop_after;  // true ends training after this epoch
};

struct TrainResult {
  Model best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Runs config.epochs epochs of shuffled minibatch training, keeping the
/// parameters with the best dev F1. A non-finite loss or gradient raises
/// NonFiniteError; any checkpoint written before then stays valid.
TrainResult train(Model model, const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                  const TrainOptions& opts = {});

nlohmann::json history_json(const std::vector<EpochRecord>& history, std::size_t best_epoch);

}  // namespace amanda
