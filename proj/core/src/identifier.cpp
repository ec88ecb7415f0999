#include "iidwb/identifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace iidwb {

std::optional<NodeId> penalty_step(std::span<const std::pair<NodeId, double>> fids, double tau) {
  std::optional<NodeId> best;
  double best_fid = -std::numeric_limits<double>::infinity();
  for (const auto& [candidate, fid] : fids) {
    if (fid > best_fid || (fid == best_fid && best && candidate < *best)) {
      best = candidate;
      best_fid = fid;
    }
  }
  if (best && best_fid > tau) return best;
  return std::nullopt;
}

std::vector<double> environment_fids(std::span<const EmpiricalSample> scores,
                                     std::span<const std::size_t> env_of) {
  std::vector<double> out;
  out.reserve(env_of.size());
  std::vector<double> rest;
  for (std::size_t env : env_of) {
    rest.clear();
    for (std::size_t k = 0; k < scores.size(); ++k) {
      if (k != env) rest.insert(rest.end(), scores[k].values.begin(), scores[k].values.end());
    }
    out.push_back(frechet_gaussian1d(fit_gaussian(scores[env]), fit_gaussian(rest)));
  }
  return out;
}

double calibrate_threshold(std::span<const EmpiricalSample> scores,
                           std::span<const std::size_t> env_of, double tau_factor,
                           std::size_t permutations, Rng& rng) {
  std::vector<double> pooled;
  for (const EmpiricalSample& s : scores) pooled.insert(pooled.end(), s.values.begin(), s.values.end());
  std::vector<EmpiricalSample> shuffled(scores.begin(), scores.end());
  std::vector<double> maxima;
  maxima.reserve(permutations);
  for (std::size_t p = 0; p < permutations; ++p) {
    std::shuffle(pooled.begin(), pooled.end(), rng);
    std::size_t offset = 0;
    for (EmpiricalSample& s : shuffled) {
      std::copy_n(pooled.begin() + static_cast<std::ptrdiff_t>(offset), s.values.size(), s.values.begin());
      offset += s.values.size();
    }
    const std::vector<double> fids = environment_fids(shuffled, env_of);
    maxima.push_back(*std::max_element(fids.begin(), fids.end()));
  }
  std::sort(maxima.begin(), maxima.end());
  const std::size_t m = maxima.size();
  const double median = m % 2 ? maxima[m / 2] : 0.5 * (maxima[m / 2 - 1] + maxima[m / 2]);
  return tau_factor * median;
}

namespace {

struct Evaluation {
  std::vector<double> fids;
  double tau = 0.0;
  double max_fid = 0.0;
};

class Identifier {
 public:
  Identifier(std::span<const SampleBatch> batches, const TrainConfig& cfg, Rng& rng)
      : cfg_(cfg), rng_(rng) {
    validate(cfg_);
    if (batches.empty()) throw std::invalid_argument("identify_parents: no batches");
    const Eigen::Index cols = batches.front().cols();
    if (cols < 2) throw std::invalid_argument("identify_parents: need at least one candidate");
    num_candidates_ = static_cast<std::size_t>(cols - 1);

    std::set<int> ids;
    env_of_.assign(num_candidates_, batches.size());
    for (std::size_t k = 0; k < batches.size(); ++k) {
      const SampleBatch& b = batches[k];
      if (b.cols() != cols) throw std::invalid_argument("identify_parents: column layout mismatch");
      if (!ids.insert(b.env.id).second)
        throw std::invalid_argument("identify_parents: duplicate environment id " +
                                    std::to_string(b.env.id));
      if (b.env.interventions.size() == 1) {
        const NodeId target = b.env.interventions.front().target;
        if (target == kOutcome || target > num_candidates_)
          throw std::invalid_argument("identify_parents: environment targets a non-candidate");
        if (env_of_[target - 1] != batches.size())
          throw std::invalid_argument("identify_parents: two environments target node " +
                                      std::to_string(target));
        env_of_[target - 1] = k;
      }
      const auto n = static_cast<double>(b.rows());
      const auto holdout = static_cast<Eigen::Index>(std::llround(n * cfg_.holdout_fraction));
      if (holdout < 2 || b.rows() - holdout < 1)
        throw std::invalid_argument("identify_parents: batch of environment " +
                                    std::to_string(b.env.id) + " is too small to split");
      train_.push_back(SampleBatch{b.env, b.data.topRows(b.rows() - holdout)});
      holdout_.push_back(SampleBatch{b.env, b.data.bottomRows(holdout)});
    }
    for (std::size_t s = 0; s < num_candidates_; ++s) {
      if (env_of_[s] == batches.size())
        throw std::invalid_argument("identify_parents: no single-target environment for node " +
                                    std::to_string(s + 1));
    }
  }

  IdentificationResult run() {
    PenaltyWeights w(num_candidates_);
    IdentificationResult result;
    const std::size_t max_penalties = cfg_.rounds ? cfg_.rounds : num_candidates_;
    std::size_t penalties = 0;

    Evaluation current = evaluate(w);
    if (std::isinf(current.tau)) {
      result.fid_trace.push_back(record(RoundPhase::eliminate, w, current, std::nullopt, false));
      return finish(std::move(result), w);
    }

    while (penalties < max_penalties) {
      std::vector<std::pair<NodeId, double>> active;
      for (NodeId j = 1; j <= num_candidates_; ++j)
        if (w.active(j)) active.emplace_back(j, current.fids[j - 1]);
      const std::optional<NodeId> worst = penalty_step(active, current.tau);
      if (!worst) {
        result.fid_trace.push_back(record(RoundPhase::eliminate, w, current, std::nullopt, false));
        break;
      }
      PenaltyWeights trial_mask = w;
      trial_mask.penalize(*worst);
      Evaluation trial = evaluate(trial_mask);
      const bool improves = trial.max_fid < current.max_fid;
      result.fid_trace.push_back(record(RoundPhase::eliminate, w, current, worst, improves));
      if (!improves) break;
      w = trial_mask;
      current = std::move(trial);
      ++penalties;
    }

    for (NodeId j = 1; j <= num_candidates_ && penalties < max_penalties; ++j) {
      if (!w.active(j)) continue;
      PenaltyWeights trial_mask = w;
      trial_mask.penalize(j);
      Evaluation trial = evaluate(trial_mask);
      double increase = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < num_candidates_; ++s)
        increase = std::max(increase, trial.fids[s] - current.fids[s]);
      const bool redundant = increase <= current.tau;
      result.fid_trace.push_back(record(RoundPhase::prune, w, current, j, redundant));
      if (redundant) {
        w = trial_mask;
        current = std::move(trial);
        ++penalties;
      }
    }
    return finish(std::move(result), w);
  }

 private:
  Evaluation evaluate(const PenaltyWeights& w) {
    const Regressor reg = train_regressor(train_, w, cfg_, rng_);
    std::vector<EmpiricalSample> scores;
    scores.reserve(holdout_.size());
    for (const SampleBatch& b : holdout_) scores.push_back(residual_scores(reg, w, b));

    Evaluation e;
    e.fids = environment_fids(scores, env_of_);
    e.max_fid = *std::max_element(e.fids.begin(), e.fids.end());
    e.tau = cfg_.tau_auto ? calibrate_threshold(scores, env_of_, cfg_.tau_factor,
                                                cfg_.calibration_permutations, rng_)
                          : cfg_.penalty_threshold;
    return e;
  }

  static RoundRecord record(RoundPhase phase, const PenaltyWeights& w, const Evaluation& e,
                            std::optional<NodeId> candidate, bool penalized) {
    return RoundRecord{phase, w, e.fids, e.tau, candidate, penalized};
  }

  static IdentificationResult finish(IdentificationResult result, const PenaltyWeights& w) {
    result.final_weights = w;
    result.estimated_set = w.support();
    result.rounds_run = result.fid_trace.size();
    return result;
  }

  TrainConfig cfg_;
  Rng& rng_;
  std::size_t num_candidates_ = 0;
  std::vector<std::size_t> env_of_;
  std::vector<SampleBatch> train_;
  std::vector<SampleBatch> holdout_;
};

}  // namespace

IdentificationResult identify_parents(std::span<const SampleBatch> batches,
                                      const TrainConfig& cfg, Rng& rng) {
  return Identifier(batches, cfg, rng).run();
}

}  // namespace iidwb
