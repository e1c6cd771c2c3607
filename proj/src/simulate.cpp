/*
 * Copyright 2026 The gdecal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gdecal/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace gdecal {

namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;

// Runs fn(i) for i in [0, n) on a small thread pool. Results must be written
// to per-index slots so the outcome does not depend on scheduling.
template <typename Fn>
void ParallelFor(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

Dataset SampleDataset(const SyntheticTask& task, std::size_t n,
                      RandomSource rng) {
  Dataset d;
  d.dim = task.dim;
  d.x.resize(n * static_cast<std::size_t>(task.dim));
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls =
        static_cast<int>(rng.UniformIndex(static_cast<std::size_t>(task.n_classes)));
    const auto comp = rng.UniformIndex(static_cast<std::size_t>(task.components));
    const auto& mean =
        task.means[static_cast<std::size_t>(cls) *
                       static_cast<std::size_t>(task.components) +
                   comp];
    for (int j = 0; j < task.dim; ++j) {
      d.x[i * static_cast<std::size_t>(task.dim) + static_cast<std::size_t>(j)] =
          mean[static_cast<std::size_t>(j)] + task.noise_scale * rng.Normal();
    }
    d.y[i] = cls;
  }
  return d;
}

std::vector<std::string> NumberedIds(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "t" + std::to_string(i);
  return ids;
}

// Dense parameters of a one-hidden-layer ReLU network or a linear softmax
// model (hidden == 0).
struct Network {
  int dim = 0;
  int hidden = 0;
  int classes = 0;
  std::vector<double> w1, b1, w2, b2;

  int in_out() const { return hidden > 0 ? hidden : dim; }
};

Network InitNetwork(int dim, int classes, const LearnerSpec& spec,
                    RandomSource rng) {
  Network net;
  net.dim = dim;
  net.classes = classes;
  net.hidden = spec.model == ModelKind::kOneHidden ? spec.hidden : 0;
  if (net.hidden > 0) {
    const double s1 = std::sqrt(2.0 / dim);
    net.w1.resize(static_cast<std::size_t>(net.hidden * dim));
    for (double& w : net.w1) w = s1 * rng.Normal();
    net.b1.assign(static_cast<std::size_t>(net.hidden), 0.0);
  }
  const int fan_in = net.in_out();
  const double s2 = std::sqrt(1.0 / fan_in);
  net.w2.resize(static_cast<std::size_t>(classes * fan_in));
  for (double& w : net.w2) w = s2 * rng.Normal();
  net.b2.assign(static_cast<std::size_t>(classes), 0.0);
  return net;
}

// Forward pass; fills the hidden activations and the class logits.
void Forward(const Network& net, std::span<const double> x,
             std::vector<double>& act, std::vector<double>& logits) {
  std::span<const double> features = x;
  if (net.hidden > 0) {
    act.assign(static_cast<std::size_t>(net.hidden), 0.0);
    for (int h = 0; h < net.hidden; ++h) {
      double z = net.b1[static_cast<std::size_t>(h)];
      const double* w = net.w1.data() + static_cast<std::size_t>(h * net.dim);
      for (int j = 0; j < net.dim; ++j) z += w[j] * x[static_cast<std::size_t>(j)];
      act[static_cast<std::size_t>(h)] = z > 0.0 ? z : 0.0;
    }
    features = act;
  }
  const int fan_in = net.in_out();
  logits.assign(static_cast<std::size_t>(net.classes), 0.0);
  for (int k = 0; k < net.classes; ++k) {
    double z = net.b2[static_cast<std::size_t>(k)];
    const double* w = net.w2.data() + static_cast<std::size_t>(k * fan_in);
    for (int j = 0; j < fan_in; ++j) z += w[j] * features[static_cast<std::size_t>(j)];
    logits[static_cast<std::size_t>(k)] = z;
  }
}

int ArgMax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void Softmax(std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) {
    z = std::exp(z - top);
    total += z;
  }
  for (double& z : logits) z /= total;
}

std::uint64_t Vary(std::uint64_t base, std::size_t index, std::uint64_t salt) {
  return MixBits(base ^ MixBits(static_cast<std::uint64_t>(index) * 0x9e3779b97f4a7c15ULL + salt));
}

}  // namespace

std::string_view ModeName(StochasticityMode mode) {
  switch (mode) {
    case StochasticityMode::kAllDiff: return "AllDiff";
    case StochasticityMode::kDiffData: return "DiffData";
    case StochasticityMode::kDiffInit: return "DiffInit";
    case StochasticityMode::kDiffOrder: return "DiffOrder";
    case StochasticityMode::kSameData: return "SameData";
  }
  return "Unknown";
}

std::optional<StochasticityMode> ParseMode(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "alldiff") return StochasticityMode::kAllDiff;
  if (lower == "diffdata") return StochasticityMode::kDiffData;
  if (lower == "diffinit") return StochasticityMode::kDiffInit;
  if (lower == "difforder") return StochasticityMode::kDiffOrder;
  if (lower == "samedata") return StochasticityMode::kSameData;
  return std::nullopt;
}

SyntheticTask MakeGaussianTask(int n_classes, int dim, int components,
                               double separation, double noise_scale,
                               std::size_t n_train, std::size_t n_test,
                               std::uint64_t seed) {
  if (n_classes < 2 || dim < 1 || components < 1) {
    throw Error(Errc::kInvalidArgument, "invalid task shape");
  }
  if (n_test < 1) throw Error(Errc::kInvalidArgument, "n_test must be >= 1");
  SyntheticTask task;
  task.n_classes = n_classes;
  task.dim = dim;
  task.components = components;
  task.noise_scale = noise_scale;
  task.n_train = n_train;
  task.n_test = n_test;
  task.data_seed = seed;
  RandomSource rng(seed, 0);
  for (int c = 0; c < n_classes * components; ++c) {
    std::vector<double> mean(static_cast<std::size_t>(dim));
    for (double& m : mean) m = separation * rng.Normal();
    task.means.push_back(std::move(mean));
  }
  return task;
}

TaskData MaterializeTask(const SyntheticTask& task) {
  const RandomSource root(task.data_seed);
  return {SampleDataset(task, task.n_train, root.Derive(kTrainStream)),
          SampleDataset(task, task.n_test, root.Derive(kTestStream))};
}

std::vector<double> BayesPosterior(const SyntheticTask& task,
                                   std::span<const double> x) {
  const auto k = static_cast<std::size_t>(task.n_classes);
  const auto comps = static_cast<std::size_t>(task.components);
  const double inv_two_var = 1.0 / (2.0 * task.noise_scale * task.noise_scale);
  std::vector<double> log_terms(k * comps);
  for (std::size_t i = 0; i < k * comps; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - task.means[i][j];
      sq += d * d;
    }
    log_terms[i] = -sq * inv_two_var;
  }
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  std::vector<double> post(k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < k * comps; ++i) {
    const double v = std::exp(log_terms[i] - top);
    post[i / comps] += v;
    total += v;
  }
  for (double& p : post) p /= total;
  return post;
}

double BayesErrorMonteCarlo(const SyntheticTask& task, std::size_t n_samples,
                            RandomSource& rng) {
  const Dataset d = SampleDataset(task, n_samples, rng.Derive(0));
  ExactSum err;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::vector<double> post = BayesPosterior(task, d.row(i));
    err += 1.0 - post[static_cast<std::size_t>(d.y[i])];
  }
  return err.Get() / static_cast<double>(n_samples);
}

Population BayesReferencePopulation(const SyntheticTask& task,
                                    const TaskData& data) {
  const double w = 1.0 / static_cast<double>(data.test.size());
  std::vector<Atom> atoms;
  atoms.reserve(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    std::vector<double> post = BayesPosterior(task, data.test.row(i));
    atoms.push_back({w, post, post});
  }
  return Population(std::move(atoms));
}

StochasticityConfig MakePairConfig(StochasticityMode mode, RandomSource& rng) {
  const std::uint64_t init0 = rng.NextU64(), init1 = rng.NextU64();
  const std::uint64_t order0 = rng.NextU64(), order1 = rng.NextU64();
  const std::uint64_t data = rng.NextU64();
  StochasticityConfig cfg;
  cfg.mode = mode;
  using P = DataPart;
  switch (mode) {
    case StochasticityMode::kAllDiff:
      cfg.runs = {RunSeeds{init0, order0, data, P::kFirstHalf},
                  RunSeeds{init1, order1, data, P::kSecondHalf}};
      break;
    case StochasticityMode::kDiffData:
      cfg.runs = {RunSeeds{init0, order0, data, P::kFirstHalf},
                  RunSeeds{init0, order0, data, P::kSecondHalf}};
      break;
    case StochasticityMode::kDiffInit:
      cfg.runs = {RunSeeds{init0, order0, data, P::kFull},
                  RunSeeds{init1, order0, data, P::kFull}};
      break;
    case StochasticityMode::kDiffOrder:
      cfg.runs = {RunSeeds{init0, order0, data, P::kFull},
                  RunSeeds{init0, order1, data, P::kFull}};
      break;
    case StochasticityMode::kSameData:
      cfg.runs = {RunSeeds{init0, order0, data, P::kFull},
                  RunSeeds{init1, order1, data, P::kFull}};
      break;
  }
  return cfg;
}

RunSeeds MakeMemberSeeds(StochasticityMode mode, const RunSeeds& shared,
                         std::size_t index) {
  RunSeeds s = shared;
  s.part = DataPart::kFull;
  const bool vary_init = mode != StochasticityMode::kDiffData &&
                         mode != StochasticityMode::kDiffOrder;
  const bool vary_order = mode == StochasticityMode::kAllDiff ||
                          mode == StochasticityMode::kDiffOrder ||
                          mode == StochasticityMode::kSameData;
  const bool vary_data = mode == StochasticityMode::kAllDiff ||
                         mode == StochasticityMode::kDiffData;
  if (vary_init) s.init_seed = Vary(shared.init_seed, index, 11);
  if (vary_order) s.order_seed = Vary(shared.order_seed, index, 13);
  if (vary_data) {
    s.data_seed = Vary(shared.data_seed, index, 17);
    s.part = DataPart::kRandomHalf;
  }
  return s;
}

std::vector<std::size_t> TrainingIndices(std::size_t pool_size,
                                         const RunSeeds& seeds) {
  std::vector<std::size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (seeds.part == DataPart::kFull) return idx;
  RandomSource rng(seeds.data_seed, 3);
  rng.Shuffle(idx);
  const std::size_t half = pool_size / 2;
  std::vector<std::size_t> out;
  if (seeds.part == DataPart::kSecondHalf) {
    out.assign(idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end());
  } else {
    out.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
  }
  std::sort(out.begin(), out.end());
  return out;
}

TrainedRun TrainLearner(const TaskData& data, const LearnerSpec& spec,
                        const RunSeeds& seeds) {
  if (spec.epochs < 0 || spec.batch_size < 1 || !(spec.lr > 0.0)) {
    throw Error(Errc::kInvalidArgument, "invalid learner hyperparameters");
  }
  if (spec.model == ModelKind::kOneHidden && spec.hidden < 1) {
    throw Error(Errc::kInvalidArgument, "hidden width must be >= 1");
  }
  const Dataset& train = data.train_pool;
  int n_classes = 2;
  for (int y : train.y) n_classes = std::max(n_classes, y + 1);
  for (int y : data.test.y) n_classes = std::max(n_classes, y + 1);

  TrainedRun run;
  run.training_set = TrainingIndices(train.size(), seeds);
  if (run.training_set.empty()) {
    throw Error(Errc::kSize, "run has no training points");
  }
  Network net = InitNetwork(train.dim, n_classes, spec,
                            RandomSource(seeds.init_seed, 5));
  Network grad = net;
  const int fan_in = net.in_out();
  std::vector<double> act, probs, delta_hidden;
  std::vector<std::size_t> order = run.training_set;
  const RandomSource order_root(seeds.order_seed, 7);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    RandomSource order_rng = order_root.Derive(static_cast<std::uint64_t>(epoch));
    order_rng.Shuffle(order);
    if (epoch == 0) run.first_epoch_order = order;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(spec.batch_size));
      for (auto* v : {&grad.w1, &grad.b1, &grad.w2, &grad.b2}) {
        std::fill(v->begin(), v->end(), 0.0);
      }
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto x = train.row(i);
        Forward(net, x, act, probs);
        Softmax(probs);
        probs[static_cast<std::size_t>(train.y[i])] -= 1.0;  // dL/dlogits
        const std::span<const double> features =
            net.hidden > 0 ? std::span<const double>(act) : x;
        for (int k = 0; k < n_classes; ++k) {
          const double g = probs[static_cast<std::size_t>(k)];
          grad.b2[static_cast<std::size_t>(k)] += g;
          double* gw = grad.w2.data() + static_cast<std::size_t>(k * fan_in);
          for (int j = 0; j < fan_in; ++j) gw[j] += g * features[static_cast<std::size_t>(j)];
        }
        if (net.hidden > 0) {
          delta_hidden.assign(static_cast<std::size_t>(net.hidden), 0.0);
          for (int k = 0; k < n_classes; ++k) {
            const double g = probs[static_cast<std::size_t>(k)];
            const double* w = net.w2.data() + static_cast<std::size_t>(k * fan_in);
            for (int h = 0; h < net.hidden; ++h) delta_hidden[static_cast<std::size_t>(h)] += g * w[h];
          }
          for (int h = 0; h < net.hidden; ++h) {
            if (act[static_cast<std::size_t>(h)] <= 0.0) continue;
            const double g = delta_hidden[static_cast<std::size_t>(h)];
            grad.b1[static_cast<std::size_t>(h)] += g;
            double* gw = grad.w1.data() + static_cast<std::size_t>(h * net.dim);
            for (int j = 0; j < net.dim; ++j) gw[j] += g * x[static_cast<std::size_t>(j)];
          }
        }
      }
      const double scale = spec.lr / static_cast<double>(end - start);
      auto step = [&](std::vector<double>& w, const std::vector<double>& g,
                      bool decay) {
        for (std::size_t j = 0; j < w.size(); ++j) {
          w[j] -= scale * g[j] + (decay ? spec.lr * spec.weight_decay * w[j] : 0.0);
        }
      };
      step(net.w1, grad.w1, true);
      step(net.b1, grad.b1, false);
      step(net.w2, grad.w2, true);
      step(net.b2, grad.b2, false);
    }
  }
  if (run.first_epoch_order.empty()) run.first_epoch_order = order;

  std::size_t correct = 0;
  for (std::size_t i : run.training_set) {
    Forward(net, train.row(i), act, probs);
    if (ArgMax(probs) == train.y[i]) ++correct;
  }
  run.train_accuracy =
      static_cast<double>(correct) / static_cast<double>(run.training_set.size());
  run.converged = run.train_accuracy >= kInterpolationThreshold;

  run.test_predictions.resize(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    Forward(net, data.test.row(i), act, probs);
    run.test_predictions[i] = ArgMax(probs);
  }
  return run;
}

PairResult TrainPair(const TaskData& data, const LearnerSpec& spec,
                     const StochasticityConfig& cfg) {
  std::array<TrainedRun, 2> runs{TrainLearner(data, spec, cfg.runs[0]),
                                 TrainLearner(data, spec, cfg.runs[1])};
  const std::size_t n = data.test.size();
  int n_classes = 2;
  for (int y : data.test.y) n_classes = std::max(n_classes, y + 1);
  for (const auto& r : runs) {
    for (int c : r.test_predictions) n_classes = std::max(n_classes, c + 1);
  }
  std::vector<int> classes(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    classes[2 * i] = runs[0].test_predictions[i];
    classes[2 * i + 1] = runs[1].test_predictions[i];
  }
  std::vector<std::string> warnings;
  for (std::size_t r = 0; r < 2; ++r) {
    if (!runs[r].converged) {
      warnings.push_back("ConvergenceWarning: run " + std::to_string(r) +
                         " train accuracy " +
                         std::to_string(runs[r].train_accuracy));
    }
  }
  const auto ids = NumberedIds(n);
  return PairResult{PredictionMatrix(ids, 2, std::move(classes), n_classes),
                    LabelVector(ids, data.test.y, n_classes), std::move(runs),
                    std::move(warnings)};
}

std::vector<SweepConfig> DefaultSweepConfigs(std::size_t n_configs,
                                             ModelKind model,
                                             std::uint64_t seed) {
  const std::vector<int> widths = {8, 32, 128};
  const std::vector<double> lrs = {0.02, 0.1, 0.3};
  const std::vector<int> epochs = {2, 8, 30};
  const std::vector<int> batches = {16, 64};
  const std::vector<std::size_t> train_sizes = {200, 800, 3200};
  struct Cell {
    int width;
    double lr;
    int epochs;
    int batch;
    std::size_t n_train;
  };
  std::vector<Cell> grid;
  for (int w : widths) {
    for (double lr : lrs) {
      for (int e : epochs) {
        for (int b : batches) {
          for (std::size_t n : train_sizes) grid.push_back({w, lr, e, b, n});
        }
      }
    }
  }
  RandomSource rng(seed, 11);
  rng.Shuffle(grid);
  n_configs = std::min(n_configs, grid.size());
  std::vector<SweepConfig> out;
  out.reserve(n_configs);
  for (std::size_t i = 0; i < n_configs; ++i) {
    const Cell& c = grid[i];
    SweepConfig cfg;
    cfg.id = "cfg" + std::to_string(i);
    cfg.group = "n_train=" + std::to_string(c.n_train);
    cfg.task = MakeGaussianTask(5, 10, 3, 1.0, 1.0, c.n_train, 2000, seed);
    cfg.spec.model = model;
    cfg.spec.hidden = c.width;
    cfg.spec.lr = c.lr;
    cfg.spec.epochs = c.epochs;
    cfg.spec.batch_size = c.batch;
    out.push_back(std::move(cfg));
  }
  return out;
}

double NormalizedDeviation(double test_err, double disagreement) {
  const double denom = 0.5 * (test_err + disagreement);
  if (denom <= 0.0) return 0.0;
  return std::abs(test_err - disagreement) / denom;
}

SweepResult Sweep(std::span<const SweepConfig> configs,
                  std::span<const StochasticityMode> modes,
                  const SweepOptions& options, const RandomSource& rng) {
  if (configs.empty() || modes.empty()) {
    throw Error(Errc::kSize, "sweep needs configurations and modes");
  }
  if (options.n_pairs < 1) throw Error(Errc::kInvalidArgument, "n_pairs >= 1");
  const std::size_t jobs = configs.size() * modes.size();
  std::vector<TaskData> data(configs.size());
  ParallelFor(configs.size(), options.threads,
              [&](std::size_t c) { data[c] = MaterializeTask(configs[c].task); });

  // Each (config, mode, pair) trains independently on its own stream.
  const std::size_t units = jobs * options.n_pairs;
  std::vector<std::optional<PairResult>> pairs(units);
  ParallelFor(units, options.threads, [&](std::size_t u) {
    const std::size_t job = u / options.n_pairs;
    const std::size_t p = u % options.n_pairs;
    const std::size_t c = job / modes.size();
    const StochasticityMode mode = modes[job % modes.size()];
    RandomSource stream = rng.Derive(c).Derive(static_cast<std::uint64_t>(mode)).Derive(p);
    const StochasticityConfig cfg = MakePairConfig(mode, stream);
    pairs[u].emplace(TrainPair(data[c], configs[c].spec, cfg));
  });

  SweepResult result;
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t c = job / modes.size();
    SweepRow row;
    row.mode = modes[job % modes.size()];
    row.config_id = configs[c].id;
    row.group = configs[c].group;
    for (std::size_t p = 0; p < options.n_pairs; ++p) {
      const PairResult& pr = *pairs[job * options.n_pairs + p];
      row.pair_test_errors.push_back(TestError(pr.predictions, pr.labels, 0));
      row.pair_disagreements.push_back(Disagreement(pr.predictions, 0, 1));
      row.warnings += pr.warnings.size();
    }
    row.test_err = row.pair_test_errors.front();
    row.disagreement = row.pair_disagreements.front();
    ExactSum te, dis;
    for (double v : row.pair_test_errors) te += v;
    for (double v : row.pair_disagreements) dis += v;
    row.mean_test_err = te.Get() / static_cast<double>(options.n_pairs);
    row.mean_disagreement = dis.Get() / static_cast<double>(options.n_pairs);
    const PairResult& first = *pairs[job * options.n_pairs];
    row.bootstrap_std = BootstrapStdOfMean(
        PerPointPairDisagreement(first.predictions),
        std::max<std::size_t>(2, options.bootstrap_resamples),
        rng.Derive(c).Derive(100 + static_cast<std::uint64_t>(row.mode)));
    result.rows.push_back(std::move(row));
  }

  for (StochasticityMode mode : modes) {
    ModeScatter ms;
    ms.mode = mode;
    std::vector<double> xs, ys, axs, ays;
    ExactSum dev1, dev_avg;
    for (const SweepRow& row : result.rows) {
      if (row.mode != mode) continue;
      xs.push_back(row.disagreement);
      ys.push_back(row.test_err);
      axs.push_back(row.mean_disagreement);
      ays.push_back(row.mean_test_err);
      dev1 += NormalizedDeviation(row.test_err, row.disagreement);
      dev_avg += NormalizedDeviation(row.mean_test_err, row.mean_disagreement);
    }
    ms.n = xs.size();
    ms.deviation_single = dev1.Get() / static_cast<double>(ms.n);
    ms.deviation_averaged = dev_avg.Get() / static_cast<double>(ms.n);
    try {
      ms.single_pair = ComputeScatterStats(xs, ys);
      ms.averaged = ComputeScatterStats(axs, ays);
    } catch (const Error& e) {
      if (e.code() != Errc::kDegenerate && e.code() != Errc::kSize) throw;
      ms.flag = e.what();
    }
    result.scatter.push_back(std::move(ms));
  }
  return result;
}

EnsembleSweepResult EnsembleSweep(const SweepConfig& config,
                                  StochasticityMode mode,
                                  const EnsembleOptions& options,
                                  const RandomSource& rng) {
  const std::size_t m = options.members;
  if (m < 2) throw Error(Errc::kSize, "ensemble needs at least 2 members");
  const TaskData data = MaterializeTask(config.task);
  RandomSource seed_rng = rng.Derive(static_cast<std::uint64_t>(mode));
  const RunSeeds shared{seed_rng.NextU64(), seed_rng.NextU64(),
                        seed_rng.NextU64(), DataPart::kFull};
  std::vector<TrainedRun> runs(m);
  ParallelFor(m, options.threads, [&](std::size_t i) {
    runs[i] = TrainLearner(data, config.spec, MakeMemberSeeds(mode, shared, i));
  });

  const std::size_t n = data.test.size();
  int n_classes = 2;
  for (int y : data.test.y) n_classes = std::max(n_classes, y + 1);
  std::vector<int> classes(n * m);
  std::size_t warnings = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!runs[j].converged) ++warnings;
    for (std::size_t i = 0; i < n; ++i) {
      classes[i * m + j] = runs[j].test_predictions[i];
      n_classes = std::max(n_classes, runs[j].test_predictions[i] + 1);
    }
  }
  const auto ids = NumberedIds(n);
  PredictionMatrix preds(ids, m, std::move(classes), n_classes);
  LabelVector labels(ids, data.test.y, n_classes);
  ProbabilityProfile profile = EnsembleFromPredictions(preds);

  std::vector<EnsembleSize> sizes;
  for (std::size_t size : {std::size_t{2}, std::size_t{5}, m}) {
    if (size > m || (!sizes.empty() && sizes.back().members >= size)) continue;
    std::vector<std::size_t> first(size);
    std::iota(first.begin(), first.end(), std::size_t{0});
    const ProbabilityProfile sub =
        EnsembleFromPredictions(preds.SelectModels(first));
    sizes.push_back({size, CaceBinned(sub, labels, options.n_bins)});
  }
  const Population empirical = Population::FromProfile(profile, labels);
  GdeReport report = SummarizeGde(
      preds, labels, std::max<std::size_t>(2, options.bootstrap_resamples),
      rng.Derive(1000));
  const double ece = EceBinned(empirical, options.n_bins);
  const double cace_exact = CaceExact(empirical);
  const double ete = ExpectedTestError(profile, labels);
  const double edr = ExpectedDisagreement(profile);
  CalibrationCurve curve = ClassAggregatedCurve(empirical, options.n_bins);
  return EnsembleSweepResult{std::move(preds),  std::move(labels),
                             std::move(profile), report,
                             std::move(sizes),   ece,
                             cace_exact,         ete,
                             edr,                std::move(curve),
                             warnings};
}

SampledPair SampleHypothesisPair(const Population& pop, std::size_t n_points,
                                 RandomSource& rng) {
  if (n_points < 1) throw Error(Errc::kSize, "need at least one point");
  std::vector<double> weights;
  weights.reserve(pop.size());
  for (const Atom& a : pop.atoms()) weights.push_back(a.weight);
  std::vector<int> classes(2 * n_points);
  std::vector<int> labels(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const Atom& a = pop.atoms()[rng.Categorical(weights)];
    labels[i] = static_cast<int>(rng.Categorical(a.label_dist));
    classes[2 * i] = static_cast<int>(rng.Categorical(a.hhat));
    classes[2 * i + 1] = static_cast<int>(rng.Categorical(a.hhat));
  }
  const auto ids = NumberedIds(n_points);
  return {PredictionMatrix(ids, 2, std::move(classes), pop.n_classes()),
          LabelVector(ids, std::move(labels), pop.n_classes())};
}

SamplerGap CalibratedSamplerGap(const Population& pop,
                                std::size_t draws_per_atom, RandomSource& rng) {
  if (draws_per_atom < 2) {
    throw Error(Errc::kInvalidArgument, "need at least 2 draws per atom");
  }
  ExactSum dis_total, err_total, diff_total, var_total;
  const double n = static_cast<double>(draws_per_atom);
  for (const Atom& a : pop.atoms()) {
    std::size_t dis = 0, err = 0;
    ExactSum d1, d2;
    for (std::size_t t = 0; t < draws_per_atom; ++t) {
      const auto h = rng.Categorical(a.hhat);
      const auto h2 = rng.Categorical(a.hhat);
      const auto y = rng.Categorical(a.label_dist);
      const int d = static_cast<int>(h != h2) - static_cast<int>(h != y);
      dis += h != h2;
      err += h != y;
      d1 += d;
      d2 += d * d;
    }
    const double mean = d1.Get() / n;
    const double var = std::max(0.0, (d2.Get() - n * mean * mean) / (n - 1.0));
    dis_total += a.weight * static_cast<double>(dis) / n;
    err_total += a.weight * static_cast<double>(err) / n;
    diff_total += a.weight * mean;
    var_total += a.weight * a.weight * var / n;
  }
  SamplerGap out;
  out.mean_disagreement = dis_total.Get();
  out.mean_test_error = err_total.Get();
  out.difference = diff_total.Get();
  out.std_error = std::sqrt(var_total.Get());
  out.draws_per_atom = draws_per_atom;
  return out;
}

}  // namespace gdecal
