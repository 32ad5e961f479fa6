#include "gramsel/greedy.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

#include "gramsel/errors.h"

namespace gramsel {

namespace {

// Running state shared by the greedy variants: the chosen set and its Gramian, summed in
// selection order so every variant evaluates bit-identical matrices.
class SelectionState {
 public:
  explicit SelectionState(const SelectionProblem& p)
      : problem_(p), cache_(*p.cache), w_(cache_.base().matrix()), chosen_(cache_.size(), false) {
    current_ = eval(w_);
  }

  Evaluation eval(const Eigen::MatrixXd& w) {
    ++evaluations_;
    return evaluate(problem_.metric, w, problem_.policy);
  }

  Evaluation eval_with(int a, const Metric& metric) {
    Eigen::MatrixXd w = w_;
    cache_.add_candidate(w, a);
    ++evaluations_;
    return evaluate(metric, w, problem_.policy);
  }
  Evaluation eval_with(int a) { return eval_with(a, problem_.metric); }

  void accept(int a, const Evaluation& after, int stage) {
    const double gain = marginal_gain(current_.value, after.value);
    cache_.add_candidate(w_, a);
    chosen_[a] = true;
    order_.push_back(a);
    trace_.push_back({cache_.system().candidates()[a].id, a, gain, after.value, after.rank, stage});
    current_ = after;
  }

  bool chosen(int a) const { return chosen_[a]; }
  int size() const { return static_cast<int>(order_.size()); }
  int n() const { return cache_.n(); }
  int pool() const { return cache_.size(); }
  const Evaluation& current() const { return current_; }
  const Eigen::MatrixXd& gramian() const { return w_; }

  SelectionResult finish() {
    SelectionResult r;
    r.indices = order_;
    for (int a : order_) r.selected.push_back(cache_.system().candidates()[a].id);
    r.value = current_.value;
    r.rank = current_.rank;
    r.trace = trace_;
    r.theoretical_ratio = greedy_bound(problem_.k);
    r.controllable = current_.rank == cache_.n() && current_.value.is_finite();
    r.evaluations = evaluations_;
    return r;
  }

 private:
  const SelectionProblem& problem_;
  const GramianCache& cache_;
  Eigen::MatrixXd w_;
  std::vector<bool> chosen_;
  std::vector<int> order_;
  std::vector<IterationRecord> trace_;
  Evaluation current_{};
  long evaluations_ = 0;
};

struct Candidate {
  int index = -1;
  double gain = 0.0;
  Evaluation eval{};
};

// One exhaustive greedy step on the target metric; ties go to the lowest index.
Candidate best_full_pass(SelectionState& state) {
  Candidate best;
  for (int a = 0; a < state.pool(); ++a) {
    if (state.chosen(a)) continue;
    const Evaluation e = state.eval_with(a);
    const double g = marginal_gain(state.current().value, e.value);
    if (best.index < 0 || g > best.gain) best = {a, g, e};
  }
  return best;
}

void run_plain(SelectionState& state, int budget) {
  while (state.size() < budget) {
    const Candidate best = best_full_pass(state);
    state.accept(best.index, best.eval, 2);
  }
}

Metric secondary_metric(MetricKind target) {
  return Metric::of(target == MetricKind::kTraceInverse ? MetricKind::kTracePinv : MetricKind::kLogProdNonzero);
}

// Rank-first phase; stops when the target becomes finite or the budget is spent.
void run_rank_stage(SelectionState& state, const SelectionProblem& problem) {
  const Metric secondary = secondary_metric(problem.metric.kind());
  while (state.size() < problem.k && state.current().value.is_neg_infinity()) {
    int best = -1;
    int best_rank = -1;
    double best_score = 0.0;
    for (int a = 0; a < state.pool(); ++a) {
      if (state.chosen(a)) continue;
      // rank gain first, then secondary score of S + a; equal pairs keep the lower index
      const Evaluation e = state.eval_with(a, secondary);
      const double score = e.value.value();
      if (best < 0 || e.rank > best_rank || (e.rank == best_rank && score > best_score)) {
        best = a;
        best_rank = e.rank;
        best_score = score;
      }
    }
    state.accept(best, state.eval_with(best), 1);
  }
}

bool lazy_regime(MetricKind kind, const Evaluation& current, int n) {
  switch (kind) {
    case MetricKind::kTrace:
    case MetricKind::kRank:
      return true;
    case MetricKind::kTracePinv:
    case MetricKind::kLogProdNonzero:
      return current.rank == n;
    case MetricKind::kLambdaMin:
      return false;
    default:
      return current.value.is_finite();
  }
}

void run_lazy(SelectionState& state, const SelectionProblem& problem) {
  struct Entry {
    double gain;
    int index;
    int stamp;
    Evaluation eval;
  };
  // max-heap on gain, then on lower index
  auto lower = [](const Entry& x, const Entry& y) {
    return x.gain < y.gain || (x.gain == y.gain && x.index > y.index);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower)> heap(lower);
  bool bounds_usable = false;

  while (state.size() < problem.k) {
    const int iter = state.size();
    if (!lazy_regime(problem.metric.kind(), state.current(), state.n())) {
      bounds_usable = false;
      const Candidate best = best_full_pass(state);
      state.accept(best.index, best.eval, 2);
      continue;
    }
    if (!bounds_usable) {
      heap = decltype(heap)(lower);
      for (int a = 0; a < state.pool(); ++a) {
        if (state.chosen(a)) continue;
        const Evaluation e = state.eval_with(a);
        heap.push({marginal_gain(state.current().value, e.value), a, iter, e});
      }
      bounds_usable = true;
    }
    for (;;) {
      Entry top = heap.top();
      heap.pop();
      if (state.chosen(top.index)) continue;
      if (top.stamp == iter) {
        state.accept(top.index, top.eval, 2);
        break;
      }
      const Evaluation e = state.eval_with(top.index);
      heap.push({marginal_gain(state.current().value, e.value), top.index, iter, e});
    }
  }
}

void attach_certificate(SelectionResult& result, const SelectionProblem& problem) {
  try {
    result.certified_upper_bound = certified_gap(result, problem);
  } catch (const Error&) {
    result.certified_upper_bound.reset();
  }
}

}  // namespace

void SelectionProblem::validate() const {
  if (cache == nullptr) throw ValidationError("selection problem has no Gramian cache");
  if (k < 1 || k > cache->size()) {
    throw ValidationError("k must lie in [1, " + std::to_string(cache->size()) + "], got " + std::to_string(k));
  }
  policy.validate();
}

double greedy_bound(int k) {
  if (k < 1) throw ValidationError("greedy_bound: k must be >= 1");
  return 1.0 - std::pow(static_cast<double>(k - 1) / k, k);
}

SelectionResult two_stage_greedy(const SelectionProblem& problem) {
  problem.validate();
  if (!is_strict(problem.metric.kind())) {
    throw ValidationError("two-stage greedy needs trace-inv, logdet, nthroot-logdet or weighted-logdet");
  }
  SelectionState state(problem);
  run_rank_stage(state, problem);
  run_plain(state, problem.k);
  SelectionResult r = state.finish();
  attach_certificate(r, problem);
  return r;
}

SelectionResult greedy_select(const SelectionProblem& problem) {
  if (problem.two_stage) return two_stage_greedy(problem);
  problem.validate();
  SelectionState state(problem);
  run_plain(state, problem.k);
  SelectionResult r = state.finish();
  attach_certificate(r, problem);
  return r;
}

SelectionResult lazy_greedy(const SelectionProblem& problem) {
  problem.validate();
  if (!is_submodular(problem.metric.kind())) {
    throw ValidationError("lazy greedy requires a submodular metric; " + std::string(problem.metric.name()) +
                          " is not");
  }
  if (problem.two_stage && !is_strict(problem.metric.kind())) {
    throw ValidationError("two-stage greedy needs trace-inv, logdet, nthroot-logdet or weighted-logdet");
  }
  SelectionState state(problem);
  if (problem.two_stage) run_rank_stage(state, problem);
  run_lazy(state, problem);
  SelectionResult r = state.finish();
  attach_certificate(r, problem);
  return r;
}

double certified_gap(const SelectionResult& result, const SelectionProblem& problem) {
  problem.validate();
  const MetricKind kind = problem.metric.kind();
  if (!is_submodular(kind)) {
    throw ValidationError("no certificate: " + std::string(problem.metric.name()) + " is not submodular");
  }
  const GramianCache& cache = *problem.cache;
  const Eigen::MatrixXd w = cache.gramian_of(result.indices).matrix();
  const Evaluation at = evaluate(problem.metric, w, problem.policy);
  if (at.value.is_neg_infinity()) throw NumericalError("no certificate: greedy value is -inf");
  if ((kind == MetricKind::kTracePinv || kind == MetricKind::kLogProdNonzero) && at.rank < cache.n()) {
    throw ValidationError("no certificate: " + std::string(problem.metric.name()) +
                          " is only submodular at full rank");
  }
  std::vector<bool> in(cache.size(), false);
  for (int a : result.indices) in[a] = true;
  std::vector<double> gains;
  for (int a = 0; a < cache.size(); ++a) {
    if (in[a]) continue;
    Eigen::MatrixXd wa = w;
    cache.add_candidate(wa, a);
    const double g = marginal_gain(at.value, evaluate(problem.metric, wa, problem.policy).value);
    if (!std::isfinite(g)) throw NumericalError("no certificate: infinite marginal gain");
    gains.push_back(std::max(g, 0.0));
  }
  std::sort(gains.begin(), gains.end(), std::greater<>());
  double bound = at.value.value();
  for (std::size_t i = 0; i < gains.size() && i < static_cast<std::size_t>(problem.k); ++i) bound += gains[i];
  return bound;
}

}  // namespace gramsel
