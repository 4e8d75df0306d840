#include "icubench/neural/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "icubench/neural/heads.hpp"
#include "icubench/rng.hpp"

namespace icubench::nn {

namespace {

struct Coord {
  ParamBlock* block;
  int row;
  int col;
};

bool crosses_kink(const Vec& base, const Vec& plus, const Vec& minus) {
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    if (base[i] == 0.0) return true;
    const bool pos = base[i] > 0.0;
    if ((plus[i] > 0.0) != pos || (minus[i] > 0.0) != pos) return true;
  }
  return false;
}

}  // namespace

GradCheckResult grad_check(Model& model, const SequenceBatch& batch, const Mat& labels, const GradCheckConfig& cfg) {
  const Task task = model.config().task;
  auto& params = model.params();
  params.zero_grad();
  const auto base = loss(model.forward(batch), labels, task);
  const Vec base_relu = model.relu_preactivations();
  model.backward(base.grad);

  // coordinates grouped by block and row group
  std::map<std::string, std::vector<Coord>> all;
  std::map<std::string, std::vector<Coord>> nonzero;
  std::vector<std::string> order;
  for (auto& block : params.blocks()) {
    if (!block.trainable) continue;
    for (int r = 0; r < block.value.rows(); ++r) {
      const auto g = block.group_of(r);
      if (!all.count(g)) order.push_back(g);
      for (int c = 0; c < block.value.cols(); ++c) {
        all[g].push_back({&block, r, c});
        if (block.grad(r, c) != 0.0) nonzero[g].push_back({&block, r, c});
      }
    }
  }

  // each group gets an equal share; shares a small group cannot fill go to
  // the others, so the total reaches cfg.coordinates whenever the model has
  // that many parameters
  auto rng = Rng::substream(cfg.seed, 0);
  std::map<std::string, std::vector<Coord>> pools;
  for (const auto& g : order) {
    // coordinates the batch touches first (selected embedding rows), then the rest
    auto front = nonzero[g];
    rng.shuffle(front);
    std::vector<Coord> rest;
    for (const auto& c : all[g]) {
      if (c.block->grad(c.row, c.col) == 0.0) rest.push_back(c);
    }
    rng.shuffle(rest);
    front.insert(front.end(), rest.begin(), rest.end());
    pools[g] = std::move(front);
  }
  std::vector<std::string> by_size = order;
  std::stable_sort(by_size.begin(), by_size.end(),
                   [&](const auto& a, const auto& b) { return pools[a].size() < pools[b].size(); });
  std::map<std::string, std::size_t> quota;
  std::size_t remaining = static_cast<std::size_t>(std::max(0, cfg.coordinates));
  for (std::size_t i = 0; i < by_size.size(); ++i) {
    const auto& g = by_size[i];
    const std::size_t fair = (remaining + (by_size.size() - i) - 1) / (by_size.size() - i);
    quota[g] = std::min(pools[g].size(), fair);
    remaining -= quota[g];
  }
  std::vector<std::pair<std::string, Coord>> picks;
  for (const auto& g : order) {
    for (std::size_t i = 0; i < quota[g]; ++i) picks.emplace_back(g, pools[g][i]);
  }

  GradCheckResult result;
  for (const auto& [group, c] : picks) {
    double& theta = c.block->value(c.row, c.col);
    const double saved = theta;
    theta = saved + cfg.epsilon;
    const double lp = loss(model.forward(batch), labels, task).value;
    const Vec relu_p = model.relu_preactivations();
    theta = saved - cfg.epsilon;
    const double lm = loss(model.forward(batch), labels, task).value;
    const Vec relu_m = model.relu_preactivations();
    theta = saved;

    CoordinateCheck check;
    check.group = group;
    check.row = c.row;
    check.col = c.col;
    check.analytic = c.block->grad(c.row, c.col);
    check.numeric = (lp - lm) / (2.0 * cfg.epsilon);
    const double denom = std::max({std::abs(check.analytic), std::abs(check.numeric), cfg.denominator_floor});
    check.rel_error = std::abs(check.analytic - check.numeric) / denom;
    if (base_relu.size() > 0 && crosses_kink(base_relu, relu_p, relu_m)) {
      result.kinks.push_back(check);
      continue;
    }
    result.groups.insert(group);
    if (check.rel_error >= result.max_rel_error) {
      result.max_rel_error = check.rel_error;
      result.worst = check;
    }
    result.checked.push_back(std::move(check));
  }
  // leave the model's caches consistent with the restored parameters
  model.forward(batch);
  return result;
}

}  // namespace icubench::nn
