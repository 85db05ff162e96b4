#include "tgopt/mtl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tgopt/error.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

void MtlArch::validate() const {
  if (shared_widths.empty()) throw Error(ErrorCode::InvalidSpec, "MTL trunk needs >= 1 layer");
  for (const auto* ws : {&pre_widths, &shared_widths, &post_widths}) {
    for (int w : *ws) {
      if (w < 1) throw Error(ErrorCode::InvalidSpec, "layer widths must be >= 1");
    }
  }
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "learning rate must be > 0");
}

std::size_t MtlModel::task_offset(std::size_t t) const {
  return n_trunk_layers() + t * layers_per_task();
}

namespace {

using Span = std::span<const DenseLayer>;

struct StackViews {
  Span pre;
  Span trunk;
  Span post;
  Span head;
};

StackViews views(const MtlModel& m, const std::vector<DenseLayer>& layers, std::size_t t) {
  const std::size_t off = m.task_offset(t);
  const std::size_t npre = m.arch.pre_widths.size();
  const std::size_t npost = m.arch.post_widths.size();
  Span all(layers);
  return {all.subspan(off, npre), all.subspan(0, m.n_trunk_layers()), all.subspan(off + npre, npost),
          all.subspan(off + npre + npost, 1)};
}

struct Acts {
  std::vector<Activation> pre, trunk, post, head;

  explicit Acts(const MtlArch& a)
      : pre(a.pre_widths.size(), a.hidden_activation),
        trunk(a.shared_widths.size(), a.hidden_activation),
        post(a.post_widths.size(), a.hidden_activation),
        head(1, a.output_activation) {}
};

struct TaskPass {
  ForwardTape pre, trunk, post, head;
  Eigen::MatrixXd trunk_input;
  Eigen::MatrixXd trunk_output;
};

Eigen::VectorXd forward_task(const StackViews& v, const Acts& acts, const Eigen::MatrixXd& x,
                             TaskPass* pass) {
  Eigen::MatrixXd h = forward_layers(v.pre, acts.pre, x, pass ? &pass->pre : nullptr);
  if (pass) pass->trunk_input = h;
  h = forward_layers(v.trunk, acts.trunk, h, pass ? &pass->trunk : nullptr);
  if (pass) pass->trunk_output = h;
  h = forward_layers(v.post, acts.post, h, pass ? &pass->post : nullptr);
  return forward_layers(v.head, acts.head, h, pass ? &pass->head : nullptr).col(0);
}

// Continues a forward pass from the trunk input using an alternative trunk.
Eigen::VectorXd forward_from_trunk(const StackViews& v, Span trunk, const Acts& acts,
                                   const Eigen::MatrixXd& trunk_input) {
  Eigen::MatrixXd h = forward_layers(trunk, acts.trunk, trunk_input);
  h = forward_layers(v.post, acts.post, h);
  return forward_layers(v.head, acts.head, h).col(0);
}

void backward_task(const StackViews& v, const Acts& acts, const TaskPass& pass,
                   const Eigen::VectorXd& dpred, std::span<DenseLayer> task_grads,
                   std::span<DenseLayer> trunk_grads, std::size_t npre, std::size_t npost) {
  Eigen::MatrixXd up = backward_layers(v.head, acts.head, pass.head, dpred,
                                       task_grads.subspan(npre + npost, 1));
  up = backward_layers(v.post, acts.post, pass.post, up, task_grads.subspan(npre, npost));
  up = backward_layers(v.trunk, acts.trunk, pass.trunk, up, trunk_grads);
  backward_layers(v.pre, acts.pre, pass.pre, up, task_grads.subspan(0, npre));
}

Params init_model_params(const MtlArch& arch, int input_dim, std::size_t n_tasks,
                         std::uint64_t seed) {
  std::vector<std::pair<int, int>> shapes;
  const int trunk_in = arch.pre_widths.empty() ? input_dim : arch.pre_widths.back();
  int prev = trunk_in;
  for (int w : arch.shared_widths) {
    shapes.emplace_back(prev, w);
    prev = w;
  }
  const int trunk_out = prev;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    prev = input_dim;
    for (int w : arch.pre_widths) {
      shapes.emplace_back(prev, w);
      prev = w;
    }
    prev = trunk_out;
    for (int w : arch.post_widths) {
      shapes.emplace_back(prev, w);
      prev = w;
    }
    shapes.emplace_back(prev, 1);
  }
  return init_layers(shapes, seed);
}

struct Canonical {
  std::vector<const TaskSplit*> tasks;
  std::vector<std::string> ids;
};

Canonical canonical_order(std::span<const TaskSplit> tasks) {
  Canonical c;
  for (const auto& t : tasks) c.tasks.push_back(&t);
  std::sort(c.tasks.begin(), c.tasks.end(),
            [](const TaskSplit* a, const TaskSplit* b) { return a->id() < b->id(); });
  for (const auto* t : c.tasks) c.ids.push_back(t->id());
  for (std::size_t i = 1; i < c.ids.size(); ++i) {
    if (c.ids[i] == c.ids[i - 1]) {
      throw Error(ErrorCode::InvalidSpec, "task '" + c.ids[i] + "' appears twice in a group");
    }
  }
  return c;
}

}  // namespace

Eigen::VectorXd MtlModel::predict(std::size_t task, const Eigen::MatrixXd& x) const {
  const Acts acts(arch);
  return forward_task(views(*this, params.layers, task), acts, x, nullptr);
}

std::map<std::string, Eigen::VectorXd> extract_task_vectors(const MtlModel& model) {
  std::map<std::string, Eigen::VectorXd> out;
  for (std::size_t t = 0; t < model.task_ids.size(); ++t) {
    const auto& head = model.params.layers[model.task_offset(t) + model.layers_per_task() - 1];
    Eigen::VectorXd v(head.weights.size() + head.bias.size());
    // Head weights are 1 x in, so this is the weight row followed by the bias.
    v.head(head.weights.size()) = head.weights.row(0).transpose();
    v.tail(head.bias.size()) = head.bias;
    out.emplace(model.task_ids[t], std::move(v));
  }
  return out;
}

MtlTraining train_mtl_model(std::span<const TaskSplit> tasks, const MtlArch& arch,
                            const TrainConfig& config, const MtlOptions& options) {
  arch.validate();
  config.validate();
  if (tasks.size() < 2) {
    throw Error(ErrorCode::GroupTooSmall, "MTL needs >= 2 tasks, got " + std::to_string(tasks.size()));
  }
  if (options.record_affinity && options.affinity_every < 1) {
    throw Error(ErrorCode::InvalidSpec, "affinity_every must be >= 1");
  }
  const Canonical canon = canonical_order(tasks);
  const std::size_t n_tasks = canon.tasks.size();
  const int dim = static_cast<int>(canon.tasks.front()->train.dim());

  std::string joined;
  for (const auto& id : canon.ids) joined += id + '\x1f';
  const std::uint64_t seed = derive_seed(config.seed, "mtl:" + joined);

  std::size_t rows = 0;
  for (const auto* t : canon.tasks) {
    if (static_cast<int>(t->train.dim()) != dim) {
      throw Error(ErrorCode::ShapeMismatch, "tasks in a group must share feature dimension");
    }
    rows = std::max(rows, t->train.n_samples());
  }
  std::vector<Task> train_rows;
  for (const auto* t : canon.tasks) train_rows.push_back(repeat_rows(t->train, rows));

  MtlTraining out;
  MtlModel& model = out.model;
  model.arch = arch;
  model.input_dim = dim;
  model.task_ids = canon.ids;
  model.params = init_model_params(arch, dim, n_tasks, derive_seed(seed, "init"));

  const Acts acts(arch);
  const std::size_t npre = arch.pre_widths.size();
  const std::size_t npost = arch.post_widths.size();
  const std::size_t per_task = model.layers_per_task();
  const std::size_t n_trunk = model.n_trunk_layers();

  std::vector<double> fractions = config.curve_checkpoints;
  if (fractions.empty() || std::abs(fractions.back() - 1.0) > 1e-12) fractions.push_back(1.0);
  const auto batch = static_cast<std::size_t>(config.effective_batch_size(rows));
  const long steps_per_epoch = static_cast<long>((rows + batch - 1) / batch);
  const long total_steps = steps_per_epoch * config.epochs;
  const auto ck_steps = checkpoint_steps(fractions, total_steps);
  const MetricKind loss_metric = metric_for(config.loss_kind);

  const auto split_loss = [&](auto member) {
    double total = 0.0;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      const Task& part = canon.tasks[t]->*member;
      if (part.n_samples() == 0) continue;
      total += metric(loss_metric, model.predict(t, part.features), part.targets);
    }
    return total;
  };

  Rng rng(derive_seed(seed, "batches"));
  std::vector<std::vector<std::size_t>> order(n_tasks, std::vector<std::size_t>(rows));
  for (auto& o : order) std::iota(o.begin(), o.end(), std::size_t{0});

  AdamState adam = AdamState::for_params(model.params);
  Params g = model.params.zeros_like();
  Params trunk_scratch;
  trunk_scratch.layers.assign(g.layers.begin(), g.layers.begin() + static_cast<std::ptrdiff_t>(n_trunk));
  std::vector<Params> trunk_grad_by_task;
  std::vector<TaskPass> passes(n_tasks);
  std::vector<Eigen::VectorXd> batch_y(n_tasks);
  std::vector<double> batch_loss(n_tasks);

  Eigen::MatrixXd z_sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_tasks),
                                                static_cast<Eigen::Index>(n_tasks));
  long z_records = 0;

  std::vector<Eigen::Index> idx;
  std::size_t next_ck = 0;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto& o : order) rng.shuffle(std::span<std::size_t>(o));
    for (std::size_t start = 0; start < rows; start += batch) {
      const std::size_t end = std::min(rows, start + batch);
      const bool record =
          options.record_affinity && ((step + 1) % options.affinity_every == 0);
      for (auto& l : g.layers) {
        l.weights.setZero();
        l.bias.setZero();
      }
      if (record) trunk_grad_by_task.assign(n_tasks, Params{});

      for (std::size_t t = 0; t < n_tasks; ++t) {
        idx.assign(order[t].begin() + static_cast<std::ptrdiff_t>(start),
                   order[t].begin() + static_cast<std::ptrdiff_t>(end));
        const Eigen::MatrixXd xb = train_rows[t].features(idx, Eigen::all);
        batch_y[t] = train_rows[t].targets(idx);
        const auto v = views(model, model.params.layers, t);
        const Eigen::VectorXd pred = forward_task(v, acts, xb, &passes[t]);
        batch_loss[t] = loss(config.loss_kind, pred, batch_y[t]);
        const Eigen::VectorXd dpred = loss_gradient(config.loss_kind, pred, batch_y[t]);

        for (auto& l : trunk_scratch.layers) {
          l.weights.setZero();
          l.bias.setZero();
        }
        std::span<DenseLayer> task_grads(g.layers.data() + model.task_offset(t), per_task);
        backward_task(v, acts, passes[t], dpred, task_grads, trunk_scratch.layers, npre, npost);
        for (std::size_t l = 0; l < n_trunk; ++l) {
          g.layers[l].weights += trunk_scratch.layers[l].weights;
          g.layers[l].bias += trunk_scratch.layers[l].bias;
        }
        if (record) trunk_grad_by_task[t] = trunk_scratch;
      }

      if (record) {
        // One plain SGD lookahead on the shared trunk per source task.
        for (std::size_t i = 0; i < n_tasks; ++i) {
          std::vector<DenseLayer> trunk(model.params.layers.begin(),
                                        model.params.layers.begin() + static_cast<std::ptrdiff_t>(n_trunk));
          for (std::size_t l = 0; l < n_trunk; ++l) {
            trunk[l].weights -= arch.learning_rate * trunk_grad_by_task[i].layers[l].weights;
            trunk[l].bias -= arch.learning_rate * trunk_grad_by_task[i].layers[l].bias;
          }
          for (std::size_t j = 0; j < n_tasks; ++j) {
            const auto v = views(model, model.params.layers, j);
            const Eigen::VectorXd pred = forward_from_trunk(v, trunk, acts, passes[j].trunk_input);
            const double after = loss(config.loss_kind, pred, batch_y[j]);
            const double before = std::max(batch_loss[j], 1e-12);
            z_sum(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
                1.0 - after / before;
          }
        }
        ++z_records;
      }

      adam_step(model.params, g, adam, arch.learning_rate);
      ++step;
      while (next_ck < ck_steps.size() && ck_steps[next_ck] == step) {
        const double l = split_loss(&TaskSplit::val);
        if (!std::isfinite(l) || !model.params.all_finite()) {
          throw Error(ErrorCode::NumericalDivergence,
                      "MTL validation loss became non-finite at step " + std::to_string(step));
        }
        out.result.curve.points.push_back({fractions[next_ck], l});
        ++next_ck;
      }
    }
  }

  MtlResult& r = out.result;
  r.task_ids = canon.ids;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const Task& test = canon.tasks[t]->test;
    const Eigen::VectorXd pred = model.predict(t, test.features);
    const double l = metric(loss_metric, pred, test.targets);
    r.per_task_loss[canon.ids[t]] = l;
    r.total_loss += l;
    if (test.kind == TaskKind::Classification) {
      r.per_task_error_rate[canon.ids[t]] = metric(MetricKind::ErrorRate, pred, test.targets);
      try {
        r.per_task_auc[canon.ids[t]] = metric(MetricKind::AUC, pred, test.targets);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateLabels) throw;
      }
    }
  }
  if (!std::isfinite(r.total_loss)) {
    throw Error(ErrorCode::NumericalDivergence, "MTL test loss is non-finite");
  }
  r.task_vectors = extract_task_vectors(model);
  if (options.record_affinity && z_records > 0) r.z_matrix = z_sum / static_cast<double>(z_records);
  return out;
}

MtlResult train_mtl(std::span<const TaskSplit> tasks, const MtlArch& arch,
                    const TrainConfig& config, const MtlOptions& options) {
  return train_mtl_model(tasks, arch, config, options).result;
}

Eigen::MatrixXd inter_task_affinity(std::span<const TaskSplit> tasks, const MtlArch& arch,
                                    const TrainConfig& config, int record_every) {
  MtlOptions opts;
  opts.record_affinity = true;
  opts.affinity_every = record_every;
  auto r = train_mtl(tasks, arch, config, opts);
  if (!r.z_matrix) {
    throw Error(ErrorCode::InvalidSpec, "training too short to record inter-task affinity");
  }
  return *r.z_matrix;
}

double relative_mtl_gain(double stl_sum, double mtl_total) {
  if (!(stl_sum > 0.0)) throw Error(ErrorCode::ZeroStlSum, "sum of STL losses must be > 0");
  return (stl_sum - mtl_total) / stl_sum;
}

double relative_mtl_gain(std::span<const double> stl_losses, double mtl_total) {
  return relative_mtl_gain(std::accumulate(stl_losses.begin(), stl_losses.end(), 0.0), mtl_total);
}

}  // namespace tgopt
