#include "stcrf/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "stcrf/errors.hpp"
#include "stcrf/evaluation.hpp"

namespace stcrf {

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.get_int("epochs", tc.epochs);
  tc.batch_size = cfg.get_int("batch_size", tc.batch_size);
  tc.learning_rate = cfg.get_double("learning_rate", tc.learning_rate);
  tc.momentum = cfg.get_double("momentum", tc.momentum);
  tc.lr_decay = cfg.get_double("lr_decay", tc.lr_decay);
  tc.lr_decay_every = cfg.get_int("lr_decay_every", tc.lr_decay_every);
  tc.clip_norm = cfg.get_double("clip_norm", tc.clip_norm);
  tc.seed = static_cast<unsigned>(cfg.get_int("seed", static_cast<int>(tc.seed)));
  tc.loss_weights.w_space = cfg.get_double("w_space", tc.loss_weights.w_space);
  tc.loss_weights.w_time = cfg.get_double("w_time", tc.loss_weights.w_time);
  tc.loss_weights.w_traj = cfg.get_double("w_traj", tc.loss_weights.w_traj);
  tc.loss_weights.use_space_crf = cfg.get_bool("use_space_crf", true);
  tc.loss_weights.use_time_crf = cfg.get_bool("use_time_crf", true);
  tc.model.d_f = cfg.get_int("d_f", tc.model.d_f);
  tc.model.l_obs = cfg.get_int("l_obs", tc.model.l_obs);
  tc.model.l_pred = cfg.get_int("l_pred", tc.model.l_pred);
  tc.model.relative_mode =
      parse_relative_mode(cfg.get_or("relative_mode", relative_mode_name(tc.model.relative_mode)));
  tc.model.edge_kernel = cfg.get_or("edge_kernel", tc.model.edge_kernel);
  tc.model.edge_cap = cfg.get_double("edge_cap", tc.model.edge_cap);
  tc.model.gaussian_sigma = cfg.get_double("gaussian_sigma", tc.model.gaussian_sigma);
  tc.labeler.d_lat = cfg.get_double("d_lat", tc.labeler.d_lat);
  tc.labeler.d_lon = cfg.get_double("d_lon", tc.labeler.d_lon);
  tc.labeler.delta_t = cfg.get_double("delta_t", tc.labeler.delta_t);
  tc.labeler.frame_interval = cfg.get_double("frame_interval", tc.labeler.frame_interval);
  tc.labeler.v_ref = cfg.get_double("v_ref", tc.labeler.v_ref);

  if (tc.epochs <= 0 || tc.batch_size <= 0 || tc.learning_rate <= 0.0) {
    throw Error("train config: epochs, batch_size, learning_rate must be positive");
  }
  if (tc.loss_weights.w_space < 0 || tc.loss_weights.w_time < 0 || tc.loss_weights.w_traj < 0) {
    throw Error("train config: loss weights must be nonnegative");
  }
  return tc;
}

TrainResult train(Model& model, const std::vector<SceneWindow>& dataset,
                  const std::vector<SceneWindow>& validation, const TrainConfig& config,
                  std::ostream* log) {
  if (dataset.empty()) throw EmptyDataset("train: empty dataset");
  const std::vector<SceneWindow>& val = validation.empty() ? dataset : validation;

  std::vector<IntentionLabels> labels;
  labels.reserve(dataset.size());
  for (const SceneWindow& w : dataset) labels.push_back(label_window(w, config.labeler));

  std::mt19937 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double best_val = 1e300;
  double lr = config.learning_rate;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.lr_decay_every > 0 && epoch > 1 && (epoch - 1) % config.lr_decay_every == 0) {
      lr *= config.lr_decay;
    }
    std::shuffle(order.begin(), order.end(), rng);

    LossComponents epoch_loss;
    int steps = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      model.params().zero_grads();
      const std::size_t end = std::min(pos + static_cast<std::size_t>(config.batch_size),
                                       order.size());
      const double inv_batch = 1.0 / static_cast<double>(end - pos);
      LossComponents batch_loss;
      for (std::size_t b = pos; b < end; ++b) {
        LossComponents l = model.loss_and_grads(dataset[order[b]], labels[order[b]],
                                                config.loss_weights);
        batch_loss.space_nll += l.space_nll;
        batch_loss.time_nll += l.time_nll;
        batch_loss.l1 += l.l1;
        batch_loss.total += l.total;
      }
      // global-norm clipping on the batch-averaged gradient
      double clip_scale = inv_batch;
      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, p] : model.params().all()) {
          for (double g : p.grad.raw()) sq += g * inv_batch * g * inv_batch;
        }
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) clip_scale *= config.clip_norm / norm;
      }

      // SGD with momentum
      for (auto& [name, p] : model.params().all()) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
          const double g = p.grad.raw()[i] * clip_scale;
          p.momentum.raw()[i] = config.momentum * p.momentum.raw()[i] - lr * g;
          p.value.raw()[i] += p.momentum.raw()[i];
        }
      }
      epoch_loss.space_nll += batch_loss.space_nll * inv_batch;
      epoch_loss.time_nll += batch_loss.time_nll * inv_batch;
      epoch_loss.l1 += batch_loss.l1 * inv_batch;
      epoch_loss.total += batch_loss.total * inv_batch;
      ++steps;
      pos = end;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss.space_nll = epoch_loss.space_nll / steps;
    rec.train_loss.time_nll = epoch_loss.time_nll / steps;
    rec.train_loss.l1 = epoch_loss.l1 / steps;
    rec.train_loss.total = epoch_loss.total / steps;

    MetricReport report = evaluate(model, val);
    rec.val_ade = report.ade;
    rec.val_fde = report.fde;
    result.history.push_back(rec);

    if (report.ade < best_val) {
      best_val = report.ade;
      result.best_epoch = epoch;
    }
    if (log != nullptr) {
      (*log) << "epoch " << epoch << " total " << rec.train_loss.total << " l1 "
             << rec.train_loss.l1 << " time_nll " << rec.train_loss.time_nll << " space_nll "
             << rec.train_loss.space_nll << " val_ade " << rec.val_ade << " val_fde "
             << rec.val_fde << '\n';
    }
  }
  return result;
}

namespace {

void write_config_block(std::ostream& out, const TrainConfig& c) {
  out << "epochs = " << c.epochs << '\n';
  out << "batch_size = " << c.batch_size << '\n';
  out << "learning_rate = " << c.learning_rate << '\n';
  out << "momentum = " << c.momentum << '\n';
  out << "lr_decay = " << c.lr_decay << '\n';
  out << "lr_decay_every = " << c.lr_decay_every << '\n';
  out << "clip_norm = " << c.clip_norm << '\n';
  out << "seed = " << c.seed << '\n';
  out << "w_space = " << c.loss_weights.w_space << '\n';
  out << "w_time = " << c.loss_weights.w_time << '\n';
  out << "w_traj = " << c.loss_weights.w_traj << '\n';
  out << "use_space_crf = " << (c.loss_weights.use_space_crf ? "true" : "false") << '\n';
  out << "use_time_crf = " << (c.loss_weights.use_time_crf ? "true" : "false") << '\n';
  out << "d_f = " << c.model.d_f << '\n';
  out << "l_obs = " << c.model.l_obs << '\n';
  out << "l_pred = " << c.model.l_pred << '\n';
  out << "relative_mode = " << relative_mode_name(c.model.relative_mode) << '\n';
  out << "edge_kernel = " << c.model.edge_kernel << '\n';
  out << "edge_cap = " << c.model.edge_cap << '\n';
  out << "gaussian_sigma = " << c.model.gaussian_sigma << '\n';
  out << "d_lat = " << c.labeler.d_lat << '\n';
  out << "d_lon = " << c.labeler.d_lon << '\n';
  out << "delta_t = " << c.labeler.delta_t << '\n';
  out << "frame_interval = " << c.labeler.frame_interval << '\n';
  out << "v_ref = " << c.labeler.v_ref << '\n';
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

void save_checkpoint(const Model& model, const TrainConfig& config, int epoch,
                     const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.precision(17);
  out << "stcrf-checkpoint v1\n";
  out << "epoch " << epoch << '\n';
  out << "config-begin\n";
  write_config_block(out, config);
  out << "config-end\n";
  out << "history " << history.size() << '\n';
  for (const EpochRecord& r : history) {
    out << r.epoch << ' ' << hex_double(r.train_loss.total) << ' ' << hex_double(r.train_loss.l1)
        << ' ' << hex_double(r.train_loss.time_nll) << ' ' << hex_double(r.train_loss.space_nll)
        << ' ' << hex_double(r.val_ade) << ' ' << hex_double(r.val_fde) << '\n';
  }
  for (const auto& [name, p] : model.params().all()) {
    out << "param " << name << ' ' << p.value.rank();
    for (int i = 0; i < p.value.rank(); ++i) out << ' ' << p.value.dim(i);
    out << '\n';
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      out << hex_double(p.value.raw()[i]) << (i + 1 == p.value.size() ? '\n' : ' ');
    }
  }
}

namespace {

TrainConfig read_config_block(std::istream& in) {
  std::string line;
  std::ostringstream block;
  bool begun = false;
  while (std::getline(in, line)) {
    if (line == "config-begin") {
      begun = true;
      continue;
    }
    if (line == "config-end") break;
    if (begun) block << line << '\n';
  }
  if (!begun) throw MalformedLine("checkpoint: missing config block");
  return TrainConfig::from_config(KeyValueConfig::parse(block.str(), "checkpoint"));
}

}  // namespace

TrainConfig peek_checkpoint_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "stcrf-checkpoint v1") throw MalformedLine("not a stcrf checkpoint: " + path);
  return read_config_block(in);
}

Checkpoint load_checkpoint(Model& model, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "stcrf-checkpoint v1") throw MalformedLine("not a stcrf checkpoint: " + path);

  Checkpoint ckpt;
  std::string tok;
  in >> tok;
  if (tok != "epoch") throw MalformedLine("checkpoint: expected epoch");
  in >> ckpt.epoch;
  in.ignore();
  ckpt.config = read_config_block(in);

  in >> tok;
  if (tok != "history") throw MalformedLine("checkpoint: expected history");
  std::size_t count = 0;
  in >> count;
  ckpt.history.resize(count);
  for (EpochRecord& r : ckpt.history) {
    std::string a, b, c, d, e, f;
    in >> r.epoch >> a >> b >> c >> d >> e >> f;
    r.train_loss.total = std::strtod(a.c_str(), nullptr);
    r.train_loss.l1 = std::strtod(b.c_str(), nullptr);
    r.train_loss.time_nll = std::strtod(c.c_str(), nullptr);
    r.train_loss.space_nll = std::strtod(d.c_str(), nullptr);
    r.val_ade = std::strtod(e.c_str(), nullptr);
    r.val_fde = std::strtod(f.c_str(), nullptr);
  }

  while (in >> tok) {
    if (tok != "param") throw MalformedLine("checkpoint: expected param, got " + tok);
    std::string name;
    int rank = 0;
    in >> name >> rank;
    std::vector<int> shape(static_cast<std::size_t>(rank));
    for (int& s : shape) in >> s;
    Tensor& value = model.params().value(name);
    if (value.shape() != shape) {
      throw ShapeMismatch("checkpoint: shape mismatch for parameter " + name);
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      std::string v;
      in >> v;
      value.raw()[i] = std::strtod(v.c_str(), nullptr);
    }
  }
  return ckpt;
}

}  // namespace stcrf
