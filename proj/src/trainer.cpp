#include "fairad/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fairad/report.hpp"
#include "fairad/rng.hpp"

namespace fairad {

using nlohmann::json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::FairAD: return "fairad";
    case Variant::FairAD_R: return "fairad-r";
    case Variant::FairAD_N: return "fairad-n";
    case Variant::FairAD_D: return "fairad-d";
    case Variant::FairAD_C: return "fairad-c";
    case Variant::PlainAE: return "plain-ae";
  }
  throw LookupError("unknown variant enum value");
}

Variant variant_from_name(const std::string& name) {
  if (name == "fairad") return Variant::FairAD;
  if (name == "fairad-r") return Variant::FairAD_R;
  if (name == "fairad-n") return Variant::FairAD_N;
  if (name == "fairad-d") return Variant::FairAD_D;
  if (name == "fairad-c") return Variant::FairAD_C;
  if (name == "plain-ae") return Variant::PlainAE;
  throw LookupError("unknown variant: " + name);
}

void ExperimentConfig::validate() const {
  const bool has_csv = dataset.csv_path.has_value();
  const bool has_synth = dataset.synthetic.has_value();
  if (has_csv == has_synth) {
    throw ConfigError("config: exactly one of csv path or synthetic spec required");
  }
  if (has_csv) {
    if (dataset.schema.group_column.empty() || dataset.schema.label_column.empty()) {
      throw ConfigError("config: csv schema needs group and label column names");
    }
  } else {
    dataset.synthetic->validate();
  }
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (alpha < 0.0) throw ConfigError("config: alpha must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("config: learning rate must be > 0");
  if (seeds.empty()) throw ConfigError("config: at least one seed required");
  if (augment_noise_scale < 0.0) throw ConfigError("config: noise scale must be >= 0");
  if (ratio && (ratio->first == 0 || ratio->second == 0)) {
    throw ConfigError("config: ratio parts must be positive");
  }
}

namespace {

struct VariantPlan {
  bool rebalanced = true;       // epsilon-weighted reconstruction
  bool estimator_eps = true;    // epsilon from the estimator (else proportion/none)
  bool use_fair = false;
  bool use_unif = false;
  bool use_simclr = false;
};

VariantPlan plan_for(Variant v) {
  switch (v) {
    case Variant::FairAD: return {true, true, true, true, false};
    case Variant::FairAD_R: return {false, false, true, true, false};
    case Variant::FairAD_N: return {true, true, false, true, false};
    case Variant::FairAD_D: return {true, true, true, false, false};
    case Variant::FairAD_C: return {true, true, false, false, true};
    case Variant::PlainAE: return {true, false, false, false, false};
  }
  throw LookupError("unknown variant enum value");
}

std::vector<double> column_stddev(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0), var(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - mean[j];
      var[j] += d * d;
    }
  }
  std::vector<double> out(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    out[j] = std::sqrt(var[j] / static_cast<double>(x.rows()));
  }
  return out;
}

std::vector<std::size_t> subsample(const std::vector<std::size_t>& idx,
                                   std::size_t limit, Rng& rng) {
  if (idx.size() <= limit) return idx;
  std::vector<std::size_t> copy = idx;
  rng.shuffle(copy);
  copy.resize(limit);
  std::sort(copy.begin(), copy.end());
  return copy;
}

// Scatters group-local gradient rows back into the full-batch matrix.
void scatter_rows(Matrix& into, const std::vector<std::size_t>& idx,
                  const Matrix& local, double scale) {
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto dst = into.row(idx[r]);
    auto src = local.row(r);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

}  // namespace

TrainResult train_variant(const GroupedDataset::TrainingView& view,
                          const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t total = view.size();
  const std::size_t dim = view.dim();
  std::vector<std::size_t> idx_p, idx_u;
  for (std::size_t i = 0; i < total; ++i) {
    (view.groups[i] == Group::Protected ? idx_p : idx_u).push_back(i);
  }
  const std::size_t n = idx_p.size();
  const std::size_t m = idx_u.size();
  if (n == 0 || m == 0) {
    throw DegenerateDataError("train: both groups must be non-empty");
  }

  const VariantPlan plan = plan_for(cfg.variant);
  const bool contrastive_on =
      cfg.alpha > 0.0 && (plan.use_fair || plan.use_unif || plan.use_simclr);
  const double proportion_eps =
      static_cast<double>(n) / static_cast<double>(n + m);

  const std::vector<std::size_t> widths =
      cfg.hidden_widths.empty() ? default_hidden_widths(dim) : cfg.hidden_widths;
  AutoencoderModel model =
      make_autoencoder(dim, widths, derive_seed(seed, 101), cfg.hidden_activation);
  OptimizerState opt = cfg.optimizer == OptMethod::SGD
                           ? OptimizerState::sgd(cfg.learning_rate)
                           : OptimizerState::adam(cfg.learning_rate);
  Rng aug_rng(derive_seed(seed, 202));
  Rng pair_rng(derive_seed(seed, 303));
  Rng batch_rng(derive_seed(seed, 404));

  const Matrix& features = view.features;
  const Matrix x_p = features.gather_rows(idx_p);
  const Matrix x_u = features.gather_rows(idx_u);
  std::vector<double> noise_std;
  if (plan.use_simclr && contrastive_on) {
    noise_std = column_stddev(features);
    for (double& s : noise_std) s *= cfg.augment_noise_scale;
  }

  TrainResult out;
  out.history.reserve(cfg.epochs);

  // Computes the loss record and, when `rows` is the full batch, the
  // gradient step. Minibatch mode reuses the epsilon frozen here.
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const ForwardCache cache = forward(model, features);
    const Matrix& recon = cache.recon();
    const Matrix& z = cache.z();
    const Matrix recon_p = recon.gather_rows(idx_p);
    const Matrix recon_u = recon.gather_rows(idx_u);
    const RecSplit rec = loss_rec_split(x_p, recon_p, x_u, recon_u);

    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double w_u = 1.0, w_p = 1.0;
    if (plan.rebalanced) {
      if (plan.estimator_eps) {
        GroupBatch eps_batch;
        eps_batch.x_p = x_p;
        eps_batch.x_u = x_u;
        eps_batch.recon_p = recon_p;
        eps_batch.recon_u = recon_u;
        epsilon = epsilon_weight(eps_batch, cfg.estimator);
      } else {
        epsilon = proportion_eps;
      }
      w_u = 1.0 - epsilon;
      w_p = epsilon;
    }

    LossReport record;
    record.l_u = rec.l_u;
    record.l_p = rec.l_p;
    record.epsilon = epsilon;
    record.alpha = cfg.alpha;
    record.l_rec = plan.rebalanced ? (w_u * rec.l_u + w_p * rec.l_p)
                                   : (rec.l_u + rec.l_p);

    // Contrastive term and its gradient w.r.t. z (and the augmented z).
    Matrix d_z;
    Matrix d_z_pos;
    std::optional<ForwardCache> aug_cache;
    double creg = 0.0;
    if (contrastive_on) {
      d_z = Matrix(total, z.cols());
      if (plan.use_simclr) {
        std::vector<std::size_t> all_rows(total);
        std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
        const std::vector<std::size_t> rows =
            subsample(all_rows, cfg.pair_subsample_threshold, pair_rng);
        Matrix augmented = features.gather_rows(rows);
        for (std::size_t i = 0; i < augmented.rows(); ++i) {
          auto row = augmented.row(i);
          for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] += noise_std[j] * aug_rng.normal();
          }
        }
        aug_cache = forward(model, augmented);
        const SimclrGradients sg =
            loss_simclr_with_grad(z.gather_rows(rows), aug_cache->z());
        creg = sg.value;
        record.l_fac = sg.value;
        scatter_rows(d_z, rows, sg.d_z, cfg.alpha);
        d_z_pos = sg.d_z_pos;
        d_z_pos *= cfg.alpha;
      } else {
        const std::vector<std::size_t> sub_p =
            subsample(idx_p, cfg.pair_subsample_threshold, pair_rng);
        const std::vector<std::size_t> sub_u =
            subsample(idx_u, cfg.pair_subsample_threshold, pair_rng);
        const Matrix z_p = z.gather_rows(sub_p);
        const Matrix z_u = z.gather_rows(sub_u);
        const FacGradients fg = loss_fac_with_grad(z_p, z_u);
        record.l_fair = fg.terms.l_fair;
        record.l_unif = fg.terms.l_unif;
        if (plan.use_fair) {
          creg += fg.terms.l_fair;
          scatter_rows(d_z, sub_p, fg.d_fair_z_p, cfg.alpha);
          scatter_rows(d_z, sub_u, fg.d_fair_z_u, cfg.alpha);
        }
        if (plan.use_unif) {
          creg += fg.terms.l_unif;
          scatter_rows(d_z, sub_p, fg.d_unif_z_p, cfg.alpha);
          scatter_rows(d_z, sub_u, fg.d_unif_z_u, cfg.alpha);
        }
        record.l_fac = creg;
      }
    }
    record.total = record.l_rec + cfg.alpha * creg;
    if (!std::isfinite(record.total)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    out.history.push_back(record);

    if (cfg.batch_size == 0 || cfg.batch_size >= total) {
      // Full-batch step from the cached forward pass.
      Matrix d_recon(total, dim);
      for (std::size_t i = 0; i < total; ++i) {
        const double w = view.groups[i] == Group::Protected ? w_p : w_u;
        auto dst = d_recon.row(i);
        auto x_row = features.row(i);
        auto r_row = recon.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
          dst[j] = 2.0 * w * (r_row[j] - x_row[j]);
        }
      }
      GradientSet grads = backward(model, cache, d_recon, d_z);
      if (aug_cache) {
        grads += backward(model, *aug_cache, Matrix(), d_z_pos);
      }
      apply_update(model, grads, opt);
    } else {
      // Minibatch steps with the epoch's frozen epsilon. Chunks missing a
      // group (or too small for pairwise terms) skip the contrastive part.
      std::vector<std::size_t> order(total);
      std::iota(order.begin(), order.end(), std::size_t{0});
      batch_rng.shuffle(order);
      for (std::size_t start = 0; start < total; start += cfg.batch_size) {
        const std::size_t stop = std::min(total, start + cfg.batch_size);
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(stop));
        std::sort(rows.begin(), rows.end());
        const Matrix chunk = features.gather_rows(rows);
        const ForwardCache chunk_cache = forward(model, chunk);
        const Matrix& chunk_recon = chunk_cache.recon();

        Matrix d_recon(rows.size(), dim);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double w = view.groups[rows[i]] == Group::Protected ? w_p : w_u;
          auto dst = d_recon.row(i);
          auto x_row = chunk.row(i);
          auto r_row = chunk_recon.row(i);
          for (std::size_t j = 0; j < dim; ++j) {
            dst[j] = 2.0 * w * (r_row[j] - x_row[j]);
          }
        }

        Matrix chunk_dz;
        Matrix chunk_dz_pos;
        std::optional<ForwardCache> chunk_aug;
        if (contrastive_on && plan.use_simclr && rows.size() >= 2) {
          Matrix augmented = chunk;
          for (std::size_t i = 0; i < augmented.rows(); ++i) {
            auto row = augmented.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
              row[j] += noise_std[j] * aug_rng.normal();
            }
          }
          chunk_aug = forward(model, augmented);
          const SimclrGradients sg =
              loss_simclr_with_grad(chunk_cache.z(), chunk_aug->z());
          chunk_dz = sg.d_z;
          chunk_dz *= cfg.alpha;
          chunk_dz_pos = sg.d_z_pos;
          chunk_dz_pos *= cfg.alpha;
        } else if (contrastive_on && !plan.use_simclr) {
          std::vector<std::size_t> local_p, local_u;
          for (std::size_t i = 0; i < rows.size(); ++i) {
            (view.groups[rows[i]] == Group::Protected ? local_p : local_u).push_back(i);
          }
          if (local_p.size() >= 2 && local_u.size() >= 2) {
            const Matrix z_p = chunk_cache.z().gather_rows(local_p);
            const Matrix z_u = chunk_cache.z().gather_rows(local_u);
            const FacGradients fg = loss_fac_with_grad(z_p, z_u);
            chunk_dz = Matrix(rows.size(), chunk_cache.z().cols());
            if (plan.use_fair) {
              scatter_rows(chunk_dz, local_p, fg.d_fair_z_p, cfg.alpha);
              scatter_rows(chunk_dz, local_u, fg.d_fair_z_u, cfg.alpha);
            }
            if (plan.use_unif) {
              scatter_rows(chunk_dz, local_p, fg.d_unif_z_p, cfg.alpha);
              scatter_rows(chunk_dz, local_u, fg.d_unif_z_u, cfg.alpha);
            }
          }
        }

        GradientSet grads = backward(model, chunk_cache, d_recon, chunk_dz);
        if (chunk_aug) {
          grads += backward(model, *chunk_aug, Matrix(), chunk_dz_pos);
        }
        apply_update(model, grads, opt);
      }
    }
  }
  out.model = std::move(model);
  return out;
}

GroupedDataset build_dataset(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  GroupedDataset ds = [&]() {
    if (cfg.dataset.csv_path) {
      return load_csv(*cfg.dataset.csv_path, cfg.dataset.schema);
    }
    SyntheticSpec spec = *cfg.dataset.synthetic;
    spec.seed = derive_seed(spec.seed, run_seed);
    return generate_synthetic(spec);
  }();
  if (cfg.ratio) {
    ds = resample_ratio(ds, cfg.ratio->first, cfg.ratio->second,
                        derive_seed(run_seed, 7));
  }
  return ds;
}

namespace {

std::vector<std::size_t> resolve_k_values(const ExperimentConfig& cfg,
                                          const GroupedDataset::EvaluationView& eval) {
  std::vector<std::size_t> ks = cfg.k_values;
  if (ks.empty()) ks.push_back(eval.anomaly_count());
  for (std::size_t k : ks) {
    if (k > eval.size()) {
      throw ConfigError("config: k=" + std::to_string(k) + " exceeds dataset size " +
                        std::to_string(eval.size()));
    }
  }
  return ks;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.config = cfg;
  const auto t_start = std::chrono::steady_clock::now();
  for (std::uint64_t seed : cfg.seeds) {
    const GroupedDataset raw = build_dataset(cfg, seed);
    const GroupedDataset ds = cfg.standardize_features ? standardize(raw) : raw;
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult trained = train_variant(ds.training_view(), cfg, seed);
    const std::vector<double> scores = anomaly_scores(trained.model, ds.features());
    const auto eval = ds.evaluation_view();
    SeedRunResult run;
    run.seed = seed;
    run.epochs = trained.history;
    for (std::size_t k : resolve_k_values(cfg, eval)) {
      run.metrics.push_back(group_metrics(scores, eval.labels, eval.groups, k));
    }
    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.runs.push_back(std::move(run));
  }

  const std::size_t k_count = report.runs.front().metrics.size();
  for (std::size_t ki = 0; ki < k_count; ++ki) {
    std::vector<double> recall, auc, rec_diff, acc_diff;
    for (const auto& run : report.runs) {
      recall.push_back(run.metrics[ki].recall_at_k);
      auc.push_back(run.metrics[ki].rocauc);
      rec_diff.push_back(run.metrics[ki].rec_diff);
      acc_diff.push_back(run.metrics[ki].acc_diff);
    }
    AggregateRow row;
    row.k = report.runs.front().metrics[ki].k;
    row.recall_at_k_mean = mean_of(recall);
    row.recall_at_k_std = sample_std(recall, row.recall_at_k_mean);
    row.rocauc_mean = mean_of(auc);
    row.rocauc_std = sample_std(auc, row.rocauc_mean);
    row.rec_diff_mean = mean_of(rec_diff);
    row.rec_diff_std = sample_std(rec_diff, row.rec_diff_mean);
    row.acc_diff_mean = mean_of(acc_diff);
    row.acc_diff_std = sample_std(acc_diff, row.acc_diff_mean);
    report.aggregates.push_back(row);
  }
  report.total_wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

std::vector<RunReport> run_ratio_study(
    const ExperimentConfig& base,
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& ratios) {
  if (ratios.empty()) throw ConfigError("ratio study needs at least one ratio");
  std::vector<RunReport> reports;
  for (const auto& ratio : ratios) {
    ExperimentConfig cfg = base;
    cfg.ratio = ratio;
    reports.push_back(run_experiment(cfg));
  }
  return reports;
}

TheoryAuditReport run_theory_audit(const ExperimentConfig& cfg,
                                   const AuditConfig& audit_cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.seeds.front();
  const GroupedDataset raw = build_dataset(cfg, seed);
  const GroupedDataset ds = cfg.standardize_features ? standardize(raw) : raw;
  const TrainResult trained = train_variant(ds.training_view(), cfg, seed);
  const std::vector<double> scores = anomaly_scores(trained.model, ds.features());
  const auto eval = ds.evaluation_view();
  const std::size_t k = resolve_k_values(cfg, eval).front();

  TheoryAuditReport out;
  out.variant = variant_name(cfg.variant);
  out.seed = seed;
  out.audit = fairness_bound_audit(scores, eval.labels, eval.groups, k, audit_cfg);

  const ForwardCache cache = forward(trained.model, ds.features());
  std::vector<std::size_t> idx_p, idx_u;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds.groups()[i] == Group::Protected ? idx_p : idx_u).push_back(i);
  }
  out.tv_bound = tv_bound_check(cache.z().gather_rows(idx_p),
                                cache.z().gather_rows(idx_u));
  return out;
}

// ---------------------------------------------------------------------------
// Config file handling
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::stringstream ss(s);
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& value, Parse parse) {
  std::vector<T> out;
  for (const std::string& p : split(value, ',')) {
    const std::string item = strip(p);
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

std::vector<double> parse_vector_or_broadcast(const std::string& value) {
  return parse_list<double>(value, [](const std::string& s) { return std::stod(s); });
}

SyntheticSpec& synthetic_of(ExperimentConfig& cfg) {
  if (!cfg.dataset.synthetic) cfg.dataset.synthetic.emplace();
  return *cfg.dataset.synthetic;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

}  // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& raw_key,
                        const std::string& raw_value) {
  const std::string key = strip(raw_key);
  const std::string value = strip(raw_value);
  try {
    if (key == "dataset.path") {
      cfg.dataset.csv_path = value;
    } else if (key == "dataset.group_column") {
      cfg.dataset.schema.group_column = value;
    } else if (key == "dataset.label_column") {
      cfg.dataset.schema.label_column = value;
    } else if (key == "dataset.positive_group_value") {
      cfg.dataset.schema.positive_group_value = value;
    } else if (key == "dataset.positive_label_value") {
      cfg.dataset.schema.positive_label_value = value;
    } else if (key == "synthetic.dim") {
      synthetic_of(cfg).dim = std::stoul(value);
    } else if (key == "synthetic.protected_count") {
      synthetic_of(cfg).protected_count = std::stoul(value);
    } else if (key == "synthetic.unprotected_count") {
      synthetic_of(cfg).unprotected_count = std::stoul(value);
    } else if (key == "synthetic.anomaly_rate_p") {
      synthetic_of(cfg).anomaly_rate_p = std::stod(value);
    } else if (key == "synthetic.anomaly_rate_u") {
      synthetic_of(cfg).anomaly_rate_u = std::stod(value);
    } else if (key == "synthetic.group_shift") {
      synthetic_of(cfg).group_shift = parse_vector_or_broadcast(value);
    } else if (key == "synthetic.anomaly_shift") {
      synthetic_of(cfg).anomaly_shift = parse_vector_or_broadcast(value);
    } else if (key == "synthetic.noise_std") {
      synthetic_of(cfg).noise_std = std::stod(value);
    } else if (key == "synthetic.seed") {
      synthetic_of(cfg).seed = std::stoull(value);
    } else if (key == "hidden_widths") {
      cfg.hidden_widths = parse_list<std::size_t>(
          value, [](const std::string& s) { return std::stoul(s); });
    } else if (key == "activation") {
      cfg.hidden_activation = activation_from_name(value);
    } else if (key == "optimizer") {
      cfg.optimizer = opt_method_from_name(value);
    } else if (key == "learning_rate") {
      cfg.learning_rate = std::stod(value);
    } else if (key == "epochs") {
      cfg.epochs = std::stoul(value);
    } else if (key == "alpha") {
      cfg.alpha = std::stod(value);
    } else if (key == "estimator") {
      cfg.estimator = epsilon_estimator_from_name(value);
    } else if (key == "variant") {
      cfg.variant = variant_from_name(value);
    } else if (key == "k") {
      cfg.k_values = parse_list<std::size_t>(
          value, [](const std::string& s) { return std::stoul(s); });
    } else if (key == "seeds") {
      cfg.seeds = parse_list<std::uint64_t>(
          value, [](const std::string& s) { return std::stoull(s); });
    } else if (key == "batch_size") {
      cfg.batch_size = std::stoul(value);
    } else if (key == "pair_subsample_threshold") {
      cfg.pair_subsample_threshold = std::stoul(value);
    } else if (key == "augment_noise_scale") {
      cfg.augment_noise_scale = std::stod(value);
    } else if (key == "standardize") {
      cfg.standardize_features = parse_bool(value);
    } else if (key == "ratio") {
      const auto parts = split(value, ':');
      if (parts.size() != 2) throw ConfigError("ratio must look like 4:1");
      cfg.ratio = std::make_pair(std::stoull(strip(parts[0])),
                                 std::stoull(strip(parts[1])));
    } else if (key == "output") {
      cfg.output_path = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const LookupError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = strip(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not 'key = value'");
    }
    apply_config_entry(cfg, stripped.substr(0, eq), stripped.substr(eq + 1));
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

json to_json(const LossReport& r) {
  json j;
  j["l_u"] = r.l_u;
  j["l_p"] = r.l_p;
  if (std::isfinite(r.epsilon)) {
    j["epsilon"] = r.epsilon;
  } else {
    j["epsilon"] = nullptr;
  }
  j["l_fair"] = r.l_fair;
  j["l_unif"] = r.l_unif;
  j["l_fac"] = r.l_fac;
  j["l_rec"] = r.l_rec;
  j["alpha"] = r.alpha;
  j["total"] = r.total;
  return j;
}

json to_json(const MetricsReport& r) {
  return json{{"k", r.k},
              {"recall_at_k", r.recall_at_k},
              {"rocauc", r.rocauc},
              {"rec_diff", r.rec_diff},
              {"acc_diff", r.acc_diff},
              {"recall_protected", r.recall_protected},
              {"recall_unprotected", r.recall_unprotected},
              {"accuracy_protected", r.accuracy_protected},
              {"accuracy_unprotected", r.accuracy_unprotected},
              {"identified_protected", r.identified_protected},
              {"identified_unprotected", r.identified_unprotected},
              {"true_identified_protected", r.true_identified_protected},
              {"true_identified_unprotected", r.true_identified_unprotected},
              {"anomalies_protected", r.anomalies_protected},
              {"anomalies_unprotected", r.anomalies_unprotected}};
}

json to_json(const FairnessAuditReport& r) {
  return json{{"m", r.m},
              {"n", r.n},
              {"k", r.k},
              {"threshold", r.threshold},
              {"risk_protected", r.risk_protected},
              {"risk_unprotected", r.risk_unprotected},
              {"risk_difference", r.risk_difference},
              {"tv_u_p", r.tv_u_p},
              {"joint_risk_unprotected", r.joint_risk_unprotected},
              {"joint_risk_protected", r.joint_risk_protected},
              {"rademacher_unprotected", r.rademacher_unprotected},
              {"rademacher_unprotected_stderr", r.rademacher_unprotected_stderr},
              {"rademacher_protected", r.rademacher_protected},
              {"rademacher_protected_stderr", r.rademacher_protected_stderr},
              {"lipschitz", r.lipschitz},
              {"confidence_delta", r.confidence_delta},
              {"confidence_term_unprotected", r.confidence_term_unprotected},
              {"confidence_term_protected", r.confidence_term_protected},
              {"df_lower_bound", r.df_lower_bound},
              {"rhs_total", r.rhs_total},
              {"holds", r.holds}};
}

json to_json(const TvBoundReport& r) {
  return json{{"tv_hat", r.tv_hat},
              {"delta", r.delta},
              {"sigma", r.sigma},
              {"c_u", r.c_u},
              {"c_p", r.c_p},
              {"cardinality", r.cardinality},
              {"bound_rhs", r.bound_rhs},
              {"surrogate_fair", r.surrogate_fair},
              {"surrogate_unif", r.surrogate_unif},
              {"bandwidth_u", r.bandwidth_u},
              {"bandwidth_p", r.bandwidth_p},
              {"argmin_index", r.argmin_index},
              {"holds", r.holds}};
}

json to_json(const ExperimentConfig& c) {
  json dataset;
  if (c.dataset.csv_path) {
    dataset = json{{"type", "csv"},
                   {"path", *c.dataset.csv_path},
                   {"group_column", c.dataset.schema.group_column},
                   {"label_column", c.dataset.schema.label_column},
                   {"positive_group_value", c.dataset.schema.positive_group_value},
                   {"positive_label_value", c.dataset.schema.positive_label_value}};
  } else if (c.dataset.synthetic) {
    const SyntheticSpec& s = *c.dataset.synthetic;
    dataset = json{{"type", "synthetic"},
                   {"dim", s.dim},
                   {"protected_count", s.protected_count},
                   {"unprotected_count", s.unprotected_count},
                   {"anomaly_rate_p", s.anomaly_rate_p},
                   {"anomaly_rate_u", s.anomaly_rate_u},
                   {"group_shift", s.group_shift},
                   {"anomaly_shift", s.anomaly_shift},
                   {"noise_std", s.noise_std},
                   {"seed", s.seed}};
  }
  json j{{"dataset", dataset},
         {"hidden_widths", c.hidden_widths},
         {"activation", activation_name(c.hidden_activation)},
         {"optimizer", opt_method_name(c.optimizer)},
         {"learning_rate", c.learning_rate},
         {"epochs", c.epochs},
         {"alpha", c.alpha},
         {"estimator", epsilon_estimator_name(c.estimator)},
         {"variant", variant_name(c.variant)},
         {"k_values", c.k_values},
         {"seeds", c.seeds},
         {"batch_size", c.batch_size},
         {"pair_subsample_threshold", c.pair_subsample_threshold},
         {"augment_noise_scale", c.augment_noise_scale},
         {"standardize", c.standardize_features}};
  if (c.ratio) {
    j["ratio"] = json::array({c.ratio->first, c.ratio->second});
  } else {
    j["ratio"] = nullptr;
  }
  return j;
}

json to_json(const RunReport& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    json epochs = json::array();
    for (const auto& e : run.epochs) epochs.push_back(to_json(e));
    json metrics = json::array();
    for (const auto& m : run.metrics) metrics.push_back(to_json(m));
    runs.push_back(json{{"seed", run.seed},
                        {"wall_seconds", run.wall_seconds},
                        {"epochs", epochs},
                        {"metrics", metrics}});
  }
  json aggregates = json::array();
  for (const auto& a : r.aggregates) {
    aggregates.push_back(json{{"k", a.k},
                              {"recall_at_k_mean", a.recall_at_k_mean},
                              {"recall_at_k_std", a.recall_at_k_std},
                              {"rocauc_mean", a.rocauc_mean},
                              {"rocauc_std", a.rocauc_std},
                              {"rec_diff_mean", a.rec_diff_mean},
                              {"rec_diff_std", a.rec_diff_std},
                              {"acc_diff_mean", a.acc_diff_mean},
                              {"acc_diff_std", a.acc_diff_std}});
  }
  return json{{"config", to_json(r.config)},
              {"runs", runs},
              {"aggregates", aggregates},
              {"total_wall_seconds", r.total_wall_seconds}};
}

json to_json(const TheoryAuditReport& r) {
  return json{{"variant", r.variant},
              {"seed", r.seed},
              {"fairness_bound", to_json(r.audit)},
              {"tv_bound", to_json(r.tv_bound)}};
}

std::string run_report_csv(const RunReport& r) {
  std::ostringstream out;
  out << "seed,k,recall_at_k,rocauc,rec_diff,acc_diff\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& run : r.runs) {
    for (const auto& m : run.metrics) {
      out << run.seed << "," << m.k << "," << fmt(m.recall_at_k) << ","
          << fmt(m.rocauc) << "," << fmt(m.rec_diff) << "," << fmt(m.acc_diff) << "\n";
    }
  }
  for (const auto& a : r.aggregates) {
    out << "mean," << a.k << "," << fmt(a.recall_at_k_mean) << "," << fmt(a.rocauc_mean)
        << "," << fmt(a.rec_diff_mean) << "," << fmt(a.acc_diff_mean) << "\n";
    out << "std," << a.k << "," << fmt(a.recall_at_k_std) << "," << fmt(a.rocauc_std)
        << "," << fmt(a.rec_diff_std) << "," << fmt(a.acc_diff_std) << "\n";
  }
  return out.str();
}

json without_timing(json j) {
  if (j.is_object()) {
    j.erase("wall_seconds");
    j.erase("total_wall_seconds");
    for (auto& [key, value] : j.items()) value = without_timing(value);
  } else if (j.is_array()) {
    for (auto& value : j) value = without_timing(value);
  }
  return j;
}

}  // namespace fairad
