// fairad: fairness-aware anomaly detection experiments.
//
// Subcommands: train, evaluate, ratio-study, ablation, theory-audit,
// gen-synthetic. Configuration comes from an optional flat key-value file
// plus flags; flags win. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fairad/report.hpp"
#include "fairad/trainer.hpp"

using namespace fairad;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs collected from flags
};

void add_override(CommonFlags& flags, const std::string& key, const std::string& value) {
  flags.overrides.push_back(key + "=" + value);
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = parse_config_file(flags.config_path);
  for (const std::string& entry : flags.overrides) {
    const auto eq = entry.find('=');
    apply_config_entry(cfg, entry.substr(0, eq), entry.substr(eq + 1));
  }
  return cfg;
}

void attach_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key-value config file");
  auto forward = [&flags](const std::string& key) {
    return [&flags, key](const std::string& value) { add_override(flags, key, value); };
  };
  cmd->add_option_function<std::string>("--dataset", forward("dataset.path"),
                                        "CSV dataset path");
  cmd->add_option_function<std::string>("--group-col", forward("dataset.group_column"),
                                        "group column name");
  cmd->add_option_function<std::string>("--label-col", forward("dataset.label_column"),
                                        "label column name");
  cmd->add_option_function<std::string>("--positive-group",
                                        forward("dataset.positive_group_value"),
                                        "cell value marking the protected group");
  cmd->add_option_function<std::string>("--positive-label",
                                        forward("dataset.positive_label_value"),
                                        "cell value marking anomalies");
  cmd->add_option_function<std::string>("--seed", forward("seeds"),
                                        "comma-separated seed list");
  cmd->add_option_function<std::string>("--k", forward("k"),
                                        "comma-separated top-k list");
  cmd->add_option_function<std::string>("--alpha", forward("alpha"),
                                        "contrastive weight");
  cmd->add_option_function<std::string>("--variant", forward("variant"),
                                        "fairad|fairad-r|fairad-n|fairad-d|fairad-c|plain-ae");
  cmd->add_option_function<std::string>("--epochs", forward("epochs"), "epoch count");
  cmd->add_option_function<std::string>("--lr", forward("learning_rate"),
                                        "learning rate");
  cmd->add_option_function<std::string>("--hidden", forward("hidden_widths"),
                                        "comma-separated hidden widths");
  cmd->add_option_function<std::string>("--estimator", forward("estimator"),
                                        "epsilon estimator loss1..loss4");
  cmd->add_option_function<std::string>("--ratio", forward("ratio"),
                                        "|U|:|P| resample ratio, e.g. 4:1");
  cmd->add_option_function<std::string>("--out", forward("output"),
                                        "output report path (JSON)");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << text;
}

std::string sibling_csv_path(const std::string& json_path) {
  std::filesystem::path p(json_path);
  p.replace_extension(".csv");
  return p.string();
}

void emit_run_report(const RunReport& report, const std::string& out_path) {
  const json j = to_json(report);
  if (!out_path.empty()) {
    write_text(out_path, j.dump(2) + "\n");
    write_text(sibling_csv_path(out_path), run_report_csv(report));
    std::cout << "report written to " << out_path << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  std::cout << run_report_csv(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FairAD: fairness-aware anomaly detection on imbalanced tabular data"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string train_save_model;
  auto* train_cmd = app.add_subcommand("train", "train one variant and evaluate it");
  attach_common_flags(train_cmd, train_flags);
  train_cmd->add_option("--save-model", train_save_model, "checkpoint path");

  CommonFlags eval_flags;
  std::string eval_model;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a dataset with a checkpoint");
  attach_common_flags(eval_cmd, eval_flags);
  eval_cmd->add_option("--model", eval_model, "model checkpoint path")->required();

  CommonFlags ratio_flags;
  std::vector<std::string> ratio_list;
  auto* ratio_cmd = app.add_subcommand("ratio-study", "repeat a run across group ratios");
  attach_common_flags(ratio_cmd, ratio_flags);
  ratio_cmd->add_option("--ratios", ratio_list,
                        "ratios to sweep, e.g. --ratios 1:1 2:1 4:1");

  CommonFlags ablation_flags;
  auto* ablation_cmd =
      app.add_subcommand("ablation", "run every variant under one config");
  attach_common_flags(ablation_cmd, ablation_flags);

  CommonFlags audit_flags;
  double audit_delta = 0.05;
  std::size_t audit_grid = 32;
  std::size_t audit_trials = 10000;
  auto* audit_cmd =
      app.add_subcommand("theory-audit", "audit the fairness bound empirically");
  attach_common_flags(audit_cmd, audit_flags);
  audit_cmd->add_option("--confidence-delta", audit_delta, "delta in (0,1)");
  audit_cmd->add_option("--threshold-grid", audit_grid, "hypothesis grid size");
  audit_cmd->add_option("--rademacher-trials", audit_trials, "Monte Carlo trials");

  CommonFlags gen_flags;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic dataset CSV");
  attach_common_flags(gen_cmd, gen_flags);
  std::string gen_out;
  gen_cmd->add_option("--csv-out", gen_out, "output CSV path")->required();
  for (const char* opt : {"synthetic.dim", "synthetic.protected_count",
                          "synthetic.unprotected_count", "synthetic.anomaly_rate_p",
                          "synthetic.anomaly_rate_u", "synthetic.group_shift",
                          "synthetic.anomaly_shift", "synthetic.noise_std",
                          "synthetic.seed"}) {
    const std::string key = opt;
    std::string flag = "--" + key.substr(key.find('.') + 1);
    for (auto& c : flag) {
      if (c == '_') c = '-';
    }
    gen_cmd->add_option_function<std::string>(
        flag, [&gen_flags, key](const std::string& v) { add_override(gen_flags, key, v); },
        key);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(train_flags);
      cfg.validate();
      const RunReport report = run_experiment(cfg);
      emit_run_report(report, cfg.output_path);
      if (!train_save_model.empty()) {
        const GroupedDataset raw = build_dataset(cfg, cfg.seeds.front());
        const GroupedDataset ds = cfg.standardize_features ? standardize(raw) : raw;
        const TrainResult trained =
            train_variant(ds.training_view(), cfg, cfg.seeds.front());
        save_model(trained.model, train_save_model);
        std::cout << "model written to " << train_save_model << "\n";
      }
    } else if (eval_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(eval_flags);
      if (!cfg.dataset.csv_path) {
        throw ConfigError("evaluate needs --dataset (a CSV file)");
      }
      const AutoencoderModel model = load_model(eval_model);
      GroupedDataset ds = load_csv(*cfg.dataset.csv_path, cfg.dataset.schema);
      if (cfg.standardize_features) ds = standardize(ds);
      const std::vector<double> scores = anomaly_scores(model, ds.features());
      const auto eval = ds.evaluation_view();
      std::vector<std::size_t> ks = cfg.k_values;
      if (ks.empty()) ks.push_back(eval.anomaly_count());
      json out = json::array();
      for (std::size_t k : ks) {
        out.push_back(to_json(group_metrics(scores, eval.labels, eval.groups, k)));
      }
      if (!cfg.output_path.empty()) {
        write_text(cfg.output_path, out.dump(2) + "\n");
      }
      std::cout << out.dump(2) << "\n";
    } else if (ratio_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(ratio_flags);
      std::vector<std::pair<std::uint64_t, std::uint64_t>> ratios;
      for (const std::string& r : ratio_list) {
        ExperimentConfig probe;
        probe.dataset.synthetic.emplace();  // reuse the ratio parser
        apply_config_entry(probe, "ratio", r);
        ratios.push_back(*probe.ratio);
      }
      if (ratios.empty() && cfg.ratio) ratios.push_back(*cfg.ratio);
      cfg.ratio.reset();
      cfg.validate();
      const std::vector<RunReport> reports = run_ratio_study(cfg, ratios);
      json out = json::array();
      for (const auto& r : reports) out.push_back(to_json(r));
      if (!cfg.output_path.empty()) write_text(cfg.output_path, out.dump(2) + "\n");
      std::cout << "ratio,k,recall_at_k_mean,rocauc_mean,rec_diff_mean\n";
      for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const auto& agg : reports[i].aggregates) {
          std::cout << ratios[i].first << ":" << ratios[i].second << "," << agg.k << ","
                    << agg.recall_at_k_mean << "," << agg.rocauc_mean << ","
                    << agg.rec_diff_mean << "\n";
        }
      }
    } else if (ablation_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(ablation_flags);
      cfg.validate();
      json out = json::object();
      std::cout << "variant,k,recall_at_k_mean,rocauc_mean,rec_diff_mean\n";
      for (Variant v : {Variant::FairAD, Variant::FairAD_R, Variant::FairAD_N,
                        Variant::FairAD_D, Variant::FairAD_C, Variant::PlainAE}) {
        ExperimentConfig variant_cfg = cfg;
        variant_cfg.variant = v;
        const RunReport report = run_experiment(variant_cfg);
        out[variant_name(v)] = to_json(report);
        for (const auto& agg : report.aggregates) {
          std::cout << variant_name(v) << "," << agg.k << "," << agg.recall_at_k_mean
                    << "," << agg.rocauc_mean << "," << agg.rec_diff_mean << "\n";
        }
      }
      if (!cfg.output_path.empty()) write_text(cfg.output_path, out.dump(2) + "\n");
    } else if (audit_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(audit_flags);
      cfg.validate();
      AuditConfig audit;
      audit.confidence_delta = audit_delta;
      audit.threshold_grid = audit_grid;
      audit.rademacher_trials = audit_trials;
      audit.seed = cfg.seeds.front();
      const TheoryAuditReport rep = run_theory_audit(cfg, audit);
      const json j = to_json(rep);
      if (!cfg.output_path.empty()) write_text(cfg.output_path, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
    } else if (gen_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(gen_flags);
      if (!cfg.dataset.synthetic) {
        throw ConfigError("gen-synthetic needs synthetic.* settings");
      }
      const GroupedDataset ds = generate_synthetic(*cfg.dataset.synthetic);
      save_csv(ds, gen_out);
      std::cout << "wrote " << ds.size() << " rows (" << ds.unprotected_count()
                << " U, " << ds.protected_count() << " P) to " << gen_out << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const LookupError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const DegenerateVectorError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
