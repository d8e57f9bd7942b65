// Python bindings for the core operations: losses, metrics, data
// generation, training and the theory checks. Matrices cross the boundary
// as 2-D float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fairad/report.hpp"
#include "fairad/trainer.hpp"

namespace py = pybind11;
using namespace fairad;

namespace {

Matrix matrix_from_array(const py::array_t<double, py::array::c_style |
                                                       py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ShapeError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(arr.shape(0));
  const auto cols = static_cast<std::size_t>(arr.shape(1));
  std::vector<double> data(arr.data(), arr.data() + rows * cols);
  return Matrix(rows, cols, std::move(data));
}

py::array_t<double> array_from_matrix(const Matrix& m) {
  py::array_t<double> arr({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), arr.mutable_data());
  return arr;
}

std::vector<Label> labels_from(const std::vector<int>& v) {
  std::vector<Label> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] ? Label::Anomaly : Label::Normal;
  }
  return out;
}

std::vector<Group> groups_from(const std::vector<int>& v) {
  std::vector<Group> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] ? Group::Protected : Group::Unprotected;
  }
  return out;
}

py::object json_to_py(const nlohmann::json& j) {
  namespace nl = nlohmann;
  switch (j.type()) {
    case nl::json::value_t::null: return py::none();
    case nl::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nl::json::value_t::number_integer: return py::int_(j.get<long long>());
    case nl::json::value_t::number_unsigned:
      return py::int_(j.get<unsigned long long>());
    case nl::json::value_t::number_float: return py::float_(j.get<double>());
    case nl::json::value_t::string: return py::str(j.get<std::string>());
    case nl::json::value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(json_to_py(item));
      return out;
    }
    case nl::json::value_t::object: {
      py::dict out;
      for (const auto& [key, value] : j.items()) {
        out[py::str(key)] = json_to_py(value);
      }
      return out;
    }
    default: return py::none();
  }
}

ExperimentConfig config_from_entries(const py::dict& entries) {
  ExperimentConfig cfg;
  for (const auto& item : entries) {
    apply_config_entry(cfg, py::str(item.first), py::str(item.second));
  }
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_fairad, m) {
  m.doc() = "Fairness-aware anomaly detection: losses, metrics and experiments";

  py::register_exception<Error>(m, "FairadError");

  py::class_<AutoencoderModel>(m, "AutoencoderModel")
      .def_property_readonly("input_dim",
                             [](const AutoencoderModel& mdl) { return mdl.input_dim; })
      .def_property_readonly("hidden_dim",
                             [](const AutoencoderModel& mdl) { return mdl.hidden_dim; })
      .def("save", &save_model, py::arg("path"))
      .def("__eq__", [](const AutoencoderModel& a, const AutoencoderModel& b) {
        return a == b;
      });

  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "make_autoencoder",
      [](std::size_t input_dim, const std::vector<std::size_t>& hidden,
         std::uint64_t seed) { return make_autoencoder(input_dim, hidden, seed); },
      py::arg("input_dim"), py::arg("hidden_widths"), py::arg("seed"));

  m.def(
      "cosine_sim_exp",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine_sim_exp(a, b);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "loss_fac",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z_p,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& z_u) {
        const FacTerms t = loss_fac(matrix_from_array(z_p), matrix_from_array(z_u));
        py::dict out;
        out["l_fair"] = t.l_fair;
        out["l_unif"] = t.l_unif;
        out["l_fac"] = t.l_fac;
        return out;
      },
      py::arg("z_p"), py::arg("z_u"));

  m.def(
      "loss_simclr",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& z_pos) {
        return loss_simclr(matrix_from_array(z), matrix_from_array(z_pos));
      },
      py::arg("z"), py::arg("z_pos"));

  m.def(
      "epsilon_weight",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x_p,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& recon_p,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x_u,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& recon_u,
         const std::string& estimator) {
        GroupBatch batch;
        batch.x_p = matrix_from_array(x_p);
        batch.recon_p = matrix_from_array(recon_p);
        batch.x_u = matrix_from_array(x_u);
        batch.recon_u = matrix_from_array(recon_u);
        return epsilon_weight(batch, epsilon_estimator_from_name(estimator));
      },
      py::arg("x_p"), py::arg("recon_p"), py::arg("x_u"), py::arg("recon_u"),
      py::arg("estimator") = "loss1");

  m.def(
      "anomaly_scores",
      [](const AutoencoderModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return anomaly_scores(model, matrix_from_array(x));
      },
      py::arg("model"), py::arg("features"));

  m.def(
      "recall_at_k",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         std::size_t k) { return recall_at_k(scores, labels_from(labels), k); },
      py::arg("scores"), py::arg("labels"), py::arg("k"));

  m.def(
      "rocauc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return rocauc(scores, labels_from(labels));
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "group_metrics",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::vector<int>& groups, std::size_t k) {
        return json_to_py(
            to_json(group_metrics(scores, labels_from(labels), groups_from(groups), k)));
      },
      py::arg("scores"), py::arg("labels"), py::arg("groups"), py::arg("k"));

  m.def(
      "generate_synthetic",
      [](std::size_t dim, std::size_t protected_count, std::size_t unprotected_count,
         double anomaly_rate_p, double anomaly_rate_u,
         const std::vector<double>& group_shift,
         const std::vector<double>& anomaly_shift, double noise_std,
         std::uint64_t seed) {
        SyntheticSpec spec;
        spec.dim = dim;
        spec.protected_count = protected_count;
        spec.unprotected_count = unprotected_count;
        spec.anomaly_rate_p = anomaly_rate_p;
        spec.anomaly_rate_u = anomaly_rate_u;
        spec.group_shift = group_shift;
        spec.anomaly_shift = anomaly_shift;
        spec.noise_std = noise_std;
        spec.seed = seed;
        const GroupedDataset ds = generate_synthetic(spec);
        std::vector<int> groups(ds.size()), labels(ds.size());
        const auto eval = ds.evaluation_view();
        for (std::size_t i = 0; i < ds.size(); ++i) {
          groups[i] = eval.groups[i] == Group::Protected ? 1 : 0;
          labels[i] = eval.labels[i] == Label::Anomaly ? 1 : 0;
        }
        return py::make_tuple(array_from_matrix(ds.features()), groups, labels);
      },
      py::arg("dim"), py::arg("protected_count"), py::arg("unprotected_count"),
      py::arg("anomaly_rate_p") = 0.1, py::arg("anomaly_rate_u") = 0.1,
      py::arg("group_shift") = std::vector<double>{},
      py::arg("anomaly_shift") = std::vector<double>{}, py::arg("noise_std") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "empirical_tv",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& q,
         double cell_width) {
        const Binning b = cell_width > 0 ? Binning::grid(cell_width) : Binning::exact();
        return empirical_tv(matrix_from_array(p), matrix_from_array(q), b);
      },
      py::arg("p_samples"), py::arg("q_samples"), py::arg("cell_width") = 0.0);

  m.def(
      "surrogate_losses",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z_p,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& z_u) {
        const SurrogateLosses s =
            surrogate_losses(matrix_from_array(z_p), matrix_from_array(z_u));
        py::dict out;
        out["l_fair_prime"] = s.l_fair_prime;
        out["l_unif_prime"] = s.l_unif_prime;
        return out;
      },
      py::arg("z_p"), py::arg("z_u"));

  m.def(
      "tv_bound_check",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z_p,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& z_u) {
        return json_to_py(
            to_json(tv_bound_check(matrix_from_array(z_p), matrix_from_array(z_u))));
      },
      py::arg("z_p"), py::arg("z_u"));

  m.def(
      "empirical_rademacher",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values,
         std::size_t trials, std::uint64_t seed) {
        const RademacherEstimate est =
            empirical_rademacher(matrix_from_array(values), trials, seed);
        py::dict out;
        out["value"] = est.value;
        out["std_error"] = est.std_error;
        out["exhaustive"] = est.exhaustive;
        out["trials"] = est.trials;
        return out;
      },
      py::arg("function_values"), py::arg("trials") = 10000, py::arg("seed") = 0);

  m.def(
      "train_model",
      [](const py::dict& entries, std::uint64_t seed) {
        const ExperimentConfig cfg = config_from_entries(entries);
        const GroupedDataset raw = build_dataset(cfg, seed);
        const GroupedDataset ds = cfg.standardize_features ? standardize(raw) : raw;
        const TrainResult result = train_variant(ds.training_view(), cfg, seed);
        py::list history;
        for (const auto& rec : result.history) history.append(json_to_py(to_json(rec)));
        return py::make_tuple(result.model, history,
                              array_from_matrix(ds.features()));
      },
      py::arg("config"), py::arg("seed"));

  m.def(
      "run_experiment",
      [](const py::dict& entries) {
        return json_to_py(to_json(run_experiment(config_from_entries(entries))));
      },
      py::arg("config"));

  m.def(
      "run_theory_audit",
      [](const py::dict& entries, double confidence_delta, std::size_t threshold_grid,
         std::size_t trials) {
        AuditConfig audit;
        audit.confidence_delta = confidence_delta;
        audit.threshold_grid = threshold_grid;
        audit.rademacher_trials = trials;
        const ExperimentConfig cfg = config_from_entries(entries);
        audit.seed = cfg.seeds.front();
        return json_to_py(to_json(run_theory_audit(cfg, audit)));
      },
      py::arg("config"), py::arg("confidence_delta") = 0.05,
      py::arg("threshold_grid") = 32, py::arg("trials") = 10000);
}
